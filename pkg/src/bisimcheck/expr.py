"""Expression syntax: parsing, printing, variables, substitution, typing.

The expression language has an empty specification ``phi``, a join ``(+)``,
recursion binders ``mu x . e``, semilattice elements, and one constructor per
type former: ``l< >``/``r< >`` for product components, ``l[ ]``/``r[ ]``
for sum injections, ``a( )`` for function application at letter ``a``, and
``{ }`` for singleton sets.  An expression denotes a state once it is
closed, guarded and well-typed at the whole system type; ``check_expression``
certifies all three.
"""

import itertools
from dataclasses import dataclass

from .errors import AmbiguousIdentifier, IllTyped, NotClosed, NotGuarded, ParseError
from .functor import (
    Constant,
    Exponent,
    Identity,
    Ingredient,
    Powerset,
    Product,
    Sum,
    render_functor,
    root,
)
from .lexer import TokenStream, tokenize


class Expr:
    pass


@dataclass(frozen=True)
class Empty(Expr):
    pass


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class LatticeElem(Expr):
    element: str
    lattice: str


@dataclass(frozen=True)
class Plus(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mu(Expr):
    var: str
    body: Expr


@dataclass(frozen=True)
class LeftAngle(Expr):
    inner: Expr


@dataclass(frozen=True)
class RightAngle(Expr):
    inner: Expr


@dataclass(frozen=True)
class LeftBracket(Expr):
    inner: Expr


@dataclass(frozen=True)
class RightBracket(Expr):
    inner: Expr


@dataclass(frozen=True)
class Letter(Expr):
    letter: str
    inner: Expr


@dataclass(frozen=True)
class Singleton(Expr):
    inner: Expr


EMPTY = Empty()

_WRAPPERS = (LeftAngle, RightAngle, LeftBracket, RightBracket, Singleton)

_KEYWORDS = frozenset({"phi", "mu"})


@dataclass(frozen=True)
class TypedExpr:
    """An expression together with the ingredient it was certified at."""

    expr: Expr
    at: Ingredient


# -- parsing -----------------------------------------------------------------

def parse_expr_tokens(ts: TokenStream, env):
    left = _parse_atom(ts, env)
    while ts.at_sym("(+)"):
        ts.next()
        left = Plus(left, _parse_atom(ts, env))
    return left


def _parse_atom(ts, env):
    if ts.at_sym("("):
        ts.next()
        inner = parse_expr_tokens(ts, env)
        ts.expect_sym(")")
        return inner
    if ts.at_sym("{"):
        ts.next()
        inner = parse_expr_tokens(ts, env)
        ts.expect_sym("}")
        return Singleton(inner)
    if not ts.at_ident():
        ts.error("expected an expression")
    tok = ts.peek()
    name = tok.text
    if name == "phi":
        ts.next()
        return EMPTY
    if name == "mu":
        ts.next()
        var = ts.expect_ident("recursion variable")
        if var in _KEYWORDS:
            raise ParseError(f"{var!r} cannot be used as a variable", tok.line, tok.col)
        ts.expect_sym(".")
        return Mu(var, parse_expr_tokens(ts, env))
    follower = ts.peek(1)
    if name in ("l", "r") and follower.kind == "sym" and follower.text in ("<", "["):
        ts.next()
        close = ">" if follower.text == "<" else "]"
        ts.next()
        inner = parse_expr_tokens(ts, env)
        ts.expect_sym(close)
        if follower.text == "<":
            return LeftAngle(inner) if name == "l" else RightAngle(inner)
        return LeftBracket(inner) if name == "l" else RightBracket(inner)
    if follower.kind == "sym" and follower.text == "(" and env.is_letter(name):
        if env.element_owners(name):
            raise AmbiguousIdentifier(
                f"{name!r} is declared both as a semilattice element and as a letter"
            )
        ts.next()
        ts.next()
        inner = parse_expr_tokens(ts, env)
        ts.expect_sym(")")
        return Letter(name, inner)
    kind, lattice = env.classify_leaf(name)
    if kind == "element":
        ts.next()
        return LatticeElem(name, lattice.name)
    if env.is_letter(name):
        raise ParseError(f"letter {name!r} must be applied as {name}(...)", tok.line, tok.col)
    ts.next()
    return Var(name)


def parse_expr(text, env):
    ts = TokenStream(tokenize(text))
    e = parse_expr_tokens(ts, env)
    ts.expect_eof()
    return e


# -- printing ----------------------------------------------------------------

def render_expr(e):
    """Concrete syntax for ``e``; re-parsing yields the same tree."""
    if isinstance(e, Empty):
        return "phi"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, LatticeElem):
        return e.element
    if isinstance(e, Plus):
        left = render_expr(e.left)
        if isinstance(e.left, Mu):
            left = f"({left})"
        right = render_expr(e.right)
        if isinstance(e.right, Plus):
            right = f"({right})"
        return f"{left} (+) {right}"
    if isinstance(e, Mu):
        return f"mu {e.var} . {render_expr(e.body)}"
    if isinstance(e, LeftAngle):
        return f"l<{render_expr(e.inner)}>"
    if isinstance(e, RightAngle):
        return f"r<{render_expr(e.inner)}>"
    if isinstance(e, LeftBracket):
        return f"l[{render_expr(e.inner)}]"
    if isinstance(e, RightBracket):
        return f"r[{render_expr(e.inner)}]"
    if isinstance(e, Letter):
        return f"{e.letter}({render_expr(e.inner)})"
    if isinstance(e, Singleton):
        return f"{{{render_expr(e.inner)}}}"
    raise TypeError(f"not an expression: {e!r}")


# -- variables and substitution ------------------------------------------------

def free_vars(e):
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Plus):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Mu):
        return free_vars(e.body) - {e.var}
    if isinstance(e, _WRAPPERS) or isinstance(e, Letter):
        return free_vars(e.inner)
    return set()


def _fresh(base, avoid):
    for i in itertools.count(1):
        cand = f"{base}_{i}"
        if cand not in avoid:
            return cand


def substitute(e, x, v):
    """Capture-avoiding substitution of ``v`` for free occurrences of ``x``."""
    if isinstance(e, Var):
        return v if e.name == x else e
    if isinstance(e, Plus):
        return Plus(substitute(e.left, x, v), substitute(e.right, x, v))
    if isinstance(e, Mu):
        if e.var == x:
            return e
        if x not in free_vars(e.body):
            return e
        if e.var in free_vars(v):
            fresh = _fresh(e.var, free_vars(v) | free_vars(e.body) | {x})
            body = substitute(e.body, e.var, Var(fresh))
            return Mu(fresh, substitute(body, x, v))
        return Mu(e.var, substitute(e.body, x, v))
    if isinstance(e, Letter):
        return Letter(e.letter, substitute(e.inner, x, v))
    if isinstance(e, _WRAPPERS):
        return type(e)(substitute(e.inner, x, v))
    return e


# -- guardedness ---------------------------------------------------------------

def _exposed_free_var(e, bound):
    """A variable occurrence reachable through only joins and binders."""
    if isinstance(e, Var):
        return e if e.name not in bound else None
    if isinstance(e, Plus):
        return _exposed_free_var(e.left, bound) or _exposed_free_var(e.right, bound)
    if isinstance(e, Mu):
        return _exposed_free_var(e.body, bound | {e.var})
    return None


def _unguarded_mu(e):
    if isinstance(e, Mu):
        if _exposed_free_var(e.body, frozenset()) is not None:
            return e
        return _unguarded_mu(e.body)
    if isinstance(e, Plus):
        return _unguarded_mu(e.left) or _unguarded_mu(e.right)
    if isinstance(e, Letter) or isinstance(e, _WRAPPERS):
        return _unguarded_mu(e.inner)
    return None


def is_guarded(e):
    """True iff every recursion body keeps its variables beneath at least one
    non-join, non-binder constructor."""
    return _unguarded_mu(e) is None


# -- typing --------------------------------------------------------------------

def diagnose(e, at):
    """None if ``e`` types at ``at``, else the outermost failing subterm and
    the ingredient it was expected at."""
    part, whole = at.part, at.whole
    if isinstance(e, Empty):
        return None
    if isinstance(part, Identity) and part != whole:
        return diagnose(e, at.at(whole))
    if isinstance(e, Plus):
        return diagnose(e.left, at) or diagnose(e.right, at)
    if isinstance(e, Var):
        return None if part == whole else (e, at)
    if isinstance(e, Mu):
        return diagnose(e.body, at) if part == whole else (e, at)
    if isinstance(e, LatticeElem):
        ok = (
            isinstance(part, Constant)
            and part.lattice.name == e.lattice
            and e.element in part.lattice.elements
        )
        return None if ok else (e, at)
    if isinstance(e, LeftAngle):
        if isinstance(part, Product):
            return diagnose(e.inner, at.at(part.left))
        return (e, at)
    if isinstance(e, RightAngle):
        if isinstance(part, Product):
            return diagnose(e.inner, at.at(part.right))
        return (e, at)
    if isinstance(e, LeftBracket):
        if isinstance(part, Sum):
            return diagnose(e.inner, at.at(part.left))
        return (e, at)
    if isinstance(e, RightBracket):
        if isinstance(part, Sum):
            return diagnose(e.inner, at.at(part.right))
        return (e, at)
    if isinstance(e, Letter):
        if isinstance(part, Exponent) and e.letter in part.alphabet.letters:
            return diagnose(e.inner, at.at(part.base))
        return (e, at)
    if isinstance(e, Singleton):
        if isinstance(part, Powerset):
            return diagnose(e.inner, at.at(part.inner))
        return (e, at)
    raise TypeError(f"not an expression: {e!r}")


def typecheck(e, at):
    return diagnose(e, at) is None


def check_expression(e, g):
    """Certify that ``e`` is closed, guarded and well-typed for system type
    ``g``; returns the certified expression or raises."""
    fv = free_vars(e)
    if fv:
        raise NotClosed(fv)
    bad_mu = _unguarded_mu(e)
    if bad_mu is not None:
        raise NotGuarded(f"recursion body is not guarded in {render_expr(bad_mu)}")
    failure = diagnose(e, root(g))
    if failure is not None:
        sub, at = failure
        raise IllTyped(
            f"{render_expr(sub)} does not type at "
            f"{render_functor(at.part)} inside {render_functor(at.whole)}"
        )
    return TypedExpr(e, root(g))


# -- canonical comparison --------------------------------------------------------

_RANK = {
    Empty: 0,
    LatticeElem: 1,
    Var: 2,
    LeftAngle: 3,
    RightAngle: 4,
    LeftBracket: 5,
    RightBracket: 6,
    Letter: 7,
    Singleton: 8,
    Plus: 9,
    Mu: 10,
}


def canonical_key(e, _levels=None, _depth=0):
    """Total-order key on expressions, invariant under binder renaming."""
    levels = _levels or {}
    if isinstance(e, Empty):
        return (0,)
    if isinstance(e, LatticeElem):
        return (1, e.lattice, e.element)
    if isinstance(e, Var):
        if e.name in levels:
            return (2, "b", levels[e.name])
        return (2, "f", e.name)
    if isinstance(e, Plus):
        return (9, canonical_key(e.left, levels, _depth), canonical_key(e.right, levels, _depth))
    if isinstance(e, Mu):
        inner = canonical_key(e.body, {**levels, e.var: _depth}, _depth + 1)
        return (10, inner)
    if isinstance(e, Letter):
        return (7, e.letter, canonical_key(e.inner, levels, _depth))
    if isinstance(e, _WRAPPERS):
        return (_RANK[type(e)], canonical_key(e.inner, levels, _depth))
    raise TypeError(f"not an expression: {e!r}")


def alpha_equal(e1, e2):
    return canonical_key(e1) == canonical_key(e2)


def canonical_rename(e):
    """Rename binders to x0, x1, ... in depth-first encounter order."""
    counter = itertools.count()

    def go(e, sub):
        if isinstance(e, Var):
            return Var(sub.get(e.name, e.name))
        if isinstance(e, Plus):
            return Plus(go(e.left, sub), go(e.right, sub))
        if isinstance(e, Mu):
            fresh = f"x{next(counter)}"
            return Mu(fresh, go(e.body, {**sub, e.var: fresh}))
        if isinstance(e, Letter):
            return Letter(e.letter, go(e.inner, sub))
        if isinstance(e, _WRAPPERS):
            return type(e)(go(e.inner, sub))
        return e

    return go(e, {})
