"""System-type grammar and the part-of relation used for typing expressions.

A system type is built from the identity, semilattice constants, products,
enriched sums (with bottom/top for under- and over-specification), function
spaces over a finite alphabet, and finite powersets.  Expressions are typed
at a pair (part, whole) where ``part`` occurs inside ``whole``.
"""

from dataclasses import dataclass

from .errors import UnknownName
from .lattice import Alphabet, SemiLattice
from .lexer import TokenStream, tokenize


class Functor:
    pass


@dataclass(frozen=True)
class Identity(Functor):
    pass


@dataclass(frozen=True)
class Constant(Functor):
    lattice: SemiLattice


@dataclass(frozen=True)
class Product(Functor):
    left: Functor
    right: Functor


@dataclass(frozen=True)
class Sum(Functor):
    """Disjoint union enriched with a bottom and a top element."""

    left: Functor
    right: Functor


@dataclass(frozen=True)
class Exponent(Functor):
    base: Functor
    alphabet: Alphabet


@dataclass(frozen=True)
class Powerset(Functor):
    inner: Functor


ID = Identity()

# Precedence levels for parsing/rendering: sum < product < exponent < prefix.
_LEVEL_SUM, _LEVEL_PRODUCT, _LEVEL_EXPONENT, _LEVEL_PREFIX, _LEVEL_ATOM = 0, 1, 2, 3, 4


def _level(f):
    if isinstance(f, Sum):
        return _LEVEL_SUM
    if isinstance(f, Product):
        return _LEVEL_PRODUCT
    if isinstance(f, Exponent):
        return _LEVEL_EXPONENT
    if isinstance(f, Powerset):
        return _LEVEL_PREFIX
    return _LEVEL_ATOM


def render_functor(f, _min_level=_LEVEL_SUM):
    if isinstance(f, Identity):
        s = "Id"
    elif isinstance(f, Constant):
        s = f.lattice.name
    elif isinstance(f, Sum):
        s = f"{render_functor(f.left, _LEVEL_SUM)} + {render_functor(f.right, _LEVEL_PRODUCT)}"
    elif isinstance(f, Product):
        s = f"{render_functor(f.left, _LEVEL_PRODUCT)} x {render_functor(f.right, _LEVEL_EXPONENT)}"
    elif isinstance(f, Exponent):
        s = f"{render_functor(f.base, _LEVEL_ATOM)}^{f.alphabet.name}"
    elif isinstance(f, Powerset):
        s = f"P {render_functor(f.inner, _LEVEL_ATOM)}"
    else:
        raise TypeError(f"not a functor: {f!r}")
    if _level(f) < _min_level:
        return f"({s})"
    return s


RESERVED_FUNCTOR_NAMES = frozenset({"Id", "P", "x"})


def parse_functor_tokens(ts: TokenStream, env):
    """Parse a functor expression from ``ts``; binary operators are
    left-associative with precedence ``^`` over ``x`` over ``+``, and ``P``
    is a tightest-binding prefix."""
    left = _parse_product(ts, env)
    while ts.at_sym("+"):
        ts.next()
        left = Sum(left, _parse_product(ts, env))
    return left


def _parse_product(ts, env):
    left = _parse_exponent(ts, env)
    while ts.at_ident("x"):
        ts.next()
        left = Product(left, _parse_exponent(ts, env))
    return left


def _parse_exponent(ts, env):
    base = _parse_atom(ts, env)
    while ts.at_sym("^"):
        ts.next()
        name = ts.expect_ident("alphabet name")
        if name not in env.alphabets:
            raise UnknownName(f"unknown alphabet {name!r}")
        base = Exponent(base, env.alphabets[name])
    return base


def _parse_atom(ts, env):
    if ts.at_sym("("):
        ts.next()
        inner = parse_functor_tokens(ts, env)
        ts.expect_sym(")")
        return inner
    if ts.at_ident("Id"):
        ts.next()
        return ID
    if ts.at_ident("P"):
        ts.next()
        return Powerset(_parse_atom(ts, env))
    if ts.at_ident():
        tok = ts.next()
        if tok.text in env.lattices:
            return Constant(env.lattices[tok.text])
        raise UnknownName(f"unknown semilattice {tok.text!r}")
    ts.error("expected a functor")


def parse_functor(text, env):
    ts = TokenStream(tokenize(text))
    f = parse_functor_tokens(ts, env)
    ts.expect_eof()
    return f


def _height(f):
    if isinstance(f, (Product, Sum)):
        return 1 + max(_height(f.left), _height(f.right))
    if isinstance(f, Exponent):
        return 1 + _height(f.base)
    if isinstance(f, Powerset):
        return 1 + _height(f.inner)
    return 0


def ingredients(g):
    """All functors occurring in the construction of ``g``, including ``g``,
    deduplicated up to structural equality and deterministically ordered."""
    seen = []

    def visit(f):
        if f not in seen:
            seen.append(f)
        if isinstance(f, (Product, Sum)):
            visit(f.left)
            visit(f.right)
        elif isinstance(f, Exponent):
            visit(f.base)
        elif isinstance(f, Powerset):
            visit(f.inner)

    visit(g)
    return sorted(seen, key=lambda f: (_height(f), render_functor(f)))


def is_ingredient(f, g):
    return f in ingredients(g)


@dataclass(frozen=True)
class Ingredient:
    """A functor ``part`` occurring inside a functor ``whole``."""

    part: Functor
    whole: Functor

    def at(self, part):
        return Ingredient(part, self.whole)


def root(g):
    """The ingredient at which closed expressions for ``g`` are typed."""
    return Ingredient(g, g)
