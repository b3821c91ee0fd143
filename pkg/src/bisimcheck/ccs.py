"""A small process language with termination, deadlock and divergence.

Processes translate into expressions for the functor ``One + (P Id)^A``
where ``One`` is a one-element semilattice flagging successful termination:
``tick`` becomes the left injection of that element, ``dead`` a right
injection with no transitions, ``omega`` complete underspecification, and a
prefix ``a . P`` a right injection with an ``a``-labelled singleton set.
"""

from dataclasses import dataclass

from .errors import NotClosed, NotGuarded, SpecError
from .functor import Constant, Exponent, Identity, Powerset, Sum
from .expr import (
    EMPTY,
    LatticeElem,
    LeftBracket,
    Letter,
    Mu,
    Plus,
    RightBracket,
    Singleton,
    Var,
)
from .lexer import TokenStream, tokenize


class Proc:
    pass


@dataclass(frozen=True)
class Tick(Proc):
    pass


@dataclass(frozen=True)
class Deadlock(Proc):
    pass


@dataclass(frozen=True)
class Omega(Proc):
    pass


@dataclass(frozen=True)
class Prefix(Proc):
    letter: str
    proc: Proc


@dataclass(frozen=True)
class Choice(Proc):
    left: Proc
    right: Proc


@dataclass(frozen=True)
class PVar(Proc):
    name: str


@dataclass(frozen=True)
class Rec(Proc):
    var: str
    body: Proc


_KEYWORDS = frozenset({"tick", "dead", "omega", "mu"})


def parse_process_tokens(ts: TokenStream, alphabet):
    left = _parse_prefix(ts, alphabet)
    while ts.at_sym("+"):
        ts.next()
        left = Choice(left, _parse_prefix(ts, alphabet))
    return left


def _parse_prefix(ts, alphabet):
    tok = ts.peek()
    if tok.kind == "ident" and tok.text in alphabet.letters:
        follower = ts.peek(1)
        if follower.kind == "sym" and follower.text == ".":
            ts.next()
            ts.next()
            return Prefix(tok.text, _parse_prefix(ts, alphabet))
        ts.error(f"letter {tok.text!r} must prefix a process as {tok.text} . P")
    return _parse_atom(ts, alphabet)


def _parse_atom(ts, alphabet):
    if ts.at_sym("("):
        ts.next()
        inner = parse_process_tokens(ts, alphabet)
        ts.expect_sym(")")
        return inner
    if ts.at_ident("tick"):
        ts.next()
        return Tick()
    if ts.at_ident("dead"):
        ts.next()
        return Deadlock()
    if ts.at_ident("omega"):
        ts.next()
        return Omega()
    if ts.at_ident("mu"):
        ts.next()
        var = ts.expect_ident("recursion variable")
        ts.expect_sym(".")
        return Rec(var, parse_process_tokens(ts, alphabet))
    if ts.at_ident():
        tok = ts.next()
        if tok.text in _KEYWORDS:
            ts.error(f"{tok.text!r} cannot be used as a process variable")
        return PVar(tok.text)
    ts.error("expected a process")


def parse_process(text, alphabet):
    ts = TokenStream(tokenize(text))
    p = parse_process_tokens(ts, alphabet)
    ts.expect_eof()
    return p


def render_proc(p):
    if isinstance(p, Tick):
        return "tick"
    if isinstance(p, Deadlock):
        return "dead"
    if isinstance(p, Omega):
        return "omega"
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, Prefix):
        inner = render_proc(p.proc)
        if isinstance(p.proc, (Choice, Rec)):
            inner = f"({inner})"
        return f"{p.letter} . {inner}"
    if isinstance(p, Choice):
        left = render_proc(p.left)
        if isinstance(p.left, Rec):
            left = f"({left})"
        right = render_proc(p.right)
        if isinstance(p.right, Choice):
            right = f"({right})"
        return f"{left} + {right}"
    if isinstance(p, Rec):
        return f"mu {p.var} . {render_proc(p.body)}"
    raise TypeError(f"not a process: {p!r}")


def proc_free_vars(p):
    if isinstance(p, PVar):
        return {p.name}
    if isinstance(p, Choice):
        return proc_free_vars(p.left) | proc_free_vars(p.right)
    if isinstance(p, Rec):
        return proc_free_vars(p.body) - {p.var}
    if isinstance(p, Prefix):
        return proc_free_vars(p.proc)
    return set()


def _exposed_pvar(p, bound):
    # A variable not under any action prefix; choices and binders alone do
    # not guard.
    if isinstance(p, PVar):
        return p if p.name not in bound else None
    if isinstance(p, Choice):
        return _exposed_pvar(p.left, bound) or _exposed_pvar(p.right, bound)
    if isinstance(p, Rec):
        return _exposed_pvar(p.body, bound | {p.var})
    return None


def _unguarded_rec(p):
    if isinstance(p, Rec):
        if _exposed_pvar(p.body, frozenset()) is not None:
            return p
        return _unguarded_rec(p.body)
    if isinstance(p, Choice):
        return _unguarded_rec(p.left) or _unguarded_rec(p.right)
    if isinstance(p, Prefix):
        return _unguarded_rec(p.proc)
    return None


def proc_guarded(p):
    return _unguarded_rec(p) is None


def termination_lattice(g):
    """The one-element semilattice of a ``One + (P Id)^A`` functor."""
    ok = (
        isinstance(g, Sum)
        and isinstance(g.left, Constant)
        and isinstance(g.right, Exponent)
        and isinstance(g.right.base, Powerset)
        and isinstance(g.right.base.inner, Identity)
    )
    if not ok:
        raise SpecError(
            "process translation needs a functor of shape B + (P Id)^A "
            "with a one-element semilattice B"
        )
    lattice = g.left.lattice
    if len(lattice.elements) != 1:
        raise SpecError(
            f"process translation needs a one-element semilattice, "
            f"but {lattice.name} has {len(lattice.elements)} elements"
        )
    return lattice


def translate(p, lattice):
    """Expression of the given process; requires a closed, guarded process
    and the one-element termination semilattice."""
    fv = proc_free_vars(p)
    if fv:
        raise NotClosed(fv)
    bad = _unguarded_rec(p)
    if bad is not None:
        raise NotGuarded(f"recursion variable is not under an action prefix in {render_proc(bad)}")
    return _translate(p, lattice.elements[0], lattice.name)


def _translate(p, element, lattice_name):
    if isinstance(p, Tick):
        return LeftBracket(LatticeElem(element, lattice_name))
    if isinstance(p, Deadlock):
        return RightBracket(EMPTY)
    if isinstance(p, Omega):
        return EMPTY
    if isinstance(p, Prefix):
        return RightBracket(Letter(p.letter, Singleton(_translate(p.proc, element, lattice_name))))
    if isinstance(p, Choice):
        return Plus(
            _translate(p.left, element, lattice_name),
            _translate(p.right, element, lattice_name),
        )
    if isinstance(p, PVar):
        return Var(p.name)
    if isinstance(p, Rec):
        return Mu(p.var, _translate(p.body, element, lattice_name))
    raise TypeError(f"not a process: {p!r}")
