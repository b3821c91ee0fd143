"""One-step behaviour of expressions.

``delta`` maps an expression typed at an ingredient to a structured value of
that ingredient's shape: a lattice element at constants, an expression (or,
inside a synthesized system, a state reference) at identity positions, pairs
at products, tagged injections plus bottom/top at sums, total letter tables
at function spaces, and finite sets at powersets.

Repeatedly taking derivatives only reaches finitely many expressions if
expressions are identified up to associativity, commutativity and idempotence
of ``(+)``; ``aci_normalize`` computes that canonical form, optionally also
deleting ``phi`` summands (the unit law, which shrinks systems further but is
not needed for termination).
"""

from dataclasses import dataclass
from functools import reduce

from .errors import IllTyped, IngredientMismatch, UnguardedRecursion
from .functor import Constant, Exponent, Identity, Powerset, Product, Sum
from .expr import (
    EMPTY,
    Empty,
    Expr,
    LatticeElem,
    LeftAngle,
    LeftBracket,
    Letter,
    Mu,
    Plus,
    RightAngle,
    RightBracket,
    Singleton,
    Var,
    canonical_key,
    canonical_rename,
    render_expr,
    substitute,
    typecheck,
)


class StructExpr:
    pass


@dataclass(frozen=True)
class Val(StructExpr):
    element: str


@dataclass(frozen=True)
class ExprLeaf(StructExpr):
    expr: Expr


@dataclass(frozen=True)
class StateRef(StructExpr):
    """Identity position resolved to a state of a finite system.

    ``state`` is an index; spec-file parsing temporarily stores state names
    and resolves them to indices before constructing the system.
    """

    state: object


@dataclass(frozen=True)
class Pair(StructExpr):
    fst: StructExpr
    snd: StructExpr


@dataclass(frozen=True)
class Inj1(StructExpr):
    value: StructExpr


@dataclass(frozen=True)
class Inj2(StructExpr):
    value: StructExpr


@dataclass(frozen=True)
class Bot(StructExpr):
    pass


@dataclass(frozen=True)
class Top(StructExpr):
    pass


@dataclass(frozen=True)
class FunTable(StructExpr):
    """Total map from letters to structured values, in alphabet order."""

    entries: tuple

    def entry(self, letter):
        for a, v in self.entries:
            if a == letter:
                return v
        raise KeyError(letter)


@dataclass(frozen=True)
class FinSet(StructExpr):
    elems: tuple


BOT = Bot()
TOP = Top()


def struct_key(s):
    """Total-order key on structured values (expressions compared up to
    binder renaming)."""
    if isinstance(s, Val):
        return (0, s.element)
    if isinstance(s, ExprLeaf):
        return (1, canonical_key(s.expr))
    if isinstance(s, StateRef):
        return (2, s.state)
    if isinstance(s, Pair):
        return (3, struct_key(s.fst), struct_key(s.snd))
    if isinstance(s, Inj1):
        return (4, struct_key(s.value))
    if isinstance(s, Inj2):
        return (5, struct_key(s.value))
    if isinstance(s, Bot):
        return (6,)
    if isinstance(s, Top):
        return (7,)
    if isinstance(s, FunTable):
        return (8, tuple((a, struct_key(v)) for a, v in s.entries))
    if isinstance(s, FinSet):
        return (9, tuple(struct_key(v) for v in s.elems))
    raise TypeError(f"not a structured value: {s!r}")


def finset(elems):
    """Build a set value: duplicate-free and sorted by the canonical order."""
    by_key = {struct_key(v): v for v in elems}
    return FinSet(tuple(by_key[k] for k in sorted(by_key)))


def render_struct(s, state_label=None):
    label = state_label or (lambda i: f"s{i}")
    if isinstance(s, Val):
        return s.element
    if isinstance(s, ExprLeaf):
        return render_expr(s.expr)
    if isinstance(s, StateRef):
        return label(s.state)
    if isinstance(s, Pair):
        return f"<{render_struct(s.fst, state_label)}, {render_struct(s.snd, state_label)}>"
    if isinstance(s, Inj1):
        return f"k1 {render_struct(s.value, state_label)}"
    if isinstance(s, Inj2):
        return f"k2 {render_struct(s.value, state_label)}"
    if isinstance(s, Bot):
        return "bot"
    if isinstance(s, Top):
        return "top"
    if isinstance(s, FunTable):
        body = "; ".join(f"{a} -> {render_struct(v, state_label)}" for a, v in s.entries)
        return f"[{body}]"
    if isinstance(s, FinSet):
        return "{" + ", ".join(render_struct(v, state_label) for v in s.elems) + "}"
    raise TypeError(f"not a structured value: {s!r}")


# -- the operation triple ------------------------------------------------------

def empty_struct(at):
    """The structured value denoting complete underspecification at ``at``."""
    part = at.part
    if isinstance(part, Constant):
        return Val(part.lattice.bottom)
    if isinstance(part, Identity):
        return ExprLeaf(EMPTY)
    if isinstance(part, Product):
        return Pair(empty_struct(at.at(part.left)), empty_struct(at.at(part.right)))
    if isinstance(part, Sum):
        return BOT
    if isinstance(part, Exponent):
        base = at.at(part.base)
        return FunTable(tuple((a, empty_struct(base)) for a in part.alphabet.letters))
    if isinstance(part, Powerset):
        return FinSet(())
    raise TypeError(f"not a functor: {part!r}")


def plus_struct(at, s1, s2):
    """Join two structured values of the same ingredient."""
    part = at.part
    if isinstance(part, Constant):
        if isinstance(s1, Val) and isinstance(s2, Val):
            return Val(part.lattice.join(s1.element, s2.element))
    elif isinstance(part, Identity):
        if isinstance(s1, ExprLeaf) and isinstance(s2, ExprLeaf):
            return ExprLeaf(Plus(s1.expr, s2.expr))
    elif isinstance(part, Product):
        if isinstance(s1, Pair) and isinstance(s2, Pair):
            return Pair(
                plus_struct(at.at(part.left), s1.fst, s2.fst),
                plus_struct(at.at(part.right), s1.snd, s2.snd),
            )
    elif isinstance(part, Sum):
        if isinstance(s1, Bot):
            return s2
        if isinstance(s2, Bot):
            return s1
        if isinstance(s1, Top) or isinstance(s2, Top):
            return TOP
        if isinstance(s1, Inj1) and isinstance(s2, Inj1):
            return Inj1(plus_struct(at.at(part.left), s1.value, s2.value))
        if isinstance(s1, Inj2) and isinstance(s2, Inj2):
            return Inj2(plus_struct(at.at(part.right), s1.value, s2.value))
        if isinstance(s1, (Inj1, Inj2)) and isinstance(s2, (Inj1, Inj2)):
            return TOP
    elif isinstance(part, Exponent):
        if isinstance(s1, FunTable) and isinstance(s2, FunTable):
            base = at.at(part.base)
            return FunTable(tuple(
                (a, plus_struct(base, v1, s2.entry(a))) for a, v1 in s1.entries
            ))
    elif isinstance(part, Powerset):
        if isinstance(s1, FinSet) and isinstance(s2, FinSet):
            return finset(s1.elems + s2.elems)
    raise IngredientMismatch(
        f"cannot join {render_struct(s1)} and {render_struct(s2)} "
        f"at {type(part).__name__}"
    )


_UNFOLD_LIMIT = 10_000


def delta(at, e):
    """One derivative step: the structured value of ``e`` at ingredient ``at``.

    ``e`` must be closed, guarded and well-typed at ``at``; recursion is
    unfolded once per binder, which terminates exactly because guarded bodies
    consume a constructor before reaching their variable again.
    """
    budget = [_UNFOLD_LIMIT]
    return _delta(at, e, budget)


def _delta(at, e, budget):
    part = at.part
    if isinstance(part, Identity):
        return ExprLeaf(e)
    if isinstance(e, Empty):
        return empty_struct(at)
    if isinstance(e, Plus):
        return plus_struct(at, _delta(at, e.left, budget), _delta(at, e.right, budget))
    if isinstance(e, Mu):
        if part != at.whole:
            raise IllTyped(f"recursion is only allowed at the whole system type: {render_expr(e)}")
        budget[0] -= 1
        if budget[0] < 0:
            raise UnguardedRecursion(
                "recursion unfolding exceeded the syntactic bound; input is not guarded"
            )
        return _delta(at, substitute(e.body, e.var, e), budget)
    if isinstance(e, LatticeElem):
        if isinstance(part, Constant) and e.element in part.lattice.elements:
            return Val(e.element)
    elif isinstance(e, LeftAngle):
        if isinstance(part, Product):
            return Pair(
                _delta(at.at(part.left), e.inner, budget),
                empty_struct(at.at(part.right)),
            )
    elif isinstance(e, RightAngle):
        if isinstance(part, Product):
            return Pair(
                empty_struct(at.at(part.left)),
                _delta(at.at(part.right), e.inner, budget),
            )
    elif isinstance(e, LeftBracket):
        if isinstance(part, Sum):
            return Inj1(_delta(at.at(part.left), e.inner, budget))
    elif isinstance(e, RightBracket):
        if isinstance(part, Sum):
            return Inj2(_delta(at.at(part.right), e.inner, budget))
    elif isinstance(e, Letter):
        if isinstance(part, Exponent) and e.letter in part.alphabet.letters:
            base = at.at(part.base)
            return FunTable(tuple(
                (a, _delta(base, e.inner, budget) if a == e.letter else empty_struct(base))
                for a in part.alphabet.letters
            ))
    elif isinstance(e, Singleton):
        if isinstance(part, Powerset):
            return FinSet((_delta(at.at(part.inner), e.inner, budget),))
    elif isinstance(e, Var):
        raise IllTyped(f"free variable {e.name!r} reached during evaluation")
    raise IllTyped(f"{render_expr(e)} does not type at this ingredient")


# -- canonical forms -----------------------------------------------------------

def aci_normalize(e, *, unit=True, idem=True):
    """Canonical representative of ``e`` modulo associativity, commutativity
    and idempotence of ``(+)``, with binders canonically renamed.

    ``unit=False`` keeps ``phi`` summands; ``idem=False`` keeps duplicate
    summands (a debug mode that demonstrates divergence of the derivative
    closure without idempotence).
    """
    return canonical_rename(_norm(e, unit, idem))


def _summands(e, unit, idem, out):
    if isinstance(e, Plus):
        _summands(e.left, unit, idem, out)
        _summands(e.right, unit, idem, out)
    else:
        out.append(_norm(e, unit, idem))


def _norm(e, unit, idem):
    if isinstance(e, Plus):
        parts = []
        _summands(e, unit, idem, parts)
        if unit:
            kept = [p for p in parts if not isinstance(p, Empty)]
            parts = kept if kept else [EMPTY]
        keyed = [(canonical_key(p), p) for p in parts]
        if idem:
            uniq = {}
            for k, p in keyed:
                uniq.setdefault(k, p)
            keyed = list(uniq.items())
        keyed.sort(key=lambda kp: kp[0])
        parts = [p for _, p in keyed]
        return reduce(lambda acc, p: Plus(p, acc), reversed(parts[:-1]), parts[-1])
    if isinstance(e, Mu):
        return Mu(e.var, _norm(e.body, unit, idem))
    if isinstance(e, Letter):
        return Letter(e.letter, _norm(e.inner, unit, idem))
    if isinstance(e, (LeftAngle, RightAngle, LeftBracket, RightBracket, Singleton)):
        return type(e)(_norm(e.inner, unit, idem))
    return e


def struct_normalize(s, *, unit=True, idem=True):
    """Push ``aci_normalize`` through a structured value; set positions are
    always kept duplicate-free and sorted."""
    if isinstance(s, ExprLeaf):
        return ExprLeaf(aci_normalize(s.expr, unit=unit, idem=idem))
    if isinstance(s, Pair):
        return Pair(struct_normalize(s.fst, unit=unit, idem=idem),
                    struct_normalize(s.snd, unit=unit, idem=idem))
    if isinstance(s, Inj1):
        return Inj1(struct_normalize(s.value, unit=unit, idem=idem))
    if isinstance(s, Inj2):
        return Inj2(struct_normalize(s.value, unit=unit, idem=idem))
    if isinstance(s, FunTable):
        return FunTable(tuple(
            (a, struct_normalize(v, unit=unit, idem=idem)) for a, v in s.entries
        ))
    if isinstance(s, FinSet):
        return finset(struct_normalize(v, unit=unit, idem=idem) for v in s.elems)
    return s


def struct_well_typed(s, at, n_states=None):
    """Structural type-verifier for structured values at an ingredient.

    Identity positions accept a well-typed expression, or a state reference
    below ``n_states`` when given.
    """
    part = at.part
    if isinstance(part, Constant):
        return isinstance(s, Val) and s.element in part.lattice.elements
    if isinstance(part, Identity):
        if isinstance(s, ExprLeaf):
            return typecheck(s.expr, at)
        if isinstance(s, StateRef):
            return n_states is None or (isinstance(s.state, int) and 0 <= s.state < n_states)
        return False
    if isinstance(part, Product):
        return (isinstance(s, Pair)
                and struct_well_typed(s.fst, at.at(part.left), n_states)
                and struct_well_typed(s.snd, at.at(part.right), n_states))
    if isinstance(part, Sum):
        if isinstance(s, (Bot, Top)):
            return True
        if isinstance(s, Inj1):
            return struct_well_typed(s.value, at.at(part.left), n_states)
        if isinstance(s, Inj2):
            return struct_well_typed(s.value, at.at(part.right), n_states)
        return False
    if isinstance(part, Exponent):
        if not isinstance(s, FunTable):
            return False
        if tuple(a for a, _ in s.entries) != part.alphabet.letters:
            return False
        base = at.at(part.base)
        return all(struct_well_typed(v, base, n_states) for _, v in s.entries)
    if isinstance(part, Powerset):
        if not isinstance(s, FinSet):
            return False
        keys = [struct_key(v) for v in s.elems]
        if keys != sorted(set(keys)):
            return False
        return all(struct_well_typed(v, at.at(part.inner), n_states) for v in s.elems)
    raise TypeError(f"not a functor: {part!r}")
