"""Deciding behavioural equivalence of two certified expressions.

Both expressions are synthesized into finite systems; the greatest
bisimulation between them is the limit of a decreasing refinement starting
from all state pairs, where a pair survives a round iff its structured values
are related by the lifting of the current relation (componentwise at
products, tag-respecting at sums, pointwise at function tables, and
forall-exists in both directions at set positions).

On success the verdict carries the witness relation restricted to the pairs
reachable from the initial pair; on failure it carries an experiment, a
navigation path through both transition structures ending in an observable
difference.  Experiments are minimal-depth: every refinement step descends to
a pair removed exactly one round earlier.
"""

from dataclasses import dataclass

from .errors import FunctorMismatch, IngredientMismatch
from .expr import check_expression
from .functor import Constant, Exponent, Identity, Powerset, Product, Sum
from .semantics import (
    Bot,
    FinSet,
    FunTable,
    Inj1,
    Inj2,
    Pair,
    StateRef,
    Top,
    Val,
    render_struct,
)
from .synth import Coalgebra, SynthLimit, synthesize


@dataclass(frozen=True)
class Relation:
    pairs: frozenset


@dataclass(frozen=True)
class LetterStep:
    letter: str


@dataclass(frozen=True)
class FstStep:
    pass


@dataclass(frozen=True)
class SndStep:
    pass


@dataclass(frozen=True)
class InjStep:
    pass


@dataclass(frozen=True)
class SetPickStep:
    side: str
    index: int


@dataclass(frozen=True)
class LatticeMismatch:
    left: str
    right: str


@dataclass(frozen=True)
class SumShapeMismatch:
    left: str
    right: str


@dataclass(frozen=True)
class SetEmptinessMismatch:
    empty_side: str


@dataclass(frozen=True)
class SetUnmatchedMismatch:
    side: str
    index: int


@dataclass(frozen=True)
class Experiment:
    steps: tuple
    mismatch: object


@dataclass(frozen=True)
class Bisimilar:
    witness: Relation


@dataclass(frozen=True)
class NotBisimilar:
    experiment: Experiment


def render_step(step):
    if isinstance(step, LetterStep):
        return step.letter
    if isinstance(step, FstStep):
        return "fst"
    if isinstance(step, SndStep):
        return "snd"
    if isinstance(step, InjStep):
        return "inj"
    if isinstance(step, SetPickStep):
        return f"pick#{step.index}"
    raise TypeError(f"not a step: {step!r}")


def render_mismatch(m):
    if isinstance(m, LatticeMismatch):
        return f"lattice {m.left} /= {m.right}"
    if isinstance(m, SumShapeMismatch):
        return f"sum-shape {m.left} /= {m.right}"
    if isinstance(m, SetEmptinessMismatch):
        return f"set-emptiness {m.empty_side}"
    if isinstance(m, SetUnmatchedMismatch):
        return f"set-unmatched {m.side}#{m.index}"
    raise TypeError(f"not a mismatch: {m!r}")


def render_experiment(exp):
    parts = [render_step(s) for s in exp.steps]
    head = " / ".join(parts) if parts else "(root)"
    return f"{head} -> {render_mismatch(exp.mismatch)}"


def _sum_tag(v):
    if isinstance(v, Bot):
        return "bot"
    if isinstance(v, Top):
        return "top"
    if isinstance(v, Inj1):
        return "k1"
    if isinstance(v, Inj2):
        return "k2"
    raise IngredientMismatch(f"not a sum value: {render_struct(v)}")


def lift_check(functor, relation, v1, v2):
    """Whether two structured values are related by the lifting of
    ``relation`` at ``functor``."""
    pairs = relation.pairs if isinstance(relation, Relation) else relation
    return _lift(functor, pairs, v1, v2)


def _lift(f, pairs, v1, v2):
    if isinstance(f, Constant):
        if isinstance(v1, Val) and isinstance(v2, Val):
            return v1.element == v2.element
    elif isinstance(f, Identity):
        if isinstance(v1, StateRef) and isinstance(v2, StateRef):
            return (v1.state, v2.state) in pairs
    elif isinstance(f, Product):
        if isinstance(v1, Pair) and isinstance(v2, Pair):
            return _lift(f.left, pairs, v1.fst, v2.fst) and _lift(f.right, pairs, v1.snd, v2.snd)
    elif isinstance(f, Sum):
        t1, t2 = _sum_tag(v1), _sum_tag(v2)
        if t1 != t2:
            return False
        if t1 == "k1":
            return _lift(f.left, pairs, v1.value, v2.value)
        if t1 == "k2":
            return _lift(f.right, pairs, v1.value, v2.value)
        return True
    elif isinstance(f, Exponent):
        if isinstance(v1, FunTable) and isinstance(v2, FunTable):
            return all(_lift(f.base, pairs, u, v2.entry(a)) for a, u in v1.entries)
    elif isinstance(f, Powerset):
        if isinstance(v1, FinSet) and isinstance(v2, FinSet):
            return (
                all(any(_lift(f.inner, pairs, u, v) for v in v2.elems) for u in v1.elems)
                and all(any(_lift(f.inner, pairs, u, v) for u in v1.elems) for v in v2.elems)
            )
    raise IngredientMismatch(
        f"values {render_struct(v1)} and {render_struct(v2)} do not share the shape of the functor"
    )


def _refine(c1, c2):
    """Decreasing fixpoint with a trace of removal rounds."""
    relation = {(i, j) for i in range(len(c1.states)) for j in range(len(c2.states))}
    removal_round = {}
    rounds = 0
    while True:
        rounds += 1
        frozen = frozenset(relation)
        removed = [
            p for p in relation
            if not _lift(c1.functor, frozen, c1.structure[p[0]], c2.structure[p[1]])
        ]
        if not removed:
            return frozen, removal_round, rounds
        for p in removed:
            removal_round[p] = rounds
            relation.discard(p)


def greatest_bisimulation(c1, c2):
    """The union of all bisimulations between two systems of the same type."""
    if c1.functor != c2.functor:
        raise FunctorMismatch("systems are typed by different functors")
    final, _, _ = _refine(c1, c2)
    return Relation(final)


def verify_witness(c1, c2, relation):
    """Independent re-check that a relation is closed under lifting."""
    pairs = relation.pairs if isinstance(relation, Relation) else frozenset(relation)
    return all(
        _lift(c1.functor, pairs, c1.structure[s], c2.structure[t]) for (s, t) in pairs
    )


def _successor_pairs(f, pairs, v1, v2, out):
    if isinstance(f, Identity):
        out.add((v1.state, v2.state))
    elif isinstance(f, Product):
        _successor_pairs(f.left, pairs, v1.fst, v2.fst, out)
        _successor_pairs(f.right, pairs, v1.snd, v2.snd, out)
    elif isinstance(f, Sum):
        if isinstance(v1, Inj1) and isinstance(v2, Inj1):
            _successor_pairs(f.left, pairs, v1.value, v2.value, out)
        elif isinstance(v1, Inj2) and isinstance(v2, Inj2):
            _successor_pairs(f.right, pairs, v1.value, v2.value, out)
    elif isinstance(f, Exponent):
        for a, u in v1.entries:
            _successor_pairs(f.base, pairs, u, v2.entry(a), out)
    elif isinstance(f, Powerset):
        for u in v1.elems:
            for v in v2.elems:
                if _lift(f.inner, pairs, u, v):
                    _successor_pairs(f.inner, pairs, u, v, out)


def _reachable_witness(c1, c2, pairs, start):
    seen = {start}
    queue = [start]
    while queue:
        s, t = queue.pop()
        succ = set()
        _successor_pairs(c1.functor, pairs, c1.structure[s], c2.structure[t], succ)
        for p in succ:
            if p not in seen:
                seen.add(p)
                queue.append(p)
    return seen


# -- experiments -----------------------------------------------------------------

class _SurvivorsAfter:
    """Membership view of the relation after ``k`` refinement rounds."""

    def __init__(self, removal_round, k):
        self._removal_round = removal_round
        self._k = k

    def __contains__(self, pair):
        return self._removal_round.get(pair, float("inf")) > self._k


def extract_experiment(c1, c2, removal_round, pair):
    """Navigation path showing why ``pair`` was removed; descends into the
    lifting failure at the round the pair died, choosing the minimal failing
    position with ties broken by alphabet order, fst before snd, and
    canonical set order."""
    steps, mismatch = _descend_pair(c1, c2, removal_round, pair)
    return Experiment(tuple(steps), mismatch)


def _descend_pair(c1, c2, removal_round, pair):
    relation = _SurvivorsAfter(removal_round, removal_round[pair] - 1)
    return _descend(
        c1.functor, c1.structure[pair[0]], c2.structure[pair[1]], relation, c1, c2, removal_round
    )


def _descend(f, v1, v2, relation, c1, c2, removal_round):
    if isinstance(f, Constant):
        return [], LatticeMismatch(v1.element, v2.element)
    if isinstance(f, Identity):
        return _descend_pair(c1, c2, removal_round, (v1.state, v2.state))
    if isinstance(f, Product):
        if not _lift(f.left, relation, v1.fst, v2.fst):
            steps, mismatch = _descend(f.left, v1.fst, v2.fst, relation, c1, c2, removal_round)
            return [FstStep()] + steps, mismatch
        steps, mismatch = _descend(f.right, v1.snd, v2.snd, relation, c1, c2, removal_round)
        return [SndStep()] + steps, mismatch
    if isinstance(f, Sum):
        t1, t2 = _sum_tag(v1), _sum_tag(v2)
        if t1 != t2:
            return [], SumShapeMismatch(t1, t2)
        inner = f.left if t1 == "k1" else f.right
        steps, mismatch = _descend(inner, v1.value, v2.value, relation, c1, c2, removal_round)
        return [InjStep()] + steps, mismatch
    if isinstance(f, Exponent):
        for a, u in v1.entries:
            if not _lift(f.base, relation, u, v2.entry(a)):
                steps, mismatch = _descend(f.base, u, v2.entry(a), relation, c1, c2, removal_round)
                return [LetterStep(a)] + steps, mismatch
    if isinstance(f, Powerset):
        left, right = v1.elems, v2.elems
        if not left and right:
            return [], SetEmptinessMismatch("left")
        if left and not right:
            return [], SetEmptinessMismatch("right")
        for i, u in enumerate(left):
            if not any(_lift(f.inner, relation, u, v) for v in right):
                return [SetPickStep("left", i)], SetUnmatchedMismatch("left", i)
        for j, v in enumerate(right):
            if not any(_lift(f.inner, relation, u, v) for u in left):
                return [SetPickStep("right", j)], SetUnmatchedMismatch("right", j)
    raise IngredientMismatch("experiment extraction reached a position that did not fail")


def replay_experiment(c1, c2, experiment, final_relation, start=(0, 0)):
    """Re-run an experiment through both structure maps and confirm the
    recorded mismatch; set picks are confirmed against the final relation."""
    pairs = (
        final_relation.pairs if isinstance(final_relation, Relation) else frozenset(final_relation)
    )
    f = c1.functor
    v1, v2 = c1.structure[start[0]], c2.structure[start[1]]

    def through_states(f, v1, v2):
        while isinstance(v1, StateRef) and isinstance(v2, StateRef):
            v1, v2 = c1.structure[v1.state], c2.structure[v2.state]
            f = c1.functor
        return f, v1, v2

    for step in experiment.steps:
        f, v1, v2 = through_states(f, v1, v2)
        if isinstance(step, LetterStep):
            if not (isinstance(v1, FunTable) and isinstance(v2, FunTable)):
                return False
            v1, v2 = v1.entry(step.letter), v2.entry(step.letter)
            f = f.base
        elif isinstance(step, FstStep):
            if not (isinstance(v1, Pair) and isinstance(v2, Pair)):
                return False
            v1, v2 = v1.fst, v2.fst
            f = f.left
        elif isinstance(step, SndStep):
            if not (isinstance(v1, Pair) and isinstance(v2, Pair)):
                return False
            v1, v2 = v1.snd, v2.snd
            f = f.right
        elif isinstance(step, InjStep):
            if isinstance(v1, Inj1) and isinstance(v2, Inj1):
                v1, v2, f = v1.value, v2.value, f.left
            elif isinstance(v1, Inj2) and isinstance(v2, Inj2):
                v1, v2, f = v1.value, v2.value, f.right
            else:
                return False
        elif isinstance(step, SetPickStep):
            if not (isinstance(v1, FinSet) and isinstance(v2, FinSet)):
                return False
            picked_from, other = (v1, v2) if step.side == "left" else (v2, v1)
            if step.index >= len(picked_from.elems):
                return False
            picked = picked_from.elems[step.index]
            return not any(
                _lift(f.inner, pairs, picked, w) if step.side == "left"
                else _lift(f.inner, pairs, w, picked)
                for w in other.elems
            )
        else:
            return False
    f, v1, v2 = through_states(f, v1, v2)
    m = experiment.mismatch
    if isinstance(m, LatticeMismatch):
        return (
            isinstance(v1, Val) and isinstance(v2, Val)
            and (v1.element, v2.element) == (m.left, m.right)
            and m.left != m.right
        )
    if isinstance(m, SumShapeMismatch):
        return (_sum_tag(v1), _sum_tag(v2)) == (m.left, m.right) and m.left != m.right
    if isinstance(m, SetEmptinessMismatch):
        if not (isinstance(v1, FinSet) and isinstance(v2, FinSet)):
            return False
        empty, other = (v1, v2) if m.empty_side == "left" else (v2, v1)
        return not empty.elems and bool(other.elems)
    return False


# -- the decision procedure --------------------------------------------------------

@dataclass(frozen=True)
class DecideStats:
    states_left: int
    states_right: int
    rounds: int
    left: Coalgebra
    right: Coalgebra


def decide_with_stats(g, e1, e2, limit=SynthLimit(), *, unit=True):
    t1 = check_expression(e1, g)
    t2 = check_expression(e2, g)
    c1 = synthesize(g, t1, limit, unit=unit)
    c2 = synthesize(g, t2, limit, unit=unit)
    final, removal_round, rounds = _refine(c1, c2)
    stats = DecideStats(len(c1.states), len(c2.states), rounds, c1, c2)
    if (0, 0) in final:
        witness = Relation(frozenset(_reachable_witness(c1, c2, final, (0, 0))))
        return Bisimilar(witness), stats
    experiment = extract_experiment(c1, c2, removal_round, (0, 0))
    return NotBisimilar(experiment), stats


def decide(g, e1, e2, limit=SynthLimit(), *, unit=True):
    """Certify, synthesize and compare two expressions over ``g``."""
    verdict, _ = decide_with_stats(g, e1, e2, limit, unit=unit)
    return verdict


def decide_state(g, e, coalgebra, state, limit=SynthLimit(), *, unit=True):
    """Whether expression ``e`` is equivalent to a state of an existing system."""
    if coalgebra.functor != g:
        raise FunctorMismatch("systems are typed by different functors")
    certified = check_expression(e, g)
    c1 = synthesize(g, certified, limit, unit=unit)
    index = state if isinstance(state, int) else coalgebra.state_index(state)
    final, _, _ = _refine(c1, coalgebra)
    return (0, index) in final
