"""Finite systems: synthesis from expressions and expression extraction.

Synthesis starts from the canonical form of a certified expression and closes
it under derivatives; canonical forms keep the reachable set finite.  The
reverse direction associates a recursion variable with every state and reads
an expression off the transition structure, expanding forward edges and
closing back edges with the enclosing binder.
"""

import itertools
import json
from dataclasses import dataclass
from functools import reduce

from .errors import IllTyped, StateLimitExceeded, UnknownName
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
    TypedExpr,
    Var,
    check_expression,
    render_expr,
)
from .functor import Constant, Exponent, Identity, Powerset, Product, Sum, render_functor, root
from .semantics import (
    Bot,
    ExprLeaf,
    FinSet,
    FunTable,
    Inj1,
    Inj2,
    Pair,
    StateRef,
    Top,
    Val,
    aci_normalize,
    delta,
    render_struct,
    struct_normalize,
)


@dataclass(frozen=True)
class SynthLimit:
    max_states: int = 10000


@dataclass(frozen=True)
class Coalgebra:
    """A finite system: states and one structured value per state.

    Synthesized systems carry canonical expressions as states; user-declared
    systems carry opaque state names.  Identity positions inside ``structure``
    are ``StateRef`` indices into ``states``.
    """

    functor: object
    states: tuple
    structure: tuple

    def state_label(self, i):
        s = self.states[i]
        return s if isinstance(s, str) else render_expr(s)

    def state_index(self, name):
        for i, s in enumerate(self.states):
            if s == name:
                return i
        raise UnknownName(f"unknown state {name!r}")


def synthesize(g, certified: TypedExpr, limit=SynthLimit(), *, unit=True, idem=True):
    """The reachable finite system of a certified expression over ``g``.

    State identity is canonical-form equality; the worklist terminates for
    guarded input as long as idempotence is enabled.
    """
    at = root(g)
    start = aci_normalize(certified.expr, unit=unit, idem=idem)
    states = [start]
    index = {start: 0}
    structure = []

    def intern(v):
        if isinstance(v, ExprLeaf):
            e = v.expr
            if e not in index:
                if len(states) >= limit.max_states:
                    raise StateLimitExceeded(limit.max_states)
                index[e] = len(states)
                states.append(e)
            return StateRef(index[e])
        if isinstance(v, Pair):
            return Pair(intern(v.fst), intern(v.snd))
        if isinstance(v, Inj1):
            return Inj1(intern(v.value))
        if isinstance(v, Inj2):
            return Inj2(intern(v.value))
        if isinstance(v, FunTable):
            return FunTable(tuple((a, intern(entry)) for a, entry in v.entries))
        if isinstance(v, FinSet):
            return FinSet(tuple(intern(el) for el in v.elems))
        return v

    i = 0
    while i < len(states):
        value = struct_normalize(delta(at, states[i]), unit=unit, idem=idem)
        structure.append(intern(value))
        i += 1
    return Coalgebra(g, tuple(states), tuple(structure))


# -- expression extraction -----------------------------------------------------

def _is_empty_value(at, v, states):
    part = at.part
    if isinstance(v, Val):
        return isinstance(part, Constant) and v.element == part.lattice.bottom
    if isinstance(v, ExprLeaf):
        return isinstance(v.expr, Empty)
    if isinstance(v, StateRef):
        return states is not None and isinstance(states[v.state], Empty)
    if isinstance(v, Pair):
        return (_is_empty_value(at.at(part.left), v.fst, states)
                and _is_empty_value(at.at(part.right), v.snd, states))
    if isinstance(v, Bot):
        return True
    if isinstance(v, FunTable):
        base = at.at(part.base)
        return all(_is_empty_value(base, entry, states) for _, entry in v.entries)
    if isinstance(v, FinSet):
        return not v.elems
    return False


def _join(parts):
    if not parts:
        return EMPTY
    return reduce(lambda acc, p: Plus(p, acc), reversed(parts[:-1]), parts[-1])


def _rebuild(at, v, resolve, states):
    part = at.part
    if isinstance(v, StateRef):
        return resolve(v.state)
    if isinstance(v, ExprLeaf):
        return v.expr
    if isinstance(v, Val):
        if not isinstance(part, Constant):
            raise IllTyped(f"lattice value at {render_functor(part)}")
        return LatticeElem(v.element, part.lattice.name)
    if isinstance(v, Pair):
        return Plus(
            LeftAngle(_rebuild(at.at(part.left), v.fst, resolve, states)),
            RightAngle(_rebuild(at.at(part.right), v.snd, resolve, states)),
        )
    if isinstance(v, Inj1):
        return LeftBracket(_rebuild(at.at(part.left), v.value, resolve, states))
    if isinstance(v, Inj2):
        return RightBracket(_rebuild(at.at(part.right), v.value, resolve, states))
    if isinstance(v, Bot):
        return EMPTY
    if isinstance(v, Top):
        return Plus(LeftBracket(EMPTY), RightBracket(EMPTY))
    if isinstance(v, FunTable):
        base = at.at(part.base)
        terms = [
            Letter(a, _rebuild(base, entry, resolve, states))
            for a, entry in v.entries
            if not _is_empty_value(base, entry, states)
        ]
        return _join(terms)
    if isinstance(v, FinSet):
        inner = at.at(part.inner)
        return _join([Singleton(_rebuild(inner, el, resolve, states)) for el in v.elems])
    raise TypeError(f"not a structured value: {v!r}")


def struct_value_to_expr(at, v, var_of, states=None):
    """Read an expression off a structured value, turning state references
    into the variables given by ``var_of``.  Letters mapping to fully
    underspecified values are omitted."""
    return _rebuild(at, v, lambda i: Var(var_of[i]), states)


def to_expression(coalgebra, state):
    """An expression whose behaviour is the given state's; states on the
    active search path become their binder's variable, other targets are
    expanded in place."""
    if isinstance(state, int):
        i0 = state
    else:
        i0 = coalgebra.state_index(state)
    at = root(coalgebra.functor)
    states = coalgebra.states if coalgebra.states and not isinstance(coalgebra.states[0], str) else None
    counter = itertools.count()

    def build(i, on_path):
        var = f"x{next(counter)}"
        scope = {**on_path, i: var}

        def resolve(j):
            if j in scope:
                return Var(scope[j])
            return build(j, scope)

        body = _rebuild(at, coalgebra.structure[i], resolve, states)
        return Mu(var, body)

    expr = build(i0, {})
    return check_expression(expr, coalgebra.functor)


# -- emitters --------------------------------------------------------------------

def coalgebra_to_json(coalgebra):
    label = lambda i: coalgebra.state_label(i) if isinstance(coalgebra.states[i], str) else f"s{i}"
    payload = {
        "functor": render_functor(coalgebra.functor),
        "states": [coalgebra.state_label(i) for i in range(len(coalgebra.states))],
        "structure": [render_struct(v, label) for v in coalgebra.structure],
    }
    return json.dumps(payload, indent=2)


def _walk_paths(at, v, path, edges, notes):
    part = at.part
    if isinstance(v, Val):
        notes.append((".".join(path) + "=" if path else "") + v.element)
    elif isinstance(v, (ExprLeaf,)):
        notes.append(".".join(path) + "=" + render_expr(v.expr))
    elif isinstance(v, StateRef):
        edges.append((".".join(path), v.state))
    elif isinstance(v, Pair):
        _walk_paths(at.at(part.left), v.fst, path + ["fst"], edges, notes)
        _walk_paths(at.at(part.right), v.snd, path + ["snd"], edges, notes)
    elif isinstance(v, Inj1):
        notes.append(".".join(path + ["k1"]))
        _walk_paths(at.at(part.left), v.value, path + ["k1"], edges, notes)
    elif isinstance(v, Inj2):
        notes.append(".".join(path + ["k2"]))
        _walk_paths(at.at(part.right), v.value, path + ["k2"], edges, notes)
    elif isinstance(v, Bot):
        notes.append(".".join(path + ["bot"]))
    elif isinstance(v, Top):
        notes.append(".".join(path + ["top"]))
    elif isinstance(v, FunTable):
        for a, entry in v.entries:
            _walk_paths(at.at(part.base), entry, path + [a], edges, notes)
    elif isinstance(v, FinSet):
        if not v.elems:
            notes.append(".".join(path + ["{}"]))
        for idx, el in enumerate(v.elems):
            _walk_paths(at.at(part.inner), el, path + [f"#{idx}"], edges, notes)


def coalgebra_to_dot(coalgebra):
    """Graphviz rendering: identity positions become labeled edges, constant
    positions (and sum tags) become node annotations."""
    at = root(coalgebra.functor)
    lines = ["digraph coalgebra {", "  rankdir=LR;"]
    for i in range(len(coalgebra.states)):
        edges, notes = [], []
        _walk_paths(at, coalgebra.structure[i], [], edges, notes)
        title = coalgebra.state_label(i)
        label = "\\n".join([f"{i}: {title}"] + notes)
        label = label.replace('"', '\\"')
        lines.append(f'  n{i} [shape=box, label="{label}"];')
        for path, target in edges:
            lines.append(f'  n{i} -> n{target} [label="{path}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
