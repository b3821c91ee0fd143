"""Declarative input files.

One file declares semilattices, alphabets, exactly one functor, named
expressions, named processes, user-supplied systems, and goals:

    semilattice B { elements 0 1 ; bottom 0 ; join 0 0 = 0 ; join 0 1 = 1 ; join 1 1 = 1 ; }
    alphabet A { a b }
    functor G = (B x Id)^A
    expr E1 = mu x . a(r<x>)
    process P = mu x . a . x
    coalgebra C over G { state s1 = [a -> <1, s2>; b -> <0, s1>] ; state s2 = [a -> <0, s1>; b -> <0, s2>] ; }
    goal "loop" : E1 = phi

Goal sides are an inline expression, the name of an expression binding, or
``NAME !`` for the translation of a process binding.
"""

from dataclasses import dataclass, field

from .ccs import Proc, parse_process_tokens, termination_lattice, translate
from .errors import AmbiguousIdentifier, BisimcheckError, SpecError
from .expr import Expr, check_expression, parse_expr_tokens
from .functor import (
    Constant,
    Exponent,
    Identity,
    Powerset,
    Product,
    RESERVED_FUNCTOR_NAMES,
    Sum,
    parse_functor_tokens,
    root,
)
from .lattice import Env, validate_alphabet, validate_semilattice
from .lexer import TokenStream, tokenize
from .semantics import (
    FinSet,
    FunTable,
    Inj1,
    Inj2,
    Pair,
    StateRef,
    StructExpr,
    Val,
    BOT,
    TOP,
    finset,
)
from .synth import Coalgebra


@dataclass
class Goal:
    label: str
    lhs: Expr
    rhs: Expr
    line: int


@dataclass
class SpecFile:
    env: Env = field(default_factory=Env)
    functor_name: str = ""
    functor: object = None
    exprs: dict = field(default_factory=dict)
    procs: dict = field(default_factory=dict)
    coalgebras: dict = field(default_factory=dict)
    goals: list = field(default_factory=list)


def parse_spec_file(text):
    ts = TokenStream(tokenize(text))
    sf = SpecFile()
    while not ts.at_eof():
        tok = ts.peek()
        if tok.kind != "ident":
            ts.error("expected a declaration")
        if tok.text == "semilattice":
            _parse_semilattice(ts, sf)
        elif tok.text == "alphabet":
            _parse_alphabet(ts, sf)
        elif tok.text == "functor":
            _parse_functor_decl(ts, sf)
        elif tok.text == "expr":
            _parse_expr_decl(ts, sf)
        elif tok.text == "process":
            _parse_proc_decl(ts, sf)
        elif tok.text == "coalgebra":
            _parse_coalgebra_decl(ts, sf)
        elif tok.text == "goal":
            _parse_goal(ts, sf)
        else:
            ts.error("expected a declaration")
    _certify(sf)
    return sf


def _check_new_name(sf, name, category, line):
    taken = (
        name in sf.env.lattices
        or name in sf.env.alphabets
        or name == sf.functor_name
        or name in sf.exprs
        or name in sf.procs
        or name in sf.coalgebras
    )
    if taken:
        raise SpecError(f"name {name!r} is already declared", line)
    if category in ("semilattice", "alphabet") and name in RESERVED_FUNCTOR_NAMES:
        raise SpecError(f"{name!r} is reserved in functor syntax", line)


def _check_token_free(sf, token, line):
    if sf.env.element_owners(token):
        raise SpecError(f"{token!r} is already a semilattice element", line)
    if sf.env.is_letter(token):
        raise SpecError(f"{token!r} is already an alphabet letter", line)


def _parse_semilattice(ts, sf):
    line = ts.peek().line
    ts.next()
    name = ts.expect_ident("semilattice name")
    _check_new_name(sf, name, "semilattice", line)
    ts.expect_sym("{")
    if ts.expect_ident() != "elements":
        ts.error("expected 'elements'")
    elements = []
    while ts.at_ident():
        elements.append(ts.next().text)
    if len(set(elements)) != len(elements):
        raise SpecError(f"semilattice {name} lists an element twice", line)
    for el in elements:
        _check_token_free(sf, el, line)
    ts.expect_sym(";")
    if ts.expect_ident() != "bottom":
        ts.error("expected 'bottom'")
    bottom = ts.expect_ident("bottom element")
    ts.expect_sym(";")
    entries = []
    while ts.at_ident("join"):
        ts.next()
        a = ts.expect_ident()
        b = ts.expect_ident()
        ts.expect_sym("=")
        c = ts.expect_ident()
        ts.expect_sym(";")
        entries.append((a, b, c))
    ts.expect_sym("}")
    sf.env.lattices[name] = validate_semilattice(name, elements, bottom, entries)


def _parse_alphabet(ts, sf):
    line = ts.peek().line
    ts.next()
    name = ts.expect_ident("alphabet name")
    _check_new_name(sf, name, "alphabet", line)
    ts.expect_sym("{")
    letters = []
    while ts.at_ident():
        letters.append(ts.next().text)
    ts.expect_sym("}")
    for letter in letters:
        _check_token_free(sf, letter, line)
    sf.env.alphabets[name] = validate_alphabet(name, letters)


def _parse_functor_decl(ts, sf):
    line = ts.peek().line
    ts.next()
    if sf.functor is not None:
        raise SpecError("a file declares exactly one functor", line)
    name = ts.expect_ident("functor name")
    _check_new_name(sf, name, "functor", line)
    ts.expect_sym("=")
    sf.functor_name = name
    sf.functor = parse_functor_tokens(ts, sf.env)


def _parse_expr_decl(ts, sf):
    line = ts.peek().line
    ts.next()
    name = ts.expect_ident("expression name")
    _check_new_name(sf, name, "expr", line)
    _check_token_free(sf, name, line)
    ts.expect_sym("=")
    sf.exprs[name] = parse_expr_tokens(ts, sf.env)


def _parse_proc_decl(ts, sf):
    line = ts.peek().line
    ts.next()
    name = ts.expect_ident("process name")
    _check_new_name(sf, name, "process", line)
    _check_token_free(sf, name, line)
    ts.expect_sym("=")
    alphabets = list(sf.env.alphabets.values())
    if len(alphabets) != 1:
        raise SpecError("process declarations need exactly one alphabet in scope", line)
    sf.procs[name] = parse_process_tokens(ts, alphabets[0])


def _require_functor(ts, sf):
    if sf.functor is None:
        tok = ts.peek()
        raise SpecError("declare the functor first", tok.line)


def _parse_coalgebra_decl(ts, sf):
    line = ts.peek().line
    ts.next()
    _require_functor(ts, sf)
    name = ts.expect_ident("coalgebra name")
    _check_new_name(sf, name, "coalgebra", line)
    over = ts.expect_ident("functor name")
    if over != "over":
        ts.error("expected 'over'")
    fname = ts.expect_ident("functor name")
    if fname != sf.functor_name:
        raise SpecError(f"coalgebra {name} is over {fname!r}, "
                        f"but the declared functor is {sf.functor_name!r}", line)
    ts.expect_sym("{")
    names, values, lines = [], [], []
    while ts.at_ident("state"):
        state_line = ts.peek().line
        ts.next()
        sname = ts.expect_ident("state name")
        if sname in names:
            raise SpecError(f"state {sname!r} declared twice in coalgebra {name}", state_line)
        ts.expect_sym("=")
        value = _parse_struct_value(ts, root(sf.functor), sf)
        ts.expect_sym(";")
        names.append(sname)
        values.append(value)
        lines.append(state_line)
    ts.expect_sym("}")
    index = {sname: i for i, sname in enumerate(names)}

    def resolve(v, state_line):
        if isinstance(v, StateRef):
            if v.state not in index:
                raise SpecError(f"unknown state {v.state!r} in coalgebra {name}", state_line)
            return StateRef(index[v.state])
        if isinstance(v, Pair):
            return Pair(resolve(v.fst, state_line), resolve(v.snd, state_line))
        if isinstance(v, Inj1):
            return Inj1(resolve(v.value, state_line))
        if isinstance(v, Inj2):
            return Inj2(resolve(v.value, state_line))
        if isinstance(v, FunTable):
            return FunTable(tuple((a, resolve(entry, state_line)) for a, entry in v.entries))
        if isinstance(v, FinSet):
            return finset(resolve(el, state_line) for el in v.elems)
        return v

    structure = tuple(resolve(v, ln) for v, ln in zip(values, lines))
    sf.coalgebras[name] = Coalgebra(sf.functor, tuple(names), structure)


def _parse_struct_value(ts, at, sf):
    """Type-directed parse of a structured value at ingredient ``at``;
    identity positions hold state names until the block closes."""
    part = at.part
    if isinstance(part, Constant):
        el = ts.expect_ident(f"element of {part.lattice.name}")
        if el not in part.lattice.elements:
            ts.error(f"{el!r} is not an element of {part.lattice.name}")
        return Val(el)
    if isinstance(part, Identity):
        return StateRef(ts.expect_ident("state name"))
    if isinstance(part, Product):
        ts.expect_sym("<")
        fst = _parse_struct_value(ts, at.at(part.left), sf)
        ts.expect_sym(",")
        snd = _parse_struct_value(ts, at.at(part.right), sf)
        ts.expect_sym(">")
        return Pair(fst, snd)
    if isinstance(part, Sum):
        if ts.at_ident("bot"):
            ts.next()
            return BOT
        if ts.at_ident("top"):
            ts.next()
            return TOP
        if ts.at_ident("k1"):
            ts.next()
            return Inj1(_parse_struct_value(ts, at.at(part.left), sf))
        if ts.at_ident("k2"):
            ts.next()
            return Inj2(_parse_struct_value(ts, at.at(part.right), sf))
        ts.error("expected k1, k2, bot or top")
    if isinstance(part, Exponent):
        ts.expect_sym("[")
        entries = {}
        while True:
            letter = ts.expect_ident("letter")
            if letter not in part.alphabet.letters:
                ts.error(f"{letter!r} is not a letter of {part.alphabet.name}")
            if letter in entries:
                ts.error(f"letter {letter!r} mapped twice")
            ts.expect_sym("->")
            entries[letter] = _parse_struct_value(ts, at.at(part.base), sf)
            if ts.at_sym(";"):
                ts.next()
                continue
            break
        ts.expect_sym("]")
        missing = [a for a in part.alphabet.letters if a not in entries]
        if missing:
            ts.error(f"missing entries for letters: {', '.join(missing)}")
        return FunTable(tuple((a, entries[a]) for a in part.alphabet.letters))
    if isinstance(part, Powerset):
        ts.expect_sym("{")
        elems = []
        if not ts.at_sym("}"):
            elems.append(_parse_struct_value(ts, at.at(part.inner), sf))
            while ts.at_sym(","):
                ts.next()
                elems.append(_parse_struct_value(ts, at.at(part.inner), sf))
        ts.expect_sym("}")
        return FinSet(tuple(elems))
    raise TypeError(f"not a functor: {part!r}")


def _goal_side(ts, sf):
    tok = ts.peek()
    if tok.kind == "ident" and ts.peek(1).kind == "sym" and ts.peek(1).text == "!":
        name = ts.next().text
        ts.next()
        if name not in sf.procs:
            raise SpecError(f"unknown process {name!r}", tok.line)
        lattice = termination_lattice(sf.functor)
        return translate(sf.procs[name], lattice)
    if (
        tok.kind == "ident"
        and name_is_binding(sf, tok.text)
        and not (ts.peek(1).kind == "sym" and ts.peek(1).text in ("(", "<", "[", "(+)"))
    ):
        ts.next()
        return sf.exprs[tok.text]
    return parse_expr_tokens(ts, sf.env)


def name_is_binding(sf, name):
    return name in sf.exprs


def _parse_goal(ts, sf):
    line = ts.peek().line
    ts.next()
    _require_functor(ts, sf)
    tok = ts.peek()
    if tok.kind != "string":
        ts.error("expected a goal label string")
    label = ts.next().text
    ts.expect_sym(":")
    lhs = _goal_side(ts, sf)
    ts.expect_sym("=")
    rhs = _goal_side(ts, sf)
    sf.goals.append(Goal(label, lhs, rhs, line))


def _certify(sf):
    """Load-time certification: every binding and goal side must be a closed,
    guarded, well-typed expression for the declared functor."""
    needs_functor = sf.exprs or sf.goals
    if needs_functor and sf.functor is None:
        raise SpecError("the file declares expressions or goals but no functor")
    for name, e in sf.exprs.items():
        try:
            check_expression(e, sf.functor)
        except BisimcheckError as err:
            raise SpecError(f"expression {name!r} does not certify: {err}") from err
    for goal in sf.goals:
        for side, e in (("left", goal.lhs), ("right", goal.rhs)):
            try:
                check_expression(e, sf.functor)
            except BisimcheckError as err:
                raise SpecError(
                    f"goal {goal.label!r}, {side} side does not certify: {err}", goal.line
                ) from err
