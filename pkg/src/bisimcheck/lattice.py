"""Finite bounded join-semilattices and finite alphabets.

Semilattices are the output/constant domains of system types; alphabets are
the input domains of function-space types.  Both are validated once and
immutable afterwards, so they can be shared freely.
"""

from dataclasses import dataclass, field
from functools import cached_property

from .errors import (
    AmbiguousIdentifier,
    BottomNotNeutral,
    MissingJoinEntry,
    NotAssociative,
    NotCommutative,
    NotIdempotent,
    UnknownElement,
)


@dataclass(frozen=True)
class SemiLattice:
    """A finite join-semilattice: carrier, neutral bottom, total join table.

    ``joins`` holds the completed symmetric table as (a, b, a-join-b) triples.
    Construct through :func:`validate_semilattice`, which checks all laws.
    """

    name: str
    elements: tuple
    bottom: str
    joins: tuple

    @cached_property
    def _table(self):
        return {(a, b): c for a, b, c in self.joins}

    def join(self, b1, b2):
        for b in (b1, b2):
            if b not in self._table_elements:
                raise UnknownElement(f"{b!r} is not an element of semilattice {self.name}")
        return self._table[(b1, b2)]

    def leq(self, b1, b2):
        return self.join(b1, b2) == b2

    @cached_property
    def _table_elements(self):
        return frozenset(self.elements)


def validate_semilattice(name, elements, bottom, entries):
    """Check the semilattice laws exhaustively and return the validated value.

    ``entries`` lists each unordered pair once as (a, b, result); the
    symmetric entry is derived.  Raises one of the lattice errors naming the
    violating tuple otherwise.
    """
    elements = tuple(elements)
    universe = set(elements)
    if bottom not in universe:
        raise UnknownElement(f"bottom {bottom!r} is not among the elements of {name}")
    table = {}
    for a, b, c in entries:
        for x in (a, b, c):
            if x not in universe:
                raise UnknownElement(f"join entry ({a}, {b}) = {c} of {name} uses unknown element {x!r}")
        for key in ((a, b), (b, a)):
            if key in table and table[key] != c:
                raise NotCommutative(
                    f"conflicting entries for join({key[0]}, {key[1]}) in {name}: "
                    f"{table[key]} vs {c}"
                )
            table[key] = c
    for i, a in enumerate(elements):
        for b in elements[i:]:
            if (a, b) not in table:
                raise MissingJoinEntry(f"join({a}, {b}) is not defined in {name}")
    for a in elements:
        if table[(a, a)] != a:
            raise NotIdempotent(f"join({a}, {a}) = {table[(a, a)]} in {name}, expected {a}")
    for a in elements:
        if table[(bottom, a)] != a:
            raise BottomNotNeutral(f"join({bottom}, {a}) = {table[(bottom, a)]} in {name}, expected {a}")
    for a in elements:
        for b in elements:
            for c in elements:
                if table[(a, table[(b, c)])] != table[(table[(a, b)], c)]:
                    raise NotAssociative(f"join is not associative on ({a}, {b}, {c}) in {name}")
    joins = tuple(sorted((a, b, c) for (a, b), c in table.items()))
    return SemiLattice(name=name, elements=elements, bottom=bottom, joins=joins)


@dataclass(frozen=True)
class Alphabet:
    name: str
    letters: tuple


def validate_alphabet(name, letters):
    letters = tuple(letters)
    if not letters:
        raise UnknownElement(f"alphabet {name} must have at least one letter")
    if len(set(letters)) != len(letters):
        dup = next(x for i, x in enumerate(letters) if x in letters[:i])
        raise AmbiguousIdentifier(f"alphabet {name} lists letter {dup!r} twice")
    return Alphabet(name=name, letters=letters)


@dataclass
class Env:
    """Named semilattices and alphabets visible while parsing."""

    lattices: dict = field(default_factory=dict)
    alphabets: dict = field(default_factory=dict)

    def element_owners(self, token):
        return [lat for lat in self.lattices.values() if token in lat.elements]

    def is_letter(self, token):
        return any(token in alph.letters for alph in self.alphabets.values())

    def classify_leaf(self, token):
        """Resolve a bare identifier to ("element", lattice) or ("var", None)."""
        owners = self.element_owners(token)
        if owners and self.is_letter(token):
            raise AmbiguousIdentifier(
                f"{token!r} is declared both as a semilattice element and as a letter"
            )
        if len(owners) > 1:
            names = ", ".join(lat.name for lat in owners)
            raise AmbiguousIdentifier(f"{token!r} is an element of several semilattices: {names}")
        if owners:
            return "element", owners[0]
        return "var", None
