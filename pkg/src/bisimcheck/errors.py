"""Exception types shared across the package."""


class BisimcheckError(Exception):
    """Base class for every failure this package raises on purpose."""


class ParseError(BisimcheckError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(f"{message}{where}")


class SpecError(BisimcheckError):
    """A specification file is malformed beyond single-token syntax."""

    def __init__(self, message, line=None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


# -- semilattice validation -------------------------------------------------

class LatticeError(BisimcheckError):
    pass


class UnknownElement(LatticeError):
    pass


class MissingJoinEntry(LatticeError):
    pass


class NotIdempotent(LatticeError):
    pass


class NotCommutative(LatticeError):
    pass


class NotAssociative(LatticeError):
    pass


class BottomNotNeutral(LatticeError):
    pass


# -- name resolution and typing ----------------------------------------------

class UnknownName(BisimcheckError):
    pass


class AmbiguousIdentifier(BisimcheckError):
    pass


class NotClosed(BisimcheckError):
    def __init__(self, variables):
        self.variables = tuple(sorted(variables))
        super().__init__(f"expression is not closed; free variables: {', '.join(self.variables)}")


class NotGuarded(BisimcheckError):
    pass


class IllTyped(BisimcheckError):
    pass


# -- evaluation --------------------------------------------------------------

class IngredientMismatch(BisimcheckError):
    pass


class UnguardedRecursion(BisimcheckError):
    pass


class StateLimitExceeded(BisimcheckError):
    def __init__(self, limit):
        self.limit = limit
        super().__init__(
            f"state limit of {limit} exceeded during synthesis; "
            f"raise --max-states or check the normalization flags"
        )


class FunctorMismatch(BisimcheckError):
    pass
