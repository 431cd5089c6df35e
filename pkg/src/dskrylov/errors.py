"""Exception types shared across the package.

Indices carried by exceptions are 0-based, like everything else in the
Python API.
"""


class DsKrylovError(Exception):
    """Base class for all errors raised by dskrylov."""


class RankDeficient(DsKrylovError):
    def __init__(self, column, detail=""):
        self.column = column
        super().__init__(f"numerically rank deficient at column {column}" + (f": {detail}" if detail else ""))


class SingularTriangular(DsKrylovError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"zero diagonal entry at row {index}")


class NoConvergence(DsKrylovError):
    pass


class Overflow(DsKrylovError):
    pass


class DimensionMismatch(DsKrylovError, ValueError):
    pass


class IndexOutOfRange(DsKrylovError, IndexError):
    pass


class Breakdown(DsKrylovError):
    """The Krylov recurrence hit an invariant subspace.

    ``index`` is the (0-based) column that could not be formed; ``basis``
    holds the columns built before it.
    """

    def __init__(self, index, basis=None):
        self.index = index
        self.basis = basis
        super().__init__(f"Krylov breakdown while forming column {index}")


class SingularInterpolation(DsKrylovError):
    def __init__(self, step):
        self.step = step
        super().__init__(f"singular interpolation system at DEIM step {step}")


class Exhausted(DsKrylovError):
    pass


class EmptyGraph(DsKrylovError):
    pass


class ParseError(DsKrylovError, ValueError):
    def __init__(self, line, msg):
        self.line = line
        super().__init__(f"line {line}: {msg}")
