"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Raised when an operation would need a dense matrix above its size cap."""


class NumericError(ArithmeticError):
    """Raised on non-finite inputs or a numerically infeasible computation."""


class FactorizationError(NumericError):
    """Cholesky factorization hit a pivot below tolerance.

    Attributes
    ----------
    index : int
        0-based row at which the factorization failed.
    pivot : float
        Value of the offending pivot (before the square root).
    """

    def __init__(self, index, pivot, tol):
        self.index = int(index)
        self.pivot = float(pivot)
        self.tol = float(tol)
        super().__init__(
            f"matrix is not positive definite: pivot {self.pivot:.3e} at index "
            f"{self.index} is below tolerance {self.tol:.1e}"
        )


class NotPSDError(NumericError):
    """A matrix expected to be positive semi-definite has a negative eigenvalue."""

    def __init__(self, eigenvalue, tol):
        self.eigenvalue = float(eigenvalue)
        super().__init__(
            f"matrix is not positive semi-definite: eigenvalue {self.eigenvalue:.3e} < -{tol:.0e}"
        )
