"""Exception hierarchy shared by all substrat modules."""


class SubstratError(Exception):
    """Base class for domain errors raised by this package."""

    @property
    def name(self) -> str:
        return type(self).__name__


class NotAntisymmetric(SubstratError):
    """Structure constants violate c[l][i][j] = -c[l][j][i]."""


class SecondLayerDegenerate(SubstratError):
    """The matrices J of the raw dual basis are linearly dependent."""


class UnsupportedDimensions(SubstratError):
    """No builtin group exists for the requested parameters."""


class NearPole(SubstratError):
    """An eigenvalue argument is too close to a pole of z/tan z or z/sin z."""


class BranchRegionViolated(SubstratError):
    """The argument leaves the region where the square-root branch is fixed."""


class InvalidTime(SubstratError):
    """Heat-kernel time parameter with nonpositive real part."""


class GridTooCoarse(SubstratError):
    """Self-convergence estimate exceeds the requested tolerance."""


class SeriesDiverges(SubstratError):
    """Power-series evaluation requested outside its radius of convergence."""


class NonGenericDirection(SubstratError):
    """A dual direction does not attain the generic eigenvalue count."""


class BadAnchorVector(SubstratError):
    """Anchor vector has (near-)zero projection on some eigenspace."""


class FiltrationNotTerminating(SubstratError):
    """Filtration did not reach zero within the theoretical bound."""


class SearchFailed(SubstratError):
    """Critical-point search exhausted its grid without certifying."""

    def __init__(self, message, best_margin=None, best_epsilon=None):
        super().__init__(message)
        self.best_margin = best_margin
        self.best_epsilon = best_epsilon


class NewtonDiverged(SubstratError):
    """Newton iteration for the critical point did not converge."""


class DegenerateHessian(SubstratError):
    """Phase Hessian determinant below tolerance (or not positive definite)."""


class NonpositiveValue(SubstratError):
    """Power-law fit requires strictly positive sample values."""


class NonGenericMu(SubstratError):
    """Eigenvalue clusters of -J_mu^2 are ambiguous at the requested tolerance."""


class DegreeInconsistent(SubstratError):
    """Numeric degree detection returned non-integral or unstable results."""
