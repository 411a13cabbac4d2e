"""Exception hierarchy shared across the package."""


class WeylscopeError(Exception):
    """Base class for all package-specific failures."""


# geometry
class NonConvex(WeylscopeError):
    """Support function has non-positive curvature radius somewhere."""


class NotStarShaped(WeylscopeError):
    """Boundary weight <q, nu_q> is non-positive somewhere."""


class QuadratureFailure(WeylscopeError):
    """Adaptive quadrature did not reach the requested tolerance."""


# billiard
class GlancingInput(WeylscopeError):
    """Phase point too close to the glancing set |eta| = 1."""


class IntersectionFailure(WeylscopeError):
    """Forward boundary intersection root-find did not converge."""


class NoOrbitFound(WeylscopeError):
    """All multi-starts of the periodic-orbit search diverged."""


class SpectrumTooShort(WeylscopeError):
    """Length spectrum does not cover the requested isolation window."""


class IncompleteSweep(UserWarning):
    """(k, m) sweep cap reached before exhausting lengths <= L_max."""


# spectra
class BasisDeficiency(WeylscopeError):
    """Subspace-angle floor too high; the trial basis is too small."""


class MissedEigenvalueSuspicion(WeylscopeError):
    """Eigenvalue counts drifted outside the two-term Weyl corridor."""


class MissingNormalization(WeylscopeError):
    """Boundary trace data lacks the interior L2 normalization."""


# weyl
class BeyondValidity(WeylscopeError):
    """Query beyond the spectrum's certified validity ceiling."""


class DegenerateFit(WeylscopeError):
    """Exponent fit input contains non-positive averages."""


class UnsupportedKind(WeylscopeError):
    """Operation not defined for this domain kind."""


# trace
class GridTooShort(WeylscopeError):
    """Trace grid too short or too narrow for oscillation analysis."""


class EpsilonTooLarge(WeylscopeError):
    """Test-function support would contain the origin (needs eps < T)."""


class IsolatedFamily(WeylscopeError):
    """Amplitude integral undefined for an isolated (d=0) orbit."""


# cli / report
class MissingArtifact(WeylscopeError):
    """Report generation found no usable run artifacts."""


class ConfigError(WeylscopeError):
    """Experiment configuration failed validation."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")
