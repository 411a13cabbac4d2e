"""Billiard dynamics, Laplace spectra, and Weyl-remainder diagnostics."""

from .billiard import (AdmissibilityReport, LengthSpectrum, OrbitFamily,
                       PhasePoint, admissibility_check, billiard_map,
                       billiard_map_differential, find_periodic_orbits,
                       length_spectrum)
from .geometry import (BoundaryCurve, DomainSpec, HigherDomainSpec,
                       area_perimeter, boundary_point, build_domain,
                       rellich_weight, width_profile)
from .mps import MpsOptions, MpsSolver, mps_spectrum
from .spectra import (DIRICHLET, NEUMANN, BoundaryTrace, EigenBoundaryData,
                      Spectrum, ball_spectrum, box_spectrum,
                      disk_eigen_boundary_data, disk_spectrum, rellich_check)
from .trace import (OscillationReport, TestFunction, TraceSeries,
                    build_test_function, geometric_amplitude,
                    length_spectrum_peaks, oscillation_analysis, plateau_band,
                    smoothed_trace)
from .weyl import (ExponentFit, RemainderSeries, ThirdTermReport, WeylContext,
                   counting_function, dyadic_average, dyadic_windows,
                   exponent_fit, remainder_series, third_term_coefficients,
                   weyl_remainder)

__version__ = "0.1.0"
