"""Optimal and minimax-robust interpolation of sequences with stationary increments."""

__version__ = "0.1.0"

from .errors import (
    IncInterpError,
    InfeasibleClassError,
    MissingObservationError,
    NumericalError,
    ValidationError,
)
from .increments import FunctionalSpec, IncrementSpec, coefficient_bundle
from .spectral import (
    CompositeDensity,
    GridDensity,
    ObservationModel,
    RationalDensity,
    density_from_dict,
    minimality_check,
)
from .fourier import build_matrices, fourier_coefficients
from .interpolator import (
    ObservationSeries,
    estimate,
    estimate_point,
    increment_weights,
    mse_integral,
    solve,
    solve_cointegrated,
    solve_noise_free,
    solve_point,
    spectral_characteristic,
    time_weights,
    transfer_function,
)
from .oracle import covariances, project
from .minimax import (
    DensityClass,
    LeastFavorablePair,
    MinimaxOptions,
    delta_under,
    least_favorable,
    least_favorable_cointegrated,
    verify_saddle,
)

__all__ = [name for name in dir() if not name.startswith("_")]
