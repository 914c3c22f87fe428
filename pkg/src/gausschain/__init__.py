"""O(d)-storage Markov chain sampling of high-dimensional Gaussian vectors."""

from ._backend import name as backend_name
from .baseline import CholeskyFactor, cholesky, mc_estimate, sample_exact
from .chain import ChainState, DeterministicCycle, UniformRandom, run, run_coupled, step
from .covariance import (
    CovarianceModel,
    DenseCorrelation,
    IdentityCorrelation,
    PoweredExponentialKernel,
    ScaledExponentialKernel,
    from_descriptor,
    grid_locations,
    temperature_model,
    validate,
)
from .errors import CapacityError, FactorizationError, NotPSDError, NumericError
from .estimators import (
    MseReport,
    burnin_bias_bound,
    burnin_delta,
    burnin_mse_bound,
    estimate_mse,
    kappa_prime,
    mcmc_estimate,
    mse_bound,
    wasserstein_bound,
)
from .functionals import BasketCall, Constant, Coordinate, EuclideanNorm, IndicatorBelow, Max
from .rng import RngStream

__version__ = "0.1.0"
