"""Fitting and model selection for non-normalized statistical models.

Models with intractable normalizing constants are fitted by noise
contrastive estimation (treating the constant as a free parameter) or by
score matching (which never needs it), and compared through information
criteria that estimate each fit's out-of-sample discrepancy, plus their
leave-one-out cross-validation analogues.
"""

from .baselines import aic, fit_ggm_mle, fit_gmm_em_1d
from .data import Dataset, Domain, read_csv, write_csv
from .exceptions import (
    CapabilityError,
    DataFormatError,
    DegenerateComponent,
    DomainError,
    EmptyFold,
    LineSearchFailure,
    NnicError,
    NoiseDensityZero,
    NonFiniteObjective,
    NotPositiveDefinite,
    OptimizationFailure,
    QuadratureNonConvergence,
    SingularMatrix,
)
from .models import (
    GGM,
    BivariateVonMises,
    GaussianMixture1D,
    GraphSpec,
    LogGGM,
    ModelFamily,
    NNGaussian1D,
    TruncatedGGM,
)
from .nce import (
    NceFit,
    b_hat,
    estimate_I_hat,
    estimate_J_hat,
    fit_nce,
    ncic1,
    ncic2,
    nce_loocv,
    nce_objective,
)
from .noise import (
    ExponentialProductNoise,
    GaussianNoise,
    NoiseDistribution,
    UniformTorusNoise,
    make_noise,
)
from .optim import OptProblem, OptResult, check_gradient, minimize_cg
from .sm import (
    SmFit,
    fit_sm_closed_form,
    fit_sm_generic,
    sm_I_hat,
    sm_J_hat,
    sm_loocv,
    smic,
    sm_loss,
)

__version__ = "0.1.0"

__all__ = [
    "aic",
    "fit_ggm_mle",
    "fit_gmm_em_1d",
    "Dataset",
    "Domain",
    "read_csv",
    "write_csv",
    "CapabilityError",
    "DataFormatError",
    "DegenerateComponent",
    "DomainError",
    "EmptyFold",
    "LineSearchFailure",
    "NnicError",
    "NoiseDensityZero",
    "NonFiniteObjective",
    "NotPositiveDefinite",
    "OptimizationFailure",
    "QuadratureNonConvergence",
    "SingularMatrix",
    "GGM",
    "BivariateVonMises",
    "GaussianMixture1D",
    "GraphSpec",
    "LogGGM",
    "ModelFamily",
    "NNGaussian1D",
    "TruncatedGGM",
    "NceFit",
    "b_hat",
    "estimate_I_hat",
    "estimate_J_hat",
    "fit_nce",
    "ncic1",
    "ncic2",
    "nce_loocv",
    "nce_objective",
    "ExponentialProductNoise",
    "GaussianNoise",
    "NoiseDistribution",
    "UniformTorusNoise",
    "make_noise",
    "OptProblem",
    "OptResult",
    "check_gradient",
    "minimize_cg",
    "SmFit",
    "fit_sm_closed_form",
    "fit_sm_generic",
    "sm_I_hat",
    "sm_J_hat",
    "sm_loocv",
    "smic",
    "sm_loss",
    "__version__",
]
