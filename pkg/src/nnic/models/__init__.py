"""Model families: unnormalized log densities plus derivative structure."""

from .base import ModelFamily
from .gaussian import NNGaussian1D
from .graphical import GGM, GraphSpec, LogGGM, TruncatedGGM
from .mixture import GaussianMixture1D, mixture_log_density
from .von_mises import BivariateVonMises

__all__ = [
    "ModelFamily",
    "NNGaussian1D",
    "GraphSpec",
    "GGM",
    "TruncatedGGM",
    "LogGGM",
    "BivariateVonMises",
    "GaussianMixture1D",
    "mixture_log_density",
]
