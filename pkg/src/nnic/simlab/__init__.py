"""Simulation laboratory: seeded samplers, population quantities, experiments."""

from .experiments import (
    EXPERIMENTS,
    BiasCurve,
    ExperimentConfig,
    SelectionTable,
    run_experiment,
)
from .population import d_nce_population, d_sm_population, wald_ci
from .reports import result_to_dict, write_csv, write_json
from .rng import replicate_rng
from .samplers import (
    chain3_precision,
    contaminated_gaussian_pdf,
    sample_bivariate_von_mises,
    sample_contaminated_gaussian,
    sample_exp_product,
    sample_gmm_1d,
    sample_mvn_from_precision,
    sample_truncated_mvn,
)

__all__ = [
    "EXPERIMENTS",
    "BiasCurve",
    "ExperimentConfig",
    "SelectionTable",
    "run_experiment",
    "d_nce_population",
    "d_sm_population",
    "wald_ci",
    "result_to_dict",
    "write_csv",
    "write_json",
    "replicate_rng",
    "chain3_precision",
    "contaminated_gaussian_pdf",
    "sample_bivariate_von_mises",
    "sample_contaminated_gaussian",
    "sample_exp_product",
    "sample_gmm_1d",
    "sample_mvn_from_precision",
    "sample_truncated_mvn",
]
