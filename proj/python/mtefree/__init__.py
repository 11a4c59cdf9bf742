"""Marginal treatment effects without instrumental variables.

Thin Python layer over the C++ core: simulate designs with a known MTE,
fit the two-step estimators (separate or adapted-LIV), assemble the MTE
curve and the ATE/TT/TUT/LATE summaries, and run assumption diagnostics.
"""

from mtefree._core import (
    ConfigError,
    EstimationError,
    OracleMte,
    PropensityFit,
    Sample,
    __version__,
    assemble_mte,
    dgp_presets,
    diagnose,
    estimate,
    fit_propensity,
    kernel_eval,
    liv_local_linear,
    liv_pairwise,
    load_csv,
    local_linear_g,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    pairwise_difference_beta,
    parametric_second_step,
    rule_of_thumb,
    rule_of_thumb_derivative,
    simulate,
    split_cells,
    trim,
)

__all__ = [
    "ConfigError",
    "EstimationError",
    "OracleMte",
    "PropensityFit",
    "Sample",
    "__version__",
    "assemble_mte",
    "dgp_presets",
    "diagnose",
    "estimate",
    "fit_propensity",
    "kernel_eval",
    "liv_local_linear",
    "liv_pairwise",
    "load_csv",
    "local_linear_g",
    "normal_cdf",
    "normal_pdf",
    "normal_quantile",
    "pairwise_difference_beta",
    "parametric_second_step",
    "rule_of_thumb",
    "rule_of_thumb_derivative",
    "simulate",
    "split_cells",
    "trim",
]
