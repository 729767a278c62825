"""Spatial logistic Gaussian process density fields and quantile-improvement design."""

from ._slgp import (
    Ensemble,
    Model,
    __version__,
    basis_info,
    eqi,
    estimate,
    expected_improvement,
    f1,
    f2,
    ish_distance,
    posterior_mean_field,
    quantile_curve,
    reference_field,
    run_cli,
    sample,
)

__all__ = [
    "Ensemble",
    "Model",
    "__version__",
    "basis_info",
    "eqi",
    "estimate",
    "expected_improvement",
    "f1",
    "f2",
    "ish_distance",
    "posterior_mean_field",
    "quantile_curve",
    "reference_field",
    "run_cli",
    "sample",
]
