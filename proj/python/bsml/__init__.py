"""Bayesian sparse reduced-rank multi-response regression."""

from ._core import (
    NumericalError,
    default_penalties,
    estimate_rank,
    evaluate,
    fit,
    generate,
    postprocess,
    reduce_rank,
    run_study,
    select_rows,
)

__all__ = [
    "NumericalError",
    "default_penalties",
    "estimate_rank",
    "evaluate",
    "fit",
    "generate",
    "postprocess",
    "reduce_rank",
    "run_study",
    "select_rows",
]
__version__ = "0.1.0"
