"""One operation per disclosure tactic.

Every tactic accepts a :class:`~disclosure.core.Representation` (or a bare
table, read as full disclosure) and returns a representation whose lineage
gains one step.  ``predict_ols`` and ``project_pca`` return two
representations: a model and a table.
"""

from ._common import ParameterError
from .modeling import (
    AdjustmentSpec,
    RankError,
    adjustment_curve,
    full_disclosure,
    magnitude_adjust,
    pca_loadings,
    power_iteration,
    predict_ols,
    project_pca,
    smooth_kde,
)
from .sampling import NoiseModel, noise, permute, subsample
from .summarizing import (
    EqualFrequency,
    EqualWidth,
    ExplicitEdges,
    StatSpec,
    aggregate,
    band,
    categorize,
    classify,
    derive,
    encode_select,
    grid_quantile,
    intervals_from_edges,
    locate,
    parse_expression,
)

__all__ = [
    "AdjustmentSpec", "EqualFrequency", "EqualWidth", "ExplicitEdges", "NoiseModel", "ParameterError",
    "RankError", "StatSpec", "adjustment_curve", "aggregate", "band", "categorize", "classify", "derive",
    "encode_select", "full_disclosure", "grid_quantile", "intervals_from_edges", "locate",
    "magnitude_adjust", "noise", "parse_expression", "pca_loadings", "permute", "power_iteration",
    "predict_ols", "project_pca", "smooth_kde", "subsample",
]
