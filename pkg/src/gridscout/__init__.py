"""gridscout: adaptive frame selection for video QA by posterior probing.

Frames are arranged on a K x K grid and probed along rows and columns
through a question-answering backend.  The outer product of the probe
confidences gives a per-question importance map whose distribution shape
sets the focused-pass frame budget in closed form.
"""

from gridscout.importance import (
    BudgetRule,
    ImportanceMap,
    ShapeStats,
    build_map,
    effective_budget,
    moments,
    shape_statistic,
)
from gridscout.kernels import ACTIVE_BACKEND
from gridscout.posterior import AnswerSpace, Posterior, ProbeRequest, probe_confidence
from gridscout.synthetic import SyntheticEpisode, synthetic_posterior

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND",
    "AnswerSpace",
    "BudgetRule",
    "ImportanceMap",
    "Posterior",
    "ProbeRequest",
    "ShapeStats",
    "SyntheticEpisode",
    "build_map",
    "effective_budget",
    "moments",
    "probe_confidence",
    "shape_statistic",
    "synthetic_posterior",
    "__version__",
]
