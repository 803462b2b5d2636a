"""AUROC, FAR95 and trial aggregation.

Scores follow the "higher = more in-distribution" orientation and OOD is the
positive class: an example is flagged OOD when its score is at or below the
threshold.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import norm, rankdata

RECALL_TARGET_PERCENT = 95


@dataclass(frozen=True)
class EvalReport:
    auroc: float
    far95: float
    n_id: int
    n_ood: int
    detector_name: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SweepCell:
    sweep_parameter: float
    detector_name: str
    reports: tuple[EvalReport, ...]
    mean_auroc: float
    ci_halfwidth: float
    mean_far95: float = float("nan")
    n_semantic: int | None = None


def _values(scores) -> np.ndarray:
    v = getattr(scores, "ranking", scores)
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("score set is empty")
    if not np.all(np.isfinite(v)):
        raise ValueError("scores must be finite")
    return v


def auroc(id_scores, ood_scores) -> float:
    """P(s_id > s_ood) + 0.5 P(s_id == s_ood), via the Mann-Whitney rank sum."""
    a, b = _values(id_scores), _values(ood_scores)
    n, m = a.size, b.size
    ranks = rankdata(np.concatenate([a, b]), method="average")
    # average ranks are multiples of 1/2, so this sum is exact in float64
    u = float(ranks[:n].sum()) - n * (n + 1) / 2.0
    return u / (n * m)


def recall_rank(n_ood: int, percent: int = RECALL_TARGET_PERCENT) -> int:
    """1-based rank of the OOD score that first reaches the recall target: ceil(percent * M / 100)."""
    return -((-percent * n_ood) // 100)


def far95(id_scores, ood_scores) -> float:
    """Fraction of ID scores flagged at the smallest threshold giving >= 95% OOD recall."""
    a, b = _values(id_scores), _values(ood_scores)
    k = recall_rank(b.size)
    gamma = np.partition(b, k - 1)[k - 1]
    return float(np.count_nonzero(a <= gamma)) / a.size


def evaluate(id_scores, ood_scores, detector_name: str = "") -> EvalReport:
    if (getattr(id_scores, "order_key", None) is None) != (getattr(ood_scores, "order_key", None) is None):
        raise ValueError("both score sets must carry an order key, or neither")
    a, b = _values(id_scores), _values(ood_scores)
    name = detector_name or getattr(id_scores, "detector_name", "")
    return EvalReport(auroc(a, b), far95(a, b), int(a.size), int(b.size), name)


def z_value(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    if level == 0.95:
        return 1.96
    return float(norm.ppf(0.5 + level / 2.0))


def aggregate_trials(reports, level: float = 0.95, sweep_parameter: float = float("nan"),
                     n_semantic: int | None = None) -> SweepCell:
    """Mean AUROC with a normal-approximation confidence half-width."""
    reports = tuple(reports)
    if len(reports) < 2:
        raise ValueError(f"need at least 2 trial reports, got {len(reports)}")
    names = {r.detector_name for r in reports}
    if len(names) != 1:
        raise ValueError(f"reports mix detectors: {sorted(names)}")
    # exact rational moments: identical trials give exactly zero spread
    values = [Fraction(r.auroc) for r in reports]
    k = len(values)
    mean = sum(values, Fraction(0)) / k
    var = sum(((v - mean) ** 2 for v in values), Fraction(0)) / (k - 1)
    sd = math.sqrt(var)
    return SweepCell(
        sweep_parameter=float(sweep_parameter),
        detector_name=names.pop(),
        reports=reports,
        mean_auroc=float(mean),
        ci_halfwidth=z_value(level) * sd / math.sqrt(k),
        mean_far95=math.fsum(r.far95 for r in reports) / k,
        n_semantic=n_semantic,
    )
