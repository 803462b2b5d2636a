"""Independent reference computations used by the tests."""

import numpy as np


def brute_auroc(id_scores, ood_scores) -> float:
    a = np.asarray(id_scores, dtype=np.float64)[:, None]
    b = np.asarray(ood_scores, dtype=np.float64)[None, :]
    gt = int(np.count_nonzero(a > b))
    eq = int(np.count_nonzero(a == b))
    return (gt + 0.5 * eq) / (a.size * b.size)


def scan_far95(id_scores, ood_scores) -> float:
    """Try every observed score as threshold, smallest first; flag OOD when score <= threshold."""
    a = np.asarray(id_scores, dtype=np.float64)
    b = np.asarray(ood_scores, dtype=np.float64)
    for gamma in np.unique(np.concatenate([a, b])):
        # integer form of recall >= 0.95
        if 100 * np.count_nonzero(b <= gamma) >= 95 * b.size:
            return np.count_nonzero(a <= gamma) / a.size
    raise AssertionError("unreachable: the largest score always reaches full recall")


def tied_scores(rng: np.random.Generator, size: int) -> np.ndarray:
    """Scores on a coarse grid so ties are frequent."""
    levels = int(rng.integers(2, 12))
    return rng.integers(0, levels, size=size).astype(np.float64) / levels
