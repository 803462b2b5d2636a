"""Scoring rules. Every score is oriented so that higher means more in-distribution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy.special import expit

from .simcore import GmmSpec, SampleSet

PROB_SUM_TOL = 1e-6
LOG_2PI = math.log(2.0 * math.pi)


class Detector(str, Enum):
    MSP_ORACLE = "msp_oracle"
    DENSITY_ORACLE = "density_oracle"


@dataclass(frozen=True)
class LinearPosterior:
    """``p(y=1 | x) = logistic(weights . x + bias)``."""

    weights: np.ndarray
    bias: float

    def logit(self, features: np.ndarray) -> np.ndarray:
        # Column-wise accumulation over nonzero weights only: each row's result
        # never depends on zero-weight columns, BLAS blocking or thread count.
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if x.shape[1] != self.weights.shape[0]:
            raise ValueError(f"dimension mismatch: features have {x.shape[1]} dims, weights {self.weights.shape[0]}")
        out = np.full(x.shape[0], float(self.bias))
        for j in np.flatnonzero(self.weights):
            out += x[:, j] * self.weights[j]
        return out

    def prob1(self, features: np.ndarray) -> np.ndarray:
        return expit(self.logit(features))


@dataclass(frozen=True)
class ScoreSet:
    """Per-example scores, higher = more in-distribution.

    ``order_key``, when set, is a strictly increasing function of the exact
    score that stays distinguishable where ``values`` rounds to a constant
    (MSP saturates at 1.0 once |logit| > ~37). Metrics rank by it.
    """

    values: np.ndarray
    detector_name: str
    order_key: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{self.detector_name}: scores must be finite")
        object.__setattr__(self, "values", v)
        if self.order_key is not None:
            k = np.asarray(self.order_key, dtype=np.float64).ravel()
            if k.shape != v.shape or not np.all(np.isfinite(k)):
                raise ValueError(f"{self.detector_name}: order_key must be finite and match values")
            object.__setattr__(self, "order_key", k)

    @property
    def ranking(self) -> np.ndarray:
        return self.values if self.order_key is None else self.order_key

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class TokenLogProbs:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size == 0:
            raise ValueError("token log-prob sequence is empty")
        if not np.all(np.isfinite(v)):
            raise ValueError("token log-probs must be finite")
        if np.any(v > 0):
            raise ValueError(f"token log-probs must be <= 0, got max {v.max()}")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    def repeated(self, k: int) -> "TokenLogProbs":
        return TokenLogProbs(np.tile(self.values, k))


def fit_lda(id_spec: GmmSpec) -> LinearPosterior:
    """Bayes-optimal linear posterior for the equal, isotropic covariance mixture."""
    s = id_spec.covariance_scale
    c0, c1 = id_spec.centroid_0, id_spec.centroid_1
    weights = (c1 - c0) / s
    bias = -(c1 @ c1 - c0 @ c0) / (2.0 * s) + math.log(id_spec.class1_prior / (1.0 - id_spec.class1_prior))
    weights.setflags(write=False)
    return LinearPosterior(weights, float(bias))


def msp_score(class_probs) -> float:
    p = np.asarray(class_probs, dtype=np.float64).ravel()
    if p.size == 0:
        raise ValueError("class probability vector is empty")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("class probabilities must be finite and nonnegative")
    total = float(p.sum())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"class probabilities sum to {total!r}, not 1 within {PROB_SUM_TOL}")
    return float(p.max())


def _component_logpdf(spec: GmmSpec, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = spec.covariance_scale
    d = spec.total_dims
    norm = -0.5 * d * (LOG_2PI + math.log(s))
    sq0 = np.einsum("ij,ij->i", x - spec.centroid_0, x - spec.centroid_0)
    sq1 = np.einsum("ij,ij->i", x - spec.centroid_1, x - spec.centroid_1)
    return norm - 0.5 * sq0 / s, norm - 0.5 * sq1 / s


def density_scores(id_spec: GmmSpec, features: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[1] != id_spec.total_dims:
        raise ValueError(f"dimension mismatch: got {x.shape[1]} dims, spec has {id_spec.total_dims}")
    l0, l1 = _component_logpdf(id_spec, x)
    prior1 = id_spec.class1_prior
    return np.logaddexp(math.log1p(-prior1) + l0, math.log(prior1) + l1)


def density_score(id_spec: GmmSpec, x) -> float:
    """Exact log mixture density of one point under the ID law."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("density_score expects a single vector")
    return float(density_scores(id_spec, x[None, :])[0])


def _as_tokens(tokens) -> TokenLogProbs:
    return tokens if isinstance(tokens, TokenLogProbs) else TokenLogProbs(tokens)


def ppl_score(tokens) -> float:
    """Geometric-mean token probability, ``exp(mean log p)``; in (0, 1].

    This is the reciprocal of conventional perplexity (see ``perplexity``).
    """
    v = _as_tokens(tokens).values
    # exact rational mean: k-fold repetition yields the identical float
    exact = sum(map(Fraction, v.tolist()), Fraction(0)) / v.size
    return math.exp(float(exact))


def perplexity(tokens) -> float:
    return 1.0 / ppl_score(tokens)


def seqprob_score(tokens) -> float:
    """Summed token log-likelihood; length-biased by construction."""
    return math.fsum(_as_tokens(tokens).values)


def score_sampleset(model, samples: SampleSet, detector: Detector | str) -> ScoreSet:
    """Vectorised oracle scoring.

    ``model`` is a ``LinearPosterior`` for ``msp_oracle`` (a ``GmmSpec`` is
    accepted and fitted) and a ``GmmSpec`` for ``density_oracle``.
    """
    detector = Detector(detector)
    if detector is Detector.MSP_ORACLE:
        posterior = fit_lda(model) if isinstance(model, GmmSpec) else model
        # max(p, 1 - p) == logistic(|logit|); |logit| orders it exactly
        margin = np.abs(posterior.logit(samples.features))
        return ScoreSet(expit(margin), detector.value, order_key=margin)
    else:
        if not isinstance(model, GmmSpec):
            raise TypeError("density_oracle needs the ID GmmSpec")
        values = density_scores(model, samples.features)
    return ScoreSet(values, detector.value)
