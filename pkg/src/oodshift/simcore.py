"""Two-class Gaussian mixture with a semantic/background feature split.

Class-conditional laws are ``N(centroid_i, covariance_scale * I)``. Semantic
dimensions carry ``+/- semantic_magnitude`` (sign by class); background
dimensions share one value across both classes, so they carry no label
information. Shift constructors return new specs; nothing is mutated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .seeding import make_rng


class Origin(str, Enum):
    IN_DISTRIBUTION = "id"
    OUT_OF_DISTRIBUTION = "ood"


class ShiftKind(str, Enum):
    SEMANTIC = "semantic"
    BACKGROUND = "background"


@dataclass(frozen=True)
class FeaturePartition:
    total_dims: int
    semantic_indices: tuple[int, ...]
    background_indices: tuple[int, ...]

    def __post_init__(self):
        if self.total_dims < 1:
            raise ValueError(f"total_dims must be positive, got {self.total_dims}")
        sem, bg = set(self.semantic_indices), set(self.background_indices)
        if len(sem) != len(self.semantic_indices) or len(bg) != len(self.background_indices):
            raise ValueError("index sets contain duplicates")
        if sem & bg:
            raise ValueError("semantic and background indices overlap")
        if sem | bg != set(range(self.total_dims)):
            raise ValueError("semantic and background indices must cover 0..d-1")
        if not sem:
            raise ValueError("at least one semantic dimension is required")

    @property
    def n_semantic(self) -> int:
        return len(self.semantic_indices)

    @property
    def n_background(self) -> int:
        return len(self.background_indices)


@dataclass(frozen=True)
class GmmSpec:
    partition: FeaturePartition
    centroid_0: np.ndarray
    centroid_1: np.ndarray
    covariance_scale: float = 1.0
    class1_prior: float = 0.5
    semantic_magnitude: float = 1.0

    def __post_init__(self):
        d = self.partition.total_dims
        for name in ("centroid_0", "centroid_1"):
            c = np.asarray(getattr(self, name), dtype=np.float64)
            if c.shape != (d,):
                raise ValueError(f"{name} must have length {d}, got shape {c.shape}")
            c = c.copy()
            c.setflags(write=False)
            object.__setattr__(self, name, c)
        if not self.covariance_scale > 0:
            raise ValueError("covariance_scale must be positive")
        if not 0.0 < self.class1_prior < 1.0:
            raise ValueError("class1_prior must lie in (0, 1)")
        bg = list(self.partition.background_indices)
        if not np.array_equal(self.centroid_0[bg], self.centroid_1[bg]):
            raise ValueError("centroids must agree on every background index")

    @property
    def total_dims(self) -> int:
        return self.partition.total_dims

    def __eq__(self, other):
        if not isinstance(other, GmmSpec):
            return NotImplemented
        return (
            self.partition == other.partition
            and np.array_equal(self.centroid_0, other.centroid_0)
            and np.array_equal(self.centroid_1, other.centroid_1)
            and self.covariance_scale == other.covariance_scale
            and self.class1_prior == other.class1_prior
            and self.semantic_magnitude == other.semantic_magnitude
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "partition": {
                "total_dims": self.partition.total_dims,
                "semantic_indices": sorted(self.partition.semantic_indices),
                "background_indices": sorted(self.partition.background_indices),
            },
            "centroid_0": self.centroid_0.tolist(),
            "centroid_1": self.centroid_1.tolist(),
            "covariance_scale": self.covariance_scale,
            "class1_prior": self.class1_prior,
            "semantic_magnitude": self.semantic_magnitude,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GmmSpec":
        p = data["partition"]
        partition = FeaturePartition(
            int(p["total_dims"]),
            tuple(int(i) for i in p["semantic_indices"]),
            tuple(int(i) for i in p["background_indices"]),
        )
        return cls(
            partition,
            np.asarray(data["centroid_0"], dtype=np.float64),
            np.asarray(data["centroid_1"], dtype=np.float64),
            float(data.get("covariance_scale", 1.0)),
            float(data.get("class1_prior", 0.5)),
            float(data.get("semantic_magnitude", 1.0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GmmSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ShiftSpec:
    kind: ShiftKind
    seed: int = 0
    overlap_rate: float | None = None
    displacement_alpha: float | None = None

    def apply(self, id_spec: GmmSpec) -> GmmSpec:
        if self.kind is ShiftKind.SEMANTIC:
            return semantic_shift_spec(id_spec, self.overlap_rate, self.seed)
        return background_shift_spec(id_spec, self.displacement_alpha)


@dataclass(frozen=True)
class SampleSet:
    features: np.ndarray
    labels: np.ndarray
    origin: Origin = Origin.IN_DISTRIBUTION

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("row count and label count differ")

    def __len__(self) -> int:
        return self.features.shape[0]

    def translated(self, z: np.ndarray) -> "SampleSet":
        return SampleSet(self.features + np.asarray(z, dtype=np.float64), self.labels, self.origin)


def _centroids(d: int, semantic: list[int], magnitude: float, background_value: np.ndarray | None = None):
    c1 = np.zeros(d) if background_value is None else background_value.astype(np.float64).copy()
    c0 = c1.copy()
    c1[semantic] = magnitude
    c0[semantic] = -magnitude
    return c0, c1


def _partition(d: int, semantic) -> FeaturePartition:
    sem = tuple(sorted(int(i) for i in semantic))
    chosen = set(sem)
    return FeaturePartition(d, sem, tuple(i for i in range(d) if i not in chosen))


def build_id_spec(total_dims: int, n_semantic: int, semantic_magnitude: float = 1.0, seed: int = 0) -> GmmSpec:
    """In-distribution spec with ``n_semantic`` randomly placed label-bearing dims."""
    if not 1 <= n_semantic < total_dims:
        raise ValueError(
            f"need 1 <= n_semantic < total_dims (got n_semantic={n_semantic}, total_dims={total_dims}); "
            "at least one background dimension must remain"
        )
    if not semantic_magnitude > 0:
        raise ValueError(f"semantic_magnitude must be positive, got {semantic_magnitude}")
    rng = make_rng(seed)
    semantic = rng.choice(total_dims, size=n_semantic, replace=False)
    partition = _partition(total_dims, semantic)
    c0, c1 = _centroids(total_dims, list(partition.semantic_indices), semantic_magnitude)
    return GmmSpec(partition, c0, c1, 1.0, 0.5, float(semantic_magnitude))


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def semantic_shift_spec(id_spec: GmmSpec, overlap_rate: float, seed: int) -> GmmSpec:
    """Keep ``round(overlap_rate * n)`` ID semantic dims; relocate the rest into ID background dims."""
    if overlap_rate is None or not 0.0 <= overlap_rate <= 1.0:
        raise ValueError(f"overlap_rate must lie in [0, 1], got {overlap_rate}")
    part = id_spec.partition
    n, m = part.n_semantic, part.n_background
    n_kept = round_half_up(overlap_rate * n)
    n_moved = n - n_kept
    if n_moved > m:
        raise ValueError(f"cannot relocate {n_moved} semantic dims into {m} background dims")
    rng = make_rng(seed)
    kept = rng.choice(np.asarray(part.semantic_indices), size=n_kept, replace=False)
    moved = rng.choice(np.asarray(part.background_indices), size=n_moved, replace=False)
    partition = _partition(part.total_dims, np.concatenate([kept, moved]))
    # background value of the ID spec is shared by both classes
    base = id_spec.centroid_1.copy()
    base[list(part.semantic_indices)] = 0.0
    base[list(partition.semantic_indices)] = 0.0
    c0, c1 = _centroids(part.total_dims, list(partition.semantic_indices), id_spec.semantic_magnitude, base)
    return GmmSpec(partition, c0, c1, id_spec.covariance_scale, id_spec.class1_prior, id_spec.semantic_magnitude)


def background_displacement(id_spec: GmmSpec, alpha: float) -> np.ndarray:
    """``alpha`` on every background index, zero on semantic ones."""
    z = np.zeros(id_spec.total_dims)
    z[list(id_spec.partition.background_indices)] = alpha
    return z


def background_shift_spec(id_spec: GmmSpec, alpha: float) -> GmmSpec:
    if alpha is None or not alpha >= 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    z = background_displacement(id_spec, alpha)
    return GmmSpec(
        id_spec.partition,
        id_spec.centroid_0 + z,
        id_spec.centroid_1 + z,
        id_spec.covariance_scale,
        id_spec.class1_prior,
        id_spec.semantic_magnitude,
    )


def sample(spec: GmmSpec, count: int, seed: int, origin: Origin = Origin.IN_DISTRIBUTION) -> SampleSet:
    """Draw ``count`` labeled rows; a pure function of ``(spec, count, seed)``.

    Labels and noise come from one Philox stream in a fixed order (labels
    first, then a row-major noise block), so two specs that differ only by a
    translation produce samples that differ only by that translation.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = make_rng(seed)
    labels = (rng.random(count) < spec.class1_prior).astype(np.int8)
    noise = rng.standard_normal((count, spec.total_dims))
    if spec.covariance_scale != 1.0:
        noise *= math.sqrt(spec.covariance_scale)
    centroids = np.stack([spec.centroid_0, spec.centroid_1])
    features = centroids[labels] + noise
    return SampleSet(features, labels, origin)
