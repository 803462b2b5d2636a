"""Semantic-overlap and background-displacement sweeps over the oracle detectors.

Seeding scheme (see ``seeding.derive_seed``):

* semantic sweep, trial ``t``: ID spec ``(m, "semantic", t, "id_spec")``,
  ID sample ``(..., t, "id_sample")``, OOD sample ``(..., t, "ood_sample")``,
  overlap selection ``(m, "semantic", level_index, t, "shift")``.
* background sweep, split ``s`` and trial ``t``: ``(m, "background", s, t, <stream>)``
  for the ID spec, ID sample and OOD sample.

Sample streams are shared across the overlap/alpha axis of a trial (common
random numbers), so differences between grid points reflect the shift, not
resampling noise. Work units are independent; results are ordered by
(cell, trial) index, so worker count never changes the output.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from .detectors import Detector, fit_lda, score_sampleset
from .metrics import EvalReport, SweepCell, aggregate_trials, evaluate
from .seeding import derive_seed
from .simcore import (
    Origin,
    background_shift_spec,
    build_id_spec,
    sample,
    semantic_shift_spec,
)

SCHEMA_VERSION = 1
DETECTORS = (Detector.MSP_ORACLE, Detector.DENSITY_ORACLE)
CSV_COLUMNS = ["sweep", "n_semantic", "overlap_or_alpha", "detector", "trial", "auroc", "far95"]

DEFAULT_OVERLAP_GRID = [round(0.1 * i, 1) for i in range(11)]
DEFAULT_ALPHA_GRID = [0.05, 0.1, 0.2, 0.5, 1.0]
DEFAULT_DIMS_SPLITS = list(range(20, 200, 20))


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    total_dims: int = 200
    n_semantic: int = 40
    samples_per_side: int = 10_000
    n_trials: int = 20
    master_seed: int = 0
    grid: list[float] | None = None
    dims_splits: list[int] = field(default_factory=lambda: list(DEFAULT_DIMS_SPLITS))
    semantic_magnitude: float = 1.0
    schema_version: int = SCHEMA_VERSION

    def validate(self, sweep: str | None = None) -> "SweepConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version} (expected {SCHEMA_VERSION})")
        if self.total_dims < 2:
            raise ConfigError("total_dims must be >= 2")
        if self.samples_per_side < 1:
            raise ConfigError("samples_per_side must be >= 1")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if not self.semantic_magnitude > 0:
            raise ConfigError("semantic_magnitude must be positive")
        grid = self.grid_for(sweep) if sweep else self.grid
        if grid is not None:
            if not grid:
                raise ConfigError("grid must be nonempty")
            if list(grid) != sorted(grid):
                raise ConfigError(f"grid must be sorted ascending, got {grid}")
        if sweep == "semantic":
            if not 1 <= self.n_semantic < self.total_dims:
                raise ConfigError("n_semantic must satisfy 1 <= n_semantic < total_dims")
            if any(not 0.0 <= r <= 1.0 for r in grid):
                raise ConfigError(f"overlap grid must lie in [0, 1], got {grid}")
        if sweep == "background":
            if not self.dims_splits:
                raise ConfigError("dims_splits must be nonempty")
            if any(not 1 <= n < self.total_dims for n in self.dims_splits):
                raise ConfigError(f"every dims split must leave m >= 1 and n >= 1, got {self.dims_splits}")
            if any(a < 0 for a in grid):
                raise ConfigError(f"alpha grid must be nonnegative, got {grid}")
        return self

    def grid_for(self, sweep: str) -> list[float]:
        if self.grid is not None:
            return [float(g) for g in self.grid]
        return list(DEFAULT_OVERLAP_GRID if sweep == "semantic" else DEFAULT_ALPHA_GRID)

    def resolved(self, sweep: str) -> dict:
        d = asdict(self)
        d["grid"] = self.grid_for(sweep)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        for name in ("total_dims", "n_semantic", "samples_per_side", "n_trials", "master_seed", "schema_version"):
            if not isinstance(getattr(cfg, name), int) or isinstance(getattr(cfg, name), bool):
                raise ConfigError(f"{name} must be an integer")
        return cfg


@dataclass
class SweepResult:
    sweep: str
    config: SweepConfig
    cells: list[SweepCell]

    def cell(self, detector: str, parameter: float, n_semantic: int | None = None) -> SweepCell:
        for c in self.cells:
            if (c.detector_name == Detector(detector).value and math.isclose(c.sweep_parameter, parameter)
                    and (n_semantic is None or c.n_semantic == n_semantic)):
                return c
        raise KeyError((detector, parameter, n_semantic))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in self.cells:
            for t, rep in enumerate(c.reports):
                w.writerow([self.sweep, c.n_semantic, f"{c.sweep_parameter:.6f}", c.detector_name, t,
                            f"{rep.auroc:.6f}", f"{rep.far95:.6f}"])
        return buf.getvalue()

    def summary(self) -> dict:
        rows = []
        for c in self.cells:
            row = {
                "n_semantic": c.n_semantic,
                "parameter": c.sweep_parameter,
                "detector": c.detector_name,
                "mean_auroc": c.mean_auroc,
                "ci_halfwidth": c.ci_halfwidth,
                "mean_far95": c.mean_far95,
                "n_trials": len(c.reports),
            }
            if self.sweep == "semantic":
                row["overlap_rate"] = c.sweep_parameter
                row["shift_strength"] = 1.0 - c.sweep_parameter
            else:
                row["alpha"] = c.sweep_parameter
            rows.append(row)
        return {"sweep": self.sweep, "config": self.config.resolved(self.sweep), "cells": rows}


def _score_both(id_spec, posterior, samples) -> dict[Detector, object]:
    return {
        Detector.MSP_ORACLE: score_sampleset(posterior, samples, Detector.MSP_ORACLE),
        Detector.DENSITY_ORACLE: score_sampleset(id_spec, samples, Detector.DENSITY_ORACLE),
    }


def _semantic_trial(cfg: SweepConfig, grid: list[float], trial: int) -> dict:
    m = cfg.master_seed
    id_spec = build_id_spec(cfg.total_dims, cfg.n_semantic, cfg.semantic_magnitude,
                            derive_seed(m, "semantic", trial, "id_spec"))
    posterior = fit_lda(id_spec)
    id_scores = _score_both(id_spec, posterior,
                            sample(id_spec, cfg.samples_per_side, derive_seed(m, "semantic", trial, "id_sample")))
    ood_seed = derive_seed(m, "semantic", trial, "ood_sample")
    out = {}
    for li, r in enumerate(grid):
        ood_spec = semantic_shift_spec(id_spec, r, derive_seed(m, "semantic", li, trial, "shift"))
        ood = sample(ood_spec, cfg.samples_per_side, ood_seed, Origin.OUT_OF_DISTRIBUTION)
        ood_scores = _score_both(id_spec, posterior, ood)
        for det in DETECTORS:
            out[(li, det)] = evaluate(id_scores[det], ood_scores[det], det.value)
    return out


def _background_unit(cfg: SweepConfig, grid: list[float], si: int, trial: int) -> dict:
    m = cfg.master_seed
    n = cfg.dims_splits[si]
    id_spec = build_id_spec(cfg.total_dims, n, cfg.semantic_magnitude,
                            derive_seed(m, "background", si, trial, "id_spec"))
    posterior = fit_lda(id_spec)
    id_scores = _score_both(id_spec, posterior,
                            sample(id_spec, cfg.samples_per_side, derive_seed(m, "background", si, trial, "id_sample")))
    ood_seed = derive_seed(m, "background", si, trial, "ood_sample")
    out = {}
    for ai, alpha in enumerate(grid):
        ood = sample(background_shift_spec(id_spec, alpha), cfg.samples_per_side, ood_seed,
                     Origin.OUT_OF_DISTRIBUTION)
        ood_scores = _score_both(id_spec, posterior, ood)
        for det in DETECTORS:
            out[(ai, det)] = evaluate(id_scores[det], ood_scores[det], det.value)
    return out


def _map(fn, jobs, threads: int):
    if threads <= 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda j: fn(*j), jobs))


def run_semantic_sweep(config: SweepConfig, threads: int = 1) -> SweepResult:
    config.validate("semantic")
    grid = config.grid_for("semantic")
    per_trial = _map(_semantic_trial, [(config, grid, t) for t in range(config.n_trials)], threads)
    cells = []
    for li, r in enumerate(grid):
        for det in DETECTORS:
            reports = [per_trial[t][(li, det)] for t in range(config.n_trials)]
            cells.append(_cell(reports, r, config.n_semantic))
    return SweepResult("semantic", config, cells)


def run_background_sweep(config: SweepConfig, threads: int = 1) -> SweepResult:
    config.validate("background")
    grid = config.grid_for("background")
    jobs = [(config, grid, si, t) for si in range(len(config.dims_splits)) for t in range(config.n_trials)]
    results = dict(zip([(j[2], j[3]) for j in jobs], _map(_background_unit, jobs, threads)))
    cells = []
    for si, n in enumerate(config.dims_splits):
        for ai, alpha in enumerate(grid):
            for det in DETECTORS:
                reports = [results[(si, t)][(ai, det)] for t in range(config.n_trials)]
                cells.append(_cell(reports, alpha, n))
    return SweepResult("background", config, cells)


def _cell(reports: list[EvalReport], parameter: float, n_semantic: int) -> SweepCell:
    if len(reports) >= 2:
        return aggregate_trials(reports, sweep_parameter=parameter, n_semantic=n_semantic)
    # a single trial has no spread estimate
    r = reports[0]
    return SweepCell(parameter, r.detector_name, tuple(reports), r.auroc, float("nan"), r.far95, n_semantic)


def run_sweep(kind: str, config: SweepConfig, threads: int = 1) -> SweepResult:
    if kind == "semantic":
        return run_semantic_sweep(config, threads)
    if kind == "background":
        return run_background_sweep(config, threads)
    raise ConfigError(f"unknown sweep {kind!r}; valid values: semantic, background")


def load_config(path) -> SweepConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return SweepConfig.from_dict(data)
