"""JSON Lines ingestion of externally computed model outputs.

Line 1 is a header object, ``{"kind": "class_probs"|"token_logprobs", "log_base": "e"|2|10}``;
every following non-blank line is one record::

    {"example_id": "a1", "split": "id", "class_probs": [0.9, 0.1]}
    {"example_id": "b7", "split": "ood", "token_logprobs": [-0.1, -2.3]}

Token log-probs are converted to natural log on load. A file holds exactly
one payload kind.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import detectors
from .detectors import ScoreSet, TokenLogProbs
from .metrics import EvalReport, evaluate

KINDS = ("class_probs", "token_logprobs")
SPLITS = ("id", "ood")
DETECTOR_KIND = {"msp": "class_probs", "ppl": "token_logprobs", "logpx": "token_logprobs"}
LOG_BASES = {"e": 1.0, 2: math.log(2.0), 10: math.log(10.0)}


class ScoreFileError(ValueError):
    """Validation failure; ``problems`` holds ``(line_number, message)`` pairs."""

    def __init__(self, path, problems):
        self.path = str(path)
        self.problems = list(problems)
        lines = [f"{self.path}:{ln}: {msg}" if ln else f"{self.path}: {msg}" for ln, msg in self.problems]
        super().__init__("\n".join(lines))


@dataclass(frozen=True)
class ScoreRecord:
    example_id: str
    split: str
    class_probs: np.ndarray | None = None
    token_logprobs: TokenLogProbs | None = None

    @property
    def kind(self) -> str:
        return "class_probs" if self.class_probs is not None else "token_logprobs"

    def to_dict(self, log_base="e") -> dict:
        if self.class_probs is not None:
            payload = self.class_probs.tolist()
        else:
            payload = (self.token_logprobs.values / LOG_BASES[log_base]).tolist()
        return {"example_id": self.example_id, "split": self.split, self.kind: payload}


def _parse_base(raw):
    if raw in ("e", None):
        return "e"
    if isinstance(raw, (int, float)) and not isinstance(raw, bool) and raw in (2, 10):
        return int(raw)
    if isinstance(raw, str) and raw in ("2", "10"):
        return int(raw)
    raise ValueError(f"log_base must be one of 'e', 2, 10; got {raw!r}")


def read_header(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    return _header(path, first)


def _header(path, line: str) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ScoreFileError(path, [(1, f"header is not valid JSON: {exc.msg}")]) from None
    if not isinstance(header, dict) or header.get("kind") not in KINDS:
        raise ScoreFileError(path, [(1, f"header must be an object with kind in {list(KINDS)}")])
    if header["kind"] == "token_logprobs" and "log_base" not in header:
        raise ScoreFileError(path, [(1, "token_logprobs header must declare log_base")])
    try:
        header["log_base"] = _parse_base(header.get("log_base"))
    except ValueError as exc:
        raise ScoreFileError(path, [(1, str(exc))]) from None
    return header


def _record(obj, kind: str, scale: float) -> ScoreRecord:
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    present = [k for k in KINDS if k in obj]
    if present != [kind]:
        raise ValueError(f"record payload {present or 'missing'} does not match file kind {kind!r}")
    eid = obj.get("example_id")
    if not isinstance(eid, str) or not eid:
        raise ValueError("example_id must be a nonempty string")
    split = obj.get("split")
    if split not in SPLITS:
        raise ValueError(f"split must be 'id' or 'ood', got {split!r}")
    raw = obj[kind]
    if not isinstance(raw, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
        raise ValueError(f"{kind} must be a list of numbers")
    values = np.asarray(raw, dtype=np.float64)
    if kind == "class_probs":
        if values.size == 0:
            raise ValueError("class_probs is empty")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("class_probs must be finite and nonnegative")
        total = float(values.sum())
        if abs(total - 1.0) > detectors.PROB_SUM_TOL:
            raise ValueError(f"class_probs sum to {total!r}, not 1 within {detectors.PROB_SUM_TOL}")
        return ScoreRecord(eid, split, class_probs=values)
    return ScoreRecord(eid, split, token_logprobs=TokenLogProbs(values * scale))


def load_records(path, declared_kind: str | None = None) -> list[ScoreRecord]:
    """Load and validate every record; all bad lines are reported together."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    header = _header(path, lines[0] if lines else "")
    kind = header["kind"]
    if declared_kind is not None and declared_kind != kind:
        raise ScoreFileError(path, [(1, f"file declares kind {kind!r} but {declared_kind!r} was expected")])
    scale = LOG_BASES[header["log_base"]]
    records, problems, seen = [], [], set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = _record(json.loads(line), kind, scale)
        except json.JSONDecodeError as exc:
            problems.append((lineno, f"invalid JSON: {exc.msg}"))
            continue
        except ValueError as exc:
            problems.append((lineno, str(exc)))
            continue
        if rec.example_id in seen:
            problems.append((lineno, f"duplicate example_id {rec.example_id!r}"))
            continue
        seen.add(rec.example_id)
        records.append(rec)
    if problems:
        raise ScoreFileError(path, problems)
    return records


def dump_records(records, path, log_base="e") -> None:
    records = list(records)
    kinds = {r.kind for r in records}
    if len(kinds) > 1:
        raise ValueError("cannot write a mixed-kind score file")
    kind = kinds.pop() if kinds else "class_probs"
    header = {"kind": kind}
    if kind == "token_logprobs":
        header["log_base"] = _parse_base(log_base)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header) + "\n")
        for r in records:
            fh.write(json.dumps(r.to_dict(header.get("log_base", "e"))) + "\n")


def _score(record: ScoreRecord, detector: str) -> float:
    if detector == "msp":
        return detectors.msp_score(record.class_probs)
    if detector == "ppl":
        return detectors.ppl_score(record.token_logprobs)
    return detectors.seqprob_score(record.token_logprobs)


def evaluate_records(records, detector: str) -> EvalReport:
    if detector not in DETECTOR_KIND:
        raise ValueError(f"unknown detector {detector!r}; valid values: {', '.join(DETECTOR_KIND)}")
    need = DETECTOR_KIND[detector]
    records = list(records)
    for r in records:
        if r.kind != need:
            raise ValueError(f"detector {detector!r} needs {need} payloads but record {r.example_id!r} has {r.kind}")
    by_split = {s: [_score(r, detector) for r in records if r.split == s] for s in SPLITS}
    for s in SPLITS:
        if not by_split[s]:
            raise ValueError(f"no records in split {s!r}")
    return evaluate(ScoreSet(np.array(by_split["id"]), detector),
                    ScoreSet(np.array(by_split["ood"]), detector), detector)
