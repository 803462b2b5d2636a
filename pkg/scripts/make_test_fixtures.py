"""Regenerate the small bundled fixtures under tests/data/ (deterministic)."""

import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"

FILLER_TEXT = (
    "The museum was founded in the nineteenth century and moved to its current building after a fire . "
    "Its collection covers regional history , natural science and early photography . "
    "The river that runs through the town was used for milling until the railway arrived . "
    "Several notable architects contributed designs to the public library and the town hall . "
    "Annual festivals draw visitors from neighbouring districts during the summer months . "
)


def jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240601)
    common = [f"w{i}" for i in range(40)]

    def text(marker):
        return " ".join(list(rng.choice(common, size=10)) + [marker])

    jsonl(OUT / "separable_id.jsonl", [{"example_id": f"id{i}", "text": text("alpha")} for i in range(30)])
    jsonl(OUT / "separable_ood.jsonl", [{"example_id": f"ood{i}", "text": text("beta")} for i in range(30)])

    classes = {"politics": 12, "sports": 9, "travel": 6, "food": 4, "style": 2}
    rows, k = [], 0
    for cls, count in classes.items():
        for _ in range(count):
            rows.append({"example_id": f"n{k}", "text": f"{cls} story " + " ".join(rng.choice(common, 6)), "class": cls})
            k += 1
    order = rng.permutation(len(rows))
    jsonl(OUT / "toy_news.jsonl", [rows[i] for i in order])

    jsonl(OUT / "filler.jsonl", [{"example_id": f"f{i}", "text": FILLER_TEXT} for i in range(4)])

    msp = [{"kind": "class_probs"}]
    for i in range(25):
        p = 0.95 + 0.04 * rng.random()
        msp.append({"example_id": f"id{i}", "split": "id", "class_probs": [p, 1.0 - p]})
    for i in range(25):
        p = 0.5 + 0.3 * rng.random()
        msp.append({"example_id": f"ood{i}", "split": "ood", "class_probs": [1.0 - p, p]})
    jsonl(OUT / "msp_separable.jsonl", msp)

    rep = [{"kind": "token_logprobs", "log_base": "e"}]
    seqs = [list(-1.0 - rng.random(int(rng.integers(10, 21)))) for _ in range(40)]
    for i, s in enumerate(seqs):
        rep.append({"example_id": f"id{i}", "split": "id", "token_logprobs": s})
    for i, s in enumerate(seqs):
        rep.append({"example_id": f"ood{i}", "split": "ood", "token_logprobs": s * 5})
    jsonl(OUT / "repetition_attack.jsonl", rep)


if __name__ == "__main__":
    main()
