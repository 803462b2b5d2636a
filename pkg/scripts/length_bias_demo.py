"""Show how summed log-likelihood tracks sequence length while PPL does not.

OOD sequences are the ID sequences repeated k times; PPL stays at chance,
log p(x) separates perfectly, purely on length.
"""

import numpy as np

from oodshift.detectors import TokenLogProbs
from oodshift.scoreio import ScoreRecord, evaluate_records

rng = np.random.default_rng(0)
seqs = [TokenLogProbs(-rng.gamma(2.0, 0.8, size=int(rng.integers(8, 30)))) for _ in range(200)]

for k in (1, 2, 5, 10):
    recs = [ScoreRecord(f"id{i}", "id", token_logprobs=s) for i, s in enumerate(seqs)]
    recs += [ScoreRecord(f"ood{i}", "ood", token_logprobs=s.repeated(k)) for i, s in enumerate(seqs)]
    ppl, logpx = evaluate_records(recs, "ppl"), evaluate_records(recs, "logpx")
    print(f"k={k:2d}  ppl AUROC {ppl.auroc:.3f}  logpx AUROC {logpx.auroc:.3f}  logpx FAR95 {logpx.far95:.3f}")
