"""Controlled text shifts and the bag-of-words logistic-regression oracle detector."""

from __future__ import annotations

import json
import math
import unicodedata
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, log_expit

from .detectors import ScoreSet
from .metrics import EvalReport, evaluate
from .seeding import derive_seed, make_rng

LOSS_SLACK = 1e-9
MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class Example:
    example_id: str
    text: str
    label: str | None = None


@dataclass(frozen=True)
class Corpus:
    examples: tuple[Example, ...]

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        ids = [e.example_id for e in self.examples]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate example ids: {dup[:5]}")
        for e in self.examples:
            if not e.text or not e.text.strip():
                raise ValueError(f"example {e.example_id!r} has empty text")

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def texts(self) -> list[str]:
        return [e.text for e in self.examples]

    @classmethod
    def from_texts(cls, texts, prefix: str = "ex") -> "Corpus":
        return cls(tuple(Example(f"{prefix}{i}", t) for i, t in enumerate(texts)))


def load_corpus(path) -> Corpus:
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                examples.append(Example(str(obj["example_id"]), obj["text"], obj.get("class")))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed corpus record ({exc})") from None
    return Corpus(tuple(examples))


def dump_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in corpus.examples:
            obj = {"example_id": e.example_id, "text": e.text}
            if e.label is not None:
                obj["class"] = e.label
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


# --- shifts -----------------------------------------------------------------

def append_filler(corpus: Corpus, filler: Corpus, length_words: int, seed: int) -> Corpus:
    """Append an independently drawn contiguous run of ``length_words`` filler words to each example.

    The filler corpus is read as one word stream in file order.
    """
    if length_words < 1:
        raise ValueError(f"length_words must be >= 1, got {length_words}")
    words = [w for text in filler.texts for w in text.split()]
    if len(words) < length_words:
        raise ValueError(f"filler has {len(words)} words, cannot supply runs of {length_words}")
    rng = make_rng(derive_seed(seed, "append_filler", length_words))
    starts = rng.integers(0, len(words) - length_words + 1, size=len(corpus))
    out = []
    for e, s in zip(corpus.examples, starts):
        out.append(Example(e.example_id, e.text + " " + " ".join(words[s:s + length_words]), e.label))
    return Corpus(tuple(out))


def partition_by_class(corpus: Corpus, id_classes) -> tuple[Corpus, Corpus]:
    id_classes = list(id_classes)
    if not id_classes:
        raise ValueError("id_classes is empty; an in-distribution class set is required")
    unlabeled = [e.example_id for e in corpus.examples if e.label is None]
    if unlabeled:
        raise ValueError(f"unlabeled examples: {unlabeled[:5]}")
    present = {e.label for e in corpus.examples}
    unknown = [c for c in id_classes if c not in present]
    if unknown:
        raise ValueError(f"unknown classes: {unknown}")
    keep = set(id_classes)
    id_part = tuple(e for e in corpus.examples if e.label in keep)
    ood_part = tuple(e for e in corpus.examples if e.label not in keep)
    return Corpus(id_part), Corpus(ood_part)


# --- bag of words -----------------------------------------------------------

def _strip_punct(token: str) -> str:
    i, j = 0, len(token)
    while i < j and unicodedata.category(token[i]).startswith("P"):
        i += 1
    while j > i and unicodedata.category(token[j - 1]).startswith("P"):
        j -= 1
    return token[i:j]


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation; drop empties."""
    return [t for t in (_strip_punct(w) for w in text.lower().split()) if t]


def build_vocabulary(texts, min_token_count: int = 2) -> dict[str, int]:
    counts = Counter(t for text in texts for t in tokenize(text))
    kept = sorted(t for t, c in counts.items() if c >= min_token_count)
    return {t: i for i, t in enumerate(kept)}


def featurize(texts, vocabulary: dict[str, int]) -> sp.csr_matrix:
    """Raw token counts; out-of-vocabulary tokens are dropped."""
    rows, cols = [], []
    for r, text in enumerate(texts):
        for t in tokenize(text):
            j = vocabulary.get(t)
            if j is not None:
                rows.append(r)
                cols.append(j)
    data = np.ones(len(rows))
    x = sp.csr_matrix((data, (rows, cols)), shape=(len(texts), len(vocabulary)))
    x.sum_duplicates()
    return x


@dataclass(frozen=True)
class BowConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    min_token_count: int = 2


def loss_and_grad(weights, bias, x, y, l2):
    """Mean logistic loss (OOD = 1) plus ``l2/2 * |w|^2``; bias is unpenalised."""
    z = x @ weights + bias
    loss = float(np.mean(-y * log_expit(z) - (1.0 - y) * log_expit(-z))) + 0.5 * l2 * float(weights @ weights)
    r = (expit(z) - y) / y.shape[0]
    return loss, x.T @ r + l2 * weights, float(r.sum())


@dataclass
class BowModel:
    vocabulary: dict[str, int]
    weights: np.ndarray
    bias: float
    config: BowConfig = field(default_factory=BowConfig)
    loss_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.weights.shape != (len(self.vocabulary),):
            raise ValueError("weight length must equal vocabulary size")

    def logit(self, texts) -> np.ndarray:
        return featurize(texts, self.vocabulary) @ self.weights + self.bias

    def prob_ood(self, texts) -> np.ndarray:
        return expit(self.logit(texts))

    def id_scores(self, texts) -> ScoreSet:
        """``1 - P(OOD)``, ranked exactly by the negated logit."""
        z = self.logit(texts)
        return ScoreSet(expit(-z), "oracle_bow", order_key=-z)

    def to_dict(self) -> dict:
        return {
            "vocabulary": sorted(self.vocabulary, key=self.vocabulary.get),
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "config": asdict(self.config),
            "final_loss": self.loss_history[-1] if self.loss_history else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BowModel":
        vocab = {t: i for i, t in enumerate(data["vocabulary"])}
        return cls(vocab, np.asarray(data["weights"], dtype=np.float64), float(data["bias"]),
                   BowConfig(**data.get("config", {})))


def fit_bow_logreg(id_texts, ood_texts, config: BowConfig | None = None) -> BowModel:
    """Full-batch gradient descent on count features.

    A step that would raise the loss is halved until it does not, so the
    loss history is nonincreasing even when large counts make the
    configured rate too aggressive.
    """
    config = config or BowConfig()
    id_texts, ood_texts = list(id_texts), list(ood_texts)
    if not id_texts or not ood_texts:
        raise ValueError("both ID and OOD training texts are required")
    vocab = build_vocabulary(id_texts + ood_texts, config.min_token_count)
    if not vocab:
        raise ValueError(f"empty vocabulary after min_token_count={config.min_token_count} filtering")
    x = featurize(id_texts + ood_texts, vocab)
    y = np.concatenate([np.zeros(len(id_texts)), np.ones(len(ood_texts))])
    w, b = np.zeros(len(vocab)), 0.0
    loss, gw, gb = loss_and_grad(w, b, x, y, config.l2)
    history = [loss]
    for _ in range(config.epochs):
        step = config.learning_rate
        for _ in range(MAX_BACKTRACKS):
            w_new, b_new = w - step * gw, b - step * gb
            new_loss, new_gw, new_gb = loss_and_grad(w_new, b_new, x, y, config.l2)
            if new_loss <= loss:
                break
            step *= 0.5
        else:
            break
        w, b, loss, gw, gb = w_new, b_new, new_loss, new_gw, new_gb
        history.append(loss)
    return BowModel(vocab, w, b, config, history)


def stratified_split(n: int, train_fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n_train = int(math.floor(train_fraction * n + 1e-9))
    perm = rng.permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


@dataclass
class OracleResult:
    report: EvalReport
    model: BowModel
    n_train: tuple[int, int]
    n_test: tuple[int, int]


def oracle_fit_evaluate(id_texts, ood_texts, train_fraction: float = 0.8, seed: int = 0,
                        config: BowConfig | None = None) -> OracleResult:
    id_texts, ood_texts = list(id_texts), list(ood_texts)
    if len(id_texts) < 5 or len(ood_texts) < 5:
        raise ValueError("each side needs at least 5 examples")
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1], got {train_fraction}")
    # the permutation depends on (seed, side size) only, so two identical
    # corpora get identical held-out sets and the null case stays at chance
    id_tr, id_te = stratified_split(len(id_texts), train_fraction, make_rng(derive_seed(seed, "oracle", len(id_texts))))
    ood_tr, ood_te = stratified_split(len(ood_texts), train_fraction,
                                      make_rng(derive_seed(seed, "oracle", len(ood_texts))))
    if id_te.size == 0 or ood_te.size == 0:
        raise ValueError(f"train_fraction={train_fraction} leaves an empty held-out side")
    model = fit_bow_logreg([id_texts[i] for i in id_tr], [ood_texts[i] for i in ood_tr], config)
    report = evaluate(model.id_scores([id_texts[i] for i in id_te]),
                      model.id_scores([ood_texts[i] for i in ood_te]), "oracle_bow")
    return OracleResult(report, model, (id_tr.size, ood_tr.size), (id_te.size, ood_te.size))


def oracle_detect(id_texts, ood_texts, train_fraction: float = 0.8, seed: int = 0,
                  config: BowConfig | None = None) -> EvalReport:
    return oracle_fit_evaluate(id_texts, ood_texts, train_fraction, seed, config).report
