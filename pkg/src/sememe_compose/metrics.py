"""Evaluation metrics and protocols: cosine, Pearson/Spearman correlation,
average precision / MAP, thresholded micro-F1 with threshold tuning, and
per-bucket breakdown tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compose import ModelParams, compose_entry
from .embeddings import EmbeddingTable
from .kb import KbDataset, KbError


@dataclass(frozen=True)
class SimilarityPair:
    token1: str
    token2: str
    human_score: float


def parse_similarity_pairs(text: str) -> list[SimilarityPair]:
    """Parse `token1<TAB>token2<TAB>score` lines; `#` comments allowed."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.rstrip("\n").split("\t")
        if len(fields) != 3:
            raise KbError(f"similarity line {lineno}: expected 3 fields, got {len(fields)}")
        try:
            score = float(fields[2])
        except ValueError:
            raise KbError(f"similarity line {lineno}: non-numeric score") from None
        if not np.isfinite(score):
            raise KbError(f"similarity line {lineno}: score must be finite")
        pairs.append(SimilarityPair(fields[0], fields[1], score))
    return pairs


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine is undefined for zero vectors")
    return float(u @ v / (nu * nv))


def average_ranks(xs) -> np.ndarray:
    """1-based ranks; tied values receive the mean of their rank positions."""
    xs = np.asarray(xs, dtype=np.float64)
    order = np.argsort(xs, kind="stable")
    ranks = np.empty(len(xs))
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _check_sequences(xs, ys):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("sequences must be 1-D and equal length")
    if len(xs) < 2:
        raise ValueError("correlation needs at least 2 observations")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise ValueError("correlation is undefined for a constant sequence")
    return xs, ys


def pearson(xs, ys) -> float:
    xs, ys = _check_sequences(xs, ys)
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    return float((dx @ dy) / np.sqrt((dx @ dx) * (dy @ dy)))


def spearman(xs, ys) -> float:
    """Pearson correlation of the tie-averaged ranks."""
    xs, ys = _check_sequences(xs, ys)
    return pearson(average_ranks(xs), average_ranks(ys))


@dataclass
class SimilarityResult:
    rho_x100: float
    n_pairs: int
    skipped: list[str]


def evaluate_similarity(params: ModelParams, ds: KbDataset, words: EmbeddingTable,
                        pairs, skip_missing: bool = False) -> SimilarityResult:
    """Compose both MWEs of every pair, score pairs by cosine and correlate
    with the human scores (Spearman rho x 100).

    Pairs whose tokens cannot be composed raise unless `skip_missing`, in
    which case they are excluded and listed in the result.
    """
    model_scores, human_scores, skipped = [], [], []
    for pair in pairs:
        try:
            vecs = []
            for token in (pair.token1, pair.token2):
                if token not in ds.mwe_index:
                    raise KeyError(f"token {token!r} is not a known MWE")
                mwe = ds.mwes[ds.mwe_index[token]]
                vecs.append(compose_entry(params, mwe, ds, words).p)
        except KeyError as e:
            if skip_missing:
                skipped.append(f"{pair.token1}/{pair.token2}: {e.args[0]}")
                continue
            raise ValueError(f"uncomposable pair {pair.token1}/{pair.token2}: {e.args[0]}") from None
        model_scores.append(cosine(vecs[0], vecs[1]))
        human_scores.append(pair.human_score)
    rho = spearman(model_scores, human_scores)
    return SimilarityResult(100.0 * rho, len(model_scores), skipped)


@dataclass
class PredictionRecord:
    """Per-MWE sememe prediction: scores over the full inventory, the implied
    ranking (descending score, ties broken by inventory order) and the gold
    index set."""

    token: str
    scores: np.ndarray
    ranking: np.ndarray
    gold: frozenset[int]


def make_record(token: str, scores: np.ndarray, gold_indices) -> PredictionRecord:
    scores = np.asarray(scores, dtype=np.float64)
    gold = frozenset(int(i) for i in gold_indices)
    if not gold:
        raise ValueError(f"record {token!r} has an empty gold set")
    if not all(0 <= i < len(scores) for i in gold):
        raise ValueError(f"record {token!r} has gold indices outside the inventory")
    # stable argsort on negated scores = descending with inventory-order ties
    ranking = np.argsort(-scores, kind="stable")
    return PredictionRecord(token, scores, ranking, gold)


def average_precision(ranking, gold) -> float:
    """Mean over gold items of (gold found in top-k) / k at each gold rank k."""
    gold = set(int(i) for i in gold)
    if not gold:
        raise ValueError("gold set must be non-empty")
    hits = 0
    total = 0.0
    for k, idx in enumerate(ranking, 1):
        if int(idx) in gold:
            hits += 1
            total += hits / k
    if hits != len(gold):
        raise ValueError("ranking does not cover every gold item")
    return total / len(gold)


def map_score(records) -> float:
    records = list(records)
    if not records:
        raise ValueError("MAP over zero records is undefined")
    return float(np.mean([average_precision(r.ranking, r.gold) for r in records]))


def f1_at_threshold(records, delta: float) -> tuple[float, float, float]:
    """Micro-averaged precision/recall/F1 with predicted = scores > delta."""
    tp = fp = fn = 0
    for r in records:
        pred = {int(i) for i in np.flatnonzero(r.scores > delta)}
        tp += len(pred & r.gold)
        fp += len(pred - r.gold)
        fn += len(r.gold - pred)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


DEFAULT_DELTA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))


def tune_delta(records, grid=DEFAULT_DELTA_GRID) -> float:
    """Grid value maximizing micro-F1; ties resolve to the smaller delta."""
    grid = sorted(grid)
    if not grid:
        raise ValueError("delta grid must be non-empty")
    best_delta, best_f1 = grid[0], -1.0
    for delta in grid:
        _, _, f1 = f1_at_threshold(records, delta)
        if f1 > best_f1:
            best_delta, best_f1 = delta, f1
    return best_delta


@dataclass
class BucketScore:
    n: int
    map: float


def breakdown(records, buckets: dict) -> dict:
    """Per-bucket MAP over record positions; empty buckets are omitted."""
    records = list(records)
    out = {}
    for label, positions in buckets.items():
        if not positions:
            continue
        subset = [records[i] for i in positions]
        out[label] = BucketScore(len(subset), map_score(subset))
    return out
