"""Composition models that build an MWE embedding from two constituents.

All tanh-based models share one algebraic shape: p = tanh(W [top; bottom] + b)
where `top` carries the constituent word embeddings and `bottom` the sememe
signal (a plain sum or an attention-weighted sum). Rule-aware variants swap W
for a per-rule matrix, either a fully independent one or a shared matrix plus
a per-rule low-rank perturbation. Every forward pass caches the intermediates
needed for an exact backward pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .embeddings import EmbeddingTable
from .kb import CombinationRule, KbDataset, MweEntry


class ModelKind(str, Enum):
    ADD = "add"
    MUL = "mul"
    SCAS_S = "scas_s"    # concatenated constituents, no sememes
    SCAS = "scas"        # aggregated sememes
    SCMSA = "scmsa"      # mutual sememe attention
    SCAS_R = "scas_r"    # SCAS + combination rule
    SCMSA_R = "scmsa_r"  # SCMSA + combination rule


RULE_KINDS = (ModelKind.SCAS_R, ModelKind.SCMSA_R)
ATTENTION_KINDS = (ModelKind.SCMSA, ModelKind.SCMSA_R)
SEMEME_KINDS = (ModelKind.SCAS, ModelKind.SCMSA, ModelKind.SCAS_R, ModelKind.SCMSA_R)
TANH_KINDS = (ModelKind.SCAS_S,) + SEMEME_KINDS

RULE_MODES = ("full", "lowrank")


def softmax(x: np.ndarray) -> np.ndarray:
    z = x - np.max(x)
    e = np.exp(z)
    return e / e.sum()


@dataclass
class ModelParams:
    """All learnable tensors of one composition model.

    Non-rule kinds use W_c; rule kinds use either per-rule W_rule matrices
    (rule_mode="full") or a shared W_common plus per-rule factors U (d x h)
    and V (h x 2d) whose product perturbs it (rule_mode="lowrank"). The
    sememe table doubles as the tied sememe classifier: its rows are both the
    attention/aggregation inputs and the classifier weight rows.
    """

    kind: ModelKind
    dim: int
    sememes: EmbeddingTable
    rule_mode: str | None = None
    W_c: np.ndarray | None = None
    b_c: np.ndarray | None = None
    W_a: np.ndarray | None = None
    b_a: np.ndarray | None = None
    W_a2: np.ndarray | None = None  # query map for the second direction when untied
    b_a2: np.ndarray | None = None
    W_rule: dict[CombinationRule, np.ndarray] = field(default_factory=dict)
    W_common: np.ndarray | None = None
    U: dict[CombinationRule, np.ndarray] = field(default_factory=dict)
    V: dict[CombinationRule, np.ndarray] = field(default_factory=dict)
    rank: dict[CombinationRule, int] = field(default_factory=dict)
    attention_tied: bool = True

    def named_tensors(self):
        """(name, array) pairs for every model tensor, in a fixed order.

        Sememe embeddings are handled separately (they live in the table and
        carry per-row trainable flags).
        """
        for name in ("W_c", "b_c", "W_a", "b_a", "W_a2", "b_a2", "W_common"):
            arr = getattr(self, name)
            if arr is not None:
                yield name, arr
        for rule in CombinationRule:
            if rule in self.W_rule:
                yield f"W_rule:{rule.value}", self.W_rule[rule]
            if rule in self.U:
                yield f"U:{rule.value}", self.U[rule]
                yield f"V:{rule.value}", self.V[rule]

    def regularized_tensors(self):
        """Weight matrices only; biases and sememe embeddings are not penalized."""
        for name, arr in self.named_tensors():
            if not name.startswith("b_"):
                yield name, arr

    def tensor(self, name: str) -> np.ndarray:
        for n, arr in self.named_tensors():
            if n == name:
                return arr
        raise KeyError(name)


def init_params(kind, dim: int, sememes: EmbeddingTable, *, rule_mode: str = "lowrank",
                rank=5, seed=0, attention_tied: bool = True) -> ModelParams:
    """Fresh parameters for `kind` at dimension `dim`.

    Matrices start uniform in [-1/sqrt(2d), 1/sqrt(2d)] so tanh pre-activations
    sit in the linear regime; biases start at zero. `rank` may be an int or a
    per-rule dict (lowrank mode only). `seed` may be an int or a Generator.
    """
    kind = ModelKind(kind)
    if sememes.dim != dim:
        raise ValueError(f"sememe table dim {sememes.dim} != model dim {dim}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(2.0 * dim)

    def mat(*shape):
        return rng.uniform(-bound, bound, size=shape)

    params = ModelParams(kind=kind, dim=dim, sememes=sememes,
                         attention_tied=attention_tied)
    if kind in (ModelKind.ADD, ModelKind.MUL):
        return params
    params.b_c = np.zeros(dim)
    if kind in ATTENTION_KINDS:
        params.W_a = mat(dim, dim)
        params.b_a = np.zeros(dim)
        if not attention_tied:
            params.W_a2 = mat(dim, dim)
            params.b_a2 = np.zeros(dim)
    if kind in RULE_KINDS:
        if rule_mode not in RULE_MODES:
            raise ValueError(f"rule_mode must be one of {RULE_MODES}, got {rule_mode!r}")
        params.rule_mode = rule_mode
        if isinstance(rank, int):
            rank = {r: rank for r in CombinationRule}
        params.rank = {r: int(rank[r]) for r in CombinationRule}
        if any(h < 1 for h in params.rank.values()):
            raise ValueError("rank must be >= 1 for every rule")
        if rule_mode == "full":
            for r in CombinationRule:
                params.W_rule[r] = mat(dim, 2 * dim)
        else:
            params.W_common = mat(dim, 2 * dim)
            for r in CombinationRule:
                params.U[r] = mat(dim, params.rank[r])
                params.V[r] = mat(params.rank[r], 2 * dim)
    else:
        params.W_c = mat(dim, 2 * dim)
    return params


@dataclass
class ComposedOutput:
    """An MWE embedding plus the activations needed for backpropagation.

    Cache keys (present when the kind uses them): kind, rule, w1, w2, s1, s2
    (index arrays into the sememe table), w1p/w2p (per-side sememe vectors),
    a1/a2 (attention weights), e1/e2 (queries), q1/q2 (query pre-activations),
    z (concatenated input), u (tanh pre-activation).
    """

    p: np.ndarray
    cache: dict


def aggregate_sememes(sememes, table: EmbeddingTable) -> np.ndarray:
    """Unweighted sum of the member sememe embeddings."""
    idx = _resolve(sememes, table)
    return table.matrix[idx].sum(axis=0)


def _resolve(sememes, table: EmbeddingTable) -> np.ndarray:
    if isinstance(sememes, np.ndarray):
        idx = sememes
    else:
        idx = np.array(sorted(table.index(s) for s in sememes), dtype=np.intp)
    if idx.size == 0:
        raise ValueError("sememe set must be non-empty")
    return idx


def attend(query_source: np.ndarray, target_sememes, params: ModelParams,
           W_a: np.ndarray | None = None, b_a: np.ndarray | None = None):
    """Softmax-attend over a sememe set with a query built from a word vector.

    Returns (weights, weighted_sum). The query is tanh(W_a q + b_a); each
    sememe's logit is its dot product with the query.
    """
    W_a = params.W_a if W_a is None else W_a
    b_a = params.b_a if b_a is None else b_a
    idx = _resolve(target_sememes, params.sememes)
    _, e, weights, wsum = _attend_full(query_source, idx, params.sememes.matrix, W_a, b_a)
    return weights, wsum


def _attend_full(query_source, idx, sem_matrix, W_a, b_a):
    q = W_a @ query_source + b_a
    e = np.tanh(q)
    s = sem_matrix[idx]
    weights = softmax(s @ e)
    return q, e, weights, s.T @ weights


def composition_matrix_for_rule(rule: CombinationRule, params: ModelParams,
                                mode: str | None = None) -> np.ndarray:
    """Effective composition matrix for one rule: W_rule[r] in full mode,
    U[r] @ V[r] + W_common in lowrank mode."""
    mode = params.rule_mode if mode is None else mode
    if mode == "full":
        if rule not in params.W_rule:
            raise ValueError(f"no full-mode matrix for rule {rule.value}")
        return params.W_rule[rule]
    if mode == "lowrank":
        if rule not in params.U or params.W_common is None:
            raise ValueError(f"no lowrank tensors for rule {rule.value}")
        return params.U[rule] @ params.V[rule] + params.W_common
    raise ValueError(f"unknown rule_mode {mode!r}")


def compose_add(w1: np.ndarray, w2: np.ndarray) -> ComposedOutput:
    _check_dims(w1, w2)
    return ComposedOutput(w1 + w2, {"kind": ModelKind.ADD, "w1": w1, "w2": w2})


def compose_mul(w1: np.ndarray, w2: np.ndarray) -> ComposedOutput:
    _check_dims(w1, w2)
    return ComposedOutput(w1 * w2, {"kind": ModelKind.MUL, "w1": w1, "w2": w2})


def _check_dims(w1, w2):
    if w1.shape != w2.shape or w1.ndim != 1:
        raise ValueError(f"constituent dimensions differ: {w1.shape} vs {w2.shape}")


def _tanh_output(kind, W, b, z, extra) -> ComposedOutput:
    u = W @ z + b
    cache = {"kind": kind, "z": z, "u": u}
    cache.update(extra)
    return ComposedOutput(np.tanh(u), cache)


def compose_scas_s(w1, w2, params: ModelParams) -> ComposedOutput:
    """Sememe-free baseline: p = tanh(W_c [w1; w2] + b_c)."""
    _check_dims(w1, w2)
    z = np.concatenate([w1, w2])
    return _tanh_output(ModelKind.SCAS_S, params.W_c, params.b_c, z,
                        {"w1": w1, "w2": w2})


def compose_scas(w1, w2, s1, s2, params: ModelParams, W=None, rule=None,
                 kind=ModelKind.SCAS) -> ComposedOutput:
    """Aggregated-sememe model: p = tanh(W [w1+w2; w1'+w2'] + b_c) where each
    w' is the plain sum of that constituent's sememe embeddings."""
    _check_dims(w1, w2)
    s1 = _resolve(s1, params.sememes)
    s2 = _resolve(s2, params.sememes)
    w1p = params.sememes.matrix[s1].sum(axis=0)
    w2p = params.sememes.matrix[s2].sum(axis=0)
    z = np.concatenate([w1 + w2, w1p + w2p])
    W = params.W_c if W is None else W
    return _tanh_output(kind, W, params.b_c, z,
                        {"w1": w1, "w2": w2, "s1": s1, "s2": s2,
                         "w1p": w1p, "w2p": w2p, "rule": rule})


def compose_scmsa(w1, w2, s1, s2, params: ModelParams, W=None, rule=None,
                  kind=ModelKind.SCMSA) -> ComposedOutput:
    """Mutual-attention model: each constituent's query reweights the other
    constituent's sememes before the same tanh composition as SCAS."""
    _check_dims(w1, w2)
    s1 = _resolve(s1, params.sememes)
    s2 = _resolve(s2, params.sememes)
    sem = params.sememes.matrix
    # query from w1 attends over the second constituent's sememes
    q1, e1, a2, w2p = _attend_full(w1, s2, sem, params.W_a, params.b_a)
    if params.attention_tied:
        W_a2, b_a2 = params.W_a, params.b_a
    else:
        W_a2, b_a2 = params.W_a2, params.b_a2
    q2, e2, a1, w1p = _attend_full(w2, s1, sem, W_a2, b_a2)
    z = np.concatenate([w1 + w2, w1p + w2p])
    W = params.W_c if W is None else W
    return _tanh_output(kind, W, params.b_c, z,
                        {"w1": w1, "w2": w2, "s1": s1, "s2": s2,
                         "w1p": w1p, "w2p": w2p, "a1": a1, "a2": a2,
                         "e1": e1, "e2": e2, "q1": q1, "q2": q2, "rule": rule})


def forward(params: ModelParams, w1, w2, s1=None, s2=None,
            rule: CombinationRule | None = None) -> ComposedOutput:
    """Dispatch to the kind-specific composition.

    ADD/MUL ignore sememes and rule; rule kinds require `rule` and substitute
    the per-rule effective matrix.
    """
    kind = params.kind
    if kind == ModelKind.ADD:
        return compose_add(w1, w2)
    if kind == ModelKind.MUL:
        return compose_mul(w1, w2)
    if kind == ModelKind.SCAS_S:
        return compose_scas_s(w1, w2, params)
    if kind in SEMEME_KINDS:
        if s1 is None or s2 is None:
            raise ValueError(f"{kind.value} requires both constituents' sememe sets")
        W = None
        if kind in RULE_KINDS:
            if rule is None:
                raise ValueError(f"{kind.value} requires a combination rule")
            W = composition_matrix_for_rule(rule, params)
        if kind in (ModelKind.SCAS, ModelKind.SCAS_R):
            return compose_scas(w1, w2, s1, s2, params, W=W, rule=rule, kind=kind)
        return compose_scmsa(w1, w2, s1, s2, params, W=W, rule=rule, kind=kind)
    raise ValueError(f"unknown model kind {kind!r}")


def compose_entry(params: ModelParams, mwe: MweEntry, ds: KbDataset,
                  words: EmbeddingTable) -> ComposedOutput:
    """Compose one KB entry: constituent vectors from `words`, sememe indices
    resolved against the model's sememe table."""
    w1 = words.lookup(mwe.constituent1)
    w2 = words.lookup(mwe.constituent2)
    s1 = s2 = None
    if params.kind in SEMEME_KINDS:
        e1, e2 = ds.lexicon[mwe.constituent1], ds.lexicon[mwe.constituent2]
        s1 = _resolve(e1.sememes, params.sememes)
        s2 = _resolve(e2.sememes, params.sememes)
    return forward(params, w1, w2, s1, s2, mwe.rule)
