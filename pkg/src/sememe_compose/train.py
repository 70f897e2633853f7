"""Losses, exact analytic gradients, per-example SGD with learning-rate decay,
finite-difference gradient verification and checkpoint I/O."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .compose import (RULE_KINDS, SEMEME_KINDS, CombinationRule, ComposedOutput,
                      ModelKind, ModelParams, forward, init_params)
from .embeddings import (EmbeddingTable, UnknownTokenError, matrix_from_text,
                         matrix_to_text, read_embeddings)
from .kb import KbDataset, KbError

TASKS = ("similarity", "sememe")
DEFAULT_LR0 = {"similarity": 0.01, "sememe": 0.2}


class NumericalError(RuntimeError):
    """Training produced a non-finite loss or a failed numerical check."""


@dataclass
class Hyperparams:
    """Training configuration; `lr0` defaults per task when left unset."""

    dim: int = 200
    rank: int = 5
    lam: float = 1e-4          # L2 penalty on weight matrices
    pos_weight: float = 100.0  # positive-class weight in the sememe loss
    lr0: float | None = None
    lr_decay: float = 0.99     # multiplier applied once per epoch
    epochs: int = 50
    seed: int = 0
    delta: float = 0.5         # sememe decision threshold (tuned on validation)
    batch_size: int = 1
    decay_per_update: bool = False

    def validate(self):
        if self.dim < 1 or self.rank < 1 or self.epochs < 0 or self.batch_size < 1:
            raise ValueError("dim, rank and batch_size must be positive; epochs >= 0")
        if self.lam < 0 or self.pos_weight <= 0:
            raise ValueError("lam must be >= 0 and pos_weight > 0")
        if not (0.0 < self.lr_decay <= 1.0):
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.lr0 is not None and self.lr0 <= 0:
            raise ValueError("lr0 must be positive")

    def resolved_lr0(self, task: str) -> float:
        return self.lr0 if self.lr0 is not None else DEFAULT_LR0[task]


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def loss_similarity(p_c: np.ndarray, p_r: np.ndarray) -> float:
    """Squared Euclidean distance between composed and reference embeddings."""
    if p_c.shape != p_r.shape:
        raise ValueError(f"dimension mismatch: {p_c.shape} vs {p_r.shape}")
    diff = p_c - p_r
    return float(diff @ diff)


def regularization(params: ModelParams, lam: float) -> float:
    """(lam/2) * sum of squared Frobenius norms of the weight matrices."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if lam == 0:
        return 0.0
    total = sum(float(np.sum(arr * arr)) for _, arr in params.regularized_tensors())
    return 0.5 * lam * total


def predict_sememes(p: np.ndarray, W_s: np.ndarray) -> np.ndarray:
    """Sigmoid scores of every sememe for a composed embedding.

    W_s is the tied classifier: one row per sememe, equal to that sememe's
    current embedding.
    """
    W_s = np.asarray(W_s)
    if W_s.ndim != 2 or W_s.shape[1] != p.shape[0]:
        raise ValueError(f"classifier shape {W_s.shape} incompatible with dim {p.shape[0]}")
    return sigmoid(W_s @ p)


def loss_sememe(scores: np.ndarray, gold: np.ndarray, pos_weight: float) -> float:
    """Weighted binary cross-entropy over the sememe inventory (minimized).

    Log arguments are clamped at 1e-12 so saturated scores cannot produce an
    infinite loss.
    """
    scores = np.asarray(scores, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if scores.shape != gold.shape:
        raise ValueError(f"shape mismatch: {scores.shape} vs {gold.shape}")
    s = np.clip(scores, 1e-12, 1.0 - 1e-12)
    return float(-(pos_weight * gold * np.log(s) + (1.0 - gold) * np.log1p(-s)).sum())


@dataclass
class GradientSet:
    """Gradients mirroring ModelParams: one array per model tensor plus a full
    matrix over the sememe table (zero rows for untouched sememes)."""

    tensors: dict[str, np.ndarray]
    sememes: np.ndarray

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "GradientSet":
        return cls({name: np.zeros_like(arr) for name, arr in params.named_tensors()},
                   np.zeros_like(params.sememes.matrix))

    def add_(self, other: "GradientSet") -> "GradientSet":
        for name, arr in self.tensors.items():
            arr += other.tensors[name]
        self.sememes += other.sememes
        return self

    def scale_(self, factor: float) -> "GradientSet":
        for arr in self.tensors.values():
            arr *= factor
        self.sememes *= factor
        return self


def backward(out: ComposedOutput, params: ModelParams, task: str, target,
             *, lam: float = 0.0, pos_weight: float = 1.0) -> GradientSet:
    """Exact gradients of (task loss + L2 penalty) for one example.

    For the sememe task the tied classifier routes gradient into the sememe
    rows twice: through the classifier logits and through the composition
    input; both contributions accumulate. Frozen constituent word embeddings
    receive no gradient.
    """
    if not out.cache or "kind" not in out.cache:
        raise ValueError("missing forward cache; run forward() first")
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    g = GradientSet.zeros_like(params)
    p = out.p
    if task == "similarity":
        dp = 2.0 * (p - np.asarray(target))
    else:
        W_s = params.sememes.matrix
        scores = sigmoid(W_s @ p)
        y = np.asarray(target, dtype=np.float64)
        dlogit = -pos_weight * y * (1.0 - scores) + (1.0 - y) * scores
        g.sememes += np.outer(dlogit, p)
        dp = W_s.T @ dlogit
    _composition_backward(out, params, dp, g)
    if lam:
        for name, arr in params.regularized_tensors():
            g.tensors[name] += lam * arr
    return g


def _composition_backward(out: ComposedOutput, params: ModelParams,
                          dp: np.ndarray, g: GradientSet):
    cache = out.cache
    kind = cache["kind"]
    if kind in (ModelKind.ADD, ModelKind.MUL):
        return  # only the frozen constituent embeddings sit upstream
    du = dp * (1.0 - out.p ** 2)
    z = cache["z"]
    g.tensors["b_c"] += du
    dW = np.outer(du, z)
    rule = cache.get("rule")
    if kind in RULE_KINDS:
        if params.rule_mode == "full":
            g.tensors[f"W_rule:{rule.value}"] += dW
            W = params.W_rule[rule]
        else:
            U, V = params.U[rule], params.V[rule]
            g.tensors[f"U:{rule.value}"] += dW @ V.T
            g.tensors[f"V:{rule.value}"] += U.T @ dW
            g.tensors["W_common"] += dW
            W = U @ V + params.W_common
    else:
        g.tensors["W_c"] += dW
        W = params.W_c
    if kind == ModelKind.SCAS_S:
        return  # z holds only frozen word embeddings
    dz = W.T @ du
    dzb = dz[params.dim:]  # shared gradient of w1' + w2'; top half hits frozen words
    if kind in (ModelKind.SCAS, ModelKind.SCAS_R):
        g.sememes[cache["s1"]] += dzb
        g.sememes[cache["s2"]] += dzb
        return
    pair2 = ("W_a", "b_a") if params.attention_tied else ("W_a2", "b_a2")
    _attention_backward(g, params, dzb, cache["s2"], cache["a2"], cache["e1"],
                        cache["w1"], ("W_a", "b_a"))
    _attention_backward(g, params, dzb, cache["s1"], cache["a1"], cache["e2"],
                        cache["w2"], pair2)


def _attention_backward(g, params, dwp, idx, a, e, query_w, names):
    S = params.sememes.matrix[idx]
    # direct path: w' = sum_i a_i s_i
    g.sememes[idx] += a[:, None] * dwp[None, :]
    da = S @ dwp
    dlogit = a * (da - a @ da)  # softmax Jacobian-vector product
    # logit_i = s_i . e
    g.sememes[idx] += np.outer(dlogit, e)
    de = S.T @ dlogit
    dq = de * (1.0 - e * e)
    g.tensors[names[0]] += np.outer(dq, query_w)
    g.tensors[names[1]] += dq


def sgd_step(params: ModelParams, grads: GradientSet, lr: float) -> ModelParams:
    """In-place SGD update; frozen sememe rows are left untouched."""
    if lr < 0:
        raise ValueError("lr must be >= 0")
    for name, arr in params.named_tensors():
        arr -= lr * grads.tensors[name]
    table = params.sememes
    if table.trainable.all():
        table.matrix -= lr * grads.sememes
    else:
        m = table.trainable
        table.matrix[m] -= lr * grads.sememes[m]
    return params


def grad_check(kind, task, dim: int = 5, n_sememes: int = 6, rank: int = 2, *,
               rule_mode: str = "lowrank", seed: int = 0, lam: float = 1e-2,
               pos_weight: float = 3.0, eps: float = 1e-5,
               attention_tied: bool = True) -> float:
    """Max relative error of analytic vs central-difference gradients on a
    random small instance. ADD/MUL carry no model parameters and report 0."""
    from .embeddings import init_random

    kind = ModelKind(kind)
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    if kind in (ModelKind.ADD, ModelKind.MUL):
        return 0.0
    rng = np.random.default_rng(seed)
    ids = [f"s{i}" for i in range(n_sememes)]
    table = init_random(ids, dim, seed=seed + 1, scale=0.5)
    params = init_params(kind, dim, table, rule_mode=rule_mode, rank=rank,
                         seed=seed + 2, attention_tied=attention_tied)
    w1 = rng.uniform(-1.0, 1.0, dim)
    w2 = rng.uniform(-1.0, 1.0, dim)
    s1 = np.sort(rng.choice(n_sememes, size=int(rng.integers(2, 4)), replace=False))
    s2 = np.sort(rng.choice(n_sememes, size=int(rng.integers(2, 4)), replace=False))
    rule = list(CombinationRule)[int(rng.integers(0, 4))]
    if task == "similarity":
        target = rng.uniform(-1.0, 1.0, dim)
    else:
        target = np.zeros(n_sememes)
        target[rng.choice(n_sememes, size=2, replace=False)] = 1.0

    out = forward(params, w1, w2, s1, s2, rule)
    analytic = backward(out, params, task, target, lam=lam, pos_weight=pos_weight)

    def total_loss():
        o = forward(params, w1, w2, s1, s2, rule)
        if task == "similarity":
            t = loss_similarity(o.p, target)
        else:
            t = loss_sememe(predict_sememes(o.p, params.sememes.matrix), target, pos_weight)
        return t + regularization(params, lam)

    worst = 0.0
    checked = list(params.named_tensors()) + [("sememes", params.sememes.matrix)]
    for name, arr in checked:
        an = analytic.sememes if name == "sememes" else analytic.tensors[name]
        for ix in np.ndindex(arr.shape):
            orig = arr[ix]
            arr[ix] = orig + eps
            lp = total_loss()
            arr[ix] = orig - eps
            lm = total_loss()
            arr[ix] = orig
            num = (lp - lm) / (2.0 * eps)
            rel = abs(an[ix] - num) / max(abs(an[ix]), abs(num), 1e-8)
            worst = max(worst, rel)
    return worst


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    valid_loss: float
    lr: float


@dataclass
class TrainState:
    params: ModelParams
    epoch: int
    lr: float
    history: list[EpochStats] = field(default_factory=list)


@dataclass
class _Example:
    token: str
    w1: np.ndarray
    w2: np.ndarray
    s1: np.ndarray | None
    s2: np.ndarray | None
    rule: CombinationRule
    target: np.ndarray


def align_sememe_table(table: EmbeddingTable, inventory) -> EmbeddingTable:
    """Copy of `table` with rows reordered to inventory order.

    Every inventory sememe must be present; gaps are listed in the error so
    callers can backfill deliberately.
    """
    missing = [s for s in inventory if s not in table]
    if missing:
        preview = ", ".join(missing[:8]) + (", ..." if len(missing) > 8 else "")
        raise UnknownTokenError(
            f"sememe table is missing {len(missing)} inventory sememes: {preview}")
    idx = np.array([table.index(s) for s in inventory], dtype=np.intp)
    return EmbeddingTable(list(inventory), table.matrix[idx].copy(),
                          table.trainable[idx].copy())


def _prepare_examples(ds: KbDataset, split: str, task: str, kind: ModelKind,
                      words: EmbeddingTable, sememes: EmbeddingTable,
                      references: EmbeddingTable | None) -> list[_Example]:
    gaps = []
    examples = []
    needs_sememes = kind in SEMEME_KINDS
    for i in ds.split_indices(split):
        m = ds.mwes[i]
        missing = [c for c in (m.constituent1, m.constituent2) if c not in words]
        if missing:
            gaps.append(f"{m.token}: constituent embedding missing for {missing}")
            continue
        if task == "similarity":
            if references is None or m.token not in references:
                gaps.append(f"{m.token}: no reference embedding")
                continue
            target = np.array(references.lookup(m.token))
        else:
            if not m.sememes:
                gaps.append(f"{m.token}: no sememe annotation")
                continue
            target = np.zeros(len(sememes))
            target[ds.inventory.indices(m.sememes)] = 1.0
        s1 = s2 = None
        if needs_sememes:
            s1 = ds.inventory.indices(ds.lexicon[m.constituent1].sememes)
            s2 = ds.inventory.indices(ds.lexicon[m.constituent2].sememes)
        examples.append(_Example(m.token, words.lookup(m.constituent1),
                                 words.lookup(m.constituent2), s1, s2, m.rule, target))
    if gaps:
        listing = "\n  ".join(gaps)
        raise ValueError(f"coverage gaps in split {split!r}:\n  {listing}")
    return examples


def _example_loss(p, params, task, ex, pos_weight):
    if task == "similarity":
        return loss_similarity(p, ex.target)
    return loss_sememe(predict_sememes(p, params.sememes.matrix), ex.target, pos_weight)


def _mean_loss(params, task, examples, pos_weight):
    if not examples:
        return float("nan")
    total = 0.0
    for ex in examples:
        out = forward(params, ex.w1, ex.w2, ex.s1, ex.s2, ex.rule)
        total += _example_loss(out.p, params, task, ex, pos_weight)
    return total / len(examples)


def train(ds: KbDataset, kind, task: str, hyper: Hyperparams,
          words: EmbeddingTable, sememes: EmbeddingTable, *,
          references: EmbeddingTable | None = None, rule_mode: str = "lowrank",
          attention_tied: bool = True, epoch_callback=None) -> TrainState:
    """Per-example SGD over the training split.

    Word embeddings stay frozen; the sememe table is copied into the model
    (aligned to inventory order) and updated where its trainable flags allow.
    The learning rate for epoch n is lr0 * decay^n exactly. Loss history
    records the mean task loss on the train and valid splits after each epoch.
    """
    kind = ModelKind(kind)
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    hyper.validate()
    if ds.splits is None:
        raise KbError("dataset has no splits; call split_dataset first")
    table = align_sememe_table(sememes, ds.inventory)
    if words.dim != table.dim:
        raise ValueError(f"word dim {words.dim} != sememe dim {table.dim}")
    seq = np.random.SeedSequence(hyper.seed)
    r_init, r_shuffle = (np.random.default_rng(s) for s in seq.spawn(2))
    params = init_params(kind, words.dim, table, rule_mode=rule_mode,
                         rank=hyper.rank, seed=r_init, attention_tied=attention_tied)
    train_ex = _prepare_examples(ds, "train", task, kind, words, table, references)
    valid_ex = _prepare_examples(ds, "valid", task, kind, words, table, references)
    if not train_ex:
        raise ValueError("training split is empty")
    lr0 = hyper.resolved_lr0(task)
    pw = hyper.pos_weight
    history: list[EpochStats] = []
    updates = 0
    lr = lr0
    for epoch in range(hyper.epochs):
        order = r_shuffle.permutation(len(train_ex))
        pos = 0
        while pos < len(order):
            chunk = order[pos:pos + hyper.batch_size]
            pos += len(chunk)
            lr = lr0 * hyper.lr_decay ** (updates if hyper.decay_per_update else epoch)
            g = None
            for j in chunk:
                ex = train_ex[j]
                out = forward(params, ex.w1, ex.w2, ex.s1, ex.s2, ex.rule)
                loss = _example_loss(out.p, params, task, ex, pw)
                if not np.isfinite(loss):
                    raise NumericalError(
                        f"non-finite loss at epoch {epoch + 1}, mwe {ex.token!r}")
                gi = backward(out, params, task, ex.target, lam=0.0, pos_weight=pw)
                g = gi if g is None else g.add_(gi)
            if len(chunk) > 1:
                g.scale_(1.0 / len(chunk))
            if hyper.lam:
                for name, arr in params.regularized_tensors():
                    g.tensors[name] += hyper.lam * arr
            sgd_step(params, g, lr)
            updates += 1
        stats = EpochStats(epoch + 1,
                           _mean_loss(params, task, train_ex, pw),
                           _mean_loss(params, task, valid_ex, pw), lr)
        history.append(stats)
        if epoch_callback is not None:
            epoch_callback(stats, params)
    final_lr = lr0 * hyper.lr_decay ** (updates if hyper.decay_per_update else hyper.epochs)
    return TrainState(params, hyper.epochs, final_lr, history)


def history_to_csv(history) -> str:
    lines = ["epoch,train_loss,valid_loss,lr"]
    for h in history:
        lines.append(f"{h.epoch},{h.train_loss!r},{h.valid_loss!r},{h.lr!r}")
    return "\n".join(lines) + "\n"


MANIFEST_NAME = "manifest.txt"


def _rank_to_text(params: ModelParams) -> str:
    if not params.rank:
        return "0"
    values = set(params.rank.values())
    if len(values) == 1:
        return str(values.pop())
    return ",".join(f"{r.value}:{params.rank[r]}" for r in CombinationRule)


def _rank_from_text(text: str):
    if ":" not in text:
        return int(text)
    out = {}
    for part in text.split(","):
        key, val = part.split(":")
        out[CombinationRule(key)] = int(val)
    return out


def _tensor_filename(name: str) -> str:
    return name.replace(":", "_") + ".txt"


def save_checkpoint(path, params: ModelParams, *, epoch: int = 0, lr: float = 0.0):
    """Write one directory: a key=value manifest plus one embedding-format
    file per tensor (and the sememe table under its real tokens)."""
    os.makedirs(path, exist_ok=True)
    lines = [
        f"kind={params.kind.value}",
        f"d={params.dim}",
        f"h_r={_rank_to_text(params)}",
        f"rule_mode={params.rule_mode or 'none'}",
        f"epoch={epoch}",
        f"lr={lr!r}",
        f"attention_tied={str(params.attention_tied).lower()}",
    ]
    with open(os.path.join(path, MANIFEST_NAME), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    for name, arr in params.named_tensors():
        with open(os.path.join(path, _tensor_filename(name)), "w", encoding="utf-8") as f:
            f.write(matrix_to_text(arr))
    params.sememes.save(os.path.join(path, "sememes.txt"))


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    """Inverse of save_checkpoint. Trainable flags are not persisted; callers
    re-mark rows before resuming training."""
    manifest = {}
    with open(os.path.join(path, MANIFEST_NAME), encoding="utf-8") as f:
        for line in f:
            if "=" in line:
                key, val = line.rstrip("\n").split("=", 1)
                manifest[key] = val
    kind = ModelKind(manifest["kind"])
    dim = int(manifest["d"])
    rule_mode = manifest.get("rule_mode", "none")
    rule_mode = None if rule_mode == "none" else rule_mode
    tied = manifest.get("attention_tied", "true") == "true"
    rank = _rank_from_text(manifest.get("h_r", "0"))
    table = read_embeddings(os.path.join(path, "sememes.txt"), expected_dim=dim)
    if kind in (ModelKind.ADD, ModelKind.MUL):
        params = init_params(kind, dim, table)
    else:
        params = init_params(kind, dim, table,
                             rule_mode=rule_mode or "lowrank",
                             rank=rank if rank else 1, seed=0, attention_tied=tied)
    for name, arr in params.named_tensors():
        data = matrix_from_text(
            open(os.path.join(path, _tensor_filename(name)), encoding="utf-8").read())
        arr[...] = data.reshape(arr.shape)
    return params, manifest
