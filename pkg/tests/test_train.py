import math

import numpy as np
import pytest

from sememe_compose import (CombinationRule, GradientSet, Hyperparams,
                            ModelKind, NumericalError, backward, forward,
                            grad_check, init_params, init_random,
                            load_checkpoint, loss_sememe, loss_similarity,
                            predict_sememes, regularization, save_checkpoint,
                            sgd_step, split_dataset, train)
from sememe_compose.train import align_sememe_table, history_to_csv
from sememe_compose.synthetic import SyntheticConfig, generate


def tiny_params(kind, dim=4, n_sememes=5, seed=0, **kw):
    table = init_random([f"s{i}" for i in range(n_sememes)], dim, seed=seed + 1, scale=0.5)
    return init_params(kind, dim, table, seed=seed, **kw)


# ---------------------------------------------------------------- losses

def test_loss_similarity():
    v = np.array([1.0, 2.0])
    assert loss_similarity(v, v.copy()) == 0.0
    assert loss_similarity(np.array([1.0, 2.0]), np.array([1.0, 0.0])) == 4.0
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(2, 7))
    expected = sum((x - y) ** 2 for x, y in zip(a, b))
    assert loss_similarity(a, b) == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ValueError, match="mismatch"):
        loss_similarity(np.ones(2), np.ones(3))


def test_regularization():
    params = tiny_params(ModelKind.SCAS, dim=2)
    assert regularization(params, 0.0) == 0.0
    params.W_c = np.ones((2, 2))   # pretend-small matrix for the arithmetic
    params.b_c = np.ones(2) * 100  # biases are not penalized
    assert regularization(params, 2.0) == pytest.approx(4.0, abs=1e-15)

    params = tiny_params(ModelKind.SCMSA_R, dim=3, rule_mode="lowrank", rank=2)
    expected = 0.0
    for name, arr in params.named_tensors():
        if not name.startswith("b_"):
            expected += float(np.sum(np.asarray(arr) ** 2))
    assert regularization(params, 0.3) == pytest.approx(0.15 * expected, rel=1e-12)
    assert regularization(params, 0.3) >= 0.0
    assert regularization(params, 1e-6) >= 0.0


def test_predict_sememes():
    W = np.zeros((3, 2))
    assert np.allclose(predict_sememes(np.zeros(2), W), 0.5)
    p = np.array([1.0, 1.0])
    W = np.vstack([p / np.linalg.norm(p) * 50.0, np.zeros(2)])
    scores = predict_sememes(p, W)
    assert scores[0] > 1.0 - 1e-12
    # hand-set toy: 4 sememes, d=2
    W = np.array([[0.5, 0.0], [0.0, -0.5], [1.0, 1.0], [-1.0, 0.5]])
    p = np.array([0.4, -0.8])
    got = predict_sememes(p, W)
    for i in range(4):
        t = W[i][0] * p[0] + W[i][1] * p[1]
        assert got[i] == pytest.approx(1.0 / (1.0 + math.exp(-t)), abs=1e-12)


def test_loss_sememe():
    gold = np.array([1.0, 0.0])
    near_perfect = np.array([1.0 - 1e-13, 1e-13])
    assert loss_sememe(near_perfect, gold, 1.0) < 1e-10
    flat = np.array([0.5, 0.5])
    assert loss_sememe(flat, gold, 1.0) == pytest.approx(2.0 * math.log(2.0), abs=1e-12)
    # doubling the positive weight doubles only the positive-label term
    l1 = loss_sememe(flat, gold, 1.0)
    l2 = loss_sememe(flat, gold, 2.0)
    assert l2 - l1 == pytest.approx(-math.log(0.5), abs=1e-12)
    # clamping keeps saturated scores finite
    assert np.isfinite(loss_sememe(np.array([0.0, 1.0]), gold, 5.0))


# ---------------------------------------------------------------- backward

ALL_CONFIGS = [
    (ModelKind.SCAS_S, None),
    (ModelKind.SCAS, None),
    (ModelKind.SCMSA, None),
    (ModelKind.SCAS_R, "full"),
    (ModelKind.SCAS_R, "lowrank"),
    (ModelKind.SCMSA_R, "full"),
    (ModelKind.SCMSA_R, "lowrank"),
]


@pytest.mark.parametrize("kind,mode", ALL_CONFIGS)
@pytest.mark.parametrize("task", ["similarity", "sememe"])
def test_grad_check_all_kinds(kind, mode, task):
    err = grad_check(kind, task, dim=5, n_sememes=6, rank=2,
                     rule_mode=mode or "lowrank", seed=3)
    assert err < 1e-4


def test_grad_check_untied_attention():
    err = grad_check(ModelKind.SCMSA, "sememe", dim=5, n_sememes=6,
                     seed=5, attention_tied=False)
    assert err < 1e-4


def test_grad_check_parameterless_kinds_report_zero():
    assert grad_check(ModelKind.ADD, "similarity") == 0.0
    assert grad_check(ModelKind.MUL, "sememe") == 0.0


def test_backward_zero_upstream_gradient():
    params = tiny_params(ModelKind.SCAS)
    out = forward(params, np.zeros(4), np.zeros(4), np.array([0]), np.array([1]))
    # target equal to the output and no regularization: gradient must vanish
    g = backward(out, params, "similarity", out.p.copy(), lam=0.0)
    for arr in g.tensors.values():
        assert np.all(arr == 0.0)
    assert np.all(g.sememes == 0.0)


def test_backward_requires_cache():
    params = tiny_params(ModelKind.SCAS)
    from sememe_compose import ComposedOutput
    with pytest.raises(ValueError, match="cache"):
        backward(ComposedOutput(np.zeros(4), {}), params, "similarity", np.zeros(4))


def test_tied_weight_gradient_targeted_row():
    # perturbing a gold sememe that also sits in a constituent's set must move
    # the loss through both the classifier and the composition input; the
    # analytic gradient has to equal the finite-difference total
    dim, n = 4, 5
    table = init_random([f"s{i}" for i in range(n)], dim, seed=2, scale=0.5)
    params = init_params(ModelKind.SCAS, dim, table, seed=7)
    rng = np.random.default_rng(11)
    w1, w2 = rng.uniform(-1, 1, (2, dim))
    s1, s2 = np.array([0, 2]), np.array([1, 3])
    gold = np.zeros(n)
    gold[2] = 1.0  # sememe 2 is gold AND in s1
    pw = 3.0

    out = forward(params, w1, w2, s1, s2)
    g = backward(out, params, "sememe", gold, lam=0.0, pos_weight=pw)

    def loss():
        o = forward(params, w1, w2, s1, s2)
        return loss_sememe(predict_sememes(o.p, params.sememes.matrix), gold, pw)

    eps = 1e-6
    for j in range(dim):
        orig = params.sememes.matrix[2, j]
        params.sememes.matrix[2, j] = orig + eps
        lp = loss()
        params.sememes.matrix[2, j] = orig - eps
        lm = loss()
        params.sememes.matrix[2, j] = orig
        num = (lp - lm) / (2 * eps)
        assert abs(g.sememes[2, j] - num) / max(abs(num), 1e-8) < 1e-5


# ---------------------------------------------------------------- sgd

def test_sgd_zero_lr_keeps_params():
    params = tiny_params(ModelKind.SCMSA)
    before = {name: arr.copy() for name, arr in params.named_tensors()}
    sem_before = params.sememes.matrix.copy()
    g = GradientSet.zeros_like(params)
    for arr in g.tensors.values():
        arr += 1.0
    g.sememes += 1.0
    sgd_step(params, g, 0.0)
    for name, arr in params.named_tensors():
        assert np.array_equal(arr, before[name])
    assert np.array_equal(params.sememes.matrix, sem_before)


def test_sgd_respects_frozen_rows():
    params = tiny_params(ModelKind.SCAS)
    params.sememes.trainable[:] = [True, False, True, False, True]
    frozen = params.sememes.matrix[[1, 3]].copy()
    g = GradientSet.zeros_like(params)
    g.sememes += 1.0
    sgd_step(params, g, 0.1)
    assert np.array_equal(params.sememes.matrix[[1, 3]], frozen)
    assert not np.array_equal(params.sememes.matrix[0], frozen[0])


def test_single_step_descends():
    rng = np.random.default_rng(3)
    params = tiny_params(ModelKind.SCAS, dim=5, n_sememes=6, seed=13)
    w1, w2 = rng.uniform(-1, 1, (2, 5))
    s1, s2 = np.array([0, 1]), np.array([2, 4])
    target = rng.uniform(-1, 1, 5)
    out = forward(params, w1, w2, s1, s2)
    before = loss_similarity(out.p, target)
    g = backward(out, params, "similarity", target, lam=0.0)
    sgd_step(params, g, 1e-4)
    after = loss_similarity(forward(params, w1, w2, s1, s2).p, target)
    assert after < before


# ---------------------------------------------------------------- train loop

def _training_setup(n_mwes=30, dim=8, seed=5, **gen_kw):
    data = generate(SyntheticConfig(n_words=40, n_sememes=20, n_mwes=n_mwes,
                                    dim=dim, seed=seed, **gen_kw))
    ds = split_dataset(data.ds, (8, 1, 1), seed=seed)
    return data, ds


def test_train_records_history_and_lr_schedule():
    data, ds = _training_setup()
    hyper = Hyperparams(rank=2, lam=1e-4, lr0=0.05, lr_decay=0.99, epochs=7, seed=3)
    state = train(ds, ModelKind.SCAS, "similarity", hyper, data.embeddings,
                  data.sememe_vectors, references=data.embeddings)
    assert len(state.history) == 7
    for n, h in enumerate(state.history):
        assert h.epoch == n + 1
        assert h.lr == 0.05 * 0.99 ** n  # exact power, not cumulative product
    assert state.lr == 0.05 * 0.99 ** 7
    assert np.isfinite([h.valid_loss for h in state.history]).all()


def test_train_deterministic_history():
    data, ds = _training_setup()
    hyper = Hyperparams(rank=2, lr0=0.05, epochs=5, seed=9)
    runs = []
    for _ in range(2):
        state = train(ds, ModelKind.SCMSA, "similarity", hyper, data.embeddings,
                      data.sememe_vectors, references=data.embeddings)
        runs.append(history_to_csv(state.history))
    assert runs[0] == runs[1]


def test_train_freezes_word_embeddings_and_input_tables():
    data, ds = _training_setup()
    words_before = data.embeddings.matrix.copy()
    sem_before = data.sememe_vectors.matrix.copy()
    hyper = Hyperparams(rank=2, lr0=0.05, epochs=3, seed=1)
    state = train(ds, ModelKind.SCAS, "sememe", hyper, data.embeddings,
                  data.sememe_vectors)
    # frozen word rows bit-identical; the input sememe table is copied, and
    # the model's own sememe rows did move
    assert np.array_equal(data.embeddings.matrix, words_before)
    assert np.array_equal(data.sememe_vectors.matrix, sem_before)
    assert not np.array_equal(state.params.sememes.matrix, sem_before)


def test_train_overfits_realizable_target():
    data, ds = _training_setup(n_mwes=25, dim=8, seed=21)
    hyper = Hyperparams(rank=2, lam=0.0, lr0=0.1, lr_decay=1.0, epochs=150, seed=2)
    state = train(ds, ModelKind.SCAS, "similarity", hyper, data.embeddings,
                  data.sememe_vectors, references=data.embeddings)
    assert min(h.train_loss for h in state.history) < 1e-3


def test_train_sememe_task_learns():
    data, ds = _training_setup(n_mwes=30, dim=8, seed=23)
    hyper = Hyperparams(rank=2, lam=0.0, pos_weight=2.0, lr0=0.02, lr_decay=0.99,
                        epochs=150, seed=4)
    state = train(ds, ModelKind.SCAS, "sememe", hyper, data.embeddings,
                  data.sememe_vectors)
    losses = [h.train_loss for h in state.history]
    assert losses[-1] < 0.5 * losses[0]


def test_train_coverage_gaps_are_loud():
    data, ds = _training_setup()
    hyper = Hyperparams(epochs=1, seed=0)
    words_only = data.embeddings  # fine for sememe task
    with pytest.raises(ValueError, match="coverage gaps"):
        # drop the reference rows: similarity training must list the gaps
        from sememe_compose import EmbeddingTable
        n_words = 40
        truncated = EmbeddingTable(data.embeddings.tokens[:n_words],
                                   data.embeddings.matrix[:n_words])
        train(ds, ModelKind.SCAS, "similarity", hyper, truncated,
              data.sememe_vectors, references=truncated)


def test_train_nonfinite_loss_diagnostic():
    # a NaN reference row must abort with the epoch and the offending MWE
    data, ds = _training_setup()
    poisoned = data.embeddings.copy()
    token = ds.mwes[ds.splits["train"][0]].token
    poisoned.matrix[poisoned.index(token)] = np.nan
    hyper = Hyperparams(rank=2, lr0=0.01, epochs=2, seed=0)
    with pytest.raises(NumericalError, match=rf"epoch 1.*{token}"):
        train(ds, ModelKind.SCAS, "similarity", hyper, poisoned,
              data.sememe_vectors, references=poisoned)


def test_train_batched_matches_shapes_and_runs():
    data, ds = _training_setup()
    hyper = Hyperparams(rank=2, lr0=0.05, epochs=3, seed=6, batch_size=4)
    state = train(ds, ModelKind.SCAS, "similarity", hyper, data.embeddings,
                  data.sememe_vectors, references=data.embeddings)
    assert len(state.history) == 3


def test_train_decay_per_update():
    data, ds = _training_setup()
    hyper = Hyperparams(rank=2, lr0=0.05, lr_decay=0.9, epochs=2, seed=6,
                        decay_per_update=True)
    state = train(ds, ModelKind.SCAS, "similarity", hyper, data.embeddings,
                  data.sememe_vectors, references=data.embeddings)
    n_updates = 2 * len(ds.splits["train"])
    assert state.lr == pytest.approx(0.05 * 0.9 ** n_updates, rel=1e-12)


# ---------------------------------------------------------------- alignment

def test_align_sememe_table_reorders_and_errors(table1_ds):
    inv = table1_ds.inventory
    shuffled = list(inv.ids)[::-1]
    table = init_random(shuffled, 3, seed=0)
    aligned = align_sememe_table(table, inv)
    assert aligned.tokens == inv.ids
    for s in inv.ids:
        assert np.array_equal(aligned.lookup(s), table.lookup(s))
    from sememe_compose import UnknownTokenError
    with pytest.raises(UnknownTokenError, match="missing"):
        align_sememe_table(init_random(["zzz"], 3, seed=0), inv)


# ---------------------------------------------------------------- checkpoints

@pytest.mark.parametrize("kind,mode", [(ModelKind.SCAS, None),
                                       (ModelKind.SCMSA, None),
                                       (ModelKind.SCAS_R, "full"),
                                       (ModelKind.SCMSA_R, "lowrank")])
def test_checkpoint_roundtrip(tmp_path, kind, mode):
    params = tiny_params(kind, dim=3, n_sememes=4, seed=8,
                         **({"rule_mode": mode, "rank": 2} if mode else {}))
    save_checkpoint(tmp_path / "ckpt", params, epoch=12, lr=0.034)
    loaded, manifest = load_checkpoint(tmp_path / "ckpt")
    assert manifest["kind"] == kind.value
    assert manifest["epoch"] == "12"
    assert loaded.kind is kind
    for (name, arr), (name2, arr2) in zip(params.named_tensors(), loaded.named_tensors()):
        assert name == name2
        assert np.array_equal(arr, arr2)
    assert loaded.sememes.tokens == params.sememes.tokens
    assert np.array_equal(loaded.sememes.matrix, params.sememes.matrix)
    # same params forward the same way after the round trip
    w1, w2 = np.random.default_rng(0).normal(size=(2, 3))
    a = forward(params, w1, w2, np.array([0, 1]), np.array([2]), CombinationRule.N_N)
    b = forward(loaded, w1, w2, np.array([0, 1]), np.array([2]), CombinationRule.N_N)
    assert np.array_equal(a.p, b.p)


def test_checkpoint_bytes_deterministic(tmp_path):
    for run in ("a", "b"):
        params = tiny_params(ModelKind.SCAS, dim=3, n_sememes=4, seed=8)
        save_checkpoint(tmp_path / run, params, epoch=3, lr=0.01)
    for name in ("manifest.txt", "W_c.txt", "b_c.txt", "sememes.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
