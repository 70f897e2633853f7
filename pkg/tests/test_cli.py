import os

import numpy as np
import pytest

from sememe_compose import pearson, spearman
from sememe_compose.cli import (RunConfig, build_run_config, cmd_eval_sememe,
                                cmd_eval_sim, cmd_scd, cmd_train, load_config,
                                main)

from conftest import TABLE1_LEXICON, TABLE1_MWES, TABLE1_EXPECTED_SCD


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    rc = main(["gen-synthetic", "--n-words", "40", "--n-sememes", "20",
               "--n-mwes", "40", "--dim", "6", "--seed", "3",
               "--sim-pairs", "10", "--out", str(out)])
    assert rc == 0
    return out


def _base_cfg(synth_dir, out, **kw):
    cfg = RunConfig(lexicon=str(synth_dir / "lexicon.tsv"),
                    mwes=str(synth_dir / "mwes.tsv"),
                    embeddings=str(synth_dir / "embeddings.txt"),
                    sememe_embeddings=str(synth_dir / "sememe_vectors.txt"),
                    out=str(out), min_sememe_freq=1, epochs=5, lr0=0.05,
                    lam=0.0, rank=2, seed=1, split_seed=1)
    for key, value in kw.items():
        setattr(cfg, key, value)
    return cfg


# ---------------------------------------------------------------- scd

def test_cmd_scd_table1(tmp_path):
    lex = tmp_path / "lex.tsv"
    mwe = tmp_path / "mwe.tsv"
    lex.write_text(TABLE1_LEXICON, encoding="utf-8")
    mwe.write_text(TABLE1_MWES, encoding="utf-8")
    cfg = RunConfig(lexicon=str(lex), mwes=str(mwe), out=str(tmp_path / "run"))
    result = cmd_scd(cfg)
    lines = open(result["report"], encoding="utf-8").read().splitlines()
    got = dict(line.split("\t") for line in lines)
    assert {t: int(v) for t, v in got.items()} == TABLE1_EXPECTED_SCD


def test_cmd_scd_gold_correlations(tmp_path):
    lex = tmp_path / "lex.tsv"
    mwe = tmp_path / "mwe.tsv"
    lex.write_text(TABLE1_LEXICON, encoding="utf-8")
    mwe.write_text(TABLE1_MWES, encoding="utf-8")
    # gold equal to the computed SCDs: both correlations are exactly 1
    gold = tmp_path / "gold.tsv"
    gold.write_text("".join(f"{t}\t{v}\n" for t, v in TABLE1_EXPECTED_SCD.items()),
                    encoding="utf-8")
    cfg = RunConfig(lexicon=str(lex), mwes=str(mwe), gold_scd=str(gold),
                    out=str(tmp_path / "run1"))
    result = cmd_scd(cfg)
    assert result["pearson"] == pytest.approx(1.0, abs=1e-12)
    assert result["spearman"] == pytest.approx(1.0, abs=1e-12)

    # seeded noise on the gold side: must match the library correlations
    rng = np.random.default_rng(4)
    noisy = {t: v + float(rng.normal(0, 0.3)) for t, v in TABLE1_EXPECTED_SCD.items()}
    gold2 = tmp_path / "gold2.tsv"
    gold2.write_text("".join(f"{t}\t{v!r}\n" for t, v in noisy.items()), encoding="utf-8")
    cfg = RunConfig(lexicon=str(lex), mwes=str(mwe), gold_scd=str(gold2),
                    out=str(tmp_path / "run2"))
    result = cmd_scd(cfg)
    tokens = list(noisy)
    computed = [float(TABLE1_EXPECTED_SCD[t]) for t in tokens]
    human = [noisy[t] for t in tokens]
    assert result["pearson"] == pytest.approx(pearson(computed, human), abs=1e-12)
    assert result["spearman"] == pytest.approx(spearman(computed, human), abs=1e-12)


def test_cmd_scd_unannotated_is_config_error(tmp_path):
    lex = tmp_path / "lex.tsv"
    mwe = tmp_path / "mwe.tsv"
    lex.write_text("a\tx\nb\ty\n", encoding="utf-8")
    mwe.write_text("ab\ta\tb\tN_N\t\n", encoding="utf-8")
    rc = main(["scd", "--lexicon", str(lex), "--mwes", str(mwe),
               "--out", str(tmp_path / "run")])
    assert rc == 1
    assert not (tmp_path / "run").exists()  # no partial outputs


# ---------------------------------------------------------------- train

def test_cmd_train_outputs_and_determinism(synth_dir, tmp_path):
    results = []
    for sub in ("a", "b"):
        cfg = _base_cfg(synth_dir, tmp_path / sub, task="similarity", model="scas")
        results.append(cmd_train(cfg))
    # identical seeds reproduce the artifacts byte for byte (the config
    # snapshot differs by the out path itself, so it is not compared)
    for name in ("loss_history.csv", "checkpoint_final/manifest.txt",
                 "checkpoint_final/W_c.txt", "checkpoint_final/sememes.txt",
                 "run.log"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"
    csv = (tmp_path / "a" / "loss_history.csv").read_text().splitlines()
    assert csv[0] == "epoch,train_loss,valid_loss,lr"
    assert len(csv) == 6  # header + 5 epochs
    assert os.path.isdir(results[0]["checkpoint_best"])


def test_cmd_train_similarity_leakage_guard(synth_dir, tmp_path):
    cfg = _base_cfg(synth_dir, tmp_path / "run", task="similarity", model="scas",
                    similarity_datasets=str(synth_dir / "sim_pairs.tsv"))
    cmd_train(cfg)
    log_text = (tmp_path / "run" / "run.log").read_text()
    assert "excluding" in log_text  # at least one eval MWE was in train


def test_cmd_train_rejects_bad_model(synth_dir, tmp_path):
    rc = main(["train", "--lexicon", str(synth_dir / "lexicon.tsv"),
               "--mwes", str(synth_dir / "mwes.tsv"),
               "--embeddings", str(synth_dir / "embeddings.txt"),
               "--model", "transformer", "--out", str(tmp_path / "x")])
    assert rc == 1
    assert not (tmp_path / "x").exists()


def test_cmd_train_missing_required_key(tmp_path):
    rc = main(["train", "--out", str(tmp_path / "x")])
    assert rc == 1


# ---------------------------------------------------------------- eval

@pytest.fixture(scope="module")
def trained(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    cfg = _base_cfg(synth_dir, out, task="similarity", model="scas",
                    epochs=40, lr0=0.1)
    cfg.decay = 1.0
    result = cmd_train(cfg)
    return out, result


@pytest.fixture(scope="module")
def trained_sememe(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("trained_sememe")
    cfg = _base_cfg(synth_dir, out, task="sememe", model="scas",
                    epochs=40, lr0=0.02, pos_weight=2.0)
    result = cmd_train(cfg)
    return out, result


def test_cmd_eval_sim(synth_dir, trained, tmp_path):
    ckpt = trained[1]["checkpoint_final"]
    cfg = _base_cfg(synth_dir, tmp_path / "eval", task="similarity", model="scas",
                    checkpoint=ckpt,
                    similarity_datasets=str(synth_dir / "sim_pairs.tsv"))
    result = cmd_eval_sim(cfg)
    assert len(result["rows"]) == 1
    name, n_pairs, n_skipped, rho = result["rows"][0]
    assert name == "sim_pairs.tsv"
    assert n_pairs == 10 and n_skipped == 0
    assert -100.0 <= rho <= 100.0
    text = open(result["report"], encoding="utf-8").read().splitlines()
    assert text[0] == "dataset,n_pairs,n_skipped,spearman_x100"
    assert text[1].startswith("sim_pairs.tsv,10,0,")


def test_cmd_eval_sim_checkpoint_mismatch(synth_dir, trained, tmp_path):
    ckpt = trained[1]["checkpoint_final"]
    cfg = _base_cfg(synth_dir, tmp_path / "eval", task="similarity", model="scmsa",
                    checkpoint=ckpt,
                    similarity_datasets=str(synth_dir / "sim_pairs.tsv"))
    from sememe_compose.cli import ConfigError
    with pytest.raises(ConfigError, match="does not match"):
        cmd_eval_sim(cfg)


def test_cmd_eval_sememe_reports(synth_dir, trained_sememe, tmp_path):
    ckpt = trained_sememe[1]["checkpoint_final"]
    cfg = _base_cfg(synth_dir, tmp_path / "eval", task="sememe", model="scas",
                    checkpoint=ckpt)
    result = cmd_eval_sememe(cfg)
    assert 0.0 < result["map"] <= 1.0
    assert 0.0 <= result["f1"] <= 1.0
    # bucket sizes cover the scored test records exactly
    assert sum(b.n for b in result["scd_table"].values()) == len(result["records"])
    assert sum(b.n for b in result["rule_table"].values()) == len(result["records"])
    text = open(result["breakdown_scd"], encoding="utf-8").read().splitlines()
    assert text[0] == "scd,n,map_x100"
    assert len(text) - 1 == len(result["scd_table"])
    text = open(result["breakdown_rule"], encoding="utf-8").read().splitlines()
    assert text[0] == "rule,n,avg_scd,map_x100"


def test_cmd_train_loss_csv_mostly_non_increasing(synth_dir, tmp_path):
    cfg = _base_cfg(synth_dir, tmp_path / "run", task="similarity", model="scas",
                    epochs=60, lr0=0.05, decay=0.95)
    result = cmd_train(cfg)
    rows = open(result["loss_csv"], encoding="utf-8").read().splitlines()[1:]
    losses = [float(r.split(",")[1]) for r in rows]
    steps = [(a, b) for a, b in zip(losses[10:], losses[11:])]
    frac = sum(b <= a for a, b in steps) / len(steps)
    assert frac >= 0.95, f"train loss decreased in only {frac:.0%} of late epochs"


# ---------------------------------------------------------------- gradcheck

def test_cmd_gradcheck_ok():
    rc = main(["gradcheck", "--kinds", "scas,scas_r", "--tasks", "similarity"])
    assert rc == 0


def test_cmd_gradcheck_parameterless_rows_report_zero():
    import argparse
    from sememe_compose.cli import cmd_gradcheck
    args = argparse.Namespace(kinds="add,mul", tasks="", seed=0, out="")
    result = cmd_gradcheck(args)
    assert result["ok"]
    assert len(result["rows"]) == 4
    assert all(err == 0.0 for _, _, err, _ in result["rows"])


def test_cmd_gradcheck_full_matrix_row_count(capsys):
    rc = main(["gradcheck"])
    assert rc == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    # header + 9 kind rows x 2 tasks
    assert len(lines) == 1 + 18


# ---------------------------------------------------------------- config

def test_config_file_and_flag_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("model=scmsa\nseed=7\nepochs=3\n# comment\n", encoding="utf-8")
    values = load_config(str(path))
    assert values == {"model": "scmsa", "seed": 7, "epochs": 3}

    import argparse
    ns = argparse.Namespace(config=str(path), model=None, seed="11")
    cfg = build_run_config(ns)
    assert cfg.model == "scmsa"  # from the file
    assert cfg.seed == 11        # flag overrides
    assert cfg.epochs == 3


def test_config_unknown_key(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("no_such_key=1\n", encoding="utf-8")
    from sememe_compose.cli import ConfigError
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(str(path))


def test_usage_error_exit_code():
    assert main(["no-such-command"]) == 1
