"""Command-line entry point: SCD reports, training, evaluation, synthetic
data generation and gradient checking.

Every command validates its configuration fully before touching the output
directory, writes a config snapshot plus a log into one run directory, and is
deterministic under a fixed config. Exit codes: 0 success, 1 config/data
error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from .compose import ModelKind, RULE_KINDS, RULE_MODES, compose_entry
from .embeddings import (EmbeddingFormatError, EmbeddingTable, UnknownTokenError,
                         init_random, read_embeddings)
from .kb import (KbDataset, KbError, SememeInventory, mean_scd_by_rule, mwe_scd,
                 parse_kb, partition_by_rule, partition_by_scd, filter_sememes,
                 split_dataset)
from .metrics import (DEFAULT_DELTA_GRID, breakdown, evaluate_similarity,
                      f1_at_threshold, make_record, map_score,
                      parse_similarity_pairs, pearson, spearman, tune_delta)
from .synthetic import SyntheticConfig, generate, write_files
from .train import (Hyperparams, NumericalError, TASKS, align_sememe_table,
                    history_to_csv, load_checkpoint, predict_sememes,
                    save_checkpoint, train)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

GRADCHECK_TOLERANCE = 1e-4

log = logging.getLogger("sememe_compose")


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


@dataclass
class RunConfig:
    """Effective configuration of one command; every field doubles as a
    config-file key and a CLI flag of the same name."""

    lexicon: str = ""
    mwes: str = ""
    embeddings: str = ""
    sememe_embeddings: str = ""
    similarity_datasets: str = ""   # comma-separated paths
    gold_scd: str = ""
    checkpoint: str = ""
    model: str = "scas"
    rule_mode: str = "lowrank"
    task: str = "similarity"
    out: str = ""
    seed: int = 0
    split_ratios: str = "8:1:1"
    split_seed: int = 0
    min_sememe_freq: int = 5
    rank: int = 5
    lam: float = 1e-4
    pos_weight: float = 100.0
    lr0: float = 0.0                # 0 means the task default
    decay: float = 0.99
    epochs: int = 50
    batch_size: int = 1
    delta_grid: str = ""            # comma-separated; empty = default grid
    skip_missing_pairs: bool = True
    attention_tied: bool = True


def _coerce(value: str, to_type):
    if to_type is bool:
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected a boolean, got {value!r}")
    try:
        return to_type(value)
    except ValueError:
        raise ConfigError(f"expected {to_type.__name__}, got {value!r}") from None


def load_config(path: str) -> dict:
    """Parse a key=value config file; `#` comments and blank lines allowed."""
    fields = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    types = {f.name: type(f.default) for f in dataclasses.fields(RunConfig)}
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in fields:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _coerce(value, types[key])
    return out


def build_run_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    types = {f.name: type(f.default) for f in dataclasses.fields(RunConfig)}
    for f in dataclasses.fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = _coerce(flag, types[f.name]) if isinstance(flag, str) else flag
    return RunConfig(**values)


def _require_paths(cfg: RunConfig, names):
    for name in names:
        value = getattr(cfg, name)
        if not value:
            raise ConfigError(f"config key {name!r} is required for this command")
        if name != "out" and not os.path.exists(value):
            raise ConfigError(f"{name} path does not exist: {value}")


def _validate_model(cfg: RunConfig) -> ModelKind:
    try:
        kind = ModelKind(cfg.model)
    except ValueError:
        raise ConfigError(f"unknown model {cfg.model!r}") from None
    if cfg.rule_mode not in RULE_MODES:
        raise ConfigError(f"rule_mode must be one of {RULE_MODES}")
    if cfg.task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}")
    return kind


def _parse_ratios(text: str):
    try:
        parts = tuple(float(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"bad split_ratios {text!r}") from None
    if len(parts) != 3 or any(p <= 0 for p in parts):
        raise ConfigError(f"split_ratios must be three positive numbers, got {text!r}")
    return parts


def _hyper(cfg: RunConfig) -> Hyperparams:
    h = Hyperparams(rank=cfg.rank, lam=cfg.lam, pos_weight=cfg.pos_weight,
                    lr0=cfg.lr0 if cfg.lr0 > 0 else None, lr_decay=cfg.decay,
                    epochs=cfg.epochs, seed=cfg.seed, batch_size=cfg.batch_size)
    try:
        h.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return h


def _delta_grid(cfg: RunConfig):
    if not cfg.delta_grid:
        return DEFAULT_DELTA_GRID
    try:
        grid = tuple(float(x) for x in cfg.delta_grid.split(","))
    except ValueError:
        raise ConfigError(f"bad delta_grid {cfg.delta_grid!r}") from None
    if not grid:
        raise ConfigError("delta_grid must be non-empty")
    return grid


def _start_run(cfg: RunConfig):
    """Create the run directory, snapshot the config and attach a log file."""
    os.makedirs(cfg.out, exist_ok=True)
    lines = [f"{f.name}={getattr(cfg, f.name)}" for f in dataclasses.fields(RunConfig)]
    with open(os.path.join(cfg.out, "config.txt"), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    log.setLevel(logging.INFO)
    for h in list(log.handlers):
        log.removeHandler(h)
    handler = logging.FileHandler(os.path.join(cfg.out, "run.log"), mode="w",
                                  encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    stream = logging.StreamHandler(sys.stderr)
    stream.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(stream)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def _load_dataset(cfg: RunConfig, split: bool) -> KbDataset:
    ds = parse_kb(_read(cfg.lexicon), _read(cfg.mwes))
    n_before = len(ds.inventory)
    ds = filter_sememes(ds, cfg.min_sememe_freq)
    log.info("sememe frequency filter (min %d): %d -> %d sememes, %d MWEs kept",
             cfg.min_sememe_freq, n_before, len(ds.inventory), len(ds.mwes))
    if split:
        ds = split_dataset(ds, _parse_ratios(cfg.split_ratios), cfg.split_seed)
        sizes = {name: len(idx) for name, idx in ds.splits.items()}
        log.info("split sizes: %s", sizes)
    return ds


def _load_sememe_table(cfg: RunConfig, inventory: SememeInventory,
                       dim: int) -> EmbeddingTable:
    """Sememe vectors from file when configured, random otherwise; sememes
    missing from the file are backfilled with random rows (logged)."""
    if cfg.sememe_embeddings:
        table = read_embeddings(cfg.sememe_embeddings, expected_dim=dim)
        missing = [s for s in inventory if s not in table]
        if missing:
            log.info("backfilling %d sememes missing from %s with random vectors",
                     len(missing), cfg.sememe_embeddings)
            extra = init_random(missing, dim, seed=cfg.seed + 101, scale=0.01)
            table = EmbeddingTable(table.tokens + extra.tokens,
                                   np.vstack([table.matrix, extra.matrix]))
    else:
        log.info("no sememe_embeddings configured; initializing %d random vectors",
                 len(inventory))
        table = init_random(list(inventory), dim, seed=cfg.seed + 101, scale=0.01)
    table = align_sememe_table(table, inventory)
    table.mark_trainable(table.tokens)  # sememe vectors are fine-tuned
    return table


def cmd_scd(cfg: RunConfig) -> dict:
    """Write a per-MWE SCD report; with a gold file, also report Pearson and
    Spearman correlation against the human scores."""
    _require_paths(cfg, ["lexicon", "mwes", "out"])
    if cfg.gold_scd:
        _require_paths(cfg, ["gold_scd"])
    ds = parse_kb(_read(cfg.lexicon), _read(cfg.mwes))
    unannotated = [m.token for m in ds.mwes if not m.sememes]
    if unannotated:
        raise ConfigError(
            f"{len(unannotated)} MWEs have no sememe annotation: "
            + ", ".join(unannotated[:8]))
    _start_run(cfg)
    scds = {m.token: int(mwe_scd(ds, m)) for m in ds.mwes}
    report = os.path.join(cfg.out, "scd_report.tsv")
    with open(report, "w", encoding="utf-8") as f:
        for m in ds.mwes:
            f.write(f"{m.token}\t{scds[m.token]}\n")
    log.info("wrote %s (%d MWEs)", report, len(ds.mwes))
    result = {"report": report, "scds": scds}
    if cfg.gold_scd:
        gold = {}
        for lineno, line in enumerate(_read(cfg.gold_scd).splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ConfigError(f"gold_scd line {lineno}: expected token<TAB>value")
            gold[fields[0]] = float(fields[1])
        common = [t for t in gold if t in scds]
        skipped = len(gold) - len(common)
        if skipped:
            log.info("ignoring %d gold entries without a computed SCD", skipped)
        if len(common) < 2:
            raise ConfigError("need at least 2 overlapping MWEs for correlation")
        computed = [float(scds[t]) for t in common]
        human = [gold[t] for t in common]
        result["pearson"] = pearson(computed, human)
        result["spearman"] = spearman(computed, human)
        log.info("SCD correlation over %d MWEs: pearson=%.4f spearman=%.4f",
                 len(common), result["pearson"], result["spearman"])
        print(f"pearson={result['pearson']!r} spearman={result['spearman']!r}")
    return result


def _eval_dataset_tokens(cfg: RunConfig):
    tokens = set()
    for path in filter(None, cfg.similarity_datasets.split(",")):
        for pair in parse_similarity_pairs(_read(path)):
            tokens.add(pair.token1)
            tokens.add(pair.token2)
    return tokens


def cmd_train(cfg: RunConfig) -> dict:
    """Train per config; saves the best-validation and final checkpoints and
    the per-epoch loss history CSV."""
    _require_paths(cfg, ["lexicon", "mwes", "embeddings", "out"])
    if cfg.sememe_embeddings:
        _require_paths(cfg, ["sememe_embeddings"])
    kind = _validate_model(cfg)
    hyper = _hyper(cfg)
    for path in filter(None, cfg.similarity_datasets.split(",")):
        if not os.path.exists(path):
            raise ConfigError(f"similarity dataset does not exist: {path}")
    _start_run(cfg)
    ds = _load_dataset(cfg, split=True)
    words = read_embeddings(cfg.embeddings)
    sememes = _load_sememe_table(cfg, ds.inventory, words.dim)

    if cfg.task == "similarity" and cfg.similarity_datasets:
        held_out = _eval_dataset_tokens(cfg)
        before = ds.splits["train"]
        kept = [i for i in before if ds.mwes[i].token not in held_out]
        for i in before:
            if ds.mwes[i].token in held_out:
                log.info("excluding %s from training: appears in an evaluation dataset",
                         ds.mwes[i].token)
        ds = KbDataset(ds.inventory, ds.lexicon, ds.mwes,
                       {**ds.splits, "train": kept})

    best = {"loss": float("inf"), "epoch": 0}
    best_dir = os.path.join(cfg.out, "checkpoint_best")

    def on_epoch(stats, params):
        if np.isfinite(stats.valid_loss) and stats.valid_loss < best["loss"]:
            best["loss"], best["epoch"] = stats.valid_loss, stats.epoch
            save_checkpoint(best_dir, params, epoch=stats.epoch, lr=stats.lr)

    state = train(ds, kind, cfg.task, hyper, words, sememes,
                  references=words if cfg.task == "similarity" else None,
                  rule_mode=cfg.rule_mode, attention_tied=cfg.attention_tied,
                  epoch_callback=on_epoch)
    final_dir = os.path.join(cfg.out, "checkpoint_final")
    save_checkpoint(final_dir, state.params, epoch=state.epoch, lr=state.lr)
    if not os.path.isdir(best_dir):  # no finite validation loss seen
        save_checkpoint(best_dir, state.params, epoch=state.epoch, lr=state.lr)
        best["epoch"] = state.epoch
    csv_path = os.path.join(cfg.out, "loss_history.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        f.write(history_to_csv(state.history))
    log.info("final train loss %.6g, best valid loss %.6g at epoch %d",
             state.history[-1].train_loss, best["loss"], best["epoch"])
    return {"state": state, "loss_csv": csv_path, "checkpoint_best": best_dir,
            "checkpoint_final": final_dir, "best_epoch": best["epoch"]}


def _load_checkpoint_for(cfg: RunConfig):
    params, manifest = load_checkpoint(cfg.checkpoint)
    if manifest["kind"] != cfg.model:
        raise ConfigError(
            f"checkpoint kind {manifest['kind']!r} does not match configured "
            f"model {cfg.model!r}")
    if ModelKind(cfg.model) in RULE_KINDS and manifest["rule_mode"] != cfg.rule_mode:
        raise ConfigError(
            f"checkpoint rule_mode {manifest['rule_mode']!r} does not match "
            f"configured {cfg.rule_mode!r}")
    return params, manifest


def cmd_eval_sim(cfg: RunConfig) -> dict:
    """Spearman correlation (x100) between composed-pair cosines and human
    scores, one row per similarity dataset."""
    _require_paths(cfg, ["lexicon", "mwes", "embeddings", "checkpoint", "out"])
    _validate_model(cfg)
    paths = [p for p in cfg.similarity_datasets.split(",") if p]
    if not paths:
        raise ConfigError("similarity_datasets is required for eval-sim")
    for path in paths:
        if not os.path.exists(path):
            raise ConfigError(f"similarity dataset does not exist: {path}")
    params, _ = _load_checkpoint_for(cfg)
    _start_run(cfg)
    ds = _load_dataset(cfg, split=False)
    words = read_embeddings(cfg.embeddings)
    rows = []
    for path in paths:
        pairs = parse_similarity_pairs(_read(path))
        res = evaluate_similarity(params, ds, words, pairs,
                                  skip_missing=cfg.skip_missing_pairs)
        for reason in res.skipped:
            log.info("skipped pair %s", reason)
        rows.append((os.path.basename(path), res.n_pairs, len(res.skipped),
                     res.rho_x100))
    report = os.path.join(cfg.out, "similarity_report.csv")
    with open(report, "w", encoding="utf-8", newline="") as f:
        f.write("dataset,n_pairs,n_skipped,spearman_x100\n")
        for name, n, nskip, rho in rows:
            f.write(f"{name},{n},{nskip},{rho!r}\n")
    log.info("wrote %s", report)
    return {"report": report, "rows": rows}


def _split_records(ds: KbDataset, split: str, params, words):
    """Prediction records for the annotated MWEs of a split, plus their MWE
    indices (unannotated MWEs are skipped and logged)."""
    records, indices = [], []
    for i in ds.split_indices(split):
        m = ds.mwes[i]
        if not m.sememes:
            log.info("skipping %s in %s: no gold sememes", m.token, split)
            continue
        p = compose_entry(params, m, ds, words).p
        scores = predict_sememes(p, params.sememes.matrix)
        records.append(make_record(m.token, scores, ds.inventory.indices(m.sememes)))
        indices.append(i)
    return records, indices


def cmd_eval_sememe(cfg: RunConfig) -> dict:
    """Sememe prediction report: MAP and thresholded micro-F1 (delta tuned on
    the validation split), with per-SCD and per-rule breakdowns."""
    _require_paths(cfg, ["lexicon", "mwes", "embeddings", "checkpoint", "out"])
    _validate_model(cfg)
    grid = _delta_grid(cfg)
    params, _ = _load_checkpoint_for(cfg)
    _start_run(cfg)
    ds = _load_dataset(cfg, split=True)
    words = read_embeddings(cfg.embeddings)
    params.sememes = align_sememe_table(params.sememes, ds.inventory)

    valid_records, _ = _split_records(ds, "valid", params, words)
    test_records, test_indices = _split_records(ds, "test", params, words)
    if not test_records:
        raise ConfigError("no annotated MWEs in the test split")
    delta = tune_delta(valid_records, grid) if valid_records else 0.5
    if not valid_records:
        log.info("no annotated validation MWEs; using delta=0.5")
    overall_map = map_score(test_records)
    precision, recall, f1 = f1_at_threshold(test_records, delta)

    pos_of = {mwe_idx: pos for pos, mwe_idx in enumerate(test_indices)}
    scd_buckets = {int(lvl): [pos_of[i] for i in idx]
                   for lvl, idx in partition_by_scd(ds, test_indices).items()}
    rule_buckets = {rule.value: [pos_of[i] for i in idx]
                    for rule, idx in partition_by_rule(ds, test_indices).items()}
    scd_table = breakdown(test_records, scd_buckets)
    rule_table = breakdown(test_records, rule_buckets)
    rule_means = {r.value: v for r, v in mean_scd_by_rule(ds, test_indices).items()}

    # the x100 convention of the reported metrics is carried in the headers
    overall_path = os.path.join(cfg.out, "sememe_report.csv")
    with open(overall_path, "w", encoding="utf-8", newline="") as f:
        f.write("metric,value\n")
        f.write(f"map_x100,{100.0 * overall_map!r}\n")
        f.write(f"f1_x100,{100.0 * f1!r}\n")
        f.write(f"precision_x100,{100.0 * precision!r}\n")
        f.write(f"recall_x100,{100.0 * recall!r}\n")
        f.write(f"delta,{delta!r}\n")
        f.write(f"n_records,{len(test_records)}\n")
    scd_path = os.path.join(cfg.out, "breakdown_scd.csv")
    with open(scd_path, "w", encoding="utf-8", newline="") as f:
        f.write("scd,n,map_x100\n")
        for lvl in (3, 2, 1, 0):
            if lvl in scd_table:
                f.write(f"{lvl},{scd_table[lvl].n},{100.0 * scd_table[lvl].map!r}\n")
    rule_path = os.path.join(cfg.out, "breakdown_rule.csv")
    with open(rule_path, "w", encoding="utf-8", newline="") as f:
        f.write("rule,n,avg_scd,map_x100\n")
        for rule in ("ADJ_N", "N_N", "V_N", "OTHER"):
            if rule in rule_table:
                f.write(f"{rule},{rule_table[rule].n},{rule_means[rule]!r},"
                        f"{100.0 * rule_table[rule].map!r}\n")
    log.info("MAP=%.4f F1=%.4f (delta=%.2f) over %d test MWEs",
             overall_map, f1, delta, len(test_records))
    return {"report": overall_path, "breakdown_scd": scd_path,
            "breakdown_rule": rule_path, "map": overall_map, "f1": f1,
            "precision": precision, "recall": recall, "delta": delta,
            "records": test_records, "scd_table": scd_table,
            "rule_table": rule_table}


def cmd_gen_synthetic(args) -> dict:
    """Generate a synthetic KB plus embedding files under --out."""
    if not args.out:
        raise ConfigError("--out is required for gen-synthetic")
    try:
        mix = tuple(float(x) for x in args.scd_mix.split(","))
    except ValueError:
        raise ConfigError(f"bad scd_mix {args.scd_mix!r}") from None
    cfg = SyntheticConfig(n_words=args.n_words, n_sememes=args.n_sememes,
                          n_mwes=args.n_mwes, dim=args.dim, seed=args.seed,
                          noise=args.noise, scd_mix=mix, sim_pairs=args.sim_pairs,
                          word_scale=args.word_scale, sememe_scale=args.sememe_scale)
    try:
        cfg.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from None
    data = generate(cfg)
    paths = write_files(data, args.out)
    lines = [f"{k}={v}" for k, v in sorted(vars(args).items()) if k != "func"]
    with open(os.path.join(args.out, "config.txt"), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    print(f"wrote {len(paths)} files to {args.out}: {', '.join(sorted(paths))}")
    return {"paths": paths, "data": data}


GRADCHECK_ROWS = (
    ("add", None), ("mul", None), ("scas_s", None), ("scas", None), ("scmsa", None),
    ("scas_r", "full"), ("scas_r", "lowrank"),
    ("scmsa_r", "full"), ("scmsa_r", "lowrank"),
)


def cmd_gradcheck(args) -> dict:
    """Finite-difference check of every analytic gradient at d=5."""
    kinds = args.kinds.split(",") if args.kinds else [k for k, _ in GRADCHECK_ROWS]
    tasks = args.tasks.split(",") if args.tasks else list(TASKS)
    for t in tasks:
        if t not in TASKS:
            raise ConfigError(f"unknown task {t!r}")
    rows = []
    worst = 0.0
    from .train import grad_check

    for kind, mode in GRADCHECK_ROWS:
        if kind not in kinds:
            continue
        for task in tasks:
            err = grad_check(kind, task, dim=5, n_sememes=6, rank=2,
                             rule_mode=mode or "lowrank", seed=args.seed)
            worst = max(worst, err)
            label = f"{kind}[{mode}]" if mode else kind
            rows.append((label, task, err, err < GRADCHECK_TOLERANCE))
    width = max(len(r[0]) for r in rows)
    print(f"{'kind':<{width}}  {'task':<10}  {'max_rel_err':>12}  status")
    for label, task, err, ok in rows:
        print(f"{label:<{width}}  {task:<10}  {err:>12.3e}  {'pass' if ok else 'FAIL'}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "gradcheck.csv"), "w", encoding="utf-8") as f:
            f.write("kind,task,max_rel_err,pass\n")
            for label, task, err, ok in rows:
                f.write(f"{label},{task},{err!r},{str(ok).lower()}\n")
    return {"rows": rows, "worst": worst,
            "ok": all(ok for _, _, _, ok in rows)}


class _Parser(argparse.ArgumentParser):
    # usage errors are config errors per the exit-code contract
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _add_config_flags(parser):
    parser.add_argument("--config", help="key=value config file")
    for f in dataclasses.fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, dest=f.name, default=None,
                            help=f"config key {f.name} (default {f.default!r})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sememe-compose",
                     description="Sememe-aware semantic composition toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, doc in (("scd", cmd_scd, "compute SC degrees for annotated MWEs"),
                          ("train", cmd_train, "train a composition model"),
                          ("eval-sim", cmd_eval_sim, "MWE similarity evaluation"),
                          ("eval-sememe", cmd_eval_sememe, "sememe prediction evaluation")):
        p = sub.add_parser(name, help=doc)
        _add_config_flags(p)
        p.set_defaults(func=lambda args, fn=fn: fn(build_run_config(args)))

    g = sub.add_parser("gen-synthetic", help="generate a synthetic KB")
    g.add_argument("--n-words", type=int, default=200)
    g.add_argument("--n-sememes", type=int, default=50)
    g.add_argument("--n-mwes", type=int, default=300)
    g.add_argument("--dim", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--scd-mix", default="0.25,0.25,0.25,0.25",
                   help="probability of SCD 0,1,2,3")
    g.add_argument("--sim-pairs", type=int, default=0,
                   help="also write a similarity pair file with this many pairs")
    g.add_argument("--word-scale", type=float, default=0.5)
    g.add_argument("--sememe-scale", type=float, default=0.3)
    g.add_argument("--out", default="")
    g.set_defaults(func=cmd_gen_synthetic)

    c = sub.add_parser("gradcheck", help="finite-difference gradient check")
    c.add_argument("--kinds", default="", help="comma list; default all kinds")
    c.add_argument("--tasks", default="", help="comma list; default both tasks")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default="")
    c.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        result = args.func(args)
    except SystemExit as e:
        return int(e.code or 0)
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, KbError, EmbeddingFormatError, UnknownTokenError,
            ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if isinstance(result, dict) and result.get("ok") is False:
        print("gradient check failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
