"""Synthetic knowledge bases and embeddings for desk-scale experiments.

Words get 1-6 random sememes (mirroring the small per-word counts of real
sememe lexicons); MWE annotations are constructed to hit a requested mixture
of all four SC degrees; reference MWE embeddings come from a hidden
aggregated-sememe model so that sememe-aware learners can recover them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compose import ModelKind, ModelParams, forward, init_params
from .embeddings import EmbeddingTable, init_random
from .kb import CombinationRule, KbDataset, parse_kb
from .metrics import cosine


@dataclass
class SyntheticConfig:
    n_words: int = 200
    n_sememes: int = 50
    n_mwes: int = 300
    dim: int = 20
    seed: int = 0
    noise: float = 0.0              # stddev of Gaussian noise on references
    scd_mix: tuple = (0.25, 0.25, 0.25, 0.25)  # probability of SCD 0,1,2,3
    sim_pairs: int = 0              # similarity pairs scored by reference cosine
    # scales keep the hidden model's tanh pre-activations in a trainable range
    word_scale: float = 0.5
    sememe_scale: float = 0.3

    def validate(self):
        if min(self.n_words, self.n_sememes, self.n_mwes, self.dim) < 1:
            raise ValueError("sizes and dim must be positive")
        if self.word_scale <= 0 or self.sememe_scale <= 0:
            raise ValueError("embedding scales must be positive")
        if self.n_mwes > self.n_words * (self.n_words - 1):
            raise ValueError("more MWEs requested than distinct ordered word pairs")
        if len(self.scd_mix) != 4 or any(p < 0 for p in self.scd_mix) or sum(self.scd_mix) <= 0:
            raise ValueError("scd_mix must be four non-negative weights")
        if self.noise < 0 or self.sim_pairs < 0:
            raise ValueError("noise and sim_pairs must be non-negative")


@dataclass
class SyntheticData:
    ds: KbDataset
    embeddings: EmbeddingTable      # constituent rows plus reference MWE rows
    sememe_vectors: EmbeddingTable
    truth: ModelParams              # the hidden generator model
    lexicon_text: str
    mwe_text: str
    sim_text: str                   # empty when sim_pairs == 0


def _draw_gold(level, union, outside, rng):
    """A gold sememe set realizing the requested SCD against `union`."""
    if level == 3:
        return list(union)
    if level == 2:
        size = int(rng.integers(1, len(union)))
        return list(rng.choice(union, size=size, replace=False))
    if level == 1:
        k_in = int(rng.integers(1, len(union) + 1))
        k_out = int(rng.integers(1, min(3, len(outside)) + 1))
        return (list(rng.choice(union, size=k_in, replace=False))
                + list(rng.choice(outside, size=k_out, replace=False)))
    size = int(rng.integers(1, min(4, len(outside)) + 1))
    return list(rng.choice(outside, size=size, replace=False))


def _feasible(level, union, outside):
    if level == 2:
        return len(union) >= 2
    if level in (0, 1):
        return len(outside) >= 1
    return True


def generate(cfg: SyntheticConfig) -> SyntheticData:
    cfg.validate()
    seq = np.random.SeedSequence(cfg.seed)
    r_kb, r_words, r_sem, r_truth, r_noise, r_pairs = (
        np.random.default_rng(s) for s in seq.spawn(6))

    sememe_ids = [f"s{i:03d}" for i in range(cfg.n_sememes)]
    word_ids = [f"w{i:03d}" for i in range(cfg.n_words)]

    word_sets = {}
    lex_lines = []
    for w in word_ids:
        size = int(r_kb.integers(1, min(6, cfg.n_sememes) + 1))
        chosen = list(r_kb.choice(sememe_ids, size=size, replace=False))
        word_sets[w] = chosen
        lex_lines.append(f"{w}\t{','.join(chosen)}")
    lexicon_text = "\n".join(lex_lines) + "\n"

    mix = np.asarray(cfg.scd_mix, dtype=np.float64)
    mix = mix / mix.sum()
    rules = list(CombinationRule)
    mwe_lines = []
    used_pairs = set()
    mwe_tokens = []
    for _ in range(cfg.n_mwes):
        level = int(r_kb.choice(4, p=mix))
        for _attempt in range(1000):
            i, j = r_kb.choice(cfg.n_words, size=2, replace=False)
            pair = (word_ids[int(i)], word_ids[int(j)])
            if pair in used_pairs:
                continue
            union = sorted(set(word_sets[pair[0]]) | set(word_sets[pair[1]]))
            outside = [s for s in sememe_ids if s not in set(union)]
            if _feasible(level, union, outside):
                break
        else:
            raise ValueError(
                f"could not realize SCD {level}: inventory too small for these sizes")
        used_pairs.add(pair)
        gold = _draw_gold(level, union, outside, r_kb)
        rule = rules[int(r_kb.integers(0, 4))]
        token = f"{pair[0]}_{pair[1]}"
        mwe_tokens.append(token)
        mwe_lines.append(f"{token}\t{pair[0]}\t{pair[1]}\t{rule.value}\t{','.join(gold)}")
    mwe_text = "\n".join(mwe_lines) + "\n"

    # parse our own files so the dataset matches what any consumer will read
    ds = parse_kb(lexicon_text, mwe_text)

    word_table = init_random(word_ids, cfg.dim, seed=r_words, scale=cfg.word_scale)
    sememe_table = init_random(list(ds.inventory), cfg.dim, seed=r_sem,
                               scale=cfg.sememe_scale)
    truth = init_params(ModelKind.SCAS, cfg.dim, sememe_table, seed=r_truth)

    reference_rows = []
    for token in mwe_tokens:
        m = ds.mwes[ds.mwe_index[token]]
        s1 = ds.inventory.indices(ds.lexicon[m.constituent1].sememes)
        s2 = ds.inventory.indices(ds.lexicon[m.constituent2].sememes)
        p = forward(truth, word_table.lookup(m.constituent1),
                    word_table.lookup(m.constituent2), s1, s2).p
        if cfg.noise > 0:
            p = p + cfg.noise * r_noise.normal(size=cfg.dim)
        reference_rows.append(p)

    embeddings = EmbeddingTable(
        word_ids + mwe_tokens,
        np.vstack([word_table.matrix, np.array(reference_rows)]))

    sim_text = ""
    if cfg.sim_pairs:
        seen = set()
        lines = []
        for _ in range(cfg.sim_pairs):
            for _attempt in range(1000):
                a, b = r_pairs.choice(len(mwe_tokens), size=2, replace=False)
                key = (min(int(a), int(b)), max(int(a), int(b)))
                if key not in seen:
                    break
            else:
                raise ValueError("not enough MWEs for the requested similarity pairs")
            seen.add(key)
            t1, t2 = mwe_tokens[key[0]], mwe_tokens[key[1]]
            score = cosine(embeddings.lookup(t1), embeddings.lookup(t2))
            lines.append(f"{t1}\t{t2}\t{score!r}")
        sim_text = "\n".join(lines) + "\n"

    return SyntheticData(ds, embeddings, sememe_table, truth,
                         lexicon_text, mwe_text, sim_text)


def write_files(data: SyntheticData, outdir) -> dict:
    """Write the generated KB and embedding files; returns name -> path."""
    import os

    os.makedirs(outdir, exist_ok=True)
    paths = {}

    def put(name, text):
        path = os.path.join(outdir, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        paths[name] = path

    put("lexicon.tsv", data.lexicon_text)
    put("mwes.tsv", data.mwe_text)
    put("embeddings.txt", data.embeddings.to_text())
    put("sememe_vectors.txt", data.sememe_vectors.to_text())
    if data.sim_text:
        put("sim_pairs.tsv", data.sim_text)
    return paths
