"""Sememe-annotated lexicon: data model, TSV parsing, frequency filtering,
dataset splits and semantic-compositionality degrees (SCD)."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np


class KbError(ValueError):
    """Malformed or inconsistent knowledge-base input."""


class CombinationRule(Enum):
    """Syntactic pattern of a two-constituent MWE."""

    ADJ_N = "ADJ_N"
    N_N = "N_N"
    V_N = "V_N"
    OTHER = "OTHER"


class ScdLevel(IntEnum):
    """Semantic compositionality degree, 0..3; larger means more compositional.

    The level names describe the relation between the MWE's sememe set and the
    union of its constituents' sememe sets.
    """

    DISJOINT = 0   # no sememe shared with the constituents
    OVERLAP = 1    # shares some sememes but also has its own
    SUBSET = 2     # proper subset of the constituents' union
    EXACT = 3      # identical to the constituents' union


@dataclass(frozen=True)
class LexEntry:
    """A single word with its (non-empty) sememe annotation."""

    token: str
    sememes: frozenset[str]


@dataclass(frozen=True)
class MweEntry:
    """A two-constituent MWE; `sememes` may be empty for unannotated MWEs."""

    token: str
    constituent1: str
    constituent2: str
    rule: CombinationRule
    sememes: frozenset[str]


class SememeInventory:
    """The global ordered set of sememe identifiers.

    The order is fixed at construction (first occurrence in the source files)
    and determines the layout of every downstream label vector and of the tied
    sememe classifier, so it must be stable across runs.
    """

    def __init__(self, ids):
        self.ids: list[str] = list(ids)
        self.index: dict[str, int] = {}
        for i, s in enumerate(self.ids):
            if not s:
                raise KbError("empty sememe identifier in inventory")
            if s in self.index:
                raise KbError(f"duplicate sememe identifier {s!r} in inventory")
            self.index[s] = i

    def __len__(self):
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def __contains__(self, s):
        return s in self.index

    def __eq__(self, other):
        return isinstance(other, SememeInventory) and self.ids == other.ids

    def __repr__(self):
        return f"SememeInventory(n={len(self.ids)})"

    def indices(self, sememes) -> np.ndarray:
        """Positions of `sememes` in inventory order (sorted ascending)."""
        try:
            return np.array(sorted(self.index[s] for s in sememes), dtype=np.intp)
        except KeyError as e:
            raise KbError(f"sememe {e.args[0]!r} not in inventory") from None


@dataclass(eq=True)
class KbDataset:
    """A parsed knowledge base: inventory, word lexicon, MWE list and splits."""

    inventory: SememeInventory
    lexicon: dict[str, LexEntry]
    mwes: list[MweEntry]
    splits: dict[str, list[int]] | None = None
    mwe_index: dict[str, int] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        self.mwe_index = {m.token: i for i, m in enumerate(self.mwes)}

    def split_indices(self, name: str) -> list[int]:
        if self.splits is None:
            raise KbError("dataset has no splits; call split_dataset first")
        if name not in self.splits:
            raise KbError(f"unknown split {name!r}")
        return self.splits[name]

    def constituent_sets(self, mwe: MweEntry) -> tuple[frozenset[str], frozenset[str]]:
        return (self.lexicon[mwe.constituent1].sememes,
                self.lexicon[mwe.constituent2].sememes)


def compute_scd(s_p, s_w1, s_w2) -> ScdLevel:
    """Grade how fully an MWE's sememe set derives from its constituents'.

    Level 3: the MWE set equals the union of the constituent sets; 2: it is a
    proper subset of the union; 1: it overlaps the union but is not contained
    in it; 0: it is disjoint from the union. The conditions are checked in
    that order and are mutually exclusive for non-empty inputs.
    """
    s_p, s_w1, s_w2 = set(s_p), set(s_w1), set(s_w2)
    if not s_p or not s_w1 or not s_w2:
        raise KbError("SCD requires non-empty sememe sets for the MWE and both constituents")
    union = s_w1 | s_w2
    if s_p == union:
        return ScdLevel.EXACT
    if s_p < union:
        return ScdLevel.SUBSET
    if s_p & union:
        return ScdLevel.OVERLAP
    return ScdLevel.DISJOINT


def mwe_scd(ds: KbDataset, mwe: MweEntry) -> ScdLevel:
    """SCD of one MWE, using its constituents' annotations from the lexicon."""
    s1, s2 = ds.constituent_sets(mwe)
    return compute_scd(mwe.sememes, s1, s2)


def _split_fields(line: str) -> list[str]:
    return line.rstrip("\n").split("\t")


def _parse_sememe_field(fieldtext: str, where: str, allow_empty: bool) -> frozenset[str]:
    if fieldtext == "":
        if allow_empty:
            return frozenset()
        raise KbError(f"{where}: empty sememe list")
    parts = fieldtext.split(",")
    for s in parts:
        if not s or any(ch.isspace() for ch in s):
            raise KbError(f"{where}: malformed sememe identifier {s!r}")
    return frozenset(parts)


def _check_token(token: str, where: str) -> str:
    if not token or any(ch.isspace() for ch in token):
        raise KbError(f"{where}: malformed token {token!r}")
    return token


def parse_kb(lexicon_text: str, mwe_text: str) -> KbDataset:
    """Parse lexicon and MWE TSV text into a dataset (without splits).

    Lexicon lines are `token<TAB>sememe1,sememe2,...`; MWE lines are
    `token<TAB>constituent1<TAB>constituent2<TAB>rule<TAB>sememes` where the
    sememe field may be empty. Lines starting with `#` and blank lines are
    ignored. The inventory collects sememes in first-occurrence order,
    lexicon file first.
    """
    inventory_ids: list[str] = []
    seen: set[str] = set()

    def record(fieldtext):
        # first-occurrence order, left to right within each line
        for s in fieldtext.split(","):
            if s and s not in seen:
                seen.add(s)
                inventory_ids.append(s)

    lexicon: dict[str, LexEntry] = {}
    for lineno, line in enumerate(lexicon_text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        where = f"lexicon line {lineno}"
        fields = _split_fields(line)
        if len(fields) != 2:
            raise KbError(f"{where}: expected 2 tab-separated fields, got {len(fields)}")
        token = _check_token(fields[0], where)
        if token in lexicon:
            raise KbError(f"{where}: duplicate token {token!r}")
        sememes = _parse_sememe_field(fields[1], where, allow_empty=False)
        record(fields[1])
        lexicon[token] = LexEntry(token, sememes)

    mwes: list[MweEntry] = []
    mwe_tokens: set[str] = set()
    for lineno, line in enumerate(mwe_text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        where = f"mwe line {lineno}"
        fields = _split_fields(line)
        if len(fields) != 5:
            raise KbError(f"{where}: expected 5 tab-separated fields, got {len(fields)}")
        token = _check_token(fields[0], where)
        if token in mwe_tokens:
            raise KbError(f"{where}: duplicate token {token!r}")
        c1 = _check_token(fields[1], where)
        c2 = _check_token(fields[2], where)
        for c in (c1, c2):
            if c not in lexicon:
                raise KbError(f"{where}: unknown constituent token {c!r}")
        try:
            rule = CombinationRule(fields[3])
        except ValueError:
            raise KbError(f"{where}: unknown combination rule {fields[3]!r}") from None
        sememes = _parse_sememe_field(fields[4], where, allow_empty=True)
        if sememes:
            record(fields[4])
        mwe_tokens.add(token)
        mwes.append(MweEntry(token, c1, c2, rule, sememes))

    return KbDataset(SememeInventory(inventory_ids), lexicon, mwes)


def _ordered(sememes, inventory: SememeInventory) -> list[str]:
    return sorted(sememes, key=inventory.index.__getitem__)


def format_lexicon(ds: KbDataset) -> str:
    """Serialize the lexicon back to its TSV format (inventory-ordered sets)."""
    lines = [f"{e.token}\t{','.join(_ordered(e.sememes, ds.inventory))}"
             for e in ds.lexicon.values()]
    return "\n".join(lines) + ("\n" if lines else "")


def format_mwes(ds: KbDataset) -> str:
    """Serialize the MWE list back to its TSV format."""
    lines = []
    for m in ds.mwes:
        sems = ",".join(_ordered(m.sememes, ds.inventory)) if m.sememes else ""
        lines.append(f"{m.token}\t{m.constituent1}\t{m.constituent2}\t{m.rule.value}\t{sems}")
    return "\n".join(lines) + ("\n" if lines else "")


def filter_sememes(ds: KbDataset, min_frequency: int) -> KbDataset:
    """Drop sememes occurring in fewer than `min_frequency` KB entries.

    Frequency counts every annotated entry (words and MWEs) containing the
    sememe. Lexicon entries whose set becomes empty are dropped together with
    the MWEs referencing them; MWEs keep their (possibly emptied) sets. The
    pass is repeated until stable, so the operation is idempotent at a fixed
    threshold. The result carries no splits.
    """
    if min_frequency < 1:
        raise KbError("min_frequency must be >= 1")
    lexicon = dict(ds.lexicon)
    mwes = list(ds.mwes)
    ids = list(ds.inventory.ids)
    while True:
        counts = Counter()
        for e in lexicon.values():
            counts.update(e.sememes)
        for m in mwes:
            counts.update(m.sememes)
        keep = {s for s in ids if counts[s] >= min_frequency}
        if len(keep) == len(ids):
            break
        ids = [s for s in ids if s in keep]
        new_lexicon = {}
        for e in lexicon.values():
            kept = e.sememes & keep
            if kept:
                new_lexicon[e.token] = LexEntry(e.token, frozenset(kept))
        new_mwes = []
        for m in mwes:
            if m.constituent1 in new_lexicon and m.constituent2 in new_lexicon:
                new_mwes.append(MweEntry(m.token, m.constituent1, m.constituent2,
                                         m.rule, frozenset(m.sememes & keep)))
        lexicon, mwes = new_lexicon, new_mwes
    return KbDataset(SememeInventory(ids), lexicon, mwes)


def split_dataset(ds: KbDataset, ratios=(8, 1, 1), seed: int = 0) -> KbDataset:
    """Partition MWE indices into train/valid/test splits.

    Valid and test take the floor of their proportional shares; the remainder
    goes to train. Deterministic for a fixed seed.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise KbError("ratios must be three positive numbers")
    n = len(ds.mwes)
    if n < 3:
        raise KbError(f"need at least 3 MWEs to split, got {n}")
    total = float(sum(ratios))
    n_valid = int(n * ratios[1] / total)
    n_test = int(n * ratios[2] / total)
    n_train = n - n_valid - n_test
    perm = np.random.default_rng(seed).permutation(n)
    splits = {
        "train": sorted(int(i) for i in perm[:n_train]),
        "valid": sorted(int(i) for i in perm[n_train:n_train + n_valid]),
        "test": sorted(int(i) for i in perm[n_train + n_valid:]),
    }
    return KbDataset(ds.inventory, ds.lexicon, ds.mwes, splits)


def partition_by_scd(ds: KbDataset, indices=None) -> dict[ScdLevel, list[int]]:
    """Bucket MWE indices by SCD level; requires annotated MWEs."""
    if indices is None:
        indices = range(len(ds.mwes))
    buckets: dict[ScdLevel, list[int]] = {lvl: [] for lvl in ScdLevel}
    for i in indices:
        buckets[mwe_scd(ds, ds.mwes[i])].append(i)
    return buckets


def partition_by_rule(ds: KbDataset, indices=None) -> dict[CombinationRule, list[int]]:
    """Bucket MWE indices by combination rule."""
    if indices is None:
        indices = range(len(ds.mwes))
    buckets: dict[CombinationRule, list[int]] = {r: [] for r in CombinationRule}
    for i in indices:
        buckets[ds.mwes[i].rule].append(i)
    return buckets


def mean_scd_by_rule(ds: KbDataset, indices=None) -> dict[CombinationRule, float]:
    """Average SCD per rule bucket (nan for empty buckets)."""
    buckets = partition_by_rule(ds, indices)
    out = {}
    for rule, idx in buckets.items():
        if idx:
            out[rule] = float(np.mean([int(mwe_scd(ds, ds.mwes[i])) for i in idx]))
        else:
            out[rule] = float("nan")
    return out
