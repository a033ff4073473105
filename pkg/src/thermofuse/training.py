"""Dataset ingestion, deduplication, the minibatch training loop with
Spearman-based epoch selection, and hyperparameter grid search.
"""

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from thermofuse.embeddings import EmbeddingSet, EmbeddingStore
from thermofuse.errors import (
    DataLinkageError,
    DatasetError,
    DomainError,
    MetricUndefinedError,
)
from thermofuse.features import AA_INDEX, MutationFeatures, mutation_features
from thermofuse.fusion import (
    FusionVariant,
    accumulate,
    backward_variant,
    build_model,
    forward_variant,
    forward_variant_cached,
    zero_grads,
)
from thermofuse.metrics import mse, r2, spearman
from thermofuse.nncore import AdamState, adam_step
from thermofuse.structure_io import BackboneStructure, backbone_dihedrals

TRAIN = "train"
VAL = "val"

DATASET_COLUMNS = ("pdb_id", "chain", "position", "wt_aa", "mut_aa", "ddg")


@dataclass(frozen=True)
class MutationRecord:
    """One (protein, position, substitution, stability change) observation."""

    pdb_id: str
    chain: str
    position: int
    wt_aa: str
    mut_aa: str
    ddg: float
    split: Optional[str] = None

    def key(self) -> tuple:
        return (self.pdb_id, self.chain, self.position, self.wt_aa, self.mut_aa)


def load_records(path) -> list[MutationRecord]:
    """Read the delimiter-separated mutation dataset (comma or tab)."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise DatasetError(f"{path}: empty dataset file")
    delim = "\t" if "\t" in lines[0] else ","
    reader = csv.DictReader(lines, delimiter=delim)
    missing = [c for c in DATASET_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise DatasetError(f"{path}: header lacks columns {missing}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        try:
            position = int(row["position"])
            ddg = float(row["ddg"])
        except (TypeError, ValueError):
            raise DatasetError(f"{path} line {lineno}: bad position or ddg") from None
        wt, mut = row["wt_aa"].strip(), row["mut_aa"].strip()
        if wt not in AA_INDEX or mut not in AA_INDEX:
            raise DatasetError(f"{path} line {lineno}: non-canonical amino acid")
        if wt == mut:
            raise DatasetError(f"{path} line {lineno}: wild-type equals mutant")
        if position < 1:
            raise DatasetError(f"{path} line {lineno}: position must be >= 1")
        if not math.isfinite(ddg):
            raise DatasetError(f"{path} line {lineno}: non-finite ddg")
        split = (row.get("split") or "").strip() or None
        if split is not None and split not in (TRAIN, VAL):
            raise DatasetError(f"{path} line {lineno}: split must be train or val")
        records.append(MutationRecord(row["pdb_id"].strip(), row["chain"].strip(),
                                      position, wt, mut, ddg, split))
    if not records:
        raise DatasetError(f"{path}: no data rows")
    return records


def save_records(records: list[MutationRecord], path) -> None:
    lines = [",".join(DATASET_COLUMNS) + ",split"]
    for r in records:
        lines.append(f"{r.pdb_id},{r.chain},{r.position},{r.wt_aa},{r.mut_aa},"
                     f"{r.ddg!r},{r.split or ''}")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class DedupResult:
    kept: list[MutationRecord]
    removed: list[MutationRecord]
    removed_fraction_per_split: dict[str, float]
    conflicting: list[MutationRecord]  # removed rows whose ddg disagreed


def dedup(records: list[MutationRecord]) -> DedupResult:
    """Drop repeated (protein, chain, position, wt, mut) rows, first wins.

    Repeats count as duplicates even when their measured ddg differs; such
    rows are additionally listed under `conflicting`.  Fractions are
    removed/total per split value (None grouped as 'unassigned').
    """
    seen: dict[tuple, MutationRecord] = {}
    kept, removed, conflicting = [], [], []
    totals: dict[str, int] = {}
    drops: dict[str, int] = {}
    for r in records:
        split = r.split or "unassigned"
        totals[split] = totals.get(split, 0) + 1
        first = seen.get(r.key())
        if first is None:
            seen[r.key()] = r
            kept.append(r)
        else:
            removed.append(r)
            drops[split] = drops.get(split, 0) + 1
            if r.ddg != first.ddg:
                conflicting.append(r)
    fractions = {s: drops.get(s, 0) / n for s, n in totals.items()}
    return DedupResult(kept, removed, fractions, conflicting)


def ensure_split(records: list[MutationRecord], seed: int,
                 train_fraction: float = 0.87) -> list[MutationRecord]:
    """Honor an existing split column; otherwise assign a seeded split."""
    if all(r.split in (TRAIN, VAL) for r in records):
        return list(records)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(records))
    n_train = int(round(train_fraction * len(records)))
    n_train = min(max(n_train, 1), len(records) - 1) if len(records) > 1 else 1
    assignment = {}
    for rank, idx in enumerate(order):
        assignment[idx] = TRAIN if rank < n_train else VAL
    return [replace(r, split=assignment[i]) for i, r in enumerate(records)]


# ---------------------------------------------------------------------------
# sample assembly


@dataclass
class Sample:
    """One record resolved against its structure and embeddings."""

    record: MutationRecord
    struct_emb: EmbeddingSet
    seq_emb: Optional[EmbeddingSet]
    feats: Optional[MutationFeatures]


def build_samples(records: list[MutationRecord],
                  structures: dict[str, BackboneStructure],
                  store: EmbeddingStore, variant: FusionVariant,
                  window: int) -> list[Sample]:
    """Resolve records; raises one error listing every unresolvable row."""
    needs_seq = variant is not FusionVariant.M1_BASELINE
    needs_feats = variant is FusionVariant.M4_DOMAIN_CONCAT
    dihedral_cache: dict[str, list] = {}
    samples, problems = [], []
    for r in records:
        s = structures.get(r.pdb_id)
        if s is None:
            problems.append((r, "no structure"))
            continue
        if r.chain != s.chain:
            problems.append((r, f"structure holds chain {s.chain}, record says {r.chain}"))
            continue
        if not 1 <= r.position <= len(s):
            problems.append((r, f"position outside structure of length {len(s)}"))
            continue
        if s.residues[r.position - 1].aa != r.wt_aa:
            problems.append((r, f"structure has {s.residues[r.position - 1].aa} at "
                                f"position {r.position}, record says {r.wt_aa}"))
            continue
        if not store.has(r.pdb_id, "struct") or (needs_seq and not store.has(r.pdb_id, "seq")):
            problems.append((r, "missing embeddings"))
            continue
        struct_emb = store.get(r.pdb_id, "struct")
        seq_emb = store.get(r.pdb_id, "seq") if needs_seq else None
        if struct_emb.length != len(s) or (seq_emb is not None and seq_emb.length != len(s)):
            problems.append((r, "embedding length differs from structure length"))
            continue
        feats = None
        if needs_feats:
            if r.pdb_id not in dihedral_cache:
                dihedral_cache[r.pdb_id] = backbone_dihedrals(s)
            feats = mutation_features(s, dihedral_cache[r.pdb_id], r.position,
                                      r.wt_aa, r.mut_aa, window)
        samples.append(Sample(r, struct_emb, seq_emb, feats))
    if problems:
        listing = "; ".join(f"{r.pdb_id}:{r.position}{r.wt_aa}>{r.mut_aa} ({why})"
                            for r, why in problems[:20])
        raise DataLinkageError(
            f"{len(problems)} dataset rows cannot be resolved: {listing}", problems
        )
    return samples


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    variant: FusionVariant = FusionVariant.M3_MULTIPLY_TRANSFUSION
    epochs: int = 100
    batch_size: int = 64
    lr: float = 1e-3
    weight_decay: float = 0.0
    dropout_rate: float = 0.0
    d_f: int = 64
    d_a: int = 64
    window: int = 7
    seed: int = 0
    hidden: tuple = (64, 64)

    def __post_init__(self):
        if isinstance(self.variant, int):
            self.variant = FusionVariant.from_number(self.variant)
        if self.epochs < 1:
            raise DomainError("epochs must be >= 1")
        if self.batch_size < 1:
            raise DomainError("batch_size must be >= 1")


@dataclass
class EpochLog:
    epoch: int
    train_mse: float
    val_mse: float
    val_spearman: float
    val_r2: float


@dataclass
class TrainResult:
    model: "FusionModel"  # noqa: F821
    logs: list[EpochLog]
    best_epoch: int


def select_best_epoch(logs: list[EpochLog]) -> int:
    """Earliest epoch attaining the maximal validation Spearman."""
    if not logs:
        raise DomainError("no epochs logged")
    best = logs[0]
    for log in logs[1:]:
        if log.val_spearman > best.val_spearman:
            best = log
    return best.epoch


def _predict(model, sample: Sample) -> float:
    return forward_variant(model, sample.struct_emb, sample.seq_emb,
                           sample.feats, sample.record.position,
                           sample.record.mut_aa)


def fit_model(config: TrainConfig, train_samples: list[Sample],
              val_samples: list[Sample],
              on_epoch_end: Optional[Callable] = None) -> TrainResult:
    """Shuffled minibatch Adam on MSE; returns the epoch maximizing the
    validation Spearman correlation (earliest on ties).

    Deterministic given the config seed: parameter init, shuffling and
    dropout draw from separate seeded streams, and validation data never
    touches any of them.  A constant prediction vector logs Spearman 0.
    """
    if not train_samples or not val_samples:
        raise DomainError("train and validation splits must both be non-empty")
    if len({s.record.ddg for s in val_samples}) < 2:
        raise MetricUndefinedError(
            "validation targets are constant; epoch metrics would be undefined"
        )
    d_struct = train_samples[0].struct_emb.dim
    d_seq = (train_samples[0].seq_emb.dim
             if train_samples[0].seq_emb is not None else max(1, d_struct))
    feat_dim = (train_samples[0].feats.vector.shape[0]
                if train_samples[0].feats is not None else None)
    model = build_model(config.variant, d_struct, d_seq, d_f=config.d_f,
                        d_a=config.d_a, window=config.window,
                        hidden=config.hidden, seed=config.seed,
                        feat_dim=feat_dim)
    params = model.params()
    adam = AdamState.for_params(params, lr=config.lr,
                                weight_decay=config.weight_decay)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    dropout_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))

    val_targets = np.array([s.record.ddg for s in val_samples])
    order = np.arange(len(train_samples))
    logs: list[EpochLog] = []
    best_snapshot = None
    best_spearman = -np.inf
    for epoch in range(1, config.epochs + 1):
        shuffle_rng.shuffle(order)
        sq_sum = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            grads = zero_grads(model)
            scale = 2.0 / len(batch)
            for idx in batch:
                sample = train_samples[idx]
                y, cache = forward_variant_cached(
                    model, sample.struct_emb, sample.seq_emb, sample.feats,
                    sample.record.position, sample.record.mut_aa,
                    dropout_rate=config.dropout_rate,
                    rng=dropout_rng if config.dropout_rate else None,
                )
                err = y - sample.record.ddg
                sq_sum += err * err
                accumulate(grads, backward_variant(model, cache, dy=scale * err))
            adam_step(adam, params, grads)
        val_pred = np.array([_predict(model, s) for s in val_samples])
        try:
            val_spear = spearman(val_pred, val_targets)
        except MetricUndefinedError:
            val_spear = 0.0
        log = EpochLog(epoch=epoch, train_mse=sq_sum / len(train_samples),
                       val_mse=mse(val_pred, val_targets),
                       val_spearman=val_spear,
                       val_r2=r2(val_pred, val_targets))
        logs.append(log)
        if log.val_spearman > best_spearman:
            best_spearman = log.val_spearman
            best_snapshot = {k: p.copy() for k, p in params.items()}
        if on_epoch_end is not None:
            on_epoch_end(epoch, model, log)
    for k, p in params.items():
        p[...] = best_snapshot[k]
    return TrainResult(model=model, logs=logs, best_epoch=select_best_epoch(logs))


def train(config: TrainConfig, records: list[MutationRecord],
          structures: dict[str, BackboneStructure], store: EmbeddingStore,
          on_epoch_end: Optional[Callable] = None) -> TrainResult:
    """Resolve records into samples and fit the configured variant."""
    samples = build_samples(records, structures, store, config.variant,
                            config.window)
    train_samples = [s for s in samples if s.record.split == TRAIN]
    val_samples = [s for s in samples if s.record.split == VAL]
    return fit_model(config, train_samples, val_samples, on_epoch_end)


# ---------------------------------------------------------------------------
# grid search


@dataclass
class GridCellResult:
    config: TrainConfig
    best_epoch: Optional[int] = None
    val_spearman: Optional[float] = None
    val_mse: Optional[float] = None
    val_r2: Optional[float] = None
    error: Optional[str] = None


def expand_grid(base: TrainConfig, grid: dict[str, list]) -> list[TrainConfig]:
    """Cartesian product over the grid axes, keys in sorted order."""
    if not grid:
        raise DomainError("grid must name at least one axis")
    keys = sorted(grid)
    configs = []
    for values in itertools.product(*(grid[k] for k in keys)):
        overrides = dict(zip(keys, values))
        configs.append(replace(base, **overrides))
    return configs


def _run_cell(args) -> GridCellResult:
    config, train_samples, val_samples = args
    try:
        result = fit_model(config, train_samples, val_samples)
        best = result.logs[result.best_epoch - 1]
        return GridCellResult(config=config, best_epoch=result.best_epoch,
                              val_spearman=best.val_spearman,
                              val_mse=best.val_mse, val_r2=best.val_r2)
    except Exception as exc:  # keep the sweep alive, report per cell
        return GridCellResult(config=config, error=f"{type(exc).__name__}: {exc}")


def grid_search(base: TrainConfig, grid: dict[str, list],
                records: list[MutationRecord],
                structures: dict[str, BackboneStructure],
                store: EmbeddingStore, jobs: int = 1) -> list[GridCellResult]:
    """Train every lattice cell and rank by best validation Spearman.

    Cell failures are captured, not raised; failed cells sort last.
    """
    configs = expand_grid(base, grid)
    samples = build_samples(records, structures, store, base.variant, base.window)
    train_samples = [s for s in samples if s.record.split == TRAIN]
    val_samples = [s for s in samples if s.record.split == VAL]
    tasks = [(c, train_samples, val_samples) for c in configs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    results.sort(key=lambda r: (-(r.val_spearman if r.val_spearman is not None
                                  else -np.inf), r.error is not None))
    return results


def grid_report_text(results: list[GridCellResult], grid_keys: list[str]) -> str:
    """Tab-separated ranked table of every grid cell."""
    header = ["rank", *grid_keys, "best_epoch", "val_spearman", "val_mse",
              "val_r2", "error"]
    lines = ["\t".join(header)]
    for rank, r in enumerate(results, start=1):
        row = [str(rank)]
        row += [repr(getattr(r.config, k)) for k in grid_keys]
        row += [str(r.best_epoch if r.best_epoch is not None else ""),
                "" if r.val_spearman is None else repr(r.val_spearman),
                "" if r.val_mse is None else repr(r.val_mse),
                "" if r.val_r2 is None else repr(r.val_r2),
                r.error or ""]
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"
