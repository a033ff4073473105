"""Command-line entry point: train, eval, scan, analyze, gridsearch, serve
and embed subcommands over the library.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
THERMOFUSE_DATA_DIR, when set, provides default locations for the dataset
(dataset.csv), PDB files (pdb/) and embeddings (emb/).
"""

import argparse
import hashlib
import json
import os
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from thermofuse import analysis, metrics, training
from thermofuse.embeddings import EmbeddingStore, desk_scale_embed, write_embeddings
from thermofuse.errors import ThermofuseError
from thermofuse.features import AminoAcidTable
from thermofuse.fusion import forward_variant
from thermofuse.ioutil import atomic_write_text
from thermofuse.metrics import classification_report, classify_sign, regression_report
from thermofuse.scan import load_model, save_model, save_scan, scan
from thermofuse.server import build_state, create_app, load_structures, serve
from thermofuse.structure_io import backbone_dihedrals
from thermofuse.training import TrainConfig, train

DEFAULT_DIM_STRUCT = 32
DEFAULT_DIM_SEQ = 48


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _data_dir_default(name: str):
    root = os.environ.get("THERMOFUSE_DATA_DIR")
    if not root:
        return None
    candidate = Path(root) / name
    return candidate if candidate.exists() else None


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required (or set THERMOFUSE_DATA_DIR)")
    return value


def _add_corpus_flags(p: argparse.ArgumentParser, with_emb: bool = True):
    p.add_argument("--data", default=None, help="mutation dataset CSV/TSV")
    p.add_argument("--pdb-dir", default=None, help="directory of .pdb files")
    if with_emb:
        p.add_argument("--emb-dir", default=None,
                       help="directory of <id>.<struct|seq>.emb1 files "
                            "(default: deterministic desk-scale embeddings)")
    p.add_argument("--chain", default=None, help="chain id to read from each PDB")
    p.add_argument("--seed", type=int, default=0)


def _resolve_corpus(args, with_emb: bool = True):
    args.data = _require(args.data or _data_dir_default("dataset.csv"), "--data")
    args.pdb_dir = _require(args.pdb_dir or _data_dir_default("pdb"), "--pdb-dir")
    if with_emb and args.emb_dir is None:
        args.emb_dir = _data_dir_default("emb")


def _load_corpus(args, d_struct: int, d_seq: int):
    """Records (deduped, split ensured), structures, embeddings, fractions."""
    deduped = training.dedup(training.load_records(args.data))
    records = training.ensure_split(deduped.kept, args.seed)
    structures = load_structures(args.pdb_dir, chain=args.chain)
    dihedrals = {pid: backbone_dihedrals(s) for pid, s in structures.items()}
    if getattr(args, "emb_dir", None):
        store = EmbeddingStore.from_dir(args.emb_dir)
    else:
        store = EmbeddingStore.desk_scale(structures, dihedrals,
                                          d_struct=d_struct, d_seq=d_seq,
                                          seed=args.seed)
    return records, structures, store, deduped.removed_fraction_per_split


def _report_text(pairs) -> str:
    return "\n".join(f"{k} {v}" for k, v in pairs) + "\n"


def _eval_report(model, best_epoch, samples) -> str:
    preds = [forward_variant(model, s.struct_emb, s.seq_emb, s.feats,
                             s.record.position, s.record.mut_aa)
             for s in samples]
    targets = [s.record.ddg for s in samples]
    reg = regression_report(preds, targets)
    cls = classification_report([classify_sign(p) for p in preds],
                                [classify_sign(t) for t in targets])
    pairs = [("variant", model.variant.value), ("best_epoch", best_epoch)]
    pairs += sorted(reg.as_dict().items())
    pairs += sorted(cls.as_dict().items())
    return _report_text(pairs)


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args) -> int:
    _resolve_corpus(args)
    records, structures, store, fractions = _load_corpus(
        args, args.dim_struct, args.dim_seq
    )
    config = TrainConfig(variant=args.model, epochs=args.epochs,
                         batch_size=args.batch, lr=args.lr,
                         weight_decay=args.weight_decay,
                         dropout_rate=args.dropout, d_f=args.d_f,
                         d_a=args.d_a, window=args.window, seed=args.seed)
    result = train(config, records, structures, store)
    checksum = hashlib.sha256(Path(args.data).read_bytes()).hexdigest()
    save_model(result.model, result.logs, args.out, dataset_checksum=checksum)
    log_lines = ["epoch\ttrain_mse\tval_mse\tval_spearman\tval_r2"]
    for log in result.logs:
        log_lines.append(f"{log.epoch}\t{log.train_mse!r}\t{log.val_mse!r}"
                         f"\t{log.val_spearman!r}\t{log.val_r2!r}")
    atomic_write_text(args.out + ".epochs.tsv", "\n".join(log_lines) + "\n")
    best = result.logs[result.best_epoch - 1]
    print(f"saved {args.out} (best epoch {result.best_epoch}, "
          f"val spearman {best.val_spearman:.4f}, val mse {best.val_mse:.4f})")
    return 0


def cmd_eval(args) -> int:
    _resolve_corpus(args)
    artifact = load_model(args.artifact)
    model = artifact.model
    records, structures, store, _ = _load_corpus(args, model.d_struct, model.d_seq)
    samples = training.build_samples(records, structures, store,
                                     model.variant, model.window)
    val = [s for s in samples if s.record.split == training.VAL]
    text = _eval_report(model, artifact.best_epoch, val)
    if args.out:
        atomic_write_text(args.out, text)
    sys.stdout.write(text)
    return 0


def cmd_scan(args) -> int:
    args.pdb_dir = _require(args.pdb_dir or _data_dir_default("pdb"), "--pdb-dir")
    artifact = load_model(args.artifact)
    model = artifact.model
    structures = load_structures(args.pdb_dir, chain=args.chain)
    if args.id not in structures:
        raise ThermofuseError(
            f"no {args.id}.pdb under {args.pdb_dir} (found {sorted(structures)})"
        )
    structure = structures[args.id]
    dihedrals = {args.id: backbone_dihedrals(structure)}
    if args.emb_dir:
        store = EmbeddingStore.from_dir(args.emb_dir)
    else:
        store = EmbeddingStore.desk_scale({args.id: structure}, dihedrals,
                                          d_struct=model.d_struct,
                                          d_seq=model.d_seq, seed=args.seed)
    matrix = scan(model, structure, store.get(args.id, "struct"),
                  store.get(args.id, "seq") if store.has(args.id, "seq") else None)
    save_scan(matrix, args.out)
    print(f"saved {args.out} ({matrix.length} positions x 20 substitutions)")
    return 0


def cmd_analyze(args) -> int:
    _resolve_corpus(args)
    records, structures, store, fractions = _load_corpus(
        args, args.dim_struct, args.dim_seq
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    counts = analysis.substitution_counts(records)
    aa = "ACDEFGHIKLMNPQRSTVWY"
    grid_lines = ["wt\\mut\t" + "\t".join(aa)]
    for i, wt in enumerate(aa):
        grid_lines.append(wt + "\t" + "\t".join(str(c) for c in counts.counts[i]))
    atomic_write_text(out_dir / "substitution_counts.tsv",
                      "\n".join(grid_lines) + "\n")

    pairs = [("n_records", len(records))]
    pairs += [(f"dedup_fraction_{k}", v) for k, v in sorted(fractions.items())]
    pairs += [(f"top_substitution_{i + 1}", f"{w}>{m} x{c}")
              for i, (w, m, c) in enumerate(counts.top_pairs(5))]
    atomic_write_text(out_dir / "dataset_summary.txt", _report_text(pairs))

    # per-record window-mean structural embedding, reduced and clustered
    X, meta = [], []
    for r in records:
        s = structures.get(r.pdb_id)
        if s is None or not store.has(r.pdb_id, "struct"):
            continue
        emb = store.get(r.pdb_id, "struct")
        if not 1 <= r.position <= emb.length:
            continue
        half = args.window // 2
        lo, hi = max(0, r.position - 1 - half), min(emb.length, r.position + half)
        X.append(emb.vectors[lo:hi].astype(np.float64).mean(axis=0))
        meta.append(r)
    X = np.array(X)
    pca2 = analysis.pca_fit(X, 2)
    coords = analysis.pca_transform(pca2, X)
    scatter = ["x\ty\tddg\tpdb_id\tposition\twt_aa\tmut_aa\tsplit"]
    for r, (x, y) in zip(meta, coords):
        scatter.append(f"{x!r}\t{y!r}\t{r.ddg!r}\t{r.pdb_id}\t{r.position}"
                       f"\t{r.wt_aa}\t{r.mut_aa}\t{r.split}")
    atomic_write_text(out_dir / "pca_scatter.tsv", "\n".join(scatter) + "\n")

    k_reduce = min(8, X.shape[1], X.shape[0] - 1)
    reduced = analysis.pca_transform(analysis.pca_fit(X, k_reduce), X)
    km = analysis.kmeans(reduced, args.k, seed=args.seed)
    sizes = np.bincount(km.assignments, minlength=args.k)
    pairs = [("k", args.k), ("inertia", km.inertia),
             ("iterations", len(km.inertia_history) - 1),
             ("cluster_sizes", " ".join(str(int(n)) for n in sizes))]
    atomic_write_text(out_dir / "kmeans.txt", _report_text(pairs))

    labels = np.array([classify_sign(r.ddg) for r in meta], dtype=object)
    is_val = np.array([r.split == training.VAL for r in meta])
    if len(set(labels[~is_val])) >= 2 and is_val.any():
        forest = analysis.forest_fit(reduced[~is_val], labels[~is_val],
                                     analysis.ForestParams(seed=args.seed))
        pred = [analysis.forest_predict(forest, x) for x in reduced[is_val]]
        cls = classification_report(pred, list(labels[is_val]))
        pairs = [("classifier", "random_forest_on_pca"),
                 ("n_train", int((~is_val).sum())), ("n_val", int(is_val.sum()))]
        pairs += sorted(cls.as_dict().items())
        atomic_write_text(out_dir / "forest_report.txt", _report_text(pairs))

    print(f"analysis reports written to {out_dir}")
    return 0


def cmd_gridsearch(args) -> int:
    _resolve_corpus(args)
    records, structures, store, _ = _load_corpus(args, args.dim_struct, args.dim_seq)
    base = TrainConfig(variant=args.model, epochs=args.epochs,
                       batch_size=args.batch, lr=args.lr,
                       window=args.window, seed=args.seed)
    field_types = {f.name: f.type for f in dataclass_fields(TrainConfig)}
    grid: dict[str, list] = {}
    for spec_str in args.grid:
        if "=" not in spec_str:
            raise UsageError(f"--grid expects key=v1,v2,..., got {spec_str!r}")
        key, _, values = spec_str.partition("=")
        if key not in field_types:
            raise UsageError(f"unknown grid axis {key!r}")
        cast = float if key in ("lr", "weight_decay", "dropout_rate") else int
        grid[key] = [cast(v) for v in values.split(",")]
    results = training.grid_search(base, grid, records, structures, store,
                                   jobs=args.jobs)
    text = training.grid_report_text(results, sorted(grid))
    atomic_write_text(args.out, text)
    sys.stdout.write(text)
    return 0


def cmd_serve(args) -> int:
    _resolve_corpus(args)
    serve(args.artifact, args.data, args.pdb_dir, args.emb_dir,
          port=args.port, host=args.host, ui_dir=args.ui_dir, seed=args.seed)
    return 0


def cmd_embed(args) -> int:
    args.pdb_dir = _require(args.pdb_dir or _data_dir_default("pdb"), "--pdb-dir")
    structures = load_structures(args.pdb_dir, chain=args.chain)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = AminoAcidTable()
    for pid, s in sorted(structures.items()):
        dihedrals = backbone_dihedrals(s)
        for family, dim, offset in (("struct", args.dim_struct, 1),
                                    ("seq", args.dim_seq, 2)):
            emb = desk_scale_embed(s, dihedrals, table, dim,
                                   args.seed * 2 + offset)
            write_embeddings(emb, out_dir / f"{pid}.{family}.emb1")
    print(f"wrote embeddings for {len(structures)} proteins to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> _Parser:
    parser = _Parser(prog="thermofuse",
                     description="train and explore mutation-stability models")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    def add_train_flags(p):
        p.add_argument("--model", type=int, choices=(1, 2, 3, 4), required=True)
        p.add_argument("--epochs", type=int, default=100)
        p.add_argument("--batch", type=int, default=64)
        p.add_argument("--lr", type=float, default=1e-3)
        p.add_argument("--window", type=int, default=7)
        p.add_argument("--dim-struct", type=int, default=DEFAULT_DIM_STRUCT)
        p.add_argument("--dim-seq", type=int, default=DEFAULT_DIM_SEQ)

    p = sub.add_parser("train", help="train a fusion variant")
    _add_corpus_flags(p)
    add_train_flags(p)
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--d-f", type=int, default=64)
    p.add_argument("--d-a", type=int, default=64)
    p.add_argument("--out", required=True, help="model artifact path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate an artifact on the val split")
    _add_corpus_flags(p)
    p.add_argument("--artifact", required=True)
    p.add_argument("--out", default=None, help="also write the report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scan", help="full mutation scan for one protein")
    p.add_argument("--artifact", required=True)
    p.add_argument("--pdb-dir", default=None)
    p.add_argument("--emb-dir", default=None)
    p.add_argument("--id", required=True, help="protein id (the .pdb stem)")
    p.add_argument("--chain", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("analyze", help="dataset and embedding analysis reports")
    _add_corpus_flags(p)
    p.add_argument("--k", type=int, default=12, help="k-means cluster count")
    p.add_argument("--window", type=int, default=7)
    p.add_argument("--dim-struct", type=int, default=DEFAULT_DIM_STRUCT)
    p.add_argument("--dim-seq", type=int, default=DEFAULT_DIM_SEQ)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gridsearch", help="hyperparameter sweep")
    _add_corpus_flags(p)
    add_train_flags(p)
    p.add_argument("--grid", action="append", default=[],
                   metavar="key=v1,v2", help="axis of the sweep (repeatable)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="ranked results TSV")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("serve", help="run the HTTP scan service")
    _add_corpus_flags(p)
    p.add_argument("--artifact", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir", default=None, help="static explorer UI to mount")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("embed", help="write desk-scale EMB1 files")
    p.add_argument("--pdb-dir", default=None)
    p.add_argument("--chain", default=None)
    p.add_argument("--dim-struct", type=int, default=DEFAULT_DIM_STRUCT)
    p.add_argument("--dim-seq", type=int, default=DEFAULT_DIM_SEQ)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_embed)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except (ThermofuseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
