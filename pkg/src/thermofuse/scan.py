"""Model artifact persistence and full single-point mutation scans.

An artifact is a JSON document: format version, a config echo sufficient to
rebuild the network, every parameter tensor as base64-encoded little-endian
float64 bytes (bit-exact round trip), training metadata, and a SHA-256
checksum over the canonical payload.
"""

import base64
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from thermofuse.embeddings import EmbeddingSet
from thermofuse.errors import (
    ArtifactIntegrityError,
    ArtifactVersionError,
    DataLinkageError,
    DomainError,
)
from thermofuse.features import AA_ORDER, builtin_matrices, mutation_features
from thermofuse.fusion import FusionModel, FusionVariant, forward_variant
from thermofuse.ioutil import atomic_write_text
from thermofuse.nncore import DenseLayer, LightAttention
from thermofuse.structure_io import BackboneStructure, backbone_dihedrals

FORMAT_VERSION = 1


def _encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype=np.float64)
    return {"shape": list(a.shape),
            "data": base64.b64encode(a.astype("<f8").tobytes()).decode("ascii")}


def _decode_array(entry: dict) -> np.ndarray:
    raw = base64.b64decode(entry["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(entry["shape"]).copy()


def _canonical(version: int, body: dict) -> str:
    return json.dumps({"format_version": version, "body": body},
                      sort_keys=True, separators=(",", ":"))


def save_model(model: FusionModel, logs, path, dataset_checksum: str = "") -> None:
    """Persist the model with its epoch-selection metadata, atomically."""
    from thermofuse.training import select_best_epoch

    best_epoch = select_best_epoch(logs) if logs else 0
    val_metrics = {}
    if logs:
        best = logs[best_epoch - 1]
        val_metrics = {"val_mse": best.val_mse, "val_spearman": best.val_spearman,
                       "val_r2": best.val_r2}
    body = {
        "variant": model.variant.value,
        "config": {
            "d_struct": model.d_struct, "d_seq": model.d_seq,
            "d_f": model.d_f, "d_a": model.d_a, "window": model.window,
            "seed": model.seed, "feat_dim": model.feat_dim,
            "hidden": list(model.hidden),
            "head_activations": [layer.activation for layer in model.head],
        },
        "params": {name: _encode_array(p) for name, p in model.params().items()},
        "dataset_checksum": dataset_checksum,
        "best_epoch": best_epoch,
        "val_metrics": val_metrics,
    }
    doc = {"format_version": FORMAT_VERSION,
           "checksum": hashlib.sha256(_canonical(FORMAT_VERSION, body).encode()).hexdigest(),
           "body": body}
    atomic_write_text(path, json.dumps(doc, indent=1))


@dataclass
class LoadedArtifact:
    model: FusionModel
    best_epoch: int
    val_metrics: dict
    dataset_checksum: str


def load_model(path) -> LoadedArtifact:
    """Load and verify an artifact; any mismatch rejects the whole file."""
    try:
        doc = json.loads(open(path, "rb").read().decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ArtifactIntegrityError(f"{path}: not a valid artifact document") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ArtifactVersionError(
            f"{path}: artifact format {version!r} unsupported (expected {FORMAT_VERSION})"
        )
    body = doc.get("body")
    expected = hashlib.sha256(_canonical(version, body).encode()).hexdigest()
    if doc.get("checksum") != expected:
        raise ArtifactIntegrityError(f"{path}: checksum mismatch, artifact corrupt")
    cfg = body["config"]
    params = {name: _decode_array(entry) for name, entry in body["params"].items()}
    variant = FusionVariant.from_number(body["variant"])

    def dense(prefix: str, activation: str = "identity") -> DenseLayer:
        return DenseLayer(params[f"{prefix}.W"], params[f"{prefix}.b"], activation)

    proj_b = dense("proj_b") if "proj_b.W" in params else None
    head = [dense(f"head.{i}", act) for i, act in enumerate(cfg["head_activations"])]
    model = FusionModel(
        variant=variant, proj_a=dense("proj_a"), proj_b=proj_b,
        attention=LightAttention(dense("attention.value"), dense("attention.attn")),
        head=head, d_f=cfg["d_f"], d_seq=cfg["d_seq"], window=cfg["window"],
        seed=cfg["seed"], feat_dim=cfg["feat_dim"], hidden=tuple(cfg["hidden"]),
    )
    return LoadedArtifact(model=model, best_epoch=body["best_epoch"],
                          val_metrics=body["val_metrics"],
                          dataset_checksum=body["dataset_checksum"])


# ---------------------------------------------------------------------------
# mutation scan


@dataclass
class ScanMatrix:
    """Predicted stability change for every position x substitute residue.

    Rows follow the sequence; columns are the 20 canonical residues in
    alphabetical one-letter order.  Wild-type cells are exactly zero.
    """

    pdb_id: str
    chain: str
    wt_sequence: str
    values: np.ndarray
    units: str = "kcal/mol"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        L = len(self.wt_sequence)
        if self.values.shape != (L, 20):
            raise DomainError(f"scan matrix must be {L} x 20")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("scan matrix has non-finite cells")
        for i, aa in enumerate(self.wt_sequence):
            if self.values[i, AA_ORDER.index(aa)] != 0.0:
                raise DomainError(f"wild-type cell at position {i + 1} must be 0")

    @property
    def length(self) -> int:
        return len(self.wt_sequence)

    def to_payload(self) -> dict:
        return {"pdb_id": self.pdb_id, "chain": self.chain,
                "length": self.length, "wt_sequence": self.wt_sequence,
                "aa_order": list(AA_ORDER), "units": self.units,
                "values": [[float(v) for v in row] for row in self.values]}


def scan(model: FusionModel, structure: BackboneStructure,
         struct_emb: EmbeddingSet, seq_emb: EmbeddingSet | None = None) -> ScanMatrix:
    """Predict every single-point substitution; self cells are pinned at 0.

    The structure must be fully canonical (every row needs a wild-type
    column to zero out).
    """
    seq = structure.sequence
    if "X" in seq:
        raise DomainError(
            f"{structure.pdb_id}: scan needs canonical residues, found 'X' at "
            f"position {seq.index('X') + 1}"
        )
    if struct_emb.length != len(structure):
        raise DataLinkageError(
            f"{structure.pdb_id}: embedding length {struct_emb.length} != "
            f"structure length {len(structure)}"
        )
    if seq_emb is not None and seq_emb.length != len(structure):
        raise DataLinkageError(
            f"{structure.pdb_id}: sequence embedding length mismatch"
        )
    needs_feats = model.variant is FusionVariant.M4_DOMAIN_CONCAT
    dihedrals = backbone_dihedrals(structure) if needs_feats else None
    matrices = builtin_matrices() if needs_feats else None
    values = np.zeros((len(structure), 20))
    for i, wt in enumerate(seq, start=1):
        for j, mut in enumerate(AA_ORDER):
            if mut == wt:
                continue
            feats = None
            if needs_feats:
                feats = mutation_features(structure, dihedrals, i, wt, mut,
                                          model.window, matrices)
            values[i - 1, j] = forward_variant(model, struct_emb, seq_emb,
                                               feats, i, mut)
    return ScanMatrix(pdb_id=structure.pdb_id, chain=structure.chain,
                      wt_sequence=seq, values=values)


def save_scan(matrix: ScanMatrix, path) -> None:
    atomic_write_text(path, json.dumps(matrix.to_payload(), indent=1))
