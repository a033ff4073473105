"""Read-only HTTP API over a trained model and its protein corpus.

Everything is loaded once at startup and frozen; responses are pure
functions of the loaded state and the request, so identical requests yield
identical bodies.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from thermofuse.analysis import pca_fit, pca_transform, substitution_counts
from thermofuse.embeddings import EmbeddingSet, EmbeddingStore
from thermofuse.errors import ServiceStartupError, ThermofuseError
from thermofuse.features import AA_INDEX, builtin_matrices, mutation_features
from thermofuse.fusion import FusionVariant, forward_variant, representation
from thermofuse.metrics import (
    classification_report,
    classify_sign,
    regression_report,
)
from thermofuse.scan import LoadedArtifact, load_model, scan
from thermofuse.structure_io import (
    BackboneStructure,
    backbone_dihedrals,
    parse_pdb,
)
from thermofuse.training import (
    VAL,
    MutationRecord,
    Sample,
    build_samples,
    dedup,
    ensure_split,
    load_records,
)


@dataclass
class ProteinEntry:
    structure: BackboneStructure
    struct_emb: EmbeddingSet
    seq_emb: Optional[EmbeddingSet]
    dihedrals: list


@dataclass
class ServiceState:
    artifact: LoadedArtifact
    proteins: dict[str, ProteinEntry]
    records: list[MutationRecord]
    dedup_fractions: dict[str, float]
    val_samples: list[Sample]
    _scan_cache: dict[str, dict] = field(default_factory=dict)

    @property
    def model(self):
        return self.artifact.model

    def scan_payload(self, pdb_id: str) -> dict:
        if pdb_id not in self._scan_cache:
            entry = self.proteins[pdb_id]
            matrix = scan(self.model, entry.structure, entry.struct_emb,
                          entry.seq_emb)
            self._scan_cache[pdb_id] = matrix.to_payload()
        return self._scan_cache[pdb_id]


def load_structures(pdb_dir, chain: str | None = None) -> dict[str, BackboneStructure]:
    structures = {}
    for file in sorted(Path(pdb_dir).glob("*.pdb")):
        structures[file.stem] = parse_pdb(file.read_text(), chain=chain,
                                          pdb_id=file.stem)
    return structures


def build_state(artifact_path, data_path, pdb_dir, emb_dir=None,
                seed: int = 0) -> ServiceState:
    """Load artifact, dataset and corpus; any failure aborts startup."""
    try:
        artifact = load_model(artifact_path)
        deduped = dedup(load_records(data_path))
        records = ensure_split(deduped.kept, seed)
        fractions = deduped.removed_fraction_per_split
        structures = load_structures(pdb_dir)
        if not structures:
            raise ServiceStartupError(f"no PDB files under {pdb_dir}")
        dihedrals = {pid: backbone_dihedrals(s) for pid, s in structures.items()}
        if emb_dir is not None:
            store = EmbeddingStore.from_dir(emb_dir)
        else:
            model = artifact.model
            store = EmbeddingStore.desk_scale(structures, dihedrals,
                                              d_struct=model.d_struct,
                                              d_seq=model.d_seq, seed=seed)
        proteins = {}
        for pid, s in structures.items():
            proteins[pid] = ProteinEntry(
                structure=s,
                struct_emb=store.get(pid, "struct"),
                seq_emb=store.get(pid, "seq") if store.has(pid, "seq") else None,
                dihedrals=dihedrals[pid],
            )
        val_samples = [
            s for s in build_samples(records, structures, store,
                                     artifact.model.variant,
                                     artifact.model.window)
            if s.record.split == VAL
        ]
        return ServiceState(artifact=artifact, proteins=proteins,
                            records=records, dedup_fractions=fractions,
                            val_samples=val_samples)
    except ServiceStartupError:
        raise
    except (ThermofuseError, OSError) as exc:
        raise ServiceStartupError(f"cannot start service: {exc}") from exc


class PredictRequest(BaseModel):
    pdb_id: str
    chain: str
    position: int
    wt_aa: str
    mut_aa: str


def _residue_payload(res) -> dict:
    def coords(a):
        return None if a is None else [float(v) for v in a]

    return {"index": res.index, "aa": res.aa, "n": coords(res.n),
            "ca": coords(res.ca), "c": coords(res.c), "o": coords(res.o)}


def _metrics_payload(state: ServiceState) -> dict:
    preds = []
    targets = []
    for s in state.val_samples:
        preds.append(forward_variant(state.model, s.struct_emb, s.seq_emb,
                                     s.feats, s.record.position,
                                     s.record.mut_aa))
        targets.append(s.record.ddg)
    reg = regression_report(preds, targets)
    cls = classification_report([classify_sign(p) for p in preds],
                                [classify_sign(t) for t in targets])
    return {"variant": state.model.variant.value,
            "best_epoch": state.artifact.best_epoch,
            "regression": reg.as_dict(),
            "classification": cls.as_dict()}


def _scatter_payload(state: ServiceState) -> dict:
    if len(state.val_samples) < 3:
        return {"points": [], "explained_variance": []}
    reps = np.array([
        representation(state.model, s.struct_emb, s.seq_emb, s.feats,
                       s.record.position, s.record.mut_aa)
        for s in state.val_samples
    ])
    pca = pca_fit(reps, 2)
    coords = pca_transform(pca, reps)
    points = []
    for s, (x, y) in zip(state.val_samples, coords):
        r = s.record
        points.append({"x": float(x), "y": float(y), "ddg": r.ddg,
                       "pdb_id": r.pdb_id, "position": r.position,
                       "wt_aa": r.wt_aa, "mut_aa": r.mut_aa})
    return {"points": points,
            "explained_variance": [float(v) for v in pca.explained_variance]}


def create_app(state: ServiceState, ui_dir=None) -> FastAPI:
    app = FastAPI(title="thermofuse scan service")
    metrics_payload = _metrics_payload(state)
    scatter_payload = _scatter_payload(state)
    counts = substitution_counts(state.records)
    summary_payload = {
        "n_records": len(state.records),
        "n_train": sum(1 for r in state.records if r.split == "train"),
        "n_val": sum(1 for r in state.records if r.split == VAL),
        "dedup_fraction": state.dedup_fractions,
        "substitution_counts": {"aa_order": list("ACDEFGHIKLMNPQRSTVWY"),
                                "counts": counts.counts.tolist()},
    }

    def get_entry(pdb_id: str) -> ProteinEntry:
        entry = state.proteins.get(pdb_id)
        if entry is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown protein {pdb_id!r}")
        return entry

    @app.get("/api/proteins")
    def list_proteins():
        return [
            {"pdb_id": pid, "chain": e.structure.chain,
             "length": len(e.structure), "sequence": e.structure.sequence}
            for pid, e in sorted(state.proteins.items())
        ]

    @app.get("/api/proteins/{pdb_id}/structure")
    def get_structure(pdb_id: str):
        entry = get_entry(pdb_id)
        s = entry.structure
        return {"pdb_id": pdb_id, "chain": s.chain, "sequence": s.sequence,
                "residues": [_residue_payload(r) for r in s.residues]}

    @app.get("/api/proteins/{pdb_id}/scan")
    def get_scan(pdb_id: str):
        get_entry(pdb_id)
        return state.scan_payload(pdb_id)

    @app.post("/api/predict")
    def predict(req: PredictRequest):
        entry = get_entry(req.pdb_id)
        s = entry.structure
        if req.chain != s.chain:
            raise HTTPException(422, detail=f"protein {req.pdb_id} holds chain "
                                            f"{s.chain}, not {req.chain}")
        if req.wt_aa not in AA_INDEX or req.mut_aa not in AA_INDEX:
            raise HTTPException(422, detail="amino-acid codes must be canonical")
        if not 1 <= req.position <= len(s):
            raise HTTPException(422, detail=f"position {req.position} outside "
                                            f"protein of length {len(s)}")
        actual = s.residues[req.position - 1].aa
        if actual != req.wt_aa:
            raise HTTPException(422, detail=f"structure has {actual} at position "
                                            f"{req.position}, request says {req.wt_aa}")
        if req.wt_aa == req.mut_aa:
            ddg = 0.0
        else:
            feats = None
            if state.model.variant is FusionVariant.M4_DOMAIN_CONCAT:
                feats = mutation_features(s, entry.dihedrals, req.position,
                                          req.wt_aa, req.mut_aa,
                                          state.model.window, builtin_matrices())
            ddg = forward_variant(state.model, entry.struct_emb, entry.seq_emb,
                                  feats, req.position, req.mut_aa)
        if not math.isfinite(ddg):
            raise HTTPException(500, detail="model produced a non-finite value")
        return {"ddg": ddg, "units": "kcal/mol"}

    @app.get("/api/dataset/summary")
    def dataset_summary():
        return summary_payload

    @app.get("/api/analysis/embedding_scatter")
    def embedding_scatter():
        return scatter_payload

    @app.get("/api/metrics")
    def get_metrics():
        return metrics_payload

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def serve(artifact_path, data_path, pdb_dir, emb_dir=None, port: int = 8000,
          host: str = "127.0.0.1", ui_dir=None, seed: int = 0) -> None:
    """Build the state and run the service until interrupted."""
    import uvicorn

    state = build_state(artifact_path, data_path, pdb_dir, emb_dir, seed=seed)
    app = create_app(state, ui_dir=ui_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise ServiceStartupError(f"cannot bind {host}:{port}: {exc}") from exc
