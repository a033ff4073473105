#!/usr/bin/env python3
"""Record real scan-service responses as JSON fixtures for the explorer UI.

Builds a tiny deterministic corpus (one 3-residue chain for the smallest
heatmap, one 27-residue chain for everything else), trains nothing (a
seeded untrained model is enough for fixture shapes and values), and dumps
each endpoint's body under frontend/fixtures/.
"""

import json
import math
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from thermofuse.fusion import build_model
from thermofuse.scan import save_model
from thermofuse.server import build_state, create_app
from thermofuse.structure_io import BackboneStructure, Residue
from thermofuse.training import EpochLog, MutationRecord, save_records

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "frontend" / "fixtures"

SEQS = {"mini": "GAV", "helix27": "MKTAYIAKQRQISFVKSHFSRQLEERL"}


def helix(sequence, pdb_id):
    residues = []
    for i, aa in enumerate(sequence):
        theta = math.radians(100.0) * i
        ca = np.array([2.3 * math.cos(theta), 2.3 * math.sin(theta), 1.5 * i])
        n = ca + np.array([0.8 * math.cos(theta - 1.2), 0.8 * math.sin(theta - 1.2), -0.9])
        c = ca + np.array([0.9 * math.cos(theta + 1.0), 0.9 * math.sin(theta + 1.0), 0.8])
        o = c + np.array([0.4 * math.cos(theta + 2.1), 0.4 * math.sin(theta + 2.1), 1.1])
        residues.append(Residue(index=i + 1, aa=aa, n=n, ca=ca, c=c, o=o))
    return BackboneStructure(pdb_id=pdb_id, chain="A", residues=residues)


def write_pdb(s, path):
    three = {"A": "ALA", "G": "GLY", "V": "VAL", "M": "MET", "K": "LYS",
             "T": "THR", "Y": "TYR", "I": "ILE", "Q": "GLN", "R": "ARG",
             "S": "SER", "F": "PHE", "H": "HIS", "E": "GLU", "L": "LEU"}
    lines, serial = [], 1
    for r in s.residues:
        for name, xyz in (("N", r.n), ("CA", r.ca), ("C", r.c), ("O", r.o)):
            lines.append(f"ATOM  {serial:5d} {name:^4s}{three[r.aa]:>4s} A"
                         f"{r.index:4d}    {xyz[0]:8.3f}{xyz[1]:8.3f}{xyz[2]:8.3f}"
                         f"  1.00  0.00")
            serial += 1
    lines.append("END")
    path.write_text("\n".join(lines) + "\n")


def main():
    import tempfile

    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        pdb_dir = tmp / "pdb"
        pdb_dir.mkdir()
        for pid, seq in SEQS.items():
            write_pdb(helix(seq, pid), pdb_dir / f"{pid}.pdb")

        rng = np.random.default_rng(5)
        records, seen = [], set()
        seq = SEQS["helix27"]
        while len(records) < 40:
            pos = int(rng.integers(1, len(seq) + 1))
            wt = seq[pos - 1]
            mut = "ACDEFGHIKLMNPQRSTVWY"[rng.integers(20)]
            if mut == wt or (pos, mut) in seen:
                continue
            seen.add((pos, mut))
            split = "train" if len(records) < 28 else "val"
            ddg = round(float(rng.standard_normal() * 1.5), 3)
            records.append(MutationRecord("helix27", "A", pos, wt, mut, ddg, split))
        data = tmp / "dataset.csv"
        save_records(records, data)

        model = build_model(3, 12, 16, d_f=8, d_a=6, window=5, hidden=(16,), seed=13)
        logs = [EpochLog(1, 1.4, 1.5, 0.21, 0.02), EpochLog(2, 1.1, 1.3, 0.38, 0.06)]
        artifact = tmp / "model.art"
        save_model(model, logs, artifact)

        state = build_state(artifact, data, pdb_dir, emb_dir=None, seed=5)
        client = TestClient(create_app(state))

        captures = {
            "proteins.json": "/api/proteins",
            "structure_helix27.json": "/api/proteins/helix27/structure",
            "structure_mini.json": "/api/proteins/mini/structure",
            "scan_mini.json": "/api/proteins/mini/scan",
            "scan_helix27.json": "/api/proteins/helix27/scan",
            "summary.json": "/api/dataset/summary",
            "scatter.json": "/api/analysis/embedding_scatter",
            "metrics.json": "/api/metrics",
        }
        for name, endpoint in captures.items():
            resp = client.get(endpoint)
            assert resp.status_code == 200, endpoint
            (OUT / name).write_text(json.dumps(resp.json(), indent=1) + "\n")
            print(f"recorded {name} <- {endpoint}")


if __name__ == "__main__":
    main()
