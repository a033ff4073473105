"""Shared fixtures: synthetic structures and a small training corpus."""

import math
from pathlib import Path

import numpy as np
import pytest

from thermofuse.structure_io import BackboneStructure, Residue

FIXTURES = Path(__file__).parent / "fixtures"

AA1_TO_3 = {
    "A": "ALA", "R": "ARG", "N": "ASN", "D": "ASP", "C": "CYS",
    "Q": "GLN", "E": "GLU", "G": "GLY", "H": "HIS", "I": "ILE",
    "L": "LEU", "K": "LYS", "M": "MET", "F": "PHE", "P": "PRO",
    "S": "SER", "T": "THR", "W": "TRP", "Y": "TYR", "V": "VAL",
}


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def planar_structure(n: int, sequence: str | None = None) -> BackboneStructure:
    """Extended chain with every backbone atom in the z=0 plane.

    Consecutive chain atoms zig-zag between y=0 and y=1, which puts every
    phi/psi/omega at exactly 180 degrees (planar anti configuration).
    """
    sequence = sequence or ("G" * n)
    residues = []
    for i in range(n):
        coords = []
        for k in range(3):  # N, CA, C at consecutive x steps
            step = 3 * i + k
            coords.append(np.array([float(step), float(step % 2), 0.0]))
        o = np.array([3 * i + 2 + 0.4, (3 * i + 2) % 2 - 1.2, 0.0])
        residues.append(Residue(index=i + 1, aa=sequence[i], n=coords[0],
                                ca=coords[1], c=coords[2], o=o))
    return BackboneStructure(pdb_id="planar", chain="A", residues=residues)


def helix_structure(sequence: str, pdb_id: str = "helix",
                    chain: str = "A") -> BackboneStructure:
    """Synthetic helical backbone, geometrically non-degenerate."""
    residues = []
    for i, aa in enumerate(sequence):
        theta = math.radians(100.0) * i
        ca = np.array([2.3 * math.cos(theta), 2.3 * math.sin(theta), 1.5 * i])
        n = ca + np.array([0.8 * math.cos(theta - 1.2), 0.8 * math.sin(theta - 1.2), -0.9])
        c = ca + np.array([0.9 * math.cos(theta + 1.0), 0.9 * math.sin(theta + 1.0), 0.8])
        o = c + np.array([0.4 * math.cos(theta + 2.1), 0.4 * math.sin(theta + 2.1), 1.1])
        residues.append(Residue(index=i + 1, aa=aa, n=n, ca=ca, c=c, o=o))
    return BackboneStructure(pdb_id=pdb_id, chain=chain, residues=residues)


def write_structure_pdb(s: BackboneStructure, path: Path) -> None:
    lines = []
    serial = 1
    for res in s.residues:
        for name, xyz in (("N", res.n), ("CA", res.ca), ("C", res.c), ("O", res.o)):
            if xyz is None:
                continue
            lines.append(
                f"ATOM  {serial:5d} {name:^4s}{AA1_TO_3[res.aa]:>4s} {s.chain}"
                f"{res.index:4d}    {xyz[0]:8.3f}{xyz[1]:8.3f}{xyz[2]:8.3f}  1.00  0.00"
            )
            serial += 1
    lines.append("END")
    path.write_text("\n".join(lines) + "\n")


CORPUS_SEQUENCES = {
    "prot1": "MKTAYIAKQRQISFVKSHFSRQLEERL",
    "prot2": "GSHMEAVLKTFAENWQRVDSILKEAGIDPNT",
    "prot3": "ACDEFGHIKLMNPQRSTVWY",
}


def make_corpus_records(seed: int = 11, n_train: int = 48, n_val: int = 16):
    """Deterministic synthetic mutation records over the corpus proteins.

    The target mixes a molecular-weight term with seeded noise so it is
    learnable but not degenerate.
    """
    from thermofuse.features import MOLECULAR_WEIGHT
    from thermofuse.training import MutationRecord

    rng = np.random.default_rng(seed)
    ids = sorted(CORPUS_SEQUENCES)
    records = []
    seen = set()
    while len(records) < n_train + n_val:
        pid = ids[rng.integers(len(ids))]
        seq = CORPUS_SEQUENCES[pid]
        pos = int(rng.integers(1, len(seq) + 1))
        wt = seq[pos - 1]
        mut = "ACDEFGHIKLMNPQRSTVWY"[rng.integers(20)]
        if mut == wt or (pid, pos, mut) in seen:
            continue
        seen.add((pid, pos, mut))
        ddg = (0.05 * (MOLECULAR_WEIGHT[mut] - MOLECULAR_WEIGHT[wt])
               + 0.4 * rng.standard_normal())
        split = "train" if len(records) < n_train else "val"
        records.append(MutationRecord(pid, "A", pos, wt, mut, round(ddg, 4), split))
    return records


@pytest.fixture
def corpus(tmp_path):
    """Small on-disk corpus: dataset.csv plus pdb/ with three proteins."""
    from thermofuse.training import save_records

    pdb_dir = tmp_path / "pdb"
    pdb_dir.mkdir()
    structures = {}
    for pid, seq in CORPUS_SEQUENCES.items():
        s = helix_structure(seq, pdb_id=pid)
        structures[pid] = s
        write_structure_pdb(s, pdb_dir / f"{pid}.pdb")
    records = make_corpus_records()
    data_path = tmp_path / "dataset.csv"
    save_records(records, data_path)
    return {"root": tmp_path, "data": data_path, "pdb_dir": pdb_dir,
            "records": records, "structures": structures}
