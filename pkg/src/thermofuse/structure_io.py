"""PDB backbone parsing and torsion-angle geometry.

Only the four backbone atoms (N, CA, C, O) are kept; sidechains, hydrogens
and HETATM records are ignored.  Multi-model files contribute MODEL 1 only
and insertion-coded residues are skipped.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from thermofuse.errors import (
    EmptyStructureError,
    GeometryError,
    PdbParseError,
    ShapeError,
)

AA3_TO_1 = {
    "ALA": "A", "ARG": "R", "ASN": "N", "ASP": "D", "CYS": "C",
    "GLN": "Q", "GLU": "E", "GLY": "G", "HIS": "H", "ILE": "I",
    "LEU": "L", "LYS": "K", "MET": "M", "PHE": "F", "PRO": "P",
    "SER": "S", "THR": "T", "TRP": "W", "TYR": "Y", "VAL": "V",
}
AA1_TO_3 = {v: k for k, v in AA3_TO_1.items()}
BACKBONE_ATOMS = ("N", "CA", "C", "O")


@dataclass
class Residue:
    """One residue's backbone: 1-based index, one-letter code, atom coords (Å)."""

    index: int
    aa: str
    n: Optional[np.ndarray] = None
    ca: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None
    o: Optional[np.ndarray] = None

    def atom(self, name: str) -> Optional[np.ndarray]:
        return getattr(self, name.lower())

    @property
    def present_atoms(self) -> dict[str, bool]:
        return {name: self.atom(name) is not None for name in BACKBONE_ATOMS}


@dataclass
class BackboneStructure:
    """Ordered residues of a single chain."""

    pdb_id: str
    chain: str
    residues: list[Residue] = field(default_factory=list)

    def __post_init__(self):
        if not self.residues:
            raise EmptyStructureError(f"{self.pdb_id}: structure has no residues")
        indices = [r.index for r in self.residues]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ShapeError(f"{self.pdb_id}: residue indices must strictly increase")

    def __len__(self) -> int:
        return len(self.residues)

    @property
    def sequence(self) -> str:
        return "".join(r.aa for r in self.residues)


@dataclass
class DihedralTriple:
    """Backbone torsions in degrees, None where neighbors/atoms are missing."""

    phi: Optional[float] = None
    psi: Optional[float] = None
    omega: Optional[float] = None


def _parse_float(line: str, lo: int, hi: int, lineno: int, what: str) -> float:
    text = line[lo:hi].strip()
    try:
        return float(text)
    except ValueError:
        raise PdbParseError(f"bad {what} field {text!r}", lineno) from None


def parse_pdb(text: str, chain: str | None = None, pdb_id: str = "") -> BackboneStructure:
    """Parse fixed-column ATOM records into a backbone structure.

    `chain` selects the chain identifier; by default the chain of the first
    ATOM record is used.  For duplicated atoms (altloc variants) the first
    record wins; unknown residue names map to 'X'.
    """
    residues: dict[int, Residue] = {}
    selected_chain = chain
    model = 0
    terminated = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        record = line[:6].strip()
        if record == "MODEL":
            model += 1
            if model > 1:
                break
        elif record == "ENDMDL":
            break
        elif record == "TER":
            line_chain = line[21:22]
            if selected_chain is not None and line_chain == selected_chain:
                terminated = True
        elif record == "ATOM":
            if terminated:
                continue
            if len(line) < 54:
                raise PdbParseError("truncated ATOM record", lineno)
            line_chain = line[21:22]
            if selected_chain is None:
                selected_chain = line_chain
            if line_chain != selected_chain:
                continue
            if line[26] != " ":  # insertion code
                continue
            atom_name = line[12:16].strip()
            if atom_name not in BACKBONE_ATOMS:
                continue
            try:
                res_seq = int(line[22:26])
            except ValueError:
                raise PdbParseError(f"bad residue number {line[22:26]!r}", lineno) from None
            xyz = np.array([
                _parse_float(line, 30, 38, lineno, "x coordinate"),
                _parse_float(line, 38, 46, lineno, "y coordinate"),
                _parse_float(line, 46, 54, lineno, "z coordinate"),
            ])
            res = residues.get(res_seq)
            if res is None:
                aa = AA3_TO_1.get(line[17:20].strip(), "X")
                res = Residue(index=res_seq, aa=aa)
                residues[res_seq] = res
            if res.atom(atom_name) is None:  # first altloc wins
                setattr(res, atom_name.lower(), xyz)
    if not residues:
        raise EmptyStructureError(
            f"{pdb_id or '<pdb>'}: no ATOM records for chain {selected_chain or '?'}"
        )
    ordered = [residues[k] for k in sorted(residues)]
    return BackboneStructure(pdb_id=pdb_id, chain=selected_chain, residues=ordered)


def serialize_pdb(s: BackboneStructure) -> str:
    """Write the kept backbone atoms back out as fixed-column ATOM records."""
    lines = []
    serial = 1
    for res in s.residues:
        res3 = AA1_TO_3.get(res.aa, "UNK")
        for atom_name in BACKBONE_ATOMS:
            xyz = res.atom(atom_name)
            if xyz is None:
                continue
            lines.append(
                f"ATOM  {serial:5d} {atom_name:^4s}{res3:>4s} {s.chain}{res.index:4d} "
                f"   {xyz[0]:8.3f}{xyz[1]:8.3f}{xyz[2]:8.3f}  1.00  0.00"
            )
            serial += 1
    lines.append(f"TER   {serial:5d}      {AA1_TO_3.get(s.residues[-1].aa, 'UNK'):>3s} "
                 f"{s.chain}{s.residues[-1].index:4d}")
    lines.append("END")
    return "\n".join(lines) + "\n"


def dihedral(p1, p2, p3, p4) -> float:
    """Signed torsion angle (degrees) of p1-p2-p3-p4, in (-180, 180].

    Right-handed convention: the angle is positive when, sighting down the
    p2->p3 axis, the p3->p4 bond is rotated clockwise from the p1->p2 bond.
    With this convention (0,1,0),(0,0,0),(1,0,0),(1,0,1) gives +90.
    """
    pts = [np.asarray(p, dtype=np.float64) for p in (p1, p2, p3, p4)]
    for a, b in zip(pts, pts[1:]):
        if np.linalg.norm(b - a) <= 1e-9:
            raise GeometryError("consecutive dihedral points coincide")
    b1 = pts[1] - pts[0]
    b2 = pts[2] - pts[1]
    b3 = pts[3] - pts[2]
    n1 = np.cross(b1, b2)
    n2 = np.cross(b2, b3)
    if np.linalg.norm(n1) <= 1e-9 or np.linalg.norm(n2) <= 1e-9:
        raise GeometryError("collinear points leave the torsion undefined")
    b2n = b2 / np.linalg.norm(b2)
    deg = math.degrees(math.atan2(float(np.dot(np.cross(n1, n2), b2n)),
                                  float(np.dot(n1, n2))))
    if deg <= -180.0:
        deg += 360.0
    return deg


def _safe_dihedral(*pts) -> Optional[float]:
    if any(p is None for p in pts):
        return None
    try:
        return dihedral(*pts)
    except GeometryError:
        return None


def backbone_dihedrals(s: BackboneStructure) -> list[DihedralTriple]:
    """Per-residue (phi, psi, omega); None at chain ends or missing atoms.

    phi(i): C(i-1)-N(i)-CA(i)-C(i); psi(i): N(i)-CA(i)-C(i)-N(i+1);
    omega(i): CA(i)-C(i)-N(i+1)-CA(i+1).
    """
    out = []
    rs = s.residues
    for i, r in enumerate(rs):
        prev_c = rs[i - 1].c if i > 0 else None
        next_n = rs[i + 1].n if i + 1 < len(rs) else None
        next_ca = rs[i + 1].ca if i + 1 < len(rs) else None
        out.append(DihedralTriple(
            phi=_safe_dihedral(prev_c, r.n, r.ca, r.c),
            psi=_safe_dihedral(r.n, r.ca, r.c, next_n),
            omega=_safe_dihedral(r.ca, r.c, next_n, next_ca),
        ))
    return out
