#!/usr/bin/env python3
"""Regenerate the binary/text fixtures under tests/fixtures.

The PDB fixture carries the 164-residue T4 lysozyme sequence on chain A
with synthetic helical backbone coordinates (the real experimental
coordinates are not needed by any test).  The EMB1 golden file is written
with straight struct.pack calls, independent of the library writer, so the
reader can be checked against a byte layout produced by other code.
"""

import math
import struct
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

T4_LYSOZYME = (
    "MNIFEMLRIDEGLRLKIYKDTEGYYTIGIGHLLTKSPSLNAAKSELDKAIGRNTNGVITKDEAEKLFNQD"
    "VDAAVRGILRNAKLKPVYDSLDAVRRAALINMVFQMGETGVAGFTNSLRMLQQKRWDEAAVNLAKSRWYN"
    "QTPNRAKRVITTFRTGTWDAYKNL"
)

AA1_TO_3 = {
    "A": "ALA", "R": "ARG", "N": "ASN", "D": "ASP", "C": "CYS",
    "Q": "GLN", "E": "GLU", "G": "GLY", "H": "HIS", "I": "ILE",
    "L": "LEU", "K": "LYS", "M": "MET", "F": "PHE", "P": "PRO",
    "S": "SER", "T": "THR", "W": "TRP", "Y": "TYR", "V": "VAL",
}


def helix_backbone(i: int):
    """Synthetic but non-degenerate backbone atom positions for residue i."""
    theta = math.radians(100.0) * i
    radius, rise = 2.3, 1.5
    ca = (radius * math.cos(theta), radius * math.sin(theta), rise * i)
    n = (ca[0] + 0.8 * math.cos(theta - 1.2), ca[1] + 0.8 * math.sin(theta - 1.2), ca[2] - 0.9)
    c = (ca[0] + 0.9 * math.cos(theta + 1.0), ca[1] + 0.9 * math.sin(theta + 1.0), ca[2] + 0.8)
    o = (c[0] + 0.4 * math.cos(theta + 2.1), c[1] + 0.4 * math.sin(theta + 2.1), c[2] + 1.1)
    return {"N": n, "CA": ca, "C": c, "O": o}


def write_pdb(path: Path, sequence: str, chain: str = "A") -> None:
    lines = ["HEADER    SYNTHETIC BACKBONE FIXTURE"]
    serial = 1
    for i, aa in enumerate(sequence):
        atoms = helix_backbone(i)
        for name in ("N", "CA", "C", "O"):
            x, y, z = atoms[name]
            lines.append(
                f"ATOM  {serial:5d} {name:^4s}{AA1_TO_3[aa]:>4s} {chain}{i + 1:4d} "
                f"   {x:8.3f}{y:8.3f}{z:8.3f}  1.00  0.00"
            )
            serial += 1
    lines.append(f"TER   {serial:5d}      {AA1_TO_3[sequence[-1]]:>3s} "
                 f"{chain}{len(sequence):4d}")
    lines.append("END")
    path.write_text("\n".join(lines) + "\n")


def write_golden_emb1(path: Path) -> None:
    """3 residues x 2 dims for protein 'golden'; values documented in tests."""
    values = [1.5, -2.25, 0.0, 3.0, -0.5, 10.0]
    ident = b"golden"
    blob = b"EMB1" + struct.pack("<III", 3, 2, len(ident)) + ident
    for v in values:
        blob += struct.pack("<f", v)
    path.write_bytes(blob)


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    assert len(T4_LYSOZYME) == 164, f"sequence length {len(T4_LYSOZYME)}"
    write_pdb(FIXTURES / "2lzm.pdb", T4_LYSOZYME)
    write_golden_emb1(FIXTURES / "golden.emb1")
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
