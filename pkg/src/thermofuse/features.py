"""Amino-acid property tables, substitution matrices and the
hand-engineered feature vector describing one mutation site.
"""

import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from thermofuse.errors import BoundsError, ConsistencyError, DomainError, ShapeError
from thermofuse.structure_io import BackboneStructure, DihedralTriple

AA_ORDER = "ACDEFGHIKLMNPQRSTVWY"
AA_INDEX = {aa: i for i, aa in enumerate(AA_ORDER)}

# Free amino-acid molecular weight (Da) and Kyte-Doolittle hydropathy.
MOLECULAR_WEIGHT = {
    "A": 89.09, "C": 121.16, "D": 133.10, "E": 147.13, "F": 165.19,
    "G": 75.07, "H": 155.16, "I": 131.17, "K": 146.19, "L": 131.17,
    "M": 149.21, "N": 132.12, "P": 115.13, "Q": 146.15, "R": 174.20,
    "S": 105.09, "T": 119.12, "V": 117.15, "W": 204.23, "Y": 181.19,
}
HYDROPATHY = {
    "A": 1.8, "C": 2.5, "D": -3.5, "E": -3.5, "F": 2.8,
    "G": -0.4, "H": -3.2, "I": 4.5, "K": -3.9, "L": 3.8,
    "M": 1.9, "N": -3.5, "P": -1.6, "Q": -3.5, "R": -4.5,
    "S": -0.8, "T": -0.7, "V": 4.2, "W": -0.9, "Y": -1.3,
}


class AminoAcidTable:
    """Per-residue scalar properties plus orthonormal one-hot encodings."""

    def __init__(self, molecular_weight=None, hydropathy=None):
        self.molecular_weight = dict(molecular_weight or MOLECULAR_WEIGHT)
        self.hydropathy = dict(hydropathy or HYDROPATHY)
        if set(self.molecular_weight) != set(AA_ORDER):
            raise DomainError("molecular weight table must cover the 20 canonical codes")
        if set(self.hydropathy) != set(AA_ORDER):
            raise DomainError("hydropathy table must cover the 20 canonical codes")

    @staticmethod
    def one_hot(aa: str) -> np.ndarray:
        """20-dim unit vector; the all-zero vector for the unknown code 'X'."""
        v = np.zeros(len(AA_ORDER))
        if aa != "X":
            v[_aa_index(aa)] = 1.0
        return v


def _aa_index(aa: str) -> int:
    try:
        return AA_INDEX[aa]
    except KeyError:
        raise DomainError(f"{aa!r} is not a canonical one-letter amino-acid code") from None


@dataclass
class SubstitutionMatrix:
    """20x20 substitution scores; rows are wild-type, columns mutant."""

    name: str
    scores: np.ndarray
    symmetric: bool

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.shape != (20, 20):
            raise ShapeError(f"{self.name}: substitution matrix must be 20x20")
        if not np.all(np.isfinite(self.scores)):
            raise DomainError(f"{self.name}: matrix has non-finite scores")
        if self.symmetric and not np.array_equal(self.scores, self.scores.T):
            raise DomainError(f"{self.name}: matrix flagged symmetric but is not")


def lookup_substitution(m: SubstitutionMatrix, wt: str, mut: str) -> float:
    """Score for replacing `wt` by `mut`; directional matrices care about order."""
    return float(m.scores[_aa_index(wt), _aa_index(mut)])


def load_matrix_file(path, name: str | None = None) -> SubstitutionMatrix:
    """Read a substitution matrix from whitespace-separated text.

    Format: optional '#' comment lines, a header row of one-letter codes,
    then one row per code: the code followed by 20 scores.  Codes may come
    in any order; the matrix is stored in alphabetical order.  The symmetric
    flag is detected from the values.
    """
    text = Path(path).read_text()
    rows = [ln.split() for ln in text.splitlines()
            if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or sorted(rows[0]) != sorted(AA_ORDER):
        raise DomainError(f"{path}: header must list the 20 canonical codes")
    header = rows[0]
    if len(rows) != 21:
        raise DomainError(f"{path}: expected 20 data rows, got {len(rows) - 1}")
    scores = np.zeros((20, 20))
    seen = set()
    for row in rows[1:]:
        if len(row) != 21:
            raise DomainError(f"{path}: row {row[:1]} must hold a code and 20 scores")
        wt = row[0]
        seen.add(wt)
        for col_code, value in zip(header, row[1:]):
            try:
                scores[_aa_index(wt), _aa_index(col_code)] = float(value)
            except ValueError:
                raise DomainError(f"{path}: bad score {value!r} in row {wt}") from None
    if seen != set(AA_ORDER):
        raise DomainError(f"{path}: rows missing for {sorted(set(AA_ORDER) - seen)}")
    return SubstitutionMatrix(
        name=name or Path(path).stem,
        scores=scores,
        symmetric=bool(np.array_equal(scores, scores.T)),
    )


def save_matrix_file(m: SubstitutionMatrix, path) -> None:
    lines = [" ".join(AA_ORDER)]
    for i, wt in enumerate(AA_ORDER):
        lines.append(wt + " " + " ".join(repr(float(v)) for v in m.scores[i]))
    Path(path).write_text("\n".join(lines) + "\n")


_builtin_cache: list[SubstitutionMatrix] | None = None


def builtin_matrices() -> list[SubstitutionMatrix]:
    """The bundled BLOSUM62 matrix and the DeMaSK-style directional matrix.

    The shipped demask file is a zero placeholder (the real scores are not
    redistributable here); a warning reminds the caller to drop in values.
    Loaded once; score arrays are frozen.
    """
    global _builtin_cache
    if _builtin_cache is None:
        data = resources.files("thermofuse") / "data"
        blosum = load_matrix_file(data / "blosum62.txt", name="blosum62")
        demask = load_matrix_file(data / "demask.txt", name="demask")
        demask.symmetric = False  # directional by contract, whatever the values
        if not demask.scores.any():
            warnings.warn(
                "bundled demask matrix is a zero placeholder; edit "
                "thermofuse/data/demask.txt to supply real scores",
                stacklevel=2,
            )
        for m in (blosum, demask):
            m.scores.flags.writeable = False
        _builtin_cache = [blosum, demask]
    return list(_builtin_cache)


# ---------------------------------------------------------------------------
# mutation feature vector

FEATURE_SEGMENTS = (
    ("one_hot_wt", 20),
    ("one_hot_mut", 20),
    ("delta_molecular_weight", 1),
    ("blosum", 1),
    ("demask", 1),
    ("phi", 2),      # (degrees / 180, presence flag)
    ("psi", 2),
    ("omega", 2),
    ("window_hydropathy_mean", 1),
    ("window_weight_mean", 1),  # mean molecular weight / 100
    ("window_coverage", 1),
)


def feature_vector_length() -> int:
    return sum(n for _, n in FEATURE_SEGMENTS)


@dataclass
class MutationFeatures:
    """Flat feature vector plus the named-segment layout describing it."""

    vector: np.ndarray
    layout: tuple = FEATURE_SEGMENTS

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.shape != (sum(n for _, n in self.layout),):
            raise ShapeError("feature vector length does not match its layout")
        if not np.all(np.isfinite(self.vector)):
            raise DomainError("feature vector has non-finite entries")

    def segment(self, name: str) -> np.ndarray:
        off = 0
        for seg_name, n in self.layout:
            if seg_name == name:
                return self.vector[off:off + n]
            off += n
        raise KeyError(name)


def _angle_pair(value) -> tuple[float, float]:
    if value is None:
        return 0.0, 0.0
    return value / 180.0, 1.0


def mutation_features(s: BackboneStructure, dihedrals: list[DihedralTriple],
                      pos: int, wt: str, mut: str, window: int = 7,
                      matrices: list[SubstitutionMatrix] | None = None,
                      table: AminoAcidTable | None = None) -> MutationFeatures:
    """Assemble the domain-knowledge feature vector for one mutation.

    `pos` is 1-based.  The structure's residue at `pos` must carry `wt`;
    a mismatch signals that dataset and structure disagree.
    """
    if window < 1 or window % 2 == 0:
        raise DomainError(f"window must be odd and >= 1, got {window}")
    if not 1 <= pos <= len(s):
        raise BoundsError(f"position {pos} outside structure of length {len(s)}")
    _aa_index(wt), _aa_index(mut)
    actual = s.residues[pos - 1].aa
    if actual != wt:
        raise ConsistencyError(
            f"{s.pdb_id} position {pos}: dataset says wild-type {wt} "
            f"but structure has {actual}"
        )
    table = table or AminoAcidTable()
    if matrices is None:
        matrices = builtin_matrices()
    by_name = {m.name: m for m in matrices}
    blosum = by_name.get("blosum62", matrices[0])
    demask = by_name.get("demask", matrices[-1])

    tri = dihedrals[pos - 1]
    half = window // 2
    in_window = [s.residues[i] for i in range(pos - 1 - half, pos - 1 + half + 1)
                 if 0 <= i < len(s)]
    hydro = [table.hydropathy[r.aa] for r in in_window if r.aa != "X"]
    weights = [table.molecular_weight[r.aa] for r in in_window if r.aa != "X"]

    parts = [
        AminoAcidTable.one_hot(wt),
        AminoAcidTable.one_hot(mut),
        [table.molecular_weight[mut] - table.molecular_weight[wt]],
        [lookup_substitution(blosum, wt, mut)],
        [lookup_substitution(demask, wt, mut)],
        _angle_pair(tri.phi),
        _angle_pair(tri.psi),
        _angle_pair(tri.omega),
        [float(np.mean(hydro)) if hydro else 0.0],
        [float(np.mean(weights)) / 100.0 if weights else 0.0],
        [len(in_window) / window],
    ]
    return MutationFeatures(np.concatenate([np.atleast_1d(p) for p in parts]))
