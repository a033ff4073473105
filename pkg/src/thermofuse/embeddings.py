"""Per-residue embeddings: EMB1 file I/O, a deterministic desk-scale
embedder standing in for pretrained sequence/structure models, and the
local/pooled views the fusion models consume.

EMB1 wire format (little-endian throughout):
    magic "EMB1" | u32 L | u32 dim | u32 id_len | id UTF-8 bytes |
    L*dim float32 values, row-major.
"""

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from thermofuse.errors import (
    BoundsError,
    DomainError,
    EmbeddingDataError,
    EmbeddingFormatError,
    EmbeddingLengthError,
)
from thermofuse.features import AA_ORDER, AminoAcidTable
from thermofuse.structure_io import BackboneStructure, DihedralTriple

MAGIC = b"EMB1"

SOURCE_EXTERNAL = "external_file"
SOURCE_DESK = "desk_scale"


@dataclass
class EmbeddingSet:
    """L x dim float32 matrix of per-residue vectors for one chain."""

    protein_id: str
    vectors: np.ndarray
    provider: str = "unknown"

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2 or self.vectors.shape[0] < 1 or self.vectors.shape[1] < 1:
            raise DomainError("vectors must be a non-empty L x dim matrix")
        if not np.all(np.isfinite(self.vectors)):
            raise EmbeddingDataError(f"{self.protein_id}: non-finite embedding values")

    @property
    def length(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass
class EmbeddingProvider:
    name: str
    dim: int
    source: str

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("provider dim must be >= 1")
        if self.source not in (SOURCE_EXTERNAL, SOURCE_DESK):
            raise DomainError(f"unknown provider source {self.source!r}")


def write_embeddings(e: EmbeddingSet, path) -> None:
    from thermofuse.ioutil import atomic_write_bytes

    ident = e.protein_id.encode("utf-8")
    payload = e.vectors.astype("<f4", copy=False).tobytes(order="C")
    blob = MAGIC + struct.pack("<III", e.length, e.dim, len(ident)) + ident + payload
    atomic_write_bytes(path, blob)


def load_embeddings(path) -> EmbeddingSet:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < 16:
        raise EmbeddingLengthError(f"{path}: truncated header")
    L, dim, id_len = struct.unpack_from("<III", blob, 4)
    if len(blob) < 16 + id_len:
        raise EmbeddingLengthError(f"{path}: truncated protein id")
    try:
        ident = blob[16:16 + id_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EmbeddingFormatError(f"{path}: protein id is not UTF-8") from exc
    payload = blob[16 + id_len:]
    expected = L * dim * 4
    if len(payload) != expected:
        raise EmbeddingLengthError(
            f"{path}: payload holds {len(payload) // 4} floats, header declares {L * dim}"
        )
    if L < 1 or dim < 1:
        raise EmbeddingLengthError(f"{path}: header declares empty matrix {L}x{dim}")
    vectors = np.frombuffer(payload, dtype="<f4").reshape(L, dim).copy()
    if not np.all(np.isfinite(vectors)):
        raise EmbeddingDataError(f"{path}: payload contains non-finite values")
    return EmbeddingSet(protein_id=ident, vectors=vectors, provider=SOURCE_EXTERNAL)


def _residue_features(aa: str, tri: DihedralTriple, relpos: float,
                      include_position: bool) -> np.ndarray:
    parts = [AminoAcidTable.one_hot(aa)]
    for angle in (tri.phi, tri.psi, tri.omega):
        if angle is None:
            parts.append([0.0, 0.0, 0.0])
        else:
            rad = math.radians(angle)
            parts.append([math.sin(rad), math.cos(rad), 1.0])
    if include_position:
        parts.append([relpos])
    return np.concatenate([np.atleast_1d(p) for p in parts])


def desk_scale_embed(s: BackboneStructure, dihedrals: list[DihedralTriple],
                     table: AminoAcidTable, dim: int, seed: int,
                     include_position: bool = True) -> EmbeddingSet:
    """Deterministic stand-in embeddings from sequence + backbone geometry.

    Each residue's [one-hot, sin/cos torsions with presence flags, relative
    position] raw vector goes through one seeded random projection shared
    across residues.  Identical structure, dihedrals and seed give
    bit-identical output.  `include_position=False` drops the relative
    position feature, making the embedding permutation-equivariant.
    """
    if dim < 8:
        raise DomainError(f"desk-scale embeddings need dim >= 8, got {dim}")
    if len(dihedrals) != len(s):
        raise DomainError("dihedral list length does not match the structure")
    raw_dim = len(AA_ORDER) + 9 + (1 if include_position else 0)
    rng = np.random.Generator(np.random.PCG64(seed))
    proj = rng.standard_normal((dim, raw_dim)) / math.sqrt(raw_dim)
    L = len(s)
    rows = np.empty((L, dim), dtype=np.float64)
    for i, (res, tri) in enumerate(zip(s.residues, dihedrals)):
        relpos = (i + 1) / L
        rows[i] = proj @ _residue_features(res.aa, tri, relpos, include_position)
    return EmbeddingSet(protein_id=s.pdb_id, vectors=rows.astype(np.float32),
                        provider=SOURCE_DESK)


def pool_embeddings(e: EmbeddingSet, pos: int, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Local window view and whole-chain mean for the residue at 1-based `pos`.

    local = the `window` rows centred on pos, flattened (rows falling off
    either end are zero), followed by one presence flag per window slot.
    pooled = column mean over all rows.  Both come back as float64.
    """
    if window < 1 or window % 2 == 0:
        raise DomainError(f"window must be odd and >= 1, got {window}")
    if not 1 <= pos <= e.length:
        raise BoundsError(f"position {pos} outside embedding set of length {e.length}")
    vec = e.vectors.astype(np.float64)
    half = window // 2
    rows = np.zeros((window, e.dim))
    flags = np.zeros(window)
    for k, i in enumerate(range(pos - 1 - half, pos - 1 + half + 1)):
        if 0 <= i < e.length:
            rows[k] = vec[i]
            flags[k] = 1.0
    local = np.concatenate([rows.reshape(-1), flags])
    pooled = vec.mean(axis=0)
    return local, pooled


class EmbeddingStore:
    """Maps (protein_id, family) to an EmbeddingSet.

    Families are 'struct' (structural model stand-in) and 'seq' (sequence
    model stand-in).  Sets come either from EMB1 files named
    `<protein_id>.<family>.emb1` in a directory, or from the desk-scale
    embedder run over a structure corpus.
    """

    FAMILIES = ("struct", "seq")

    def __init__(self, sets: dict[tuple[str, str], EmbeddingSet]):
        self._sets = sets

    @classmethod
    def from_dir(cls, path) -> "EmbeddingStore":
        sets = {}
        for file in sorted(Path(path).glob("*.emb1")):
            stem = file.name[:-len(".emb1")]
            pid, _, family = stem.rpartition(".")
            if family not in cls.FAMILIES or not pid:
                raise DomainError(
                    f"{file}: embedding files must be named <id>.struct.emb1 or <id>.seq.emb1"
                )
            sets[(pid, family)] = load_embeddings(file)
        return cls(sets)

    @classmethod
    def desk_scale(cls, structures: dict[str, BackboneStructure],
                   dihedrals: dict[str, list[DihedralTriple]],
                   d_struct: int = 32, d_seq: int = 48, seed: int = 0) -> "EmbeddingStore":
        table = AminoAcidTable()
        sets = {}
        for pid, s in structures.items():
            sets[(pid, "struct")] = desk_scale_embed(s, dihedrals[pid], table, d_struct, seed * 2 + 1)
            sets[(pid, "seq")] = desk_scale_embed(s, dihedrals[pid], table, d_seq, seed * 2 + 2)
        return cls(sets)

    def get(self, protein_id: str, family: str) -> EmbeddingSet:
        try:
            return self._sets[(protein_id, family)]
        except KeyError:
            raise KeyError(f"no {family!r} embeddings for protein {protein_id!r}") from None

    def has(self, protein_id: str, family: str) -> bool:
        return (protein_id, family) in self._sets

    def dim(self, family: str) -> int:
        dims = {e.dim for (pid, fam), e in self._sets.items() if fam == family}
        if len(dims) != 1:
            raise DomainError(f"embedding family {family!r} has mixed dims {sorted(dims)}")
        return dims.pop()

    def protein_ids(self) -> list[str]:
        return sorted({pid for pid, _ in self._sets})
