"""The four fusion-model variants over structural and sequence embeddings.

All variants share one skeleton: project per-residue embeddings for a
window around the mutation site, pool them with light attention, append the
mutant identity (plus variant-specific extras) and run a small MLP down to
the predicted stability change in kcal/mol.

  variant 1: structural embeddings only (baseline)
  variant 2: attention output concatenated with the pooled sequence embedding
  variant 3: element-wise product of projected structural and sequence
             embeddings, attended afterwards (the multiplicative transfusion)
  variant 4: variant-1 attention output concatenated with the
             domain-knowledge feature vector and local/pooled sequence data

Forward passes are pure and thread-safe over frozen parameters; gradients
are computed analytically from a cached forward pass.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from thermofuse import kernels
from thermofuse.embeddings import EmbeddingSet, pool_embeddings
from thermofuse.errors import BoundsError, DomainError, ShapeError, StateError
from thermofuse.features import AminoAcidTable, MutationFeatures, feature_vector_length
from thermofuse.nncore import (
    DenseLayer,
    LightAttention,
    init_dense,
    init_light_attention,
    light_attention_backward,
    light_attention_forward_cached,
    mlp_backward,
    mlp_forward_cached,
)

MUT_ONE_HOT_DIM = 20


class FusionVariant(Enum):
    M1_BASELINE = 1
    M2_CONCAT_AFTER_ATTENTION = 2
    M3_MULTIPLY_TRANSFUSION = 3
    M4_DOMAIN_CONCAT = 4

    @classmethod
    def from_number(cls, n: int) -> "FusionVariant":
        try:
            return cls(n)
        except ValueError:
            raise DomainError(f"model variant must be 1..4, got {n}") from None


def fuse_multiply(a, b) -> np.ndarray:
    """Element-wise product capturing feature-by-feature interactions."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"fuse_multiply length mismatch: {a.shape} vs {b.shape}")
    return a * b


def fuse_concat(a, b) -> np.ndarray:
    """Plain concatenation, widening the feature space."""
    return np.concatenate([np.asarray(a, dtype=np.float64).reshape(-1),
                           np.asarray(b, dtype=np.float64).reshape(-1)])


@dataclass
class FusionModel:
    """Parameters of one variant plus the hyperparameters that shaped them."""

    variant: FusionVariant
    proj_a: DenseLayer
    proj_b: Optional[DenseLayer]
    attention: LightAttention
    head: list[DenseLayer]
    d_f: int
    d_seq: int
    window: int
    seed: int
    feat_dim: int = 0
    hidden: tuple = ()

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise DomainError(f"window must be odd and >= 1, got {self.window}")
        if self.proj_a.out_dim != self.d_f:
            raise ShapeError("proj_a output dimension must equal d_f")
        if self.variant is FusionVariant.M3_MULTIPLY_TRANSFUSION:
            if self.proj_b is None or self.proj_b.out_dim != self.d_f:
                raise ShapeError("variant 3 needs proj_b with output dimension d_f")
            if self.proj_b.in_dim != self.d_seq:
                raise ShapeError("proj_b input dimension must equal d_seq")
        if self.attention.d_f != self.d_f:
            raise ShapeError("attention input dimension must equal d_f")
        expected = head_input_dim(self.variant, d_a=self.d_a,
                                  d_seq=self.d_seq, window=self.window,
                                  feat_dim=self.feat_dim)
        if self.head[0].in_dim != expected:
            raise ShapeError(
                f"head expects input {self.head[0].in_dim}, variant needs {expected}"
            )

    @property
    def d_a(self) -> int:
        return self.attention.d_a

    @property
    def d_struct(self) -> int:
        return self.proj_a.in_dim

    def params(self) -> dict[str, np.ndarray]:
        """Named views of every trainable array (mutated in place by Adam)."""
        out = {"proj_a.W": self.proj_a.weights, "proj_a.b": self.proj_a.bias}
        if self.proj_b is not None:
            out["proj_b.W"] = self.proj_b.weights
            out["proj_b.b"] = self.proj_b.bias
        out["attention.value.W"] = self.attention.value_map.weights
        out["attention.value.b"] = self.attention.value_map.bias
        out["attention.attn.W"] = self.attention.attn_map.weights
        out["attention.attn.b"] = self.attention.attn_map.bias
        for i, layer in enumerate(self.head):
            out[f"head.{i}.W"] = layer.weights
            out[f"head.{i}.b"] = layer.bias
        return out

    def param_count(self) -> int:
        return sum(p.size for p in self.params().values())


def head_input_dim(variant: FusionVariant, d_a: int, d_seq: int, window: int,
                   feat_dim: int) -> int:
    """Width of the MLP input for a variant; see expected_param_count."""
    base = 2 * d_a + MUT_ONE_HOT_DIM
    if variant is FusionVariant.M2_CONCAT_AFTER_ATTENTION:
        return base + d_seq
    if variant is FusionVariant.M4_DOMAIN_CONCAT:
        local_dim = window * d_seq + window
        return base + feat_dim + local_dim + d_seq
    return base


def expected_param_count(variant: FusionVariant, d_struct: int, d_seq: int,
                         d_f: int, d_a: int, window: int,
                         hidden: tuple, feat_dim: int = 0) -> int:
    """Closed-form trainable-parameter count for a variant."""
    count = d_f * d_struct + d_f                      # proj_a
    if variant is FusionVariant.M3_MULTIPLY_TRANSFUSION:
        count += d_f * d_seq + d_f                    # proj_b
    count += 2 * (d_a * d_f + d_a)                    # attention maps
    dims = [head_input_dim(variant, d_a, d_seq, window, feat_dim), *hidden, 1]
    count += sum(o * i + o for i, o in zip(dims, dims[1:]))
    return count


def build_model(variant: FusionVariant | int, d_struct: int, d_seq: int,
                d_f: int = 64, d_a: int = 64, window: int = 7,
                hidden: tuple = (64, 64), seed: int = 0,
                feat_dim: int | None = None) -> FusionModel:
    """Initialize a variant with seeded Glorot-uniform parameters.

    Layers are drawn in a fixed order (proj_a, proj_b, attention, head) so a
    given seed always yields the same model.
    """
    if isinstance(variant, int):
        variant = FusionVariant.from_number(variant)
    rng = np.random.Generator(np.random.PCG64(seed))
    if variant is FusionVariant.M4_DOMAIN_CONCAT:
        feat_dim = feature_vector_length() if feat_dim is None else feat_dim
    else:
        feat_dim = 0
    proj_a = init_dense(rng, d_f, d_struct)
    proj_b = (init_dense(rng, d_f, d_seq)
              if variant is FusionVariant.M3_MULTIPLY_TRANSFUSION else None)
    attention = init_light_attention(rng, d_f, d_a)
    dims = [head_input_dim(variant, d_a, d_seq, window, feat_dim), *hidden, 1]
    head = [init_dense(rng, o, i, "relu" if k < len(dims) - 2 else "identity")
            for k, (i, o) in enumerate(zip(dims, dims[1:]))]
    return FusionModel(variant=variant, proj_a=proj_a, proj_b=proj_b,
                       attention=attention, head=head, d_f=d_f, d_seq=d_seq,
                       window=window, seed=seed, feat_dim=feat_dim,
                       hidden=tuple(hidden))


@dataclass
class VariantCache:
    """Intermediates of one forward pass, consumed once by backward_variant."""

    X_struct: np.ndarray
    X_seq: Optional[np.ndarray]
    proj_out: np.ndarray
    proj_a_out: Optional[np.ndarray]
    proj_b_out: Optional[np.ndarray]
    attn_cache: tuple
    z: np.ndarray
    mlp_cache: list


def _window_columns(e: EmbeddingSet, pos: int, window: int) -> np.ndarray:
    half = window // 2
    lo = max(1, pos - half)
    hi = min(e.length, pos + half)
    return np.ascontiguousarray(e.vectors[lo - 1:hi].T, dtype=np.float64)


def forward_variant(model: FusionModel, struct_emb: EmbeddingSet,
                    seq_emb: Optional[EmbeddingSet],
                    feats: Optional[MutationFeatures], pos: int,
                    mut_aa: str | None = None) -> float:
    """Predicted stability change (kcal/mol) for the mutation at `pos`.

    The mutant identity comes from `mut_aa`, or failing that from the
    feature vector's mutant one-hot segment.
    """
    y, _ = forward_variant_cached(model, struct_emb, seq_emb, feats, pos, mut_aa)
    return y


def forward_variant_cached(model: FusionModel, struct_emb: EmbeddingSet,
                           seq_emb: Optional[EmbeddingSet],
                           feats: Optional[MutationFeatures], pos: int,
                           mut_aa: str | None = None,
                           dropout_rate: float = 0.0,
                           rng: np.random.Generator | None = None):
    variant = model.variant
    if not 1 <= pos <= struct_emb.length:
        raise BoundsError(f"position {pos} outside protein of length {struct_emb.length}")
    if struct_emb.dim != model.d_struct:
        raise ShapeError(
            f"structural embedding dim {struct_emb.dim} != model d_struct {model.d_struct}"
        )
    needs_seq = variant is not FusionVariant.M1_BASELINE
    if needs_seq:
        if seq_emb is None:
            raise ShapeError(f"variant {variant.value} needs sequence embeddings")
        if seq_emb.length != struct_emb.length:
            raise ShapeError("structural and sequence embedding lengths differ")

    if mut_aa is not None:
        mut_one_hot = AminoAcidTable.one_hot(mut_aa)
        if not mut_one_hot.any():
            raise DomainError(f"mutant code {mut_aa!r} is not canonical")
    elif feats is not None:
        mut_one_hot = feats.segment("one_hot_mut").copy()
    else:
        raise DomainError("mutant identity needed: pass mut_aa or a feature vector")

    X_struct = _window_columns(struct_emb, pos, model.window)
    X_seq = proj_a_out = proj_b_out = None
    if variant is FusionVariant.M3_MULTIPLY_TRANSFUSION:
        if seq_emb.dim != model.d_seq:
            raise ShapeError(
                f"sequence embedding dim {seq_emb.dim} != model d_seq {model.d_seq}"
            )
        X_seq = _window_columns(seq_emb, pos, model.window)
        proj_a_out = kernels.project_cols(model.proj_a.weights, model.proj_a.bias, X_struct)
        proj_b_out = kernels.project_cols(model.proj_b.weights, model.proj_b.bias, X_seq)
        H = proj_a_out * proj_b_out
    else:
        H = kernels.project_cols(model.proj_a.weights, model.proj_a.bias, X_struct)

    att_out, attn_cache = light_attention_forward_cached(model.attention, H)

    pieces = [att_out]
    if variant is FusionVariant.M2_CONCAT_AFTER_ATTENTION:
        if seq_emb.dim != model.d_seq:
            raise ShapeError("sequence embedding dim does not match the model")
        _, pooled = pool_embeddings(seq_emb, pos, model.window)
        pieces.append(pooled)
    elif variant is FusionVariant.M4_DOMAIN_CONCAT:
        if feats is None:
            raise DomainError("variant 4 needs the mutation feature vector")
        if feats.vector.shape[0] != model.feat_dim:
            raise ShapeError(
                f"feature vector length {feats.vector.shape[0]} != model feat_dim {model.feat_dim}"
            )
        if seq_emb.dim != model.d_seq:
            raise ShapeError("sequence embedding dim does not match the model")
        local, pooled = pool_embeddings(seq_emb, pos, model.window)
        pieces.extend([feats.vector, local, pooled])
    pieces.append(mut_one_hot)
    z = np.concatenate(pieces)

    y, mlp_cache = mlp_forward_cached(model.head, z, dropout_rate, rng)
    cache = VariantCache(X_struct=X_struct, X_seq=X_seq, proj_out=H,
                         proj_a_out=proj_a_out, proj_b_out=proj_b_out,
                         attn_cache=attn_cache, z=z, mlp_cache=mlp_cache)
    return y, cache


def backward_variant(model: FusionModel, cache: VariantCache,
                     dy: float = 1.0) -> dict[str, np.ndarray]:
    """Gradient of dy * prediction w.r.t. every parameter of the variant."""
    if cache is None or not isinstance(cache, VariantCache):
        raise StateError("backward_variant needs the cache of a prior forward pass")
    head_grads, dz = mlp_backward(model.head, cache.mlp_cache, dy)
    datt = dz[:2 * model.d_a]
    (dWv, dbv), (dWa, dba), dH = light_attention_backward(
        model.attention, cache.attn_cache, datt
    )
    grads = {
        "attention.value.W": dWv, "attention.value.b": dbv,
        "attention.attn.W": dWa, "attention.attn.b": dba,
    }
    for i, (dW, db) in enumerate(head_grads):
        grads[f"head.{i}.W"] = dW
        grads[f"head.{i}.b"] = db
    if model.variant is FusionVariant.M3_MULTIPLY_TRANSFUSION:
        dPa = dH * cache.proj_b_out
        dPb = dH * cache.proj_a_out
        dWa_, dba_, _ = kernels.project_cols_bwd(model.proj_a.weights, cache.X_struct, dPa)
        dWb_, dbb_, _ = kernels.project_cols_bwd(model.proj_b.weights, cache.X_seq, dPb)
        grads.update({"proj_a.W": dWa_, "proj_a.b": dba_,
                      "proj_b.W": dWb_, "proj_b.b": dbb_})
    else:
        dW, db, _ = kernels.project_cols_bwd(model.proj_a.weights, cache.X_struct, dH)
        grads.update({"proj_a.W": dW, "proj_a.b": db})
    return grads


def zero_grads(model: FusionModel) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(p) for name, p in model.params().items()}


def accumulate(total: dict[str, np.ndarray], part: dict[str, np.ndarray]) -> None:
    for name, g in part.items():
        total[name] += g


def representation(model: FusionModel, struct_emb: EmbeddingSet,
                   seq_emb: Optional[EmbeddingSet],
                   feats: Optional[MutationFeatures], pos: int,
                   mut_aa: str | None = None) -> np.ndarray:
    """The fused vector fed to the MLP head (the model's latent view)."""
    _, cache = forward_variant_cached(model, struct_emb, seq_emb, feats, pos, mut_aa)
    return cache.z.copy()
