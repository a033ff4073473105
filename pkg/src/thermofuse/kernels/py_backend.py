"""Pure-numpy implementation of the training-loop kernels.

The compiled backend (`thermofuse.kernels._ckernels`) implements the same
function surface with plain C loops; both are interchangeable.  All arrays
are C-contiguous float64.  Conventions shared by both backends:

* relu derivative at exactly 0 is 0,
* the max-pool subgradient routes through the first maximal position,
* softmax is computed with a per-channel max shift.
"""

import numpy as np

BACKEND = "python"


def dense_fwd(W, b, x, relu):
    """Return (y, pre) with pre = W @ x + b and y = relu(pre) if requested."""
    pre = W @ x + b
    y = np.maximum(pre, 0.0) if relu else pre
    return y, pre


def dense_bwd(W, x, pre, dy, relu):
    """Gradients of a dense layer. Returns (dW, db, dx)."""
    dpre = np.where(pre > 0.0, dy, 0.0) if relu else dy.copy()
    dW = np.outer(dpre, x)
    dx = W.T @ dpre
    return dW, dpre, dx


def project_cols(W, b, X):
    """Column-wise linear map: Y[:, l] = W @ X[:, l] + b."""
    return W @ X + b[:, None]


def project_cols_bwd(W, X, dY):
    """Gradients of project_cols. Returns (dW, db, dX)."""
    dW = dY @ X.T
    db = dY.sum(axis=1)
    dX = W.T @ dY
    return dW, db, dX


def la_fwd(Wv, bv, Wa, ba, E):
    """Light attention pooling over the columns of E (d_f x L).

    Returns (out, V, alpha, amax):
      V[c, l]   value map output,
      alpha     per-channel softmax over positions of the attention logits,
      amax[c]   first position attaining max_l V[c, l],
      out       concat(sum_l alpha[c, l] V[c, l], V[c, amax[c]]).
    """
    V = Wv @ E + bv[:, None]
    A = Wa @ E + ba[:, None]
    expA = np.exp(A - A.max(axis=1, keepdims=True))
    alpha = expA / expA.sum(axis=1, keepdims=True)
    ws = (alpha * V).sum(axis=1)
    amax = V.argmax(axis=1)
    mx = V[np.arange(V.shape[0]), amax]
    return np.concatenate([ws, mx]), V, alpha, amax


def la_bwd(Wv, Wa, E, V, alpha, amax, dout):
    """Gradients of la_fwd. Returns (dWv, dbv, dWa, dba, dE)."""
    d_a = V.shape[0]
    dws = dout[:d_a]
    dmx = dout[d_a:]
    dV = alpha * dws[:, None]
    dV[np.arange(d_a), amax] += dmx
    dalpha = dws[:, None] * V
    dA = alpha * (dalpha - (dalpha * alpha).sum(axis=1, keepdims=True))
    dWv = dV @ E.T
    dbv = dV.sum(axis=1)
    dWa = dA @ E.T
    dba = dA.sum(axis=1)
    dE = Wv.T @ dV + Wa.T @ dA
    return dWv, dbv, dWa, dba, dE


def adam_update(p, g, m, v, step, lr, beta1, beta2, eps, weight_decay):
    """One decoupled-weight-decay Adam update, in place on flat arrays.

    `step` is the 1-based step count after incrementing.
    """
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    bc1 = 1.0 - beta1**step
    bc2 = 1.0 - beta2**step
    if weight_decay != 0.0:
        p -= lr * weight_decay * p
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
