# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the training hot loop.

Mirrors thermofuse.kernels.py_backend exactly: same signatures, same
conventions (relu derivative 0 at 0, first-argmax max pool, shifted
softmax).  Plain C loops, no BLAS, so results are deterministic and
independent of thread count.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt, pow

cnp.import_array()

BACKEND = "c"

ctypedef cnp.float64_t f64


def dense_fwd(cnp.ndarray[f64, ndim=2] W, cnp.ndarray[f64, ndim=1] b,
              cnp.ndarray[f64, ndim=1] x, bint relu):
    cdef Py_ssize_t out_dim = W.shape[0], in_dim = W.shape[1]
    cdef cnp.ndarray[f64, ndim=1] pre = np.empty(out_dim, dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=1] y = np.empty(out_dim, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(out_dim):
        acc = b[i]
        for j in range(in_dim):
            acc += W[i, j] * x[j]
        pre[i] = acc
        y[i] = acc if (not relu or acc > 0.0) else 0.0
    return y, pre


def dense_bwd(cnp.ndarray[f64, ndim=2] W, cnp.ndarray[f64, ndim=1] x,
              cnp.ndarray[f64, ndim=1] pre, cnp.ndarray[f64, ndim=1] dy,
              bint relu):
    cdef Py_ssize_t out_dim = W.shape[0], in_dim = W.shape[1]
    cdef cnp.ndarray[f64, ndim=2] dW = np.empty((out_dim, in_dim), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=1] db = np.empty(out_dim, dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=1] dx = np.zeros(in_dim, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double dpre
    for i in range(out_dim):
        dpre = dy[i] if (not relu or pre[i] > 0.0) else 0.0
        db[i] = dpre
        for j in range(in_dim):
            dW[i, j] = dpre * x[j]
            dx[j] += W[i, j] * dpre
    return dW, db, dx


def project_cols(cnp.ndarray[f64, ndim=2] W, cnp.ndarray[f64, ndim=1] b,
                 cnp.ndarray[f64, ndim=2] X):
    cdef Py_ssize_t out_dim = W.shape[0], in_dim = W.shape[1], L = X.shape[1]
    cdef cnp.ndarray[f64, ndim=2] Y = np.empty((out_dim, L), dtype=np.float64)
    cdef Py_ssize_t i, j, l
    cdef double acc
    for i in range(out_dim):
        for l in range(L):
            acc = b[i]
            for j in range(in_dim):
                acc += W[i, j] * X[j, l]
            Y[i, l] = acc
    return Y


def project_cols_bwd(cnp.ndarray[f64, ndim=2] W, cnp.ndarray[f64, ndim=2] X,
                     cnp.ndarray[f64, ndim=2] dY):
    cdef Py_ssize_t out_dim = W.shape[0], in_dim = W.shape[1], L = X.shape[1]
    cdef cnp.ndarray[f64, ndim=2] dW = np.zeros((out_dim, in_dim), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=1] db = np.zeros(out_dim, dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=2] dX = np.zeros((in_dim, L), dtype=np.float64)
    cdef Py_ssize_t i, j, l
    cdef double g
    for i in range(out_dim):
        for l in range(L):
            g = dY[i, l]
            db[i] += g
            for j in range(in_dim):
                dW[i, j] += g * X[j, l]
                dX[j, l] += W[i, j] * g
    return dW, db, dX


def la_fwd(cnp.ndarray[f64, ndim=2] Wv, cnp.ndarray[f64, ndim=1] bv,
           cnp.ndarray[f64, ndim=2] Wa, cnp.ndarray[f64, ndim=1] ba,
           cnp.ndarray[f64, ndim=2] E):
    cdef Py_ssize_t d_a = Wv.shape[0], d_f = Wv.shape[1], L = E.shape[1]
    cdef cnp.ndarray[f64, ndim=2] V = np.empty((d_a, L), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=2] A = np.empty((d_a, L), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=2] alpha = np.empty((d_a, L), dtype=np.float64)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] amax = np.empty(d_a, dtype=np.intp)
    cdef cnp.ndarray[f64, ndim=1] out = np.empty(2 * d_a, dtype=np.float64)
    cdef Py_ssize_t c, j, l, best
    cdef double accv, acca, hi, s, ws
    for c in range(d_a):
        for l in range(L):
            accv = bv[c]
            acca = ba[c]
            for j in range(d_f):
                accv += Wv[c, j] * E[j, l]
                acca += Wa[c, j] * E[j, l]
            V[c, l] = accv
            A[c, l] = acca
        hi = A[c, 0]
        for l in range(1, L):
            if A[c, l] > hi:
                hi = A[c, l]
        s = 0.0
        for l in range(L):
            alpha[c, l] = exp(A[c, l] - hi)
            s += alpha[c, l]
        ws = 0.0
        best = 0
        for l in range(L):
            alpha[c, l] /= s
            ws += alpha[c, l] * V[c, l]
            if V[c, l] > V[c, best]:
                best = l
        amax[c] = best
        out[c] = ws
        out[d_a + c] = V[c, best]
    return out, V, alpha, amax


def la_bwd(cnp.ndarray[f64, ndim=2] Wv, cnp.ndarray[f64, ndim=2] Wa,
           cnp.ndarray[f64, ndim=2] E, cnp.ndarray[f64, ndim=2] V,
           cnp.ndarray[f64, ndim=2] alpha, cnp.ndarray[cnp.intp_t, ndim=1] amax,
           cnp.ndarray[f64, ndim=1] dout):
    cdef Py_ssize_t d_a = V.shape[0], L = V.shape[1], d_f = Wv.shape[1]
    cdef cnp.ndarray[f64, ndim=2] dV = np.empty((d_a, L), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=2] dA = np.empty((d_a, L), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=2] dWv = np.zeros((d_a, d_f), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=1] dbv = np.zeros(d_a, dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=2] dWa = np.zeros((d_a, d_f), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=1] dba = np.zeros(d_a, dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=2] dE = np.zeros((d_f, L), dtype=np.float64)
    cdef Py_ssize_t c, j, l
    cdef double dws, dot, g, gv, ga
    for c in range(d_a):
        dws = dout[c]
        dot = 0.0
        for l in range(L):
            dV[c, l] = alpha[c, l] * dws
            dot += dws * V[c, l] * alpha[c, l]
        dV[c, amax[c]] += dout[d_a + c]
        for l in range(L):
            dA[c, l] = alpha[c, l] * (dws * V[c, l] - dot)
    for c in range(d_a):
        for l in range(L):
            gv = dV[c, l]
            ga = dA[c, l]
            dbv[c] += gv
            dba[c] += ga
            for j in range(d_f):
                dWv[c, j] += gv * E[j, l]
                dWa[c, j] += ga * E[j, l]
                dE[j, l] += Wv[c, j] * gv + Wa[c, j] * ga
    return dWv, dbv, dWa, dba, dE


def adam_update(cnp.ndarray[f64, ndim=1] p, cnp.ndarray[f64, ndim=1] g,
                cnp.ndarray[f64, ndim=1] m, cnp.ndarray[f64, ndim=1] v,
                long step, double lr, double beta1, double beta2,
                double eps, double weight_decay):
    cdef Py_ssize_t n = p.shape[0]
    cdef double bc1 = 1.0 - pow(beta1, step)
    cdef double bc2 = 1.0 - pow(beta2, step)
    cdef Py_ssize_t i
    for i in range(n):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
        if weight_decay != 0.0:
            p[i] -= lr * weight_decay * p[i]
        p[i] -= lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps)
