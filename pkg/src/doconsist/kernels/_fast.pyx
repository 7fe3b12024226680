# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot kernels; contract documented in _pure."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()


def pair_mlp_forward(double[:, ::1] Z, double[:, ::1] W1, double[::1] b1,
                     double[::1] w2, double[::1] b2):
    cdef Py_ssize_t P = Z.shape[0]
    cdef Py_ssize_t m = Z.shape[1]
    cdef Py_ssize_t h = W1.shape[0]
    cdef cnp.ndarray S_arr = np.empty(P, dtype=np.float64)
    cdef cnp.ndarray U_arr = np.empty((P, h), dtype=np.float64)
    cdef double[::1] S = S_arr
    cdef double[:, ::1] U = U_arr
    cdef Py_ssize_t p, k, j
    cdef double acc, out
    for p in range(P):
        out = b2[0]
        for k in range(h):
            acc = b1[k]
            for j in range(m):
                acc += W1[k, j] * Z[p, j]
            acc = tanh(acc)
            U[p, k] = acc
            out += w2[k] * acc
        S[p] = 1.0 / (1.0 + exp(-out))
    return S_arr, U_arr


def pair_mlp_backward(double[:, ::1] Z, double[:, ::1] U, double[::1] S,
                      double[::1] dS, double[:, ::1] W1, double[::1] w2):
    cdef Py_ssize_t P = Z.shape[0]
    cdef Py_ssize_t m = Z.shape[1]
    cdef Py_ssize_t h = W1.shape[0]
    cdef cnp.ndarray dW1_arr = np.zeros((h, m), dtype=np.float64)
    cdef cnp.ndarray db1_arr = np.zeros(h, dtype=np.float64)
    cdef cnp.ndarray dw2_arr = np.zeros(h, dtype=np.float64)
    cdef cnp.ndarray db2_arr = np.zeros(1, dtype=np.float64)
    cdef cnp.ndarray dZ_arr = np.zeros((P, m), dtype=np.float64)
    cdef double[:, ::1] dW1 = dW1_arr
    cdef double[::1] db1 = db1_arr
    cdef double[::1] dw2 = dw2_arr
    cdef double[::1] db2 = db2_arr
    cdef double[:, ::1] dZ = dZ_arr
    cdef Py_ssize_t p, k, j
    cdef double a, dpre
    for p in range(P):
        a = dS[p] * S[p] * (1.0 - S[p])
        db2[0] += a
        for k in range(h):
            dw2[k] += U[p, k] * a
            dpre = a * w2[k] * (1.0 - U[p, k] * U[p, k])
            db1[k] += dpre
            for j in range(m):
                dW1[k, j] += dpre * Z[p, j]
                dZ[p, j] += dpre * W1[k, j]
    return dW1_arr, db1_arr, dw2_arr, db2_arr, dZ_arr


def decode_forward(double[:, :, ::1] A, double[:, :, ::1] E):
    cdef Py_ssize_t B = E.shape[0]
    cdef Py_ssize_t N = E.shape[1]
    cdef Py_ssize_t d = E.shape[2]
    cdef cnp.ndarray X_arr = np.empty((B, N, d), dtype=np.float64)
    cdef double[:, :, ::1] X = X_arr
    cdef Py_ssize_t b, n, mm, j
    cdef double w
    for b in range(B):
        for n in range(N):
            for j in range(d):
                X[b, n, j] = E[b, n, j]
            for mm in range(n):
                w = A[b, n, mm]
                if w != 0.0:
                    for j in range(d):
                        X[b, n, j] += w * X[b, mm, j]
    return X_arr


def decode_backward(double[:, :, ::1] A, double[:, :, ::1] X,
                    double[:, :, ::1] dX):
    cdef Py_ssize_t B = X.shape[0]
    cdef Py_ssize_t N = X.shape[1]
    cdef Py_ssize_t d = X.shape[2]
    cdef cnp.ndarray dA_arr = np.zeros((B, N, N), dtype=np.float64)
    cdef cnp.ndarray dE_arr = np.empty((B, N, d), dtype=np.float64)
    cdef double[:, :, ::1] dA = dA_arr
    cdef double[:, :, ::1] dE = dE_arr
    cdef Py_ssize_t b, n, mm, j
    cdef double w, acc
    for b in range(B):
        for n in range(N - 1, -1, -1):
            for j in range(d):
                dE[b, n, j] = dX[b, n, j]
            for mm in range(n + 1, N):
                w = A[b, mm, n]
                if w != 0.0:
                    for j in range(d):
                        dE[b, n, j] += w * dE[b, mm, j]
        for n in range(N):
            for mm in range(N):
                acc = 0.0
                for j in range(d):
                    acc += dE[b, n, j] * X[b, mm, j]
                dA[b, n, mm] = acc
    return dA_arr, dE_arr
