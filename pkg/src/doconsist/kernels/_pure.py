"""Numpy implementation of the hot kernels.

Functional contract shared with the compiled backend ``_fast``:

  pair_mlp_forward(Z, W1, b1, w2, b2) -> (S, U)
      Z (P, 2d) pair features; hidden U = tanh(Z @ W1.T + b1) of shape
      (P, h); scores S = sigmoid(U @ w2 + b2) of shape (P,).

  pair_mlp_backward(Z, U, S, dS, W1, w2) -> (dW1, db1, dw2, db2, dZ)
      Reverse-mode gradients of sum(dS * S) treating dS as the upstream
      cotangent of the scores.

  decode_forward(A, E) -> X
      Batched unit-lower-triangular solve X = (I - A)^{-1} E by forward
      substitution; A (B, N, N) strictly lower, E (B, N, d).

  decode_backward(A, X, dX) -> (dA, dE)
      Adjoint of decode_forward: dE solves the transposed system
      (I - A)^T dE = dX by back substitution, and dA = dE @ X^T (dense;
      callers mask structural zeros).

All arrays are float64 and C-contiguous.
"""

import numpy as np


def pair_mlp_forward(Z, W1, b1, w2, b2):
    U = np.tanh(Z @ W1.T + b1)
    S = 1.0 / (1.0 + np.exp(-(U @ w2 + b2[0])))
    return S, U


def pair_mlp_backward(Z, U, S, dS, W1, w2):
    a = dS * S * (1.0 - S)
    dw2 = U.T @ a
    db2 = np.array([a.sum()])
    dpre = (a[:, None] * w2[None, :]) * (1.0 - U * U)
    dW1 = dpre.T @ Z
    db1 = dpre.sum(axis=0)
    dZ = dpre @ W1
    return dW1, db1, dw2, db2, dZ


def decode_forward(A, E):
    B, N, d = E.shape
    X = np.empty_like(E)
    for n in range(N):
        X[:, n, :] = E[:, n, :]
        if n > 0:
            # row n only reads rows < n: A is strictly lower triangular
            X[:, n, :] += np.einsum("bm,bmd->bd", A[:, n, :n], X[:, :n, :])
    return X


def decode_backward(A, X, dX):
    B, N, d = X.shape
    dE = np.empty_like(dX)
    for n in range(N - 1, -1, -1):
        dE[:, n, :] = dX[:, n, :]
        if n < N - 1:
            dE[:, n, :] += np.einsum("bm,bmd->bd", A[:, n + 1 :, n], dE[:, n + 1 :, :])
    dA = np.einsum("bnd,bmd->bnm", dE, X)
    return dA, dE
