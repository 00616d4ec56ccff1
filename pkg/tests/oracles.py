"""Slow, independent reference computations shared by the tests."""

import numpy as np


def solve_longdouble(A, B):
    """Gaussian elimination with partial pivoting in extended precision."""
    A = np.array(A, dtype=np.longdouble)
    B = np.array(B, dtype=np.longdouble)
    n = A.shape[0]
    for k in range(n):
        piv = k + int(np.argmax(np.abs(A[k:, k])))
        if piv != k:
            A[[k, piv]] = A[[piv, k]]
            B[[k, piv]] = B[[piv, k]]
        f = A[k + 1 :, k] / A[k, k]
        A[k + 1 :, k:] -= np.outer(f, A[k, k:])
        B[k + 1 :] -= np.outer(f, B[k])
    X = np.zeros_like(B)
    for k in range(n - 1, -1, -1):
        X[k] = (B[k] - A[k, k + 1 :] @ X[k + 1 :]) / A[k, k]
    return X


def dense_hat_trace(G, eps):
    """``tr[Q G (G + eps I)^{-1} + 11'/n]`` formed densely in long double."""
    G = np.asarray(G, dtype=np.longdouble)
    n = G.shape[0]
    Q = np.eye(n, dtype=np.longdouble) - np.longdouble(1) / n
    # tr[Q G A^{-1}] = tr[A^{-1} Q G] since A^{-1} and Q G are both n x n
    M = solve_longdouble(G + eps * np.eye(n, dtype=np.longdouble), Q @ G)
    return float(np.trace(M) + 1)


def gram_longdouble(X, kind, gamma=None, offset=1.0):
    """Doubly centered Gram matrix of Euclidean data, built in long double.

    Working from the raw data keeps exact null directions (the constant
    vector, and the complement of the span for the linear kernel) free of
    the float64 rounding a stored Gram matrix carries.
    """
    X = np.asarray(X, dtype=np.longdouble)
    if kind == "linear":
        K = offset + X @ X.T
    else:
        d2 = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
        K = np.exp(-gamma * d2) if kind == "gaussian" else np.exp(-gamma * np.sqrt(d2))
    n = K.shape[0]
    Q = np.eye(n, dtype=np.longdouble) - np.longdouble(1) / n
    return Q @ K @ Q
