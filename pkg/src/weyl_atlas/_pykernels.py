"""Pure-Python/numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` operation for operation and are used when the
compiled extension is unavailable (or ``WEYL_ATLAS_PURE=1``).
"""
import numpy as np

MAX_DEGREE = 15


def normalize(c):
    """Scale a coefficient list to max-abs 1 and drop high-order zeros."""
    n = len(c)
    while n > 0 and c[n - 1] == 0.0:
        n -= 1
    if n == 0:
        return []
    s = 0.0
    for i in range(n):
        a = abs(c[i])
        if a > s:
            s = a
    return [c[i] / s for i in range(n)]


def trim(c, tol):
    """Drop leading coefficients below ``tol * max|c|`` and normalize."""
    c = normalize(list(c))
    n = len(c)
    while n > 0 and abs(c[n - 1]) < tol:
        n -= 1
    return normalize(c[:n])


def derivative(c):
    return [i * c[i] for i in range(1, len(c))]


def polyrem(a, b, tol):
    """Remainder of a / b with pruning of coefficients at or below tol.

    Both inputs are expected normalized (max|coeff| = 1).
    """
    r = list(a)
    db = len(b) - 1
    lb = b[db]
    for k in range(len(r) - 1 - db, -1, -1):
        q = r[k + db] / lb
        for i in range(db + 1):
            r[k + i] -= q * b[i]
        r[k + db] = 0.0
    r = r[:db]
    for i in range(len(r)):
        if abs(r[i]) <= tol:
            r[i] = 0.0
    return normalize(r)


def polydiv(a, b):
    """Quotient of a / b (remainder discarded)."""
    r = list(a)
    db = len(b) - 1
    lb = b[db]
    nq = len(a) - db
    q = [0.0] * nq
    for k in range(nq - 1, -1, -1):
        qk = r[k + db] / lb
        q[k] = qk
        for i in range(db + 1):
            r[k + i] -= qk * b[i]
    return q


def sturm_chain(p, tol):
    """Sturm sequence p, p', -rem, ... with pruned remainders.

    ``p`` must already be trimmed. The last element is (numerically) gcd(p, p').
    """
    seq = [p]
    if len(p) <= 1:
        return seq
    seq.append(normalize(derivative(p)))
    while len(seq[-1]) > 1:
        r = polyrem(seq[-2], seq[-1], tol)
        if not r:
            break
        seq.append([-x for x in r])
    return seq


def sign_changes(values):
    count = 0
    last = 0
    for v in values:
        if v == 0.0:
            continue
        s = 1 if v > 0.0 else -1
        if last != 0 and s != last:
            count += 1
        last = s
    return count


def distinct_real_root_count(c, tol):
    """Number of distinct real roots via sign variations of the Sturm chain at +-inf.

    Returns -1 for the zero polynomial. Sturm's theorem counts distinct roots
    even when the chain ends in a non-constant gcd.
    """
    p = trim(c, tol)
    if not p:
        return -1
    if len(p) == 1:
        return 0
    seq = sturm_chain(p, tol)
    at_pos = [s[-1] for s in seq]
    at_neg = [s[-1] if (len(s) - 1) % 2 == 0 else -s[-1] for s in seq]
    return sign_changes(at_neg) - sign_changes(at_pos)


def count_real_roots_batch(coeffs, tol):
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    out = np.empty(coeffs.shape[0], dtype=np.int64)
    for b in range(coeffs.shape[0]):
        out[b] = distinct_real_root_count(coeffs[b].tolist(), tol)
    return out


def pfaffian_batch(A):
    """Pfaffians of a stack of real antisymmetric matrices, shape (B, N, N).

    Householder reduction to tridiagonal form, vectorized over the batch.
    Each reflector has determinant -1, so Pf(A) = Pf(T) * (-1)^(#reflectors).
    """
    A = np.array(A, dtype=np.float64, copy=True)
    if A.ndim == 2:
        return pfaffian_batch(A[None])[0]
    B, N, _ = A.shape
    if N % 2:
        raise ValueError("Pfaffian of odd-dimensional matrix")
    pf = np.ones(B)
    if N == 0:
        return pf
    for i in range(N - 2):
        x = A[:, i + 1:, i]
        sigma = np.einsum("bj,bj->b", x[:, 1:], x[:, 1:])
        norm_x = np.sqrt(x[:, 0] ** 2 + sigma)
        active = sigma > 0.0
        v = x.copy()
        neg = x[:, 0] <= 0.0
        alpha = np.where(neg, norm_x, -norm_x)
        v[:, 0] = np.where(neg, x[:, 0] - norm_x, x[:, 0] + norm_x)
        vn = np.sqrt(np.einsum("bj,bj->b", v, v))
        vn = np.where(active, vn, 1.0)
        v = v / vn[:, None]
        alpha = np.where(active, alpha, x[:, 0])
        # A_sub <- H A_sub H with H = 1 - 2 v v^T; antisymmetry gives a rank-2 update
        sub = A[:, i + 1:, i + 1:]
        w = 2.0 * np.einsum("bjk,bk->bj", sub, v)
        upd = np.einsum("bj,bk->bjk", v, w) - np.einsum("bj,bk->bjk", w, v)
        sub += np.where(active[:, None, None], upd, 0.0)
        A[:, i + 1, i] = alpha
        A[:, i, i + 1] = -alpha
        A[:, i + 2:, i] = 0.0
        A[:, i, i + 2:] = 0.0
        pf = np.where(active, -pf, pf)
        if i % 2 == 0:
            pf = pf * (-alpha)
    pf = pf * A[:, N - 2, N - 1]
    return pf


def pfaffian(A):
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if n % 2:
        raise ValueError("Pfaffian of odd-dimensional matrix")
    if n == 0:
        return 1.0
    return float(pfaffian_batch(A[None])[0])


__all__ = [
    "count_real_roots_batch",
    "distinct_real_root_count",
    "pfaffian_batch",
]
