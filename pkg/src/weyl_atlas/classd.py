"""Pseudo-random class-D (BdG) model with three angle parameters.

H(alpha, beta, gamma) = sum_n f_n(alpha, beta, gamma) H_n with the eight
products f_1 = cos a cos b cos g, f_2 = cos a cos b sin g, ..., f_8 =
sin a sin b sin g (alpha is the slowest index, gamma the fastest). Each
basis matrix has the particle-hole block form

    H_n = [[H0_n, D_n], [-conj(D_n), -conj(H0_n)]],

D_n = d_n - d_n^T, H0_n = h_n + h_n^dagger, entries from fractional parts of
irrational linear forms in (k, l, n), all 1-based. Each form is evaluated
left to right as ``(s1*k + s2*l) + s3*n`` in double precision, then
``x - floor(x) - 0.5``; the values are bit-stable for a given platform libm.

In the Majorana basis A = -i U H U^dagger with
U = [[I, I], [i I, -i I]] / sqrt(2) is real antisymmetric. Since
det(A) = (-1)^n_s det(H), Pf(A)^2 = det(H) holds for even n_s (the default
n_s = 6) and Pf(A)^2 = -det(H) for odd n_s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .scan import Axis, GridSpec, scan

ZERO_RTOL = 1e-12
CLASS_D_TOL = 1e-8

_FORMS = {
    "d_re": (2, 3, 5), "d_im": (6, 7, 10),
    "h_re": (11, 13, 14), "h_im": (15, 17, 19),
}


def _frac_form(roots, k, l, n):
    s1, s2, s3 = (math.sqrt(r) for r in roots)
    x = (s1 * k + s2 * l) + s3 * n
    return x - np.floor(x) - 0.5


@dataclass(frozen=True)
class BdGBasis:
    n_s: int
    H: np.ndarray       # (8, 2n_s, 2n_s) complex
    A: np.ndarray       # (8, 2n_s, 2n_s) real antisymmetric Majorana forms
    d: np.ndarray
    h: np.ndarray


def raw_entries(n_s):
    """d_n and h_n, shape (8, n_s, n_s), index [n-1, k-1, l-1]."""
    n, k, l = np.meshgrid(np.arange(1, 9), np.arange(1, n_s + 1), np.arange(1, n_s + 1), indexing="ij")
    d = _frac_form(_FORMS["d_re"], k, l, n) + 1j * _frac_form(_FORMS["d_im"], k, l, n)
    h = _frac_form(_FORMS["h_re"], k, l, n) + 1j * _frac_form(_FORMS["h_im"], k, l, n)
    return d, h


def bdg_block(H0, D):
    return np.block([[H0, D], [-np.conj(D), -np.conj(H0)]])


def majorana_unitary(n_s):
    I = np.eye(n_s)
    return np.block([[I, I], [1j * I, -1j * I]]) / np.sqrt(2)


_BASIS_CACHE = {}


def basis_matrices(n_s=6):
    if n_s < 1:
        raise ValueError("n_s must be >= 1")
    if n_s not in _BASIS_CACHE:
        d, h = raw_entries(n_s)
        D = d - np.swapaxes(d, -1, -2)
        H0 = h + np.conj(np.swapaxes(h, -1, -2))
        H = np.stack([bdg_block(H0[i], D[i]) for i in range(8)])
        A = np.stack([majorana_form(Hn) for Hn in H])
        _BASIS_CACHE[n_s] = BdGBasis(n_s, H, A, d, h)
    return _BASIS_CACHE[n_s]


def trig_weights(alpha, beta, gamma):
    """The eight angle products, shape (..., 8)."""
    a, b, g = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (alpha, beta, gamma)))
    fa = (np.cos(a), np.sin(a))
    fb = (np.cos(b), np.sin(b))
    fg = (np.cos(g), np.sin(g))
    return np.stack([fa[i] * fb[j] * fg[k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], axis=-1)


def bdg_hamiltonian(n_s, angles):
    """H(alpha, beta, gamma); ``angles`` is a 3-vector or (..., 3) array."""
    B = basis_matrices(n_s)
    ang = np.asarray(angles, dtype=float)
    w = trig_weights(ang[..., 0], ang[..., 1], ang[..., 2])
    return np.tensordot(w, B.H, axes=(-1, 0))


def majorana_batch(n_s, angles):
    """Real antisymmetric Majorana form of H(angles), linear in the basis forms."""
    B = basis_matrices(n_s)
    ang = np.asarray(angles, dtype=float)
    w = trig_weights(ang[..., 0], ang[..., 1], ang[..., 2])
    return np.tensordot(w, B.A, axes=(-1, 0))


def check_bdg_structure(H, tol=1e-10):
    H = np.asarray(H)
    N = H.shape[-1]
    if H.shape != (N, N) or N % 2:
        raise ValueError("BdG matrix must be square with even dimension")
    n = N // 2
    scale = max(float(np.max(np.abs(H))), 1.0)
    H0, D = H[:n, :n], H[:n, n:]
    err = max(
        np.max(np.abs(H0 - H0.conj().T)),
        np.max(np.abs(D + D.T)),
        np.max(np.abs(H[n:, :n] + np.conj(D))),
        np.max(np.abs(H[n:, n:] + np.conj(H0))),
    )
    if err > tol * scale:
        raise ValueError(f"not class D: block structure violated ({err:.3g})")


def majorana_form(H):
    """A = -i U H U^dagger, real antisymmetric for a BdG-structured H."""
    H = np.asarray(H)
    check_bdg_structure(H)
    U = majorana_unitary(H.shape[-1] // 2)
    A = -1j * (U @ H @ U.conj().T)
    scale = max(float(np.max(np.abs(A))), 1e-300)
    if np.max(np.abs(A.imag)) > CLASS_D_TOL * scale:
        raise ValueError("not class D: Majorana form is not real")
    A = A.real
    if np.max(np.abs(A + A.T)) > CLASS_D_TOL * scale:
        raise ValueError("not class D: Majorana form is not antisymmetric")
    return 0.5 * (A - A.T)


def pfaffian(A):
    """Pfaffian of a real antisymmetric matrix (or stack) by Householder tridiagonalization."""
    A = np.asarray(A, dtype=float)
    if A.shape[-1] != A.shape[-2]:
        raise ValueError("matrix must be square")
    if A.shape[-1] % 2:
        raise ValueError("Pfaffian needs an even dimension")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if np.max(np.abs(A + np.swapaxes(A, -1, -2)), initial=0.0) > 1e-12 * max(scale, 1e-300):
        raise ValueError("matrix is not antisymmetric")
    flat = A.reshape((-1,) + A.shape[-2:])
    out = _backend.pfaffian_batch(np.ascontiguousarray(flat))
    return float(out[0]) if A.ndim == 2 else out.reshape(A.shape[:-2])


def gamma_samples(n_gamma, origin=0.0):
    return origin + 2 * np.pi * np.arange(n_gamma) / n_gamma


def pfaffian_profile(n_s, alpha, beta, n_gamma, origin=0.0, model=None):
    """Pf along the gamma circle for arrays of (alpha, beta); shape (..., n_gamma).

    ``model`` maps an (..., 3) angle array to Majorana forms; defaults to the
    pseudo-random basis of size ``n_s``.
    """
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    g = gamma_samples(n_gamma, origin)
    ang = np.stack(np.broadcast_arrays(a[..., None], b[..., None], g), axis=-1)
    A = majorana_batch(n_s, ang) if model is None else model(ang)
    return pfaffian(A.reshape((-1,) + A.shape[-2:])).reshape(ang.shape[:-1])


@dataclass
class CrossingCount:
    count: int
    half_count: int
    flagged: np.ndarray     # sample indices with |Pf| treated as zero


def _cyclic_changes(pf, zero):
    """Sign changes of a cyclic sequence, skipping samples flagged as zero."""
    s = np.sign(pf)
    s[zero] = 0
    nz = s[s != 0]
    if nz.size < 2:
        return 0
    return int(np.count_nonzero(nz != np.roll(nz, 1)))


def _changes_open(pf, zero):
    s = np.sign(pf)
    s[zero] = 0
    nz = s[s != 0]
    return int(np.count_nonzero(nz[1:] != nz[:-1]))


def crossing_counts(pf):
    """Vectorized cyclic sign-change counts over the last axis (no zero handling)."""
    s = np.signbit(pf)
    return np.count_nonzero(s != np.roll(s, 1, axis=-1), axis=-1)


def zero_crossing_detail(n_s, alpha, beta, n_gamma, origin=0.0):
    if n_gamma < 16:
        raise ValueError("n_gamma must be >= 16")
    pf = pfaffian_profile(n_s, alpha, beta, n_gamma, origin)
    running = np.maximum.accumulate(np.abs(pf))
    zero = np.abs(pf) < ZERO_RTOL * running
    half = n_gamma // 2 + (n_gamma % 2)
    return CrossingCount(_cyclic_changes(pf, zero), _changes_open(pf[:half + 1], zero[:half + 1]),
                         np.flatnonzero(zero))


def zero_crossing_count(n_s, alpha, beta, n_gamma=200, origin=0.0):
    """Number of Pf sign changes over n_gamma cyclic samples of [origin, origin + 2 pi)."""
    return zero_crossing_detail(n_s, alpha, beta, n_gamma, origin).count


class CrossingCounter:
    """Picklable vectorized counter over (alpha, beta) control vectors."""

    def __init__(self, n_s=6, n_gamma=200, origin=0.0):
        self.n_s, self.n_gamma, self.origin = n_s, n_gamma, origin

    def __call__(self, ab):
        ab = np.atleast_2d(ab)
        pf = pfaffian_profile(self.n_s, ab[:, 0], ab[:, 1], self.n_gamma, self.origin)
        running = np.maximum.accumulate(np.abs(pf), axis=-1)
        zero = np.abs(pf) < ZERO_RTOL * running
        if zero.any():
            out = np.empty(len(ab), dtype=np.int64)
            for i in range(len(ab)):
                out[i] = _cyclic_changes(pf[i], zero[i])
            return out
        return crossing_counts(pf)


def phase_raster(n_s=6, alpha=(-1.0, 0.5), beta=(-1.0, 0.5), resolution=(50, 50),
                 n_gamma=200, origin=0.0, workers=1):
    grid = GridSpec((Axis("alpha", alpha[0], alpha[1], resolution[0]),
                     Axis("beta", beta[0], beta[1], resolution[1])))
    config = {"n_s": n_s, "n_gamma": n_gamma, "origin": origin}
    return scan(CrossingCounter(n_s, n_gamma, origin), grid, workers=workers,
                vectorized=True, model="bdg", config=config)


def degeneracy_surface(n_s=6, grid=100, model=None):
    """(alpha, beta, gamma) midpoints of gamma-adjacent cells where Pf changes sign.

    Samples each angle at -pi + 2 pi k / grid; the gamma axis is cyclic.
    """
    if grid < 16:
        raise ValueError("grid must be >= 16")
    t = -np.pi + 2 * np.pi * np.arange(grid) / grid
    h = 2 * np.pi / grid
    pts = []
    for a in t:
        pf = pfaffian_profile(n_s, np.full(grid, a), t, grid, origin=-np.pi, model=model)
        s = np.signbit(pf)
        change = s != np.roll(s, -1, axis=-1)
        jb, kg = np.nonzero(change)
        for j, k in zip(jb, kg):
            pts.append((a, t[j], t[k] + h / 2))
    return np.array(pts).reshape(-1, 3)
