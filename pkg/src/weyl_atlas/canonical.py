"""Exact pre-image counting for the corank-1 canonical singularity families.

Each family is a univariate polynomial in the configurational coordinate x,
unfolded by the control coordinates:

    fold         x^2                       = t1
    cusp         x^3 + t2 x                = t1
    swallowtail  x^4 + t2 x^2 + t3 x       = t1
    butterfly    x^5 + t2 x^3 + t3 x^2 + t4 x = t1

This is the ``"table"`` presentation: the first control coordinate is the
target value, trailing coordinates beyond the family's minimum dimension
pass through unchanged. The ``"depressed"`` presentation writes the same
families as monic polynomials without the x^(k-1) term,

    x^k + t1 x^(k-2) + ... + t(k-1) = 0,

e.g. the depressed quartic x^4 + t1 x^2 + t2 x + t3 = 0 whose real-root
count draws the swallowtail surface. The two are related by

    table (T1, T2, ..., T(k-1)) = (-t(k-1), t1, ..., t(k-2)),

i.e. the constant term flips sign and becomes the target, and the remaining
coefficients shift up by one slot (see :func:`depressed_to_table`).

Root counting uses Sturm sequences (no eigenvalues), so counts are exact up
to the coefficient pruning threshold ``tol``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from . import _pykernels as pk
from .scan import GridSpec, PhaseRaster, config_hash

DEFAULT_TOL = 1e-12
MAX_DEGREE = 5

_DEGREE = {"fold": 2, "cusp": 3, "swallowtail": 4, "butterfly": 5}


class StratumLabel(enum.Enum):
    Regular = "regular"
    FoldBoundary = "fold"
    CuspBoundary = "cusp"
    SwallowtailBoundary = "swallowtail"
    ButterflyBoundary = "butterfly"
    MultiFold = "multifold"


@dataclass(frozen=True)
class CanonicalClass:
    """One corank-1 canonical family with control-space dimension ``m``."""

    kind: str
    m: int | None = None
    presentation: str = "table"

    def __post_init__(self):
        if self.kind not in _DEGREE:
            raise ValueError(f"unknown class {self.kind!r}; expected one of {sorted(_DEGREE)}")
        if self.presentation not in ("table", "depressed"):
            raise ValueError(f"unknown presentation {self.presentation!r}")
        if self.m is None:
            object.__setattr__(self, "m", self.min_dim)
        if self.m < self.min_dim:
            raise ValueError(f"{self.kind} needs control dimension >= {self.min_dim}, got {self.m}")

    @property
    def degree(self):
        return _DEGREE[self.kind]

    @property
    def min_dim(self):
        return self.degree - 1

    @property
    def corank(self):
        return 1

    def canonical_form(self):
        return {
            "fold": "(x^2)",
            "cusp": "(x^3+xy, y)",
            "swallowtail": "(x^4+x^2y+xz, y, z)",
            "butterfly": "(x^5+x^3y+x^2z+xw, y, z, w)",
        }[self.kind]


def Fold(m=None, presentation="table"):
    return CanonicalClass("fold", m, presentation)


def Cusp(m=None, presentation="table"):
    return CanonicalClass("cusp", m, presentation)


def Swallowtail(m=None, presentation="table"):
    return CanonicalClass("swallowtail", m, presentation)


def Butterfly(m=None, presentation="table"):
    return CanonicalClass("butterfly", m, presentation)


# corank-2 entries of the classification; listed for reference only
UMBILICS = {
    "elliptic umbilic": {"dim_ct": 4, "min_dim_cf": 2, "form": "(x^2-y^2+xz+yw, xy, z, w)"},
    "hyperbolic umbilic": {"dim_ct": 4, "min_dim_cf": 2, "form": "(x^2+y^2+xz+yw, xy, z, w)"},
}


@dataclass(frozen=True)
class RootSet:
    roots: tuple
    multiplicities: tuple

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.roots, self.roots[1:])):
            raise ValueError("roots must be strictly ascending")
        if any(m < 1 for m in self.multiplicities):
            raise ValueError("multiplicities must be positive")

    def __len__(self):
        return len(self.roots)


def depressed_to_table(kind, t):
    """Map depressed-form controls to table-form controls (same polynomial)."""
    t = np.asarray(t, dtype=float)
    k = _DEGREE[kind]
    n = k - 1
    out = t.copy()
    out[..., 0] = -t[..., n - 1]
    out[..., 1:n] = t[..., 0:n - 1]
    return out


def table_to_depressed(kind, T):
    T = np.asarray(T, dtype=float)
    k = _DEGREE[kind]
    n = k - 1
    out = T.copy()
    out[..., n - 1] = -T[..., 0]
    out[..., 0:n - 1] = T[..., 1:n]
    return out


def _check_dim(cls, t):
    t = np.asarray(t, dtype=float)
    if t.shape[-1] != cls.m:
        raise ValueError(f"dimension mismatch: {cls.kind}({cls.m}) got control vector of length {t.shape[-1]}")
    if not np.all(np.isfinite(t)):
        raise ValueError("control vector must be finite")
    return t


def coefficients(cls, t):
    """Ascending coefficients of f(x; t2..) - t1 for control vector(s) ``t``."""
    t = _check_dim(cls, t)
    if cls.presentation == "depressed":
        t = depressed_to_table(cls.kind, t)
    k = cls.degree
    c = np.zeros(t.shape[:-1] + (k + 1,))
    c[..., k] = 1.0
    c[..., 0] = -t[..., 0]
    # x^(k-1-j) * t_(j+1) for j = 1..k-2 ; x^(k-1) has zero coefficient
    for j in range(1, k - 1):
        c[..., k - 1 - j] = t[..., j]
    return c


def _validate_poly(coeffs, tol):
    c = [float(x) for x in coeffs]
    if not all(math.isfinite(x) for x in c):
        raise ValueError("coefficients must be finite")
    p = pk.trim(c, tol)
    if not p:
        raise ValueError("identically zero polynomial")
    if len(p) - 1 > MAX_DEGREE:
        raise ValueError("unsupported degree")
    return p


def _sturm_variations(chain, x):
    vals = []
    for s in chain:
        v = 0.0
        for a in reversed(s):
            v = v * x + a
        vals.append(v)
    return pk.sign_changes(vals)


def _isolate(chain, lo, hi, tol):
    """Roots in (lo, hi] of the square-free chain head, via Sturm bisection."""
    n = _sturm_variations(chain, lo) - _sturm_variations(chain, hi)
    if n <= 0:
        return []
    if hi - lo <= tol:
        return [((lo + hi) / 2, n)]
    if n == 1:
        a, b = lo, hi
        while b - a > tol:
            mid = (a + b) / 2
            if _sturm_variations(chain, a) - _sturm_variations(chain, mid) == 1:
                b = mid
            else:
                a = mid
        return [((a + b) / 2, 1)]
    mid = (lo + hi) / 2
    return _isolate(chain, lo, mid, tol) + _isolate(chain, mid, hi, tol)


def real_roots(coeffs, tol=DEFAULT_TOL):
    """All real roots (with multiplicities) of a real polynomial of degree <= 5.

    ``coeffs`` are ascending-power coefficients. Roots of the square-free part
    p / gcd(p, p') are isolated with Sturm sequences and bisected to width
    ``tol``; a root's multiplicity is one plus the multiplicity of the roots
    of gcd(p, p') lying within ``sqrt(tol)`` of it.
    """
    p = _validate_poly(coeffs, tol)
    return _real_roots(p, tol)


def _real_roots(p, tol):
    if len(p) == 1:
        return RootSet((), ())
    chain = pk.sturm_chain(p, tol)
    g = chain[-1]
    q = pk.normalize(pk.polydiv(p, g)) if len(g) > 1 else p
    qchain = pk.sturm_chain(q, tol)
    bound = 1.0 + max(abs(a / q[-1]) for a in q[:-1])
    # widen slightly so a root on the bound is strictly inside
    found = _isolate(qchain, -bound * (1 + 1e-9) - tol, bound * (1 + 1e-9) + tol, tol)
    roots = [r for r, _ in found]
    mults = [1] * len(roots)
    if len(g) > 1:
        inner = _real_roots(g, tol)
        radius = math.sqrt(tol)
        for r, m in zip(inner.roots, inner.multiplicities):
            if not roots:
                break
            i = int(np.argmin([abs(r - x) for x in roots]))
            if abs(r - roots[i]) <= radius:
                mults[i] += m
    return RootSet(tuple(roots), tuple(mults))


def distinct_real_root_count(coeffs, tol=DEFAULT_TOL):
    _validate_poly(coeffs, tol)
    return int(_backend.count_real_roots_batch(np.asarray([coeffs], float), tol)[0])


def preimage_count(cls, t, tol=DEFAULT_TOL):
    """Number of distinct real x with f(x; t2..tm) = t1."""
    c = coefficients(cls, t)
    return int(_backend.count_real_roots_batch(c[None], tol)[0])


def preimage_counts(cls, T, tol=DEFAULT_TOL):
    """Vectorized :func:`preimage_count` over an ``(M, m)`` array of control vectors."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    c = coefficients(cls, T)
    return _backend.count_real_roots_batch(c.reshape(-1, c.shape[-1]), tol).reshape(T.shape[:-1])


def classify_control_point(cls, t, tol=DEFAULT_TOL):
    rs = real_roots(coefficients(cls, t), tol)
    mults = rs.multiplicities
    top = max(mults, default=1)
    if top >= 5:
        return StratumLabel.ButterflyBoundary
    if top == 4:
        return StratumLabel.SwallowtailBoundary
    if top == 3:
        return StratumLabel.CuspBoundary
    doubles = sum(1 for m in mults if m == 2)
    if doubles >= 2:
        return StratumLabel.MultiFold
    if doubles == 1:
        return StratumLabel.FoldBoundary
    return StratumLabel.Regular


class PreimageCounter:
    """Picklable vectorized counter for :func:`weyl_atlas.scan.scan`."""

    def __init__(self, cls, tol=DEFAULT_TOL):
        self.cls = cls
        self.tol = tol

    def __call__(self, T):
        return preimage_counts(self.cls, T, self.tol)


def canonical_raster(cls, grid: GridSpec, tol=DEFAULT_TOL, workers=1) -> PhaseRaster:
    """Pre-image count raster of a canonical family over ``grid``.

    The grid's ``order`` must name all ``cls.m`` control coordinates.
    """
    from .scan import scan

    if len(grid.order) != cls.m:
        raise ValueError(f"dimension mismatch: grid binds {len(grid.order)} coordinates, class needs {cls.m}")
    config = {"class": cls.kind, "m": cls.m, "presentation": cls.presentation, "tol": tol}
    raster = scan(PreimageCounter(cls, tol), grid, workers=workers, vectorized=True,
                  model=f"canonical:{cls.kind}", config=config)
    raster.metadata["config_hash"] = config_hash(config)
    return raster
