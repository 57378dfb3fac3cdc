"""Weyl-point search and topological charges for Hermitian matrix families.

A :class:`ParamMap` evaluates H(x) for batches of configurational points
x in a 3D box or 3-torus. :func:`find_degeneracies` minimizes the squared gap
between bands j and j+1 from many seeds; :func:`chirality` integrates the
Berry flux of the lower j-band projector through a small cube.

Band indices are 1-based throughout: band j is the j-th lowest eigenvalue.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize

logger = logging.getLogger(__name__)

HERMITICITY_RTOL = 1e-12

# Pauli matrices, used for the two-band d-vector of a degenerate pair
_SIGMA = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


class GradientError(ValueError):
    """Gap gradient requested where neighbouring bands are degenerate."""


class EnclosureError(ValueError):
    """The charge cube is not a valid enclosure of a single degeneracy."""


def check_hermitian(H, rtol=HERMITICITY_RTOL):
    H = np.asarray(H)
    if H.ndim < 2 or H.shape[-1] != H.shape[-2]:
        raise ValueError("Hermitian matrix must be square")
    if not np.all(np.isfinite(H)):
        raise ValueError("matrix has non-finite entries")
    scale = np.max(np.abs(H)) if H.size else 0.0
    if np.max(np.abs(H - np.conj(np.swapaxes(H, -1, -2))), initial=0.0) > rtol * scale:
        raise ValueError("matrix is not Hermitian")
    return H


def eigvalsh(H):
    """Ascending eigenvalues of a (stack of) Hermitian matrices."""
    return np.linalg.eigvalsh(check_hermitian(H))


def gap(H, j):
    """E_{j+1} - E_j for 1 <= j <= n-1."""
    H = np.asarray(H)
    n = H.shape[-1]
    if not 1 <= j <= n - 1:
        raise ValueError(f"band index j={j} out of range 1..{n - 1}")
    E = eigvalsh(H)
    return E[..., j] - E[..., j - 1]


@dataclass
class ParamMap:
    """H(x) on a box ``[lower, upper]`` of the 3D configurational space.

    ``evaluate`` takes an ``(B, 3)`` array and returns ``(B, n, n)``;
    ``partials`` (optional) returns ``(3, B, n, n)``. Periodic axes are
    identified modulo their extent.
    """

    evaluate: Callable
    lower: np.ndarray
    upper: np.ndarray
    periodic: tuple = (False, False, False)
    partials: Callable | None = None
    name: str = ""

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.periodic = tuple(bool(p) for p in self.periodic)
        if self.lower.shape != (3,) or self.upper.shape != (3,) or np.any(self.upper <= self.lower):
            raise ValueError("domain must be a non-degenerate 3D box")

    @property
    def extent(self):
        return self.upper - self.lower

    @property
    def is_torus(self):
        return all(self.periodic)

    def __call__(self, x):
        return self.evaluate(np.atleast_2d(np.asarray(x, dtype=float)))

    def derivatives(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.partials is not None:
            return self.partials(x)
        h = 1e-6 * self.extent
        out = []
        for i in range(3):
            e = np.zeros(3)
            e[i] = h[i]
            out.append((self.evaluate(x + e) - self.evaluate(x - e)) / (2 * h[i]))
        return np.stack(out)

    def wrap(self, x):
        """Map points into the fundamental domain along periodic axes."""
        x = np.array(x, dtype=float, copy=True)
        for i, p in enumerate(self.periodic):
            if p:
                x[..., i] = self.lower[i] + np.mod(x[..., i] - self.lower[i], self.extent[i])
        return x

    def displacement(self, a, b):
        """Minimal-image displacement b - a."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        for i, p in enumerate(self.periodic):
            if p:
                L = self.extent[i]
                d[..., i] = d[..., i] - L * np.round(d[..., i] / L)
        return d

    def inside(self, x):
        x = np.atleast_2d(x)
        ok = np.ones(len(x), dtype=bool)
        for i, p in enumerate(self.periodic):
            if not p:
                ok &= (x[:, i] >= self.lower[i]) & (x[:, i] <= self.upper[i])
        return ok


@dataclass
class WeylPoint:
    position: np.ndarray
    band: int
    residual_gap: float
    charge: int | None = None
    flux: float | None = None
    flags: list = field(default_factory=list)

    def as_row(self):
        return [*map(float, self.position), self.charge, float(self.residual_gap)]


@dataclass(frozen=True)
class SearchConfig:
    """Degeneracy-search settings.

    ``None`` entries take data-dependent defaults: ``gap_tolerance`` is 1e-8
    times the largest spectral range over the seeds, ``dedup_radius`` 1e-3
    times the largest domain extent and ``charge_radius`` ten times the
    dedup radius. ``seeds="all"`` descends from every seed-grid point;
    ``seeds="minima"`` only from grid-local minima of the gap and the corners
    of their cells.
    """

    seed_grid: int = 12
    gap_tolerance: float | None = None
    dedup_radius: float | None = None
    max_iterations: int = 60
    charge_radius: float | None = None
    charge_plaquettes_per_face: int = 8
    seeds: str = "all"
    max_step: float | None = None

    def __post_init__(self):
        if self.seed_grid < 1 or self.max_iterations < 1 or self.charge_plaquettes_per_face < 1:
            raise ValueError("seed_grid, max_iterations and plaquettes must be positive")
        for name in ("gap_tolerance", "dedup_radius", "charge_radius", "max_step"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if self.seeds not in ("all", "minima"):
            raise ValueError("seeds must be 'all' or 'minima'")

    def resolved(self, pmap, spectral_range=None):
        dedup = self.dedup_radius or 1e-3 * float(np.max(pmap.extent))
        tol = self.gap_tolerance
        if tol is None:
            tol = 1e-8 * (spectral_range if spectral_range else 1.0)
        return replace(
            self,
            gap_tolerance=tol,
            dedup_radius=dedup,
            charge_radius=self.charge_radius or 10 * dedup,
            max_step=self.max_step or float(np.max(pmap.extent)) / (2 * self.seed_grid),
        )


def _band_check(j, n):
    if not 1 <= j <= n - 1:
        raise ValueError(f"band index j={j} out of range 1..{n - 1}")


def gap_gradient(pmap, x, j, threshold=1e-9):
    """Hellmann-Feynman gradient of E_{j+1} - E_j at a single point."""
    x = np.asarray(x, dtype=float)
    H = pmap(x)[0]
    n = H.shape[-1]
    _band_check(j, n)
    E, V = np.linalg.eigh(H)
    scale = max(float(np.max(np.abs(E))), 1.0)
    lo, hi = j - 1, j
    if E[hi] - E[lo] <= threshold * scale:
        raise GradientError("gradient ill-defined: bands j, j+1 degenerate")
    if lo > 0 and E[lo] - E[lo - 1] <= threshold * scale:
        raise GradientError("gradient ill-defined: bands j-1, j degenerate")
    if hi < n - 1 and E[hi + 1] - E[hi] <= threshold * scale:
        raise GradientError("gradient ill-defined: bands j+1, j+2 degenerate")
    D = pmap.derivatives(x)[:, 0]
    psi_lo, psi_hi = V[:, lo], V[:, hi]
    g = [np.real(psi_hi.conj() @ D[i] @ psi_hi - psi_lo.conj() @ D[i] @ psi_lo) for i in range(3)]
    return np.array(g)


def _seed_points(pmap, n):
    axes = [pmap.lower[i] + (np.arange(n) + 0.5) * pmap.extent[i] / n for i in range(3)]
    return np.array(list(itertools.product(*axes))), axes


def _local_minima(g, periodic):
    """Boolean mask of 26-neighbourhood local minima on a 3D grid."""
    n = g.shape
    big = np.inf
    pad = np.pad(g, 1, mode="constant", constant_values=big)
    for i, p in enumerate(periodic):
        if p:
            sl_lo = [slice(None)] * 3
            sl_hi = [slice(None)] * 3
            sl_lo[i] = 0
            sl_hi[i] = n[i] + 1
            src_hi = [slice(None)] * 3
            src_lo = [slice(None)] * 3
            src_hi[i] = n[i]
            src_lo[i] = 1
            pad[tuple(sl_lo)] = pad[tuple(src_hi)]
            pad[tuple(sl_hi)] = pad[tuple(src_lo)]
    mask = np.ones(n, dtype=bool)
    for d in itertools.product((-1, 0, 1), repeat=3):
        if d == (0, 0, 0):
            continue
        mask &= g <= pad[1 + d[0]:1 + d[0] + n[0], 1 + d[1]:1 + d[1] + n[1], 1 + d[2]:1 + d[2] + n[2]]
    return mask


def _pair_gap(pmap, x, j):
    E = np.linalg.eigvalsh(pmap(x))
    return E[:, j] - E[:, j - 1]


def _pair_jacobian(pmap, x, j):
    """d-vector Jacobian J[a, i] = Re Tr(sigma_a V^dag dH_i V) / 2 of the (j, j+1) pair."""
    E, V = np.linalg.eigh(pmap(x))
    V2 = V[:, :, j - 1:j + 1]
    heff = np.einsum("bia,kbij,bjc->bkac", V2.conj(), pmap.derivatives(x), V2)
    return E, 0.5 * np.real(np.einsum("nac,bkca->bnk", _SIGMA, heff))


def _descend(pmap, x, j, cfg):
    """Batched Gauss-Newton descent on the two-band d-vector with backtracking.

    Returns final points, final gaps and a mask of seeds that stalled.
    """
    x = np.array(x, dtype=float, copy=True)
    B = len(x)
    stalled = np.zeros(B, dtype=bool)
    active = np.ones(B, dtype=bool)
    gaps = _pair_gap(pmap, x, j)
    target = 1e-3 * cfg.gap_tolerance
    slow = np.zeros(B, dtype=int)
    for _ in range(cfg.max_iterations):
        idx = np.flatnonzero(active & (gaps > target))
        if idx.size == 0:
            break
        xi = x[idx]
        E, J = _pair_jacobian(pmap, xi, j)
        g = E[:, j] - E[:, j - 1]
        d = np.zeros((len(idx), 3))
        d[:, 2] = -0.5 * g
        step = -np.einsum("bkn,bn->bk", np.linalg.pinv(J, rcond=1e-10), d)
        # steepest-descent direction of gap^2 for the backtracking fallback
        # d_z = (E_j - E_j+1)/2, so grad(gap) = -2 J[z]
        grad = -4 * g[:, None] * J[:, 2, :]
        norm = np.linalg.norm(step, axis=1)
        step *= np.minimum(1.0, cfg.max_step / np.maximum(norm, 1e-300))[:, None]
        f0 = g ** 2
        accepted = np.zeros(len(idx), dtype=bool)
        newx = xi.copy()
        newg = g.copy()
        for direction in ("gn", "sd"):
            if accepted.all():
                break
            if direction == "sd":
                gn = np.linalg.norm(grad, axis=1)
                step = -grad / np.maximum(gn, 1e-300)[:, None] * np.minimum(cfg.max_step, g / np.maximum(gn, 1e-300) * 2)[:, None]
            s = 1.0
            for _ in range(6):
                todo = ~accepted
                if not todo.any():
                    break
                trial = xi[todo] + s * step[todo]
                gt = _pair_gap(pmap, trial, j)
                ok = gt ** 2 < f0[todo] * (1 - 1e-4 * s)
                sel = np.flatnonzero(todo)[ok]
                newx[sel] = trial[ok]
                newg[sel] = gt[ok]
                accepted[sel] = True
                s *= 0.5
        x[idx] = newx
        gaps[idx] = newg
        # Gauss-Newton converges quadratically onto true degeneracies; a
        # gap that stops shrinking well above tolerance is a gapped minimum
        crawl = (newg > 0.99 * g) & (newg > cfg.gap_tolerance)
        slow[idx] = np.where(crawl, slow[idx] + 1, 0)
        stuck = idx[~accepted | (slow[idx] >= 3)]
        stalled[stuck] = True
        active[stuck] = False
    return x, gaps, stalled


def _simplex_polish(pmap, x, j, cfg):
    def f(p):
        return float(_pair_gap(pmap, p[None], j)[0]) ** 2

    scale = 0.25 * cfg.max_step
    init = np.vstack([x] + [x + scale * e for e in np.eye(3)])
    res = minimize(f, x, method="Nelder-Mead",
                   options={"initial_simplex": init, "xatol": 1e-12, "fatol": 1e-30, "maxiter": 4000})
    return res.x, np.sqrt(max(res.fun, 0.0))


def _dedup(pmap, pts, gaps, radius):
    order = np.lexsort((gaps,))
    kept = []
    for i in order:
        if all(np.linalg.norm(pmap.displacement(pts[k], pts[i])) > radius for k in kept):
            kept.append(i)
    return kept


def _canonical_order(points):
    return sorted(points, key=lambda w: tuple(np.round(w.position, 12)))


def find_degeneracies(pmap, j, cfg=SearchConfig()):
    """Locate degeneracies between bands j and j+1 (charges unassigned)."""
    seeds, axes = _seed_points(pmap, cfg.seed_grid)
    E = np.linalg.eigvalsh(pmap(seeds))
    _band_check(j, E.shape[-1])
    cfg = cfg.resolved(pmap, spectral_range=float(np.max(E[:, -1] - E[:, 0])))
    g0 = E[:, j] - E[:, j - 1]
    if cfg.seeds == "minima":
        n = cfg.seed_grid
        mask = _local_minima(g0.reshape(n, n, n), pmap.periodic).ravel()
        h = pmap.extent / n
        corners = np.array(list(itertools.product((-0.5, 0.5), repeat=3))) * h
        base = seeds[mask]
        seeds = np.concatenate([base] + [base + c for c in corners])
    x, gaps, stalled = _descend(pmap, seeds, j, cfg)
    retry = np.flatnonzero(stalled & (gaps > cfg.gap_tolerance))
    # simplex fallback only where descent stalled near a plausible degeneracy
    near = retry[gaps[retry] < 1e3 * cfg.gap_tolerance] if retry.size else retry
    for i in near:
        x[i], gaps[i] = _simplex_polish(pmap, x[i], j, cfg)
    x = pmap.wrap(x)
    ok = (gaps <= cfg.gap_tolerance) & pmap.inside(x)
    pts, gs = x[ok], gaps[ok]
    kept = _dedup(pmap, pts, gs, cfg.dedup_radius)
    out = [WeylPoint(position=pts[i], band=j, residual_gap=float(gs[i])) for i in kept]
    if out:
        # a generic (Weyl) degeneracy has a full-rank two-band Jacobian
        _, J = _pair_jacobian(pmap, np.array([w.position for w in out]), j)
        sv = np.linalg.svd(J, compute_uv=False)
        for w, s in zip(out, sv):
            if s[-1] <= 1e-6 * max(s[0], 1e-300):
                w.flags.append("non-generic degeneracy")
    return _canonical_order(out)


# --- charges -------------------------------------------------------------

# face normal axis, side, and the ordered in-face axes (u, v) with u x v outward
_FACES = [
    (0, +1, (1, 2)), (0, -1, (2, 1)),
    (1, +1, (2, 0)), (1, -1, (0, 2)),
    (2, +1, (0, 1)), (2, -1, (1, 0)),
]


def _face_vertices(center, radius, n):
    t = np.linspace(-radius, radius, n + 1)
    faces = []
    for axis, side, (u, v) in _FACES:
        pts = np.empty((n + 1, n + 1, 3))
        pts[..., axis] = center[axis] + side * radius
        pts[..., u] = center[u] + t[:, None]
        pts[..., v] = center[v] + t[None, :]
        faces.append(pts)
    return np.stack(faces)


def berry_flux(pmap, j, center, radius, plaquettes=8):
    """Berry flux / 2pi of the lower j-band projector out of a cube.

    Returns (flux, min_gap_on_surface). Uses gauge-invariant link variables
    det(V_a^dagger V_b) of the rank-j eigenframes at plaquette corners.
    """
    n = plaquettes
    verts = _face_vertices(np.asarray(center, float), radius, n)
    flat = verts.reshape(-1, 3)
    E, V = np.linalg.eigh(pmap(flat))
    surface_gap = float(np.min(E[:, j] - E[:, j - 1]))
    frames = V[:, :, :j].reshape(6, n + 1, n + 1, V.shape[1], j)

    def link(a, b):
        return np.linalg.det(np.einsum("...ia,...ib->...ab", a.conj(), b))

    u1 = link(frames[:, :-1, :-1], frames[:, 1:, :-1])
    u2 = link(frames[:, 1:, :-1], frames[:, 1:, 1:])
    u3 = link(frames[:, 1:, 1:], frames[:, :-1, 1:])
    u4 = link(frames[:, :-1, 1:], frames[:, :-1, :-1])
    phase = np.angle(u1 * u2 * u3 * u4)
    # lower band of H = k.sigma carries +1 with this orientation
    flux = -float(np.sum(phase)) / (2 * np.pi)
    return flux, surface_gap


def chirality(pmap, j, p, cfg=SearchConfig(), radius=None, gap_floor=None):
    """Integer topological charge of the degeneracy at ``p``.

    Raises :class:`EnclosureError` if the gap nearly closes on the cube
    surface or the flux is not close to an integer.
    """
    cfg = cfg.resolved(pmap) if cfg.charge_radius is None else cfg
    r = radius or cfg.charge_radius
    flux, sgap = berry_flux(pmap, j, p, r, cfg.charge_plaquettes_per_face)
    floor = gap_floor if gap_floor is not None else 100 * (cfg.gap_tolerance or 0.0)
    if sgap <= floor:
        raise EnclosureError(f"enclosure invalid: gap {sgap:.3g} on cube surface")
    q = int(np.rint(flux))
    if abs(flux - q) >= 0.05:
        raise EnclosureError(f"enclosure invalid: flux {flux:.4f} not quantized")
    return q


def chirality_with_flux(pmap, j, p, cfg, radius, gap_floor):
    flux, sgap = berry_flux(pmap, j, p, radius, cfg.charge_plaquettes_per_face)
    if sgap <= gap_floor:
        raise EnclosureError(f"enclosure invalid: gap {sgap:.3g} on cube surface")
    q = int(np.rint(flux))
    if abs(flux - q) >= 0.05:
        raise EnclosureError(f"enclosure invalid: flux {flux:.4f} not quantized")
    return q, flux


def assign_charges(pmap, j, points, cfg, shrink_steps=5):
    """Charge every point, shrinking its cube until it is a valid enclosure."""
    seeds, _ = _seed_points(pmap, 2)
    E = np.linalg.eigvalsh(pmap(seeds))
    cfg = cfg.resolved(pmap, spectral_range=float(np.max(E[:, -1] - E[:, 0])))
    for k, w in enumerate(points):
        r = cfg.charge_radius
        others = [o.position for i, o in enumerate(points) if i != k]
        if others:
            cheb = np.max(np.abs(pmap.displacement(w.position, np.array(others))), axis=-1)
            r = min(r, 0.45 * float(np.min(cheb)))
        for _ in range(shrink_steps):
            try:
                w.charge, w.flux = chirality_with_flux(pmap, j, w.position, cfg, r, 0.0)
                break
            except EnclosureError:
                r *= 0.5
        else:
            w.flags.append("charge unassigned")
        if w.charge is not None and abs(w.charge) > 1:
            w.flags.append(f"higher charge {w.charge}")
            logger.info("degeneracy at %s carries charge %d", w.position, w.charge)
    return points


def weyl_points(pmap, j, cfg=SearchConfig()):
    """Degeneracies between bands j and j+1 with their topological charges."""
    pts = find_degeneracies(pmap, j, cfg)
    assign_charges(pmap, j, pts, cfg)
    if pmap.is_torus:
        total = sum(w.charge for w in pts if w.charge is not None)
        if total != 0 or any(w.charge is None for w in pts):
            logger.warning("charge sum on torus is %d (expected 0)", total)
            for w in pts:
                w.flags.append(f"torus charge sum {total}")
    return pts
