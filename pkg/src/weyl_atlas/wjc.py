"""Three-island Weyl-Josephson circuit truncated to the 8 lowest charge states.

Basis states |n1, n2, n3>, n_i in {0, 1}, are ordered by the binary index
s = n1 + 2 n2 + 4 n3. The Hamiltonian is

    H = E_C (n - n_g) . c^-1 . (n - n_g)
        - sum_{a<b} E_J,ab cos(phi_a - phi_b + gamma_ab)

with island 0 grounded (phi_0 = 0) and gamma_0b = 0, gamma_12 = phi_x,
gamma_13 = -phi_z, gamma_23 = phi_y. ``exp(i phi_a)`` raises n_a by one
inside the truncated space. Energies are in GHz.

Parameter files are plain ``key = value`` text, ``#`` starts a comment::

    EJ01 = 2      # Josephson energies, GHz
    C13 = 4       # junction capacitances, fF
    Cg2 = 0.1     # gate capacitances, fF
    C0 = 1        # capacitance scale, fF
    include_gate = true
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants

from . import spectra
from .scan import Axis, GridSpec, PhaseRaster, config_hash, region_area, region_centroid, scan

logger = logging.getLogger(__name__)

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
DEFAULT_EJ = {(0, 1): 2.0, (0, 2): 4.0, (0, 3): 6.0, (1, 2): 3.0, (1, 3): 3.0, (2, 3): 6.0}
DEFAULT_CJ = {(0, 1): 2.0, (0, 2): 1.0, (0, 3): 2.0, (1, 2): 3.0, (1, 3): 4.0, (2, 3): 3.0}

# flux index and sign entering gamma_ab for the island-island junctions
_GAMMA = {(1, 2): (0, 1.0), (1, 3): (2, -1.0), (2, 3): (1, 1.0)}

STATES = np.array([[(s >> i) & 1 for i in range(3)] for s in range(8)])
E_DIRECTION = np.array([-4.0, 1.0, 9.0]) / np.sqrt(98.0)


def charging_energy(C0_fF=1.0):
    """(2e)^2 / (2 C0) in GHz."""
    return (2 * constants.e) ** 2 / (2 * C0_fF * 1e-15) / constants.h / 1e9


class RegionNotBracketed(RuntimeError):
    pass


@dataclass(frozen=True)
class CircuitParams:
    E_J: dict = field(default_factory=lambda: dict(DEFAULT_EJ))
    C_junction: dict = field(default_factory=lambda: dict(DEFAULT_CJ))
    C_gate: tuple = (0.1, 0.1, 0.1)
    C0: float = 1.0
    include_gate: bool = True

    def __post_init__(self):
        for name in ("E_J", "C_junction"):
            d = {tuple(k): float(v) for k, v in getattr(self, name).items()}
            if set(d) != set(PAIRS):
                raise ValueError(f"{name} must have exactly the pairs {PAIRS}")
            object.__setattr__(self, name, d)
        object.__setattr__(self, "C_gate", tuple(float(c) for c in self.C_gate))
        if len(self.C_gate) != 3:
            raise ValueError("C_gate needs three entries")
        if min(self.C_junction.values()) <= 0 or min(self.C_gate) <= 0 or self.C0 <= 0:
            raise ValueError("capacitances must be positive")

    @property
    def E_C(self):
        return charging_energy(self.C0)

    def to_dict(self):
        d = {f"EJ{a}{b}": self.E_J[(a, b)] for a, b in PAIRS}
        d.update({f"C{a}{b}": self.C_junction[(a, b)] for a, b in PAIRS})
        d.update({f"Cg{i + 1}": c for i, c in enumerate(self.C_gate)})
        d["C0"] = self.C0
        d["include_gate"] = self.include_gate
        return d

    @classmethod
    def from_mapping(cls, m):
        """Build from ``EJab`` / ``Cab`` / ``Cgi`` / ``C0`` / ``include_gate`` keys."""
        base = cls()
        ej, cj, cg = dict(base.E_J), dict(base.C_junction), list(base.C_gate)
        c0, gate = base.C0, base.include_gate
        for key, val in m.items():
            k = key.strip()
            if k.startswith("EJ") and len(k) == 4:
                ej[(int(k[2]), int(k[3]))] = float(val)
            elif k.startswith("Cg") and len(k) == 3:
                cg[int(k[2]) - 1] = float(val)
            elif k == "C0":
                c0 = float(val)
            elif k == "include_gate":
                gate = str(val).strip().lower() in ("1", "true", "yes", "on")
            elif k.startswith("C") and len(k) == 3 and k[1:].isdigit():
                cj[(int(k[1]), int(k[2]))] = float(val)
            else:
                raise ValueError(f"unknown circuit parameter {key!r}")
        return cls(ej, cj, tuple(cg), c0, gate)

    @classmethod
    def from_file(cls, path):
        return cls.from_mapping(read_keyvalue(path))


def read_keyvalue(path):
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key = value")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def capacitance_matrix(params=CircuitParams()):
    """Dimensionless node capacitance matrix c = C / C0."""
    C = np.zeros((3, 3))
    for (a, b), c in params.C_junction.items():
        if a == 0:
            C[b - 1, b - 1] += c
        else:
            C[a - 1, a - 1] += c
            C[b - 1, b - 1] += c
            C[a - 1, b - 1] -= c
            C[b - 1, a - 1] -= c
    if params.include_gate:
        C[np.diag_indices(3)] += params.C_gate
    c = C / params.C0
    if np.any(np.linalg.eigvalsh(c) <= 0):
        raise ValueError("invalid circuit: capacitance matrix not positive definite")
    return c


@dataclass(frozen=True)
class _Structure:
    """Sparse tunnelling layout: H[rows, cols] = amp * exp(i sgn phi[k])."""

    rows: np.ndarray
    cols: np.ndarray
    amp: np.ndarray
    kidx: np.ndarray  # -1 for flux-free junctions
    sgn: np.ndarray
    cinv: np.ndarray
    E_C: float


def _structure(params):
    rows, cols, amp, kidx, sgn = [], [], [], [], []
    for s in range(8):
        for (a, b), ej in params.E_J.items():
            if a == 0:
                # cos(phi_b) couples |n_b=0> and |n_b=1>
                if STATES[s, b - 1] == 0:
                    rows.append(s | (1 << (b - 1)))
                    cols.append(s)
                    amp.append(-ej / 2)
                    kidx.append(-1)
                    sgn.append(0.0)
            elif STATES[s, a - 1] == 0 and STATES[s, b - 1] == 1:
                # e^{i(phi_a - phi_b)}: raise a, lower b, phase e^{i gamma_ab}
                k, sg = _GAMMA[(a, b)]
                rows.append(s + (1 << (a - 1)) - (1 << (b - 1)))
                cols.append(s)
                amp.append(-ej / 2)
                kidx.append(k)
                sgn.append(sg)
    return _Structure(np.array(rows), np.array(cols), np.array(amp), np.array(kidx),
                      np.array(sgn), np.linalg.inv(capacitance_matrix(params)), params.E_C)


def _phases(st, phi):
    k = np.where(st.kidx < 0, 0, st.kidx)
    ph = np.exp(1j * st.sgn * phi[:, k])
    ph[:, st.kidx < 0] = 1.0
    return ph


def charging_diagonal(n_g, params=CircuitParams(), _st=None):
    st = _st or _structure(params)
    d = STATES - np.asarray(n_g, dtype=float)
    return st.E_C * np.einsum("si,ij,sj->s", d, st.cinv, d)


def hamiltonian(phi, n_g, params=CircuitParams(), _st=None, _diag=None):
    """8x8 Hamiltonian at flux ``phi`` (3-vector or (B, 3) batch)."""
    st = _st or _structure(params)
    phi = np.asarray(phi, dtype=float)
    single = phi.ndim == 1
    phi = np.atleast_2d(phi)
    H = np.zeros((len(phi), 8, 8), dtype=complex)
    H[:, np.arange(8), np.arange(8)] = charging_diagonal(n_g, _st=st) if _diag is None else _diag
    t = st.amp * _phases(st, phi)
    H[:, st.rows, st.cols] += t
    H[:, st.cols, st.rows] += np.conj(t)
    return H[0] if single else H


def hamiltonian_partials(phi, params=CircuitParams(), _st=None):
    """dH/dphi_i, shape (3, 8, 8) or (3, B, 8, 8) for a batch."""
    st = _st or _structure(params)
    phi = np.asarray(phi, dtype=float)
    single = phi.ndim == 1
    phi = np.atleast_2d(phi)
    out = np.zeros((3, len(phi), 8, 8), dtype=complex)
    t = st.amp * 1j * st.sgn * _phases(st, phi)
    for k in range(3):
        sel = st.kidx == k
        out[k][:, st.rows[sel], st.cols[sel]] += t[:, sel]
        out[k][:, st.cols[sel], st.rows[sel]] += np.conj(t[:, sel])
    return out[:, 0] if single else out


def inversion_permutation():
    """P |n1 n2 n3> = |1-n1, 1-n2, 1-n3> as a permutation matrix."""
    P = np.zeros((8, 8))
    P[7 - np.arange(8), np.arange(8)] = 1.0
    return P


def canonical_flux(phi):
    return np.mod(np.asarray(phi, dtype=float) + np.pi, 2 * np.pi) - np.pi


class _FluxHamiltonian:
    """Picklable batched H(phi) at fixed n_g."""

    def __init__(self, n_g, params):
        self.st = _structure(params)
        self.n_g = np.asarray(n_g, dtype=float)
        self.diag = charging_diagonal(self.n_g, _st=self.st)

    def __call__(self, phi):
        return hamiltonian(phi, self.n_g, _st=self.st, _diag=self.diag)

    def partials(self, phi):
        return hamiltonian_partials(phi, _st=self.st)


def param_map(n_g, params=CircuitParams()):
    f = _FluxHamiltonian(n_g, params)
    return spectra.ParamMap(evaluate=f, partials=f.partials, lower=[-np.pi] * 3,
                            upper=[np.pi] * 3, periodic=(True, True, True), name="wjc")


def weyl_points(n_g, cfg=spectra.SearchConfig(), params=CircuitParams()):
    """Weyl points between the two lowest bands over the flux torus."""
    return spectra.weyl_points(param_map(n_g, params), 1, cfg)


def weyl_count(n_g, cfg=spectra.SearchConfig(), params=CircuitParams()):
    return len(spectra.find_degeneracies(param_map(n_g, params), 1, cfg))


SCAN_CONFIG = spectra.SearchConfig(seed_grid=16, seeds="minima")


class WeylCounter:
    """Picklable vectorized-by-loop counter over control vectors n_g."""

    def __init__(self, cfg=SCAN_CONFIG, params=CircuitParams()):
        self.cfg = cfg
        self.params = params

    def __call__(self, n_g):
        return weyl_count(n_g, self.cfg, self.params)


def slice_grid(n3, window, resolution):
    (x0, x1), (y0, y1) = window
    return GridSpec((Axis("ng1", x0, x1, resolution), Axis("ng2", y0, y1, resolution)),
                    {"ng3": float(n3)}, order=("ng1", "ng2", "ng3"))


def scan_slice(n3, window, resolution=41, cfg=SCAN_CONFIG, params=CircuitParams(), workers=1):
    grid = slice_grid(n3, window, resolution)
    config = {"params": params.to_dict(), "search": _cfg_dict(cfg)}
    return scan(WeylCounter(cfg, params), grid, workers=workers, model="wjc", config=config)


def _cfg_dict(cfg):
    return {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}


@dataclass
class SwallowtailResult:
    point: np.ndarray
    uncertainty: np.ndarray
    table: list              # (n_g3, area of the 8-region, centroid or None, window)
    bracket: tuple

    def area_at(self, n3):
        """Region area of the trial slice at ``n3`` (None if not sampled)."""
        for z, area, _, _ in self.table:
            if np.isclose(z, n3):
                return area
        return None

    def collapse_monotone(self, steps=3):
        """True if, over the last ``steps`` trial slices ordered by n_g3, the
        region area is non-increasing and the upper end has no region."""
        last = sorted(self.table[-steps:], key=lambda r: r[0])
        areas = [r[1] for r in last]
        monotone = all(a >= b for a, b in zip(areas, areas[1:]))
        return monotone and self.area_at(self.bracket[1]) == 0

    def report(self):
        lines = [f"swallowtail point: ({self.point[0]:.4f}, {self.point[1]:.4f}, {self.point[2]:.4f})",
                 f"uncertainty: ({self.uncertainty[0]:.4f}, {self.uncertainty[1]:.4f}, {self.uncertainty[2]:.4f})",
                 f"bracket ng3: [{self.bracket[0]:.4f}, {self.bracket[1]:.4f}]",
                 "ng3,area8,centroid1,centroid2"]
        for n3, area, c, _ in sorted(self.table, key=lambda r: r[0]):
            cs = ("", "") if c is None else (f"{c[0]:.4f}", f"{c[1]:.4f}")
            lines.append(f"{n3:.5f},{area:.6g},{cs[0]},{cs[1]}")
        return "\n".join(lines)


def locate_swallowtail(init_box=((0.3, 0.5), (0.4, 0.6), (0.6, 0.8)), resolution=41,
                       cell_target=0.005, cfg=SCAN_CONFIG, params=CircuitParams(),
                       workers=1, value=8):
    """Bisect n_g3 for the collapse of the ``value``-point region.

    Each trial slice is a ``resolution``^2 scan over a window of the initial
    box's size, re-centred on the region centroid of the last slice where
    the region was present. Bisection stops once the n_g3 bracket is no wider
    than the slice cell size, and at least ``cell_target`` is reached.
    """
    (x0, x1), (y0, y1), (z0, z1) = init_box
    wx, wy = x1 - x0, y1 - y0
    table = []

    def run(n3, center):
        win = ((center[0] - wx / 2, center[0] + wx / 2), (center[1] - wy / 2, center[1] + wy / 2))
        r = scan_slice(n3, win, resolution, cfg, params, workers)
        area = region_area(r, value)
        c = region_centroid(r, value) if area > 0 else None
        table.append((float(n3), area, c, win))
        logger.info("ng3=%.5f area(%d)=%.3g centroid=%s", n3, value, area, c)
        return area, c

    center = np.array([(x0 + x1) / 2, (y0 + y1) / 2])
    area_lo, c_lo = run(z0, center)
    if area_lo <= 0:
        raise RegionNotBracketed(f"region not bracketed: no {value}-point region at ng3={z0}")
    center = c_lo
    area_hi, _ = run(z1, center)
    if area_hi > 0:
        raise RegionNotBracketed(f"region not bracketed: {value}-point region still present at ng3={z1}")
    lo, hi = z0, z1
    cell = max(wx, wy) / resolution
    while hi - lo > max(cell, cell_target):
        mid = 0.5 * (lo + hi)
        area, c = run(mid, center)
        if area > 0:
            lo, center = mid, c
        else:
            hi = mid
    point = np.array([center[0], center[1], 0.5 * (lo + hi)])
    unc = np.array([wx / resolution, wy / resolution, 0.5 * (hi - lo)])
    return SwallowtailResult(point, unc, table, (lo, hi))
