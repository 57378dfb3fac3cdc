"""Control-space scanning: Weyl phase diagrams as rasters of Weyl-point counts.

A counter maps a control vector to a nonnegative integer. Scans evaluate it at
cell centers of a :class:`GridSpec` and return a :class:`PhaseRaster`;
:func:`extract_boundaries` then finds fold cells, junction (cusp/crossing)
candidates and connected regions.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

logger = logging.getLogger(__name__)

INVALID = -1


@dataclass(frozen=True)
class Axis:
    label: str
    min: float
    max: float
    resolution: int
    periodic: bool = False

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError(f"axis {self.label!r}: resolution must be >= 2")
        if not self.min < self.max:
            raise ValueError(f"axis {self.label!r}: min must be < max")

    @property
    def step(self):
        return (self.max - self.min) / self.resolution

    def centers(self):
        return self.min + (np.arange(self.resolution) + 0.5) * self.step


@dataclass(frozen=True)
class GridSpec:
    """Scan axes plus fixed-coordinate bindings.

    ``order`` fixes the layout of the control vector handed to the counter;
    every label in it must be either a scan axis or a fixed binding.
    """

    axes: tuple
    fixed: dict = field(default_factory=dict)
    order: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "fixed", dict(self.fixed))
        labels = [a.label for a in self.axes]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate axis labels")
        if self.order is None:
            object.__setattr__(self, "order", tuple(labels) + tuple(self.fixed))
        else:
            object.__setattr__(self, "order", tuple(self.order))
        missing = set(self.order) - set(labels) - set(self.fixed)
        if missing:
            raise ValueError(f"unbound control coordinates: {sorted(missing)}")

    @property
    def shape(self):
        return tuple(a.resolution for a in self.axes)

    @property
    def ndim(self):
        return len(self.axes)

    @property
    def cell_volume(self):
        return float(np.prod([a.step for a in self.axes]))

    def points(self):
        """Control vectors at all cell centers, shape ``shape + (len(order),)``."""
        mesh = np.meshgrid(*[a.centers() for a in self.axes], indexing="ij")
        cols = []
        for label in self.order:
            if label in self.fixed:
                cols.append(np.full(self.shape, float(self.fixed[label])))
            else:
                cols.append(mesh[[a.label for a in self.axes].index(label)])
        return np.stack(cols, axis=-1)

    def to_dict(self):
        return {
            "axes": [
                {"label": a.label, "min": a.min, "max": a.max,
                 "resolution": a.resolution, "periodic": a.periodic}
                for a in self.axes
            ],
            "fixed": {k: float(v) for k, v in self.fixed.items()},
            "order": list(self.order),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(axes=tuple(Axis(**a) for a in d["axes"]), fixed=d.get("fixed", {}),
                   order=tuple(d["order"]) if d.get("order") else None)


@dataclass
class PhaseRaster:
    counts: np.ndarray
    grid: GridSpec
    metadata: dict = field(default_factory=dict)
    invalid: list = field(default_factory=list)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != self.grid.shape:
            raise ValueError(f"raster shape {self.counts.shape} != grid shape {self.grid.shape}")
        if np.any(self.counts < INVALID):
            raise ValueError("counts must be >= 0 (or -1 for invalid cells)")

    @property
    def dims(self):
        return self.counts.ndim

    def values(self):
        """Distinct valid count values present."""
        v = np.unique(self.counts)
        return [int(x) for x in v if x >= 0]


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _eval_chunk(counter, pts, vectorized):
    if vectorized:
        return np.asarray(counter(pts), dtype=np.int64), []
    out = np.empty(len(pts), dtype=np.int64)
    errors = []
    for i, p in enumerate(pts):
        try:
            out[i] = int(counter(p))
        except Exception as exc:  # noqa: BLE001 - any counter failure marks the cell
            out[i] = INVALID
            errors.append((i, repr(exc)))
    return out, errors


def scan(counter, grid, workers=1, vectorized=False, model="", config=None):
    """Evaluate ``counter`` at every cell center of ``grid``.

    With ``vectorized=True`` the counter receives an ``(M, d)`` array of control
    vectors and returns ``M`` counts. Work is split into row chunks; assembly
    order is fixed, so the raster does not depend on ``workers``.
    """
    pts = grid.points().reshape(-1, len(grid.order))
    n_chunks = grid.shape[0]
    chunks = np.array_split(np.arange(len(pts)), n_chunks)
    results = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_eval_chunk, counter, pts[idx], vectorized) for idx in chunks]
            results = [f.result() for f in futs]
    else:
        results = [_eval_chunk(counter, pts[idx], vectorized) for idx in chunks]
    counts = np.empty(len(pts), dtype=np.int64)
    invalid = []
    for idx, (vals, errs) in zip(chunks, results):
        counts[idx] = vals
        for i, msg in errs:
            flat = int(idx[i])
            invalid.append((tuple(int(k) for k in np.unravel_index(flat, grid.shape)), msg))
    for cell, msg in invalid:
        logger.warning("counter failed at cell %s: %s", cell, msg)
    meta = {
        "model": model,
        "config_hash": config_hash(config or {}),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    return PhaseRaster(counts.reshape(grid.shape), grid, meta, invalid)


def scan2d(counter, grid, **kw):
    if grid.ndim != 2:
        raise ValueError("scan2d needs a 2-axis grid")
    return scan(counter, grid, **kw)


def scan3d(counter, grid, **kw):
    if grid.ndim != 3:
        raise ValueError("scan3d needs a 3-axis grid")
    return scan(counter, grid, **kw)


@dataclass
class BoundaryFeatures:
    fold_cells: np.ndarray          # (K, 2) cell indices
    junction_cells: np.ndarray      # (J, 2) cell indices
    junction_clusters: list         # list of (J_i, 2) arrays
    fold_arcs: list                 # fold-cell components after removing junctions
    region_table: dict              # count -> list of component areas (descending)
    invalid_cells: np.ndarray
    cluster_kinds: list = field(default_factory=list)   # "cusp" or "crossing" per cluster

    def cusp_clusters(self):
        return [c for c, k in zip(self.junction_clusters, self.cluster_kinds) if k == "cusp"]


def _window_stack(counts, r):
    """All (2r+1)^2 shifted copies of counts, padded with INVALID."""
    pad = np.pad(counts, r, mode="constant", constant_values=INVALID)
    n0, n1 = counts.shape
    return np.stack([pad[r + di:r + di + n0, r + dj:r + dj + n1]
                     for di in range(-r, r + 1) for dj in range(-r, r + 1)])


def _fold_arcs(c, junction):
    """Fold arcs as chains of cell-boundary segments joined at lattice corners.

    A segment separates two valid cells with different counts; segments
    touching a junction cell are dropped. Two fold lines bounding a one-cell
    wide phase share no corner, so they stay separate arcs.
    """
    n0, n1 = c.shape
    nodes = (n0 + 1) * (n1 + 1)
    a_list, b_list, cells = [], [], []

    def corner(i, j):
        return i * (n1 + 1) + j

    for (di, dj) in ((0, 1), (1, 0)):
        x, y = c[: n0 - di, : n1 - dj], c[di:, dj:]
        keep = (x != y) & (x >= 0) & (y >= 0)
        keep &= ~junction[: n0 - di, : n1 - dj] & ~junction[di:, dj:]
        for i, j in np.argwhere(keep):
            if dj:   # vertical segment between (i, j) and (i, j+1)
                a_list.append(corner(i, j + 1))
                b_list.append(corner(i + 1, j + 1))
            else:    # horizontal segment between (i, j) and (i+1, j)
                a_list.append(corner(i + 1, j))
                b_list.append(corner(i + 1, j + 1))
            cells.append(((i, j), (i + di, j + dj)))
    if not cells:
        return []
    g = coo_matrix((np.ones(len(a_list)), (a_list, b_list)), shape=(nodes, nodes))
    _, lab = connected_components(g, directed=False)
    groups = {}
    for a, pair in zip(a_list, cells):
        groups.setdefault(lab[a], set()).update(pair)
    return [np.array(sorted(v)) for _, v in sorted(groups.items())]


def extract_boundaries(raster, tip_radius=3, tip_fraction=0.25):
    """Fold cells, junction candidates and region table of a 2D raster.

    Junction candidates are cells whose 3x3 window holds >= 3 distinct counts
    (fold crossings, multi-fold points) plus tip cells: fold cells where, inside
    a window of half-width ``tip_radius``, one side of the two-count boundary
    occupies at most ``tip_fraction`` of the cells. Tips are where a phase
    tapers to a point, the raster signature of a cusp.
    """
    if raster.dims != 2:
        raise ValueError("extract_boundaries needs a 2D raster")
    c = raster.counts
    valid = c >= 0
    n0, n1 = c.shape

    fold = np.zeros_like(valid)
    for axis in (0, 1):
        a = np.take(c, range(n0 - 1) if axis == 0 else range(n1 - 1), axis=axis)
        b = np.take(c, range(1, n0) if axis == 0 else range(1, n1), axis=axis)
        diff = (a != b) & (a >= 0) & (b >= 0)
        if axis == 0:
            fold[:-1, :] |= diff
            fold[1:, :] |= diff
        else:
            fold[:, :-1] |= diff
            fold[:, 1:] |= diff

    w3 = _window_stack(c, 1)
    w3s = np.sort(w3, axis=0)
    distinct = np.zeros(c.shape, dtype=int)
    prev = np.full(c.shape, INVALID - 1)
    for layer in w3s:
        new = (layer != prev) & (layer >= 0)
        distinct += new
        prev = layer
    junction = (distinct >= 3) & valid

    wr = _window_stack(c, tip_radius)
    tips = np.zeros_like(valid)
    r = tip_radius
    for i, j in np.argwhere(fold & ~junction):
        # windows clipped by the raster edge give spurious minority fractions
        if i < r or j < r or i >= n0 - r or j >= n1 - r:
            continue
        win = wr[:, i, j]
        win = win[win >= 0]
        vals, cnt = np.unique(win, return_counts=True)
        if len(vals) != 2:
            continue
        if cnt.min() / cnt.sum() <= tip_fraction:
            tips[i, j] = True
    junction |= tips

    eight = np.ones((3, 3), dtype=bool)
    lab, nlab = ndimage.label(junction, structure=eight)
    clusters = [np.argwhere(lab == k) for k in range(1, nlab + 1)]
    # a tapering phase borders only two counts; >= 3 counts mark crossings
    kinds = ["cusp" if tips[lab == k].any() else "crossing" for k in range(1, nlab + 1)]
    arcs = _fold_arcs(c, junction)

    cell = raster.grid.cell_volume
    four = ndimage.generate_binary_structure(2, 1)
    table = {}
    for v in raster.values():
        lab_v, nv = ndimage.label(c == v, structure=four)
        sizes = ndimage.sum_labels(np.ones_like(c), lab_v, index=range(1, nv + 1))
        table[v] = sorted((float(s) * cell for s in np.atleast_1d(sizes)), reverse=True)
    return BoundaryFeatures(
        fold_cells=np.argwhere(fold),
        junction_cells=np.argwhere(junction),
        junction_clusters=clusters,
        fold_arcs=arcs,
        region_table=table,
        invalid_cells=np.argwhere(~valid),
        cluster_kinds=kinds,
    )


def region_area(raster, value):
    """Area of the largest connected component with the given count (0 if absent)."""
    mask = raster.counts == value
    if not mask.any():
        return 0.0
    structure = ndimage.generate_binary_structure(raster.dims, 1)
    lab, n = ndimage.label(mask, structure=structure)
    sizes = np.bincount(lab.ravel())[1:]
    return float(sizes.max()) * raster.grid.cell_volume


def region_centroid(raster, value):
    """Centroid (in grid coordinates) of the largest component with ``value``, or None."""
    mask = raster.counts == value
    if not mask.any():
        return None
    structure = ndimage.generate_binary_structure(raster.dims, 1)
    lab, n = ndimage.label(mask, structure=structure)
    sizes = np.bincount(lab.ravel())[1:]
    k = int(np.argmax(sizes)) + 1
    idx = np.argwhere(lab == k).mean(axis=0)
    return np.array([a.min + (i + 0.5) * a.step for a, i in zip(raster.grid.axes, idx)])
