"""Raster and point-cloud writers.

File formats
------------
CSV raster
    Comment lines ``# key: value`` carrying the grid (one ``# axis:`` line per
    axis, ``# fixed:`` bindings, ``# model:``), then a header row
    ``i,j[,k],<axis labels...>,count`` and one row per cell in C order.
    Coordinates are cell centers written with ``repr`` precision.
JSON manifest
    ``{"model", "grid", "config", "config_hash", "outputs", "versions"}``
    with sorted keys. No timestamps or worker counts, so identical runs write
    identical manifests.
PGM (P2, ASCII)
    2D rasters only; width = second axis, height = first axis, first row is
    the first-axis minimum. ``gray = round(255 * count / max_count)``; invalid
    cells are 0 and announced in a comment line.
"""
import csv
import json
import platform

import numpy as np

from . import __version__


def _fmt(x):
    return repr(float(x))


def write_raster_csv(raster, path):
    grid = raster.grid
    labels = [a.label for a in grid.axes]
    idx_names = ["i", "j", "k"][: grid.ndim]
    centers = [a.centers() for a in grid.axes]
    with open(path, "w", newline="") as fh:
        for a in grid.axes:
            fh.write(f"# axis: {a.label} min={_fmt(a.min)} max={_fmt(a.max)} "
                     f"resolution={a.resolution} periodic={str(a.periodic).lower()}\n")
        fixed = ",".join(f"{k}={_fmt(v)}" for k, v in grid.fixed.items())
        fh.write(f"# fixed: {fixed}\n")
        fh.write(f"# model: {raster.metadata.get('model', '')}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(idx_names + labels + ["count"])
        for index in np.ndindex(*grid.shape):
            coords = [_fmt(centers[d][index[d]]) for d in range(grid.ndim)]
            w.writerow(list(index) + coords + [int(raster.counts[index])])


def read_raster_csv(path):
    """Inverse of :func:`write_raster_csv`; returns (GridSpec, counts)."""
    from .scan import Axis, GridSpec

    axes, fixed = [], {}
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# axis:"):
                parts = line[len("# axis:"):].split()
                kv = dict(p.split("=") for p in parts[1:])
                axes.append(Axis(parts[0], float(kv["min"]), float(kv["max"]),
                                 int(kv["resolution"]), kv["periodic"] == "true"))
            elif line.startswith("# fixed:"):
                body = line[len("# fixed:"):].strip()
                if body:
                    for item in body.split(","):
                        k, v = item.split("=")
                        fixed[k] = float(v)
            elif line.startswith("#"):
                continue
            else:
                rows.append(line.strip().split(","))
    grid = GridSpec(tuple(axes), fixed)
    counts = np.empty(grid.shape, dtype=np.int64)
    for r in rows[1:]:
        idx = tuple(int(x) for x in r[: grid.ndim])
        counts[idx] = int(r[-1])
    return grid, counts


def write_pgm(raster, path):
    if raster.dims != 2:
        raise ValueError("PGM export needs a 2D raster")
    c = raster.counts
    vmax = max(int(c.max()), 1)
    gray = np.where(c >= 0, np.rint(255.0 * np.clip(c, 0, None) / vmax), 0).astype(int)
    n0, n1 = c.shape
    with open(path, "w") as fh:
        fh.write("P2\n")
        fh.write(f"# gray = round(255*count/{vmax}); invalid cells = 0 "
                 f"({int((c < 0).sum())} invalid)\n")
        fh.write(f"{n1} {n0}\n255\n")
        for row in gray:
            fh.write(" ".join(str(v) for v in row) + "\n")


def write_manifest(path, *, model, grid=None, config=None, outputs=()):
    doc = {
        "model": model,
        "grid": grid.to_dict() if grid is not None else None,
        "config": config or {},
        "outputs": sorted(str(o) for o in outputs),
        "versions": {
            "weyl_atlas": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    from .scan import config_hash

    doc["config_hash"] = config_hash(doc["config"])
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return doc


def write_points_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])
