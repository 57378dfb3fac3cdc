"""``weyl-atlas`` command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 invalid arguments,
3 swallowtail region not bracketed.
"""
from __future__ import annotations

import json
import logging
import pathlib
import sys

import click
import numpy as np

from . import canonical, classd, export, spectra, wjc
from .scan import Axis, GridSpec, extract_boundaries, scan

EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_NOT_BRACKETED = 3


# --- argument parsing helpers -------------------------------------------

def parse_grid(text, ndim=None):
    try:
        res = [int(x) for x in text.lower().split("x")]
    except ValueError:
        raise click.BadParameter(f"grid must look like 201 or 201x201, got {text!r}")
    if ndim is not None:
        if len(res) == 1:
            res = res * ndim
        if len(res) != ndim:
            raise click.BadParameter(f"grid needs {ndim} resolutions, got {text!r}")
    if any(r < 2 for r in res):
        raise click.BadParameter("grid resolutions must be >= 2")
    return res


def _interval(text):
    lo, hi = (float(x) for x in text.split(":"))
    if not lo < hi:
        raise ValueError
    return lo, hi


def parse_ranges(text):
    """``t2=-2:2,t3=-2:2`` or ``-2:2,-2:2`` -> list of (label or None, (lo, hi))."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        label, _, body = item.rpartition("=")
        try:
            out.append((label or None, _interval(body)))
        except ValueError:
            raise click.BadParameter(f"bad range {item!r}; expected [label=]min:max")
    return out


def parse_bindings(text):
    out = {}
    for item in filter(None, (s.strip() for s in (text or "").split(","))):
        k, sep, v = item.partition("=")
        try:
            if not sep:
                raise ValueError
            out[k.strip()] = float(v)
        except ValueError:
            raise click.BadParameter(f"bad binding {item!r}; expected label=value")
    return out


def parse_ng(text):
    """``a,b,c`` or the shorthand ``0.5+0.05e`` (= 0.5*1 + 0.05*e)."""
    t = text.replace(" ", "")
    try:
        if t.endswith("e"):
            base, _, coef = t[:-1].partition("+")
            return float(base) * np.ones(3) + float(coef or 1.0) * wjc.E_DIRECTION
        v = np.array([float(x) for x in t.split(",")])
    except ValueError:
        raise click.BadParameter(f"bad offset charge {text!r}")
    if v.shape != (3,):
        raise click.BadParameter("offset charge needs three components")
    return v


def _out_dir(out):
    p = pathlib.Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _boundary_summary(raster):
    f = extract_boundaries(raster)
    centers = [a.centers() for a in raster.grid.axes]

    def loc(cells):
        m = np.asarray(cells).mean(axis=0)
        return [float(np.interp(m[d], np.arange(len(centers[d])), centers[d])) for d in range(2)]

    return {
        "fold_cells": int(len(f.fold_cells)),
        "fold_arcs": len(f.fold_arcs),
        "junction_clusters": [{"cells": int(len(c)), "center": loc(c), "kind": k}
                              for c, k in zip(f.junction_clusters, f.cluster_kinds)],
        "regions": {str(k): v for k, v in f.region_table.items()},
        "invalid_cells": int(len(f.invalid_cells)),
    }


def _write_raster_outputs(raster, out, stem, model, config):
    names = [f"{stem}.csv"]
    export.write_raster_csv(raster, out / names[0])
    if raster.dims == 2:
        names.append(f"{stem}.pgm")
        export.write_pgm(raster, out / names[-1])
        names.append(f"{stem}_boundaries.json")
        with open(out / names[-1], "w") as fh:
            json.dump(_boundary_summary(raster), fh, indent=2, sort_keys=True)
            fh.write("\n")
    export.write_manifest(out / "manifest.json", model=model, grid=raster.grid, config=config,
                          outputs=names)
    return names


def _run(fn):
    """Map library exceptions onto the exit-code contract."""
    try:
        return fn()
    except click.ClickException:
        raise
    except wjc.RegionNotBracketed as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NOT_BRACKETED)
    except Exception as exc:  # noqa: BLE001
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


# --- config files ---------------------------------------------------------

def _load_config(ctx, param, path):
    if path is None:
        return None
    try:
        raw = wjc.read_keyvalue(path)
    except (OSError, ValueError) as exc:
        raise click.BadParameter(str(exc))
    # keys are flag names without dashes, e.g. "range", "seed-grid", "include-gate"
    known = {}
    for cmd in [main, *main.commands.values()]:
        for prm in cmd.params:
            for opt in list(prm.opts) + list(getattr(prm, "secondary_opts", [])):
                known[opt.lstrip("-")] = prm.name
    values = {}
    for k, v in raw.items():
        key = k.replace("_", "-")
        if key not in known:
            raise click.BadParameter(f"unknown config key {k!r}")
        if key.startswith("no-") and key[3:] in known:
            v = "false" if v.lower() in ("1", "true", "yes", "on") else "true"
        values[known[key]] = v
    top = {k: v for k, v in values.items() if k == "workers"}
    ctx.default_map = {**top, **{name: values for name in main.commands}}
    return path


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False), callback=_load_config,
              is_eager=True, expose_value=False, help="key=value file with defaults for any flag.")
@click.option("--workers", type=click.IntRange(min=1), default=1, envvar="WEYL_ATLAS_WORKERS",
              show_default=True, help="Worker processes for scans (never changes outputs).")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx, workers, verbose):
    """Weyl phase diagrams: canonical oracles, Josephson circuit, class-D model."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"workers": workers}


# --- canonical --------------------------------------------------------------

@main.command("canonical")
@click.option("--class", "cls", required=True,
              type=click.Choice(["fold", "cusp", "swallowtail", "butterfly"]))
@click.option("--form", type=click.Choice(["depressed", "table"]), default="depressed", show_default=True,
              help="Control coordinates of the depressed polynomial or the table form.")
@click.option("--m", "dim", type=int, default=None, help="Control dimension (default: minimum).")
@click.option("--slice", "slice_", default="", help="Fixed coordinates, e.g. t1=-2.")
@click.option("--grid", default="101", show_default=True, help="Resolution(s), e.g. 201x201.")
@click.option("--range", "range_", required=True, help="Scan ranges, e.g. t2=-2:2,t3=-2:2.")
@click.option("--tol", type=float, default=canonical.DEFAULT_TOL, show_default=True)
@click.option("--out", default="out/canonical", show_default=True, type=click.Path(file_okay=False))
@click.pass_context
def cmd_canonical(ctx, cls, form, dim, slice_, grid, range_, tol, out):
    """Pre-image count raster of a canonical singularity family."""
    try:
        klass = canonical.CanonicalClass(cls, dim, form)
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    labels = [f"t{i + 1}" for i in range(klass.m)]
    fixed = parse_bindings(slice_)
    ranges = parse_ranges(range_)
    if klass.m == 1:
        fixed = {("t1" if k == "t" else k): v for k, v in fixed.items()}
        ranges = [("t1" if k == "t" else k, r) for k, r in ranges]
    free = [lab for lab in labels if lab not in fixed]
    named = {k: r for k, r in ranges if k}
    unnamed = [r for k, r in ranges if not k]
    axes_spec = []
    for lab in free:
        if lab in named:
            axes_spec.append((lab, named.pop(lab)))
        elif unnamed:
            axes_spec.append((lab, unnamed.pop(0)))
    if named or unnamed or set(fixed) - set(labels):
        raise click.BadParameter(f"ranges/slices must bind each of {labels} exactly once")
    res = parse_grid(grid, len(axes_spec))
    if len(axes_spec) + len(fixed) != klass.m or not axes_spec:
        raise click.BadParameter(f"{cls} needs {klass.m} coordinates ({labels}) bound by --range/--slice")
    axes = tuple(Axis(lab, lo, hi, r) for (lab, (lo, hi)), r in zip(axes_spec, res))
    gs = GridSpec(axes, fixed, order=tuple(labels))
    config = {"subcommand": "canonical", "class": cls, "form": form, "m": klass.m,
              "slice": fixed, "grid": res, "tol": tol}

    def work():
        raster = canonical.canonical_raster(klass, gs, tol, workers=ctx.obj["workers"])
        o = _out_dir(out)
        names = _write_raster_outputs(raster, o, "raster", f"canonical:{cls}", config)
        click.echo(f"counts: {raster.values()}")
        if raster.dims == 2:
            n = len(extract_boundaries(raster).junction_clusters)
            click.echo(f"junction clusters: {n}")
        click.echo(f"wrote {', '.join(names)} and manifest.json to {o}")

    _run(work)


# --- Weyl-Josephson circuit --------------------------------------------------

def _circuit(params_path, gate):
    try:
        p = wjc.CircuitParams.from_file(params_path) if params_path else wjc.CircuitParams()
    except (OSError, ValueError) as exc:
        raise click.BadParameter(str(exc))
    if gate is not None:
        p = wjc.CircuitParams(p.E_J, p.C_junction, p.C_gate, p.C0, gate)
    return p


def _windows(text, n):
    r = parse_ranges(text)
    if len(r) != n:
        raise click.BadParameter(f"window needs {n} ranges")
    return [x for _, x in r]


@main.command("wjc")
@click.argument("action", type=click.Choice(["weyl", "scan2d", "scan3d", "swallowtail"]))
@click.option("--ng", default="0.5+0.05e", show_default=True, help="Offset charges a,b,c or 0.5+0.05e.")
@click.option("--ng3", type=float, default=0.6, show_default=True, help="Slice for scan2d.")
@click.option("--window", default=None, help="n_g ranges, e.g. 0.3:0.55,0.35:0.6[,0.6:0.8].")
@click.option("--grid", default=None, help="Slice/box resolution (scan2d 61, scan3d 11, swallowtail 41).")
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Circuit parameter file (key=value).")
@click.option("--include-gate/--no-include-gate", "gate", default=None,
              help="Add gate capacitances to the capacitance-matrix diagonal (default: on).")
@click.option("--seed-grid", type=click.IntRange(min=2), default=None,
              help="Seed grid per flux axis (weyl 12, scans 16).")
@click.option("--seeds", type=click.Choice(["all", "minima"]), default=None)
@click.option("--out", default="out/wjc", show_default=True, type=click.Path(file_okay=False))
@click.pass_context
def cmd_wjc(ctx, action, ng, ng3, window, grid, params_path, gate, seed_grid, seeds, out):
    """Weyl points, phase diagrams and the swallowtail point of the circuit."""
    params = _circuit(params_path, gate)
    base = spectra.SearchConfig() if action == "weyl" else wjc.SCAN_CONFIG
    cfg = spectra.SearchConfig(seed_grid=seed_grid or base.seed_grid, seeds=seeds or base.seeds)
    workers = ctx.obj["workers"]
    config = {"subcommand": "wjc", "action": action, "params": params.to_dict(),
              "search": wjc._cfg_dict(cfg)}

    if action == "weyl":
        n_g = parse_ng(ng)
        config["ng"] = [float(x) for x in n_g]

        def work():
            pts = wjc.weyl_points(n_g, cfg, params)
            o = _out_dir(out)
            rows = [[*map(float, w.position), w.charge if w.charge is not None else "", w.residual_gap]
                    for w in pts]
            export.write_points_csv(o / "weyl_points.csv", ["phi1", "phi2", "phi3", "charge", "gap"], rows)
            export.write_manifest(o / "manifest.json", model="wjc", config=config, outputs=["weyl_points.csv"])
            charges = [w.charge for w in pts]
            click.echo(f"{len(pts)} Weyl points, charge sum {sum(c for c in charges if c is not None)}")
            for w in pts:
                click.echo(f"  phi=({w.position[0]:+.5f}, {w.position[1]:+.5f}, {w.position[2]:+.5f}) "
                           f"charge={w.charge} gap={w.residual_gap:.2e}")

        return _run(work)

    if action == "scan2d":
        (x0, x1), (y0, y1) = _windows(window or "0.3:0.55,0.35:0.6", 2)
        res = parse_grid(grid or "61", 2)
        gs = GridSpec((Axis("ng1", x0, x1, res[0]), Axis("ng2", y0, y1, res[1])), {"ng3": ng3},
                      order=("ng1", "ng2", "ng3"))
    elif action == "scan3d":
        (x0, x1), (y0, y1), (z0, z1) = _windows(window or "0.3:0.5,0.4:0.6,0.6:0.8", 3)
        res = parse_grid(grid or "11", 3)
        gs = GridSpec((Axis("ng1", x0, x1, res[0]), Axis("ng2", y0, y1, res[1]),
                       Axis("ng3", z0, z1, res[2])))
    else:
        box = _windows(window or "0.3:0.5,0.4:0.6,0.6:0.8", 3)
        res = parse_grid(grid or "41", 1)[0]
        config.update(box=[list(b) for b in box], resolution=res)

        def work():
            result = wjc.locate_swallowtail(tuple(box), res, cfg=cfg, params=params, workers=workers)
            o = _out_dir(out)
            (o / "swallowtail.txt").write_text(result.report() + "\n")
            export.write_manifest(o / "manifest.json", model="wjc", config=config, outputs=["swallowtail.txt"])
            click.echo(result.report())

        return _run(work)

    config["grid"] = res

    def work():
        raster = scan(wjc.WeylCounter(cfg, params), gs, workers=workers, model="wjc", config=config)
        o = _out_dir(out)
        names = _write_raster_outputs(raster, o, action, "wjc", config)
        click.echo(f"counts: {raster.values()}, invalid cells: {len(raster.invalid)}")
        click.echo(f"wrote {', '.join(names)} and manifest.json to {o}")

    _run(work)


# --- class-D model ----------------------------------------------------------

@main.command("bdg")
@click.argument("action", type=click.Choice(["surface", "scan", "pfaffian-check"]))
@click.option("--ns", "n_s", type=click.IntRange(min=1), default=6, show_default=True)
@click.option("--grid", default=None, help="surface: N (N^3 samples, default 100); scan: AxB (default 200x200).")
@click.option("--ngamma", type=click.IntRange(min=16), default=200, show_default=True)
@click.option("--alpha", "alpha_range", default="-1:0.5", show_default=True)
@click.option("--beta", "beta_range", default="-1:0.5", show_default=True)
@click.option("--samples", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="RNG seed for pfaffian-check.")
@click.option("--out", default="out/bdg", show_default=True, type=click.Path(file_okay=False))
@click.pass_context
def cmd_bdg(ctx, action, n_s, grid, ngamma, alpha_range, beta_range, samples, seed, out):
    """Pfaffian zero-energy degeneracy data of the class-D model."""
    config = {"subcommand": "bdg", "action": action, "n_s": n_s}
    if action == "surface":
        n = parse_grid(grid or "100", 1)[0]
        config["grid"] = n

        def work():
            pts = classd.degeneracy_surface(n_s, n)
            o = _out_dir(out)
            export.write_points_csv(o / "surface.csv", ["alpha", "beta", "gamma"], pts.tolist())
            export.write_manifest(o / "manifest.json", model="bdg", config=config, outputs=["surface.csv"])
            click.echo(f"{len(pts)} sign-change cells written to {o / 'surface.csv'}")

        return _run(work)

    if action == "scan":
        res = parse_grid(grid or "200x200", 2)
        try:
            a, b = _interval(alpha_range), _interval(beta_range)
        except ValueError:
            raise click.BadParameter("angle ranges must look like min:max")
        config.update(grid=res, n_gamma=ngamma, alpha=list(a), beta=list(b))

        def work():
            raster = classd.phase_raster(n_s, a, b, tuple(res), ngamma, workers=ctx.obj["workers"])
            o = _out_dir(out)
            names = _write_raster_outputs(raster, o, "phase", "bdg", config)
            click.echo(f"counts: {raster.values()}")
            click.echo(f"wrote {', '.join(names)} and manifest.json to {o}")

        return _run(work)

    config.update(samples=samples, seed=seed)

    def work():
        rng = np.random.default_rng(seed)
        ang = rng.uniform(-np.pi, np.pi, (samples, 3))
        H = classd.bdg_hamiltonian(n_s, ang)
        pf = classd.pfaffian(classd.majorana_batch(n_s, ang))
        det = np.linalg.det(H).real
        sign = (-1) ** n_s
        rel = float(np.max(np.abs(pf ** 2 - sign * det) / np.abs(det)))
        o = _out_dir(out)
        text = (f"samples: {samples}\nn_s: {n_s}\n"
                f"identity: Pf(A)^2 = {'+' if sign > 0 else '-'}det(H)\n"
                f"max relative |Pf^2 - {'' if sign > 0 else '-'}det| / |det|: {rel:.3e}\n")
        (o / "pfaffian_check.txt").write_text(text)
        export.write_manifest(o / "manifest.json", model="bdg", config=config, outputs=["pfaffian_check.txt"])
        click.echo(text.rstrip())
        if rel >= 1e-8:
            raise RuntimeError("Pfaffian identity violated")

    _run(work)


if __name__ == "__main__":
    main()
