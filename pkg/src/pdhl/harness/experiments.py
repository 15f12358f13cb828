"""Experiment driver: sweeps, per-row status, CSV + manifest + plots.

:func:`run_experiment` expands a validated ExperimentConfig into work
items (one per sweep point, crossed with ``p`` and ``which`` for
scaling runs), executes them on a bounded thread pool, and writes

* ``results.csv`` -- one fixed schema per experiment kind,
* ``manifest.json`` -- config hash, seed, tool version, row counts, the
  CSV's sha256, and any exponent fits,
* ``plot-*.svg`` -- a log-log scatter with fitted line per fit group,
* ``snap-*.pdhl1`` -- optional per-point field snapshots.

A failed point (a stalled solve, say) becomes a row with an
``error:<Type>`` status instead of aborting the sweep; rows are
buffered and written in config order no matter how the pool schedules
them.  Every numeric input of a row derives only from the config and
the row's own indices, so reruns -- at any thread count -- reproduce
the CSV byte for byte.
"""

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .. import __version__
from ..constants_lab import (
    cell_average,
    cell_gradient_norm,
    estimate_constant,
    fit_exponent,
    periodic_cell,
    scale_params,
    witness_psi,
    witness_ratio,
)
from ..correctors import (
    build_corrector,
    corrector_norm_report,
    exterior_profile_ball,
    exterior_profile_numeric,
)
from ..discretization import (
    FaceField,
    assemble_laplacian,
    assemble_rhs,
    box_mask,
    dirichlet_rhs,
    discrete_gradient,
    face_lp_norm,
    lp_norm,
    rasterize,
    write_snapshot,
)
from ..errors import (
    ConfigInvalid,
    NonpositiveData,
    OutputUnwritable,
    PdhlError,
    TooFewPoints,
    TruncationTooSmall,
    UnresolvedShape,
)
from ..geometry import OUTER_BOUNDARY, build_domain, random_plan, uniform_plan
from ..intermediate import approximation_error, build_potential, solve_schrodinger
from ..linsolve import auto_preconditioner, conjugate_gradient, smallest_eigenvalue
from .reports import emit_plot, write_csv, write_manifest

__all__ = ["Report", "SCHEMAS", "run_experiment"]

SCHEMAS = {
    "solve": (
        "point", "dim", "eps", "eta", "n", "trial", "sigma", "regime",
        "grad_ratio", "iterations", "status",
    ),
    "corrector": (
        "point", "dim", "eps", "eta", "n", "sigma", "regime",
        "chi_minus_one", "grad_cell_mean", "grad_cell_max", "status",
    ),
    "rate": (
        "point", "dim", "eps", "eta", "n", "sigma", "regime", "error",
        "slope", "status",
    ),
    "scaling": (
        "point", "dim", "eps", "eta", "n", "p", "which", "sigma", "regime",
        "estimate", "coarse_max", "slope", "status",
    ),
    "eig": (
        "point", "dim", "eps", "eta", "n", "sigma", "regime", "lambda1",
        "slope", "status",
    ),
    "witness": (
        "point", "dim", "eps", "eta", "cell", "sigma", "regime", "psi_avg",
        "psi_scaled", "grad_l2", "grad_scaled", "status",
    ),
}

# columns fitted per kind (y against eta under fit.x)
_FIT_COLUMN = {"rate": "error", "eig": "lambda1", "scaling": "estimate"}


@dataclass(frozen=True)
class Report:
    """Everything one run produced, with file paths for the artifacts."""

    kind: str
    out_dir: str
    csv_path: str
    manifest_path: str
    svg_paths: tuple
    rows: tuple
    fits: dict
    manifest: dict

    @property
    def all_ok(self):
        return all(r["status"] == "ok" for r in self.rows)

    @property
    def failed_rows(self):
        return tuple(r for r in self.rows if r["status"].startswith("error:"))


@dataclass(frozen=True)
class _WorkItem:
    order: int
    point: object
    p: float = None
    which: str = None


@dataclass
class _ItemResult:
    order: int
    rows: list
    field: object


@dataclass
class _Context:
    config: object
    shape: object
    plan: object
    profiles: object


def _base_row(cfg, item):
    """Schema row with the sweep coordinates filled, the rest blank."""
    row = {c: "" for c in SCHEMAS[cfg.kind]}
    pt = item.point
    row["point"] = pt.index
    row["dim"] = cfg.dim
    grid_col = "cell" if cfg.kind == "witness" else "n"
    row[grid_col] = pt.grid
    if pt.eps is not None:
        row["eps"] = pt.eps
    if pt.eta is not None:
        row["eta"] = pt.eta
        sp = scale_params(cfg.dim, pt.eps, pt.eta)
        row["sigma"] = sp.sigma
        row["regime"] = sp.regime
    if item.p is not None:
        row["p"] = item.p
    if item.which is not None:
        row["which"] = item.which
    return row


def _domain_and_mask(ctx, pt):
    cfg = ctx.config
    if ctx.shape is None:
        lo = cfg.outer[0][0]
        return None, box_mask(pt.grid, cfg.dim, side=cfg.side(), origin=lo)
    dom = build_domain(cfg.outer, pt.eps, pt.eta, ctx.plan)
    return dom, rasterize(dom, pt.grid)


def _boundary_trace(cfg, mask):
    """Dirichlet data on the outer boundary: zero or the x_1 coordinate."""
    g = np.zeros(mask.shape)
    if cfg.boundary == "linear":
        coords = mask.node_coords(0)
        sl = (slice(None),) + (None,) * (cfg.dim - 1)
        outer = mask.flags == OUTER_BOUNDARY
        g[outer] = np.broadcast_to(coords[sl], mask.shape)[outer]
    return g


# ---------------------------------------------------------------------------
# per-kind runners


def _run_solve(ctx, item):
    cfg = ctx.config
    pt = item.point
    _, mask = _domain_and_mask(ctx, pt)
    A = assemble_laplacian(mask)
    M = auto_preconditioner(A)
    rows = []
    field = None
    for i in range(cfg.n_random):
        row = _base_row(cfg, item)
        row["trial"] = i
        rng = np.random.default_rng([cfg.seed, pt.index, i])
        comps = []
        for a in range(cfg.dim):
            shp = list(mask.shape)
            shp[a] -= 1
            comps.append(rng.standard_normal(shp))
        f = FaceField(tuple(comps))
        try:
            x, rep = conjugate_gradient(A, assemble_rhs(mask, f=f),
                                        tol=cfg.tol, M=M)
            u = mask.embed(x)
            row["grad_ratio"] = face_lp_norm(
                discrete_gradient(u, mask), 2, mask
            ) / face_lp_norm(f, 2, mask)
            row["iterations"] = rep.iterations
            row["status"] = "ok"
            field = u
        except PdhlError as exc:
            row["status"] = f"error:{type(exc).__name__}"
        rows.append(row)
    return _ItemResult(item.order, rows, field)


def _run_corrector(ctx, item):
    cfg = ctx.config
    dom, mask = _domain_and_mask(ctx, item.point)
    chi = build_corrector(dom, mask, ctx.profiles)
    rep = corrector_norm_report(chi, mask, p=2)
    row = _base_row(cfg, item)
    row["chi_minus_one"] = rep["chi_minus_one"]
    row["grad_cell_mean"] = rep["grad_cell_mean"]
    row["grad_cell_max"] = rep["grad_cell_max"]
    row["status"] = "ok"
    return _ItemResult(item.order, [row], chi.values)


def _run_rate(ctx, item):
    cfg = ctx.config
    pt = item.point
    dom, mask = _domain_and_mask(ctx, pt)
    g = _boundary_trace(cfg, mask)

    A = assemble_laplacian(mask)
    x, _ = conjugate_gradient(A, dirichlet_rhs(mask, g), tol=cfg.tol,
                              M=auto_preconditioner(A))
    u_eps = mask.embed(x)
    u_eps[~mask.is_fluid] = g[~mask.is_fluid]

    box = box_mask(pt.grid, cfg.dim, side=cfg.side(), origin=cfg.outer[0][0])
    pot = build_potential(dom, box, ctx.profiles)
    u0 = solve_schrodinger(box, pot.lambda2, pot.values, g=g, tol=cfg.tol)
    chi = build_corrector(dom, mask, ctx.profiles)

    row = _base_row(cfg, item)
    row["error"] = approximation_error(u_eps, chi, u0, mask)
    row["status"] = "ok"
    return _ItemResult(item.order, [row], u_eps)


def _random_data(cfg, mask, item):
    """Seeded white-noise trials in the slot the tested constant reads."""
    face_slot = item.which in ("A_p", "C_p")
    trials = []
    for i in range(cfg.n_random):
        rng = np.random.default_rng([cfg.seed, item.point.index, i])
        if face_slot:
            comps = []
            for a in range(cfg.dim):
                shp = list(mask.shape)
                shp[a] -= 1
                comps.append(rng.standard_normal(shp))
            trials.append((None, FaceField(tuple(comps))))
        else:
            trials.append((rng.standard_normal(mask.shape), None))
    return trials


def _run_scaling(ctx, item):
    cfg = ctx.config
    pt = item.point
    dom, mask = _domain_and_mask(ctx, pt)
    row = _base_row(cfg, item)

    if cfg.trials == "witness":
        rec = witness_ratio(dom, mask, item.p, item.which,
                            coarse=cfg.coarse, psi_tol=cfg.tol)
        if rec is None:
            row["status"] = "skip:witness-inapplicable"
            return _ItemResult(item.order, [row], None)
        row["estimate"] = rec["ratio"]
        if "coarse_ratio" in rec:
            row["coarse_max"] = rec["coarse_ratio"]
    else:
        if cfg.trials == "random":
            result = estimate_constant(
                dom, mask, item.p, item.which,
                trials=_random_data(cfg, mask, item),
                tol=cfg.tol, details=cfg.coarse,
            )
        else:  # full built-in battery; seed varied per point
            result = estimate_constant(
                dom, mask, item.p, item.which,
                seed=cfg.seed + 1_000_003 * pt.index,
                n_random=cfg.n_random, tol=cfg.tol, details=cfg.coarse,
            )
        if cfg.coarse:
            estimate, records = result
            coarse = [r["coarse_ratio"] for r in records if "coarse_ratio" in r]
            if coarse:
                row["coarse_max"] = max(coarse)
        else:
            estimate = result
        row["estimate"] = estimate
    row["status"] = "ok"
    return _ItemResult(item.order, [row], None)


def _run_eig(ctx, item):
    cfg = ctx.config
    pt = item.point
    if cfg.cell:
        pc = periodic_cell(pt.grid, pt.eps, pt.eta, ctx.shape, cfg.dim)
        A = pc.A
    else:
        _, mask = _domain_and_mask(ctx, pt)
        A = assemble_laplacian(mask)
    lam = smallest_eigenvalue(A, M=auto_preconditioner(A))
    row = _base_row(cfg, item)
    row["lambda1"] = lam
    row["status"] = "ok"
    return _ItemResult(item.order, [row], None)


def _run_witness(ctx, item):
    cfg = ctx.config
    pt = item.point
    psi = witness_psi(pt.grid, pt.eps, pt.eta, ctx.shape, cfg.dim, tol=cfg.tol)
    avg = cell_average(psi)
    grad = cell_gradient_norm(psi, pt.eps, p=2)
    t = abs(math.log(pt.eta))
    row = _base_row(cfg, item)
    row["psi_avg"] = avg
    row["grad_l2"] = grad
    if cfg.dim == 2:
        row["psi_scaled"] = avg / t
        row["grad_scaled"] = grad * pt.eps / math.sqrt(t)
    else:
        row["psi_scaled"] = avg
        row["grad_scaled"] = grad * pt.eps * pt.eta ** ((cfg.dim - 2) / 2.0)
    row["status"] = "ok"
    return _ItemResult(item.order, [row], psi)


_RUNNERS = {
    "solve": _run_solve,
    "corrector": _run_corrector,
    "rate": _run_rate,
    "scaling": _run_scaling,
    "eig": _run_eig,
    "witness": _run_witness,
}


def _guarded(runner, ctx, item):
    """Trap solver-level failures into a per-row error status."""
    try:
        return runner(ctx, item)
    except PdhlError as exc:
        row = _base_row(ctx.config, item)
        row["status"] = f"error:{type(exc).__name__}"
        return _ItemResult(item.order, [row], None)


def _work_items(cfg):
    points = cfg.points()
    if cfg.kind == "scaling":
        combos = product(points, cfg.p, cfg.which)
        return [_WorkItem(k, pt, p, w) for k, (pt, p, w) in enumerate(combos)]
    return [_WorkItem(k, pt) for k, pt in enumerate(points)]


def _profile_for(cfg, shape):
    if shape.kind == "ball":
        return exterior_profile_ball(cfg.dim, shape.params[0])
    R = cfg.profile_radius or 16.0 * shape.circumradius
    n = cfg.profile_n or (257 if cfg.dim == 2 else 129)
    try:
        return exterior_profile_numeric(cfg.dim, shape, R, n)
    except (TruncationTooSmall, UnresolvedShape) as exc:
        raise ConfigInvalid(
            f"profile.radius/profile.n cannot represent the hole shape: {exc}"
        ) from exc


def _group_label(cfg, row):
    if cfg.kind != "scaling":
        return "all"
    return f"p{row['p']:g}-{row['which']}"


def _fit_groups(cfg, rows):
    """Exponent fits of the kind's target column against eta, per group."""
    column = _FIT_COLUMN.get(cfg.kind)
    if column is None:
        return {}
    transform = "ln x" if cfg.fit_x == "eta" else "ln ln(1/x)"
    groups = {}
    for row in rows:
        groups.setdefault(_group_label(cfg, row), []).append(row)
    fits = {}
    for label, members in groups.items():
        pts = [
            (row["eta"], row[column])
            for row in members
            if row["status"] == "ok" and row["eta"] != "" and row[column] != ""
            and row[column] > 0.0
        ]
        try:
            fit = fit_exponent(pts, x_transform=transform)
        except (TooFewPoints, NonpositiveData, ValueError):
            fit = None
        fits[label] = (fit, tuple(pts))
    return fits


def run_experiment(config):
    """Execute a configured sweep and write its report files.

    Returns a Report; raises ConfigInvalid for problems a validated
    config can still hide (an unresolvable hole-profile grid) and
    OutputUnwritable when the output directory cannot be used.  Failures
    of individual sweep points are not fatal: they appear as
    ``error:<Type>`` statuses in their rows.
    """
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".writable"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise OutputUnwritable(f"cannot write to {out}: {exc}") from exc

    shape = config.hole_shape()
    plan = None
    if shape is not None:
        if config.offsets == "random":
            plan = random_plan(shape, config.seed, config.amplitude)
        else:
            plan = uniform_plan(shape)
    profiles = None
    if config.kind in ("corrector", "rate"):
        profiles = {shape: _profile_for(config, shape)}
    ctx = _Context(config=config, shape=shape, plan=plan, profiles=profiles)

    items = _work_items(config)
    runner = _RUNNERS[config.kind]
    results = [None] * len(items)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            futures = {
                pool.submit(_guarded, runner, ctx, item): k
                for k, item in enumerate(items)
            }
            for fut in as_completed(futures):
                results[futures[fut]] = fut.result()
    else:
        for k, item in enumerate(items):
            results[k] = _guarded(runner, ctx, item)

    rows = [row for res in results for row in res.rows]
    fits = _fit_groups(config, rows)
    if "slope" in SCHEMAS[config.kind]:
        for row in rows:
            fit, _ = fits.get(_group_label(config, row), (None, ()))
            row["slope"] = fit.slope if fit is not None else ""

    csv_path = out / "results.csv"
    csv_sha = write_csv(csv_path, SCHEMAS[config.kind], rows)

    snapshots = 0
    if config.snapshots:
        for res in results:
            if res.field is not None:
                write_snapshot(out / f"snap-{res.order:03d}.pdhl1", res.field)
                snapshots += 1

    svg_paths = []
    if config.plot:
        for label in sorted(fits):
            fit, pts = fits[label]
            if fit is None:
                continue
            name = "plot.svg" if label == "all" else f"plot-{label}.svg"
            emit_plot(fit, pts, out / name, y_label=_FIT_COLUMN[config.kind])
            svg_paths.append(str(out / name))

    manifest = {
        "kind": config.kind,
        "schema": f"{config.kind}/1",
        "columns": list(SCHEMAS[config.kind]),
        "config_sha256": config.config_sha256(),
        "seed": config.seed,
        "version": __version__,
        "rows": len(rows),
        "ok_rows": sum(1 for r in rows if r["status"] == "ok"),
        "csv_sha256": csv_sha,
        "snapshots": snapshots,
        "fits": {
            label: None
            if fit is None
            else {
                "slope": fit.slope,
                "intercept": fit.intercept,
                "r_squared": fit.r_squared,
                "x_transform": fit.x_transform,
                "points": len(pts),
            }
            for label, (fit, pts) in sorted(fits.items())
        },
    }
    if config.kind == "eig":
        manifest["operator"] = "cell" if config.cell else "dirichlet"
    manifest_path = out / "manifest.json"
    write_manifest(manifest_path, manifest)

    return Report(
        kind=config.kind,
        out_dir=str(out),
        csv_path=str(csv_path),
        manifest_path=str(manifest_path),
        svg_paths=tuple(svg_paths),
        rows=tuple(rows),
        fits={label: fit for label, (fit, _) in fits.items()},
        manifest=manifest,
    )
