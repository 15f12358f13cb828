"""End-to-end acceptance runs at production scale.

Each test exercises one headline behavior of the laboratory on grids up
to 4097 nodes per axis and prints a single ``acceptance NN: PASS/FAIL``
verdict line (run with ``-s`` to see them as they land; failures carry
the line in the assertion message).  The whole file takes several
minutes; elapsed time per check is part of its verdict line.

One check is expected to fail on this hardware: the coarsened-gradient
contrast asks the p = 4 gradient constant to grow at least 4x across a
sweep, and with the constant growing like eta^(-1/2)/sqrt(|ln eta|) that
first happens around eta = 2^-9, i.e. grids near 32769^2 — far beyond a
5 GB box.  The check is implemented faithfully and left to fail rather
than weakened; the measured growth is printed in its verdict.
"""

import gc
import time

import numpy as np
import pytest

from pdhl import (
    OUTER_BOUNDARY,
    FaceField,
    approximation_error,
    assemble_laplacian,
    assemble_rhs,
    auto_preconditioner,
    ball,
    box_mask,
    build_corrector,
    build_domain,
    build_potential,
    cell_average,
    cell_gradient_norm,
    conjugate_gradient,
    corrector_norm_report,
    dirichlet_rhs,
    discrete_gradient,
    estimate_constant,
    exterior_profile_ball,
    exterior_profile_numeric,
    face_lp_norm,
    fit_exponent,
    periodic_cell,
    rasterize,
    sigma_scale,
    smallest_eigenvalue,
    solve_schrodinger,
    square,
    uniform_plan,
    witness_psi,
    witness_ratio,
)

BALL8 = ball(0.125)
PROFILE2 = {BALL8: exterior_profile_ball(2, 0.125)}
ETA_SWEEP = (2.0**-3, 2.0**-4, 2.0**-5, 2.0**-6)


def _verdict(num, started, ok, detail):
    line = (
        f"acceptance {num:02d}: {'PASS' if ok else 'FAIL'} "
        f"[{time.time() - started:.0f}s] -- {detail}"
    )
    print(line, flush=True)
    assert ok, line


def _spread(values):
    return max(values) / min(values)


def _random_face(mask, rng):
    comps = []
    for a in range(mask.dim):
        shp = list(mask.shape)
        shp[a] -= 1
        comps.append(rng.standard_normal(shp))
    return FaceField(tuple(comps))


def test_01_energy_bound_on_random_data():
    # 100 seeded face fields on the perforated unit box, one cached AMG
    # hierarchy; the gradient of the solution never beats the data.
    started = time.time()
    dom = build_domain(((0.0, 1.0),) * 2, 0.125, 0.125, uniform_plan(BALL8))
    mask = rasterize(dom, 1025)
    A = assemble_laplacian(mask)
    M = auto_preconditioner(A)
    worst = 0.0
    for i in range(100):
        f = _random_face(mask, np.random.default_rng([11, i]))
        b = assemble_rhs(mask, f=f)
        x, _ = conjugate_gradient(A, b, tol=1e-8, M=M)
        u = mask.embed(x)
        ratio = face_lp_norm(discrete_gradient(u, mask), 2, mask) / face_lp_norm(
            f, 2, mask
        )
        worst = max(worst, ratio)
    _verdict(
        1,
        started,
        worst <= 1.0 + 1e-8,
        f"max ||Gu||_2/||f||_2 = {worst:.9f} over 100 random f (bound 1 + 1e-8)",
    )


def test_02_manufactured_solutions_second_order():
    # sin(pi x) sin(pi y) through both solvers at n = 65, 129, 257:
    # max-error order 2.0 +/- 0.2.
    started = time.time()
    errs_poisson, errs_schrod = [], []
    for n in (65, 129, 257):
        mask = box_mask(n, 2)
        x = mask.node_coords(0)[:, None]
        y = mask.node_coords(1)[None, :]
        exact = np.sin(np.pi * x) * np.sin(np.pi * y)
        h = 1.0 / (n - 1)

        A = assemble_laplacian(mask)
        b = assemble_rhs(mask, F=2.0 * np.pi**2 * exact)
        sol, _ = conjugate_gradient(A, b, tol=1e-12, M=auto_preconditioner(A))
        errs_poisson.append((h, float(np.max(np.abs(mask.embed(sol) - exact)))))

        u = solve_schrodinger(
            mask,
            9.0,  # lambda = 3
            np.ones(mask.shape),
            F=(2.0 * np.pi**2 + 9.0) * exact,
            tol=1e-12,
        )
        errs_schrod.append((h, float(np.max(np.abs(u - exact)))))
    order_p = fit_exponent(tuple(errs_poisson)).slope
    order_s = fit_exponent(tuple(errs_schrod)).slope
    _verdict(
        2,
        started,
        abs(order_p - 2.0) <= 0.2 and abs(order_s - 2.0) <= 0.2,
        f"max-error orders: poisson {order_p:.4f}, schrodinger {order_s:.4f} "
        f"(want 2.0 +/- 0.2)",
    )


def test_03_capacity_oracle():
    # d = 3 unit ball against the closed form, and the cube bracketed by
    # its inscribed and circumscribed balls (capacity is monotone).
    started = time.time()
    cap_ball = exterior_profile_numeric(3, ball(1.0), R=8.0, n=129).capacity
    rel = abs(cap_ball - 4.0 * np.pi) / (4.0 * np.pi)
    cap_square = exterior_profile_numeric(3, square(1.0, 3), R=14.0, n=129).capacity
    lo, hi = 4.0 * np.pi, 4.0 * np.pi * np.sqrt(3.0)
    _verdict(
        3,
        started,
        rel <= 0.02 and lo < cap_square < hi,
        f"ball capacity {cap_ball:.5f} off 4*pi by {rel:.3%} (cap 2%); "
        f"cube {cap_square:.5f} inside ({lo:.3f}, {hi:.3f})",
    )


def test_04_cell_eigenvalue_log_law():
    # lambda_1 of the periodic cell with a hole of diameter eps*eta/2
    # decays like 1/|ln eta| at fixed eps: slope -1.0 +/- 0.25 against
    # ln |ln eta|.  16/eta nodes per cell edge keep eight nodes across
    # each hole diameter.
    started = time.time()
    pts = []
    for eta in ETA_SWEEP:
        cell = int(round(16 / eta))
        pc = periodic_cell(cell, 0.125, eta, ball(0.25), 2)
        lam = smallest_eigenvalue(pc.A, M=auto_preconditioner(pc.A))
        pts.append((eta, lam))
        del pc
        gc.collect()
    fit = fit_exponent(tuple(pts), x_transform="ln ln(1/x)")
    _verdict(
        4,
        started,
        abs(fit.slope + 1.0) <= 0.25,
        f"ln lambda_1 vs ln|ln eta| slope {fit.slope:.4f} "
        f"(want -1.0 +/- 0.25, r^2 {fit.r_squared:.4f})",
    )


def test_05_corrector_norms_track_the_laws():
    # same eta sweep on a one-cell domain: ||chi - 1||_2 * |ln eta| and
    # the per-cell gradient average times sigma_eps are both stable.
    started = time.time()
    dev_scaled, grad_scaled = [], []
    for eta in ETA_SWEEP:
        n = int(round(32 / eta)) + 1
        dom = build_domain(((0.0, 0.25),) * 2, 0.125, eta, uniform_plan(BALL8))
        mask = rasterize(dom, n)
        chi = build_corrector(dom, mask, PROFILE2)
        rep = corrector_norm_report(chi, mask)
        dev_scaled.append(rep["chi_minus_one"] * abs(np.log(eta)))
        grad_scaled.append(rep["grad_cell_max"] * sigma_scale(2, 0.125, eta))
        del dom, mask, chi
        gc.collect()
    _verdict(
        5,
        started,
        _spread(dev_scaled) <= 4.0 and _spread(grad_scaled) <= 4.0,
        f"||chi-1||*|ln eta| spread {_spread(dev_scaled):.3f}x, "
        f"cell gradient * sigma spread {_spread(grad_scaled):.3f}x (cap 4x)",
    )


def _corrector_ansatz_error(eta, n):
    """|| G(u_eps - chi * u0) ||_2 for boundary data g = x1, one cell."""
    dom = build_domain(((0.0, 0.25),) * 2, 0.125, eta, uniform_plan(BALL8))
    mask = rasterize(dom, n)
    coords = mask.node_coords(0)
    g = np.zeros(mask.shape)
    outer = mask.flags == OUTER_BOUNDARY
    g[outer] = np.broadcast_to(coords[:, None], mask.shape)[outer]

    A = assemble_laplacian(mask)
    b = dirichlet_rhs(mask, g)
    x, _ = conjugate_gradient(A, b, tol=1e-10, M=auto_preconditioner(A))
    u_eps = mask.embed(x)
    u_eps[~mask.is_fluid] = g[~mask.is_fluid]

    box = box_mask(n, 2, side=0.25)
    pot = build_potential(dom, box, PROFILE2)
    u0 = solve_schrodinger(box, pot.lambda2, pot.values, g=g)
    chi = build_corrector(dom, mask, PROFILE2)
    err = approximation_error(u_eps, chi, u0, mask)
    del dom, mask, A, b, x, u_eps, box, pot, u0, chi
    gc.collect()
    return err


def test_06_corrector_ansatz_rate():
    # the ansatz error for linear boundary data strictly improves as the
    # holes shrink, at the 1/sqrt(|ln eta|) pace.
    started = time.time()
    pts = []
    for eta in ETA_SWEEP:
        n = int(round(32 / eta)) + 1
        pts.append((eta, _corrector_ansatz_error(eta, n)))
    decreasing = all(b < a for (_, a), (_, b) in zip(pts, pts[1:]))
    fit = fit_exponent(tuple(pts), x_transform="ln ln(1/x)")
    _verdict(
        6,
        started,
        decreasing and abs(fit.slope + 0.5) <= 0.25,
        f"errors {[f'{e:.4f}' for _, e in pts]} strictly decreasing: {decreasing}; "
        f"slope vs ln|ln eta| {fit.slope:.4f} (want -0.5 +/- 0.25)",
    )


def test_07_witness_cell_scalings():
    # cell witness field: mean ~ |ln eta| and mean-square gradient
    # ~ |ln eta|/eps^2, each stable to a factor 4 after rescaling.
    started = time.time()
    avg_scaled, grad_scaled = [], []
    for eta in ETA_SWEEP:
        cell = int(round(16 / eta))
        psi = witness_psi(cell, 0.125, eta, ball(0.25), 2)
        t = abs(np.log(eta))
        avg_scaled.append(cell_average(psi) / t)
        grad_scaled.append(cell_gradient_norm(psi, 0.125) * 0.125 / np.sqrt(t))
        del psi
        gc.collect()
    _verdict(
        7,
        started,
        _spread(avg_scaled) <= 4.0 and _spread(grad_scaled) <= 4.0,
        f"mean(psi)/|ln eta| spread {_spread(avg_scaled):.3f}x, "
        f"grad norm * eps/sqrt|ln eta| spread {_spread(grad_scaled):.3f}x (cap 4x)",
    )


@pytest.fixture(scope="module")
def gradient_constant_sweep():
    """The p = 4 gradient-constant sweep shared by the next two tests.

    eps = 1/4 on the unit box, eta in {2^-3..2^-6}, 64/eta + 1 nodes per
    axis (513..4097).  The no-solve witness trial supplies the estimate
    at every point; the three grids where random-data solves are
    affordable (n <= 2049) also run the full trial battery with
    coarsened-gradient details.
    """
    eps = 0.25
    witness = []  # (eta, estimate)
    battery = []  # (eta, battery estimate, max coarse ratio over (0,f) trials)
    for k in (3, 4, 5, 6):
        eta = 2.0**-k
        n = int(round(64 / eta)) + 1
        dom = build_domain(((0.0, 1.0),) * 2, eps, eta, uniform_plan(BALL8))
        mask = rasterize(dom, n)
        rec = witness_ratio(dom, mask, 4.0, "A_p")
        assert rec is not None, "witness trial inapplicable on an aligned sweep"
        witness.append((eta, rec["ratio"]))
        if n <= 2049:
            est, recs = estimate_constant(
                dom, mask, 4.0, "A_p", seed=0, n_random=8, details=True
            )
            coarse = max(
                r["coarse_ratio"] for r in recs if r["trial"] != "witness"
            )
            battery.append((eta, est, coarse))
        del dom, mask
        gc.collect()
    return eps, witness, battery


def test_08_gradient_constant_exponent(gradient_constant_sweep):
    # A_4 estimate * sqrt(|ln eta|) grows like eta^(-1/2) across a
    # small-sigma sweep, while the p = 2 estimate stays pinned at 1.
    started = time.time()
    eps, witness, _ = gradient_constant_sweep
    assert all(sigma_scale(2, eps, eta) <= 1.0 for eta, _ in witness)
    scaled = tuple(
        (eta, ratio * np.sqrt(abs(np.log(eta)))) for eta, ratio in witness
    )
    fit = fit_exponent(scaled)

    dom = build_domain(((0.0, 1.0),) * 2, eps, 0.125, uniform_plan(BALL8))
    mask = rasterize(dom, 513)
    a2 = estimate_constant(dom, mask, 2.0, "A_p", seed=0, n_random=8)
    del dom, mask
    gc.collect()

    _verdict(
        8,
        started,
        abs(fit.slope + 0.5) <= 0.2 and a2 <= 1.0 + 1e-8,
        f"A_4 * sqrt|ln eta| vs eta slope {fit.slope:.4f} (want -0.5 +/- 0.2); "
        f"A_2 estimate {a2:.9f} (bound 1 + 1e-8)",
    )


def test_09_coarse_gradient_contrast(gradient_constant_sweep):
    # the window-RMS gradient ratio stays flat while the raw gradient
    # constant must grow 4x.  The growth needs eta down to ~2^-9
    # (grids ~32769^2), so this check fails honestly at desk scale;
    # see the module docstring.
    started = time.time()
    _, witness, battery = gradient_constant_sweep
    coarse = [c for _, _, c in battery]
    estimates = [r for _, r in witness]
    flat = _spread(coarse) <= 3.0
    growth = max(estimates) / min(estimates)
    _verdict(
        9,
        started,
        flat and growth >= 4.0,
        f"coarse-gradient ratio spread {_spread(coarse):.3f}x (cap 3x); "
        f"A_4 estimate growth {growth:.3f}x (want >= 4x)",
    )


def test_10_solution_constant_witness_law(gradient_constant_sweep):
    # the D_2 witness ratio follows eps^2 |ln eta|: slope 1.0 +/- 0.25
    # against ln |ln eta| on the same small-sigma sweep geometry.
    started = time.time()
    eps, _, _ = gradient_constant_sweep
    pts = []
    for k in (3, 4, 5, 6):
        eta = 2.0**-k
        n = int(round(64 / eta)) + 1
        dom = build_domain(((0.0, 1.0),) * 2, eps, eta, uniform_plan(BALL8))
        mask = rasterize(dom, n)
        assert sigma_scale(2, eps, eta) <= 1.0
        rec = witness_ratio(dom, mask, 2.0, "D_p")
        assert rec is not None
        pts.append((eta, rec["ratio"]))
        del dom, mask, rec
        gc.collect()
    fit = fit_exponent(tuple(pts), x_transform="ln ln(1/x)")
    _verdict(
        10,
        started,
        abs(fit.slope - 1.0) <= 0.25,
        f"D_2 witness vs ln|ln eta| slope {fit.slope:.4f} "
        f"(want 1.0 +/- 0.25, r^2 {fit.r_squared:.4f})",
    )


def test_11_three_d_smoke_monotonicity():
    # optional coarse d = 3 run at n = 97: only monotonicity is claimed
    # at this resolution — the corrector deviation shrinks with the holes.
    started = time.time()
    norms = []
    for eta in (0.45, 0.35):
        dom = build_domain(((0.0, 1.0),) * 3, 0.5, eta, uniform_plan(BALL8))
        mask = rasterize(dom, 97)
        chi = build_corrector(dom, mask, {BALL8: exterior_profile_ball(3, 0.125)})
        norms.append(corrector_norm_report(chi, mask)["chi_minus_one"])
        del dom, mask, chi
        gc.collect()
    _verdict(
        11,
        started,
        norms[1] < norms[0],
        f"d=3 ||chi-1||_2 at eta 0.45 -> 0.35: {norms[0]:.5f} -> {norms[1]:.5f} "
        f"(must decrease)",
    )
