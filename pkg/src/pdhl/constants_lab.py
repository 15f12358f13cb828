"""Empirical scaling laboratory for the solution-operator constants.

The solution operator of ``-div grad u = F + div f`` on a perforated box
satisfies, for each Lebesgue exponent ``p``,

    ||grad u||_p <= A_p ||f||_p + B_p ||F||_p,
    ||u||_p      <= C_p ||f||_p + D_p ||F||_p,

with the smallest admissible constants depending on the geometry through
the scale sigma = sigma_scale(dim, eps, eta).  This module estimates those
constants from below as maxima of measured ratios over documented trial
families (it never claims to compute them exactly), builds the periodic
cell corrector ``psi`` whose product with a smooth bump is the classical
lower-bound witness, and fits power-law exponents to sweep data.

Layout:

* ``sigma_scale`` / ``scale_params`` -- the scale parameter and regime split;
* ``phi_p`` -- the four-branch growth factor Phi_p(R);
* ``RateLaw`` -- symbolic eta-laws used as reference lines in reports;
* ``periodic_cell`` / ``witness_psi`` -- the one-cell periodic problem
  ``-lap psi = eps^-2 eta^(d-2)`` with psi = 0 on the hole, plus cell
  averages and gradient means of its solution;
* ``witness_ratio`` -- the no-solve witness trial built from ``psi * phi``;
* ``estimate_constant`` -- max-of-ratios lower bound over a trial family;
* ``fit_exponent`` -- deterministic OLS in log coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .discretization import (
    FaceField,
    apply_operator,
    assemble_laplacian,
    assemble_rhs,
    coarsened_gradient,
    discrete_gradient,
    face_divergence,
    face_lp_norm,
    lp_norm,
)
from .errors import (
    EmptyTrials,
    EtaOutOfRange,
    InvalidArguments,
    NonpositiveData,
    TooFewPoints,
    UnresolvedHoles,
)
from .linsolve import auto_preconditioner, conjugate_gradient

__all__ = [
    "ScaleParams",
    "RateLaw",
    "ScalingFit",
    "PeriodicCell",
    "sigma_scale",
    "scale_params",
    "phi_p",
    "periodic_cell",
    "witness_psi",
    "cell_average",
    "cell_gradient_norm",
    "witness_ratio",
    "estimate_constant",
    "fit_exponent",
]

_TOL = 1e-9

# which constant -> (numerator kind, data slot that must carry the trial)
_SLOTS = {
    "A_p": ("grad", "f"),
    "B_p": ("grad", "F"),
    "C_p": ("value", "f"),
    "D_p": ("value", "F"),
}


# ---------------------------------------------------------------------------
# scale parameter and regimes


def sigma_scale(dim, eps, eta):
    """The scale ``sigma = eps * eta^(1-d/2)`` (d >= 3) or
    ``eps * |ln eta|^(1/2)`` (d = 2).

    This single number separates the two asymptotic regimes: holes small
    enough that the domain behaves like the unperforated box (sigma >= 1)
    versus holes large enough to dominate the energy balance (sigma <= 1).

    Raises
    ------
    EtaOutOfRange
        If ``eta`` is outside the open interval (0, 1/2).
    ValueError
        If ``eps <= 0`` or ``dim < 2``.
    """
    eta = float(eta)
    eps = float(eps)
    if not 0.0 < eta < 0.5:
        raise EtaOutOfRange(f"eta must lie in (0, 1/2), got {eta}")
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    if dim == 2:
        return eps * math.sqrt(abs(math.log(eta)))
    return eps * eta ** (1.0 - dim / 2.0)


@dataclass(frozen=True)
class ScaleParams:
    """The scale parameter of a perforated geometry and its regime.

    ``regime`` is ``"small_holes"`` when ``sigma >= 1`` and
    ``"large_holes"`` when ``sigma < 1`` (the boundary case ``sigma == 1``
    belongs to both asymptotic families; it is labeled ``"small_holes"``).
    """

    dim: int
    eps: float
    eta: float
    sigma: float
    regime: str


def scale_params(dim, eps, eta):
    """Bundle ``sigma_scale`` with its regime label."""
    sigma = sigma_scale(dim, eps, eta)
    regime = "small_holes" if sigma >= 1.0 else "large_holes"
    return ScaleParams(dim=int(dim), eps=float(eps), eta=float(eta),
                       sigma=sigma, regime=regime)


# ---------------------------------------------------------------------------
# reference laws


@dataclass(frozen=True)
class RateLaw:
    """A symbolic rate in ``eta``: pure power, pure log power, or both.

    ``tag`` selects the formula evaluated by :meth:`evaluate`:

    * ``"eta_pow"``        -- ``eta^alpha``;
    * ``"log_pow"``        -- ``|ln eta|^beta``;
    * ``"pow_times_log"``  -- ``eta^alpha * |ln eta|^beta``.

    Used by reports to draw reference lines next to measured sweeps.  On
    the dyadic range ``eta <= 1/e`` every law with same-sign parameters is
    positive and strictly monotone.
    """

    tag: str
    alpha: float = 0.0
    beta: float = 0.0

    _TAGS = ("eta_pow", "log_pow", "pow_times_log")

    def __post_init__(self):
        if self.tag not in self._TAGS:
            raise ValueError(f"unknown rate law tag {self.tag!r}")

    def evaluate(self, eta):
        """Evaluate the law; ``eta`` must lie in (0, 1/2)."""
        eta = float(eta)
        if not 0.0 < eta < 0.5:
            raise EtaOutOfRange(f"eta must lie in (0, 1/2), got {eta}")
        t = abs(math.log(eta))
        if self.tag == "eta_pow":
            return eta**self.alpha
        if self.tag == "log_pow":
            return t**self.beta
        return eta**self.alpha * t**self.beta


def phi_p(R, p, dim):
    """The four-branch growth factor ``Phi_p(R)``.

    ============================  =========================
    branch                        value
    ============================  =========================
    d >= 3 and 2 < p < d          1
    d >= 3 and p = d              (ln R)^(1 - 1/d)
    d >= 3 and p > d              R^(1 - d/p)
    d = 2  and p > 2              R^(1 - 2/p) (ln R)^(-1)
    ============================  =========================

    Raises
    ------
    InvalidArguments
        Unless ``R > 2``, ``p > 2`` and ``dim >= 2``.
    """
    R = float(R)
    p = float(p)
    if R <= 2.0 or p <= 2.0 or dim < 2:
        raise InvalidArguments(
            f"phi_p needs R > 2, p > 2 and dim >= 2; got R={R}, p={p}, dim={dim}"
        )
    if dim == 2:
        return R ** (1.0 - 2.0 / p) / math.log(R)
    if p < dim:
        return 1.0
    if p == dim:
        return math.log(R) ** (1.0 - 1.0 / dim)
    return R ** (1.0 - dim / p)


# ---------------------------------------------------------------------------
# the periodic cell problem


@dataclass(frozen=True)
class PeriodicCell:
    """Discrete one-cell problem on the torus ``[0, eps)^d`` with a hole.

    ``A`` is the periodic five/seven-point Laplacian over the non-hole
    nodes (Dirichlet rows for the hole eliminated, diagonal kept at
    ``2*dim/h^2``), ``hole`` flags the hole nodes on the open cell grid,
    and ``dof_index`` maps grid nodes to matrix rows (-1 on the hole).
    """

    dim: int
    eps: float
    eta: float
    h: float
    hole: np.ndarray
    dof_index: np.ndarray
    A: sp.csr_matrix


def periodic_cell(cell, eps, eta, shape, dim):
    """Assemble the periodic cell Laplacian with a centered hole.

    The cell ``[0, eps)^d`` is sampled at ``h = eps/cell`` (one node per
    period endpoint, none duplicated); the hole is ``shape`` scaled by
    ``eps*eta`` and centered at ``eps/2``.

    Raises
    ------
    UnresolvedHoles
        If the hole spans fewer than four grid intervals across its
        inscribed diameter, or catches no node at all.
    """
    cell = int(cell)
    if cell < 4:
        raise UnresolvedHoles(f"cell grid needs >= 4 intervals, got {cell}")
    eps = float(eps)
    h = eps / cell
    scale = eps * float(eta)
    if 2.0 * scale * shape.inradius < 4.0 * h * (1.0 - 1e-12):
        raise UnresolvedHoles(
            f"hole spans under four grid intervals "
            f"(diameter {2 * scale * shape.inradius:.3g}, h={h:.3g})"
        )
    coords = [h * np.arange(cell) for _ in range(dim)]
    pts = np.stack(np.meshgrid(*coords, indexing="ij"), axis=-1)
    hole = shape.contains((pts - eps / 2.0) / scale)
    if not hole.any():
        raise UnresolvedHoles("hole catches no grid node")

    ndof = int((~hole).sum())
    dof_index = np.full(hole.shape, -1, dtype=np.int64)
    dof_index[~hole] = np.arange(ndof)

    h2 = h * h
    rows = [np.arange(ndof)]
    cols = [np.arange(ndof)]
    vals = [np.full(ndof, 2.0 * dim / h2)]
    for a in range(dim):
        nb_hole = np.roll(hole, -1, axis=a)
        nb_dof = np.roll(dof_index, -1, axis=a)
        both = ~hole & ~nb_hole
        i = dof_index[both]
        j = nb_dof[both]
        off = np.full(i.size, -1.0 / h2)
        rows.extend((i, j))
        cols.extend((j, i))
        vals.extend((off, off))
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ndof, ndof),
    ).tocsr()
    return PeriodicCell(dim=dim, eps=eps, eta=float(eta), h=h,
                        hole=hole, dof_index=dof_index, A=A)


def witness_psi(cell, eps, eta, shape, dim, tol=1e-10):
    """Solve the periodic cell problem ``-lap psi = eps^-2 eta^(d-2)``.

    Returns the node field on the closed cell ``[0, eps]^d`` with
    ``cell + 1`` nodes per axis: the top layer duplicates the bottom one
    exactly, so paired opposite-face nodes agree bit for bit, and the
    hole nodes are exactly zero.

    Raises
    ------
    UnresolvedHoles
        From :func:`periodic_cell` when the grid cannot resolve the hole.
    NotConverged
        If the cell solve stalls.
    """
    pc = periodic_cell(cell, eps, eta, shape, dim)
    rhs = float(eps) ** -2.0 * float(eta) ** (dim - 2)
    b = np.full(pc.A.shape[0], rhs)
    x, _ = conjugate_gradient(pc.A, b, tol=tol, M=auto_preconditioner(pc.A))
    open_field = np.zeros(pc.hole.shape)
    open_field[~pc.hole] = x
    closed = np.zeros((int(cell) + 1,) * dim)
    closed[(slice(0, int(cell)),) * dim] = open_field
    for a in range(dim):
        last = [slice(None)] * dim
        first = [slice(None)] * dim
        last[a] = -1
        first[a] = 0
        closed[tuple(last)] = closed[tuple(first)]
    return closed


def cell_average(psi):
    """Mean of a closed-cell field over the torus (wrap layer dropped)."""
    psi = np.asarray(psi)
    cell = psi.shape[0] - 1
    return float(psi[(slice(0, cell),) * psi.ndim].mean())


def cell_gradient_norm(psi, eps, p=2):
    """``(mean |grad psi|^p)^(1/p)`` over the torus of a closed-cell field.

    Forward differences along each axis (the wrap layer supplies the
    periodic neighbor), averaged back to nodes per axis, then combined
    into the Euclidean magnitude.
    """
    psi = np.asarray(psi)
    dim = psi.ndim
    cell = psi.shape[0] - 1
    h = float(eps) / cell
    crop = [slice(0, cell)] * dim
    mag2 = np.zeros((cell,) * dim)
    for a in range(dim):
        g = np.diff(psi, axis=a) / h
        g = g[tuple(crop[:a] + [slice(None)] + crop[a + 1:])]
        avg = 0.5 * (g + np.roll(g, 1, axis=a))
        mag2 += avg * avg
    mag = np.sqrt(mag2)
    return float(np.mean(mag ** float(p)) ** (1.0 / float(p)))


# ---------------------------------------------------------------------------
# witness trial


def _smoothstep(t):
    """C^2 quintic ramp: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (6.0 * t - 15.0))


def _bump1d(x, r_in, r_out):
    """1-D plateau bump: 1 on [-r_in, r_in], 0 outside (-r_out, r_out)."""
    return _smoothstep((r_out - np.abs(x)) / (r_out - r_in))


def _tensor_bump(mask, center, r_in, r_out, face_axis=None):
    """Tensor-product bump on the node grid, or on axis ``face_axis`` faces."""
    dim = mask.dim
    out = None
    for a in range(dim):
        x = mask.node_coords(a)
        if a == face_axis:
            x = 0.5 * (x[1:] + x[:-1])
        w = _bump1d(x - center[a], r_in, r_out)
        shape = [1] * dim
        shape[a] = w.size
        w = w.reshape(shape)
        out = w if out is None else out * w
    return out


def _single_shape(domain):
    """The common hole shape if every cell has zero offset and the same
    shape, else None."""
    cells = domain.cells
    if not cells:
        return None
    first = None
    for offset, shape in cells.values():
        if np.max(np.abs(np.asarray(offset, dtype=float))) > 1e-12:
            return None
        if first is None:
            first = shape
        elif shape != first:
            return None
    return first


def _tile_cell_field(open_field, mask, cell):
    """Tile an open-cell periodic field onto the domain grid.

    Node ``i`` along axis ``a`` sits at absolute lattice index
    ``lo_a/h + i``; shifting by half a cell maps the domain's cell-corner
    hole centers onto the witness cell's center.  Requires ``lo_a/h``
    integral (checked by the caller).
    """
    lookups = []
    for a in range(mask.dim):
        base = int(round(mask.lo[a] / mask.h))
        idx = (base + np.arange(mask.shape[a]) + cell // 2) % cell
        lookups.append(idx)
    return open_field[np.ix_(*lookups)]


def witness_ratio(domain, mask, p, which, coarse=False, psi_tol=1e-10):
    """The no-solve witness trial ratio for one constant, or None.

    The witness field is ``u = psi * phi`` with ``psi`` the periodic cell
    corrector tiled over the grid and ``phi`` a tensor smoothstep bump
    (plateau ``Q(c, R*eps)``, support ``Q(c, 2*R*eps)``) at the domain
    center.  Because ``u`` is known in closed form, the matching data are
    reconstructed exactly by applying the discrete operator -- no linear
    solve is involved, which keeps the trial usable on grids far beyond
    solver reach:

    * ``C_p``: data ``f = -grad u`` reproduces ``u`` exactly; ratio
      ``||u||_p / ||grad u||_p``.
    * ``B_p`` / ``D_p``: data ``F = A u``; ratio ``||grad u||_p / ||F||_p``
      or ``||u||_p / ||F||_p``.
    * ``A_p`` (p > 2 only): the splitting ``A u = F + div f`` with
      ``f = -2 psi_bar grad phi`` on faces and ``F`` the exact remainder;
      ratio ``||grad u||_p / (||F||_q + ||f||_p)`` with the Sobolev-dual
      exponent ``q = p*d/(p+d)``.  For ``p = 2`` the trial is skipped so
      the energy identity ``A_2 <= 1`` stays untouched by construction.

    ``R`` follows the regime law (``|ln eta|^(1/2)`` for d = 2,
    ``eta^(-(d-2)/2)`` for d >= 3), capped so the support stays inside the
    box.  Returns None when the witness does not apply: no holes, offsets
    or mixed shapes break exact tiling, ``eps/h`` is not an even integer,
    the grid is not lattice-aligned, or the bump cannot be resolved.

    With ``coarse=True`` the record also carries ``coarse_ratio``, the
    same denominator under the window-RMS gradient ``S_eps`` numerator.
    """
    if which not in _SLOTS:
        raise ValueError(f"which must be one of {sorted(_SLOTS)}, got {which!r}")
    p = float(p)
    dim = mask.dim
    shape0 = _single_shape(domain)
    if shape0 is None:
        return None
    if which == "A_p" and p <= 2.0:
        return None

    eps = domain.eps
    eta = domain.eta
    h = mask.h
    cell_f = eps / h
    cell = int(round(cell_f))
    if abs(cell_f - cell) > _TOL * cell or cell % 2 != 0:
        return None
    for a in range(dim):
        if abs(mask.lo[a] / h - round(mask.lo[a] / h)) > _TOL:
            return None

    # bump geometry: centered at the node nearest the box center
    lo = np.array([b[0] for b in domain.outer])
    hi = np.array([b[1] for b in domain.outer])
    center = lo + h * np.round(((lo + hi) / 2.0 - lo) / h)
    t = abs(math.log(eta))
    r_raw = math.sqrt(t) if dim == 2 else eta ** (-(dim - 2) / 2.0)
    margin = float(np.min(np.minimum(center - lo, hi - center)))
    r_cap = (margin - 2.0 * h) / eps
    R = min(r_raw, r_cap)
    if R * eps < 4.0 * h:
        return None

    psi = witness_psi(cell, eps, eta, shape0, dim, tol=psi_tol)
    open_field = psi[(slice(0, cell),) * dim]
    psi_t = _tile_cell_field(open_field, mask, cell)
    phi = _tensor_bump(mask, center, R * eps / 2.0, R * eps)
    u = np.where(mask.is_fluid, psi_t * phi, 0.0)

    grad_u = discrete_gradient(u, mask)
    record = {
        "trial": "witness",
        "which": which,
        "p": p,
        "R": R,
        "sigma": sigma_scale(dim, eps, eta),
    }

    if which == "C_p":
        num = lp_norm(u, p, mask)
        den = face_lp_norm(grad_u, p, mask)
    elif which in ("B_p", "D_p"):
        F = apply_operator(mask, u)
        den = lp_norm(F, p, mask)
        num = face_lp_norm(grad_u, p, mask) if which == "B_p" else lp_norm(u, p, mask)
    else:  # A_p, p > 2
        grad_phi = discrete_gradient(phi, mask)
        comps = []
        for a in range(dim):
            lo_sl = [slice(None)] * dim
            hi_sl = [slice(None)] * dim
            lo_sl[a] = slice(None, -1)
            hi_sl[a] = slice(1, None)
            psi_bar = 0.5 * (psi_t[tuple(lo_sl)] + psi_t[tuple(hi_sl)])
            comps.append(-2.0 * psi_bar * grad_phi[a])
        f = FaceField(tuple(comps))
        F = np.where(mask.is_fluid,
                     apply_operator(mask, u) - face_divergence(f, mask), 0.0)
        q = p * dim / (p + dim)
        num = face_lp_norm(grad_u, p, mask)
        den = lp_norm(F, q, mask) + face_lp_norm(f, p, mask)

    if den <= 0.0:
        return None
    record["ratio"] = num / den
    if coarse and round(eps / h) >= 1:
        s = coarsened_gradient(u, mask, eps)
        record["coarse_ratio"] = lp_norm(s, p, mask) / den
    return record


# ---------------------------------------------------------------------------
# constant estimation


def _random_trials(mask, slot, seed, n_random):
    """Seeded white-noise data in the tested slot."""
    for i in range(n_random):
        rng = np.random.default_rng([seed, i])
        if slot == "f":
            comps = []
            for a in range(mask.dim):
                shp = list(mask.shape)
                shp[a] -= 1
                comps.append(rng.standard_normal(shp))
            yield f"random-{i}", None, FaceField(tuple(comps))
        else:
            yield f"random-{i}", rng.standard_normal(mask.shape), None


def _bump_trials(domain, mask, slot, limit=5):
    """Smooth bumps localized around a spread of hole cells.

    Plateau ``0.15*eps`` and support ``0.45*eps`` keep each bump inside
    its (interior) cell, concentrating the data where the gradient reacts
    to the perforation.
    """
    zs = sorted(domain.cells)
    if not zs:
        return
    if len(zs) > limit:
        pick = np.unique(np.linspace(0, len(zs) - 1, limit).round().astype(int))
        zs = [zs[k] for k in pick]
    r_in = 0.15 * domain.eps
    r_out = 0.45 * domain.eps
    for z in zs:
        center = domain.hole_center(z)
        if slot == "f":
            comps = tuple(
                _tensor_bump(mask, center, r_in, r_out, face_axis=a)
                for a in range(mask.dim)
            )
            yield f"bump-{z}", None, FaceField(comps)
        else:
            yield f"bump-{z}", _tensor_bump(mask, center, r_in, r_out), None


def _check_slot(slot, F, f):
    """Enforce that the non-tested data slot is absent or zero."""
    if slot == "f":
        if F is not None and np.any(F):
            raise ValueError("A_p/C_p trials must supply F = 0")
        if f is None:
            raise ValueError("A_p/C_p trials must supply a face field f")
    else:
        if f is not None and any(np.any(c) for c in f):
            raise ValueError("B_p/D_p trials must supply f = 0")
        if F is None:
            raise ValueError("B_p/D_p trials must supply a node field F")


def estimate_constant(domain, mask, p, which, trials=None, *, seed=0,
                      n_random=20, tol=1e-10, details=False):
    """Lower bound for one solution-operator constant, by trial maximum.

    Each trial supplies data in the tested slot (``f`` for A_p/C_p, ``F``
    for B_p/D_p, the other slot zero), the problem is solved, and the
    measured ratio

    ======  ===========================
    which   ratio
    ======  ===========================
    A_p     ||grad u||_p / ||f||_p
    B_p     ||grad u||_p / ||F||_p
    C_p     ||u||_p / ||f||_p
    D_p     ||u||_p / ||F||_p
    ======  ===========================

    is recorded; the estimate is the maximum.  By construction the result
    never exceeds the true constant (up to solver tolerance), and
    enlarging the trial family can only increase it.

    ``trials=None`` selects the built-in family: ``n_random`` seeded
    white-noise fields, smooth bumps around up to five holes, and the
    :func:`witness_ratio` trial (which costs no solve).  Explicit trials
    are given as ``(F, f)`` pairs.

    With ``details=True`` returns ``(estimate, records)`` where each
    record carries the trial name, its ratio, and ``coarse_ratio`` -- the
    same ratio with the window-RMS gradient ``S_eps`` in the numerator,
    measuring how much of the gradient survives local averaging.

    Raises
    ------
    EmptyTrials
        If an explicit trial list is empty, or no trial produced a
        nonzero denominator.
    NotConverged
        If any trial solve stalls.
    """
    if which not in _SLOTS:
        raise ValueError(f"which must be one of {sorted(_SLOTS)}, got {which!r}")
    num_kind, slot = _SLOTS[which]
    p = float(p)

    builtin = trials is None
    if builtin:
        named = list(_random_trials(mask, slot, seed, n_random))
        named.extend(_bump_trials(domain, mask, slot))
    else:
        named = [(f"user-{k}", F, f) for k, (F, f) in enumerate(trials)]
        if not named:
            raise EmptyTrials("estimate_constant needs at least one trial")

    A = assemble_laplacian(mask)
    M = auto_preconditioner(A)
    eps = domain.eps
    coarse_ok = round(eps / mask.h) >= 1

    records = []
    for name, F, f in named:
        _check_slot(slot, F, f)
        den = face_lp_norm(f, p, mask) if slot == "f" else lp_norm(F, p, mask)
        if den <= 0.0:
            continue
        b = assemble_rhs(mask, F=F, f=f)
        x, _ = conjugate_gradient(A, b, tol=tol, M=M)
        u = mask.embed(x)
        if num_kind == "grad":
            num = face_lp_norm(discrete_gradient(u, mask), p, mask)
        else:
            num = lp_norm(u, p, mask)
        rec = {"trial": name, "ratio": num / den}
        if details and coarse_ok:
            s = coarsened_gradient(u, mask, eps)
            rec["coarse_ratio"] = lp_norm(s, p, mask) / den
        records.append(rec)

    if builtin:
        w = witness_ratio(domain, mask, p, which, coarse=details)
        if w is not None:
            records.append(w)

    if not records:
        raise EmptyTrials("no usable trials (all denominators vanished)")
    best = max(r["ratio"] for r in records)
    if details:
        return best, records
    return best


# ---------------------------------------------------------------------------
# exponent fitting


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares power-law fit in log coordinates.

    Stores the raw input ``points`` and the ``x_transform`` tag, so
    refitting the stored pairs reproduces ``slope`` bit for bit.
    ``residuals`` are per-point errors of ``ln y`` against the fitted
    line, in input order.
    """

    slope: float
    intercept: float
    r_squared: float
    residuals: tuple
    points: tuple
    x_transform: str


_X_TRANSFORMS = ("ln x", "ln ln(1/x)")


def fit_exponent(points, x_transform="ln x"):
    """Ordinary least squares of ``ln y`` against a log abscissa.

    ``x_transform`` chooses the abscissa: ``"ln x"`` fits pure powers
    ``y ~ x^slope``; ``"ln ln(1/x)"`` fits log-laws ``y ~ |ln x|^slope``
    (x < 1 required so the inner logarithm is positive).

    Raises
    ------
    TooFewPoints
        For fewer than three points.
    NonpositiveData
        If any x or y is <= 0, or x >= 1 under ``"ln ln(1/x)"``.
    """
    if x_transform not in _X_TRANSFORMS:
        raise ValueError(
            f"x_transform must be one of {_X_TRANSFORMS}, got {x_transform!r}"
        )
    pts = tuple((float(x), float(y)) for x, y in points)
    if len(pts) < 3:
        raise TooFewPoints(f"need at least 3 points, got {len(pts)}")
    xs = np.array([x for x, _ in pts])
    ys = np.array([y for _, y in pts])
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise NonpositiveData("fit_exponent needs strictly positive x and y")
    if x_transform == "ln x":
        t = np.log(xs)
    else:
        if np.any(xs >= 1.0):
            raise NonpositiveData("ln ln(1/x) needs x < 1")
        t = np.log(np.log(1.0 / xs))
    w = np.log(ys)

    tbar = t.mean()
    wbar = w.mean()
    stt = float(np.sum((t - tbar) ** 2))
    if stt == 0.0:
        raise ValueError("abscissa values are all equal; slope undefined")
    slope = float(np.sum((t - tbar) * (w - wbar)) / stt)
    intercept = wbar - slope * tbar
    fitted = intercept + slope * t
    resid = w - fitted
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((w - wbar) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-28 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return ScalingFit(
        slope=slope,
        intercept=float(intercept),
        r_squared=r2,
        residuals=tuple(float(r) for r in resid),
        points=pts,
        x_transform=x_transform,
    )
