"""Cellwise potentials and the intermediate Schrödinger problem.

Replacing the perforations by the potential ``lambda^2 * V`` — each lattice
cell contributing the capacity of its hole — turns the perforated Poisson
problem into a Schrödinger problem on the unperforated box:

    (-Delta + lambda^2 V) u = F,   u = g on the outer boundary,

with ``lambda^2 = sigma^{-2}`` the squared inverse of the cell scale.  The
quality of that replacement is measured by the gradient norm of
``u_eps - chi * u0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import (
    assemble_laplacian,
    assemble_rhs,
    dirichlet_rhs,
    discrete_gradient,
    face_lp_norm,
)
from .errors import MissingProfile, ShapeMismatch
from .linsolve import auto_preconditioner, conjugate_gradient


@dataclass(frozen=True)
class PotentialField:
    """Piecewise-constant cell potential and its Schrödinger scale.

    ``values`` holds the capacity of the containing cell's hole shape at
    every node; ``lambda2`` is the factor multiplying it in the operator.
    """

    values: np.ndarray
    lambda2: float


def build_potential(domain, mask, profiles):
    """Cellwise potential: capacity of each cell's hole shape.

    Every node takes the capacity of the shape in its lattice cell
    (``z = floor(x/eps + 1/2)`` per axis — the hole offset never moves the
    cell boundaries).  Nodes in cells that carry no hole (cells cut by the
    outer boundary) take the value of the nearest active cell, clamping
    the cell index per axis; this keeps piecewise structure intact — a
    plan with two alternating shapes still yields exactly two values.

    Raises MissingProfile if an active cell's shape has no profile.
    """
    from .constants_lab import sigma_scale

    if not domain.cells:
        raise MissingProfile("domain has no active cells to take capacities from")

    capacity = {}
    for z, (_, shape) in domain.cells.items():
        prof = profiles.get(shape)
        if prof is None:
            raise MissingProfile(f"no profile supplied for shape {shape} (cell {z})")
        capacity[z] = prof.capacity

    active = np.array(sorted(domain.cells.keys()))
    z_lo = active.min(axis=0)
    z_hi = active.max(axis=0)

    # dense capacity table over the active index box (a full product range)
    table = np.empty(tuple(z_hi - z_lo + 1))
    for z, cap in capacity.items():
        table[tuple(np.asarray(z) - z_lo)] = cap

    # per-axis cell index of every node, clamped into the active range
    cell_idx = []
    for a in range(mask.dim):
        coord = mask.node_coords(a)
        idx = np.floor(coord / domain.eps + 0.5).astype(int)
        cell_idx.append(np.clip(idx, z_lo[a], z_hi[a]) - z_lo[a])

    V = table[np.ix_(*cell_idx)]

    sigma = sigma_scale(domain.dim, domain.eps, domain.eta)
    return PotentialField(values=V, lambda2=1.0 / sigma**2)


def solve_schrodinger(mask, lambda2, V, g=None, F=None, tol=1e-10, M=None):
    """Solve ``(-Delta + lambda2 * V) u = F`` with Dirichlet data ``g``.

    ``mask`` is normally the hole-free box (the problem lives on the
    unperforated domain), but any GridMask works — non-fluid nodes carry
    the values of ``g``.  With ``lambda2 = 0`` this is exactly the Poisson
    solve.  Returns the full-grid field with ``g`` at non-fluid nodes.
    """
    if lambda2 < 0:
        raise ValueError("lambda2 must be nonnegative")
    Varr = np.asarray(getattr(V, "values", V), dtype=float)
    if Varr.shape != mask.shape:
        raise ShapeMismatch(
            f"potential shape {Varr.shape} does not match grid {mask.shape}"
        )
    if np.any(Varr <= 0):
        raise ValueError("potential must be positive")

    from scipy.sparse import diags

    A = assemble_laplacian(mask)
    if lambda2 > 0:
        A = (A + diags(lambda2 * mask.extract(Varr))).tocsr()
    b = assemble_rhs(mask, F=F)
    if g is not None:
        b = b + dirichlet_rhs(mask, g)
    if M is None:
        M = auto_preconditioner(A)
    x, _ = conjugate_gradient(A, b, tol=tol, M=M)
    u = mask.embed(x)
    if g is not None:
        u[~mask.is_fluid] = np.asarray(g)[~mask.is_fluid]
    return u


def approximation_error(u_eps, chi, u0, mask):
    """Gradient-norm distance ``||G(u_eps - chi * u0)||_2`` over the fluid.

    ``u_eps`` is the perforated solution (zero in holes), ``u0`` the
    intermediate solution on the unperforated box, ``chi`` the corrector
    (CorrectorField or plain array).
    """
    chiv = np.asarray(getattr(chi, "values", chi))
    u_eps = np.asarray(u_eps)
    u0 = np.asarray(u0)
    if not (u_eps.shape == chiv.shape == u0.shape == mask.shape):
        raise ShapeMismatch(
            f"field shapes {u_eps.shape}, {chiv.shape}, {u0.shape} must all "
            f"match grid {mask.shape}"
        )
    diff = u_eps - chiv * u0
    return face_lp_norm(discrete_gradient(diff, mask), 2, mask)
