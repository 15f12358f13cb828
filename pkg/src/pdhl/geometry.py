"""Exact geometry of box domains perforated by a lattice of small holes.

The perforated domain is built from three ingredients: an open axis-aligned
box, a cell size ``eps`` fixing the lattice ``eps * z`` for ``z`` in Z^d, and
a relative hole size ``eta`` in (0, 1/2).  Each lattice cell whose closed
unit cube ``eps * (z + Q(0,1))`` fits inside the box receives one hole

    ``eps * (z + offset) + (eps * eta) * shape``,

where the offset lives in the open cube ``(-1/4, 1/4)^d`` and the shape is a
closed convex set from a small catalogue (balls, axis-aligned ellipses,
axis-aligned squares/cubes) with circumradius at most 1/8.  Everything in
this module is exact set arithmetic on floats; no grid is involved.

Conventions: ``Q(z, s)`` denotes the open cube of side ``s`` centered at
``z``, so admissible offsets have every coordinate strictly inside
``(-1/4, 1/4)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EtaOutOfRange, OffsetOutOfRange, ShapeTooLarge

# Node/point classification labels.  Kept as small ints so grid code can
# store them directly in uint8 arrays.
FLUID = 0
HOLE = 1
EXTERIOR = 2
OUTER_BOUNDARY = 3

#: circumradius cap: every hole shape must fit in the ball of radius 1/8
SHAPE_RADIUS_CAP = 0.125

_TOL = 1e-12


@dataclass(frozen=True)
class HoleShape:
    """A closed reference hole shape, described in unit-cell coordinates.

    Instances are produced by the factory functions :func:`ball`,
    :func:`axis_ellipse` and :func:`square`; the kind/params encoding is an
    implementation detail.

    Attributes
    ----------
    kind : str
        One of ``"ball"``, ``"axis_ellipse"``, ``"square"``.
    params : tuple of float
        Shape parameters (radius, semi-axes, or half-side).
    inradius : float
        Radius of the largest ball contained in the shape.
    circumradius : float
        Radius of the smallest ball containing the shape.
    """

    kind: str
    params: tuple
    inradius: float
    circumradius: float

    def contains(self, w):
        """Membership test in shape coordinates (closed set).

        Parameters
        ----------
        w : array_like, shape (..., d)
            Points in the shape's own coordinates (the hole in physical
            space is ``center + eps*eta*shape``).

        Returns
        -------
        ndarray of bool, shape (...)
        """
        w = np.asarray(w, dtype=float)
        if self.kind == "ball":
            (rho,) = self.params
            return np.sum(w * w, axis=-1) <= rho * rho * (1.0 + _TOL)
        if self.kind == "axis_ellipse":
            semi = np.asarray(self.params, dtype=float)
            return np.sum((w / semi) ** 2, axis=-1) <= 1.0 + _TOL
        if self.kind == "square":
            (half,) = self.params
            return np.max(np.abs(w), axis=-1) <= half * (1.0 + _TOL)
        raise ValueError(f"unknown shape kind {self.kind!r}")

    def half_extents(self, dim):
        """Per-axis half-widths of the shape's bounding box."""
        if self.kind == "ball":
            return np.full(dim, self.params[0])
        if self.kind == "axis_ellipse":
            return np.asarray(self.params, dtype=float)
        if self.kind == "square":
            return np.full(dim, self.params[0])
        raise ValueError(f"unknown shape kind {self.kind!r}")


def ball(rho):
    """Ball of radius ``rho`` (any dimension)."""
    rho = float(rho)
    if rho <= 0:
        raise ValueError("ball radius must be positive")
    return HoleShape("ball", (rho,), inradius=rho, circumradius=rho)


def axis_ellipse(semi_axes):
    """Axis-aligned ellipse/ellipsoid with the given semi-axes."""
    semi = tuple(float(a) for a in semi_axes)
    if len(semi) < 2:
        raise ValueError("axis_ellipse needs one semi-axis per dimension")
    if min(semi) <= 0:
        raise ValueError("semi-axes must be positive")
    return HoleShape("axis_ellipse", semi, inradius=min(semi), circumradius=max(semi))


def square(half_side, dim):
    """Axis-aligned square (d=2) or cube (d=3) with the given half-side."""
    half = float(half_side)
    if half <= 0:
        raise ValueError("square half-side must be positive")
    return HoleShape(
        "square", (half,), inradius=half, circumradius=half * math.sqrt(dim)
    )


@dataclass(frozen=True)
class PerforatedDomain:
    """An open box minus one small hole per interior lattice cell.

    Attributes
    ----------
    dim : int
    outer : tuple of (float, float)
        Per-axis open interval of the box.
    eps : float
        Lattice cell size.
    eta : float
        Relative hole size, in (0, 1/2).
    cells : dict
        Maps each active lattice index ``z`` (tuple of int) to its
        ``(offset, shape)`` pair.
    """

    dim: int
    outer: tuple
    eps: float
    eta: float
    cells: dict = field(repr=False)

    @property
    def active(self):
        """Active lattice indices (cells that carry a hole)."""
        return self.cells.keys()

    def hole_center(self, z):
        """Physical center ``eps * (z + offset)`` of cell ``z``'s hole."""
        offset, _ = self.cells[z]
        return self.eps * (np.asarray(z, dtype=float) + np.asarray(offset))

    def side_lengths(self):
        return np.array([hi - lo for lo, hi in self.outer])


def uniform_plan(shape, offset=None):
    """Hole plan assigning the same shape (and offset) to every cell.

    Parameters
    ----------
    shape : HoleShape
    offset : sequence of float, optional
        Common center offset in ``(-1/4, 1/4)^d``; defaults to zero.

    Returns
    -------
    callable
        ``plan(z) -> (offset, shape)`` suitable for :func:`build_domain`.
    """

    def plan(z):
        if offset is None:
            return (0.0,) * len(z), shape
        return tuple(offset), shape

    return plan


def random_plan(shape, seed, amplitude=0.24):
    """Hole plan with reproducible per-cell random offsets.

    Offsets are drawn uniformly from ``(-amplitude, amplitude)^d`` using a
    counter-based RNG keyed on the cell index, so the plan is a pure
    function of ``(seed, z)`` and independent of evaluation order.
    """
    if not 0 <= amplitude < 0.25:
        raise ValueError("offset amplitude must lie in [0, 1/4)")

    def plan(z):
        # zig-zag encode lattice indices so negative cells get distinct keys
        key = [seed] + [2 * zi if zi >= 0 else -2 * zi - 1 for zi in z]
        rng = np.random.default_rng(key)
        off = rng.uniform(-amplitude, amplitude, size=len(z))
        return tuple(off), shape

    return plan


def build_domain(outer, eps, eta, hole_plan):
    """Construct a perforated box domain.

    A lattice cell ``z`` is active when the closed cube
    ``eps * (z + Q(0,1))`` is contained in the closed box; each active cell
    receives the hole described by ``hole_plan(z)``.

    Parameters
    ----------
    outer : sequence of (float, float)
        Per-axis bounds of the open box.
    eps : float
        Cell size, positive.
    eta : float
        Relative hole size; must lie in (0, 1/2).
    hole_plan : callable
        ``z -> (offset, shape)`` with ``z`` a tuple of ints.

    Returns
    -------
    PerforatedDomain

    Raises
    ------
    EtaOutOfRange
        If ``eta`` is outside (0, 1/2).
    OffsetOutOfRange
        If a plan offset leaves the open cube ``(-1/4, 1/4)^d``.
    ShapeTooLarge
        If a plan shape has circumradius above 1/8.
    """
    outer = tuple((float(lo), float(hi)) for lo, hi in outer)
    dim = len(outer)
    if dim not in (2, 3):
        raise ValueError("only dimensions 2 and 3 are supported")
    for lo, hi in outer:
        if not hi > lo:
            raise ValueError("outer box has a degenerate axis")
    eps = float(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    eta = float(eta)
    if not 0.0 < eta < 0.5:
        raise EtaOutOfRange(f"eta must lie in (0, 1/2), got {eta}")

    # Per-axis admissible lattice range: eps*(z - 1/2) >= lo and
    # eps*(z + 1/2) <= hi, with a tolerance forgiving exact-fit roundoff.
    ranges = []
    for lo, hi in outer:
        z_min = math.ceil(lo / eps + 0.5 - _TOL / eps)
        z_max = math.floor(hi / eps - 0.5 + _TOL / eps)
        ranges.append(range(z_min, z_max + 1))

    cells = {}
    for z in itertools.product(*ranges):
        offset, shape = hole_plan(z)
        offset = tuple(float(c) for c in offset)
        if len(offset) != dim:
            raise OffsetOutOfRange(f"offset for cell {z} has wrong dimension")
        if max(abs(c) for c in offset) >= 0.25:
            raise OffsetOutOfRange(
                f"offset {offset} for cell {z} leaves (-1/4, 1/4)^{dim}"
            )
        if shape.circumradius > SHAPE_RADIUS_CAP * (1.0 + _TOL):
            raise ShapeTooLarge(
                f"shape circumradius {shape.circumradius} exceeds 1/8 in cell {z}"
            )
        cells[z] = (offset, shape)

    return PerforatedDomain(dim=dim, outer=outer, eps=eps, eta=eta, cells=cells)


def classify_point(domain, x):
    """Classify a point as FLUID, HOLE, or EXTERIOR.

    Points outside the open box (boundary included) are EXTERIOR; points
    inside a closed hole are HOLE; remaining box points are FLUID.

    Parameters
    ----------
    domain : PerforatedDomain
    x : array_like, shape (dim,)

    Returns
    -------
    int
        One of :data:`FLUID`, :data:`HOLE`, :data:`EXTERIOR`.
    """
    x = np.asarray(x, dtype=float)
    for xi, (lo, hi) in zip(x, domain.outer):
        if not lo < xi < hi:
            return EXTERIOR
    # Holes never meet cell faces (offset < 1/4, hole radius < 1/16), so
    # only the cell containing x can claim it.
    z = tuple(int(round(xi / domain.eps)) for xi in x)
    entry = domain.cells.get(z)
    if entry is not None:
        offset, shape = entry
        center = domain.eps * (np.asarray(z, dtype=float) + np.asarray(offset))
        w = (x - center) / (domain.eps * domain.eta)
        if shape.contains(w):
            return HOLE
    return FLUID
