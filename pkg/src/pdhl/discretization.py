"""Finite-difference discretization on uniform square grids.

Nodes live at ``lo + i*h`` per axis, fields are numpy arrays indexed
``u[ix, iy]`` (or ``u[ix, iy, iz]``).  A *node field* is any array of the
full grid shape; a :class:`FaceField` stores one array per axis holding
forward differences, so the axis-``a`` component has ``n - 1`` entries in
direction ``a``.  The discrete gradient includes the ``1/h`` factor; with
that convention the five/seven-point Laplacian restricted to unknowns
satisfies ``A = G^T G`` exactly.

Dirichlet conditions (outer boundary and hole surfaces) are imposed by
elimination: unknowns are the FLUID nodes only, and prescribed boundary
values enter the right-hand side through :func:`dirichlet_rhs`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidExponent, UnresolvedHoles
from .geometry import EXTERIOR, FLUID, HOLE, OUTER_BOUNDARY

_TOL = 1e-12

_FACE_KINDS = ("face-x", "face-y", "face-z")


@dataclass(frozen=True)
class FaceField:
    """Per-axis arrays of face values (forward differences)."""

    components: tuple

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, axis):
        return self.components[axis]

    @property
    def dim(self):
        return len(self.components)


class GridMask:
    """Uniform grid with a node classification and a dof numbering.

    Attributes
    ----------
    flags : ndarray of uint8
        Per-node label: FLUID, HOLE, EXTERIOR, or OUTER_BOUNDARY.
    h : float
        Grid spacing (equal in all axes).
    lo : ndarray
        Physical coordinates of node ``(0, ..., 0)``.
    dof_index : ndarray of int32
        Running index of each FLUID node in C order, -1 elsewhere.
    """

    def __init__(self, flags, h, lo=None):
        flags = np.ascontiguousarray(flags, dtype=np.uint8)
        self.flags = flags
        self.dim = flags.ndim
        self.shape = flags.shape
        self.h = float(h)
        if lo is None:
            lo = np.zeros(self.dim)
        self.lo = np.asarray(lo, dtype=float)
        self.is_fluid = flags == FLUID
        dof_index = np.full(flags.shape, -1, dtype=np.int32)
        dof_index[self.is_fluid] = np.arange(
            int(self.is_fluid.sum()), dtype=np.int32
        )
        self.dof_index = dof_index
        self.ndof = int(self.is_fluid.sum())

    def node_coords(self, axis):
        """Physical coordinates of the node planes along one axis."""
        return self.lo[axis] + self.h * np.arange(self.shape[axis])

    def extract(self, u):
        """Restrict a grid field to the dof vector (C order of FLUID nodes)."""
        return np.ascontiguousarray(u[self.is_fluid], dtype=float)

    def embed(self, vec):
        """Scatter a dof vector onto the grid, zero at non-FLUID nodes."""
        u = np.zeros(self.shape)
        u[self.is_fluid] = vec
        return u


def box_mask(n, dim, side=1.0, origin=0.0):
    """Hole-free mask of the closed box: boundary nodes Dirichlet, rest fluid."""
    flags = np.zeros((n,) * dim, dtype=np.uint8)
    for a in range(dim):
        sl_lo = [slice(None)] * dim
        sl_hi = [slice(None)] * dim
        sl_lo[a] = 0
        sl_hi[a] = n - 1
        flags[tuple(sl_lo)] = OUTER_BOUNDARY
        flags[tuple(sl_hi)] = OUTER_BOUNDARY
    return GridMask(flags, h=side / (n - 1), lo=np.full(dim, float(origin)))


def rasterize(domain, n):
    """Sample a perforated domain onto an ``n^d`` node grid.

    Outer-boundary nodes get OUTER_BOUNDARY, nodes inside a closed hole get
    HOLE, and the rest are FLUID unknowns.

    Parameters
    ----------
    domain : PerforatedDomain
        Must have a square outer box.
    n : int
        Nodes per axis (``n >= 2``).

    Raises
    ------
    UnresolvedHoles
        If some hole would span fewer than four grid intervals across its
        inscribed diameter (``2 * eps * eta * inradius < 4h``).
    """
    sides = domain.side_lengths()
    if not np.allclose(sides, sides[0], rtol=0, atol=_TOL):
        raise ValueError("rasterize requires a square outer box")
    n = int(n)
    if n < 2:
        raise ValueError("need at least two nodes per axis")
    h = float(sides[0]) / (n - 1)

    scale = domain.eps * domain.eta
    for z, (offset, shape) in domain.cells.items():
        if 2.0 * scale * shape.inradius < 4.0 * h * (1.0 - _TOL):
            raise UnresolvedHoles(
                f"hole in cell {z} spans under four grid intervals "
                f"(diameter {2 * scale * shape.inradius:.3g}, h={h:.3g})"
            )

    lo = np.array([b[0] for b in domain.outer])
    flags = np.zeros((n,) * domain.dim, dtype=np.uint8)
    for a in range(domain.dim):
        sl = [slice(None)] * domain.dim
        for edge in (0, n - 1):
            sl[a] = edge
            flags[tuple(sl)] = OUTER_BOUNDARY
            sl[a] = slice(None)

    coords = [lo[a] + h * np.arange(n) for a in range(domain.dim)]
    for z, (offset, shape) in domain.cells.items():
        center = domain.eps * (np.asarray(z, dtype=float) + np.asarray(offset))
        ext = scale * shape.half_extents(domain.dim)
        # bounding index window of the hole, clipped to the grid
        i_lo = np.maximum(np.ceil((center - ext - lo) / h - _TOL), 0).astype(int)
        i_hi = np.minimum(
            np.floor((center + ext - lo) / h + _TOL), n - 1
        ).astype(int)
        if np.any(i_hi < i_lo):
            continue
        local = np.meshgrid(
            *[coords[a][i_lo[a] : i_hi[a] + 1] for a in range(domain.dim)],
            indexing="ij",
        )
        pts = np.stack(local, axis=-1)
        inside = shape.contains((pts - center) / scale)
        window = tuple(slice(i_lo[a], i_hi[a] + 1) for a in range(domain.dim))
        sub = flags[window]
        sub[inside] = HOLE
        flags[window] = sub

    return GridMask(flags, h=h, lo=lo)


# ---------------------------------------------------------------------------
# difference operators


def discrete_gradient(u, mask):
    """Forward-difference gradient of a node field, with the 1/h factor.

    Faces whose two endpoints are both non-FLUID carry zero; all other
    faces use the stored node values, so a field that vanishes on Dirichlet
    nodes produces exactly the elimination-consistent gradient.
    """
    h = mask.h
    comps = []
    for a in range(mask.dim):
        lo_sl = [slice(None)] * mask.dim
        hi_sl = [slice(None)] * mask.dim
        lo_sl[a] = slice(None, -1)
        hi_sl[a] = slice(1, None)
        lo_sl, hi_sl = tuple(lo_sl), tuple(hi_sl)
        g = (u[hi_sl] - u[lo_sl]) / h
        dead = ~(mask.is_fluid[lo_sl] | mask.is_fluid[hi_sl])
        g[dead] = 0.0
        comps.append(g)
    return FaceField(tuple(comps))


def assemble_laplacian(mask):
    """Five/seven-point Laplacian over the FLUID unknowns, as CSR.

    Row ``i`` has diagonal ``2*dim/h**2`` and ``-1/h**2`` for each FLUID
    neighbor; Dirichlet neighbors contribute only to the diagonal, which
    makes the matrix symmetric positive definite and equal to ``G^T G``.
    """
    h2 = mask.h * mask.h
    ndof = mask.ndof
    rows = [np.arange(ndof, dtype=np.int32)]
    cols = [np.arange(ndof, dtype=np.int32)]
    vals = [np.full(ndof, 2.0 * mask.dim / h2)]
    for a in range(mask.dim):
        lo_sl = [slice(None)] * mask.dim
        hi_sl = [slice(None)] * mask.dim
        lo_sl[a] = slice(None, -1)
        hi_sl[a] = slice(1, None)
        lo_sl, hi_sl = tuple(lo_sl), tuple(hi_sl)
        both = mask.is_fluid[lo_sl] & mask.is_fluid[hi_sl]
        i = mask.dof_index[lo_sl][both]
        j = mask.dof_index[hi_sl][both]
        off = np.full(i.size, -1.0 / h2)
        rows.extend((i, j))
        cols.extend((j, i))
        vals.extend((off, off))
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ndof, ndof),
    )
    return A.tocsr()


def apply_operator(mask, u):
    """Matrix-free action of the Laplacian on a grid field.

    Equivalent to embedding ``A @ mask.extract(u)`` back on the grid, but
    without assembling the matrix; used for witness ratios on grids too
    large to hold a CSR copy.  Non-FLUID entries of ``u`` are ignored and
    the result vanishes there.
    """
    h2 = mask.h * mask.h
    um = np.where(mask.is_fluid, u, 0.0)
    v = um * (2.0 * mask.dim / h2)
    for a in range(mask.dim):
        lo_sl = [slice(None)] * mask.dim
        hi_sl = [slice(None)] * mask.dim
        lo_sl[a] = slice(None, -1)
        hi_sl[a] = slice(1, None)
        lo_sl, hi_sl = tuple(lo_sl), tuple(hi_sl)
        v[lo_sl] -= um[hi_sl] / h2
        v[hi_sl] -= um[lo_sl] / h2
    v[~mask.is_fluid] = 0.0
    return v


def face_divergence(f, mask):
    """Backward-difference divergence of a face field, as a grid field.

    ``(div f)_i = sum_a (f_a(i) - f_a(i - e_a)) / h`` at interior nodes;
    nodes on the grid boundary (never unknowns) are left at zero.  This is
    exactly ``-G^T`` applied to ``f``, so ``apply_operator(mask, u) ==
    -face_divergence(discrete_gradient(u, mask), mask)`` on the unknowns.
    """
    h = mask.h
    div = np.zeros(mask.shape)
    for a in range(mask.dim):
        comp = f[a]
        mid = [slice(None)] * mask.dim
        mid[a] = slice(1, -1)
        up = [slice(None)] * mask.dim
        up[a] = slice(1, None)
        dn = [slice(None)] * mask.dim
        dn[a] = slice(None, -1)
        div[tuple(mid)] += (comp[tuple(up)] - comp[tuple(dn)]) / h
    return div


def assemble_rhs(mask, F=None, f=None):
    """Right-hand side vector for ``-Delta u = F + div f``.

    ``b = F - G^T f`` restricted to the unknowns, i.e. the face field
    enters through ``face_divergence``.

    Parameters
    ----------
    mask : GridMask
    F : node field, optional
    f : FaceField, optional

    Returns
    -------
    ndarray, shape (ndof,)
    """
    b = np.zeros(mask.shape)
    if F is not None:
        b += F
    if f is not None:
        b += face_divergence(f, mask)
    return mask.extract(b)


def dirichlet_rhs(mask, g):
    """Lifting contribution of Dirichlet data to the right-hand side.

    For each unknown next to a Dirichlet node ``j``, adds ``g[j] / h**2``;
    this realizes the nonhomogeneous problem by elimination.  ``g`` is a
    grid field whose values matter only at non-FLUID nodes.
    """
    h2 = mask.h * mask.h
    gm = np.where(mask.is_fluid, 0.0, g)
    b = np.zeros(mask.shape)
    for a in range(mask.dim):
        lo_sl = [slice(None)] * mask.dim
        hi_sl = [slice(None)] * mask.dim
        lo_sl[a] = slice(None, -1)
        hi_sl[a] = slice(1, None)
        lo_sl, hi_sl = tuple(lo_sl), tuple(hi_sl)
        b[lo_sl] += gm[hi_sl] / h2
        b[hi_sl] += gm[lo_sl] / h2
    return mask.extract(b)


# ---------------------------------------------------------------------------
# norms


def _node_centered_components(f, mask):
    """Average the two faces of each node per axis (missing faces count 0)."""
    avgs = []
    for a in range(mask.dim):
        comp = f[a]
        avg = np.zeros(mask.shape)
        mid = [slice(None)] * mask.dim
        mid[a] = slice(1, -1)
        up = [slice(None)] * mask.dim
        up[a] = slice(1, None)
        dn = [slice(None)] * mask.dim
        dn[a] = slice(None, -1)
        avg[tuple(mid)] = 0.5 * (comp[tuple(up)] + comp[tuple(dn)])
        # edge nodes have one face; the missing one counts as zero
        first = [slice(None)] * mask.dim
        first[a] = 0
        last = [slice(None)] * mask.dim
        last[a] = -1
        avg[tuple(first)] = 0.5 * comp[tuple(first)]
        avg[tuple(last)] = 0.5 * comp[tuple(last)]
        avgs.append(avg)
    return avgs


def node_gradient_magnitude(f, mask):
    """Node-centered magnitude of a face field, on the full grid."""
    mag2 = np.zeros(mask.shape)
    for avg in _node_centered_components(f, mask):
        mag2 += avg * avg
    return np.sqrt(mag2)


def lp_norm(field, p, mask):
    """Discrete L^p norm over the fluid region.

    Node fields are summed over FLUID nodes with weight ``h^d``.  Face
    fields are first reduced to node-centered gradient magnitudes (the two
    faces of each node averaged per axis) and then treated the same way.

    Raises
    ------
    InvalidExponent
        If ``p < 1``.
    """
    p = float(p)
    if p < 1.0:
        raise InvalidExponent(f"Lebesgue exponent must be >= 1, got {p}")
    if isinstance(field, FaceField):
        field = node_gradient_magnitude(field, mask)
    vals = np.abs(field[mask.is_fluid])
    return float((mask.h**mask.dim * np.sum(vals**p)) ** (1.0 / p))


def face_lp_norm(f, p, mask):
    """Raw face L^p norm: ``(h^d sum over active faces |f|^p)^(1/p)``.

    Active faces are those with at least one FLUID endpoint — exactly the
    faces that pair with gradients of admissible fields, which makes the
    energy identity ``<Au, u> = ||Gu||^2`` exact in this norm.
    """
    p = float(p)
    if p < 1.0:
        raise InvalidExponent(f"Lebesgue exponent must be >= 1, got {p}")
    total = 0.0
    for a in range(mask.dim):
        comp = f[a]
        lo_sl = [slice(None)] * mask.dim
        hi_sl = [slice(None)] * mask.dim
        lo_sl[a] = slice(None, -1)
        hi_sl[a] = slice(1, None)
        active = mask.is_fluid[tuple(lo_sl)] | mask.is_fluid[tuple(hi_sl)]
        total += float(np.sum(np.abs(comp[active]) ** p))
    return float((mask.h**mask.dim * total) ** (1.0 / p))


# ---------------------------------------------------------------------------
# coarsened gradient


def _box_sum(v, m, axis, margin):
    """Sliding-window sum of half-width ``m`` along one axis, zero padded.

    With ``margin`` the output also covers window centers up to ``m`` nodes
    outside the array, so no mass is lost near the edges.
    """
    n = v.shape[axis]
    pad = [(0, 0)] * v.ndim
    pad[axis] = (1, 0)
    c = np.cumsum(np.pad(v, pad), axis=axis)

    def take(idx):
        return np.take(c, idx, axis=axis)

    if margin:
        centers = np.arange(-m, n + m)
    else:
        centers = np.arange(n)
    hi = np.clip(centers + m + 1, 0, n)
    lo = np.clip(centers - m, 0, n)
    return take(hi) - take(lo)


def coarsened_gradient(u, mask, eps, margin=False):
    """Local RMS of the gradient over cubes of side ``2*eps``.

    At each node ``x`` the value is the root-mean-square of the
    node-centered gradient magnitude over the window ``Q(x, 2*eps)``, with
    the gradient extended by zero outside the grid and the divisor always
    the full window cardinality.

    Parameters
    ----------
    u : node field
    mask : GridMask
    eps : float
        Window half-width; must be (close to) an integer number of cells.
    margin : bool
        When true, also return values at window centers up to ``eps``
        outside the grid, giving the exact whole-space L^2 identity; the
        output then has ``2*round(eps/h)`` extra nodes per axis.

    Returns
    -------
    ndarray
        Node field of window RMS values.
    """
    m = int(round(eps / mask.h))
    if m < 1:
        raise ValueError("window eps must span at least one grid interval")
    g = discrete_gradient(u, mask)
    mag = node_gradient_magnitude(g, mask)
    acc = mag * mag
    for a in range(mask.dim):
        acc = _box_sum(acc, m, axis=a, margin=margin)
    return np.sqrt(acc / float(2 * m + 1) ** mask.dim)


# ---------------------------------------------------------------------------
# snapshot format


def write_snapshot(path, array, kind="node"):
    """Write a field in the PDHL1 binary snapshot format.

    Layout: one ASCII header line ``PDHL1 <dim> <n> <kind>`` followed by
    the C-order little-endian float64 payload.  ``kind`` is ``node`` or
    ``face-x``/``face-y``/``face-z``; face kinds are one node shorter along
    their own axis.
    """
    array = np.asarray(array, dtype=float)
    dim = array.ndim
    if kind == "node":
        n = array.shape[0]
        expected = (n,) * dim
    elif kind in _FACE_KINDS[:dim]:
        a = _FACE_KINDS.index(kind)
        n = array.shape[(a + 1) % dim]
        expected = tuple(n - 1 if b == a else n for b in range(dim))
    else:
        raise ValueError(f"unknown snapshot kind {kind!r} for dim {dim}")
    if array.shape != expected:
        raise ValueError(
            f"array shape {array.shape} does not match kind {kind!r} "
            f"(expected {expected})"
        )
    with open(path, "wb") as fh:
        fh.write(f"PDHL1 {dim} {n} {kind}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(array, dtype="<f8").tobytes())


def read_snapshot(path):
    """Read a PDHL1 snapshot; returns ``(array, kind)``."""
    with open(path, "rb") as fh:
        header = bytearray()
        while True:
            ch = fh.read(1)
            if not ch:
                raise ValueError("truncated snapshot header")
            if ch == b"\n":
                break
            header.extend(ch)
        parts = header.decode("ascii").split()
        if len(parts) != 4 or parts[0] != "PDHL1":
            raise ValueError(f"not a PDHL1 snapshot: {header!r}")
        dim, n, kind = int(parts[1]), int(parts[2]), parts[3]
        if kind == "node":
            shape = (n,) * dim
        elif kind in _FACE_KINDS[:dim]:
            a = _FACE_KINDS.index(kind)
            shape = tuple(n - 1 if b == a else n for b in range(dim))
        else:
            raise ValueError(f"unknown snapshot kind {kind!r}")
        payload = fh.read()
    data = np.frombuffer(payload, dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise ValueError("snapshot payload size does not match header")
    return data.reshape(shape).copy(), kind
