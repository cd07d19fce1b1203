"""Cartesian grids, 1D interior penalty factors and the matrix-free 3D
Poisson operator.

A field on a grid with ``(nx, ny, nz)`` elements and degree ``P`` is stored
as an array of shape ``(nz, ny, nx, P+1, P+1, P+1)``: element-major, with the
x node index varying fastest inside each element. The system matrix is

    A = Mz (x) My (x) Lx + Mz (x) Ly (x) Mx + Lz (x) My (x) Mx

with diagonal 1D mass matrices ``M`` and periodic block-tridiagonal 1D
stiffness matrices ``L``.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from dgmg.errors import DimensionError
from dgmg.tensor import apply_along

__all__ = [
    "Grid",
    "DirectionalOperator",
    "penalty_min",
    "assemble_directional",
    "build_operators",
    "field_shape",
    "node_coordinates",
    "mass_diagonal",
    "apply_A",
    "assemble_rhs",
    "residual",
    "mass_mean",
    "remove_mean",
    "project_load",
]

# axis positions of a field array
ELEM_AXIS = {0: 2, 1: 1, 2: 0}
NODE_AXIS = {0: 5, 1: 4, 2: 3}


@dataclass(frozen=True)
class Grid:
    """Periodic box ``[0, lx] x [0, ly] x [0, lz]`` split into equal cuboids."""

    extents: tuple
    counts: tuple

    def __post_init__(self):
        ext = tuple(float(v) for v in self.extents)
        cnt = tuple(int(v) for v in self.counts)
        if len(ext) != 3 or len(cnt) != 3:
            raise ValueError("extents and counts need three entries (x, y, z)")
        if any(v <= 0.0 for v in ext):
            raise ValueError(f"extents must be positive, got {ext}")
        # fewer elements would make a subdomain's periodic neighbours alias
        if any(n < 3 for n in cnt):
            raise ValueError(f"need at least 3 elements per direction, got {cnt}")
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "counts", cnt)

    @classmethod
    def periodic_box(cls, n, multipliers=(1, 1, 1)):
        """Box with edges ``2 pi s_d`` and ``n`` elements per direction."""
        if np.isscalar(n):
            n = (n, n, n)
        return cls(tuple(2.0 * np.pi * s for s in multipliers), tuple(n))

    @property
    def spacing(self):
        return tuple(l / n for l, n in zip(self.extents, self.counts))

    @property
    def num_elements(self):
        nx, ny, nz = self.counts
        return nx * ny * nz

    @property
    def volume(self):
        lx, ly, lz = self.extents
        return lx * ly * lz


@dataclass(frozen=True)
class DirectionalOperator:
    """1D mass and periodic interior penalty stiffness for one direction.

    The global stiffness is block tridiagonal with diagonal block ``D``,
    sub-diagonal block ``C`` (coupling of an element to its left neighbour)
    and super-diagonal block ``C.T``.
    """

    basis: object
    delta: float
    n_e: int
    mu: float
    m: np.ndarray
    D: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)

    @property
    def L_blocks(self):
        return self.C, self.D, self.C.T

    @property
    def size(self):
        return self.basis.P + 1

    def stencil(self):
        """The ``(P+1) x 3(P+1)`` row block ``[C, D, C^T]``."""
        return np.hstack([self.C, self.D, self.C.T])

    def dense(self):
        """Assembled periodic 1D stiffness as a dense matrix."""
        p, n = self.size, self.n_e
        L = np.zeros((n * p, n * p))
        for e in range(n):
            r = slice(e * p, (e + 1) * p)
            L[r, r] += self.D
            left = (e - 1) % n
            L[r, left * p:(left + 1) * p] += self.C
            right = (e + 1) % n
            L[r, right * p:(right + 1) * p] += self.C.T
        return L

    def mass(self):
        """Global 1D mass diagonal."""
        return np.tile(self.m, self.n_e)


def penalty_min(P, delta):
    """Stability threshold ``P (P + 1) / delta`` of the penalty parameter.

    Exact for both GL and GLL bases with the face scaling used by
    :func:`assemble_directional`.
    """
    if P < 1 or delta <= 0:
        raise ValueError("need P >= 1 and delta > 0")
    return P * (P + 1) / delta


def assemble_directional(basis, delta, n_e, mu):
    """Assemble the 1D symmetric interior penalty operator.

    Per face the bilinear form is ``-{u'}[v] - [u]{v'} + (mu / 2) [u][v]``
    with ``[v] = v_left - v_right`` and ``{v} = (v_left + v_right) / 2``.
    With this scaling the operator is positive semi-definite exactly for
    ``mu >= penalty_min(P, delta)``.
    """
    if mu <= 0:
        raise ValueError(f"penalty must be positive, got {mu}")
    if delta <= 0 or n_e < 1:
        raise ValueError("need delta > 0 and n_e >= 1")
    if mu < penalty_min(basis.P, delta):
        warnings.warn(
            f"penalty {mu:g} below the stability threshold "
            f"{penalty_min(basis.P, delta):g}",
            stacklevel=2,
        )
    J = 2.0 / delta
    sigma = 0.5 * mu
    Dm, w = basis.diff, basis.qweights
    K = J * Dm.T @ (w[:, None] * Dm)

    # traces seen from the element left (-) and right (+) of a face
    vm, vp = basis.trace_right, basis.trace_left
    gm, gp = 0.5 * J * basis.dtrace_right, 0.5 * J * basis.dtrace_left

    # right face: element is "-", left face: element is "+"
    face_mm = -np.outer(vm, gm) - np.outer(gm, vm) + sigma * np.outer(vm, vm)
    face_pp = np.outer(vp, gp) + np.outer(gp, vp) + sigma * np.outer(vp, vp)
    # rows: element right of the face, columns: element left of it
    face_pm = np.outer(vp, gm) - np.outer(gp, vm) - sigma * np.outer(vp, vm)

    D = K + face_mm + face_pp
    D = 0.5 * (D + D.T)
    return DirectionalOperator(
        basis=basis,
        delta=float(delta),
        n_e=int(n_e),
        mu=float(mu),
        m=0.5 * delta * w,
        D=D,
        C=face_pm,
    )


def build_operators(grid, basis, penalty_factor=2.0):
    """Directional operators ``(x, y, z)`` with ``mu = factor * mu_min``."""
    ops = []
    for delta, n in zip(grid.spacing, grid.counts):
        mu = penalty_factor * penalty_min(basis.P, delta)
        ops.append(assemble_directional(basis, delta, n, mu))
    return tuple(ops)


def field_shape(grid, P):
    nx, ny, nz = grid.counts
    p = P + 1
    return (nz, ny, nx, p, p, p)


def _ops_shape(ops):
    p = tuple(op.size for op in ops)
    return (ops[2].n_e, ops[1].n_e, ops[0].n_e, p[2], p[1], p[0])


def _check(ops, u):
    if u.shape != _ops_shape(ops):
        raise DimensionError(
            f"field of shape {u.shape} does not match operator shape {_ops_shape(ops)}"
        )


def node_coordinates(grid, basis):
    """Physical node coordinates ``(X, Y, Z)`` broadcastable to field shape."""
    out = []
    for d, (delta, n) in enumerate(zip(grid.spacing, grid.counts)):
        x = np.arange(n)[:, None] * delta + 0.5 * delta * (basis.nodes[None, :] + 1.0)
        out.append(_place(x, d))
    return tuple(out)


def _place(a, d):
    """Reshape an ``(n_e, p)`` array to broadcast along direction ``d``."""
    shape = [1] * 6
    shape[ELEM_AXIS[d]], shape[NODE_AXIS[d]] = a.shape
    return a.reshape(shape)


def mass_diagonal(ops):
    """Diagonal of ``Mz (x) My (x) Mx`` shaped like one element block."""
    mx, my, mz = (op.m for op in ops)
    return mz[:, None, None] * my[None, :, None] * mx[None, None, :]


def stiffness_along(op, u, d):
    """Apply the periodic 1D stiffness of direction ``d`` to a field."""
    ea, na = ELEM_AXIS[d], NODE_AXIS[d]
    w = np.concatenate([np.roll(u, 1, axis=ea), u, np.roll(u, -1, axis=ea)], axis=na)
    return apply_along(op.stencil(), w, na)


def apply_A(ops, u):
    """Matrix-free product ``A u`` for directional operators ``(x, y, z)``."""
    u = np.asarray(u, dtype=float)
    _check(ops, u)
    mx, my, mz = (op.m for op in ops)
    mx = mx[None, None, :]
    my = my[None, :, None]
    mz = mz[:, None, None]
    out = (mz * my) * stiffness_along(ops[0], u, 0)
    out += (mz * mx) * stiffness_along(ops[1], u, 1)
    out += (my * mx) * stiffness_along(ops[2], u, 2)
    return out


def residual(ops, u, f):
    """Return ``f - A u``."""
    f = np.asarray(f, dtype=float)
    _check(ops, f)
    return f - apply_A(ops, u)


def assemble_rhs(grid, basis, f):
    """Load vector of ``f`` by nodal quadrature: ``w_i w_j w_k J f(x_ijk)``."""
    X, Y, Z = node_coordinates(grid, basis)
    vals = np.broadcast_to(f(X, Y, Z), field_shape(grid, basis.P))
    w = basis.qweights
    dx, dy, dz = grid.spacing
    wq = w[:, None, None] * w[None, :, None] * w[None, None, :] * (dx * dy * dz / 8.0)
    return np.array(vals * wq, dtype=float)


def mass_mean(ops, u):
    """Mass-weighted mean of a field, ``sum(M u) / sum(M)``."""
    Md = mass_diagonal(ops)
    return float((u * Md).sum() / (Md.sum() * u[..., 0, 0, 0].size))


def remove_mean(ops, u):
    """Subtract the mass-weighted mean, fixing the free constant."""
    return u - mass_mean(ops, u)


def project_load(ops, f):
    """Project a load vector onto the range of A (zero coefficient sum).

    The constant part of the underlying load function is removed:
    ``f - (sum f / |Omega|) M 1``.
    """
    Md = mass_diagonal(ops)
    vol = Md.sum() * f[..., 0, 0, 0].size
    return f - (f.sum() / vol) * Md
