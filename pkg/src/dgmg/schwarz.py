"""Weighted overlapping additive Schwarz smoother on element-centred subdomains.

Every element, extended by a few node layers adopted from its six face
neighbours, forms one subdomain. The restricted operator
``A_ss = R_s A R_s^T`` keeps the tensor-product structure of ``A`` and is
inverted by fast diagonalization. Local corrections are blended with a
smooth hat-shaped weight that forms a partition of unity.

On a uniform periodic grid all subdomains are congruent, so a single set of
1D eigenpairs and weights per direction serves every element; gathering and
scattering of the windows is done for all elements at once.
"""
from dataclasses import dataclass, field

import numpy as np

from dgmg.basis import node_distance_to_face
from dgmg.errors import DimensionError
from dgmg.operator import ELEM_AXIS, NODE_AXIS, residual
from dgmg.tensor import apply_along, kron3_apply, sym_generalized_eig

__all__ = [
    "OverlapSpec",
    "resolve_layers",
    "resolve_overlap",
    "transition_width",
    "smoothstep",
    "hat_weight",
    "window_weights",
    "SubdomainSolver",
    "build_subdomain_solver",
    "subdomain_solve",
    "restricted_apply",
    "gather",
    "scatter",
    "SchwarzSmoother",
    "smooth",
]

_TOL = 1e-12


@dataclass(frozen=True)
class OverlapSpec:
    """Subdomain overlap rule.

    ``mode`` is one of ``"fixed"`` (``value`` node layers), ``"relative"``
    (width ``value * dx`` in each direction) or ``"max_relative"`` (width
    ``min(value * max_j dx_j, dx)``). ``floor`` is a lower bound on the
    number of layers.
    """

    mode: str
    value: float
    floor: int = 0

    def __post_init__(self):
        if self.mode not in ("fixed", "relative", "max_relative"):
            raise ValueError(f"unknown overlap mode {self.mode!r}")
        if self.mode == "fixed":
            if int(self.value) != self.value or self.value < 0:
                raise ValueError("fixed overlap needs a non-negative layer count")
        elif not 0.0 < self.value <= 1.0:
            raise ValueError("relative overlap must lie in (0, 1]")
        if self.floor < 0:
            raise ValueError("floor must be non-negative")

    @classmethod
    def fixed_nodes(cls, n_o, floor=0):
        return cls("fixed", int(n_o), floor)

    @classmethod
    def relative(cls, alpha, floor=0):
        return cls("relative", float(alpha), floor)

    @classmethod
    def max_relative(cls, alpha, floor=0):
        return cls("max_relative", float(alpha), floor)

    def label(self):
        if self.mode == "fixed":
            s = f"n_o={int(self.value)}"
        elif self.mode == "relative":
            s = f"{self.value:g} rel"
        else:
            s = f"{self.value:g} max"
        return s + (f", n_o>={self.floor}" if self.floor else "")


def resolve_layers(spec, basis, delta, delta_max):
    """Number of neighbour node layers adopted across one face."""
    p = basis.P + 1
    if spec.mode == "fixed":
        n = min(int(spec.value), p)
    else:
        if spec.mode == "relative":
            width = spec.value * delta
        else:
            width = min(spec.value * delta_max, delta)
        ref_width = 2.0 * width / delta
        dist = node_distance_to_face(basis, "right")
        n = int(np.count_nonzero(dist <= ref_width + _TOL))
    return min(max(n, spec.floor), p)


def resolve_overlap(spec, basis, spacing):
    """Layer counts ``((left, right) for x, y, z)`` for one level."""
    dmax = max(spacing)
    out = []
    for delta in spacing:
        n = resolve_layers(spec, basis, delta, dmax)
        out.append((n, n))
    return tuple(out)


def smoothstep(t):
    """Quintic ``10 t^3 - 15 t^4 + 6 t^5`` clipped to [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def hat_weight(xi, deltas, core=1.0):
    """Hat-shaped weight on a subdomain ``[-core - dl, core + dr]``.

    Zero at the subdomain boundary, one on the part of the core not reached
    by neighbouring subdomains, quintic on the transition strips of width
    ``2 dl`` and ``2 dr`` centred on the element faces. ``xi`` is given in
    the coordinate of the central element (``xi -+ 2`` in the neighbours).
    """
    dl, dr = deltas
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < -core - dl - _TOL) or np.any(xi > core + dr + _TOL):
        raise ValueError("point outside the subdomain")
    if dl > 0:
        ql = smoothstep((xi + core + dl) / (2.0 * dl))
    else:
        ql = (xi >= -core - _TOL).astype(float)
    if dr > 0:
        qr = smoothstep((core + dr - xi) / (2.0 * dr))
    else:
        qr = (xi <= core + _TOL).astype(float)
    # exact values lie in [0, 1]; clip round-off
    return np.clip(ql + qr - 1.0, 0.0, 1.0)


def transition_width(basis, layers):
    """Half-width (reference units) of the weight transition at one face.

    The transition runs from the first neighbour node *not* adopted, where
    the truncated subdomain problem carries its homogeneous Dirichlet
    condition, to its mirror point inside the core. With all neighbour nodes
    adopted it reaches the neighbour's far face.
    """
    dist = node_distance_to_face(basis, "right")
    return float(dist[layers]) if layers < dist.size else 2.0


def window_weights(basis, layers):
    """Weights at the nodes of one subdomain window ``[left | core | right]``."""
    lL, lR = layers
    x = basis.nodes
    pos = np.concatenate([x[x.size - lL:] - 2.0, x, x[:lR] + 2.0])
    return hat_weight(pos, (transition_width(basis, lL), transition_width(basis, lR)))


@dataclass(frozen=True)
class _Direction:
    layers: tuple
    L: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    lam: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class SubdomainSolver:
    """Fast-diagonalization inverse of ``A_ss`` plus the 1D weights.

    ``dirs`` holds per-direction data in (x, y, z) order. ``inv_eigsum`` is
    ``1 / (lam_x + lam_y + lam_z)`` shaped ``(mz, my, mx)``.
    """

    dirs: tuple
    inv_eigsum: np.ndarray = field(repr=False)

    @property
    def window_shape(self):
        return tuple(d.m.size for d in reversed(self.dirs))

    @property
    def layers(self):
        return tuple(d.layers for d in self.dirs)

    def weights(self):
        wx, wy, wz = (d.w for d in self.dirs)
        return wz[:, None, None] * wy[None, :, None] * wx[None, None, :]


def _window_indices(p, layers):
    lL, lR = layers
    # element 1 of the periodic line; needs at least 3 elements
    return np.concatenate(
        [np.arange(p - lL, p), p + np.arange(p), 2 * p + np.arange(lR)]
    )


def build_subdomain_solver(ops, layers):
    """Restrict the periodic 1D operators to one subdomain window per direction
    and diagonalize them."""
    dirs = []
    for op, lay in zip(ops, layers):
        p = op.size
        if not all(0 <= n <= p for n in lay):
            raise ValueError(f"layer counts {lay} exceed the element size {p}")
        if op.n_e < 3:
            raise ValueError("need at least 3 elements per direction")
        if p + sum(lay) >= op.n_e * p:
            raise ValueError("subdomain window covers the whole periodic line")
        idx = _window_indices(p, lay)
        L = op.dense()[np.ix_(idx, idx)]
        m = op.mass()[idx]
        eig = sym_generalized_eig(L, m)
        dirs.append(_Direction(tuple(lay), L, m, eig.S, eig.lam, window_weights(op.basis, lay)))
    lx, ly, lz = (d.lam for d in dirs)
    eigsum = lz[:, None, None] + ly[None, :, None] + lx[None, None, :]
    scale = max(np.abs(lx).max(), np.abs(ly).max(), np.abs(lz).max())
    if eigsum.min() <= 1e-13 * scale:
        raise ValueError(
            f"restricted subdomain operator is singular (min eigenvalue sum {eigsum.min():.3e})"
        )
    return SubdomainSolver(tuple(dirs), 1.0 / eigsum)


def subdomain_solve(sd, r_s):
    """Solve ``A_ss du = r_s`` for one or a batch of subdomain blocks."""
    r_s = np.asarray(r_s, dtype=float)
    if r_s.shape[-3:] != sd.window_shape:
        raise DimensionError(f"block shape {r_s.shape[-3:]} != window {sd.window_shape}")
    Sx, Sy, Sz = (d.S for d in sd.dirs)
    v = kron3_apply(Sz.T, Sy.T, Sx.T, r_s)
    v *= sd.inv_eigsum
    return kron3_apply(Sz, Sy, Sx, v)


def restricted_apply(sd, v):
    """Apply ``A_ss`` to subdomain blocks (used to verify the inverse)."""
    dx, dy, dz = sd.dirs
    mx = dx.m[None, None, :]
    my = dy.m[None, :, None]
    mz = dz.m[:, None, None]
    out = (mz * my) * apply_along(dx.L, v, -1)
    out += (mz * mx) * apply_along(dy.L, v, -2)
    out += (my * mx) * apply_along(dz.L, v, -3)
    return out


def gather(u, layers):
    """Restrict a field to all subdomain windows at once.

    Returns shape ``(nz, ny, nx, mz, my, mx)``, block ``[ez, ey, ex]`` being
    ``R_s u`` for the subdomain centred on element ``(ex, ey, ez)``.
    """
    for d, (lL, lR) in enumerate(layers):
        ea, na = ELEM_AXIS[d], NODE_AXIS[d]
        p = u.shape[na]
        parts = []
        if lL:
            parts.append(np.take(np.roll(u, 1, axis=ea), np.arange(p - lL, p), axis=na))
        parts.append(u)
        if lR:
            parts.append(np.take(np.roll(u, -1, axis=ea), np.arange(lR), axis=na))
        u = np.concatenate(parts, axis=na) if len(parts) > 1 else u
    return u


def scatter(v, layers):
    """Sum the window blocks back into a field: ``sum_s R_s^T v_s``."""
    for d, (lL, lR) in enumerate(layers):
        ea, na = ELEM_AXIS[d], NODE_AXIS[d]
        m = v.shape[na]
        p = m - lL - lR
        out = np.take(v, np.arange(lL, lL + p), axis=na)
        if lL:
            left = np.roll(np.take(v, np.arange(lL), axis=na), -1, axis=ea)
            idx = [slice(None)] * v.ndim
            idx[na] = slice(p - lL, p)
            out[tuple(idx)] += left
        if lR:
            right = np.roll(np.take(v, np.arange(lL + p, m), axis=na), 1, axis=ea)
            idx = [slice(None)] * v.ndim
            idx[na] = slice(0, lR)
            out[tuple(idx)] += right
        v = out
    return v


class SchwarzSmoother:
    """Weighted additive Schwarz iteration for one level."""

    def __init__(self, ops, layers):
        self.ops = ops
        self.solver = build_subdomain_solver(ops, layers)
        self.layers = self.solver.layers
        self._w = self.solver.weights()

    def correction(self, r):
        """``sum_s R_s^T W_s A_ss^{-1} R_s r``."""
        du = subdomain_solve(self.solver, gather(r, self.layers))
        du *= self._w
        return scatter(du, self.layers)

    def partition(self, v):
        """``sum_s R_s^T W_s R_s v``; the identity up to round-off."""
        return scatter(gather(v, self.layers) * self._w, self.layers)

    def __call__(self, u, f, steps):
        return smooth(self.ops, self, u, f, steps)


def smooth(ops, smoother, u, f, steps):
    """Run ``steps`` weighted Schwarz iterations on ``A u = f``."""
    for _ in range(steps):
        u = u + smoother.correction(residual(ops, u, f))
    return u
