"""Smooth periodic manufactured solution and its load ``f = -lap u``."""
import numpy as np

from dgmg.basis import interp_matrix, make_basis
from dgmg.operator import node_coordinates
from dgmg.tensor import kron3_apply

__all__ = ["ManufacturedProblem", "manufactured_problem", "l2_error"]

_HALF_PI = 0.5 * np.pi

# u = prod_i cos(k_i . x + phi_i); sines carry a phase of -pi/2
_FACTORS = (
    ((2.0, 0.0, -2.0), 0.0),
    ((1.0, 0.0, 0.0), 1.0 - _HALF_PI),
    ((-1.0, 0.0, 0.0), 1.0 - _HALF_PI),
    ((3.0, 0.0, 0.0), -_HALF_PI),
    ((3.0, -2.0, 2.0), -_HALF_PI),
)


class ManufacturedProblem:
    """Exact solution and load on the box ``2 pi (s_x, s_y, s_z)``.

    ``u = cos(2x - 2z) sin(1 + x) sin(1 - x) sin(3x) sin(3x - 2y + 2z)``.
    All wave vectors are integer, so ``u`` is periodic on every box whose
    extents are integer multiples of ``2 pi``.
    """

    def __init__(self, multipliers=(1, 1, 1)):
        s = tuple(int(m) for m in multipliers)
        if len(s) != 3 or min(s) < 1:
            raise ValueError(f"multipliers must be three positive integers, got {multipliers}")
        self.multipliers = s
        self.extents = tuple(2.0 * np.pi * m for m in s)
        self._k = np.array([k for k, _ in _FACTORS])
        self._phi = np.array([p for _, p in _FACTORS])

    def _phases(self, x, y, z):
        x, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z)))
        return [k[0] * x + k[1] * y + k[2] * z + p for k, p in zip(self._k, self._phi)]

    def u(self, x, y, z):
        out = 1.0
        for a in self._phases(x, y, z):
            out = out * np.cos(a)
        return out

    def f(self, x, y, z):
        """``-lap u`` by the product rule over the cosine factors."""
        arg = self._phases(x, y, z)
        c = [np.cos(a) for a in arg]
        s = [np.sin(a) for a in arg]
        n = len(c)
        kk = self._k @ self._k.T
        u = np.prod(c, axis=0)
        lap = -np.trace(kk) * u
        for i in range(n):
            for j in range(i + 1, n):
                rest = np.prod([c[l] for l in range(n) if l not in (i, j)], axis=0)
                lap = lap + 2.0 * kk[i, j] * s[i] * s[j] * rest
        return -lap


def manufactured_problem(sx=1, sy=1, sz=1):
    """Return ``(u, f)`` callables for the box ``2 pi (sx, sy, sz)``."""
    prob = ManufacturedProblem((sx, sy, sz))
    return prob.u, prob.f


def l2_error(grid, basis, uh, u_exact, order=None, modulo_constant=False):
    """L2 norm of ``uh - u_exact`` with Gauss quadrature of ``order`` points.

    The discrete field is interpolated to a Gauss rule that is exact for
    the squared polynomial part (``P + 3`` points by default). With
    ``modulo_constant`` the mean of the error is removed first, which is the
    natural norm for the periodic problem.
    """
    q = make_basis("GL", (order or basis.P + 3) - 1)
    I = interp_matrix(basis, q.nodes)
    uq = kron3_apply(I, I, I, uh)
    X, Y, Z = node_coordinates(grid, q)
    err = uq - u_exact(X, Y, Z)
    w = q.qweights
    wq = w[:, None, None] * w[None, :, None] * w[None, None, :]
    if modulo_constant:
        err = err - np.sum(err * wq) / (wq.sum() * grid.num_elements)
    dx, dy, dz = grid.spacing
    return float(np.sqrt(np.sum(err ** 2 * wq) * dx * dy * dz / 8.0))
