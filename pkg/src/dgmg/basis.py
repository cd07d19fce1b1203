"""Nodal Lagrange bases on Gauss-Legendre (GL) and Gauss-Legendre-Lobatto
(GLL) points of the reference interval [-1, 1]."""
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Basis1D",
    "legendre",
    "gauss_legendre",
    "gauss_lobatto",
    "make_basis",
    "lagrange_eval",
    "lagrange_deriv",
    "interp_matrix",
    "node_distance_to_face",
]

KINDS = ("GLL", "GL")


def legendre(n, x):
    """Legendre polynomial ``P_n`` and its derivative at ``x``.

    Uses the three-term recurrence; the derivative formula is singular at
    ``x = +-1`` where the closed form ``n(n+1)/2 * (+-1)^(n-1)`` is used.
    """
    x = np.asarray(x, dtype=float)
    p0, p1 = np.ones_like(x), x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = n * (x * p1 - p0) / (x * x - 1.0)
    end = np.isclose(np.abs(x), 1.0, rtol=0, atol=1e-15)
    dp = np.where(end, 0.5 * n * (n + 1) * np.sign(x) ** (n - 1), dp)
    return p1, dp


def gauss_legendre(n, tol=1e-15, maxiter=100):
    """``n``-point Gauss-Legendre nodes and weights (exact to degree 2n-1)."""
    k = np.arange(n)
    x = -np.cos(np.pi * (k + 0.75) / (n + 0.5))
    for _ in range(maxiter):
        p, dp = legendre(n, x)
        dx = p / dp
        x = x - dx
        if np.abs(dx).max() < tol:
            break
    x = 0.5 * (x - x[::-1])
    _, dp = legendre(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    return x, w


def gauss_lobatto(n, tol=1e-15, maxiter=100):
    """``n``-point Gauss-Legendre-Lobatto nodes and weights.

    Nodes are the roots of ``(1 - x^2) P'_{n-1}(x)``, found by Newton
    iteration from the Chebyshev-Gauss-Lobatto points.
    """
    if n < 2:
        raise ValueError("Lobatto rule needs at least two points")
    N = n - 1
    x = -np.cos(np.pi * np.arange(n) / N)
    for _ in range(maxiter):
        pN, _ = legendre(N, x)
        pNm1, _ = legendre(N - 1, x)
        dx = (x * pN - pNm1) / (n * pN)
        dx[0] = dx[-1] = 0.0
        x = x - dx
        if np.abs(dx).max() < tol:
            break
    x = 0.5 * (x - x[::-1])
    x[0], x[-1] = -1.0, 1.0
    pN, _ = legendre(N, x)
    w = 2.0 / (N * n * pN * pN)
    return x, w


def _barycentric_weights(x):
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / diff.prod(axis=1)


def lagrange_eval(nodes, t):
    """Matrix ``V[i, j] = phi_j(t_i)`` of the Lagrange basis on ``nodes``."""
    nodes = np.asarray(nodes, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    b = _barycentric_weights(nodes)
    d = t[:, None] - nodes[None, :]
    hit = np.abs(d) < 1e-15
    d[hit] = 1.0
    terms = b[None, :] / d
    V = terms / terms.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    V[rows] = hit[rows].astype(float)
    return V


def lagrange_deriv(nodes, t):
    """Matrix ``D[i, j] = phi_j'(t_i)`` of the Lagrange basis on ``nodes``."""
    nodes = np.asarray(nodes, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    b = _barycentric_weights(nodes)
    n = nodes.size

    # nodal differentiation matrix
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    Dn = (b[None, :] / b[:, None]) / diff
    np.fill_diagonal(Dn, 0.0)
    np.fill_diagonal(Dn, -Dn.sum(axis=1))

    D = np.empty((t.size, n))
    for i, ti in enumerate(t):
        d = ti - nodes
        hit = np.flatnonzero(np.abs(d) < 1e-15)
        if hit.size:
            D[i] = Dn[hit[0]]
        else:
            phi = lagrange_eval(nodes, [ti])[0]
            D[i] = phi * ((1.0 / d).sum() - 1.0 / d)
    return D


@dataclass(frozen=True)
class Basis1D:
    """Lagrange basis of degree ``P`` on GL or GLL points.

    ``diff[i, j]`` is the derivative of basis function ``j`` at node ``i``.
    ``trace_left``/``trace_right`` hold basis values at xi = -1 and xi = +1;
    ``dtrace_left``/``dtrace_right`` the corresponding derivatives.
    """

    kind: str
    P: int
    nodes: np.ndarray
    qweights: np.ndarray
    diff: np.ndarray = field(repr=False)
    trace_left: np.ndarray = field(repr=False)
    trace_right: np.ndarray = field(repr=False)
    dtrace_left: np.ndarray = field(repr=False)
    dtrace_right: np.ndarray = field(repr=False)

    @property
    def size(self):
        return self.P + 1


def make_basis(kind, P):
    """Build the nodal basis of the given kind ("GLL" or "GL") and degree."""
    kind = str(kind).upper()
    if kind not in KINDS:
        raise ValueError(f"unknown basis kind {kind!r}, expected one of {KINDS}")
    if int(P) != P or P < 1:
        raise ValueError(f"degree must be an integer >= 1, got {P}")
    P = int(P)
    if kind == "GLL":
        x, w = gauss_lobatto(P + 1)
    else:
        x, w = gauss_legendre(P + 1)
    ends = np.array([-1.0, 1.0])
    V = lagrange_eval(x, ends)
    dV = lagrange_deriv(x, ends)
    return Basis1D(
        kind=kind,
        P=P,
        nodes=x,
        qweights=w,
        diff=lagrange_deriv(x, x),
        trace_left=V[0],
        trace_right=V[1],
        dtrace_left=dV[0],
        dtrace_right=dV[1],
    )


def interp_matrix(basis, to_nodes):
    """Interpolation matrix from the basis coefficients to values at ``to_nodes``."""
    t = np.atleast_1d(np.asarray(to_nodes, dtype=float))
    if np.any(np.abs(t) > 1.0 + 1e-14):
        raise ValueError("interpolation points must lie in [-1, 1]")
    return lagrange_eval(basis.nodes, t)


def node_distance_to_face(basis, side):
    """Ascending distances of the nodes from the left or right element face,
    in reference units (element width 2)."""
    if side == "left":
        d = basis.nodes + 1.0
    elif side == "right":
        d = (1.0 - basis.nodes)[::-1]
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return np.maximum(d, 0.0)
