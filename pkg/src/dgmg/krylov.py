"""Conjugate gradient solvers: projected CG for the singular coarse problem
and flexible (inexact) preconditioned CG with a multigrid preconditioner."""
from dataclasses import dataclass, field

import numpy as np

from dgmg.errors import DivergenceError, SolverError

__all__ = ["KrylovResult", "cg_projected", "fpcg", "mgcg_solve"]


@dataclass
class KrylovResult:
    u: np.ndarray
    history: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self):
        return len(self.history) - 1


def _dot(a, b):
    s = float(np.vdot(a, b))
    if not np.isfinite(s):
        raise DivergenceError("non-finite inner product")
    return s


def cg_projected(apply, f, tol=1e-10, cap=None, stall=50):
    """Conjugate gradients for ``A u = f`` with ``A`` symmetric positive
    semi-definite and null space spanned by constants.

    ``f`` must have zero coefficient sum. Iterates are kept mean-free, so the
    zero-mean solution is returned.
    """
    f = np.asarray(f, dtype=float)
    u = np.zeros_like(f)
    r = f - f.mean()
    nf = np.linalg.norm(r)
    if nf == 0.0:
        return u
    cap = 10 * f.size if cap is None else cap
    p = r.copy()
    rr = _dot(r, r)
    history = [np.sqrt(rr)]
    best, since = history[0], 0
    for _ in range(cap):
        q = apply(p)
        pq = _dot(p, q)
        if pq <= 0.0:
            raise SolverError("operator not positive on the search direction", history)
        alpha = rr / pq
        u += alpha * p
        r -= alpha * q
        r -= r.mean()
        rr_new = _dot(r, r)
        history.append(np.sqrt(rr_new))
        if history[-1] <= tol * nf:
            return u - u.mean()
        if history[-1] < best:
            best, since = history[-1], 0
        else:
            since += 1
            if since >= stall:
                raise SolverError(f"CG stagnated after {len(history) - 1} iterations", history)
        p = r + (rr_new / rr) * p
        rr = rr_new
    raise SolverError(f"CG did not converge in {cap} iterations", history)


def fpcg(apply, precond, f, u0, target=1e-10, maxiter=100, flexible=True,
         callback=None):
    """Flexible preconditioned conjugate gradients.

    With ``flexible=True`` the search direction uses
    ``beta = <z_k, r_k - r_{k-1}> / <z_{k-1}, r_{k-1}>``, which tolerates a
    nonsymmetric or variable preconditioner; otherwise the standard
    ``<z_k, r_k> / <z_{k-1}, r_{k-1}>`` is used.

    ``callback(k, u, rnorm)`` is invoked after every iteration. Returns a
    :class:`KrylovResult`; ``converged`` is False when ``maxiter`` is hit.
    """
    u = np.array(u0, dtype=float)
    r = f - apply(u)
    r0 = np.sqrt(_dot(r, r))
    res = KrylovResult(u, [r0])
    if r0 == 0.0:
        res.converged = True
        return res
    z = precond(r)
    p = z.copy()
    zr = _dot(z, r)
    for k in range(1, maxiter + 1):
        q = apply(p)
        pq = _dot(p, q)
        if pq == 0.0:
            raise DivergenceError("zero curvature along search direction", res.history)
        alpha = zr / pq
        u += alpha * p
        r_old = r
        r = r - alpha * q
        rn = np.sqrt(_dot(r, r))
        res.history.append(rn)
        if callback is not None:
            callback(k, u, rn)
        if rn <= target * r0:
            res.converged = True
            break
        z = precond(r)
        zr_new = _dot(z, r)
        beta = (zr_new - _dot(z, r_old)) / zr if flexible else zr_new / zr
        p = z + beta * p
        zr = zr_new
    res.u = u
    return res


def mgcg_solve(h, f, u0, target=1e-10, maxiter=100, flexible=True, callback=None):
    """Multigrid-preconditioned CG: one V-cycle from a zero guess per iteration."""
    from dgmg.multigrid import precondition
    from dgmg.operator import apply_A, remove_mean

    ops = h.levels[-1].ops
    res = fpcg(
        lambda v: apply_A(ops, v),
        lambda r: remove_mean(ops, precondition(h, r)),
        f,
        u0,
        target=target,
        maxiter=maxiter,
        flexible=flexible,
        callback=callback,
    )
    res.u = remove_mean(ops, res.u)
    return res
