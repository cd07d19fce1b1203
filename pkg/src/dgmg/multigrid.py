"""Polynomial multigrid: level hierarchy ``P_l = 2^l``, embedded transfer
operators and the V-cycle with a projected CG coarse solve."""
from dataclasses import dataclass, field

import numpy as np

from dgmg.basis import interp_matrix, make_basis
from dgmg.errors import DimensionError
from dgmg.krylov import cg_projected
from dgmg.operator import apply_A, build_operators, remove_mean
from dgmg.schwarz import SchwarzSmoother, resolve_overlap
from dgmg.tensor import kron3_apply

__all__ = [
    "CycleSchedule",
    "Level",
    "LevelHierarchy",
    "build_hierarchy",
    "transfer_up",
    "transfer_down",
    "coarse_solve",
    "v_cycle",
    "precondition",
    "mg_solve",
]


@dataclass(frozen=True)
class CycleSchedule:
    """Smoothing counts ``(pre, post) * growth^(L - l)`` on level ``l``."""

    pre: int = 1
    post: int = 1
    growth: int = 1

    def __post_init__(self):
        if self.pre < 0 or self.post < 0 or self.pre + self.post < 1:
            raise ValueError("need pre, post >= 0 and pre + post >= 1")
        if self.growth < 1:
            raise ValueError("growth factor must be >= 1")

    def steps(self, level, top):
        g = self.growth ** (top - level)
        return self.pre * g, self.post * g


@dataclass
class Level:
    P: int
    basis: object
    ops: tuple
    smoother: object = None
    interp: np.ndarray = field(default=None, repr=False)
    nu: tuple = (0, 0)

    @property
    def layers(self):
        return None if self.smoother is None else self.smoother.layers


@dataclass
class LevelHierarchy:
    grid: object
    levels: list
    schedule: CycleSchedule
    coarse_tol: float = 1e-10

    @property
    def L(self):
        return len(self.levels) - 1

    @property
    def degrees(self):
        return tuple(lv.P for lv in self.levels)


def build_hierarchy(P, grid, kind="GLL", overlap=None, penalty_factor=2.0,
                    schedule=None, coarse_tol=1e-10):
    """Rediscretize the problem on degrees ``1, 2, 4, ..., P``.

    Every level gets its own penalty ``factor * P_l (P_l + 1) / dx``, its own
    overlap resolution and a Schwarz smoother (level 0 is solved directly).
    """
    from dgmg.schwarz import OverlapSpec

    if int(P) != P or P < 2 or (int(P) & (int(P) - 1)):
        raise ValueError(f"degree must be a power of two >= 2, got {P}")
    overlap = overlap or OverlapSpec.relative(0.08)
    schedule = schedule or CycleSchedule()
    L = int(P).bit_length() - 1
    levels = []
    for l in range(L + 1):
        Pl = 2 ** l
        basis = make_basis(kind, Pl)
        ops = build_operators(grid, basis, penalty_factor)
        lv = Level(Pl, basis, ops)
        if l > 0:
            lv.smoother = SchwarzSmoother(ops, resolve_overlap(overlap, basis, grid.spacing))
            lv.interp = interp_matrix(levels[-1].basis, basis.nodes)
            lv.nu = schedule.steps(l, L)
        levels.append(lv)
    return LevelHierarchy(grid, levels, schedule, coarse_tol)


def transfer_up(I, coarse):
    """Prolongate element-wise with ``I (x) I (x) I``."""
    if coarse.shape[-1] != I.shape[1]:
        raise DimensionError("coarse field degree does not match interpolation")
    return kron3_apply(I, I, I, coarse)


def transfer_down(I, fine):
    """Restrict element-wise with the transpose ``I^T (x) I^T (x) I^T``."""
    if fine.shape[-1] != I.shape[0]:
        raise DimensionError("fine field degree does not match interpolation")
    return kron3_apply(I.T, I.T, I.T, fine)


def coarse_solve(ops, f0, tol=1e-10):
    """Pseudo-inverse solve on the coarse level by projected CG.

    The load is projected orthogonally onto the range of ``A_0`` (zero
    coefficient sum), so a constant load yields zero.
    """
    f0 = np.asarray(f0, dtype=float)
    scale = np.linalg.norm(f0)
    f0 = f0 - f0.mean()
    if np.linalg.norm(f0) <= 1e-14 * scale:
        return np.zeros_like(f0)
    return cg_projected(lambda v: apply_A(ops, v), f0, tol=tol)


def v_cycle(h, u, f):
    """One multigrid V-cycle for ``A u = f`` on the top level."""
    lv = h.levels
    L = h.L
    us = [None] * (L + 1)
    fs = [None] * (L + 1)
    us[L], fs[L] = np.asarray(u, dtype=float), np.asarray(f, dtype=float)
    for l in range(L, 0, -1):
        if l < L:
            us[l] = np.zeros_like(fs[l])
        us[l] = lv[l].smoother(us[l], fs[l], lv[l].nu[0])
        r = fs[l] - apply_A(lv[l].ops, us[l])
        fs[l - 1] = transfer_down(lv[l].interp, r)
    us[0] = coarse_solve(lv[0].ops, fs[0], h.coarse_tol)
    for l in range(1, L + 1):
        us[l] = us[l] + transfer_up(lv[l].interp, us[l - 1])
        us[l] = lv[l].smoother(us[l], fs[l], lv[l].nu[1])
    return us[L]


def precondition(h, r):
    """One V-cycle applied to ``r`` from a zero initial guess."""
    return v_cycle(h, np.zeros_like(r), r)


def mg_solve(h, f, u0, target=1e-10, maxiter=100, callback=None):
    """Iterate V-cycles until ``|r_n| / |r_0| <= target``.

    The free constant is fixed after every cycle by removing the
    mass-weighted mean. Returns ``(u, history, converged)``.
    """
    ops = h.levels[-1].ops
    u = np.array(u0, dtype=float)
    history = [float(np.linalg.norm(f - apply_A(ops, u)))]
    if history[0] == 0.0:
        return u, history, True
    for k in range(1, maxiter + 1):
        u = remove_mean(ops, v_cycle(h, u, f))
        rn = float(np.linalg.norm(f - apply_A(ops, u)))
        history.append(rn)
        if callback is not None:
            callback(k, u, rn)
        if not np.isfinite(rn) or rn <= target * history[0]:
            break
    return u, history, bool(history[-1] <= target * history[0])
