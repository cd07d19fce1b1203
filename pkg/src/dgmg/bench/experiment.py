"""Experiment configuration, measurement of convergence metrics and result
files for the benchmark harness."""
import contextlib
import csv
import dataclasses
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from dgmg.bench.problem import ManufacturedProblem
from dgmg.errors import SolverError
from dgmg.krylov import mgcg_solve
from dgmg.multigrid import CycleSchedule, build_hierarchy, mg_solve
from dgmg.operator import Grid, apply_A, assemble_rhs, field_shape, project_load
from dgmg.schwarz import OverlapSpec

__all__ = [
    "ExperimentConfig",
    "RunMetrics",
    "DIVERGENCE_RATIO",
    "run",
    "compute_metrics",
    "preset_table1",
    "preset_anisotropic",
    "ANISO_CASES",
    "emit_results",
]

DIVERGENCE_RATIO = 1e3
SOLVERS = ("MG", "MG-CG")


@dataclass(frozen=True)
class ExperimentConfig:
    """One solver run on a periodic box with equal element counts.

    The overlap is given by ``overlap`` (``fixed``, ``relative`` or
    ``max_relative``), ``overlap_value`` and ``overlap_floor``; smoothing
    steps on level ``l`` are ``(pre, post) * growth^(L - l)``.
    """

    P: int = 4
    ne: int = 8
    multipliers: tuple = (1, 1, 1)
    kind: str = "GLL"
    overlap: str = "relative"
    overlap_value: float = 0.08
    overlap_floor: int = 0
    pre: int = 1
    post: int = 1
    growth: int = 1
    solver: str = "MG"
    penalty_factor: float = 2.0
    seed: int = 0
    target: float = 1e-10
    max_cycles: int = 100
    threads: int = 1
    deterministic: bool = True
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "multipliers", tuple(int(m) for m in self.multipliers))
        P = int(self.P)
        if P != self.P or P < 2 or P & (P - 1):
            raise ValueError(f"P must be a power of two >= 2, got {self.P}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.kind not in ("GLL", "GL"):
            raise ValueError(f"kind must be 'GLL' or 'GL', got {self.kind!r}")
        if len(self.multipliers) != 3 or min(self.multipliers) < 1:
            raise ValueError("multipliers must be three positive integers")
        if self.ne < 3:
            raise ValueError("need at least 3 elements per direction")
        if not 0.0 < self.target < 1.0:
            raise ValueError("target reduction must lie in (0, 1)")
        if self.max_cycles < 1 or self.threads < 1 or self.penalty_factor <= 0:
            raise ValueError("max_cycles, threads and penalty_factor must be positive")
        self.overlap_spec()
        self.schedule()

    def overlap_spec(self):
        return OverlapSpec(self.overlap, self.overlap_value, self.overlap_floor)

    def schedule(self):
        return CycleSchedule(self.pre, self.post, self.growth)

    def grid(self):
        return Grid.periodic_box(self.ne, self.multipliers)

    def dof(self):
        return self.ne ** 3 * (self.P + 1) ** 3

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["multipliers"] = list(self.multipliers)
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class RunMetrics:
    config: ExperimentConfig
    history: list = field(default_factory=list)
    rho: float = float("nan")
    lg_rho: float = float("nan")
    n10: int = None
    t_cycle: float = float("nan")
    tau10: float = None
    dof: int = 0
    converged: bool = False
    diverged: bool = False
    message: str = ""

    @property
    def cycles(self):
        return len(self.history) - 1

    def summary(self):
        return {
            "config": self.config.to_dict(),
            "rho": _finite_or_none(self.rho),
            "lg_rho": _finite_or_none(self.lg_rho),
            "n10": self.n10,
            "t_cycle_seconds": _finite_or_none(self.t_cycle),
            "tau10_seconds_per_dof": self.tau10,
            "dof": self.dof,
            "cycles": self.cycles,
            "converged": self.converged,
            "diverged": self.diverged,
            "message": self.message,
        }


def _finite_or_none(x):
    return float(x) if x is not None and math.isfinite(x) else None


def compute_metrics(history, elapsed, dof):
    """Return ``(rho, lg_rho, n10, t_cycle, tau10)`` from a residual history.

    ``rho = (r_n / r_0)^(1/n)``, ``n10 = ceil(-10 / lg rho)`` and
    ``tau10 = -10 t_cycle / lg rho / dof``; ``n10`` and ``tau10`` are None
    unless ``rho < 1``.
    """
    n = len(history) - 1
    if n < 1:
        return float("nan"), float("nan"), None, float("nan"), None
    ratio = history[-1] / history[0]
    t_cycle = elapsed / n
    if not math.isfinite(ratio):
        return float("inf"), float("inf"), None, t_cycle, None
    if ratio == 0.0:
        return 0.0, float("-inf"), 1, t_cycle, None
    lg_rho = math.log10(ratio) / n
    rho = 10.0 ** lg_rho
    if lg_rho >= 0.0:
        return rho, lg_rho, None, t_cycle, None
    # guard against round-off pushing exact integers up by one
    n10 = math.ceil(-10.0 / lg_rho - 1e-9)
    tau10 = -10.0 * t_cycle / lg_rho / dof
    return rho, lg_rho, n10, t_cycle, tau10


class _Diverged(Exception):
    pass


@contextlib.contextmanager
def _thread_limit(config):
    """Pin BLAS threads; deterministic mode always uses one thread."""
    with threadpool_limits(1 if config.deterministic else config.threads):
        yield


def setup(config):
    """Build the hierarchy, projected load and seeded initial guess."""
    grid = config.grid()
    h = build_hierarchy(
        config.P,
        grid,
        config.kind,
        config.overlap_spec(),
        config.penalty_factor,
        config.schedule(),
    )
    top = h.levels[-1]
    prob = ManufacturedProblem(config.multipliers)
    f = project_load(top.ops, assemble_rhs(grid, top.basis, prob.f))
    rng = np.random.default_rng(config.seed)
    u0 = rng.uniform(-1.0, 1.0, size=field_shape(grid, config.P))
    return h, f, u0, prob


def run(config, callback=None):
    """Solve the manufactured problem and measure convergence metrics.

    Iteration stops at ``r_n / r_0 <= target``, after ``max_cycles`` or when
    ``r_n / r_0`` exceeds :data:`DIVERGENCE_RATIO`; divergence is reported in
    the metrics rather than raised. Returns ``(metrics, u)``.
    """
    with _thread_limit(config):
        h, f, u0, _ = setup(config)
        ops = h.levels[-1].ops
        r0 = float(np.linalg.norm(f - apply_A(ops, u0)))
        history = [r0]

        def monitor(k, u, rn):
            history.append(float(rn))
            if callback is not None:
                callback(k, u, rn)
            if not math.isfinite(rn) or rn > DIVERGENCE_RATIO * r0:
                raise _Diverged

        u, diverged, message = u0, False, ""
        t0 = time.perf_counter()
        try:
            if config.solver == "MG":
                u, _, _ = mg_solve(h, f, u0, config.target, config.max_cycles, monitor)
            else:
                u = mgcg_solve(h, f, u0, config.target, config.max_cycles, callback=monitor).u
        except _Diverged:
            diverged, message = True, f"residual ratio exceeded {DIVERGENCE_RATIO:g}"
        except SolverError as exc:
            diverged, message = True, str(exc)
        elapsed = time.perf_counter() - t0

    rho, lg_rho, n10, t_cycle, tau10 = compute_metrics(history, elapsed, config.dof())
    converged = not diverged and history[-1] <= config.target * history[0]
    if not converged and not diverged:
        message = f"no convergence within {config.max_cycles} cycles"
    m = RunMetrics(config, history, rho, lg_rho, n10, t_cycle, tau10, config.dof(),
                   converged, diverged, message)
    return m, u


_TABLE1 = {
    1: ("GLL", "MG", "fixed", 1, 0),
    2: ("GLL", "MG-CG", "fixed", 1, 0),
    3: ("GLL", "MG", "relative", 0.08, 0),
    4: ("GLL", "MG-CG", "relative", 0.08, 0),
    5: ("GLL", "MG", "relative", 0.5, 0),
    6: ("GLL", "MG-CG", "relative", 0.5, 0),
    7: ("GL", "MG", "fixed", 1, 0),
    8: ("GL", "MG-CG", "fixed", 1, 0),
    9: ("GL", "MG", "relative", 0.08, 0),
    10: ("GL", "MG-CG", "relative", 0.08, 0),
    11: ("GL", "MG", "relative", 0.5, 0),
    12: ("GL", "MG-CG", "relative", 0.5, 0),
    13: ("GL", "MG", "relative", 0.09, 1),
    14: ("GL", "MG-CG", "relative", 0.09, 1),
}


def preset_table1(rows, ne=None, degrees=(4, 8, 16), **overrides):
    """Isotropic configurations for the overlap/basis/solver comparison.

    Each row expands to one configuration per degree. Without ``ne`` the
    grid is 8^3 for ``P <= 8`` and 4^3 above.
    """
    out = []
    for row in rows:
        if row not in _TABLE1:
            raise ValueError(f"unknown row {row}; valid rows are 1..{len(_TABLE1)}")
        kind, solver, mode, value, floor = _TABLE1[row]
        for P in degrees:
            n = ne if ne is not None else (8 if P <= 8 else 4)
            out.append(ExperimentConfig(
                P=P, ne=n, kind=kind, solver=solver, overlap=mode,
                overlap_value=value, overlap_floor=floor,
                label=f"row{row:02d}-P{P}", **overrides))
    return out


ANISO_CASES = {
    "rel-fix": ("relative", 1),
    "rel-var": ("relative", 3),
    "max-var": ("max_relative", 3),
}


def preset_anisotropic(ars, case="max-var", P=8, ne=4, **overrides):
    """Stretched boxes ``2 pi (AR, ceil(AR/2), 1)`` with equal element counts."""
    if case not in ANISO_CASES:
        raise ValueError(f"unknown case {case!r}; choose from {sorted(ANISO_CASES)}")
    mode, g = ANISO_CASES[case]
    out = []
    for ar in ars:
        ar = int(ar)
        if ar < 1:
            raise ValueError(f"aspect ratio must be a positive integer, got {ar}")
        out.append(ExperimentConfig(
            P=P, ne=ne, multipliers=(ar, math.ceil(ar / 2), 1), overlap=mode,
            overlap_value=0.08, growth=g, label=f"{case}-AR{ar}", **overrides))
    return out


def emit_results(metrics, path):
    """Write ``history.csv`` and ``summary.json`` into directory ``path``."""
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "history.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cycle", "residual_norm"])
        for k, r in enumerate(metrics.history):
            w.writerow([k, repr(float(r))])
    with open(os.path.join(path, "summary.json"), "w") as fh:
        json.dump(metrics.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
