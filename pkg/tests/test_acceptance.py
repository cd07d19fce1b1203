"""End-to-end acceptance checks; each test reports one pass/fail line."""
import filecmp
import math
import time

import numpy as np

from conftest import dense_of
from dgmg.basis import make_basis
from dgmg.bench import ExperimentConfig, emit_results, preset_anisotropic, preset_table1, run
from dgmg.bench.problem import ManufacturedProblem, l2_error
from dgmg.krylov import cg_projected
from dgmg.multigrid import build_hierarchy, v_cycle
from dgmg.operator import (
    Grid,
    apply_A,
    assemble_rhs,
    build_operators,
    field_shape,
    project_load,
)
from dgmg.schwarz import (
    OverlapSpec,
    build_subdomain_solver,
    resolve_overlap,
    restricted_apply,
    subdomain_solve,
)
from dgmg.tensor import dense_solve


def dense_case():
    g = Grid.periodic_box(3)
    ops = build_operators(g, make_basis("GLL", 2), penalty_factor=2.0)
    return g, ops


def kron_oracle(ops, shape):
    Lx, Ly, Lz = (op.dense() for op in ops)
    Mx, My, Mz = (np.diag(op.mass()) for op in ops)
    K = np.kron(Mz, np.kron(My, Lx)) + np.kron(Mz, np.kron(Ly, Mx)) + np.kron(Lz, np.kron(My, Mx))
    perm = np.arange(np.prod(shape)).reshape(shape).transpose(0, 3, 1, 4, 2, 5).ravel()
    A = np.empty_like(K)
    A[np.ix_(perm, perm)] = K
    return A


def test_c01_operator_matches_dense_oracle(criterion):
    t0 = time.perf_counter()
    g, ops = dense_case()
    shape = field_shape(g, 2)
    A = dense_of(lambda v: apply_A(ops, v), shape)
    ref = kron_oracle(ops, shape)
    elapsed = time.perf_counter() - t0
    err = np.abs(A - ref).max() / np.abs(ref).max()
    ok = criterion(1, err <= 1e-12 and elapsed < 1.0,
                   f"max rel entry error {err:.1e}, {elapsed:.2f} s")
    assert ok


def test_c02_single_null_eigenvalue(criterion):
    g, ops = dense_case()
    A = dense_of(lambda v: apply_A(ops, v), field_shape(g, 2))
    ev = np.linalg.eigvalsh(0.5 * (A + A.T))
    norm = np.abs(ev).max()
    small = np.abs(ev) <= 1e-9 * norm
    ok = criterion(2, small.sum() == 1 and np.all(ev[~small] > 0),
                   f"{small.sum()} null eigenvalue(s), min other {ev[~small].min():.3e}")
    assert ok


def test_c03_fast_diagonalization(criterion, rng):
    g = Grid.periodic_box(4)
    h = build_hierarchy(8, g, "GLL", OverlapSpec.relative(0.08))
    worst = 0.0
    for lv in h.levels[1:]:
        sd = lv.smoother.solver
        for d in sd.dirs:
            r = rng.standard_normal(d.m.size)
            x = d.S @ ((d.S.T @ r) / d.lam)
            worst = max(worst, np.linalg.norm(d.L @ x - r) / np.linalg.norm(r))
        r = rng.standard_normal(sd.window_shape)
        res = restricted_apply(sd, subdomain_solve(sd, r)) - r
        worst = max(worst, np.linalg.norm(res) / np.linalg.norm(r))

    g3, ops = dense_case()
    A = dense_of(lambda v: apply_A(ops, v), field_shape(g3, 2))
    layers = ((1, 1),) * 3
    sd = build_subdomain_solver(ops, layers)
    # window around element (1, 1, 1): node layers 2..6 in each direction
    idx1 = np.arange(2, 7)
    gz, gy, gx = np.meshgrid(idx1, idx1, idx1, indexing="ij")
    flat = np.ravel_multi_index((gz // 3, gy // 3, gx // 3, gz % 3, gy % 3, gx % 3),
                                field_shape(g3, 2)).ravel()
    r = rng.standard_normal(sd.window_shape)
    ref = dense_solve(A[np.ix_(flat, flat)], r.ravel())
    err3 = np.abs(subdomain_solve(sd, r).ravel() - ref).max() / np.abs(ref).max()
    ok = criterion(3, worst <= 1e-9 and err3 <= 1e-10,
                   f"worst inverse residual {worst:.1e}, dense 5^3 mismatch {err3:.1e}")
    assert ok


def test_c04_overlap_table(criterion):
    cases = [
        ("GLL", OverlapSpec.relative(0.08), (1, 1, 2, 3, 6)),
        ("GLL", OverlapSpec.relative(0.5), (2, 3, 5, 9, 17)),
        ("GL", OverlapSpec.relative(0.08), (0, 1, 1, 3, 6)),
        ("GL", OverlapSpec.relative(0.09, floor=1), (1, 1, 2, 3, 6)),
    ]
    got = []
    for kind, spec, want in cases:
        seq = tuple(resolve_overlap(spec, make_basis(kind, P), (1.0, 1.0, 1.0))[0][0]
                    for P in (2, 4, 8, 16, 32))
        got.append((seq, want))
    ok = criterion(4, all(a == b for a, b in got), " ".join(str(a) for a, _ in got))
    assert ok


def test_c05_partition_of_unity(criterion, rng):
    g = Grid.periodic_box(4)
    h = build_hierarchy(8, g, "GLL", OverlapSpec.relative(0.08))
    cases = [(g, lv) for lv in h.levels[1:]]
    g3 = Grid.periodic_box(3)
    cases.append((g3, build_hierarchy(2, g3, overlap=OverlapSpec.fixed_nodes(1)).levels[1]))
    worst = 0.0
    for grid, lv in cases:
        v = rng.standard_normal(field_shape(grid, lv.P))
        worst = max(worst, np.abs(lv.smoother.partition(v) - v).max())
    ok = criterion(5, worst <= 1e-12, f"max deviation {worst:.1e}")
    assert ok


def measured(config):
    m, _ = run(config)
    return m


def test_c06_rates(criterion):
    t0 = time.perf_counter()
    m1 = measured(ExperimentConfig(P=4, ne=8, overlap="relative", overlap_value=0.08))
    t1 = time.perf_counter() - t0
    m2 = measured(ExperimentConfig(P=8, ne=4, overlap="relative", overlap_value=0.08))
    m3 = measured(ExperimentConfig(P=4, ne=8, overlap="relative", overlap_value=0.5))
    mg, mgcg = (measured(c) for c in preset_table1([1, 2], ne=4, degrees=(8,)))
    r1, r2, r3 = (-m.lg_rho for m in (m1, m2, m3))
    checks = [
        0.9 <= r1 <= 1.4 and t1 < 60.0,
        r2 >= 1.3,
        r3 >= 1.9,
        mgcg.converged and mg.converged and mgcg.n10 < mg.n10,
    ]
    ok = criterion(6, all(checks),
                   f"P4 0.08: {r1:.3f} ({t1:.1f} s); P8 0.08: {r2:.3f}; P4 0.5: {r3:.3f}; "
                   f"n10 MG-CG {mgcg.n10} vs MG {mg.n10} (n_o=1, P=8)")
    assert ok


def test_c07_order_trend(criterion):
    rates = [-measured(ExperimentConfig(P=P, ne=4)).lg_rho for P in (4, 8, 16)]
    dips = [rates[i] - rates[i + 1] for i in range(2)]
    ok = criterion(7, all(d <= 0.1 for d in dips),
                   "-lg rho " + " -> ".join(f"{r:.3f}" for r in rates))
    assert ok


def test_c08_anisotropy(criterion):
    n10 = {}
    rho = {}
    for case in ("max-var", "rel-var", "rel-fix"):
        for c in preset_anisotropic([4, 8, 16], case, P=8, ne=4, max_cycles=400):
            m = measured(c)
            ar = c.multipliers[0]
            rho[case, ar] = m.rho
            n10[case, ar] = m.n10 if m.n10 is not None else math.inf
    ranking = all(n10["max-var", a] <= n10["rel-var", a] <= n10["rel-fix", a] for a in (4, 8, 16))
    convergent = all(r < 1 for r in rho.values())
    detail = "; ".join(
        f"AR{a}: n10 {n10['max-var', a]}/{n10['rel-var', a]}/{n10['rel-fix', a]}" for a in (4, 8, 16))
    bad = [f"{c} AR{a} rho={r:.3g}" for (c, a), r in rho.items() if not r < 1]
    ok = criterion(8, ranking and convergent,
                   f"(max-var/rel-var/rel-fix) {detail}; ranking {'ok' if ranking else 'violated'}"
                   + (f"; non-convergent: {', '.join(bad)}" if bad else ""))
    assert ok


def time_per_cycle(P, ne=4, cycles=4, repeats=3):
    g = Grid.periodic_box(ne)
    h = build_hierarchy(P, g)
    shape = field_shape(g, P)
    rng = np.random.default_rng(0)
    u, f = rng.uniform(-1, 1, shape), np.zeros(shape)
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(cycles):
            u = v_cycle(h, u, f)
        best = min(best, (time.perf_counter() - t0) / cycles)
    return best / np.prod(shape)


def test_c09_complexity(criterion):
    Ps = np.array([4, 8, 16])
    t = np.array([time_per_cycle(P) for P in Ps])
    slope = np.polyfit(np.log(Ps), np.log(t), 1)[0]
    ok = criterion(9, slope <= 1.5,
                   f"exponent {slope:.2f}; s/cycle/dof " + ", ".join(f"{x:.2e}" for x in t))
    assert ok


def solve_error(P, ne):
    g = Grid.periodic_box(ne)
    b = make_basis("GLL", P)
    ops = build_operators(g, b)
    prob = ManufacturedProblem()
    f = project_load(ops, assemble_rhs(g, b, prob.f))
    u = cg_projected(lambda v: apply_A(ops, v), f, tol=1e-12)
    return l2_error(g, b, u, prob.u, modulo_constant=True)


def test_c10_discretization_accuracy(criterion):
    ratios = {P: solve_error(P, 4) / solve_error(P, 8) for P in (2, 3)}
    ok = criterion(10, all(2 ** P <= r <= 2 ** (P + 2) for P, r in ratios.items()),
                   "; ".join(f"P={P}: ratio {r:.2f} (band [{2 ** P}, {2 ** (P + 2)}])"
                             for P, r in ratios.items()))
    assert ok


def test_c11_determinism(criterion, tmp_path):
    cfg = ExperimentConfig(P=4, ne=4, seed=7, deterministic=True)
    for name in ("a", "b"):
        m, _ = run(cfg)
        emit_results(m, tmp_path / name)
    same = filecmp.cmp(tmp_path / "a" / "history.csv", tmp_path / "b" / "history.csv", shallow=False)
    ok = criterion(11, same, "history.csv byte-identical" if same else "history.csv differs")
    assert ok
