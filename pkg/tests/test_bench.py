import csv
import json

import numpy as np
import pytest

from dgmg.basis import make_basis
from dgmg.bench import (
    ExperimentConfig,
    ManufacturedProblem,
    compute_metrics,
    emit_results,
    manufactured_problem,
    preset_anisotropic,
    preset_table1,
    run,
)
from dgmg.bench.cli import main
from dgmg.bench.problem import l2_error
from dgmg.krylov import cg_projected
from dgmg.operator import Grid, apply_A, assemble_rhs, build_operators, project_load


def fd_laplacian(u, p, h=1e-4):
    """Fourth-order central differences of u summed over the three axes."""
    total = 0.0
    for d in range(3):
        e = np.zeros(3)
        e[d] = h
        total += (-u(*(p + 2 * e)) + 16 * u(*(p + e)) - 30 * u(*p)
                  + 16 * u(*(p - e)) - u(*(p - 2 * e))) / (12 * h * h)
    return total


def test_load_matches_finite_differences(rng):
    u, f = manufactured_problem(2, 1, 1)
    pts = rng.uniform(0, 2 * np.pi, (100, 3))
    fd = np.array([-fd_laplacian(u, p) for p in pts])
    exact = f(pts[:, 0], pts[:, 1], pts[:, 2])
    assert np.abs(fd - exact).max() <= 1e-6 * np.abs(exact).max()


def test_solution_is_periodic(rng):
    prob = ManufacturedProblem((3, 2, 1))
    x, y, z = rng.uniform(-5, 5, (3, 50))
    lx, ly, lz = prob.extents
    for shifted in ((x + lx, y, z), (x, y + ly, z), (x, y, z + lz)):
        np.testing.assert_allclose(prob.u(*shifted), prob.u(x, y, z), atol=1e-12)


def test_verbatim_form(rng):
    x, y, z = rng.uniform(0, 6, (3, 20))
    ref = (np.cos(2 * x - 2 * z) * np.sin(1 + x) * np.sin(1 - x) * np.sin(3 * x)
           * np.sin(3 * x - 2 * y + 2 * z))
    np.testing.assert_allclose(ManufacturedProblem().u(x, y, z), ref, atol=1e-14)


def test_load_has_zero_integral():
    g = Grid.periodic_box(6, (1, 2, 1))
    rhs = assemble_rhs(g, make_basis("GL", 8), ManufacturedProblem((1, 2, 1)).f)
    assert abs(rhs.sum()) <= 1e-10 * np.abs(rhs).sum()


def test_problem_validation():
    with pytest.raises(ValueError):
        ManufacturedProblem((1, 0, 1))


def test_metrics_formulas():
    rho, lg, n10, tc, tau = compute_metrics([1.0, 0.1, 0.01], elapsed=2.0, dof=100)
    assert rho == pytest.approx(0.1) and lg == pytest.approx(-1.0)
    assert n10 == 10
    assert tc == 1.0
    assert tau == pytest.approx(10 * 1.0 / 1.0 / 100)
    rho, lg, n10, _, tau = compute_metrics([1.0, 2.0], 1.0, 10)
    assert rho == pytest.approx(2.0) and n10 is None and tau is None
    assert compute_metrics([1.0, float("inf")], 1.0, 10)[2] is None


def test_table1_presets():
    cfgs = preset_table1([3, 13, 2], degrees=(4, 16))
    by = {c.label: c for c in cfgs}
    c = by["row03-P4"]
    assert (c.kind, c.solver, c.overlap, c.overlap_value, c.ne) == ("GLL", "MG", "relative", 0.08, 8)
    assert by["row03-P16"].ne == 4
    c = by["row13-P4"]
    assert (c.kind, c.overlap_value, c.overlap_floor) == ("GL", 0.09, 1)
    c = by["row02-P16"]
    assert (c.solver, c.overlap, c.overlap_value) == ("MG-CG", "fixed", 1)
    assert preset_table1([5], ne=5, degrees=(8,))[0].ne == 5
    with pytest.raises(ValueError):
        preset_table1([15])


def test_anisotropic_presets():
    (a1, a32) = preset_anisotropic([1, 32], "rel-fix")
    assert a1.multipliers == (1, 1, 1)
    g = a32.grid()
    dx, dy, dz = g.spacing
    assert dx == pytest.approx(2 * dy) and dx == pytest.approx(32 * dz)
    (c,) = preset_anisotropic([5], "max-var")
    assert (c.overlap, c.growth, c.multipliers) == ("max_relative", 3, (5, 3, 1))
    assert preset_anisotropic([4], "rel-var")[0].growth == 3
    with pytest.raises(ValueError):
        preset_anisotropic([4], "bogus")


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(P=6)
    with pytest.raises(ValueError):
        ExperimentConfig(solver="GMRES")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"P": 4, "colour": "red"})
    c = ExperimentConfig(P=2, ne=3)
    assert ExperimentConfig.from_dict(c.to_dict()) == c


def test_run_and_emit(tmp_path):
    cfg = ExperimentConfig(P=2, ne=3, seed=5, max_cycles=40)
    m, u = run(cfg)
    assert m.converged and not m.diverged
    assert m.history[-1] <= 1e-10 * m.history[0]
    assert 0 < m.rho < 1 and m.n10 >= m.cycles - 1
    assert m.dof == 27 * 27
    emit_results(m, tmp_path)
    rows = list(csv.reader(open(tmp_path / "history.csv")))
    assert rows[0] == ["cycle", "residual_norm"]
    assert len(rows) == m.cycles + 2
    assert float(rows[-1][1]) == m.history[-1]
    s = json.load(open(tmp_path / "summary.json"))
    for key in ("config", "rho", "lg_rho", "n10", "t_cycle_seconds",
                "tau10_seconds_per_dof", "dof", "converged"):
        assert key in s
    assert s["config"]["seed"] == 5


def test_divergence_is_flagged():
    # two-level cycle on a strongly stretched box is unstable
    cfg = ExperimentConfig(P=2, ne=4, multipliers=(16, 8, 1), max_cycles=60)
    m, _ = run(cfg)
    assert m.diverged and not m.converged
    assert m.history[-1] > 1e3 * m.history[0]
    assert m.n10 is None


def test_cli_solve_and_config_precedence(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"P": 2, "ne": 3, "seed": 11, "max_cycles": 40}))
    out = tmp_path / "out"
    rc = main(["solve", "--config", str(conf), "--seed", "12", "--out", str(out)])
    assert rc == 0
    s = json.load(open(out / "summary.json"))
    assert s["config"]["seed"] == 12 and s["config"]["P"] == 2
    assert "converged" in capsys.readouterr().out


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["solve", "--P", "3", "--out", str(tmp_path)]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"P": 2, "nested": {"a": 1}}))
    assert main(["solve", "--config", str(bad), "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["table1", "--rows", "x"])
    assert exc.value.code == 1


def test_cli_aniso_reports_divergence(tmp_path):
    rc = main(["aniso", "--ar", "16", "--case", "rel-fix", "--P", "2", "--ne", "4",
               "--max-cycles", "60", "--out", str(tmp_path)])
    assert rc == 2
    s = json.load(open(tmp_path / "summary.json"))
    assert s["diverged"] is True


def test_cli_table1_writes_one_directory_per_run(tmp_path):
    rc = main(["table1", "--rows", "1,3", "--degrees", "2", "--ne", "3",
               "--max-cycles", "60", "--out", str(tmp_path)])
    assert rc == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["row01-P2", "row03-P2"]


def discretization_error(P, ne):
    g = Grid.periodic_box(ne)
    b = make_basis("GLL", P)
    ops = build_operators(g, b)
    prob = ManufacturedProblem()
    f = project_load(ops, assemble_rhs(g, b, prob.f))
    u = cg_projected(lambda v: apply_A(ops, v), f, tol=1e-12)
    return l2_error(g, b, u, prob.u, modulo_constant=True)


def test_high_order_convergence_once_resolved():
    # the manufactured solution needs about 8 elements of degree 2 to be resolved
    ratio = discretization_error(2, 8) / discretization_error(2, 16)
    assert 2 ** 2 <= ratio <= 2 ** 4
