import json
import math
import subprocess
import sys

import pytest

from ddrlift.cli import main as cli_main
from ddrlift.harness import (RateTable, StudyConfig, adjoint_study, approx_study,
                             bump_form, build_trimmed_approx, config_hash,
                             exterior_identity_suite, fitted_slope, generic_form,
                             lifting_verification_suite, norm_equivalence_report,
                             primal_study, quad_error_norm, smooth_codifferential,
                             smooth_ext_d, smooth_star, stokes_suite)
from ddrlift.mesh import MeshFamily, build_family


def test_smooth_form_calculus():
    f = bump_form(2, 0)
    df = smooth_ext_d(f)
    x = (0.3, 0.7)
    got = df.eval_component((0,), x)
    expect = math.pi * math.cos(math.pi * x[0]) * math.sin(math.pi * x[1])
    assert got == pytest.approx(expect, rel=1e-12)
    # star of star
    g = generic_form(2, 1)
    ss = smooth_star(smooth_star(g))
    for I in g.comps:
        assert ss.eval_component(I, x) == pytest.approx(-g.eval_component(I, x), rel=1e-12)
    # codifferential of a 2-form in 2D: delta(f dx^dy) = f_y dx - f_x dy
    z = bump_form(2, 2)
    dz = smooth_codifferential(z)
    w = z.comps[(0, 1)]
    fy = w.partial(1)(x)
    fx = w.partial(0)(x)
    assert dz.eval_component((0,), x) == pytest.approx(fy, rel=1e-12)
    assert dz.eval_component((1,), x) == pytest.approx(-fx, rel=1e-12)


def test_bump_form_boundary_trace_vanishes():
    f = bump_form(2, 1)
    for edge_pts in ([(x / 10, 0.0) for x in range(11)],
                     [(1.0, y / 10) for y in range(11)]):
        for p in edge_pts:
            # tangential component along the edge direction
            tang = (edge_pts[1][0] - edge_pts[0][0], edge_pts[1][1] - edge_pts[0][1])
            val = sum(f.eval_component((i,), p) * tang[i] for i in range(2))
            assert abs(val) < 1e-12


def test_build_trimmed_approx_polynomial_data(tri0):
    # degree <= r polynomials are reproduced (errors at quadrature level)
    from ddrlift.harness import SepProduct, SepSum, smooth_form

    const = smooth_form(2, 1, {(0,): SepSum([SepProduct(("one", "one"), 2.0)]),
                               (1,): SepSum([SepProduct(("one", "one"), -1.0)])})
    cell = tri0.cells[2][0]
    mu = build_trimmed_approx(tri0, cell, 0, 1, const)
    err = quad_error_norm(tri0, cell, const, mu, 8)
    assert err < 1e-13


def test_approx_study_rates():
    cfg = StudyConfig(family="triangular", levels=4, r=0, k=1)
    t = approx_study(cfg)
    assert t.fitted_slope >= 0.9
    assert t.aux_slope >= 0.9


def test_primal_study_polynomial_data_is_exact(tri0):
    # interpolating a degree-<= r polynomial gives zero errors at every level
    from ddrlift.ddr import get_space, interpolate, potential, discrete_d
    from ddrlift.exterior import PolyForm
    from ddrlift.polynomial import Poly
    from ddrlift.scalars import QQ

    sp = get_space(tri0, 1, 0)
    poly = PolyForm.from_scalar(Poly(2, {(0, 0): QQ(1), (1, 0): QQ(2), (0, 1): QQ(-3)}))
    vec = interpolate(sp, poly)
    for cell in tri0.cells[2]:
        err = quad_error_norm(tri0, cell, None, potential(sp, vec, cell), 8)
        # compare against the trace of poly: reuse quad_error_norm via shift
    # direct check: potential equals the polynomial exactly (see test_ddr);
    # here assert the study's error functional sees zero
    from ddrlift.ddr import ambient_frame, trace_between_cells

    for cell in tri0.cells[2]:
        P = potential(sp, vec, cell)
        tr = trace_between_cells(tri0, poly, ambient_frame(2), cell)
        assert (P - tr).is_zero()


def test_t_split_sums_to_argument():
    cfg = StudyConfig(family="triangular", levels=3, r=0, k=0)
    t = adjoint_study(cfg, debug=True)
    for row in t.rows:
        scale = max(abs(row.aux["argument"]), 1e-30)
        if abs(row.aux["argument"]) > 1e-14:
            assert row.aux["t_sum_defect"] <= 1e-12 * max(1.0, scale)
        else:
            assert row.aux["t_sum_defect"] <= 1e-14


def test_rate_table_csv_and_external_slope_agreement(tmp_path):
    cfg = StudyConfig(family="triangular", levels=4, r=0, k=0)
    t = adjoint_study(cfg)
    csv_path = tmp_path / "study.csv"
    t.to_csv(str(csv_path))
    out = subprocess.run([sys.executable, "scripts/check_slopes.py", str(csv_path)],
                         capture_output=True, text=True, check=True)
    external = float(out.stdout.strip())
    assert abs(external - t.fitted_slope) <= 1e-12 * max(1.0, abs(t.fitted_slope))
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "level,h,ndof,residual,slope_running"
    assert len(lines) == 5


def test_plot_data_and_config_hash(tmp_path):
    cfg = StudyConfig(family="triangular", levels=3, r=0, k=0)
    t1 = adjoint_study(cfg)
    t2 = adjoint_study(cfg)
    assert t1.config_hash == t2.config_hash
    assert [r.residual for r in t1.rows] == [r.residual for r in t2.rows]
    p = tmp_path / "series.dat"
    t1.to_plot_data(str(p))
    lines = p.read_text().splitlines()
    assert lines[0].startswith("# config")
    assert len(lines) == 4
    # differing config -> differing hash
    t3 = adjoint_study(StudyConfig(family="triangular", levels=3, r=0, k=0, seed=2))
    assert t3.config_hash != t1.config_hash


def test_norm_equivalence_drift():
    rep = norm_equivalence_report("triangular", 3, 0, 0)
    assert rep["pass"]
    assert rep["drift"] < 2.0
    for row in rep["levels"]:
        assert 0 < row["c"] <= row["C"]


def test_lifting_suite_seed_stability():
    reports = [lifting_verification_suite("triangular", 1, 0, 1, seed=s)
               for s in range(3)]
    assert all(r["pass"] for r in reports)


def test_cli_verify_exterior_exit_zero(capsys):
    code = cli_main(["verify", "exterior", "--n", "2", "--cases", "50"])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["pass"] and out["stokes"]["pass"]


def test_cli_mesh_inspect(capsys):
    code = cli_main(["mesh", "inspect", "--family", "triangular", "--levels", "2"])
    assert code == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 3 and all("min_inradius_ratio" in r for r in rows)


def test_cli_mesh_build_roundtrip(tmp_path, capsys):
    out = tmp_path / "mesh.json"
    code = cli_main(["mesh", "build", "--family", "hexagonal-dominant",
                     "--levels", "0", "--out", str(out)])
    assert code == 0
    from ddrlift.mesh import load_json

    m = load_json(str(out))
    assert len(m.cells[2]) == 5


def test_cli_study_writes_csv(tmp_path, capsys):
    out = tmp_path / "a.csv"
    code = cli_main(["study", "adjoint", "--family", "cartesian-polygonal",
                     "--levels", "4", "--r", "0", "--k", "0", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 5
    report = json.loads(capsys.readouterr().out.rsplit("fitted slope", 1)[0])
    assert report["fitted_slope"] >= 0.9


def test_cli_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli_main(["study", "adjoint", "--bogus-flag"])
    assert exc.value.code == 2


def test_cli_bad_config_exits_2(capsys):
    code = cli_main(["mesh", "inspect", "--family", "hexagonal-dominant",
                     "--levels", "0", "--n", "3"])
    assert code == 2


def test_cli_verify_ddr(capsys):
    code = cli_main(["verify", "ddr", "--family", "cartesian-polygonal",
                     "--levels", "1", "--r", "0", "--k", "0"])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["pass"]


def test_cli_verify_lifting(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = cli_main(["verify", "lifting", "--family", "triangular", "--levels", "2",
                     "--r", "0", "--k", "1", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["pass"] and rep["c0_drift"] < 2.0


def test_threads_env_var(monkeypatch):
    from ddrlift.harness import parallel_map

    monkeypatch.setenv("DDR_LIFT_THREADS", "2")
    out = parallel_map(lambda x: x * x, range(8))
    assert out == [x * x for x in range(8)]


def test_min_norm_solver_float_path():
    import numpy as np

    from ddrlift.linalg import MinNormSolver

    G = np.diag([1.0, 2.0, 3.0])
    A = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]])  # rank-deficient rows
    solver = MinNormSolver(G, A, float_mode=True)
    x, _ = solver.solve(np.array([1.0, 2.0]))
    assert np.allclose(A @ x, [1.0, 2.0], atol=1e-12)
    # minimizer of x^T G x on the plane x0+x1+x2 = 1
    lam = 1.0 / (1.0 + 1.0 / 2.0 + 1.0 / 3.0)
    expect = np.array([lam, lam / 2.0, lam / 3.0])
    assert np.allclose(x, expect, atol=1e-12)
    with pytest.raises(ValueError):
        MinNormSolver(G, np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
                      float_mode=True).solve(np.array([1.0, 2.0]))
