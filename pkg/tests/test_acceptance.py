"""Acceptance criteria, one test each, driven by the shipped configs.

Every test prints a single ``PASS``/``FAIL`` line with the measured numbers;
thresholds come from the configs' ``pass_criteria`` blocks.
Run alone with ``pytest -v -s tests/test_acceptance.py``.
"""

import math
from pathlib import Path

import numpy as np
import pytest

from flowlab.config import load_config
from flowlab.deturck import (
    deturck_vector_field,
    quadratic_terms,
    ricci_deturck_operator,
    verify_decomposition,
)
from flowlab.experiments import run_suite
from flowlab.fixed_point import PicardProblem, phi_apply, picard_solve
from flowlab.geometry import Metric
from flowlab.grid import build_grid
from flowlab.norms import x_norm, y_norm
from flowlab.parabolic import (
    StaticBackground,
    RicciFlowBackground,
    duhamel_solve,
    evolve_homogeneous,
    integrate_deturck_direct,
    integrate_ricci_flow,
    time_grid,
    zero_trajectory,
)
from flowlab.pullback import recover_ricci_flow

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _report(capsys, label, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}")


def _run(name, tmp_path, **override):
    cfg = load_config(CONFIGS / f"{name}.yaml")
    for k, v in override.items():
        setattr(cfg, k, v)
    return run_suite(cfg, out=tmp_path / name)


def _checks(rep):
    return "; ".join(f"{c['name']}={c['value']:.4g}" for c in rep.checks)


def _assert_report(capsys, label, rep, extra=""):
    _report(capsys, label, rep.passed, _checks(rep) + extra)
    assert rep.passed, _checks(rep)


def test_c01a_identity_closure_2d(tmp_path, capsys):
    rep = _run("identity-2d", tmp_path)
    h = rep.headline
    extra = "; " + ", ".join(f"{k}={v:.3g}" for k, v in h.items() if k.startswith("relative_residual"))
    _assert_report(capsys, "1 (2D, 64^2 -> 128^2)", rep, extra)


def test_c01b_identity_closure_3d(tmp_path, capsys):
    rep = _run("identity-3d", tmp_path)
    h = rep.headline
    extra = "; " + ", ".join(f"{k}={v:.3g}" for k, v in h.items() if k.startswith("relative_residual"))
    _assert_report(capsys, "1 (3D, 16^3)", rep, extra)


def test_c02_heat_kernel_fidelity(tmp_path, capsys):
    _assert_report(capsys, "2", _run("kernel-flat", tmp_path))


def test_c03a_gaussian_bound_static(tmp_path, capsys):
    rep = _run("kernel-bumpy-static", tmp_path)
    h = rep.headline
    _assert_report(capsys, "3 (static)", rep, f"; C={h['fitted_C']:.3g}, D={h['fitted_D']:.3g}")


def test_c03b_gaussian_bound_ricci_flow(tmp_path, capsys):
    rep = _run("kernel-bumpy-ricci", tmp_path)
    h = rep.headline
    _assert_report(capsys, "3 (Ricci flow)", rep,
                   f"; C={h['fitted_C']:.3g}, D={h['fitted_D']:.3g}, sup|grad_y K|={h['grad_y_sup_max']:.3g}")


def test_c04a_norm_axioms(tmp_path, capsys):
    _assert_report(capsys, "4 (100 pairs)", _run("norms-pairs", tmp_path))


def test_c04b_sin_mode_closed_form(tmp_path, capsys):
    rep = _run("norms-sin", tmp_path)
    h = rep.headline
    _assert_report(capsys, "4 (sin mode)", rep,
                   f"; measured={h['sin_mode_x_norm']:.5g}, closed form={h['sin_mode_closed_form']:.5g}")


@pytest.mark.parametrize("mode", ["static", "ricci-flow"])
def test_c05a_inequality_audits(tmp_path, capsys, mode):
    rep = _run(f"audits-{mode}", tmp_path)
    h = rep.headline
    med = ", ".join(f"{a} median={h[a + '_median_ratio']:.3g} spread={h[a + '_spread']:.3g}"
                    for a in ("linear", "quadratic", "initial"))
    _assert_report(capsys, f"5 ({mode})", rep, "; " + med)


def test_c05b_source_T_exponent(tmp_path, capsys):
    _assert_report(capsys, "5 (T exponent)", _run("audits-source", tmp_path))


def test_c06a_contraction(tmp_path, capsys):
    rep = _run("contraction", tmp_path)
    per = ", ".join(f"{k}={v:.3g}" for k, v in rep.headline.items() if k.startswith("max_ratio."))
    _assert_report(capsys, "6 (contraction, 20 pairs)", rep, "; " + per)


def test_c06b_picard_and_cross_solver(tmp_path, capsys):
    rep = _run("existence", tmp_path)
    h = rep.headline
    _assert_report(capsys, "6 (Picard vs direct, 64^2)", rep,
                   f"; iterations={h['iterations']}, ||h||_X={h['solution_x_norm']:.3g}")


def test_c07_continuous_dependence(tmp_path, capsys):
    rep = _run("continuous-dependence", tmp_path)
    h = rep.headline
    _assert_report(capsys, "7", rep,
                   f"; C(1e-3)={h['C.eps=0.001']:.6g}, C(1e-2)={h['C.eps=0.01']:.6g}, "
                   f"final-time ratio spread={h['final_ladder_spread']:.3g}")


def test_c08_chained_dependence(tmp_path, capsys):
    four = _run("chained-dependence", tmp_path)
    one = _run("chained-dependence", tmp_path / "n1", pieces=1)
    single = _run("continuous-dependence", tmp_path / "single")
    same = all(
        (tmp_path / "n1" / "chained-dependence" / f).read_bytes()
        == (tmp_path / "single" / "continuous-dependence" / f).read_bytes()
        for f in ("headline.csv", "dependence.csv")
    )
    h = four.headline
    ok = four.passed and same and single.passed and one.headline == single.headline
    _report(capsys, "8", ok, _checks(four) + f"; A(1e-2)={h['A.eps=0.01']:.6g}; N=1 bitwise equal: {same}")
    assert ok


def test_c09_ricci_flow_recovery(tmp_path, capsys):
    rep = _run("pullback", tmp_path)
    h = rep.headline
    _assert_report(capsys, "9", rep,
                   f"; residual {h['residual_coarse']:.3g} -> {h['residual_fine']:.3g}")


def test_c09b_recovery_with_nonzero_field(tmp_path, capsys):
    rep = _run("pullback-nonconformal", tmp_path)
    h = rep.headline
    _assert_report(capsys, "9 (X != 0)", rep,
                   f"; residual {h['residual_coarse']:.3g} -> {h['residual_fine']:.3g}")


def test_c10_trivial_fixed_points(capsys):
    tol = 1e-10
    worst = {}
    for dim, res in ((2, 32), (3, 12)):
        grid = build_grid(dim, [res] * dim, [2 * math.pi] * dim)
        flat = Metric.flat(grid)
        bg = StaticBackground(flat)
        zero = np.zeros(flat.g.shape)
        times = time_grid(grid, 0.02)
        z = zero_trajectory(grid, times)
        vals = {
            "X": np.max(np.abs(deturck_vector_field(flat, flat))),
            "P": np.max(np.abs(ricci_deturck_operator(flat, flat))),
            "Q": max(np.max(np.abs(p)) for p in (quadratic_terms(zero, flat, flat).r_part,
                                                  quadratic_terms(zero, flat, flat).s_part)),
            "identity": verify_decomposition(flat, flat, flat).sup_residual,
            "ricci_flow": np.max(np.abs(integrate_ricci_flow(flat, 0.02).fields - flat.g)),
            "heat": np.max(np.abs(evolve_homogeneous(zero, 0.0, 0.02, bg))),
            "duhamel": np.max(np.abs(duhamel_solve(None, None, bg, times=times).fields)),
            "direct": np.max(np.abs(integrate_deturck_direct(flat.g, bg, times=times).fields)),
            "x_norm": x_norm(z, bg, stride=4).value,
        }
        prob = PicardProblem("static-existence", bg, 0.02, 0.1, stride=4)
        h, _ = picard_solve(prob)
        vals["picard"] = np.max(np.abs(h.fields))
        vals["phi"] = np.max(np.abs(phi_apply(z, prob).fields))
        q = [quadratic_terms(zero, flat, flat)] * len(times)
        vals["y_norm"] = y_norm(q, bg, times, stride=4).value
        _, rep = recover_ricci_flow(z, bg)
        vals["pullback"] = rep.sup_residual
        rf = RicciFlowBackground(integrate_ricci_flow(flat, 0.02))
        pert = PicardProblem("perturbation", rf, 0.02, 0.1, h0=zero, stride=4)
        vals["perturbation"] = np.max(np.abs(picard_solve(pert)[0].fields))
        for k, v in vals.items():
            worst[k] = max(worst.get(k, 0.0), float(v))
    ok = all(v <= tol for v in worst.values())
    _report(capsys, "10", ok, f"max over entry points = {max(worst.values()):.3g} (<= {tol}); "
            + ", ".join(f"{k}={v:.1g}" for k, v in worst.items()))
    assert ok, worst
