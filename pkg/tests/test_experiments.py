import math

import numpy as np
import pytest

from emitarray.experiments import (
    FitResult,
    Point,
    RunConfig,
    ShotStats,
    find_pstar,
    fit_scaling,
    fit_threshold,
    requisite_eta,
    run_config,
    run_point,
    wilson_interval,
)
from emitarray.experiments.fitting import predict_log_inverse, synthetic_threshold_data
from emitarray.experiments.runner import ne_for, parse_ne_rule, read_csv, rows_to_csv
from emitarray.experiments.tables import format_table, requisite_table
from emitarray.noise import NoiseSpec


# -- statistics -----------------------------------------------------------------


def test_wilson_zero_failures():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and hi == pytest.approx(0.037, abs=1.5e-3)


def test_wilson_symmetric_and_full():
    lo, hi = wilson_interval(50, 100)
    assert (lo + hi) / 2 == pytest.approx(0.5)
    assert wilson_interval(100, 100)[1] == 1.0
    with pytest.raises(ValueError):
        wilson_interval(1, 0)


def test_shot_stats():
    s = ShotStats(1000, 10) + ShotStats(1000, 30)
    assert s.p_logical == pytest.approx(0.02)
    d = s.to_dict()
    assert d["ci_low"] < 0.02 < d["ci_high"]
    assert ShotStats(10, 0).relative_width() == math.inf
    with pytest.raises(ValueError):
        ShotStats(10, 11)


# -- fits -----------------------------------------------------------------------


def test_threshold_fit_recovers_mu():
    rng = np.random.default_rng(0)
    truth = (0.1, 5.0, 10.0, 0.0035, 1.0)
    p, d, y = synthetic_threshold_data(truth, np.linspace(0.002, 0.005, 7), [2, 3, 4], 0.01, rng)
    fit = fit_threshold(p, d, y)
    assert abs(fit.params["mu"] - 0.0035) <= 2e-4
    assert fit.params["nu"] > 0


def test_threshold_fit_needs_crossing():
    p = np.repeat([0.001, 0.002, 0.003, 0.004], 3)
    d = np.tile([2, 3, 4], 4)
    y = 0.01 * p / d  # larger distance always better
    with pytest.raises(ValueError, match="do not cross"):
        fit_threshold(p, d, y)


def test_scaling_exact_line():
    eta = np.array([1e-4, 2e-4, 4e-4, 8e-4])
    y = 0.03 * np.sqrt(2 / eta) + 1.5
    fit = fit_scaling(eta, np.exp(-y), "sqrt", 2)
    assert fit.residual == pytest.approx(0, abs=1e-10)
    assert fit.params["c1"] == pytest.approx(0.03) and fit.params["c2"] == pytest.approx(1.5)
    assert predict_log_inverse(fit, 4e-4) == pytest.approx(y[2])


def test_requisite_eta_two_emitters():
    fit = FitResult("scaling", {"c1": 0.0215, "c2": 1.4}, 0.0, form="sqrt", factor=2)
    lhs = math.log(1e3)
    rhs = 0.0215 * math.sqrt(2) * 2.91e-5 ** -0.5 + 1.4
    assert abs(rhs - lhs) / lhs < 0.05
    assert requisite_eta(fit, 1e-3) == pytest.approx(2.91e-5, rel=0.1)


def test_requisite_eta_linear_forms():
    m4 = FitResult("scaling", {"c1": 0.002104, "c2": 1.7}, 0.0, form="linear", factor=4)
    assert abs(predict_log_inverse(m4, 1.07e-4) - math.log(1e3)) / math.log(1e3) < 0.1
    m2 = FitResult("scaling", {"c1": 4.1e-3, "c2": 1.7}, 0.0, form="linear", factor=2)
    assert 3.77e-4 / 2 < requisite_eta(m2, 1e-3) < 3.77e-4 * 2


def test_requisite_eta_single_emitter():
    s1 = FitResult("scaling", {"c1": 0.0204, "c2": 1.4}, 0.0, form="sqrt", factor=1)
    assert 1.25e-5 / 2 < requisite_eta(s1, 1e-3) < 1.25e-5 * 2


def test_requisite_eta_at_intercept_raises():
    fit = FitResult("scaling", {"c1": 0.02, "c2": 1.4}, 0.0, form="sqrt", factor=1)
    with pytest.raises(ValueError):
        requisite_eta(fit, math.exp(-1.4))


def test_requisite_table():
    fits = {"a": FitResult("scaling", {"c1": 0.02, "c2": 1.4}, 0.0, form="sqrt", factor=1)}
    rows = requisite_table(fits, [1e-3, 0.5])
    assert rows[0]["a"] == pytest.approx(requisite_eta(fits["a"], 1e-3))
    assert rows[1]["a"] == math.inf
    assert "a" in format_table(rows, ["a"])


# -- runner ---------------------------------------------------------------------


def test_ne_rules():
    assert parse_ne_rule(2) == ("const", 2)
    assert parse_ne_rule("L/4") == ("div", 4)
    assert ne_for("L/4", 12) == 3
    with pytest.raises(ValueError):
        ne_for("L/4", 6)


def test_noiseless_point_has_no_failures():
    st = run_point(Point("S1", 4, 1, NoiseSpec()), shots=2000)
    assert st.failures == 0


def test_deep_failure_regime():
    rates = [run_point(Point("S1", 4, 1, NoiseSpec(p=p)), shots=4000, seed=2) for p in (0.02, 0.04, 0.1)]
    assert rates[0].p_logical < rates[1].p_logical < rates[2].p_logical
    lo, hi = rates[2].interval
    assert lo < 0.5 < hi


@pytest.mark.slow
def test_sub_threshold_ordering():
    a = run_point(Point("S2", 4, 1, NoiseSpec(p=1e-3)), shots=100_000, seed=1)
    b = run_point(Point("S2", 6, 1, NoiseSpec(p=1e-3)), shots=100_000, seed=1)
    assert b.interval[1] < a.interval[0]


def test_run_point_is_reproducible_and_reuses_batches():
    pt = Point("S1", 4, 1, NoiseSpec(p=3e-3))
    a = run_point(pt, shots=20_000, seed=4)
    b = run_point(pt, shots=10_000, seed=4, budgets=(10_000, 20_000), target_rel_width=0.0)
    assert a == b


def test_pstar_with_strong_dephasing():
    r = find_pstar("S1", 1, NoiseSpec(p=1e-3, eta_z=1e-2), L_values=(4, 6, 8), shots=2000)
    assert r.L_opt == 4 and not r.flagged
    assert [L for L, _ in r.curve] == [4, 6, 8]


def test_pstar_needs_delay_noise():
    with pytest.raises(ValueError):
        find_pstar("S1", 1, NoiseSpec(p=1e-3))


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(shots=0)
    with pytest.raises(ValueError):
        RunConfig(protocol="S1", n_e=2)
    with pytest.raises(ValueError):
        RunConfig(L=[5])
    with pytest.raises(ValueError):
        RunConfig.from_dict({"bogus": 1})
    cfg = RunConfig(protocol="M1", n_e="2", L=[4])
    assert cfg.n_e == 2
    assert cfg.config_hash() == RunConfig(protocol="M1", n_e=2, L=[4], workers=3).config_hash()


def test_csv_round_trip_and_determinism():
    cfg = RunConfig(protocol="S2", L=[4], p=[2e-3, 4e-3], shots=2000, seed=7, workers=1)
    rows = run_config(cfg)
    text = rows_to_csv(rows, ["x"])
    assert text.startswith("# x\n")
    assert rows_to_csv(run_config(cfg)) == rows_to_csv(rows)
    back = read_csv(text)
    assert [r["failures"] for r in back] == [r["failures"] for r in rows]
