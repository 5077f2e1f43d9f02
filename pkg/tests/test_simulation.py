"""Simulation settings, data generation, Monte Carlo truth and the study harness."""

import csv
import math

import numpy as np
import pytest

from surrogate_resilience.data import group_arrays
from surrogate_resilience.kernel import KernelParams, cov_cholesky
from surrogate_resilience.simulation import (
    SETTINGS,
    SimResult,
    SimSetting,
    generate_dataset,
    get_setting,
    run_simulation,
    true_paradox_prob,
    write_results_csv,
)


def test_settings_table():
    assert sorted(SETTINGS) == [1, 2, 3, 4, 5, 6]
    s1 = get_setting(1)
    assert s1.m0(3.0) == 5.0 and s1.m1(3.0) == 6.0
    assert s1.s_train == ((3.0, 3.0), (4.0, 3.0))
    assert get_setting(6).gp == KernelParams(0.1, 5.0, 0.5)
    with pytest.raises(ValueError):
        get_setting(7)
    with pytest.raises(ValueError):
        SimSetting(9, s1.m0, s1.m1, s1.gp, ((0.0, 0.0), (0.0, 1.0)), s1.s_new)


def test_surrogate_means():
    n = 100
    studies, new, hidden = generate_dataset(1, 10, n, seed=3)
    s0 = group_arrays(studies, 0)[0]
    assert abs(s0.mean() - 3.0) < 4 * math.sqrt(3.0 / s0.size)
    for setting in SETTINGS.values():
        studies, new, _ = generate_dataset(setting, 5, 40, seed=setting.id)
        for g in (0, 1):
            mean, var = setting.s_train[g]
            s = group_arrays(studies, g)[0]
            assert abs(s.mean() - mean) < 5 * math.sqrt(var / s.size)
            mean, var = setting.s_new[g]
            assert abs(new.group(g).mean() - mean) < 5 * math.sqrt(var / 40)
    assert hidden[0].shape == (n,) and hidden[1].shape == (n,)


def test_tiny_gp_reproduces_means():
    base = get_setting(1)
    quiet = SimSetting(99, base.m0, base.m1, KernelParams(1e-10, 5.0, 1e-10),
                       base.s_train, base.s_new)
    studies, _, _ = generate_dataset(quiet, 3, 20, seed=1)
    for st in studies:
        np.testing.assert_allclose(st.y0, base.m0(st.s0), atol=1e-3)
        np.testing.assert_allclose(st.y1, base.m1(st.s1), atol=1e-3)


def test_residual_variance():
    studies, _, _ = generate_dataset(1, 1000, 10, seed=5)
    r = np.concatenate([st.y0 - get_setting(1).m0(st.s0) for st in studies])
    assert r.var() == pytest.approx(2.0, abs=0.2)


def test_generation_deterministic():
    a = generate_dataset(2, 3, 10, seed=8)
    b = generate_dataset(2, 3, 10, seed=8)
    for x, y in zip(a[0], b[0]):
        assert x.y1.tobytes() == y.y1.tobytes()
    assert a[1].s0.tobytes() == b[1].s0.tobytes()


def brute_force_truth(setting, n, reps, seed):
    """Draw complete outcome vectors for the new study and count negative effects."""
    rng = np.random.default_rng(seed)
    neg = 0
    for _ in range(reps):
        delta = 0.0
        for g, sign in ((0, -1.0), (1, 1.0)):
            mean, var = setting.s_new[g]
            s = rng.normal(mean, math.sqrt(var), n)
            _, L = cov_cholesky(s, setting.gp)
            delta += sign * (setting.mean(g)(s) + L @ rng.standard_normal(n)).mean()
        neg += delta < 0
    return neg / reps


@pytest.mark.parametrize("setting_id", [1, 3])
def test_truth_matches_full_outcome_simulation(setting_id):
    setting = get_setting(setting_id)
    fast = true_paradox_prob(setting, 30, n_mc=20_000, seed=1)
    slow = brute_force_truth(setting, 30, 6000, seed=2)
    se = math.sqrt(fast * (1 - fast) / 20_000 + slow * (1 - slow) / 6000)
    assert abs(fast - slow) < 4 * se


def test_truth_stable_in_n_mc():
    a = true_paradox_prob(2, 20, n_mc=20_000, seed=3)
    b = true_paradox_prob(2, 20, n_mc=40_000, seed=4)
    assert abs(a - b) < 3 * math.sqrt(a * (1 - a) / 20_000)


def test_truth_infinite_gap():
    base = get_setting(1)
    far = SimSetting(98, base.m0, base.m1, base.gp, base.s_train, ((-100.0, 1.0), (100.0, 1.0)))
    assert true_paradox_prob(far, 10, n_mc=1000) == 0.0
    with pytest.raises(ValueError):
        true_paradox_prob(1, 10, n_mc=999)


def test_truth_setting6_near_zero():
    assert true_paradox_prob(6, 100, n_mc=20_000, seed=2) < 0.01


def test_truth_setting1_reference():
    """Reference truth for setting 1 at 100 per arm."""
    assert true_paradox_prob(1, 100, n_mc=100_000, seed=0) == pytest.approx(0.586, abs=0.01)


def test_single_iteration_flags_ese():
    (res,) = run_simulation(1, 4, 20, 1, n_mc=1000, seed=2, workers=1)
    assert res.iterations == 1 and res.ese == 0.0
    assert any("ESE" in note for note in res.notes)
    assert math.isnan(res.ase) and math.isnan(res.coverage)


def test_harness_summaries_and_csv(tmp_path):
    res = run_simulation(4, 5, 20, 3, estimators=("linear", "cubic-spline"),
                         inference_method="bootstrap", R=4, J=100, n_mc=2000, seed=1, workers=1)
    assert [r.estimator for r in res] == ["linear", "cubic-spline"]
    for r in res:
        assert len(r.p_hats) == 3 and r.n_failed == 0
        assert r.est_mean == pytest.approx(np.mean(r.p_hats))
        assert r.ese == pytest.approx(np.std(r.p_hats, ddof=1))
        assert r.ase == pytest.approx(np.mean(r.ses))
        assert 0.0 <= r.coverage <= 1.0
        assert 0.0 <= r.mv_est <= 1.0
    write_results_csv(res, tmp_path / "t.csv")
    with open(tmp_path / "t.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["setting", "estimator", "truth", "est", "ese", "ase", "cp", "mv"]
    assert float(rows[1]["est"]) == pytest.approx(res[1].est_mean, rel=1e-9)


def test_harness_deterministic_across_workers(monkeypatch):
    out = []
    for threads in ("1", "2"):
        monkeypatch.setenv("RESILIENCE_THREADS", threads)
        (r,) = run_simulation(1, 4, 15, 3, inference_method="pab", R=3, J=100, n_mc=1000, seed=6)
        out.append((r.p_hats, r.ses, r.mv_est, r.truth))
    assert out[0] == out[1]


def test_harness_validation():
    with pytest.raises(ValueError):
        run_simulation(1, 4, 10, 0)
    with pytest.raises(ValueError):
        run_simulation(1, 4, 10, 1, estimators=("quadratic",))
    with pytest.raises(ValueError):
        run_simulation(1, 4, 10, 1, inference_method="jackknife")
    with pytest.raises(ValueError):
        SimResult(1, "linear", 0.5, 0.5, 0.1, 0.1, 1.5, 0.5, 10)
