import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from loctime.montecarlo import (
    ExperimentConfig,
    PathError,
    conjecture_probe,
    effective_workers,
    expectation_scan,
    ks_two_sample,
    run_experiment,
    zero_field,
)
from loctime.path_sim import make_rng


def small_config(**kw):
    base = dict(q=2, h_list=(0.2, 0.1), n_paths=40, master_seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def failing_field(config, rng):
    raise RuntimeError("boom")


def test_ks_examples():
    assert ks_two_sample([1, 2, 3], [1, 2, 3]) == 0.0
    assert ks_two_sample([0, 1], [2, 3, 4]) == 1.0
    assert ks_two_sample([1, 2], [1.5]) == 0.5
    with pytest.raises(ValueError):
        ks_two_sample([], [1.0])


def brute_force_ks(a, b):
    points = sorted(set(a) | set(b))
    return max(abs(np.mean(np.asarray(a) <= x) - np.mean(np.asarray(b) <= x)) for x in points)


@settings(max_examples=60, deadline=None)
@given(
    a=st.lists(st.integers(-5, 5), min_size=1, max_size=30),
    b=st.lists(st.integers(-5, 5), min_size=1, max_size=30),
)
def test_ks_matches_brute_force_with_ties(a, b):
    assert ks_two_sample(a, b) == pytest.approx(brute_force_ks(a, b), abs=1e-12)
    assert ks_two_sample(a, b) == ks_two_sample(b, a)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), power=st.sampled_from([1, 3, 5]), shift=st.floats(-3, 3))
def test_ks_invariant_under_monotone_map(seed, power, shift):
    rng = make_rng(seed)
    a, b = rng.standard_normal(50), rng.standard_normal(70) + 0.3
    f = lambda x: np.sign(x) * np.abs(x) ** power + shift
    assert ks_two_sample(f(a), f(b)) == pytest.approx(ks_two_sample(a, b), abs=1e-12)


def test_ks_agrees_with_scipy():
    rng = make_rng(0)
    a, b = rng.standard_normal(500), rng.standard_t(4, 800)
    assert ks_two_sample(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(h_list=(0.1, 0.2))
    with pytest.raises(ValueError):
        small_config(h_list=(0.015,))
    with pytest.raises(ValueError):
        small_config(n_paths=1)
    with pytest.raises(ValueError):
        small_config(q=1)
    with pytest.raises(ValueError):
        small_config(mode="other")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"q": 2, "colour": "red"})
    cfg = small_config()
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    assert "workers" not in cfg.to_dict()


def test_zero_field_stub():
    cfg = small_config(n_paths=2)
    rep = run_experiment(cfg, zero_field)
    assert not np.any(rep.t_q) and not np.any(rep.limit_sample)
    assert all(s.ks_stat == 0.0 for s in rep.summaries)
    assert all(math.isnan(s.var_ratio) for s in rep.summaries)
    probe = conjecture_probe(small_config(q=4, n_paths=2), run_experiment(small_config(q=4, n_paths=2), zero_field))
    assert all(row.var_centered_R == 0.0 and row.var_T == 0.0 for row in probe)


def test_report_shapes_and_pairing():
    cfg = small_config()
    rep = run_experiment(cfg)
    assert rep.t_q.shape == (40, 2) and len(rep.seeds) == 40
    np.testing.assert_array_equal(rep.path_ids, np.arange(40))
    np.testing.assert_allclose(rep.t_q, (rep.s_q + rep.r_qh) / np.array([0.2, 0.1]) ** 1.5)
    np.testing.assert_allclose(rep.r_qh, -4 * np.array([0.2, 0.1]) * np.ones((40, 1)), rtol=1e-9)
    for s in rep.summaries:
        assert 0.0 <= s.ks_stat <= 1.0


def test_worker_count_does_not_change_results():
    cfg = small_config(n_paths=12)
    one = run_experiment(cfg)
    three = run_experiment(ExperimentConfig(**{**cfg.__dict__, "workers": 3}))
    for name in ("s_q", "r_qh", "t_q", "limit_scale", "z"):
        assert getattr(one, name).tobytes() == getattr(three, name).tobytes()
    assert one.summaries == three.summaries
    assert one.seeds == three.seeds


def test_workers_env_cap(monkeypatch):
    monkeypatch.setenv("LOCTIME_WORKERS", "2")
    assert effective_workers(8) == 2
    assert effective_workers(1) == 1
    monkeypatch.delenv("LOCTIME_WORKERS")
    assert effective_workers(8) == 8


def test_path_errors_carry_index():
    with pytest.raises(PathError) as info:
        run_experiment(small_config(n_paths=3), failing_field)
    assert info.value.index == 0


def test_gaussian_factor_independent_of_path():
    cfg = ExperimentConfig(q=2, h_list=(0.1,), n_paths=4000, master_seed=5)
    rep = run_experiment(cfg)
    corr = np.corrcoef(rep.z, rep.limit_scale[:, 0])[0, 1]
    assert abs(corr) <= 3 / math.sqrt(cfg.n_paths)
    assert np.std(rep.z) == pytest.approx(1.0, abs=0.05)


def test_expectation_scan_identity_column():
    cfg = small_config(n_paths=30)
    rows = expectation_scan(cfg)
    for row in rows:
        assert row.mean_S_plus_R == pytest.approx(row.mean_S - 4 * row.h, abs=1e-12)
        assert row.deviation == pytest.approx(row.mean_S - 4 * row.h)
    with pytest.raises(ValueError):
        expectation_scan(small_config(q=3))


def test_conjecture_probe_requires_high_order():
    with pytest.raises(ValueError):
        conjecture_probe(small_config(q=3))
    rows = conjecture_probe(small_config(q=4, n_paths=30))
    assert [r.h for r in rows] == [0.2, 0.1]
    assert all(r.var_centered_R > 0 and r.var_T > 0 for r in rows)


def test_tau_mode_runs():
    cfg = small_config(mode="tau", n_paths=20)
    rep = run_experiment(cfg)
    assert np.all(rep.limit_scale > 0)
    assert np.all(np.isfinite(rep.t_q))
