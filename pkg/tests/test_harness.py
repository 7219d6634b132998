import numpy as np
import pytest

from hebbnet.harness import (
    ExperimentConfig,
    InfoCurve,
    SweepRow,
    SweepTable,
    derive_seed,
    emit_csv,
    run_experiment,
    run_theory,
    sweep_topology,
    window_average,
)
from hebbnet.patterns import generate_random_patterns
from hebbnet.topology import ConfigurationError

SMALL = ExperimentConfig(synapse_budget=40_000, gamma=0.1, omega=0.2, trials=2, delta_P=5, seed=3)


@pytest.mark.parametrize("gamma", [1.0, 0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3])
@pytest.mark.parametrize("budget", [10**6, 4 * 10**6])
def test_budget_invariant(gamma, budget):
    N, K = ExperimentConfig(synapse_budget=budget, gamma=gamma).sizes()
    assert N > K >= 1
    assert abs(N * K - budget) / budget < 0.05
    assert abs(K / N - gamma) / gamma < 0.05


def test_single_pattern_point():
    cfg = ExperimentConfig(synapse_budget=10_000, gamma=0.2, omega=0.3, P_max=1, trials=1)
    curve = run_experiment(cfg)
    assert curve.alpha.tolist() == [1 / curve.K]
    assert curve.m_mean.tolist() == [1.0]
    assert curve.i_mean[0] == pytest.approx(1 / curve.K)


def test_config_errors():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(gamma=0.0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(mode="bogus")
    with pytest.raises(ConfigurationError):
        run_experiment(ExperimentConfig(synapse_budget=10_000, gamma=0.5),
                       patterns=generate_random_patterns(3, 7, np.random.default_rng(0)))


def test_derive_seed_distinct():
    seeds = {derive_seed(0, n) for n in range(100)}
    assert len(seeds) == 100
    assert derive_seed(5, 1) == derive_seed(5, 1)


def test_window_average_by_hand():
    P = np.array([1, 2, 3, 4, 5])
    y = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    mean, se = window_average(P, y, 3)
    np.testing.assert_allclose(mean, [1.5, 2, 3, 4, 4.5])
    assert se[2] == pytest.approx(np.std([2, 3, 4], ddof=1) / np.sqrt(3))


def test_curve_shape_and_extraction():
    curve = run_experiment(SMALL)
    assert np.all(np.diff(curve.alpha) > 0)
    assert curve.alpha[0] == pytest.approx(1 / curve.K)
    j = int(np.argmax(curve.i_mean))
    assert curve.i_max == curve.i_mean[j] and curve.alpha_max == curve.alpha[j]
    assert 0 < curve.i_max < 0.5
    assert np.all((curve.m_mean >= 0) & (curve.m_mean <= 1))


def test_csv_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_experiment(SMALL), a, SMALL)
    emit_csv(run_experiment(SMALL), b, SMALL)
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text().splitlines()
    assert "# seed=3" in text
    assert "alpha,m_mean,m_se,i_mean,i_se" in text


def test_empty_curve_csv(tmp_path):
    empty = np.array([])
    curve = InfoCurve(empty, empty, empty, empty, empty, empty, 0.0, 0.0, 0.0, 10, 2)
    path = tmp_path / "e.csv"
    emit_csv(curve, path, SMALL)
    lines = path.read_text().splitlines()
    assert lines[-1] == "alpha,m_mean,m_se,i_mean,i_se"
    assert all(line.startswith("#") for line in lines[:-1])


def test_sweep_table_ordering(tmp_path):
    base = ExperimentConfig(synapse_budget=20_000, trials=1, delta_P=5, m0=0.5)
    table = sweep_topology(base, [0.3, 0.05, 0.1], [0.5, 0.0])
    path = tmp_path / "s.csv"
    emit_csv(table, path, base)
    rows = [line.split(",") for line in path.read_text().splitlines() if not line.startswith("#")]
    assert rows[0] == ["omega", "gamma", "alpha_max", "i_max", "i_se"]
    keys = [(float(r[0]), float(r[1])) for r in rows[1:]]
    assert len(keys) == 6 and keys == sorted(keys)
    assert table.gamma_opt(0.0) in (0.3, 0.05, 0.1)


def test_sweep_worker_independence(tmp_path):
    base = ExperimentConfig(synapse_budget=20_000, trials=1, delta_P=5, m0=0.5, seed=9)
    paths = []
    for workers in (1, 2):
        path = tmp_path / f"w{workers}.csv"
        emit_csv(sweep_topology(base, [0.3, 0.1], [0.1], workers=workers), path, base)
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def _broken_source(P, N, rng):
    raise RuntimeError("no patterns today")


def test_sweep_records_cell_failures():
    base = ExperimentConfig(synapse_budget=20_000, trials=1)
    table = sweep_topology(base, [0.3, 0.1], [0.0], pattern_source=_broken_source)
    assert len(table.rows) == 2
    assert all("no patterns" in r.error for r in table.rows)
    with pytest.raises(ConfigurationError):
        sweep_topology(base, [], [0.0])


def test_gamma_opt_by_hand():
    rows = [SweepRow(0.1, g, 0.1, i, 0.0) for g, i in [(1.0, 0.1), (0.1, 0.3), (0.01, 0.2)]]
    assert SweepTable(rows).gamma_opt(0.1) == 0.1


def test_stability_dominates_retrieval():
    base = ExperimentConfig(synapse_budget=250_000, gamma=0.05, omega=0.2, trials=2, seed=1)
    stab = run_experiment(base)
    retr = run_experiment(ExperimentConfig(**{**base.__dict__, "m0": 0.1}))
    assert stab.i_max >= retr.i_max - 2 * max(stab.i_max_se, retr.i_max_se)


def test_theory_csv(tmp_path):
    path = tmp_path / "t.csv"
    res = run_theory(ExperimentConfig(), "red", out=path)
    assert res.i_max == pytest.approx(0.2156, abs=1e-3)
    assert "# ak_source=red" in path.read_text()


@pytest.mark.parametrize("gamma", [1.0, 0.1, 0.03, 0.003])
def test_image_sizes_square_within_budget(gamma):
    N, K = ExperimentConfig(synapse_budget=300_000, gamma=gamma, mode="image").sizes()
    side = int(round(N ** 0.5))
    assert side * side == N and N > K
    assert abs(N * K - 300_000) / 300_000 < 0.1
