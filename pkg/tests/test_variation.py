import numpy as np
import pytest
from hypothesis import given, strategies as st

from neurosort.crossbar import CrossbarConfig, CrossbarNetwork, nominal_conductances
from neurosort.classifier import accuracy
from neurosort.errors import ConfigError
from neurosort.variation import (REFERENCE_CONSTANTS, PowerParams, VariationSweepConfig,
                                 average_power, draw_factors, perturb_conductances,
                                 run_variation_sweep, write_sweep_csv)


def small_problem(seed=0, rows=30):
    rng = np.random.default_rng(seed)
    w = rng.random((rows, 3)) < 0.5
    # spikes built to favour their own column, so accuracy is meaningful
    labels = rng.integers(0, 3, size=40)
    spikes = (rng.random((40, rows)) < 0.15) | (w[:, labels].T & (rng.random((40, rows)) < 0.8))
    return CrossbarConfig(rows=rows, cols=4), w, spikes, labels


def test_level_zero_is_identity():
    cfg, w, _, _ = small_problem()
    g = perturb_conductances(cfg, w, 0.0, seed=1)
    assert np.array_equal(g, nominal_conductances(cfg, w))


@given(st.floats(0.0, 3.0), st.integers(0, 2 ** 31 - 1),
       st.sampled_from(["independent", "correlated"]), st.sampled_from(["uniform", "gaussian"]))
def test_perturbed_values_bounded_and_positive(level, seed, mode, dist):
    cfg, w, _, _ = small_problem()
    g0 = nominal_conductances(cfg, w)
    g = perturb_conductances(cfg, w, level, seed, mode, dist)
    ratio = g / g0
    assert np.all(g > 0)
    assert ratio.min() >= 1 - min(level, 0.99) - 1e-12
    assert ratio.max() <= 1 + level + 1e-12
    if mode == "correlated":
        assert np.allclose(ratio, ratio.flat[0])


def test_level_half_range():
    cfg, w, _, _ = small_problem()
    g0 = nominal_conductances(cfg, w)
    g = perturb_conductances(cfg, w, 0.5, seed=3)
    assert np.all(g >= 0.5 * g0) and np.all(g <= 1.5 * g0)


def test_uniform_mean_within_three_sigma():
    rng = np.random.default_rng(2024)
    n, level = 100_000, 0.5
    u = draw_factors(rng, (n,), level) - 1.0
    # U[-0.5, 0.5]: mean 0, standard deviation 1/sqrt(12)
    sigma = 1.0 / np.sqrt(12) / np.sqrt(n)
    assert abs(u.mean()) <= 3 * sigma


def test_negative_level_rejected():
    with pytest.raises(ConfigError):
        draw_factors(np.random.default_rng(0), (3,), -0.1)
    with pytest.raises(ConfigError):
        VariationSweepConfig(levels=(-1,))
    with pytest.raises(ConfigError):
        VariationSweepConfig(trials_per_level=0)


def test_sweep_level_zero_matches_unperturbed_and_reproducible():
    cfg, w, spikes, labels = small_problem()
    sweep = VariationSweepConfig(levels=(0.0, 0.3, 1.0), trials_per_level=4, seed=11)
    rows_a = run_variation_sweep(cfg, w, sweep, spikes, labels)
    rows_b = run_variation_sweep(cfg, w, sweep, spikes, labels)
    assert rows_a == rows_b
    base = accuracy(CrossbarNetwork(cfg, w).predict(spikes), labels)
    assert rows_a[0] == (0.0, base, 0.0, 4)
    assert [r[0] for r in rows_a] == [0.0, 0.3, 1.0]
    assert all(0 <= r[1] <= 100 for r in rows_a)


def test_sweep_prefix_stable_when_levels_are_appended():
    cfg, w, spikes, labels = small_problem()
    short = run_variation_sweep(cfg, w, VariationSweepConfig((0.0, 0.5), 3, seed=5), spikes, labels)
    longer = run_variation_sweep(cfg, w, VariationSweepConfig((0.0, 0.5, 2.0), 3, seed=5), spikes, labels)
    assert longer[:2] == short


def test_sweep_accepts_seed_sequence():
    cfg, w, spikes, labels = small_problem()
    ss = np.random.SeedSequence(9, spawn_key=(5,))
    a = run_variation_sweep(cfg, w, VariationSweepConfig((0.5,), 2, seed=ss), spikes, labels)
    b = run_variation_sweep(cfg, w, VariationSweepConfig((0.5,), 2, seed=np.random.SeedSequence(9, spawn_key=(5,))),
                            spikes, labels)
    assert a == b


def test_sweep_csv(tmp_path):
    write_sweep_csv([(0.0, 95.0, 0.0, 20), (0.3, 94.5, 1.25, 20)], tmp_path / "s.csv", ["seed 0"])
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "# seed 0"
    assert lines[1] == "level,mean_accuracy,std_accuracy,trials"
    assert lines[3] == "0.3,94.500000,1.250000,20"


# ---------------------------------------------------------------- power

def test_power_reference_value():
    p = average_power(PowerParams(0.3e-6, 3, 1.2, 0.01))
    assert p == pytest.approx(10.8e-9, rel=1e-12)
    assert abs(p - 10e-9) / 10e-9 <= 0.10


def test_power_zero_beta_and_linearity():
    assert average_power(PowerParams(beta=0.0)) == 0.0
    assert average_power(PowerParams(n_column=6)) == pytest.approx(2 * average_power(PowerParams()))


@given(st.floats(1e-9, 1e-5), st.floats(0.1, 10), st.floats(0.1, 5), st.floats(0, 1),
       st.floats(0.05, 1.0), st.sampled_from(["i_synapse", "n_column", "v_dd", "beta"]))
def test_power_homogeneous_degree_one(i, n, v, beta, c, which):
    base = PowerParams(i, n, v, beta)
    scaled = dict(i_synapse=i, n_column=n, v_dd=v, beta=beta)
    scaled[which] *= c
    assert average_power(PowerParams(**scaled)) == pytest.approx(c * average_power(base), rel=1e-12, abs=1e-30)


def test_power_from_crossbar_config():
    p = PowerParams.from_crossbar(CrossbarConfig())
    assert (p.i_synapse, p.n_column, p.v_dd) == (0.3e-6, 3, 1.2)
    assert p.beta == pytest.approx(0.01)
    with pytest.raises(ConfigError):
        PowerParams(beta=1.5)
    with pytest.raises(ConfigError):
        PowerParams(v_dd=-1)


def test_reference_constants():
    assert REFERENCE_CONSTANTS["kmeans_power_uW"] == 51.12
    assert REFERENCE_CONSTANTS["kmeans_area_um2"] == 177588.0
