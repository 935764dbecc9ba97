"""Sampling, path building and stochastic integration."""

import numpy as np
import pytest

import lentparticle as lp
from lentparticle.errors import ConfigurationError, DomainError

from conftest import random_config


def test_zero_mass_gives_empty_configuration():
    spec = lp.compound_poisson_uniform(rate=0.0)
    cfg = lp.sample_configuration(spec, horizon=1.0, seed=7)
    assert cfg.n_jumps == 0


def test_sampling_is_deterministic_and_bit_exact():
    spec = lp.compound_poisson_uniform(rate=3.0, gap=0.01)
    a = lp.sample_configuration(spec, horizon=2.0, seed=123, path_index=5)
    b = lp.sample_configuration(spec, horizon=2.0, seed=123, path_index=5)
    assert lp.configurations_equal(a, b)
    c = lp.sample_configuration(spec, horizon=2.0, seed=123, path_index=6)
    assert not lp.configurations_equal(a, c)


def test_configuration_invariants_enforced():
    with pytest.raises(DomainError):
        lp.JumpConfiguration(horizon=1.0, times=[0.5, 0.5], marks=[[1.0], [2.0]])
    with pytest.raises(DomainError):
        lp.JumpConfiguration(horizon=1.0, times=[0.5], marks=[[0.0]])
    with pytest.raises(DomainError):
        lp.JumpConfiguration(horizon=1.0, times=[1.5], marks=[[1.0]])


def test_infinite_mass_requires_cut():
    spec = lp.truncated_power(beta=0.5, cut=0.1)
    assert np.isinf(spec.total_mass)
    assert spec.effective_mass() == pytest.approx(2 * (0.1**-0.5 - 1) / 0.5)
    bad = lp.unit_ratio_spec(1)  # no sampler, infinite mass
    with pytest.raises(ConfigurationError):
        lp.sample_configuration(bad, horizon=1.0, seed=0)


def test_jump_count_mean_matches_intensity():
    # law of large numbers over 1e5 seeds: mean within 4 sqrt(lam T / n)
    spec = lp.compound_poisson_uniform(rate=1.0, low=1.0, high=2.0)
    n = 100_000
    counts = np.fromiter(
        (lp.sample_configuration(spec, 1.0, seed=42, path_index=i).n_jumps for i in range(n)),
        dtype=float,
        count=n,
    )
    assert abs(counts.mean() - 1.0) < 4.0 * np.sqrt(1.0 / n)


def test_jump_count_variance_matches_poisson():
    spec = lp.compound_poisson_uniform(rate=2.0)
    n = 100_000
    counts = np.fromiter(
        (lp.sample_configuration(spec, 3.0, seed=9, path_index=i).n_jumps for i in range(n)),
        dtype=float,
        count=n,
    )
    # var of the sample variance of Poisson(6) is about (mu4 - var^2)/n
    assert abs(counts.var() - 6.0) < 0.15


def test_build_path_hand_values():
    cfg = lp.JumpConfiguration(horizon=1.0, times=[0.3, 0.7], marks=[[0.5], [-0.2]])
    path = lp.build_path(cfg, 0.0)
    assert path.value(1.0)[0] == pytest.approx(0.3)
    assert path.left_limit(0.7)[0] == pytest.approx(0.5)
    assert path.left_limit(0.0)[0] == 0.0

    drifted = lp.JumpConfiguration(
        horizon=1.0, times=[0.5], marks=[[1.0]], compensator_drift=[1.0]
    )
    dpath = lp.build_path(drifted, 0.0)
    assert dpath.value(1.0)[0] == pytest.approx(0.0)


def test_empty_path_is_constant():
    cfg = lp.JumpConfiguration(horizon=1.0, times=[], marks=np.empty((0, 1)))
    path = lp.build_path(cfg, 0.0)
    for t in (0.0, 0.3, 1.0):
        assert path.value(t)[0] == 0.0


def test_path_recovers_configuration():
    for seed in range(20):
        cfg = random_config(seed)
        path = lp.build_path(cfg, 0.0)
        assert np.array_equal(path.times, cfg.times)
        assert np.array_equal(path.jumps, cfg.marks)
        for j in range(cfg.n_jumps):
            assert np.array_equal(path.jump_at(cfg.times[j]), cfg.marks[j])


def test_stochastic_integral_hand_value():
    cfg = lp.JumpConfiguration(horizon=1.0, times=[0.3, 0.7], marks=[[0.5], [-0.2]])
    path = lp.build_path(cfg, 0.0)
    v = lp.stochastic_integral(lambda y: float(y[0]), path, 1.0)
    assert v[0] == pytest.approx(-0.1, abs=1e-15)
    zero = lp.stochastic_integral(lambda y: 0.0, path, 1.0)
    assert zero[0] == 0.0


def test_stochastic_integral_constant_telescopes():
    # phi = c gives c (Y_t - Y_0) within quadrature tolerance, drift included
    cfg = random_config(3, drift=[0.7])
    path = lp.build_path(cfg, 0.2)
    c = 2.5
    v = lp.stochastic_integral(lambda y: c, path, 1.0)
    expected = c * (path.value(1.0) - path.value(0.0))
    assert abs(v[0] - expected[0]) < 1e-10


def test_sampled_path_is_compensated():
    spec = lp.compound_poisson_uniform(rate=5.0, low=0.0, high=1.0, compensated=True)
    cfg = lp.sample_configuration(spec, horizon=1.0, seed=11)
    assert cfg.compensator_drift[0] == pytest.approx(5.0 * 0.5)


def test_configuration_csv_roundtrip(tmp_path):
    cfg = random_config(1, dim=2)
    out = tmp_path / "config.csv"
    lp.levy.write_configuration_csv(cfg, str(out))
    data = np.genfromtxt(out, delimiter=",", names=True)
    assert data.shape[0] == cfg.n_jumps
    assert np.array_equal(np.atleast_1d(data["time"]), cfg.times)
    assert np.array_equal(np.atleast_1d(data["mark_1"]), cfg.marks[:, 0])


def test_path_csv(tmp_path):
    cfg = random_config(2)
    path = lp.build_path(cfg, 0.0)
    out = tmp_path / "path.csv"
    lp.levy.write_path_csv(path, np.linspace(0, 1, 11), str(out))
    header = out.read_text().splitlines()[0]
    assert header == "t,value_1"
