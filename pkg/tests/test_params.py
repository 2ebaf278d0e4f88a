import math

import numpy as np
import pytest

from srbeam.params import (
    ParameterError,
    SimParams,
    load_config,
    nondimensionalize,
    params_from_config,
    rng_stream,
    trajectory_seed,
)


def test_nondimensionalize_convention():
    u = nondimensionalize(SimParams(30.0, 2 * math.pi * 0.8, 800))
    assert u.gamma_c == pytest.approx(0.0375, abs=1e-15)
    assert u.v_z == pytest.approx(0.8, abs=1e-15)
    assert u.tau == 1.0 and u.lam == 1.0 and u.w == 0.5 and u.k_c == 2 * math.pi


def test_nondimensionalize_zero_tilt():
    assert nondimensionalize(SimParams(30.0, 0.0, 100)).v_z == 0.0


def test_nondimensionalize_gamma_c():
    assert nondimensionalize(SimParams(20.0, 1.0, 800)).gamma_c == pytest.approx(0.025)


@pytest.mark.parametrize(
    "kwargs,fragment",
    [
        (dict(n_gamma_tau=-1.0), "n_gamma_tau"),
        (dict(k_vz_tau=-0.1), "k_vz_tau"),
        (dict(n_atoms=0), "n_atoms"),
        (dict(dt=0.05), "dt"),
        (dict(dt=0.0), "dt"),
        (dict(n_gamma_tau=200.0), "stability guard"),
        (dict(t0=100.0, t_sim=50.0), "t0"),
        (dict(n_traj=0), "n_traj"),
        (dict(sample_stride=0), "sample_stride"),
    ],
)
def test_validation_names_violated_invariant(kwargs, fragment):
    base = dict(n_gamma_tau=30.0, k_vz_tau=1.0, n_atoms=10)
    base.update(kwargs)
    with pytest.raises(ParameterError, match=fragment):
        SimParams(**base).validate()


def test_rng_streams_distinct():
    a = rng_stream(7, 0).random(100)
    b = rng_stream(7, 1).random(100)
    assert not np.allclose(a, b)


def test_rng_stream_reproducible():
    a = rng_stream(7, 3).random(1000)
    b = rng_stream(7, 3).random(1000)
    np.testing.assert_array_equal(a, b)


def test_rng_normal_statistics():
    # standard-normal oracle: mean within 4 sigma of 0, variance within 2%
    x = rng_stream(2024, 0).normal(size=10**6)
    assert abs(x.mean()) < 4.0 / math.sqrt(10**6)
    assert abs(x.var() - 1.0) < 0.02


def test_trajectory_seed_is_stable_tag():
    assert trajectory_seed(11, 4) == trajectory_seed(11, 4)
    assert trajectory_seed(11, 4) != trajectory_seed(11, 5)
    assert 0 <= trajectory_seed(11, 4) < 2**64


def test_load_config_roundtrip(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# comment\n"
        "n_gamma_tau = 30\n"
        "k_vz_tau = 3.14  # inline comment\n"
        "n_atoms = 800\n"
        "n_traj = 4\n"
    )
    values = load_config(cfg)
    assert values == {"n_gamma_tau": 30.0, "k_vz_tau": 3.14,
                      "n_atoms": 800, "n_traj": 4}
    assert isinstance(values["n_atoms"], int)


def test_load_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("atoms = 5\n")
    with pytest.raises(ParameterError, match="unknown config key"):
        load_config(cfg)


def test_load_config_rejects_malformed_line(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n_atoms 5\n")
    with pytest.raises(ParameterError, match="malformed"):
        load_config(cfg)


def test_params_from_config_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n_gamma_tau = 30\nk_vz_tau = 1.0\nn_atoms = 100\n")
    p = params_from_config(cfg, n_atoms=200)
    assert p.n_atoms == 200 and p.n_gamma_tau == 30.0


def test_params_from_config_missing_required():
    with pytest.raises(ParameterError):
        params_from_config(None, n_atoms=100)
