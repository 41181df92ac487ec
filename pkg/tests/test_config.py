import pytest

from lcsae.config import (ConfigError, ExperimentConfig, config_from_dict,
                          config_to_dict, derived_rng, parse_config)


def test_defaults_match_reference_parameters():
    cfg = ExperimentConfig()
    assert cfg.N == 500
    assert cfg.P_init is True
    assert cfg.epsilon0 == 0.01
    assert cfg.beta == 0.1
    assert cfg.alpha == 1.0
    assert cfg.nu == 10.0
    assert cfg.delta == 0.1
    assert cfg.theta_del == 20
    assert cfg.F_I == 0.01
    assert cfg.epsilon_I == 0.0
    assert cfg.F_R == 0.1
    assert cfg.epsilon_R == 1.0
    assert cfg.theta_EA == 50
    assert cfg.lam == 2
    assert cfg.chi == 0.0
    assert cfg.mu_min == 1e-4
    assert cfg.omega == 0.9
    assert cfg.h_I == 1
    assert cfg.h_M == 5
    assert cfg.h_max is None
    assert cfg.stale_limit == 10000
    assert cfg.match_threshold == 0.5


def test_parse_overrides_and_comments():
    cfg = parse_config("""
# comment line
N = 40
beta=0.2
lambda=4
mode=global_ea
h_max=12
connection_mutation=true
image_shape=16,16
dataset=foo.csv
""")
    assert cfg.N == 40
    assert cfg.beta == 0.2
    assert cfg.lam == 4
    assert cfg.global_ea
    assert cfg.h_max == 12
    assert cfg.connection_mutation is True
    assert cfg.image_shape == (16, 16, 1)
    assert cfg.dataset == "foo.csv"


def test_parse_rejects_unknown_and_duplicate_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("frobnicate=1\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("N=10\nN=20\n")
    with pytest.raises(ConfigError, match="key=value"):
        parse_config("just words\n")


def test_parse_rejects_bad_values():
    with pytest.raises(ConfigError, match="bad value"):
        parse_config("N=lots\n")
    with pytest.raises(ConfigError, match="chi"):
        parse_config("chi=0.5\n")
    with pytest.raises(ConfigError, match="mode"):
        parse_config("mode=banana\n")
    with pytest.raises(ConfigError, match="beta"):
        parse_config("beta=0\n")
    with pytest.raises(ConfigError, match="h_max"):
        parse_config("h_I=3\nh_max=2\n")


def test_config_dict_round_trip():
    cfg = parse_config("N=12\nlambda=2\nimage_shape=8,8,3\nseed=99\n")
    again = config_from_dict(config_to_dict(cfg))
    assert again == cfg


def test_derived_rng_streams_are_independent_and_stable():
    a1 = derived_rng(7, 0).random(4)
    a2 = derived_rng(7, 0).random(4)
    b = derived_rng(7, 1).random(4)
    assert (a1 == a2).all()
    assert not (a1 == b).all()
