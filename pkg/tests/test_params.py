import pytest

from uavnoma.params import ConfigError, SystemParams, load_params, save_params


def test_defaults_valid():
    p = SystemParams()
    assert p.M == 8 and p.N == 4
    assert p.beta0 == 1.8 and p.beta == 1.05


def test_m_less_than_n_rejected():
    with pytest.raises(ValueError, match="null spaces"):
        SystemParams(M=2, N=4)


def test_xi_range():
    with pytest.raises(ValueError):
        SystemParams(xi=0.0)
    with pytest.raises(ValueError):
        SystemParams(xi=1.5)


def test_box_ordering():
    with pytest.raises(ValueError, match="box"):
        SystemParams(box=(10.0, -10.0, -10.0, 10.0))


def test_beacon_outside_disc():
    with pytest.raises(ValueError, match="beacon"):
        SystemParams(beacon_xy=(10.0, 0.0))


def test_replace_is_fresh_instance():
    p = SystemParams()
    q = p.replace(M=16)
    assert q.M == 16 and p.M == 8


def test_config_roundtrip(tmp_path):
    p = SystemParams(M=16, N=2, P_beacon=12.5)
    path = tmp_path / "cfg.yaml"
    save_params(p, path)
    q = load_params(path)
    assert q == p


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="bogus"):
        SystemParams.from_config({"bogus": 1})
    with pytest.raises(ConfigError, match="P0_typo"):
        SystemParams.from_config({"rotor": {"P0_typo": 1.0}})


def test_invalid_value_maps_to_config_error():
    with pytest.raises(ConfigError):
        SystemParams.from_config({"M": 1, "N": 4})
