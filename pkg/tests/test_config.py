import json
import os

import pytest

from config.loader import default_config, load_config, merge_config
from src.errors import ConfigError


def test_defaults_are_independent_copies():
    first = default_config()
    first['bellman']['beta'] = 99.0
    assert default_config()['bellman']['beta'] == 10.0


def test_override_replaces_single_key():
    config = merge_config({'bellman': {'beta': 3.0}, 'environments': {'point_mass': {'horizon': 50}}})
    assert config['bellman']['beta'] == 3.0
    assert config['bellman']['inner_tolerance'] == 5e-3
    assert config['environments']['point_mass']['horizon'] == 50
    assert config['environments']['point_mass']['dt'] == 0.05


def test_nullable_entry_accepts_numbers():
    config = merge_config({'miracle': {'marginal_buffer_capacity': 500}})
    assert config['miracle']['marginal_buffer_capacity'] == 500


@pytest.mark.parametrize('overrides', [
    {'bellmann': {}},
    {'bellman': {'temperature': 1.0}},
    {'bellman': {'beta': 'hot'}},
    {'miracle': {'prior_mode': 3}},
    {'training': {'seeds': 4}},
    {'audit': {'instances': True}},
])
def test_invalid_overrides_are_rejected(overrides):
    with pytest.raises(ConfigError):
        merge_config(overrides)


def test_load_config_reads_json(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps({'grid_world': {'width': 4, 'height': 3}}))
    config = load_config(path)
    assert (config['grid_world']['width'], config['grid_world']['height']) == (4, 3)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / 'missing.json')
    broken = tmp_path / 'broken.json'
    broken.write_text('{"bellman": ')
    with pytest.raises(ConfigError):
        load_config(broken)


def test_no_path_gives_defaults():
    assert load_config(None) == default_config()


def test_desk_scale_profile_shrinks_the_networks():
    path = os.path.join(os.path.dirname(__file__), os.pardir, 'config', 'desk_scale.json')
    config = load_config(path)
    assert (config['miracle']['hidden_width'], config['miracle']['minibatch']) == (32, 64)
    assert config['training']['steps'] == default_config()['training']['steps']
