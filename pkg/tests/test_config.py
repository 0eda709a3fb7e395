import numpy as np
import pytest
from hypothesis import given, strategies as st

from neurosort.config import (SECTIONS, RunConfig, build_config, format_value, load_config_file,
                              parse_lines, parse_overrides, seed_for)
from neurosort.errors import ConfigError


def test_defaults():
    rc = build_config()
    assert rc == RunConfig()
    assert rc.synth.spikes_per_class == 500 and rc.synth.noise_sigma == 0.03
    assert rc.snn.restarts == 10 and rc.adapt.percentile == 95.0
    assert set(SECTIONS) <= {k.split(".")[0] for k in rc.flat()}


def test_parse_lines_and_comments():
    got = parse_lines(["# comment", "", "snn.restarts = 4  # trailing", "seed=7"])
    assert got == {"snn.restarts": "4", "seed": "7"}
    with pytest.raises(ConfigError, match="cfg:2"):
        parse_lines(["a.b = 1", "no equals sign"], "cfg")


def test_coercion_by_default_type():
    rc = build_config({"snn.restarts": "3", "crossbar.g_p": "20", "snn.reset_every_input": "yes",
                       "sweep.levels": "0, 0.5,2", "snn.train_count": "100",
                       "encoder.groups": "none", "input.source": "synth"})
    assert rc.snn.restarts == 3 and isinstance(rc.crossbar.g_p, float)
    assert rc.snn.reset_every_input is True
    assert rc.sweep.levels == (0.0, 0.5, 2.0)
    assert rc.snn.train_count == 100 and rc.encoder.groups is None


@pytest.mark.parametrize("settings", [{"snn.nope": "1"}, {"nosuch.key": "1"}, {"snn": "1"},
                                      {"snn.restarts": "three"}, {"snn.reset_every_input": "maybe"},
                                      {"split.train_fraction": "1.5"}, {"seed": "-1"}])
def test_bad_settings_raise(settings):
    with pytest.raises(ConfigError):
        build_config(settings)


def test_file_and_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("seed = 5\nsynth.spikes_per_class = 40\n")
    settings = load_config_file(p)
    settings.update(parse_overrides(["synth.spikes_per_class=60"]))
    rc = build_config(settings)
    assert rc.seed == 5 and rc.synth.spikes_per_class == 60
    assert build_config(settings, seed=9).seed == 9
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        parse_overrides(["novalue"])


def test_config_hash_tracks_settings_only():
    a = build_config({}, seed=1)
    b = build_config({}, seed=2)
    c = build_config({"snn.restarts": "4"}, seed=1)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()
    assert len(a.config_hash()) == 16


@given(st.dictionaries(st.sampled_from(["snn.restarts", "kmeans.iterations", "adapt.window"]),
                       st.integers(1, 50), max_size=3))
def test_flat_roundtrip(settings):
    rc = build_config({k: str(v) for k, v in settings.items()})
    again = build_config(rc.flat())
    assert again == rc


def test_format_value():
    assert format_value(None) == "none"
    assert format_value(True) == "true"
    assert format_value((0.0, 0.5)) == "0.0,0.5"
    assert format_value(0.1) == "0.1"


def test_seed_streams_independent():
    a = np.random.default_rng(seed_for(0, 1)).random(4)
    b = np.random.default_rng(seed_for(0, 2)).random(4)
    c = np.random.default_rng(seed_for(0, 1)).random(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, c)
