import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from neurosort.errors import EmptyInputError, ParseError, UnsupportedError
from neurosort.signal import (TEMPLATE_LEN, TEMPLATE_PEAK, NeuralTrace, NSpike, load_trace,
                              split_dataset, synth_trace, template, write_trace)


def test_csv_readback(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0.0\n1.0\n-1.0")
    tr = load_trace(p)
    assert tr.samples.tolist() == [0.0, 1.0, -1.0]
    assert tr.labels == ()


def test_csv_label_column(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0.0\n5.0,1\n0.0\n")
    tr = load_trace(p)
    assert tr.labels == ((1, 1),)
    assert tr.samples.tolist() == [0.0, 5.0, 0.0]


def test_csv_parse_error_names_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0.0\n1.0\nabc\n")
    with pytest.raises(ParseError, match="line 3") as info:
        load_trace(p)
    assert info.value.line == 3


def test_csv_too_many_columns(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0.0,1,2\n")
    with pytest.raises(ParseError, match="line 1"):
        load_trace(p)


@pytest.mark.parametrize("fmt", ["csv", "raw-f64-le"])
def test_empty_file(tmp_path, fmt):
    p = tmp_path / "empty"
    p.write_bytes(b"")
    with pytest.raises(EmptyInputError):
        load_trace(p, format=fmt)


def test_raw_against_known_bytes(tmp_path):
    # bytes assembled by hand: 1.0, -2.5 and 0.1 as IEEE-754 little endian
    raw = bytes.fromhex("000000000000f03f" "00000000000004c0" "9a9999999999b93f")
    p = tmp_path / "x.f64"
    p.write_bytes(raw)
    tr = load_trace(p, format="raw-f64-le")
    assert tr.samples.tolist() == [1.0, -2.5, 0.1]


def test_raw_bad_length(tmp_path):
    p = tmp_path / "x.f64"
    p.write_bytes(b"\x00" * 12)
    with pytest.raises(ParseError):
        load_trace(p, format="raw-f64-le")


def test_unknown_format(tmp_path):
    p = tmp_path / "x"
    p.write_text("1\n")
    with pytest.raises(UnsupportedError):
        load_trace(p, format="wav")


@given(arrays(np.float64, st.integers(1, 50),
              elements=st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)))
def test_roundtrip_both_formats(tmp_path_factory, x):
    d = tmp_path_factory.mktemp("rt")
    labels = ((0, 2),) if x.size else ()
    tr = NeuralTrace(x, 24000.0, labels)
    write_trace(tr, d / "a.csv")
    assert load_trace(d / "a.csv") == tr
    write_trace(tr, d / "a.bin", format="raw-f64-le")
    back = load_trace(d / "a.bin", format="raw-f64-le")
    assert np.array_equal(back.samples, tr.samples)


def test_trace_invariants():
    with pytest.raises(ValueError):
        NeuralTrace([0.0, 1.0], sample_rate=0)
    with pytest.raises(ValueError):
        NeuralTrace([0.0, 1.0], labels=((2, 0),))
    tr = NeuralTrace([0.0, 1.0])
    with pytest.raises(ValueError):
        tr.samples[0] = 3.0


def test_nspike_is_immutable():
    s = NSpike([1, 2, 3], [True, False])
    with pytest.raises(ValueError):
        s.digitized[0] = 5
    with pytest.raises(ValueError):
        NSpike([-1, 2], [True])


def test_synth_counts_and_balance():
    tr = synth_trace(3, 10, 0.0, seed=4)
    assert len(tr.labels) == 30
    assert np.bincount(tr.label_classes).tolist() == [10, 10, 10]
    # rounds: every block of three consecutive spikes holds each class once
    cls = tr.label_classes.reshape(10, 3)
    assert all(sorted(r) == [0, 1, 2] for r in cls)


def test_synth_noise_free_windows_are_templates():
    tr = synth_trace(3, 10, 0.0, seed=1)
    for idx, c in tr.labels:
        w = tr.samples[idx:idx + TEMPLATE_LEN]
        assert np.array_equal(w, template(c))
        assert np.corrcoef(w, template(c))[0, 1] > 0.99


def test_synth_deterministic():
    a = synth_trace(3, 20, 0.05, seed=9)
    b = synth_trace(3, 20, 0.05, seed=9)
    assert a == b
    assert not np.array_equal(a.samples, synth_trace(3, 20, 0.05, seed=10).samples)


def test_synth_limits():
    with pytest.raises(UnsupportedError):
        synth_trace(5, 2, 0.0, seed=0)
    with pytest.raises(ValueError):
        synth_trace(1, 2, 0.0, seed=0)
    with pytest.raises(ValueError):
        synth_trace(3, 2, -0.1, seed=0)


def test_synth_noise_level():
    tr = synth_trace(3, 100, 0.05, seed=3)
    resid = tr.samples.copy()
    for idx, c in tr.labels:
        resid[idx:idx + TEMPLATE_LEN] -= template(c)
    assert abs(resid.std() - 0.05) < 0.005


def test_templates_distinct_and_peak_aligned():
    ts = [template(c) for c in range(4)]
    for t in ts:
        assert int(np.argmax(np.abs(t))) == TEMPLATE_PEAK
    for i in range(4):
        for j in range(i + 1, 4):
            assert np.corrcoef(ts[i], ts[j])[0, 1] < 0.95


@given(st.integers(0, 40), st.floats(0.05, 0.95), st.integers(0, 2 ** 32 - 1))
def test_split_disjoint_and_complete(n, frac, seed):
    items = list(range(n))
    sp = split_dataset(items, frac, seed)
    assert sorted(sp.train + sp.test) == items
    assert not set(sp.train) & set(sp.test)
