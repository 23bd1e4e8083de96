import json

import numpy as np
import pytest

from dichannel.channels import D2Channel, QubitChannel, UnphysicalChannelError, amplitude_damping, dephase
from dichannel.formats import (
    FormatError,
    channel_from_doc,
    counts_csv,
    parse_correlations,
    read_boundary,
    read_channel,
    read_correlations,
    read_counts,
    read_region,
    read_report,
    write_boundary,
    write_channel,
    write_correlations,
    write_counts,
    write_region,
    write_report,
)
from dichannel.geometry import boundary
from dichannel.simulate import grid_settings, simulate_counts, to_points, frequencies


def test_channel_roundtrip(tmp_path):
    for ch in (amplitude_damping(0.37), QubitChannel(np.diag([0.5, 0.4, 0.3]), [0, 0.1, 0.2])):
        p = write_channel(tmp_path / "ch.json", ch)
        back = read_channel(p)
        assert type(back) is type(ch)
        if isinstance(ch, D2Channel):
            assert back.as_tuple() == ch.as_tuple()
        else:
            assert np.array_equal(back.A, ch.A) and np.array_equal(back.b, ch.b)


def test_channel_kinds():
    assert channel_from_doc({"kind": "ad", "lambda": 0.4}).as_tuple() == amplitude_damping(0.4).as_tuple()
    got = channel_from_doc({"kind": "ad", "lambda": 0.4, "visibility": 0.87})
    assert got.as_tuple() == dephase(amplitude_damping(0.4), 0.87).as_tuple()
    with pytest.raises(UnphysicalChannelError):
        channel_from_doc({"kind": "d2", "d": [1, 1, 1], "c3": 0.1})
    with pytest.raises(FormatError):
        channel_from_doc({"kind": "d2", "d": [1, 1]})
    with pytest.raises(FormatError):
        channel_from_doc({"d": [1, 1, 1]})


def test_counts_roundtrip(tmp_path):
    c = simulate_counts(amplitude_damping(0.3), grid_settings(4), 500, 11)
    p = write_counts(tmp_path / "counts.json", c)
    back = read_counts(p)
    assert back.seed == 11
    assert np.array_equal(back.counts, c.counts) and np.array_equal(back.shots, c.shots)
    assert back.settings == c.settings
    doc = json.loads(p.read_text())
    assert doc["shots"] == 500 and doc["format"] == "dichannel-counts/1"
    assert counts_csv(c).splitlines()[0] == "input_id,meas_id,outcome,count"


def test_counts_validation(tmp_path):
    c = simulate_counts(amplitude_damping(0.3), grid_settings(2), 10, 1)
    doc = json.loads(write_counts(tmp_path / "c.json", c).read_text())
    doc["records"][0]["outcome"] = 3
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    with pytest.raises(FormatError):
        read_counts(tmp_path / "bad.json")
    (tmp_path / "broken.json").write_text("{")
    with pytest.raises(FormatError):
        read_counts(tmp_path / "broken.json")


def test_correlations_roundtrip_is_exact(tmp_path):
    d = to_points(frequencies(simulate_counts(amplitude_damping(0.3), grid_settings(5), 333, 2)))
    back = read_correlations(write_correlations(tmp_path / "c.csv", d))
    assert np.array_equal(back.p, d.p) and np.array_equal(back.sigma, d.sigma)
    assert np.array_equal(back.pair_id, d.pair_id) and np.array_equal(back.meas_id, d.meas_id)


def test_correlations_minimal_and_empty():
    d = parse_correlations("p11,p12\n0.25,0.75\n")
    assert d.p.tolist() == [[0.25, 0.75]] and d.sigma.tolist() == [[0.0, 0.0]]
    assert len(parse_correlations("pair_id,meas_id,p11,p12,s11,s12\n")) == 0
    with pytest.raises(FormatError):
        parse_correlations("a,b\n1,2\n")
    with pytest.raises(FormatError):
        parse_correlations("p11,p12\nx,0.5\n")


def test_region_and_boundary_roundtrip(tmp_path):
    r = boundary(amplitude_damping(0.4), 128)
    back = read_region(write_region(tmp_path / "r.json", r))
    assert np.array_equal(back.support_values, r.support_values)
    assert np.array_equal(back.vertices, r.vertices)
    assert back.params == r.params
    assert np.array_equal(read_boundary(write_boundary(tmp_path / "b.csv", r)), r.polygon)


def test_report_schema(tmp_path):
    doc = {"kind": "class", "d2": 0.7, "d3": 0.6, "c3": 0.4, "mu": float("nan"), "in_regime": False, "area": 0.5, "d1_range": [0.1, 0.7], "degenerate": False}
    back = read_report(write_report(tmp_path / "r.json", doc))
    assert back["mu"] is None
    with pytest.raises(FormatError):
        write_report(tmp_path / "x.json", {"kind": "class", "d2": 1.0})
    with pytest.raises(FormatError):
        write_report(tmp_path / "y.json", {"kind": "other"})
