import io
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from preyhandling.data import (
    CSV_HEADER,
    SensorSample,
    SynthConfig,
    TimeSeries,
    bout_schedule,
    emit_csv,
    parse_csv,
    read_csv,
    round_significant,
    synthesize,
    write_csv,
)
from preyhandling.exceptions import OrderingError, ParseError

FIXTURE = Path(__file__).parent / "fixtures" / "five_rows.csv"

FIXTURE_ROWS = [
    (0.0, 0.0125, -0.25, 0.5, 3.75, -1),
    (0.04, -0.0625, 0.125, -1.5, 4.0, -1),
    (0.08, 0.1, 0.2, 0.3, 12.345678, 1),
    (0.12, -1e-05, 2.5e-07, 0.0, 0.0, 1),
    (0.16, 1.23456789, -9.87654321, 0.000123456789, 1000.5, -1),
]


def test_header_only_is_empty():
    ts = parse_csv(CSV_HEADER + "\n")
    assert len(ts) == 0
    assert ts.values.shape == (0, 4)


def test_rate_inferred_from_spacing():
    text = CSV_HEADER + "\n0.00,0,0,0,1,-1\n0.04,0,0,0,1,-1\n0.08,0,0,0,1,1\n"
    assert parse_csv(text).rate == pytest.approx(25.0, rel=1e-9)


def test_fixture_fields_match_literals():
    ts = read_csv(FIXTURE)
    assert [tuple(s) for s in ts] == FIXTURE_ROWS
    assert all(isinstance(s, SensorSample) for s in ts)


def test_fixture_emit_is_identical_text():
    text = FIXTURE.read_text()
    assert emit_csv(parse_csv(text)) == text


def test_plus_one_label_accepted():
    ts = parse_csv(CSV_HEADER + "\n0,0,0,0,0,+1\n")
    assert ts.labels.tolist() == [1]


@pytest.mark.parametrize(
    "row, line",
    [
        ("0,1,2,3,4", 2),
        ("0,1,2,3,4,-1,9", 2),
        ("0,1,x,3,4,-1", 2),
        ("0,1,2,3,4,0", 2),
        ("0,1,2,3,nan,1", 2),
    ],
)
def test_malformed_rows_carry_line_number(row, line):
    with pytest.raises(ParseError) as exc:
        parse_csv(CSV_HEADER + "\n" + row + "\n")
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_error_line_counts_earlier_rows():
    text = CSV_HEADER + "\n0,0,0,0,0,1\n0.04,0,0,0,0,1\n0.08,0,0,0,0,2\n"
    with pytest.raises(ParseError) as exc:
        parse_csv(text)
    assert exc.value.line == 4


def test_bad_header():
    with pytest.raises(ParseError) as exc:
        parse_csv("time,a,b,c,d,label\n")
    assert exc.value.line == 1


@pytest.mark.parametrize("second", ["0", "-0.04"])
def test_non_increasing_timestamps(second):
    with pytest.raises(OrderingError):
        parse_csv(CSV_HEADER + f"\n0,0,0,0,0,1\n{second},0,0,0,0,1\n")


def test_timeseries_is_read_only():
    ts = read_csv(FIXTURE)
    with pytest.raises(ValueError):
        ts.values[0, 0] = 1.0


def test_is_uniform():
    assert read_csv(FIXTURE).is_uniform()
    jitter = parse_csv(CSV_HEADER + "\n0,0,0,0,0,1\n0.04,0,0,0,0,1\n0.1,0,0,0,0,1\n")
    assert not jitter.is_uniform()


finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(finite, finite, finite, finite, st.sampled_from([-1, 1])), min_size=1, max_size=30))
def test_roundtrip_at_nine_digits(rows):
    t = np.arange(len(rows)) / 25.0
    vals = np.array([r[:4] for r in rows])
    ts = TimeSeries(25.0, round_significant(t), round_significant(vals), [r[4] for r in rows])
    back = parse_csv(emit_csv(ts), rate=25.0)
    assert back == ts


def test_write_read_file(tmp_path):
    ts = synthesize(SynthConfig(duration=5))
    p = tmp_path / "s.csv"
    write_csv(ts, p)
    assert read_csv(p) == ts


def test_synth_zero_duration():
    assert len(synthesize(SynthConfig(duration=0))) == 0


def test_synth_is_deterministic():
    a = synthesize(SynthConfig(seed=4, duration=60))
    b = synthesize(SynthConfig(seed=4, duration=60))
    assert a == b
    assert emit_csv(a) == emit_csv(b)
    assert synthesize(SynthConfig(seed=5, duration=60)) != a


def test_synth_labels_follow_schedule():
    cfg = SynthConfig(seed=2, duration=120)
    ts = synthesize(cfg)
    assert len(ts) == 3000
    expected = np.empty(len(ts), dtype=int)
    t = np.arange(len(ts)) / cfg.rate
    for r in bout_schedule(cfg):
        expected[(t >= r.start) & (t < r.end)] = r.label
    assert np.array_equal(ts.labels, expected)
    assert set(ts.class_counts().values()) != {0}
    assert ts.class_counts()[1] > 0 and ts.class_counts()[-1] > 0


def test_schedule_alternates_and_covers():
    cfg = SynthConfig(seed=1, duration=300)
    regs = bout_schedule(cfg)
    assert regs[0].start == 0 and regs[-1].end == cfg.duration
    for a, b in zip(regs, regs[1:]):
        assert a.end == b.start
        assert a.label == -b.label


def test_synth_regimes_differ():
    ts = synthesize(SynthConfig(duration=300))
    pos, neg = ts.labels == 1, ts.labels == -1
    surge = ts.channel("surge")
    assert surge[pos].std() > 2 * surge[neg].std()
    assert ts.channel("depth")[pos].mean() > ts.channel("depth")[neg].mean()


def test_synth_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(duration=-1)
    with pytest.raises(ValueError):
        SynthConfig(bout_min_s=10, bout_mean_s=5)
