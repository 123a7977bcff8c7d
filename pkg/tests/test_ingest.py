import io
from datetime import datetime, timedelta

import numpy as np
import pytest

from oracles import enumerate_supports
from sparsecast.core import fit_normalizer, normalize
from sparsecast.errors import GridViolation, InvalidSpec, ParseError, TargetNotFound, TooSparse
from sparsecast.ingest import (
    MPH_TO_KMH,
    ColumnMap,
    SensorSpec,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    read_csv,
    write_csv,
)
from sparsecast.regression import build_uniform_problem
from sparsecast.solvers import SolverConfig, solve_block_sparse

T0 = datetime(2016, 3, 1)


def day_csv(sensors=("a", "b", "c"), n=288, drop=(), value=lambda s, k: 60.0 + k % 7 + len(s)):
    lines = ["timestamp,sensor_id,variable,value"]
    for s in sensors:
        for k in range(n):
            ts = (T0 + k * timedelta(minutes=5)).isoformat()
            v = "" if (s, k) in drop else repr(value(s, k))
            lines.append(f"{ts},{s},speed,{v}")
    return "\n".join(lines) + "\n"


def test_one_day_three_sensors():
    ds = read_csv(io.StringIO(day_csv()))
    assert ds.n_series == 3 and ds.length == 288
    assert ds.start_time == T0 and ds.step == timedelta(minutes=5)
    assert ds.labels == ["a", "b", "c"]


def test_single_gap_is_interpolated():
    k = 121  # 10:05
    text = day_csv(drop={("a", k)}, value=lambda s, j: float(j))
    ds = read_csv(io.StringIO(text))
    assert ds.values[0, k] == pytest.approx((ds.values[0, k - 1] + ds.values[0, k + 1]) / 2)
    # a row that is entirely absent is a gap too
    lines = [l for l in day_csv(value=lambda s, j: float(j) ** 2).splitlines() if not l.startswith(f"{(T0 + k * timedelta(minutes=5)).isoformat()},b")]
    ds = read_csv(io.StringIO("\n".join(lines)))
    assert ds.values[1, k] == pytest.approx((120.0**2 + 122.0**2) / 2)


def test_too_sparse():
    holes = {("b", k) for k in range(0, 288, 5)}
    with pytest.raises(TooSparse) as err:
        read_csv(io.StringIO(day_csv(drop=holes)))
    assert err.value.sensor == "b"
    assert err.value.missing_fraction == pytest.approx(58 / 288)


def test_five_percent_is_tolerated():
    holes = {("a", k) for k in range(10, 24)}  # 14/288 < 5%
    ds = read_csv(io.StringIO(day_csv(drop=holes)))
    assert np.all(np.isfinite(ds.values))


def test_grid_violation():
    text = day_csv(n=5) + f"{(T0 + timedelta(minutes=7)).isoformat()},a,speed,50\n"
    with pytest.raises(GridViolation):
        read_csv(io.StringIO(text))
    dup = day_csv(n=5) + f"{T0.isoformat()},a,speed,50\n"
    with pytest.raises(GridViolation):
        read_csv(io.StringIO(dup))


def test_parse_errors_carry_line_numbers():
    text = day_csv(n=3).replace("61.0", "sixty", 1)
    with pytest.raises(ParseError) as err:
        read_csv(io.StringIO(text))
    assert err.value.line == 2
    bad_ts = "timestamp,sensor_id,value\n2016-03-01T00:00:00,a,1\nyesterday,a,2\n"
    with pytest.raises(ParseError) as err:
        read_csv(io.StringIO(bad_ts))
    assert err.value.line == 3
    with pytest.raises(ParseError):
        read_csv(io.StringIO(""))
    with pytest.raises(ParseError):
        read_csv(io.StringIO("time,id,speed\n"))


def test_epoch_timestamps_and_custom_columns():
    epoch = 1456790400  # 2016-03-01T00:00:00Z
    text = "t,station,avg_speed\n" + "\n".join(f"{epoch + 300 * k},401234,{50 + k}" for k in range(4))
    ds = read_csv(io.StringIO(text), ColumnMap("t", "station", None, "avg_speed"))
    assert ds.start_time == T0
    assert ds.values[0].tolist() == [50, 51, 52, 53]


def test_pems_style_timestamps():
    text = "timestamp,sensor_id,value\n03/01/2016 00:00:00,s,1\n03/01/2016 00:05:00,s,2\n"
    ds = read_csv(io.StringIO(text))
    assert ds.start_time == T0 and ds.length == 2


def test_mph_conversion():
    ds = read_csv(io.StringIO(day_csv(n=3)), mph=True)
    assert ds.values[0, 0] == pytest.approx(61.0 * MPH_TO_KMH)


def test_target_selection():
    ds = read_csv(io.StringIO(day_csv()), target="b")
    assert ds.target_index == 1
    with pytest.raises(TargetNotFound, match="target sensor not found"):
        read_csv(io.StringIO(day_csv()), target="zzz")


def test_variables_become_separate_series():
    text = "timestamp,sensor_id,variable,value\n" + "\n".join(
        f"{(T0 + k * timedelta(minutes=5)).isoformat()},s1,{var},{k}" for var in ("speed", "flow") for k in range(3)
    )
    ds = read_csv(io.StringIO(text))
    assert ds.labels == ["s1", "s1:flow"]


def test_round_trip_is_idempotent(tmp_path):
    src = tmp_path / "in.csv"
    src.write_text(day_csv())
    ds = load_csv(src)
    out = tmp_path / "out.csv"
    write_csv(ds, out)
    again = load_csv(out)
    assert np.array_equal(again.values, ds.values)
    assert write_csv(again) == out.read_text()


def test_synthetic_delayed_copy_is_exact():
    spec = SyntheticSpec((SensorSpec("s0", ar_coef=0.8), SensorSpec("s1", source="s0", delay=2)), length=200)
    ds, graph = generate_synthetic(spec, seed=1)
    x, y = ds.values
    assert np.corrcoef(x[:-2], y[2:])[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(x[:-2], y[2:])
    assert [(d.sensor, d.source, d.delay) for d in graph] == [("s1", "s0", 2)]


def test_synthetic_is_deterministic():
    spec = SyntheticSpec((SensorSpec("s0", ar_coef=0.5), SensorSpec("s1", source="s0", delay=1, noise=0.1)))
    a, _ = generate_synthetic(spec, seed=9)
    b, _ = generate_synthetic(spec, seed=9)
    c, _ = generate_synthetic(spec, seed=10)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


@pytest.mark.parametrize(
    "sensors",
    [
        (SensorSpec("a", source="b"), SensorSpec("b", source="a")),
        (SensorSpec("a", source="a", delay=1),),
        (SensorSpec("a", source="missing"),),
        (SensorSpec("a"), SensorSpec("a")),
        (SensorSpec("a", ar_coef=1.0),),
    ],
)
def test_invalid_specs(sensors):
    with pytest.raises(InvalidSpec):
        generate_synthetic(SyntheticSpec(sensors), seed=0)


def test_spec_from_dict():
    spec = SyntheticSpec.from_dict(
        {"length": 10, "target": "b", "step_seconds": 60, "sensors": [{"sensor_id": "a"}, {"sensor_id": "b", "source": "a", "delay": 1}]}
    )
    ds, _ = generate_synthetic(spec)
    assert ds.target.label == "b" and ds.step == timedelta(minutes=1) and ds.length == 10
    with pytest.raises(InvalidSpec):
        SyntheticSpec.from_dict({"sensors": [{"name": "a"}]})


def test_noisy_delay_three_recovers_source_block():
    spec = SyntheticSpec(
        (
            SensorSpec("s0", ar_coef=0.5),
            SensorSpec("s1", source="s0", delay=3, noise=0.1),
            SensorSpec("s2", ar_coef=0.5),
        ),
        length=200,
        target="s1",
    )
    ds, _ = generate_synthetic(spec, seed=4)
    z = normalize(fit_normalizer(ds), ds)
    prob = build_uniform_problem(z, order=4, training_rows=150)
    coef = solve_block_sparse(prob, SolverConfig(max_active_blocks=1))
    support, _, _ = enumerate_supports(prob.a, prob.b, prob.layout.offsets, 1)
    assert coef.active_blocks == support == {0}
    assert int(np.argmax(np.abs(coef.block(0)))) == 2  # lag 3
