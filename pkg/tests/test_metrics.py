import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparsecast.errors import LengthMismatch
from sparsecast.metrics import ErrorReport, compute_errors, format_report


def test_perfect_forecast():
    r = compute_errors([1.0, 2.0, 5.0], [1.0, 2.0, 5.0])
    assert (r.mae, r.rmse, r.nrmse, r.n_points) == (0.0, 0.0, 0.0, 3)


def test_hand_arithmetic():
    r = compute_errors([0, 10], [1, 9])
    assert r.mae == pytest.approx(1.0)
    assert r.rmse == pytest.approx(1.0)
    assert r.nrmse == pytest.approx(10.0)


def test_mae_below_rmse_example():
    r = compute_errors([0, 0, 0, 4], [0, 0, 0, 0])
    assert r.mae == pytest.approx(1.0)
    assert r.rmse == pytest.approx(2.0)


def test_degenerate_range_drops_nrmse_only():
    r = compute_errors([5, 5, 5], [4, 5, 6])
    assert r.nrmse is None
    assert r.mae == pytest.approx(2 / 3)


def test_length_checks():
    with pytest.raises(LengthMismatch):
        compute_errors([1, 2], [1])
    with pytest.raises(LengthMismatch):
        compute_errors([], [])


vectors = st.integers(2, 40).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n),
        st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n),
    )
)


@given(vectors)
def test_mae_never_exceeds_rmse(pair):
    r = compute_errors(*pair)
    assert r.mae <= r.rmse * (1 + 1e-12) + 1e-300


@given(vectors, st.sampled_from([0.1, 3.0, 1000.0]))
def test_scale_equivariance(pair, c):
    a, p = np.array(pair[0]), np.array(pair[1])
    if np.ptp(a) < 1e-6:
        return
    r, s = compute_errors(a, p), compute_errors(c * a, c * p)
    assert s.mae == pytest.approx(c * r.mae, rel=1e-10, abs=1e-300)
    assert s.rmse == pytest.approx(c * r.rmse, rel=1e-10, abs=1e-300)
    assert s.nrmse == pytest.approx(r.nrmse, rel=1e-10, abs=1e-300)


@given(vectors, st.randoms())
def test_permutation_invariance(pair, random):
    idx = list(range(len(pair[0])))
    random.shuffle(idx)
    a, p = np.array(pair[0]), np.array(pair[1])
    r, s = compute_errors(a, p), compute_errors(a[idx], p[idx])
    assert s.mae == pytest.approx(r.mae, rel=1e-12, abs=1e-12)
    assert s.rmse == pytest.approx(r.rmse, rel=1e-12, abs=1e-12)


def test_report_table_column_order():
    reports = {"ar": ErrorReport(2.31, 2.99, 12.79, 108), "blocksparse": ErrorReport(1.74, 2.12, None, 108)}
    md = format_report(reports).splitlines()
    assert md[0] == "| method | MAE [km/h] | RMSE [km/h] | NRMSE [%] | n |"
    assert md[2] == "| ar | 2.3100 | 2.9900 | 12.7900 | 108 |"
    assert md[3].endswith("| n/a | 108 |")
    csv_text = format_report(reports, "csv").splitlines()
    assert csv_text[0] == "method,mae_kmh,rmse_kmh,nrmse_pct,n_points"
    assert csv_text[1] == "ar,2.3100,2.9900,12.7900,108"
    with pytest.raises(ValueError):
        format_report(reports, "html")
