import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nlpml.discretize import build_grid
from nlpml.metrics import ErrorReport, error_edelta, error_eh, orders, rms
from nlpml.stretch import AbsorberProfile

GRID = build_grid(AbsorberProfile(1.5, 1.0), 0.5, 2.0**-4)
vecs = arrays(np.float64, 17, elements=st.floats(-1e3, 1e3))


def test_identical_inputs_zero():
    u = np.sin(GRID.x)
    assert error_eh(u, u, GRID) == 0.0
    assert error_edelta(u, u, GRID) == 0.0


def test_constant_offset():
    u = np.cos(GRID.x)
    assert error_eh(u + 0.3, u, GRID) == pytest.approx(0.3)
    assert error_edelta(u - 0.3, u, GRID) == pytest.approx(0.3)


def test_eh_uses_interior_only():
    u = np.zeros(GRID.N)
    v = np.where(GRID.interior, 0.0, 5.0)
    assert error_eh(u, v, GRID) == 0.0
    assert error_eh(u, v[GRID.interior], GRID) == 0.0
    assert error_edelta(u, v, GRID) > 0


def test_rms_rejects_bad_input():
    with pytest.raises(ValueError):
        rms(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        rms(np.zeros(0), np.zeros(0))
    with pytest.raises(ValueError):
        error_edelta(np.zeros(3), np.zeros(3), GRID)


@given(u=vecs, v=vecs, a=st.floats(-100, 100))
@settings(max_examples=100, deadline=None)
def test_scale_equivariance(u, v, a):
    assert rms(a * u, a * v) == pytest.approx(abs(a) * rms(u, v), rel=1e-9, abs=1e-9)


@given(u=vecs, v=vecs, w=vecs)
@settings(max_examples=100, deadline=None)
def test_triangle_inequality(u, v, w):
    assert rms(u, w) <= rms(u, v) + rms(v, w) + 1e-9


@given(p=st.floats(0.5, 4.0), c=st.floats(1e-6, 1e3))
@settings(max_examples=50, deadline=None)
def test_orders_recover_power_law(p, c):
    hs = [2.0**-k for k in range(3, 7)]
    out = orders([(h, c * h**p) for h in hs])
    assert out[0] == (hs[0], None)
    assert all(o == pytest.approx(p, abs=1e-9) for _, o in out[1:])


def test_orders_examples():
    sq = orders([(0.5, 0.25), (0.25, 0.0625)])
    assert sq[1][1] == pytest.approx(2.0)
    lin = orders([(0.5, 0.5), (0.25, 0.25)])
    assert lin[1][1] == pytest.approx(1.0)
    t1 = orders([(2.0**-4, 8.39e-03), (2.0**-5, 1.36e-03), (2.0**-6, 3.16e-04), (2.0**-7, 7.79e-05)])
    # the table's printed errors are rounded, so its orders agree to about 0.01
    assert np.allclose([o for _, o in t1[1:]], [2.62, 2.11, 2.02], atol=0.015)


def test_orders_reject_non_halving():
    with pytest.raises(ValueError):
        orders([(0.5, 1.0), (0.2, 0.1)])
    with pytest.raises(ValueError):
        orders([(0.5, 1.0), (0.5, 1.0)])
    with pytest.raises(ValueError):
        orders([(0.5, -1.0)])


def test_report_csv():
    r = ErrorReport("eh", 2.0)
    for d in (0.5, 0.2):
        for h in (0.25, 0.125, 0.0625):
            r.add(h, d, 10 * d * h**2)
    r.fill_orders()
    lines = r.to_csv().splitlines()
    assert lines[0] == "h,delta,error,order"
    assert len(lines) == 7
    assert lines[1].endswith(",")
    assert float(lines[2].split(",")[3]) == pytest.approx(2.0)
    assert [row.h for row in r.column(0.2)] == [0.25, 0.125, 0.0625]


def test_report_single_h_has_empty_order():
    r = ErrorReport("eh", 2.0)
    r.add(0.1, 0.5, 1e-3)
    assert r.fill_orders().to_csv().splitlines()[1].split(",")[3] == ""


def test_report_rejects_negative_error():
    with pytest.raises(ValueError):
        ErrorReport("eh", 1.0).add(0.1, 0.5, -1.0)
