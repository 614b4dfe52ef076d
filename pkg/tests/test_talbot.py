import math

import mpmath
import numpy as np
import pytest

from nlpml.kernels import KernelKind
from nlpml.stretch import PmlParams
from nlpml.talbot import build_contour, inverse_laplace, validate_contour

PAIRS = [
    ("1/s", lambda s: 1 / s, lambda t: 1.0),
    ("1/s^2", lambda s: 1 / s**2, lambda t: t),
    ("1/(s+1)", lambda s: 1 / (s + 1), lambda t: math.exp(-t)),
]


def test_theta_grid_m4():
    c = build_contour(0, 10, 1, 4)
    assert np.allclose(c.thetas, [-3 * np.pi / 4, -np.pi / 4, np.pi / 4, 3 * np.pi / 4])


def test_node_at_quarter_pi():
    c = build_contour(0, 10, 1, 4)
    assert c.nodes[2] == pytest.approx(10 * (np.pi / 4) * (1 + 1j))


def test_even_m_nodes_are_exact_conjugate_pairs():
    c = build_contour(-5, 10, 1, 200)
    assert np.array_equal(c.nodes[::-1], np.conj(c.nodes))
    assert np.array_equal(c.weights[::-1], np.conj(c.weights))
    assert c.conjugate_pairs()


def test_odd_m_has_finite_center_node():
    c = build_contour(0, 10, 1, 5)
    assert np.all(np.isfinite(c.nodes)) and np.all(np.isfinite(c.weights))
    assert c.nodes[2] == pytest.approx(10.0)
    assert not c.conjugate_pairs()
    assert inverse_laplace(build_contour(0, 10, 1, 65), lambda s: 1 / s, 1.0) == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("bad", [dict(m=1), dict(m=2.5), dict(mu=0.0), dict(nu=-1.0)])
def test_invalid_parameters(bad):
    args = dict(omega=0.0, mu=10.0, nu=1.0, m=8) | bad
    with pytest.raises(ValueError):
        build_contour(**args)


def test_inverse_laplace_needs_positive_t():
    with pytest.raises(ValueError):
        inverse_laplace(build_contour(0, 10, 1, 8), lambda s: 1 / s, 0.0)


@pytest.mark.parametrize("name,F,f", PAIRS)
@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0])
def test_battery_attainable_region(name, F, f, t):
    errs = []
    for m in (64, 128):
        val = inverse_laplace(build_contour(0, 10, 1, m), F, t)
        errs.append(abs(val - f(t)) / abs(f(t)))
    assert errs[0] < 1e-6
    assert errs[1] < 1e-6


@pytest.mark.parametrize("name,F,f", PAIRS)
@pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
def test_battery_error_decreases_in_m(name, F, f, t):
    errs = [abs(inverse_laplace(build_contour(0, 10, 1, m), F, t) - f(t)) for m in (16, 32, 64)]
    assert errs[0] > errs[1] > errs[2] or errs[2] < 1e-12


def _exact_sum(m, t, dps=60):
    """The same trapezoid sum for 1/s in extended precision."""
    mpmath.mp.dps = dps
    total = mpmath.mpf(0)
    for j in range(1, m + 1):
        th = -mpmath.pi + mpmath.pi / m * (2 * j - 1)
        s = 10 * (th * mpmath.cot(th) + 1j * th)
        ds = 10 * (mpmath.cot(th) - th / mpmath.sin(th) ** 2 + 1j)
        total += ds / (m * 1j) * mpmath.exp(s * t) / s
    return complex(total)


def test_large_t_breakdown_is_not_roundoff():
    # m=64 at t=5 is inaccurate even in exact arithmetic: a property of the
    # fixed contour, not of the double-precision implementation.
    exact = _exact_sum(64, 5.0)
    assert abs(exact - 1.0) > 1.0
    assert abs(_exact_sum(64, 1.0) - 1.0) < 1e-6


def test_weight_symmetry_realness():
    c = build_contour(0, 10, 1, 64)
    val = inverse_laplace(c, lambda s: 1 / (s + 1), 1.0)
    assert abs(val.imag) <= 1e-12 * abs(val.real)


def test_validate_ex1_enclosure():
    d = validate_contour(build_contour(0, 10, 1, 400), PmlParams(20), KernelKind.EXPONENTIAL)
    assert d.enclosure_ok and d.passed


def test_validate_ex2_stability_not_sufficient():
    d = validate_contour(build_contour(0, 10, 1, 800), PmlParams(10), KernelKind.GAUSSIAN)
    assert d.stability_ok
    assert not d.sufficient_ok
    assert d.passed


def test_validate_z_zero_all_true():
    d = validate_contour(build_contour(0, 10, 1, 8), PmlParams(0), KernelKind.GAUSSIAN)
    assert d.enclosure_ok and d.stability_ok and d.sufficient_ok


def test_validate_detects_unenclosed_disk():
    # a contour far to the right cannot enclose the branch disk [-40, 0]
    d = validate_contour(build_contour(0, 2, 1, 64), PmlParams(40), KernelKind.EXPONENTIAL)
    assert not d.enclosure_ok and not d.passed
