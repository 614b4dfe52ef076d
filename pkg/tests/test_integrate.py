import math

import numpy as np
import pytest
from scipy.linalg import expm

from nlpml.discretize import Grid1D, SemiDiscreteSystem
from nlpml.integrate import BlowUpError, init_state, run, step
from nlpml.kernels import gaussian_kernel
from nlpml.stretch import AbsorberProfile, PmlParams
from nlpml.talbot import TalbotContour

from conftest import make_system


def scalar_system(a=2.0, xi=-3.0, weight=-3.0, g=0.5, q0=0.7, v0=0.2, forcing=None):
    """One unknown, one contour node: q'' + (weight/xi) a p = g, p' = xi p + q'."""
    contour = TalbotContour(0.0, 1.0, 1.0, 1, np.zeros(1), np.array([xi + 0j]), np.array([weight + 0j]))
    grid = Grid1D(h=1.0, N=1, x_start=-1.0, bandwidth=1)
    return SemiDiscreteSystem(
        grid=grid, kernel=gaussian_kernel(0.5), profile=AbsorberProfile(10.0, 1.0), pml=PmlParams(0.0),
        contour=contour, A=np.array([[0.0, a, 0.0]]), rows=np.zeros(0, dtype=np.int64),
        pml_bands=np.zeros((1, 0, 3), dtype=complex), absorber_diag=np.zeros(1), correction=np.array([g]),
        psi0=np.array([q0]), psi1=np.array([v0]), forcing=forcing,
    )


def test_scalar_system_matches_matrix_exponential():
    a, xi, weight, g, q0, v0 = 2.0, -3.0, -3.0, 0.5, 0.7, 0.2
    c = weight / xi
    # state (q, v, p, 1)
    M = np.array([[0, 1, 0, 0], [0, 0, -c * a, g], [0, 1, xi, 0], [0, 0, 0, 0]], dtype=float)
    T = 1.0
    exact = (expm(M * T) @ np.array([q0, v0, 0.0, 1.0]))[0]
    errs = []
    for tau in (1e-2, 5e-3, 2.5e-3):
        tr = run(scalar_system(a, xi, weight, g, q0, v0), T, tau)
        errs.append(abs(tr.at(T)[0] - exact))
    assert errs[-1] < 1e-5
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 2.0) < 0.15), rates


def test_xi_zero_gives_explicit_p_update():
    s = scalar_system(xi=0.0, weight=0.0, a=0.0)
    # weight 0 keeps coef finite: 0/0 is avoided by a custom coef
    s.contour = TalbotContour(0.0, 1.0, 1.0, 1, np.zeros(1), np.array([0j]), np.array([0j]))
    with np.errstate(invalid="ignore", divide="ignore"):
        s.A = np.zeros((1, 3))
        st = init_state(s, 0.1)
        w = st.w.copy()
        # coef is nan for xi = 0, so drive the kernel directly
        from nlpml import _hot
        r1 = np.array([1.0 + 0j])
        r2 = np.array([0.1 + 0j])
        _hot.advance_np(1, 0.1, st.q, st.w, st.p, r1, r2, np.zeros(1, complex), s.A.astype(complex),
                        s.rows, s.pml_bands, 1, np.ones(1, complex), np.ones(1, complex), np.zeros(1, complex),
                        False, 1e9, st.stats)
    assert st.p_core[0, 0] == pytest.approx(0.1 * w[0])


def test_free_drift():
    s = scalar_system(a=0.0, g=0.0, q0=1.0, v0=0.5)
    tr = run(s, 1.0, 0.01)
    assert tr.at(1.0)[0] == pytest.approx(1.5, rel=1e-12)
    assert tr.final.w[0] == pytest.approx(0.5)


def test_initial_state_formula(ex1_small):
    s = ex1_small
    tau = 1 / 3000
    st = init_state(s, tau)
    assert np.all(st.p == 0)
    assert np.array_equal(st.q, s.psi0.astype(complex))
    expected = s.psi1 + 0.5 * tau * (s.correction - s.pml.z * s.absorber_diag * s.psi1)
    assert np.allclose(st.w, expected, rtol=1e-15, atol=1e-15)
    literal = init_state(s, tau, include_correction=False)
    assert np.allclose(literal.w, s.psi1 - 0.5 * tau * s.pml.z * s.absorber_diag * s.psi1)


def test_zero_data_zero_output():
    s = make_system("ex1", h=2.0**-4, m=20, scale=0.0)
    tr = run(s, 0.5, 1 / 1000, record_times=[0.25, 0.5])
    assert tr.ok
    assert np.all(tr.snapshots == 0)
    assert np.all(tr.final.p == 0) and np.all(tr.final.w == 0)


def test_t_zero_records_only_initial(ex1_small):
    tr = run(ex1_small, 0.0, 1 / 1000)
    assert tr.ok and len(tr.times) == 1 and tr.times[0] == 0.0
    assert np.allclose(tr.snapshots[0], ex1_small.psi0)


def test_linearity():
    tau, T = 1 / 1000, 0.5
    base = run(make_system("ex1", h=2.0**-4, m=20), T, tau).at(T)
    scaled = run(make_system("ex1", h=2.0**-4, m=20, scale=-2.5), T, tau).at(T)
    assert np.max(np.abs(scaled + 2.5 * base)) <= 1e-12 * np.max(np.abs(2.5 * base))


def test_realness_full_sum(ex1_small):
    tr = run(ex1_small, 1.0, 1 / 1000)
    assert tr.ok
    assert tr.imag_ratio <= 1e-9


def test_half_sum_matches_full_sum(ex1_small):
    full = run(ex1_small, 1.0, 1 / 1000).at(1.0)
    half = run(ex1_small, 1.0, 1 / 1000, half_sum=True).at(1.0)
    assert np.max(np.abs(full.real - half.real)) < 1e-9


def test_half_sum_rejects_odd_m():
    s = make_system("ex1", h=2.0**-4, m=21)
    with pytest.raises(ValueError):
        run(s, 0.1, 1 / 1000, half_sum=True)


def test_backends_agree(ex1_small):
    a = run(ex1_small, 0.5, 1 / 1000).at(0.5)
    b = run(ex1_small, 0.5, 1 / 1000, backend="numpy").at(0.5)
    assert np.max(np.abs(a - b)) < 1e-12


def test_forcing_path_matches_batched_path():
    s = make_system("ex2", h=2.0**-4, m=20)
    ref = run(s, 0.3, 1 / 1000).at(0.3)
    s.forcing = lambda x, t: np.zeros_like(x)
    assert np.allclose(run(s, 0.3, 1 / 1000).at(0.3), ref, rtol=0, atol=1e-14)


def test_blow_up_reported():
    s = make_system("ex2", h=2.0**-4, m=20)
    tr = run(s, 5.0, 0.2)
    assert not tr.ok and tr.failed_step is not None
    st = init_state(s, 0.2)
    with pytest.raises(BlowUpError):
        for _ in range(200):
            step(s, st)


def test_record_times_nearest_step(ex1_small):
    tr = run(ex1_small, 0.1, 0.03, record_times=[0.05, 0.1])
    assert np.allclose(tr.times, [0.06, 0.09])
    assert list(tr.steps) == [2, 3]
    assert tr.final.k == 4


def test_invalid_tau(ex1_small):
    with pytest.raises(ValueError):
        init_state(ex1_small, 0.0)
    with pytest.raises(ValueError):
        run(ex1_small, -1.0, 0.1)
