"""Hot loops: AC-matrix assembly and Verlet stepping.

Every routine exists twice: a numba kernel (``*_nb``) and a numpy twin
(``*_np``). The public dispatchers pick numba when it is available and the
inputs are built-in kernels/profiles; ``backend="numpy"`` forces the twin.

Band layout: ``band[n, c]`` multiplies unknown ``n + c - b``; columns that
would index outside ``0..N-1`` are zero (their weights live in the diagonal).
"""
from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _accel
from ._accel import njit
from .kernels import KernelKind, KernelSpec, _continued, kernel_value_scalar, support_radius, support_scalar
from .stretch import AbsorberProfile, CustomProfile, antiderivative_scalar, sigma_scalar


def use_numba(backend: str | None, kernel: KernelSpec | None = None, profile=None) -> bool:
    if backend == "numpy" or not _accel.HAVE_NUMBA:
        return False
    if kernel is not None and kernel.kind is KernelKind.CUSTOM:
        return False
    if profile is not None and isinstance(profile, CustomProfile):
        return False
    return True


# -- real kernel (reference path) ---------------------------------------------


@njit(cache=True)
def kernel_real_scalar(code, delta, p, a, b):
    if code == 0:
        c0 = p[0]
        return math.exp(-abs(a) / (c0 * delta)) / (2.0 * c0**3 * delta**3)
    if code == 1:
        return 4.0 * math.sqrt(1000.0 / math.pi) / delta**3 * math.exp(-10.0 * a * a / (delta * delta))
    w = 1.0 + p[0] * math.exp(-p[1] * b * b)
    zeta = delta * (p[2] + math.tanh(-p[3] * b))
    u = a / zeta
    return w / zeta**3 * 4.0 * math.sqrt(1000.0 / math.pi) * math.exp(-p[4] * u * u)


# -- assembly -----------------------------------------------------------------


@njit(cache=True)
def _clip(lo, hi, a, c):
    return max(lo, a), min(hi, c)


@njit(cache=True)
def _comp_add(s, c, x):
    """Neumaier step: running sum ``s`` with compensation ``c``."""
    t = s + x
    if abs(s) >= abs(x):
        c += (s - t) + x
    else:
        c += (x - t) + s
    return t, c


@njit(cache=True)
def assemble_real_nb(x_first, h, N, b, code, delta, p, gl_x, gl_w, out):
    """Real AC band for the untransformed kernel (z = 0, s and weight scaled out)."""
    nq = gl_x.shape[0]
    for n in range(N):
        xn = x_first + n * h
        ds, dc = 0.0, 0.0
        for off in range(-b, b + 1):
            if off == 0:
                continue
            xk = xn + off * h
            beta = 0.5 * (xn + xk)
            rad = support_scalar(code, delta, p, beta)
            total = 0.0
            for half in range(2):
                lo = xk - h if half == 0 else xk
                hi = xk if half == 0 else xk + h
                lo, hi = _clip(lo, hi, xn - rad, xn + rad)
                if hi <= lo:
                    continue
                ln = hi - lo
                for q in range(nq):
                    y = lo + ln * gl_x[q]
                    phi = (y - (xk - h)) / h if half == 0 else ((xk + h) - y) / h
                    total += gl_w[q] * ln * phi * (y - xn) * kernel_real_scalar(code, delta, p, y - xn, beta)
            val = -total / (off * h)
            k = n + off
            if 0 <= k < N:
                out[n, off + b] = val
            ds, dc = _comp_add(ds, dc, -val)
        out[n, b] = ds + dc


@njit(cache=True)
def assemble_pml_nb(x_first, h, N, b, rows, code, delta, p, l, dp, z, s, wts, gl_x, gl_w, out):
    """Complex AC bands ``out[j, r, :]`` for rows ``rows`` and contour nodes ``s``."""
    nq = gl_x.shape[0]
    m = s.shape[0]
    for j in range(m):
        sj = s[j]
        zs = z / sj
        for r in range(rows.shape[0]):
            n = rows[r]
            xn = x_first + n * h
            rs, rc, is_, ic = 0.0, 0.0, 0.0, 0.0
            for off in range(-b, b + 1):
                if off == 0:
                    continue
                xk = xn + off * h
                rad = support_scalar(code, delta, p, 0.5 * (xn + xk))
                total = 0j
                for half in range(2):
                    lo = xk - h if half == 0 else xk
                    hi = xk if half == 0 else xk + h
                    lo, hi = _clip(lo, hi, xn - rad, xn + rad)
                    if hi <= lo:
                        continue
                    ln = hi - lo
                    for q in range(nq):
                        y = lo + ln * gl_x[q]
                        phi = (y - (xk - h)) / h if half == 0 else ((xk + h) - y) / h
                        X = xn + 0.5 * (xk - y)
                        Y = 0.5 * (xk + y)
                        Xt = X + zs * antiderivative_scalar(l, dp, X)
                        Yt = Y + zs * antiderivative_scalar(l, dp, Y)
                        kv = kernel_value_scalar(code, delta, p, Yt - Xt, 0.5 * (Xt + Yt))
                        aX = 1.0 + zs * sigma_scalar(l, dp, X)
                        aY = 1.0 + zs * sigma_scalar(l, dp, Y)
                        total += gl_w[q] * ln * phi * (y - xn) * kv * aX * aY / sj
                val = -wts[j] * total / (off * h)
                k = n + off
                if 0 <= k < N:
                    out[j, r, off + b] = val
                rs, rc = _comp_add(rs, rc, -val.real)
                is_, ic = _comp_add(is_, ic, -val.imag)
            out[j, r, b] = complex(rs + rc, is_ + ic)


def _geometry(x_first, h, N, b, rows, kernel, gl_x, gl_w):
    """Quadrature points for rows x offsets x halves x gauss nodes (numpy path)."""
    rows = np.asarray(rows)
    offs = np.arange(-b, b + 1)
    offs = offs[offs != 0]
    xn = x_first + rows * h
    xk = xn[:, None] + offs[None, :] * h
    rad = support_radius(kernel, 0.5 * (xn[:, None] + xk))
    rad = np.broadcast_to(rad, xk.shape)
    lo = np.stack([xk - h, xk], axis=-1)
    hi = np.stack([xk, xk + h], axis=-1)
    lo = np.maximum(lo, (xn[:, None] - rad)[..., None])
    hi = np.minimum(hi, (xn[:, None] + rad)[..., None])
    ln = np.clip(hi - lo, 0.0, None)
    y = lo[..., None] + ln[..., None] * gl_x
    wq = ln[..., None] * gl_w
    xk4 = xk[..., None, None]
    phi = np.where(np.arange(2)[None, None, :, None] == 0, (y - (xk4 - h)) / h, ((xk4 + h) - y) / h)
    xn4 = xn[:, None, None, None]
    return dict(rows=rows, offs=offs, xn=xn, xk=xk, y=y, wq=wq, phi=phi, disp=y - xn4,
                X=xn4 + 0.5 * (xk4 - y), Y=0.5 * (xk4 + y))


def _scatter(vals, rows, offs, b, N):
    """Band rows from off-diagonal values ``vals[..., r, o]`` (phantoms into diagonal)."""
    band = np.zeros(vals.shape[:-1] + (2 * b + 1,), dtype=vals.dtype)
    k = rows[:, None] + offs[None, :]
    inside = (k >= 0) & (k < N)
    band[..., offs + b] = np.where(inside, vals, 0.0)
    band[..., b] = -_comp_sum(vals)
    return band


def _comp_sum_real(v):
    s = np.zeros(v.shape[:-1])
    c = np.zeros(v.shape[:-1])
    for i in range(v.shape[-1]):
        x = v[..., i]
        t = s + x
        c += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        s = t
    return s + c


def _comp_sum(v):
    """Compensated sum over the last axis; exact to rounding of the result."""
    if np.iscomplexobj(v):
        return _comp_sum_real(v.real) + 1j * _comp_sum_real(v.imag)
    return _comp_sum_real(v)


def assemble_real_np(x_first, h, N, b, kernel, gl_x, gl_w):
    g = _geometry(x_first, h, N, b, np.arange(N), kernel, gl_x, gl_w)
    beta = 0.5 * (g["xn"][:, None] + g["xk"])[..., None, None]
    gam = eval_real(kernel, g["disp"], beta)
    total = np.sum(g["wq"] * g["phi"] * g["disp"] * gam, axis=(-2, -1))
    vals = -total / (g["offs"][None, :] * h)
    return _scatter(vals, g["rows"], g["offs"], b, N)


def eval_real(kernel, a, beta):
    if kernel.kind is KernelKind.CUSTOM:
        return np.asarray(kernel.func(a, np.broadcast_to(beta, np.shape(a))), dtype=float)
    return _continued(kernel, a, beta).real


def assemble_pml_np(x_first, h, N, b, rows, kernel, profile, z, s, wts, gl_x, gl_w):
    g = _geometry(x_first, h, N, b, rows, kernel, gl_x, gl_w)
    X, Y = g["X"], g["Y"]
    SX, SY = profile.antiderivative(X), profile.antiderivative(Y)
    sX, sY = profile.sigma(X), profile.sigma(Y)
    base = g["wq"] * g["phi"] * g["disp"]
    out = np.zeros((len(s), len(rows), 2 * b + 1), dtype=complex)
    for j, (sj, wj) in enumerate(zip(s, wts)):
        zs = z / sj
        Xt = X + zs * SX
        Yt = Y + zs * SY
        kv = _continued(kernel, Yt - Xt, 0.5 * (Xt + Yt))
        total = np.sum(base * kv * (1.0 + zs * sX) * (1.0 + zs * sY), axis=(-2, -1)) / sj
        vals = -wj * total / (g["offs"][None, :] * h)
        out[j] = _scatter(vals, g["rows"], g["offs"], b, N)
    return out


# -- Verlet stepping ----------------------------------------------------------


@njit(cache=True)
def advance_nb(nsteps, tau, q, w, p, r1, r2, c, A, rows, Apml, b, c1, c2, rhs, half, guard, stats):
    """Advance the PML system ``nsteps`` steps in place.

    Returns the number of completed steps; fewer than ``nsteps`` means the
    blow-up guard tripped. ``stats`` accumulates running max |Re q|, |Im q|.
    """
    N = q.shape[0]
    m = p.shape[0]
    mj = m // 2 if half else m
    fac = 2.0 if half else 1.0
    W = 2 * b + 1
    pbar = np.zeros(N + 2 * b, dtype=np.complex128)
    y = np.zeros(N, dtype=np.complex128)
    for step in range(nsteps):
        qmax = 0.0
        for n in range(N):
            q[n] += tau * w[n]
            a = abs(q[n])
            if not a <= guard:
                return step
            if a > qmax:
                qmax = a
            re = abs(q[n].real)
            im = abs(q[n].imag)
            if re > stats[0]:
                stats[0] = re
            if im > stats[1]:
                stats[1] = im
        for n in range(N + 2 * b):
            pbar[n] = 0.0
        for j in range(mj):
            rj1 = r1[j]
            rj2 = r2[j]
            cj = c[j]
            for n in range(N):
                v = rj1 * p[j, b + n] + rj2 * w[n]
                p[j, b + n] = v
                pbar[b + n] += cj * v
        for n in range(N):
            acc = 0j
            for k in range(W):
                acc += A[n, k] * pbar[n + k]
            y[n] = acc
        for r in range(rows.shape[0]):
            n = rows[r]
            acc = 0j
            for j in range(mj):
                for k in range(W):
                    acc += Apml[j, r, k] * p[j, n + k]
            y[n] = acc
        for n in range(N):
            yn = fac * y[n].real + 0j if half else y[n]
            w[n] = (c1[n] * w[n] + tau * (rhs[n] - yn)) / c2[n]
    return nsteps


def advance_np(nsteps, tau, q, w, p, r1, r2, c, A, rows, Apml, b, c1, c2, rhs, half, guard, stats):
    N = q.shape[0]
    m = p.shape[0]
    mj = m // 2 if half else m
    W = 2 * b + 1
    pv = p[:mj]
    for step in range(nsteps):
        q += tau * w
        amax = np.max(np.abs(q))
        if not amax <= guard:
            return step
        stats[0] = max(stats[0], np.max(np.abs(q.real)))
        stats[1] = max(stats[1], np.max(np.abs(q.imag)))
        pv[:, b:b + N] = r1[:mj, None] * pv[:, b:b + N] + r2[:mj, None] * w[None, :]
        pbar = c[:mj] @ pv
        y = np.einsum("nk,nk->n", A, sliding_window_view(pbar, W))
        if len(rows):
            win = sliding_window_view(pv, W, axis=1)[:, rows, :]
            y[rows] = np.einsum("jrk,jrk->r", Apml[:mj], win)
        if half:
            y = 2.0 * y.real + 0j
        w[:] = (c1 * w + tau * (rhs - y)) / c2
    return nsteps


@njit(cache=True)
def leapfrog_nb(nsteps, tau, q, w, A, b, rhs, guard):
    """Real central-difference stepping for q'' + A q = rhs (reference path)."""
    N = q.shape[0]
    W = 2 * b + 1
    qp = np.zeros(N + 2 * b)
    for step in range(nsteps):
        for n in range(N):
            q[n] += tau * w[n]
            if not abs(q[n]) <= guard:
                return step
            qp[b + n] = q[n]
        for n in range(N):
            acc = 0.0
            for k in range(W):
                acc += A[n, k] * qp[n + k]
            w[n] += tau * (rhs[n] - acc)
    return nsteps


def leapfrog_np(nsteps, tau, q, w, A, b, rhs, guard):
    N = q.shape[0]
    W = 2 * b + 1
    qp = np.zeros(N + 2 * b)
    for step in range(nsteps):
        q += tau * w
        if not np.max(np.abs(q)) <= guard:
            return step
        qp[b:b + N] = q
        w += tau * (rhs - np.einsum("nk,nk->n", A, sliding_window_view(qp, W)))
    return nsteps


def band_matvec(A, v, b):
    """Apply a band matrix to a vector (numpy)."""
    N = A.shape[0]
    vp = np.zeros(N + 2 * b, dtype=np.result_type(A, v))
    vp[b:b + N] = v
    return np.einsum("nk,nk->n", A, sliding_window_view(vp, 2 * b + 1))
