"""Fused forward-Euler stage kernels.

One call evaluates speeds, intermediate states, blending coefficients,
blended fluxes/residuals and the simultaneous average/point update.  The
pointwise formulas are the jitted helpers from ``models`` and ``limiter``.

Return value: (status, location, courant) where ``courant`` is
dt/dx * max(alpha_j + alpha_{j+1}, 2 (beta_left + beta_right)).
"""
import math

import numba as nb
import numpy as np

from .limiter import (STAR_TOL, eta_global_value, eta_local_value, euler_coefficient,
                      smooth_cell)
from .models import (euler_flux_tuple, euler_split_apply, scalar_derivative_value,
                     scalar_flux_value, scalar_interval_speed)

MODE_BP, MODE_HIGH, MODE_FIRST = 0, 1, 2

OK, STAR_OUT_OF_BOUNDS, INVALID_STATE = 0, 1, 2


@nb.njit(cache=True, inline="always")
def _wrap(i, n, periodic):
    if periodic:
        return i % n
    if i < 0:
        return 0
    if i > n - 1:
        return n - 1
    return i


@nb.njit(cache=True)
def _mark_cells(avg_rho, pts_rho, ustar_rho, periodic, lmin, lmax, smooth):
    n = avg_rho.shape[0]
    nn = pts_rho.shape[0]
    for c in range(n):
        a = avg_rho[c]
        lmin[c] = min(a, min(ustar_rho[c], ustar_rho[c + 1]))
        lmax[c] = max(a, max(ustar_rho[c], ustar_rho[c + 1]))
        smooth[c] = smooth_cell(
            pts_rho[_wrap(c - 1, nn, periodic)], avg_rho[_wrap(c - 1, n, periodic)],
            pts_rho[_wrap(c, nn, periodic)], a, pts_rho[_wrap(c + 1, nn, periodic)],
            avg_rho[_wrap(c + 1, n, periodic)], pts_rho[_wrap(c + 2, nn, periodic)])


@nb.njit(cache=True)
def _cell_bounds(n, periodic, lmin, lmax, smooth, out):
    """Per-interface (min_l, max_l, min_r, max_r); smooth and ghost cells are unconstrained."""
    for j in range(n + 1):
        cl = j - 1
        cr = j
        if periodic:
            cl = cl % n
            cr = cr % n
        out[j, 0] = -math.inf
        out[j, 1] = math.inf
        out[j, 2] = -math.inf
        out[j, 3] = math.inf
        if cl >= 0 and not smooth[cl]:
            out[j, 0] = lmin[cl]
            out[j, 1] = lmax[cl]
        if cr < n and not smooth[cr]:
            out[j, 2] = lmin[cr]
            out[j, 3] = lmax[cr]


@nb.njit(cache=True)
def scalar_stage(code, avg, pts, periodic, lam, mode, lower, upper, use_lmp,
                 new_avg, new_pts, eta_out, theta_out):
    n = avg.shape[0]
    nn = pts.shape[0]
    tol = STAR_TOL * max(upper - lower, 1.0)
    flux = np.empty(n + 1)
    alpha = np.empty(n + 1)
    delta = np.empty(n + 1)
    ustar = np.empty(n + 1)
    for j in range(n + 1):
        a = avg[_wrap(j - 1, n, periodic)]
        b = avg[_wrap(j, n, periodic)]
        s = scalar_interval_speed(code, a, b)
        fa = scalar_flux_value(code, a)
        fb = scalar_flux_value(code, b)
        flo = 0.5 * (fa + fb) - 0.5 * s * (b - a)
        fhi = scalar_flux_value(code, pts[_wrap(j, nn, periodic)])
        alpha[j] = s
        flux[j] = flo
        delta[j] = fhi - flo
        if s > 0.0:
            ustar[j] = 0.5 * (a + b) - 0.5 * (fb - fa) / s
        else:
            ustar[j] = 0.5 * (a + b)
        if mode == MODE_HIGH:
            flux[j] = fhi
    courant = 0.0
    for c in range(n):
        courant = max(courant, lam * (alpha[c] + alpha[c + 1]))

    if mode == MODE_BP:
        lmin = np.empty(n)
        lmax = np.empty(n)
        smooth = np.ones(n, dtype=np.bool_)
        bnd = np.empty((n + 1, 4))
        if use_lmp:
            _mark_cells(avg, pts, ustar, periodic, lmin, lmax, smooth)
            _cell_bounds(n, periodic, lmin, lmax, smooth, bnd)
        for j in range(n + 1):
            us = ustar[j]
            if us < lower - tol or us > upper + tol:
                return STAR_OUT_OF_BOUNDS, j, courant
            eta = eta_global_value(us, delta[j], alpha[j], lower, upper)
            if use_lmp:
                eta = min(eta, eta_local_value(us, delta[j], alpha[j],
                                               bnd[j, 0], bnd[j, 1], bnd[j, 2], bnd[j, 3]))
            eta_out[j] = eta
            flux[j] = flux[j] + eta * delta[j]
    elif mode == MODE_HIGH:
        eta_out[:] = 1.0
    else:
        eta_out[:] = 0.0

    for c in range(n):
        new_avg[c] = avg[c] - lam * (flux[c + 1] - flux[c])

    for j in range(nn):
        u = pts[j]
        bl = avg[_wrap(j - 1, n, periodic)]
        br = avg[_wrap(j, n, periodic)]
        sl = scalar_interval_speed(code, u, bl)
        sr = scalar_interval_speed(code, u, br)
        courant = max(courant, 2.0 * lam * (sl + sr))
        fu = scalar_flux_value(code, u)
        fbl = scalar_flux_value(code, bl)
        fbr = scalar_flux_value(code, br)
        right_lo = 0.5 * (fu - fbl) - 0.5 * sl * (bl - u)
        left_lo = 0.5 * (fbr - fu) - 0.5 * sr * (br - u)
        if mode == MODE_FIRST:
            theta_out[j, 0] = 0.0
            theta_out[j, 1] = 0.0
            new_pts[j] = u - 2.0 * lam * (right_lo + left_lo)
            continue
        d = scalar_derivative_value(code, u)
        up = pts[_wrap(j - 1, nn, periodic)]
        un = pts[_wrap(j + 1, nn, periodic)]
        right_hi = max(d, 0.0) * (up - 3.0 * bl + 2.0 * u)
        left_hi = min(d, 0.0) * (-2.0 * u + 3.0 * br - un)
        if mode == MODE_HIGH:
            theta_out[j, 0] = 1.0
            theta_out[j, 1] = 1.0
            new_pts[j] = u - 2.0 * lam * (right_hi + left_hi)
            continue
        dr = right_hi - right_lo
        dl = left_hi - left_lo
        usl = 0.5 * (bl + u) - 0.5 * (fu - fbl) / sl if sl > 0.0 else 0.5 * (bl + u)
        usr = 0.5 * (u + br) - 0.5 * (fbr - fu) / sr if sr > 0.0 else 0.5 * (u + br)
        if usl < lower - tol or usl > upper + tol or usr < lower - tol or usr > upper + tol:
            return STAR_OUT_OF_BOUNDS, n + 1 + j, courant
        tl = eta_global_value(usl, dr, sl, lower, upper)
        tr = eta_global_value(usr, dl, sr, lower, upper)
        theta_out[j, 0] = tl
        theta_out[j, 1] = tr
        new_pts[j] = u - 2.0 * lam * ((right_lo + tl * dr) + (left_lo + tr * dl))
    return OK, -1, courant


@nb.njit(cache=True, inline="always")
def _euler_speed(rho, m, E, gamma):
    e = E - 0.5 * m * m / rho
    if not (rho > 0.0 and e > 0.0):
        return -1.0
    return abs(m / rho) + math.sqrt(gamma * (gamma - 1.0) * e / rho)


@nb.njit(cache=True, inline="always")
def _star(a0, a1, a2, b0, b1, b2, fa0, fa1, fa2, fb0, fb1, fb2, s):
    if s > 0.0:
        return (0.5 * (a0 + b0) - 0.5 * (fb0 - fa0) / s,
                0.5 * (a1 + b1) - 0.5 * (fb1 - fa1) / s,
                0.5 * (a2 + b2) - 0.5 * (fb2 - fa2) / s)
    return 0.5 * (a0 + b0), 0.5 * (a1 + b1), 0.5 * (a2 + b2)


@nb.njit(cache=True)
def euler_stage(gamma, avg, pts, periodic, lam, mode, use_lmp,
                new_avg, new_pts, eta_out, theta_out):
    n = avg.shape[0]
    nn = pts.shape[0]
    # per-DoF speeds and fluxes, computed once
    cs = np.empty(n)
    cf = np.empty((n, 3))
    ps = np.empty(nn)
    pf = np.empty((nn, 3))
    for c in range(n):
        cs[c] = _euler_speed(avg[c, 0], avg[c, 1], avg[c, 2], gamma)
        if cs[c] < 0.0:
            return INVALID_STATE, c, 0.0
        cf[c, 0], cf[c, 1], cf[c, 2] = euler_flux_tuple(avg[c, 0], avg[c, 1], avg[c, 2], gamma)
    for j in range(nn):
        ps[j] = _euler_speed(pts[j, 0], pts[j, 1], pts[j, 2], gamma)
        if ps[j] < 0.0:
            return INVALID_STATE, n + j, 0.0
        pf[j, 0], pf[j, 1], pf[j, 2] = euler_flux_tuple(pts[j, 0], pts[j, 1], pts[j, 2], gamma)

    flux = np.empty((n + 1, 3))
    delta = np.empty((n + 1, 3))
    ustar = np.empty((n + 1, 3))
    alpha = np.empty(n + 1)
    for j in range(n + 1):
        ia = _wrap(j - 1, n, periodic)
        ib = _wrap(j, n, periodic)
        ip = _wrap(j, nn, periodic)
        s = max(cs[ia], cs[ib])
        alpha[j] = s
        for k in range(3):
            a = avg[ia, k]
            b = avg[ib, k]
            flo = 0.5 * (cf[ia, k] + cf[ib, k]) - 0.5 * s * (b - a)
            delta[j, k] = pf[ip, k] - flo
            flux[j, k] = pf[ip, k] if mode == MODE_HIGH else flo
            if s > 0.0:
                ustar[j, k] = 0.5 * (a + b) - 0.5 * (cf[ib, k] - cf[ia, k]) / s
            else:
                ustar[j, k] = 0.5 * (a + b)
    courant = 0.0
    for c in range(n):
        courant = max(courant, lam * (alpha[c] + alpha[c + 1]))

    if mode == MODE_BP:
        lmin = np.empty(n)
        lmax = np.empty(n)
        smooth = np.ones(n, dtype=np.bool_)
        bnd = np.empty((n + 1, 4))
        if use_lmp:
            _mark_cells(avg[:, 0].copy(), pts[:, 0].copy(), ustar[:, 0].copy(), periodic,
                        lmin, lmax, smooth)
            _cell_bounds(n, periodic, lmin, lmax, smooth, bnd)
        for j in range(n + 1):
            eta = euler_coefficient(ustar[j, 0], ustar[j, 1], ustar[j, 2],
                                    delta[j, 0], delta[j, 1], delta[j, 2], alpha[j])
            if eta < 0.0:
                return STAR_OUT_OF_BOUNDS, j, courant
            if use_lmp:
                eta = min(eta, eta_local_value(ustar[j, 0], delta[j, 0], alpha[j],
                                               bnd[j, 0], bnd[j, 1], bnd[j, 2], bnd[j, 3]))
            eta_out[j] = eta
            flux[j, 0] += eta * delta[j, 0]
            flux[j, 1] += eta * delta[j, 1]
            flux[j, 2] += eta * delta[j, 2]
    elif mode == MODE_HIGH:
        eta_out[:] = 1.0
    else:
        eta_out[:] = 0.0

    for c in range(n):
        for k in range(3):
            new_avg[c, k] = avg[c, k] - lam * (flux[c + 1, k] - flux[c, k])

    for j in range(nn):
        u0, u1, u2 = pts[j, 0], pts[j, 1], pts[j, 2]
        il = _wrap(j - 1, n, periodic)
        ir = _wrap(j, n, periodic)
        l0, l1, l2 = avg[il, 0], avg[il, 1], avg[il, 2]
        r0, r1, r2 = avg[ir, 0], avg[ir, 1], avg[ir, 2]
        sl = max(ps[j], cs[il])
        sr = max(ps[j], cs[ir])
        courant = max(courant, 2.0 * lam * (sl + sr))
        fu0, fu1, fu2 = pf[j, 0], pf[j, 1], pf[j, 2]
        fl0, fl1, fl2 = cf[il, 0], cf[il, 1], cf[il, 2]
        fr0, fr1, fr2 = cf[ir, 0], cf[ir, 1], cf[ir, 2]
        rlo0 = 0.5 * (fu0 - fl0) - 0.5 * sl * (l0 - u0)
        rlo1 = 0.5 * (fu1 - fl1) - 0.5 * sl * (l1 - u1)
        rlo2 = 0.5 * (fu2 - fl2) - 0.5 * sl * (l2 - u2)
        llo0 = 0.5 * (fr0 - fu0) - 0.5 * sr * (r0 - u0)
        llo1 = 0.5 * (fr1 - fu1) - 0.5 * sr * (r1 - u1)
        llo2 = 0.5 * (fr2 - fu2) - 0.5 * sr * (r2 - u2)
        if mode == MODE_FIRST:
            theta_out[j, 0] = 0.0
            theta_out[j, 1] = 0.0
            new_pts[j, 0] = u0 - 2.0 * lam * (rlo0 + llo0)
            new_pts[j, 1] = u1 - 2.0 * lam * (rlo1 + llo1)
            new_pts[j, 2] = u2 - 2.0 * lam * (rlo2 + llo2)
            continue
        ip = _wrap(j - 1, nn, periodic)
        iq = _wrap(j + 1, nn, periodic)
        rhi0, rhi1, rhi2, lhi0, lhi1, lhi2 = euler_split_apply(
            u0, u1, u2, gamma,
            pts[ip, 0] - 3.0 * l0 + 2.0 * u0,
            pts[ip, 1] - 3.0 * l1 + 2.0 * u1,
            pts[ip, 2] - 3.0 * l2 + 2.0 * u2,
            -2.0 * u0 + 3.0 * r0 - pts[iq, 0],
            -2.0 * u1 + 3.0 * r1 - pts[iq, 1],
            -2.0 * u2 + 3.0 * r2 - pts[iq, 2])
        if mode == MODE_HIGH:
            theta_out[j, 0] = 1.0
            theta_out[j, 1] = 1.0
            new_pts[j, 0] = u0 - 2.0 * lam * (rhi0 + lhi0)
            new_pts[j, 1] = u1 - 2.0 * lam * (rhi1 + lhi1)
            new_pts[j, 2] = u2 - 2.0 * lam * (rhi2 + lhi2)
            continue
        dr0, dr1, dr2 = rhi0 - rlo0, rhi1 - rlo1, rhi2 - rlo2
        dl0, dl1, dl2 = lhi0 - llo0, lhi1 - llo1, lhi2 - llo2
        s0, s1, s2 = _star(l0, l1, l2, u0, u1, u2, fl0, fl1, fl2, fu0, fu1, fu2, sl)
        tl = euler_coefficient(s0, s1, s2, dr0, dr1, dr2, sl)
        s0, s1, s2 = _star(u0, u1, u2, r0, r1, r2, fu0, fu1, fu2, fr0, fr1, fr2, sr)
        tr = euler_coefficient(s0, s1, s2, dl0, dl1, dl2, sr)
        if tl < 0.0 or tr < 0.0:
            return STAR_OUT_OF_BOUNDS, n + 1 + j, courant
        theta_out[j, 0] = tl
        theta_out[j, 1] = tr
        new_pts[j, 0] = u0 - 2.0 * lam * ((rlo0 + tl * dr0) + (llo0 + tr * dl0))
        new_pts[j, 1] = u1 - 2.0 * lam * ((rlo1 + tl * dr1) + (llo1 + tr * dl1))
        new_pts[j, 2] = u2 - 2.0 * lam * ((rlo2 + tl * dr2) + (llo2 + tr * dl2))
    return OK, -1, courant


@nb.njit(cache=True)
def scalar_average_run(code, avg, periodic, dx, t_final, cfl):
    """Forward-Euler LLF finite-volume run on averages alone; returns (steps, t)."""
    n = avg.shape[0]
    flux = np.empty(n + 1)
    alpha = np.empty(n + 1)
    t = 0.0
    steps = 0
    while t < t_final:
        for j in range(n + 1):
            a = avg[_wrap(j - 1, n, periodic)]
            b = avg[_wrap(j, n, periodic)]
            s = scalar_interval_speed(code, a, b)
            alpha[j] = s
            flux[j] = 0.5 * (scalar_flux_value(code, a) + scalar_flux_value(code, b)) - 0.5 * s * (b - a)
        smax = 0.0
        for c in range(n):
            smax = max(smax, alpha[c] + alpha[c + 1])
        dt = t_final - t
        if smax > 0.0:
            dt = min(dt, cfl * dx / smax)
        lam = dt / dx
        for c in range(n):
            avg[c] = avg[c] - lam * (flux[c + 1] - flux[c])
        t = t_final if t_final - (t + dt) <= 1e-14 * max(1.0, t_final) else t + dt
        steps += 1
    return steps, t


@nb.njit(cache=True)
def euler_average_run(gamma, avg, periodic, dx, t_final, cfl):
    """Euler counterpart of ``scalar_average_run``; steps = -1 flags an invalid state."""
    n = avg.shape[0]
    flux = np.empty((n + 1, 3))
    alpha = np.empty(n + 1)
    speed = np.empty(n)
    t = 0.0
    steps = 0
    while t < t_final:
        for c in range(n):
            speed[c] = _euler_speed(avg[c, 0], avg[c, 1], avg[c, 2], gamma)
            if speed[c] < 0.0:
                return -1, t
        for j in range(n + 1):
            ia = _wrap(j - 1, n, periodic)
            ib = _wrap(j, n, periodic)
            s = max(speed[ia], speed[ib])
            alpha[j] = s
            fa0, fa1, fa2 = euler_flux_tuple(avg[ia, 0], avg[ia, 1], avg[ia, 2], gamma)
            fb0, fb1, fb2 = euler_flux_tuple(avg[ib, 0], avg[ib, 1], avg[ib, 2], gamma)
            flux[j, 0] = 0.5 * (fa0 + fb0) - 0.5 * s * (avg[ib, 0] - avg[ia, 0])
            flux[j, 1] = 0.5 * (fa1 + fb1) - 0.5 * s * (avg[ib, 1] - avg[ia, 1])
            flux[j, 2] = 0.5 * (fa2 + fb2) - 0.5 * s * (avg[ib, 2] - avg[ia, 2])
        smax = 0.0
        for c in range(n):
            smax = max(smax, alpha[c] + alpha[c + 1])
        dt = min(t_final - t, cfl * dx / smax)
        lam = dt / dx
        for c in range(n):
            for k in range(3):
                avg[c, k] = avg[c, k] - lam * (flux[c + 1, k] - flux[c, k])
        t = t_final if t_final - (t + dt) <= 1e-14 * max(1.0, t_final) else t + dt
        steps += 1
    return steps, t
