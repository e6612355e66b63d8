"""Degree-one vortex profile and the linearization potentials.

The profile solves  rho'' + rho'/r - rho/r^2 + (1 - rho^2) rho = 0 with
rho(0) = 0, rho(inf) = 1, rho' > 0.  Construction is piecewise:

* odd power series  a r (1 - r^2/8 + ...)  on [r_min, series_end],
* damped-Newton collocation (4th-order, 5-point stencils) on the uniform
  section [series_end, tail_start], with the slope a as a bordered unknown,
* the algebraic tail  1 - 1/(2 r^2) - 9/(8 r^4) - ...  beyond tail_start.

Each piece satisfies the ODE to ~1e-10, so the sup-norm residual of the
stored samples stays well under 1e-8; shooting from r = 0 alone cannot
reach the tail because the e^{sqrt(2) r} mode amplifies parameter error.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .grids import RadialGrid

TAIL_COEFFS = (-1.0 / 2.0, -9.0 / 8.0, -161.0 / 16.0, -24661.0 / 128.0)


class ProfileError(RuntimeError):
    pass


def series_coeffs(a):
    """Coefficients of rho = sum c_k r^{2k+1} near r = 0."""
    return np.array([
        a,
        -a / 8.0,
        a**3 / 24.0 + a / 192.0,
        -a * (80.0 * a**2 + 1.0) / 9216.0,
        a * (1152.0 * a**4 + 656.0 * a**2 + 1.0) / 737280.0,
    ])


def series_eval(r, a, deriv=0):
    c = series_coeffs(a)
    out = np.zeros_like(np.asarray(r, dtype=float))
    for k, ck in enumerate(c):
        p = 2 * k + 1
        if deriv == 0:
            out = out + ck * r**p
        elif deriv == 1:
            out = out + p * ck * r ** (p - 1)
        else:
            out = out + p * (p - 1) * ck * r ** (p - 2)
    return out


def tail_eval(r, deriv=0):
    out = np.zeros_like(np.asarray(r, dtype=float))
    if deriv == 0:
        out = out + 1.0
    for k, dk in enumerate(TAIL_COEFFS):
        p = -(2 * k + 2)
        if deriv == 0:
            out = out + dk * r**p
        elif deriv == 1:
            out = out + p * dk * r ** (p - 1)
        else:
            out = out + p * (p - 1) * dk * r ** (p - 2)
    return out


def _ode_rhs(r, y):
    return [y[1], -y[1] / r + y[0] / r**2 - (1.0 - y[0] ** 2) * y[0]]


def shooting_slope(rtol=1e-12, r_end=14.0):
    """Independent slope constant via bisection on the blow-up direction."""

    def classify(a):
        def overshoot(r, y):
            return y[0] - 1.8

        overshoot.terminal = True

        def turned(r, y):
            return y[1]

        turned.terminal = True
        r0 = 1e-3
        y0 = series_eval(r0, a), series_eval(r0, a, 1)
        s = solve_ivp(_ode_rhs, (r0, r_end), y0, method="DOP853",
                      rtol=rtol, atol=1e-14, events=[overshoot, turned])
        if s.t_events[0].size:
            return 1.0
        if s.t_events[1].size:
            return -1.0
        return 1.0 if s.y[0, -1] > 1 else -1.0

    return brentq(classify, 0.4, 0.8, xtol=1e-13)


def _derivative_stencil(offsets, h, order):
    a = np.vander(offsets * h, len(offsets), increasing=True).T
    b = np.zeros(len(offsets))
    b[order] = (1.0, 1.0, 2.0)[order]   # order!
    return np.linalg.solve(a, b)


class _Collocation:
    """4th-order collocation of the profile ODE on a uniform grid, with the
    series slope a as a bordered unknown."""

    def __init__(self, r_lo, r_hi, h):
        n = int(round((r_hi - r_lo) / h))
        self.h = (r_hi - r_lo) / n
        self.r = r_lo + self.h * np.arange(n + 1)
        self.n = n + 1
        h = self.h
        self.c2_mid = _derivative_stencil(np.arange(-2, 3), h, 2)
        self.c2_lo = _derivative_stencil(np.arange(-1, 4), h, 2)
        self.c2_hi = _derivative_stencil(np.arange(-3, 2), h, 2)
        self.c1_mid = _derivative_stencil(np.arange(-2, 3), h, 1)
        self.c1_lo = _derivative_stencil(np.arange(-1, 4), h, 1)
        self.c1_hi = _derivative_stencil(np.arange(-3, 2), h, 1)
        self.c1_left = _derivative_stencil(np.arange(0, 5), h, 1)

    def _stencils(self, i):
        n = self.n
        if i == 1:
            return self.c2_lo, self.c1_lo, 0
        if i == n - 2:
            return self.c2_hi, self.c1_hi, n - 5
        return self.c2_mid, self.c1_mid, i - 2

    def residual_and_jacobian(self, y, a):
        n, r = self.n, self.r
        fval = np.zeros(n + 1)
        rows, cols, vals = [], [], []

        def add(i, j, v):
            rows.append(i)
            cols.append(j)
            vals.append(v)

        for i in range(1, n - 1):
            c2, c1, base = self._stencils(i)
            ypp = np.dot(c2, y[base:base + 5])
            yp = np.dot(c1, y[base:base + 5])
            fval[i] = ypp + yp / r[i] - y[i] / r[i] ** 2 + (1 - y[i] ** 2) * y[i]
            for k in range(5):
                add(i, base + k, c2[k] + c1[k] / r[i])
            add(i, i, -1.0 / r[i] ** 2 + 1.0 - 3.0 * y[i] ** 2)

        da = 1e-8
        fval[0] = y[0] - series_eval(r[0], a)
        add(0, 0, 1.0)
        add(0, n, -(series_eval(r[0], a + da) - series_eval(r[0], a)) / da)
        fval[n - 1] = y[n - 1] - tail_eval(r[-1])
        add(n - 1, n - 1, 1.0)
        fval[n] = np.dot(self.c1_left, y[0:5]) - series_eval(r[0], a, 1)
        for k in range(5):
            add(n, k, self.c1_left[k])
        add(n, n, -(series_eval(r[0], a + da, 1) - series_eval(r[0], a, 1)) / da)
        jac = sp.csc_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
        return fval, jac

    def solve(self, a0, tol, max_iter=50):
        y = self.r / np.sqrt(self.r**2 + 3.0)
        a = a0
        # the defect floor is roundoff amplified by the 1/h^2 stencils, so
        # convergence keys on the Newton increment
        floor = max(tol, 50 * np.finfo(float).eps / self.h**2)
        for _ in range(max_iter):
            fval, jac = self.residual_and_jacobian(y, a)
            delta = spla.spsolve(jac, -fval)
            y = y + delta[:self.n]
            a = a + delta[self.n]
            if np.abs(delta).max() < 1e-12 or np.abs(fval).max() < floor:
                break
        else:
            raise ProfileError("profile collocation Newton did not converge in 50 iterations")
        if np.any(y <= 0) or np.any(np.diff(y) <= 0) or np.any(y >= 1):
            raise ProfileError("non-monotone or out-of-range profile candidate")
        dy = np.empty_like(y)
        for i in range(self.n):
            _, c1, base = self._stencils(min(max(i, 1), self.n - 2))
            if i == 0:
                dy[i] = np.dot(self.c1_left, y[0:5])
            elif i == self.n - 1:
                dy[i] = np.dot(_derivative_stencil(np.arange(-4, 1), self.h, 1), y[-5:])
            else:
                dy[i] = np.dot(c1, y[base:base + 5])
        return y, dy, a


@dataclasses.dataclass
class VortexProfile:
    grid: RadialGrid
    rho: np.ndarray
    drho: np.ndarray
    slope_a: float
    series_end: float
    tail_start: float
    tail_checked: bool
    _mid_rho: CubicSpline
    _mid_drho: CubicSpline

    def rho_at(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        m1 = r <= self.series_end
        m3 = r > self.tail_start
        m2 = ~m1 & ~m3
        out[m1] = series_eval(r[m1], self.slope_a)
        out[m2] = self._mid_rho(r[m2])
        out[m3] = tail_eval(r[m3])
        return out

    def drho_at(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        m1 = r <= self.series_end
        m3 = r > self.tail_start
        m2 = ~m1 & ~m3
        out[m1] = series_eval(r[m1], self.slope_a, 1)
        out[m2] = self._mid_drho(r[m2])
        out[m3] = tail_eval(r[m3], 1)
        return out

    def residual(self):
        """Per-node ODE residual of the stored profile.

        Analytic derivatives on the closed-form pieces; independent 7-point
        degree-6 local fits on the collocation piece.
        """
        r, rho, drho = self.grid.r, self.rho, self.drho
        res = np.empty_like(r)
        m1 = r <= self.series_end
        m3 = r > self.tail_start
        m2 = ~m1 & ~m3
        for mask, ev in ((m1, lambda rr, d: series_eval(rr, self.slope_a, d)),
                         (m3, lambda rr, d: tail_eval(rr, d))):
            rr = r[mask]
            res[mask] = ev(rr, 2) + ev(rr, 1) / rr - ev(rr, 0) / rr**2 \
                + (1 - ev(rr, 0) ** 2) * ev(rr, 0)
        idx = np.flatnonzero(m2)
        for i in idx:
            lo = min(max(i - 3, idx[0]), idx[-1] - 6)
            xs = r[lo:lo + 7] - r[i]
            scale = np.abs(xs).max()
            c = np.polyfit(xs / scale, drho[lo:lo + 7], 6)
            d_drho = c[-2] / scale
            res[i] = d_drho + drho[i] / r[i] - rho[i] / r[i] ** 2 \
                + (1 - rho[i] ** 2) * rho[i]
        return res


def solve_profile(grid=None, r_max=240.0, tol=1e-12, series_end=0.2,
                  tail_start=30.0, h_colloc=0.005):
    """Construct the vortex profile on a radial grid.

    ``tol`` bounds the collocation Newton residual; the assembled profile
    has ODE residual below ~3e-9 in sup norm over the grid.
    """
    if r_max < 40:
        raise ProfileError("r_max >= 40 required for the tail representation")
    if grid is None:
        grid = RadialGrid(r_max=r_max)
    a0 = shooting_slope(rtol=1e-11)
    colloc = _Collocation(series_end, tail_start, h_colloc)
    y, dy, a = colloc.solve(a0, max(tol, 1e-13))
    mid_rho = CubicSpline(colloc.r, y)
    mid_drho = CubicSpline(colloc.r, dy)

    r = grid.r
    prof = VortexProfile(grid=grid, rho=np.empty_like(r), drho=np.empty_like(r),
                         slope_a=a, series_end=series_end, tail_start=tail_start,
                         tail_checked=False, _mid_rho=mid_rho, _mid_drho=mid_drho)
    prof.rho = prof.rho_at(r)
    prof.drho = prof.drho_at(r)
    i50 = grid.index_at(min(50.0, r_max))
    prof.tail_checked = bool(abs(prof.rho[i50] - (1 - 1 / (2 * grid.r[i50] ** 2))) < 1e-5)
    if np.any(prof.drho <= 0):
        raise ProfileError("assembled profile is not strictly increasing")
    return prof


@dataclasses.dataclass(frozen=True)
class LinearizationPotentials:
    """Remainders of L1, L2 against the reference pair -d^2 -1/(4r^2) (+2).

    V1 = L1 + d^2 + 1/(4 r^2) = rho^2 - 1 + 1/r^2           (O(r^-4) tail)
    V2 = L2 + d^2 + 1/(4 r^2) - 2 = 3 (rho^2 - 1) + 1/r^2   (O(r^-2) tail)
    The coefficient 3 is forced by L2 = -d^2 + 3/(4r^2) + 3 rho^2 - 1; a
    factor-2 variant breaks the exact Wronskian constancy between interior
    and exterior solutions while leaving all |V2| <~ r^-2 estimates intact.
    """
    grid: RadialGrid
    v1: np.ndarray
    v2: np.ndarray
    w1: np.ndarray            # rho^2 - 1   (zero-order entry of L1)
    w2: np.ndarray            # 3 rho^2 - 1 (zero-order entry of L2)


def potentials(profile: VortexProfile) -> LinearizationPotentials:
    r = profile.grid.r
    rho2 = profile.rho**2
    return LinearizationPotentials(
        grid=profile.grid,
        v1=rho2 - 1 + 1 / r**2,
        v2=3 * (rho2 - 1) + 1 / r**2,
        w1=rho2 - 1,
        w2=3 * rho2 - 1,
    )


def potentials_at(profile: VortexProfile, r):
    """(V1, V2) at arbitrary radii (used by the exterior solver's own grid)."""
    rho2 = profile.rho_at(r) ** 2
    return rho2 - 1 + 1 / r**2, 3 * (rho2 - 1) + 1 / r**2
