"""Zero-energy fundamental systems of L1, L2 and the interior Green operators.

L1 = -d^2 + 3/(4r^2) + rho^2 - 1 has the explicit zero mode
f1 = sqrt(r) rho and the log-growing partner f2 ~ sqrt(r) log r built from a
Volterra equation; L2 = -d^2 + 3/(4r^2) + 3 rho^2 - 1 has the exponential
pair g1 ~ e^{sqrt(2) r}, g2 ~ e^{-sqrt(2) r}.  Wronskians are rescaled to 1
(the Green kernels divide by them, so this removes a redundant constant).
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.integrate import solve_ivp

from .grids import RadialGrid
from .vortex import VortexProfile

SQ2 = np.sqrt(2.0)


class ZeroModeError(RuntimeError):
    pass


@dataclasses.dataclass
class ScalarSolution:
    name: str
    values: np.ndarray
    dvalues: np.ndarray
    origin_class: str      # regular_at_0 | singular_at_0
    infinity_class: str    # bounded_growth | exp_growth | exp_decay | log_growth

    def scaled(self, c):
        return ScalarSolution(self.name, self.values * c, self.dvalues * c,
                              self.origin_class, self.infinity_class)


@dataclasses.dataclass
class ZeroModes:
    grid: RadialGrid
    f1: ScalarSolution
    f2: ScalarSolution
    g1: ScalarSolution
    g2: ScalarSolution
    w_f: complex            # W[f1, f2] after rescaling (= 1)
    w_g: complex            # W[g1, g2] after rescaling (= 1)
    volterra_iterations: int


def wronskian_samples(u: ScalarSolution, v: ScalarSolution, idx):
    return u.values[idx] * v.dvalues[idx] - u.dvalues[idx] * v.values[idx]


def build_f1(profile: VortexProfile) -> ScalarSolution:
    r = profile.grid.r
    sq = np.sqrt(r)
    vals = sq * profile.rho
    dvals = profile.rho / (2 * sq) + sq * profile.drho
    return ScalarSolution("f1", vals, dvals, "regular_at_0", "bounded_growth")


def _scalar_ivp(profile, w_of_r, r_span, y0, dense=True):
    def rhs(r, y):
        return [y[1], w_of_r(r) * y[0]]

    sol = solve_ivp(rhs, r_span, y0, method="DOP853", rtol=3e-13, atol=1e-300,
                    dense_output=dense)
    if not sol.success:
        raise ZeroModeError(f"IVP failed on {r_span}: {sol.message}")
    return sol


def build_f2(profile: VortexProfile, r_volterra=4.0, max_iter=60, tol=1e-13):
    """Log-growing partner of f1 via the backward Volterra representation
    x(r) = log r + int_r^inf (log s - log r) s V1(s) x(s) ds, f2 = sqrt(r) x,
    continued below the contraction region by inward integration."""
    grid = profile.grid
    r = grid.r
    # iterate on a wider domain than used, so that the quadrature stencils
    # around the output seam at r_volterra see smooth data
    sel = r >= min(2.0, r_volterra / 2)
    rs = r[sel]
    v1 = profile.rho_at(rs) ** 2 - 1 + 1 / rs**2
    x = np.log(rs)
    pad = np.zeros(grid.n)
    # analytic tail closure beyond r_max with V1 ~ -2/s^4, x ~ log s
    rm = grid.r_max
    tail_a = -2 * (2 * np.log(rm) ** 2 + 2 * np.log(rm) + 1) / (4 * rm**2)
    tail_b = -2 * (2 * np.log(rm) + 1) / (4 * rm**2)
    n_it = 0
    for n_it in range(1, max_iter + 1):
        pad[sel] = np.log(rs) * rs * v1 * x
        ca = grid.cumulative(pad)[sel]
        pad[sel] = rs * v1 * x
        cb = grid.cumulative(pad)[sel]
        ja = ca[-1] - ca + tail_a
        jb = cb[-1] - cb + tail_b
        x_new = np.log(rs) + ja - np.log(rs) * jb
        delta = np.abs(x_new - x).max()
        x = x_new
        if delta < tol:
            break
    else:
        raise ZeroModeError(f"Volterra iteration did not contract in {max_iter} steps")
    dx = (1.0 - jb) / rs
    # keep the Volterra output on r >= r_volterra only (full quadrature
    # accuracy there); continue inward from r_volterra, where the r^{-1/2}
    # branch dominates the inward direction
    keep = rs >= r_volterra
    i_c = np.argmax(keep)
    r_c = rs[i_c]
    y0 = [np.sqrt(r_c) * x[i_c],
          x[i_c] / (2 * np.sqrt(r_c)) + np.sqrt(r_c) * dx[i_c]]

    def w_of_r(rr):
        return 3 / (4 * rr**2) + profile.rho_at(np.asarray([rr]))[0] ** 2 - 1

    sol = _scalar_ivp(profile, w_of_r, (r_c, grid.r_min), y0)
    vals = np.empty_like(r)
    dvals = np.empty_like(r)
    outer = r >= r_c
    vals[outer] = (np.sqrt(rs) * x)[keep]
    dvals[outer] = (x / (2 * np.sqrt(rs)) + np.sqrt(rs) * dx)[keep]
    yi = sol.sol(r[~outer])
    vals[~outer] = yi[0]
    dvals[~outer] = yi[1]
    return ScalarSolution("f2", vals, dvals, "singular_at_0", "log_growth"), n_it


def build_g1_g2(profile: VortexProfile):
    """Exponential pair of L2: g1 grown outward from the r^{3/2} branch,
    g2 integrated backward from the asymptotic e^{-sqrt(2) r} seed."""
    grid = profile.grid
    r = grid.r
    a = profile.slope_a

    def w_of_r(rr):
        return 3 / (4 * rr**2) + 3 * profile.rho_at(np.asarray([rr]))[0] ** 2 - 1

    # g1: seed r^{3/2}(1 + c2 r^2 + c4 r^4) at r_min, grow outward
    c2, c4 = -1.0 / 8.0, a * a / 8.0 + 1.0 / 192.0
    r0 = grid.r_min
    g0 = r0**1.5 * (1 + c2 * r0**2 + c4 * r0**4)
    dg0 = 1.5 * r0**0.5 * (1 + c2 * r0**2 + c4 * r0**4) + r0**1.5 * (2 * c2 * r0 + 4 * c4 * r0**3)
    sol_out = _scalar_ivp(profile, w_of_r, (r0, grid.r_max), [g0, dg0])
    yo = sol_out.sol(r)
    vals1, dvals1 = yo[0].copy(), yo[1].copy()
    vals1[0], dvals1[0] = g0, dg0

    # g2: seed e^{-sqrt2 r}(1 + b1/r + b2/r^2) at r_max
    b1, b2 = -9 * SQ2 / 16.0, 153.0 / 256.0
    rm = grid.r_max
    amp = np.exp(-SQ2 * rm)
    u = 1 + b1 / rm + b2 / rm**2
    du = -b1 / rm**2 - 2 * b2 / rm**3
    y0 = [amp * u, amp * (du - SQ2 * u)]
    sol_b = _scalar_ivp(profile, w_of_r, (rm, grid.r_min), y0)
    yb = sol_b.sol(r[:-1])
    vals2 = np.append(yb[0], y0[0])
    dvals2 = np.append(yb[1], y0[1])

    g1 = ScalarSolution("g1", vals1, dvals1, "regular_at_0", "exp_growth")
    g2 = ScalarSolution("g2", vals2, dvals2, "singular_at_0", "exp_decay")
    return g1, g2


def build_modes(profile: VortexProfile) -> ZeroModes:
    grid = profile.grid
    f1 = build_f1(profile)
    f2, n_it = build_f2(profile)
    g1, g2 = build_g1_g2(profile)

    # zero is not an eigenvalue of L2: the two branches are independent
    mid = grid.index_at(5.0)
    wg = wronskian_samples(g1, g2, np.array([mid]))[0]
    scale_g = abs(g1.values[mid] * g2.dvalues[mid]) + abs(g1.dvalues[mid] * g2.values[mid])
    if abs(wg) < 1e-8 * scale_g:
        raise ZeroModeError("W[g1, g2] vanishes: zero appears to be an L2 eigenvalue")

    # rescale the log-partner and the growing branch so both Wronskians are 1
    wf = wronskian_samples(f1, f2, np.array([grid.index_at(1.0)]))[0]
    f2 = f2.scaled(1.0 / wf)
    g1 = g1.scaled(1.0 / wg)
    return ZeroModes(grid=grid, f1=f1, f2=f2, g1=g1, g2=g2,
                     w_f=1.0, w_g=1.0, volterra_iterations=n_it)


# ---------------------------------------------------------------------------
# Green operators


@dataclasses.dataclass(frozen=True)
class GreenOperator:
    kind: str               # G1 | G2_truncated | G1_dagger | G1_tilde
    modes: ZeroModes
    r0: float | None = None      # truncation radius eps0/|z| for G2_truncated


def green_apply(op: GreenOperator, phi, z=None):
    """Apply a Green operator to a sampled function.

    Returns (values, derivatives) on the grid.  For G2_truncated the output
    is supported on [r_min, r0]; integrals use 4th-order weights with a
    power-law panel on [0, r_min].
    """
    modes = op.modes
    grid = modes.grid
    phi = np.asarray(phi, dtype=complex)
    if op.kind == "G1":
        f1v, f2v = modes.f1.values, modes.f2.values
        c1 = grid.cumulative(f1v * phi) + grid.endpoint_panel(f1v[0] * phi[0], f1v[1] * phi[1])
        c2 = grid.cumulative(f2v * phi) + grid.endpoint_panel(f2v[0] * phi[0], f2v[1] * phi[1])
        pref = 1.0 / (1j * modes.w_f)
        vals = pref * (f1v * c2 - f2v * c1)
        dvals = pref * (modes.f1.dvalues * c2 - modes.f2.dvalues * c1)
        return vals, dvals
    if op.kind == "G1_tilde":
        f1v, f2v = modes.f1.values, modes.f2.values
        i1 = grid.index_at(1.0)
        c1 = grid.cumulative(f1v * phi)
        c2 = grid.cumulative(f2v * phi)
        c1 = c1 - c1[i1]
        c2 = c2 - c2[i1]
        pref = 1.0 / (1j * modes.w_f)
        vals = pref * (f1v * c2 - f2v * c1)
        dvals = pref * (modes.f1.dvalues * c2 - modes.f2.dvalues * c1)
        return vals, dvals
    if op.kind == "G1_dagger":
        f1v, f2v = modes.f1.values, modes.f2.values
        r1 = grid.cumulative_right(f1v * phi)
        r2 = grid.cumulative_right(f2v * phi)
        pref = -1.0 / (1j * modes.w_f)
        vals = pref * (f1v * r2 - f2v * r1)
        dvals = pref * (modes.f1.dvalues * r2 - modes.f2.dvalues * r1)
        return vals, dvals
    if op.kind == "G2_truncated":
        if op.r0 is None:
            raise ZeroModeError("G2_truncated requires the truncation radius r0")
        if op.r0 > grid.r_max + 1e-9:
            raise ZeroModeError(f"truncation radius {op.r0} outside the grid")
        g1v, g2v = modes.g1.values, modes.g2.values
        i0 = grid.index_at(op.r0)
        c1 = grid.cumulative(g1v * phi) + grid.endpoint_panel(g1v[0] * phi[0], g1v[1] * phi[1])
        k2 = grid.cumulative_right(g2v * phi)     # int_r^{rmax}, right-summed
        k2 = k2 - k2[i0]                          # int_r^{r0}
        pref = 1.0 / (1j * modes.w_g)
        vals = pref * (g2v * c1 + g1v * k2)
        dvals = pref * (modes.g2.dvalues * c1 + modes.g1.dvalues * k2)
        vals[i0 + 1:] = 0.0
        dvals[i0 + 1:] = 0.0
        return vals, dvals
    raise ZeroModeError(f"unknown Green operator kind {op.kind!r}")


def l2_inverse_apply(modes: ZeroModes, phi):
    """Global L2^{-1} phi via the g1/g2 kernel (no truncation).

    The jump condition for -d^2 + ... fixes the prefactor to -1/W[g1, g2].
    """
    grid = modes.grid
    g1v, g2v = modes.g1.values, modes.g2.values
    c1 = grid.cumulative(g1v * phi) + grid.endpoint_panel(g1v[0] * phi[0], g1v[1] * phi[1])
    k2 = grid.cumulative_right(g2v * phi)
    pref = -1.0 / modes.w_g
    vals = pref * (g2v * c1 + g1v * k2)
    dvals = pref * (modes.g2.dvalues * c1 + modes.g1.dvalues * k2)
    return vals, dvals
