"""Resolvent kernels, the jump across the spectrum, and the localized
evolution e^{tL} P_I as a Filon oscillatory integral.

Kernel conventions: with D = W[Psi, F1] and d = det D,

    G(r,s; z) = sum_{j<=3} m^j [phi_j(r) phi_1^t(s) 1_{s<=r} + sym] s1
              + sum_{j<=4} n^j [phi_j(r) phi_2^t(s) 1_{s<=r} + sym] s1,
    m^j = (i/d)(alpha b_1^j + gamma b_2^j),
    n^j = (i/d)(beta  b_1^j + delta b_2^j),

and the phi_4 x phi_1 coefficient cancels identically.  The evolution uses
the Bromwich orientation e^{t L} P_I = (1/2 pi i) int_I e^{-i t lam} S dlam
with S = R(lam + i0) - R(lam - i0); the time-domain propagator cross-check
pins this sign.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .connection import EnergyData, connection_table, energy_data
from .special import free_bessel_pq, k_roots
from .vortex import VortexProfile
from .zero_modes import ZeroModes

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]])


class ResolventError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# interacting resolvent


@dataclasses.dataclass
class ResolventData:
    z: complex
    sign: str
    m: np.ndarray              # coefficients of phi_j x phi_1, j = 1..3
    n: np.ndarray              # coefficients of phi_j x phi_2, j = 1..4
    cols: dict                 # interior columns 1..4
    i0: int                    # validity limit index (r <= eps0/|z|)


def resolvent_data(profile: VortexProfile, modes: ZeroModes, z, sign="+",
                   **kw) -> ResolventData:
    table, branches, (F1, F2) = connection_table(profile, modes, z, sign, **kw)
    b = table.b
    pref = 1j / table.d
    m = np.array([pref * (table.alpha * b[0, j] + table.gamma * b[1, j])
                  for j in range(3)])
    n = np.array([pref * (table.beta * b[0, j] + table.delta * b[1, j])
                  for j in range(4)])
    m4 = pref * (table.alpha * b[0, 3] + table.gamma * b[1, 3])
    scale = abs(pref) * (abs(table.alpha * b[0, 3]) + abs(table.gamma * b[1, 3]))
    if abs(m4) > 1e-8 * max(scale, 1e-300):
        raise ResolventError(f"phi4 x phi1 coefficient failed to cancel: {m4}")
    cols = {**F1.columns, **F2.columns}
    return ResolventData(z=complex(z), sign=sign, m=m, n=n, cols=cols, i0=F1.i0)


def _col_vals(col, idx):
    return np.stack([col.top[idx], col.bot[idx]])


def resolvent_kernel(rd: ResolventData, grid, i_r, i_s):
    """2x2 kernel value G(r_i, s_i; z) at two grid indices."""
    out = np.zeros((2, 2), dtype=complex)
    if i_s <= i_r:
        for j in range(3):
            out += rd.m[j] * np.outer(_col_vals(rd.cols[j + 1], i_r),
                                      _col_vals(rd.cols[1], i_s))
        for j in range(4):
            out += rd.n[j] * np.outer(_col_vals(rd.cols[j + 1], i_r),
                                      _col_vals(rd.cols[2], i_s))
    else:
        for j in range(3):
            out += rd.m[j] * np.outer(_col_vals(rd.cols[1], i_r),
                                      _col_vals(rd.cols[j + 1], i_s))
        for j in range(4):
            out += rd.n[j] * np.outer(_col_vals(rd.cols[2], i_r),
                                      _col_vals(rd.cols[j + 1], i_s))
    return out @ SIGMA1


def resolvent_apply(rd: ResolventData, grid, phi):
    """(iL - z)^{-1} phi on the grid for a sampled 2-vector phi (2, N).

    Valid where phi is supported well inside r0(z).
    """
    swapped = phi[::-1]      # sigma1 phi
    w1 = {j: _col_vals(rd.cols[j], np.arange(grid.n)) for j in (1, 2, 3, 4)}
    out = np.zeros((2, grid.n), dtype=complex)
    proj1 = np.sum(w1[1] * swapped, axis=0)
    proj2 = np.sum(w1[2] * swapped, axis=0)
    c_proj1 = grid.cumulative(proj1)
    for j in range(3):
        pj_proj = np.sum(w1[j + 1] * swapped, axis=0)
        right = grid.cumulative_right(pj_proj)
        out += rd.m[j] * (w1[j + 1] * c_proj1 + w1[1] * right)
    c_proj2 = grid.cumulative(proj2)
    for j in range(4):
        pj_proj = np.sum(w1[j + 1] * swapped, axis=0)
        right = grid.cumulative_right(pj_proj)
        out += rd.n[j] * (w1[j + 1] * c_proj2 + w1[2] * right)
    return out


# ---------------------------------------------------------------------------
# free resolvent


def free_wronskians(z):
    """s~13, s~24 (and the vanishing cross pair) for the free operator."""
    roots = k_roots(z, max_abs=0.45)
    k1, k2 = roots.k1, roots.k2
    two_c1c2 = -2j / np.pi
    s13 = -(1 + k1**4 / (z * z)) * two_c1c2 * k1
    s24 = -(1 + k2**4 / (z * z)) * two_c1c2 * k2
    cross_pref = 1 + (k1 * k2) ** 2 / (z * z)      # = 0 since k1 k2 = i z
    return s13, s24, cross_pref


def _free_columns(z, r):
    roots = k_roots(z, max_abs=0.45)
    k1, k2 = roots.k1, roots.k2
    p1, _, q1, _ = free_bessel_pq(k1 * r)
    p2, _, q2, _ = free_bessel_pq(k2 * r)
    psi1 = np.stack([(1j * k1 * k1 / z) * p1, p1])
    psi2 = np.stack([(1j * k2 * k2 / z) * p2, p2])
    psi3 = np.stack([(1j * k1 * k1 / z) * q1, q1])
    psi4 = np.stack([(1j * k2 * k2 / z) * q2, q2])
    return psi1, psi2, psi3, psi4


def free_resolvent_kernel(z, r, s):
    """2x2 kernel of (iL0 - z)^{-1} for Im z > 0."""
    if np.imag(z) <= 0:
        raise ResolventError("free resolvent kernel requires Im z > 0")
    s13, s24, _ = free_wronskians(z)
    p1r, p2r, q1r, q2r = _free_columns(z, np.atleast_1d(float(r)))
    p1s, p2s, q1s, q2s = _free_columns(z, np.atleast_1d(float(s)))
    if s <= r:
        out = (1j / s13) * np.outer(p1r[:, 0], q1s[:, 0]) \
            + (1j / s24) * np.outer(p2r[:, 0], q2s[:, 0])
    else:
        out = (1j / s13) * np.outer(q1r[:, 0], p1s[:, 0]) \
            + (1j / s24) * np.outer(q2r[:, 0], p2s[:, 0])
    return out @ SIGMA1


def free_resolvent_apply(z, grid, phi):
    """(iL0 - z)^{-1} phi on the grid (Im z > 0), via the 13/24 channels."""
    if np.imag(z) <= 0:
        raise ResolventError("Im z > 0 required")
    s13, s24, _ = free_wronskians(z)
    psi1, psi2, psi3, psi4 = _free_columns(z, grid.r)
    swapped = phi[::-1]
    out = np.zeros((2, grid.n), dtype=complex)
    for s_ij, outer_psi, inner_psi in ((s13, psi1, psi3), (s24, psi2, psi4)):
        proj_in = np.sum(inner_psi * swapped, axis=0)    # q-type, regular at 0
        proj_out = np.sum(outer_psi * swapped, axis=0)   # p-type, decaying
        c_in = grid.cumulative(proj_in) + grid.endpoint_panel(proj_in[0], proj_in[1])
        right_out = grid.cumulative_right(proj_out)
        out += (1j / s_ij) * (outer_psi * c_in + inner_psi * right_out)
    return out


def limiting_absorption_probe(grid, f, re_z, im_list, sigma=0.6):
    """sup over Im z of |z|^{1/2} ||<r>^-s (iL0 - z)^{-1} f|| / ||<r>^s f||."""
    w_minus = (1.0 + grid.r**2) ** (-sigma / 2)
    w_plus = (1.0 + grid.r**2) ** (sigma / 2)
    denom = np.sqrt(grid.integrate(np.abs(w_plus * f) ** 2, endpoint_power=0).sum())
    rows = []
    for b in im_list:
        z = complex(re_z, b)
        u = free_resolvent_apply(z, grid, np.stack([f, np.zeros_like(f)]))
        num = np.sqrt(np.sum(grid.integrate(np.abs(w_minus * u) ** 2,
                                            endpoint_power=0)))
        rows.append((b, float(np.sqrt(abs(z)) * num / denom)))
    return rows


# ---------------------------------------------------------------------------
# jump kernel


def jump_kernel_symmetric(ed: EnergyData, grid, i_r, i_s):
    """S(r,s;lambda) = i F1(r) C(lambda) F1(s)^t sigma1."""
    c1, c2 = ed.F1.columns[1], ed.F1.columns[2]
    f1r = np.array([[c1.top[i_r], c2.top[i_r]], [c1.bot[i_r], c2.bot[i_r]]])
    f1s = np.array([[c1.top[i_s], c2.top[i_s]], [c1.bot[i_s], c2.bot[i_s]]])
    return 1j * f1r @ ed.C @ f1s.T @ SIGMA1


def jump_kernel_difference(profile, modes, ed: EnergyData, grid, i_r, i_s, **kw):
    """S as the difference of the two boundary resolvent kernels."""
    rd_p = resolvent_data(profile, modes, ed.lam, "+", **kw)
    rd_m = resolvent_data(profile, modes, ed.lam, "-", **kw)
    return (resolvent_kernel(rd_p, grid, i_r, i_s)
            - resolvent_kernel(rd_m, grid, i_r, i_s))


# ---------------------------------------------------------------------------
# Filon evolution


def _filon_weights(lam_nodes, t):
    """Left/right interval weights for int e^{-i t lam} f(lam) dlam with f
    piecewise linear on the nodes; exact moments, stable small-t branch."""
    a = lam_nodes[:-1]
    b = lam_nodes[1:]
    h = b - a
    th = t * h
    small = np.abs(th) < 1e-5
    ea = np.exp(-1j * t * a)
    with np.errstate(invalid="ignore", divide="ignore"):
        m0 = np.where(small, h * (1 - 0.5j * t * (a + b)),
                      (ea - np.exp(-1j * t * b)) / (1j * t))
        # m1 = int_a^b (lam - a) e^{-i t lam} dlam
        eh = np.exp(-1j * th)
        m1 = np.where(small,
                      ea * h * h * (0.5 - 1j * th / 3.0),
                      ea * (1j * h * eh / t + (eh - 1.0) / (t * t)))
    wa = m0 - m1 / h
    wb = m1 / h
    return wa, wb


def _filon_integrate(lam_nodes, values, t):
    wa, wb = _filon_weights(lam_nodes, t)
    return np.sum(wa * values[..., :-1] + wb * values[..., 1:], axis=-1)


@dataclasses.dataclass
class EvolutionContext:
    """Cached spectral tables for evolving states over one interval."""
    profile: VortexProfile
    modes: ZeroModes
    interval: tuple
    lam_nodes: np.ndarray          # signed table nodes (ascending)
    prefactors: np.ndarray
    phi_fields: np.ndarray         # (n_nodes, 2, N)
    lam_fine: np.ndarray           # Filon nodes (Chebyshev in log|lambda|)
    weights_back: np.ndarray       # (n_nodes, n_fine) interpolation matrix
    n_filon: int
    delta0: float

    def check_resolution(self, t):
        a, b = self.interval
        if abs(t) * (b - a) / np.pi > self.n_filon:
            raise ResolventError(
                f"lambda resolution insufficient for t={t}: need > "
                f"{abs(t) * (b - a) / np.pi:.0f} panels")


def _fine_nodes(interval, lam_min, delta0, n):
    a, b = interval
    pieces = []
    for sgn in (-1, 1):
        if sgn > 0:
            lo_s, hi_s = max(a, lam_min), min(b, delta0)
        else:
            lo_s, hi_s = max(a, -delta0), min(b, -lam_min)
        if hi_s <= lo_s:
            continue
        k = np.arange(n)
        cheb = np.cos(np.pi * (2 * k + 1) / (2 * n))[::-1]
        lo_l = np.log(min(abs(lo_s), abs(hi_s)))
        hi_l = np.log(max(abs(lo_s), abs(hi_s)))
        mag = np.exp(lo_l + (hi_l - lo_l) * 0.5 * (cheb + 1))
        pieces.append(np.sort(sgn * mag))
    return np.concatenate(pieces)


def _interp_matrix(lam_nodes, lam_fine):
    """Cubic Lagrange interpolation (in log|lambda|, per sign) from table
    nodes to fine nodes, as a (n_nodes, n_fine) matrix."""
    w = np.zeros((lam_nodes.size, lam_fine.size))
    for sgn in (1, -1):
        sel_n = lam_nodes * sgn > 0
        sel_f = lam_fine * sgn > 0
        if not np.any(sel_f):
            continue
        idx_n = np.flatnonzero(sel_n)
        xn = np.log(np.abs(lam_nodes[idx_n]))
        order = np.argsort(xn)
        idx_n = idx_n[order]
        xn = xn[order]
        for col in np.flatnonzero(sel_f):
            x = np.log(abs(lam_fine[col]))
            j = int(np.clip(np.searchsorted(xn, x) - 1, 1, xn.size - 3))
            xs = xn[j - 1: j + 3]
            for m in range(4):
                lag = 1.0
                for l in range(4):
                    if l != m:
                        lag *= (x - xs[l]) / (xs[m] - xs[l])
                w[idx_n[j - 1 + m], col] = lag
    return w


def evolution_context(profile, modes, interval, lambda_min=1e-3, n_table=48,
                      n_filon=1024, delta0=0.01, **kw) -> EvolutionContext:
    a, b = interval
    if not (-delta0 - 1e-12 <= a < b <= delta0 + 1e-12):
        raise ResolventError("interval must lie inside [-delta0, delta0]")
    grid = modes.grid
    nodes = []
    for sgn in (-1, 1):
        lo = max(a, lambda_min) if sgn > 0 else max(a, -delta0)
        hi = min(b, delta0) if sgn > 0 else min(b, -lambda_min)
        if sgn > 0 and b > lambda_min and hi > lo:
            nodes.extend(np.geomspace(max(lo, lambda_min), hi, n_table))
        if sgn < 0 and a < -lambda_min and hi > lo:
            nodes.extend(-np.geomspace(max(-hi, lambda_min), -lo, n_table))
    lam_nodes = np.sort(np.array(nodes))
    prefs = np.empty(lam_nodes.size, dtype=complex)
    fields = np.empty((lam_nodes.size, 2, grid.n), dtype=complex)
    kw.setdefault("r_cut", grid.r_max)     # fields must span the whole grid
    for i, lam in enumerate(lam_nodes):
        ed = energy_data(profile, modes, lam, **kw)
        prefs[i] = ed.prefactor
        idx = np.arange(grid.n)
        v_int, _ = ed.phi_interior(idx[: ed.grid_mid_index + 1])
        fields[i, :, : ed.grid_mid_index + 1] = v_int
        r_out = grid.r[ed.grid_mid_index + 1:]
        r_hi = ed.branches_plus[1].r[-1]
        inside = r_out <= r_hi
        v_ext, _ = ed.phi_exterior(r_out[inside])
        fields[i, :, ed.grid_mid_index + 1:][:, inside] = v_ext
        fields[i, :, ed.grid_mid_index + 1:][:, ~inside] = 0.0
    lam_fine = _fine_nodes((a, b), lambda_min, delta0, n_filon)
    wback = _interp_matrix(lam_nodes, lam_fine)
    return EvolutionContext(profile=profile, modes=modes, interval=(a, b),
                            lam_nodes=lam_nodes, prefactors=prefs,
                            phi_fields=fields, lam_fine=lam_fine,
                            weights_back=wback, n_filon=n_filon, delta0=delta0)


def evolve_PI(ctx: EvolutionContext, t, u0):
    """e^{t L} P_I u0 on the grid; u0 is a sampled 2-vector (2, N).

    Output = (1/(2 pi i)) int_I e^{-i t lam} i pref <phi, s1 u0> phi(r) dlam.
    """
    grid = ctx.modes.grid
    ctx.check_resolution(t)
    swapped = u0[::-1]
    proj = np.array([grid.integrate(np.sum(ctx.phi_fields[k] * swapped, axis=0),
                                    endpoint_power=1)
                     for k in range(ctx.lam_nodes.size)])
    amp = ctx.prefactors * proj            # table-node amplitudes
    amp_f = ctx.weights_back.T @ amp
    wa, wb = _filon_weights(ctx.lam_fine, t)
    node_w = np.zeros(ctx.lam_fine.size, dtype=complex)
    node_w[:-1] += wa * amp_f[:-1]
    node_w[1:] += wb * amp_f[1:]
    field_w = ctx.weights_back @ node_w    # (n_table,)
    out = np.tensordot(field_w, ctx.phi_fields, axes=(0, 0))
    return out / (2 * np.pi)


def state_norm(grid, u):
    return float(np.sqrt(np.sum(grid.integrate(np.abs(u) ** 2, endpoint_power=1))))
