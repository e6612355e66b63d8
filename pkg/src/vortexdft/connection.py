"""Connection coefficients at the turning point r ~ 1/|z|.

Evaluates the sigma_3-twisted Wronskians between the interior columns
phi_1..phi_4 and the exterior branches psi_1..psi_4, solves for the basis
coefficients, and assembles the spectral objects: D+-, d+-, kappa, the
2x2 symmetric density C(lambda), the distorted-transform vector
phi(., lambda) and its mu-decomposition.

Evaluation radii are chosen per quantity: oscillatory pairings at the
geometric center of the overlap window [r_inf, r0], exponentially sized
pairings at the inner edge where the cancellation they suffer is minimal.
The psi_4 rows lose all significant digits at small energies (they would
need e^{sqrt(2) r_inf} extra precision); they are carried as diagnostics
and their contributions are exponentially negligible downstream.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .exterior import lyapunov_perron
from .interior import InteriorMatrix, f1_series, f2_series, interior_wronskians
from .special import k_roots
from .vortex import VortexProfile
from .zero_modes import ZeroModes

SQ2 = np.sqrt(2.0)
SIGMA3 = np.array([1.0, -1.0])


class ConnectionError_(RuntimeError):
    pass


def vector_wronskian(val_f, dval_f, val_g, dval_g):
    """W[f, g] = <f, s3 g'> - <f', s3 g> for 2-vectors sampled at one r."""
    return (val_f[0] * dval_g[0] - dval_f[0] * val_g[0]
            - (val_f[1] * dval_g[1] - dval_f[1] * val_g[1]))


def _interior_col_at(col, idx):
    return col.at(idx)


def _omega(branch, col, grid, idx, with_scale=False):
    """W[psi_l, phi_j] at a grid node; optionally with the product scale
    that bounds the achievable absolute accuracy."""
    r = grid.r[idx]
    psi, dpsi = branch.psi_at(np.array([r]))
    v, dv = col.at(idx)
    w = vector_wronskian(psi[:, 0], dpsi[:, 0], v, dv)
    if not with_scale:
        return w
    scale = (np.abs(psi[:, 0]) * np.abs(dv) + np.abs(dpsi[:, 0]) * np.abs(v)).sum()
    return w, scale


def _s_wronskian(br_i, br_j, r_pt):
    vi, di = br_i.psi_at(np.array([r_pt]))
    vj, dj = br_j.psi_at(np.array([r_pt]))
    return vector_wronskian(vi[:, 0], di[:, 0], vj[:, 0], dj[:, 0])


@dataclasses.dataclass
class SignTable:
    """One-sign connection data at energy z (Im z >= 0 for '+')."""
    z: complex
    sign: str
    r_eps: float
    omega: np.ndarray          # (4, 4): omega[l-1, j-1] = W[psi_l, phi_j]
    omega_spreads: dict
    c: dict                    # interior c_ij
    b: np.ndarray              # (4, 4): psi_l = sum_j b[l-1, j-1] phi_j
    D: np.ndarray              # 2x2 Wronskian matrix
    d: complex                 # det D
    alpha: complex
    beta: complex
    gamma: complex
    delta: complex


def connection_table(profile: VortexProfile, modes: ZeroModes, z, sign="+",
                     eps=0.14, eps_inf=0.07, eps0=0.22, delta0=0.01,
                     branches=None, interior=None, **lp_kw):
    """Build the one-sign table of Wronskian data at energy z."""
    z = complex(z)
    grid = modes.grid
    az = abs(z)
    # the series truncation radius may shrink to the grid: smaller eps0 only
    # improves convergence, and it admits energies down to eps_inf/r_max
    eps0 = min(eps0, 0.98 * grid.r_max * az)
    if eps_inf / az >= 0.95 * eps0 / az:
        raise ConnectionError_(
            f"|z|={az} too small: exterior onset eps_inf/|z| reaches the grid edge")
    r_eps = eps / az
    r_inf = eps_inf / az
    r0 = eps0 / az
    # three evaluation radii spanning the actual overlap window
    w_lo, w_hi = 1.02 * r_inf, 0.95 * r0
    ratio = w_hi / w_lo
    r_w_triple = w_lo * ratio ** np.array([0.25, 0.5, 0.75])
    r_w = r_w_triple[1]

    if interior is None:
        F1 = f1_series(modes, z, eps0=eps0)
        F2 = f2_series(modes, z, eps0=eps0)
    else:
        F1, F2 = interior
    cols = {**F1.columns, **F2.columns}
    if branches is None:
        branches = {j: lyapunov_perron(profile, j, z, sign=sign, eps_inf=eps_inf,
                                       eps0=eps0, delta0=delta0, **lp_kw)
                    for j in (1, 2, 3, 4)}

    i_w = grid.index_at(r_w)
    i_lo = grid.index_at(r_inf * 1.001)
    if grid.r[i_lo] < r_inf:
        i_lo += 1

    omega = np.zeros((4, 4), dtype=complex)
    spreads = {}
    # oscillatory/bounded pairings at the window center; spreads are
    # normalized by the Wronskian product scale (the achievable precision)
    for ell in (1, 2, 3):
        for j in (1, 3, 4):
            out = [_omega(branches[ell], cols[j], grid, grid.index_at(x),
                          with_scale=True) for x in r_w_triple]
            samples = [w for w, _ in out]
            omega[ell - 1, j - 1] = samples[1]
            scale = max(s for _, s in out)
            spreads[(ell, j)] = float((np.ptp(np.real(samples))
                                       + np.ptp(np.imag(samples))) / scale)
    # phi_2 pairings at the inner edge (the e^{sqrt2 r} column)
    for ell in (1, 2, 3):
        idxs = [i_lo, grid.index_at(grid.r[i_lo] * 1.02), grid.index_at(grid.r[i_lo] * 1.05)]
        out = [_omega(branches[ell], cols[2], grid, i, with_scale=True) for i in idxs]
        samples = [w for w, _ in out]
        omega[ell - 1, 1] = samples[0]
        scale = max(s for _, s in out)
        spreads[(ell, 2)] = float(abs(samples[2] - samples[0]) / scale)
    # psi_4 rows: diagnostics at the inner edge
    for j in (1, 2, 3, 4):
        omega[3, j - 1] = _omega(branches[4], cols[j], grid, i_lo)

    ctable, cspreads = interior_wronskians(F1, F2, grid)
    c13, c24 = ctable[(1, 3)], ctable[(2, 4)]
    c14, c34 = ctable[(1, 4)], ctable[(3, 4)]
    if abs(c13) < 1e-12 or abs(c24) < 1e-12:
        raise ConnectionError_("singular interior basis: c13 or c24 vanished")

    b = np.zeros((4, 4), dtype=complex)
    for ell in range(4):
        w1, w2, w3, w4 = omega[ell]
        b4 = -w2 / c24
        b1 = (w3 + c34 * b4) / c13
        b3 = -(w1 + c14 * b4) / c13
        b2 = (w4 - c14 * b1 - c34 * b3) / c24
        b[ell] = (b1, b2, b3, b4)
    # the phi_2 coefficients of psi_1..psi_3 are O(e^{-4 sqrt2 r_eps}),
    # far below the omega_l4 measurement floor; the measured values are
    # noise that the e^{sqrt2 r} column would amplify, so zero them
    for ell in range(3):
        if abs(b[ell, 1]) < 1e-20 * np.abs(b[ell]).max():
            b[ell, 1] = 0.0

    D = np.array([[omega[0, 0], omega[0, 1]], [omega[1, 0], omega[1, 1]]])
    d = D[0, 0] * D[1, 1] - D[0, 1] * D[1, 0]
    return SignTable(z=z, sign=sign, r_eps=r_eps, omega=omega,
                     omega_spreads=spreads, c=ctable, b=b, D=D, d=d,
                     alpha=omega[1, 1], beta=-omega[1, 0],
                     gamma=-omega[0, 1], delta=omega[0, 0]), branches, (F1, F2)


@dataclasses.dataclass
class EnergyData:
    """Everything the spectral representation needs at one real energy."""
    lam: float
    table_plus: SignTable
    table_minus: SignTable
    branches_plus: dict
    branches_minus: dict
    F1: InteriorMatrix
    F2: InteriorMatrix
    kappa: complex
    kappa_spread: float
    C: np.ndarray              # 2x2 symmetric density
    prefactor: complex         # kappa / (d+ d-)
    s: dict                    # s_ij = W[psi_i^+, psi_j^+]
    gammas: dict               # exterior expansion of the transform vector
    mus: dict
    c_basis: dict              # c1, c2, c3 of psi_3 in the reflected basis
    grid_mid_index: int        # interior representation used up to this node

    def phi_interior(self, idx):
        """Transform vector phi = w22 phi1 - w21 phi2 at grid indices."""
        t = self.table_plus
        c1, c2 = self.F1.columns[1], self.F1.columns[2]
        w22, w21 = t.omega[1, 1], t.omega[1, 0]
        val = np.stack([w22 * c1.top[idx] - w21 * c2.top[idx],
                        w22 * c1.bot[idx] - w21 * c2.bot[idx]])
        dval = np.stack([w22 * c1.dtop[idx] - w21 * c2.dtop[idx],
                         w22 * c1.dbot[idx] - w21 * c2.dbot[idx]])
        return val, dval

    def phi_exterior(self, r_pts):
        """Exterior representation sum_j gamma_j psi_j (gamma2 psi2 is
        exponentially negligible and omitted; see gammas['gamma2_bound'])."""
        g1 = self.gammas["gamma1"]
        g3 = self.gammas["gamma3"]
        v1, d1 = self.branches_plus[1].psi_at(r_pts)
        v3, d3 = self.branches_plus[3].psi_at(r_pts)
        return g1 * v1 + g3 * v3, g1 * d1 + g3 * d3


def energy_data(profile: VortexProfile, modes: ZeroModes, lam, eps=0.14,
                eps_inf=0.07, eps0=0.22, delta0=0.01, **lp_kw) -> EnergyData:
    """Full two-sided connection data at real energy lambda (+i0 / -i0)."""
    lam = float(lam)
    if lam == 0:
        raise ConnectionError_("lambda = 0 excluded")
    table_p, br_p, (F1, F2) = connection_table(
        profile, modes, lam, "+", eps, eps_inf, eps0, delta0, **lp_kw)
    table_m, br_m, _ = connection_table(
        profile, modes, lam, "-", eps, eps_inf, eps0, delta0,
        interior=(F1, F2), **lp_kw)

    grid = modes.grid
    r_hi = br_p[1].r[-1]
    r_inf = br_p[1].r[0]

    # kappa = W[psi_1^-, psi_1^+], r-independent, evaluated in the far zone
    pts = [r_inf + f * (r_hi - r_inf) for f in (0.5, 0.7, 0.9)]
    kappas = [_s_wronskian(br_m[1], br_p[1], p) for p in pts]
    kappa = kappas[1]
    kappa_spread = float(np.abs(np.ptp(np.real(kappas))
                                + 1j * np.ptp(np.imag(kappas))) / abs(kappa))

    # s_ij within the plus family
    r_far = r_inf + 0.7 * (r_hi - r_inf)
    r_near = r_inf * 1.001
    s = {}
    s[(1, 3)] = _s_wronskian(br_p[1], br_p[3], r_far)
    s[(1, 2)] = _s_wronskian(br_p[1], br_p[2], r_far)
    s[(2, 3)] = _s_wronskian(br_p[2], br_p[3], r_far)
    s[(2, 4)] = _s_wronskian(br_p[2], br_p[4], r_far)
    s[(1, 4)] = _s_wronskian(br_p[1], br_p[4], r_near)
    s[(3, 4)] = _s_wronskian(br_p[3], br_p[4], r_near)

    # density C = kappa D_-^{-1} e11 D_+^{-t}
    Dp, Dm = table_p.D, table_m.D
    dm_inv = np.linalg.inv(Dm)
    dp_invt = np.linalg.inv(Dp).T
    e11 = np.array([[1.0, 0.0], [0.0, 0.0]])
    C = kappa * dm_inv @ e11 @ dp_invt
    prefactor = kappa / (table_p.d * table_m.d)

    # exterior expansion coefficients of phi
    om = table_p.omega
    gamma1 = (om[1, 0] * om[2, 1] - om[1, 1] * om[2, 0]) / s[(1, 3)]
    gamma3 = -(om[1, 0] * om[0, 1] - om[1, 1] * om[0, 0]) / s[(1, 3)]
    gamma2_bound = abs(s[(2, 4)]) and abs(
        (om[1, 0] * om[3, 1] - om[1, 1] * om[3, 0]) / s[(2, 4)])

    # psi_3 = c1 psi_1 + c2 (-sigma3) psi_1(-lam) + c3 psi_2: Wronskian solve
    def refl_psi(r_pts):
        v, dv = br_m[1].psi_at(r_pts)     # psi_1^-(lam) = -sigma3 psi_1^+(-lam)
        return v, dv

    def wron_pair(fa, fb, r_pt):
        va, da = fa(np.array([r_pt]))
        vb, db = fb(np.array([r_pt]))
        return vector_wronskian(va[:, 0], da[:, 0], vb[:, 0], db[:, 0])

    u = {1: br_p[1].psi_at, 2: refl_psi, 3: br_p[2].psi_at}
    taus = [(refl_psi, r_far), (br_p[1].psi_at, r_far), (br_p[4].psi_at, r_near)]
    gmat = np.zeros((3, 3), dtype=complex)
    rhs = np.zeros(3, dtype=complex)
    for i, (tau, r_pt) in enumerate(taus):
        for k in (1, 2, 3):
            gmat[i, k - 1] = wron_pair(tau, u[k], r_pt)
        rhs[i] = wron_pair(tau, br_p[3].psi_at, r_pt)
    cvec = np.linalg.solve(gmat, rhs)
    c_basis = {"c1": cvec[0], "c2": cvec[1], "c3": cvec[2]}

    # mu-decomposition of phi in the reflected basis
    om_m = table_m.omega
    omega11_m = om_m[0, 0]       # = omega_11^+(-lam)
    omega12_m = -om_m[0, 1]      # = omega_12^+(-lam) since omega_i2^- = -omega_i2^+(-lam)
    mus = {
        "mu1": -cvec[1] * om[1, 1] / s[(1, 3)],
        "mu2": cvec[1] * om[1, 0] * om[0, 1] / s[(1, 3)],
        "mu3": cvec[1] * om[1, 0] * omega12_m / s[(1, 3)],
        "mu4": gamma2_bound - cvec[2] * (om[1, 0] * om[0, 1]
                                         - om[1, 1] * om[0, 0]) / s[(1, 3)],
        "omega11_minus_lam": omega11_m,
    }
    gammas = {"gamma1": gamma1, "gamma3": gamma3, "gamma2_bound": gamma2_bound}

    # interior/exterior stitch: inside the overlap window, at least 1.05 r_inf
    i_mid = grid.index_at(max(min(1.05 * np.sqrt(r_inf * F1.r0), 0.8 * F1.r0),
                              1.05 * r_inf))
    if grid.r[i_mid] < r_inf:
        i_mid = grid.index_at(r_inf) + 1
    return EnergyData(lam=lam, table_plus=table_p, table_minus=table_m,
                      branches_plus=br_p, branches_minus=br_m, F1=F1, F2=F2,
                      kappa=kappa, kappa_spread=kappa_spread, C=C,
                      prefactor=prefactor, s=s, gammas=gammas, mus=mus,
                      c_basis=c_basis, grid_mid_index=i_mid)
