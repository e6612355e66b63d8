"""Exterior fundamental system at r = infinity via Lyapunov-Perron.

The first-order system for Upsilon = (q, q', p, p') is solved as the fixed
point Upsilon_j = w_j + F_j(Upsilon_j), where the free waves w_j are built
from the modified Hankel pair at k_1(z) r and k_2(z) r and the kernels of
F_j integrate the inverse-square potential remainders V_1, V_2 along the
stable/unstable directions.

Everything is iterated in branch-scaled variables e^{-i k_j r} Upsilon_j,
so the e^{+-sqrt(2) r} factors only ever appear in exponent-cancelled
products; with r_cut <= 240 the extreme combination e^{2 sqrt(2) s} stays
inside double range.  The minus-sign family is obtained from the exact
symmetry Upsilon_j^-(r; z) = iota Upsilon_j^+(r; -z).
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.interpolate import CubicSpline

from .special import hankel_h_scaled, k_roots
from .vortex import VortexProfile, potentials_at

IOTA = np.array([1.0, 1.0, -1.0, -1.0])

# F_j term tables: (b, hankel branch of the s-factor, root index d, range,
# coefficient, sign);  range 'lower' = int_{r_inf}^r, 'upper' = int_r^inf.
LP_TERMS = {
    1: [(3, "plus", 1, "upper", "alpha", +1),
        (1, "minus", 1, "upper", "alpha", -1),
        (2, "minus", 2, "lower", "beta", +1),
        (4, "plus", 2, "upper", "beta", +1)],
    2: [(3, "plus", 1, "upper", "alpha", +1),
        (1, "minus", 1, "upper", "alpha", -1),
        (4, "plus", 2, "upper", "beta", +1),
        (2, "minus", 2, "upper", "beta", -1)],
    3: [(1, "minus", 1, "lower", "alpha", +1),
        (2, "minus", 2, "lower", "beta", +1),
        (3, "plus", 1, "upper", "alpha", +1),
        (4, "plus", 2, "upper", "beta", +1)],
    4: [(1, "minus", 1, "lower", "alpha", +1),
        (2, "minus", 2, "lower", "beta", +1),
        (3, "plus", 1, "lower", "alpha", -1),
        (4, "plus", 2, "upper", "beta", +1)],
}

BRANCH_ROOT = {1: "k1", 2: "k2", 3: "k3", 4: "k4"}


class ExteriorError(RuntimeError):
    pass


def x_weights(j, z):
    az = abs(z)
    if j in (1, 3):
        return np.array([1.0, 1.0 / az, 1.0 / az, 1.0 / az**2])
    return np.array([1.0, 1.0, az, az])


def _scaled_free_wave(j, roots, r):
    """e^{-i k_j r} w_j^+(r) as a (4, N) array."""
    k1, k2 = roots.k1, roots.k2
    z = roots.z
    if j in (1, 2):
        k = k1 if j == 1 else k2
        h, dh = hankel_h_scaled("plus", k * r)
    else:
        k = k1 if j == 3 else k2
        h, dh = hankel_h_scaled("minus", k * r)
    return np.stack([h, k * dh, (1j * k * k / z) * h, (1j * k**3 / z) * dh])


def free_wave(j, sign, z, r, delta0=0.01):
    """Unscaled free wave w_j^{sign}(r; z); overflows for k2-branches at
    large r, kept for tests and small windows."""
    if sign == "+":
        roots = k_roots(z, delta0=delta0)
        what = _scaled_free_wave(j, roots, r)
        kj = getattr(roots, BRANCH_ROOT[j])
        return what * np.exp(1j * kj * r)
    wm = free_wave(j, "+", -z, r, delta0=delta0)
    return IOTA[:, None] * wm


@dataclasses.dataclass
class ExteriorBranch:
    j: int
    sign: str
    z: complex
    kj: complex
    r: np.ndarray
    uhat: np.ndarray            # (4, N) scaled samples e^{-i k_j r} Upsilon
    what: np.ndarray            # (4, N) scaled free wave
    fp_residual: float
    contraction_ratios: list
    deviation_xj: float         # ||Upsilon - w||_{X_j}
    tail_estimates: dict
    _splines: tuple = None

    def eval_scaled(self, r_pts):
        if self._splines is None:
            object.__setattr__(self, "_splines", tuple(
                CubicSpline(self.r, self.uhat[m]) for m in range(4)))
        r_pts = np.asarray(r_pts, dtype=float)
        if np.any(r_pts < self.r[0] - 1e-9) or np.any(r_pts > self.r[-1] + 1e-9):
            raise ExteriorError(
                f"evaluation outside [{self.r[0]}, {self.r[-1]}] for branch {self.j}")
        return np.stack([s(r_pts) for s in self._splines])

    def eval(self, r_pts):
        """Unscaled Upsilon_j(r) = e^{i k_j r} * scaled samples."""
        r_pts = np.asarray(r_pts, dtype=float)
        return self.eval_scaled(r_pts) * np.exp(1j * self.kj * r_pts)

    def psi_at(self, r_pts):
        """The 2-vector Weyl column (Upsilon_3, Upsilon_1) and its derivative
        (Upsilon_4, Upsilon_2) at the given radii."""
        u = self.eval(r_pts)
        val = np.stack([u[2], u[0]])
        dval = np.stack([u[3], u[1]])
        return val, dval


def _alpha_beta_hat(uhat, v1, v2, roots):
    z, k1, k2 = roots.z, roots.k1, roots.k2
    pref = 1.0 / (2j * z * (k2 * k2 - k1 * k1))
    alpha = pref * (-1j * k2**3 * v1 * uhat[0] + z * k2 * v2 * uhat[2])
    beta = pref * (1j * k1**3 * v1 * uhat[0] - z * k1 * v2 * uhat[2])
    return alpha, beta


def _gl_map_tail(f, r_cut, n=32):
    """int_{r_cut}^inf f(s) ds via s = r_cut/u, u in (0, 1], Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    s = r_cut / u
    return np.sum(wu * f(s) * r_cut / u**2)


def _tail_closure(term, j, roots, profile, r_cut):
    """Tail linear functional for an 'upper' term.

    Returns (T1, T3, err): int_{r_cut}^inf = T1 * Lam1 + T3 * Lam3, where
    Lam_m is the iterate's component-m amplitude ratio against the free
    wave at r_cut (the iterate beyond r_cut is the free wave renormalized
    by its slowly varying amplitude).
    """
    b, hb, d, _rng, coeff, sgn = term
    z, k1, k2 = roots.z, roots.k1, roots.k2
    kd = k1 if d == 1 else k2
    kj = getattr(roots, BRANCH_ROOT[j])
    sigma = 1.0 if hb == "plus" else -1.0
    mu = sigma * kd + kj
    if np.imag(mu) * r_cut > 40.0:
        return 0.0, 0.0, 0.0      # exponentially negligible
    pref = 1.0 / (2j * z * (k2 * k2 - k1 * k1))
    kjj = k1 if j in (1, 3) else k2
    hw = "plus" if j in (1, 2) else "minus"
    c1 = -1j * k2**3 if coeff == "alpha" else 1j * k1**3
    c3 = z * k2 if coeff == "alpha" else -z * k1

    def make_integrand(component):
        def integrand(s):
            v1, v2 = potentials_at(profile, s)
            hj, _ = hankel_h_scaled(hw, kjj * s)
            hc, _ = hankel_h_scaled(hb, kd * s)
            phase = hc * np.exp(1j * mu * (s - r_cut))
            if component == 1:
                return phase * pref * c1 * v1 * hj
            return phase * pref * c3 * v2 * (1j * kjj * kjj / z) * hj
        return integrand

    t1 = sgn * _gl_map_tail(make_integrand(1), r_cut, n=32)
    t3 = sgn * _gl_map_tail(make_integrand(3), r_cut, n=32)
    t1_ref = sgn * _gl_map_tail(make_integrand(1), r_cut, n=16)
    err = abs(t1 - t1_ref)
    return t1, t3, err


def lyapunov_perron(profile: VortexProfile, j, z, sign="+", eps_inf=0.07,
                    r_cut_max=240.0, step=0.04, fp_tol=1e-10, max_iter=30,
                    contraction_cap=0.5, delta0=0.01, eps0=0.22, r_cut=None):
    """Fixed-point construction of Upsilon_j^{sign}(r; z) on [r_inf, r_cut]."""
    if sign == "-":
        plus = lyapunov_perron(profile, j, -z, "+", eps_inf, r_cut_max, step,
                               fp_tol, max_iter, contraction_cap, delta0, eps0,
                               r_cut)
        return dataclasses.replace(
            plus, sign="-", z=z, uhat=IOTA[:, None] * plus.uhat,
            what=IOTA[:, None] * plus.what, _splines=None)
    z = complex(z)
    if np.imag(z) < 0:
        raise ExteriorError("plus-sign branch needs Im z >= 0 (use sign='-')")
    roots = k_roots(z, delta0=delta0)
    r_inf = eps_inf / abs(z)
    natural = max(eps0 / abs(z), r_inf + 45.0)
    r_cut = min(r_cut_max, natural if r_cut is None else max(r_cut, natural))
    n = int(np.ceil((r_cut - r_inf) / step)) + 1
    r = np.linspace(r_inf, r_cut, n)
    kj = getattr(roots, BRANCH_ROOT[j])
    v1, v2 = potentials_at(profile, r)
    what = _scaled_free_wave(j, roots, r)
    wj = x_weights(j, z)

    # precompute per-term kernel arrays; tails are linear functionals of the
    # iterate's amplitude ratio at r_cut, brought to the relative phase
    # convention by e^{i mu (r_cut - r_inf)}
    terms = []
    for term in LP_TERMS[j]:
        b, hb, d, rng, coeff, sgn = term
        kd = roots.k1 if d == 1 else roots.k2
        sigma = 1.0 if hb == "plus" else -1.0
        mu = sigma * kd + kj
        hc, _ = hankel_h_scaled(hb, kd * r)
        kernel = hc * np.exp(1j * mu * (r - r_inf))       # relative phase
        wb = _scaled_free_wave(b, roots, r)
        kb = getattr(roots, BRANCH_ROOT[b])
        outer = wb * np.exp(1j * (kb - kj) * (r - r_inf))[None, :]
        t1 = t3 = tail_err = 0.0
        if rng == "upper":
            t1, t3, tail_err = _tail_closure(term, j, roots, profile, r_cut)
            ph = np.exp(1j * mu * (r_cut - r_inf))
            t1, t3 = t1 * ph, t3 * ph
        terms.append((term, kernel, outer, mu, t1, t3, tail_err))

    h_lp = r[1] - r[0]

    def _increments(q):
        # interval integrals by the cubic through 4 neighboring points
        qm1, q0, q1, q2 = q[:-3], q[1:-2], q[2:-1], q[3:]
        inc = np.empty(n - 1, dtype=complex)
        inc[0] = h_lp * (9 * q[0] + 19 * q[1] - 5 * q[2] + q[3]) / 24.0
        inc[1:-1] = h_lp * (-qm1 + 13 * q0 + 13 * q1 - q2) / 24.0
        inc[-1] = h_lp * (9 * q[-1] + 19 * q[-2] - 5 * q[-3] + q[-4]) / 24.0
        return inc

    def cum4(q):
        """4th-order cumulative from r_inf on the uniform grid."""
        c = np.zeros(n, dtype=complex)
        c[1:] = np.cumsum(_increments(q))
        return c

    def cum4_right(q):
        """Integral from r to r_cut, summed from the right so decaying
        integrands keep full relative precision."""
        c = np.zeros(n, dtype=complex)
        c[:-1] = np.cumsum(_increments(q)[::-1])[::-1]
        return c

    uhat = what.copy()
    ratios = []
    prev_delta = None
    fp_res = np.inf
    for _ in range(max_iter):
        alpha, beta = _alpha_beta_hat(uhat, v1, v2, roots)
        lam1 = uhat[0, -1] / what[0, -1]
        lam3 = uhat[2, -1] / what[2, -1]
        new = what.copy()
        for (term, kernel, outer, mu, t1, t3, tail_err) in terms:
            b, hb, d, rng, coeff, sgn = term
            chat = alpha if coeff == "alpha" else beta
            q = kernel * chat
            if rng == "lower":
                integral = cum4(q)
            else:
                integral = cum4_right(q) + (t1 * lam1 + t3 * lam3)
            new += (sgn * integral)[None, :] * outer
        delta = np.max(np.abs(new - uhat) * wj[:, None])
        scale = np.max(np.abs(new) * wj[:, None])
        if prev_delta is not None and prev_delta > 0:
            ratios.append(delta / prev_delta)
            if len(ratios) >= 2 and ratios[-1] > contraction_cap and delta > 10 * fp_tol * scale:
                raise ExteriorError(
                    f"LP iteration not contracting for j={j}, z={z}: ratio {ratios[-1]:.3f}")
        prev_delta = delta
        uhat = new
        fp_res = delta / max(scale, 1e-300)
        if fp_res < fp_tol:
            break
    else:
        raise ExteriorError(f"LP fixed point did not converge for j={j}, z={z}")

    dev = np.max(np.abs(uhat - what) * wj[:, None])
    tails = {f"term{i}": t[6] for i, t in enumerate(terms)}
    return ExteriorBranch(j=j, sign="+", z=z, kj=kj, r=r, uhat=uhat, what=what,
                          fp_residual=fp_res, contraction_ratios=ratios,
                          deviation_xj=dev, tail_estimates=tails)


@dataclasses.dataclass
class WeylMatrix:
    sign: str
    z: complex
    branches: dict               # {1: ExteriorBranch, 2: ExteriorBranch}

    def psi(self, j, r_pts):
        return self.branches[j].psi_at(r_pts)

    def matrix_wronskian_self(self, r_pt):
        v1, d1 = self.psi(1, np.array([r_pt]))
        v2, d2 = self.psi(2, np.array([r_pt]))
        def w(a, da, b, db):
            return (a[0] * db[0] - da[0] * b[0]) - (a[1] * db[1] - da[1] * b[1])
        return np.array([[w(v1, d1, v1, d1)[0], w(v1, d1, v2, d2)[0]],
                         [w(v2, d2, v1, d1)[0], w(v2, d2, v2, d2)[0]]])


def weyl_matrix(profile: VortexProfile, z, sign="+", **kw) -> WeylMatrix:
    """Weyl-Titchmarsh matrix: columns psi_1, psi_2 = (Upsilon_{j,3}, Upsilon_{j,1})."""
    branches = {j: lyapunov_perron(profile, j, z, sign=sign, **kw) for j in (1, 2)}
    return WeylMatrix(sign=sign, z=z, branches=branches)
