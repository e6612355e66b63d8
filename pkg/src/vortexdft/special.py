"""Complex-argument special functions.

* ``k_roots``: the four roots of P(k, z) = k^4 + 2 k^2 - z^2 on the
  small-|z| sheet, built from numerically stable closed forms.
* ``hankel_h``: the modified Hankel pair h+-(zeta) normalized so that
  h+(zeta) ~ e^{i zeta} and h-(zeta) ~ e^{-i zeta} in the upper half-plane,
  with h-(x + i0) ~ e^{-ix} + 2i e^{ix} on the negative real axis.
* ``hankel_contour``: independent Laplace-transform evaluation of the same
  pair by adaptive quadrature on rotated rays, including the split-contour
  form that isolates the Stokes term on the negative real axis.
* ``free_bessel_pq``: the order-one pair sqrt(zeta) H1^(1), sqrt(zeta) J1
  used by the free resolvent.

All functions accept scalars or arrays; ``Im zeta >= 0`` throughout, with
negative real arguments interpreted as limits from above.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy import integrate, special

EULER_GAMMA = 0.5772156649015328606

# normalizations h+- = sqrt(pi/2) e^{+-i pi/4} sqrt(zeta) H0^(1,2)(zeta)
_CP = np.sqrt(np.pi / 2) * np.exp(1j * np.pi / 4)
_CM = np.sqrt(np.pi / 2) * np.exp(-1j * np.pi / 4)

# small-zeta log-series coefficients  h+- = c1 sqrt(z) log z + c2 sqrt(z) + ...
C1_PLUS = 1j * np.sqrt(2 / np.pi) * np.exp(1j * np.pi / 4)
C1_MINUS = -1j * np.sqrt(2 / np.pi) * np.exp(-1j * np.pi / 4)
C2_PLUS = _CP * (1 + 2j / np.pi * (EULER_GAMMA - np.log(2)))
C2_MINUS = _CM * (1 - 2j / np.pi * (EULER_GAMMA - np.log(2)))

SERIES_CUT = 4.0         # series for |zeta| <= cut, amos beyond
OVERLAP_BAND = 0.10      # relative width of the dual-evaluation band
QUAD_LIMIT = 2 ** 14


class SpecialFunctionError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class RootQuadruple:
    z: complex
    k1: complex
    k2: complex
    k3: complex
    k4: complex

    @property
    def roots(self):
        return (self.k1, self.k2, self.k3, self.k4)


@dataclasses.dataclass(frozen=True)
class HankelValue:
    zeta: complex
    branch: str
    value: complex
    derivative: complex
    error_estimate: float = 0.0
    loss_flag: bool = False


def k_roots(z, delta0=0.01, max_abs=None):
    """Roots k1..k4 of k^4 + 2k^2 - z^2 = 0 on the principal small-z sheet.

    Uses k1 = z / sqrt(1 + sqrt(1 + z^2)) (odd, exact k1*k2 = i z) and
    k2 = i sqrt(1 + sqrt(1 + z^2)) (even); k3 = -k1, k4 = -k2.  Rejects
    z = 0 and |z| beyond the validated disk (override ``max_abs`` for the
    free-operator probes which stay on the same sheet up to |z| < 1/2).
    """
    z = complex(z)
    cap = delta0 if max_abs is None else max_abs
    if z == 0:
        raise SpecialFunctionError("z = 0: degenerate roots")
    if abs(z) > cap * (1 + 1e-12):
        raise SpecialFunctionError(f"|z|={abs(z)} outside validated disk (cap {cap})")
    s = np.sqrt(1.0 + z * z)       # principal; |z| < 1/2 keeps 1+z^2 off the cut
    t = np.sqrt(1.0 + s)
    k1 = z / t
    k2 = 1j * t
    return RootQuadruple(z=z, k1=complex(k1), k2=complex(k2),
                         k3=complex(-k1), k4=complex(-k2))


def _upper_limit(zeta):
    """Force Im == -0.0 to +0.0 so branch cuts are taken from above."""
    zeta = np.asarray(zeta, dtype=complex)
    im = np.imag(zeta)
    fix = (im == 0.0) & np.signbit(im)
    if np.any(fix):
        zeta = np.where(fix, np.real(zeta) + 0.0j, zeta)
    return zeta


def _bessel01_series(zeta, n_terms=30):
    """J0, Y0, J1, Y1 by the standard ascending log-series (complex zeta).

    Accurate to ~1e-13 for |zeta| <= 5; the log takes the principal branch,
    which continues the upper half-plane values onto the negative axis.
    """
    z = np.asarray(zeta, dtype=complex)
    q = -(z * z) / 4.0
    j0 = np.ones_like(z)
    j1s = np.ones_like(z)      # J1 = (z/2) * j1s
    s0 = np.zeros_like(z)      # sum_{k>=1} H_k q^k / (k!)^2
    s1 = np.ones_like(z)       # sum_{k>=0} (2 H_k + 1/(k+1)) q^k / (k! (k+1)!)
    t0 = np.ones_like(z)
    t1 = np.ones_like(z)
    hk = 0.0
    for k in range(1, n_terms):
        t0 = t0 * q / (k * k)
        t1 = t1 * q / (k * (k + 1))
        hk += 1.0 / k
        j0 = j0 + t0
        j1s = j1s + t1
        s0 = s0 + hk * t0
        s1 = s1 + (2 * hk + 1.0 / (k + 1)) * t1
    lg = np.log(z / 2) + EULER_GAMMA
    y0 = (2 / np.pi) * (lg * j0 - s0)
    j1 = (z / 2) * j1s
    y1 = (2 / np.pi) * (lg * j1 - 1.0 / z - (z / 4) * s1)
    return j0, y0, j1, y1


def _h_pair_from_H(zeta, h0, h1, branch):
    """Assemble (value, derivative) of h+- from H0, H1 of the same kind."""
    c = _CP if branch == "plus" else _CM
    sq = np.sqrt(zeta)
    val = c * sq * h0
    dval = c * (h0 / (2 * sq) - sq * h1)     # (sqrt(z) H0)' with H0' = -H1
    return val, dval


def hankel_h_values(branch, zeta, series_cut=SERIES_CUT):
    """Array evaluation of h+- and d/dzeta h+-; returns (val, dval, overlap_err).

    Series for |zeta| <= cut, amos for |zeta| > cut; in the 10% band around
    the cut both are computed and the largest relative discrepancy returned.
    """
    if branch not in ("plus", "minus"):
        raise SpecialFunctionError(f"unknown branch {branch!r}")
    zeta = _upper_limit(zeta)
    if np.any(zeta == 0):
        raise SpecialFunctionError("zeta = 0: logarithmic singularity")
    if np.any(np.imag(zeta) < 0):
        raise SpecialFunctionError("hankel_h requires Im zeta >= 0")
    az = np.abs(zeta)
    val = np.empty(zeta.shape, dtype=complex)
    dval = np.empty(zeta.shape, dtype=complex)

    small = az <= series_cut
    if np.any(small):
        j0, y0, j1, y1 = _bessel01_series(zeta[small])
        if branch == "plus":
            h0, h1 = j0 + 1j * y0, j1 + 1j * y1
        else:
            h0, h1 = j0 - 1j * y0, j1 - 1j * y1
        val[small], dval[small] = _h_pair_from_H(zeta[small], h0, h1, branch)
    if np.any(~small):
        zb = zeta[~small]
        if branch == "plus":
            h0, h1 = special.hankel1(0, zb), special.hankel1(1, zb)
        else:
            h0, h1 = special.hankel2(0, zb), special.hankel2(1, zb)
        val[~small], dval[~small] = _h_pair_from_H(zb, h0, h1, branch)

    overlap = (az > series_cut * (1 - OVERLAP_BAND)) & (az < series_cut * (1 + OVERLAP_BAND))
    overlap_err = 0.0
    if np.any(overlap):
        zo = zeta[overlap]
        j0, y0, j1, y1 = _bessel01_series(zo)
        sgn = 1j if branch == "plus" else -1j
        v_ser, _ = _h_pair_from_H(zo, j0 + sgn * y0, j1 + sgn * y1, branch)
        if branch == "plus":
            v_amos, _ = _h_pair_from_H(zo, special.hankel1(0, zo), special.hankel1(1, zo), branch)
        else:
            v_amos, _ = _h_pair_from_H(zo, special.hankel2(0, zo), special.hankel2(1, zo), branch)
        overlap_err = float(np.max(np.abs(v_ser - v_amos) / np.abs(v_amos)))
    return val, dval, overlap_err


def hankel_h_scaled(branch, zeta, series_cut=SERIES_CUT):
    """(e^{-i zeta} h+, e^{-i zeta} h+') or (e^{+i zeta} h-, e^{+i zeta} h-').

    The scaled pair stays O(1)-bounded along rays with Im zeta > 0, which
    keeps the exterior fixed-point arithmetic inside double range.
    """
    if branch not in ("plus", "minus"):
        raise SpecialFunctionError(f"unknown branch {branch!r}")
    zeta = _upper_limit(zeta)
    if np.any(zeta == 0):
        raise SpecialFunctionError("zeta = 0")
    if np.any(np.imag(zeta) < 0):
        raise SpecialFunctionError("Im zeta >= 0 required")
    az = np.abs(zeta)
    val = np.empty(zeta.shape, dtype=complex)
    dval = np.empty(zeta.shape, dtype=complex)
    small = az <= series_cut
    sgn = 1.0 if branch == "plus" else -1.0
    if np.any(small):
        zs = zeta[small]
        v, dv, _ = hankel_h_values(branch, zs, series_cut=np.inf)
        ph = np.exp(-1j * sgn * zs)
        val[small], dval[small] = v * ph, dv * ph
    if np.any(~small):
        zb = zeta[~small]
        if branch == "plus":
            h0, h1 = special.hankel1e(0, zb), special.hankel1e(1, zb)
        else:
            h0, h1 = special.hankel2e(0, zb), special.hankel2e(1, zb)
        val[~small], dval[~small] = _h_pair_from_H(zb, h0, h1, branch)
    return val, dval


def hankel_h(branch, zeta, series_cut=SERIES_CUT, loss_tol=1e-9):
    """Scalar h+-(zeta) with derivative; flags crossover loss of accuracy."""
    z = np.asarray([complex(zeta)])
    val, dval, err = hankel_h_values(branch, z, series_cut=series_cut)
    return HankelValue(zeta=complex(zeta), branch=branch, value=complex(val[0]),
                       derivative=complex(dval[0]), error_estimate=err,
                       loss_flag=bool(err > loss_tol))


def _quad_complex(f, a, b, tol=1e-12):
    re, re_err = integrate.quad(lambda u: f(u).real, a, b, epsabs=tol, epsrel=tol,
                                limit=QUAD_LIMIT)
    im, im_err = integrate.quad(lambda u: f(u).imag, a, b, epsabs=tol, epsrel=tol,
                                limit=QUAD_LIMIT)
    return re + 1j * im, re_err + im_err


def hankel_contour(branch, zeta, tol=1e-12):
    """Laplace-transform evaluation of h+- by rotated-ray quadrature.

    For the minus branch on (or near) the negative real axis the contour is
    split into the rotated ray plus the loop around the second branch point,
    which carries the Stokes term 2i e^{i zeta}.
    """
    z = complex(_upper_limit(zeta))
    if z == 0:
        raise SpecialFunctionError("zeta = 0")
    if np.imag(z) < 0:
        raise SpecialFunctionError("hankel_contour requires Im zeta >= 0")

    if branch == "plus":
        # h+ = sqrt(2/pi) e^{-i pi/4} e^{iz} Int_0^inf e^{-t} t^{-1/2} (t/z - 2i)^{-1/2} dt
        w0 = np.sqrt(2 / np.pi) * np.exp(-1j * np.pi / 4)

        def f_val(u):   # t = u^2
            return 2 * np.exp(-u * u) / np.sqrt(u * u / z - 2j)

        def f_der(u):
            t = u * u
            return 2 * np.exp(-t) * 0.5 * (t / z - 2j) ** (-1.5) * t / (z * z)

        upper = np.sqrt(-np.log(max(tol, 1e-300))) + 2.0
        I, e1 = _quad_complex(f_val, 0.0, upper, tol)
        Ip, e2 = _quad_complex(f_der, 0.0, upper, tol)
        val = w0 * np.exp(1j * z) * I
        dval = w0 * np.exp(1j * z) * (1j * I + Ip)
        return HankelValue(zeta=z, branch="plus", value=val, derivative=dval,
                           error_estimate=e1 + e2)

    if branch != "minus":
        raise SpecialFunctionError(f"unknown branch {branch!r}")

    w0 = np.sqrt(2 / np.pi) * np.exp(1j * np.pi / 4)
    arg = np.angle(z)
    if arg < np.pi - 0.35:
        # rotated ray t = e^{i beta} u, beta between arg(-2iz) and pi/2
        beta = min(max(0.0, arg - np.pi / 2 + 0.35), np.pi / 2 - 0.15)
        ph = np.exp(1j * beta)
        sph = np.exp(0.5j * beta)

        def f_val(u):   # t = ph u^2, dt / sqrt(t) = 2 sph du
            return 2 * sph * np.exp(-ph * u * u) / np.sqrt(2j + ph * u * u / z)

        def f_der(u):
            t = ph * u * u
            return sph * ph * u * u * np.exp(-t) * (2j + t / z) ** (-1.5) / (z * z)

        upper = np.sqrt(-np.log(max(tol, 1e-300)) / np.cos(beta)) + 2.0
        I, e1 = _quad_complex(f_val, 0.0, upper, tol)
        Ip, e2 = _quad_complex(f_der, 0.0, upper, tol)
        val = w0 * np.exp(-1j * z) * I
        dval = w0 * np.exp(-1j * z) * (-1j * I + Ip)
        return HankelValue(zeta=z, branch="minus", value=val, derivative=dval,
                           error_estimate=e1 + e2)

    # split gamma/Gamma contours for Re z < 0 near the axis (the Stokes region);
    # derivative via the exact relation h-' from W[h-,h+] = 2i.
    x = -np.real(z)
    if x <= 0:
        raise SpecialFunctionError("split contour expects Re zeta < 0")
    sq = np.sqrt(z)

    def f1(u):          # gamma part: s = u^2 along the negative real p-axis
        s = u * u
        return 2 * np.exp(s * z) / np.sqrt(s - 2j)

    def f2(u):          # Gamma loop rotated to s = -i u^2
        s = -1j * u * u
        return -2j * np.exp(s * z * 1j) / np.sqrt((s + 2) * (-1j))

    upper = np.sqrt(-np.log(max(tol, 1e-300)) / x) + 2.0
    I1, e1 = _quad_complex(f1, 0.0, upper, tol)
    I2, e2 = _quad_complex(f2, 0.0, upper, tol)
    part1 = -w0 * np.exp(-1j * z) * sq * I1
    part2 = 2 * w0 * np.exp(1j * z) * sq * I2
    val = part1 + part2
    # h-' = (W - h- h+')/(-h+) with W[h-,h+] = h- h+' - h-' h+ = 2i
    hp = hankel_contour("plus", z, tol)
    dval = (val * hp.derivative - 2j) / hp.value
    return HankelValue(zeta=z, branch="minus", value=val, derivative=dval,
                       error_estimate=e1 + e2, loss_flag=False)


def stokes_split(zeta, tol=1e-12):
    """The gamma/Gamma decomposition of h- at negative real zeta.

    Returns (recessive_part, stokes_part); their sum is h-(zeta + i0) and
    stokes_part / e^{i zeta} -> 2i as zeta -> -infinity.
    """
    z = complex(_upper_limit(zeta))
    if np.real(z) >= 0 or np.imag(z) != 0:
        raise SpecialFunctionError("stokes_split expects negative real zeta")
    w0 = np.sqrt(2 / np.pi) * np.exp(1j * np.pi / 4)
    x = -np.real(z)
    sq = np.sqrt(z)

    def f1(u):
        s = u * u
        return 2 * np.exp(-s * x) / np.sqrt(s - 2j)

    def f2(u):
        s = -1j * u * u
        return -2j * np.exp(1j * s * z) / np.sqrt((s + 2) * (-1j))

    upper = np.sqrt(-np.log(max(tol, 1e-300)) / x) + 2.0
    I1, _ = _quad_complex(f1, 0.0, upper, tol)
    I2, _ = _quad_complex(f2, 0.0, upper, tol)
    return -w0 * np.exp(-1j * z) * sq * I1, 2 * w0 * np.exp(1j * z) * sq * I2


def free_bessel_pq(zeta):
    """Order-one pair: p~+(zeta) = sqrt(zeta) H1^(1), q~+(zeta) = sqrt(zeta) J1.

    Returns (p, dp, q, dq); both solve -u'' + 3/(4 zeta^2) u = u.
    """
    z = _upper_limit(zeta)
    if np.any(z == 0):
        raise SpecialFunctionError("zeta = 0")
    sq = np.sqrt(z)
    h1 = special.hankel1(1, z)
    h0 = special.hankel1(0, z)
    j1 = special.jv(1, z)
    j0 = special.jv(0, z)
    p = sq * h1
    q = sq * j1
    # (sqrt(z) C1)' = sqrt(z) C0 - C1/(2 sqrt(z)) using C1' = C0 - C1/z
    dp = sq * h0 - h1 / (2 * sq)
    dq = sq * j0 - j1 / (2 * sq)
    return p, dp, q, dq
