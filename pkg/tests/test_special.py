import numpy as np
import pytest

from vortexdft.special import (
    C1_PLUS,
    C2_PLUS,
    SpecialFunctionError,
    free_bessel_pq,
    hankel_contour,
    hankel_h,
    hankel_h_values,
    k_roots,
    stokes_split,
)

RNG = np.random.default_rng(2024)


def quartic_roots_oracle(z):
    """Independent root set of k^4 + 2k^2 - z^2 via the companion matrix."""
    return np.roots([1.0, 0.0, 2.0, 0.0, -z * z])


class TestKRoots:
    def test_pure_imaginary_closed_form(self):
        # k1(iy) = i sqrt(1 - sqrt(1 - y^2))
        y = 0.1
        q = k_roots(0.1j, delta0=0.2)
        expected = 1j * np.sqrt(1 - np.sqrt(1 - y**2))
        assert abs(q.k1 - expected) < 1e-14

    def test_product_identity(self):
        for z in [0.003 + 0.001j, 0.01j, -0.008 + 0.002j, 0.009]:
            q = k_roots(z)
            assert abs(q.k1 * q.k2 - 1j * z) < 1e-14 * abs(z)

    def test_k2_limit(self):
        # k2 -> i sqrt(2) with error O(z^2) along the reals
        errs = []
        for x in [1e-2, 1e-3]:
            q = k_roots(x)
            errs.append(abs(q.k2 - 1j * np.sqrt(2)))
        assert errs[0] < 1e-4
        assert errs[1] / errs[0] == pytest.approx(1e-2, rel=0.2)

    def test_against_quartic_solver(self):
        z = 0.05 + 0.01j
        q = k_roots(z, delta0=0.1)
        oracle = quartic_roots_oracle(z)
        for k in q.roots:
            assert np.min(np.abs(oracle - k)) < 1e-12

    def test_polynomial_residual_on_disk(self):
        # |z|^2-normalized residual for the oscillatory pair; the recessive
        # pair has |k|^4 ~ 4 so its residual floor is machine-relative to that
        zs = 0.01 * np.sqrt(RNG.uniform(0.01, 1, 100)) * np.exp(2j * np.pi * RNG.uniform(size=100))
        worst_osc, worst_rec = 0.0, 0.0
        for z in zs:
            q = k_roots(z)
            for k in (q.k1, q.k3):
                worst_osc = max(worst_osc, abs(k**4 + 2 * k**2 - z * z) / abs(z) ** 2)
            for k in (q.k2, q.k4):
                worst_rec = max(worst_rec, abs(k**4 + 2 * k**2 - z * z) / abs(k) ** 4)
        assert worst_osc < 1e-10
        assert worst_rec < 1e-12

    def test_parity_and_negation(self):
        for lam in [1e-3, 4e-3, 9e-3]:
            qp, qm = k_roots(lam), k_roots(-lam)
            assert qm.k1 == -qp.k1
            assert qm.k2 == qp.k2
            assert qp.k3 == -qp.k1 and qp.k4 == -qp.k2

    def test_imaginary_part_signs(self):
        for z in [0.005 + 0.002j, 0.001j, -0.004 + 0.003j]:
            q = k_roots(z)
            assert q.k1.imag > 0 and q.k2.imag > 0
        for z in [0.005 - 0.002j, -0.001j]:
            q = k_roots(z)
            assert q.k3.imag > 0 and q.k2.imag > 0

    def test_rejections(self):
        with pytest.raises(SpecialFunctionError):
            k_roots(0.0)
        with pytest.raises(SpecialFunctionError):
            k_roots(0.2, delta0=0.01)


def wronskian_h(zeta):
    hp = hankel_h("plus", zeta)
    hm = hankel_h("minus", zeta)
    return hm.value * hp.derivative - hm.derivative * hp.value


class TestHankelH:
    def test_wronskian_constancy(self):
        pts = [0.3 + 0.2j, 1.7, 4.0 + 0.1j, 12j, -7.0, -120.0, 35 + 5j, 3.9, 4.1]
        for zeta in pts:
            assert abs(wronskian_h(zeta) - 2j) < 1e-8

    def test_small_zeta_log_series(self):
        zeta = 1e-3
        hp = hankel_h("plus", zeta)
        lead = C1_PLUS * np.sqrt(zeta) * np.log(zeta) + C2_PLUS * np.sqrt(zeta)
        assert abs(hp.value - lead) / abs(lead) < 1e-6

    def test_large_zeta_asymptotics(self):
        d100 = abs(np.exp(-1j * 100) * hankel_h("plus", 100.0).value - 1)
        d400 = abs(np.exp(-1j * 400) * hankel_h("plus", 400.0).value - 1)
        assert d100 < 1e-2
        assert d400 < d100 / 3  # decreasing like 1/|zeta|

    def test_ode_residual_finite_differences(self):
        # h'' + (1 + 1/(4 z^2)) h = 0 on rays in the upper half-plane
        h = 1e-3
        for phi in [0.0, 0.4, 1.1, 2.6]:
            ray = np.exp(1j * phi)
            for rho in np.geomspace(0.5, 50, 12):
                z0 = rho * ray
                zs = z0 + h * np.array([-2, -1, 0, 1, 2])
                for branch in ("plus", "minus"):
                    v, _, _ = hankel_h_values(branch, zs)
                    d2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)
                    res = d2 + (1 + 1 / (4 * z0 * z0)) * v[2]
                    assert abs(res) / abs(v[2]) < 1e-6

    def test_cross_check_against_contour(self):
        # 50 random points in the closed upper half-plane, 0.1 <= |zeta| <= 50
        n = 50
        rho = np.exp(RNG.uniform(np.log(0.1), np.log(50), n))
        phi = RNG.uniform(0.0, np.pi, n)
        zs = rho * np.exp(1j * phi)
        for zeta in zs:
            for branch in ("plus", "minus"):
                a = hankel_h(branch, zeta)
                b = hankel_contour(branch, zeta)
                assert abs(a.value - b.value) / abs(a.value) < 1e-8, (branch, zeta)

    def test_stokes_fit(self):
        xs = np.linspace(-200.0, -100.0, 400)
        vals, _, _ = hankel_h_values("minus", xs.astype(complex))
        design = np.stack([np.exp(-1j * xs), np.exp(1j * xs)], axis=1)
        coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
        assert abs(coef[0] - 1.0) < 1e-2
        assert abs(coef[1] - 2j) < 1e-2

    def test_crossover_overlap_logged(self):
        zs = np.linspace(3.7, 4.3, 20).astype(complex)
        _, _, err = hankel_h_values("plus", zs)
        assert 0 < err < 1e-9

    def test_rejects_origin_and_lower_half_plane(self):
        with pytest.raises(SpecialFunctionError):
            hankel_h("plus", 0.0)
        with pytest.raises(SpecialFunctionError):
            hankel_h("minus", 1.0 - 0.5j)


class TestHankelContour:
    def test_minus_branch_leading_order(self):
        hv = hankel_contour("minus", 10.0)
        assert abs(np.exp(1j * 10.0) * hv.value - 1) < 3e-2

    def test_stokes_coefficient_from_split(self):
        x = 150.0
        rec, stokes = stokes_split(-x)
        coef = stokes / np.exp(1j * (-x))
        assert abs(coef - 2j) / 2 < 1e-3
        # and the two parts reassemble h-
        direct = hankel_h("minus", -x)
        assert abs((rec + stokes) - direct.value) / abs(direct.value) < 1e-9

    def test_pure_imaginary_consistency(self):
        hv = hankel_contour("minus", 5j)
        ref = hankel_h("minus", 5j)
        assert abs(hv.value - ref.value) / abs(ref.value) < 1e-8
        assert abs(hv.derivative - ref.derivative) / abs(ref.derivative) < 1e-7


class TestFreeBesselPQ:
    @staticmethod
    def _wronskian(ki, kj, r):
        p, dp, _, _ = free_bessel_pq(ki * r)
        _, _, q, dq = free_bessel_pq(kj * r)
        return p * kj * dq - ki * dp * q

    def test_wronskian_value(self):
        # W[p(k_i r), q(k_j r)] = 2 c1 c2 k_i^{-1/2} k_j^{3/2} with 2 c1 c2 = -2i/pi;
        # exactly constant in r for i = j, the r -> 0 limit otherwise
        q4 = k_roots(0.004 + 0.002j)
        for k in (q4.k1, q4.k2):
            expected = (-2j / np.pi) * k
            for r in (0.7, 3.0, 11.0):
                w = self._wronskian(k, k, r)
                assert abs(w - expected) / abs(expected) < 1e-10
        for ki, kj in [(q4.k1, q4.k2), (q4.k2, q4.k1)]:
            expected = (-2j / np.pi) * ki ** (-0.5) * kj ** 1.5
            w = self._wronskian(ki, kj, 1e-3)
            assert abs(w - expected) / abs(expected) < 1e-4

    def test_small_zeta_power(self):
        z1, z2 = 1e-4, 2e-4
        _, _, q1, _ = free_bessel_pq(z1)
        _, _, q2, _ = free_bessel_pq(z2)
        assert abs(q2 / q1 - 2**1.5) < 1e-6

    def test_large_zeta_outgoing(self):
        # p~+(zeta) ~ C1 e^{i zeta} on an upper ray
        z1 = 30 * np.exp(0.3j)
        z2 = 60 * np.exp(0.3j)
        p1, _, _, _ = free_bessel_pq(z1)
        p2, _, _, _ = free_bessel_pq(z2)
        c1 = p1 * np.exp(-1j * z1)
        c2 = p2 * np.exp(-1j * z2)
        assert abs(c1 - c2) / abs(c1) < 2e-2

    def test_ode_residual(self):
        h = 1e-4
        for z0 in [0.8 + 0.3j, 6.0, 2j]:
            zs = z0 + h * np.array([-1, 0, 1])
            p = [free_bessel_pq(z)[0] for z in zs]
            d2 = (p[0] - 2 * p[1] + p[2]) / h**2
            res = -d2 + (3 / (4 * z0 * z0)) * p[1] - p[1]
            assert abs(res) / abs(p[1]) < 1e-6
