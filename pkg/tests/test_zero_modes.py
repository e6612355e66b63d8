import numpy as np
import pytest

from vortexdft.zero_modes import (
    GreenOperator,
    build_modes,
    green_apply,
    l2_inverse_apply,
    wronskian_samples,
)

SQ2 = np.sqrt(2.0)


@pytest.fixture(scope="module")
def modes(profile):
    return build_modes(profile)


def fd_first_derivative(r, f, sel, geometric_end=0.25):
    """Independent 5-point derivative of sampled f at selected indices.

    Uses log-r abscissas in the geometric grid section, where the solutions
    are fractional powers (smooth in log r), linear abscissas beyond.
    """
    out = np.empty(sel.size, dtype=complex)
    for j, i in enumerate(sel):
        lo = min(max(i - 3, 0), r.size - 7)
        logspace = r[i] < geometric_end
        xs = (np.log(r[lo:lo + 7] / r[i]) if logspace else r[lo:lo + 7] - r[i])
        scale = np.abs(xs).max()
        c = np.polyfit(xs / scale, f[lo:lo + 7], 6)
        out[j] = c[-2] / scale / (r[i] if logspace else 1.0)
    return out


def scalar_residual(profile, sol, which, sel):
    """Relative residual of L_j u = 0 using the stored derivative samples."""
    r = profile.grid.r
    w = 3 / (4 * r**2) + (profile.rho**2 - 1 if which == 1 else 3 * profile.rho**2 - 1)
    d2 = fd_first_derivative(r, sol.dvalues.astype(complex), sel)
    res = -d2 + w[sel] * sol.values[sel]
    scale = np.abs(d2) + np.abs(w[sel] * sol.values[sel]) + 1e-300
    return np.abs(res) / scale


class TestFundamentalSystems:
    def test_f1_residual_exact_mode(self, profile, modes):
        sel = np.arange(50, profile.grid.n - 5, 997)
        assert scalar_residual(profile, modes.f1, 1, sel).max() < 1e-8

    def test_f2_residual(self, profile, modes):
        sel = np.arange(50, profile.grid.n - 5, 997)
        assert scalar_residual(profile, modes.f2, 1, sel).max() < 1e-7

    def test_g_residuals(self, profile, modes):
        sel = np.arange(50, profile.grid.n - 5, 997)
        assert scalar_residual(profile, modes.g1, 2, sel).max() < 1e-7
        assert scalar_residual(profile, modes.g2, 2, sel).max() < 1e-7

    def test_f1_far_field(self, profile, modes):
        grid = profile.grid
        i = grid.index_at(60.0)
        r = grid.r[i]
        assert abs(modes.f1.values[i] / np.sqrt(r) - (1 - 1 / (2 * r**2))) < 1e-6

    def test_f1_small_r_slope(self, profile, modes):
        grid = profile.grid
        i = grid.index_at(5e-4)
        r = grid.r[i]
        assert abs(modes.f1.values[i] / r**1.5 - profile.slope_a) < 1e-4

    def test_f2_log_growth(self, profile, modes):
        grid = profile.grid
        i = grid.index_at(300.0)
        r = grid.r[i]
        assert abs(modes.f2.values[i] / (np.sqrt(r) * np.log(r)) - 1) < 1e-2

    def test_endpoint_exponents(self, profile, modes):
        grid = profile.grid
        sel = (grid.r >= 1e-4) & (grid.r <= 1e-2)
        lr = np.log(grid.r[sel])
        for sol, expected in ((modes.f1, 1.5), (modes.f2, -0.5),
                              (modes.g1, 1.5), (modes.g2, -0.5)):
            slope = np.polyfit(lr, np.log(np.abs(sol.values[sel])), 1)[0]
            assert abs(slope - expected) < 0.02, sol.name

    def test_g2_decay_g1_growth(self, profile, modes):
        grid = profile.grid
        sel = (grid.r >= 10) & (grid.r <= 60)
        r = grid.r[sel]
        decay = np.log(np.abs(modes.g2.values[sel])) + SQ2 * r
        growth = np.log(np.abs(modes.g1.values[sel])) - SQ2 * r
        assert np.ptp(decay) < 0.2 and np.abs(decay).max() < 5
        assert np.ptp(growth) < 0.2 and np.abs(growth).max() < 5

    def test_wronskian_constancy(self, profile, modes):
        grid = profile.grid
        idx = np.array([grid.index_at(x) for x in (0.001, 0.1, 1.0, 8.0, 50.0, 200.0)])
        wf = wronskian_samples(modes.f1, modes.f2, idx)
        wg = wronskian_samples(modes.g1, modes.g2, idx)
        assert np.abs(wf - 1).max() < 1e-7
        assert np.abs(wg - 1).max() < 1e-7
        # spec pin: W[f1,f2] at r = 50 equals its r = 1 value to 1e-8
        w1 = wronskian_samples(modes.f1, modes.f2, np.array([grid.index_at(1.0)]))
        w50 = wronskian_samples(modes.f1, modes.f2, np.array([grid.index_at(50.0)]))
        assert abs(w1[0] - w50[0]) < 1e-8


def bump(grid, center, width):
    # Gaussian, hard-zeroed where it underflows: numerically compactly
    # supported and smooth at the probe's resolution
    x = (grid.r - center) / width
    out = np.exp(-np.clip(x**2, None, 700.0))
    out[x**2 > 600.0] = 0.0
    return out


class TestGreenOperators:
    def test_g1_inverse_property(self, profile, modes, rng):
        grid = profile.grid
        op = GreenOperator("G1", modes)
        w1 = 3 / (4 * grid.r**2) + profile.rho**2 - 1
        for _ in range(5):
            c = rng.uniform(3, 15)
            phi = bump(grid, c, rng.uniform(1, 2)).astype(complex)
            vals, dvals = green_apply(op, phi)
            sel = np.flatnonzero(np.abs(phi) > 0)[::5]
            d2 = fd_first_derivative(grid.r, dvals, sel)
            res = 1j * (-d2 + w1[sel] * vals[sel]) - phi[sel]
            assert np.abs(res).max() < 1e-6 * np.abs(phi).max()

    def test_g2_inverse_property(self, profile, modes, rng):
        grid = profile.grid
        op = GreenOperator("G2_truncated", modes, r0=100.0)
        w2 = 3 / (4 * grid.r**2) + 3 * profile.rho**2 - 1
        for _ in range(5):
            c = rng.uniform(3, 15)
            phi = bump(grid, c, rng.uniform(1, 2)).astype(complex)
            vals, dvals = green_apply(op, phi)
            sel = np.flatnonzero(np.abs(phi) > 0)[::5]
            d2 = fd_first_derivative(grid.r, dvals, sel)
            res = -1j * (-d2 + w2[sel] * vals[sel]) - phi[sel]
            assert np.abs(res).max() < 1e-6 * np.abs(phi).max()

    def test_dagger_and_tilde_inverse(self, profile, modes):
        grid = profile.grid
        w1 = 3 / (4 * grid.r**2) + profile.rho**2 - 1
        phi = (modes.g2.values * np.sqrt(grid.r)).astype(complex)  # decaying test input
        for kind in ("G1_dagger", "G1_tilde"):
            vals, dvals = green_apply(GreenOperator(kind, modes), phi)
            sel = np.arange(grid.index_at(2.0), grid.index_at(40.0), 50)
            d2 = fd_first_derivative(grid.r, dvals, sel)
            res = 1j * (-d2 + w1[sel] * vals[sel]) - phi[sel]
            assert np.abs(res).max() < 1e-6 * np.abs(phi).max(), kind

    def test_g2_of_f1_lower_bound(self, profile, modes):
        # |G2 f1| >= c sqrt(r) on [A, r0/2]
        grid = profile.grid
        r0 = 100.0
        vals, _ = green_apply(GreenOperator("G2_truncated", modes, r0=r0),
                              modes.f1.values.astype(complex))
        sel = (grid.r >= 10.0) & (grid.r <= r0 / 2)
        ratio = np.abs(vals[sel]) / np.sqrt(grid.r[sel])
        assert ratio.min() > 0.1 * ratio.max()
        assert ratio.min() > 0.05

    def test_linearity_zero(self, modes):
        vals, dvals = green_apply(GreenOperator("G1", modes),
                                  np.zeros(modes.grid.n, dtype=complex))
        assert np.all(vals == 0) and np.all(dvals == 0)

    def test_g2_rejects_external_radius(self, modes):
        from vortexdft.zero_modes import ZeroModeError
        with pytest.raises(ZeroModeError):
            green_apply(GreenOperator("G2_truncated", modes, r0=1e4),
                        np.zeros(modes.grid.n))

    def test_l2_inverse_far_field(self, profile, modes):
        # L2^{-1}(sqrt r rho) ~ sqrt r / 2 at large r
        grid = profile.grid
        w, _ = l2_inverse_apply(modes, modes.f1.values.astype(complex))
        i = grid.index_at(80.0)
        assert abs(w[i].real / (np.sqrt(grid.r[i]) / 2) - 1) < 5e-3
