"""Interior fundamental matrices F1(., z), F2(., z) at small energy.

Columns are built by the truncated-Green-function power series

    f = sum_j z^{2j} (G1 G2)^j f1,     g = sum_j z^{2j} (G2 G1)^j g1,
    phi1 = (z G2 f, f),                phi2 = (g, z G1 g),

and analogously for F2 with the modified kernels G1~ (from r = 1) and
G1-dagger (from infinity).  Convergence is geometric with ratio
O((eps0/|z|)^2 |z|^2) = O(eps0^2); a non-geometric tail signals that eps0
is too large for the requested energy.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .zero_modes import GreenOperator, ZeroModes, green_apply


class InteriorError(RuntimeError):
    pass


@dataclasses.dataclass
class VectorSolution:
    """A 2-component solution sampled with derivatives on the grid."""
    top: np.ndarray
    bot: np.ndarray
    dtop: np.ndarray
    dbot: np.ndarray

    def at(self, i):
        return (np.array([self.top[i], self.bot[i]]),
                np.array([self.dtop[i], self.dbot[i]]))

    def scaled(self, c):
        return VectorSolution(self.top * c, self.bot * c, self.dtop * c, self.dbot * c)


@dataclasses.dataclass
class InteriorMatrix:
    z: complex
    r0: float
    i0: int                      # last grid index inside [0, r0]
    columns: dict                # {1: phi1, 2: phi2} or {3: phi3, 4: phi4}
    terms_used: dict
    last_term_norm: dict
    term_ratios: dict


def _weighted_sup(grid, vals, dvals, i0, weight):
    w = weight[: i0 + 1]
    return max(np.max(np.abs(vals[: i0 + 1]) * w), np.max(np.abs(dvals[: i0 + 1]) * w))


def _series(modes: ZeroModes, z, seed_vals, seed_dvals, op_a, op_b, weight, i0,
            series_tol, max_terms, ratio_cap, label):
    """Accumulate sum_j z^{2j} (A B)^j seed and the B-image of the sum.

    Returns (sum, dsum, Bsum, dBsum, n_terms, last_norm, ratios).
    """
    grid = modes.grid
    t, dt = seed_vals.astype(complex), seed_dvals.astype(complex)
    acc, dacc = t.copy(), dt.copy()
    b_t, db_t = green_apply(op_b, t)
    b_acc, db_acc = b_t.copy(), db_t.copy()
    norm_prev = _weighted_sup(grid, t, dt, i0, weight)
    norm0 = norm_prev
    ratios = []
    n = 0
    for n in range(1, max_terms + 1):
        a_b, da_b = green_apply(op_a, b_t)
        t, dt = z * z * a_b, z * z * da_b
        acc += t
        dacc += dt
        b_t, db_t = green_apply(op_b, t)
        b_acc += b_t
        db_acc += db_t
        norm = _weighted_sup(grid, t, dt, i0, weight)
        ratios.append(norm / norm_prev if norm_prev > 0 else 0.0)
        if n >= 2 and ratios[-1] > ratio_cap:
            raise InteriorError(
                f"{label} series not geometric at z={z}: term ratio {ratios[-1]:.3f}"
            )
        norm_prev = norm
        if norm < series_tol * max(norm0, 1e-300):
            break
    else:
        raise InteriorError(f"{label} series hit the {max_terms}-term cap at z={z}")
    return acc, dacc, b_acc, db_acc, n, norm_prev, ratios


def f1_series(modes: ZeroModes, z, eps0=0.33, series_tol=1e-12, max_terms=40,
              ratio_cap=0.9):
    """Interior matrix F1 = (phi1 phi2): the L2_loc([0, inf)) branch."""
    z = complex(z)
    if z == 0:
        raise InteriorError("z = 0 excluded")
    grid = modes.grid
    r0 = eps0 / abs(z)
    if r0 > grid.r_max + 1e-9:
        raise InteriorError(f"r0(z)={r0} exceeds the grid")
    i0 = grid.index_at(r0)
    g2op = GreenOperator("G2_truncated", modes, r0=grid.r[i0])
    g1op = GreenOperator("G1", modes)

    w_alg = 1.0 / np.sqrt(1.0 + grid.r**2) ** 0.5      # <r>^{-1/2}
    f_acc, df_acc, g2f, dg2f, n_f, last_f, ratios_f = _series(
        modes, z, modes.f1.values, modes.f1.dvalues, g1op, g2op,
        w_alg, i0, series_tol, max_terms, ratio_cap, "F1:f")

    w_exp = np.exp(-np.sqrt(2.0) * grid.r)
    g_acc, dg_acc, g1g, dg1g, n_g, last_g, ratios_g = _series(
        modes, z, modes.g1.values, modes.g1.dvalues, g2op, g1op,
        w_exp, i0, series_tol, max_terms, ratio_cap, "F1:g")

    phi1 = VectorSolution(z * g2f, f_acc, z * dg2f, df_acc)
    phi2 = VectorSolution(g_acc, z * g1g, dg_acc, z * dg1g)
    return InteriorMatrix(z=z, r0=grid.r[i0], i0=i0, columns={1: phi1, 2: phi2},
                          terms_used={"f": n_f, "g": n_g},
                          last_term_norm={"f": last_f, "g": last_g},
                          term_ratios={"f": ratios_f, "g": ratios_g})


def f2_series(modes: ZeroModes, z, eps0=0.33, series_tol=1e-12, max_terms=40,
              ratio_cap=0.9):
    """Interior matrix F2 = (phi3 phi4): the non-L2 branch at r = 0."""
    z = complex(z)
    if z == 0:
        raise InteriorError("z = 0 excluded")
    grid = modes.grid
    r0 = eps0 / abs(z)
    if r0 > grid.r_max + 1e-9:
        raise InteriorError(f"r0(z)={r0} exceeds the grid")
    i0 = grid.index_at(r0)
    g2op = GreenOperator("G2_truncated", modes, r0=grid.r[i0])
    g1t = GreenOperator("G1_tilde", modes)
    g1d = GreenOperator("G1_dagger", modes)

    w_log = 1.0 / (np.sqrt(1.0 + grid.r**2) ** 0.5 * (1.0 + np.log1p(grid.r)))
    ft_acc, dft_acc, g2ft, dg2ft, n_f, last_f, ratios_f = _series(
        modes, z, modes.f2.values, modes.f2.dvalues, g1t, g2op,
        w_log, i0, series_tol, max_terms, ratio_cap, "F2:f~")

    w_grow = np.exp(np.minimum(np.sqrt(2.0) * grid.r, 700.0))
    gt_acc, dgt_acc, g1dgt, dg1dgt, n_g, last_g, ratios_g = _series(
        modes, z, modes.g2.values, modes.g2.dvalues, g2op, g1d,
        w_grow, i0, series_tol, max_terms, ratio_cap, "F2:g~")

    phi3 = VectorSolution(z * g2ft, ft_acc, z * dg2ft, dft_acc)
    phi4 = VectorSolution(gt_acc, z * g1dgt, dgt_acc, z * dg1dgt)
    return InteriorMatrix(z=z, r0=grid.r[i0], i0=i0, columns={3: phi3, 4: phi4},
                          terms_used={"f~": n_f, "g~": n_g},
                          last_term_norm={"f~": last_f, "g~": last_g},
                          term_ratios={"f~": ratios_f, "g~": ratios_g})


def vector_wronskian_at(u: VectorSolution, v: VectorSolution, i):
    """sigma_3-twisted Wronskian W[u, v] at grid index i."""
    return (u.top[i] * v.dtop[i] - u.dtop[i] * v.top[i]
            - (u.bot[i] * v.dbot[i] - u.dbot[i] * v.bot[i]))


def interior_wronskians(F1: InteriorMatrix, F2: InteriorMatrix, grid,
                        r_small=None, r_large=None):
    """The c_ij = W[phi_i, phi_j] table with r-independence diagnostics.

    c12, c23, c13, c24 are evaluated at small r; c14, c34 near r0 where the
    exponentially small entries are resolvable.
    """
    if F1.z != F2.z:
        raise InteriorError("F1 and F2 must be at the same energy")
    cols = {**F1.columns, **F2.columns}
    i_small = grid.index_at(r_small if r_small is not None else 1e-3)
    i_large = grid.index_at(r_large if r_large is not None else 0.9 * F1.r0)
    table = {}
    for (i, j), idx in (((1, 2), i_small), ((2, 3), i_small), ((1, 3), i_small),
                        ((2, 4), i_small), ((1, 4), i_large), ((3, 4), i_large)):
        table[(i, j)] = vector_wronskian_at(cols[i], cols[j], idx)
    # spread of the O(1) Wronskians across radii (r-independence)
    spreads = {}
    for (i, j) in ((1, 3), (2, 4)):
        samples = [vector_wronskian_at(cols[i], cols[j], grid.index_at(x))
                   for x in (2e-4, 1e-3, 1e-2, 0.1)]
        samples = np.array(samples)
        spreads[(i, j)] = float(np.abs(samples - samples.mean()).max()
                                / abs(samples.mean()))
    return table, spreads
