"""Radial grids on (0, r_max] with quadrature weights.

The grid is geometric near r = 0 (to resolve the r^{3/2} / r^{-1/2}
endpoint classes) and uniform beyond.  Quadrature is composite trapezoid
with a power-law endpoint correction panel on [0, r_min].
"""

from __future__ import annotations

import numpy as np


class RadialGrid:
    def __init__(self, r_min=1e-4, geometric_ratio=1.05, uniform_step=0.01, r_max=240.0):
        if not (0 < r_min < r_max):
            raise ValueError("need 0 < r_min < r_max")
        geo = [r_min]
        while geo[-1] * (geometric_ratio - 1.0) < uniform_step:
            geo.append(geo[-1] * geometric_ratio)
        start = geo[-1]
        n_uni = int(np.ceil((r_max - start) / uniform_step))
        uni = start + uniform_step * np.arange(1, n_uni + 1)
        r = np.concatenate([np.asarray(geo), uni])
        self.r = r[r <= r_max + 1e-12]
        if self.r[-1] < r_max - 1e-9:
            self.r = np.append(self.r, r_max)
        self.r_min = float(self.r[0])
        self.r_max = float(self.r[-1])
        self.n = self.r.size
        self.geometric_end = float(start)
        # trapezoid weights (kept for rough uses)
        w = np.zeros(self.n)
        dr = np.diff(self.r)
        w[:-1] += 0.5 * dr
        w[1:] += 0.5 * dr
        self.w = w
        self._build_quartic_weights()

    def _build_quartic_weights(self):
        """4-point cubic interval weights; log-abscissa on the geometric
        section so that power-law integrands integrate to ~1e-8 relative."""
        r, n = self.r, self.n
        base = np.clip(np.arange(n - 1) - 1, 0, n - 4)
        idx = base[:, None] + np.arange(4)[None, :]
        use_log = r[1:] <= self.geometric_end * (1 + 1e-12)
        x = np.where(use_log[:, None], np.log(r[idx]), r[idx])
        xa = np.where(use_log, np.log(r[:-1]), r[:-1])
        xb = np.where(use_log, np.log(r[1:]), r[1:])
        xm = x.mean(axis=1)
        s = x - xm[:, None]
        vand = s[:, :, None] ** np.arange(4)[None, None, :]   # (n-1, 4, 4)
        ka = (xa - xm)[:, None] ** np.arange(1, 5)[None, :]
        kb = (xb - xm)[:, None] ** np.arange(1, 5)[None, :]
        mom = (kb - ka) / np.arange(1, 5)[None, :]
        wl = np.linalg.solve(np.swapaxes(vand, 1, 2), mom[:, :, None])[:, :, 0]
        self._w4 = np.where(use_log[:, None], wl * r[idx], wl)
        self._w4_idx = idx

    def index_at(self, r):
        """Index of the last node <= r."""
        return int(np.searchsorted(self.r, r * (1 + 1e-12), side="right") - 1)

    def integrate(self, f, endpoint_power=None):
        """Integral over [0, r_max] of sampled f (4th-order weights).

        ``endpoint_power`` p adds the closed-form panel for f ~ C r^p on
        [0, r_min]; with p=None the panel is skipped (f ~ 0 at 0).
        """
        total = self.cumulative(f)[..., -1]
        if endpoint_power is not None and endpoint_power > -1:
            total = total + f[..., 0] * self.r_min / (endpoint_power + 1.0)
        return total

    def cumulative(self, f):
        """Cumulative 4th-order integral from r_min, same length as the grid."""
        f = np.asarray(f)
        inc = np.sum(self._w4 * f[..., self._w4_idx], axis=-1)
        out = np.zeros(f.shape, dtype=inc.dtype)
        out[..., 1:] = np.cumsum(inc, axis=-1)
        return out

    def cumulative_right(self, f):
        """Integral from r to r_max, summed from the right so exponentially
        small tails keep full relative precision."""
        f = np.asarray(f)
        inc = np.sum(self._w4 * f[..., self._w4_idx], axis=-1)
        out = np.zeros(f.shape, dtype=inc.dtype)
        out[..., :-1] = np.cumsum(inc[..., ::-1], axis=-1)[..., ::-1]
        return out

    def endpoint_panel(self, f0, f1):
        """Closed-form integral over [0, r_min] assuming f ~ C r^p locally,
        with p fitted from the first two samples (0 when f vanishes)."""
        if f0 == 0 or f1 == 0:
            return 0.0 * f0
        p = np.log(abs(f1) / abs(f0)) / np.log(self.r[1] / self.r[0])
        if not np.isfinite(p) or p <= -1 + 1e-6:
            return 0.0 * f0
        return f0 * self.r_min / (p + 1.0)

    def restrict(self, r_hi):
        """Slice object for the nodes with r <= r_hi."""
        return slice(0, self.index_at(r_hi) + 1)
