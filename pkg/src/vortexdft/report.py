"""Figure rendering for the CLI report paths (matplotlib, file output only)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, outdir, name):
    path = os.path.join(outdir, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def profile_figure(profile, outdir):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    r = profile.grid.r
    ax1.plot(r, profile.rho, lw=1.2)
    ax1.set_xlim(0, 12)
    ax1.set_xlabel("r")
    ax1.set_ylabel(r"$\rho_1$")
    ax1.set_title("vortex profile")
    sel = r > 5
    ax2.loglog(r[sel], 1 - profile.rho[sel], lw=1.2, label=r"$1-\rho_1$")
    ax2.loglog(r[sel], 1 / (2 * r[sel] ** 2), "--", lw=1.0, label=r"$1/(2r^2)$")
    ax2.set_xlabel("r")
    ax2.legend(frameon=False)
    ax2.set_title("far-field tail")
    return _save(fig, outdir, "profile.png")


def modes_figure(modes, outdir):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    r = modes.grid.r
    sel = r <= 12
    ax1.plot(r[sel], modes.f1.values[sel], label="f1")
    ax1.plot(r[sel], modes.f2.values[sel], label="f2")
    ax1.set_ylim(-1, 8)
    ax1.legend(frameon=False)
    ax1.set_xlabel("r")
    ax1.set_title("L1 zero modes")
    sel2 = (r >= 0.05) & (r <= 30)
    ax2.semilogy(r[sel2], np.abs(modes.g1.values[sel2]), label="|g1|")
    ax2.semilogy(r[sel2], np.abs(modes.g2.values[sel2]), label="|g2|")
    ax2.legend(frameon=False)
    ax2.set_xlabel("r")
    ax2.set_title("L2 zero modes")
    return _save(fig, outdir, "modes.png")


def stokes_figure(xs, values, coef, outdir):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    fit = coef[0] * np.exp(-1j * xs) + coef[1] * np.exp(1j * xs)
    ax.plot(xs, values.real, lw=0.8, label=r"$\mathrm{Re}\, h_-(x)$")
    ax.plot(xs, fit.real, "--", lw=0.8, label="two-wave fit")
    ax.set_xlabel("x")
    ax.set_title(f"Stokes fit: A={coef[0]:.3f}, B={coef[1]:.3f}")
    ax.legend(frameon=False)
    return _save(fig, outdir, "stokes.png")


def scaling_figure(lams, table, outdir, name="connection_scalings.png"):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    for label, vals in table.items():
        ax.loglog(lams, np.abs(vals), "o-", ms=3, lw=1.0, label=label)
    ax.set_xlabel(r"$|\lambda|$")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("connection coefficient scalings")
    return _save(fig, outdir, name)


def growth_figure(t, norms, ref, outdir, name="growth.png"):
    fig, ax = plt.subplots(figsize=(6, 3.4))
    ax.plot(t, norms, "o-", ms=3, lw=1.0, label="propagated")
    if ref is not None:
        ax.plot(t, ref, "--", lw=1.0, label="pointwise prediction")
    ax.set_xlabel("t")
    ax.set_ylabel("norm growth")
    ax.legend(frameon=False)
    return _save(fig, outdir, name)


def snapshot_figure(r, state, t, outdir, name="snapshot.png"):
    fig, ax = plt.subplots(figsize=(6.5, 3.4))
    ax.plot(r, state[0].real, lw=0.9, label="Re u1")
    ax.plot(r, state[1].real, lw=0.9, label="Re u2")
    ax.set_xlabel("r")
    ax.set_title(f"state at t = {t}")
    ax.legend(frameon=False)
    return _save(fig, outdir, name)
