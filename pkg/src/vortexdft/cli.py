"""Command-line interface: pipeline orchestration and verification suites.

Exit codes: 0 pass, 1 invariant failure, 2 configuration error.  Numeric
output is CSV/JSON in full double precision; figures are auxiliary PNG
artifacts rendered alongside the delimited output when --figures is set.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from .config import ConfigError, RunConfig, dump_config, load_config
from .grids import RadialGrid


def _complex_opt(text):
    re_s, _, im_s = text.partition(",")
    return complex(float(re_s), float(im_s or 0.0))


def _out_dir(cfg, path=None):
    d = path or os.environ.get("VORTEXDFT_OUTPUT_DIR") or cfg.output_dir
    os.makedirs(d, exist_ok=True)
    return d


class Workspace:
    """Lazily built shared stages (profile, modes), reused across commands."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._grid = None
        self._profile = None
        self._modes = None

    @property
    def grid(self):
        if self._grid is None:
            c = self.cfg
            self._grid = RadialGrid(r_min=c.r_min, geometric_ratio=c.geometric_ratio,
                                    uniform_step=c.uniform_step, r_max=c.r_max)
        return self._grid

    @property
    def profile(self):
        if self._profile is None:
            from .vortex import solve_profile
            self._profile = solve_profile(grid=self.grid, tol=self.cfg.profile_tol,
                                          series_end=self.cfg.profile_series_end,
                                          tail_start=self.cfg.profile_tail_start)
        return self._profile

    @property
    def modes(self):
        if self._modes is None:
            from .zero_modes import build_modes
            self._modes = build_modes(self.profile)
        return self._modes


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="flat key=value configuration file")
@click.pass_context
def main(ctx, config_path):
    try:
        cfg = load_config(config_path) if config_path else RunConfig().validate()
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(2)
    ctx.obj = Workspace(cfg)


@main.command("config")
@click.pass_obj
def show_config(ws):
    """Print the effective configuration."""
    click.echo(dump_config(ws.cfg), nl=False)


@main.group()
def special():
    """Complex-argument special function evaluation."""


@special.command("eval")
@click.option("--fn", type=click.Choice(["h+", "h-", "ptilde", "qtilde", "kroots"]),
              required=True)
@click.option("--z", "z_text", default=None, help="energy re,im (kroots)")
@click.option("--zeta", "zeta_text", default=None, help="argument re,im")
@click.pass_obj
def special_eval(ws, fn, z_text, zeta_text):
    from .special import SpecialFunctionError, free_bessel_pq, hankel_h, k_roots
    try:
        if fn == "kroots":
            z = _complex_opt(z_text)
            q = k_roots(z, delta0=ws.cfg.delta0)
            rec = {"input": str(z), "roots": [str(k) for k in q.roots],
                   "error_estimate": 0.0}
        else:
            zeta = _complex_opt(zeta_text)
            if fn in ("h+", "h-"):
                hv = hankel_h("plus" if fn == "h+" else "minus", zeta)
                rec = {"input": str(zeta), "value": str(hv.value),
                       "derivative": str(hv.derivative),
                       "error_estimate": hv.error_estimate}
            else:
                p, dp, q, dq = free_bessel_pq(zeta)
                val, dval = (p, dp) if fn == "ptilde" else (q, dq)
                rec = {"input": str(zeta), "value": str(complex(val)),
                       "derivative": str(complex(dval)), "error_estimate": 0.0}
    except SpecialFunctionError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(json.dumps(rec))


@main.group()
def profile():
    """Vortex profile construction."""


@profile.command("solve")
@click.option("--rmax", type=float, default=None)
@click.option("--tol", type=float, default=None)
@click.option("--out", "out_path", type=click.Path(), default="profile.csv")
@click.option("--figures", is_flag=True, default=False)
@click.pass_obj
def profile_solve(ws, rmax, tol, out_path, figures):
    from .vortex import solve_profile
    cfg = ws.cfg
    if rmax is not None or tol is not None:
        grid = RadialGrid(r_min=cfg.r_min, geometric_ratio=cfg.geometric_ratio,
                          uniform_step=cfg.uniform_step, r_max=rmax or cfg.r_max)
        prof = solve_profile(grid=grid, r_max=rmax or cfg.r_max, tol=tol or cfg.profile_tol)
    else:
        prof = ws.profile
    arr = np.stack([prof.grid.r, prof.rho, prof.drho], axis=1)
    np.savetxt(out_path, arr, delimiter=",", header="r,rho,drho", comments="",
               fmt="%.17e")
    click.echo(f"a = {prof.slope_a:.12f}  residual_sup = {np.abs(prof.residual()).max():.3e}")
    if figures:
        from .report import profile_figure
        click.echo(profile_figure(prof, _out_dir(cfg, os.path.dirname(out_path) or ".")))


@main.group()
def modes():
    """Zero-energy fundamental systems."""


@modes.command("build")
@click.option("--out", "out_path", type=click.Path(), default="modes.csv")
@click.option("--figures", is_flag=True, default=False)
@click.pass_obj
def modes_build(ws, out_path, figures):
    zm = ws.modes
    arr = np.stack([zm.grid.r, zm.f1.values, zm.f1.dvalues, zm.f2.values, zm.f2.dvalues,
                    zm.g1.values, zm.g1.dvalues, zm.g2.values, zm.g2.dvalues], axis=1)
    np.savetxt(out_path, arr, delimiter=",",
               header="r,f1,df1,f2,df2,g1,dg1,g2,dg2", comments="", fmt="%.17e")
    click.echo(f"wrote {out_path} (Volterra iterations: {zm.volterra_iterations})")
    if figures:
        from .report import modes_figure
        click.echo(modes_figure(zm, _out_dir(ws.cfg, os.path.dirname(out_path) or ".")))


@main.group()
def interior():
    """Interior fundamental matrices."""


@interior.command("build")
@click.option("--z", "z_text", required=True)
@click.option("--out", "out_path", type=click.Path(), default="F1.json")
@click.pass_obj
def interior_build(ws, z_text, out_path):
    from .interior import f1_series, f2_series
    z = _complex_opt(z_text)
    F1 = f1_series(ws.modes, z, eps0=ws.cfg.eps0, series_tol=ws.cfg.series_tol)
    F2 = f2_series(ws.modes, z, eps0=ws.cfg.eps0, series_tol=ws.cfg.series_tol)
    grid = ws.grid
    sample = np.linspace(grid.r_min, F1.r0, 200)
    idx = [grid.index_at(x) for x in sample]
    rec = {"z": str(z), "r0": F1.r0,
           "terms_used": {**F1.terms_used, **F2.terms_used},
           "last_term_norm": {**{k: float(v) for k, v in F1.last_term_norm.items()},
                              **{k: float(v) for k, v in F2.last_term_norm.items()}},
           "r": [grid.r[i] for i in idx]}
    for j, col in {**F1.columns, **F2.columns}.items():
        rec[f"phi{j}"] = {
            "top": [[col.top[i].real, col.top[i].imag] for i in idx],
            "bot": [[col.bot[i].real, col.bot[i].imag] for i in idx],
        }
    with open(out_path, "w") as fh:
        json.dump(rec, fh)
    click.echo(f"wrote {out_path}")


@main.group()
def exterior():
    """Exterior fundamental system (Lyapunov-Perron)."""


@exterior.command("build")
@click.option("--z", "z_text", required=True)
@click.option("--sign", type=click.Choice(["+", "-"]), default="+")
@click.option("--out", "out_path", type=click.Path(), default="weyl.json")
@click.pass_obj
def exterior_build(ws, z_text, sign, out_path):
    from .exterior import weyl_matrix
    z = _complex_opt(z_text)
    wm = weyl_matrix(ws.profile, z, sign=sign, eps_inf=ws.cfg.eps_inf,
                     eps0=ws.cfg.eps0, fp_tol=ws.cfg.fp_tol, step=ws.cfg.lp_step)
    br = wm.branches[1]
    rec = {"z": str(z), "sign": sign, "r_inf": br.r[0], "r_cut": br.r[-1],
           "fp_residual": {j: b.fp_residual for j, b in wm.branches.items()},
           "deviation_xj": {j: b.deviation_xj for j, b in wm.branches.items()},
           "contraction": {j: max(b.contraction_ratios[1:], default=0.0)
                           for j, b in wm.branches.items()}}
    pts = np.linspace(br.r[0], br.r[-1], 200)
    for j, b in wm.branches.items():
        v, dv = b.psi_at(pts)
        rec[f"psi{j}"] = {"r": pts.tolist(),
                          "p": [[x.real, x.imag] for x in v[0]],
                          "q": [[x.real, x.imag] for x in v[1]]}
    with open(out_path, "w") as fh:
        json.dump(rec, fh)
    click.echo(f"wrote {out_path}")


@main.group()
def connect():
    """Connection tables and the spectral density."""


@connect.command("table")
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--out", "out_path", type=click.Path(), default="table.json")
@click.pass_obj
def connect_table(ws, lam, out_path):
    from .connection import energy_data
    cfg = ws.cfg
    ed = energy_data(ws.profile, ws.modes, lam, eps=cfg.eps, eps_inf=cfg.eps_inf,
                     eps0=cfg.eps0, delta0=cfg.delta0)

    def cplx(v):
        return [complex(v).real, complex(v).imag]

    tp = ed.table_plus
    rec = {
        "lambda": lam, "r_eps": tp.r_eps,
        "omega_plus": [[cplx(v) for v in row] for row in tp.omega],
        "omega_minus": [[cplx(v) for v in row] for row in ed.table_minus.omega],
        "c": {f"c{i}{j}": cplx(v) for (i, j), v in tp.c.items()},
        "b_plus": [[cplx(v) for v in row] for row in tp.b],
        "s": {f"s{i}{j}": cplx(v) for (i, j), v in ed.s.items()},
        "D_plus": [[cplx(v) for v in row] for row in tp.D],
        "D_minus": [[cplx(v) for v in row] for row in ed.table_minus.D],
        "d_plus": cplx(tp.d), "d_minus": cplx(ed.table_minus.d),
        "alpha_plus": cplx(tp.alpha), "beta_plus": cplx(tp.beta),
        "gamma_plus": cplx(tp.gamma), "delta_plus": cplx(tp.delta),
        "kappa": cplx(ed.kappa), "kappa_spread": ed.kappa_spread,
        "C": [[cplx(v) for v in row] for row in ed.C],
        "prefactor": cplx(ed.prefactor),
        "dft_gammas": {k: cplx(v) for k, v in ed.gammas.items()},
        "dft_mus": {k: cplx(v) for k, v in ed.mus.items()},
    }
    with open(out_path, "w") as fh:
        json.dump(rec, fh, indent=1)
    click.echo(f"wrote {out_path}")


@main.command("resolvent")
@click.argument("action", type=click.Choice(["sample"]))
@click.option("--z", "z_text", required=True)
@click.option("--rs", "rs_text", required=True, help="r,s evaluation pair")
@click.pass_obj
def resolvent_cmd(ws, action, z_text, rs_text):
    from .resolvent import resolvent_data, resolvent_kernel
    z = _complex_opt(z_text)
    r_val, s_val = (float(x) for x in rs_text.split(","))
    sign = "+" if z.imag >= 0 else "-"
    rd = resolvent_data(ws.profile, ws.modes, z, sign,
                        eps=ws.cfg.eps, eps_inf=ws.cfg.eps_inf,
                        eps0=ws.cfg.eps0, delta0=ws.cfg.delta0)
    grid = ws.grid
    ker = resolvent_kernel(rd, grid, grid.index_at(r_val), grid.index_at(s_val))
    rec = {"z": str(z), "r": r_val, "s": s_val,
           "kernel": [[[v.real, v.imag] for v in row] for row in ker],
           "m": [[v.real, v.imag] for v in rd.m],
           "n": [[v.real, v.imag] for v in rd.n]}
    click.echo(json.dumps(rec))


@main.command("evolve")
@click.option("--t", "t_text", required=True, help="comma-separated times")
@click.option("--interval", "interval_text", required=True, help="a,b")
@click.option("--input", "input_path", type=click.Path(exists=True), default=None,
              help="state CSV (r,u1_re,u1_im,u2_re,u2_im); default: builtin bump")
@click.option("--out", "out_path", type=click.Path(), default="snapshot.csv")
@click.option("--figures", is_flag=True, default=False)
@click.pass_obj
def evolve_cmd(ws, t_text, interval_text, input_path, out_path, figures):
    from .resolvent import evolution_context, evolve_PI, state_norm
    cfg = ws.cfg
    a, b = (float(x) for x in interval_text.split(","))
    ts = [float(x) for x in t_text.split(",") if x]
    grid = ws.grid
    if input_path:
        data = np.loadtxt(input_path, delimiter=",", skiprows=1)
        u0 = np.stack([
            np.interp(grid.r, data[:, 0], data[:, 1]) + 1j * np.interp(grid.r, data[:, 0], data[:, 2]),
            np.interp(grid.r, data[:, 0], data[:, 3]) + 1j * np.interp(grid.r, data[:, 0], data[:, 4]),
        ])
    else:
        u0 = np.stack([np.exp(-((grid.r - 10.0) / 3.0) ** 2),
                       0.4 * np.exp(-((grid.r - 12.0) / 3.0) ** 2)]).astype(complex)
    ctx = evolution_context(ws.profile, ws.modes, (a, b), lambda_min=cfg.lambda_min,
                            n_table=cfg.n_table, n_filon=cfg.n_filon, delta0=cfg.delta0,
                            eps=cfg.eps, eps_inf=cfg.eps_inf, eps0=cfg.eps0)
    cols = [grid.r]
    header = ["r"]
    for t in ts or [0.0]:
        u = evolve_PI(ctx, t, u0)
        click.echo(f"t={t}: norm = {state_norm(grid, u):.9e}")
        cols += [u[0].real, u[0].imag, u[1].real, u[1].imag]
        header += [f"u1_re_t{t}", f"u1_im_t{t}", f"u2_re_t{t}", f"u2_im_t{t}"]
        if figures:
            from .report import snapshot_figure
            snapshot_figure(grid.r, u, t, _out_dir(cfg, os.path.dirname(out_path) or "."),
                            name=f"snapshot_t{t}.png")
    np.savetxt(out_path, np.stack(cols, axis=1), delimiter=",",
               header=",".join(header), comments="", fmt="%.17e")
    click.echo(f"wrote {out_path}")


@main.group()
def oracle():
    """Time-domain Crank-Nicolson oracle."""


@oracle.command("run")
@click.option("--init", "init_text", default="builtin:psi0 8",
              help="'builtin:psi0 N' or a state CSV path")
@click.option("--T", "t_end", type=float, default=50.0)
@click.option("--dt", type=float, default=None)
@click.option("--out", "out_path", type=click.Path(), default="traj.csv")
@click.option("--figures", is_flag=True, default=False)
@click.pass_obj
def oracle_run(ws, init_text, t_end, dt, out_path, figures):
    from .oracle import (PropagatorConfig, build_propagator, grid_state,
                         nilpotent_initial_state, propagate)
    cfg = ws.cfg
    pcfg = PropagatorConfig(r_max=cfg.oracle_r_max, step=cfg.oracle_step,
                            dt=dt or cfg.oracle_dt, sponge_width=cfg.sponge_width,
                            sponge_strength=cfg.sponge_strength)
    prop = build_propagator(ws.profile, pcfg)
    if init_text.startswith("builtin:psi0"):
        n_cut = float(init_text.split()[1]) if " " in init_text else 8.0
        u0 = grid_state(prop, ws.modes, nilpotent_initial_state(ws.modes, n_cut))
    else:
        data = np.loadtxt(init_text, delimiter=",", skiprows=1)
        u0 = np.stack([
            np.interp(prop.r, data[:, 0], data[:, 1]) + 1j * np.interp(prop.r, data[:, 0], data[:, 2]),
            np.interp(prop.r, data[:, 0], data[:, 3]) + 1j * np.interp(prop.r, data[:, 0], data[:, 4]),
        ])
    t_grid = np.linspace(0.0, t_end, max(2, int(t_end / 2.5) + 1))
    snaps = propagate(prop, u0, t_grid)
    rows = [(s[0], s[2], s[3]) for s in snaps]
    np.savetxt(out_path, np.array(rows), delimiter=",",
               header="t,norm,hamiltonian", comments="", fmt="%.17e")
    click.echo(f"wrote {out_path}")
    if figures:
        from .report import growth_figure
        n0 = rows[0][1]
        growth_figure([r[0] for r in rows], [r[1] / n0 for r in rows], None,
                      _out_dir(cfg, os.path.dirname(out_path) or "."))


@main.command("verify")
@click.argument("suite", type=click.Choice(
    ["special", "profile", "modes", "interior", "exterior", "connection", "all"]))
@click.option("--quick", is_flag=True, default=False, help="reduced energy sets")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_obj
def verify_cmd(ws, suite, quick, out_path):
    from .verify import report_json, run_suites
    names = ([suite] if suite != "all"
             else ["special", "profile", "modes", "interior", "exterior", "connection"])
    needs_build = [n for n in names if n != "special"]
    profile_obj = ws.profile if needs_build else None
    modes_obj = ws.modes if any(n in ("modes", "interior", "connection") for n in names) else None
    rng = np.random.default_rng(ws.cfg.seed)
    results = run_suites(names, profile=profile_obj, modes=modes_obj, cfg=ws.cfg, rng=rng)
    text = report_json(results)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    click.echo(text)
    ok = all(v["passed"] for v in results.values())
    for name, v in results.items():
        for c in v["checks"]:
            status = "PASS" if c["passed"] else "FAIL"
            click.echo(f"[{status}] {name}:{c['name']}  value={c['value']:.3e} tol={c['tolerance']:.3e}",
                       err=True)
    sys.exit(0 if ok else 1)


@main.command("pipeline")
@click.option("--lambdas", "lam_text", default="1e-3,-1e-3,3e-3,-3e-3,1e-2,-1e-2")
@click.option("--ts", "t_text", default="0,1,5,20")
@click.option("--interval", "interval_text", default="-0.01,0.01")
@click.option("--outdir", type=click.Path(), default=None)
@click.option("--figures", is_flag=True, default=False)
@click.pass_obj
def pipeline_cmd(ws, lam_text, t_text, interval_text, outdir, figures):
    """End-to-end run: profile -> modes -> connection sweep -> evolution."""
    from .connection import energy_data
    from .resolvent import evolution_context, evolve_PI, state_norm
    cfg = ws.cfg
    out = _out_dir(cfg, outdir)
    rng = np.random.default_rng(cfg.seed)

    prof = ws.profile
    np.savetxt(os.path.join(out, "profile.csv"),
               np.stack([prof.grid.r, prof.rho, prof.drho], axis=1),
               delimiter=",", header="r,rho,drho", comments="", fmt="%.17e")
    zm = ws.modes

    lams = [float(x) for x in lam_text.split(",") if x]
    rows = []
    scal = {"omega11": [], "omega22": [], "d": [], "kappa": []}
    for lam in lams:
        ed = energy_data(prof, zm, lam, eps=cfg.eps, eps_inf=cfg.eps_inf,
                         eps0=cfg.eps0, delta0=cfg.delta0)
        t = ed.table_plus
        rows.append([lam, abs(t.omega[0, 0]), abs(t.omega[1, 1]), abs(t.d),
                     abs(ed.kappa), abs(ed.prefactor)])
        if lam > 0:
            scal["omega11"].append(abs(t.omega[0, 0]))
            scal["omega22"].append(abs(t.omega[1, 1]))
            scal["d"].append(abs(t.d))
            scal["kappa"].append(abs(ed.kappa))
    np.savetxt(os.path.join(out, "connection_sweep.csv"), np.array(rows),
               delimiter=",", header="lambda,omega11,omega22,d,kappa,prefactor",
               comments="", fmt="%.17e")

    ts = [float(x) for x in t_text.split(",") if x]
    a, b = (float(x) for x in interval_text.split(","))
    grid = prof.grid
    u0 = np.stack([np.exp(-((grid.r - 10.0) / 3.0) ** 2),
                   0.4 * np.exp(-((grid.r - 12.0) / 3.0) ** 2)]).astype(complex)
    if ts:
        ctx = evolution_context(prof, zm, (a, b), lambda_min=cfg.lambda_min,
                                n_table=cfg.n_table, n_filon=cfg.n_filon,
                                delta0=cfg.delta0, eps=cfg.eps,
                                eps_inf=cfg.eps_inf, eps0=cfg.eps0)
        growth = [[t, state_norm(grid, evolve_PI(ctx, t, u0))] for t in ts]
        np.savetxt(os.path.join(out, "growth.csv"), np.array(growth), delimiter=",",
                   header="t,norm", comments="", fmt="%.17e")
    else:
        ctx = evolution_context(prof, zm, (a, b), lambda_min=cfg.lambda_min,
                                n_table=max(8, cfg.n_table // 4), n_filon=cfg.n_filon,
                                delta0=cfg.delta0, eps=cfg.eps,
                                eps_inf=cfg.eps_inf, eps0=cfg.eps0)
        p0 = evolve_PI(ctx, 0.0, u0)
        np.savetxt(os.path.join(out, "projector_only.csv"),
                   np.stack([grid.r, p0[0].real, p0[0].imag, p0[1].real, p0[1].imag], axis=1),
                   delimiter=",", header="r,u1_re,u1_im,u2_re,u2_im", comments="",
                   fmt="%.17e")
    if figures:
        from .report import growth_figure, modes_figure, profile_figure, scaling_figure
        profile_figure(prof, out)
        modes_figure(zm, out)
        pos = [l for l in lams if l > 0]
        if pos:
            scaling_figure(pos, scal, out)
        if ts:
            n0 = state_norm(grid, evolve_PI(ctx, 0.0, u0))
            growth_figure([g[0] for g in growth], [g[1] / n0 for g in growth], None, out)
    click.echo(f"pipeline artifacts in {out}")


if __name__ == "__main__":
    main()
