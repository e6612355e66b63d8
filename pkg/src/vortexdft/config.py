"""Run configuration: the small-constant hierarchy, grid and tolerance knobs.

The file format is flat ``key = value`` text, one pair per line, with ``#``
comments.  Every key has a typed default; unknown keys are an error.
"""

from __future__ import annotations

import dataclasses


class ConfigError(ValueError):
    """Invalid configuration file or parameter set (CLI exit code 2)."""


@dataclasses.dataclass(frozen=True)
class RunConfig:
    # Small-constant hierarchy 0 < delta0 < eps_inf < eps < eps0 < 1.
    # The interior series needs eps0 small enough that the term ratio is
    # geometric; the exterior fixed point needs eps_inf/|z| large enough
    # that the inverse-square tails are perturbative at the test energies
    # |z| in [1e-3, 1e-2].
    delta0: float = 0.01
    eps_inf: float = 0.07
    eps: float = 0.14
    eps0: float = 0.22

    # Radial grid: geometric section near 0, uniform step to r_max.
    r_min: float = 1e-4
    geometric_ratio: float = 1.05
    uniform_step: float = 0.01
    r_max: float = 240.0

    # Profile solve.
    profile_tol: float = 1e-12
    profile_series_end: float = 0.2
    profile_tail_start: float = 30.0

    # Interior series.
    series_tol: float = 1e-12
    series_max_terms: int = 40
    series_ratio_cap: float = 0.9

    # Exterior Lyapunov-Perron.
    fp_tol: float = 1e-10
    fp_max_iter: int = 30
    lp_step: float = 0.04
    lp_contraction_cap: float = 0.5

    # Evolution / Filon.
    lambda_min: float = 1e-3
    n_filon: int = 1024          # per sign of lambda
    n_table: int = 48            # pipeline nodes per sign, interpolated to Filon nodes

    # Time-domain oracle.
    oracle_r_max: float = 150.0
    oracle_step: float = 0.01
    oracle_dt: float = 0.005
    sponge_width: float = 20.0
    sponge_strength: float = 1.0

    seed: int = 12345
    output_dir: str = "out"

    def validate(self) -> "RunConfig":
        if not (0.0 < self.delta0 < self.eps_inf < self.eps < self.eps0 < 1.0):
            raise ConfigError(
                "constant hierarchy violated: need 0 < delta0 < eps_inf < eps "
                f"< eps0 < 1, got ({self.delta0}, {self.eps_inf}, {self.eps}, {self.eps0})"
            )
        if self.r_min <= 0 or self.r_max <= self.r_min:
            raise ConfigError("need 0 < r_min < r_max")
        if self.r_max > 480.0:
            # plain double arithmetic for e^{sqrt(2) r} factors; beyond this
            # the exponential bookkeeping would need scaled storage
            raise ConfigError("r_max > 480 exceeds double-precision exponential range")
        if self.uniform_step <= 0 or self.geometric_ratio <= 1.0:
            raise ConfigError("uniform_step > 0 and geometric_ratio > 1 required")
        if self.lambda_min <= 0 or self.lambda_min >= self.delta0:
            raise ConfigError("need 0 < lambda_min < delta0")
        if self.r_max < self.eps0 / self.lambda_min:
            raise ConfigError(
                f"r_max={self.r_max} does not cover the interior domain "
                f"eps0/lambda_min={self.eps0 / self.lambda_min}"
            )
        return self


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def parse_config(text: str) -> RunConfig:
    """Parse flat key=value text into a validated RunConfig."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        kind = _FIELD_TYPES[key]
        try:
            if kind in ("int", int):
                values[key] = int(val)
            elif kind in ("float", float):
                values[key] = float(val)
            else:
                values[key] = val
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from exc
    return RunConfig(**values).validate()


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def dump_config(cfg: RunConfig) -> str:
    lines = [f"{f.name} = {getattr(cfg, f.name)}" for f in dataclasses.fields(RunConfig)]
    return "\n".join(lines) + "\n"
