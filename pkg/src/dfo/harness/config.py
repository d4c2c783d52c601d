"""Experiment configuration: a single TOML file per run.

The on-disk format groups knobs into one table per concern ([problem],
[model], [step], [collocation], [init], [fit], [output], [reference],
[seeds]). Parsing fills documented defaults; serialization emits every
field, so serialize(parse(text)) parses back to an equal configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from ..errors import ConfigError

PROBLEMS = ("wave", "advreact", "transport2d")
MODELS = ("wave-gaussian", "advreact-sine", "periodic-mlp")


@dataclass
class ExperimentConfig:
    # [problem]
    problem: str = "wave"
    rho: float = 0.0
    c: float = 1.0
    kappa: float = 1.0
    flow_x0: float = 0.0
    flow_y0: float = 0.0
    # [model]
    model: str = "wave-gaussian"
    embed_width: int = 32
    hidden_sizes: tuple = (32, 32, 32)
    trainable_affine: bool = False
    # [step]
    dt: float = 1e-3
    t_end: float = 1.0
    scheme: str = "euler"
    solver: str = "tsvd"
    tau: float | None = None
    beta: float | None = None
    lam: float = 0.0
    eps_rel: float = 1e-12
    abs_tol: float = 0.0
    gamma: float = 1e-6
    sketch_size: int = 64
    oversampling: int = 10
    # [collocation]
    collocation_mode: str = "grid"  # grid | subsample | resample
    collocation_grid: tuple = (151,)
    collocation_count: int = 0
    # [init]
    theta0: tuple | None = None
    # [fit]
    fit_enabled: bool = False
    fit_iterations: int = 10000
    fit_step_size: float = 3e-3
    fit_beta1: float = 0.9
    fit_beta2: float = 0.999
    fit_eps_hat: float = 1e-8
    fit_points: int = 2048
    fit_lr_decay_steps: int = 0
    fit_lr_decay_factor: float = 0.5
    # [output]
    output_dir: str = "runs/out"
    eval_every: int = 50
    eval_grid: tuple = (512,)
    # [reference]
    reference_dt: float = 2.5e-3
    # [seeds]
    seed_init: int = 0
    seed_sketch: int = 0
    seed_collocation: int = 0

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        for name in ("hidden_sizes", "collocation_grid", "eval_grid"):
            setattr(self, name, tuple(getattr(self, name)))
        if self.theta0 is not None:
            self.theta0 = tuple(float(v) for v in self.theta0)
        if self.theta0 is None and not self.fit_enabled:
            raise ConfigError("either theta0 or an enabled fit is required")
        if self.t_end < 0:
            raise ConfigError(f"t_end must be >= 0, got {self.t_end}")
        if self.eval_every < 1:
            raise ConfigError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.fit_enabled and self.fit_iterations < 1:
            raise ConfigError("fit iteration count must be >= 1")


# (table, key) on disk -> dataclass field
_LAYOUT = {
    "problem": {
        "id": "problem", "rho": "rho", "c": "c", "kappa": "kappa",
        "flow_x0": "flow_x0", "flow_y0": "flow_y0",
    },
    "model": {
        "kind": "model", "embed_width": "embed_width",
        "hidden_sizes": "hidden_sizes", "trainable_affine": "trainable_affine",
    },
    "step": {
        "dt": "dt", "t_end": "t_end", "scheme": "scheme", "solver": "solver",
        "tau": "tau", "beta": "beta", "lambda": "lam", "eps_rel": "eps_rel",
        "abs_tol": "abs_tol", "gamma": "gamma", "sketch_size": "sketch_size",
        "oversampling": "oversampling",
    },
    "collocation": {
        "mode": "collocation_mode", "grid": "collocation_grid",
        "count": "collocation_count",
    },
    "init": {"theta0": "theta0"},
    "fit": {
        "enabled": "fit_enabled", "iterations": "fit_iterations",
        "step_size": "fit_step_size", "beta1": "fit_beta1",
        "beta2": "fit_beta2", "eps_hat": "fit_eps_hat",
        "points": "fit_points", "lr_decay_steps": "fit_lr_decay_steps",
        "lr_decay_factor": "fit_lr_decay_factor",
    },
    "output": {
        "dir": "output_dir", "eval_every": "eval_every", "eval_grid": "eval_grid",
    },
    "reference": {"dt": "reference_dt"},
    "seeds": {
        "init": "seed_init", "sketch": "seed_sketch",
        "collocation": "seed_collocation",
    },
}

# fields that may legitimately be absent (None) on disk
_OPTIONAL = {"tau", "beta", "theta0"}


def parse_config(text):
    """Parse TOML text into an ExperimentConfig."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    kwargs = {}
    for table, keys in _LAYOUT.items():
        block = data.get(table, {})
        if not isinstance(block, dict):
            raise ConfigError(f"[{table}] must be a table")
        for key in block:
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{table}]")
        for key, attr in keys.items():
            if key in block:
                kwargs[attr] = block[key]
    for table in data:
        if table not in _LAYOUT:
            raise ConfigError(f"unknown table [{table}]")
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _toml_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize value of type {type(value)!r}")


def serialize_config(cfg):
    """Emit an ExperimentConfig as TOML text (all fields, fixed order)."""
    lines = []
    for table, keys in _LAYOUT.items():
        lines.append(f"[{table}]")
        for key, attr in keys.items():
            value = getattr(cfg, attr)
            if value is None:
                if attr in _OPTIONAL:
                    continue
                raise ConfigError(f"field {attr} is unset")
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def config_equal(a, b):
    return all(getattr(a, f.name) == getattr(b, f.name) for f in fields(a))
