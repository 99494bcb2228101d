"""Run configuration: a line-oriented ``key = value`` grammar with ``#`` comments.

Every key is validated before any computation starts; unknown keys are
errors, so a misspelt key never silently falls back to its default.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .evolution import Method, SolverConfig
from .spectral import GridError, PeriodicGrid
from .symbols import ModelParams, Operator, ParameterError


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


IC_KINDS = {
    "cosine": ("amplitude", "wavenumber"),
    "gaussian": ("amplitude", "width"),
    "random_sobolev": ("s", "norm", "seed"),
    "coeff_file": ("path",),
}


@dataclass(frozen=True)
class InitialConditionSpec:
    kind: str
    args: tuple

    def __str__(self):
        return f"{self.kind}({', '.join(str(a) for a in self.args)})"


_IC_RE = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


def parse_initial_condition(text: str) -> InitialConditionSpec:
    m = _IC_RE.match(text)
    if not m:
        raise ConfigError("ic", f"expected kind(args...), got {text!r}")
    kind, body = m.group(1), m.group(2)
    if kind not in IC_KINDS:
        raise ConfigError("ic", f"unknown kind {kind!r}; one of {', '.join(IC_KINDS)}")
    names = IC_KINDS[kind]
    if kind == "coeff_file":
        path = body.strip().strip("'\"")
        if not path:
            raise ConfigError("ic", "coeff_file needs a path")
        return InitialConditionSpec(kind, (path,))
    parts = [x.strip() for x in body.split(",")] if body.strip() else []
    if len(parts) != len(names):
        raise ConfigError("ic", f"{kind} takes ({', '.join(names)}), got {len(parts)} arguments")
    args = []
    for name, raw in zip(names, parts):
        try:
            value = int(raw) if name in ("wavenumber", "seed") else float(raw)
        except ValueError:
            raise ConfigError("ic", f"{kind}: {name} must be a number, got {raw!r}") from None
        args.append(value)
    if kind == "cosine" and args[1] < 0:
        raise ConfigError("ic", "cosine: wavenumber must be >= 0")
    if kind == "gaussian" and not args[1] > 0:
        raise ConfigError("ic", "gaussian: width must be > 0")
    if kind == "random_sobolev" and not args[1] >= 0:
        raise ConfigError("ic", "random_sobolev: norm must be >= 0")
    return InitialConditionSpec(kind, tuple(args))


# --- value converters -------------------------------------------------------


def _float(key, raw):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(key, f"expected a real number, got {raw!r}") from None
    if math.isnan(value):
        raise ConfigError(key, "NaN is not allowed")
    return value


def _int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {raw!r}") from None


def _bool(key, raw):
    v = raw.lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ConfigError(key, f"expected true/false, got {raw!r}")


def _floats(key, raw):
    return tuple(_float(key, x.strip()) for x in raw.split(",") if x.strip())


def _ints(key, raw):
    return tuple(_int(key, x.strip()) for x in raw.split(",") if x.strip())


def _choice(*options):
    def conv(key, raw):
        v = raw.lower()
        if v not in options:
            raise ConfigError(key, f"expected one of {', '.join(options)}, got {raw!r}")
        return v
    return conv


def _str(key, raw):
    return raw.strip().strip("'\"")


def _ic(key, raw):
    return parse_initial_condition(raw)


# key -> (converter, default, help). Defaults of None mean "required" or "unset".
SCHEMA = {
    # model
    "alpha": (_float, None, "nonlinearity strength α > 0 (required)"),
    "a": (_float, None, "regularization coefficient a > 0 (required)"),
    "b": (_float, None, "dispersion coefficient b > 0 (required)"),
    "h": (_float, None, "strip depth h > 0 (required when operator = strip)"),
    "operator": (_choice("hilbert", "strip"), None, "nonlocal operator: hilbert | strip (required)"),
    "allow_b_zero": (_bool, False, "accept b = 0 (BBM limit) with a warning"),
    # grid
    "n_points": (_int, None, "collocation points, power of two >= 8 (required)"),
    # solver
    "method": (_choice("rk4", "picard_duhamel"), "rk4", "time stepper: rk4 | picard_duhamel"),
    "dt": (_float, None, "time step > 0 (required by evolving commands)"),
    "t_end": (_float, None, "final time, may be negative (required by evolving commands)"),
    "picard_tol": (_float, 1e-12, "Picard stopping threshold in the H^1 norm"),
    "picard_max_iter": (_int, 50, "Picard iteration cap per step"),
    "quad_substeps": (_int, 4, "Duhamel quadrature nodes per step (>= 2)"),
    "dealias": (_bool, True, "exact 3/2-padded products"),
    "diagnostics_every": (_int, 10, "record diagnostics every this many steps"),
    "bilinear_constant": (_float, None, "fixed C_{s,s} for the Picard guard (default: sampled)"),
    "bilinear_trials": (_int, 200, "random pairs used to sample C_{s,s}"),
    # data and bookkeeping
    "ic": (_ic, None, "initial condition (required by evolving commands):"
           " cosine(amplitude, wavenumber) | gaussian(amplitude, width) |"
           " random_sobolev(s, norm, seed) | coeff_file(path)"),
    "sobolev_s": (_float, 1.0, "Sobolev index s of the reported norm_s"),
    "seed": (_int, 0, "seed for every randomized estimate and probe"),
    "output_dir": (_str, "out", "directory receiving CSV/JSON outputs"),
    "snapshot_every": (_int, 0, "also write every n-th diagnostic snapshot (0: first and last only)"),
    "conservation_tol": (_float, 1e-6, "allowed relative drift of the conserved norm"),
    # command specific
    "times": (_floats, None, "linear: output times (default 0, t_end)"),
    "split_cutoffs": (_ints, (2, 8, 32), "split: frequency cutoffs N"),
    "probe_T_fraction": (_float, 0.25, "probe-contraction: T as a fraction of T'"),
    "probe_trials": (_int, 100, "probe-contraction: sampled pairs"),
    "probe_nodes": (_int, 64, "probe-contraction: time nodes per half interval"),
    "epsilons": (_floats, (1e-2, 1e-4), "probe-continuity: perturbation sizes"),
    "conv_dts": (_floats, (4e-3, 2e-3, 1e-3), "convergence: tested time steps"),
    "conv_grids": (_ints, (32, 64, 128), "convergence: tested grid sizes"),
    "conv_ref_dt": (_float, None, "convergence: reference step (default min(conv_dts)/8)"),
}

MODEL_KEYS = ("alpha", "a", "b", "operator", "n_points")
EVOLVE_KEYS = MODEL_KEYS + ("dt", "t_end", "ic")


@dataclass(frozen=True)
class RunConfig:
    raw: dict = field(repr=False)
    alpha: float = None
    a: float = None
    b: float = None
    h: Optional[float] = None
    operator: str = None
    allow_b_zero: bool = False
    n_points: int = None
    method: str = "rk4"
    dt: Optional[float] = None
    t_end: Optional[float] = None
    picard_tol: float = 1e-12
    picard_max_iter: int = 50
    quad_substeps: int = 4
    dealias: bool = True
    diagnostics_every: int = 10
    bilinear_constant: Optional[float] = None
    bilinear_trials: int = 200
    ic: Optional[InitialConditionSpec] = None
    sobolev_s: float = 1.0
    seed: int = 0
    output_dir: str = "out"
    snapshot_every: int = 0
    conservation_tol: float = 1e-6
    times: Optional[tuple] = None
    split_cutoffs: tuple = (2, 8, 32)
    probe_T_fraction: float = 0.25
    probe_trials: int = 100
    probe_nodes: int = 64
    epsilons: tuple = (1e-2, 1e-4)
    conv_dts: tuple = (4e-3, 2e-3, 1e-3)
    conv_grids: tuple = (32, 64, 128)
    conv_ref_dt: Optional[float] = None

    def params(self) -> ModelParams:
        return ModelParams(alpha=self.alpha, a=self.a, b=self.b,
                           h=self.h if self.h is not None else math.inf,
                           operator=Operator(self.operator), allow_b_zero=self.allow_b_zero)

    def grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.n_points)

    def solver(self, **overrides) -> SolverConfig:
        kw = dict(dt=self.dt, t_end=self.t_end, method=Method(self.method), picard_tol=self.picard_tol,
                  picard_max_iter=self.picard_max_iter, quad_substeps=self.quad_substeps,
                  diagnostics_every=self.diagnostics_every, dealias=self.dealias, sobolev_s=self.sobolev_s,
                  bilinear_constant=self.bilinear_constant, bilinear_trials=self.bilinear_trials, seed=self.seed)
        kw.update(overrides)
        return SolverConfig(**kw)

    def resolved(self) -> dict:
        """Every key with its effective value, JSON-ready."""
        out = {}
        for f in fields(self):
            if f.name == "raw":
                continue
            v = getattr(self, f.name)
            out[f.name] = str(v) if isinstance(v, InitialConditionSpec) else (list(v) if isinstance(v, tuple) else v)
        return out


assert set(SCHEMA) == {f.name for f in fields(RunConfig)} - {"raw"}


def tokenize(text: str) -> dict:
    """Raw ``key -> value`` strings, in file order. Duplicate keys are errors."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        if key in raw:
            raise ConfigError(key, f"duplicate key (line {lineno})")
        raw[key] = value
    return raw


def parse_config(text: str, required=EVOLVE_KEYS, overrides: Optional[dict] = None) -> RunConfig:
    """Parse and validate a configuration.

    ``required`` lists the keys that must be present; ``overrides`` replace
    or add raw values (as the CLI's ``--set`` does).
    """
    raw = tokenize(text)
    if overrides:
        raw.update(overrides)
    unknown = [k for k in raw if k not in SCHEMA]
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    for key in required:
        if key not in raw:
            raise ConfigError(key, "missing required key")
    values = {}
    for key, text_value in raw.items():
        conv = SCHEMA[key][0]
        if text_value == "":
            raise ConfigError(key, "empty value")
        values[key] = conv(key, text_value)
    cfg = RunConfig(raw=dict(raw), **values)
    _validate(cfg, required)
    return cfg


def load_config(path, required=EVOLVE_KEYS, overrides=None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, required, overrides)


def _validate(cfg: RunConfig, required):
    if cfg.operator == "strip" and cfg.h is None:
        raise ConfigError("h", "required when operator = strip")
    if cfg.alpha is not None and not (cfg.alpha > 0 and math.isfinite(cfg.alpha)):
        raise ConfigError("alpha", f"must be a positive constant, got {cfg.alpha:g}")
    if cfg.a is not None and not (cfg.a > 0 and math.isfinite(cfg.a)):
        raise ConfigError("a", f"must be a positive constant, got {cfg.a:g}")
    if cfg.b is not None:
        if cfg.b < 0 or not math.isfinite(cfg.b) or (cfg.b == 0 and not cfg.allow_b_zero):
            raise ConfigError("b", f"must be a positive constant, got {cfg.b:g}"
                                   + (" (set allow_b_zero = true for the BBM limit)" if cfg.b == 0 else ""))
    if cfg.h is not None and not (cfg.h > 0 and math.isfinite(cfg.h)):
        raise ConfigError("h", f"must be finite and > 0, got {cfg.h:g}")
    if cfg.n_points is not None:
        try:
            PeriodicGrid(cfg.n_points)
        except GridError as exc:
            raise ConfigError("n_points", str(exc)) from None
    if cfg.dt is not None and not (cfg.dt > 0 and math.isfinite(cfg.dt)):
        raise ConfigError("dt", f"must be finite and > 0, got {cfg.dt:g}")
    if cfg.t_end is not None and not math.isfinite(cfg.t_end):
        raise ConfigError("t_end", "must be finite")
    checks = [
        ("picard_tol", cfg.picard_tol > 0, "must be > 0"),
        ("picard_max_iter", cfg.picard_max_iter >= 1, "must be >= 1"),
        ("quad_substeps", cfg.quad_substeps >= 2, "must be >= 2"),
        ("diagnostics_every", cfg.diagnostics_every >= 1, "must be >= 1"),
        ("bilinear_trials", cfg.bilinear_trials >= 1, "must be >= 1"),
        ("snapshot_every", cfg.snapshot_every >= 0, "must be >= 0"),
        ("conservation_tol", cfg.conservation_tol > 0, "must be > 0"),
        ("probe_T_fraction", 0 < cfg.probe_T_fraction < 1, "must lie in (0, 1)"),
        ("probe_trials", cfg.probe_trials >= 1, "must be >= 1"),
        ("probe_nodes", cfg.probe_nodes >= 2, "must be >= 2"),
        ("bilinear_constant", cfg.bilinear_constant is None or cfg.bilinear_constant > 0, "must be > 0"),
        ("conv_ref_dt", cfg.conv_ref_dt is None or cfg.conv_ref_dt > 0, "must be > 0"),
        ("epsilons", all(e >= 0 for e in cfg.epsilons) and len(cfg.epsilons) > 0, "need nonnegative values"),
        ("conv_dts", all(d > 0 for d in cfg.conv_dts), "need positive values"),
    ]
    for key, ok, message in checks:
        if not ok:
            raise ConfigError(key, message)
    if cfg.times is not None and any(b <= a for a, b in zip(cfg.times, cfg.times[1:])):
        raise ConfigError("times", "must be strictly increasing")
    if cfg.n_points is not None:
        K = cfg.n_points // 2 - 1
        if any(not 0 <= n <= K for n in cfg.split_cutoffs):
            raise ConfigError("split_cutoffs", f"each cutoff must lie in [0, {K}]")
        if cfg.ic is not None and cfg.ic.kind == "cosine" and cfg.ic.args[1] > K:
            raise ConfigError("ic", f"cosine wavenumber {cfg.ic.args[1]} exceeds the cutoff {K}")
    for g in cfg.conv_grids:
        try:
            PeriodicGrid(g)
        except GridError as exc:
            raise ConfigError("conv_grids", str(exc)) from None
    try:
        if all(getattr(cfg, k) is not None for k in ("alpha", "a", "b", "operator")):
            cfg.params()
    except ParameterError as exc:
        key = str(exc).split(":", 1)[0]
        raise ConfigError(key, str(exc).split(":", 1)[1].strip()) from None


def describe_keys() -> str:
    """Help text listing every key with its default."""
    lines = []
    for key, (_conv, default, text) in SCHEMA.items():
        d = "" if default is None else f" [default: {','.join(map(str, default)) if isinstance(default, tuple) else default}]"
        lines.append(f"  {key:<18} {text}{d}")
    return "\n".join(lines)
