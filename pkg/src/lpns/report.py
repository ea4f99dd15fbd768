"""Experiment configuration and machine-readable reports.

Configuration is layered: built-in defaults, then a flat ``key = value``
file, then ``LPNS_*`` environment variables, then command-line flags.
Reports are JSON documents written with sorted keys and ``repr`` floats so
that the same configuration and seed always give the same bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from . import __version__

ENV_PREFIX = "LPNS_"
SUITES = ("partition", "bernstein", "lorentz", "embedding", "paraproduct", "solver", "apriori", "hardy-young")
INITS = ("abc", "random-band", "single-mode")


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to the usage-error exit code)."""


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 32
    T: float = 1.0
    dt: float = 1e-3
    record_stride: int = 1
    seed: int = 0
    suite: str = "all"
    init: str = "abc"
    amplitude: float = 1.0
    out_dir: str = "lpns-out"
    parallel_seeds: int = 1
    # initial-data parameters
    abc_a: float = 1.0
    abc_b: float = 1.0
    abc_c: float = 1.0
    mode: str = "1,1,0"
    kmin: float = 2.0
    kmax: float = 0.0  # 0 means n/4
    # solver
    cfl: float = 0.5
    nonlinear: bool = True
    sharpness: float = 1.0
    # small-data sweeps
    seeds: int = 20
    apriori_dt: float = 2.0**-7
    j_stride: int = 4
    # calibration
    calib_dt: float = 2.0**-7
    amp_min: float = 0.25
    amp_max: float = 4.0
    amp_points: int = 5
    calib_seeds: int = 2
    bisect_steps: int = 3
    # inequality suites
    bernstein_fields: int = 100
    reconstruction_fields: int = 50
    paraproduct_pairs: int = 50
    embedding_trials: int = 200
    embedding_n: int = 16
    hy_sequences: int = 1000
    hy_length: int = 64

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.type in ("int", "float") and not isinstance(value, bool):
                if not math.isfinite(value):
                    raise ConfigError(f"{f.name} must be finite, got {value}")
        positive = [
            "n", "T", "dt", "record_stride", "amplitude", "parallel_seeds", "abc_a", "abc_b", "abc_c",
            "kmin", "cfl", "sharpness", "seeds", "apriori_dt", "calib_dt", "j_stride", "amp_min", "amp_max",
            "amp_points", "calib_seeds", "bernstein_fields", "reconstruction_fields", "paraproduct_pairs",
            "embedding_trials", "embedding_n", "hy_sequences", "hy_length",
        ]  # fmt: skip
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.seed < 0 or self.kmax < 0 or self.bisect_steps < 0:
            raise ConfigError("seed, kmax and bisect_steps must be nonnegative")
        if self.n < 8 or self.n & (self.n - 1) or self.embedding_n < 8 or self.embedding_n & (self.embedding_n - 1):
            raise ConfigError("grid sizes must be powers of two >= 8")
        if self.suite not in SUITES + ("all",):
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES + ('all',))}")
        if self.init not in INITS:
            raise ConfigError(f"unknown init {self.init!r}; choose from {', '.join(INITS)}")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-9 * steps or round(steps) % self.record_stride:
            raise ConfigError(f"T={self.T} must be a whole number of steps dt={self.dt}, divisible by record_stride")
        for name in ("apriori_dt", "calib_dt"):
            inv = 1.0 / getattr(self, name)
            if abs(inv - round(inv)) > 1e-9 * inv:
                raise ConfigError(f"{name} must divide 1")
        if self.amp_min >= self.amp_max:
            raise ConfigError("amp_min must be below amp_max")
        mode_vector(self.mode)

    @property
    def suites(self) -> tuple[str, ...]:
        return SUITES if self.suite == "all" else (self.suite,)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def mode_vector(text: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(p) for p in str(text).replace(" ", "").split(","))
    except ValueError as exc:
        raise ConfigError(f"mode must be three integers 'k1,k2,k3', got {text!r}") from exc
    if len(parts) != 3 or parts == (0, 0, 0):
        raise ConfigError(f"mode must be a nonzero integer triple, got {text!r}")
    return parts  # type: ignore[return-value]


_FIELD_BY_LOWER = {f.name.lower(): f.name for f in fields(ExperimentConfig)}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, raw: Any) -> Any:
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in kinds:
        raise ConfigError(f"unknown configuration key {name!r}")
    if not isinstance(raw, str):
        return raw
    kind = kinds[name]
    text = raw.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if kind == "int":
            as_float = float(text)
            if not as_float.is_integer():
                raise ValueError(text)
            return int(as_float)
        if kind == "float":
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return text


def _key(name: str) -> str:
    """Normalise a flag, file or environment key; matching is case-insensitive."""
    key = name.strip().lstrip("-").replace("-", "_")
    return _FIELD_BY_LOWER.get(key.lower(), key)


def parse_config_text(text: str) -> dict[str, Any]:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys mirror the flags."""
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else (":" if ":" in line else None)
        if sep is None:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split(sep, 1)
        key = _key(key)
        out[key] = _coerce(key, value)
    return out


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, Any]:
    environ = os.environ if environ is None else environ
    names = {f.name for f in fields(ExperimentConfig)}
    out = {}
    for var, value in environ.items():
        if var.startswith(ENV_PREFIX):
            key = _key(var[len(ENV_PREFIX) :])
            if key in names:
                out[key] = _coerce(key, value)
    return out


def load_config(
    config_file: str | os.PathLike | None = None,
    flags: Mapping[str, Any] | None = None,
    environ: Mapping[str, str] | None = None,
) -> ExperimentConfig:
    """defaults < config file < environment < flags (``None`` flags are unset)."""
    values: dict[str, Any] = {}
    if config_file is not None:
        try:
            text = Path(config_file).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {config_file}: {exc}") from exc
        values.update(parse_config_text(text))
    values.update(env_overrides(environ))
    for key, value in (flags or {}).items():
        if value is not None:
            values[_key(key)] = _coerce(_key(key), value)
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class CheckRow:
    """One pass/fail record; ``source`` names where the bound comes from."""

    name: str
    measured: float
    bound: float
    passed: bool
    source: str
    lower: float | None = None
    note: str = ""

    @property
    def ratio(self) -> float:
        if self.bound == 0 or not math.isfinite(self.bound):
            return math.nan
        return self.measured / self.bound

    def to_dict(self) -> dict[str, Any]:
        d = {
            "name": self.name,
            "measured": _num(self.measured),
            "bound": _num(self.bound),
            "ratio": _num(self.ratio),
            "passed": bool(self.passed),
            "source": self.source,
        }
        if self.lower is not None:
            d["lower"] = _num(self.lower)
        if self.note:
            d["note"] = self.note
        return d


def check(name: str, measured: float, bound: float, source: str, lower: float | None = None, note: str = "") -> CheckRow:
    """Row that passes when lower <= measured <= bound."""
    measured = float(measured)
    ok = math.isfinite(measured) and measured <= bound and (lower is None or measured >= lower)
    return CheckRow(name, measured, float(bound), bool(ok), source, None if lower is None else float(lower), note)


def _num(x) -> float | str | None:
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    checks: list[CheckRow] = field(default_factory=list)
    constants: dict[str, Any] = field(default_factory=dict)
    series: list[str] = field(default_factory=list)
    status: str = "ok"
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def extend(self, rows: Iterable[CheckRow]):
        self.checks.extend(rows)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "checks": [c.to_dict() for c in self.checks],
            "constants": {k: (_num(v) if isinstance(v, (float, np.floating)) else v) for k, v in self.constants.items()},
            "series": list(self.series),
            "status": self.status,
            "passed": self.passed,
            "n_checks": len(self.checks),
            "n_failed": sum(not c.passed for c in self.checks),
            "version": self.version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path: str | os.PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        return path


def read_report(path: str | os.PathLike) -> dict[str, Any]:
    return json.loads(Path(path).read_text())


def format_report(doc: Mapping[str, Any]) -> str:
    """Plain-text table of a saved report."""
    lines = [f"lpns report (version {doc.get('version', '?')}, status {doc.get('status', '?')})"]
    cfg = doc.get("config", {})
    lines.append("config: " + " ".join(f"{k}={cfg[k]}" for k in ("suite", "n", "T", "dt", "seed", "init") if k in cfg))
    checks = doc.get("checks", [])
    width = max([len(c["name"]) for c in checks] + [5])
    lines.append(f"{'check':<{width}}  {'measured':>12}  {'bound':>12}  result  source")
    for c in checks:
        flag = "pass" if c["passed"] else "FAIL"
        lines.append(f"{c['name']:<{width}}  {_fmt(c['measured']):>12}  {_fmt(c['bound']):>12}  {flag:<6}  {c['source']}")
    consts = doc.get("constants", {})
    if consts:
        lines.append("constants: " + ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(consts.items())))
    for s in doc.get("series", []):
        lines.append(f"series: {s}")
    lines.append(f"{doc.get('n_checks', len(checks)) - doc.get('n_failed', 0)}/{doc.get('n_checks', len(checks))} checks passed")
    return "\n".join(lines)


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return str(x)
    return f"{x:.6g}"


def write_csv(path: str | os.PathLike, header: list[str], rows) -> Path:
    """CSV with ``repr``-exact floats (17 significant digits)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def with_overrides(config: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(config, **changes)
