"""``key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Every key is optional; unknown
keys, malformed values and violated invariants raise a :class:`ConfigError`
subclass whose message starts with the offending line number.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .studies import default_eps_grid, refinement_steps
from .types import GridSpec, Parameters, SystemKind, Variant


class ConfigError(ValueError):
    def __init__(self, line: int | None, message: str):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class UnknownKey(ConfigError):
    pass


class ConfigTypeError(ConfigError):
    pass


class InvariantViolation(ConfigError):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: Parameters = Parameters()
    ds: float = 1e-2
    dt: float = 1e-2
    lam: float = 1.0
    variant: Variant = Variant.S
    kind: SystemKind = SystemKind.LIMIT
    t_end: float = 2.5
    # end time of sweeps and refinement studies
    study_t_end: float = 2.0
    eps_list: tuple[float, ...] = tuple(default_eps_grid())
    c1_window: tuple[float, float] = (1e-6, 1e-2)
    c2_window: tuple[float, float] = (1e-4, 1e-2)
    steps: tuple[float, ...] = tuple(refinement_steps())
    ref_ds: float = 1e-3
    ref_dt: float = 1e-3
    # cell size of the temporal refinement study
    time_ds: float = 2e-3
    tol: float = 1e-10
    max_iter: int = 25

    @property
    def grid(self) -> GridSpec:
        return GridSpec.from_steps(self.ds, self.dt, self.lam)


def _float(text: str) -> float:
    x = float(text)
    if not math.isfinite(x):
        raise ValueError("not finite")
    return x


def _int(text: str) -> int:
    return int(text)


def _bool(text: str) -> bool:
    key = text.strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _floats(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise ValueError("empty list")
    return tuple(_float(p) for p in parts)


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise ValueError("expected two numbers")
    return vals


def _positive(x) -> str | None:
    return None if x > 0 else "must be positive"


def _divides_unit(x) -> str | None:
    if not x > 0:
        return "must be positive"
    n = round(1.0 / x)
    return None if n >= 2 and abs(n * x - 1.0) <= 1e-9 else "must be 1/N for an integer N >= 2"


def _window(w) -> str | None:
    return None if 0 < w[0] < w[1] else "needs 0 < low < high"


def _all_positive(xs) -> str | None:
    return None if all(x > 0 for x in xs) else "entries must be positive"


# key -> (parser, check or None)
_KEYS = {
    "epsilon": (_float, lambda x: None if x >= 0 else "must be >= 0"),
    "mu": (_float, _positive),
    "a": (_float, lambda x: None if 2.0 <= x < 3.0 else "must lie in [2, 3)"),
    "nu": (_float, lambda x: None if 0.0 <= x < 0.5 else "must lie in [0, 0.5)"),
    "froude": (_float, _positive),
    "gravity": (_bool, None),
    "ds": (_float, _divides_unit),
    "dt": (_float, _positive),
    "lambda": (_float, lambda x: None if 0.5 <= x <= 1.0 else "must lie in [0.5, 1]"),
    "variant": (Variant.parse, None),
    "kind": (SystemKind.parse, None),
    "t_end": (_float, lambda x: None if x >= 0 else "must be >= 0"),
    "study_t_end": (_float, lambda x: None if x >= 0 else "must be >= 0"),
    "eps_list": (_floats, lambda xs: None if all(x > 0 for x in xs) else "entries must be positive"),
    "c1_window": (_pair, _window),
    "c2_window": (_pair, _window),
    "steps": (_floats, _all_positive),
    "ref_ds": (_float, _divides_unit),
    "ref_dt": (_float, _positive),
    "time_ds": (_float, _divides_unit),
    "tol": (_float, _positive),
    "max_iter": (_int, lambda x: None if x >= 1 else "must be >= 1"),
}
_ALIASES = {"lam": "lambda", "fr": "froude", "eps": "epsilon", "T": "t_end"}
_FIELD = {"lambda": "lam"}
KNOWN_KEYS = tuple(_KEYS)


def parse_config(text: str) -> RunConfig:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigTypeError(number, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in _KEYS:
            raise UnknownKey(number, f"unknown key {key!r}")
        if key in lines:
            raise InvariantViolation(number, f"{key!r} already set on line {lines[key]}")
        parser, check = _KEYS[key]
        try:
            parsed = parser(value)
        except ValueError as exc:
            raise ConfigTypeError(number, f"bad value {value!r} for {key!r} ({exc})") from None
        problem = check(parsed) if check else None
        if problem:
            raise InvariantViolation(number, f"{key} = {value}: {problem}")
        values[key] = parsed
        lines[key] = number
    return _build(values, lines)


def _build(values: dict, lines: dict) -> RunConfig:
    if "a" in values and "nu" in values:
        later = max(lines["a"], lines["nu"])
        raise InvariantViolation(later, "set either 'a' or 'nu', not both")
    pkw = {k: values[k] for k in ("epsilon", "mu", "a", "froude", "gravity") if k in values}
    if "nu" in values:
        pkw["a"] = 2.0 * (1.0 + values["nu"])
    try:
        params = Parameters(**pkw)
    except ValueError as exc:
        raise InvariantViolation(lines.get("nu", lines.get("a")), str(exc)) from None

    kw = {_FIELD.get(k, k): v for k, v in values.items()
          if k not in ("epsilon", "mu", "a", "nu", "froude", "gravity")}
    cfg = RunConfig(params=params, **kw)
    _check_end_time(cfg, lines)
    return cfg


def _check_end_time(cfg: RunConfig, lines: dict) -> None:
    try:
        cfg.grid.n_steps(cfg.t_end)
    except ValueError as exc:
        raise InvariantViolation(lines.get("t_end", lines.get("dt")), str(exc)) from None


def with_overrides(cfg: RunConfig, variant: str | None = None, kind: str | None = None,
                   lam: float | None = None) -> RunConfig:
    """Apply command-line flags on top of a parsed configuration."""
    changes = {}
    if variant is not None:
        changes["variant"] = Variant.parse(variant)
    if kind is not None:
        changes["kind"] = SystemKind.parse(kind)
    if lam is not None:
        if not 0.5 <= lam <= 1.0:
            raise InvariantViolation(None, f"--lambda {lam}: must lie in [0.5, 1]")
        changes["lam"] = float(lam)
    return dataclasses.replace(cfg, **changes)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
