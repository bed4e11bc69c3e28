"""Flat ``key = value`` experiment configuration.

Lists are whitespace separated, ``#`` starts a comment.  :func:`parse_config`
collects every violation before failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .estimators import bernstein_admissible, sampling_order
from .kernels import SUPPORTED_M
from .manifold import manifold_bernstein_admissible

KINDS = (
    "bernstein", "nikolskii", "stability", "native-inverse", "sampling", "gn-check",
    "manifold-bernstein", "manifold-nikolskii", "equivalence", "poincare",
)
GEOMETRIES = ("interval", "box", "disk", "annulus", "circle")
MANIFOLD_KINDS = ("manifold-bernstein", "manifold-nikolskii", "equivalence")


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class ExperimentConfig:
    kind: str
    geometry: str = "interval"
    bounds: tuple = ()
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    delta: float = 0.1
    cone_angle: float = math.pi / 4
    cone_radius: float = 0.1
    m: float = 2.0
    d: int = 1
    s: float | None = None
    t: float = 0.0
    alpha: float | None = None
    m_order: float | None = None
    beta: float | None = None
    q_norm: float = 2.0
    p: float = 2.0
    rho_norm: float = 2.0
    levels: tuple = ()
    generator: str = "uniform"
    fps_factor: int = 10
    seed: int = 0
    rule_offset: int = 2
    resolution: int = 100_000
    slope_min: float | None = None
    slope_max: float | None = None
    trials: int = 20
    c_delta: float = 0.25
    K: int = 10
    ratio_min: float = 1.0 / 3.0
    ratio_max: float = 3.0
    p_values: tuple = (1.0, 2.0, 3.0)
    deltas: tuple = (0.1, 0.5)
    degree: int = 5
    amplitude: float = 1.0
    extras: dict = field(default_factory=dict, repr=False)

    def host_config(self) -> dict:
        cfg = {"geometry": self.geometry, "cone_angle": self.cone_angle, "cone_radius": self.cone_radius}
        if self.geometry == "interval":
            a, b = self.bounds or (0.0, 1.0)
            cfg.update(lower=(a,), upper=(b,))
        elif self.geometry == "box":
            x0, x1, y0, y1 = self.bounds or (0.0, 1.0, 0.0, 1.0)
            cfg.update(lower=(x0, y0), upper=(x1, y1))
        elif self.geometry == "disk":
            cfg.update(center=self.center, radius=self.radius)
        elif self.geometry == "annulus":
            cfg.update(delta=self.delta)
        return cfg


_TUPLE_KEYS = {"bounds": float, "center": float, "levels": int, "p_values": float, "deltas": float}
_INT_KEYS = {"d", "fps_factor", "seed", "rule_offset", "resolution", "trials", "K", "degree"}
_STR_KEYS = {"kind", "geometry", "generator"}
_INF_KEYS = {"q_norm", "p", "rho_norm"}
_FIELDS = [f.name for f in fields(ExperimentConfig) if f.name != "extras"]


def _convert(key, raw):
    if key in _TUPLE_KEYS:
        return tuple(_TUPLE_KEYS[key](v) for v in raw.split())
    if key in _STR_KEYS:
        return raw
    if key in _INT_KEYS:
        return int(raw)
    if key in _INF_KEYS and raw.lower() in ("inf", "infinity"):
        return math.inf
    return float(raw)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate; raises :class:`ConfigError` listing every violation."""
    errors, values = [], {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            errors.append(f"line {lineno}: unknown key '{key}'")
            continue
        if key in values:
            errors.append(f"line {lineno}: duplicate key '{key}'")
            continue
        try:
            values[key] = _convert(key, raw)
        except ValueError:
            errors.append(f"line {lineno}: bad value for '{key}': {raw!r}")
    values.update(overrides or {})
    if "kind" not in values:
        errors.append("missing required key 'kind'")
        raise ConfigError(errors)
    cfg = ExperimentConfig(**values)
    errors += validate(cfg, set(values))
    if errors:
        raise ConfigError(errors)
    return cfg


def _require(cfg, present, keys, errors):
    for k in keys:
        if k not in present or getattr(cfg, k) is None:
            errors.append(f"{cfg.kind}: missing required key '{k}'")


def validate(cfg: ExperimentConfig, present=None) -> list[str]:
    present = set(_FIELDS) if present is None else present
    errors = []
    if cfg.kind not in KINDS:
        return [f"unknown kind '{cfg.kind}' (one of {', '.join(KINDS)})"]
    if cfg.geometry not in GEOMETRIES:
        errors.append(f"unknown geometry '{cfg.geometry}'")
    d_geom = 1 if cfg.geometry == "interval" else 2
    if "d" in present and cfg.d != d_geom:
        errors.append(f"d={cfg.d} does not match geometry '{cfg.geometry}' (d={d_geom})")
    cfg.d = d_geom
    if cfg.kind in MANIFOLD_KINDS and cfg.geometry != "circle":
        errors.append(f"{cfg.kind} runs on geometry 'circle'")
    if cfg.geometry == "circle" and cfg.kind not in MANIFOLD_KINDS + ("poincare",):
        errors.append(f"{cfg.kind} runs on a domain, not on the circle")
    if cfg.geometry == "interval" and cfg.bounds and len(cfg.bounds) != 2:
        errors.append("interval bounds need 'a b'")
    if cfg.geometry == "box" and cfg.bounds and len(cfg.bounds) != 4:
        errors.append("box bounds need 'x0 x1 y0 y1'")
    if cfg.geometry == "annulus" and not 0 < cfg.delta < 1:
        errors.append("annulus needs 0 < delta < 1")
    if not 0 < cfg.cone_angle < math.pi / 2:
        errors.append("cone_angle must lie in (0, pi/2)")
    if cfg.generator not in ("uniform", "fps"):
        errors.append("generator must be 'uniform' or 'fps'")
    if cfg.kind != "poincare":
        supported = SUPPORTED_M[d_geom]
        if not any(abs(cfg.m - v) < 1e-12 for v in supported):
            errors.append(f"m={cfg.m} unsupported for d={d_geom} (half-integer nu: {supported})")
        if "levels" not in present or not cfg.levels:
            errors.append("missing required key 'levels'")
        elif len(cfg.levels) < 4 and cfg.kind != "equivalence":
            errors.append("an exponent fit needs at least 4 levels")
        elif any(b <= a for a, b in zip(cfg.levels, cfg.levels[1:])):
            errors.append("levels must be strictly increasing")
        elif min(cfg.levels) < 0:
            errors.append("levels must be non-negative")
    if cfg.slope_min is not None and cfg.slope_max is not None and cfg.slope_min > cfg.slope_max:
        errors.append("slope_min exceeds slope_max")
    m, d = cfg.m, d_geom
    tau = m - 0.5
    k = cfg.kind
    if k == "bernstein":
        _require(cfg, present, ["s"], errors)
        if cfg.s is not None and not bernstein_admissible(cfg.s, m, d):
            errors.append(
                f"s={cfg.s} violates the Bernstein hypothesis d/2 < s <= m or 0 <= s <= floor(m)"
            )
    elif k == "stability":
        _require(cfg, present, ["s"], errors)
        if cfg.s is not None and not 0 <= cfg.s <= math.floor(m):
            errors.append(f"s={cfg.s} violates the stability hypothesis 0 <= s <= floor(m)")
    elif k == "sampling":
        _require(cfg, present, ["s"], errors)
        if cfg.p != 2:
            errors.append("sampling supports p = 2 only")
        if cfg.q_norm not in (1.0, 2.0, math.inf):
            errors.append("q_norm must be 1, 2 or inf")
        if cfg.s is not None:
            l = sampling_order(m, d, cfg.p, cfg.q_norm)
            if not (0 <= cfg.s <= l) or not float(cfg.s).is_integer():
                errors.append(
                    f"s={cfg.s} violates the sampling hypothesis: integer 0 <= s <= l = {l} "
                    "(l from m - d(1/p - 1/q)_+)"
                )
    elif k == "gn-check":
        _require(cfg, present, ["alpha", "m_order"], errors)
        if cfg.alpha is not None and cfg.m_order is not None:
            if not cfg.t < cfg.alpha < cfg.m_order <= m:
                errors.append("gn-check needs t < alpha < m_order <= m (theta in (0, 1))")
    elif k == "manifold-bernstein":
        _require(cfg, present, ["beta"], errors)
        if cfg.beta is not None and not manifold_bernstein_admissible(cfg.beta, tau):
            errors.append(
                f"beta={cfg.beta} violates the manifold Bernstein hypothesis "
                f"1/2 < beta <= tau = {tau} or 0 <= beta <= floor(tau - 1/2)"
            )
    elif k == "equivalence":
        _require(cfg, present, ["beta"], errors)
        if cfg.beta is not None:
            cap = math.floor(tau - 0.5)
            if not (0 <= cfg.beta <= cap and float(cfg.beta).is_integer()):
                errors.append(
                    f"beta={cfg.beta} violates the band-equivalence hypothesis "
                    f"integer 0 <= beta <= floor(tau - 1/2) = {cap}"
                )
        if not cfg.c_delta > 0:
            errors.append("c_delta must be positive")
    elif k == "poincare":
        if any(p < 1 for p in cfg.p_values):
            errors.append("poincare needs p >= 1")
        if any(not 0 < dl for dl in cfg.deltas):
            errors.append("poincare deltas must be positive")
    if cfg.trials < 1:
        errors.append("trials must be positive")
    return errors


def _format_value(v):
    if isinstance(v, tuple):
        return " ".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return "inf" if v == math.inf else repr(v)
    return str(v)


def format_config(cfg: ExperimentConfig) -> str:
    """Serialise every non-default field; ``parse_config`` inverts it."""
    default = ExperimentConfig(kind=cfg.kind)
    lines = [f"kind = {cfg.kind}"]
    for name in _FIELDS:
        if name == "kind":
            continue
        v = getattr(cfg, name)
        if v is None:
            continue
        if v != getattr(default, name) or name in ("geometry", "m", "levels"):
            lines.append(f"{name} = {_format_value(v)}")
    return "\n".join(lines) + "\n"


def config_dict(cfg: ExperimentConfig) -> dict:
    out = {}
    for name in _FIELDS:
        v = getattr(cfg, name)
        if isinstance(v, tuple):
            v = list(v)
        if isinstance(v, float) and math.isinf(v):
            v = "inf"
        out[name] = v
    return out
