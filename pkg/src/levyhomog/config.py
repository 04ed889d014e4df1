"""INI-style configuration files.

Example::

    [problem]
    alpha = 1
    c = "2+cos(2*pi*y)"
    g = "sin(2*pi*y)"
    phi = "0"
    far_field = 0

Every section except ``[problem]`` is optional; missing keys take the defaults
below, malformed values and unknown keys are errors.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .cell import CoefficientSet, DiscountSchedule
from .errors import ConfigError, InvalidParameter
from .exprs import ParseError, parse, validate_periodic

__all__ = ["Config", "load_config", "parse_config"]

KNOWN = {
    "problem": {"alpha", "c", "g", "a", "phi", "far_field", "epsilon", "domain"},
    "discretization": {"n_torus", "h_rule", "R", "R_torus", "zeta_rule"},
    "cell": {"schedule", "method", "I", "I_samples", "extrapolation_order", "gap_bound"},
    "sweep": {"epsilons", "refinement", "margin"},
    "output": {"dir", "formats"},
}
REQUIRED = {"problem": {"alpha", "c", "g", "phi", "far_field"}}


@dataclass(frozen=True)
class Config:
    coeffs: CoefficientSet
    epsilon: float = 0.125
    domain: tuple[float, float] = (0.0, 1.0)
    n_torus: int = 512
    refinement: int = 16
    R: float = 1.0
    R_torus: float = 128.0
    zeta_factor: float = 1.0
    schedule: DiscountSchedule = field(default_factory=DiscountSchedule.geometric)
    method: str = "direct"
    I: float = 0.0
    I_samples: tuple[float, ...] = (-2.0, -1.0, 0.0, 1.0, 2.0)
    gap_bound: float = 5e-2
    epsilons: tuple[float, ...] = (1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64)
    margin: float = 0.1
    out_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json", "svg")


def _unquote(s: str) -> str:
    s = s.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    return s


def _number(key: str, raw: str) -> float:
    try:
        v = float(Fraction(_unquote(raw)))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(key, f"not a number: {raw!r}") from None
    if not math.isfinite(v):
        raise ConfigError(key, "must be finite")
    return v


def _integer(key: str, raw: str) -> int:
    try:
        return int(_unquote(raw))
    except ValueError:
        raise ConfigError(key, f"not an integer: {raw!r}") from None


def _numbers(key: str, raw: str) -> tuple[float, ...]:
    parts = [p for p in _unquote(raw).split(",") if p.strip()]
    if not parts:
        raise ConfigError(key, "empty list")
    return tuple(_number(key, p) for p in parts)


def _expr(key: str, raw: str, variable: str, periodic: bool):
    try:
        e = parse(_unquote(raw), variable=variable)
    except ParseError as err:
        raise ConfigError(key, f"cannot parse expression: {err}") from None
    if periodic:
        rep = validate_periodic(e, 64, 1e-9)
        if not rep.passed:
            raise ConfigError(key, f"not periodic (max deviation {rep.max_deviation:.3g})")
    return e


_SCHEDULE = re.compile(r"geometric\(\s*([^,]+),\s*([^,]+),\s*([^)]+)\)$")


def _schedule(raw: str, order: int) -> DiscountSchedule:
    text = _unquote(raw)
    m = _SCHEDULE.match(text)
    try:
        if m:
            start, stop, ratio = (_number("cell.schedule", g) for g in m.groups())
            if not 0 < ratio < 1:
                raise ConfigError("cell.schedule", "ratio must lie in (0, 1)")
            return DiscountSchedule.geometric(start, stop, ratio, order)
        return DiscountSchedule(_numbers("cell.schedule", text), order)
    except InvalidParameter as err:
        raise ConfigError("cell.schedule", str(err)) from None


def _zeta(raw: str) -> float:
    text = _unquote(raw).replace(" ", "")
    if text == "h":
        return 1.0
    if text.endswith("*h"):
        f = _number("discretization.zeta_rule", text[:-2])
        if not 0 < f <= 1:
            raise ConfigError("discretization.zeta_rule", "factor must lie in (0, 1]")
        return f
    raise ConfigError("discretization.zeta_rule", f"expected 'h' or '<factor>*h', got {raw!r}")


def _h_rule(raw: str) -> int:
    text = _unquote(raw).replace(" ", "")
    if text.startswith("eps/"):
        k = _integer("discretization.h_rule", text[4:])
        if k < 8:
            raise ConfigError("discretization.h_rule", "need at least 8 points per period")
        return k
    raise ConfigError("discretization.h_rule", f"expected 'eps/<points per period>', got {raw!r}")


def parse_config(text: str) -> Config:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ConfigError("<file>", f"malformed INI: {err}") from None
    for section in cp.sections():
        if section not in KNOWN:
            raise ConfigError(section, "unknown section")
        for key in cp[section]:
            if key not in KNOWN[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    for section, keys in REQUIRED.items():
        if section not in cp:
            raise ConfigError(section, "missing section")
        for key in keys:
            if key not in cp[section]:
                raise ConfigError(f"{section}.{key}", "missing required key")

    pr = cp["problem"]
    alpha = _number("alpha", pr["alpha"])
    if not 0 < alpha < 2:
        raise ConfigError("alpha", "out of (0,2)")
    c = _expr("c", pr["c"], "y", True)
    g = _expr("g", pr["g"], "y", True)
    a = _expr("a", pr["a"], "y", True) if "a" in pr else None
    phi = _expr("phi", pr["phi"], "x", False)
    far_field = _number("far_field", pr["far_field"])
    try:
        coeffs = CoefficientSet(alpha, c, g, a, phi, far_field)
    except InvalidParameter as err:
        key = "a" if a is not None and "a must" in str(err) else "c"
        raise ConfigError(key, str(err)) from None

    kw = {}
    if "epsilon" in pr:
        eps = _number("epsilon", pr["epsilon"])
        inv = 1 / eps if eps > 0 else 0
        if not (0 < eps <= 1) or abs(inv - round(inv)) > 1e-9 * inv:
            raise ConfigError("epsilon", "must be the reciprocal of a positive integer")
        kw["epsilon"] = eps
    if "domain" in pr:
        dom = _numbers("domain", pr["domain"])
        if len(dom) != 2 or not dom[1] > dom[0]:
            raise ConfigError("domain", "expected 'x_lo, x_hi' with x_lo < x_hi")
        kw["domain"] = dom

    ds = cp["discretization"] if "discretization" in cp else {}
    if "n_torus" in ds:
        n = _integer("discretization.n_torus", ds["n_torus"])
        if not 8 <= n <= 4096:
            raise ConfigError("discretization.n_torus", "must lie in [8, 4096]")
        kw["n_torus"] = n
    if "h_rule" in ds:
        kw["refinement"] = _h_rule(ds["h_rule"])
    for key in ("R", "R_torus"):
        if key in ds:
            v = _number(f"discretization.{key}", ds[key])
            if v < 1 or v != int(v):
                raise ConfigError(f"discretization.{key}", "must be an integer >= 1")
            kw[key] = v
    if "zeta_rule" in ds:
        kw["zeta_factor"] = _zeta(ds["zeta_rule"])

    cs = cp["cell"] if "cell" in cp else {}
    order = _integer("cell.extrapolation_order", cs["extrapolation_order"]) if "extrapolation_order" in cs else 1
    if not 1 <= order <= 4:
        raise ConfigError("cell.extrapolation_order", "must lie in [1, 4]")
    if "schedule" in cs:
        kw["schedule"] = _schedule(cs["schedule"], order)
    elif order != 1:
        kw["schedule"] = DiscountSchedule.geometric(extrapolation_order=order)
    if "method" in cs:
        method = _unquote(cs["method"])
        if method not in ("direct", "discounted"):
            raise ConfigError("cell.method", "must be 'direct' or 'discounted'")
        kw["method"] = method
    if "I" in cs:
        kw["I"] = _number("cell.I", cs["I"])
    if "I_samples" in cs:
        samples = _numbers("cell.I_samples", cs["I_samples"])
        if len(set(samples)) < 3:
            raise ConfigError("cell.I_samples", "need at least 3 distinct values")
        kw["I_samples"] = samples
    if "gap_bound" in cs:
        gb = _number("cell.gap_bound", cs["gap_bound"])
        if not gb > 0:
            raise ConfigError("cell.gap_bound", "must be positive")
        kw["gap_bound"] = gb

    sw = cp["sweep"] if "sweep" in cp else {}
    if "epsilons" in sw:
        eps_list = _numbers("sweep.epsilons", sw["epsilons"])
        for e in eps_list:
            inv = 1 / e if e > 0 else 0
            if not (0 < e <= 1) or abs(inv - round(inv)) > 1e-9 * inv:
                raise ConfigError("sweep.epsilons", f"{e!r} is not the reciprocal of a positive integer")
        if any(b >= a_ for a_, b in zip(eps_list, eps_list[1:])):
            raise ConfigError("sweep.epsilons", "must be strictly decreasing")
        kw["epsilons"] = eps_list
    if "refinement" in sw:
        r = _integer("sweep.refinement", sw["refinement"])
        if r < 8:
            raise ConfigError("sweep.refinement", "must be >= 8")
        kw["refinement"] = r
    if "margin" in sw:
        mg = _number("sweep.margin", sw["margin"])
        if not 0 <= mg < 0.5:
            raise ConfigError("sweep.margin", "must lie in [0, 0.5)")
        kw["margin"] = mg

    out = cp["output"] if "output" in cp else {}
    if "dir" in out:
        kw["out_dir"] = _unquote(out["dir"])
    if "formats" in out:
        fmts = tuple(f.strip() for f in _unquote(out["formats"]).split(",") if f.strip())
        bad = [f for f in fmts if f not in ("csv", "json", "svg")]
        if bad or not fmts:
            raise ConfigError("output.formats", f"unknown format(s) {bad}")
        kw["formats"] = fmts
    return Config(coeffs=coeffs, **kw)


def load_config(path) -> Config:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        raise
    return parse_config(text)
