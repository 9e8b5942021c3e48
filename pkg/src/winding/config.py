"""Key-value configuration files.

Example::

    family = ExampleA
    r_star = 1
    s = 1
    z1 = 2
    z2 = 1
    theta0 = 0
    theta_max = 50.27
    operator = rotated(1, 3)
    drift = const(0.2, 0)
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError
from .geometry import CurvePair, DomainSpec, example_a, example_b, example_c, validate_domain
from .operator import (CoefficientField, const_drift, laplacian, logangular_drift, rotated,
                       zero_drift)
from .solver import BoundaryData

GEOMETRY_KEYS = ("family", "r_star", "s", "z1", "z2", "eps1", "eps2", "om1", "om2", "theta0",
                 "theta_max", "trig")
OPERATOR_KEYS = ("operator", "drift", "kappa")
DATA_KEYS = ("inner_data", "gamma_data", "far_data", "forcing")
KNOWN_KEYS = GEOMETRY_KEYS + OPERATOR_KEYS + DATA_KEYS

_CALL = re.compile(r"^\s*([a-zA-Z_]+)\s*(?:\((.*)\))?\s*$")


def _call(text: str):
    m = _CALL.match(text)
    if not m:
        raise ConfigError(f"cannot parse {text!r}")
    name = m.group(1).lower()
    args = []
    if m.group(2) is not None and m.group(2).strip():
        try:
            args = [float(a) for a in m.group(2).split(",")]
        except ValueError as exc:
            raise ConfigError(f"non-numeric argument in {text!r}") from exc
    return name, args


def parse_operator(text: str) -> CoefficientField:
    name, args = _call(text)
    if name == "laplacian" and not args:
        return laplacian()
    if name == "rotated" and len(args) == 2:
        return rotated(*args)
    raise ConfigError(f"operator must be laplacian or rotated(c0, M1), got {text!r}")


def parse_drift(text: str) -> CoefficientField:
    name, args = _call(text)
    if name == "zero" and not args:
        return zero_drift()
    if name == "const" and len(args) == 2:
        return const_drift(*args)
    if name == "logangular" and len(args) == 1:
        return logangular_drift(args[0])
    raise ConfigError(f"drift must be zero, const(bx, by) or logangular(alpha), got {text!r}")


@dataclass
class RunConfig:
    curves: CurvePair
    theta_max: float
    field: CoefficientField
    kappa: Optional[float] = None
    inner_data: float = 1.0
    gamma_data: float = 0.0
    far_data: float = 0.0
    forcing: float = 0.0

    def domain(self, theta_max: Optional[float] = None) -> DomainSpec:
        t = self.theta_max if theta_max is None else theta_max
        return validate_domain(self.curves, max(t, self.curves.theta0 + 4 * math.pi + 1.0))

    def boundary(self, far_data: Optional[float] = None) -> BoundaryData:
        far = self.far_data if far_data is None else far_data
        return BoundaryData(self.inner_data, self.gamma_data, self.gamma_data, far)


def parse_text(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    d = dict(cp["run"])
    unknown = set(d) - set(KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")

    def num(key, default):
        if key not in d:
            return default
        try:
            return float(d[key])
        except ValueError as exc:
            raise ConfigError(f"{key} must be a number") from exc

    family = d.get("family", "ExampleA")
    common = dict(r_star=num("r_star", 1.0), s=num("s", 1.0), theta0=num("theta0", 0.0))
    if family == "ExampleA":
        curves = example_a(z1=num("z1", 2.0), z2=num("z2", 1.0), **common)
    elif family in ("ExampleB", "ExampleC"):
        make = example_b if family == "ExampleB" else example_c
        om_default = 1.0 if family == "ExampleB" else 0.1
        kw = dict(z1=num("z1", 3.0), z2=num("z2", 1.0), eps1=num("eps1", 0.3),
                  eps2=num("eps2", 0.3), om1=num("om1", om_default), om2=num("om2", om_default))
        if "trig" in d:
            kw["trig"] = d["trig"]
        curves = make(**kw, **common)
    else:
        raise ConfigError(f"family must be ExampleA, ExampleB or ExampleC, got {family!r}")
    theta_max = num("theta_max", common["theta0"] + 16 * math.pi)
    fld = parse_operator(d.get("operator", "laplacian"))
    if "drift" in d:
        fld = fld.with_drift(parse_drift(d["drift"]))
    forcing = num("forcing", 0.0)
    if forcing:
        fld = fld.with_forcing(lambda x1, x2, theta=None, c=forcing: c + 0.0 * x1)
    return RunConfig(curves, theta_max, fld, kappa=num("kappa", None),
                     inner_data=num("inner_data", 1.0), gamma_data=num("gamma_data", 0.0),
                     far_data=num("far_data", 0.0), forcing=forcing)


def load_config(path: Optional[str]) -> RunConfig:
    """Read a config file; ``None`` gives the default ExampleA / Laplacian setup."""
    if path is None:
        return parse_text("")
    try:
        with open(path) as fh:
            return parse_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
