"""Operator specs from structured plain-text (TOML) configuration files.

Sections: [diffusion], [drift], [constants], [lyapunov], [potential].
Drift comes either from a preset (`preset = "ou" | "power" | "logpower" |
"loglin"` with its parameters) or from `expr = "..."` in the drift grammar.
Unknown keys anywhere are hard errors.
"""

import dataclasses
import hashlib
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import presets
from .errors import ConfigError
from .expressions import parse_component, parse_drift_expression
from .operators import (
    Hyper,
    LogPowerFamily,
    LyapunovSpec,
    OperatorSpec,
    PotentialSpec,
    PowerExpFamily,
    QuadraticFamily,
    Ultrabounded,
    Ultracontractive,
)

_SECTION_KEYS = {
    "diffusion": {"constant", "diagonal", "expr"},
    "drift": {"preset", "expr", "dimension", "theta", "q", "kappa", "alpha"},
    "constants": {"eta0", "lambda", "r0", "time_window", "regime", "k", "kappa", "alpha", "radius"},
    "lyapunov": {"family", "lam", "delta", "kappa", "radius", "a", "gamma"},
    "potential": {"expr", "constant", "c0"},
}

_PRESET_PARAMS = {
    "ou": {"theta", "q"},
    "power": {"kappa", "q"},
    "logpower": {"alpha", "q"},
    "loglin": {"q"},
}


@dataclass(frozen=True)
class LoadedConfig:
    spec: OperatorSpec
    lyapunov: Optional[LyapunovSpec]
    potential: Optional[PotentialSpec]
    content_hash: str
    raw: dict


def _validate_keys(table, section):
    allowed = _SECTION_KEYS[section]
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in [{section}]")


def _no_space_vars(node):
    from .expressions import BinOp, Coord, Func, Neg, Norm

    if isinstance(node, (Coord, Norm)):
        return False
    if isinstance(node, Neg):
        return _no_space_vars(node.arg)
    if isinstance(node, Func):
        return _no_space_vars(node.arg)
    if isinstance(node, BinOp):
        return _no_space_vars(node.left) and _no_space_vars(node.right)
    return True


def _build_diffusion(table, d):
    _validate_keys(table, "diffusion")
    given = [k for k in ("constant", "diagonal", "expr") if k in table]
    if len(given) != 1:
        raise ConfigError("[diffusion] needs exactly one of constant / diagonal / expr")
    if "constant" in table:
        q = float(table["constant"])
        if q <= 0:
            raise ConfigError("diffusion constant must be positive")
        Q = q * np.eye(d)
        return (lambda t: Q), q, q
    if "diagonal" in table:
        diag = np.asarray([float(v) for v in table["diagonal"]], dtype=float)
        if diag.size != d or np.any(diag <= 0):
            raise ConfigError(f"diagonal must list {d} positive entries")
        Q = np.diag(diag)
        return (lambda t: Q), float(diag.min()), float(diag.max())
    node = parse_component(table["expr"], d)
    if not _no_space_vars(node):
        raise ConfigError("diffusion coefficients may depend on t only")

    def diffusion(t):
        return float(node.eval(t, np.zeros((1, d)))) * np.eye(d)

    return diffusion, None, None  # bounds must come from [constants]


def _build_regime(table):
    tag = table.get("regime")
    if tag is None or tag == "unclassified":
        return None
    radius = float(table.get("radius", 2.0))
    k = float(table.get("k", 1.0))
    if tag == "hyper":
        return Hyper(k1=k, radius=radius)
    if tag == "ultrabounded":
        if "alpha" not in table:
            raise ConfigError("ultrabounded regime needs alpha")
        return Ultrabounded(k2=k, alpha=float(table["alpha"]), radius=radius)
    if tag == "ultracontractive":
        if "kappa" not in table:
            raise ConfigError("ultracontractive regime needs kappa")
        return Ultracontractive(k3=k, kappa=float(table["kappa"]), radius=radius)
    raise ConfigError(f"unknown regime tag {tag!r}")


def _build_lyapunov(table):
    _validate_keys(table, "lyapunov")
    fam_name = table.get("family")
    if fam_name is None:
        raise ConfigError("[lyapunov] needs a family")
    a = float(table.get("a", 1.0))
    gamma = float(table.get("gamma", 1.0))
    if fam_name == "quadratic":
        fam = QuadraticFamily(lam=float(table.get("lam", 0.1)))
    elif fam_name == "logpower":
        fam = LogPowerFamily(
            lam=float(table.get("lam", 0.1)),
            delta=float(table.get("delta", 1.0)),
            radius=float(table.get("radius", 2.0)),
        )
    elif fam_name == "powerexp":
        fam = PowerExpFamily(delta=float(table.get("delta", 0.1)), kappa=float(table.get("kappa", 4.0)))
    else:
        raise ConfigError(f"unknown Lyapunov family {fam_name!r}")
    return LyapunovSpec(generator_bound=(a, gamma), family=fam)


def _build_potential(table, d):
    _validate_keys(table, "potential")
    if "c0" not in table:
        raise ConfigError("[potential] needs the certified infimum c0")
    c0 = float(table["c0"])
    if "expr" in table:
        node = parse_component(table["expr"], d)

        def c(t, x):
            X = np.asarray(x, dtype=float)
            return np.broadcast_to(np.asarray(node.eval(t, X), dtype=float), X.shape[:-1]).copy()

        return PotentialSpec(c=c, c0=c0, source=table["expr"])
    if "constant" in table:
        val = float(table["constant"])

        def c(t, x):
            X = np.asarray(x, dtype=float)
            return np.full(X.shape[:-1], val)

        return PotentialSpec(c=c, c0=c0, source=str(val))
    raise ConfigError("[potential] needs expr or constant")


def load_config(path):
    """Parse a spec configuration file into operator/lyapunov/potential objects."""
    with open(path, "rb") as fh:
        blob = fh.read()
    content_hash = hashlib.sha256(blob).hexdigest()
    try:
        data = tomllib.loads(blob.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    unknown_sections = set(data) - set(_SECTION_KEYS)
    if unknown_sections:
        raise ConfigError(f"unknown section(s) {sorted(unknown_sections)}")
    if "drift" not in data:
        raise ConfigError("missing [drift] section")
    drift_table = data["drift"]
    _validate_keys(drift_table, "drift")
    d = int(drift_table.get("dimension", 1))
    const_table = data.get("constants", {})
    _validate_keys(const_table, "constants")

    if "preset" in drift_table:
        name = drift_table["preset"]
        if name not in presets.PRESETS:
            raise ConfigError(f"unknown preset {name!r}; available: {sorted(presets.PRESETS)}")
        params = {
            k: float(v) for k, v in drift_table.items() if k in _PRESET_PARAMS[name]
        }
        extra = set(drift_table) - _PRESET_PARAMS[name] - {"preset", "dimension", "expr"}
        if extra:
            raise ConfigError(f"preset {name!r} does not take {sorted(extra)}")
        spec = presets.PRESETS[name](d=d, **params)
        overrides = {}
        if "eta0" in const_table:
            overrides["eta0"] = float(const_table["eta0"])
        if "lambda" in const_table:
            overrides["Lambda"] = float(const_table["lambda"])
        if "r0" in const_table:
            overrides["r0"] = float(const_table["r0"])
        if "time_window" in const_table:
            overrides["time_window"] = tuple(float(v) for v in const_table["time_window"])
        if "regime" in const_table:
            overrides["regime"] = _build_regime(const_table)
        if overrides:
            spec = dataclasses.replace(spec, **overrides)
    elif "expr" in drift_table:
        drift = parse_drift_expression(drift_table["expr"], d)
        if "diffusion" not in data:
            raise ConfigError("expression drifts need a [diffusion] section")
        diffusion, qmin, qmax = _build_diffusion(data["diffusion"], d)
        if qmin is None and ("eta0" not in const_table or "lambda" not in const_table):
            raise ConfigError("[constants] needs eta0 and lambda for time-varying diffusion")
        if "r0" not in const_table:
            raise ConfigError("[constants] needs r0 for expression drifts")
        eta0 = float(const_table.get("eta0", qmin))
        Lambda = float(const_table.get("lambda", qmax))
        spec = OperatorSpec(
            dimension=d,
            diffusion=diffusion,
            drift=drift,
            drift_jacobian=None,
            eta0=eta0,
            Lambda=Lambda,
            r0=float(const_table["r0"]),
            regime=_build_regime(const_table),
            time_window=tuple(float(v) for v in const_table.get("time_window", (-1e6, 1e6))),
            name=f"expr({drift.pretty()})",
            drift_source=drift.pretty(),
        )
    else:
        raise ConfigError("[drift] needs a preset or an expr")

    if "diffusion" in data and "preset" in drift_table:
        diffusion, qmin, qmax = _build_diffusion(data["diffusion"], d)
        overrides = {"diffusion": diffusion}
        if qmin is not None and "eta0" not in const_table:
            overrides["eta0"] = qmin
            overrides["Lambda"] = qmax
        spec = dataclasses.replace(spec, **overrides)

    lyap = _build_lyapunov(data["lyapunov"]) if "lyapunov" in data else None
    potential = _build_potential(data["potential"], d) if "potential" in data else None
    return LoadedConfig(spec=spec, lyapunov=lyap, potential=potential, content_hash=content_hash, raw=data)
