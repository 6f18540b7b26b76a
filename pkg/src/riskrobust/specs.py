"""Parsers for the short spec strings used by configs and the CLI.

Examples: ``"avar:a=0.05"``, ``"distortion:minmaxvar:l=1,g=1"``,
``"normal:m=0,s=1"``, ``"atoms:-4;-2;0;2"``, ``"power:p=2"``,
``"abs-power:p=1"``, ``"ar1:phi=0.5,s=1"``, ``"tailmix:shape=3"``.
"""

from __future__ import annotations

from pathlib import Path

from . import distributions as dist
from . import orlicz
from . import risk_measures as rm
from .errors import DomainError
from .experiments import AR1, GARCH11, IID, Scale, Shift, TailMix


class SpecError(ValueError):
    """A spec string could not be parsed or is out of range."""


def _kv(text, allowed, required=(), defaults=None):
    out = dict(defaults or {})
    if text:
        for part in text.split(","):
            if "=" not in part:
                raise SpecError(f"expected key=value, got {part!r}")
            k, v = (s.strip() for s in part.split("=", 1))
            if k not in allowed:
                raise SpecError(f"unknown parameter {k!r} (allowed: {', '.join(allowed)})")
            try:
                out[k] = float(v)
            except ValueError:
                raise SpecError(f"parameter {k!r} is not a number: {v!r}") from None
    missing = [k for k in required if k not in out]
    if missing:
        raise SpecError(f"missing parameter(s): {', '.join(missing)}")
    return out


def _split(text):
    tag, _, rest = text.strip().partition(":")
    return tag.strip().lower(), rest


def _build(fn, *args):
    try:
        return fn(*args)
    except DomainError as exc:
        raise SpecError(str(exc)) from None


def parse_risk(text):
    tag, rest = _split(text)
    if tag == "neg-exp":
        if rest:
            raise SpecError("neg-exp takes no parameters")
        return rm.NegExpectation()
    if tag == "var":
        return _build(rm.VaR, _kv(rest, ("t",), ("t",))["t"])
    if tag == "avar":
        return _build(rm.AVaR, _kv(rest, ("a",), ("a",))["a"])
    if tag == "entropic":
        return _build(rm.Entropic, _kv(rest, ("b",), ("b",))["b"])
    if tag == "osm":
        kv = _kv(rest, ("p", "a"), ("p", "a"))
        return _build(rm.OneSidedMoment, kv["p"], kv["a"])
    if tag == "shortfall":
        kind, params = _split(rest)
        if kind == "exp":
            kv = _kv(params, ("b", "x0"), ("x0",), {"b": 1.0})
            loss = _build(orlicz.ExpLoss, kv["b"])
        elif kind == "power":
            kv = _kv(params, ("p", "x0"), ("p", "x0"))
            loss = _build(orlicz.PowerLoss, kv["p"])
        else:
            raise SpecError(f"unknown shortfall loss {kind!r} (expected exp or power)")
        return _build(rm.Shortfall, loss, kv["x0"])
    if tag == "distortion":
        return rm.Distortion(parse_distortion(rest))
    raise SpecError(f"unknown risk measure {tag!r}")


def parse_distortion(text):
    tag, rest = _split(text)
    if tag == "avar":
        return _build(rm.AVaRDistortion, _kv(rest, ("a",), ("a",))["a"])
    if tag == "power":
        kv = _kv(rest, ("a", "b"), ("b",), {"a": 1.0})
        return _build(rm.PowerDistortion, kv["a"], kv["b"])
    if tag == "minmaxvar":
        kv = _kv(rest, ("l", "g"), ("l",), {"g": 0.0})
        return _build(rm.MinMaxVar, kv["l"], kv["g"])
    if tag == "table":
        try:
            pairs = [tuple(float(x) for x in item.split(":")) for item in rest.split(";") if item.strip()]
            ts, gs = zip(*pairs)
        except ValueError:
            raise SpecError("table distortion expects t:g pairs separated by ';'") from None
        return _build(rm.Tabulated, ts, gs)
    raise SpecError(f"unknown distortion {tag!r}")


def parse_distribution(text):
    text = text.strip()
    path = Path(text)
    if path.suffix.lower() in (".csv", ".json"):
        if not path.exists():
            raise SpecError(f"file not found: {text}")
        try:
            return dist.load_measure(path)
        except (DomainError, ValueError) as exc:
            raise SpecError(f"{text}: {exc}") from None
    tag, rest = _split(text)
    if tag == "normal":
        kv = _kv(rest, ("m", "s"), (), {"m": 0.0, "s": 1.0})
        return _build(dist.Normal, kv["m"], kv["s"])
    if tag == "uniform":
        kv = _kv(rest, ("a", "b"), (), {"a": 0.0, "b": 1.0})
        return _build(dist.Uniform, kv["a"], kv["b"])
    if tag == "pareto":
        kv = _kv(rest, ("shape", "scale"), ("shape",), {"scale": 1.0})
        return _build(dist.Pareto, kv["shape"], kv["scale"])
    if tag == "negpareto":
        kv = _kv(rest, ("shape", "scale"), ("shape",), {"scale": 1.0})
        return dist.Affine(_build(dist.Pareto, kv["shape"], kv["scale"]), 0.0, -1.0)
    if tag == "lognormal":
        kv = _kv(rest, ("m", "s"), (), {"m": 0.0, "s": 1.0})
        return _build(dist.Lognormal, kv["m"], kv["s"])
    if tag == "exptail":
        if rest:
            raise SpecError("exptail takes no parameters")
        return dist.ExpTail()
    if tag == "point":
        return dist.point_mass(_kv(rest, ("c",), ("c",))["c"])
    if tag == "atoms":
        items = [s.strip() for s in rest.split(";") if s.strip()]
        if not items:
            raise SpecError("atoms: needs at least one value")
        try:
            if any("@" in s for s in items):
                vals, wts = zip(*((float(a), float(b)) for a, b in (s.split("@") for s in items)))
                return _build(dist.Discrete, vals, wts)
            return _build(dist.Discrete, [float(s) for s in items])
        except ValueError:
            raise SpecError("atoms: expects numbers, optionally value@weight") from None
    raise SpecError(f"unknown distribution {tag!r}")


def parse_young(text):
    tag, rest = _split(text)
    if tag == "power":
        return _build(orlicz.Power, _kv(rest, ("p",), ("p",))["p"])
    if tag == "exp":
        if rest:
            raise SpecError("exp takes no parameters")
        return orlicz.Exponential()
    if tag == "shifted":
        kind, params = _split(rest)
        if kind == "exp":
            return orlicz.ShiftedLoss(_build(orlicz.ExpLoss, _kv(params, ("b",), (), {"b": 1.0})["b"]))
        if kind == "power":
            return orlicz.ShiftedLoss(_build(orlicz.PowerLoss, _kv(params, ("p",), ("p",))["p"]))
        raise SpecError(f"unknown loss {kind!r}")
    raise SpecError(f"unknown Young function {tag!r}")


def parse_weight(text):
    tag, rest = _split(text)
    if tag == "const":
        return orlicz.ConstantWeight()
    if tag == "abs-power":
        return _build(orlicz.AbsPowerWeight, _kv(rest, ("p",), (), {"p": 1.0})["p"])
    if tag == "young":
        return orlicz.YoungWeight(parse_young(rest))
    raise SpecError(f"unknown weight function {tag!r}")


def parse_process(text):
    tag, rest = _split(text)
    if tag == "iid":
        return IID(parse_distribution(rest))
    if tag == "ar1":
        kv = _kv(rest, ("phi", "s", "burn"), ("phi",), {"s": 1.0, "burn": 1000})
        return _build(AR1, kv["phi"], kv["s"], int(kv["burn"]))
    if tag == "garch11":
        kv = _kv(rest, ("w", "a", "b", "burn"), ("w", "a", "b"), {"burn": 1000})
        return _build(GARCH11, kv["w"], kv["a"], kv["b"], int(kv["burn"]))
    raise SpecError(f"unknown process {tag!r}")


def parse_family(text, base):
    tag, rest = _split(text)
    if tag == "tailmix":
        kv = _kv(rest, ("shape", "scale"), ("shape",), {"scale": 1.0})
        _build(dist.Pareto, kv["shape"], kv["scale"])
        return TailMix(base, kv["shape"], kv["scale"])
    if tag == "shift":
        return Shift(base)
    if tag == "scale":
        return Scale(base)
    raise SpecError(f"unknown contamination family {tag!r}")


def parse_grid(text, cast=float):
    """``"0,0.01,0.1"`` to a list."""
    try:
        return [cast(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise SpecError(f"not a comma-separated list of numbers: {text!r}") from None
