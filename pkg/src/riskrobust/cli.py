"""Command-line entry point.

Exit status: 0 on success, 1 on usage or config errors, 2 when the
computation itself fails (domain errors, divergent integrals).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import experiments as ex
from . import metrics, robustness
from .distributions import Discrete, discretize
from .errors import RiskRobustError
from .reports import ExperimentReport, report_render
from .risk_measures import risk_functional
from .specs import (
    SpecError,
    parse_distribution,
    parse_family,
    parse_process,
    parse_risk,
    parse_weight,
    parse_young,
)

COMMANDS = ("eval", "iqr", "metric", "consistency", "robustness", "skorohod", "demo-nondelta2", "ugc")
METRICS = ("levy", "prohorov", "wasserstein", "psi")
FORMATS = ("csv", "json")
METHODS = ("auto", "closed-form", "regression")

REQUIRED = {
    "eval": ("risk", "distribution"),
    "iqr": ("risk",),
    "metric": ("metric", "distribution", "distribution2"),
    "consistency": ("risk", "process", "n_grid", "reps"),
    "robustness": ("risk", "distribution", "family", "psi", "theta_grid", "n", "M"),
    "skorohod": ("limit", "members", "young"),
    "demo-nondelta2": (),
    "ugc": ("members", "psi", "n_grid", "M", "delta"),
}


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    risk: str | None = None
    distribution: str | None = None
    distribution2: str | None = None
    metric: str | None = None
    p: float | None = None
    psi: str | None = None
    young: str | None = None
    process: str | None = None
    family: str | None = None
    members: list | None = None
    limit: str | None = None
    theta_grid: list | None = None
    n_grid: list | None = None
    n: int | None = None
    M: int | None = None
    reps: int | None = None
    delta: float | None = None
    n_max: int | None = None
    nodes: int | None = None
    method: str | None = None
    witness: bool | None = None
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    stdout: bool = False

    def to_dict(self):
        base = ExperimentConfig(self.command)
        return {k: v for k, v in asdict(self).items() if v is not None and (k == "command" or v != getattr(base, k))}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


class ConfigError(ValueError):
    """All problems found in a config, each prefixed by its key path."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


_STRING_PARSERS = {
    "risk": parse_risk,
    "distribution": parse_distribution,
    "distribution2": parse_distribution,
    "psi": parse_weight,
    "young": parse_young,
    "process": parse_process,
    "limit": parse_distribution,
}


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def validate_config(obj) -> ExperimentConfig:
    """Check a decoded JSON object; raises ConfigError listing every problem."""
    errors = []
    if not isinstance(obj, dict):
        raise ConfigError(["$: config must be a JSON object"])
    known = {f.name for f in fields(ExperimentConfig)}
    for k in obj:
        if k not in known:
            errors.append(f"$.{k}: unknown key")
    cmd = obj.get("command")
    if cmd not in COMMANDS:
        errors.append(f"$.command: must be one of {', '.join(COMMANDS)}")
    for k, parser in _STRING_PARSERS.items():
        if k in obj:
            v = obj[k]
            if not isinstance(v, str):
                errors.append(f"$.{k}: must be a string")
                continue
            try:
                parser(v)
            except SpecError as exc:
                errors.append(f"$.{k}: {exc}")
    if "family" in obj:
        v = obj["family"]
        if not isinstance(v, str):
            errors.append("$.family: must be a string")
        else:
            try:
                parse_family(v, parse_distribution("normal"))
            except SpecError as exc:
                errors.append(f"$.family: {exc}")
    if "members" in obj:
        v = obj["members"]
        if not isinstance(v, list) or not v:
            errors.append("$.members: must be a nonempty list of distribution specs")
        else:
            for i, m in enumerate(v):
                if not isinstance(m, str):
                    errors.append(f"$.members[{i}]: must be a string")
                    continue
                try:
                    parse_distribution(m)
                except SpecError as exc:
                    errors.append(f"$.members[{i}]: {exc}")
    for k, ok, what in (("theta_grid", _is_num, "number"), ("n_grid", _is_int, "integer")):
        if k in obj:
            v = obj[k]
            if not isinstance(v, list):
                errors.append(f"$.{k}: must be a list")
                continue
            for i, x in enumerate(v):
                if not ok(x):
                    errors.append(f"$.{k}[{i}]: must be a {what}")
                elif k == "theta_grid" and not 0 <= x < 1:
                    errors.append(f"$.{k}[{i}]: theta must lie in [0,1)")
                elif k == "n_grid" and x < 1:
                    errors.append(f"$.{k}[{i}]: sample size must be at least 1")
    for k, lo in (("n", 1), ("M", 1), ("reps", 1), ("n_max", 1), ("nodes", 1), ("seed", 0)):
        if k in obj:
            v = obj[k]
            if not _is_int(v):
                errors.append(f"$.{k}: must be an integer")
            elif v < lo:
                errors.append(f"$.{k}: must be at least {lo}")
    if "M" in obj and obj.get("command") == "robustness" and _is_int(obj["M"]) and obj["M"] < 100:
        errors.append("$.M: estimator laws need M >= 100")
    if "p" in obj and (not _is_num(obj["p"]) or obj["p"] < 1):
        errors.append("$.p: must be a number >= 1")
    if "delta" in obj and (not _is_num(obj["delta"]) or obj["delta"] <= 0):
        errors.append("$.delta: must be a positive number")
    for k, choices in (("metric", METRICS), ("format", FORMATS), ("method", METHODS)):
        if k in obj and obj[k] not in choices:
            errors.append(f"$.{k}: must be one of {', '.join(choices)}")
    for k in ("witness", "stdout"):
        if k in obj and not isinstance(obj[k], bool):
            errors.append(f"$.{k}: must be true or false")
    if "out" in obj and not isinstance(obj["out"], str):
        errors.append("$.out: must be a string")
    if cmd in REQUIRED:
        for k in REQUIRED[cmd]:
            if k not in obj:
                errors.append(f"$.{k}: required by command {cmd!r}")
        if cmd == "metric" and obj.get("metric") == "psi" and "psi" not in obj:
            errors.append("$.psi: required by metric 'psi'")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(**obj)


def parse_config(text: str) -> ExperimentConfig:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"$: malformed JSON: {exc}"]) from None
    return validate_config(obj)


# running ---------------------------------------------------------------------------------


def _scalar_report(columns, values, metadata):
    rep = ExperimentReport(list(columns), metadata=metadata)
    rep.add(*values)
    return rep


def _discrete(d, nodes):
    if isinstance(d, Discrete):
        return d
    if nodes is None:
        raise UsageError("parametric laws need --nodes for this metric")
    return discretize(d, nodes)


def _execute(cfg: ExperimentConfig):
    """Return ``(report or dict, extra_report or None)``."""
    seed = cfg.seed
    if cfg.command == "eval":
        rho, d = parse_risk(cfg.risk), parse_distribution(cfg.distribution)
        value = risk_functional(rho, d)
        return _scalar_report(["risk", "distribution", "value"], [rho.spec, cfg.distribution, value], {"command": "eval"}), None
    if cfg.command == "iqr":
        prof = robustness.robustness_profile(parse_risk(cfg.risk), cfg.method or "auto")
        return prof.to_dict(), None
    if cfg.command == "metric":
        mu, nu = parse_distribution(cfg.distribution), parse_distribution(cfg.distribution2)
        kind = cfg.metric
        witness = None
        if kind == "wasserstein":
            value = metrics.wasserstein(mu, nu, cfg.p or 1.0)
        elif kind == "levy":
            value = metrics.levy(_discrete(mu, cfg.nodes), _discrete(nu, cfg.nodes))
        elif kind == "prohorov":
            a, b = _discrete(mu, cfg.nodes), _discrete(nu, cfg.nodes)
            res = metrics.prohorov(a, b)
            value = res.value
            if cfg.witness:
                witness = ExperimentReport(["i", "j", "x_i", "y_j", "mass"], res.witness.rows(a, b), {"eps": res.value})
        else:
            psi = parse_weight(cfg.psi)
            value = metrics.psi_metric(mu, nu, psi, n_nodes=cfg.nodes if not (isinstance(mu, Discrete) and isinstance(nu, Discrete)) else None)
        return _scalar_report(["metric", "value"], [kind, value], {"command": "metric"}), witness
    if cfg.command == "consistency":
        return ex.consistency_run(parse_risk(cfg.risk), parse_process(cfg.process), cfg.n_grid, cfg.reps, seed), None
    if cfg.command == "robustness":
        base = parse_distribution(cfg.distribution)
        fam = parse_family(cfg.family, base)
        return (
            ex.robustness_run(parse_risk(cfg.risk), fam, parse_weight(cfg.psi), cfg.theta_grid, cfg.n, cfg.M, seed, cfg.nodes or 1000),
            None,
        )
    if cfg.command == "skorohod":
        laws = [parse_distribution(m) for m in cfg.members]
        limit = parse_distribution(cfg.limit)
        norms = ex.skorohod_coupling(laws, limit, parse_young(cfg.young))
        rep = ExperimentReport(["index", "law", "norm"], metadata={"command": "skorohod", "young": cfg.young, "limit": cfg.limit})
        for i, (m, v) in enumerate(zip(cfg.members, norms)):
            rep.add(i + 1, m, v)
        return rep, None
    if cfg.command == "demo-nondelta2":
        psi = parse_young(cfg.young) if cfg.young else None
        return ex.non_delta2_demo(seed, psi, cfg.n_max or 8), None
    if cfg.command == "ugc":
        fam = [parse_distribution(m) for m in cfg.members]
        return ex.ugc_probe(fam, parse_weight(cfg.psi), cfg.n_grid, cfg.M, cfg.delta, seed, cfg.nodes or 1000), None
    raise UsageError(f"unknown command {cfg.command!r}")


def _render(result, fmt):
    if isinstance(result, dict):
        return json.dumps(result, sort_keys=True) + "\n"
    if fmt == "json":
        return result.to_json() + "\n"
    return report_render(result)


def run(cfg: ExperimentConfig, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        result, extra = _execute(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    except (RiskRobustError, ArithmeticError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    if cfg.out:
        out = Path(cfg.out)
        if isinstance(result, dict):
            out.write_text(_render(result, "json"), encoding="utf-8")
            written = [out]
        else:
            written = result.write(out, cfg.format)
        if extra is not None:
            side = out.with_name(out.stem + ".witness.csv")
            side.write_bytes(report_render(extra).encode("utf-8"))
            written.append(side)
        for path in written:
            print(f"wrote {path}", file=stderr)
    if cfg.stdout or not cfg.out:
        stdout.write(_render(result, cfg.format))
        if extra is not None:
            stdout.write("\n" + report_render(extra))
    return 0


# argument parsing ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="riskrobust", description="Risk functionals, probability metrics and robustness experiments.")
    p.add_argument("--seed", type=int, default=None, help="base seed for Monte Carlo commands")
    p.add_argument("--out", default=None, help="write results to this path (CSV gets a .json sidecar)")
    p.add_argument("--stdout", action="store_true", help="also print data to stdout when --out is set")
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--config", default=None, help="JSON config file; replaces the subcommand")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("eval", help="evaluate a risk measure on a law")
    s.add_argument("risk")
    s.add_argument("distribution")

    s = sub.add_parser("iqr", help="index of qualitative robustness")
    s.add_argument("risk")
    s.add_argument("--method", choices=METHODS, default=None)

    s = sub.add_parser("metric", help="distance between two laws")
    s.add_argument("metric", choices=METRICS)
    s.add_argument("distribution")
    s.add_argument("distribution2")
    s.add_argument("--p", type=float, default=None, help="Wasserstein order")
    s.add_argument("--psi", default=None, help="weight function for the psi metric")
    s.add_argument("--nodes", type=int, default=None, help="discretize parametric laws at N mid-quantiles")
    s.add_argument("--witness", action="store_true", default=None, help="emit the Prohorov coupling")

    s = sub.add_parser("consistency", help="plug-in error versus sample size")
    s.add_argument("risk")
    s.add_argument("process")
    s.add_argument("--n-grid", required=True)
    s.add_argument("--reps", type=int, required=True)

    s = sub.add_parser("robustness", help="estimator-law distances along a contamination path")
    s.add_argument("risk")
    s.add_argument("distribution")
    s.add_argument("--family", required=True)
    s.add_argument("--psi", default="abs-power:p=1")
    s.add_argument("--theta-grid", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--nodes", type=int, default=None)

    s = sub.add_parser("skorohod", help="norms of comonotone differences")
    s.add_argument("limit")
    s.add_argument("members", nargs="+")
    s.add_argument("--young", required=True)

    s = sub.add_parser("demo-nondelta2", help="truncation counterexample without Delta_2")
    s.add_argument("--young", default=None)
    s.add_argument("--n-max", type=int, default=None)

    s = sub.add_parser("ugc", help="uniform Glivenko-Cantelli probe")
    s.add_argument("members", nargs="+")
    s.add_argument("--psi", required=True)
    s.add_argument("--n-grid", required=True)
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--nodes", type=int, default=None)
    return p


def _grid(text, cast):
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list: {text!r}") from None


def config_from_args(ns) -> dict:
    obj = {"command": ns.command}
    for k in ("risk", "distribution", "distribution2", "metric", "p", "psi", "young", "process", "family",
              "members", "limit", "n", "M", "reps", "delta", "n_max", "nodes", "method", "witness"):
        v = getattr(ns, k, None)
        if v is not None:
            obj[k] = v
    if getattr(ns, "n_grid", None) is not None:
        obj["n_grid"] = _grid(ns.n_grid, int)
    if getattr(ns, "theta_grid", None) is not None:
        obj["theta_grid"] = _grid(ns.theta_grid, float)
    return obj


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.config:
            try:
                obj = json.loads(Path(ns.config).read_text(encoding="utf-8"))
            except OSError as exc:
                raise UsageError(f"cannot read config: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError([f"$: malformed JSON: {exc}"]) from None
        elif ns.command is None:
            raise UsageError("a subcommand or --config is required")
        else:
            obj = config_from_args(ns)
        if isinstance(obj, dict):
            for k in ("seed", "out", "format"):
                v = getattr(ns, k)
                if v is not None:
                    obj[k] = v
            if ns.stdout:
                obj["stdout"] = True
        cfg = validate_config(obj)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
