"""Command-line front door: simulate, tabulate, verify, classify.

Commands are deterministic given (config, seed).  Trajectories and tables
stream as CSV, verification reports as JSON lines.  Exit codes: 0 success,
1 a verification check landed on the wrong side of its expected polarity,
2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass

import numpy as np

from .ctmc import NBBD, PoissonBD, gillespie, stationary_bd
from .discrete import (
    BranchingNB,
    BranchingPoisson,
    Constant,
    IID,
    NegBinomial,
    Poisson,
    RandomMeasure,
    Thinning,
    misti_classify,
    nb_random_measure_020,
    nb_thinning_020,
    rm_simulate,
    simulate_chain,
)
from .idlaw import id_pmf
from .verify import chain_joint_pmf, check_markov_triple, check_mvid, VerifyReport

DISCRETE_PROCESSES = (
    "thinning",
    "random-measure",
    "branching-poisson",
    "branching-nb",
    "iid",
    "constant",
)
CT_PROCESSES = ("ct-poisson-bd", "ct-nb-bd")
SUITES = ("theorem2", "theorem3", "poisson-coincidence")


@dataclass(frozen=True)
class RunConfig:
    """Resolved options of one command; dumps to / parses from `key = value` lines."""

    command: str
    process: str | None = None
    law: str | None = None
    theta: float | None = None
    alpha: float | None = None
    p: float | None = None
    rho: float | None = None
    lam: float | None = None
    steps: int | None = None
    t0: int = 0
    x0: int | None = None
    horizon: float | None = None
    times: tuple | None = None
    k: int = 12
    degree: int = 8
    seed: int = 0
    out: str = "-"
    format: str | None = None
    suite: str | None = None
    theta_grid: tuple | None = None
    p_grid: tuple | None = None
    rho_grid: tuple | None = None
    r0: float | None = None
    r1: float | None = None
    r2: float | None = None
    theta1: float | None = None

    def dump(self):
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = ",".join(_fmt(v) for v in value)
            elif isinstance(value, float):
                value = _fmt(value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _fmt(x):
    return f"{x:.17g}" if isinstance(x, float) else str(x)


def _parse_value(name, raw):
    kind = _FIELD_TYPES[name]
    if kind in ("int", "int | None"):
        return int(raw)
    if kind in ("float", "float | None"):
        return float(raw)
    if kind == "tuple | None":
        if name == "times":
            return tuple(int(v) for v in raw.split(","))
        return tuple(float(v) for v in raw.split(","))
    return raw


def parse_config_lines(text):
    """Parse `key = value` lines into a field dict; unknown keys are rejected."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno} is not `key = value`: {line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"unknown config key {key!r} on line {lineno}")
        out[key] = _parse_value(key, raw)
    return out


def _grid_arg(raw):
    return tuple(float(v) for v in raw.split(","))


def _times_arg(raw):
    return tuple(int(v) for v in raw.split(","))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="misti",
        description="Simulate, tabulate, and verify stationary reversible integer processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="key = value config file; flags override it")
        sp.add_argument("--dump-config", help="write the resolved config to this path")
        sp.add_argument("--seed", type=int, help="RNG seed (default 0)")
        sp.add_argument("--out", help="output path, '-' for stdout (default)")
        sp.add_argument("--format", choices=("csv", "jsonl"), help="output format")
        sp.add_argument("--k", type=int, help="lattice bound for exact tables (default 12)")
        sp.add_argument("--degree", type=int, help="total-degree bound for log-pgf scans (default 8)")

    sim = sub.add_parser("simulate", help="simulate one trajectory")
    add_common(sim)
    sim.add_argument("--process", choices=DISCRETE_PROCESSES + CT_PROCESSES, required=True)
    sim.add_argument("--law", choices=("poisson", "nb"), help="marginal family for thinning/random-measure/iid/constant")
    sim.add_argument("--theta", type=float)
    sim.add_argument("--alpha", type=float)
    sim.add_argument("--p", type=float)
    sim.add_argument("--rho", type=float)
    sim.add_argument("--lambda", dest="lam", type=float, help="continuous-time rate scale")
    sim.add_argument("--steps", type=int, help="number of discrete ticks")
    sim.add_argument("--t0", type=int, help="first time index (default 0)")
    sim.add_argument("--x0", type=int, help="continuous-time initial state (default: stationary draw)")
    sim.add_argument("--horizon", type=float, help="continuous-time horizon")
    sim.add_argument("--times", type=_times_arg, help="explicit comma-separated times (random-measure)")

    tab = sub.add_parser("table", help="discriminating-probability table over a parameter grid")
    add_common(tab)
    tab.add_argument("--theta-grid", type=_grid_arg, dest="theta_grid")
    tab.add_argument("--p-grid", type=_grid_arg, dest="p_grid")
    tab.add_argument("--rho-grid", type=_grid_arg, dest="rho_grid")

    ver = sub.add_parser("verify", help="run a named check suite with expected polarities")
    add_common(ver)
    ver.add_argument("--suite", choices=SUITES, required=True)
    ver.add_argument("--theta", type=float)
    ver.add_argument("--p", type=float)
    ver.add_argument("--rho", type=float)

    cls = sub.add_parser("classify", help="identify the family from (r0, r1, r2, theta1)")
    add_common(cls)
    cls.add_argument("--r0", type=float, required=True)
    cls.add_argument("--r1", type=float, required=True)
    cls.add_argument("--r2", type=float, required=True)
    cls.add_argument("--theta1", type=float, required=True)

    return parser


def resolve_config(args):
    """Merge config-file values under explicit CLI flags into a RunConfig."""
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    merged = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            merged.update(parse_config_lines(fh.read()))
    for name in fields:
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    merged["command"] = args.command
    return RunConfig(**merged)


def _open_out(cfg):
    if cfg.out == "-":
        return sys.stdout, False
    return open(cfg.out, "w", encoding="utf-8", newline="\n"), True


def _write_rows(cfg, header, rows, default_format="csv"):
    fmt = cfg.format or default_format
    stream, owned = _open_out(cfg)
    try:
        if fmt == "csv":
            stream.write(",".join(header) + "\n")
            for row in rows:
                stream.write(",".join(_fmt(v) for v in row) + "\n")
        else:
            for row in rows:
                stream.write(json.dumps(dict(zip(header, row))) + "\n")
    finally:
        if owned:
            stream.close()


def _require(cfg, *names):
    for name in names:
        if getattr(cfg, name) is None:
            raise ValueError(f"--{name.replace('_', '-')} is required for this invocation")


def _marginal_law(cfg):
    if cfg.law == "poisson":
        _require(cfg, "theta")
        return Poisson(), cfg.theta
    if cfg.law == "nb":
        _require(cfg, "theta", "p")
        return NegBinomial(cfg.p), cfg.theta
    raise ValueError("--law must be 'poisson' or 'nb' for this process")


def _build_spec(cfg):
    if cfg.process == "thinning":
        law, theta = _marginal_law(cfg)
        _require(cfg, "rho")
        return Thinning(law, theta, cfg.rho)
    if cfg.process == "random-measure":
        law, theta = _marginal_law(cfg)
        _require(cfg, "rho")
        return RandomMeasure(law, theta, cfg.rho)
    if cfg.process == "branching-poisson":
        _require(cfg, "theta", "rho")
        return BranchingPoisson(cfg.theta, cfg.rho)
    if cfg.process == "branching-nb":
        _require(cfg, "alpha", "p", "rho")
        return BranchingNB(cfg.alpha, cfg.p, cfg.rho)
    if cfg.process == "iid":
        law, theta = _marginal_law(cfg)
        return IID(law, theta)
    if cfg.process == "constant":
        law, theta = _marginal_law(cfg)
        return Constant(law, theta)
    if cfg.process == "ct-poisson-bd":
        _require(cfg, "theta", "lam")
        return PoissonBD(cfg.theta, cfg.lam)
    if cfg.process == "ct-nb-bd":
        _require(cfg, "alpha", "p", "lam")
        return NBBD(cfg.alpha, cfg.p, cfg.lam)
    raise ValueError(f"unknown process {cfg.process!r}")


def cmd_simulate(cfg):
    rng = np.random.default_rng(cfg.seed)
    spec = _build_spec(cfg)
    if cfg.process in CT_PROCESSES:
        _require(cfg, "horizon")
        if cfg.x0 is not None:
            x0 = cfg.x0
        else:
            pmf = stationary_bd(spec, 200)
            x0 = int(rng.choice(len(pmf), p=pmf / pmf.sum()))
        path = gillespie(spec, x0, cfg.horizon, rng)
        rows = [(float(t), int(s)) for t, s in zip(path.times, path.states)]
        _write_rows(cfg, ("time", "state"), rows)
        return 0
    if cfg.process == "random-measure":
        if cfg.times is not None:
            times = cfg.times
        else:
            _require(cfg, "steps")
            if cfg.steps < 1:
                raise ValueError("--steps must be >= 1")
            times = tuple(range(cfg.t0, cfg.t0 + cfg.steps))
        values = rm_simulate(spec.law, spec.theta, spec.rho, times, rng)
        rows = list(zip(times, (int(v) for v in values)))
    else:
        _require(cfg, "steps")
        if cfg.steps < 1:
            raise ValueError("--steps must be >= 1")
        traj = simulate_chain(spec, cfg.t0, cfg.steps, rng)
        rows = [(traj.t0 + i, int(v)) for i, v in enumerate(traj.values)]
    _write_rows(cfg, ("t", "x"), rows)
    return 0


def cmd_table(cfg):
    """P[X1=0, X3=0 | X2=2] for the NB thinning chain vs the NB random-measure
    process: closed forms next to exact-enumeration columns and deviations."""
    thetas = cfg.theta_grid or (1.0,)
    ps = cfg.p_grid or (0.5,)
    rhos = cfg.rho_grid or (0.5,)
    rows = []
    for theta in thetas:
        for p in ps:
            for rho in rhos:
                law = NegBinomial(p)
                mid = id_pmf(law, theta, 2)[2]
                thin = chain_joint_pmf(Thinning(law, theta, rho), (0, 1, 2), 2)
                rand = chain_joint_pmf(RandomMeasure(law, theta, rho), (0, 1, 2), 2)
                thin_enum = float(thin.table[0, 2, 0] / mid)
                rm_enum = float(rand.table[0, 2, 0] / mid)
                thin_closed = nb_thinning_020(theta, p, rho)
                rm_closed = nb_random_measure_020(theta, p, rho)
                rows.append(
                    (
                        theta,
                        p,
                        rho,
                        thin_closed,
                        thin_enum,
                        abs(thin_closed - thin_enum),
                        rm_closed,
                        rm_enum,
                        abs(rm_closed - rm_enum),
                    )
                )
    header = (
        "theta",
        "p",
        "rho",
        "thinning_closed",
        "thinning_enum",
        "thinning_dev",
        "rm_closed",
        "rm_enum",
        "rm_dev",
    )
    _write_rows(cfg, header, rows)
    return 0


def _suite_checks(cfg):
    """(label, report, expected_pass) triples for the named suite."""
    theta = cfg.theta if cfg.theta is not None else 1.0
    p = cfg.p if cfg.p is not None else 0.5
    rho = cfg.rho if cfg.rho is not None else 0.5
    k, d = cfg.k, cfg.degree
    times = (0, 1, 2)
    if cfg.suite == "theorem2":
        nb = NegBinomial(p)
        return [
            (
                "mvid-thinning-nb",
                check_mvid(chain_joint_pmf(Thinning(nb, theta, rho), times, k), d),
                False,
            ),
            (
                "mvid-branching-nb",
                check_mvid(chain_joint_pmf(BranchingNB(theta, p, rho), times, k), d),
                True,
            ),
            (
                "mvid-branching-poisson",
                check_mvid(chain_joint_pmf(BranchingPoisson(theta, rho), times, k), d),
                True,
            ),
        ]
    if cfg.suite == "theorem3":
        nb = NegBinomial(p)
        return [
            (
                "markov-rm-nb",
                check_markov_triple(chain_joint_pmf(RandomMeasure(nb, theta, rho), times, k)),
                False,
            ),
            (
                "markov-rm-poisson",
                check_markov_triple(
                    chain_joint_pmf(RandomMeasure(Poisson(), theta, rho), times, k)
                ),
                True,
            ),
            (
                "markov-thinning-nb",
                check_markov_triple(chain_joint_pmf(Thinning(nb, theta, rho), times, k)),
                True,
            ),
        ]
    if cfg.suite == "poisson-coincidence":
        thin = chain_joint_pmf(Thinning(Poisson(), theta, rho), times, k)
        rand = chain_joint_pmf(RandomMeasure(Poisson(), theta, rho), times, k)
        diff = np.abs(thin.table - rand.table)
        witness = tuple(int(i) for i in np.unravel_index(diff.argmax(), diff.shape))
        coincide = VerifyReport("tables-coincide-poisson", float(diff.max()), witness, 1e-10)
        return [
            ("tables-coincide-poisson", coincide, True),
            ("markov-rm-poisson", check_markov_triple(rand), True),
            ("mvid-rm-poisson", check_mvid(rand, min(cfg.degree, k)), True),
        ]
    raise ValueError(f"unknown suite {cfg.suite!r}")


def cmd_verify(cfg):
    checks = _suite_checks(cfg)
    fmt = cfg.format or "jsonl"
    stream, owned = _open_out(cfg)
    all_matched = True
    try:
        if fmt == "csv":
            stream.write("name,violation,witness,tolerance,pass,expected_pass,matched\n")
        for label, report, expected in checks:
            matched = report.passed == expected
            all_matched &= matched
            if fmt == "jsonl":
                payload = json.loads(report.to_json())
                payload["name"] = label
                payload["expected_pass"] = expected
                payload["matched"] = matched
                stream.write(json.dumps(payload) + "\n")
            else:
                witness = "" if report.witness is None else ";".join(map(str, report.witness))
                stream.write(
                    f"{label},{_fmt(report.violation)},{witness},"
                    f"{_fmt(report.tolerance)},{report.passed},{expected},{matched}\n"
                )
    finally:
        if owned:
            stream.close()
    return 0 if all_matched else 1


def cmd_classify(cfg):
    spec = misti_classify(cfg.r0, cfg.r1, cfg.r2, cfg.theta1)
    if isinstance(spec, Constant):
        payload = {"family": "constant", "theta1": cfg.theta1}
    elif isinstance(spec, IID):
        payload = {"family": "iid", "theta1": cfg.theta1}
    elif isinstance(spec, BranchingPoisson):
        payload = {"family": "branching-poisson", "theta": spec.theta, "rho": spec.rho}
    else:
        payload = {
            "family": "branching-nb",
            "alpha": spec.alpha,
            "p": spec.p,
            "rho": spec.rho,
        }
    stream, owned = _open_out(cfg)
    try:
        stream.write(json.dumps(payload) + "\n")
    finally:
        if owned:
            stream.close()
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        if getattr(args, "dump_config", None):
            with open(args.dump_config, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(cfg.dump())
        handler = {
            "simulate": cmd_simulate,
            "table": cmd_table,
            "verify": cmd_verify,
            "classify": cmd_classify,
        }[cfg.command]
        return handler(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
