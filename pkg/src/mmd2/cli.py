"""Command line entry point: ``mmd2 {solve,props,simulate,sweep,validate}``.

Exit status: 0 success, 1 a validation check failed, 2 usage error,
3 domain error (e.g. unstable parameters).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import analytic, bench, chain, mo_bve, sim
from .errors import DomainError, MisuseError, MMD2Error

EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3

STABILITY_HINT = "stability requires λ < μ₁+μ₂+2μ₁₂ (lambda < mu1 + mu2 + 2*mu12)"
FORMATS = ("table", "csv", "jsonl")


class UsageError(Exception):
    pass


def read_config(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys use flag spelling (``mu12``, ``grid-n``)."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _model_flags(p: argparse.ArgumentParser, p_default: float = 0.5) -> None:
    p.add_argument("--lambda", dest="lam", type=float, help="arrival rate")
    p.add_argument("--mu1", type=float, help="rate of shocks hitting server 1 only")
    p.add_argument("--mu2", type=float, help="rate of shocks hitting server 2 only")
    p.add_argument("--mu12", type=float, help="rate of common shocks")
    p.add_argument("--p", type=float, default=p_default, help=f"idle-arrival routing to server 1 (default {p_default})")


def _output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write to this file instead of stdout")
    p.add_argument("--format", choices=FORMATS, help="output format (default: table, or from --out suffix)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mmd2", description="Two-server queue with common-shock correlated services.")
    ap.add_argument("--config", help="key=value file; command-line flags take precedence")
    sub = ap.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("solve", help="closed-form stationary distribution and moments")
    _model_flags(s)
    _output_flags(s)

    s = sub.add_parser("props", help="properties of the service-time law")
    s.add_argument("--mu1", type=float)
    s.add_argument("--mu2", type=float)
    s.add_argument("--mu12", type=float)
    _output_flags(s)

    s = sub.add_parser("simulate", help="replicated discrete-event simulation")
    _model_flags(s)
    s.add_argument("--horizon", type=float, default=1e5)
    s.add_argument("--warmup", type=float, default=None, help="default: 10%% of horizon")
    s.add_argument("--replications", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trace", help="CSV event trace of the first replication")
    s.add_argument("--trace-limit", type=int, default=10000)
    _output_flags(s)

    s = sub.add_parser("sweep", help="equal-load sweep of E[Q] over mu12")
    s.add_argument("--rho", type=float)
    s.add_argument("--theta", type=float, default=1.0, help="mu1/mu2 (1 = homogeneous)")
    s.add_argument("--grid-n", type=int, default=151)
    s.add_argument("--drift-left", type=float, default=15.0)
    s.add_argument("--p", type=float, default=1.0)
    s.add_argument("--svg", help="also write a line chart here")
    _output_flags(s)

    s = sub.add_parser("validate", help="closed form vs truncated chain vs simulation")
    _model_flags(s)
    s.add_argument("--seed", type=int, help="required unless --no-sim")
    s.add_argument("--no-sim", action="store_true")
    s.add_argument("--horizon", type=float, default=2e5)
    s.add_argument("--replications", type=int, default=20)
    s.add_argument("--levels", type=int, default=None, help="truncation level (default from the tail root)")
    _output_flags(s)
    ap.set_defaults(_verbs=sub.choices)
    return ap


def _parse(argv) -> argparse.Namespace:
    ap = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    ns = ap.parse_args(argv)
    if known.config:
        try:
            cfg = read_config(known.config)
        except OSError as exc:
            ap.error(f"cannot read config: {exc}")
        except UsageError as exc:
            ap.error(str(exc))
        # re-parse with config values as defaults so explicit flags win
        sub = ns._verbs[ns.verb]
        types = {a.dest: a.type for a in sub._actions}
        defaults = {}
        for k, v in cfg.items():
            key = "lam" if k == "lambda" else k
            if key not in types:
                ap.error(f"unknown config key {k!r} for {ns.verb}")
            conv = types[key] or str
            try:
                defaults[key] = conv(v)
            except ValueError:
                ap.error(f"bad value for {k!r} in config: {v!r}")
        sub.set_defaults(**defaults)
        ns = ap.parse_args(argv)
    return ns


def _require(ns, *names):
    missing = [n for n in names if getattr(ns, n, None) is None]
    if missing:
        flags = ", ".join("--lambda" if n == "lam" else "--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{ns.verb}: missing required {flags}")


def _model(ns) -> chain.ModelParams:
    _require(ns, "lam", "mu1", "mu2", "mu12")
    return chain.ModelParams.of(ns.lam, ns.mu1, ns.mu2, ns.mu12, p=ns.p)


def _fmt(v) -> str:
    if isinstance(v, float):
        return "%.12g" % v
    return str(v)


def render(records: list[dict], fmt: str) -> str:
    if fmt == "jsonl":
        return "".join(json.dumps(r) + "\n" for r in records)
    keys = list(records[0]) if records else []
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for r in records:
            w.writerow([_fmt(r[k]) for k in keys])
        return buf.getvalue()
    cells = [keys] + [[_fmt(r[k]) for k in keys] for r in records]
    widths = [max(len(row[i]) for row in cells) for i in range(len(keys))]
    return "".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() + "\n" for row in cells)


def _choose_format(ns) -> str:
    if ns.format:
        return ns.format
    if ns.out:
        suffix = Path(ns.out).suffix.lower()
        if suffix == ".csv":
            return "csv"
        if suffix in (".jsonl", ".json"):
            return "jsonl"
    return "table"


def _write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_solve(ns) -> tuple[list[dict], list[tuple[str, str]]]:
    m = _model(ns)
    if m.p in (0.0, 1.0):
        print(f"note: p={m.p:g} is outside 0 < p < 1; formulas are evaluated at the endpoint", file=sys.stderr)
    sol = analytic.solve_het(m)
    mom = analytic.moments(sol)
    rec = {
        "r": sol.r,
        "C": sol.C,
        "pi0": sol.pi0,
        "pi_10": sol.pi_10,
        "pi_01": sol.pi_01,
        "EL": mom.EL,
        "EQ": mom.EQ,
        "rho": sol.rho,
        "A": sol.A,
        "B": sol.B,
        "P_of_r": sol.P_of_r,
    }
    return [rec], []


def cmd_props(ns):
    _require(ns, "mu1", "mu2", "mu12")
    props = mo_bve.derived_properties(mo_bve.MOParams(ns.mu1, ns.mu2, ns.mu12))
    return [asdict(props)], []


def cmd_simulate(ns):
    m = _model(ns)
    cfg = sim.SimConfig(
        m,
        horizon=ns.horizon,
        warmup=ns.warmup,
        replications=ns.replications,
        seed=ns.seed,
        trace_limit=ns.trace_limit if ns.trace else 0,
    )
    est = sim.replicate(cfg)
    exact = {}
    if analytic.stability(m).stable:
        sol = analytic.solve_het(m)
        mom = analytic.moments(sol)
        exact = {"0": sol.pi0, "(1,0)": sol.pi_10, "(0,1)": sol.pi_01, "EL": mom.EL, "EQ": mom.EQ}
        for k in range(2, 200):
            exact[str(k)] = sol.pi_level(k)
    recs = [
        {"quantity": "EL", "estimate": est.EL_hat.mean, "halfwidth": est.EL_hat.halfwidth, "analytic": exact.get("EL", math.nan)},
        {"quantity": "EQ", "estimate": est.EQ_hat.mean, "halfwidth": est.EQ_hat.halfwidth, "analytic": exact.get("EQ", math.nan)},
    ]
    for lab, v in est.pi_hat.items():
        recs.append(
            {"quantity": f"pi[{lab}]", "estimate": v, "halfwidth": est.pi_halfwidth[lab], "analytic": exact.get(lab, math.nan)}
        )
    extra = []
    if ns.trace:
        extra.append((ns.trace, sim.trace_csv(est)))
    print(
        f"seed={ns.seed} replications={est.replications} common_departures={est.common_departures} "
        f"single_departures={est.single_departures}",
        file=sys.stderr,
    )
    return recs, extra


def cmd_sweep(ns):
    _require(ns, "rho")
    if ns.grid_n < 2:
        raise UsageError("sweep: --grid-n must be >= 2")
    cfg = bench.SweepConfig(ns.rho, ns.drift_left, ns.theta, bench.default_grid(ns.drift_left, ns.grid_n), ns.p)
    rows = bench.sweep(cfg)
    recs = [dict(zip(bench.CSV_HEADER, r.as_tuple())) for r in rows]
    extra = []
    if ns.svg:
        extra.append((ns.svg, bench.to_svg(rows, f"rho={ns.rho:g}, theta={ns.theta:g}")))
    best = max(rows, key=lambda r: r.ratio_to_independent)
    print(f"max ratio {best.ratio_to_independent:.6g} at mu12={best.mu12:g}", file=sys.stderr)
    for a, b in bench.monotonicity_violations(rows):
        print(f"finding: E[Q] decreases between mu12={a.mu12:g} and mu12={b.mu12:g}", file=sys.stderr)
    return recs, extra


def cmd_validate(ns):
    m = _model(ns)
    if not ns.no_sim and ns.seed is None:
        raise UsageError("validate: --seed is required unless --no-sim is given")
    sol = analytic.solve_het(m)
    levels = ns.levels or chain.default_levels(sol.r)
    g = chain.build_het(m, levels)
    num = chain.solve_truncated(g)
    diff = float(np.max(np.abs(num.pi - sol.vector(levels))))
    bal = float(np.max(np.abs(analytic.balance_residual(m, sol))))
    recs = [
        {"check": "closed_form_vs_truncated", "value": diff, "tolerance": 1e-10, "pass": diff <= 1e-10},
        {"check": "closed_form_balance_residual", "value": bal, "tolerance": 1e-12, "pass": bal <= 1e-12},
        {"check": "truncated_solve_residual", "value": num.residual, "tolerance": 1e-12, "pass": num.residual <= 1e-12},
    ]
    if not ns.no_sim:
        est = sim.replicate(sim.SimConfig(m, ns.horizon, replications=ns.replications, seed=ns.seed))
        mom = analytic.moments(sol)
        for name, iv, exact in (
            ("sim_pi0", est.interval("0"), sol.pi0),
            ("sim_pi_10", est.interval("(1,0)"), sol.pi_10),
            ("sim_pi_01", est.interval("(0,1)"), sol.pi_01),
            ("sim_EQ", est.EQ_hat, mom.EQ),
        ):
            dev = abs(iv.mean - exact)
            recs.append({"check": name, "value": dev, "tolerance": iv.halfwidth, "pass": iv.covers(exact)})
    worst = max(r["value"] for r in recs[:3])
    print(f"max residual {worst:.3e}", file=sys.stderr)
    return recs, []


COMMANDS = {
    "solve": cmd_solve,
    "props": cmd_props,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = _parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        recs, extra = COMMANDS[ns.verb](ns)
        text = render(recs, _choose_format(ns))
    except UsageError as exc:
        print(f"mmd2: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, MisuseError) as exc:
        print(f"mmd2: domain error: {exc}", file=sys.stderr)
        if "unstable" in str(exc):
            print(STABILITY_HINT, file=sys.stderr)
        return EXIT_DOMAIN
    except MMD2Error as exc:
        print(f"mmd2: error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    for path, body in extra:
        _write(path, body)
    if ns.out:
        _write(ns.out, text)
    else:
        sys.stdout.write(text)
    if ns.verb == "validate" and not all(r["pass"] for r in recs):
        return EXIT_CHECK_FAILED
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
