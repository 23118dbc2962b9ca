"""Command-line entry point.

Exit status: 0 on success, 1 on a domain error (bad instance, failed
verification, search budget exhausted), 2 on a usage error.
"""
from __future__ import annotations

import argparse
import csv
import decimal
import io
import json
import os
import sys
from fractions import Fraction

from . import analysis, equal_optimal, exact_general, fluid, markov_exact, stochastic
from .core import (
    ContinuousSchedule,
    Instance,
    P2PError,
    dump_json,
    fraction_str,
    load_json,
    to_fraction,
    verify_schedule,
)

SEED_ENV = "P2PSPREAD_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw else 1


def _rational(text: str) -> Fraction:
    try:
        return to_fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _rational_list(text: str) -> list[Fraction]:
    return [_rational(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- schedule -------------------------------------------------------------


def cmd_schedule_equal(args) -> int:
    sched = equal_optimal.build_schedule(args.n, args.m)
    inst = Instance.equal(args.n, args.m, args.capacity)
    cont = sched.to_continuous(args.capacity)
    report = verify_schedule(inst, cont, check_downloads=True)
    if not report.valid:
        raise P2PError(f"constructed schedule failed verification: {report.summary()}")
    profile = equal_optimal.replica_profile(sched, args.n, args.m)
    payload = {
        "instance": inst.to_json(),
        "rounds": len(sched),
        "makespan": fraction_str(cont.makespan),
        "schedule": cont.to_json(),
    }
    if args.out:
        dump_json(payload, args.out)
    if args.profile_csv:
        _write_text(args.profile_csv, _csv_text(["round", "part", "count"], profile.rows()))
    print(f"rounds={len(sched)} makespan={fraction_str(cont.makespan)} valid=true")
    return 0


def cmd_verify(args) -> int:
    inst = Instance.from_json(load_json(args.instance))
    data = load_json(args.schedule)
    sched = ContinuousSchedule.from_json(data.get("schedule", data))
    report = verify_schedule(inst, sched, check_downloads=args.check_downloads)
    out = {
        "valid": report.valid,
        "makespan": fraction_str(report.makespan) if report.makespan is not None else None,
        "violations": [
            {"constraint": v.constraint, "time": fraction_str(v.time) if v.time is not None else None,
             "detail": v.detail, "uploads": [u.to_json() for u in v.uploads]}
            for v in report.violations
        ],
    }
    sys.stdout.write(dump_json(out))
    return 0 if report.valid else 1


# -- solve ----------------------------------------------------------------


def cmd_solve_exact(args) -> int:
    inst = Instance.from_json(load_json(args.instance))
    if args.exact_tau:
        tau = exact_general.exact_tau(inst)
    else:
        tau = args.tau
    result = exact_general.min_makespan(inst, tau, args.node_limit)
    text = dump_json(result.to_json())
    if args.out:
        _write_text(args.out, text)
    print(f"status={result.status} makespan={fraction_str(result.makespan)} "
          f"gap_bound={fraction_str(result.gap_bound)} nodes={result.nodes_explored}")
    return 0


def _two_peer_rows(cs: Fraction, steps: int):
    for s in range(1, steps + 1):
        c1 = Fraction(3 * s, steps) * cs
        cases = exact_general.two_peer_cases(cs, c1)
        best, label = exact_general.two_by_two_makespan(cs, c1)
        yield [fraction_str(c1 / cs)] + [f"{float(cases[c]):.6f}" for c in "ABCD"] + [
            f"{float(best):.6f}", label]


def cmd_solve_two_peer(args) -> int:
    if args.sweep:
        header = ["c1_over_cs", "A", "B", "C", "D", "best", "case"]
        _write_text(args.csv, _csv_text(header, _two_peer_rows(args.cs, args.steps)))
        return 0
    if args.c1 is None:
        raise P2PError("--c1 is required without --sweep")
    best, label = exact_general.two_by_two_makespan(args.cs, args.c1)
    cases = exact_general.two_peer_cases(args.cs, args.c1)
    out = {"makespan": best, "case": label, "cases": cases}
    sys.stdout.write(dump_json(out))
    return 0


def cmd_solve_fluid(args) -> int:
    fi = fluid.FluidInstance(tuple(args.files), tuple(args.caps))
    plan = fluid.build_transfer_plan(fi)
    report = fluid.verify_plan(fi, plan)
    if not report.valid:
        raise P2PError(report.summary())
    out = plan.to_json()
    out["completion_times"] = report.completion_times
    if plan.case == "reduced":
        red = fluid.reduce_capacities(fi)
        out["reduction"] = {"delta": red.delta, "gamma": list(red.gamma),
                            "reduced_capacities": list(red.reduced_capacities)}
    text = dump_json(out)
    if args.plan:
        _write_text(args.plan, text)
    print(f"makespan={fraction_str(plan.makespan)} case={plan.case}")
    return 0


def cmd_solve_fluid_server(args) -> int:
    if args.sweep:
        # makespans for N = 2 peers, file in 1, 2 and infinitely many parts
        rows = []
        for s in range(1, args.steps + 1):
            c1 = Fraction(3 * s, args.steps) * args.cs
            m1 = exact_general.n2_m1_makespan(args.cs, c1)
            m2, _ = exact_general.two_by_two_makespan(args.cs, c1)
            minf, _ = fluid.fluid_single_server(2, args.cs, c1)
            rows.append([fraction_str(c1 / args.cs), f"{float(m1):.6f}",
                         f"{float(m2):.6f}", f"{float(minf):.6f}"])
        _write_text(args.csv, _csv_text(["c1_over_cs", "m1", "m2", "m_inf"], rows))
        return 0
    if args.n is None or args.c1 is None:
        raise P2PError("--n and --c1 are required without --sweep")
    T, alpha = fluid.fluid_single_server(args.n, args.cs, args.c1)
    sys.stdout.write(dump_json({"makespan": T, "alpha": alpha, "makespan_float": float(T)}))
    return 0


# -- stochastic -----------------------------------------------------------


def cmd_simulate(args) -> int:
    if args.backend:
        stochastic.set_backend(args.backend)
    if len(args.n) == 1:
        cfgs = [stochastic.SimConfig(args.n[0], args.m, args.scenario, args.seed, args.reps,
                                     args.allow_nolist_parts)]
    else:
        # several N: each grid point gets its own derived seed, as in sweep()
        cfgs = [stochastic.SimConfig(n, args.m, args.scenario,
                                     stochastic.grid_seed(args.seed, n, args.m, args.scenario),
                                     args.reps, args.allow_nolist_parts) for n in args.n]
    rows = []
    for cfg in cfgs:
        st = stochastic.simulate(cfg)
        rows.extend([cfg.scenario, cfg.n_peers, cfg.n_parts, r, int(v)]
                    for r, v in enumerate(st.samples))
        lo, hi = st.ci95()
        prefix = f"N={cfg.n_peers} " if len(cfgs) > 1 else ""
        print(f"{prefix}mean={st.mean:.4f} sd={st.sd:.4f} se={st.se:.4f} ci95=[{lo:.4f}, {hi:.4f}] "
              f"n={st.n} backend={stochastic.backend()}")
    if args.csv:
        _write_text(args.csv, _csv_text(["scenario", "n", "m", "replication", "rounds"], rows))
    return 0


def cmd_markov(args) -> int:
    chain = markov_exact.build_chain(args.n, args.scenario)
    out = {"n": args.n, "scenario": chain.scenario}
    if args.exact_rational:
        value = markov_exact.expected_makespan(chain, exact=True)
        with decimal.localcontext() as ctx:
            ctx.prec = 50
            out["expected_rounds"] = str(decimal.Decimal(value.numerator) / value.denominator)
        out["exact"] = fraction_str(value)
        rounded = float(value)
    else:
        value = markov_exact.expected_makespan(chain)
        out["expected_rounds"] = str(value)
        rounded = float(value)
    out["rounded"] = f"{rounded:.3f}"
    sys.stdout.write(json.dumps(out) + "\n")
    return 0


def cmd_fit(args) -> int:
    with open(args.csv, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise P2PError("no samples in input")
    pts = []
    for r in rows:
        y = int(r["rounds"])
        pts.append((int(r["n"]), y / int(r["m"]) if args.per_part else y))
    fit = analysis.fit_loglinear(pts)
    out = {"intercept": fit.intercept, "slope": fit.slope, "r_squared": fit.r_squared,
           "n_points": fit.n_points, "residual_se": fit.residual_se}
    sys.stdout.write(json.dumps(out) + "\n")
    return 0


def cmd_report(args) -> int:
    spec = analysis.ExperimentSpec([args.scenario], [2**k for k in range(1, args.n_max_exp + 1)],
                                   args.m, args.reps, args.seed, args.csv)
    rows = analysis.growth_report(args.scenario, spec.m_values, spec.n_values,
                                  spec.replications, spec.seed)
    _write_text(args.csv, analysis.growth_csv(rows))
    return 0


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="p2pspread", description="File dissemination makespans.")
    sub = p.add_subparsers(dest="command", required=True)

    sch = sub.add_parser("schedule", help="constructive schedules")
    sch_sub = sch.add_subparsers(dest="kind", required=True)
    eq = sch_sub.add_parser("equal", help="optimal schedule for equal capacities")
    eq.add_argument("--n", type=int, required=True, help="number of peers")
    eq.add_argument("--m", type=int, required=True, help="number of file parts")
    eq.add_argument("--capacity", type=_rational, default=Fraction(1), help="common capacity")
    eq.add_argument("--out", help="schedule JSON path")
    eq.add_argument("--profile-csv", help="replica profile CSV path (round,part,count)")
    eq.set_defaults(func=cmd_schedule_equal)

    ver = sub.add_parser("verify", help="check a schedule against an instance")
    ver.add_argument("--instance", required=True)
    ver.add_argument("--schedule", required=True)
    ver.add_argument("--check-downloads", action="store_true",
                     help="also forbid simultaneous downloads by one peer")
    ver.set_defaults(func=cmd_verify)

    sol = sub.add_parser("solve", help="exact, closed-form and fluid solvers")
    sol_sub = sol.add_subparsers(dest="kind", required=True)
    ex = sol_sub.add_parser("exact", help="minimal makespan by grid search and bisection")
    ex.add_argument("--instance", required=True, help="instance JSON path")
    ex.add_argument("--tau", type=_rational, help="grid step (default: coarsest aligned step)")
    ex.add_argument("--exact-tau", action="store_true", help="use the provably exact grid step")
    ex.add_argument("--node-limit", type=int, help="search node budget")
    ex.add_argument("--out", help="result JSON path")
    ex.set_defaults(func=cmd_solve_exact)

    tp = sol_sub.add_parser("two-peer", help="two peers, two parts closed forms")
    tp.add_argument("--cs", type=_rational, default=Fraction(1), help="server capacity")
    tp.add_argument("--c1", type=_rational, help="peer capacity")
    tp.add_argument("--sweep", action="store_true", help="tabulate C_1/C_S over (0, 3]")
    tp.add_argument("--steps", type=int, default=300)
    tp.add_argument("--csv", help="sweep CSV path (default stdout)")
    tp.set_defaults(func=cmd_solve_two_peer)

    fl = sol_sub.add_parser("fluid", help="fluid limit with several sources")
    fl.add_argument("--files", type=_rational_list, required=True, help="F1,...,FN")
    fl.add_argument("--caps", type=_rational_list, required=True, help="C1,...,CN")
    fl.add_argument("--plan", help="plan JSON path")
    fl.set_defaults(func=cmd_solve_fluid)

    fs = sol_sub.add_parser("fluid-server", help="fluid limit with a single server")
    fs.add_argument("--n", type=int)
    fs.add_argument("--cs", type=_rational, default=Fraction(1))
    fs.add_argument("--c1", type=_rational)
    fs.add_argument("--sweep", action="store_true", help="N=2 makespans for M=1, 2, infinity")
    fs.add_argument("--steps", type=int, default=300)
    fs.add_argument("--csv", help="sweep CSV path (default stdout)")
    fs.set_defaults(func=cmd_solve_fluid_server)

    sim = sub.add_parser("simulate", help="Monte-Carlo runs of the randomized strategy")
    sim.add_argument("--scenario", choices=stochastic.SCENARIOS, required=True)
    sim.add_argument("--n", type=_int_list, required=True, help="peer count, or a comma list")
    sim.add_argument("--m", type=int, default=1)
    sim.add_argument("--reps", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=_default_seed(),
                     help=f"master seed (default ${SEED_ENV} or 1)")
    sim.add_argument("--csv", help="per-run CSV path")
    sim.add_argument("--allow-nolist-parts", action="store_true",
                     help="extension: NoList with several parts")
    sim.add_argument("--backend", choices=["python", "cython"])
    sim.set_defaults(func=cmd_simulate)

    mk = sub.add_parser("markov", help="exact expected rounds for an unsplit file")
    mk.add_argument("--scenario", choices=markov_exact.SCENARIOS, required=True)
    mk.add_argument("--n", type=int, required=True)
    mk.add_argument("--exact-rational", action="store_true")
    mk.set_defaults(func=cmd_markov)

    ft = sub.add_parser("fit", help="log-linear fit of simulation samples")
    ft.add_argument("--csv", required=True, help="CSV with columns scenario,n,m,replication,rounds")
    ft.add_argument("--per-part", action="store_true", help="fit rounds / M instead of rounds")
    ft.set_defaults(func=cmd_fit)

    rp = sub.add_parser("report", help="growth-rate table over several part counts")
    rp.add_argument("--scenario", choices=stochastic.SCENARIOS, default="list")
    rp.add_argument("--m", type=_int_list, default=[1, 2, 3, 4, 5])
    rp.add_argument("--n-max-exp", type=int, default=14, help="N runs over 2, 4, ..., 2^k")
    rp.add_argument("--reps", type=int, default=100)
    rp.add_argument("--seed", type=int, default=_default_seed())
    rp.add_argument("--csv", help="output CSV (default stdout)")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (P2PError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
