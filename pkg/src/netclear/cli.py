"""Single command-line entry point.

Exit codes: 0 success or witness found, 2 invalid input, 3 decision answered
"no", 4 search budget exceeded.  All file outputs are written atomically.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import simlab
from .clearing import clear_priority_proportional, clear_proportional
from .compressflow import greedy_compress, save_all_but_one
from .errors import BudgetExceededError, InvalidInputError, NetclearError
from .gadgets import TwoSatFormula, max2sat_market, partition_market
from .io import (
    atomic_write_text,
    compression_to_dict,
    load_market,
    market_to_dict,
    payments_to_dict,
    read_edge_list_csv,
    save_market,
)
from .market import (
    PRIORITY,
    PROPORTIONAL,
    DefaultReport,
    apply_compression,
    check_clearing,
    defaulting_set,
    validate,
)
from .milp import optimal_compress
from .rational import format_rational

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO = 3
EXIT_BUDGET = 4


def _write_json(path: str, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def _cmd_check(args) -> int:
    market = load_market(args.market)
    problems = validate(market)
    if problems:
        for line in problems:
            print(line, file=sys.stderr)
        return EXIT_INVALID
    print(f"ok: {market.n} banks, {len(market.arcs())} liability arcs")
    return EXIT_OK


def _cmd_clear(args) -> int:
    market = load_market(args.market)
    problems = validate(market)
    if problems:
        raise InvalidInputError("; ".join(problems))
    if args.model == PROPORTIONAL:
        payments = clear_proportional(market)
        trace = None
    else:
        payments, trace = clear_priority_proportional(market)
    report = check_clearing(market, payments, args.model)
    assert isinstance(report, DefaultReport)
    payload = payments_to_dict(market, payments, report.defaulting)
    if args.out:
        _write_json(args.out, payload)
    else:
        print(json.dumps(payload, indent=2))
    if args.trace and trace is not None:
        rounds = [
            {
                "round": rec.round,
                "defaulted": list(rec.defaulted),
                "gamma": list(rec.gamma),
                "total_subsidy": format_rational(rec.total_subsidy),
                "subsidies": [format_rational(v) for v in rec.subsidies],
                "payments_total": format_rational(rec.payments_total),
            }
            for rec in trace
        ]
        _write_json(args.trace, {"rounds": rounds})
    return EXIT_OK


def _cmd_compress_greedy(args) -> int:
    market = load_market(args.market)
    compression, residual = greedy_compress(market)
    payments = clear_proportional(residual)
    payload = compression_to_dict(market, compression)
    payload.update(payments_to_dict(residual, payments, defaulting_set(residual, payments)))
    if args.out:
        _write_json(args.out, payload)
    else:
        print(json.dumps(payload, indent=2))
    return EXIT_OK


def _cmd_compress_optimal(args) -> int:
    market = load_market(args.market)
    scale = None if args.scale == "auto" else int(args.scale)
    import time

    t0 = time.perf_counter()
    result = optimal_compress(
        market,
        scale=scale,
        restrict=args.restrict,
        node_budget=args.node_budget,
        time_budget=args.time_budget,
    )
    wall = time.perf_counter() - t0
    payload = compression_to_dict(market, result.compression)
    compressed = apply_compression(market, result.compression)
    payload.update(payments_to_dict(compressed, result.clearing, result.report.defaulting))
    payload["objective"] = result.objective
    payload["nodes"] = result.nodes
    payload["wall_time_s"] = round(wall, 6)
    if args.out:
        _write_json(args.out, payload)
    else:
        print(json.dumps(payload, indent=2))
    return EXIT_OK


def _cmd_compress_save(args) -> int:
    market = load_market(args.market)
    witness = save_all_but_one(market, args.model)
    if witness is None:
        payload = {"verdict": "none"}
        if args.out:
            _write_json(args.out, payload)
        else:
            print(json.dumps(payload, indent=2))
        return EXIT_NO
    payload = {
        "verdict": "found",
        "defaulter": None if witness.defaulter is None else market.names[witness.defaulter],
    }
    payload.update(compression_to_dict(market, witness.compression))
    compressed = apply_compression(market, witness.compression)
    payload.update(
        payments_to_dict(compressed, witness.clearing, witness.report.defaulting)
    )
    if args.out:
        _write_json(args.out, payload)
    else:
        print(json.dumps(payload, indent=2))
    return EXIT_OK


def _parse_liability(text: str) -> tuple:
    parts = text.split(":")
    if parts[0] == "uniform" and len(parts) == 3:
        return ("uniform", float(parts[1]), float(parts[2]))
    if parts[0] == "lognormal" and len(parts) == 2:
        return ("lognormal", float(parts[1]))
    raise InvalidInputError(f"bad liability spec {text!r} (uniform:LO:HI or lognormal:MEAN)")


def _parse_endowment(text: str) -> tuple:
    parts = text.split(":")
    if parts[0] == "ufrac" and len(parts) == 2:
        return ("uniform-fraction", float(parts[1]))
    if parts[0] == "lognoise" and len(parts) == 3:
        return ("lognormal-noise", float(parts[1]), float(parts[2]))
    raise InvalidInputError(f"bad endowment spec {text!r} (ufrac:FRAC or lognoise:SIGMA:FRAC)")


def _parse_range(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) == 1:
        v = float(parts[0])
        return (v, v)
    if len(parts) == 2:
        return (float(parts[0]), float(parts[1]))
    raise InvalidInputError(f"bad range {text!r} (LO:HI)")


def _cmd_gen_er(args) -> int:
    config = simlab.GenConfig(
        n=args.n,
        p=args.p,
        liability=_parse_liability(args.liability),
        endowment=_parse_endowment(args.endowment),
        alpha_range=_parse_range(args.alpha),
        beta_range=_parse_range(args.beta),
        seed=args.seed,
    )
    market = simlab.gen_erdos_renyi(config)
    save_market(args.out, market)
    print(f"wrote {market.n} banks, {len(market.arcs())} arcs to {args.out}")
    return EXIT_OK


def _cmd_gen_snowball(args) -> int:
    edges = read_edge_list_csv(args.edges)
    market = simlab.snowball_sample(edges, args.n, args.seed)
    save_market(args.out, market)
    print(f"wrote {market.n} banks, {len(market.arcs())} arcs to {args.out}")
    return EXIT_OK


def _cmd_gen_gadget(args) -> int:
    with open(args.params) as fh:
        params = json.load(fh)
    if args.kind in ("max2sat", "max2sat-cycle"):
        formula = TwoSatFormula.create(params["variables"], params["clauses"])
        variant = "general" if args.kind == "max2sat" else "cycle"
        gadget = max2sat_market(formula, params["k"], variant)
    else:
        gadget = partition_market(params["values"])
    payload = market_to_dict(gadget.market)
    payload["gadget"] = {
        "kind": gadget.kind,
        "threshold": gadget.threshold,
        "distinguished": gadget.distinguished,
        "parameter": format_rational(gadget.parameter),
    }
    _write_json(args.out, payload)
    print(f"wrote {gadget.market.n}-bank {gadget.kind} gadget to {args.out}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    with open(args.config) as fh:
        raw = json.load(fh)
    template = simlab.GenConfig.from_dict(raw)
    sizes = [int(s) for s in raw.get("sizes", [template.n])]
    instances = int(raw.get("instances_per_size", 10))
    budget = raw.get("milp_time_budget", 60.0)
    node_budget = int(raw.get("milp_node_budget", 200_000))
    report = simlab.run_experiment(
        sizes, instances, template, milp_time_budget=budget, milp_node_budget=node_budget
    )
    simlab.write_report(report, args.out)
    completed = sum(1 for r in report.rows if r.completed())
    print(
        f"{len(report.rows)} instances ({completed} with MILP optimum) -> "
        f"{args.out}/report.csv, {args.out}/instances.jsonl"
    )
    violations = report.dominance_violations()
    if violations:
        for row in violations:
            print(
                f"dominance violated at size={row.size} instance={row.instance}",
                file=sys.stderr,
            )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netclear",
        description="Clearing vectors and default-minimizing portfolio compression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a market file")
    p.add_argument("--market", required=True)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("clear", help="compute the maximal clearing vector")
    p.add_argument("--model", choices=[PROPORTIONAL, PRIORITY], default=PRIORITY)
    p.add_argument("--market", required=True)
    p.add_argument("--out")
    p.add_argument("--trace")
    p.set_defaults(func=_cmd_clear)

    comp = sub.add_parser("compress", help="compression search").add_subparsers(
        dest="mode", required=True
    )
    p = comp.add_parser("greedy", help="cancel all liability cycles greedily")
    p.add_argument("--market", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_compress_greedy)

    p = comp.add_parser("optimal", help="minimize defaults exactly (MILP)")
    p.add_argument("--market", required=True)
    p.add_argument("--scale", default="auto")
    p.add_argument("--restrict", choices=["none", "bilateral"], default="none")
    p.add_argument("--node-budget", type=int, default=200_000)
    p.add_argument("--time-budget", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_compress_optimal)

    p = comp.add_parser("save-all-but-one", help="decide if one default suffices")
    p.add_argument("--model", choices=[PROPORTIONAL, PRIORITY], default=PROPORTIONAL)
    p.add_argument("--market", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_compress_save)

    gen = sub.add_parser("gen", help="instance generators").add_subparsers(
        dest="what", required=True
    )
    p = gen.add_parser("er", help="Erdos-Renyi market")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=0.2)
    p.add_argument("--liability", default="uniform:100:1000")
    p.add_argument("--endowment", default="ufrac:0.8")
    p.add_argument("--alpha", default="1")
    p.add_argument("--beta", default="1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_er)

    p = gen.add_parser("snowball", help="snowball sample from an edge list")
    p.add_argument("--edges", required=True, help="CSV with header from,to,amount")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_snowball)

    p = gen.add_parser("gadget", help="hardness-reduction market")
    p.add_argument("--kind", choices=["max2sat", "max2sat-cycle", "partition"], required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_gadget)

    p = sub.add_parser("simulate", help="baseline/greedy/MILP sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvalidInputError, NetclearError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
