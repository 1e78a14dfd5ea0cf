"""Command line interface.

Subcommands: gen, analyze, ea, tune, aggregate, compare, export.
Exit codes: 0 success, 2 parameter error, 3 capacity error, 4 convergence error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .errors import NklonError
from .landscape import ModelSpec, deserialize_instance, generate_instance, parse_model, serialize_instance

log = logging.getLogger("nklon")

DEFAULT_KS = "2,4,6,8,10,12,14,16,17"


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _models(text: str) -> list[tuple]:
    return [parse_model(t) for t in text.split(",") if t.strip()]


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _load(path: str):
    return deserialize_instance(Path(path).read_text())


def cmd_gen(args) -> int:
    model, param = parse_model(args.model)
    inst = generate_instance(ModelSpec(model, args.n, args.k, param, args.neighborhood, args.seed))
    _write(serialize_instance(inst), args.out)
    return 0


def cmd_analyze(args) -> int:
    from .experiment import ExperimentPlan, analyze_instance, orchestrate
    from .metrics import MetricsReport

    if args.instance:
        rows = []
        for path in args.instance:
            res = analyze_instance(
                _load(path), args.mode, args.samples, args.mc_seed,
                optimum_ties="error" if args.strict_optimum else "all",
            )
            rows.append([Path(path).stem] + res.report.row())
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["instance_id"] + MetricsReport.columns())
        w.writerows(rows)
        return 0
    plan = ExperimentPlan(
        models=_models(args.models),
        ks=_int_list(args.ks),
        n=args.n,
        instances=args.instances,
        base_seed=args.seed,
        out_dir=args.out,
        mode=args.mode,
        samples=args.samples,
        neighborhood=args.neighborhood,
        exports=args.exports,
        per_node=args.per_node,
        force=args.force,
        optimum_ties="error" if args.strict_optimum else "all",
    )
    out = orchestrate(plan, workers=args.workers)
    print(out / "metrics.csv")
    return 0


def cmd_ea(args) -> int:
    from .experiment import EaPlan, run_ea_campaign, write_ea_results

    plan = EaPlan(
        models=_models(args.models),
        ks=_int_list(args.ks),
        n=args.n,
        instances=args.instances,
        runs=args.runs,
        base_seed=args.seed,
        neighborhood=args.neighborhood,
        mutation_factor=args.mutation,
        crossover_rate=args.crossover,
        tune_runs=args.tune_runs,
        tune_instances=args.tune_instances,
        ea_options={"pop_size": args.pop_size, "eval_budget": args.budget},
    )
    rows, chosen = run_ea_campaign(plan)
    write_ea_results(args.out, rows)
    for key, (c, x) in chosen.items():
        log.info("%s: mutation %g/N, crossover %g", key, c, x)
    print(args.out)
    return 0


def cmd_tune(args) -> int:
    from .ea import grid_tune
    from .metrics import format_value

    model, param = parse_model(args.model)
    res = grid_tune(
        model, param, args.n, args.k, args.runs, args.instances, seed=args.seed,
        neighborhood=args.neighborhood, pop_size=args.pop_size, eval_budget=args.budget,
    )
    lines = ["mutation_factor,crossover,mean_success"]
    lines += [f"{format_value(c)},{format_value(x)},{format_value(v)}" for (c, x), v in res.table.items()]
    _write("\n".join(lines) + "\n", args.out)
    print(f"best: mutation {res.mutation_factor:g}/N crossover {res.crossover_rate:g} "
          f"mean success {res.mean_success:.4f}", file=sys.stderr)
    return 0


def cmd_aggregate(args) -> int:
    from .experiment import aggregate_text

    _write(aggregate_text(args.metrics), args.out)
    return 0


def _filter(text: str) -> dict[str, str]:
    out = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise NklonError(f"bad filter {part!r}; expected key=value")
        out[key.strip()] = value.strip()
    return out


def cmd_compare(args) -> int:
    from .stats import mann_whitney

    with open(args.file, newline="") as fh:
        rows = list(csv.DictReader(fh))
    samples = []
    for spec in (args.a, args.b):
        cond = _filter(spec)
        vals = [
            float(r[args.column]) for r in rows
            if r.get(args.column, "") != "" and all(r.get(k) == v for k, v in cond.items())
        ]
        samples.append(vals)
    res = mann_whitney(samples[0], samples[1], alternative=args.alternative)
    print(json.dumps({
        "column": args.column, "a": args.a, "b": args.b, "n": res.n, "m": res.m,
        "U": res.statistic, "p_value": res.p_value, "method": res.method,
        "alternative": args.alternative, "significant_5pct": res.p_value < 0.05,
    }, indent=2))
    return 0


def cmd_export(args) -> int:
    from .basins import basin_size_rows, distribution_rows
    from .experiment import analyze_instance
    from .lon import dot, edge_list_csv, graphml
    from .metrics import per_node_rows
    from .neutrality import nn_summary_rows, neutral_partition

    inst = _load(args.instance)
    if args.format == "nn":
        rows = nn_summary_rows(neutral_partition(inst), inst)
        _write("nn_id,fitness,size,is_lonn\n" + "".join(",".join(map(str, r)) + "\n" for r in rows), args.out)
        return 0
    res = analyze_instance(inst, args.mode, args.samples, args.mc_seed,
                           optimum_ties="error" if args.strict_optimum else "all")
    if args.format == "graphml":
        text = graphml(res.lon)
    elif args.format == "dot":
        text = dot(res.lon)
    elif args.format == "edges":
        text = edge_list_csv(res.lon)
    elif args.format == "basins":
        text = "lonn_id,fitness,size\n" + "".join(",".join(map(str, r)) + "\n" for r in basin_size_rows(res.dist, res.part, inst))
    elif args.format == "nodes":
        text = "node,fitness,basin_size,cw,y2\n" + "".join(",".join(r) + "\n" for r in per_node_rows(res.lon))
    else:  # dist
        if inst.size > 2**14 and not args.force:
            raise NklonError(f"full distribution dump has up to {inst.size} x LONN rows; pass --force")
        text = "genotype,lonn_id,probability\n" + "".join(",".join(map(str, r)) + "\n" for r in distribution_rows(res.dist))
    _write(text, args.out)
    return 0


def _add_instance_flags(p) -> None:
    p.add_argument("--n", type=int, default=18, help="genotype length")
    p.add_argument("--neighborhood", choices=["random", "adjacent"], default="random")
    p.add_argument("--seed", type=int, default=0, help="base seed")


def _add_analysis_flags(p) -> None:
    p.add_argument("--mode", choices=["exact", "mc"], default="exact", help="basin computation")
    p.add_argument("--samples", type=int, default=1000, help="climbs per start in mc mode")
    p.add_argument("--mc-seed", type=int, default=0)
    p.add_argument("--strict-optimum", action="store_true",
                   help="fail when several LONNs share the maximal fitness")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nklon", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[common], **kw)

    p = sub.add_parser("gen", help="generate one instance document")
    p.add_argument("--model", default="NK", help="NK, NKp:<p> or NKq:<q>")
    p.add_argument("--k", type=int, default=2)
    _add_instance_flags(p)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("analyze", help="analyze instance files or a whole experiment grid")
    p.add_argument("--instance", nargs="*", help="instance documents; skips the grid")
    p.add_argument("--models", default="NK,NKq:2,NKq:4,NKq:10,NKp:0.5,NKp:0.8,NKp:0.9")
    p.add_argument("--ks", default=DEFAULT_KS)
    p.add_argument("--instances", type=int, default=30, help="instances per cell")
    _add_instance_flags(p)
    _add_analysis_flags(p)
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--exports", action="store_true", help="write LON edge lists, GraphML and DOT")
    p.add_argument("--per-node", action="store_true", help="write per-node metrics")
    p.add_argument("--force", action="store_true", help="allow exact mode above n=14")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default $NKLON_WORKERS or 1)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("ea", help="EA success-rate campaign")
    p.add_argument("--models", default="NK,NKq:2,NKq:4,NKq:10,NKp:0.5,NKp:0.8,NKp:0.9")
    p.add_argument("--ks", default=DEFAULT_KS)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--runs", type=int, default=100)
    _add_instance_flags(p)
    p.add_argument("--mutation", type=float, default=None, help="mutation factor c (rate c/N); omit to tune")
    p.add_argument("--crossover", type=float, default=None, help="crossover rate; omit to tune")
    p.add_argument("--tune-runs", type=int, default=100)
    p.add_argument("--tune-instances", type=int, default=30)
    p.add_argument("--pop-size", type=int, default=100)
    p.add_argument("--budget", type=int, default=None, help="evaluations (default ceil(0.1 * 2^N))")
    p.add_argument("--out", default="results/ea_results.csv")
    p.set_defaults(func=cmd_ea)

    p = sub.add_parser("tune", help="grid search over the 36 mutation/crossover pairs")
    p.add_argument("--model", default="NK")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--instances", type=int, default=30)
    _add_instance_flags(p)
    p.add_argument("--pop-size", type=int, default=100)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--out", help="CSV of mean success per pair (default stdout)")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("aggregate", help="per-cell means and sds from metrics.csv")
    p.add_argument("metrics")
    p.add_argument("--out")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("compare", help="Mann-Whitney test between two row groups of a CSV column")
    p.add_argument("file")
    p.add_argument("--column", required=True)
    p.add_argument("--a", required=True, help="filter, e.g. model=NKq,param=2,k=6")
    p.add_argument("--b", required=True)
    p.add_argument("--alternative", choices=["two-sided", "greater", "less"], default="two-sided")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export", help="export one instance's networks")
    p.add_argument("instance")
    p.add_argument("--format", choices=["graphml", "dot", "edges", "basins", "nodes", "nn", "dist"], default="graphml")
    _add_analysis_flags(p)
    p.add_argument("--force", action="store_true", help="allow large distribution dumps")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NklonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
