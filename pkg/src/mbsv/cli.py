"""Command-line entry point: ``mbsv <command> ...``.

Text output is tab-delimited so it can be piped into other tools; ``--format
json`` gives the same content as one JSON document. Exit codes: 0 on a clean
run, 1 on usage or input errors, 2 when ``--fail-on-fault`` is set and a
fault is found (or when ``oracle-check`` exceeds its tolerance).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .detection import DetectionPolicy, apparent_fault_set
from .graph_model import ModelError, Network, reduced_model
from .inference import joint_enumerate, posterior_given_blanket
from .isolation import distinguishability_report, isolate
from .models import load_model, load_readings, readings_to_names
from .simulator import (BadStuckState, CampaignConfig, disjoint_pairs, make_rng,
                        run_campaign, subset_pairs)

ORACLE_TOL = 1e-9


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def fmt_set(s) -> str:
    return "{" + ",".join(sorted(s)) + "}"


def _default_seed() -> int:
    raw = os.environ.get("MBSV_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"MBSV_SEED must be an integer, got {raw!r}") from None


def _policy(args) -> DetectionPolicy:
    return DetectionPolicy(mode=args.policy, tau=args.tau, delta=args.delta)


def _emit(doc, args, text_lines):
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    else:
        print("\n".join(text_lines))


# -- blankets

def cmd_blankets(net: Network, args) -> int:
    b = net.blankets
    rows = [{"variable": x, "parents": sorted(b.parents[x]), "children": sorted(b.children[x]),
             "spouses": sorted(b.spouses[x]), "markov_blanket": sorted(b.mb[x]),
             "lattice_node": sorted(b.emb[x])} for x in b.order]
    lines = ["variable\tparents\tchildren\tspouses\tmarkov_blanket\tlattice_node"]
    for r in rows:
        lines.append("\t".join([r["variable"]] + [fmt_set(r[k]) for k in
                                                  ("parents", "children", "spouses",
                                                   "markov_blanket", "lattice_node")]))
    _emit({"model": net.name, "blankets": rows}, args, lines)
    return 0


# -- validate / explain

def _validate_one(net: Network, readings, args, explain: bool):
    monitored = args.monitored.split(",") if args.monitored else None
    report = apparent_fault_set(net, readings, _policy(args), monitored)
    verdict = isolate(report.apparent, net.blankets)
    doc = {
        "readings": readings_to_names(net, readings),
        "flagged": report.flagged,
        "apparent": sorted(report.apparent),
        "verdict": verdict.to_dict(),
        "summary": verdict.describe(),
    }
    if explain:
        doc["trajectory"] = [sorted(s) for s in report.trajectory]
        doc["checks"] = []
        for x, c in report.checks.items():
            red = reduced_model(net, x)
            doc["checks"].append({
                "variable": x,
                "observed": net.variable(x).states[c.observed],
                "predicted": net.variable(x).states[c.predicted],
                "posterior": dict(zip(net.variable(x).states, c.posterior.probs)),
                "p_observed": c.p_observed,
                "degenerate": c.degenerate,
                "flagged": c.flagged,
                "reasons": c.reasons(),
                "reduced_model": {"nodes": list(red.ids), "edges": [list(e) for e in red.edges]},
            })
    return doc, report


def _validate_text(net: Network, docs, explain: bool) -> list[str]:
    lines = []
    for i, d in enumerate(docs):
        if len(docs) > 1:
            lines.append(f"# readings {i}")
        if explain:
            lines.append("variable\tobserved\tpredicted\tposterior\tflagged\treasons\treduced_model")
            for c in d["checks"]:
                post = ",".join(f"{s}={p:.5f}" for s, p in c["posterior"].items())
                red = ",".join(f"{a}->{b}" for a, b in c["reduced_model"]["edges"]) or "-"
                lines.append("\t".join([c["variable"], c["observed"], c["predicted"], post,
                                        "yes" if c["flagged"] else "no",
                                        "; ".join(c["reasons"]) or "-",
                                        fmt_set(c["reduced_model"]["nodes"]) + " " + red]))
            lines.append("trajectory\t" + " -> ".join(["∅"] + [fmt_set(s) if s else "∅"
                                                                for s in d["trajectory"]]))
        lines.append("apparent\t" + fmt_set(d["apparent"]))
        lines.append("case\t" + d["verdict"]["case"])
        lines.append("verdict\t" + d["summary"])
    return lines


def cmd_validate(net: Network, args, explain: bool = False) -> int:
    batch, is_batch = load_readings(net, args.readings)
    docs, reports = [], []
    for r in batch:
        d, rep = _validate_one(net, r, args, explain)
        docs.append(d)
        reports.append(rep)
    if explain and args.figure:
        from .plotting import plot_lattice
        for i, rep in enumerate(reports):
            path = Path(args.figure)
            if is_batch:
                path = path.with_name(f"{path.stem}-{i}{path.suffix}")
            plot_lattice(net.blankets, rep.trajectory, path, rep.monitored)
    _emit({"model": net.name, "results": docs}, args, _validate_text(net, docs, explain))
    if args.fail_on_fault and any(d["apparent"] for d in docs):
        return 2
    return 0


# -- distinguishability

def cmd_distinguishability(net: Network, args) -> int:
    rep = distinguishability_report(net.blankets)
    notes = []
    for g in rep.identical_groups:
        notes.append(f"{fmt_set(g)} share one EMB: a single fault among them cannot be attributed")
    for y, x in rep.subset_pairs:
        notes.append(f"EMB({y}) is inside EMB({x}): a fault in {y} is hidden whenever {x} is faulty")
    if rep.all_distinct:
        notes.append("all EMBs distinct: every single fault can be isolated")
    lines = ["kind\tmembers"]
    lines += [f"identical\t{fmt_set(g)}" for g in rep.identical_groups]
    lines += [f"subset\t{y}<{x}" for y, x in rep.subset_pairs]
    lines.append(f"all_distinct\t{'yes' if rep.all_distinct else 'no'}")
    lines += ["# " + n for n in notes]
    doc = {"model": net.name, **rep.to_dict(), "notes": notes}
    _emit(doc, args, lines)
    return 0


# -- simulate

def _arity_weights(desc: str) -> dict[int, float]:
    out = {}
    for part in desc.split(","):
        if ":" in part:
            a, w = part.split(":", 1)
            out[int(a)] = float(w)
        else:
            out[int(part)] = 1.0
    return out


def cmd_simulate(net: Network, args) -> int:
    mode, stuck = args.mode, None
    if mode.startswith("stuck:"):
        mode, stuck = "stuck", mode.split(":", 1)[1]
        if stuck.isdigit():
            stuck = int(stuck)
    elif mode != "random-different":
        raise UsageError(f"unknown --mode {args.mode!r}")

    fault_sets = None
    if args.pairs == "disjoint":
        fault_sets = tuple(disjoint_pairs(net.blankets))
    elif args.pairs == "subset":
        fault_sets = tuple(frozenset(p) for p in subset_pairs(net.blankets))
    elif args.faults != "auto":
        fault_sets = (frozenset(f for f in args.faults.split(",") if f),)
        for x in fault_sets[0]:
            net.variable(x)
    if fault_sets is not None and not fault_sets:
        raise ModelError(f"model has no {args.pairs} pairs")

    config = CampaignConfig(
        episodes=args.episodes, arity_weights=_arity_weights(args.arity), fault_sets=fault_sets,
        mode=mode, stuck_state=stuck, policy=_policy(args), detector=args.detector,
        seed=args.seed if args.seed is not None else _default_seed())
    if mode == "stuck":
        # Validate the stuck state up front so every episode does not fail separately.
        for v in net.variables:
            try:
                v.state_index(stuck)
            except ModelError as exc:
                raise BadStuckState(str(exc)) from None
    m = run_campaign(net, config)
    if args.figure:
        from .plotting import plot_verdict_histogram
        plot_verdict_histogram(m.verdict_histogram, args.figure,
                               f"{net.name}: {m.episodes} episodes, {args.detector} detector")
    lines = ["metric\tvalue"]
    for k, v in m.to_dict().items():
        if k == "verdict_histogram":
            continue
        lines.append(f"{k}\t{'n/a' if v is None else (f'{v:.6f}' if isinstance(v, float) else v)}")
    lines += [f"verdict:{c}\t{n}" for c, n in m.verdict_histogram.items()]
    _emit({"model": net.name, "seed": config.seed, "detector": config.detector,
           "metrics": m.to_dict()}, args, lines)
    return 0


# -- oracle-check

def oracle_check(net: Network, trials: int, seed: int) -> float:
    """Largest gap between the local-product posterior and full enumeration."""
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = net.ids[int(rng.integers(len(net.ids)))]
        ev = {v: int(rng.integers(net.cardinality(v))) for v in sorted(net.blankets.mb[x])}
        a = posterior_given_blanket(net, x, ev)
        b = joint_enumerate(net, x, ev)
        worst = max(worst, float(np.max(np.abs(np.subtract(a.probs, b.probs)))))
    return worst


def cmd_oracle_check(net: Network, args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    worst = oracle_check(net, args.trials, seed)
    ok = worst <= ORACLE_TOL
    _emit({"model": net.name, "trials": args.trials, "seed": seed, "max_deviation": worst,
           "tolerance": ORACLE_TOL, "ok": ok}, args,
          ["metric\tvalue", f"trials\t{args.trials}", f"max_deviation\t{worst:.3e}",
           f"within_tolerance\t{'yes' if ok else 'no'}"])
    return 0 if ok else 2


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mbsv", description="Markov-blanket sensor validation.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--model", required=True, help="model file or builtin:<name>")
    common.add_argument("--eps", type=float, default=None, help="noise level for builtin models")
    common.add_argument("--format", choices=("text", "json"), default="text")

    policy = _Parser(add_help=False)
    policy.add_argument("--policy", choices=("argmax", "confidence", "combined"), default="combined")
    policy.add_argument("--tau", type=float, default=0.9)
    policy.add_argument("--delta", type=int, default=0)

    sub.add_parser("blankets", parents=[common], help="print the MB/EMB table")
    for name, helptext in (("validate", "validate readings"),
                           ("explain", "validate with posteriors, reduced models and trajectory")):
        p = sub.add_parser(name, parents=[common, policy], help=helptext)
        p.add_argument("--readings", required=True)
        p.add_argument("--monitored", help="comma-separated check order (default: all)")
        p.add_argument("--fail-on-fault", action="store_true")
        if name == "explain":
            p.add_argument("--figure", help="write the lattice trajectory figure here")
    sub.add_parser("distinguishability", parents=[common], help="identical and nested EMBs")

    p = sub.add_parser("simulate", parents=[common, policy], help="run a fault-injection campaign")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--detector", choices=("ideal", "probabilistic"), default="probabilistic")
    p.add_argument("--faults", default="auto", help="'auto' or a comma-separated fault set")
    p.add_argument("--arity", default="1", help="arity weights, e.g. '0:0.2,1:0.5,2:0.3'")
    p.add_argument("--pairs", choices=("disjoint", "subset"), default=None,
                   help="draw faults from disjoint-EMB or nested-EMB pairs")
    p.add_argument("--mode", default="random-different", help="random-different or stuck:STATE")
    p.add_argument("--figure", help="write a verdict histogram here")

    p = sub.add_parser("oracle-check", parents=[common], help="posterior vs. enumeration")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    return parser


COMMANDS = {
    "blankets": cmd_blankets,
    "validate": cmd_validate,
    "explain": lambda net, args: cmd_validate(net, args, explain=True),
    "distinguishability": cmd_distinguishability,
    "simulate": cmd_simulate,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        net = load_model(args.model, args.eps)
        return COMMANDS[args.command](net, args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ModelError, ValueError, OSError) as exc:
        print(f"mbsv: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
