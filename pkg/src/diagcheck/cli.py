"""Command-line front end: ``diagcheck <command> MODEL``.

Exit status is 0 for a positive answer (diagnosable, reachable), 1 for a
negative one and 2 for usage or model errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import des, modelio, oracle, regions, timed
from .automata import FiniteAutomaton, ModelError, TimedAutomaton, as_timed, complete_deadlocks, product

YES, NO, ERROR = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _color(stream) -> bool:
    env = os.environ.get("DIAG_COLOR")
    if env is not None:
        return env == "1"
    return stream.isatty()


def _paint(text: str, ok: bool, stream) -> str:
    if not _color(stream):
        return text
    return f"\033[{32 if ok else 31}m{text}\033[0m"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("model", help="model file (.diag)")
    common.add_argument("--fault", help="fault label to analyse when several are declared")
    common.add_argument("--json", action="store_true", help="print the verdict as JSON")
    common.add_argument("--stats", action="store_true", help="print state-space sizes and their bounds")
    common.add_argument("--no-complete", dest="complete", action="store_false",
                        help="do not add tau self-loops to deadlocked states (finite automata)")
    common.add_argument("--keep-unreachable", action="store_true",
                        help="report product sizes without pruning unreachable locations")
    common.add_argument("--skip-timelock-check", action="store_true",
                        help="skip the timelock check of the fault-free copy (timed automata)")

    p = _Parser(prog="diagcheck", description="Fault diagnosability checks for finite and timed automata.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND", parser_class=_Parser)
    sub.add_parser("check", parents=[common], help="is the model diagnosable?")
    cd = sub.add_parser("check-delta", parents=[common], help="is every fault announced within DELTA?")
    cd.add_argument("--delta", type=int, required=True)
    sub.add_parser("max-delay", parents=[common], help="least DELTA for which the model is DELTA-diagnosable")
    rg = sub.add_parser("region-graph", help="build the region graph of a timed model")
    rg.add_argument("model")
    rg.add_argument("--dot", required=True, metavar="FILE", help="write the graph in DOT format ('-' for stdout)")
    rg.add_argument("--full", action="store_true", help="keep inactive clock values apart")
    rr = sub.add_parser("reduce-reach", help="reachability of END as a diagnosability question")
    rr.add_argument("model")
    rr.add_argument("--end", required=True, metavar="LOC")
    rr.add_argument("--out", metavar="FILE", help="write the reduced model here")
    rr.add_argument("--json", action="store_true")
    orc = sub.add_parser("oracle", parents=[common])
    orc.add_argument("--delta", type=int)
    orc.add_argument("--depth", type=int, default=oracle.MAX_DEPTH)
    # keep the developer command out of the command list
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "oracle"]
    return p


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"diagcheck: error: {exc}", file=stderr)
        return ERROR
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        doc = modelio.load_model(args.model)
        return COMMANDS[args.command](args, doc, stdout)
    except OSError as exc:
        print(f"diagcheck: {exc}", file=stderr)
    except modelio.ModelParseError as exc:
        print(f"{args.model}: {exc}", file=stderr)
    except ModelError as exc:
        print(f"{args.model}: {exc.args[0]} [{exc.code}]", file=stderr)
    except (ValueError, oracle.OracleRefused) as exc:
        print(f"diagcheck: {exc}", file=stderr)
    return ERROR


# ---------------------------------------------------------------------------


def _faults_to_check(args, a):
    """``[None]`` for a single analysis, or the sorted fault labels for a per-fault table."""
    if args.fault is not None:
        if args.fault not in a.faults:
            raise ModelError(f"{args.fault!r} is not a declared fault label", "unknown-label")
        return [args.fault]
    if len(a.used_faults()) > 1:
        return sorted(a.faults)
    return [None]


def _isolated(a, fault):
    if fault is None or len(a.used_faults()) <= 1:
        return a
    if isinstance(a, TimedAutomaton):
        return timed.isolate_fault_ta(a, fault)
    return des.isolate_fault(a, fault)


def _emit(args, doc, stdout, rows, problem, render_human):
    """Print one verdict (or a table of them) and return the exit code."""
    model = doc.name or os.path.basename(args.model)
    a = doc.automaton
    initial = a.initial
    ok = all(r["verdict"].diagnosable for r in rows)
    if args.json:
        payloads = []
        for r in rows:
            d = modelio.verdict_dict(r["verdict"], problem, model, initial=initial, **r.get("extra", {}))
            if args.stats:
                d["stats"] = r.get("stats", {})
            payloads.append(d)
        out = payloads[0] if len(payloads) == 1 else {"problem": problem, "model": model, "diagnosable": ok,
                                                      "faults": payloads}
        stdout.write(json.dumps(out, indent=2) + "\n")
    else:
        if len(rows) > 1:
            width = max(len(str(r["verdict"].fault)) for r in rows)
            stdout.write(f"{'fault':<{width}}  verdict\n")
            for r in rows:
                stdout.write(f"{str(r['verdict'].fault):<{width}}  {render_human(r, stdout)}\n")
        else:
            stdout.write(render_human(rows[0], stdout) + "\n")
            _write_witness(rows[0]["verdict"], a, stdout)
        for r in rows:
            if getattr(r["verdict"], "timelock_warning", None):
                stdout.write(f"warning: {r['verdict'].timelock_warning}\n")
        if args.stats:
            for r in rows:
                prefix = f"[{r['verdict'].fault}] " if len(rows) > 1 else ""
                for k, v in r.get("stats", {}).items():
                    stdout.write(f"{prefix}{k}: {v}\n")
    return YES if ok else NO


def _write_witness(v, a, stdout):
    if v.witness is None:
        return
    r1, r2 = v.witness
    stdout.write("witness (same observation, only one run faulty):\n")
    for name, r in (("faulty", r1), ("non-faulty", r2)):
        steps = modelio.run_steps(r, a.initial)
        text = " ".join(
            s["state"] if "label" not in s and "delay" not in s
            else (f"-({s['delay']})-> {s['state']}" if "delay" in s else f"-{s['label']}-> {s['state']}")
            for s in steps
        )
        stdout.write(f"  {name}: {text}\n")
    if getattr(v, "cycle_ticks", None) is not None:
        stdout.write(f"  time units per cycle: {v.cycle_ticks}\n")


def _des_stats(a: FiniteAutomaton, fault, complete, delta=None, keep_unreachable=False):
    q = len(a.states)
    twin = des.build_buchi_twin(a, fault, complete)
    stats = {
        "states": q,
        "buchi_twin_states": len(twin.graph.nodes),
        "buchi_twin_bound": 4 * q * q,
        "diagnosability_bound": des.diagnosability_bound(a),
    }
    if delta is not None:
        stats["delta_twin_states"] = len(des.build_delta_twin(a, delta, fault, complete).graph.nodes)
        stats["delta_twin_bound"] = (delta + 3) * q * q
    if keep_unreachable:
        plant = complete_deadlocks(a) if complete else a
        stats["unpruned_product_states"] = len(product(plant, plant, prune=False).states)
    return stats


def _ta_stats(a: TimedAutomaton, fault, delta=None, keep_unreachable=False):
    K = regions.max_constants(a)
    rg = regions.build_region_graph(a, reduce_inactive=False)
    al = timed.alpha(a, fault)
    stats = {
        "locations": len(a.locations),
        "clocks": len(a.clocks),
        "region_states": len(rg),
        "region_bound": regions.region_bound(a, K),
        "alpha": al,
        "alpha_bound": al // 2 + 1,
        "alpha_odd": al % 2 == 1,
    }
    if delta is not None:
        v = timed.check_delta_diagnosable_ta(a, delta, fault)
        stats["delta_twin_region_states"] = v.stats["region_states"]
        stats["delta_twin_region_bound"] = v.stats["region_bound"]
    if keep_unreachable:
        twin = timed.build_buchi_product(a, fault)
        stats["product_locations"] = len(twin.product.locations)
        stats["unpruned_product_locations"] = len(product(
            timed.build_a1(a, fault)[0], timed.build_a2_renamed(a, fault), prune=False).locations)
    return stats


def _check(args, doc, stdout):
    a = doc.automaton
    rows = []
    for f in _faults_to_check(args, a):
        plant = _isolated(a, f)
        if isinstance(plant, TimedAutomaton):
            v = timed.check_diagnosable_ta(plant, f, check_timelock=not args.skip_timelock_check)
            stats = _ta_stats(plant, v.fault, keep_unreachable=args.keep_unreachable) if args.stats else {}
        else:
            v = des.check_diagnosable(plant, f, args.complete)
            stats = _des_stats(plant, v.fault, args.complete, keep_unreachable=args.keep_unreachable) if args.stats else {}
        rows.append({"verdict": v, "stats": stats})

    def human(r, stream):
        d = r["verdict"].diagnosable
        return _paint("diagnosable" if d else "not diagnosable", d, stream)

    return _emit(args, doc, stdout, rows, "diagnosability", human)


def _check_delta(args, doc, stdout):
    if args.delta < 0:
        raise ValueError("--delta must be nonnegative")
    a = doc.automaton
    rows = []
    for f in _faults_to_check(args, a):
        plant = _isolated(a, f)
        if isinstance(plant, TimedAutomaton):
            v = timed.check_delta_diagnosable_ta(plant, args.delta, f)
            stats = _ta_stats(plant, v.fault, args.delta, args.keep_unreachable) if args.stats else {}
        else:
            v = des.check_delta_diagnosable(plant, args.delta, f, args.complete)
            stats = _des_stats(plant, v.fault, args.complete, args.delta, args.keep_unreachable) if args.stats else {}
        rows.append({"verdict": v, "stats": stats})

    def human(r, stream):
        d = r["verdict"].diagnosable
        return _paint(f"{'yes' if d else 'no'}: {'' if d else 'not '}{args.delta}-diagnosable", d, stream)

    return _emit(args, doc, stdout, rows, "delta-diagnosability", human)


def _max_delay(args, doc, stdout):
    a = doc.automaton
    rows = []
    for f in _faults_to_check(args, a):
        plant = _isolated(a, f)
        if isinstance(plant, TimedAutomaton):
            v = timed.check_diagnosable_ta(plant, f, check_timelock=not args.skip_timelock_check)
            m = timed.max_delay_ta(plant, f) if v.diagnosable else None
            stats = _ta_stats(plant, v.fault, keep_unreachable=args.keep_unreachable) if args.stats else {}
        else:
            v = des.check_diagnosable(plant, f, args.complete)
            m = des.max_delay(plant, f, args.complete) if v.diagnosable else None
            stats = _des_stats(plant, v.fault, args.complete, keep_unreachable=args.keep_unreachable) if args.stats else {}
        rows.append({"verdict": v, "stats": stats, "max_delay": m, "extra": {"max_delay": m}})

    def human(r, stream):
        m = r["max_delay"]
        return _paint("infinite" if m is None else str(m), m is not None, stream)

    return _emit(args, doc, stdout, rows, "max-delay", human)


def _region_graph(args, doc, stdout):
    a = doc.automaton
    if isinstance(a, FiniteAutomaton):
        a = as_timed(a)
    rg = regions.build_region_graph(a, reduce_inactive=not args.full)
    text = modelio.export_dot(rg, doc.name or "region_graph")
    if args.dot == "-":
        stdout.write(text)
    else:
        with open(args.dot, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        bound = regions.region_bound(a, rg.K)
        stdout.write(f"{len(rg)} region states, {len(rg.graph.edges)} edges (bound {bound})\n")
    return YES


def _reduce_reach(args, doc, stdout):
    a = doc.automaton
    if isinstance(a, FiniteAutomaton):
        a = as_timed(a)
    fault = "f"
    reduced = timed.reduce_reachability(a, args.end, fault)
    if args.out:
        red_doc = modelio.ModelDocument("timed", doc.name, reduced, reduced.faults)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(modelio.serialize_model(red_doc))
    v = timed.check_diagnosable_ta(reduced, fault, check_timelock=False)
    reachable = not v.diagnosable
    if args.json:
        stdout.write(json.dumps({"problem": "reachability", "model": doc.name or os.path.basename(args.model),
                                 "end": args.end, "reachable": reachable,
                                 "diagnosable": v.diagnosable}, indent=2) + "\n")
    else:
        word = "reachable" if reachable else "unreachable"
        stdout.write(_paint(f"{args.end} is {word}", reachable, stdout) +
                     f" (reduced model is {'not ' if reachable else ''}diagnosable)\n")
    return YES if reachable else NO


def _oracle(args, doc, stdout):
    a = doc.automaton
    if not isinstance(a, FiniteAutomaton):
        K = regions.max_constants(a)
        reached = oracle.bounded_concrete_reach(a, min(args.depth, 10))
        rg = set(regions.build_region_graph(a, K, reduce_inactive=False).states)
        missing = reached - rg
        stdout.write(f"{len(reached)} simulated region states, {len(missing)} missing from the region graph\n")
        return YES if not missing else NO
    if args.delta is None:
        ans = oracle.oracle_diag_des(a, args.fault)
        stdout.write(f"oracle: {'diagnosable' if ans else 'not diagnosable'}\n")
    else:
        ans = oracle.oracle_delta_des(a, args.delta, args.depth, args.fault)
        stdout.write(f"oracle: {'' if ans else 'not '}{args.delta}-diagnosable up to depth {args.depth}\n")
    return YES if ans else NO


COMMANDS = {
    "check": _check,
    "check-delta": _check_delta,
    "max-delay": _max_delay,
    "region-graph": _region_graph,
    "reduce-reach": _reduce_reach,
    "oracle": _oracle,
}


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
