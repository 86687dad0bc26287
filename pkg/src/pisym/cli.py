"""Command-line front end.

Commands: parse, step, explore, elect, adversary, gen, encode-check, replay.
Election exit codes: 0 electoral, 1 not electoral, 2 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .adversary import PreconditionFailed, Stuck, run_adversary
from .corpus import random_pi_terms
from .electoral import Electoral, ExploreBounds, Inconclusive, NotElectoral, announcements, election_steps, is_electoral
from .encoding import (
    NonUniformEncoding,
    builtin_encodings,
    check_uniform,
    default_corpus,
    plugin_encoding,
    separation_demo,
)
from .lts import Dialect, action_str
from .network import (
    Automorphism,
    Computation,
    Network,
    automorphisms,
    canonical_network_key,
    hypergraph_of,
    is_symmetric,
    is_well_balanced,
    network_hash,
    network_transitions,
    single_orbit,
)
from .protocols import HypergraphSpec, ccs_ring, election_network, two_node_election
from .syntax import Name, parse as parse_term, pretty
from .trace import ReplayMismatch, network_from_lines, replay_trace, trace_lines, write_trace

__all__ = ["main"]


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _load_network(path: str) -> Network:
    return network_from_lines(_read(path))


def _bounds(args) -> ExploreBounds:
    return ExploreBounds(
        max_depth=args.depth,
        max_rep_unfoldings=args.unfold,
        max_states=args.states,
    )


def _automorphism_from_spec(net: Network, spec: str) -> Automorphism:
    """'auto' picks the first usable non-identity automorphism; otherwise a
    JSON object {"nodes": [...], "arcs": {"x": "y", ...}}."""
    if spec == "auto":
        h = hypergraph_of(net)
        for a in automorphisms(h):
            if a.is_identity:
                continue
            if (single_orbit(a) or is_well_balanced(a)) and is_symmetric(net, a, check=False):
                return a
        raise PreconditionFailed("no usable non-identity automorphism found")
    data = json.loads(spec)
    nodes = tuple(int(n) for n in data["nodes"])
    arcs = tuple(sorted(((Name(a), Name(b)) for a, b in data.get("arcs", {}).items()), key=lambda p: p[0].token))
    numerals = tuple(int(n) for n in data["numerals"]) if "numerals" in data else None
    return Automorphism(nodes, arcs, numerals)


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(human)


def cmd_parse(args) -> int:
    net = _load_network(args.file)
    for c in net.components:
        print(pretty(c))
    return 0


def cmd_step(args) -> int:
    net = _load_network(args.file)
    d = Dialect.from_str(args.dialect)
    steps = network_transitions(net, d, rep_unfold=args.unfold)
    if args.n is None:
        if not steps:
            _emit(args, {"steps": []}, "no steps")
            return 0
        rows = []
        for idx, s in enumerate(steps):
            movers = ", ".join(f"{m.index}:{action_str(m.action)}" for m in s.movers)
            rows.append(f"[{idx}] {action_str(s.label)}  via {movers}")
        _emit(
            args,
            {"steps": [
                {"index": i, "label": action_str(s.label), "movers": [[m.index, action_str(m.action)] for m in s.movers]}
                for i, s in enumerate(steps)
            ]},
            "\n".join(rows),
        )
        return 0
    if not 0 <= args.n < len(steps):
        print(f"error: step index {args.n} out of range ({len(steps)} enabled)", file=sys.stderr)
        return 1
    s = steps[args.n]
    comp = Computation(net, [s])
    out = trace_lines(comp, d, verbose=args.verbose)
    print("\n".join(out))
    return 0


def cmd_explore(args) -> int:
    net = _load_network(args.file)
    d = Dialect.from_str(args.dialect)
    bounds = _bounds(args)
    seen = set()
    frontier = [(net, 0)]
    terminals = 0
    truncated = 0
    while frontier:
        cur, depth = frontier.pop()
        key = canonical_network_key(cur)
        if key in seen:
            continue
        seen.add(key)
        if depth >= bounds.max_depth or len(seen) >= bounds.max_states:
            truncated += 1
            continue
        steps = election_steps(cur, d, bounds)
        if not steps:
            terminals += 1
        for s in steps:
            frontier.append((s.post, depth + 1))
    payload = {"states": len(seen), "terminals": terminals, "truncated": truncated}
    _emit(args, payload, f"{len(seen)} states, {terminals} terminal, {truncated} truncated")
    return 0


def cmd_elect(args) -> int:
    net = _load_network(args.file)
    d = Dialect.from_str(args.dialect)
    verdict = is_electoral(net, d, _bounds(args))
    if isinstance(verdict, Electoral):
        payload = {"verdict": "electoral", "leaders": sorted(set(verdict.leader_per_run.values())),
                   "runs": len(verdict.leader_per_run)}
        code = 0
    elif isinstance(verdict, NotElectoral):
        payload = {"verdict": "not-electoral", "reason": verdict.reason,
                   "witness_length": len(verdict.witness.steps),
                   "witness_lasso": verdict.witness.lasso_start}
        code = 1
        if args.trace:
            anns = announcements(verdict.witness)
            footer = {"verdict": payload, "announcements": {str(i): [n.token for n in v] for i, v in anns.items()}}
            with open(args.trace, "w") as f:
                write_trace(f, verdict.witness, d, footer=footer, verbose=args.verbose)
    else:
        payload = {"verdict": "inconclusive", "bound_hit": verdict.bound_hit}
        code = 2
    print(json.dumps(payload))
    return code


def cmd_adversary(args) -> int:
    net = _load_network(args.file)
    d = Dialect.from_str(args.dialect)
    sigma = _automorphism_from_spec(net, args.auto)
    try:
        state = run_adversary(net, sigma, args.rounds, d, allow_idle=args.allow_idle, rep_unfold=args.unfold)
    except Stuck as exc:
        state = exc.state
        print(f"stuck after {state.round} rounds (symmetric deadlock)", file=sys.stderr)
    certs = [c.as_dict() for c in state.certificates]
    if args.trace:
        footer = {"certificates": certs}
        header = {"automorphism": {"nodes": list(sigma.node_map),
                                   "arcs": {a.token: b.token for a, b in sigma.arc_map}}}
        with open(args.trace, "w") as f:
            write_trace(f, state.trace, d, footer=footer, verbose=args.verbose, extra_header=header)
    ok = all(c["check"] == "ok" for c in certs)
    payload = {"rounds": state.round, "steps": len(state.trace.steps), "certificates": certs, "all_ok": ok}
    _emit(args, payload, f"{state.round} rounds, {len(state.trace.steps)} steps, certificates "
                         + ("all ok" if ok else "FAILED"))
    return 0 if ok and state.round >= args.rounds else 1


def cmd_gen(args) -> int:
    if args.what == "two-node":
        net = two_node_election()
    elif args.what == "election":
        spec = HypergraphSpec.from_json(_read(args.spec))
        net = election_network(spec)
    elif args.what == "ccs-ring":
        net, sigma = ccs_ring(args.k, args.shift)
        if args.sigma_out:
            Path(args.sigma_out).write_text(json.dumps(
                {"nodes": list(sigma.node_map), "arcs": {a.token: b.token for a, b in sigma.arc_map}}))
    else:
        raise AssertionError(args.what)
    text = "\n".join(pretty(c) for c in net.components) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


def cmd_encode_check(args) -> int:
    builtins = builtin_encodings()
    if args.encoding in builtins:
        enc = builtins[args.encoding]
    elif args.encoding.startswith("cmd:"):
        enc = plugin_encoding(args.encoding[4:])
    else:
        print(f"error: unknown encoding {args.encoding!r} "
              f"(builtins: {', '.join(sorted(builtins))}; or cmd:<shell>)", file=sys.stderr)
        return 1
    corpus = default_corpus(seed=args.seed)
    report = check_uniform(enc, corpus)
    if not args.separation:
        print(json.dumps(report.as_dict(), indent=2))
        return 0 if report.uniform else 1
    try:
        rep, state = separation_demo(enc, rounds=args.rounds)
    except NonUniformEncoding as exc:
        print(json.dumps({"refused": "encoding is not uniform", **exc.report.as_dict()}, indent=2))
        return 1
    payload = rep.as_dict()
    if args.trace:
        with open(args.trace, "w") as f:
            write_trace(f, state.trace, Dialect.PI_ASYNC,
                        footer={"certificates": [c.as_dict() for c in state.certificates]})
    print(json.dumps(payload, indent=2))
    return 0


def cmd_replay(args) -> int:
    lines = _read(args.file).splitlines()
    try:
        n = replay_trace(lines, rep_unfold=args.unfold)
    except ReplayMismatch as exc:
        print(f"mismatch at {exc}", file=sys.stderr)
        return 1
    print(f"ok ({n} steps verified)")
    return 0


def _add_common(p: argparse.ArgumentParser, dialect_default: str = "pi") -> None:
    p.add_argument("--dialect", default=dialect_default, help="pi | pia | ccs | pisep")
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--unfold", type=int, default=2, help="replication unfolding bound")
    p.add_argument("--states", type=int, default=100_000)
    p.add_argument("--json", action="store_true")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--seed", type=int, default=11)


def main(argv=None) -> int:
    top = argparse.ArgumentParser(prog="pisym", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a network file and echo it in canonical grammar")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("step", help="list enabled network steps, or apply one")
    p.add_argument("file")
    p.add_argument("--n", type=int, default=None, help="apply the n-th enabled step")
    _add_common(p)
    p.set_defaults(func=cmd_step)

    p = sub.add_parser("explore", help="count reachable closed-run states within bounds")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("elect", help="decide the electoral-system property")
    p.add_argument("file")
    p.add_argument("--trace", default=None, help="write the witness computation here")
    _add_common(p)
    p.set_defaults(func=cmd_elect)

    p = sub.add_parser("adversary", help="run the symmetric non-electing scheduler")
    p.add_argument("file")
    p.add_argument("--auto", default="auto", help="automorphism JSON or 'auto'")
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--allow-idle", action="store_true")
    p.add_argument("--trace", default=None)
    _add_common(p, dialect_default="pia")
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("gen", help="emit canned networks")
    p.add_argument("what", choices=["two-node", "election", "ccs-ring"])
    p.add_argument("--spec", default=None, help="hypergraph spec JSON file (election)")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--shift", type=int, default=2)
    p.add_argument("--out", default=None)
    p.add_argument("--sigma-out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("encode-check", help="audit an encoding for uniformity")
    p.add_argument("--encoding", default="drop-continuations")
    p.add_argument("--separation", action="store_true", help="run the full separation demonstration")
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--trace", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_encode_check)

    p = sub.add_parser("replay", help="verify a trace file")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(func=cmd_replay)

    args = top.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, PreconditionFailed, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
