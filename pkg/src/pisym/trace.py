"""JSON-lines trace files: emission, parsing, and deterministic replay.

A trace is a header line (dialect, components in grammar text, hoisted
names), one record per network step (label, movers, optional extrusion, and
the canonical post-state hash), and an optional footer (verdict or round
certificates).  Replay re-derives every step from the header network and
verifies each post-state hash; hashes are taken over canonical forms, so
replay is insensitive to internal binder naming but pins down every free
name and the whole communication structure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO, Union

from .lts import (
    Action,
    BoundOutput,
    Dialect,
    FreeOutput,
    InputAct,
    TauAct,
    action_str,
    parse_action,
    respecialize_input,
    transitions,
    _fresh_input_rep,
)
from .network import Computation, Mover, Network, NetworkStep, network_hash
from .syntax import Name, Process, free_names, parse, pretty, substitute

__all__ = [
    "TOOL_VERSION",
    "trace_lines",
    "write_trace",
    "read_trace_header",
    "ReplayMismatch",
    "replay_trace",
    "network_from_lines",
]

TOOL_VERSION = "0.1.0"


def network_from_lines(text: str) -> Network:
    """A network source file: one component per line, '#' comments."""
    comps = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            comps.append(parse(line))
    if not comps:
        raise ValueError("no components in the network file")
    return Network(tuple(comps))


def trace_lines(
    comp: Computation,
    dialect: Dialect,
    footer: Optional[dict] = None,
    verbose: bool = False,
    extra_header: Optional[dict] = None,
) -> list[str]:
    header = {
        "kind": "header",
        "tool_version": TOOL_VERSION,
        "dialect": dialect.value,
        "components": [pretty(c) for c in comp.start.components],
        "hoisted": [n.token for n in comp.start.hoisted],
    }
    if extra_header:
        header.update(extra_header)
    lines = [json.dumps(header)]
    for i, step in enumerate(comp.steps):
        rec = {
            "kind": "step",
            "index": i,
            "label": action_str(step.label),
            "movers": [[m.index, action_str(m.action)] for m in step.movers],
            "extruded": step.extruded.token if step.extruded else None,
            "post_hash": network_hash(step.post),
        }
        if verbose:
            rec["post"] = [pretty(c) for c in step.post.components]
            rec["post_hoisted"] = [n.token for n in step.post.hoisted]
        lines.append(json.dumps(rec))
    if comp.lasso_start is not None:
        lines.append(json.dumps({"kind": "lasso", "start": comp.lasso_start}))
    if footer is not None:
        lines.append(json.dumps({"kind": "footer", **footer}))
    return lines


def write_trace(f: TextIO, comp: Computation, dialect: Dialect, **kw) -> None:
    for line in trace_lines(comp, dialect, **kw):
        f.write(line + "\n")


def read_trace_header(lines: list[str]) -> tuple[Network, Dialect, dict]:
    header = json.loads(lines[0])
    if header.get("kind") != "header":
        raise ValueError("trace does not start with a header line")
    net = Network(
        tuple(parse(s) for s in header["components"]),
        tuple(Name(t) for t in header.get("hoisted", ())),
    )
    return net, Dialect.from_str(header["dialect"]), header


@dataclass
class ReplayMismatch(Exception):
    index: int
    reason: str

    def __str__(self) -> str:
        return f"record {self.index}: {self.reason}"


def _derive_half(
    comp: Process,
    want: Action,
    d: Dialect,
    universe,
    rep_unfold: int,
) -> list:
    """Component steps realizing the recorded half-action, rebinding fresh
    recorded names (received or extruded) verbatim."""
    uni = frozenset(universe) | free_names(comp)
    steps = transitions(comp, d, uni, rep_unfold, check=False)
    rep = _fresh_input_rep(uni)
    out = []
    for t in steps:
        a = t.action
        if isinstance(want, InputAct) and isinstance(a, InputAct) and a.channel == want.channel:
            if a.received == want.received:
                out.append(t)
            elif a.received == rep and want.received not in uni:
                out.append(respecialize_input(t, want.received))
        elif isinstance(want, FreeOutput) and a == want:
            out.append(t)
        elif isinstance(want, BoundOutput) and isinstance(a, BoundOutput) and a.channel == want.channel:
            if a.datum == want.datum:
                out.append(t)
            else:
                out.append(type(t)(t.source, want, substitute(t.target, a.datum, want.datum), t.derivation))
        elif isinstance(want, TauAct) and isinstance(a, TauAct):
            out.append(t)
    return out


def replay_trace(lines: list[str], rep_unfold: int = 2) -> int:
    """Re-derive every record; returns the number of verified steps.

    Raises ReplayMismatch (with the failing record index) when a record
    cannot be re-derived or its post-state hash differs.
    """
    net, dialect, _ = read_trace_header(lines)
    idx = -1
    for line in lines[1:]:
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ReplayMismatch(idx + 1, f"unparseable record: {exc}") from exc
        if rec.get("kind") != "step":
            continue
        idx = rec["index"]
        movers = [(int(i), parse_action(s)) for i, s in rec["movers"]]
        ext = Name(rec["extruded"]) if rec.get("extruded") else None
        universe = frozenset().union(*(free_names(c) for c in net.components)) | set(net.hoisted)
        posts: list[Network] = []
        if len(movers) == 1:
            i, a = movers[0]
            for t in _derive_half(net.components[i], a, dialect, universe, rep_unfold):
                posts.append(net.with_component(i, t.target))
        elif len(movers) == 2:
            (i, ai), (j, ao) = movers
            ins = _derive_half(net.components[i], ai, dialect, universe, rep_unfold)
            outs = _derive_half(net.components[j], ao, dialect, universe, rep_unfold)
            for tin in ins:
                for tout in outs:
                    post = net.with_component(i, tin.target).with_component(j, tout.target)
                    if ext is not None:
                        post = Network(post.components, post.hoisted + (ext,))
                    posts.append(post)
        else:
            raise ReplayMismatch(idx, f"{len(movers)} movers in one record")
        want_hash = rec["post_hash"]
        chosen = None
        for post in posts:
            if network_hash(post) == want_hash:
                chosen = post
                break
        if chosen is None:
            raise ReplayMismatch(
                idx,
                "no derivable step reproduces the recorded post-state hash"
                if posts
                else "the recorded half-actions are not derivable",
            )
        net = chosen
    return idx + 1
