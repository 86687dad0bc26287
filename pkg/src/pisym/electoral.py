"""Deciding the electoral-system property by bounded exhaustive exploration.

For the election observable the network runs closed except for the
announcement channel: the explored steps are the internal (tau) steps plus
free outputs on ``o``.  A network is electoral when every maximal run makes
all components announce one common leader and nothing else; maximality
within bounds means no enabled step, so bound-truncated branches can only
yield an inconclusive verdict.

Infinite runs are covered by lasso detection on canonical state keys: a
reachable cycle is an infinite computation that cannot be strictly extended,
so its accumulated announcements must already be complete and consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .lts import Dialect, FreeOutput, TauAct
from .network import (
    Computation,
    Network,
    NetworkStep,
    canonical_network_key,
    network_transitions,
)
from .syntax import Name, OUTPUT_CHANNEL, Process, Replication, Sum, Restriction, Parallel, OutputAtom

__all__ = [
    "ExploreBounds",
    "Electoral",
    "NotElectoral",
    "Inconclusive",
    "ElectionVerdict",
    "election_steps",
    "announcements",
    "is_electoral",
    "brute_force_electoral",
    "has_replication",
]


@dataclass(frozen=True)
class ExploreBounds:
    max_depth: int = 64
    max_rep_unfoldings: int = 2
    max_states: int = 100_000

    def __post_init__(self) -> None:
        if min(self.max_depth, self.max_rep_unfoldings + 1, self.max_states) <= 0:
            raise ValueError("bounds must be positive")


@dataclass
class Electoral:
    leader_per_run: dict[int, int]

    @property
    def leaders(self) -> set[int]:
        return set(self.leader_per_run.values())


@dataclass
class NotElectoral:
    witness: Computation
    reason: str  # no-leader-on-maximal-run | conflicting-announcements | missing-projection-announcement


@dataclass
class Inconclusive:
    bound_hit: str


ElectionVerdict = Union[Electoral, NotElectoral, Inconclusive]


def election_steps(net: Network, d: Dialect, bounds: ExploreBounds) -> list[NetworkStep]:
    """Steps of the closed network: tau plus free outputs on the announcement
    channel (announcements are part of the run, other visible actions are
    environment interaction and excluded here)."""
    out = []
    for s in network_transitions(net, d, rep_unfold=bounds.max_rep_unfoldings):
        if isinstance(s.label, TauAct):
            out.append(s)
        elif isinstance(s.label, FreeOutput) and s.label.channel == OUTPUT_CHANNEL:
            out.append(s)
    return out


def announcements(c: Computation) -> dict[int, list[Name]]:
    """Per component, the data announced on ``o`` along the computation."""
    out: dict[int, list[Name]] = {i: [] for i in range(c.start.k)}
    for step in c.steps:
        if isinstance(step.label, FreeOutput) and step.label.channel == OUTPUT_CHANNEL and len(step.movers) == 1:
            out[step.movers[0].index].append(step.label.datum)
    return out


def _leader_of(ann: tuple[frozenset[Name], ...]) -> Optional[Name]:
    """The common unique announcement, if the vector is perfect."""
    union = frozenset().union(*ann) if ann else frozenset()
    if len(union) != 1:
        return None
    (n,) = union
    if all(a == union for a in ann):
        return n
    return None


def _classify(ann: tuple[frozenset[Name], ...]) -> str:
    union = frozenset().union(*ann) if ann else frozenset()
    if len(union) >= 2:
        return "conflicting-announcements"
    if not union:
        return "no-leader-on-maximal-run"
    return "missing-projection-announcement"


class _Found(Exception):
    def __init__(self, witness: Computation, reason: str):
        self.witness = witness
        self.reason = reason


def is_electoral(net: Network, d: Dialect = Dialect.PI, bounds: ExploreBounds = ExploreBounds()) -> ElectionVerdict:
    """Explore every maximal computation of the closed network within bounds."""
    start = net
    leaders: dict[int, int] = {}
    run_id = [0]
    states = [0]
    inconclusive: list[str] = []
    done: set = set()
    path_steps: list[NetworkStep] = []
    on_path: dict = {}

    def record_run(ann: tuple[frozenset[Name], ...]) -> None:
        leader = _leader_of(ann)
        assert leader is not None
        leaders[run_id[0]] = leader.numeral_value if leader.is_numeral else -1
        run_id[0] += 1

    def dfs(cur: Network, ann: tuple[frozenset[Name], ...], depth: int) -> bool:
        """Returns True when the subtree was fully resolved."""
        key = (canonical_network_key(cur), ann)
        if key in on_path:
            if _leader_of(ann) is not None:
                record_run(ann)
                return True
            raise _Found(Computation(start, list(path_steps), lasso_start=on_path[key]), _classify(ann))
        if key in done:
            return True
        if depth >= bounds.max_depth:
            inconclusive.append("depth")
            return False
        if states[0] >= bounds.max_states:
            inconclusive.append("states")
            return False
        states[0] += 1
        steps = election_steps(cur, d, bounds)
        if not steps:
            if _leader_of(ann) is not None:
                record_run(ann)
                done.add(key)
                return True
            raise _Found(Computation(start, list(path_steps)), _classify(ann))
        on_path[key] = len(path_steps)
        clean = True
        try:
            for step in steps:
                new_ann = ann
                lbl = step.label
                if isinstance(lbl, FreeOutput) and lbl.channel == OUTPUT_CHANNEL:
                    i = step.movers[0].index
                    new_ann = tuple(a | {lbl.datum} if j == i else a for j, a in enumerate(ann))
                    union = frozenset().union(*new_ann)
                    if len(union) >= 2:
                        raise _Found(Computation(start, list(path_steps) + [step]), "conflicting-announcements")
                path_steps.append(step)
                try:
                    clean = dfs(step.post, new_ann, depth + 1) and clean
                finally:
                    path_steps.pop()
        finally:
            del on_path[key]
        if clean:
            done.add(key)
        return clean

    try:
        clean = dfs(net, tuple(frozenset() for _ in range(net.k)), 0)
    except _Found as f:
        return NotElectoral(f.witness, f.reason)
    if not clean:
        return Inconclusive(" & ".join(sorted(set(inconclusive))) or "bounds")
    return Electoral(leaders)


# ---------------------------------------------------------------------------
# Independent brute-force oracle
# ---------------------------------------------------------------------------


def has_replication(p: Process) -> bool:
    if isinstance(p, Replication):
        return True
    if isinstance(p, Sum):
        return any(has_replication(c) for _, c in p.branches)
    if isinstance(p, Restriction):
        return has_replication(p.body)
    if isinstance(p, Parallel):
        return has_replication(p.left) or has_replication(p.right)
    return False


def brute_force_electoral(net: Network, d: Dialect = Dialect.PI, max_runs: int = 200_000) -> ElectionVerdict:
    """Enumerate every maximal run of a replication-free network directly.

    Written against the raw step relation with no state deduplication or
    lasso analysis (replication-free closed runs terminate: every step
    consumes a prefix), as an independent oracle for `is_electoral`.
    """
    if any(has_replication(c) for c in net.components):
        raise ValueError("the brute-force oracle only handles replication-free networks")
    bounds = ExploreBounds(max_depth=10_000, max_rep_unfoldings=1, max_states=10_000_000)
    leaders: dict[int, int] = {}
    count = [0]

    def runs(cur: Network, ann: dict[int, list[Name]]) -> Optional[tuple[Computation, str]]:
        steps = election_steps(cur, d, bounds)
        if not steps:
            flat = [n for ns in ann.values() for n in ns]
            distinct = set(flat)
            ok = len(distinct) == 1 and all(len(set(ns)) == 1 for ns in ann.values()) and all(ann[i] for i in ann)
            if ok:
                (n,) = distinct
                leaders[count[0]] = n.numeral_value if n.is_numeral else -1
                count[0] += 1
                if count[0] > max_runs:
                    raise RuntimeError("too many maximal runs for the brute-force oracle")
                return None
            if len(distinct) >= 2:
                return Computation(cur), "conflicting-announcements"
            if not distinct:
                return Computation(cur), "no-leader-on-maximal-run"
            return Computation(cur), "missing-projection-announcement"
        for step in steps:
            new_ann = {i: list(ns) for i, ns in ann.items()}
            lbl = step.label
            if isinstance(lbl, FreeOutput) and lbl.channel == OUTPUT_CHANNEL:
                new_ann[step.movers[0].index].append(lbl.datum)
            bad = runs(step.post, new_ann)
            if bad is not None:
                return bad
        return None

    bad = runs(net, {i: [] for i in range(net.k)})
    if bad is not None:
        return NotElectoral(*bad)
    return Electoral(leaders)
