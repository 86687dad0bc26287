"""Canned networks: the two-node election, elections for shared-channel
topologies, symmetric asynchronous rings, and CCS counterexample rings.

The generated election code follows a crown-passing scheme on one channel
shared by all nodes: every message on the shared channel carries a private
retirement link and transfers accountability for one retired node.  A node
that has collected links for all other nodes is the leader; it pushes its
identifier down the links, and retiring nodes forward their collected links
before waiting, so the links always drain to the survivor.  One mixed
choice per stage (offer my link / collect another) is what breaks the
symmetry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .lts import Dialect, dialect_violations
from .network import Automorphism, Hypergraph, Network, hypergraph_of, is_symmetric, single_orbit
from .syntax import (
    NIL,
    InputPfx,
    Name,
    OUTPUT_CHANNEL,
    OutputAtom,
    OutputPfx,
    Parallel,
    Process,
    Restriction,
    Sum,
    Replication,
    num,
    parse,
)
from .adversary import ccs_applicable

__all__ = [
    "HypergraphSpec",
    "two_node_election",
    "two_node_swap",
    "election_network",
    "ccs_ring",
    "async_ring",
    "rotation_automorphism",
    "split_mixed_sums",
    "UnsupportedTopology",
]


class UnsupportedTopology(NotImplementedError):
    pass


@dataclass(frozen=True)
class HypergraphSpec:
    """A requested communication structure: node count and named arcs."""

    k: int
    arcs: tuple[tuple[Name, frozenset[int]], ...]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("a spec needs at least one node")
        for x, t in self.arcs:
            if not t or not all(0 <= n < self.k for n in t):
                raise ValueError(f"arc {x.token} connects unknown nodes")
            if x == OUTPUT_CHANNEL or x.is_numeral:
                raise ValueError(f"{x.token} cannot be an arc name")

    def to_hypergraph(self) -> Hypergraph:
        return Hypergraph(range(self.k), {x: t for x, t in self.arcs})

    def connected(self) -> bool:
        return self.to_hypergraph().connected()

    @classmethod
    def from_json(cls, text: str) -> "HypergraphSpec":
        data = json.loads(text)
        return cls(
            int(data["k"]),
            tuple((Name(str(a)), frozenset(int(n) for n in t)) for a, t in data["arcs"]),
        )

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "arcs": [[x.token, sorted(t)] for x, t in self.arcs]})


# ---------------------------------------------------------------------------
# The two-node mixed-choice election
# ---------------------------------------------------------------------------


def two_node_election() -> Network:
    """Two nodes, two arcs; each node offers a private name on its own arc
    and listens on the other's, announcing the winner's identifier."""
    p0 = parse("x0!(y).o!0 + x1?(y).o!1")
    p1 = parse("x1!(y).o!1 + x0?(y).o!0")
    return Network((p0, p1))


def two_node_swap() -> Automorphism:
    """The node swap with the matching arc swap (the symmetry witness)."""
    return Automorphism((1, 0), ((Name("x0"), Name("x1")), (Name("x1"), Name("x0"))))


# ---------------------------------------------------------------------------
# Elections on a shared channel
# ---------------------------------------------------------------------------


def election_network(spec: HypergraphSpec) -> Network:
    """A symmetric electoral network whose hypergraph is exactly ``spec``.

    Supported topologies: a single arc connecting every node (plus the
    trivial one-node case).  The crown-passing code needs a channel every
    node can reach directly; disseminating over multi-arc routes while
    staying symmetric under every arc permutation is out of scope.
    """
    if not spec.connected():
        raise ValueError("the spec hypergraph is not connected")
    k = spec.k
    if k == 1:
        body: Process = OutputAtom(OUTPUT_CHANNEL, num(0))
        for x, _ in spec.arcs:
            body = Parallel(OutputAtom(x, x), body) if body != NIL else OutputAtom(x, x)
        return Network((body,))
    if len(spec.arcs) != 1 or spec.arcs[0][1] != frozenset(range(k)):
        raise UnsupportedTopology(
            "election generation supports one arc shared by all nodes; "
            f"got {len(spec.arcs)} arcs over {k} nodes"
        )
    c = spec.arcs[0][0]

    def retire(link: Name, bag: list[Name]) -> Process:
        z = Name("z")
        waiting: Process = Sum(((InputPfx(link, z), OutputAtom(OUTPUT_CHANNEL, z)),))
        for b in reversed(bag):
            waiting = Sum(((OutputPfx(c, b), waiting),))
        return waiting

    def crowned(i: int, bag: list[Name]) -> Process:
        if len(bag) == k - 1:
            lead: Process = OutputAtom(OUTPUT_CHANNEL, num(i))
            for b in reversed(bag):
                lead = Sum(((OutputPfx(b, num(i)), lead),))
            return lead
        m = len(bag)
        link = Name(f"t{m}")
        u = Name(f"u{m}")
        return Restriction(
            link,
            Sum(
                (
                    (OutputPfx(c, link), retire(link, bag)),
                    (InputPfx(c, u), crowned(i, bag + [u])),
                )
            ),
        )

    return Network(tuple(crowned(i, []) for i in range(k)))


# ---------------------------------------------------------------------------
# Rings
# ---------------------------------------------------------------------------


def rotation_automorphism(k: int, prefix_arcs: dict[str, int], shift: int = 1) -> Automorphism:
    """Rotation by ``shift`` with each listed arc family rotating alongside:
    ``prefix_arcs`` maps an arc-name prefix to the family's modulus."""
    arc_map = []
    for pre, mod in prefix_arcs.items():
        for i in range(mod):
            arc_map.append((Name(f"{pre}{i}"), Name(f"{pre}{(i + shift) % mod}")))
    return Automorphism(
        tuple((i + shift) % k for i in range(k)),
        tuple(sorted(arc_map, key=lambda p: p[0].token)),
    )


def async_ring(k: int, private: bool = False) -> tuple[Network, Automorphism]:
    """A choice-free ring for adversary demonstrations: node i repeatedly
    offers on its own arc and listens on its successor's.  With ``private``
    the offered names are fresh, so every communication extrudes scope."""
    if k < 2:
        raise ValueError("a ring needs at least two nodes")
    comps = []
    for i in range(k):
        if private:
            comps.append(parse(f"!(new b. x{i}!b) | !(x{(i + 1) % k}?(y).0)"))
        else:
            comps.append(parse(f"!(x{i}!a{i}) | !(x{(i + 1) % k}?(y).0)"))
    families = {"x": k} if private else {"x": k, "a": k}
    return Network(tuple(comps)), rotation_automorphism(k, families)


def ccs_ring(k: int, shift: int) -> tuple[Network, Automorphism]:
    """A CCS ring with adjacent arcs and the shift-power automorphism,
    valid only when no arc connects a node to its own orbit."""
    if k < 3:
        raise ValueError("a CCS ring needs at least three nodes")
    if shift % k == 0:
        raise ValueError("the shift automorphism must not be the identity")
    comps = []
    for i in range(k):
        comps.append(parse(f"!(c{i}!c{i}) | !(c{(i - 1) % k}?(y).0)"))
    net = Network(tuple(comps))
    sigma = rotation_automorphism(k, {"c": k}, shift)
    for i, c in enumerate(net.components):
        bad = dialect_violations(c, Dialect.CCS)
        if bad:
            raise ValueError(f"component {i} fails the CCS gate: {bad}")
    if not ccs_applicable(net, sigma):
        raise ValueError(
            f"ring({k},{shift}) violates the hypothesis: some arc connects a node to its own orbit"
        )
    return net, sigma


# ---------------------------------------------------------------------------
# Choice surgery
# ---------------------------------------------------------------------------


def split_mixed_sums(p: Process) -> Process:
    """Split every multi-branch sum into a parallel composition of its
    single-branch guards (the naive separate-choice weakening)."""
    if isinstance(p, Sum):
        parts = [Sum(((pfx, split_mixed_sums(cont)),)) for pfx, cont in p.branches]
        if not parts:
            return NIL
        if len(parts) == 1:
            return parts[0]
        acc = parts[0]
        for q in parts[1:]:
            acc = Parallel(acc, q)
        return acc
    if isinstance(p, OutputAtom):
        return p
    if isinstance(p, Restriction):
        return Restriction(p.bound, split_mixed_sums(p.body))
    if isinstance(p, Parallel):
        return Parallel(split_mixed_sums(p.left), split_mixed_sums(p.right))
    if isinstance(p, Replication):
        return Replication(split_mixed_sums(p.body))
    raise TypeError(f"not a process: {p!r}")
