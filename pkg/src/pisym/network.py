"""Networks of indexed components, their steps, hypergraphs and symmetries.

A network is a top-level parallel composition with one process per node,
plus the names hoisted to top-level binders by Close steps.  Nodes are
indexed from 0; the numeral name ``i`` is the identifier of node ``i`` and is
carried along by symmetry renamings.

The hypergraph of a network has the node indices as nodes and the shared
free channel names as arcs; the external channel ``o`` and the numeral names
are not arcs.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .lts import (
    Action,
    BoundOutput,
    Dialect,
    FreeOutput,
    InputAct,
    TauAct,
    TransitionStep,
    action_names,
    action_str,
    dialect_violations,
    DialectError,
    transitions,
    _fresh_input_rep,
)
from .syntax import (
    Name,
    OUTPUT_CHANNEL,
    Parallel,
    Process,
    Renaming,
    Restriction,
    alpha_equiv,
    apply_renaming,
    free_names,
    fresh_name,
    normal_form,
    parallel_of,
    pretty,
    substitute,
    substitute_many,
    _name_occurrences,
)

__all__ = [
    "Network",
    "Mover",
    "NetworkStep",
    "Computation",
    "network_transitions",
    "project",
    "flatten",
    "canonical_network_key",
    "network_hash",
    "Hypergraph",
    "hypergraph_of",
    "Automorphism",
    "identity_automorphism",
    "automorphisms",
    "AutomorphismBoundExceeded",
    "orbit",
    "orbits",
    "single_orbit",
    "is_well_balanced",
    "is_automorphism_of",
    "is_symmetric",
]


# ---------------------------------------------------------------------------
# Networks and computations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Network:
    components: tuple[Process, ...]
    hoisted: tuple[Name, ...] = ()

    def __post_init__(self) -> None:
        if len(self.components) < 1:
            raise ValueError("a network has at least one component")
        if len(set(self.hoisted)) != len(self.hoisted):
            raise ValueError("hoisted names must be pairwise distinct")

    @property
    def k(self) -> int:
        return len(self.components)

    def with_component(self, i: int, p: Process) -> "Network":
        comps = list(self.components)
        comps[i] = p
        return Network(tuple(comps), self.hoisted)


@dataclass(frozen=True)
class Mover:
    """One component's contribution to a network step."""

    index: int
    action: Action
    derivation: tuple


@dataclass(frozen=True)
class NetworkStep:
    label: Action
    movers: tuple[Mover, ...]  # one mover (Par) or (input side, output side)
    extruded: Optional[Name]
    post: Network


@dataclass
class Computation:
    """A finite computation prefix; ``lasso_start`` marks a detected cycle.

    An infinite computation is represented by its finite prefix plus the
    index at which the state repeats (pumping the suffix replays forever).
    """

    start: Network
    steps: list[NetworkStep] = field(default_factory=list)
    lasso_start: Optional[int] = None

    @property
    def final(self) -> Network:
        return self.steps[-1].post if self.steps else self.start

    def networks(self) -> list[Network]:
        nets = [self.start]
        for s in self.steps:
            nets.append(s.post)
        return nets

    def extended(self, step: NetworkStep) -> "Computation":
        return Computation(self.start, self.steps + [step], None)


def flatten(net: Network) -> Process:
    """The network as a single process: hoisted binders over the components."""
    body = parallel_of(net.components)
    for h in reversed(net.hoisted):
        body = Restriction(h, body)
    return body


# ---------------------------------------------------------------------------
# Network transitions
# ---------------------------------------------------------------------------


def network_transitions(net: Network, d: Dialect = Dialect.PI, rep_unfold: int = 2) -> list[NetworkStep]:
    """All top-level steps: single-component moves plus cross-component
    communication; visible actions on hoisted names are never reported."""
    for i, c in enumerate(net.components):
        bad = dialect_violations(c, d)
        if bad:
            raise DialectError(f"component {i}: " + "; ".join(bad))
    universe = frozenset().union(*(free_names(c) for c in net.components)) | set(net.hoisted)
    rep = _fresh_input_rep(universe)
    comp_steps = [transitions(c, d, universe, rep_unfold, check=False) for c in net.components]
    hoisted = set(net.hoisted)
    out: list[NetworkStep] = []

    fns = [free_names(c) for c in net.components]
    for i, steps in enumerate(comp_steps):
        others_fn = frozenset().union(*(fns[j] for j in range(net.k) if j != i)) if net.k > 1 else frozenset()
        for t in steps:
            a = t.action
            if isinstance(a, TauAct):
                out.append(NetworkStep(a, (Mover(i, a, t.derivation),), None, net.with_component(i, t.target)))
                continue
            if action_names(a) & hoisted:
                continue
            target = t.target
            if isinstance(a, BoundOutput) and a.datum in others_fn:
                nb = fresh_name(a.datum.token)
                target = substitute(target, a.datum, nb)
                a = BoundOutput(a.channel, nb)
            out.append(NetworkStep(a, (Mover(i, a, t.derivation),), None, net.with_component(i, target)))

    for i, j in itertools.permutations(range(net.k), 2):
        ins = [t for t in comp_steps[i] if isinstance(t.action, InputAct)]
        for tin in ins:
            ai = tin.action
            if ai.channel == OUTPUT_CHANNEL:
                continue
            for tout in comp_steps[j]:
                ao = tout.action
                if isinstance(ao, FreeOutput) and ao.channel == ai.channel and ao.datum == ai.received:
                    post = net.with_component(i, tin.target).with_component(j, tout.target)
                    post = Network(post.components, net.hoisted)
                    out.append(
                        NetworkStep(
                            TauAct(),
                            (Mover(i, ai, tin.derivation), Mover(j, ao, tout.derivation)),
                            None,
                            post,
                        )
                    )
                elif isinstance(ao, BoundOutput) and ao.channel == ai.channel and ai.received == rep:
                    ext = fresh_name(ao.datum.token)
                    t_in = substitute(tin.target, rep, ext)
                    t_out = substitute(tout.target, ao.datum, ext)
                    post = net.with_component(i, t_in).with_component(j, t_out)
                    post = Network(post.components, net.hoisted + (ext,))
                    out.append(
                        NetworkStep(
                            TauAct(),
                            (Mover(i, InputAct(ai.channel, ext), tin.derivation), Mover(j, BoundOutput(ao.channel, ext), tout.derivation)),
                            ext,
                            post,
                        )
                    )

    out.sort(key=_step_sort_key)
    return out


def _step_sort_key(s: NetworkStep):
    return (
        action_str(s.label),
        tuple(m.index for m in s.movers),
        tuple(action_str(m.action) for m in s.movers),
        canonical_network_key(s.post),
    )


def project(c: Computation, i: int) -> list[tuple[str, Optional[Action], Process]]:
    """The contribution of component i: its own action, its communication
    half, or an idle segment, with the component state after each step."""
    if not 0 <= i < c.start.k:
        raise IndexError(f"no component {i} in a {c.start.k}-node network")
    out: list[tuple[str, Optional[Action], Process]] = []
    for step in c.steps:
        movers = {m.index: m for m in step.movers}
        if i in movers:
            tag = "act" if len(step.movers) == 1 else "half"
            out.append((tag, movers[i].action, step.post.components[i]))
        else:
            out.append(("idle", None, step.post.components[i]))
    return out


# ---------------------------------------------------------------------------
# Canonical keys and hashing
# ---------------------------------------------------------------------------


def canonical_network_key(net: Network) -> tuple[str, ...]:
    """A key identifying the network up to congruence of components and
    renaming of hoisted names."""
    nfs = [normal_form(c) for c in net.components]
    hs = set(net.hoisted)
    if hs:
        seq: list[Name] = []
        for c in nfs:
            for n in _name_occurrences(c):
                if n in hs and n not in seq:
                    seq.append(n)
        unused = sorted((h for h in hs if h not in seq), key=lambda n: n.token)
        taken = {n.token for c in nfs for n in free_names(c)}
        marks: list[Name] = []
        idx = 0
        for _ in range(len(hs)):
            while f"_h{idx}" in taken:
                idx += 1
            marks.append(Name(f"_h{idx}"))
            idx += 1
        ren = {h: marks[pos] for pos, h in enumerate(seq + unused)}
        nfs = [normal_form(substitute_many(c, ren)) for c in nfs]
    return tuple(pretty(c) for c in nfs) + (f"#hoisted={len(hs)}",)


def network_hash(net: Network) -> str:
    data = "\n".join(canonical_network_key(net)).encode()
    return hashlib.sha256(data).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Hypergraphs
# ---------------------------------------------------------------------------


class Hypergraph:
    """Communication structure: nodes are component indices, arcs are the
    shared free names (excluding ``o`` and numerals)."""

    def __init__(self, nodes: Iterable[int], types: dict[Name, frozenset[int]]):
        self.nodes: tuple[int, ...] = tuple(sorted(nodes))
        self.types: dict[Name, frozenset[int]] = dict(types)
        self.arcs: tuple[Name, ...] = tuple(sorted(types, key=lambda n: n.token))

    def type_of(self, x: Name) -> frozenset[int]:
        return self.types[x]

    def __eq__(self, other) -> bool:
        return isinstance(other, Hypergraph) and self.nodes == other.nodes and self.types == other.types

    def __repr__(self) -> str:
        arcs = ", ".join(f"{x.token}:{sorted(t)}" for x, t in sorted(self.types.items(), key=lambda kv: kv[0].token))
        return f"Hypergraph(nodes={list(self.nodes)}, arcs={{{arcs}}})"

    def connected(self) -> bool:
        if len(self.nodes) <= 1:
            return True
        seen = {self.nodes[0]}
        frontier = [self.nodes[0]]
        while frontier:
            n = frontier.pop()
            for t in self.types.values():
                if n in t:
                    for m in t:
                        if m not in seen:
                            seen.add(m)
                            frontier.append(m)
        return len(seen) == len(self.nodes)


def hypergraph_of(net: Network) -> Hypergraph:
    types: dict[Name, frozenset[int]] = {}
    for x in frozenset().union(*(free_names(c) for c in net.components)):
        if x == OUTPUT_CHANNEL or x.is_numeral:
            continue
        members = frozenset(i for i, c in enumerate(net.components) if x in free_names(c))
        types[x] = members
    return Hypergraph(range(net.k), types)


# ---------------------------------------------------------------------------
# Automorphisms
# ---------------------------------------------------------------------------


class AutomorphismBoundExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Automorphism:
    """A type-preserving pair of node and arc permutations.

    ``numeral_map`` gives the action on node-identifier numerals; it defaults
    to the node permutation and only differs on grouped networks, where the
    original identifiers keep moving under the original node action.
    """

    node_map: tuple[int, ...]
    arc_map: tuple[tuple[Name, Name], ...]
    numeral_map: Optional[tuple[int, ...]] = None

    @property
    def k(self) -> int:
        return len(self.node_map)

    def node(self, i: int) -> int:
        return self.node_map[i]

    def arc(self, x: Name) -> Name:
        for a, b in self.arc_map:
            if a == x:
                return b
        return x

    def numerals(self) -> tuple[int, ...]:
        return self.numeral_map if self.numeral_map is not None else self.node_map

    @property
    def is_identity(self) -> bool:
        return all(self.node(i) == i for i in range(self.k)) and all(a == b for a, b in self.arc_map) and all(
            m == i for i, m in enumerate(self.numerals())
        )

    def compose(self, other: "Automorphism") -> "Automorphism":
        """self after other (componentwise composition)."""
        if self.k != other.k:
            raise ValueError("node arities differ")
        node_map = tuple(self.node(other.node(i)) for i in range(self.k))
        dom = {a for a, _ in self.arc_map} | {a for a, _ in other.arc_map}
        arc_map = tuple(sorted(((a, self.arc(other.arc(a))) for a in dom), key=lambda p: p[0].token))

        def num(m: tuple[int, ...], i: int) -> int:
            return m[i] if i < len(m) else i

        nm_self, nm_other = self.numerals(), other.numerals()
        n = max(len(nm_self), len(nm_other))
        nm = tuple(num(nm_self, num(nm_other, i)) for i in range(n))
        return Automorphism(node_map, arc_map, nm if nm != node_map else None)

    def inverse(self) -> "Automorphism":
        node_map = tuple(self.node_map.index(i) for i in range(self.k))
        arc_map = tuple(sorted(((b, a) for a, b in self.arc_map), key=lambda p: p[0].token))
        nm = self.numerals()
        numeral_map = tuple(nm.index(i) for i in range(len(nm)))
        return Automorphism(node_map, arc_map, numeral_map if numeral_map != node_map else None)

    def power(self, m: int) -> "Automorphism":
        if m < 0:
            raise ValueError("nonnegative powers only")
        acc = Automorphism(
            tuple(range(self.k)),
            tuple((a, a) for a, _ in self.arc_map),
            tuple(range(len(self.numerals()))),
        )
        for _ in range(m):
            acc = self.compose(acc)
        return acc

    def renaming(self) -> Renaming:
        m: dict[Name, Name] = {Name(str(i)): Name(str(v)) for i, v in enumerate(self.numerals()) if i != v}
        for a, b in self.arc_map:
            if a != b:
                m[a] = b
        return Renaming(m)

    def enriched(self, pairs: dict[Name, Name]) -> "Automorphism":
        """Extend the arc action with associations on newly shared names."""
        known = {a for a, _ in self.arc_map}
        extra = tuple(sorted(((a, b) for a, b in pairs.items() if a not in known), key=lambda p: p[0].token))
        return Automorphism(self.node_map, tuple(sorted(self.arc_map + extra, key=lambda p: p[0].token)), self.numeral_map)


def identity_automorphism(k: int, arcs: Iterable[Name] = ()) -> Automorphism:
    return Automorphism(tuple(range(k)), tuple(sorted(((a, a) for a in arcs), key=lambda p: p[0].token)))


def automorphisms(h: Hypergraph, bound: int = 8) -> list[Automorphism]:
    """All type-preserving (node, arc) permutation pairs, identity included."""
    k = len(h.nodes)
    if k > bound:
        raise AutomorphismBoundExceeded(f"{k} nodes exceeds the enumeration bound {bound}")
    by_type: dict[frozenset[int], list[Name]] = {}
    for x in h.arcs:
        by_type.setdefault(h.types[x], []).append(x)
    for xs in by_type.values():
        xs.sort(key=lambda n: n.token)
    out: list[Automorphism] = []
    for perm in itertools.permutations(range(k)):
        cls_images = {}
        ok = True
        for t, xs in by_type.items():
            t2 = frozenset(perm[n] for n in t)
            if t2 not in by_type or len(by_type[t2]) != len(xs):
                ok = False
                break
            cls_images[t] = by_type[t2]
        if not ok:
            continue
        classes = sorted(by_type, key=lambda t: tuple(sorted(t)))
        choices = [itertools.permutations(cls_images[t]) for t in classes]
        for combo in itertools.product(*choices):
            arc_map: list[tuple[Name, Name]] = []
            for t, images in zip(classes, combo):
                arc_map.extend(zip(by_type[t], images))
            out.append(Automorphism(tuple(perm), tuple(sorted(arc_map, key=lambda p: p[0].token))))
    return out


def orbit(sigma: Automorphism, n: int) -> list[int]:
    out = [n]
    cur = sigma.node(n)
    while cur != n:
        out.append(cur)
        cur = sigma.node(cur)
    return out


def orbits(sigma: Automorphism) -> list[list[int]]:
    seen: set[int] = set()
    res = []
    for n in range(sigma.k):
        if n not in seen:
            o = orbit(sigma, n)
            seen.update(o)
            res.append(o)
    return res


def single_orbit(sigma: Automorphism) -> bool:
    return len(orbit(sigma, 0)) == sigma.k


def is_well_balanced(sigma: Automorphism) -> bool:
    sizes = {len(o) for o in orbits(sigma)}
    return len(sizes) == 1


def is_automorphism_of(h: Hypergraph, sigma: Automorphism) -> bool:
    if sorted(sigma.node_map) != list(range(len(h.nodes))):
        return False
    images = [sigma.arc(x) for x in h.arcs]
    if sorted(images, key=lambda n: n.token) != sorted(h.arcs, key=lambda n: n.token):
        return False
    for x in h.arcs:
        if frozenset(sigma.node(n) for n in h.types[x]) != h.types[sigma.arc(x)]:
            return False
    return True


def is_symmetric(net: Network, sigma: Automorphism, check: bool = True) -> bool:
    """Whether each component at sigma(i) is the sigma-renaming of the one at i."""
    if check and not is_automorphism_of(hypergraph_of(net), sigma):
        raise ValueError("sigma is not an automorphism of the network's hypergraph")
    ren = sigma.renaming()
    return all(
        alpha_equiv(net.components[sigma.node(i)], apply_renaming(ren, net.components[i]))
        for i in range(net.k)
    )
