"""Symmetric adversarial scheduling for choice-free networks.

Mechanizes the constructive non-election argument: starting from a network
symmetric under a non-identity automorphism, each round picks one enabled
non-announcement action and replays its images around the orbit, using the
output/input confluence diamond to close communication circles.  The round
ends in a network that is again symmetric (checked at runtime), so the
limit is an infinite computation that never announces a leader.

Communication between nodes i and sigma^r(i) is replayed along the orbits
of theta = sigma^r; when r and the network size are not coprime the circle
is closed separately on each theta-orbit.  Close steps hoist the extruded
names and enrich sigma with the induced associations between them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Optional

from .lts import (
    Action,
    BoundOutput,
    Dialect,
    DialectError,
    FreeOutput,
    InputAct,
    TauAct,
    TransitionStep,
    action_names,
    action_str,
    dialect_violations,
    map_action,
    respecialize_input,
    transitions,
    _fresh_input_rep,
)
from .network import (
    Automorphism,
    Computation,
    Mover,
    Network,
    NetworkStep,
    flatten,
    hypergraph_of,
    is_automorphism_of,
    is_symmetric,
    is_well_balanced,
    network_transitions,
    orbits,
    single_orbit,
)
from .electoral import announcements
from .syntax import (
    Name,
    OUTPUT_CHANNEL,
    Process,
    Renaming,
    alpha_equiv,
    apply_renaming,
    free_names,
    fresh_name,
    parallel_of,
    struct_congruent,
    substitute,
)

__all__ = [
    "AdversaryError",
    "NotAsync",
    "NoDiamond",
    "PreconditionFailed",
    "SymmetryBroken",
    "Stuck",
    "DiamondResult",
    "confluence_diamond",
    "RoundCertificate",
    "AdversaryState",
    "run_adversary",
    "reduce_well_balanced",
    "ccs_applicable",
]


class AdversaryError(Exception):
    pass


class NotAsync(AdversaryError):
    pass


class NoDiamond(AdversaryError):
    pass


class PreconditionFailed(AdversaryError):
    pass


class SymmetryBroken(AdversaryError):
    """Internal assertion: a replayed round left the network asymmetric."""


class Stuck(AdversaryError):
    def __init__(self, state: "AdversaryState"):
        super().__init__(f"no eligible action at round {state.round}")
        self.state = state


# ---------------------------------------------------------------------------
# Confluence diamond
# ---------------------------------------------------------------------------


@dataclass
class DiamondResult:
    r: Process
    left_step: TransitionStep  # from the output target, labelled with the input action
    right_step: TransitionStep  # from the input target, labelled with the output action


def _input_matches(proc: Process, want: InputAct, d: Dialect, universe, rep_unfold: int) -> list[TransitionStep]:
    uni = frozenset(universe) | free_names(proc)
    rep = _fresh_input_rep(uni)
    out = []
    for t in transitions(proc, d, uni, rep_unfold, check=False):
        a = t.action
        if not isinstance(a, InputAct) or a.channel != want.channel:
            continue
        if a.received == want.received:
            out.append(t)
        elif a.received == rep and want.received not in uni:
            out.append(respecialize_input(t, want.received))
    return out


def _output_matches(proc: Process, want: Action, d: Dialect, universe, rep_unfold: int) -> list[TransitionStep]:
    uni = frozenset(universe) | free_names(proc)
    out = []
    for t in transitions(proc, d, uni, rep_unfold, check=False):
        a = t.action
        if isinstance(want, FreeOutput):
            if a == want:
                out.append(t)
        elif isinstance(want, BoundOutput) and isinstance(a, BoundOutput) and a.channel == want.channel:
            if a.datum == want.datum:
                out.append(t)
            else:
                out.append(
                    TransitionStep(t.source, want, substitute(t.target, a.datum, want.datum), t.derivation)
                )
    return out


def confluence_diamond(
    p: Process,
    out_step: TransitionStep,
    in_step: TransitionStep,
    dialect: Dialect = Dialect.PI_ASYNC,
    universe=(),
    rep_unfold: int = 2,
) -> DiamondResult:
    """Close the output/input diamond from a common source process.

    For the asynchronous fragment this always succeeds (the two redexes are
    parallel); mixed choice invalidates it, so dialects with choice are
    rejected up front.  CCS is accepted for callers that have discharged the
    no-shared-arc-within-an-orbit hypothesis.
    """
    if dialect not in (Dialect.PI_ASYNC, Dialect.CCS):
        raise NotAsync(f"the confluence diamond is not available under dialect {dialect.value}")
    bad = dialect_violations(p, dialect)
    if bad:
        raise NotAsync("; ".join(bad))
    if not isinstance(out_step.action, (FreeOutput, BoundOutput)):
        raise PreconditionFailed("out_step must be labelled with an output action")
    if not isinstance(in_step.action, InputAct):
        raise PreconditionFailed("in_step must be labelled with an input action")
    uni = frozenset(universe) | free_names(p) | {in_step.action.received}
    lefts = _input_matches(out_step.target, in_step.action, dialect, uni, rep_unfold)
    want_out = out_step.action
    rights = _output_matches(in_step.target, want_out, dialect, uni, rep_unfold)
    for t1 in lefts:
        for t2 in rights:
            if struct_congruent(t1.target, t2.target):
                return DiamondResult(t1.target, t1, t2)
    raise NoDiamond(
        f"no common reduct closing {action_str(out_step.action)} / {action_str(in_step.action)}"
    )


# ---------------------------------------------------------------------------
# Adversary state
# ---------------------------------------------------------------------------


@dataclass
class RoundCertificate:
    round: int
    kind: str  # visible | tau-local | tau-com | tau-close | idle
    initiator: int
    label: str
    steps: int
    sigma_nodes: tuple[int, ...]
    sigma_arcs: tuple[tuple[str, str], ...]
    symmetric: bool
    announcements_empty: bool

    def as_dict(self) -> dict:
        return {
            "round": self.round,
            "kind": self.kind,
            "initiator": self.initiator,
            "label": self.label,
            "steps": self.steps,
            "sigma": {"nodes": list(self.sigma_nodes), "arcs": [list(p) for p in self.sigma_arcs]},
            "check": "ok" if self.symmetric and self.announcements_empty else "failed",
        }


@dataclass
class AdversaryState:
    net: Network
    sigma: Automorphism
    round: int
    trace: Computation
    certificates: list[RoundCertificate] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Corollary reduction and the CCS hypothesis
# ---------------------------------------------------------------------------


def reduce_well_balanced(net: Network, sigma: Automorphism) -> tuple[Network, Automorphism]:
    """Group one orbit representative per component to get a single-orbit
    cyclic automorphism on the quotient network."""
    if sigma.is_identity:
        raise PreconditionFailed("sigma must differ from the identity")
    if not is_well_balanced(sigma):
        raise PreconditionFailed("sigma is not well-balanced")
    if not is_symmetric(net, sigma):
        raise PreconditionFailed("the network is not symmetric wrt sigma")
    if single_orbit(sigma):
        return net, sigma
    obs = orbits(sigma)
    q = len(obs[0])
    reps = sorted(min(o) for o in obs)
    groups: list[Process] = []
    nodes = reps
    for _ in range(q):
        groups.append(parallel_of([net.components[n] for n in nodes]))
        nodes = [sigma.node(n) for n in nodes]
    theta = Automorphism(
        tuple((m + 1) % q for m in range(q)),
        sigma.arc_map,
        sigma.numerals(),
    )
    grouped = Network(tuple(groups), net.hoisted)
    if not struct_congruent(flatten(grouped), flatten(net)):
        raise SymmetryBroken("grouping changed the underlying flat process")
    if not single_orbit(theta) or not is_symmetric(grouped, theta):
        raise SymmetryBroken("grouped network is not symmetric under the cyclic automorphism")
    return grouped, theta


def ccs_applicable(net: Network, sigma: Automorphism) -> bool:
    """The CCS non-election hypothesis: no arc connects a node with a
    distinct node of its own sigma-orbit (for any power of sigma)."""
    if not is_well_balanced(sigma):
        raise PreconditionFailed("sigma must be well-balanced")
    for i, c in enumerate(net.components):
        bad = dialect_violations(c, Dialect.CCS)
        if bad:
            raise DialectError(f"component {i}: " + "; ".join(bad))
    h = hypergraph_of(net)
    q = len(orbits(sigma)[0])
    for n in h.nodes:
        m = n
        for _ in range(1, q):
            m = sigma.node(m)
            if m == n:
                continue
            for x in h.arcs:
                if n in h.types[x] and m in h.types[x]:
                    return False
    return True


# ---------------------------------------------------------------------------
# The adversary
# ---------------------------------------------------------------------------


def _mentions_o(a: Action) -> bool:
    return OUTPUT_CHANNEL in action_names(a)


def _eligible_steps(net: Network, d: Dialect, rep_unfold: int) -> list[NetworkStep]:
    return [s for s in network_transitions(net, d, rep_unfold) if not _mentions_o(s.label)]


def _is_new_name(n: Name, net: Network) -> bool:
    return all(n not in free_names(c) for c in net.components) and n not in net.hoisted


def _find_component_step(
    comp: Process,
    want: Action,
    expected_target: Process,
    d: Dialect,
    universe,
    rep_unfold: int,
    what: str,
) -> TransitionStep:
    if isinstance(want, InputAct):
        cands = _input_matches(comp, want, d, universe, rep_unfold)
    elif isinstance(want, (FreeOutput, BoundOutput)):
        cands = _output_matches(comp, want, d, universe, rep_unfold)
    else:
        cands = [t for t in transitions(comp, d, universe, rep_unfold, check=False) if isinstance(t.action, TauAct)]
    for t in cands:
        if alpha_equiv(t.target, expected_target):
            return t
    raise SymmetryBroken(f"expected {what} step {action_str(want)} has no alpha-equivalent match")


def run_adversary(
    net: Network,
    sigma: Automorphism,
    rounds: int,
    d: Dialect = Dialect.PI_ASYNC,
    allow_idle: bool = False,
    rep_unfold: int = 2,
) -> AdversaryState:
    """Drive ``rounds`` symmetric rounds; every round re-checks symmetry and
    the absence of announcements.  Raises Stuck when nothing but
    announcements (or nothing at all) is enabled, unless idling is allowed."""
    if d not in (Dialect.PI_ASYNC, Dialect.CCS):
        raise PreconditionFailed(f"the adversary runs on the asynchronous fragment or CCS, not {d.value}")
    for i, c in enumerate(net.components):
        bad = dialect_violations(c, d)
        if bad:
            raise PreconditionFailed(f"component {i}: " + "; ".join(bad))
    if sigma.is_identity:
        raise PreconditionFailed("sigma must differ from the identity")
    if not is_automorphism_of(hypergraph_of(net), sigma):
        raise PreconditionFailed("sigma is not an automorphism of the network's hypergraph")
    if not is_symmetric(net, sigma, check=False):
        raise PreconditionFailed("the network is not symmetric wrt sigma")
    if d is Dialect.CCS and not ccs_applicable(net, sigma):
        raise PreconditionFailed("the CCS hypothesis fails: some arc connects a node to its own orbit")
    if not single_orbit(sigma):
        if not is_well_balanced(sigma):
            raise PreconditionFailed("a multi-orbit sigma must be well-balanced")
        net, sigma = reduce_well_balanced(net, sigma)

    state = AdversaryState(net, sigma, 0, Computation(net))
    for rnd in range(rounds):
        preferred = rnd % state.net.k
        eligible = _eligible_steps(state.net, d, rep_unfold)
        if not eligible:
            if allow_idle:
                state.certificates.append(_certificate(state, rnd, "idle", preferred, "-", 0))
                state.round = rnd + 1
                continue
            state.round = rnd
            raise Stuck(state)
        mine = [s for s in eligible if s.movers[0].index == preferred]
        pool = mine or eligible
        base = min(pool, key=lambda s: (action_str(s.label), tuple(action_str(m.action) for m in s.movers)))
        before = len(state.trace.steps)
        if len(base.movers) == 1:
            kind = _replay_around_orbit(state, base, d, rep_unfold)
        else:
            kind = _replay_communications(state, base, d, rep_unfold)
        cert = _certificate(state, rnd, kind, base.movers[0].index, action_str(base.label), len(state.trace.steps) - before)
        state.certificates.append(cert)
        if not cert.symmetric:
            raise SymmetryBroken(f"round {rnd} left the network asymmetric")
        if not cert.announcements_empty:
            raise SymmetryBroken(f"round {rnd} produced an announcement")
        state.round = rnd + 1
    return state


def _certificate(state: AdversaryState, rnd: int, kind: str, initiator: int, label: str, nsteps: int) -> RoundCertificate:
    sym = is_symmetric(state.net, state.sigma, check=False) and is_automorphism_of(
        hypergraph_of(state.net), state.sigma
    )
    anns = announcements(state.trace)
    return RoundCertificate(
        round=rnd,
        kind=kind,
        initiator=initiator,
        label=label,
        steps=nsteps,
        sigma_nodes=state.sigma.node_map,
        sigma_arcs=tuple((a.token, b.token) for a, b in state.sigma.arc_map),
        symmetric=sym,
        announcements_empty=all(not v for v in anns.values()),
    )


def _universe(net: Network) -> frozenset[Name]:
    u = frozenset().union(*(free_names(c) for c in net.components))
    return u | frozenset(net.hoisted)


def _replay_around_orbit(state: AdversaryState, base: NetworkStep, d: Dialect, rep_unfold: int) -> str:
    """Single-mover case: replay the sigma-images of one component's action
    around the whole orbit (visible actions and node-internal taus)."""
    sigma = state.sigma
    k = state.net.k
    mv = base.movers[0]
    cur = base.post
    steps = [base]
    ren = sigma.renaming()
    new0 = [n for n in sorted(action_names(base.label), key=lambda x: x.token) if _is_new_name(n, state.net)]
    prev_action, prev_target = mv.action, base.post.components[mv.index]
    prev_new = list(new0)
    ext_by_node: dict[int, Name] = {mv.index: new0[0]} if new0 else {}
    node = mv.index
    for _ in range(1, k):
        node = sigma.node(node)
        pair: dict[Name, Name] = {}
        cur_new = []
        for n in prev_new:
            nn = fresh_name(n.token)
            pair[n] = nn
            cur_new.append(nn)
        ren_m = ren.extended(pair)
        want = map_action(ren_m, prev_action)
        expected = apply_renaming(ren_m, prev_target)
        found = _find_component_step(cur.components[node], want, expected, d, _universe(cur), rep_unfold, "orbit replay")
        cur = cur.with_component(node, expected)
        steps.append(NetworkStep(want, (Mover(node, want, found.derivation),), None, cur))
        if cur_new:
            ext_by_node[node] = cur_new[0]
        prev_action, prev_target, prev_new = want, expected, cur_new
    if ext_by_node:
        pairs = {ext_by_node[w]: ext_by_node[sigma.node(w)] for w in ext_by_node}
        state.sigma = sigma.enriched(pairs)
    state.net = cur
    state.trace.steps.extend(steps)
    if isinstance(base.label, TauAct):
        return "tau-local"
    return "visible"


def _replay_communications(state: AdversaryState, base: NetworkStep, d: Dialect, rep_unfold: int) -> str:
    """Pair case: close the communication circle on every theta-orbit."""
    sigma = state.sigma
    k = state.net.k
    in_mv, out_mv = base.movers
    i, j = in_mv.index, out_mv.index
    r = 1
    w = sigma.node(i)
    while w != j:
        w = sigma.node(w)
        r += 1
    theta = sigma.power(r)
    g = gcd(r, k)
    p = k // g
    is_close = base.extruded is not None

    cur = state.net
    all_steps: list[NetworkStep] = []
    ext_by_node: dict[int, Name] = {}

    # Orbit starting points: i, sigma(i), ..., sigma^{g-1}(i).
    start = i
    base_in0, base_out0 = in_mv.action, out_mv.action
    baseQ0 = base.post.components[i]
    baseR1 = base.post.components[j]
    for t in range(g):
        if t == 0:
            in0, out0 = base_in0, base_out0
            expQ0, expR1 = baseQ0, baseR1
            first = base
            e0 = base.extruded
            cur = _apply_pair(cur, first)
            all_steps.append(first)
        else:
            ren_t = sigma.power(t).renaming()
            e0 = None
            if is_close:
                e0 = fresh_name(base.extruded.token)
            # Expectations are the sigma^t-images of orbit 0's base steps with
            # this orbit's fresh extrusion substituted in.
            sub = {base.extruded: e0} if is_close else {}
            in0 = map_action(ren_t, _subst_action(base_in0, sub))
            out0 = map_action(ren_t, _subst_action(base_out0, sub))
            expQ0 = apply_renaming(ren_t, _subst_proc(baseQ0, sub))
            expR1 = apply_renaming(ren_t, _subst_proc(baseR1, sub))
            a0 = _sigma_pow_node(sigma, t, i)
            b0 = theta.node(a0)
            tin = _find_component_step(cur.components[a0], in0, expQ0, d, _universe(cur), rep_unfold, "orbit base input")
            tout = _find_component_step(cur.components[b0], out0, expR1, d, _universe(cur), rep_unfold, "orbit base output")
            step = _make_pair_step(cur, a0, b0, in0, out0, tin, tout, expQ0, expR1, e0)
            cur = _apply_pair(cur, step)
            all_steps.append(step)
        a0 = _sigma_pow_node(sigma, t, i)
        chain_steps, cur, ext_chain = _close_circle(
            cur, theta, a0, in0, out0, expQ0, expR1, e0, d, rep_unfold, p
        )
        all_steps.extend(chain_steps)
        if is_close:
            node = theta.node(a0)
            ext_by_node[node] = e0
            for m, e in enumerate(ext_chain, start=1):
                node = theta.node(node)
                ext_by_node[node] = e
        start = a0

    if is_close:
        pairs = {ext_by_node[w]: ext_by_node[sigma.node(w)] for w in ext_by_node}
        state.sigma = sigma.enriched(pairs)
    state.net = cur
    state.trace.steps.extend(all_steps)
    return "tau-close" if is_close else "tau-com"


def _sigma_pow_node(sigma: Automorphism, t: int, n: int) -> int:
    for _ in range(t):
        n = sigma.node(n)
    return n


def _subst_action(a: Action, sub: dict[Name, Name]) -> Action:
    if not sub:
        return a
    return map_action(Renaming(sub), a)


def _subst_proc(p: Process, sub: dict[Name, Name]) -> Process:
    if not sub:
        return p
    from .syntax import substitute_many

    return substitute_many(p, sub)


def _make_pair_step(
    cur: Network,
    a: int,
    b: int,
    in_a: Action,
    out_a: Action,
    tin: TransitionStep,
    tout: TransitionStep,
    exp_in_target: Process,
    exp_out_target: Process,
    ext: Optional[Name],
) -> NetworkStep:
    post = cur.with_component(a, exp_in_target).with_component(b, exp_out_target)
    if ext is not None:
        post = Network(post.components, post.hoisted + (ext,))
    return NetworkStep(
        TauAct(),
        (Mover(a, in_a, tin.derivation), Mover(b, out_a, tout.derivation)),
        ext,
        post,
    )


def _apply_pair(cur: Network, step: NetworkStep) -> Network:
    return step.post


def _close_circle(
    cur: Network,
    theta: Automorphism,
    a0: int,
    in0: Action,
    out0: Action,
    Q0: Process,
    R1: Process,
    e0: Optional[Name],
    d: Dialect,
    rep_unfold: int,
    p: int,
) -> tuple[list[NetworkStep], Network, list[Name]]:
    """Replay the remaining p-1 communications of one theta-orbit.

    Node names follow the proof: after the base communication the output
    node holds residue R, the input node holds Q; each subsequent step pairs
    the previous output node's pending input (the confluence diamond
    guarantees it) with the next node's output, and the final step closes
    the circle with the first input node's pending output.
    """
    steps: list[NetworkStep] = []
    ext_chain: list[Name] = []
    theta_ren = theta.renaming()
    pairs: dict[Name, Name] = {}
    in_prev, out_prev = in0, out0
    F_prev: Optional[Process] = None  # final state of the previous input node
    R_m = R1
    a_m = theta.node(a0)  # current input-side node (did its output in the previous step)
    e_prev = e0
    for m in range(1, p):
        e_m: Optional[Name] = None
        if e0 is not None:
            e_m = fresh_name(e0.token)
            pairs[e_prev] = e_m
        ren_m = theta_ren.extended(dict(pairs))
        in_m = map_action(ren_m, in_prev)
        out_m = map_action(ren_m, out_prev)
        b_m = theta.node(a_m)  # output side of this communication
        # Input half: the diamond guarantees the previous output node can
        # still perform its (theta-image) input.
        if m == 1:
            exp_F = None
        else:
            exp_F = apply_renaming(ren_m, F_prev)
        uni = _universe(cur)
        if exp_F is None:
            # Diamond search: common reduct of R1 after the image input and
            # of theta(Q0) after the original output.
            cands_in = _input_matches(cur.components[a_m], in_m, d, uni | action_names(in_m), rep_unfold)
            shadowQ = apply_renaming(ren_m, Q0)
            cands_out = _output_matches(shadowQ, out_prev, d, uni | action_names(out_prev), rep_unfold)
            found = None
            for t1 in cands_in:
                for t2 in cands_out:
                    if struct_congruent(t1.target, t2.target):
                        found = t1
                        break
                if found:
                    break
            if found is None:
                raise SymmetryBroken("the confluence diamond failed to close during a round")
            tin, F_m = found, found.target
        else:
            tin = _find_component_step(cur.components[a_m], in_m, exp_F, d, uni, rep_unfold, "circle input")
            F_m = exp_F
        # Output half.
        last = m == p - 1
        if last:
            # The first input node closes the circle from its post-input
            # state; its final state is the theta-image of this step's input
            # node's final state (the extrusion pairing wraps around).
            out_node = a0
            exp_last = _expected_last(F_m, theta_ren, pairs, e_m, e0)
            tout = _find_component_step(cur.components[a0], out_m, exp_last, d, uni, rep_unfold, "circle closing output")
            exp_out_target = exp_last
        else:
            out_node = b_m
            exp_R = apply_renaming(ren_m, R_m)
            tout = _find_component_step(cur.components[b_m], out_m, exp_R, d, uni, rep_unfold, "circle output")
            exp_out_target = exp_R
        step = _make_pair_step(cur, a_m, out_node, in_m, out_m, tin, tout, F_m, exp_out_target, e_m)
        cur = step.post
        steps.append(step)
        if e_m is not None:
            ext_chain.append(e_m)
            e_prev = e_m
        in_prev, out_prev = in_m, out_m
        F_prev = F_m
        R_m = exp_out_target if not last else R_m
        a_m = b_m
    return steps, cur, ext_chain


def _expected_last(F_m: Process, theta_ren: Renaming, pairs: dict[Name, Name], e_m: Optional[Name], e0: Optional[Name]) -> Process:
    ren = dict(pairs)
    if e_m is not None and e0 is not None:
        ren[e_m] = e0
    return apply_renaming(theta_ren.extended(ren), F_m)
