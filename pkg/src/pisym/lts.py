"""Early-instantiation labelled transition system with dialect gating.

Implements the standard early rules for guarded sums, output atoms,
restriction (Res/Open), parallel (Par/Com/Close) and replication, quotienting
congruent states by normal form at the call sites that need it.  Early input
branches over a finite name set: the given universe plus one canonical fresh
representative.

Inputs on the reserved announcement channel ``o`` are never derived: no
process may listen on the channel to the external world.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

from .syntax import (
    NIL,
    InputPfx,
    Name,
    OUTPUT_CHANNEL,
    OutputAtom,
    OutputPfx,
    Parallel,
    Process,
    Renaming,
    Replication,
    Restriction,
    Sum,
    TauPfx,
    free_names,
    fresh_name,
    pretty,
    substitute,
)

__all__ = [
    "InputAct",
    "FreeOutput",
    "BoundOutput",
    "TauAct",
    "Action",
    "bound_names",
    "action_names",
    "action_str",
    "parse_action",
    "map_action",
    "Dialect",
    "DialectError",
    "dialect_check",
    "dialect_violations",
    "TransitionStep",
    "transitions",
    "replay_step",
    "respecialize_input",
]


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InputAct:
    channel: Name
    received: Name


@dataclass(frozen=True)
class FreeOutput:
    channel: Name
    datum: Name


@dataclass(frozen=True)
class BoundOutput:
    channel: Name
    datum: Name


@dataclass(frozen=True)
class TauAct:
    pass


Action = Union[InputAct, FreeOutput, BoundOutput, TauAct]


def bound_names(a: Action) -> frozenset[Name]:
    if isinstance(a, (InputAct,)):
        return frozenset((a.received,))
    if isinstance(a, BoundOutput):
        return frozenset((a.datum,))
    return frozenset()


def action_names(a: Action) -> frozenset[Name]:
    if isinstance(a, InputAct):
        return frozenset((a.channel, a.received))
    if isinstance(a, (FreeOutput, BoundOutput)):
        return frozenset((a.channel, a.datum))
    return frozenset()


def action_str(a: Action) -> str:
    if isinstance(a, InputAct):
        return f"{a.channel}?({a.received})"
    if isinstance(a, FreeOutput):
        return f"{a.channel}!{a.datum}"
    if isinstance(a, BoundOutput):
        return f"{a.channel}!({a.datum})"
    if isinstance(a, TauAct):
        return "tau"
    raise TypeError(f"not an action: {a!r}")


def parse_action(text: str) -> Action:
    text = text.strip()
    if text == "tau":
        return TauAct()
    if "?(" in text:
        ch, rest = text.split("?(", 1)
        return InputAct(Name(ch.strip()), Name(rest.rstrip(")").strip()))
    if "!(" in text:
        ch, rest = text.split("!(", 1)
        return BoundOutput(Name(ch.strip()), Name(rest.rstrip(")").strip()))
    if "!" in text:
        ch, datum = text.split("!", 1)
        return FreeOutput(Name(ch.strip()), Name(datum.strip()))
    raise ValueError(f"cannot parse action {text!r}")


def map_action(ren: Renaming, a: Action) -> Action:
    if isinstance(a, InputAct):
        return InputAct(ren(a.channel), ren(a.received))
    if isinstance(a, FreeOutput):
        return FreeOutput(ren(a.channel), ren(a.datum))
    if isinstance(a, BoundOutput):
        return BoundOutput(ren(a.channel), ren(a.datum))
    return a


# ---------------------------------------------------------------------------
# Dialects
# ---------------------------------------------------------------------------


class Dialect(Enum):
    PI = "pi"
    PI_ASYNC = "pia"
    CCS = "ccs"
    PI_SEPARATE_CHOICE = "pisep"

    @classmethod
    def from_str(cls, s: str) -> "Dialect":
        for d in cls:
            if d.value == s:
                return d
        raise ValueError(f"unknown dialect {s!r} (expected pi|pia|ccs|pisep)")


class DialectError(ValueError):
    pass


def dialect_violations(p: Process, d: Dialect) -> list[str]:
    """Why p fails the syntactic restriction of dialect d (empty when it passes)."""
    out: list[str] = []

    def walk(t: Process) -> None:
        if isinstance(t, Sum):
            if d is Dialect.PI_ASYNC:
                if len(t.branches) > 1:
                    out.append(f"sum of arity {len(t.branches)} in the asynchronous fragment")
                for pfx, _ in t.branches:
                    if not isinstance(pfx, InputPfx):
                        out.append(f"non-input guard in the asynchronous fragment: {pretty(Sum(((pfx, NIL),)))}")
            if d is Dialect.PI_SEPARATE_CHOICE and len(t.branches) >= 2:
                kinds = {"in" if isinstance(pfx, InputPfx) else "out" for pfx, _ in t.branches}
                if len(kinds) > 1:
                    out.append("mixed choice in the separate-choice fragment")
            for pfx, cont in t.branches:
                if d is Dialect.CCS:
                    if isinstance(pfx, InputPfx) and pfx.formal in free_names(cont):
                        out.append(f"received name {pfx.formal} is used (name mobility) in CCS")
                    if isinstance(pfx, OutputPfx) and pfx.datum != pfx.channel:
                        out.append(f"output carries a name ({pfx.channel}!{pfx.datum}) in CCS")
                walk(cont)
        elif isinstance(t, OutputAtom):
            if d is Dialect.CCS and t.datum != t.channel:
                out.append(f"output carries a name ({t.channel}!{t.datum}) in CCS")
        elif isinstance(t, Restriction):
            walk(t.body)
        elif isinstance(t, Parallel):
            walk(t.left)
            walk(t.right)
        elif isinstance(t, Replication):
            walk(t.body)
        else:
            raise TypeError(f"not a process: {t!r}")

    walk(p)
    return out


def dialect_check(p: Process, d: Dialect) -> bool:
    return not dialect_violations(p, d)


# ---------------------------------------------------------------------------
# Transitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransitionStep:
    source: Process
    action: Action
    target: Process
    derivation: tuple

    def __str__(self) -> str:
        return f"--{action_str(self.action)}--> {pretty(self.target)}"


def _fresh_input_rep(uni: frozenset[Name]) -> Name:
    taken = {n.token for n in uni}
    i = 0
    while f"_e{i}" in taken:
        i += 1
    return Name(f"_e{i}")


def transitions(
    p: Process,
    d: Dialect = Dialect.PI,
    universe: Iterable[Name] = (),
    rep_unfold: int = 2,
    check: bool = True,
) -> tuple[TransitionStep, ...]:
    """All derivable steps of p, with early input over universe + one fresh name."""
    if check:
        bad = dialect_violations(p, d)
        if bad:
            raise DialectError("; ".join(bad))
    uni = frozenset(universe) | free_names(p)
    rep = _fresh_input_rep(uni)
    candidates = tuple(sorted(uni, key=lambda n: n.token)) + (rep,)
    steps = _trans(p, candidates, rep, rep_unfold)
    return tuple(sorted(steps, key=lambda t: (action_str(t.action), repr(t.derivation), pretty(t.target))))


def _trans(p: Process, candidates: tuple[Name, ...], rep: Name, unfold: int) -> list[TransitionStep]:
    steps: list[TransitionStep] = []

    if isinstance(p, Sum):
        for j, (pfx, cont) in enumerate(p.branches):
            if isinstance(pfx, InputPfx):
                if pfx.channel == OUTPUT_CHANNEL:
                    continue  # no process may input on the external channel
                for z in candidates:
                    steps.append(
                        TransitionStep(p, InputAct(pfx.channel, z), substitute(cont, pfx.formal, z), ("sum", j, "in"))
                    )
            elif isinstance(pfx, OutputPfx):
                steps.append(TransitionStep(p, FreeOutput(pfx.channel, pfx.datum), cont, ("sum", j, "out")))
            else:
                steps.append(TransitionStep(p, TauAct(), cont, ("sum", j, "tau")))
        return steps

    if isinstance(p, OutputAtom):
        return [TransitionStep(p, FreeOutput(p.channel, p.datum), NIL, ("out",))]

    if isinstance(p, Restriction):
        bound, body = p.bound, p.body
        if bound in candidates:
            nb = fresh_name(bound.token)
            body = substitute(body, bound, nb)
            bound = nb
        for t in _trans(body, candidates, rep, unfold):
            a = t.action
            if isinstance(a, FreeOutput) and a.datum == bound and a.channel != bound:
                steps.append(TransitionStep(p, BoundOutput(a.channel, bound), t.target, ("open", t.derivation)))
            elif bound not in action_names(a):
                steps.append(TransitionStep(p, a, Restriction(bound, t.target), ("res", t.derivation)))
        return steps

    if isinstance(p, Parallel):
        lefts = _trans(p.left, candidates, rep, unfold)
        rights = _trans(p.right, candidates, rep, unfold)
        for side, own, other in (("parl", lefts, p.right), ("parr", rights, p.left)):
            for t in own:
                a = t.action
                # Early input labels carry the concrete received name and bind
                # nothing across Par; only bound-output names need refreshing
                # to satisfy the freshness side condition.
                target = t.target
                if isinstance(a, BoundOutput) and a.datum in free_names(other):
                    nb = fresh_name(a.datum.token)
                    target = substitute(target, a.datum, nb)
                    a = BoundOutput(a.channel, nb)
                post = Parallel(target, other) if side == "parl" else Parallel(other, target)
                steps.append(TransitionStep(p, a, post, (side, t.derivation)))
        for in_side, ins, outs in (("in_l", lefts, rights), ("in_r", rights, lefts)):
            in_steps = [t for t in ins if isinstance(t.action, InputAct)]
            out_frees = [t for t in outs if isinstance(t.action, FreeOutput)]
            out_bounds = [t for t in outs if isinstance(t.action, BoundOutput)]
            for ti in in_steps:
                ai = ti.action
                if ai.channel == OUTPUT_CHANNEL:
                    continue
                for to in out_frees:
                    ao = to.action
                    if ao.channel == ai.channel and ao.datum == ai.received:
                        l_t, r_t = (ti.target, to.target) if in_side == "in_l" else (to.target, ti.target)
                        steps.append(
                            TransitionStep(p, TauAct(), Parallel(l_t, r_t), ("com", in_side, ti.derivation, to.derivation))
                        )
                if ai.received != rep:
                    continue  # one canonical Close pairing per redex pair
                for to in out_bounds:
                    ao = to.action
                    if ao.channel != ai.channel:
                        continue
                    ext = fresh_name(ao.datum.token)
                    t_in = substitute(ti.target, rep, ext)
                    t_out = substitute(to.target, ao.datum, ext)
                    l_t, r_t = (t_in, t_out) if in_side == "in_l" else (t_out, t_in)
                    steps.append(
                        TransitionStep(
                            p,
                            TauAct(),
                            Restriction(ext, Parallel(l_t, r_t)),
                            ("close", in_side, ti.derivation, to.derivation, ext.token),
                        )
                    )
        return steps

    if isinstance(p, Replication):
        # Standard finite presentation of Rep: one copy moves, or two copies
        # communicate; no partially-unfolded idle copy is left in the target.
        if unfold <= 0:
            return []
        inner = _trans(p.body, candidates, rep, unfold - 1)
        for t in inner:
            steps.append(TransitionStep(p, t.action, Parallel(t.target, p), ("rep", ("parl", t.derivation))))
        ins = [t for t in inner if isinstance(t.action, InputAct)]
        frees = [t for t in inner if isinstance(t.action, FreeOutput)]
        bouts = [t for t in inner if isinstance(t.action, BoundOutput)]
        for ti in ins:
            ai = ti.action
            if ai.channel == OUTPUT_CHANNEL:
                continue
            for to in frees:
                ao = to.action
                if ao.channel == ai.channel and ao.datum == ai.received:
                    tag = ("rep", ("com", "in_l", ti.derivation, ("rep", ("parl", to.derivation))))
                    steps.append(
                        TransitionStep(p, TauAct(), Parallel(ti.target, Parallel(to.target, p)), tag)
                    )
            if ai.received != rep:
                continue
            for to in bouts:
                ao = to.action
                if ao.channel != ai.channel:
                    continue
                ext = fresh_name(ao.datum.token)
                t_in = substitute(ti.target, rep, ext)
                t_out = substitute(to.target, ao.datum, ext)
                tag = ("rep", ("close", "in_l", ti.derivation, ("rep", ("parl", to.derivation)), ext.token))
                steps.append(
                    TransitionStep(p, TauAct(), Restriction(ext, Parallel(t_in, Parallel(t_out, p))), tag)
                )
        return steps

    raise TypeError(f"not a process: {p!r}")


# ---------------------------------------------------------------------------
# Replay and respecialization
# ---------------------------------------------------------------------------


def respecialize_input(step: TransitionStep, received: Name) -> TransitionStep:
    """The same early-input derivation receiving a different name.

    Only valid when the step's received name is the canonical fresh
    representative (so the new name cannot already occur in the target for
    other reasons).
    """
    a = step.action
    if not isinstance(a, InputAct):
        raise ValueError("not an input step")
    if a.received == received:
        return step
    return TransitionStep(
        step.source,
        InputAct(a.channel, received),
        substitute(step.target, a.received, received),
        step.derivation,
    )


def replay_step(source: Process, derivation: tuple, action: Action) -> tuple[Action, Process]:
    """Re-derive a step from its proof-tree tag.

    Returns the replayed action and target; both match the original up to
    alpha-conversion of bound action names.
    """
    kind = derivation[0]
    if kind == "sum":
        assert isinstance(source, Sum)
        _, j, sort = derivation
        pfx, cont = source.branches[j]
        if sort == "in":
            assert isinstance(pfx, InputPfx) and isinstance(action, InputAct)
            return action, substitute(cont, pfx.formal, action.received)
        if sort == "out":
            assert isinstance(pfx, OutputPfx)
            return FreeOutput(pfx.channel, pfx.datum), cont
        return TauAct(), cont
    if kind == "out":
        assert isinstance(source, OutputAtom)
        return FreeOutput(source.channel, source.datum), NIL
    if kind == "open":
        assert isinstance(source, Restriction) and isinstance(action, BoundOutput)
        inner_action = FreeOutput(action.channel, source.bound)
        a, t = replay_step(source.body, derivation[1], inner_action)
        assert isinstance(a, FreeOutput)
        return BoundOutput(a.channel, a.datum), t
    if kind == "res":
        assert isinstance(source, Restriction)
        a, t = replay_step(source.body, derivation[1], action)
        return a, Restriction(source.bound, t)
    if kind in ("parl", "parr"):
        assert isinstance(source, Parallel)
        own = source.left if kind == "parl" else source.right
        other = source.right if kind == "parl" else source.left
        a, t = replay_step(own, derivation[1], action)
        post = Parallel(t, other) if kind == "parl" else Parallel(other, t)
        return a, post
    if kind == "com":
        assert isinstance(source, Parallel)
        _, in_side, din, dout = derivation
        in_proc, out_proc = (source.left, source.right) if in_side == "in_l" else (source.right, source.left)
        ao, to = replay_step(out_proc, dout, action)
        assert isinstance(ao, FreeOutput)
        ai, tin = replay_step(in_proc, din, InputAct(ao.channel, ao.datum))
        l_t, r_t = (tin, to) if in_side == "in_l" else (to, tin)
        return TauAct(), Parallel(l_t, r_t)
    if kind == "close":
        assert isinstance(source, Parallel)
        _, in_side, din, dout, tok = derivation
        in_proc, out_proc = (source.left, source.right) if in_side == "in_l" else (source.right, source.left)
        ao, to = _replay_bound_output(out_proc, dout, Name(tok))
        ai, tin = replay_step(in_proc, din, InputAct(ao.channel, Name(tok)))
        l_t, r_t = (tin, to) if in_side == "in_l" else (to, tin)
        return TauAct(), Restriction(Name(tok), Parallel(l_t, r_t))
    if kind == "rep":
        assert isinstance(source, Replication)
        a, t = replay_step(Parallel(source.body, source), derivation[1], action)
        return a, t
    raise ValueError(f"unknown derivation tag {derivation!r}")


def _replay_bound_output(source: Process, derivation: tuple, want: Name) -> tuple[Action, Process]:
    """Replay an Open derivation, renaming the extruded name to ``want``."""
    kind = derivation[0]
    if kind == "open":
        assert isinstance(source, Restriction)
        body = substitute(source.body, source.bound, want)
        a, t = replay_step(body, derivation[1], FreeOutput(Name("_any"), want))
        assert isinstance(a, FreeOutput) and a.datum == want
        return BoundOutput(a.channel, want), t
    if kind == "res":
        assert isinstance(source, Restriction)
        a, t = _replay_bound_output(source.body, derivation[1], want)
        return a, Restriction(source.bound, t)
    if kind in ("parl", "parr"):
        assert isinstance(source, Parallel)
        own = source.left if kind == "parl" else source.right
        other = source.right if kind == "parl" else source.left
        a, t = _replay_bound_output(own, derivation[1], want)
        post = Parallel(t, other) if kind == "parl" else Parallel(other, t)
        return a, post
    if kind == "rep":
        assert isinstance(source, Replication)
        return _replay_bound_output(Parallel(source.body, source), derivation[1], want)
    raise ValueError(f"bound-output replay hit unexpected tag {derivation!r}")
