"""Seeded random term and network generators for audits and property suites."""

from __future__ import annotations

import random
from typing import Optional

from .lts import Dialect, dialect_check
from .network import Network
from .syntax import (
    NIL,
    InputPfx,
    Name,
    OUTPUT_CHANNEL,
    OutputAtom,
    OutputPfx,
    Parallel,
    Process,
    Replication,
    Restriction,
    Sum,
    TauPfx,
    num,
)

__all__ = ["TermGen", "random_pi_terms", "random_pia_terms", "random_networks"]

_POOL = tuple(Name(t) for t in ("a", "b", "c", "x", "y", "z", "w"))


class TermGen:
    """Deterministic random process generator."""

    def __init__(self, seed: int, dialect: Dialect = Dialect.PI, allow_announce: bool = False):
        self.rng = random.Random(seed)
        self.dialect = dialect
        self.allow_announce = allow_announce
        self._binder = 0

    def name(self, bound: tuple[Name, ...]) -> Name:
        pool = _POOL + bound + bound  # bias toward bound names for binding structure
        return self.rng.choice(pool)

    def fresh_binder(self) -> Name:
        self._binder += 1
        return Name(f"q{self._binder}")

    def prefix(self, bound: tuple[Name, ...], input_only: bool) -> tuple:
        if input_only or self.rng.random() < 0.5:
            return ("in", self.name(bound), self.fresh_binder())
        if self.dialect is Dialect.PI and self.rng.random() < 0.25:
            return ("tau",)
        return ("out", self.name(bound), self.name(bound))

    def term(self, depth: int, bound: tuple[Name, ...] = ()) -> Process:
        r = self.rng.random()
        if depth <= 0 or r < 0.18:
            if self.allow_announce and self.rng.random() < 0.4:
                return OutputAtom(OUTPUT_CHANNEL, num(self.rng.randrange(3)))
            if self.rng.random() < 0.35:
                return NIL
            return OutputAtom(self.name(bound), self.name(bound))
        if r < 0.40:
            return Parallel(self.term(depth - 1, bound), self.term(depth - 1, bound))
        if r < 0.52:
            b = self.fresh_binder()
            return Restriction(b, self.term(depth - 1, bound + (b,)))
        if r < 0.58 and depth >= 2:
            return Replication(self.term(depth - 2, bound))
        # guarded sums
        if self.dialect is Dialect.PI_ASYNC:
            ch = self.name(bound)
            formal = self.fresh_binder()
            return Sum(((InputPfx(ch, formal), self.term(depth - 1, bound + (formal,))),))
        arity = self.rng.choice((1, 1, 2, 2, 3)) if self.dialect is Dialect.PI else 1
        branches = []
        for _ in range(arity):
            pfx = self.prefix(bound, input_only=False)
            if pfx[0] == "in":
                _, ch, formal = pfx
                branches.append((InputPfx(ch, formal), self.term(depth - 1, bound + (formal,))))
            elif pfx[0] == "out":
                _, ch, datum = pfx
                branches.append((OutputPfx(ch, datum), self.term(depth - 1, bound)))
            else:
                branches.append((TauPfx(), self.term(depth - 1, bound)))
        return Sum(tuple(branches))


def random_pi_terms(seed: int, count: int, depth: int = 3) -> list[Process]:
    g = TermGen(seed, Dialect.PI)
    out = []
    while len(out) < count:
        t = g.term(depth)
        if dialect_check(t, Dialect.PI):
            out.append(t)
    return out


def random_pia_terms(seed: int, count: int, depth: int = 3, atoms: int = 6) -> list[Process]:
    """Asynchronous terms, biased so output atoms and input prefixes coexist."""
    g = TermGen(seed, Dialect.PI_ASYNC)
    out = []
    while len(out) < count:
        t = g.term(depth)
        if not dialect_check(t, Dialect.PI_ASYNC):
            continue
        if _parallel_width(t) > atoms:
            continue
        out.append(t)
    return out


def _parallel_width(p: Process) -> int:
    if isinstance(p, Parallel):
        return _parallel_width(p.left) + _parallel_width(p.right)
    if isinstance(p, Restriction):
        return _parallel_width(p.body)
    return 1


def random_networks(seed: int, count: int, dialect: Dialect = Dialect.PI) -> list[Network]:
    """Small replication-free networks with announcement atoms sprinkled in,
    for electoral-oracle cross-checks."""
    rng = random.Random(seed)
    out = []
    attempt = 0
    while len(out) < count:
        attempt += 1
        g = TermGen(seed * 7919 + attempt, dialect, allow_announce=True)
        k = rng.choice((2, 2, 3))
        comps = []
        ok = True
        for _ in range(k):
            t = g.term(rng.choice((1, 2, 2)))
            if _has_replication(t) or not dialect_check(t, dialect):
                ok = False
                break
            comps.append(t)
        if ok:
            out.append(Network(tuple(comps)))
    return out


def _has_replication(p: Process) -> bool:
    if isinstance(p, Replication):
        return True
    if isinstance(p, Sum):
        return any(_has_replication(c) for _, c in p.branches)
    if isinstance(p, Restriction):
        return _has_replication(p.body)
    if isinstance(p, Parallel):
        return _has_replication(p.left) or _has_replication(p.right)
    return False
