"""Process terms: names, binding, substitution, congruence, and the grammar.

The term language is guarded sums, output atoms, restriction, parallel
composition and replication.  Inaction ``0`` is the empty sum.  Channel ``o``
is the reserved announcement channel and numerals are ordinary names, so a
term like ``o!1`` is representable directly.

Concrete grammar (ASCII, one-token lookahead)::

    P ::= 0 | x!y | x?(y).P | x!y.P | x!(y).P | tau.P
        | P + P | P | P | new x. P | !P | (P)

``x!(y).P`` is sugar for ``new y.(x!y.P)``; when it occurs as a branch of a
sum the binder is hoisted above the whole sum (alpha-renamed if needed).
``new`` always takes the longest possible scope to its right.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Optional, Union

__all__ = [
    "Name",
    "name",
    "num",
    "fresh_name",
    "OUTPUT_CHANNEL",
    "InputPfx",
    "OutputPfx",
    "TauPfx",
    "Prefix",
    "Sum",
    "OutputAtom",
    "Restriction",
    "Parallel",
    "Replication",
    "Process",
    "NIL",
    "ParseError",
    "parse",
    "pretty",
    "free_names",
    "substitute",
    "substitute_many",
    "alpha_equiv",
    "canonical_alpha",
    "normal_form",
    "struct_congruent",
    "Renaming",
    "apply_renaming",
    "parallel_of",
    "parallel_components",
]


# ---------------------------------------------------------------------------
# Names
# ---------------------------------------------------------------------------

_NUMERAL_RE = re.compile(r"^[0-9]+$")
_FRESH_RE = re.compile(r"^(.*)'([0-9]+)$")

_session_lock = threading.Lock()
_session_tokens: set[str] = set()
_session_counter = 0


@dataclass(frozen=True, order=True)
class Name:
    """An interned channel/value name.

    Equality and hashing go by token; the session registry guarantees that
    freshly generated names never collide with any token seen before.
    """

    token: str

    def __post_init__(self) -> None:
        with _session_lock:
            _session_tokens.add(self.token)

    @property
    def is_numeral(self) -> bool:
        return _NUMERAL_RE.match(self.token) is not None

    @property
    def numeral_value(self) -> int:
        if not self.is_numeral:
            raise ValueError(f"{self.token!r} is not a numeral name")
        return int(self.token)

    @property
    def origin(self) -> tuple:
        if self.is_numeral:
            return ("numeral", int(self.token))
        m = _FRESH_RE.match(self.token)
        if m:
            return ("fresh", int(m.group(2)))
        return ("source",)

    def __str__(self) -> str:
        return self.token


def name(token: str) -> Name:
    return Name(token)


def num(i: int) -> Name:
    if i < 0:
        raise ValueError("numeral names are natural numbers")
    return Name(str(i))


OUTPUT_CHANNEL = Name("o")


def fresh_name(base: str = "v") -> Name:
    """A name guaranteed not to collide with any token used this session."""
    global _session_counter
    m = _FRESH_RE.match(base)
    stem = m.group(1) if m else base
    if not stem or _NUMERAL_RE.match(stem) or stem == "o":
        stem = "v"
    with _session_lock:
        while True:
            _session_counter += 1
            token = f"{stem}'{_session_counter}"
            if token not in _session_tokens:
                break
        _session_tokens.add(token)
    return Name(token)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InputPfx:
    channel: Name
    formal: Name  # binds in the continuation only


@dataclass(frozen=True)
class OutputPfx:
    channel: Name
    datum: Name


@dataclass(frozen=True)
class TauPfx:
    pass


Prefix = Union[InputPfx, OutputPfx, TauPfx]


@dataclass(frozen=True)
class Sum:
    """Guarded choice; the empty sum is inaction."""

    branches: tuple[tuple[Prefix, "Process"], ...] = ()


@dataclass(frozen=True)
class OutputAtom:
    """The asynchronous output particle x!y (a process, not a prefix)."""

    channel: Name
    datum: Name


@dataclass(frozen=True)
class Restriction:
    bound: Name
    body: "Process"


@dataclass(frozen=True)
class Parallel:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class Replication:
    body: "Process"


Process = Union[Sum, OutputAtom, Restriction, Parallel, Replication]

NIL = Sum(())


def parallel_of(parts: Iterable[Process]) -> Process:
    """Left-fold a list of processes into a parallel composition."""
    parts = list(parts)
    if not parts:
        return NIL
    acc = parts[0]
    for p in parts[1:]:
        acc = Parallel(acc, p)
    return acc


def parallel_components(p: Process) -> list[Process]:
    """Flatten nested parallels (does not cross restrictions)."""
    out: list[Process] = []
    stack = [p]
    while stack:
        t = stack.pop()
        if isinstance(t, Parallel):
            stack.append(t.right)
            stack.append(t.left)
        else:
            out.append(t)
    return out


# ---------------------------------------------------------------------------
# Free names and substitution
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def free_names(p: Process) -> frozenset[Name]:
    if isinstance(p, Sum):
        acc: frozenset[Name] = frozenset()
        for pfx, cont in p.branches:
            if isinstance(pfx, InputPfx):
                acc |= {pfx.channel} | (free_names(cont) - {pfx.formal})
            elif isinstance(pfx, OutputPfx):
                acc |= {pfx.channel, pfx.datum} | free_names(cont)
            else:
                acc |= free_names(cont)
        return acc
    if isinstance(p, OutputAtom):
        return frozenset((p.channel, p.datum))
    if isinstance(p, Restriction):
        return free_names(p.body) - {p.bound}
    if isinstance(p, Parallel):
        return free_names(p.left) | free_names(p.right)
    if isinstance(p, Replication):
        return free_names(p.body)
    raise TypeError(f"not a process: {p!r}")


def substitute(p: Process, x: Name, y: Name) -> Process:
    return substitute_many(p, {x: y})


def substitute_many(p: Process, mapping: dict[Name, Name]) -> Process:
    """Simultaneous capture-avoiding substitution of names for names."""
    mapping = {k: v for k, v in mapping.items() if k != v}
    if not mapping:
        return p
    return _subst(p, mapping)


def _subst_name(n: Name, m: dict[Name, Name]) -> Name:
    return m.get(n, n)


def _subst(p: Process, m: dict[Name, Name]) -> Process:
    if not m:
        return p
    if isinstance(p, Sum):
        branches = []
        for pfx, cont in p.branches:
            if isinstance(pfx, InputPfx):
                ch = _subst_name(pfx.channel, m)
                b, body = _under_binder(pfx.formal, cont, m)
                branches.append((InputPfx(ch, b), body))
            elif isinstance(pfx, OutputPfx):
                branches.append(
                    (
                        OutputPfx(_subst_name(pfx.channel, m), _subst_name(pfx.datum, m)),
                        _subst(cont, m),
                    )
                )
            else:
                branches.append((pfx, _subst(cont, m)))
        return Sum(tuple(branches))
    if isinstance(p, OutputAtom):
        return OutputAtom(_subst_name(p.channel, m), _subst_name(p.datum, m))
    if isinstance(p, Restriction):
        b, body = _under_binder(p.bound, p.body, m)
        return Restriction(b, body)
    if isinstance(p, Parallel):
        return Parallel(_subst(p.left, m), _subst(p.right, m))
    if isinstance(p, Replication):
        return Replication(_subst(p.body, m))
    raise TypeError(f"not a process: {p!r}")


def _under_binder(b: Name, body: Process, m: dict[Name, Name]) -> tuple[Name, Process]:
    inner = {k: v for k, v in m.items() if k != b}
    relevant = {k: v for k, v in inner.items() if k in free_names(body)}
    if not relevant:
        return b, body
    if b in relevant.values():
        nb = fresh_name(b.token)
        body = _subst(body, {b: nb})
        return nb, _subst(body, relevant)
    return b, _subst(body, relevant)


# ---------------------------------------------------------------------------
# Alpha-equivalence via canonical renaming
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def canonical_alpha(p: Process) -> Process:
    """Rename binders to $0, $1, ... in leftmost-outermost visit order.

    Canonical tokens skip any token free in the whole term, so the renaming
    can never capture; two terms are alpha-equivalent iff their canonical
    forms are structurally equal.
    """
    taken = {n.token for n in free_names(p)}
    counter = [0]

    def next_name() -> Name:
        while True:
            tok = f"${counter[0]}"
            counter[0] += 1
            if tok not in taken:
                return Name(tok)

    def walk(t: Process, env: dict[Name, Name]) -> Process:
        if isinstance(t, Sum):
            branches = []
            for pfx, cont in t.branches:
                if isinstance(pfx, InputPfx):
                    nb = next_name()
                    branches.append(
                        (
                            InputPfx(env.get(pfx.channel, pfx.channel), nb),
                            walk(cont, {**env, pfx.formal: nb}),
                        )
                    )
                elif isinstance(pfx, OutputPfx):
                    branches.append(
                        (
                            OutputPfx(env.get(pfx.channel, pfx.channel), env.get(pfx.datum, pfx.datum)),
                            walk(cont, env),
                        )
                    )
                else:
                    branches.append((pfx, walk(cont, env)))
            return Sum(tuple(branches))
        if isinstance(t, OutputAtom):
            return OutputAtom(env.get(t.channel, t.channel), env.get(t.datum, t.datum))
        if isinstance(t, Restriction):
            nb = next_name()
            return Restriction(nb, walk(t.body, {**env, t.bound: nb}))
        if isinstance(t, Parallel):
            return Parallel(walk(t.left, env), walk(t.right, env))
        if isinstance(t, Replication):
            return Replication(walk(t.body, env))
        raise TypeError(f"not a process: {t!r}")

    return walk(p, {})


def alpha_equiv(p: Process, q: Process) -> bool:
    return canonical_alpha(p) == canonical_alpha(q)


# ---------------------------------------------------------------------------
# Structural congruence normal forms
# ---------------------------------------------------------------------------
#
# The congruence is alpha-conversion, commutativity/associativity of |, and
# maximal hoisting of restrictions across |.  A normal form is a stack of
# restrictions over a sorted parallel multiset at every level; within one
# restriction layer the binder order is canonicalized (adjacent binders with
# disjoint supports commute via hoisting, and the remaining order is fixed by
# the canonical component order).


def _ser(p: Process, env: dict[Name, str], mark: Callable[[Name], str]) -> str:
    """Alpha-invariant serialization used as a layer sort key.

    Bound names local to ``p`` get positional labels via ``env``; other names
    go through ``mark`` (layer binders get assigned/unassigned markers, free
    names their token).
    """

    counter = [0]

    def bind() -> str:
        counter[0] += 1
        return f"b{counter[0]}"

    def nm(n: Name, env: dict[Name, str]) -> str:
        if n in env:
            return env[n]
        return mark(n)

    def walk(t: Process, env: dict[Name, str]) -> str:
        if isinstance(t, Sum):
            parts = []
            for pfx, cont in t.branches:
                if isinstance(pfx, InputPfx):
                    lbl = bind()
                    parts.append(f"(I {nm(pfx.channel, env)} {walk(cont, {**env, pfx.formal: lbl})})")
                elif isinstance(pfx, OutputPfx):
                    parts.append(f"(O {nm(pfx.channel, env)} {nm(pfx.datum, env)} {walk(cont, env)})")
                else:
                    parts.append(f"(T {walk(cont, env)})")
            return "(S " + " ".join(parts) + ")"
        if isinstance(t, OutputAtom):
            return f"(A {nm(t.channel, env)} {nm(t.datum, env)})"
        if isinstance(t, Restriction):
            lbl = bind()
            return f"(N {walk(t.body, {**env, t.bound: lbl})})"
        if isinstance(t, Parallel):
            return f"(P {walk(t.left, env)} {walk(t.right, env)})"
        if isinstance(t, Replication):
            return f"(R {walk(t.body, env)})"
        raise TypeError(f"not a process: {t!r}")

    return walk(p, env)


def _name_occurrences(p: Process) -> list[Name]:
    """Free-position name occurrences of ``p`` in serialization order."""
    out: list[Name] = []

    def walk(t: Process, bound: frozenset[Name]) -> None:
        if isinstance(t, Sum):
            for pfx, cont in t.branches:
                if isinstance(pfx, InputPfx):
                    if pfx.channel not in bound:
                        out.append(pfx.channel)
                    walk(cont, bound | {pfx.formal})
                elif isinstance(pfx, OutputPfx):
                    if pfx.channel not in bound:
                        out.append(pfx.channel)
                    if pfx.datum not in bound:
                        out.append(pfx.datum)
                    walk(cont, bound)
                else:
                    walk(cont, bound)
        elif isinstance(t, OutputAtom):
            if t.channel not in bound:
                out.append(t.channel)
            if t.datum not in bound:
                out.append(t.datum)
        elif isinstance(t, Restriction):
            walk(t.body, bound | {t.bound})
        elif isinstance(t, Parallel):
            walk(t.left, bound)
            walk(t.right, bound)
        elif isinstance(t, Replication):
            walk(t.body, bound)

    walk(p, frozenset())
    return out


def _canonical_layer(binders: list[Name], comps: list[Process]) -> tuple[list[Name], list[Process]]:
    """Canonically order a hoisted-restriction layer.

    Components are sorted by alpha-invariant keys; layer binders are numbered
    by first occurrence along the chosen component order.  Ties between
    components that differ only in which not-yet-numbered binder they mention
    are resolved by branching and keeping the lexicographically least result.
    """
    bset = set(binders)
    if not bset:
        return [], sorted(comps, key=lambda c: _ser(c, {}, lambda n: f"f:{n.token}"))

    occs = {id(c): [n for n in _name_occurrences(c) if n in bset] for c in comps}

    def key_of(c: Process, naming: dict[Name, int]) -> str:
        def mark(n: Name) -> str:
            if n in naming:
                return f"L{naming[n]}"
            if n in bset:
                return "?"
            return f"f:{n.token}"

        return _ser(c, {}, mark)

    best: Optional[tuple[tuple[str, ...], tuple[Process, ...], dict[Name, int]]] = None
    budget = [400_000]

    # Full branch-and-bound permutation search.  A key containing the
    # unassigned marker '?' is a lower bound for every key it can resolve to
    # ('?' sorts below 'L'), so pruning against the best final key is sound.
    def rec(naming: dict[Name, int], chosen: list[Process], chosen_keys: list[str], remaining: list[Process]) -> None:
        nonlocal best
        budget[0] -= 1
        if budget[0] < 0:
            raise RuntimeError("restriction-layer canonicalization exceeded its search budget")
        if best is not None and tuple(chosen_keys) > best[0][: len(chosen_keys)]:
            return
        if not remaining:
            final_keys = tuple(key_of(c, naming) for c in chosen)
            cand = (final_keys, tuple(chosen), dict(naming))
            if best is None or cand[0] < best[0]:
                best = cand
            return
        keyed = sorted((key_of(c, naming), i) for i, c in enumerate(remaining))
        seen: set[tuple] = set()
        for k, i in keyed:
            c = remaining[i]
            newly = []
            for n in occs[id(c)]:
                if n not in naming and n not in newly:
                    newly.append(n)
            sig = (c, tuple(newly))
            if sig in seen:
                continue
            seen.add(sig)
            new_naming = dict(naming)
            base = len(naming)
            for j, n in enumerate(newly):
                new_naming[n] = base + j
            rec(new_naming, chosen + [c], chosen_keys + [k], remaining[:i] + remaining[i + 1 :])

    rec({}, [], [], list(comps))
    assert best is not None
    _, order, naming = best
    used = sorted((n for n in bset if n in naming), key=lambda n: naming[n])
    unused = [n for n in binders if n not in naming]
    return used + unused, list(order)


def _reorganize(p: Process) -> Process:
    if isinstance(p, Sum):
        return Sum(tuple((pfx, _reorganize(c)) for pfx, c in p.branches))
    if isinstance(p, OutputAtom):
        return p
    if isinstance(p, Replication):
        return Replication(_reorganize(p.body))
    if isinstance(p, (Restriction, Parallel)):
        binders: list[Name] = []
        comps: list[Process] = []

        def gather(t: Process) -> None:
            if isinstance(t, Restriction):
                nb = fresh_name(t.bound.token)
                binders.append(nb)
                gather(_subst(t.body, {t.bound: nb}))
            elif isinstance(t, Parallel):
                gather(t.left)
                gather(t.right)
            else:
                comps.append(_reorganize(t))

        gather(p)
        comps = [c for c in comps if c != NIL]  # P|0 == P
        if not comps:
            comps = [NIL]
        obinders, ocomps = _canonical_layer(binders, comps)
        body = parallel_of(ocomps)
        for b in reversed(obinders):
            body = Restriction(b, body)
        return body
    raise TypeError(f"not a process: {p!r}")


@lru_cache(maxsize=None)
def normal_form(p: Process) -> Process:
    """Canonical representative of the structural congruence class of p."""
    return canonical_alpha(_reorganize(p))


def struct_congruent(p: Process, q: Process) -> bool:
    return normal_form(p) == normal_form(q)


# ---------------------------------------------------------------------------
# Sigma-renaming
# ---------------------------------------------------------------------------


class Renaming:
    """A finite name-to-name map, identity outside its domain."""

    def __init__(self, mapping: Optional[dict[Name, Name]] = None):
        self.mapping: dict[Name, Name] = dict(mapping or {})

    def __call__(self, n: Name) -> Name:
        return self.mapping.get(n, n)

    def __repr__(self) -> str:
        pairs = ", ".join(f"{k.token}->{v.token}" for k, v in sorted(self.mapping.items()))
        return f"Renaming({{{pairs}}})"

    @property
    def domain(self) -> frozenset[Name]:
        return frozenset(self.mapping)

    def is_injective_on(self, names: Iterable[Name]) -> bool:
        images = [self(n) for n in names]
        return len(images) == len(set(images))

    def compose(self, other: "Renaming") -> "Renaming":
        """self after other."""
        m = {k: self(v) for k, v in other.mapping.items()}
        for k, v in self.mapping.items():
            if k not in m:
                m[k] = v
        return Renaming(m)

    def inverse(self) -> "Renaming":
        inv: dict[Name, Name] = {}
        for k, v in self.mapping.items():
            if v in inv:
                raise ValueError("renaming is not injective; cannot invert")
            inv[v] = k
        return Renaming(inv)

    def extended(self, extra: dict[Name, Name]) -> "Renaming":
        m = dict(self.mapping)
        m.update(extra)
        return Renaming(m)


def apply_renaming(sigma: Renaming, p: Process) -> Process:
    """Map free names through sigma after refreshing every bound name.

    Bound names are renamed to fresh ones and sigma is extended as the
    identity on them, so the renaming acts homomorphically on the term
    structure.  Requires sigma to be injective on the free names of p.
    """
    if not sigma.is_injective_on(free_names(p)):
        raise ValueError("renaming is not injective on the free names of the term")

    def walk(t: Process, env: dict[Name, Name]) -> Process:
        def nm(n: Name) -> Name:
            if n in env:
                return env[n]
            return sigma(n)

        if isinstance(t, Sum):
            branches = []
            for pfx, cont in t.branches:
                if isinstance(pfx, InputPfx):
                    nb = fresh_name(pfx.formal.token)
                    branches.append((InputPfx(nm(pfx.channel), nb), walk(cont, {**env, pfx.formal: nb})))
                elif isinstance(pfx, OutputPfx):
                    branches.append((OutputPfx(nm(pfx.channel), nm(pfx.datum)), walk(cont, env)))
                else:
                    branches.append((pfx, walk(cont, env)))
            return Sum(tuple(branches))
        if isinstance(t, OutputAtom):
            return OutputAtom(nm(t.channel), nm(t.datum))
        if isinstance(t, Restriction):
            nb = fresh_name(t.bound.token)
            return Restriction(nb, walk(t.body, {**env, t.bound: nb}))
        if isinstance(t, Parallel):
            return Parallel(walk(t.left, env), walk(t.right, env))
        if isinstance(t, Replication):
            return Replication(walk(t.body, env))
        raise TypeError(f"not a process: {t!r}")

    return walk(p, {})


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*(?:'[0-9]+)?)
  | (?P<number>[0-9]+)
  | (?P<sym>[!?().+|])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"new", "tau"}


@dataclass
class _Tok:
    kind: str  # ident | number | sym | kw | eof
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind not in ("ws", "comment"):
            if kind == "ident" and s in _KEYWORDS:
                toks.append(_Tok("kw", s, line, col))
            else:
                toks.append(_Tok(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text or t.kind == "eof":
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def fail(self, msg: str) -> None:
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # -- grammar ------------------------------------------------------------

    def parse_process(self) -> Process:
        parts = [self.parse_sum()]
        while self.peek().text == "|":
            self.next()
            parts.append(self.parse_sum())
        return parallel_of(parts)

    def parse_sum(self) -> Process:
        if self.peek().kind == "kw" and self.peek().text == "new":
            return self.parse_new()
        first = self.parse_term()
        if self.peek().text != "+":
            return self.term_to_process(first)
        items = [first]
        while self.peek().text == "+":
            plus = self.next()
            if self.peek().kind == "kw" and self.peek().text == "new":
                raise ParseError("a sum branch must be a prefixed term", plus.line, plus.col)
            items.append(self.parse_term())
        branches: list[tuple[Prefix, Process]] = []
        sugars: list[tuple[int, Name]] = []  # (branch index, binder)
        for item in items:
            tag = item[0]
            if tag == "branch":
                branches.append((item[1], item[2]))
            elif tag == "sugar":
                _, bound, ch, cont = item
                sugars.append((len(branches), bound))
                branches.append((OutputPfx(ch, bound), cont))
            else:
                t = self.peek()
                raise ParseError("a sum branch must be a prefixed term", t.line, t.col)
        # Bound-output sugar hoists its binder above the whole sum; rename a
        # binder that would capture a free occurrence in a sibling branch or
        # that collides with another sugar binder.
        branch_fn = [free_names(Sum((br,))) for br in branches]
        binder_names: list[Name] = []
        for idx, b in sugars:
            clash = any(b in branch_fn[j] for j in range(len(branches)) if j != idx)
            clash = clash or any(b2 == b for i2, b2 in sugars if i2 != idx)
            if clash:
                nb = fresh_name(b.token)
                pfx, cont = branches[idx]
                assert isinstance(pfx, OutputPfx)
                branches[idx] = (OutputPfx(pfx.channel, nb), _subst(cont, {b: nb}))
                b = nb
            binder_names.append(b)
        p: Process = Sum(tuple(branches))
        for b in reversed(binder_names):
            p = Restriction(b, p)
        return p

    def parse_new(self) -> Process:
        self.expect("new")
        t = self.peek()
        b = self.parse_name()
        if b.is_numeral or b == OUTPUT_CHANNEL:
            raise ParseError(f"cannot bind reserved name {b.token!r}", t.line, t.col)
        self.expect(".")
        return Restriction(b, self.parse_process())

    # A "term" is a unary-level item: either a plain process or a pending
    # sum branch (prefix, continuation), or bound-output sugar.
    def parse_term(self):
        t = self.peek()
        if t.text == "(":
            self.next()
            p = self.parse_process()
            self.expect(")")
            return ("proc", p)
        if t.text == "!":
            self.next()
            body = self.term_to_process(self.parse_term())
            return ("proc", Replication(body))
        if t.kind == "kw" and t.text == "tau":
            self.next()
            self.expect(".")
            cont = self.term_to_process(self.parse_term())
            return ("branch", TauPfx(), cont)
        if t.kind == "kw" and t.text == "new":
            return ("proc", self.parse_new())
        if t.kind == "number" or t.kind == "ident":
            nxt = self.toks[self.i + 1]
            if nxt.text not in ("?", "!"):
                if t.kind == "number" and t.text == "0":
                    self.next()
                    return ("proc", NIL)
                if t.kind == "number":
                    raise ParseError("a bare numeral is not a process (only 0 is inaction)", t.line, t.col)
                raise ParseError(f"name {t.text!r} is not a process by itself", t.line, t.col)
            ch = self.parse_name()
            op = self.next()
            if op.text == "?":
                self.expect("(")
                ft = self.peek()
                formal = self.parse_name()
                if formal.is_numeral or formal == OUTPUT_CHANNEL:
                    raise ParseError(f"cannot bind reserved name {formal.token!r}", ft.line, ft.col)
                self.expect(")")
                self.expect(".")
                cont = self.term_to_process(self.parse_term())
                return ("branch", InputPfx(ch, formal), cont)
            # output: x!(y).P sugar, x!y.P prefix, or x!y atom
            if self.peek().text == "(":
                self.next()
                bt = self.peek()
                bound = self.parse_name()
                if bound.is_numeral or bound == OUTPUT_CHANNEL:
                    raise ParseError(f"cannot bind reserved name {bound.token!r}", bt.line, bt.col)
                self.expect(")")
                self.expect(".")
                cont = self.term_to_process(self.parse_term())
                return ("sugar", bound, ch, cont)
            datum = self.parse_name()
            if self.peek().text == ".":
                self.next()
                cont = self.term_to_process(self.parse_term())
                return ("branch", OutputPfx(ch, datum), cont)
            return ("proc", OutputAtom(ch, datum))
        self.fail(f"unexpected {t.text or 'end of input'!r}")

    def parse_name(self) -> Name:
        t = self.peek()
        if t.kind in ("ident", "number"):
            self.next()
            return Name(t.text)
        self.fail("expected a name")

    def term_to_process(self, item) -> Process:
        tag = item[0]
        if tag == "proc":
            return item[1]
        if tag == "branch":
            return Sum(((item[1], item[2]),))
        if tag == "sugar":
            _, bound, ch, cont = item
            return Restriction(bound, Sum(((OutputPfx(ch, bound), cont),)))
        raise AssertionError(tag)


def parse(text: str) -> Process:
    """Parse a single process term."""
    parser = _Parser(text)
    p = parser.parse_process()
    t = parser.peek()
    if t.kind != "eof":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return p


# ---------------------------------------------------------------------------
# Pretty printer
# ---------------------------------------------------------------------------


def _pretty_branch(pfx: Prefix, cont: Process) -> str:
    if isinstance(pfx, InputPfx):
        head = f"{pfx.channel}?({pfx.formal})"
    elif isinstance(pfx, OutputPfx):
        head = f"{pfx.channel}!{pfx.datum}"
    else:
        head = "tau"
    return f"{head}.{_pretty_cont(cont)}"


def _pretty_cont(p: Process) -> str:
    # Continuations sit at unary (term) level: anything that does not parse
    # as a single term there gets parentheses.
    if isinstance(p, Sum) and len(p.branches) <= 1:
        return pretty(p)
    if isinstance(p, (OutputAtom, Replication)):
        return pretty(p)
    return f"({pretty(p)})"


def pretty(p: Process) -> str:
    """Print a process in the concrete grammar (parse . pretty = identity)."""
    if isinstance(p, Sum):
        if not p.branches:
            return "0"
        return " + ".join(_pretty_branch(pfx, cont) for pfx, cont in p.branches)
    if isinstance(p, OutputAtom):
        return f"{p.channel}!{p.datum}"
    if isinstance(p, Restriction):
        return f"new {p.bound}. {pretty(p.body)}"
    if isinstance(p, Parallel):
        left = pretty(p.left)
        if isinstance(p.left, (Restriction,)) or (isinstance(p.left, Sum) and len(p.left.branches) > 1):
            left = f"({left})"
        right = pretty(p.right)
        if isinstance(p.right, (Parallel, Restriction)) or (
            isinstance(p.right, Sum) and len(p.right.branches) > 1
        ):
            right = f"({right})"
        return f"{left} | {right}"
    if isinstance(p, Replication):
        body = pretty(p.body)
        if isinstance(p.body, (Parallel, Restriction)) or (
            isinstance(p.body, Sum) and len(p.body.branches) > 1
        ):
            body = f"({body})"
        return f"!{body}"
    raise TypeError(f"not a process: {p!r}")
