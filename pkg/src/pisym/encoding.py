"""Uniformity audits for candidate encodings and the separation evidence.

An encoding is uniform when it is a homomorphism for parallel composition
and commutes with renamings; both equations are checked syntactically up to
alpha-conversion on a generated corpus.  The separation demonstration runs
the electoral checker on the mixed-choice two-node election, pushes the
network through a uniform encoding into the asynchronous fragment, and sets
the adversary loose on the image: the announcement observables of source
and image differ on every tested encoding.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass, field
from typing import Callable, Optional

from .adversary import AdversaryState, run_adversary
from .corpus import random_pi_terms
from .electoral import ElectionVerdict, Electoral, ExploreBounds, election_steps, is_electoral
from .lts import Dialect, DialectError, FreeOutput, dialect_violations
from .network import Automorphism, Computation, Network, canonical_network_key, is_symmetric
from .protocols import two_node_election, two_node_swap
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
    alpha_equiv,
    fresh_name,
    parse,
    pretty,
)

__all__ = [
    "Encoding",
    "identity_encoding",
    "drop_continuations",
    "monitor_encoding",
    "plugin_encoding",
    "builtin_encodings",
    "UniformityReport",
    "check_uniform",
    "default_corpus",
    "default_renamings",
    "observables_on_o",
    "SeparationReport",
    "separation_demo",
    "NonUniformEncoding",
]


@dataclass
class Encoding:
    name: str
    transform: Callable[[Process], Process]
    target: Dialect

    def __call__(self, p: Process) -> Process:
        q = self.transform(p)
        bad = dialect_violations(q, self.target)
        if bad:
            raise DialectError(f"encoding {self.name} left the target dialect: " + "; ".join(bad))
        return q


def identity_encoding() -> Encoding:
    return Encoding("identity", lambda p: p, Dialect.PI)


def _drop(p: Process) -> Process:
    if isinstance(p, Sum):
        parts: list[Process] = []
        for pfx, cont in p.branches:
            if isinstance(pfx, InputPfx):
                parts.append(Sum(((pfx, _drop(cont)),)))
            elif isinstance(pfx, OutputPfx):
                parts.append(Parallel(OutputAtom(pfx.channel, pfx.datum), _drop(cont)))
            else:
                parts.append(_drop(cont))
        if not parts:
            return NIL
        acc = parts[0]
        for q in parts[1:]:
            acc = Parallel(acc, q)
        return acc
    if isinstance(p, OutputAtom):
        return p
    if isinstance(p, Restriction):
        return Restriction(p.bound, _drop(p.body))
    if isinstance(p, Parallel):
        return Parallel(_drop(p.left), _drop(p.right))
    if isinstance(p, Replication):
        return Replication(_drop(p.body))
    raise TypeError(f"not a process: {p!r}")


def drop_continuations() -> Encoding:
    """Forget sequencing: output prefixes become parallel atoms and sums
    dissolve into parallel compositions (a deliberately broken translation
    into the asynchronous fragment)."""
    return Encoding("drop-continuations", _drop, Dialect.PI_ASYNC)


def _monitored(p: Process) -> Process:
    if isinstance(p, Parallel):
        y1 = fresh_name("mon")
        y2 = fresh_name("mon")
        w = fresh_name("w")
        monitor = Sum(((InputPfx(y1, w), OutputAtom(y2, w)),))
        return Restriction(y1, Restriction(y2, Parallel(_monitored(p.left), Parallel(monitor, _monitored(p.right)))))
    if isinstance(p, Sum):
        return Sum(tuple((pfx, _monitored(c)) for pfx, c in p.branches))
    if isinstance(p, OutputAtom):
        return p
    if isinstance(p, Restriction):
        return Restriction(p.bound, _monitored(p.body))
    if isinstance(p, Replication):
        return Replication(_monitored(p.body))
    raise TypeError(f"not a process: {p!r}")


def monitor_encoding() -> Encoding:
    """Interpose a coordinator between the components of every parallel
    composition (compositional, but not parallel-homomorphic)."""
    return Encoding("monitor", _monitored, Dialect.PI)


def plugin_encoding(cmd: str, target: Dialect = Dialect.PI_ASYNC) -> Encoding:
    """An external transform mapping a term (grammar text on stdin) to a
    term (grammar text on stdout)."""

    def transform(p: Process) -> Process:
        proc = subprocess.run(cmd, shell=True, input=pretty(p), capture_output=True, text=True, timeout=60)
        if proc.returncode != 0:
            raise RuntimeError(f"plugin encoding failed: {proc.stderr.strip()}")
        return parse(proc.stdout.strip())

    return Encoding(f"plugin:{cmd}", transform, target)


def builtin_encodings() -> dict[str, Encoding]:
    return {
        "identity": identity_encoding(),
        "drop-continuations": drop_continuations(),
        "monitor": monitor_encoding(),
    }


# ---------------------------------------------------------------------------
# Uniformity
# ---------------------------------------------------------------------------


@dataclass
class UniformityReport:
    encoding: str
    corpus_size: int
    parallel_homomorphic: bool
    par_counterexample: Optional[tuple[Process, Process]]
    renaming_equivariant: bool
    ren_counterexample: Optional[tuple[Renaming, Process]]

    @property
    def uniform(self) -> bool:
        return self.parallel_homomorphic and self.renaming_equivariant

    def as_dict(self) -> dict:
        out = {
            "encoding": self.encoding,
            "corpus_size": self.corpus_size,
            "parallel_homomorphic": self.parallel_homomorphic,
            "renaming_equivariant": self.renaming_equivariant,
            "uniform": self.uniform,
        }
        if self.par_counterexample:
            p, q = self.par_counterexample
            out["parallel_counterexample"] = {"P": pretty(p), "Q": pretty(q)}
        if self.ren_counterexample:
            s, p = self.ren_counterexample
            out["renaming_counterexample"] = {"sigma": repr(s), "P": pretty(p)}
        return out


def default_corpus(seed: int = 11, size: int = 40) -> list[tuple[Process, Process]]:
    terms = random_pi_terms(seed, 2 * size)
    return list(zip(terms[:size], terms[size:]))


def default_renamings() -> list[Renaming]:
    a, b, c = Name("a"), Name("b"), Name("c")
    return [
        Renaming({a: b, b: a}),
        Renaming({a: b, b: c, c: a}),
        Renaming({Name("x"): Name("y"), Name("y"): Name("x"), Name("0"): Name("1"), Name("1"): Name("0")}),
    ]


def check_uniform(
    e: Encoding,
    corpus: Optional[list[tuple[Process, Process]]] = None,
    renamings: Optional[list[Renaming]] = None,
) -> UniformityReport:
    """Audit the two uniformity equations on the corpus, alpha-syntactically."""
    from .syntax import apply_renaming, free_names

    corpus = corpus if corpus is not None else default_corpus()
    renamings = renamings if renamings is not None else default_renamings()
    par_ok, par_cex = True, None
    for p, q in corpus:
        if not alpha_equiv(e(Parallel(p, q)), Parallel(e(p), e(q))):
            par_ok, par_cex = False, (p, q)
            break
    ren_ok, ren_cex = True, None
    terms = [t for pq in corpus for t in pq]
    for sigma in renamings:
        for p in terms:
            if not sigma.is_injective_on(free_names(p)):
                continue
            if not alpha_equiv(e(apply_renaming(sigma, p)), apply_renaming(sigma, e(p))):
                ren_ok, ren_cex = False, (sigma, p)
                break
        if not ren_ok:
            break
    return UniformityReport(e.name, len(corpus), par_ok, par_cex, ren_ok, ren_cex)


# ---------------------------------------------------------------------------
# Observables on the announcement channel
# ---------------------------------------------------------------------------


def observables_on_o(net: Network, d: Dialect, bounds: ExploreBounds = ExploreBounds()) -> frozenset[tuple[str, ...]]:
    """The per-run announcement sequences over maximal-within-bounds runs.

    Cycles and bound-truncated branches contribute their accumulated prefix
    (an infinite run announces at most what its lasso already contains)."""
    memo: dict = {}
    on_path: set = set()

    def suffixes(cur: Network, depth: int) -> tuple[frozenset[tuple[str, ...]], bool]:
        key = canonical_network_key(cur)
        if key in memo:
            return memo[key], True
        if key in on_path:
            return frozenset({()}), False
        if depth >= bounds.max_depth:
            return frozenset({()}), False
        steps = election_steps(cur, d, bounds)
        if not steps:
            return frozenset({()}), True
        on_path.add(key)
        acc: set[tuple[str, ...]] = set()
        clean = True
        try:
            for s in steps:
                head: tuple[str, ...] = ()
                if isinstance(s.label, FreeOutput) and s.label.channel == OUTPUT_CHANNEL:
                    head = (s.label.datum.token,)
                tails, sub_clean = suffixes(s.post, depth + 1)
                clean = clean and sub_clean
                acc |= {head + t for t in tails}
        finally:
            on_path.discard(key)
        result = frozenset(acc)
        if clean:
            memo[key] = result
        return result, clean

    seqs, _ = suffixes(net, 0)
    return seqs


# ---------------------------------------------------------------------------
# The separation demonstration
# ---------------------------------------------------------------------------


class NonUniformEncoding(ValueError):
    def __init__(self, report: UniformityReport):
        super().__init__(f"encoding {report.encoding} is not uniform")
        self.report = report


@dataclass
class SeparationReport:
    encoding: str
    uniformity: UniformityReport
    source_verdict: ElectionVerdict
    source_observables: frozenset[tuple[str, ...]]
    image_symmetric: bool
    adversary_rounds: int
    adversary_certificates_ok: bool
    image_trace_observables: frozenset[tuple[str, ...]]

    def as_dict(self) -> dict:
        return {
            "encoding": self.encoding,
            "uniform": self.uniformity.uniform,
            "source_electoral": isinstance(self.source_verdict, Electoral),
            "source_observables": sorted([list(s) for s in self.source_observables]),
            "image_symmetric": self.image_symmetric,
            "adversary_rounds": self.adversary_rounds,
            "adversary_certificates_ok": self.adversary_certificates_ok,
            "image_trace_observables": sorted([list(s) for s in self.image_trace_observables]),
        }


def separation_demo(
    encoding: Optional[Encoding] = None,
    rounds: int = 10,
    bounds: ExploreBounds = ExploreBounds(max_depth=16, max_rep_unfoldings=1),
) -> tuple[SeparationReport, AdversaryState]:
    """Run the full argument on the two-node election for one encoding:
    audit uniformity, check the source elects, verify the image stays
    symmetric, and schedule the image adversarially so it never announces."""
    e = encoding if encoding is not None else drop_continuations()
    report = check_uniform(e)
    if not report.uniform:
        raise NonUniformEncoding(report)
    if e.target is not Dialect.PI_ASYNC:
        raise DialectError(f"the separation target is the asynchronous fragment, not {e.target.value}")
    source = two_node_election()
    verdict = is_electoral(source, Dialect.PI, bounds)
    source_obs = observables_on_o(source, Dialect.PI, bounds)
    image = Network(tuple(e(c) for c in source.components), source.hoisted)
    sigma = two_node_swap()
    image_symmetric = is_symmetric(image, sigma)
    state = run_adversary(image, sigma, rounds, Dialect.PI_ASYNC, allow_idle=True)
    trace_obs = frozenset({_trace_announcements(state.trace)})
    rep = SeparationReport(
        encoding=e.name,
        uniformity=report,
        source_verdict=verdict,
        source_observables=source_obs,
        image_symmetric=image_symmetric,
        adversary_rounds=state.round,
        adversary_certificates_ok=all(c.symmetric and c.announcements_empty for c in state.certificates),
        image_trace_observables=trace_obs,
    )
    return rep, state


def _trace_announcements(trace: Computation) -> tuple[str, ...]:
    out = []
    for s in trace.steps:
        if isinstance(s.label, FreeOutput) and s.label.channel == OUTPUT_CHANNEL:
            out.append(s.label.datum.token)
    return tuple(out)
