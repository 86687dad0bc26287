"""Shared hypothesis strategies for process terms."""

from __future__ import annotations

import hypothesis.strategies as st

from pisym.syntax import (
    NIL,
    InputPfx,
    Name,
    OutputAtom,
    OutputPfx,
    Parallel,
    Replication,
    Restriction,
    Sum,
    TauPfx,
)

FREE_NAMES = tuple(Name(t) for t in ("a", "b", "c", "x", "y", "z"))
BINDERS = tuple(Name(t) for t in ("u", "v", "w"))

names = st.sampled_from(FREE_NAMES + BINDERS)
binders = st.sampled_from(BINDERS)


def _extend(children):
    branch = st.one_of(
        st.tuples(st.builds(InputPfx, names, binders), children),
        st.tuples(st.builds(OutputPfx, names, names), children),
        st.tuples(st.builds(TauPfx), children),
    )
    return st.one_of(
        st.builds(lambda bs: Sum(tuple(bs)), st.lists(branch, min_size=1, max_size=3)),
        st.builds(Parallel, children, children),
        st.builds(Restriction, binders, children),
        st.builds(Replication, children),
    )


processes = st.recursive(
    st.one_of(st.just(NIL), st.builds(OutputAtom, names, names)),
    _extend,
    max_leaves=10,
)
