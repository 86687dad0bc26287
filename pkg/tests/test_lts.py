"""Transition derivation: rule-by-rule examples, dialect gates, replay."""

from __future__ import annotations

import pytest
from hypothesis import given, settings

from conftest import processes
from pisym.corpus import random_pia_terms
from pisym.lts import (
    BoundOutput,
    Dialect,
    DialectError,
    FreeOutput,
    InputAct,
    TauAct,
    action_str,
    bound_names,
    action_names,
    dialect_check,
    dialect_violations,
    parse_action,
    replay_step,
    transitions,
)
from pisym.syntax import (
    NIL,
    Name,
    alpha_equiv,
    free_names,
    normal_form,
    parse,
    pretty,
    struct_congruent,
)


def acts(steps):
    return sorted({action_str(t.action) for t in steps})


class TestActions:
    def test_bound_names(self):
        assert bound_names(InputAct(Name("x"), Name("y"))) == frozenset({Name("y")})
        assert bound_names(BoundOutput(Name("x"), Name("y"))) == frozenset({Name("y")})
        assert bound_names(FreeOutput(Name("x"), Name("y"))) == frozenset()
        assert bound_names(TauAct()) == frozenset()

    def test_serialization_roundtrip(self):
        for a in (InputAct(Name("x"), Name("y")), FreeOutput(Name("x"), Name("y")),
                  BoundOutput(Name("x"), Name("y")), TauAct()):
            assert parse_action(action_str(a)) == a


class TestDialects:
    def test_output_atom_is_async(self):
        assert dialect_check(parse("x!y"), Dialect.PI_ASYNC)

    def test_mixed_sum_not_async(self):
        assert not dialect_check(parse("x0!(y).o!0 + x1?(y).o!1"), Dialect.PI_ASYNC)

    def test_output_prefix_not_async(self):
        assert not dialect_check(parse("x!y.a!b"), Dialect.PI_ASYNC)

    def test_input_prefix_is_async(self):
        assert dialect_check(parse("x?(y).y!y"), Dialect.PI_ASYNC)

    def test_separate_choice(self):
        assert dialect_check(parse("a?(x).0 + b?(y).0"), Dialect.PI_SEPARATE_CHOICE)
        assert dialect_check(parse("a!b.0 + tau.0"), Dialect.PI_SEPARATE_CHOICE)
        assert not dialect_check(parse("a!b.0 + b?(y).0"), Dialect.PI_SEPARATE_CHOICE)

    def test_ccs_gate(self):
        assert dialect_check(parse("c!c.0 + d?(y).0"), Dialect.CCS)
        assert not dialect_check(parse("c!d"), Dialect.CCS)  # carries a name
        assert not dialect_check(parse("c?(y).y!y"), Dialect.CCS)  # uses the received name
        assert dialect_check(parse("new h. (h!h | h?(y).0)"), Dialect.CCS)

    def test_violations_are_reported(self):
        out = dialect_violations(parse("x0!(y).o!0 + x1?(y).o!1"), Dialect.PI_ASYNC)
        assert out and any("arity" in v for v in out)


class TestRules:
    def test_out_rule(self):
        steps = transitions(parse("x!y"), Dialect.PI_ASYNC)
        assert len(steps) == 1
        (t,) = steps
        assert t.action == FreeOutput(Name("x"), Name("y")) and t.target == NIL

    def test_sum_rules(self):
        steps = transitions(parse("a!b.c!c + tau.0"), Dialect.PI)
        assert "a!b" in acts(steps) and "tau" in acts(steps)

    def test_early_input_instantiation(self):
        steps = transitions(parse("x?(y).y!y"), Dialect.PI_ASYNC, universe={Name("z")})
        received = {t.action.received.token for t in steps}
        assert "z" in received and "x" in received
        z_step = [t for t in steps if t.action.received == Name("z")][0]
        assert z_step.target == parse("z!z")
        assert any(r.startswith("_e") for r in received)  # the fresh representative

    def test_no_input_on_o(self):
        assert transitions(parse("o?(y).0"), Dialect.PI_ASYNC) == ()

    def test_open_rule(self):
        steps = transitions(parse("new y. x!y"), Dialect.PI_ASYNC)
        assert len(steps) == 1
        (t,) = steps
        assert isinstance(t.action, BoundOutput) and t.action.channel == Name("x")

    def test_open_requires_distinct_channel(self):
        assert transitions(parse("new y. y!a"), Dialect.PI_ASYNC) == ()

    def test_res_blocks_on_mentioned_name(self):
        steps = transitions(parse("new a. x!a.a!a"), Dialect.PI)
        # only Open fires; the Res-propagated free output would mention a
        assert all(isinstance(t.action, BoundOutput) for t in steps)

    def test_com(self):
        steps = transitions(parse("x!y | x?(w).w!a"), Dialect.PI_ASYNC)
        taus = [t for t in steps if isinstance(t.action, TauAct)]
        assert len(taus) == 1
        assert struct_congruent(taus[0].target, parse("y!a"))

    def test_close(self):
        steps = transitions(parse("(new y. x!y) | x?(w).w!a"), Dialect.PI_ASYNC)
        taus = [t for t in steps if isinstance(t.action, TauAct)]
        assert len(taus) == 1
        target = normal_form(taus[0].target)
        want = normal_form(parse("new b. b!a"))
        assert target == want

    def test_par_bound_output_refresh(self):
        # The extruded name collides with a free name on the other side.
        steps = transitions(parse("(new y. x!y) | y!a"), Dialect.PI_ASYNC)
        bo = [t for t in steps if isinstance(t.action, BoundOutput)]
        assert bo and all(t.action.datum != Name("y") for t in bo)

    def test_replication_single_copy(self):
        steps = transitions(parse("!x!a"), Dialect.PI_ASYNC)
        assert acts(steps) == ["x!a"]
        assert struct_congruent(steps[0].target, parse("!x!a"))

    def test_replication_copy_copy_com(self):
        steps = transitions(parse("!(x!a | x?(y).0)"), Dialect.PI_ASYNC)
        assert "tau" in acts(steps)

    def test_rep_budget_exhausts(self):
        assert transitions(parse("!x!a"), Dialect.PI_ASYNC, rep_unfold=0) == ()

    def test_dialect_enforced(self):
        with pytest.raises(DialectError):
            transitions(parse("a!b.0 + c?(x).0"), Dialect.PI_ASYNC)


class TestInvariants:
    @settings(max_examples=120, deadline=None)
    @given(processes)
    def test_subject_consistency(self, p):
        for t in transitions(p, Dialect.PI, rep_unfold=1):
            allowed = free_names(p) | bound_names(t.action) | action_names(t.action)
            assert free_names(t.target) <= allowed

    def test_cong_coherence(self):
        # Congruent sources have the same steps up to congruence of targets
        # and alpha on bound action names.
        from pisym.syntax import substitute

        marker = Name("_cmp")

        def key(t):
            a = t.action
            if isinstance(a, BoundOutput):
                tgt = substitute(t.target, a.datum, marker)
                return ("bo", a.channel.token, pretty(normal_form(tgt)))
            return (action_str(a), pretty(normal_form(t.target)))

        for p in random_pia_terms(seed=23, count=60, depth=3):
            q = normal_form(p)
            s1 = {key(t) for t in transitions(p, Dialect.PI_ASYNC)}
            s2 = {key(t) for t in transitions(q, Dialect.PI_ASYNC)}
            assert s1 == s2, pretty(p)

    def test_replay_determinism(self):
        for p in random_pia_terms(seed=31, count=80, depth=3):
            for t in transitions(p, Dialect.PI_ASYNC):
                a2, t2 = replay_step(p, t.derivation, t.action)
                if isinstance(t.action, BoundOutput):
                    assert isinstance(a2, BoundOutput) and a2.channel == t.action.channel
                else:
                    assert a2 == t.action
                assert struct_congruent(t2, t.target) or alpha_equiv(t2, t.target)
