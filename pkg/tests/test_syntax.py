"""Term representation: grammar round-trips, binding, congruence."""

from __future__ import annotations

import pytest
from hypothesis import given, settings

from conftest import processes
from pisym.corpus import random_pi_terms
from pisym.syntax import (
    NIL,
    InputPfx,
    Name,
    OutputAtom,
    OutputPfx,
    Parallel,
    ParseError,
    Renaming,
    Replication,
    Restriction,
    Sum,
    alpha_equiv,
    apply_renaming,
    free_names,
    fresh_name,
    normal_form,
    num,
    parse,
    pretty,
    struct_congruent,
    substitute,
)


def fn_tokens(p):
    return {n.token for n in free_names(p)}


class TestNames:
    def test_interning_by_token(self):
        assert Name("x") == Name("x")
        assert Name("x") != Name("y")
        assert hash(Name("x")) == hash(Name("x"))

    def test_numerals_and_reserved(self):
        assert num(3) == Name("3")
        assert num(3).is_numeral and num(3).numeral_value == 3
        assert not Name("o").is_numeral
        assert Name("o").origin == ("source",)

    def test_fresh_never_collides(self):
        Name("collide")
        seen = set()
        for _ in range(50):
            f = fresh_name("collide")
            assert f.token != "collide"
            assert f not in seen
            seen.add(f)
            assert f.origin[0] == "fresh"

    def test_fresh_counter_increases(self):
        a = fresh_name("k")
        b = fresh_name("k")
        assert a.origin[1] < b.origin[1]


class TestParsing:
    def test_inaction_is_empty_sum(self):
        assert parse("0") == Sum(())

    def test_output_atom(self):
        assert parse("x!y") == OutputAtom(Name("x"), Name("y"))

    def test_two_node_branch_sugar(self):
        p = parse("x0!(y).o!0 + x1?(y).o!1")
        assert isinstance(p, Restriction)
        body = p.body
        assert isinstance(body, Sum) and len(body.branches) == 2
        out, inp = body.branches
        assert isinstance(out[0], OutputPfx) and out[0].channel == Name("x0") and out[0].datum == p.bound
        assert isinstance(inp[0], InputPfx) and inp[0].channel == Name("x1")

    def test_sugar_binder_capture_renamed(self):
        # y occurs free in the sibling branch: hoisting must not capture it.
        p = parse("x!(y).0 + z?(w).y!y")
        assert isinstance(p, Restriction)
        assert Name("y") in free_names(p)

    def test_reserved_binders_rejected(self):
        for src in ("new o. 0", "new 1. 0", "x?(o).0", "x?(2).0", "x!(o).0"):
            with pytest.raises(ParseError):
                parse(src)

    def test_sum_of_nonprefixed_rejected(self):
        for src in ("0 + x!y", "x!y + (a!b | c!d)", "x!y + new z. 0"):
            with pytest.raises(ParseError):
                parse(src)

    def test_bare_numeral_not_process(self):
        with pytest.raises(ParseError):
            parse("5")

    def test_numerals_as_channels_and_data(self):
        p = parse("5!3")
        assert p == OutputAtom(num(5), num(3))

    def test_error_carries_position(self):
        with pytest.raises(ParseError) as e:
            parse("x!y |\n  + z")
        assert e.value.line == 2

    def test_new_scopes_maximally(self):
        p = parse("new x. x!a | x!b")
        assert isinstance(p, Restriction)
        assert fn_tokens(p) == {"a", "b"}

    def test_parenthesized_restriction(self):
        p = parse("(new x. x!a) | x!b")
        assert isinstance(p, Parallel)
        assert Name("x") in free_names(p)

    def test_roundtrip_handwritten(self):
        cases = [
            "0", "x!y", "x?(y).0", "x!y.0", "tau.x!y", "!x?(y).y!y",
            "x!y | z!w", "new x. x!y | z!w", "(new x. x!y) | z!w",
            "a?(b).(p!q | r!s)", "a?(b).a?(c).b!c",
            "x0!(y).o!0 + x1?(y).o!1",
            "a?(x).0 + b!c.0 + tau.d!d",
        ]
        for src in cases:
            p = parse(src)
            assert alpha_equiv(p, parse(pretty(p))), src

    @settings(max_examples=200, deadline=None)
    @given(processes)
    def test_roundtrip_generated(self, p):
        assert alpha_equiv(p, parse(pretty(p)))


class TestFreeNames:
    def test_inaction_empty(self):
        assert free_names(NIL) == frozenset()

    def test_restriction_binds(self):
        assert free_names(parse("new x. x!y")) == frozenset({Name("y")})

    def test_two_node_component(self):
        # Hand scoping check: the sugar binder is bound, everything else free.
        p = parse("x0!(y).o!0 + x1?(y).o!1")
        assert fn_tokens(p) == {"x0", "x1", "o", "0", "1"}

    @settings(max_examples=150, deadline=None)
    @given(processes)
    def test_normal_form_preserves_free_names(self, p):
        assert free_names(normal_form(p)) == free_names(p)


class TestSubstitution:
    def test_plain(self):
        assert substitute(parse("x!x"), Name("x"), Name("y")) == parse("y!y")

    def test_forced_renaming(self):
        p = parse("new y. x!y")
        q = substitute(p, Name("x"), Name("y"))
        assert isinstance(q, Restriction)
        assert q.bound != Name("y")
        assert q.body.channel == Name("y")
        assert fn_tokens(q) == {"y"}

    def test_shadowed_not_replaced(self):
        p = parse("x?(y).y!x")
        q = substitute(p, Name("y"), Name("z"))
        assert alpha_equiv(p, q)

    def test_capture_suite(self):
        x, y, z = Name("x"), Name("y"), Name("z")
        cases = [
            ("x!x", x, y, "y!y"),
            ("x!z", x, y, "y!z"),
            ("new z. x!z", x, z, None),  # forced alpha below
            ("x?(w).w!x", x, y, "x?(w).w!y".replace("x?", "y?")),
            ("tau.x!x", x, y, "tau.y!y"),
            ("!x!x", x, y, "!y!y"),
            ("x!x | x?(u).0", x, y, "y!y | y?(u).0"),
            ("x?(y).0", x, y, "y?(u).0"),
            ("new u. u!x", x, y, "new u. u!y"),
            ("x!y.y!x", x, z, "z!y.y!z"),
        ]
        for src, a, b, want in cases:
            got = substitute(parse(src), a, b)
            if want is not None:
                assert alpha_equiv(got, parse(want)), (src, pretty(got))
        # the forced-renaming case asserts free names explicitly
        got = substitute(parse("new z. x!z"), x, z)
        assert fn_tokens(got) == {"z"} and isinstance(got, Restriction) and got.bound != z

    def test_postcondition_on_free_names(self):
        for src in ("x!a | a?(u).u!x", "new b. x!b.b!x", "x?(v).v!a"):
            p = parse(src)
            x, y = Name("x"), Name("yy")
            q = substitute(p, x, y)
            expect = (free_names(p) - {x}) | {y} if x in free_names(p) else free_names(p)
            assert free_names(q) == expect

    @settings(max_examples=200, deadline=None)
    @given(processes)
    def test_identity_substitution(self, p):
        assert alpha_equiv(substitute(p, Name("x"), Name("x")), p)

    @settings(max_examples=150, deadline=None)
    @given(processes)
    def test_commutes_with_alpha(self, p):
        q = normal_form(p)  # an alpha-variant with reorganized layout
        a, b = Name("a"), Name("fresh_target")
        assert struct_congruent(substitute(p, a, b), substitute(q, a, b))


class TestAlphaEquiv:
    def test_restriction(self):
        assert alpha_equiv(parse("new x. z!x"), parse("new y. z!y"))

    def test_input_formal(self):
        assert alpha_equiv(parse("x?(u).u!u"), parse("x?(v).v!v"))

    def test_not_equiv(self):
        assert not alpha_equiv(parse("x!y"), parse("y!x"))

    @settings(max_examples=150, deadline=None)
    @given(processes)
    def test_reflexive(self, p):
        assert alpha_equiv(p, p)

    @settings(max_examples=100, deadline=None)
    @given(processes, processes)
    def test_symmetric(self, p, q):
        assert alpha_equiv(p, q) == alpha_equiv(q, p)


class TestNormalForm:
    def test_parallel_commutes(self):
        p, q = parse("a!b"), parse("c?(d).0")
        assert normal_form(Parallel(p, q)) == normal_form(Parallel(q, p))

    def test_parallel_associates(self):
        a, b, c = parse("a!a"), parse("b!b"), parse("c!c")
        assert normal_form(Parallel(Parallel(a, b), c)) == normal_form(Parallel(a, Parallel(b, c)))

    def test_scope_hoisting(self):
        assert struct_congruent(parse("(new x. x!y) | z!w"), parse("new x. (x!y | z!w)"))

    def test_hoisting_respects_capture(self):
        # x free in the sibling: hoisting must alpha-rename, not capture.
        p = parse("(new x. x!y) | x!w")
        nf = normal_form(p)
        assert free_names(nf) == free_names(p)
        assert Name("x") in free_names(nf)

    def test_replication_not_unfolded(self):
        assert not struct_congruent(parse("!a!b"), parse("a!b | !a!b"))

    def test_nil_absorbed(self):
        assert struct_congruent(parse("x!y | 0"), parse("x!y"))

    def test_restriction_exchange(self):
        p = parse("new x. new y. (c!x | d!y)")
        q = parse("new y. new x. (c!x | d!y)")
        assert struct_congruent(p, q)

    def test_symmetric_tie_components(self):
        # Two components distinguished only by which layer binder they use.
        p = parse("new x. new y. (a!x | a!y)")
        q = parse("new y. new x. (a!y | a!x)")
        assert normal_form(p) == normal_form(q)

    def test_sum_order_is_syntax(self):
        assert not struct_congruent(parse("a?(x).0 + b?(y).0"), parse("b?(y).0 + a?(x).0"))

    @settings(max_examples=150, deadline=None)
    @given(processes)
    def test_idempotent(self, p):
        assert normal_form(normal_form(p)) == normal_form(p)

    @settings(max_examples=100, deadline=None)
    @given(processes, processes)
    def test_parallel_commutes_generated(self, p, q):
        assert normal_form(Parallel(p, q)) == normal_form(Parallel(q, p))


class TestRenaming:
    def swap(self):
        return Renaming({Name("x0"): Name("x1"), Name("x1"): Name("x0"),
                         num(0): num(1), num(1): num(0)})

    def test_identity(self):
        p = parse("x0!(y).o!0 + x1?(y).o!1")
        assert alpha_equiv(apply_renaming(Renaming({}), p), p)

    def test_two_node_symmetry_witness(self):
        p0 = parse("x0!(y).o!0 + x1?(y).o!1")
        p1 = parse("x1!(y).o!1 + x0?(y).o!0")
        assert alpha_equiv(apply_renaming(self.swap(), p0), p1)

    def test_shape_preserved(self):
        p = parse("!(new b. x0!b) | x1?(u).(u!u | tau.0)")
        q = apply_renaming(self.swap(), p)

        def skeleton(t):
            if isinstance(t, Sum):
                return ("S", tuple((type(pfx).__name__, skeleton(c)) for pfx, c in t.branches))
            if isinstance(t, OutputAtom):
                return ("A",)
            if isinstance(t, Restriction):
                return ("N", skeleton(t.body))
            if isinstance(t, Parallel):
                return ("P", skeleton(t.left), skeleton(t.right))
            return ("R", skeleton(t.body))

        assert skeleton(p) == skeleton(q)

    def test_non_injective_rejected(self):
        sigma = Renaming({Name("a"): Name("c"), Name("b"): Name("c")})
        with pytest.raises(ValueError):
            apply_renaming(sigma, parse("a!b"))

    def test_composition_property(self):
        # sigma(sigma'(p)) alpha-equals (sigma . sigma')(p) on a corpus.
        s1 = Renaming({Name("a"): Name("b"), Name("b"): Name("a")})
        s2 = Renaming({Name("b"): Name("c"), Name("c"): Name("b")})
        for p in random_pi_terms(seed=5, count=200, depth=3):
            lhs = apply_renaming(s1, apply_renaming(s2, p))
            rhs = apply_renaming(s1.compose(s2), p)
            assert alpha_equiv(lhs, rhs)
