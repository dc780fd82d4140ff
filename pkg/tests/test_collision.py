import random

import pytest

from shearlab.catalog import cnk_context, linear_context
from shearlab.collision import (
    CollisionCertificate,
    SaturationDepthError,
    SlotRecipe,
    family_from_recipes,
    pattern_from_recipes,
    trg_collision_analysis,
)
from shearlab.families import EqualityPattern
from shearlab.qftypes import pair_qf_type, qf_type, realizations
from shearlab.saturation import SaturationParams, saturate
from shearlab.structures import InputError
from shearlab.theories import (
    FormulaInstance,
    FormulaTemplate,
    ParamModel,
    TheorySpec,
    family_consistent,
    instance_consistent,
)

TWO_SIDED = FormulaTemplate(
    2, positive=frozenset({frozenset({0})}), negative=frozenset({frozenset({1})})
)


def direct_eval(J, sbar, r, recipes):
    assignment, params = family_from_recipes(J, sbar, r, recipes, None)
    model = ParamModel(TheorySpec.random_graph(), list(params.values()))
    insts = [FormulaInstance(TWO_SIDED, assignment[t]) for t in sorted(assignment)]
    individually = all(instance_consistent(model, i) for i in insts)
    jointly = family_consistent(model, insts, core_bound=3).consistent
    return individually and jointly


@pytest.fixture(scope="module")
def cnk_setup():
    ctx = cnk_context(3, 2)
    J = saturate(ctx.base, ctx.kind, SaturationParams(2, 2, 1), max_new=200)
    return ctx, J


@pytest.fixture(scope="module")
def linear_setup():
    ctx = linear_context()
    J = saturate(ctx.base, ctx.kind, SaturationParams(3, 2, 2))
    return ctx, J


class TestVerdicts:
    def test_disjoint_projections_consistent_over_clique_free(self, cnk_setup):
        ctx, J = cnk_setup
        r = qf_type((0, 1), (), J)
        recipes = [SlotRecipe("proj", 0), SlotRecipe("proj", 1)]
        pattern = pattern_from_recipes(J, (), r, recipes)
        cert = trg_collision_analysis(pattern, J, ctx.kind, (), r, {0}, {1})
        assert cert.consistent
        assert direct_eval(J, (), r, recipes)

    def test_cross_projection_collides_over_plain_order(self, linear_setup):
        ctx, J = linear_setup
        r = qf_type((0, 1), (), J)
        recipes = [SlotRecipe("proj", 0), SlotRecipe("proj", 1)]
        pattern = pattern_from_recipes(J, (), r, recipes)
        cert = trg_collision_analysis(pattern, J, ctx.kind, (), r, {0}, {1})
        assert not cert.consistent
        assert cert.collision is not None
        # the blocked interpolation marks a genuine two-sided collision
        assert cert.derived_diagonal is None
        assert not direct_eval(J, (), r, recipes)

    def test_same_projection_on_both_sides_is_diagonal(self, linear_setup):
        ctx, J = linear_setup
        r = qf_type((0, 1), (), J)
        recipes = [SlotRecipe("proj", 0), SlotRecipe("proj", 0)]
        pattern = pattern_from_recipes(J, (), r, recipes)
        cert = trg_collision_analysis(pattern, J, ctx.kind, (), r, {0}, {1})
        assert not cert.consistent
        assert cert.derived_diagonal is not None
        assert not direct_eval(J, (), r, recipes)

    def test_constants_and_private_params_consistent(self, linear_setup):
        ctx, J = linear_setup
        r = qf_type((0, 1), (), J)
        for recipes in (
            [SlotRecipe("const", 0), SlotRecipe("const", 0)],
            [SlotRecipe("fresh"), SlotRecipe("fresh")],
            [SlotRecipe("const", 0), SlotRecipe("fresh")],
        ):
            pattern = pattern_from_recipes(J, (), r, recipes)
            cert = trg_collision_analysis(pattern, J, ctx.kind, (), r, {0}, {1})
            assert cert.consistent
            assert direct_eval(J, (), r, recipes)


class TestDerivation:
    def test_declared_shared_coordinate_pattern_derives_diagonal(self, linear_setup):
        ctx, J = linear_setup
        r = qf_type((0, 1), (), J)
        orbit = realizations(J, r, ())
        entries = {}
        for u in orbit:
            for v in orbit:
                p = pair_qf_type(u, v, (), J)
                key = p.serialize()
                if key in entries:
                    continue
                if u == v:
                    eq = frozenset({(0, 0), (1, 1)})
                elif u[0] == v[0]:
                    eq = frozenset({(0, 0), (0, 1)})
                else:
                    eq = frozenset()
                entries[key] = (p, eq)
        pattern = EqualityPattern.from_pairs(list(entries.values()))
        cert = trg_collision_analysis(pattern, J, ctx.kind, (), r, {0}, {1}, max_steps=20)
        assert not cert.consistent
        assert cert.derived_diagonal is not None
        kinds = [t.kind for t in cert.trace]
        assert "interpolate" in kinds and "transitivity" in kinds

    def test_crossed_variant_normalizes_first(self, linear_setup):
        ctx, J = linear_setup
        r = qf_type((0, 1), (), J)
        orbit = realizations(J, r, ())
        entries = {}
        for u in orbit:
            for v in orbit:
                p = pair_qf_type(u, v, (), J)
                key = p.serialize()
                if key in entries:
                    continue
                if u == v:
                    eq = frozenset({(0, 0), (1, 1)})
                elif u[0] == v[0] and J.less(v[1], u[1]):
                    eq = frozenset({(0, 0), (0, 1)})
                elif u[0] == v[0]:
                    eq = frozenset({(0, 0)})
                else:
                    eq = frozenset()
                entries[key] = (p, eq)
        pattern = EqualityPattern.from_pairs(list(entries.values()))
        cert = trg_collision_analysis(pattern, J, ctx.kind, (), r, {0}, {1}, max_steps=20)
        assert not cert.consistent
        kinds = [t.kind for t in cert.trace]
        assert "normalize" in kinds
        assert cert.derived_diagonal is not None


class TestInputs:
    def test_overlapping_coordinate_sets_rejected(self, linear_setup):
        ctx, J = linear_setup
        r = qf_type((0, 1), (), J)
        pattern = pattern_from_recipes(J, (), r, [SlotRecipe("fresh"), SlotRecipe("fresh")])
        with pytest.raises(InputError):
            trg_collision_analysis(pattern, J, ctx.kind, (), r, {0}, {0})

    def test_missing_diagonal_rejected(self, linear_setup):
        ctx, J = linear_setup
        r = qf_type((0, 1), (), J)
        pattern = EqualityPattern.from_pairs([])
        with pytest.raises(InputError):
            trg_collision_analysis(pattern, J, ctx.kind, (), r, {0}, {1})


class TestRandomizedAgreement:
    def test_analysis_matches_direct_evaluation(self, cnk_setup):
        ctx, J = cnk_setup
        rng = random.Random(41)
        from shearlab.structures import increasing_tuples

        pairs = increasing_tuples(ctx.base, 2)
        options = [
            SlotRecipe("proj", 0),
            SlotRecipe("proj", 1),
            SlotRecipe("const", 0),
            SlotRecipe("fresh"),
        ]
        for _ in range(60):
            tbar = rng.choice(pairs)
            r = qf_type(tbar, (), J)
            recipes = [rng.choice(options), rng.choice(options)]
            pattern = pattern_from_recipes(J, (), r, recipes)
            cert = trg_collision_analysis(pattern, J, ctx.kind, (), r, {0}, {1})
            assert cert.consistent == direct_eval(J, (), r, recipes)
