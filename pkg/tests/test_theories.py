import itertools
import random

import pytest

from shearlab.propsuite import random_instance, random_model
from shearlab.theories import (
    FamilyVerdict,
    FormulaInstance,
    FormulaTemplate,
    InputError,
    OracleSizeError,
    ParamModel,
    TheorySpec,
    brute_force_consistency_oracle,
    family_consistent,
    instance_consistent,
    tp_sequence_triangle_free,
)


def rg_model(size=4):
    return ParamModel(TheorySpec.random_graph(), range(size))


class TestTheorySpec:
    def test_hypergraph_needs_n_above_k(self):
        with pytest.raises(InputError):
            TheorySpec.generic_hypergraph(2, 2)

    def test_graph_regime_constructor(self):
        t = TheorySpec.forbidden_clique_graph(3)
        assert t.edge_arity == 2 and t.clique_size == 4 and t.non_simple_regime

    def test_model_rejects_forbidden_clique(self):
        theory = TheorySpec.generic_hypergraph(3, 2)
        edges = [frozenset(t) for t in itertools.combinations(range(4), 3)]
        with pytest.raises(InputError):
            ParamModel(theory, range(4), edges)


class TestInstanceConsistent:
    def test_positive_and_negative_on_same_vertex(self):
        m = rg_model()
        t = FormulaTemplate(2, positive=frozenset({frozenset({0})}), negative=frozenset({frozenset({1})}))
        inst = FormulaInstance(t, (0, 0))
        assert not instance_consistent(m, inst)

    def test_all_positive_over_edge_free_params(self):
        theory = TheorySpec.generic_hypergraph(3, 2)
        m = ParamModel(theory, range(3))
        inst = FormulaInstance(FormulaTemplate.all_positive(3, 2), (0, 1, 2))
        assert instance_consistent(m, inst)
        assert brute_force_consistency_oracle(m, inst)

    def test_demands_completing_internal_clique(self):
        theory = TheorySpec.generic_hypergraph(3, 2)
        m = ParamModel(theory, range(3), [frozenset({0, 1, 2})])
        inst = FormulaInstance(FormulaTemplate.all_positive(3, 2), (0, 1, 2))
        assert not instance_consistent(m, inst)
        assert not brute_force_consistency_oracle(m, inst)

    def test_inequations_never_block(self):
        m = rg_model()
        t = FormulaTemplate(2, positive=frozenset({frozenset({0})}), inequations=frozenset({0, 1}))
        assert instance_consistent(m, FormulaInstance(t, (0, 0)))

    def test_arity_mismatch_rejected(self):
        theory = TheorySpec.generic_hypergraph(3, 2)
        m = ParamModel(theory, range(3))
        t = FormulaTemplate(2, positive=frozenset({frozenset({0})}))
        with pytest.raises(InputError):
            instance_consistent(m, FormulaInstance(t, (0, 1)))


class TestFamilyConsistent:
    def test_three_instance_core(self):
        # mirrors of three substituted triples over one hyperedge collide
        theory = TheorySpec.generic_hypergraph(3, 2)
        # params 0,1,2 mirror the edge triple; 3,4,5 the edge-free base triple
        m = ParamModel(theory, range(6), [frozenset({0, 1, 2})])
        template = FormulaTemplate.all_positive(3, 2)
        fam = [
            FormulaInstance(template, (3, 1, 2)),
            FormulaInstance(template, (0, 4, 2)),
            FormulaInstance(template, (0, 1, 5)),
        ]
        for inst in fam:
            assert instance_consistent(m, inst)
        verdict = family_consistent(m, fam, core_bound=3)
        assert not verdict.consistent
        assert len(verdict.core) == 3

    def test_singleton_consistent(self):
        m = rg_model()
        t = FormulaTemplate(1, positive=frozenset({frozenset({0})}))
        verdict = family_consistent(m, [FormulaInstance(t, (0,))], core_bound=2)
        assert verdict.consistent

    def test_no_collision_consistent(self):
        m = rg_model()
        pos = FormulaTemplate(1, positive=frozenset({frozenset({0})}))
        neg = FormulaTemplate(1, negative=frozenset({frozenset({0})}))
        fam = [FormulaInstance(pos, (0,)), FormulaInstance(pos, (1,)), FormulaInstance(neg, (2,))]
        assert family_consistent(m, fam, core_bound=3).consistent

    def test_merge_equals_instance_on_merged(self):
        rng = random.Random(17)
        theory = TheorySpec.generic_hypergraph(3, 2)
        for _ in range(80):
            m = random_model(rng, theory, rng.randint(2, 6))
            fam = [random_instance(rng, m, 3) for _ in range(rng.randint(1, 4))]
            assert family_consistent(m, fam, core_bound=5).consistent == brute_force_consistency_oracle(m, fam)

    def test_cores_are_minimal(self):
        rng = random.Random(23)
        theory = TheorySpec.generic_hypergraph(3, 2)
        found = 0
        for _ in range(200):
            m = random_model(rng, theory, rng.randint(3, 6))
            fam = [random_instance(rng, m, 3) for _ in range(rng.randint(2, 5))]
            verdict = family_consistent(m, fam, core_bound=5)
            if verdict.consistent or verdict.core is None:
                continue
            found += 1
            assert not family_consistent(m, list(verdict.core), core_bound=5).consistent
            for inst in verdict.core:
                rest = [i for i in verdict.core if i is not inst]
                if rest:
                    assert family_consistent(m, rest, core_bound=5).consistent
        assert found >= 5


class TestOracle:
    def test_empty_literals_true(self):
        m = rg_model()
        t = FormulaTemplate(1)
        assert brute_force_consistency_oracle(m, FormulaInstance(t, (0,)))

    def test_size_bound_enforced(self):
        m = ParamModel(TheorySpec.random_graph(), range(12))
        t = FormulaTemplate(1, positive=frozenset({frozenset({0})}))
        with pytest.raises(OracleSizeError):
            brute_force_consistency_oracle(m, FormulaInstance(t, (0,)))


class TestTpSequences:
    def test_bipartite_matching_complement(self):
        model, insts = tp_sequence_triangle_free(2, 4)
        assert len(insts) == 4
        for inst in insts:
            assert instance_consistent(model, inst)
        for a, b in itertools.combinations(insts, 2):
            assert not family_consistent(model, [a, b], core_bound=2).consistent

    def test_single_column_consistent(self):
        model, insts = tp_sequence_triangle_free(2, 1)
        assert len(insts) == 1
        assert instance_consistent(model, insts[0])

    def test_three_rows_oracle_checked(self):
        model, insts = tp_sequence_triangle_free(3, 3)
        for inst in insts:
            assert brute_force_consistency_oracle(m=model, phi_or_family=inst)
        for a, b in itertools.combinations(insts, 2):
            assert not brute_force_consistency_oracle(model, [a, b])

    def test_matches_stated_edge_rule_for_two_rows(self):
        model, _ = tp_sequence_triangle_free(2, 3)
        # cross edges exactly when rows and columns both differ
        def eid(row, col):
            return col * 2 + row
        for (r1, c1), (r2, c2) in itertools.combinations(
            [(r, c) for r in range(2) for c in range(3)], 2
        ):
            expected = r1 != r2 and c1 != c2
            assert model.theory.edge_arity == 2
            assert (frozenset({eid(r1, c1), eid(r2, c2)}) in model.diagram) == expected
