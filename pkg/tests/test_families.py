import itertools
import random

import pytest

from shearlab.families import (
    EqualityPattern,
    ParamFamily,
    PatternDisagreement,
    atomic_type,
    build_mirror_family,
    check_indiscernible,
    extract_equality_pattern,
    pattern_coherent,
)
from shearlab.qftypes import pair_qf_type, qf_type, realizations
from shearlab.saturation import PointSpec, SaturationParams, realize_point, saturate
from shearlab.structures import ClassKind, IndexStructure, increasing_tuples, signature_for_kind
from shearlab.theories import ParamModel, TheorySpec


def small_cnk_extension():
    """Three singleton-colored points plus one same-colored companion each,
    companions joined by one hyperedge."""
    kind = ClassKind.knk(3, 2)
    colors = ("P0", "P1", "P2")
    sig = signature_for_kind(kind, colors)
    J = IndexStructure.build(sig, [(i, colors[i]) for i in range(3)])
    companions = []
    for i in range(3):
        positive = frozenset({frozenset(companions)}) if i == 2 else frozenset()
        J, eid = realize_point(J, kind, PointSpec(i, i + 1 if i < 2 else None, colors[i], positive))
        companions.append(eid)
    return kind, J, companions


class TestMirrorFamily:
    def test_mirror_reflects_edges(self):
        kind, J, comp = small_cnk_extension()
        theory = TheorySpec.generic_hypergraph(3, 2)
        model, mirror = build_mirror_family(J, theory)
        assert len(model.diagram) == len(J.edges) == 1
        edge = next(iter(model.diagram))
        assert edge == frozenset(mirror.param_of[v] for v in comp)

    def test_edge_free_structure_gives_edge_free_model(self):
        kind = ClassKind.knk(3, 2)
        sig = signature_for_kind(kind, ("P0", "P1"))
        J = IndexStructure.build(sig, [(0, "P0"), (1, "P1")])
        model, mirror = build_mirror_family(J, TheorySpec.generic_hypergraph(3, 2))
        assert not model.diagram

    def test_mirror_indiscernible_at_pair_bound(self):
        kind, J, _ = small_cnk_extension()
        model, mirror = build_mirror_family(J, TheorySpec.generic_hypergraph(3, 2))
        fam = mirror.family(J, (), (0, 1, 2))
        assert check_indiscernible(fam, 2).ok

    def test_constant_family_indiscernible(self):
        kind, J, _ = small_cnk_extension()
        model = ParamModel(TheorySpec.random_graph(), [0])
        r = qf_type((0, 1, 2), (), J)
        assignment = {t: (0, 0) for t in realizations(J, r, ())}
        fam = ParamFamily(J, (), r, assignment, model)
        assert check_indiscernible(fam, 2).ok

    def test_family_breaking_edge_counts_fails(self):
        kind, J, comp = small_cnk_extension()
        theory = TheorySpec.generic_hypergraph(3, 2)
        model, mirror = build_mirror_family(J, theory)
        fam = mirror.family(J, (), (0, 1, 2))
        # send one orbit tuple somewhere with different incidences
        broken = dict(fam.assignment)
        orbit = fam.orbit()
        edge_params = tuple(sorted(next(iter(model.diagram))))
        other = next(t for t in orbit if broken[t] != edge_params)
        broken[other] = edge_params
        bad = ParamFamily(J, (), fam.rtype, broken, model)
        assert not check_indiscernible(bad, 2).ok


class TestEqualityPattern:
    def test_mirror_pattern_equalities_match_shared_elements(self):
        kind, J, _ = small_cnk_extension()
        model, mirror = build_mirror_family(J, TheorySpec.generic_hypergraph(3, 2))
        fam = mirror.family(J, (), (0, 1, 2))
        pattern = extract_equality_pattern(fam)
        orbit = fam.orbit()
        for t1 in orbit:
            for t2 in orbit:
                p = pair_qf_type(t1, t2, (), J)
                expected = frozenset(
                    (i, j) for i in range(3) for j in range(3) if t1[i] == t2[j]
                )
                assert pattern.get(p) == expected

    def test_disjoint_images_only_diagonal(self):
        kind, J, _ = small_cnk_extension()
        r = qf_type((0, 1, 2), (), J)
        orbit = realizations(J, r, ())
        model = ParamModel(TheorySpec.random_graph(), range(2 * len(orbit)))
        assignment = {t: (2 * i, 2 * i + 1) for i, t in enumerate(sorted(orbit))}
        fam = ParamFamily(J, (), r, assignment, model)
        pattern = extract_equality_pattern(fam)
        for p, eq in pattern.entries:
            if p.cross_equalities() or p.qf.order_pattern[:3] == p.qf.order_pattern[3:6]:
                continue
            assert eq == frozenset()

    def test_disagreement_detected(self):
        kind, J, _ = small_cnk_extension()
        r = qf_type((0, 1, 2), (), J)
        orbit = sorted(realizations(J, r, ()))
        # two tuples share elements yet get unrelated images; another pair of
        # the same pair type keeps mirrored images: disagreement
        model = ParamModel(TheorySpec.random_graph(), range(100))
        assignment = {}
        for i, t in enumerate(orbit):
            assignment[t] = (t[0], t[1])
        # break one entry
        assignment[orbit[0]] = (90, 91)
        fam = ParamFamily(J, (), r, assignment, model)
        with pytest.raises(PatternDisagreement):
            extract_equality_pattern(fam)

    def test_pattern_coherence(self):
        kind, J, _ = small_cnk_extension()
        model, mirror = build_mirror_family(J, TheorySpec.generic_hypergraph(3, 2))
        fam = mirror.family(J, (), (0, 1, 2))
        pattern = extract_equality_pattern(fam)
        assert pattern_coherent(pattern, fam)


class TestAtomicType:
    def test_equality_and_incidence_sensitivity(self):
        theory = TheorySpec.generic_hypergraph(3, 2)
        m = ParamModel(theory, range(4), [frozenset({0, 1, 2})])
        assert atomic_type(m, (0, 1, 2), ()) != atomic_type(m, (0, 1, 3), ())
        assert atomic_type(m, (0, 0), ()) != atomic_type(m, (0, 1), ())
        assert atomic_type(m, (1, 2), (0,)) == atomic_type(m, (1, 2), (0,))
