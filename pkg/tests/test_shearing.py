import itertools
import json

import pytest

from shearlab.catalog import linear_context
from shearlab.families import ParamFamily
from shearlab.qftypes import qf_type, realizations
from shearlab.shearing import (
    CertLevel,
    DividingCounterexample,
    Fails,
    SearchBounds,
    Shears,
    ShearingInstance,
    UnsuperstabilityCertificate,
    build_t32_witness,
    build_tnk_certificate,
    search_trivial_dividing,
    transport_instance,
    verify_certificate,
    verify_dividing_as_shearing,
    verify_shearing,
)
from shearlab.structures import IndexStructure, signature_for_kind
from shearlab.theories import (
    FormulaInstance,
    FormulaTemplate,
    ParamModel,
    TheorySpec,
    family_consistent,
    instance_consistent,
    tp_sequence_triangle_free,
)


def linear_family_from_columns(model, instances, length):
    """Wrap a column sequence as an order-indexed family on a fresh chain."""
    ctx = linear_context(length)
    J = ctx.base
    r = qf_type((J.elements[0],), (), J)
    assignment = {
        (e,): instances[i].binding for i, e in enumerate(J.elements)
    }
    fam = ParamFamily(J, (), r, assignment, model)
    return ctx, fam


class TestTriangleWitness:
    def test_shears_with_three_instance_core(self):
        inst = build_t32_witness()
        verdict = verify_shearing(inst, core_bound=4)
        assert isinstance(verdict, Shears)
        assert len(verdict.core) == 3
        # the core instances substitute exactly one base point each
        base_params = {inst.family.assignment[tuple(inst.tbar)][i] for i in range(3)}
        for core_inst in verdict.core:
            assert len(set(core_inst.binding) & base_params) == 1

    def test_instance_at_chosen_tuple_consistent(self):
        inst = build_t32_witness()
        phi = inst.instance_at(tuple(inst.tbar))
        assert instance_consistent(inst.family.model, phi)

    def test_drop_edge_fails_orbit_clause(self):
        verdict = verify_shearing(build_t32_witness(drop_edge=True), core_bound=4)
        assert isinstance(verdict, Fails)
        assert verdict.clause == "clause5"

    def test_inconsistent_instance_fails_clause4(self):
        inst = build_t32_witness()
        template = FormulaTemplate(
            3,
            positive=frozenset({frozenset({0})}) if False else frozenset({frozenset({0, 1})}),
            negative=frozenset({frozenset({0, 1})}),
        )
        bad = ShearingInstance(
            context=inst.context,
            J=inst.J,
            I0=inst.I0,
            I1=inst.I1,
            sbar0=inst.sbar0,
            tbar=inst.tbar,
            template=template,
            family=inst.family,
        )
        verdict = verify_shearing(bad, core_bound=4)
        assert isinstance(verdict, Fails)
        assert verdict.clause == "clause4"

    def test_core_reverifies_minimal(self):
        inst = build_t32_witness()
        verdict = verify_shearing(inst, core_bound=4)
        model = inst.family.model
        assert not family_consistent(model, list(verdict.core), core_bound=4).consistent
        for phi in verdict.core:
            rest = [i for i in verdict.core if i is not phi]
            assert family_consistent(model, rest, core_bound=4).consistent


class TestMonotonicity:
    def test_grow_index_set_preserves_shearing(self):
        inst = build_t32_witness()
        extra = sorted(set(inst.context.base.elements) - inst.I1)
        for e in extra:
            grown = transport_instance(inst, inst.I0, inst.I1 | {e})
            assert verify_shearing(grown, core_bound=4).ok

    def test_shrink_base_set_preserves_shearing(self):
        cert = build_tnk_certificate(3, 2, 1)
        verdict = verify_certificate(cert)
        assert verdict.passed
        # rebuild the level instance and shrink its anchor to the empty set
        from shearlab.shearing import _level_family
        from shearlab.families import MirrorFamily

        level = cert.levels[0]
        inst = ShearingInstance(
            context=cert.context,
            J=cert.J,
            I0=frozenset(cert.base_enum),
            I1=frozenset(level.enum),
            sbar0=tuple(cert.base_enum),
            tbar=tuple(level.enum),
            template=level.template,
            family=_level_family(cert, 0),
            slot_coords=level.slot_coords,
            mirror=MirrorFamily(cert.model, dict(level.param_of)),
        )
        shrunk = transport_instance(inst, frozenset(), inst.I1)
        assert verify_shearing(shrunk, core_bound=6).ok


class TestDividingReduction:
    def test_matching_complement_divides(self):
        model, instances = tp_sequence_triangle_free(2, 5)
        ctx, fam = linear_family_from_columns(model, instances, 5)
        template = instances[0].template
        verdict, wrapped = verify_dividing_as_shearing(ctx, fam, template, k=2)
        assert verdict.ok
        assert wrapped is not None
        assert verify_shearing(wrapped, core_bound=2).ok

    def test_constant_family_fails(self):
        model, instances = tp_sequence_triangle_free(2, 4)
        ctx = linear_context(4)
        J = ctx.base
        r = qf_type((J.elements[0],), (), J)
        assignment = {(e,): instances[0].binding for e in J.elements}
        fam = ParamFamily(J, (), r, assignment, model)
        verdict, wrapped = verify_dividing_as_shearing(ctx, fam, instances[0].template, k=2)
        assert not verdict.ok

    def test_non_linear_context_rejected(self):
        from shearlab.catalog import cnk_context
        from shearlab.structures import InputError

        model, instances = tp_sequence_triangle_free(2, 4)
        ctx, fam = linear_family_from_columns(model, instances, 4)
        with pytest.raises(InputError):
            verify_dividing_as_shearing(cnk_context(3, 2), fam, instances[0].template, k=2)


class TestCertificates:
    @pytest.mark.parametrize("n,k,levels", [(3, 2, 1), (3, 2, 2), (4, 2, 1)])
    def test_built_certificates_verify(self, n, k, levels):
        cert = build_tnk_certificate(n, k, levels)
        verdict = verify_certificate(cert, core_bound=12)
        assert verdict.passed
        for lv in verdict.level_verdicts:
            assert len(lv.core) == len(list(itertools.combinations(range(n), k)))

    def test_level_cores_reverify_minimal(self):
        cert = build_tnk_certificate(3, 2, 2)
        verdict = verify_certificate(cert, core_bound=12)
        for lv in verdict.level_verdicts:
            assert not family_consistent(cert.model, list(lv.core), core_bound=12).consistent
            for phi in lv.core:
                rest = [i for i in lv.core if i is not phi]
                assert family_consistent(cert.model, rest, core_bound=12).consistent

    def test_nonincreasing_params_fail_structurally(self):
        cert = build_tnk_certificate(3, 2, 2)
        levels = list(cert.levels)
        levels[1] = CertLevel(
            enum=levels[1].enum,
            params=frozenset(),  # not increasing, not even nonempty
            template=levels[1].template,
            slot_coords=levels[1].slot_coords,
            param_of=levels[1].param_of,
        )
        broken = UnsuperstabilityCertificate(
            context=cert.context,
            theory=cert.theory,
            J=cert.J,
            model=cert.model,
            base_enum=cert.base_enum,
            base_params=cert.base_params,
            levels=tuple(levels),
        )
        verdict = verify_certificate(broken)
        assert not verdict.passed
        assert "increasing" in verdict.reason

    def test_json_roundtrip_lossless(self):
        cert = build_tnk_certificate(3, 2, 2)
        blob = json.dumps(cert.to_json(), sort_keys=True)
        restored = UnsuperstabilityCertificate.from_json(json.loads(blob))
        assert json.dumps(restored.to_json(), sort_keys=True) == blob
        assert verify_certificate(restored).passed

    def test_single_step_matches_certificate_level_shape(self):
        # the single witness and the first certificate level share the same
        # template and core pattern: one substituted companion set, all slot
        # subsets demanded
        inst = build_t32_witness()
        cert = build_tnk_certificate(3, 2, 1)
        level = cert.levels[0]
        assert inst.template.to_json() == level.template.to_json()
        v1 = verify_shearing(inst, core_bound=4)
        v2 = verify_certificate(cert, core_bound=4)
        assert len(v1.core) == len(v2.level_verdicts[0].core) == 3


class TestTrivialDividingSearch:
    def test_simple_regime_none(self):
        result = search_trivial_dividing(TheorySpec.generic_hypergraph(3, 2), SearchBounds(4, 5))
        assert not result.found

    def test_graph_regime_counterexample(self):
        result = search_trivial_dividing(TheorySpec.forbidden_clique_graph(3), SearchBounds(4, 5))
        assert isinstance(result, DividingCounterexample)
        # the found sequence re-verifies: individually consistent, m-subsets not
        for inst in result.instances:
            assert instance_consistent(result.model, inst)
        m = result.inconsistency_degree
        prefix = list(result.instances[:m])
        assert not family_consistent(result.model, prefix, core_bound=m).consistent
        assert family_consistent(result.model, prefix[:-1], core_bound=m).consistent
        # edge-free columns and positive single-vertex demands: the grid shape
        assert result.within_column == ()
        assert all(len(a) == 1 for a in result.template.positive)

    def test_zero_parameter_formula_cannot_divide(self):
        result = search_trivial_dividing(TheorySpec.generic_hypergraph(3, 2), SearchBounds(1, 3))
        assert not result.found
