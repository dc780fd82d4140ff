"""Shearing instances, dividing reduction, unsuperstability certificates.

A formula instance shears along an orbit family when the family is
indiscernible over the declared parameter set, the instance at the chosen
index tuple is consistent, and the set of instances over the whole orbit is
jointly contradictory.  Dividing along an order-indiscernible sequence is the
linear special case.  A certificate of unsuperstability chains shearing
instances over growing finite index sets and parameter sets, with the joint
family staying consistent at every stage.

The two constructive witnesses here host the clique-free hypergraph theories:
the single-step tetrahedron-free example, and its general clique-bound
iteration producing arbitrarily many certificate levels.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ._canon import canon_json
from .families import (
    MirrorFamily,
    ParamFamily,
    build_mirror_family,
    check_indiscernible,
)
from .qftypes import qf_type, realizations
from .saturation import PointSpec, SaturationParams, Unrealizable, realize_point
from .structures import (
    KNK,
    LINEAR,
    ClassKind,
    ContextSpec,
    IndexStructure,
    IndexSignature,
    InputError,
    induced_substructure,
    signature_for_kind,
)
from .theories import (
    FamilyVerdict,
    FormulaInstance,
    FormulaTemplate,
    ParamModel,
    TheorySpec,
    family_consistent,
    instance_consistent,
)


class OrbitEmptyError(RuntimeError):
    """No realizations of the orbit type: the extension is too shallow."""


@dataclass(frozen=True)
class ShearingInstance:
    """All data verify_shearing consumes.

    slot_coords names the coordinates of the index tuple feeding the formula
    slots; mirror (when present) allows rebuilding the family after moving to
    other index sets.
    """

    context: ContextSpec
    J: IndexStructure
    I0: frozenset
    I1: frozenset
    sbar0: tuple
    tbar: tuple
    template: FormulaTemplate
    family: ParamFamily
    slot_coords: tuple | None = None
    mirror: MirrorFamily | None = None
    depth: SaturationParams | None = None

    def instance_at(self, index_tuple) -> FormulaInstance:
        return FormulaInstance(self.template, tuple(self.family.assignment[index_tuple]))

    def orbit_instances(self) -> list[FormulaInstance]:
        return [self.instance_at(t) for t in self.family.orbit()]

    def to_json(self):
        return {
            "I0": sorted(self.I0),
            "I1": sorted(self.I1),
            "sbar0": list(self.sbar0),
            "tbar": list(self.tbar),
            "template": self.template.to_json(),
            "J": self.J.to_json(),
        }


@dataclass(frozen=True)
class Shears:
    core: tuple[FormulaInstance, ...]
    depth: SaturationParams | None = None

    @property
    def ok(self):
        return True

    def to_json(self):
        return {
            "verdict": "shears",
            "core": [i.to_json() for i in self.core],
            "depth": self.depth.to_json() if self.depth else None,
        }


@dataclass(frozen=True)
class Fails:
    clause: str
    witness: object = None

    @property
    def ok(self):
        return False

    def to_json(self):
        return {"verdict": "fails", "clause": self.clause, "witness": repr(self.witness)}


def verify_shearing(inst: ShearingInstance, core_bound: int = 8, pair_arity_bound: int = 2):
    """Run the shearing clauses in order; the first violation names its clause.

    clause1: finite nested index sets with matching enumerations;
    clause2: images and declared parameters live in the model;
    clause3: the family is indiscernible over the parameter set;
    clause4: the instance at the chosen tuple is consistent;
    clause5: the orbit family is contradictory.
    """
    base_elems = set(inst.context.base.elements)
    if not (inst.I0 <= inst.I1 <= base_elems):
        return Fails("clause1", (sorted(inst.I0), sorted(inst.I1)))
    if set(inst.sbar0) != set(inst.I0) or set(inst.tbar) != set(inst.I1):
        return Fails("clause1", "enumerations do not list the index sets")
    if any(t not in inst.J for t in inst.tbar):
        return Fails("clause1", "index tuple outside the extension")

    model = inst.family.model
    for v in inst.family.assignment.values():
        if any(e not in model for e in v):
            return Fails("clause2", v)
    if any(e not in model for e in inst.family.base_params):
        return Fails("clause2", "parameter set outside model")

    orbit = inst.family.orbit()
    if not orbit:
        raise OrbitEmptyError("orbit unrealized; saturate more deeply")
    if tuple(inst.tbar) not in inst.family.assignment:
        return Fails("clause1", "chosen tuple not in the orbit")

    indis = check_indiscernible(inst.family, pair_arity_bound)
    if not indis.ok:
        return Fails("clause3", indis.violation)

    if not instance_consistent(model, inst.instance_at(tuple(inst.tbar))):
        return Fails("clause4", "instance at the chosen tuple is inconsistent")

    verdict = family_consistent(model, inst.orbit_instances(), core_bound)
    if verdict.consistent:
        return Fails("clause5", "orbit family is consistent")
    return Shears(core=verdict.core or (), depth=inst.depth)


def transport_instance(inst: ShearingInstance, new_I0, new_I1) -> ShearingInstance:
    """Move a mirror-backed instance to other index sets within the same base.

    Shrinking I0 or growing I1 preserves shearing; enumerations are rebuilt in
    increasing order and the formula keeps feeding from the original slots.
    """
    if inst.mirror is None or inst.slot_coords is None:
        raise InputError("transport requires a mirror-backed instance")
    new_I0, new_I1 = frozenset(new_I0), frozenset(new_I1)
    if not new_I0 <= new_I1:
        raise InputError("need I0 <= I1")
    J = inst.J
    sbar0 = tuple(sorted(new_I0, key=J.rank))
    tbar = tuple(sorted(new_I1, key=J.rank))
    slot_elems = [inst.tbar[c] for c in inst.slot_coords]
    try:
        slot_coords = tuple(tbar.index(e) for e in slot_elems)
    except ValueError:
        raise InputError("grown index set must keep the formula's coordinates")
    family = inst.mirror.family(
        J, sbar0, tbar, slot_coords=slot_coords, base_params=inst.family.base_params
    )
    return ShearingInstance(
        context=inst.context,
        J=J,
        I0=new_I0,
        I1=new_I1,
        sbar0=sbar0,
        tbar=tbar,
        template=inst.template,
        family=family,
        slot_coords=slot_coords,
        mirror=inst.mirror,
        depth=inst.depth,
    )


# -- dividing as the linear special case ---------------------------------------


def verify_dividing_as_shearing(
    context: ContextSpec, family: ParamFamily, template: FormulaTemplate, k: int
):
    """Confirm k-inconsistency along an order-indexed family and wrap it.

    The family must be indexed by a one-element orbit of a linear context.
    Returns (verdict, wrapped_instance_or_None).
    """
    if context.kind.name != LINEAR:
        raise InputError("dividing reduction needs a linear context")
    if family.rtype.arity != 1:
        raise InputError("dividing is indexed by singleton tuples")
    family.validate()
    orbit = family.orbit()
    if len(orbit) < k:
        return Fails("clause5", f"fewer than {k} orbit points"), None

    indis = check_indiscernible(family, 2)
    if not indis.ok:
        return Fails("clause3", indis.violation), None

    instances = {t: FormulaInstance(template, tuple(family.assignment[t])) for t in orbit}
    for t, inst in instances.items():
        if not instance_consistent(family.model, inst):
            return Fails("clause4", t), None

    ordered = sorted(orbit)
    for subset in itertools.combinations(ordered, k):
        verdict = family_consistent(family.model, [instances[t] for t in subset], core_bound=k)
        if verdict.consistent:
            return Fails("clause5", f"consistent {k}-subset {list(subset)}"), None

    t = ordered[0]
    wrapped = ShearingInstance(
        context=context,
        J=family.J,
        I0=frozenset(family.sbar),
        I1=frozenset(family.sbar) | set(t),
        sbar0=tuple(family.sbar),
        tbar=t,
        template=template,
        family=family,
    )
    core_verdict = family_consistent(family.model, list(instances.values()), core_bound=k)
    return Shears(core=core_verdict.core or ()), wrapped


# -- unsuperstability certificates ----------------------------------------------


@dataclass(frozen=True)
class CertLevel:
    enum: tuple                 # enumeration of this level's index set, extending the previous
    params: frozenset           # parameter ids available after this level
    template: FormulaTemplate
    slot_coords: tuple
    param_of: tuple             # ((element, param), ...) mirror map for this level

    def to_json(self):
        return {
            "enum": list(self.enum),
            "params": sorted(self.params),
            "template": self.template.to_json(),
            "slot_coords": list(self.slot_coords),
            "param_of": sorted([e, p] for e, p in self.param_of),
        }


@dataclass(frozen=True)
class UnsuperstabilityCertificate:
    context: ContextSpec
    theory: TheorySpec
    J: IndexStructure
    model: ParamModel
    base_enum: tuple
    base_params: frozenset
    levels: tuple

    def to_json(self):
        return {
            "context": self.context.to_json(),
            "theory": self.theory.to_json(),
            "J": self.J.to_json(),
            "model": self.model.to_json(),
            "base_enum": list(self.base_enum),
            "base_params": sorted(self.base_params),
            "levels": [l.to_json() for l in self.levels],
        }

    @classmethod
    def from_json(cls, d):
        kind_d = d["context"]["kind"]
        kind = ClassKind(
            kind_d["kind"], kind_d.get("color_bound"), kind_d.get("n"), kind_d.get("k")
        )
        context = ContextSpec(kind, IndexStructure.from_json(d["context"]["base"]))
        theory = TheorySpec(d["theory"]["kind"], d["theory"]["n"], d["theory"]["k"])
        J = IndexStructure.from_json(d["J"])
        model = ParamModel(
            theory, d["model"]["elements"], [frozenset(e) for e in d["model"]["diagram"]]
        )
        levels = tuple(
            CertLevel(
                enum=tuple(l["enum"]),
                params=frozenset(l["params"]),
                template=FormulaTemplate.from_json(l["template"]),
                slot_coords=tuple(l["slot_coords"]),
                param_of=tuple((e, p) for e, p in l["param_of"]),
            )
            for l in d["levels"]
        )
        return cls(
            context,
            theory,
            J,
            model,
            tuple(d["base_enum"]),
            frozenset(d["base_params"]),
            levels,
        )


@dataclass(frozen=True)
class CertificateVerdict:
    passed: bool
    failing_level: int | None
    reason: str
    level_verdicts: tuple

    def to_json(self):
        return {
            "passed": self.passed,
            "failing_level": self.failing_level,
            "reason": self.reason,
            "levels": [v.to_json() for v in self.level_verdicts],
        }


def _level_family(cert, m) -> ParamFamily:
    level = cert.levels[m]
    prev_enum = cert.base_enum if m == 0 else cert.levels[m - 1].enum
    prev_params = cert.base_params if m == 0 else cert.levels[m - 1].params
    param_of = dict(level.param_of)
    r = qf_type(level.enum, prev_enum, cert.J)
    assignment = {
        t: tuple(param_of[t[c]] for c in level.slot_coords)
        for t in realizations(cert.J, r, prev_enum)
    }
    return ParamFamily(cert.J, tuple(prev_enum), r, assignment, cert.model, prev_params)


def verify_certificate(cert: UnsuperstabilityCertificate, core_bound: int = 12) -> CertificateVerdict:
    """Chain checks, per-level shearing, and joint consistency of all prefixes."""
    if not cert.levels:
        return CertificateVerdict(False, None, "certificate has no levels", ())
    enums = [cert.base_enum] + [l.enum for l in cert.levels]
    params = [cert.base_params] + [l.params for l in cert.levels]
    for i in range(len(enums) - 1):
        if enums[i + 1][: len(enums[i])] != tuple(enums[i]) or len(enums[i + 1]) <= len(enums[i]):
            return CertificateVerdict(
                False, i + 1, "index enumerations must properly extend each other", ()
            )
    if not cert.base_enum or not cert.base_params:
        return CertificateVerdict(False, 0, "base level must be nonempty", ())
    for i in range(len(params) - 1):
        if not params[i] <= params[i + 1] or not params[i]:
            return CertificateVerdict(
                False, i + 1, "parameter sets must be increasing and nonempty", ()
            )

    level_verdicts = []
    joint: list[FormulaInstance] = []
    for m, level in enumerate(cert.levels):
        family = _level_family(cert, m)
        prev_enum = enums[m]
        inst = ShearingInstance(
            context=cert.context,
            J=cert.J,
            I0=frozenset(prev_enum),
            I1=frozenset(level.enum),
            sbar0=tuple(prev_enum),
            tbar=tuple(level.enum),
            template=level.template,
            family=family,
            slot_coords=level.slot_coords,
            mirror=MirrorFamily(cert.model, dict(level.param_of)),
        )
        verdict = verify_shearing(inst, core_bound=core_bound)
        level_verdicts.append(verdict)
        if not verdict.ok:
            return CertificateVerdict(
                False, m + 1, f"level {m + 1} fails {verdict.clause}", tuple(level_verdicts)
            )
        joint.append(inst.instance_at(tuple(level.enum)))
        joint_verdict = family_consistent(cert.model, joint, core_bound=core_bound)
        if not joint_verdict.consistent:
            return CertificateVerdict(
                False, m + 1, f"joint family inconsistent at level {m + 1}", tuple(level_verdicts)
            )
    return CertificateVerdict(True, None, "all levels shear; joint family consistent", tuple(level_verdicts))


# -- constructive witnesses ------------------------------------------------------


def build_t32_witness(drop_edge: bool = False) -> ShearingInstance:
    """Single shearing instance for the tetrahedron-free 3-hypergraph.

    Four singleton-colored base points; the extension adds one same-colored
    companion beside each of the first three, joined by one hyperedge.  The
    all-positive triangle formula is consistent at the base triple but its
    orbit instances jointly complete the forbidden tetrahedron.  With
    drop_edge the companion edge is omitted and verification fails.
    """
    kind = ClassKind.knk(3, 2)
    colors = ("P0", "P1", "P2", "P3")
    sig = signature_for_kind(kind, colors)
    I = IndexStructure.build(sig, [(i, colors[i]) for i in range(4)])
    context = ContextSpec(kind, I)

    J = I
    v = []
    for i in range(3):
        positive = frozenset({frozenset(v)}) if (i == 2 and not drop_edge) else frozenset()
        result = realize_point(
            J, kind, PointSpec(lower=i, upper=i + 1, color=colors[i], positive=positive)
        )
        if isinstance(result, Unrealizable):
            raise RuntimeError("companion placement cannot be blocked here")
        J, eid = result
        v.append(eid)

    theory = TheorySpec.generic_hypergraph(3, 2)
    model, mirror = build_mirror_family(J, theory)
    tbar = (0, 1, 2)
    family = mirror.family(J, (), tbar, slot_coords=(0, 1, 2))
    return ShearingInstance(
        context=context,
        J=J,
        I0=frozenset(),
        I1=frozenset(tbar),
        sbar0=(),
        tbar=tbar,
        template=FormulaTemplate.all_positive(3, 2),
        family=family,
        slot_coords=(0, 1, 2),
        mirror=mirror,
    )


def build_tnk_certificate(n: int, k: int, levels: int) -> UnsuperstabilityCertificate:
    """Iterate the clique-bound witness step to the requested number of levels.

    Each level appends n fresh singleton-colored points above the current
    fragment and realizes n same-colored companions forming an n-clique in the
    extension, edge-free toward everything older.  Substituting companions
    into the fresh tuple coordinate-wise stays inside the orbit, and the
    all-positive formula over the k-subsets collides on the clique.  Every
    level mirrors the extension into fresh parameters with no relations to
    earlier levels, so the joint family remains consistent.
    """
    if not (n > k >= 2):
        raise InputError("need n > k >= 2")
    if levels < 1:
        raise InputError("need at least one level")

    kind = ClassKind.knk(n, k)
    color_names = ["Q0"] + [f"L{m}c{i}" for m in range(1, levels + 1) for i in range(n)]
    sig = IndexSignature(
        colors=tuple(color_names), edge_arity=k + 1, clique_bound=n + 1
    )
    J = IndexStructure.build(sig, [(0, "Q0")])
    base_enum = (0,)
    index_elems = [0]

    level_data = []
    enum = base_enum
    for m in range(1, levels + 1):
        fresh = []
        for i in range(n):
            eid = J.fresh_id()
            J = J.with_point(eid, J.fresh_position(None, None), f"L{m}c{i}")
            fresh.append(eid)
        index_elems.extend(fresh)
        companions = []
        for i in range(n):
            lower = fresh[i]
            upper = fresh[i + 1] if i + 1 < n else None
            positive = (
                frozenset(frozenset(c) for c in itertools.combinations(companions, k))
                if len(companions) >= k
                else frozenset()
            )
            result = realize_point(
                J, kind, PointSpec(lower=lower, upper=upper, color=f"L{m}c{i}", positive=positive)
            )
            if isinstance(result, Unrealizable):
                raise RuntimeError(f"companion blocked at level {m}: {result.clique}")
            J, eid = result
            companions.append(eid)
        prev_len = len(enum)
        enum = enum + tuple(fresh)
        level_data.append(
            {
                "enum": enum,
                "slot_coords": tuple(range(prev_len, prev_len + n)),
            }
        )

    # one mirror per level: fresh parameter ids, no cross-level relations
    theory = TheorySpec.generic_hypergraph(n, k)
    all_params: list[int] = []
    diagram = []
    cert_levels = []
    base_params = None
    next_param = 0

    def fresh_mirror():
        nonlocal next_param
        param_of = {}
        for e in sorted(J.elements):
            param_of[e] = next_param
            next_param += 1
        for edge in J.edges:
            diagram.append(frozenset(param_of[x] for x in edge))
        all_params.extend(param_of.values())
        return param_of

    base_map = fresh_mirror()
    base_params = frozenset({base_map[0]})
    accumulated = set(base_params)
    for m, data in enumerate(level_data, start=1):
        param_of = fresh_mirror()
        accumulated |= set(param_of.values())
        cert_levels.append(
            CertLevel(
                enum=data["enum"],
                params=frozenset(accumulated),
                template=FormulaTemplate.all_positive(n, k),
                slot_coords=data["slot_coords"],
                param_of=tuple(sorted(param_of.items())),
            )
        )

    model = ParamModel(theory, all_params, diagram)
    fragment = induced_substructure(J, index_elems)
    context = ContextSpec(kind, fragment)
    return UnsuperstabilityCertificate(
        context=context,
        theory=theory,
        J=J,
        model=model,
        base_enum=base_enum,
        base_params=base_params,
        levels=tuple(cert_levels),
    )


# -- bounded search for nontrivial dividing ---------------------------------------


@dataclass(frozen=True)
class SearchBounds:
    max_slots: int = 4
    max_length: int = 5

    def to_json(self):
        return {"max_slots": self.max_slots, "max_length": self.max_length}


@dataclass(frozen=True)
class NoneFound:
    bounds: SearchBounds
    candidates_checked: int

    @property
    def found(self):
        return False

    def to_json(self):
        return {
            "found": False,
            "bounds": self.bounds.to_json(),
            "candidates_checked": self.candidates_checked,
        }


@dataclass(frozen=True)
class DividingCounterexample:
    slots: int
    within_column: tuple       # sorted (k+1)-subsets of slot indices
    cross_pairs: tuple         # (left slot, right slot) pairs, graph regime only
    template: FormulaTemplate
    inconsistency_degree: int
    model: ParamModel
    instances: tuple

    @property
    def found(self):
        return True

    def to_json(self):
        return {
            "found": True,
            "slots": self.slots,
            "within_column": [sorted(s) for s in self.within_column],
            "cross_pairs": [list(p) for p in self.cross_pairs],
            "template": self.template.to_json(),
            "inconsistency_degree": self.inconsistency_degree,
        }


class SearchBudgetError(RuntimeError):
    def __init__(self, estimate):
        self.estimate = estimate
        super().__init__(f"search too large: ~{estimate} candidates")


def _column_model(theory, slots, length, within_column, cross_pairs):
    """Grid parameter model: length columns of `slots` params each, edges from
    the within-column pattern and (graph regime) the ordered cross pattern."""

    def eid(row, col):
        return col * slots + row

    edges = set()
    for col in range(length):
        for sub in within_column:
            edges.add(frozenset(eid(r, col) for r in sub))
    arity = theory.edge_arity
    if arity == 2:
        for i, j in itertools.combinations(range(length), 2):
            for r1, r2 in cross_pairs:
                edges.add(frozenset({eid(r1, i), eid(r2, j)}))
    elements = [eid(r, c) for c in range(length) for r in range(slots)]
    return ParamModel(theory, elements, edges)


def search_trivial_dividing(
    theory: TheorySpec, bounds: SearchBounds = SearchBounds(), step_budget: int = 500_000
):
    """Exhaustive bounded search for nontrivial dividing along column sequences.

    Candidate sequences are grids of parameter columns, order-indiscernible by
    construction: the diagram depends only on the within-column pattern and
    (for binary edges) the ordered cross-column pattern.  Formulas are
    positive conjunctions of atoms inside one column, so equality-driven cores
    cannot arise.  For edge arity above two, cross-column edges can never
    participate in a forced clique whose demanded atoms are single-column, so
    they are not enumerated.  A counterexample is a pattern whose instances
    are individually consistent while every m-subset is jointly inconsistent;
    by column-invariance one m-prefix check decides each m.
    """
    if theory.kind != "GENERIC_HYPERGRAPH":
        raise InputError("the search targets clique-free hypergraph theories")
    k = theory.k
    atom_size = k
    length = bounds.max_length
    steps = 0
    for slots in range(1, bounds.max_slots + 1):
        within_options = list(
            itertools.chain.from_iterable(
                itertools.combinations(itertools.combinations(range(slots), k + 1), r)
                for r in range(len(list(itertools.combinations(range(slots), k + 1))) + 1)
            )
        )
        if k == 1:
            off_diag = [(a, b) for a in range(slots) for b in range(slots) if a != b]
            cross_options = list(
                itertools.chain.from_iterable(
                    itertools.combinations(off_diag, r) for r in range(len(off_diag) + 1)
                )
            )
        else:
            cross_options = [()]
        atom_pool = list(itertools.combinations(range(slots), atom_size))
        template_options = [
            FormulaTemplate(slots, positive=frozenset(frozenset(a) for a in combo))
            for r in range(1, len(atom_pool) + 1)
            for combo in itertools.combinations(atom_pool, r)
        ]
        for within in within_options:
            for cross in cross_options:
                steps += 1
                if steps > step_budget:
                    raise SearchBudgetError(steps)
                try:
                    model = _column_model(theory, slots, length, within, cross)
                except InputError:
                    continue  # pattern not realizable in the theory
                for template in template_options:
                    instances = [
                        FormulaInstance(
                            template, tuple(col * slots + r for r in range(slots))
                        )
                        for col in range(length)
                    ]
                    if not all(instance_consistent(model, i) for i in instances):
                        continue
                    for m in range(2, length + 1):
                        verdict = family_consistent(model, instances[:m], core_bound=m)
                        if not verdict.consistent:
                            return DividingCounterexample(
                                slots=slots,
                                within_column=tuple(within),
                                cross_pairs=tuple(cross),
                                template=template,
                                inconsistency_degree=m,
                                model=model,
                                instances=tuple(instances),
                            )
    return NoneFound(bounds, steps)
