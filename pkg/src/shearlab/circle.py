"""The circle property: invariant equivalence relations with a fixed-point-free
matching on a type orbit, and its two-way correspondence with random-graph
shearing.

A witness consists of two equivalence relations E1, E2 on an orbit, each a
union of realized pair types, together with a further union of pair types F
that induces a nonempty one-to-one partial function between the quotients and
holds on no pair (t, t).  Such a witness converts into a two-parameter
random-graph formula shearing along the orbit (one function symbol per
quotient class, matched classes sharing their value), and conversely any
random-graph shearing collision yields a witness by reading coordinate
equalities off the family.

The search enumerates invariant equivalence relations as a join lattice
(transitive closure of a symmetric invariant relation is its connectivity
partition, recomputed until the partition is again a union of types), then
scans candidate F relations component by component.  Because a finite
fragment can realize a pair type exactly once and make single-valuedness hold
vacuously, a candidate F is additionally required to exhibit its function
property non-vacuously wherever a coordinate is not pinned by an equality
collapse; this is the finite-depth reading of quantifying over all saturated
extensions, and every verdict carries its depth parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._canon import canon_json
from .qftypes import PairQfType, QfType, pair_qf_type, qf_type, realizations
from .saturation import SaturationParams, saturate
from .structures import ContextSpec, IndexStructure, InputError, increasing_tuples


class BudgetExceeded(RuntimeError):
    def __init__(self, counts):
        self.counts = counts
        super().__init__(f"search budget exceeded: {counts}")


class OrbitEmpty(RuntimeError):
    """Orbit unrealized: the extension is too shallow for this candidate."""


@dataclass(frozen=True)
class CircleWitness:
    J: IndexStructure
    sbar: tuple
    tbar: tuple
    rtype: QfType
    E1: frozenset  # frozenset[PairQfType]
    E2: frozenset
    F: frozenset
    depth: SaturationParams | None = None

    def to_json(self):
        return {
            "sbar": list(self.sbar),
            "tbar": list(self.tbar),
            "rtype": self.rtype.to_json(),
            "E1": sorted(p.serialize() for p in self.E1),
            "E2": sorted(p.serialize() for p in self.E2),
            "F": sorted(p.serialize() for p in self.F),
            "depth": self.depth.to_json() if self.depth else None,
        }


@dataclass(frozen=True)
class WitnessVerdict:
    ok: bool
    clause: str | None = None
    witness_pair: tuple | None = None

    def to_json(self):
        return {
            "ok": self.ok,
            "clause": self.clause,
            "witness_pair": None
            if self.witness_pair is None
            else [list(t) for t in self.witness_pair],
        }


@dataclass(frozen=True)
class NoWitness:
    bounds: dict
    counts: dict

    def to_json(self):
        return {"witness": None, "bounds": self.bounds, "counts": self.counts}


# -- orbit pair-type machinery ----------------------------------------------------


class OrbitAnalysis:
    """Pair types of an orbit as a dense integer matrix, plus helpers.

    T[i, j] is the type id of the pair (orbit[i], orbit[j]); representatives
    convert ids back into full PairQfType values on demand.
    """

    def __init__(self, J: IndexStructure, sbar, orbit, max_orbit=1500, max_types=512):
        if not orbit:
            raise OrbitEmpty("empty orbit")
        if len(orbit) > max_orbit:
            raise BudgetExceeded({"orbit": len(orbit), "max_orbit": max_orbit})
        self.J = J
        self.sbar = tuple(sbar)
        self.orbit = list(orbit)
        self.n = len(orbit)
        self.arity = len(orbit[0])
        self._build_type_matrix(max_types)

    def _build_type_matrix(self, max_types):
        J, orbit, arity = self.J, self.orbit, self.arity
        n = self.n
        ranks = np.array([[J.rank(e) for e in t] for t in orbit], dtype=np.int32)
        feats = []
        for a in range(arity):
            col_a = ranks[:, a][:, None]
            for b in range(arity):
                col_b = ranks[:, b][None, :]
                feats.append(np.sign(col_a - col_b).astype(np.int8) + 1)
        if J.signature.edge_arity is not None and J.edges:
            feats.extend(self._edge_features())
        stack = np.stack([f.reshape(-1) for f in feats], axis=1)
        _, inverse = np.unique(stack, axis=0, return_inverse=True)
        T = inverse.reshape(n, n).astype(np.int32)
        count = int(T.max()) + 1
        if count > max_types:
            raise BudgetExceeded({"types": count, "max_types": max_types})
        # representative pair per raw id
        flat = T.reshape(-1)
        first = np.full(count, -1, dtype=np.int64)
        order = np.argsort(flat, kind="stable")
        seen_ids, first_pos = np.unique(flat[order], return_index=True)
        first[seen_ids] = order[first_pos]
        reps = [(int(p) // n, int(p) % n) for p in first]
        # renumber ids by canonical serialization, so enumeration order is
        # implementation independent
        serialized = [
            pair_qf_type(orbit[i], orbit[j], self.sbar, J).serialize() for i, j in reps
        ]
        by_serial = sorted(range(count), key=lambda t: serialized[t])
        remap = np.empty(count, dtype=np.int32)
        for new_id, old_id in enumerate(by_serial):
            remap[old_id] = new_id
        self.T = remap[T]
        self.type_count = count
        self.rep = [reps[old_id] for old_id in by_serial]
        self.diag_id = int(self.T[0, 0])
        if not (self.T.diagonal() == self.diag_id).all():
            raise RuntimeError("diagonal pairs must share one type")

    def _edge_features(self):
        J, orbit, arity, n = self.J, self.orbit, self.arity, self.n
        k1 = J.signature.edge_arity
        elems = {e: i for i, e in enumerate(sorted(J.elements))}
        size = len(elems)
        edge_lookup = np.zeros((size,) * k1, dtype=bool)
        for edge in J.edges:
            for perm in itertools.permutations([elems[x] for x in edge]):
                edge_lookup[perm] = True
        ids = np.array([[elems[e] for e in t] for t in orbit], dtype=np.int32)
        base_ids = [elems[s] for s in self.sbar]
        feats = []
        # subsets drawing from both tuples (and optionally the base)
        pools = [("x", a) for a in range(arity)] + [("y", b) for b in range(arity)] + [
            ("s", i) for i in range(len(base_ids))
        ]
        for combo in itertools.combinations(pools, k1):
            kinds = [c[0] for c in combo]
            if "x" not in kinds or "y" not in kinds:
                continue
            index = []
            for kind_tag, idx in combo:
                if kind_tag == "x":
                    index.append(ids[:, idx][:, None])
                elif kind_tag == "y":
                    index.append(ids[:, idx][None, :])
                else:
                    index.append(np.full((1, 1), base_ids[idx], dtype=np.int32))
            grid = np.broadcast_arrays(*index)
            feats.append(edge_lookup[tuple(g.reshape(-1) for g in grid)].reshape(n, n).astype(np.int8))
        return feats

    # -- relations as type-id sets -------------------------------------------

    def mask(self, type_ids) -> np.ndarray:
        return np.isin(self.T, np.fromiter(type_ids, dtype=np.int32, count=len(type_ids)))

    def closure(self, type_ids) -> frozenset:
        """Smallest invariant equivalence relation containing the given types.

        Symmetric-reflexive invariant relations close under transitivity via
        connectivity; the partition may realize new types inside blocks, so
        the loop runs until the type set is stable.
        """
        current = frozenset(type_ids) | {self.diag_id}
        while True:
            m = self.mask(current)
            m = m | m.T
            n_comp, labels = connected_components(csr_matrix(m), directed=False)
            same = labels[:, None] == labels[None, :]
            new = frozenset(np.unique(self.T[same]).tolist())
            if new == current:
                return current
            current = new

    def labels_for(self, type_ids) -> np.ndarray:
        m = self.mask(type_ids)
        _, labels = connected_components(csr_matrix(m | m.T), directed=False)
        return labels

    def equivalence_relations(self, max_relations=64) -> list[frozenset]:
        """Every invariant equivalence relation on the orbit, as the join
        lattice generated by single-type closures; deterministic order."""
        identity = self.closure(frozenset())
        atoms = []
        seen = {identity}
        for t in range(self.type_count):
            if t == self.diag_id:
                continue
            a = self.closure({t})
            if a not in seen:
                seen.add(a)
                atoms.append(a)
        relations = {identity} | set(atoms)
        frontier = [identity] + atoms
        while frontier:
            if len(relations) > max_relations:
                raise BudgetExceeded({"equivalence_relations": len(relations)})
            er = frontier.pop(0)
            for a in atoms:
                if a <= er:
                    continue
                joined = self.closure(er | a)
                if joined not in relations:
                    relations.add(joined)
                    frontier.append(joined)
        return sorted(relations, key=lambda s: (len(s), sorted(s)))

    def pair_type_of(self, type_id) -> PairQfType:
        i, j = self.rep[type_id]
        return pair_qf_type(self.orbit[i], self.orbit[j], self.sbar, self.J)

    def pinned_coords(self, type_id):
        """(first-tuple pinned coords, second-tuple pinned coords) of a type.

        A coordinate is pinned when its element also occurs in the other tuple
        or the base; only pinned coordinates survive deepening uniquely."""
        i, j = self.rep[type_id]
        u, v = self.orbit[i], self.orbit[j]
        anchor_u = set(v) | set(self.sbar)
        anchor_v = set(u) | set(self.sbar)
        first = frozenset(c for c in range(self.arity) if u[c] in anchor_u)
        second = frozenset(c for c in range(self.arity) if v[c] in anchor_v)
        return first, second


def _admissible_components(oa: OrbitAnalysis, labels1, labels2):
    """Candidate F relations for one (E1, E2) pair, in deterministic order.

    The join of same-type and same-class-pair reachability partitions the
    orbit square; a union of parts is a quotient function exactly when each
    part is, so single parts suffice.  A part qualifies when its class pairs
    are single-valued and injective, it avoids the diagonal type, and its
    function property is witnessed non-vacuously at every unpinned coordinate.
    """
    n = oa.n
    k2 = int(labels2.max()) + 1
    cp = labels1[:, None].astype(np.int64) * k2 + labels2[None, :].astype(np.int64)
    pairs = np.stack([oa.T.reshape(-1), cp.reshape(-1)], axis=1)
    edges = np.unique(pairs, axis=0)

    # union-find over type nodes and class-pair nodes
    parent: dict = {}

    def find(x):
        root = x
        while parent.get(root, root) != root:
            root = parent[root]
        while parent.get(x, x) != x:
            parent[x], x = root, parent[x]
        return root

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for tid, cpid in edges:
        union(("t", int(tid)), ("c", int(cpid)))

    comp_types: dict = {}
    comp_cps: dict = {}
    for tid, cpid in edges:
        root = find(("t", int(tid)))
        comp_types.setdefault(root, set()).add(int(tid))
        comp_cps.setdefault(root, set()).add(int(cpid))

    out = []
    for root in sorted(comp_types, key=lambda r: min(comp_types[r])):
        types = comp_types[root]
        if oa.diag_id in types:
            continue
        cps = comp_cps[root]
        c1s = [c // k2 for c in cps]
        c2s = [c % k2 for c in cps]
        if len(set(c1s)) != len(cps) or len(set(c2s)) != len(cps):
            continue  # not single-valued / not injective on quotients
        if not _nonvacuous(oa, types, labels1, labels2):
            continue
        out.append(frozenset(types))
    return out


def _nonvacuous(oa: OrbitAnalysis, types, labels1, labels2) -> bool:
    """Unpinned coordinates must show a realized fan that the relation absorbs.

    For a type with an unpinned second-tuple coordinate, some first tuple must
    have two realized partners (all partners then lie in one class by the
    single-valuedness already established); symmetrically on the left.
    """
    for tid in sorted(types):
        first_pins, second_pins = oa.pinned_coords(tid)
        m = oa.T == tid
        if len(second_pins) < oa.arity:
            if not (m.sum(axis=1) >= 2).any():
                return False
        if len(first_pins) < oa.arity:
            if not (m.sum(axis=0) >= 2).any():
                return False
    return True


# -- public operations -------------------------------------------------------------


def check_circle_witness(w: CircleWitness, max_orbit=1500) -> WitnessVerdict:
    """Validate the three witness clauses by enumeration over the orbit."""
    orbit = realizations(w.J, w.rtype, w.sbar)
    if not orbit:
        raise OrbitEmpty("witness orbit unrealized; saturate more deeply")
    oa = OrbitAnalysis(w.J, w.sbar, orbit, max_orbit=max_orbit)

    def ids_of(type_set):
        keys = {p.serialize() for p in type_set}
        out = set()
        for tid in range(oa.type_count):
            if oa.pair_type_of(tid).serialize() in keys:
                out.add(tid)
        return out

    for name, rel in (("E1", w.E1), ("E2", w.E2)):
        ids = ids_of(rel)
        m = oa.mask(ids)
        if not m.diagonal().all():
            return WitnessVerdict(False, f"{name}: not reflexive")
        if not (m == m.T).all():
            return WitnessVerdict(False, f"{name}: not symmetric")
        closure2 = (m.astype(np.uint8) @ m.astype(np.uint8)) > 0
        if (closure2 & ~m).any():
            i, k = np.argwhere(closure2 & ~m)[0]
            return WitnessVerdict(False, f"{name}: not transitive", (orbit[i], orbit[k]))

    labels1 = oa.labels_for(ids_of(w.E1))
    labels2 = oa.labels_for(ids_of(w.E2))
    f_ids = ids_of(w.F)
    fm = oa.mask(f_ids)
    if not fm.any():
        return WitnessVerdict(False, "F: empty")
    if fm.diagonal().any():
        i = int(np.argwhere(fm.diagonal())[0][0])
        return WitnessVerdict(False, "F: fixed point", (orbit[i], orbit[i]))
    k2 = int(labels2.max()) + 1
    cp = labels1[:, None].astype(np.int64) * k2 + labels2[None, :].astype(np.int64)
    f_cps = np.unique(cp[fm])
    # class-pair invariance: F must not split any class pair
    for c in f_cps.tolist():
        block = cp == c
        if (fm[block] != fm[block][0]).any():
            return WitnessVerdict(False, "F: not a union of class pairs")
    c1s = (f_cps // k2).tolist()
    c2s = (f_cps % k2).tolist()
    if len(set(c1s)) != len(c1s):
        return WitnessVerdict(False, "F: not injective on quotients")
    if len(set(c2s)) != len(c2s):
        return WitnessVerdict(False, "F: not single-valued on quotients")
    return WitnessVerdict(True)


def f_totality_report(w: CircleWitness) -> dict:
    """Whether every realized quotient class on the left is matched by F."""
    orbit = realizations(w.J, w.rtype, w.sbar)
    oa = OrbitAnalysis(w.J, w.sbar, orbit)
    keys1 = {p.serialize() for p in w.E1}
    keysf = {p.serialize() for p in w.F}
    ids1 = {t for t in range(oa.type_count) if oa.pair_type_of(t).serialize() in keys1}
    idsf = {t for t in range(oa.type_count) if oa.pair_type_of(t).serialize() in keysf}
    labels1 = oa.labels_for(ids1)
    fm = oa.mask(idsf)
    matched = set(labels1[np.argwhere(fm.any(axis=1)).reshape(-1)].tolist())
    all_classes = set(labels1.tolist())
    return {
        "total": matched == all_classes,
        "unmatched_classes": len(all_classes - matched),
        "classes": len(all_classes),
    }


def search_circle(
    ctx: ContextSpec,
    I0,
    max_I1: int,
    params: SaturationParams = SaturationParams(),
    max_orbit: int = 1500,
    max_relations: int = 64,
):
    """First witness over the saturated extension within the bounds, or None.

    Candidate index tuples run over increasing tuples of the context base
    containing I0, smallest first; relations are enumerated equivalence
    closure first, then the injective-matching and fixed-point filters.
    """
    I0 = frozenset(I0)
    base = ctx.base
    if not I0 <= set(base.elements):
        raise InputError("I0 must lie inside the context base")
    J = saturate(base, ctx.kind, params)
    sbar = tuple(sorted(I0, key=base.rank))

    counts = {"candidates": 0, "relation_pairs": 0}
    for size in range(max(1, len(I0)), max_I1 + 1):
        for tbar in increasing_tuples(base, size):
            if not I0 <= set(tbar):
                continue
            counts["candidates"] += 1
            r = qf_type(tbar, sbar, J)
            orbit = realizations(J, r, sbar)
            if not orbit:
                continue
            oa = OrbitAnalysis(J, sbar, orbit, max_orbit=max_orbit)
            relations = oa.equivalence_relations(max_relations=max_relations)
            label_cache = {rel: oa.labels_for(rel) for rel in relations}
            for e1 in relations:
                for e2 in relations:
                    counts["relation_pairs"] += 1
                    comps = _admissible_components(oa, label_cache[e1], label_cache[e2])
                    if comps:
                        f_ids = comps[0]
                        witness = CircleWitness(
                            J=J,
                            sbar=sbar,
                            tbar=tbar,
                            rtype=r,
                            E1=frozenset(oa.pair_type_of(t) for t in sorted(e1)),
                            E2=frozenset(oa.pair_type_of(t) for t in sorted(e2)),
                            F=frozenset(oa.pair_type_of(t) for t in sorted(f_ids)),
                            depth=params,
                        )
                        return witness
    return NoWitness(
        bounds={"max_I1": max_I1, "I0": sorted(I0), "saturation": params.to_json()},
        counts=counts,
    )


# -- translations -------------------------------------------------------------------


def circle_to_shearing(w: CircleWitness):
    """Build the two-parameter random-graph instance a witness induces.

    One parameter per E1 class and per E2 class, classes matched by F sharing
    one parameter; the formula demands the first positively and the second
    negatively.  The resulting instance shears: its orbit family collides on
    every matched class pair.
    """
    from .shearing import ShearingInstance
    from .structures import ClassKind, ContextSpec
    from .theories import FormulaTemplate, ParamModel, TheorySpec

    verdict = check_circle_witness(w)
    if not verdict.ok:
        raise InputError(f"witness does not verify: {verdict.clause}")
    orbit = realizations(w.J, w.rtype, w.sbar)
    oa = OrbitAnalysis(w.J, w.sbar, orbit)
    keys = lambda rel: {p.serialize() for p in rel}
    ids_of = lambda ks: {t for t in range(oa.type_count) if oa.pair_type_of(t).serialize() in ks}
    labels1 = oa.labels_for(ids_of(keys(w.E1)))
    labels2 = oa.labels_for(ids_of(keys(w.E2)))
    fm = oa.mask(ids_of(keys(w.F)))
    k2 = int(labels2.max()) + 1
    f_cps = np.unique(
        (labels1[:, None].astype(np.int64) * k2 + labels2[None, :].astype(np.int64))[fm]
    )
    matched = {int(c // k2): int(c % k2) for c in f_cps.tolist()}

    param_of_c1: dict = {}
    param_of_c2: dict = {}
    next_param = 0
    for c1 in sorted(set(labels1.tolist())):
        if c1 in matched:
            continue
        param_of_c1[c1] = next_param
        next_param += 1
    for c2 in sorted(set(labels2.tolist())):
        param_of_c2[c2] = next_param
        next_param += 1
    for c1, c2 in sorted(matched.items()):
        param_of_c1[c1] = param_of_c2[c2]

    theory = TheorySpec.random_graph()
    model = ParamModel(theory, sorted(set(param_of_c1.values()) | set(param_of_c2.values())))
    assignment = {
        t: (param_of_c1[int(labels1[i])], param_of_c2[int(labels2[i])])
        for i, t in enumerate(orbit)
    }
    from .families import ParamFamily

    family = ParamFamily(w.J, w.sbar, w.rtype, assignment, model, frozenset())
    template = FormulaTemplate(
        slots=2, positive=frozenset({frozenset({0})}), negative=frozenset({frozenset({1})})
    )
    return ShearingInstance(
        context=ContextSpec(_kind_from_signature(w.J), _base_fragment(w)),
        J=w.J,
        I0=frozenset(w.sbar),
        I1=frozenset(w.tbar),
        sbar0=w.sbar,
        tbar=w.tbar,
        template=template,
        family=family,
        depth=w.depth,
    )


def _kind_from_signature(J: IndexStructure):
    from .structures import ClassKind

    sig = J.signature
    if sig.has_meet:
        return ClassKind.tree_branch()
    if sig.edge_arity is not None:
        return ClassKind.knk(sig.clique_bound - 1, sig.edge_arity - 1)
    if len(sig.colors) > 1:
        return ClassKind.kmu()
    return ClassKind.linear()


def _base_fragment(w: CircleWitness):
    from .structures import induced_substructure

    return induced_substructure(w.J, set(w.sbar) | set(w.tbar))


def extract_circle(inst, collision) -> CircleWitness:
    """Read a witness off a shearing instance from one collision.

    collision = (first tuple, second tuple, i, j) where image coordinate i of
    the first equals image coordinate j of the second; i must be a positive
    formula coordinate and j a negative one.
    """
    from .families import extract_equality_pattern

    t_a, t_b, i, j = collision
    pos_coords = {next(iter(a)) for a in inst.template.positive if len(a) == 1}
    neg_coords = {next(iter(a)) for a in inst.template.negative if len(a) == 1}
    if i not in pos_coords:
        raise InputError(f"coordinate {i} is not a positive formula coordinate")
    if j not in neg_coords:
        raise InputError(f"coordinate {j} is not a negative formula coordinate")

    pattern = extract_equality_pattern(inst.family)
    p = pair_qf_type(t_a, t_b, inst.sbar0, inst.J)
    eq = pattern.get(p)
    if eq is None or (i, j) not in eq:
        raise InputError("collision is not entailed by the family's equality pattern")

    E1, E2, F = set(), set(), set()
    for ptype, eqs in pattern.entries:
        if (i, i) in eqs:
            E1.add(ptype)
        if (j, j) in eqs:
            E2.add(ptype)
        if (i, j) in eqs:
            F.add(ptype)
    return CircleWitness(
        J=inst.J,
        sbar=tuple(inst.sbar0),
        tbar=tuple(inst.tbar),
        rtype=inst.family.rtype,
        E1=frozenset(E1),
        E2=frozenset(E2),
        F=frozenset(F),
        depth=inst.depth,
    )


def canonical_collision(inst):
    """First realized collision of a circle-shaped instance, canonical order."""
    orbit = inst.family.orbit()
    for t_a in orbit:
        for t_b in orbit:
            img_a, img_b = inst.family.assignment[t_a], inst.family.assignment[t_b]
            if img_a[0] == img_b[1] and t_a != t_b:
                return (t_a, t_b, 0, 1)
    raise InputError("instance has no realized collision")
