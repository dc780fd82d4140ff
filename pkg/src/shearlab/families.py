"""Parameter families indexed by a type orbit, and their equality summaries.

A family assigns to every orbit tuple (realizations of one type over a base
tuple) a parameter tuple of constant length in one model.  The family is
indiscernible over a parameter set A when equal concatenated index types force
equal atomic diagrams of the concatenated images over A.  The equality
pattern of an indiscernible family summarizes, per pair type, exactly which
image coordinates coincide; by indiscernibility this is well defined.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ._canon import canon_json
from .qftypes import PairQfType, QfType, pair_qf_type, qf_type, realizations
from .structures import IndexStructure, InputError
from .theories import ParamModel, TheorySpec


def atomic_type(model: ParamModel, tup, base) -> str:
    """Canonical atomic diagram of a tuple over base elements: equality
    collapses plus edge incidences, serialized."""
    combined = tuple(tup) + tuple(base)
    first_at = {}
    for i, e in enumerate(combined):
        first_at.setdefault(e, i)
    collapse = tuple(first_at[e] for e in combined)
    arity = model.theory.edge_arity
    inc = []
    for sub in itertools.combinations(range(len(combined)), arity):
        elems = {combined[i] for i in sub}
        if len(elems) == arity and frozenset(elems) in model.diagram:
            inc.append(list(sub))
    return canon_json({"collapse": list(collapse), "incidences": sorted(inc)})


@dataclass(frozen=True)
class ParamFamily:
    """Orbit-indexed assignment of parameter tuples.

    assignment must be total on realizations(J, rtype, sbar) with constant
    image length; base_params is the set A the family is judged over.
    """

    J: IndexStructure
    sbar: tuple
    rtype: QfType
    assignment: dict
    model: ParamModel
    base_params: frozenset = frozenset()

    def orbit(self) -> list[tuple]:
        return realizations(self.J, self.rtype, self.sbar)

    def image_length(self) -> int:
        lengths = {len(v) for v in self.assignment.values()}
        if len(lengths) > 1:
            raise InputError("family images must have constant length")
        return lengths.pop() if lengths else 0

    def validate(self):
        orbit = self.orbit()
        missing = [t for t in orbit if t not in self.assignment]
        if missing:
            raise InputError(f"assignment not total on orbit: missing {missing[0]}")
        self.image_length()
        for v in self.assignment.values():
            for e in v:
                if e not in self.model:
                    raise InputError(f"image element {e} outside model")


@dataclass(frozen=True)
class IndiscernibilityVerdict:
    ok: bool
    violation: tuple | None = None  # (index sequences pair, detail)

    def to_json(self):
        return {
            "ok": self.ok,
            "violation": None
            if self.violation is None
            else {
                "first": [list(t) for t in self.violation[0]],
                "second": [list(t) for t in self.violation[1]],
            },
        }


def check_indiscernible(f: ParamFamily, pair_arity_bound: int = 2) -> IndiscernibilityVerdict:
    """Equal concatenated index types must give equal image diagrams over A.

    Sequences of up to pair_arity_bound orbit tuples are grouped by the type
    of their concatenation over the family base; all images within one group
    must share their atomic diagram over base_params.
    """
    f.validate()
    orbit = f.orbit()
    base = tuple(sorted(f.base_params))
    for m in range(1, pair_arity_bound + 1):
        groups: dict[str, list] = {}
        for seq in itertools.product(orbit, repeat=m):
            concat = tuple(itertools.chain.from_iterable(seq))
            key = qf_type(concat, f.sbar, f.J).serialize()
            image = tuple(itertools.chain.from_iterable(f.assignment[t] for t in seq))
            sig = atomic_type(f.model, image, base)
            bucket = groups.setdefault(key, [])
            if bucket and bucket[0][1] != sig:
                return IndiscernibilityVerdict(False, (bucket[0][0], seq))
            bucket.append((seq, sig))
    return IndiscernibilityVerdict(True)


@dataclass(frozen=True)
class EqualityPattern:
    """Per pair type, the image-coordinate equalities common to all realizing pairs."""

    entries: tuple  # ((PairQfType, frozenset[(i, j)]), ...) sorted by serialization

    def get(self, ptype: PairQfType):
        for p, eq in self.entries:
            if p == ptype:
                return eq
        return None

    def to_json(self):
        return [
            {"pair_type": p.to_json(), "equalities": sorted(list(e) for e in eq)}
            for p, eq in self.entries
        ]

    @classmethod
    def from_pairs(cls, pairs):
        entries = sorted(pairs, key=lambda pe: pe[0].serialize())
        return cls(tuple(entries))


class PatternDisagreement(ValueError):
    """Two realizing pairs of one pair type disagree on coordinate equalities."""

    def __init__(self, ptype, first, second):
        self.ptype = ptype
        self.first = first
        self.second = second
        super().__init__("equality pattern disagreement (family not indiscernible)")


def extract_equality_pattern(f: ParamFamily) -> EqualityPattern:
    """Read the coordinate-equality summary off a family, erroring on any
    pair type whose realizing pairs disagree."""
    f.validate()
    orbit = f.orbit()
    found: dict[str, tuple] = {}
    for t1 in orbit:
        for t2 in orbit:
            p = pair_qf_type(t1, t2, f.sbar, f.J)
            img1, img2 = f.assignment[t1], f.assignment[t2]
            eq = frozenset(
                (i, j)
                for i in range(len(img1))
                for j in range(len(img2))
                if img1[i] == img2[j]
            )
            key = p.serialize()
            if key in found:
                prev_pair, prev_eq, prev_t = found[key]
                if prev_eq != eq:
                    raise PatternDisagreement(p, prev_t, (t1, t2))
            else:
                found[key] = (p, eq, (t1, t2))
    return EqualityPattern.from_pairs([(p, eq) for p, eq, _ in found.values()])


def pattern_coherent(pattern: EqualityPattern, f: ParamFamily) -> bool:
    """Transitivity coherence: chained equalities through any realizing tuples
    stay inside the pattern."""
    f.validate()
    orbit = f.orbit()
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    length = f.image_length()
    for t1 in orbit:
        for t2 in orbit:
            p = pair_qf_type(t1, t2, f.sbar, f.J)
            eq = pattern.get(p)
            if eq is None:
                continue
            for i, j in eq:
                union((t1, i), (t2, j))
    for t1 in orbit:
        for t2 in orbit:
            p = pair_qf_type(t1, t2, f.sbar, f.J)
            eq = pattern.get(p) or frozenset()
            for i in range(length):
                for j in range(length):
                    if (find((t1, i)) == find((t2, j))) and (i, j) not in eq:
                        return False
    return True


@dataclass(frozen=True)
class MirrorFamily:
    """One parameter per index element; the model diagram mirrors the edges."""

    model: ParamModel
    param_of: dict

    def family(self, J, sbar, tbar, slot_coords=None, base_params=frozenset()) -> ParamFamily:
        """The mirror family on the orbit of tbar over sbar; slot_coords picks
        which tuple coordinates feed the images (all by default)."""
        r = qf_type(tbar, sbar, J)
        coords = tuple(slot_coords) if slot_coords is not None else tuple(range(len(tbar)))
        assignment = {
            t: tuple(self.param_of[t[c]] for c in coords)
            for t in realizations(J, r, sbar)
        }
        return ParamFamily(J, tuple(sbar), r, assignment, self.model, frozenset(base_params))


def build_mirror_family(
    J: IndexStructure, theory: TheorySpec, tbar=None, sbar=()
):
    """Mirror J's edge diagram into a parameter model.

    Returns (model, MirrorFamily) and, when tbar is given, the orbit family
    for tbar over sbar as a third component.
    """
    if J.signature.edge_arity is not None and theory.edge_arity != J.signature.edge_arity:
        raise InputError(
            f"theory edge arity {theory.edge_arity} != structure arity {J.signature.edge_arity}"
        )
    param_of = {e: i for i, e in enumerate(sorted(J.elements))}
    diagram = [frozenset(param_of[v] for v in e) for e in J.edges]
    model = ParamModel(theory, list(param_of.values()), diagram)
    mirror = MirrorFamily(model, param_of)
    if tbar is None:
        return model, mirror
    return model, mirror, mirror.family(J, sbar, tbar)
