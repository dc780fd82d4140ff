"""Collision analysis for random-graph formulas along an orbit family.

A mixed formula (some positive, some negative edge atoms) instantiated along
an orbit family is inconsistent exactly when some positive coordinate of one
instance names the same parameter as a negative coordinate of another.  Given
only the family's equality pattern, this module decides whether such a
collision is entailed, and when it is, runs the crossing-elimination
derivation: witnesses are first normalized so that within each interval of
their common elements all first-tuple entries precede all second-tuple
entries, then a middle tuple is interpolated sharing the pair type with both
sides, and transitivity of equality turns the cross collision into a
same-tuple collision.  When the interpolation is blocked by asymmetric
element sharing, the collision stands on its own (the instances are
individually consistent yet jointly contradictory); when it goes through, the
pattern already contradicts individual consistency.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .families import EqualityPattern
from .qftypes import QfType, pair_qf_type, qf_type, realizations
from .saturation import PointSpec, Unrealizable, realize_point
from .structures import ClassKind, IndexStructure, InputError


class SaturationDepthError(RuntimeError):
    """The extension is too shallow for the required interpolation."""


@dataclass(frozen=True)
class TraceStep:
    kind: str
    detail: dict

    def to_json(self):
        return {"kind": self.kind, "detail": self.detail}


@dataclass(frozen=True)
class CollisionCertificate:
    consistent: bool
    collision: tuple | None          # (first tuple, second tuple, i, j)
    derived_diagonal: tuple | None   # (tuple, i, j) when the derivation completes
    trace: tuple
    scanned_pair_types: int

    def to_json(self):
        return {
            "consistent": self.consistent,
            "collision": None
            if self.collision is None
            else {
                "first": list(self.collision[0]),
                "second": list(self.collision[1]),
                "i": self.collision[2],
                "j": self.collision[3],
            },
            "derived_diagonal": None
            if self.derived_diagonal is None
            else {
                "tuple": list(self.derived_diagonal[0]),
                "i": self.derived_diagonal[1],
                "j": self.derived_diagonal[2],
            },
            "trace": [t.to_json() for t in self.trace],
            "scanned_pair_types": self.scanned_pair_types,
        }


def _copy_profile_spec(J, source, lower, upper, support, rename=None):
    """PointSpec for a fresh element copying source's color and edge profile.

    Edges of source whose other members lie in support are demanded, with
    members renamed through the optional map (used when copying one tuple's
    internal pattern onto another).
    """
    rename = rename or {}
    positive = set()
    if J.signature.edge_arity is not None:
        support = set(support)
        for edge in J.edges:
            if source in edge and (edge - {source}) <= support:
                positive.add(frozenset(rename.get(x, x) for x in edge - {source}))
    return PointSpec(lower=lower, upper=upper, color=J.color[source], positive=frozenset(positive))


def _substitute(tup, index, value):
    out = list(tup)
    out[index] = value
    return tuple(out)


def _crossings(J, v, w, sbar):
    """Pairs (a, b): w[b] strictly below v[a] with no shared or base element between.

    Shared elements and the base cut the order into intervals; a crossing is a
    second-tuple element preceding a first-tuple element inside one interval.
    """
    boundary = (set(v) & set(w)) | set(sbar)
    out = []
    for a, va in enumerate(v):
        if va in set(w):
            continue
        for b, wb in enumerate(w):
            if wb in set(v) or not J.less(wb, va):
                continue
            if not any(J.less(wb, u) and J.less(u, va) for u in boundary):
                out.append((a, b))
    return out


def _adjacent_crossing(J, v, w, sbar, crossings):
    """A crossing with nothing at all strictly between its two elements."""
    occupied = set(v) | set(w) | set(sbar)
    for a, b in sorted(crossings, key=lambda ab: (J.rank(v[ab[0]]) - J.rank(w[ab[1]]), ab)):
        gap = [x for x in occupied if J.less(w[b], x) and J.less(x, v[a])]
        if not gap:
            return a, b
    return None


def _normalize_crossings(J, kind, v, w, sbar, max_steps, trace):
    """Reduce witness crossings to zero by paired substitution, extending J.

    Each step picks an adjacent crossing, realizes primed copies inside its
    gap, and replaces one coordinate in each tuple.  Both intermediate pairs
    keep the original pair type (verified), so a collision carried by the
    type survives every step.
    """
    steps = 0
    while True:
        crossings = _crossings(J, v, w, sbar)
        if not crossings:
            return J, v, w
        if steps >= max_steps:
            raise SaturationDepthError("crossing normalization exceeded its budget")
        steps += 1
        picked = _adjacent_crossing(J, v, w, sbar, crossings)
        if picked is None:
            raise SaturationDepthError("no adjacent crossing found")
        a, b = picked
        va, wb = v[a], w[b]
        support = sorted(set(v) | set(w) | set(sbar))
        base_type = qf_type(tuple(v) + tuple(w), sbar, J)
        result = realize_point(
            J, kind, _copy_profile_spec(J, va, wb, va, set(support) - {va})
        )
        if isinstance(result, Unrealizable):
            raise SaturationDepthError(f"cannot realize substitute: {result.to_json()}")
        J, v_prime = result
        result = realize_point(
            J, kind, _copy_profile_spec(J, wb, v_prime, va, (set(support) - {wb}) | {v_prime}, rename={va: v_prime})
        )
        if isinstance(result, Unrealizable):
            raise SaturationDepthError(f"cannot realize substitute: {result.to_json()}")
        J, w_prime = result
        new_v = _substitute(v, a, v_prime)
        new_w = _substitute(w, b, w_prime)
        if (
            qf_type(tuple(v) + tuple(new_w), sbar, J) != base_type
            or qf_type(tuple(new_v) + tuple(w), sbar, J) != base_type
        ):
            raise SaturationDepthError("substitution failed to preserve the pair type")
        trace.append(
            TraceStep(
                "normalize",
                {"replaced": [va, wb], "with": [v_prime, w_prime], "crossing": [a, b]},
            )
        )
        v, w = new_v, new_w


def _interpolate(J, kind, v, w, sbar, ptype_cross, trace):
    """Middle tuple z with pair(v, z) and pair(z, w) both of the witness type.

    Cross equalities of the type pin z's coordinates from both sides; any
    conflicting pin means no such z can exist in any extension (None).  Free
    coordinates are placed in the open interval their order constraints carve
    out, copying the second tuple's edge profile.
    """
    arity = len(v)
    pins: dict[int, int] = {}
    for (a, b) in sorted(ptype_cross):
        # z as second tuple against v: z[b] = v[a]; z as first against w: z[a] = w[b]
        for idx, val in ((b, v[a]), (a, w[b])):
            if idx in pins and pins[idx] != val:
                return None, J
            pins[idx] = val
    if len(set(pins.values())) != len(pins):
        return None, J

    z: list = [None] * arity
    for c in range(arity):
        if v[c] == w[c]:
            z[c] = v[c]
        elif c in pins:
            z[c] = pins[c]

    for c in range(arity):
        if z[c] is not None:
            continue
        lows, highs = [], []
        for d in range(arity):
            # z[c] vs v[d] mimics w[c] vs v[d]
            if J.less(v[d], w[c]):
                lows.append(v[d])
            else:
                highs.append(v[d])
            # z[c] vs w[d] mimics v[c] vs w[d]
            if J.less(v[c], w[d]):
                highs.append(w[d])
            else:
                lows.append(w[d])
            # z internal order mimics the second tuple's
            if z[d] is not None:
                if J.less(w[d], w[c]):
                    lows.append(z[d])
                elif J.less(w[c], w[d]):
                    highs.append(z[d])
        for s in sbar:
            if J.less(s, w[c]):
                lows.append(s)
            else:
                highs.append(s)
        lo = max(lows, key=J.rank) if lows else None
        hi = min(highs, key=J.rank) if highs else None
        if lo is not None and hi is not None and not J.less(lo, hi):
            return None, J
        support = set(v) | set(sbar) | {x for x in z if x is not None}
        rename = {w[d]: z[d] for d in range(arity) if z[d] is not None}
        spec = _copy_profile_spec(J, w[c], lo, hi, support | set(w), rename=rename)
        result = realize_point(J, kind, spec)
        if isinstance(result, Unrealizable):
            raise SaturationDepthError(f"interpolant blocked: {result.to_json()}")
        J, eid = result
        z[c] = eid

    z = tuple(z)
    base_type = qf_type(tuple(v) + tuple(w), sbar, J)
    if qf_type(tuple(v) + z, sbar, J) != base_type or qf_type(z + tuple(w), sbar, J) != base_type:
        return None, J
    trace.append(TraceStep("interpolate", {"middle": list(z)}))
    return z, J


def trg_collision_analysis(
    pattern: EqualityPattern,
    J: IndexStructure,
    kind: ClassKind,
    sbar,
    rtype: QfType,
    a_pos,
    b_neg,
    max_steps: int = 24,
) -> CollisionCertificate:
    """Decide entailed collisions of a mixed formula from the equality pattern.

    a_pos and b_neg are the coordinate index sets of the positive and negative
    atoms.  The verdict agrees with direct joint-consistency evaluation of any
    family realizing the pattern over this extension.
    """
    a_pos, b_neg = frozenset(a_pos), frozenset(b_neg)
    if a_pos & b_neg:
        raise InputError("a coordinate cannot be both positive and negative")
    sbar = tuple(sbar)
    orbit = realizations(J, rtype, sbar)
    if not orbit:
        raise SaturationDepthError("orbit unrealized at this depth")

    trace = [TraceStep("scan", {"orbit_size": len(orbit)})]
    realized: dict[str, tuple] = {}
    for u in orbit:
        for v in orbit:
            p = pair_qf_type(u, v, sbar, J)
            realized.setdefault(p.serialize(), (p, u, v))

    diag_key = pair_qf_type(orbit[0], orbit[0], sbar, J).serialize()
    diag_type = realized[diag_key][0]
    diag_eq = pattern.get(diag_type)
    if diag_eq is None:
        raise InputError("pattern must cover the diagonal pair type")

    for i, j in sorted(diag_eq):
        if i in a_pos and j in b_neg:
            t = orbit[0]
            trace.append(TraceStep("diagonal", {"i": i, "j": j}))
            return CollisionCertificate(
                consistent=False,
                collision=(t, t, i, j),
                derived_diagonal=(t, i, j),
                trace=tuple(trace),
                scanned_pair_types=len(realized),
            )

    hit = None
    for key in sorted(realized):
        p, u, v = realized[key]
        if u == v:
            continue
        eq = pattern.get(p)
        if not eq:
            continue
        for i, j in sorted(eq):
            if i in a_pos and j in b_neg:
                hit = (p, u, v, i, j)
                break
        if hit:
            break

    if hit is None:
        trace.append(TraceStep("no_collision", {"types": len(realized)}))
        return CollisionCertificate(
            consistent=True,
            collision=None,
            derived_diagonal=None,
            trace=tuple(trace),
            scanned_pair_types=len(realized),
        )

    p, u, v, i, j = hit
    trace.append(TraceStep("collision", {"i": i, "j": j, "first": list(u), "second": list(v)}))
    J2, u2, v2 = _normalize_crossings(J, kind, u, v, sbar, max_steps, trace)
    p2 = pair_qf_type(u2, v2, sbar, J2)
    z, J3 = _interpolate(J2, kind, u2, v2, sbar, p2.cross_equalities(), trace)
    derived = None
    if z is not None:
        # pair(u2,z) and pair(z,v2) share the collision type: transitivity
        # forces the same-tuple equality on z
        derived = (z, i, j)
        trace.append(TraceStep("transitivity", {"tuple": list(z), "i": i, "j": j}))
    else:
        trace.append(TraceStep("interpolation_blocked", {}))
    return CollisionCertificate(
        consistent=False,
        collision=(u, v, i, j),
        derived_diagonal=derived,
        trace=tuple(trace),
        scanned_pair_types=len(realized),
    )


# -- coherent pattern generators -------------------------------------------------


@dataclass(frozen=True)
class SlotRecipe:
    """How one image coordinate is produced from an index tuple.

    kind 'proj' takes the element at a fixed coordinate, 'const' a fixed
    fresh parameter shared by all tuples, 'fresh' a parameter private to the
    tuple.  All three are invariant constructions, so the resulting equality
    pattern is coherent by construction.
    """

    kind: str  # proj | const | fresh
    coord: int = 0

    def to_json(self):
        return {"kind": self.kind, "coord": self.coord}


def family_from_recipes(J, sbar, rtype, recipes, model_theory):
    """Concrete family whose images follow the slot recipes; returns
    (ParamFamily-like assignment dict, params)."""
    orbit = realizations(J, rtype, sbar)
    assignment = {}
    params: dict = {}

    def param_key(key):
        if key not in params:
            params[key] = len(params)
        return params[key]

    for t in orbit:
        image = []
        for s, rec in enumerate(recipes):
            if rec.kind == "proj":
                image.append(param_key(("e", t[rec.coord])))
            elif rec.kind == "const":
                image.append(param_key(("c", s)))
            else:
                image.append(param_key(("f", t, s)))
        assignment[t] = tuple(image)
    return assignment, params


def pattern_from_recipes(J, sbar, rtype, recipes) -> EqualityPattern:
    """Equality pattern induced by the recipes over the realized orbit."""
    orbit = realizations(J, rtype, sbar)
    entries: dict[str, tuple] = {}
    for t1 in orbit:
        for t2 in orbit:
            p = pair_qf_type(t1, t2, sbar, J)
            eq = set()
            for i, r1 in enumerate(recipes):
                for j, r2 in enumerate(recipes):
                    if r1.kind == "proj" and r2.kind == "proj":
                        if t1[r1.coord] == t2[r2.coord]:
                            eq.add((i, j))
                    elif r1.kind == "const" and r2.kind == "const":
                        if i == j:
                            eq.add((i, j))
                    elif r1.kind == "fresh" and r2.kind == "fresh":
                        if i == j and t1 == t2:
                            eq.add((i, j))
            key = p.serialize()
            if key in entries and entries[key][1] != frozenset(eq):
                raise InputError("recipes produced an incoherent pattern")
            entries[key] = (p, frozenset(eq))
    return EqualityPattern.from_pairs(list(entries.values()))
