"""Finite approximations of saturated extensions inside an index model class.

True saturation demands every consistent one-point extension type over every
finite base be realized; at desk scale this is approximated by three knobs:

- base_window: bases range over increasing tuples of the *input* structure of
  at most this size,
- multiplicity: how many realizations each demanded type must have,
- rounds: how many demand passes run (the demand family is anchored to the
  input structure, so passes beyond the first only re-verify; the knob is kept
  for reporting and forward compatibility).

The demanded types are every (order cut relative to the base) x (occurring
color), each edge-free, plus -- for hyperedge classes -- edge witnesses: for
every window-sized candidate edge stub, multiplicity-many points completing it
positively.  Positive-edge demands are deliberately coarser than cut x color
resolution; they exist to make edges appear at all, while order and color
diversity comes from the edge-free family.  Blanket saturation never needs
finer edge patterns here: constructions that do (witness builders) place their
points by hand through realize_point.

All verdicts derived from these structures carry their depth parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .structures import (
    KNK,
    TREE_BRANCH,
    ClassKind,
    IndexStructure,
    InputError,
    increasing_tuples,
    validate_structure,
)


class GrowthLimitError(RuntimeError):
    def __init__(self, demand, limit):
        self.demand = demand
        self.limit = limit
        super().__init__(f"saturation exceeded growth limit {limit} at demand {demand}")


@dataclass(frozen=True)
class SaturationParams:
    base_window: int = 3
    multiplicity: int = 2
    rounds: int = 2

    def __post_init__(self):
        if self.base_window < 1 or self.multiplicity < 1 or self.rounds < 0:
            raise InputError("window and multiplicity must be >= 1, rounds >= 0")

    def to_json(self):
        return {
            "base_window": self.base_window,
            "multiplicity": self.multiplicity,
            "rounds": self.rounds,
        }


@dataclass(frozen=True)
class PointSpec:
    """Constraints for one fresh point: open interval, color, signed edge stubs.

    positive/negative are sets of element-sets of size edge_arity - 1; the new
    point completes each positive stub to an edge and omits every negative one.
    """

    lower: int | None
    upper: int | None
    color: str
    positive: frozenset = frozenset()
    negative: frozenset = frozenset()

    def to_json(self):
        return {
            "lower": self.lower,
            "upper": self.upper,
            "color": self.color,
            "positive": sorted(sorted(a) for a in self.positive),
            "negative": sorted(sorted(a) for a in self.negative),
        }


@dataclass(frozen=True)
class Unrealizable:
    """The positive demands would complete a forbidden clique (exact verdict)."""

    clique: tuple

    def to_json(self):
        return {"unrealizable": True, "clique": sorted(self.clique)}


def _forced_clique(J: IndexStructure, kind: ClassKind, positive):
    """The clique the new point would complete, or None.

    S ranges over n-subsets of the positive-stub support; the new point plus S
    is a clique exactly when S is internally complete and every k-subset of S
    is demanded positively.
    """
    if kind.name != KNK:
        return None
    n, k = kind.n, kind.k
    support = sorted({v for a in positive for v in a})
    if len(support) < n:
        return None
    for cand in itertools.combinations(support, n):
        if all(frozenset(c) in positive for c in itertools.combinations(cand, k)) and all(
            J.is_edge(c) for c in itertools.combinations(cand, k + 1)
        ):
            return cand
    return None


def realize_point(J: IndexStructure, kind: ClassKind, spec: PointSpec):
    """Add one fresh element meeting the constraints, or report Unrealizable.

    Returns (new_structure, element_id) on success.  Unrealizable is reserved
    for the exact forbidden-clique obstruction; malformed demands raise.
    """
    for b in (spec.lower, spec.upper):
        if b is not None and b not in J:
            raise InputError(f"interval endpoint {b} outside structure")
    if spec.lower is not None and spec.upper is not None and not J.less(spec.lower, spec.upper):
        raise InputError("empty interval")
    if spec.positive & spec.negative:
        raise InputError("conflicting signs on one stub")
    stub_size = (kind.edge_arity or 1) - 1
    for a in spec.positive | spec.negative:
        if kind.edge_arity is None:
            raise InputError(f"{kind.name} structures carry no edge relation")
        if len(a) != stub_size or not all(v in J for v in a):
            raise InputError(f"bad edge stub {sorted(a)}")

    clique = _forced_clique(J, kind, spec.positive)
    if clique is not None:
        return Unrealizable(clique)

    eid = J.fresh_id()
    position = J.fresh_position(spec.lower, spec.upper)
    new_edges = [set(a) | {eid} for a in spec.positive]
    return J.with_point(eid, position, spec.color, new_edges), eid


def _occurring_colors(I: IndexStructure):
    return sorted({I.color[e] for e in I.elements}) or list(I.signature.colors[:1])


def _cut_intervals(J: IndexStructure, base):
    """(lower, upper) endpoint pairs of the cuts a fresh point can occupy."""
    ordered = sorted(base, key=J.rank)
    bounds = [None] + ordered + [None]
    return list(zip(bounds, bounds[1:]))


def _count_cut_realizations(J, base, lo, hi, color, k):
    """Points strictly inside the cut, of the color, edge-free onto the base."""
    count = 0
    base_set = set(base)
    for e in J.interval_elements(lo, hi):
        if J.color[e] != color or e in base_set:
            continue
        if k and any(
            J.is_edge(set(sub) | {e}) for sub in itertools.combinations(sorted(base_set), k)
        ):
            continue
        count += 1
    return count


def saturate(
    I: IndexStructure,
    kind: ClassKind,
    p: SaturationParams,
    max_new: int = 400,
) -> IndexStructure:
    """Grow a copy of I until every demanded type has enough realizations.

    Demands are anchored to I's elements (see module docstring); iteration is
    in canonical order so the result is reproducible.  Raises GrowthLimitError
    carrying the offending demand if more than max_new points would be needed.
    """
    report = validate_structure(I, kind)
    if not report.ok:
        raise InputError(f"input does not validate: {report.to_json()}")
    J = I
    if p.rounds == 0:
        return J
    colors = _occurring_colors(I)
    k = (kind.edge_arity or 1) - 1
    added = 0

    for _ in range(p.rounds):
        # edge-free cut demands over every windowed base
        for size in range(min(p.base_window, len(I.elements)) + 1):
            for base in increasing_tuples(I, size):
                if any(b not in J for b in base):
                    continue
                for lo, hi in _cut_intervals(J, base):
                    for color in colors:
                        need = p.multiplicity - _count_cut_realizations(J, base, lo, hi, color, k)
                        for _ in range(need):
                            added += 1
                            if added > max_new:
                                raise GrowthLimitError(
                                    {"base": list(base), "color": color}, max_new
                                )
                            result = realize_point(
                                J, kind, PointSpec(lo, hi, color)
                            )
                            J, _eid = result

        # edge witnesses: complete every windowed stub, multiplicity-many times
        if kind.name == KNK:
            for stub in itertools.combinations(I.elements, k):
                stub_set = frozenset(stub)
                have = sum(
                    1
                    for e in J.elements
                    if e not in stub_set and J.is_edge(stub_set | {e})
                )
                for _ in range(p.multiplicity - have):
                    added += 1
                    if added > max_new:
                        raise GrowthLimitError({"stub": sorted(stub)}, max_new)
                    spec = PointSpec(None, None, colors[0], positive=frozenset({stub_set}))
                    result = realize_point(J, kind, spec)
                    if isinstance(result, Unrealizable):
                        break
                    J, _eid = result

    final = validate_structure(J, kind)
    if not final.ok:
        raise RuntimeError(f"saturation produced invalid structure: {final.to_json()}")
    return J


# -- context conditions ---------------------------------------------------------


def closure_of(I: IndexStructure, elems) -> set:
    """Substructure generated by elems: identity unless a meet is present."""
    out = set(elems)
    if I.meet is not None:
        changed = True
        while changed:
            changed = False
            for a, b in itertools.combinations(sorted(out), 2):
                m = I.meet_of(a, b)
                if m is not None and m not in out:
                    out.add(m)
                    changed = True
    return out


@dataclass(frozen=True)
class ConditionVerdict:
    passed: bool
    approximate: bool
    detail: str

    def to_json(self):
        return {"passed": self.passed, "approximate": self.approximate, "detail": self.detail}


@dataclass(frozen=True)
class ConditionReport:
    nontrivial: ConditionVerdict
    reasonable: ConditionVerdict
    non_1_trivial: ConditionVerdict
    depth: SaturationParams

    @property
    def ok(self):
        return self.nontrivial.passed and self.reasonable.passed and self.non_1_trivial.passed

    def to_json(self):
        return {
            "nontrivial": self.nontrivial.to_json(),
            "reasonable": self.reasonable.to_json(),
            "non_1_trivial": self.non_1_trivial.to_json(),
            "depth": self.depth.to_json(),
        }


def check_context_conditions(ctx, p: SaturationParams) -> ConditionReport:
    """Depth-bounded reading of the context conditions; all verdicts approximate.

    nontrivial: no windowed tuple generates the whole base.
    reasonable: in the saturated extension, any point whose type over a
      windowed base tuple has a unique realization already lies in the base
      tuple's closure.
    non_1_trivial: any point outside the closure has at least multiplicity
      many same-type companions in the saturated extension.
    """
    from .qftypes import qf_type

    I, kind = ctx.base, ctx.kind
    window = min(p.base_window, len(I.elements))

    nontrivial_fail = None
    for size in range(window + 1):
        for t in increasing_tuples(I, size):
            if closure_of(I, t) == set(I.elements):
                nontrivial_fail = t
                break
        if nontrivial_fail is not None:
            break
    nontrivial = ConditionVerdict(
        nontrivial_fail is None,
        True,
        "no windowed tuple generates the base"
        if nontrivial_fail is None
        else f"base generated by {list(nontrivial_fail)}",
    )

    J = saturate(I, kind, p)
    reasonable_fail = None
    non1_fail = None
    for size in range(window + 1):
        for t in increasing_tuples(I, size):
            cl = closure_of(I, t)
            groups = {}
            for s in J.elements:
                groups.setdefault(qf_type((s,), t, J).serialize(), []).append(s)
            for members in groups.values():
                outside = [s for s in members if s not in cl]
                if len(members) == 1 and outside:
                    reasonable_fail = (t, members[0])
                if outside and len(members) < p.multiplicity:
                    non1_fail = (t, outside[0], len(members))
            if reasonable_fail or non1_fail:
                break
        if reasonable_fail or non1_fail:
            break

    reasonable = ConditionVerdict(
        reasonable_fail is None,
        True,
        "unique realizations lie in the base closure"
        if reasonable_fail is None
        else f"point {reasonable_fail[1]} uniquely realizes its type over {list(reasonable_fail[0])}",
    )
    non_1_trivial = ConditionVerdict(
        non1_fail is None,
        True,
        f"outside points have >= {p.multiplicity} same-type companions"
        if non1_fail is None
        else f"point {non1_fail[1]} has only {non1_fail[2]} companions over {list(non1_fail[0])}",
    )
    return ConditionReport(nontrivial, reasonable, non_1_trivial, p)
