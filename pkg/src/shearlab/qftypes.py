"""Canonical quantifier-free types of tuples over base tuples.

The type of a tuple over a base records exactly the atomic diagram up to a
base-fixing partial isomorphism: the merged order pattern with equality
collapses, the color of every position, which position sets carry edges, and
(for meet trees) the position-level meet table.  Two tuples get bit-identical
type values precisely when some base-fixing partial isomorphism matches them.

Orbit enumeration restricts to strictly increasing tuples, which is the form
every family in this package is indexed by.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ._canon import canon_json
from .structures import IndexStructure, InputError, increasing_tuples


@dataclass(frozen=True)
class QfType:
    """Canonical invariant of a tuple over a base tuple.

    Positions 0..arity-1 are the tuple, positions arity..arity+base_arity-1
    the base.  order_pattern gives each position's dense rank in the merged
    order (equal ranks are equality collapses).  incidences lists the
    position subsets whose elements are pairwise distinct and form an edge.
    """

    arity: int
    base_arity: int
    order_pattern: tuple[int, ...]
    colors: tuple[str, ...]
    incidences: frozenset[tuple[int, ...]]
    meet_pattern: tuple | None = None

    def to_json(self) -> dict:
        return {
            "arity": self.arity,
            "base_arity": self.base_arity,
            "order": list(self.order_pattern),
            "colors": list(self.colors),
            "incidences": sorted(list(t) for t in self.incidences),
            "meet": [list(row) for row in self.meet_pattern] if self.meet_pattern else None,
        }

    def serialize(self) -> str:
        return canon_json(self.to_json())

    @property
    def collapses(self) -> frozenset[tuple[int, int]]:
        """Position pairs (i, j), i < j, denoting the same element."""
        out = set()
        n = len(self.order_pattern)
        for i in range(n):
            for j in range(i + 1, n):
                if self.order_pattern[i] == self.order_pattern[j]:
                    out.add((i, j))
        return frozenset(out)


@dataclass(frozen=True)
class PairQfType:
    """Type of a concatenated tuple pair over a base, with the split point."""

    qf: QfType
    split: int

    def __post_init__(self):
        if not 0 <= self.split <= self.qf.arity:
            raise InputError("split point outside tuple arity")

    def to_json(self) -> dict:
        return {"qf": self.qf.to_json(), "split": self.split}

    def serialize(self) -> str:
        return canon_json(self.to_json())

    def cross_equalities(self) -> frozenset[tuple[int, int]]:
        """Pairs (i, j): coordinate i of the first tuple equals coordinate j of the second."""
        a = self.split
        b = self.qf.arity - self.split
        out = set()
        for i in range(a):
            for j in range(b):
                if self.qf.order_pattern[i] == self.qf.order_pattern[a + j]:
                    out.add((i, j))
        return frozenset(out)

    def swapped(self) -> "PairQfType":
        """The type of the pair with the two tuples exchanged."""
        a = self.split
        b = self.qf.arity - self.split
        base = self.qf.base_arity
        # new position p maps to old position perm[p]
        perm = list(range(a, a + b)) + list(range(a)) + list(range(a + b, a + b + base))
        ranks = [self.qf.order_pattern[perm[p]] for p in range(len(perm))]
        dense = {r: i for i, r in enumerate(sorted(set(ranks)))}
        order = tuple(dense[r] for r in ranks)
        colors = tuple(self.qf.colors[perm[p]] for p in range(len(perm)))
        inv = {old: new for new, old in enumerate(perm)}
        inc = frozenset(tuple(sorted(inv[q] for q in sub)) for sub in self.qf.incidences)
        meet = None
        if self.qf.meet_pattern is not None:
            n = len(perm)
            meet = tuple(
                tuple(
                    -1
                    if self.qf.meet_pattern[perm[i]][perm[j]] == -1
                    else inv[self.qf.meet_pattern[perm[i]][perm[j]]]
                    for j in range(n)
                )
                for i in range(n)
            )
        qf = QfType(self.qf.arity, base, order, colors, inc, meet)
        return PairQfType(qf, b)


def qf_type(tbar, sbar, J: IndexStructure) -> QfType:
    """Canonical type of tbar over sbar in J."""
    combined = tuple(tbar) + tuple(sbar)
    for e in combined:
        if e not in J:
            raise InputError(f"unknown element id {e}")
    n = len(combined)
    positions = [J.pos[e] for e in combined]
    dense = {p: i for i, p in enumerate(sorted(set(positions)))}
    order = tuple(dense[p] for p in positions)
    colors = tuple(J.color[e] for e in combined)

    incidences = set()
    arity = J.signature.edge_arity
    if arity is not None and n >= arity:
        # walk the (sparse) edge set rather than all position subsets
        positions_of: dict = {}
        for i, e in enumerate(combined):
            positions_of.setdefault(e, []).append(i)
        for edge in J.edges:
            if all(v in positions_of for v in edge):
                for choice in itertools.product(*(positions_of[v] for v in sorted(edge))):
                    incidences.add(tuple(sorted(choice)))

    meet = None
    if J.signature.has_meet:
        index_of = {}
        for i, e in enumerate(combined):
            index_of.setdefault(e, i)
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                m = J.meet_of(combined[i], combined[j])
                row.append(index_of.get(m, -1))
            rows.append(tuple(row))
        meet = tuple(rows)

    return QfType(len(tbar), len(sbar), order, colors, frozenset(incidences), meet)


def pair_qf_type(t1, t2, sbar, J: IndexStructure) -> PairQfType:
    return PairQfType(qf_type(tuple(t1) + tuple(t2), sbar, J), len(t1))


def types_match_by_isomorphism(J: IndexStructure, t1, t2, sbar) -> bool:
    """Independent oracle: does the map t1[i] -> t2[i], fixing sbar, preserve atoms?

    Checks well-definedness and full atomic preservation directly, without
    canonical forms.
    """
    t1, t2, sbar = tuple(t1), tuple(t2), tuple(sbar)
    if len(t1) != len(t2):
        return False
    mapping = {}
    for a, b in zip(t1 + sbar, t2 + sbar):
        if a in mapping and mapping[a] != b:
            return False
        mapping[a] = b
    if len(set(mapping.values())) != len(mapping):
        return False
    dom = sorted(mapping, key=J.rank)
    for a, b in mapping.items():
        if J.color[a] != J.color[b]:
            return False
    for a, b in itertools.combinations(dom, 2):
        if J.less(a, b) != J.less(mapping[a], mapping[b]):
            return False
    arity = J.signature.edge_arity
    if arity is not None:
        for sub in itertools.combinations(dom, arity):
            if J.is_edge(sub) != J.is_edge([mapping[x] for x in sub]):
                return False
    if J.signature.has_meet:
        for a, b in itertools.combinations(dom, 2):
            m = J.meet_of(a, b)
            m2 = J.meet_of(mapping[a], mapping[b])
            if (m in mapping) != (m2 in set(mapping.values())):
                return False
            if m in mapping and mapping[m] != m2:
                return False
    return True


def realizations(J: IndexStructure, r: QfType, sbar) -> list[tuple]:
    """All increasing tuples in J with type r over sbar, in deterministic order.

    Enumerates coordinate candidates (pinned positions resolve to their base
    element; free positions filter by color and order window) and verifies
    each candidate tuple exactly.
    """
    sbar = tuple(sbar)
    if r.base_arity != len(sbar):
        raise InputError("base arity mismatch")
    if r.arity == 0:
        return [()]

    # pinned coordinates: collapse onto a base position
    pinned = {}
    for i in range(r.arity):
        for j in range(r.base_arity):
            if r.order_pattern[i] == r.order_pattern[r.arity + j]:
                pinned[i] = sbar[j]
                break

    candidates = []
    for i in range(r.arity):
        if i in pinned:
            candidates.append([pinned[i]])
        else:
            candidates.append([e for e in J.elements if J.color[e] == r.colors[i]])

    out = []

    def extend(prefix):
        i = len(prefix)
        if i == r.arity:
            if qf_type(tuple(prefix), sbar, J) == r:
                out.append(tuple(prefix))
            return
        for e in candidates[i]:
            if prefix and not J.less(prefix[-1], e):
                continue
            extend(prefix + [e])

    extend([])
    return sorted(out)


def enumerate_types(J: IndexStructure, sbar, max_arity: int) -> list[QfType]:
    """All distinct types of increasing tuples over sbar up to max_arity."""
    if max_arity < 0:
        raise InputError("max_arity must be nonnegative")
    seen = {}
    for n in range(max_arity + 1):
        for t in increasing_tuples(J, n):
            r = qf_type(t, sbar, J)
            key = r.serialize()
            if key not in seen:
                seen[key] = r
    return [seen[k] for k in sorted(seen)]
