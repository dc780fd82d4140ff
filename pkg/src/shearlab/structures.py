"""Finite ordered index structures: colored linear orders, optionally carrying a
symmetric hyperedge with a forbidden-clique bound, or a tree meet operation.

A structure here is always a finite fragment of a universal class of linearly
ordered relational structures.  Four class kinds are supported:

- LINEAR: plain linear orders (a single implicit color),
- KMU: linear orders partitioned by unary colors,
- KNK: colored linear orders with a (k+1)-ary symmetric edge and no clique of
  size n+1,
- TREE_BRANCH: a single branch of a meet-tree; the meet of two branch elements
  is the smaller one.

Membership in each class is universal (closed under substructure), so a report
of zero violations on a finite fragment certifies membership.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from ._canon import canon_json

LINEAR = "LINEAR"
KMU = "KMU"
KNK = "KNK"
TREE_BRANCH = "TREE_BRANCH"

_KINDS = (LINEAR, KMU, KNK, TREE_BRANCH)


class InputError(ValueError):
    """Malformed input (unknown elements, bad arity, conflicting demands)."""


@dataclass(frozen=True)
class ClassKind:
    """Variant tag for the index model class a structure is validated against."""

    name: str
    color_bound: int | None = None  # KMU: max elements sharing one color
    n: int | None = None            # KNK: forbidden clique size is n+1
    k: int | None = None            # KNK: edge arity is k+1

    def __post_init__(self):
        if self.name not in _KINDS:
            raise InputError(f"unknown class kind {self.name!r}")
        if self.name == KNK:
            if self.n is None or self.k is None or not (self.n > self.k >= 1):
                raise InputError("KNK requires n > k >= 1")

    @classmethod
    def linear(cls) -> "ClassKind":
        return cls(LINEAR)

    @classmethod
    def kmu(cls, color_bound: int | None = None) -> "ClassKind":
        return cls(KMU, color_bound=color_bound)

    @classmethod
    def knk(cls, n: int, k: int) -> "ClassKind":
        return cls(KNK, n=n, k=k)

    @classmethod
    def tree_branch(cls) -> "ClassKind":
        return cls(TREE_BRANCH)

    @property
    def edge_arity(self) -> int | None:
        return self.k + 1 if self.name == KNK else None

    @property
    def clique_bound(self) -> int | None:
        return self.n + 1 if self.name == KNK else None

    @property
    def has_meet(self) -> bool:
        return self.name == TREE_BRANCH

    def to_json(self) -> dict:
        d = {"kind": self.name}
        if self.name == KNK:
            d["n"] = self.n
            d["k"] = self.k
        if self.color_bound is not None:
            d["color_bound"] = self.color_bound
        return d


@dataclass(frozen=True)
class IndexSignature:
    """Signature of an index structure: colors, optional edge, optional meet.

    edge_arity and clique_bound are present together or not at all, with
    clique_bound strictly larger.
    """

    colors: tuple[str, ...]
    edge_arity: int | None = None
    clique_bound: int | None = None
    has_meet: bool = False

    def __post_init__(self):
        if (self.edge_arity is None) != (self.clique_bound is None):
            raise InputError("edge_arity and clique_bound must be given together")
        if self.edge_arity is not None and not self.clique_bound > self.edge_arity:
            raise InputError("clique_bound must exceed edge_arity")
        if len(set(self.colors)) != len(self.colors):
            raise InputError("color labels must be pairwise distinct")

    def to_json(self) -> dict:
        return {
            "colors": list(self.colors),
            "edge_arity": self.edge_arity,
            "clique_bound": self.clique_bound,
            "has_meet": self.has_meet,
        }


def signature_for_kind(kind: ClassKind, colors: tuple[str, ...]) -> IndexSignature:
    return IndexSignature(
        colors=tuple(colors),
        edge_arity=kind.edge_arity,
        clique_bound=kind.clique_bound,
        has_meet=kind.has_meet,
    )


class IndexStructure:
    """A finite fragment: ordered elements with colors, edges, optional meet.

    Elements are small integer ids.  The order is carried by a dense rational
    coordinate per element, so later insertions never disturb earlier order
    relations.  Instances are immutable; extension operations return fresh
    structures.
    """

    __slots__ = ("signature", "elements", "pos", "color", "edges", "meet", "_rank")

    def __init__(self, signature, elements, pos, color, edges, meet=None):
        self.signature = signature
        self.pos = dict(pos)
        self.elements = tuple(sorted(elements, key=lambda e: self.pos[e]))
        self.color = dict(color)
        self.edges = frozenset(frozenset(e) for e in edges)
        self.meet = dict(meet) if meet is not None else None
        self._rank = {e: i for i, e in enumerate(self.elements)}
        for e in self.elements:
            if e not in self.color:
                raise InputError(f"element {e} has no color")
        if len({self.pos[e] for e in self.elements}) != len(self.elements):
            raise InputError("order coordinates must be pairwise distinct")

    @classmethod
    def build(cls, signature: IndexSignature, points, edges=(), meet=None) -> "IndexStructure":
        """Build from (id, color) pairs in intended order, or (id, pos, color) triples."""
        pos, color = {}, {}
        for i, p in enumerate(points):
            if len(p) == 2:
                e, c = p
                pos[e] = Fraction(i)
            else:
                e, q, c = p
                pos[e] = Fraction(q)
            color[e] = c
        return cls(signature, list(pos), pos, color, edges, meet)

    # -- basic queries ------------------------------------------------------

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, e) -> bool:
        return e in self._rank

    def rank(self, e) -> int:
        return self._rank[e]

    def less(self, a, b) -> bool:
        return self.pos[a] < self.pos[b]

    def is_edge(self, elems) -> bool:
        return frozenset(elems) in self.edges

    def meet_of(self, a, b):
        if self.meet is None:
            return None
        return self.meet.get((a, b), self.meet.get((b, a)))

    def interval_elements(self, lo, hi):
        """Elements strictly between lo and hi (None = unbounded side)."""
        lo_p = self.pos[lo] if lo is not None else None
        hi_p = self.pos[hi] if hi is not None else None
        out = []
        for e in self.elements:
            p = self.pos[e]
            if (lo_p is None or p > lo_p) and (hi_p is None or p < hi_p):
                out.append(e)
        return out

    def fresh_id(self) -> int:
        return max(self.elements, default=-1) + 1

    def fresh_position(self, lo, hi) -> Fraction:
        """A coordinate strictly inside (lo, hi) unused by any element."""
        if lo is None and hi is None:
            cand = Fraction(0) if not self.elements else self.pos[self.elements[-1]] + 1
        elif lo is None:
            cand = self.pos[hi] - 1
        elif hi is None:
            cand = self.pos[lo] + 1
        else:
            cand = (self.pos[lo] + self.pos[hi]) / 2
        taken = set(self.pos.values())
        lo_p = self.pos[lo] if lo is not None else None
        while cand in taken:
            if lo_p is not None:
                cand = (lo_p + cand) / 2
            else:
                cand = cand - Fraction(1, 2)
        return cand

    def with_point(self, eid, position, color, new_edges=()) -> "IndexStructure":
        """Extension by one fresh element; meet (if any) extends as branch minimum."""
        if eid in self._rank:
            raise InputError(f"element id {eid} already present")
        pos = dict(self.pos)
        pos[eid] = Fraction(position)
        col = dict(self.color)
        col[eid] = color
        edges = set(self.edges) | {frozenset(e) for e in new_edges}
        meet = None
        if self.meet is not None:
            meet = dict(self.meet)
            for other in self.elements:
                lesser = other if self.pos[other] < pos[eid] else eid
                meet[(other, eid)] = lesser
                meet[(eid, other)] = lesser
            meet[(eid, eid)] = eid
        return IndexStructure(self.signature, list(pos), pos, col, edges, meet)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "elements": sorted(self.elements),
            "order": list(self.elements),
            "colors": {str(e): self.color[e] for e in self.elements},
            "edges": sorted(sorted(e) for e in self.edges),
            "signature": self.signature.to_json(),
            "meet": (
                sorted([a, b, m] for (a, b), m in self.meet.items() if a <= b)
                if self.meet is not None
                else None
            ),
        }

    @classmethod
    def from_json(cls, d: dict) -> "IndexStructure":
        sig = IndexSignature(
            colors=tuple(d["signature"]["colors"]),
            edge_arity=d["signature"]["edge_arity"],
            clique_bound=d["signature"]["clique_bound"],
            has_meet=d["signature"]["has_meet"],
        )
        order = d["order"]
        pos = {e: Fraction(i) for i, e in enumerate(order)}
        color = {int(k): v for k, v in d["colors"].items()}
        edges = [frozenset(e) for e in d["edges"]]
        meet = None
        if d.get("meet") is not None:
            meet = {}
            for a, b, m in d["meet"]:
                meet[(a, b)] = m
                meet[(b, a)] = m
        return cls(sig, order, pos, color, edges, meet)

    def canonical_key(self) -> str:
        return canon_json(self.to_json())

    def __repr__(self):
        return f"IndexStructure({len(self.elements)} elements, {len(self.edges)} edges)"


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def to_json(self):
        return {"code": self.code, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self):
        return {"ok": self.ok, "violations": [v.to_json() for v in self.violations]}


def find_clique(edges: frozenset, clique_size: int, edge_arity: int):
    """First vertex set of the given size whose edge_arity-subsets are all edges.

    Candidates are drawn from vertices incident to at least one edge, which is
    exhaustive: a clique of size >= edge_arity has every member on an edge.
    """
    support = sorted({v for e in edges for v in e})
    if len(support) < clique_size:
        return None
    for cand in itertools.combinations(support, clique_size):
        if all(frozenset(sub) in edges for sub in itertools.combinations(cand, edge_arity)):
            return cand
    return None


def validate_structure(s: IndexStructure, kind: ClassKind) -> ValidationReport:
    """Check class membership clauses; violations are data, not errors."""
    out = []
    sig = s.signature

    # order totality: distinct coordinates (construction enforces strictness)
    if len({s.pos[e] for e in s.elements}) != len(s.elements):
        out.append(Violation("order", "order coordinates are not pairwise distinct"))

    # coloring partitions the domain
    for e in s.elements:
        if s.color.get(e) is None:
            out.append(Violation("partition", f"element {e} is uncolored"))
        elif s.color[e] not in sig.colors:
            out.append(Violation("partition", f"element {e} has unknown color {s.color[e]!r}"))

    # signature/kind agreement
    if kind.name == KNK:
        if sig.edge_arity != kind.edge_arity or sig.clique_bound != kind.clique_bound:
            out.append(Violation("signature", "edge arity or clique bound does not match kind"))
    elif sig.edge_arity is not None:
        out.append(Violation("signature", f"{kind.name} structures carry no edge relation"))
    if kind.has_meet != sig.has_meet:
        out.append(Violation("signature", "meet presence does not match kind"))

    # edges well-formed
    for e in s.edges:
        if sig.edge_arity is None:
            break
        if len(e) != sig.edge_arity:
            out.append(Violation("edge_arity", f"edge {sorted(e)} has size {len(e)}"))
        if not all(v in s for v in e):
            out.append(Violation("edge_support", f"edge {sorted(e)} mentions unknown elements"))

    # forbidden clique
    if kind.name == KNK and sig.edge_arity is not None:
        clique = find_clique(s.edges, kind.clique_bound, sig.edge_arity)
        if clique is not None:
            out.append(Violation("clique", f"clique of size {kind.clique_bound}: {list(clique)}"))

    # meet laws: total, commutative, idempotent, associative, below both args
    if kind.has_meet:
        if s.meet is None:
            out.append(Violation("meet", "meet table missing"))
        else:
            els = s.elements
            for a in els:
                if s.meet_of(a, a) != a:
                    out.append(Violation("meet", f"meet({a},{a}) != {a}"))
            for a, b in itertools.combinations(els, 2):
                m = s.meet_of(a, b)
                if m is None:
                    out.append(Violation("meet", f"meet({a},{b}) undefined"))
                    continue
                if s.meet_of(b, a) != m:
                    out.append(Violation("meet", f"meet not commutative at ({a},{b})"))
                if m not in s:
                    out.append(Violation("meet", f"meet({a},{b}) outside structure"))
                elif s.pos[m] > s.pos[a] or s.pos[m] > s.pos[b]:
                    out.append(Violation("meet", f"meet({a},{b}) above an argument"))
            for a, b, c in itertools.combinations(els, 3):
                x = s.meet_of(s.meet_of(a, b), c) if s.meet_of(a, b) is not None else None
                y = s.meet_of(a, s.meet_of(b, c)) if s.meet_of(b, c) is not None else None
                if x != y:
                    out.append(Violation("meet", f"meet not associative at ({a},{b},{c})"))

    return ValidationReport(tuple(out))


def increasing_tuples(s: IndexStructure, n: int) -> list[tuple]:
    """All strictly order-increasing n-tuples, listed by element-id order."""
    if n < 0:
        raise InputError("tuple length must be nonnegative")
    if n == 0:
        return [()]
    ranked = [tuple(sorted(c, key=s.rank)) for c in itertools.combinations(s.elements, n)]
    return sorted(ranked)


def induced_substructure(s: IndexStructure, subset) -> IndexStructure:
    """Restriction to a subset (closed under meet first, when present)."""
    keep = set(subset)
    for e in keep:
        if e not in s:
            raise InputError(f"unknown element {e}")
    if s.meet is not None:
        changed = True
        while changed:
            changed = False
            for a, b in itertools.combinations(sorted(keep), 2):
                m = s.meet_of(a, b)
                if m is not None and m not in keep:
                    keep.add(m)
                    changed = True
    pos = {e: s.pos[e] for e in keep}
    color = {e: s.color[e] for e in keep}
    edges = [e for e in s.edges if e <= keep]
    meet = None
    if s.meet is not None:
        meet = {(a, b): m for (a, b), m in s.meet.items() if a in keep and b in keep}
    return IndexStructure(s.signature, list(keep), pos, color, edges, meet)


def is_separated(s: IndexStructure) -> bool:
    """True when distinct elements have distinct one-point types over the empty base."""
    from .qftypes import qf_type

    seen = {}
    for e in s.elements:
        t = qf_type((e,), (), s)
        if t in seen:
            return False
        seen[t] = e
    return True


@dataclass(frozen=True)
class ContextSpec:
    """A chosen base fragment together with its class kind."""

    kind: ClassKind
    base: IndexStructure

    def validate(self) -> ValidationReport:
        report = validate_structure(self.base, self.kind)
        extra = list(report.violations)
        if self.kind.name == KMU and self.kind.color_bound is not None:
            counts: dict = {}
            for e in self.base.elements:
                counts[self.base.color[e]] = counts.get(self.base.color[e], 0) + 1
            for c, cnt in sorted(counts.items()):
                if cnt > self.kind.color_bound:
                    extra.append(Violation("color_bound", f"color {c!r} has {cnt} base elements"))
        if self.kind.name == KNK:
            counts = {}
            for e in self.base.elements:
                counts[self.base.color[e]] = counts.get(self.base.color[e], 0) + 1
            if any(c != 1 for c in counts.values()):
                extra.append(Violation("cnk_base", "clique-free context base needs singleton colors"))
            if self.base.edges:
                extra.append(Violation("cnk_base", "clique-free context base must be edge-free"))
        return ValidationReport(tuple(extra))

    def to_json(self):
        return {"kind": self.kind.to_json(), "base": self.base.to_json()}
