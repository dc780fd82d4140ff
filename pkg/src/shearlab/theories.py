"""Consistency oracles for the target theories.

Two families of theories are supported, both with quantifier elimination down
to the edge relation:

- the random graph (binary edge, no forbidden configuration), and
- the generic clique-free hypergraph with (k+1)-ary edges and no clique of
  size n+1 (n > k >= 2; the graph regime k = 1 is admitted through a separate
  constructor solely to host non-simple counterexamples).

A formula in one free variable is a conjunction of signed edge atoms pairing
the variable with parameter tuples, plus inequations.  Deciding consistency of
such a formula over a finite parameter model is exact: a conjunction is
unsatisfiable precisely when some parameter tuple is demanded both positively
and negatively, or (hypergraph case) the positive demands complete a forbidden
clique with n parameters that already form a complete hypergraph.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ._canon import canon_json
from .structures import InputError, find_clique


class OracleSizeError(ValueError):
    """Brute-force oracle refused: parameter model above the documented bound."""


@dataclass(frozen=True)
class TheorySpec:
    kind: str  # RANDOM_GRAPH | GENERIC_HYPERGRAPH
    n: int | None = None
    k: int | None = None
    non_simple_regime: bool = False

    def __post_init__(self):
        if self.kind == "GENERIC_HYPERGRAPH":
            if self.non_simple_regime:
                if not (self.n > self.k >= 1):
                    raise InputError("relaxed hypergraph regime requires n > k >= 1")
            elif not (self.n > self.k >= 2):
                raise InputError("generic hypergraph requires n > k >= 2")
        elif self.kind != "RANDOM_GRAPH":
            raise InputError(f"unknown theory {self.kind!r}")

    @classmethod
    def random_graph(cls) -> "TheorySpec":
        return cls("RANDOM_GRAPH")

    @classmethod
    def generic_hypergraph(cls, n: int, k: int) -> "TheorySpec":
        return cls("GENERIC_HYPERGRAPH", n=n, k=k)

    @classmethod
    def forbidden_clique_graph(cls, n: int) -> "TheorySpec":
        """Graphs with no (n+1)-clique: the non-simple k=1 regime."""
        return cls("GENERIC_HYPERGRAPH", n=n, k=1, non_simple_regime=True)

    @property
    def edge_arity(self) -> int:
        return 2 if self.kind == "RANDOM_GRAPH" else self.k + 1

    @property
    def clique_size(self) -> int | None:
        return None if self.kind == "RANDOM_GRAPH" else self.n + 1

    def to_json(self):
        return {"kind": self.kind, "n": self.n, "k": self.k}


class ParamModel:
    """Finite parameter model: elements plus the positive edge diagram."""

    __slots__ = ("theory", "elements", "diagram")

    def __init__(self, theory: TheorySpec, elements, diagram=()):
        self.theory = theory
        self.elements = tuple(sorted(elements))
        self.diagram = frozenset(frozenset(e) for e in diagram)
        arity = theory.edge_arity
        for e in self.diagram:
            if len(e) != arity:
                raise InputError(f"diagram tuple {sorted(e)} has wrong arity")
            if not e <= set(self.elements):
                raise InputError(f"diagram tuple {sorted(e)} outside model")
        if theory.clique_size is not None:
            clique = find_clique(self.diagram, theory.clique_size, arity)
            if clique is not None:
                raise InputError(f"diagram contains forbidden clique {list(clique)}")

    def __contains__(self, e):
        return e in set(self.elements)

    def __len__(self):
        return len(self.elements)

    def to_json(self):
        return {
            "theory": self.theory.to_json(),
            "elements": list(self.elements),
            "diagram": sorted(sorted(e) for e in self.diagram),
        }


@dataclass(frozen=True)
class FormulaTemplate:
    """Conjunction shape: signed atoms pair the free variable with slot subsets.

    Atom slot-subsets have size edge_arity - 1.  Positive and negative atom
    sets may overlap at the slot level; collisions appear (or not) only after
    binding.
    """

    slots: int
    positive: frozenset[frozenset[int]] = frozenset()
    negative: frozenset[frozenset[int]] = frozenset()
    inequations: frozenset[int] = frozenset()

    def __post_init__(self):
        for atom in self.positive | self.negative:
            if not atom or not all(0 <= i < self.slots for i in atom):
                raise InputError("atom slots out of range")
        if not all(0 <= i < self.slots for i in self.inequations):
            raise InputError("inequation slot out of range")

    def atom_size(self) -> int:
        sizes = {len(a) for a in self.positive | self.negative}
        if len(sizes) > 1:
            raise InputError("mixed atom sizes in one template")
        return sizes.pop() if sizes else 0

    def to_json(self):
        return {
            "slots": self.slots,
            "pos": sorted(sorted(a) for a in self.positive),
            "neg": sorted(sorted(a) for a in self.negative),
            "neq": sorted(self.inequations),
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            slots=d["slots"],
            positive=frozenset(frozenset(a) for a in d["pos"]),
            negative=frozenset(frozenset(a) for a in d["neg"]),
            inequations=frozenset(d["neq"]),
        )

    @classmethod
    def all_positive(cls, slots: int, atom_size: int) -> "FormulaTemplate":
        """Every atom_size-subset of the slots demanded positively."""
        return cls(
            slots=slots,
            positive=frozenset(frozenset(c) for c in itertools.combinations(range(slots), atom_size)),
        )


@dataclass(frozen=True)
class FormulaInstance:
    template: FormulaTemplate
    binding: tuple[int, ...]

    def __post_init__(self):
        if len(self.binding) != self.template.slots:
            raise InputError("binding length must equal slot count")

    def bound_literals(self):
        """(positive element-sets, negative element-sets, degenerate positives)

        A positive atom binding two slots to one element is a reflexive edge
        demand, which is unsatisfiable; it is reported separately.
        """
        pos, neg = set(), set()
        degenerate = False
        for atom in self.template.positive:
            elems = frozenset(self.binding[i] for i in atom)
            if len(elems) < len(atom):
                degenerate = True
            else:
                pos.add(elems)
        for atom in self.template.negative:
            elems = frozenset(self.binding[i] for i in atom)
            if len(elems) == len(atom):
                neg.add(elems)
        return pos, neg, degenerate

    def to_json(self):
        return {"template": self.template.to_json(), "binding": list(self.binding)}

    def key(self) -> str:
        return canon_json(self.to_json())


def _check_arity(m: ParamModel, template: FormulaTemplate):
    size = template.atom_size()
    if size and size != m.theory.edge_arity - 1:
        raise InputError(
            f"atom size {size} does not fit edge arity {m.theory.edge_arity}"
        )


def _literals_consistent(m: ParamModel, pos, neg, degenerate) -> bool:
    if degenerate:
        return False
    if pos & neg:
        return False
    if m.theory.clique_size is None:
        return True
    n = m.theory.n
    k = m.theory.edge_arity - 1
    support = sorted({v for a in pos for v in a})
    if len(support) < n:
        return True
    for cand in itertools.combinations(support, n):
        cset = set(cand)
        if all(frozenset(c) in pos for c in itertools.combinations(cand, k)) and all(
            frozenset(c) in m.diagram for c in itertools.combinations(cand, k + 1)
        ):
            return False
    return True


def instance_consistent(m: ParamModel, phi: FormulaInstance) -> bool:
    """Exact satisfiability of one instance over the model, per elimination of
    quantifiers: inequations never block (models are infinite)."""
    _check_arity(m, phi.template)
    for e in phi.binding:
        if e not in m:
            raise InputError(f"binding element {e} outside model")
    pos, neg, degenerate = phi.bound_literals()
    return _literals_consistent(m, pos, neg, degenerate)


def merge_literals(instances):
    pos, neg = set(), set()
    degenerate = False
    for inst in instances:
        p, n, d = inst.bound_literals()
        pos |= p
        neg |= n
        degenerate = degenerate or d
    return pos, neg, degenerate


@dataclass(frozen=True)
class FamilyVerdict:
    consistent: bool
    core: tuple[FormulaInstance, ...] | None = None
    core_bound_exceeded: bool = False

    def to_json(self):
        return {
            "consistent": self.consistent,
            "core": [i.to_json() for i in self.core] if self.core is not None else None,
            "core_bound_exceeded": self.core_bound_exceeded,
        }


def _subfamily_consistent(m, instances) -> bool:
    pos, neg, degenerate = merge_literals(instances)
    return _literals_consistent(m, pos, neg, degenerate)


def family_consistent(m: ParamModel, family, core_bound: int = 6) -> FamilyVerdict:
    """Joint satisfiability of a family, with a subset-minimal core when not.

    Cores of size <= 3 come from breadth-first subset growth (smallest first);
    larger ones from deterministic deletion shrinking, so every returned core
    is subset-minimal either way.
    """
    instances = sorted(family, key=lambda i: i.key())
    for inst in instances:
        _check_arity(m, inst.template)
    if _subfamily_consistent(m, instances):
        return FamilyVerdict(True)

    bfs_cap = min(3, core_bound)
    for size in range(1, bfs_cap + 1):
        for subset in itertools.combinations(instances, size):
            if not _subfamily_consistent(m, subset):
                return FamilyVerdict(False, core=subset)

    # deletion shrink over a fixed order; one pass already yields a
    # subset-minimal core since consistency is inherited by subsets
    core = list(instances)
    for inst in instances:
        if inst not in core:
            continue
        trial = [i for i in core if i is not inst]
        if not _subfamily_consistent(m, trial):
            core = trial
    if len(core) > core_bound:
        return FamilyVerdict(False, core=None, core_bound_exceeded=True)
    return FamilyVerdict(False, core=tuple(core))


def brute_force_consistency_oracle(m: ParamModel, phi_or_family, size_bound: int = 10) -> bool:
    """Independent oracle: construct the one-point extension and scan it.

    Adds a fresh witness, realizes exactly the demanded positive edges (any
    undemanded edge is set negative, which can only avoid cliques), then
    exhaustively scans all clique-size subsets of the extended diagram.
    """
    if len(m) > size_bound:
        raise OracleSizeError(f"model size {len(m)} exceeds bound {size_bound}")
    if isinstance(phi_or_family, FormulaInstance):
        instances = [phi_or_family]
    else:
        instances = list(phi_or_family)
    pos, neg, degenerate = merge_literals(instances)
    if degenerate:
        return False
    if pos & neg:
        return False
    if m.theory.clique_size is None:
        return True
    witness = (max(m.elements) + 1) if m.elements else 0
    extended = set(m.diagram) | {a | {witness} for a in pos}
    clique = find_clique(frozenset(extended), m.theory.clique_size, m.theory.edge_arity)
    return clique is None


def tp_sequence_triangle_free(n: int, length: int):
    """Sequence of parameter columns whose instance family is pairwise
    inconsistent while every member is consistent.

    Hosted in the (n+1)-clique-free graph regime.  Column i carries elements
    a(0,i)..a(n-1,i); edges join distinct rows of distinct columns, and rows
    0..n-2 of each column form an internal clique.  For n = 2 the internal
    part is empty and the parameters are exactly a bipartite complement of a
    matching.  Each instance demands the variable adjacent to its whole
    column; two instances then force a clique of size n+1.
    """
    if n < 2 or length < 1:
        raise InputError("need n >= 2 and length >= 1")
    theory = TheorySpec.forbidden_clique_graph(n)

    def eid(row, col):
        return col * n + row

    elements = [eid(r, c) for c in range(length) for r in range(n)]
    edges = set()
    for i, j in itertools.combinations(range(length), 2):
        for s in range(n):
            for t in range(n):
                if s != t:
                    edges.add(frozenset({eid(s, i), eid(t, j)}))
    for i in range(length):
        for s, t in itertools.combinations(range(n - 1), 2):
            edges.add(frozenset({eid(s, i), eid(t, i)}))
    model = ParamModel(theory, elements, edges)
    template = FormulaTemplate(
        slots=n,
        positive=frozenset(frozenset({s}) for s in range(n)),
    )
    instances = [
        FormulaInstance(template, tuple(eid(r, c) for r in range(n))) for c in range(length)
    ]
    return model, instances
