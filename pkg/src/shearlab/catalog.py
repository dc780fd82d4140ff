"""Builtin context catalog: the fragments every demonstration runs against."""

from __future__ import annotations

from .structures import ClassKind, ContextSpec, IndexStructure, InputError, signature_for_kind


def linear_context(size: int = 4) -> ContextSpec:
    kind = ClassKind.linear()
    sig = signature_for_kind(kind, ("e",))
    base = IndexStructure.build(sig, [(i, "e") for i in range(size)])
    return ContextSpec(kind, base)


def kmu_separated_context(size: int = 4) -> ContextSpec:
    kind = ClassKind.kmu(color_bound=1)
    colors = tuple(f"C{i}" for i in range(size))
    sig = signature_for_kind(kind, colors)
    base = IndexStructure.build(sig, [(i, colors[i]) for i in range(size)])
    return ContextSpec(kind, base)


def cnk_context(n: int, k: int, size: int = 4) -> ContextSpec:
    """Singleton-colored edge-free base for the clique-free hyperedge class."""
    kind = ClassKind.knk(n, k)
    colors = tuple(f"P{i}" for i in range(size))
    sig = signature_for_kind(kind, colors)
    base = IndexStructure.build(sig, [(i, colors[i]) for i in range(size)])
    return ContextSpec(kind, base)


def tree_branch_context(size: int = 4) -> ContextSpec:
    kind = ClassKind.tree_branch()
    sig = signature_for_kind(kind, ("b",))
    meet = {}
    for a in range(size):
        for b in range(size):
            meet[(a, b)] = min(a, b)
    base = IndexStructure(
        sig,
        list(range(size)),
        {i: i for i in range(size)},
        {i: "b" for i in range(size)},
        [],
        meet,
    )
    return ContextSpec(kind, base)


def builtin_context(name: str) -> ContextSpec:
    """Resolve a catalog name: linear, kmu-separated, cnk:<n>:<k>, tree-branch:<m>."""
    if name == "linear":
        return linear_context()
    if name == "kmu-separated":
        return kmu_separated_context()
    if name.startswith("cnk:"):
        parts = name.split(":")
        if len(parts) != 3:
            raise InputError("expected cnk:<n>:<k>")
        return cnk_context(int(parts[1]), int(parts[2]))
    if name.startswith("tree-branch:"):
        return tree_branch_context(int(name.split(":")[1]))
    raise InputError(f"unknown context {name!r}")
