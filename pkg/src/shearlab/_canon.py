"""Canonical JSON serialization: byte-stable output for verdicts and digests."""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction


def _default(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, frozenset):
        return sorted(obj, key=_sort_key)
    if isinstance(obj, (set, tuple)):
        return list(obj)
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"not canonically serializable: {type(obj).__name__}")


def _sort_key(x):
    # mixed-type sets (ints, tuples, strings) need a stable order
    return (type(x).__name__, repr(x))


def canon_json(obj) -> str:
    """Compact JSON with sorted keys; equal values serialize byte-identically."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default)


def digest(obj) -> str:
    return hashlib.blake2b(canon_json(obj).encode(), digest_size=16).hexdigest()
