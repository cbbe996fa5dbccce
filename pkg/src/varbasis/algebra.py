"""Variable-basis vectors and their composition laws.

A :class:`VBVector` carries a basis (a finite set of integer labels) and one
real coordinate per label. A label in the basis with coordinate ``0.0`` is a
present species with zero abundance; a label outside the basis is an absent
species. No operation here ever drops a label because its value is zero.

Two internal laws are provided:

* :func:`union_add` sums over the union of the bases (species addition),
  with the empty-basis vector as neutral element.
* :func:`inter_add` sums over the intersection of the bases (species
  retention), with the all-zero full-universe vector as neutral element.

and one external law, :func:`scale`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DomainError

Label = int
DEFAULT_ATOL = 1e-12


@dataclass(frozen=True)
class Universe:
    """Finite label universe, split into known and reserved-unknown labels."""

    known: tuple[Label, ...]
    unknown_reserve: tuple[Label, ...] = ()
    names: Mapping[Label, str] | None = None

    def __post_init__(self):
        known = tuple(int(i) for i in self.known)
        reserve = tuple(int(i) for i in self.unknown_reserve)
        if len(set(known)) != len(known) or len(set(reserve)) != len(reserve):
            raise DomainError("universe labels must be unique")
        overlap = set(known) & set(reserve)
        if overlap:
            raise DomainError(f"known and unknown labels overlap: {sorted(overlap)}")
        if any(i < 0 for i in known + reserve):
            raise DomainError("labels must be natural numbers")
        object.__setattr__(self, "known", known)
        object.__setattr__(self, "unknown_reserve", reserve)

    @classmethod
    def range(cls, n: int, start: int = 1) -> "Universe":
        return cls(tuple(range(start, start + n)))

    @property
    def labels(self) -> frozenset[Label]:
        return frozenset(self.known) | frozenset(self.unknown_reserve)

    def ordered(self) -> tuple[Label, ...]:
        return tuple(sorted(self.labels))

    def __contains__(self, label) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.known) + len(self.unknown_reserve)

    def check(self, labels: Iterable[Label]) -> None:
        """Raise DomainError if any label is outside the universe."""
        outside = sorted(set(labels) - self.labels)
        if outside:
            raise DomainError(f"labels outside universe: {outside}")

    def name(self, label: Label) -> str:
        if self.names and label in self.names:
            return self.names[label]
        return str(label)


class VBVector:
    """Immutable basis-stamped sparse real vector.

    Args:
        coords: mapping (or iterable of pairs) label -> coordinate. The key
            set is the basis.

    Equality is exact on both basis and coordinates. Use :meth:`isclose` for
    tolerance-based comparison.
    """

    __slots__ = ("_items", "_basis", "_hash")

    def __init__(self, coords: Mapping[Label, float] | Iterable[tuple[Label, float]] = ()):
        if isinstance(coords, Mapping):
            pairs = coords.items()
        else:
            pairs = coords
        d: dict[int, float] = {}
        for label, value in pairs:
            label = int(label)
            if label in d:
                raise ValueError(f"duplicate label {label}")
            d[label] = float(value)
        items = tuple(sorted(d.items()))
        object.__setattr__(self, "_items", items)
        object.__setattr__(self, "_basis", frozenset(d))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("VBVector is immutable")

    @classmethod
    def from_arrays(cls, labels: Iterable[Label], values: Iterable[float]) -> "VBVector":
        return cls(zip(labels, values))

    @property
    def basis(self) -> frozenset[Label]:
        return self._basis

    @property
    def labels(self) -> tuple[Label, ...]:
        """Basis labels in ascending order."""
        return tuple(k for k, _ in self._items)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v in self._items)

    def items(self):
        return self._items

    def as_dict(self) -> dict[Label, float]:
        return dict(self._items)

    def __getitem__(self, label: Label) -> float:
        for k, v in self._items:
            if k == label:
                return v
        raise KeyError(label)

    def get(self, label: Label, default=None):
        try:
            return self[label]
        except KeyError:
            return default

    def __contains__(self, label) -> bool:
        return label in self._basis

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self.labels)

    def is_empty(self) -> bool:
        return not self._items

    def __eq__(self, other) -> bool:
        if not isinstance(other, VBVector):
            return NotImplemented
        return self._items == other._items

    def __hash__(self) -> int:
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(self._items))
        return self._hash

    def isclose(self, other: "VBVector", atol: float = DEFAULT_ATOL) -> bool:
        """Same basis exactly, coordinates within ``atol``."""
        if self._basis != other._basis:
            return False
        return all(
            math.isclose(a, b, rel_tol=0.0, abs_tol=atol)
            for (_, a), (_, b) in zip(self._items, other._items)
        )

    def __repr__(self) -> str:
        if not self._items:
            return "VBVector(∅)"
        body = ", ".join(f"{k}: {v!r}" for k, v in self._items)
        return f"VBVector({{{body}}})"

    # operator sugar; the named functions below are the primary API
    def __or__(self, other):
        return union_add(self, other)

    def __and__(self, other):
        return inter_add(self, other)

    def __rmul__(self, a):
        return scale(a, self)


def _check(universe: Universe | None, *vectors: VBVector) -> None:
    if universe is None:
        return
    for v in vectors:
        universe.check(v.basis)


def union_add(x: VBVector, y: VBVector, universe: Universe | None = None) -> VBVector:
    """Sum over the united basis; a coordinate missing from one operand counts as 0."""
    _check(universe, x, y)
    out = x.as_dict()
    for k, v in y.items():
        out[k] = out[k] + v if k in out else v
    return VBVector(out)


def inter_add(x: VBVector, y: VBVector, universe: Universe | None = None) -> VBVector:
    """Sum over the common basis; labels outside the intersection are dropped."""
    _check(universe, x, y)
    yd = y.as_dict()
    return VBVector((k, v + yd[k]) for k, v in x.items() if k in yd)


def scale(a: float, x: VBVector) -> VBVector:
    """External law. ``scale(0, x)`` keeps x's basis with all-zero coordinates."""
    a = float(a)
    return VBVector((k, a * v) for k, v in x.items())


def project(x: VBVector, target: Iterable[Label]) -> VBVector:
    target = frozenset(target)
    return VBVector((k, v) for k, v in x.items() if k in target)


def unit_from(x: VBVector) -> VBVector:
    return VBVector((k, 1.0) for k in x.labels)


def unit_on(labels: Iterable[Label], universe: Universe | None = None) -> VBVector:
    labels = frozenset(labels)
    if universe is not None:
        universe.check(labels)
    return VBVector((k, 1.0) for k in labels)


def zero_empty() -> VBVector:
    """Neutral element of :func:`union_add`: the vector on the empty basis."""
    return ZERO


def zero_full(universe: Universe) -> VBVector:
    """Neutral element of :func:`inter_add`: every universe label at 0.0."""
    return VBVector((k, 0.0) for k in universe.labels)


ZERO = VBVector()
