"""Semilocking sets (siphons) and the geometry of their boundary faces."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .errors import EmptySet, NotSemilocking, TooLarge
from .model import ReactionNetwork
from .stoich import _face_kernel_from_basis, stoich_matrix, subspace_basis

DEFAULT_MAX_N = 24
_CHUNK = 1 << 20


class BoundaryKind(str, Enum):
    VERTEX = "vertex"
    FACET = "facet"
    OTHER = "other"


@dataclass(frozen=True)
class Boundary:
    kind: BoundaryKind
    face_dim: int

    def __str__(self):
        if self.kind is BoundaryKind.OTHER:
            return f"Other({self.face_dim})"
        return self.kind.value.capitalize()


def boundary_from_dims(face_dim: int, dim: int) -> Boundary:
    # a 0-dimensional face is reported as a vertex even when dim == 1
    if face_dim == 0:
        return Boundary(BoundaryKind.VERTEX, 0)
    if dim >= 1 and face_dim == dim - 1:
        return Boundary(BoundaryKind.FACET, face_dim)
    return Boundary(BoundaryKind.OTHER, face_dim)


@dataclass(frozen=True)
class ComplementPartition:
    """Split of the species outside W by how free they are on the face.

    ``tf``: changed by some reaction that can fire on the face.
    ``sr``: not in tf, but moves along some direction of the face.
    ``tr``: constant on the face.
    """

    tf: frozenset[int]
    sr: frozenset[int]
    tr: frozenset[int]


@dataclass(frozen=True)
class SemilockingReport:
    members: frozenset[int]
    trivial: bool
    boundary: Boundary
    complement_partition: ComplementPartition


def _check_set(net: ReactionNetwork, members) -> frozenset[int]:
    w = net.resolve(members)
    if not w:
        raise EmptySet("species set must be nonempty")
    return w


def semilocking_violation(net: ReactionNetwork, members: Iterable[int | str]) -> int | None:
    """Index of the first reaction that breaks the semilocking condition."""
    w = _check_set(net, members)
    for i, rx in enumerate(net.reactions):
        if w & rx.product.support and not w & rx.reactant.support:
            return i
    return None


def is_semilocking(net: ReactionNetwork, members: Iterable[int | str]) -> bool:
    """Any reaction producing something in W must also consume something in W."""
    return semilocking_violation(net, members) is None


def _support_masks(net: ReactionNetwork) -> tuple[np.ndarray, np.ndarray]:
    def mask(support):
        return sum(1 << j for j in support)

    reac = np.array([mask(rx.reactant.support) for rx in net.reactions], dtype=np.int64)
    prod = np.array([mask(rx.product.support) for rx in net.reactions], dtype=np.int64)
    return reac, prod


def semilocking_masks(net: ReactionNetwork, max_n: int = DEFAULT_MAX_N) -> list[int]:
    """Bitmasks of all semilocking sets, checked exhaustively.

    Subsets are swept in vectorised chunks; a reaction whose product support
    misses W imposes nothing, so only reactions with a nonempty product
    support are tested.
    """
    n = net.n
    if n > max_n:
        raise TooLarge(f"{n} species exceeds the enumeration cap of {max_n}")
    reac, prod = _support_masks(net)
    keep = prod != 0
    reac, prod = reac[keep], prod[keep]
    found = []
    total = 1 << n
    for start in range(1, total, _CHUNK):
        w = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        ok = np.ones(w.shape, dtype=bool)
        for rm, pm in zip(reac, prod):
            ok &= ((w & pm) == 0) | ((w & rm) != 0)
        found.extend(int(x) for x in w[ok])
    return found


def _mask_to_set(mask: int) -> frozenset[int]:
    return frozenset(j for j in range(mask.bit_length()) if mask >> j & 1)


def _order_key(members: frozenset[int]):
    return (len(members), tuple(sorted(members)))


def _classify(basis, members, dim) -> tuple[Boundary, list]:
    kernel = _face_kernel_from_basis(basis, members)
    return boundary_from_dims(len(kernel), dim), kernel


def _partition(net: ReactionNetwork, members: frozenset[int], kernel) -> ComplementPartition:
    comp = net.all_species - members
    tf = set()
    for rx in net.reactions:
        if rx.species <= comp:
            tf |= {j for j in rx.species if rx.net_change(j) != 0}
    sr = {j for j in comp - tf if any(v[j] != 0 for v in kernel)}
    tr = comp - tf - sr
    return ComplementPartition(frozenset(tf), frozenset(sr), frozenset(tr))


def _report(net: ReactionNetwork, members: frozenset[int], basis) -> SemilockingReport:
    boundary, kernel = _classify(basis, members, len(basis))
    return SemilockingReport(
        members=members,
        trivial=members == net.all_species,
        boundary=boundary,
        complement_partition=_partition(net, members, kernel),
    )


def enumerate_semilocking(net: ReactionNetwork, max_n: int = DEFAULT_MAX_N) -> list[SemilockingReport]:
    """All semilocking sets with boundary class and complement partition.

    Sorted by size, then lexicographically by species indices.
    """
    sets = sorted((_mask_to_set(m) for m in semilocking_masks(net, max_n)), key=_order_key)
    basis = subspace_basis(stoich_matrix(net)).vectors
    return [_report(net, w, basis) for w in sets]


def minimal_semilocking(net: ReactionNetwork, max_n: int = DEFAULT_MAX_N) -> list[frozenset[int]]:
    sets = sorted((_mask_to_set(m) for m in semilocking_masks(net, max_n)), key=_order_key)
    minimal: list[frozenset[int]] = []
    for w in sets:
        if not any(m <= w for m in minimal):
            minimal.append(w)
    return minimal


def _require_semilocking(net, members) -> frozenset[int]:
    w = _check_set(net, members)
    bad = semilocking_violation(net, w)
    if bad is not None:
        raise NotSemilocking(
            f"{{{', '.join(net.format_set(w))}}} is not semilocking (reaction {bad}: "
            f"{net.reactions[bad].format(net.names)})"
        )
    return w


def classify_boundary(net: ReactionNetwork, members: Iterable[int | str]) -> Boundary:
    w = _require_semilocking(net, members)
    basis = subspace_basis(stoich_matrix(net)).vectors
    return _classify(basis, w, len(basis))[0]


def partition_complement(net: ReactionNetwork, members: Iterable[int | str]) -> ComplementPartition:
    w = _require_semilocking(net, members)
    basis = subspace_basis(stoich_matrix(net)).vectors
    return _partition(net, w, _face_kernel_from_basis(basis, w))


def semilocking_report(net: ReactionNetwork, members: Iterable[int | str]) -> SemilockingReport:
    w = _require_semilocking(net, members)
    return _report(net, w, subspace_basis(stoich_matrix(net)).vectors)
