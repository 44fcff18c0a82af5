"""Data model for delayed mass-action reaction networks.

A network is the usual (species, complexes, reactions) triple together with
one rate constant and one non-negative delay per reaction, and an optional
partition of the reactions into subnetworks ("blocks").  Everything here is
immutable once constructed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BlockOutOfRange,
    DegenerateReaction,
    NegativeDelay,
    NetworkError,
    NoPartition,
    NonPositiveRate,
    UnknownSpecies,
)

NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class Species:
    index: int
    name: str


@dataclass(frozen=True)
class Complex:
    """Sparse non-negative integer combination of species.

    ``coeffs`` is a sorted tuple of ``(species_index, coefficient)`` pairs with
    every coefficient >= 1.  The empty tuple is the zero complex.
    """

    coeffs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        items = tuple(sorted((int(j), int(c)) for j, c in self.coeffs))
        seen = set()
        for j, c in items:
            if c < 1:
                raise NetworkError(f"stoichiometric coefficient {c} for species {j} must be >= 1")
            if j < 0:
                raise NetworkError(f"negative species index {j}")
            if j in seen:
                raise NetworkError(f"species index {j} repeated in complex")
            seen.add(j)
        object.__setattr__(self, "coeffs", items)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]) -> "Complex":
        return cls(tuple((j, c) for j, c in mapping.items() if c != 0))

    @classmethod
    def zero(cls) -> "Complex":
        return cls(())

    @property
    def support(self) -> frozenset[int]:
        return frozenset(j for j, _ in self.coeffs)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def get(self, j: int) -> int:
        for i, c in self.coeffs:
            if i == j:
                return c
        return 0

    def as_dict(self) -> dict[int, int]:
        return dict(self.coeffs)

    def vector(self, n: int) -> np.ndarray:
        v = np.zeros(n, dtype=np.int64)
        for j, c in self.coeffs:
            v[j] = c
        return v

    def project(self, keep: Iterable[int]) -> "Complex":
        keep = set(keep)
        return Complex(tuple((j, c) for j, c in self.coeffs if j in keep))

    def format(self, names: Sequence[str]) -> str:
        if not self.coeffs:
            return "0"
        return " + ".join(names[j] if c == 1 else f"{c} {names[j]}" for j, c in self.coeffs)


@dataclass(frozen=True)
class Reaction:
    reactant: Complex
    product: Complex
    rate_k: float
    delay_tau: float = 0.0

    def __post_init__(self):
        k = float(self.rate_k)
        tau = float(self.delay_tau)
        if not math.isfinite(k) or k <= 0:
            raise NonPositiveRate(f"rate constant must be positive and finite, got {self.rate_k!r}")
        if not math.isfinite(tau) or tau < 0:
            raise NegativeDelay(f"delay must be non-negative and finite, got {self.delay_tau!r}")
        if self.reactant == self.product:
            raise DegenerateReaction("reactant and product complexes are identical")
        object.__setattr__(self, "rate_k", k)
        object.__setattr__(self, "delay_tau", tau)

    @property
    def species(self) -> frozenset[int]:
        return self.reactant.support | self.product.support

    def net_change(self, j: int) -> int:
        return self.product.get(j) - self.reactant.get(j)

    def format(self, names: Sequence[str]) -> str:
        return f"{self.reactant.format(names)} -> {self.product.format(names)}"


@dataclass(frozen=True)
class ReactionNetwork:
    """Delayed mass-action system with an optional subnetwork partition.

    ``partition`` holds disjoint blocks of reaction indices.  When it comes
    from a file without any ``subnet`` section the parser stores a single
    block and sets ``implicit_partition`` so serialization leaves it out.
    """

    species: tuple[Species, ...]
    reactions: tuple[Reaction, ...]
    partition: tuple[frozenset[int], ...] | None = None
    block_names: tuple[str, ...] | None = None
    implicit_partition: bool = False
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        if self.partition is not None:
            object.__setattr__(self, "partition", tuple(frozenset(b) for b in self.partition))
            if self.block_names is None:
                names = tuple(f"block{p}" for p in range(len(self.partition)))
                object.__setattr__(self, "block_names", names)
            else:
                object.__setattr__(self, "block_names", tuple(self.block_names))
        object.__setattr__(self, "_index", {s.name: s.index for s in self.species})

    @classmethod
    def build(
        cls,
        species: Sequence[str],
        reactions: Iterable[tuple],
        partition: Sequence[Iterable[int]] | None = None,
        block_names: Sequence[str] | None = None,
    ) -> "ReactionNetwork":
        """Convenience constructor.

        Each reaction is ``(reactant, product, k, tau)`` where the complexes
        are ``{name: coefficient}`` dicts (or ``Complex`` instances).
        """
        sp = tuple(Species(i, name) for i, name in enumerate(species))
        index = {s.name: s.index for s in sp}

        def to_complex(c):
            if isinstance(c, Complex):
                return c
            try:
                return Complex.from_mapping({index[name]: coeff for name, coeff in c.items()})
            except KeyError as exc:
                raise UnknownSpecies(f"unknown species {exc.args[0]!r}") from None

        rx = []
        for item in reactions:
            reactant, product, k = item[0], item[1], item[2]
            tau = item[3] if len(item) > 3 else 0.0
            rx.append(Reaction(to_complex(reactant), to_complex(product), k, tau))
        part = None if partition is None else tuple(frozenset(b) for b in partition)
        names = None if block_names is None else tuple(block_names)
        return cls(sp, tuple(rx), part, names)

    # -- basic accessors -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.species)

    @property
    def r(self) -> int:
        return len(self.reactions)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.species)

    @property
    def all_species(self) -> frozenset[int]:
        return frozenset(range(self.n))

    def index_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownSpecies(f"unknown species {name!r}") from None

    def resolve(self, members: Iterable[int | str]) -> frozenset[int]:
        """Turn a collection of species names and/or indices into indices."""
        out = set()
        for m in members:
            if isinstance(m, str):
                out.add(self.index_of(m))
            else:
                j = int(m)
                if not 0 <= j < self.n:
                    raise UnknownSpecies(f"species index {j} out of range")
                out.add(j)
        return frozenset(out)

    def format_set(self, members: Iterable[int]) -> list[str]:
        return [self.species[j].name for j in sorted(members)]

    def with_params(self, rates=None, delays=None) -> "ReactionNetwork":
        """Copy with some or all rate constants / delays replaced."""
        rates = [r.rate_k for r in self.reactions] if rates is None else list(rates)
        if delays is None:
            delays = [r.delay_tau for r in self.reactions]
        elif np.ndim(delays) == 0:
            delays = [float(delays)] * self.r
        else:
            delays = list(delays)
        if len(rates) != self.r or len(delays) != self.r:
            raise NetworkError(f"expected {self.r} rates and delays")
        rx = tuple(
            Reaction(r.reactant, r.product, k, tau)
            for r, k, tau in zip(self.reactions, rates, delays)
        )
        return ReactionNetwork(self.species, rx, self.partition, self.block_names, self.implicit_partition)

    def blocks(self) -> tuple[frozenset[int], ...]:
        """Partition blocks, or one block holding every reaction."""
        if self.partition is None:
            return (frozenset(range(self.r)),)
        return self.partition

    # -- array views used by the numerics --------------------------------

    def reactant_matrix(self) -> np.ndarray:
        """r x n matrix of reactant coefficients."""
        return np.array([rx.reactant.vector(self.n) for rx in self.reactions], dtype=np.int64).reshape(self.r, self.n)

    def product_matrix(self) -> np.ndarray:
        return np.array([rx.product.vector(self.n) for rx in self.reactions], dtype=np.int64).reshape(self.r, self.n)

    @property
    def rates(self) -> np.ndarray:
        return np.array([rx.rate_k for rx in self.reactions], dtype=float)

    @property
    def delays(self) -> np.ndarray:
        return np.array([rx.delay_tau for rx in self.reactions], dtype=float)


def validate_network(net: ReactionNetwork) -> list[str]:
    """Check the structural invariants; return one message per violation."""
    diags = []
    seen_names = {}
    for pos, s in enumerate(net.species):
        if s.index != pos:
            diags.append(f"species {s.name} has index {s.index}, expected {pos}")
        if not NAME_RE.match(s.name):
            diags.append(f"species name {s.name!r} is not a valid identifier")
        if s.name in seen_names:
            diags.append(f"species name {s.name} duplicated at index {pos}")
        seen_names.setdefault(s.name, pos)

    used = set()
    for i, rx in enumerate(net.reactions):
        bad = sorted(j for j in rx.species if j >= net.n)
        if bad:
            diags.append(f"reaction {i} references unknown species index {bad[0]}")
        used |= rx.species
    for s in net.species:
        if s.index not in used:
            diags.append(f"species {s.name} unused")
    if net.r == 0:
        diags.append("network has no reactions")

    if net.partition is not None:
        owner = {}
        for p, block in enumerate(net.partition):
            if not block:
                diags.append(f"partition block {p} is empty")
            for i in sorted(block):
                if not 0 <= i < net.r:
                    diags.append(f"partition block {p} references unknown reaction {i}")
                elif i in owner:
                    diags.append(f"partition blocks overlap at reaction {i}")
                else:
                    owner[i] = p
        for i in range(net.r):
            if i not in owner:
                diags.append(f"reaction {i} not covered by partition")
        if net.block_names is not None and len(net.block_names) != len(net.partition):
            diags.append("block name count does not match partition")
    return diags


def species_of_block(net: ReactionNetwork, p: int) -> frozenset[int]:
    """Species touched by the reactions of block ``p``."""
    if net.partition is None:
        raise NoPartition("network has no subnetwork partition")
    if not 0 <= p < len(net.partition):
        raise BlockOutOfRange(f"block {p} out of range (network has {len(net.partition)} blocks)")
    out = set()
    for i in net.partition[p]:
        out |= net.reactions[i].species
    return frozenset(out)


def block_network(net: ReactionNetwork, p: int) -> ReactionNetwork:
    """Block ``p`` as a standalone network over its own species."""
    species = sorted(species_of_block(net, p))
    remap = {j: i for i, j in enumerate(species)}
    rx = []
    for i in sorted(net.partition[p]):
        r = net.reactions[i]
        rx.append(
            Reaction(
                Complex(tuple((remap[j], c) for j, c in r.reactant.coeffs)),
                Complex(tuple((remap[j], c) for j, c in r.product.coeffs)),
                r.rate_k,
                r.delay_tau,
            )
        )
    sp = tuple(Species(i, net.species[j].name) for i, j in enumerate(species))
    return ReactionNetwork(sp, tuple(rx), (frozenset(range(len(rx))),), (net.block_names[p],))


def with_single_block(net: ReactionNetwork) -> ReactionNetwork:
    """Same network, guaranteed to carry a partition (one block if none)."""
    if net.partition is not None:
        return net
    return ReactionNetwork(net.species, net.reactions, (frozenset(range(net.r)),), ("main",), True)
