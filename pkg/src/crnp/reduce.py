"""Reduced systems: project a network onto a subset of its species.

Eliminated reactant species are folded into the rate constant as a
time-varying factor ``k_i * prod_j x_j(t) ** y_ji`` (the "modulation").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import EmptyKeepSet
from .model import Complex, ReactionNetwork
from .siphon import _require_semilocking
from .stoich import rank


@dataclass(frozen=True)
class ReducedReaction:
    source: int  # index of the original reaction
    reactant: Complex
    product: Complex
    rate_k: float
    delay_tau: float
    modulation: tuple[tuple[int, int], ...] = ()

    @property
    def vector_support(self) -> frozenset[int]:
        return self.reactant.support | self.product.support


@dataclass(frozen=True)
class ReducedSystem:
    n: int  # species count of the original network
    kept_species: frozenset[int]
    reactions: tuple[ReducedReaction, ...]
    dropped: tuple[int, ...] = ()
    names: tuple[str, ...] = field(default=(), compare=False)

    def to_text(self) -> str:
        """Network-format listing with modulated rates, e.g. ``k=1.0*X2^1``."""
        names = self.names or tuple(f"S{j}" for j in range(self.n))
        lines = ["species " + " ".join(names[j] for j in sorted(self.kept_species))]
        for rr in self.reactions:
            rate = repr(rr.rate_k) + "".join(f"*{names[j]}^{e}" for j, e in rr.modulation)
            lines.append(
                f"{rr.reactant.format(names)} -> {rr.product.format(names)} "
                f"[k={rate}, tau={rr.delay_tau!r}]"
            )
        return "\n".join(lines) + "\n"


def _items(system):
    if isinstance(system, ReducedSystem):
        for rr in system.reactions:
            yield rr.source, rr.reactant, rr.product, rr.rate_k, rr.delay_tau, dict(rr.modulation)
    else:
        for i, rx in enumerate(system.reactions):
            yield i, rx.reactant, rx.product, rx.rate_k, rx.delay_tau, {}


def reduce_on(system: ReactionNetwork | ReducedSystem, keep: Iterable[int | str]) -> ReducedSystem:
    """Project every complex onto ``keep``.

    Reactions whose reactant and product both project to the zero complex
    are dropped; the rest keep their rate and delay, with the eliminated
    reactant coefficients recorded as the modulation.  Accepts a reduced
    system too, merging modulations.
    """
    if isinstance(system, ReducedSystem):
        keep = frozenset(int(j) for j in keep)
        names = system.names
        n = system.n
    else:
        keep = system.resolve(keep)
        names = system.names
        n = system.n
    if not keep:
        raise EmptyKeepSet("keep set must be nonempty")
    kept, dropped = [], list(system.dropped) if isinstance(system, ReducedSystem) else []
    for src, reactant, product, k, tau, mod in _items(system):
        pr, pp = reactant.project(keep), product.project(keep)
        if pr.is_zero and pp.is_zero:
            dropped.append(src)
            continue
        for j, c in reactant.coeffs:
            if j not in keep:
                mod[j] = mod.get(j, 0) + c
        kept.append(ReducedReaction(src, pr, pp, k, tau, tuple(sorted(mod.items()))))
    return ReducedSystem(n, keep, tuple(kept), tuple(sorted(dropped)), names)


def reduced_subspace_dim(rs: ReducedSystem) -> int:
    """Exact rank of the projected reaction vectors."""
    keep = sorted(rs.kept_species)
    cols = [[rr.product.get(j) - rr.reactant.get(j) for j in keep] for rr in rs.reactions]
    return rank(cols) if cols else 0


def is_reduced_conservative(net: ReactionNetwork, members: Iterable[int | str]) -> tuple[bool, int, int]:
    """(reduced dim < |W|, reduced dim, |W|) for a semilocking set W."""
    w = _require_semilocking(net, members)
    d = reduced_subspace_dim(reduce_on(net, w))
    return d < len(w), d, len(w)


def reduced_rhs(rs: ReducedSystem, x_now: np.ndarray, x_delayed: np.ndarray) -> np.ndarray:
    """Right-hand side of the reduced system on the kept coordinates.

    ``x_now`` is the full state at time t, ``x_delayed[i]`` the full state at
    t - tau of original reaction i.  Modulations read the eliminated species
    from these full states; the kept species enter through the projected
    complexes.  Returns a vector over ``sorted(kept_species)``.
    """
    keep = sorted(rs.kept_species)
    pos = {j: p for p, j in enumerate(keep)}
    out = np.zeros(len(keep))
    for rr in rs.reactions:

        def rate(x):
            v = rr.rate_k
            for j, e in rr.modulation:
                v *= x[j] ** e
            for j, c in rr.reactant.coeffs:
                v *= x[j] ** c
            return v

        produced = rate(x_delayed[rr.source])
        consumed = rate(x_now)
        for j, c in rr.product.coeffs:
            out[pos[j]] += c * produced
        for j, c in rr.reactant.coeffs:
            out[pos[j]] -= c * consumed
    return out
