"""Complex graph structure and complex-balanced equilibria."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import networkx as nx
import numpy as np

from .errors import NonPositiveConcentration, NotWeaklyReversible
from .model import Complex, ReactionNetwork
from .stoich import stoich_matrix, subspace_basis

DEFAULT_TOL = 1e-9
TREE_SUM_LIMIT = 12


@dataclass(frozen=True)
class ComplexGraph:
    nodes: tuple[Complex, ...]
    edges: tuple[tuple[int, int, float], ...]  # (source node, target node, rate)

    @classmethod
    def of(cls, net: ReactionNetwork) -> "ComplexGraph":
        nodes: dict[Complex, int] = {}
        edges = []
        for rx in net.reactions:
            for c in (rx.reactant, rx.product):
                nodes.setdefault(c, len(nodes))
            edges.append((nodes[rx.reactant], nodes[rx.product], rx.rate_k))
        return cls(tuple(nodes), tuple(edges))

    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(len(self.nodes)))
        for s, t, k in self.edges:
            if g.has_edge(s, t):
                g[s][t]["weight"] += k
            else:
                g.add_edge(s, t, weight=k)
        return g


@dataclass(frozen=True)
class Equilibrium:
    concentrations: np.ndarray
    complex_balanced: bool
    residual: float


def _graph(obj) -> ComplexGraph:
    return obj if isinstance(obj, ComplexGraph) else ComplexGraph.of(obj)


def linkage_classes(g) -> list[frozenset[Complex]]:
    """Connected components of the complex graph, in node order."""
    g = _graph(g)
    comps = nx.connected_components(g.digraph().to_undirected())
    ordered = sorted((sorted(c) for c in comps), key=lambda c: c[0])
    return [frozenset(g.nodes[i] for i in comp) for comp in ordered]


def is_weakly_reversible(g) -> bool:
    g = _graph(g)
    dg = g.digraph()
    return all(
        nx.is_strongly_connected(dg.subgraph(comp))
        for comp in nx.connected_components(dg.to_undirected())
    )


def deficiency(net: ReactionNetwork) -> int:
    g = ComplexGraph.of(net)
    s = subspace_basis(stoich_matrix(net)).dim
    return len(g.nodes) - len(linkage_classes(g)) - s


def complex_flows(net: ReactionNetwork, x) -> tuple[list[Complex], np.ndarray, np.ndarray]:
    """Outflow and inflow of every complex at concentrations ``x``."""
    g = ComplexGraph.of(net)
    x = np.asarray(x, dtype=float)
    out = np.zeros(len(g.nodes))
    inflow = np.zeros(len(g.nodes))
    for (s, t, k), rx in zip(g.edges, net.reactions):
        rate = k * float(np.prod(x ** rx.reactant.vector(net.n)))
        out[s] += rate
        inflow[t] += rate
    return list(g.nodes), out, inflow


def is_complex_balanced_at(net: ReactionNetwork, x, tol: float = DEFAULT_TOL) -> Equilibrium:
    """Evaluate inflow minus outflow at every complex.

    ``residual`` is the absolute maximum imbalance; the point counts as
    complex balanced when it is within ``tol`` times the largest complex
    flow (or ``tol`` itself when every flow is below one).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n,) or not np.all(x > 0):
        raise NonPositiveConcentration("concentrations must be a strictly positive n-vector")
    _, out, inflow = complex_flows(net, x)
    residual = float(np.max(np.abs(inflow - out))) if len(out) else 0.0
    scale = max(1.0, float(np.max(out)) if len(out) else 0.0)
    return Equilibrium(x.copy(), residual <= tol * scale, residual)


def _laplacian(g: ComplexGraph, nodes: list[int]) -> list[list[Fraction]]:
    """Exact complex-level kinetics matrix A with A rho = inflow - outflow."""
    pos = {v: i for i, v in enumerate(nodes)}
    m = len(nodes)
    a = [[Fraction(0)] * m for _ in range(m)]
    for s, t, k in g.edges:
        if s in pos:
            kf = Fraction(k)
            a[pos[t]][pos[s]] += kf
            a[pos[s]][pos[s]] -= kf
    return a


def _det(mat: list[list[Fraction]]) -> Fraction:
    m = [row[:] for row in mat]
    size = len(m)
    det = Fraction(1)
    for c in range(size):
        piv = next((i for i in range(c, size) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for i in range(c + 1, size):
            if m[i][c] != 0:
                f = m[i][c] / m[c][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return det


def tree_constants(g: ComplexGraph, nodes: list[int]) -> np.ndarray:
    """Positive kernel vector of one strongly connected linkage class.

    Entry i is the sum over spanning trees directed toward node i of the
    product of edge rates, obtained as a principal minor of the exact
    kinetics matrix.  Larger classes fall back to a floating nullspace.
    """
    m = len(nodes)
    if m == 1:
        return np.ones(1)
    a = _laplacian(g, nodes)
    if m <= TREE_SUM_LIMIT:
        rho = []
        for i in range(m):
            minor = [[-a[r][c] for c in range(m) if c != i] for r in range(m) if r != i]
            rho.append(float(_det(minor)))
        return np.array(rho)
    from scipy.linalg import null_space

    ns = null_space(np.array([[float(x) for x in row] for row in a]))
    v = ns[:, 0]
    return np.abs(v) / np.max(np.abs(v))


def find_complex_balanced_equilibrium(net: ReactionNetwork, tol: float = DEFAULT_TOL) -> Equilibrium | None:
    """Search for a positive complex-balanced equilibrium.

    Solves ``eta . log(x) - c_L = log(rho_eta)`` for every complex eta in
    linkage class L by minimum-norm least squares.  Returns None when the
    system has no complex-balanced equilibrium for its rate constants.
    """
    g = ComplexGraph.of(net)
    if not is_weakly_reversible(g):
        raise NotWeaklyReversible("complex graph is not weakly reversible")
    dg = g.digraph()
    classes = sorted((sorted(c) for c in nx.connected_components(dg.to_undirected())), key=lambda c: c[0])
    rows, rhs = [], []
    for ell, comp in enumerate(classes):
        rho = tree_constants(g, comp)
        if not np.all(rho > 0):
            return None
        for node, value in zip(comp, rho):
            row = np.zeros(net.n + len(classes))
            row[: net.n] = g.nodes[node].vector(net.n)
            row[net.n + ell] = -1.0
            rows.append(row)
            rhs.append(np.log(value))
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    x = np.exp(sol[: net.n])
    if not np.all(np.isfinite(x)) or not np.all(x > 0):
        return None
    eq = is_complex_balanced_at(net, x, tol)
    return eq if eq.complex_balanced else None
