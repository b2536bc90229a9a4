"""Tree-by-tree structure selection driven by absolute Kendall's tau.

Tree 1 is a maximum spanning tree on the complete graph of variables.  Each
later tree is a maximum spanning tree on the candidate edges allowed by the
proximity condition: two edges of the previous tree may be joined only when
they share a node.  Pair copulas are chosen per edge by AIC, and the fitted
h-functions produce the pseudo-observations for the next tree.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .bicop import (ALL_FAMILIES, Family, PairCopula, _unit,
                    clamp, select_family)
from .errors import DisconnectedGraphError, FittingError, InsufficientDataError, StructureError
from .evaluate import RVineModel
from .kendall import kendall_tau
from .structure import TreeSequence, VineEdge

MIN_CORNER = 10


class StructureKind(str, Enum):
    RVINE = "rvine"
    CVINE = "cvine"
    DVINE = "dvine"


@dataclass(frozen=True)
class CandidateEdge:
    """Possible edge between nodes ``p`` and ``q`` of the graph at one level.

    ``key`` is the sorted conditioned pair and only serves to break ties.
    """

    p: int
    q: int
    weight: float
    key: tuple = ()

    def rank(self):
        return (-abs(self.weight), self.key, min(self.p, self.q), max(self.p, self.q))


def pairwise_tau(sample) -> np.ndarray:
    """Symmetric matrix of empirical Kendall's taus with unit diagonal."""
    x = np.asarray(sample, dtype=float)
    if x.ndim != 2:
        raise ValueError("sample must be two-dimensional")
    if x.shape[0] < 10:
        raise InsufficientDataError("pairwise_tau needs at least 10 observations")
    n = x.shape[1]
    out = np.eye(n)
    for a, b in itertools.combinations(range(n), 2):
        out[a, b] = out[b, a] = kendall_tau(x[:, a], x[:, b])
    return out


def mst(n_nodes: int, edges) -> list:
    """Maximum spanning tree on ``|weight|`` by Prim's algorithm.

    Growth starts at node 0.  Among crossing edges of equal weight the one
    with the smallest ``key`` wins, so the result is deterministic.

    Raises
    ------
    DisconnectedGraphError
        When the candidate graph does not connect all nodes.
    """
    if n_nodes <= 1:
        return []
    adjacency = [[] for _ in range(n_nodes)]
    for e in edges:
        adjacency[e.p].append(e)
        adjacency[e.q].append(e)
    in_tree = [False] * n_nodes
    in_tree[0] = True
    heap = [(e.rank(), idx, e) for idx, e in enumerate(adjacency[0])]
    heapq.heapify(heap)
    chosen = []
    counter = len(heap)
    while heap and len(chosen) < n_nodes - 1:
        _, _, e = heapq.heappop(heap)
        if in_tree[e.p] and in_tree[e.q]:
            continue
        new = e.q if in_tree[e.p] else e.p
        in_tree[new] = True
        chosen.append(e)
        for f in adjacency[new]:
            other = f.q if f.p == new else f.p
            if not in_tree[other]:
                counter += 1
                heapq.heappush(heap, (f.rank(), counter, f))
    if len(chosen) != n_nodes - 1:
        raise DisconnectedGraphError(f"candidate graph on {n_nodes} nodes is disconnected")
    return chosen


def select_cvine_tree(n_nodes: int, edges) -> list:
    """Star maximizing the summed ``|weight|``; lowest node index wins ties."""
    if n_nodes <= 1:
        return []
    incident = [dict() for _ in range(n_nodes)]
    for e in edges:
        incident[e.p][e.q] = e
        incident[e.q][e.p] = e
    best, best_score = None, -np.inf
    for root in range(n_nodes):
        if len(incident[root]) != n_nodes - 1:
            continue
        score = sum(abs(e.weight) for e in incident[root].values())
        if score > best_score + 1e-12:
            best, best_score = root, score
    if best is None:
        raise StructureError("no node is adjacent to all others; a star is impossible", "tree")
    return [incident[best][q] for q in sorted(incident[best])]


def path_weight(order, weights) -> float:
    return float(sum(abs(weights[a, b]) for a, b in zip(order[:-1], order[1:])))


def select_dvine_path(weights) -> list:
    """Heuristic Hamiltonian path maximizing the summed ``|weight|``.

    Cheapest insertion seeded with the heaviest edge, then 2-opt segment
    reversals until no reversal improves the path.

    Parameters
    ----------
    weights : ndarray, shape (m, m)
        Symmetric weight matrix.

    Returns
    -------
    list of int
        Node order along the path.
    """
    w = np.abs(np.asarray(weights, dtype=float))
    m = w.shape[0]
    if m <= 2:
        return list(range(m))
    off = w.copy()
    np.fill_diagonal(off, -np.inf)
    a, b = np.unravel_index(np.argmax(off), off.shape)
    order = [int(min(a, b)), int(max(a, b))]
    left = [j for j in range(m) if j not in order]
    while left:
        best = None
        for j in left:
            # gain of every insertion slot, ends included
            for slot in range(len(order) + 1):
                if slot == 0:
                    gain = w[j, order[0]]
                elif slot == len(order):
                    gain = w[order[-1], j]
                else:
                    gain = w[order[slot - 1], j] + w[j, order[slot]] - w[order[slot - 1], order[slot]]
                cand = (gain, -j, -slot)
                if best is None or cand > best[0]:
                    best = (cand, j, slot)
        _, j, slot = best
        order.insert(slot, j)
        left.remove(j)
    improved = True
    while improved:
        improved = False
        base = path_weight(order, w)
        for i in range(len(order) - 1):
            for k in range(i + 1, len(order)):
                trial = order[:i] + order[i:k + 1][::-1] + order[k + 1:]
                if path_weight(trial, w) > base + 1e-12:
                    order, base, improved = trial, path_weight(trial, w), True
    return order


def exceedance_tau(u, v, delta: float = 0.2, side: str = "lower") -> float:
    """Kendall's tau restricted to a lower or upper corner of the unit square.

    Raises
    ------
    InsufficientDataError
        When fewer than 10 points fall in the corner.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if side == "lower":
        mask = (u <= delta) & (v <= delta)
    elif side == "upper":
        mask = (u > 1.0 - delta) & (v > 1.0 - delta)
    else:
        raise ValueError("side must be 'lower' or 'upper'")
    if np.count_nonzero(mask) < MIN_CORNER:
        raise InsufficientDataError(f"only {np.count_nonzero(mask)} points in the {side} corner")
    return kendall_tau(u[mask], v[mask])


@dataclass(frozen=True)
class SelectionOptions:
    structure_kind: StructureKind = StructureKind.RVINE
    families: tuple = ALL_FAMILIES
    use_indep_test: bool = False
    alpha: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "structure_kind", StructureKind(self.structure_kind))
        object.__setattr__(self, "families", tuple(Family(f) for f in self.families))
        if not self.families:
            raise ValueError("at least one candidate family is required")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class EdgeFit:
    edge: VineEdge
    tau: float
    copula: PairCopula
    loglik: float
    aic: float


@dataclass
class SequentialFit:
    """Outcome of sequential selection: model, trees and per-edge fits."""

    model: RVineModel
    trees: TreeSequence
    fits: list = field(default_factory=list)

    @property
    def loglik(self) -> float:
        return float(sum(f.loglik for f in self.fits))

    def fits_by_level(self):
        levels = {}
        for f in self.fits:
            levels.setdefault(f.edge.level, []).append(f)
        return levels


@dataclass
class _Node:
    """Node of the graph at one level: complete union plus its transforms."""

    union: frozenset
    values: dict  # label -> F(label | union minus label)
    ends: tuple = ()  # unions of the previous-level nodes this edge joined


def _level_candidates(nodes, level):
    cands = []
    for p, q in itertools.combinations(range(len(nodes)), 2):
        a, b = nodes[p], nodes[q]
        if level > 1 and len(set(a.ends) & set(b.ends)) != 1:
            continue
        (x,) = a.union - b.union
        (y,) = b.union - a.union
        cands.append((p, q, x, y))
    return cands


def sequential_select(sample, opts: Optional[SelectionOptions] = None) -> SequentialFit:
    """Select trees and pair copulas one level at a time.

    Parameters
    ----------
    sample : array_like, shape (N, n)
        Copula data, column ``j`` holding variable ``j + 1``.
    opts : SelectionOptions, optional

    Returns
    -------
    SequentialFit
    """
    opts = opts or SelectionOptions()
    x = clamp(np.asarray(sample, dtype=float))
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("sample must have shape (N, n) with n >= 2")
    n = x.shape[1]
    nodes = [_Node(frozenset([j + 1]), {j + 1: x[:, j]}) for j in range(n)]
    trees, fits, copulas = [], [], {}
    for level in range(1, n):
        cands = _level_candidates(nodes, level)
        edges = []
        for p, q, a, b in cands:
            tau = kendall_tau(nodes[p].values[a], nodes[q].values[b])
            edges.append(CandidateEdge(p, q, 0.0 if np.isnan(tau) else tau, (min(a, b), max(a, b))))
        if opts.structure_kind == StructureKind.CVINE:
            chosen = select_cvine_tree(len(nodes), edges)
        elif opts.structure_kind == StructureKind.DVINE and level == 1:
            weights = np.zeros((len(nodes), len(nodes)))
            lookup = {}
            for e in edges:
                weights[e.p, e.q] = weights[e.q, e.p] = e.weight
                lookup[(e.p, e.q)] = lookup[(e.q, e.p)] = e
            order = select_dvine_path(weights)
            chosen = [lookup[(s, t)] for s, t in zip(order[:-1], order[1:])]
        else:
            chosen = mst(len(nodes), edges)
        tree, new_nodes = [], []
        for e in chosen:
            left, right = nodes[e.p], nodes[e.q]
            (a,) = left.union - right.union
            (b,) = right.union - left.union
            if a > b:
                left, right, a, b = right, left, b, a
            edge = VineEdge(int(a), int(b), left.union & right.union)
            ua, ub = left.values[a], right.values[b]
            try:
                choice = select_family(ua, ub, opts.families, opts.use_indep_test, opts.alpha)
            except FittingError as exc:
                raise FittingError(f"tree {level}, edge {edge.entry}: {exc}") from exc
            _, h1, h2 = choice.copula.evaluate(ua, ub)
            tree.append(edge)
            copulas[edge] = choice.copula
            fits.append(EdgeFit(edge, e.weight, choice.copula, choice.loglik, choice.aic))
            new_nodes.append(_Node(left.union | right.union, {a: _unit(h1), b: _unit(h2)},
                                   (left.union, right.union)))
        trees.append(tuple(tree))
        nodes = new_nodes
    seq = TreeSequence(n, tuple(trees))
    model = RVineModel.from_edges(seq, copulas)
    return SequentialFit(model, seq, fits)


def fixed_structure_fit(sample, structure, families, opts: Optional[SelectionOptions] = None):
    """Sequentially estimate pair copulas on a given structure.

    ``families`` is either a family-code matrix fixing each edge's family or
    ``None`` to select families by AIC from ``opts.families``.
    """
    opts = opts or SelectionOptions()
    x = clamp(np.asarray(sample, dtype=float))
    base = RVineModel.independence(structure)
    n = base.n
    steps, columns = base._plan
    size = x.shape[0]
    vd = np.empty((n, n, size))
    vi = np.empty((n, n, size))
    vd[n - 1] = x[:, columns].T
    updates = {}
    for st in steps:
        z1 = vd[st.i, st.k]
        z2 = vd[st.i, st.col] if st.direct else vi[st.i, st.col]
        cands = opts.families if families is None else (Family(int(families[st.i][st.k])),)
        if cands == (Family.INDEPENDENCE,):
            cop = PairCopula(Family.INDEPENDENCE)
        else:
            cop = select_family(z1, z2, cands, opts.use_indep_test, opts.alpha).copula
        updates[(st.i, st.k)] = cop
        _, h1, h2 = cop.evaluate(z1, z2)
        vd[st.i - 1, st.k] = h1
        vi[st.i - 1, st.k] = h2
    return base.with_copulas(updates)
