"""R-vine matrix representation and conversion to and from explicit trees.

Matrices are square ``numpy`` integer arrays with labels ``1..n`` on and
below the diagonal and zeros above it.  Row ``n`` (the last row) encodes the
first tree; the entry in row ``i`` and column ``k`` together with the diagonal
entry of column ``k`` forms a conditioned pair whose conditioning set is
everything below row ``i`` in that column.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .errors import StructureError


@dataclass(frozen=True)
class ConstraintEntry:
    """One edge identity: unordered conditioned pair plus conditioning set."""

    conditioned: frozenset
    conditioning: frozenset

    def __post_init__(self):
        if len(self.conditioned) != 2:
            raise ValueError("conditioned set must hold two labels")
        if self.conditioned & self.conditioning:
            raise ValueError("conditioned and conditioning sets overlap")

    @classmethod
    def of(cls, a, b, conditioning=()):
        return cls(frozenset((int(a), int(b))), frozenset(int(x) for x in conditioning))

    @property
    def level(self) -> int:
        """Tree level (1 for the first tree)."""
        return len(self.conditioning) + 1

    @property
    def union(self) -> frozenset:
        return self.conditioned | self.conditioning

    def __str__(self):
        a, b = sorted(self.conditioned)
        if not self.conditioning:
            return f"{a},{b}"
        return f"{a},{b}|{','.join(str(x) for x in sorted(self.conditioning))}"


def _as_matrix(m) -> np.ndarray:
    try:
        arr = np.asarray(m)
    except ValueError:
        arr = np.asarray(m, dtype=object)
    if arr.dtype == object:
        # ragged list of rows, as printed in lower-triangular form
        rows = list(m)
        n = len(rows)
        arr = np.zeros((n, n), dtype=np.int64)
        for i, row in enumerate(rows):
            row = list(row)
            if len(row) not in (i + 1, n):
                raise StructureError(f"row {i + 1} has {len(row)} entries", "shape", (i + 1, 1))
            arr[i, : i + 1] = row[: i + 1]
        return arr
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise StructureError("structure matrix must be square", "shape")
    if not np.all(np.equal(np.mod(arr, 1), 0)):
        raise StructureError("structure matrix must hold integer labels", "labels")
    return np.tril(arr.astype(np.int64))


def lower_rows(m) -> np.ndarray:
    """Build a square matrix from ragged lower-triangular rows ``[[7], [4, 4], ...]``."""
    rows = [list(r) for r in m]
    n = len(rows)
    out = np.zeros((n, n), dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != i + 1:
            raise StructureError(f"row {i + 1} should have {i + 1} entries", "shape", (i + 1, 1))
        out[i, : i + 1] = row
    return out


@dataclass(frozen=True, eq=False)
class RVineStructure:
    """Validated R-vine matrix.

    Build instances with :func:`validate`; the constructor does not check.
    """

    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __eq__(self, other):
        return isinstance(other, RVineStructure) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def entry(self, i: int, k: int) -> ConstraintEntry:
        """Constraint entry generated by 0-based row ``i`` > column ``k``."""
        col = self.matrix[:, k]
        return ConstraintEntry.of(col[k], col[i], col[i + 1:])

    def entries(self):
        """Yield ``((i, k), ConstraintEntry)`` for every sub-diagonal position."""
        for k in range(self.n - 1):
            for i in range(k + 1, self.n):
                yield (i, k), self.entry(i, k)

    def is_normalized(self) -> bool:
        return bool(np.all(np.diag(self.matrix) == np.arange(self.n, 0, -1)))

    def rows(self):
        return [list(map(int, self.matrix[i, : i + 1])) for i in range(self.n)]

    def __str__(self):
        return "\n".join(" ".join(str(v) for v in row) for row in self.rows())


def _b_sets(mat):
    """Union of the membership sets ``B_M(j)`` and their tilde variants.

    Only columns ``j < n`` of ``mat`` contribute.
    """
    n = mat.shape[0]
    found = set()
    for j in range(n - 1):
        col = mat[:, j]
        for k in range(j + 1, n):
            found.add((int(col[j]), frozenset(int(x) for x in col[k:])))
            found.add((int(col[k]), frozenset([int(col[j])] + [int(x) for x in col[k + 1:]])))
    return found


def validate(m) -> RVineStructure:
    """Check that ``m`` is an R-vine matrix.

    Parameters
    ----------
    m : array_like or sequence of rows
        Square lower-triangular matrix, or ragged rows of lengths 1..n.

    Returns
    -------
    RVineStructure

    Raises
    ------
    StructureError
        Naming the first violated condition and a 1-based ``(row, column)``.
    """
    mat = _as_matrix(m)
    n = mat.shape[0]
    if n < 1:
        raise StructureError("empty structure matrix", "shape")
    for k in range(n):
        for i in range(k, n):
            if not 1 <= mat[i, k] <= n:
                raise StructureError(f"label {mat[i, k]} outside 1..{n}", "labels", (i + 1, k + 1))
    for k in range(n):
        col = mat[k:, k]
        seen = set()
        for offset, val in enumerate(col):
            if val in seen:
                raise StructureError(f"label {val} repeated in column {k + 1}", "distinct",
                                     (k + offset + 1, k + 1))
            seen.add(val)
    # property (i): a column contains everything in the columns to its right
    for k in range(n - 1):
        here = set(mat[k:, k].tolist())
        right = set(mat[k + 1:, k + 1].tolist())
        missing = right - here
        if missing:
            raise StructureError(f"column {k + 1} lacks label(s) {sorted(missing)} of column {k + 2}",
                                 "property-i", (k + 1, k + 1))
    # property (ii): each diagonal entry is new relative to the next column
    for k in range(n - 1):
        if mat[k, k] in mat[k + 1:, k + 1]:
            raise StructureError(f"diagonal label {mat[k, k]} reappears in column {k + 2}",
                                 "property-ii", (k + 1, k + 1))
    # membership condition on rows k = i+1..n-1 (1-based); the bottom row is free
    for i in range(n - 1):
        col = mat[:, i]
        later = _b_sets(mat[i + 1:, i + 1:])
        for k in range(i + 1, n - 1):
            probe = (int(col[k]), frozenset(int(x) for x in col[k + 1:]))
            if probe not in later:
                raise StructureError(
                    f"entry {col[k]} with conditioning {sorted(probe[1])} has no parent edge",
                    "membership", (k + 1, i + 1))
    return RVineStructure(mat)


def constraint_set(s: RVineStructure) -> frozenset:
    """All ``n(n-1)/2`` constraint entries of a structure."""
    return frozenset(e for _, e in s.entries())


def max_matrix(s: RVineStructure) -> np.ndarray:
    """Column-wise running maxima taken from the bottom row upward."""
    mat = s.matrix if isinstance(s, RVineStructure) else np.asarray(s)
    out = np.zeros_like(mat)
    n = mat.shape[0]
    for k in range(n):
        out[k:, k] = np.maximum.accumulate(mat[k:, k][::-1])[::-1]
    return out


def normalizing_map(s: RVineStructure) -> dict:
    """Relabeling ``old -> new`` that puts ``n, n-1, ..., 1`` on the diagonal."""
    n = s.n
    return {int(s.matrix[k, k]): n - k for k in range(n)}


def relabel(s: RVineStructure, mapping: dict) -> RVineStructure:
    lookup = np.zeros(s.n + 1, dtype=np.int64)
    for old, new in mapping.items():
        lookup[old] = new
    return RVineStructure(np.tril(lookup[s.matrix]))


def relabel_entry(e: ConstraintEntry, mapping: dict) -> ConstraintEntry:
    return ConstraintEntry(frozenset(mapping[x] for x in e.conditioned),
                           frozenset(mapping[x] for x in e.conditioning))


def normalize_structure(s: RVineStructure):
    """Return ``(normalized structure, label_map)`` with ``label_map`` old to new."""
    mapping = normalizing_map(s)
    return relabel(s, mapping), mapping


def drop_first(s: RVineStructure):
    """Remove the first row and column.

    The remaining labels are renumbered ``1..n-1`` in increasing order.

    Returns
    -------
    matrix : ndarray
    label_map : dict
        Old label to new label.
    """
    sub = s.matrix[1:, 1:]
    mapping = {old: new for new, old in enumerate(sorted(set(np.diag(sub).tolist())), start=1)}
    lookup = np.zeros(s.n + 1, dtype=np.int64)
    for old, new in mapping.items():
        lookup[old] = new
    return np.tril(lookup[sub]), mapping


def count_rvines(n: int) -> int:
    """Number of labeled regular vines on ``n`` variables, ``n!/2 * 2**C(n-2, 2)``."""
    if n < 3:
        raise ValueError("count_rvines needs n >= 3")
    return factorial(n) // 2 * 2 ** comb(n - 2, 2)


# ---------------------------------------------------------------------------
# explicit tree sequences


@dataclass(frozen=True)
class VineEdge:
    """Edge ``a,b|D`` of an explicit tree sequence; ``(a, b)`` order is kept.

    The order fixes which argument of a pair copula belongs to which
    variable, so ``VineEdge(1, 2)`` and ``VineEdge(2, 1)`` are different
    orientations of the same constraint.
    """

    a: int
    b: int
    conditioning: frozenset = frozenset()

    @property
    def entry(self) -> ConstraintEntry:
        return ConstraintEntry.of(self.a, self.b, self.conditioning)

    @property
    def union(self) -> frozenset:
        return frozenset((self.a, self.b)) | self.conditioning

    @property
    def level(self) -> int:
        return len(self.conditioning) + 1

    def flipped(self) -> "VineEdge":
        return VineEdge(self.b, self.a, self.conditioning)


@dataclass(frozen=True)
class TreeSequence:
    """Trees ``T_1..T_{n-1}``; ``trees[0]`` is the first tree."""

    n: int
    trees: tuple

    def edges(self):
        for tree in self.trees:
            yield from tree

    def constraint_set(self) -> frozenset:
        return frozenset(e.entry for e in self.edges())

    def nodes_of(self, edge: VineEdge):
        """Complete unions of the two nodes joined by ``edge``."""
        if edge.level == 1:
            return frozenset([edge.a]), frozenset([edge.b])
        return (frozenset([edge.a]) | edge.conditioning,
                frozenset([edge.b]) | edge.conditioning)


def _spanning(n_nodes, pairs):
    """True when ``pairs`` form a spanning tree of nodes ``0..n_nodes-1``."""
    if len(pairs) != n_nodes - 1:
        return False
    parent = list(range(n_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p, q in pairs:
        rp, rq = find(p), find(q)
        if rp == rq:
            return False
        parent[rp] = rq
    return True


def check_trees(t: TreeSequence) -> TreeSequence:
    """Validate a tree sequence; raises :class:`StructureError` on failure."""
    n = t.n
    if len(t.trees) != n - 1:
        raise StructureError(f"expected {n - 1} trees, got {len(t.trees)}", "tree")
    labels = set(range(1, n + 1))
    prev_index = {frozenset([x]): x - 1 for x in labels}
    prev_edges = None
    for level, tree in enumerate(t.trees, start=1):
        if len(tree) != n - level:
            raise StructureError(f"tree {level} has {len(tree)} edges, expected {n - level}", "tree")
        pairs = []
        index = {}
        for pos, e in enumerate(tree):
            if e.a == e.b or e.a not in labels or e.b not in labels:
                raise StructureError(f"bad conditioned pair in tree {level}", "tree", (level, pos + 1))
            if len(e.conditioning) != level - 1 or {e.a, e.b} & e.conditioning \
                    or not e.conditioning <= labels:
                raise StructureError(f"bad conditioning set in tree {level}", "tree", (level, pos + 1))
            left, right = t.nodes_of(e)
            if left not in prev_index or right not in prev_index:
                raise StructureError(f"edge {e.entry} does not join nodes of tree {level - 1}",
                                     "proximity", (level, pos + 1))
            p, q = prev_index[left], prev_index[right]
            if level > 1:
                ea, eb = prev_edges[p], prev_edges[q]
                shared = set(t.nodes_of(ea)) & set(t.nodes_of(eb))
                if len(shared) != 1:
                    raise StructureError(f"edge {e.entry} violates the proximity condition",
                                         "proximity", (level, pos + 1))
            pairs.append((p, q))
            if e.union in index:
                raise StructureError(f"duplicate node {sorted(e.union)} in tree {level}", "tree",
                                     (level, pos + 1))
            index[e.union] = pos
        if not _spanning(n - level + 1, pairs):
            raise StructureError(f"tree {level} is not a spanning tree", "tree", (level, 1))
        prev_index = index
        prev_edges = tree
    return t


def matrix_to_trees(s: RVineStructure) -> TreeSequence:
    """Explicit trees of a structure; edge ``(a, b)`` is (diagonal, row entry)."""
    n = s.n
    trees = [[] for _ in range(n - 1)]
    for (i, k), _ in s.entries():
        col = s.matrix[:, k]
        edge = VineEdge(int(col[k]), int(col[i]), frozenset(int(x) for x in col[i + 1:]))
        trees[edge.level - 1].append(edge)
    return TreeSequence(n, tuple(tuple(sorted(tr, key=lambda e: sorted(e.entry.conditioned)))
                                 for tr in trees))


def trees_to_matrix(t: TreeSequence, check: bool = True):
    """Build an R-vine matrix from an explicit tree sequence.

    Columns are filled left to right.  Each column takes the single edge of
    the top remaining tree, keeps one conditioned label ``a`` on the diagonal
    and walks down the levels through the unique edge whose complete union
    is ``{a}`` plus the conditioning set found so far.  Those edges are then
    removed, which leaves a vine on one variable fewer.

    Returns
    -------
    structure : RVineStructure
    placement : dict
        Maps each 0-based matrix position ``(i, k)`` to ``(edge, flipped)``
        where ``flipped`` is True when the edge's ``a`` sits in row ``i``
        rather than on the diagonal.
    """
    if check:
        check_trees(t)
    n = t.n
    by_union = [dict() for _ in range(n - 1)]
    for level, tree in enumerate(t.trees):
        for e in tree:
            by_union[level][e.union] = e
    mat = np.zeros((n, n), dtype=np.int64)
    placement = {}
    remaining = set(range(1, n + 1))
    for k in range(n - 1):
        top_level = n - 2 - k
        (top,) = by_union[top_level].values()
        a = max(top.a, top.b)
        mat[k, k] = a
        union = top.union
        for level in range(top_level, -1, -1):
            e = by_union[level].pop(union)
            other = e.b if e.a == a else e.a
            if a not in (e.a, e.b):
                raise StructureError(f"label {a} missing from edge {e.entry}", "tree")
            row = n - 1 - level
            mat[row, k] = other
            placement[(row, k)] = (e, e.a != a)
            union = union - {other}
        remaining.discard(a)
    (last,) = remaining
    mat[n - 1, n - 1] = last
    s = validate(mat) if check else RVineStructure(mat)
    return s, placement


def structure_from_trees(t: TreeSequence) -> RVineStructure:
    return trees_to_matrix(t)[0]
