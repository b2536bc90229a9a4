"""R-vine copula models: density, log-likelihood and simulation.

Both the density recursion and the sampler run on a relabeled copy of the
structure whose diagonal reads ``n, n-1, ..., 1``.  The caller never sees the
relabeling: inputs and outputs use the original variable labels, with
column ``j`` of a sample holding variable ``j + 1``.

The pair copula stored at position ``(i, k)`` takes the diagonal variable of
column ``k`` as its first argument and the row entry as its second.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .bicop import Family, PairCopula, clamp
from .errors import ConvergenceError, DomainError, StructureError
from .structure import (ConstraintEntry, RVineStructure, TreeSequence, max_matrix,
                        normalizing_map, relabel, trees_to_matrix, validate)

INDEPENDENCE = PairCopula(Family.INDEPENDENCE)


@dataclass(frozen=True)
class _Step:
    """Precomputed lookup for one sub-diagonal position."""

    i: int
    k: int
    col: int
    direct: bool
    copula: PairCopula


@dataclass(frozen=True, eq=False)
class RVineModel:
    """Structure plus one pair copula per sub-diagonal matrix position.

    Parameters
    ----------
    structure : RVineStructure
        Any valid structure; the diagonal need not be normalized.
    copulas : tuple of tuple
        ``copulas[i][k]`` is the :class:`PairCopula` at 0-based row ``i`` and
        column ``k`` for ``i > k``; other positions hold ``None``.
    """

    structure: RVineStructure
    copulas: tuple

    def __post_init__(self):
        n = self.structure.n
        rows = tuple(tuple(self.copulas[i][k] if i > k else None for k in range(n))
                     for i in range(n))
        for i in range(n):
            for k in range(i):
                if not isinstance(rows[i][k], PairCopula):
                    raise StructureError(f"missing pair copula at ({i + 1}, {k + 1})",
                                         "membership", (i + 1, k + 1))
        object.__setattr__(self, "copulas", rows)

    # -- construction ------------------------------------------------------

    @classmethod
    def independence(cls, structure) -> "RVineModel":
        if not isinstance(structure, RVineStructure):
            structure = validate(structure)
        n = structure.n
        return cls(structure, tuple(tuple(INDEPENDENCE if i > k else None for k in range(n))
                                    for i in range(n)))

    @classmethod
    def from_matrices(cls, structure, families, par=None, par2=None) -> "RVineModel":
        """Assemble a model from family-code and parameter matrices."""
        if not isinstance(structure, RVineStructure):
            structure = validate(structure)
        n = structure.n
        fam = np.asarray(families)
        par = np.zeros((n, n)) if par is None else np.asarray(par, dtype=float)
        par2 = np.zeros((n, n)) if par2 is None else np.asarray(par2, dtype=float)
        rows = []
        for i in range(n):
            row = []
            for k in range(n):
                if i <= k:
                    row.append(None)
                    continue
                f = Family(int(fam[i, k]))
                if f == Family.INDEPENDENCE:
                    row.append(INDEPENDENCE)
                elif f == Family.STUDENT_T:
                    row.append(PairCopula(f, par[i, k], par2[i, k]))
                else:
                    row.append(PairCopula(f, par[i, k]))
            rows.append(tuple(row))
        return cls(structure, tuple(rows))

    @classmethod
    def from_edges(cls, trees: TreeSequence, copulas: dict) -> "RVineModel":
        """Model from explicit trees and a ``VineEdge -> PairCopula`` mapping.

        Each copula's first argument is the edge's ``a`` label; copulas are
        transposed when the matrix places ``a`` off the diagonal.
        """
        structure, placement = trees_to_matrix(trees)
        n = structure.n
        rows = [[None] * n for _ in range(n)]
        for (i, k), (edge, flipped) in placement.items():
            cop = copulas[edge]
            rows[i][k] = cop.transpose() if flipped else cop
        return cls(structure, tuple(tuple(r) for r in rows))

    def with_copulas(self, updates: dict) -> "RVineModel":
        """Copy with ``{(i, k): PairCopula}`` replacements."""
        rows = [list(r) for r in self.copulas]
        for (i, k), cop in updates.items():
            rows[i][k] = cop
        return RVineModel(self.structure, tuple(tuple(r) for r in rows))

    # -- views ---------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.structure.n

    def positions(self):
        n = self.n
        for k in range(n - 1):
            for i in range(k + 1, n):
                yield i, k

    @property
    def families(self) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=np.int64)
        for i, k in self.positions():
            out[i, k] = int(self.copulas[i][k].family)
        return out

    @property
    def par(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for i, k in self.positions():
            out[i, k] = self.copulas[i][k].theta
        return out

    @property
    def par2(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for i, k in self.positions():
            nu = self.copulas[i][k].nu
            out[i, k] = 0.0 if nu is None else nu
        return out

    @property
    def n_params(self) -> int:
        return sum(self.copulas[i][k].n_params for i, k in self.positions())

    def edge_copulas(self) -> dict:
        """``ConstraintEntry -> (first label, PairCopula)`` for every edge."""
        out = {}
        for i, k in self.positions():
            out[self.structure.entry(i, k)] = (int(self.structure.matrix[k, k]), self.copulas[i][k])
        return out

    def copula_for(self, entry: ConstraintEntry, first: Optional[int] = None) -> PairCopula:
        """Pair copula of an edge, oriented so that ``first`` is its first argument."""
        label, cop = self.edge_copulas()[entry]
        if first is None or first == label:
            return cop
        return cop.transpose()

    def family_counts(self) -> dict:
        counts = {}
        for i, k in self.positions():
            f = self.copulas[i][k].family
            counts[f] = counts.get(f, 0) + 1
        return counts

    # -- precomputation ------------------------------------------------------

    @cached_property
    def _plan(self):
        n = self.n
        norm = relabel(self.structure, normalizing_map(self.structure)).matrix
        mmax = max_matrix(norm)
        steps = []
        for k in range(n - 2, -1, -1):
            for i in range(n - 1, k, -1):
                mm = int(mmax[i, k])
                steps.append(_Step(i, k, n - mm, mm == norm[i, k], self.copulas[i][k]))
        columns = np.diag(self.structure.matrix).astype(np.int64) - 1
        return steps, columns

    # -- evaluation ----------------------------------------------------------

    def log_density(self, x) -> np.ndarray:
        """Log copula density at each row of ``x``.

        Parameters
        ----------
        x : array_like, shape (n,) or (N, n)
            Points in the unit cube, column ``j`` for variable ``j + 1``.

        Returns
        -------
        float or ndarray of shape (N,)
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.n:
            raise DomainError(f"expected {self.n} columns, got {x.shape[1]}")
        x = clamp(x)
        n, size = self.n, x.shape[0]
        steps, columns = self._plan
        vd = np.empty((n, n, size))
        vi = np.empty((n, n, size))
        vd[n - 1] = x[:, columns].T
        total = np.zeros(size)
        for st in steps:
            z1 = vd[st.i, st.k]
            z2 = vd[st.i, st.col] if st.direct else vi[st.i, st.col]
            logc, h1, h2 = st.copula.evaluate(z1, z2)
            total += logc
            vd[st.i - 1, st.k] = h1
            vi[st.i - 1, st.k] = h2
        return float(total[0]) if single else total

    def density(self, x):
        """Copula density, computed as ``exp(log_density)``."""
        return np.exp(self.log_density(x))

    def loglik(self, sample) -> float:
        """Sum of log densities over the rows of ``sample``."""
        return float(np.sum(self.log_density(np.atleast_2d(sample))))

    def simulate(self, count: int, seed=None, rng=None) -> np.ndarray:
        """Draw ``count`` observations by inverse Rosenblatt transformation.

        Parameters
        ----------
        count : int
            Number of rows.
        seed : int, optional
            Seed of a Philox counter-based generator; ignored when ``rng`` is given.
        rng : numpy.random.Generator, optional

        Returns
        -------
        ndarray of shape (count, n)
        """
        if count < 1:
            raise ValueError("count must be at least 1")
        if rng is None:
            rng = make_rng(seed)
        n = self.n
        w = rng.random((count, n))
        return self.transform_uniforms(w)

    def transform_uniforms(self, w) -> np.ndarray:
        """Map independent uniforms ``w`` to the model.

        Column ``j`` of ``w`` is the uniform attached to variable ``j + 1``,
        so two models on the same labels can share one set of draws.
        """
        w = np.asarray(w, dtype=float)
        n, size = self.n, w.shape[0]
        steps, columns = self._plan
        vd = np.empty((n, n, size))
        vi = np.empty((n, n, size))
        vd[n - 1] = clamp(w)[:, columns].T
        by_column = {}
        for st in steps:
            by_column.setdefault(st.k, []).append(st)
        for k in range(n - 2, -1, -1):
            col_steps = by_column[k]
            # inversion walks from the top tree down to the first tree
            z2 = {}
            for st in reversed(col_steps):
                z2[st.i] = vd[st.i, st.col] if st.direct else vi[st.i, st.col]
                try:
                    vd[n - 1, k] = st.copula.hinv(vd[n - 1, k], z2[st.i])
                except ConvergenceError as exc:
                    raise ConvergenceError(
                        f"h-inverse failed at matrix position ({st.i + 1}, {k + 1}): {exc}") from exc
            for st in col_steps:
                _, h1, h2 = st.copula.evaluate(vd[st.i, k], z2[st.i])
                vd[st.i - 1, k] = h1
                vi[st.i - 1, k] = h2
        out = np.empty((size, n))
        out[:, columns] = vd[n - 1].T
        return out


def make_rng(seed=None) -> np.random.Generator:
    """Philox counter-based generator; ``None`` draws fresh entropy."""
    return np.random.Generator(np.random.Philox(seed))


def normalize_diagonal(model: RVineModel):
    """Relabel so that the diagonal reads ``n, ..., 1``.

    Returns
    -------
    RVineModel
        Model on the relabeled structure; copulas stay in place.
    dict
        Label map ``old -> new``.
    """
    mapping = normalizing_map(model.structure)
    return RVineModel(relabel(model.structure, mapping), model.copulas), mapping


def denormalize(model: RVineModel, mapping: dict) -> RVineModel:
    """Inverse of :func:`normalize_diagonal` for a given label map."""
    inverse = {new: old for old, new in mapping.items()}
    return RVineModel(relabel(model.structure, inverse), model.copulas)
