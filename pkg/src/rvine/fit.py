"""Joint maximum likelihood over all pair-copula parameters, and Vuong tests."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize, stats

from .bicop import (FRANK_MAX, GUMBEL_MAX, NU_MAX, NU_MIN, RHO_MAX, Family, PairCopula,
                    clamp, fit_pair_mle)
from .evaluate import RVineModel

FD_STEP = 1e-6
FTOL = 1e-8
MAX_ITER = 500
LOG_FLOOR = -15.0  # log(theta - 1) lower bound for the Gumbel family
FRANK_MIN = 1e-6


def _to_free(cop: PairCopula):
    """Unconstrained coordinates and their box bounds for one pair copula."""
    fam, th = cop.family, cop.theta
    if fam in (Family.GAUSSIAN, Family.STUDENT_T):
        zmax = np.arctanh(RHO_MAX)
        vals = [np.clip(np.arctanh(th), -zmax, zmax)]
        bounds = [(-zmax, zmax)]
        if fam == Family.STUDENT_T:
            lo, hi = np.log(NU_MIN - 2.0), np.log(NU_MAX - 2.0)
            vals.append(np.clip(np.log(cop.nu - 2.0), lo, hi))
            bounds.append((lo, hi))
        return vals, bounds
    if fam in (Family.GUMBEL, Family.SURVIVAL_GUMBEL):
        hi = np.log(GUMBEL_MAX - 1.0)
        return [np.clip(np.log(max(th - 1.0, 1e-300)), LOG_FLOOR, hi)], [(LOG_FLOOR, hi)]
    if fam in (Family.GUMBEL90, Family.GUMBEL270):
        hi = np.log(GUMBEL_MAX - 1.0)
        return [np.clip(np.log(max(-th - 1.0, 1e-300)), LOG_FLOOR, hi)], [(LOG_FLOOR, hi)]
    if fam == Family.FRANK:
        # the sign of a Frank parameter is kept fixed during optimisation
        if th > 0:
            return [np.clip(th, FRANK_MIN, FRANK_MAX)], [(FRANK_MIN, FRANK_MAX)]
        return [np.clip(th, -FRANK_MAX, -FRANK_MIN)], [(-FRANK_MAX, -FRANK_MIN)]
    return [], []


def _from_free(fam: Family, vals) -> PairCopula:
    if fam == Family.GAUSSIAN:
        return PairCopula(fam, np.tanh(vals[0]))
    if fam == Family.STUDENT_T:
        return PairCopula(fam, np.tanh(vals[0]), min(2.0 + np.exp(vals[1]), NU_MAX))
    if fam in (Family.GUMBEL, Family.SURVIVAL_GUMBEL):
        return PairCopula(fam, 1.0 + np.exp(vals[0]))
    if fam in (Family.GUMBEL90, Family.GUMBEL270):
        return PairCopula(fam, -1.0 - np.exp(vals[0]))
    if fam == Family.FRANK:
        return PairCopula(fam, vals[0])
    return PairCopula(Family.INDEPENDENCE)


class ParameterMap:
    """Packs the free parameters of a model into one vector and back."""

    def __init__(self, model: RVineModel):
        self.model = model
        self.slots = []
        start, bounds = [], []
        for i, k in model.positions():
            cop = model.copulas[i][k]
            vals, bnds = _to_free(cop)
            if vals:
                self.slots.append((i, k, cop.family, len(start), len(vals)))
                start.extend(vals)
                bounds.extend(bnds)
        self.start = np.array(start, dtype=float)
        self.bounds = bounds

    @property
    def size(self) -> int:
        return self.start.size

    def build(self, theta) -> RVineModel:
        updates = {}
        for i, k, fam, off, width in self.slots:
            updates[(i, k)] = _from_free(fam, theta[off:off + width])
        return self.model.with_copulas(updates)


class _IncrementalLoglik:
    """Log-likelihood that re-evaluates only what one edge change can affect.

    A perturbed copula at position ``(i, k)`` changes its own log density
    and h-function outputs, and through them every step that reads those
    outputs, directly or indirectly.  All other terms are reused.
    """

    def __init__(self, model: RVineModel, x):
        steps, columns = model._plan
        n, size = model.n, x.shape[0]
        self.n = n
        self.index = {(st.i, st.k): idx for idx, st in enumerate(steps)}
        self.layout = [(st.i, st.k, st.col, st.direct) for st in steps]
        children = [[] for _ in steps]
        for idx, (i, k, col, _) in enumerate(self.layout):
            for parent in ((i + 1, k), (i + 1, col)):
                if parent in self.index:
                    children[self.index[parent]].append(idx)
        self.affected = []
        for idx in range(len(steps)):
            seen, stack = {idx}, [idx]
            while stack:
                for c in children[stack.pop()]:
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)
            self.affected.append(sorted(seen))
        self.vd = np.empty((n, n, size))
        self.vi = np.empty((n, n, size))
        self.vd[n - 1] = clamp(x)[:, columns].T
        self.logc = np.zeros((len(steps), size))
        self.copulas = None
        self.total = 0.0

    def reset(self, model: RVineModel) -> float:
        """Full evaluation at ``model``; caches every intermediate."""
        self.copulas = model.copulas
        vd, vi = self.vd, self.vi
        for idx, (i, k, col, direct) in enumerate(self.layout):
            z2 = vd[i, col] if direct else vi[i, col]
            logc, h1, h2 = self.copulas[i][k].evaluate(vd[i, k], z2)
            self.logc[idx] = logc
            vd[i - 1, k] = h1
            vi[i - 1, k] = h2
        self.total = float(np.sum(self.logc))
        return self.total

    def perturbed(self, i0: int, k0: int, cop: PairCopula) -> float:
        """Log-likelihood with the copula at ``(i0, k0)`` replaced by ``cop``."""
        vd, vi = self.vd, self.vi
        new_d, new_i = {}, {}
        delta = 0.0
        for idx in self.affected[self.index[(i0, k0)]]:
            i, k, col, direct = self.layout[idx]
            z1 = new_d.get((i, k), vd[i, k])
            if direct:
                z2 = new_d.get((i, col), vd[i, col])
            else:
                z2 = new_i.get((i, col), vi[i, col])
            c = cop if (i, k) == (i0, k0) else self.copulas[i][k]
            logc, h1, h2 = c.evaluate(z1, z2)
            delta += float(np.sum(logc) - np.sum(self.logc[idx]))
            new_d[(i - 1, k)] = h1
            new_i[(i - 1, k)] = h2
        return self.total + delta


@dataclass
class MleReport:
    """Joint fit summary; ``aic``/``bic`` follow from ``loglik_mle`` and ``n_params``."""

    model: RVineModel
    loglik_seq: float
    loglik_mle: float
    n_params: int
    n_obs: int
    iterations: int
    converged: bool
    message: str = ""

    @property
    def aic(self) -> float:
        return -2.0 * self.loglik_mle + 2.0 * self.n_params

    @property
    def bic(self) -> float:
        return -2.0 * self.loglik_mle + self.n_params * np.log(self.n_obs)


def information_criteria(loglik: float, n_params: int, n_obs: int):
    """Return ``(aic, bic)``."""
    return -2.0 * loglik + 2.0 * n_params, -2.0 * loglik + n_params * np.log(n_obs)


def fit_mle(model: RVineModel, sample, max_iter: int = MAX_ITER) -> MleReport:
    """Maximise the joint log-likelihood starting from ``model``'s parameters.

    Families and structure stay fixed.  Parameters are optimised by L-BFGS-B
    on an unconstrained scale with central finite-difference gradients.  The
    starting point is returned when the optimiser does not improve on it.

    Parameters
    ----------
    model : RVineModel
        Starting values, typically from sequential estimation.
    sample : array_like, shape (N, n)
    max_iter : int

    Returns
    -------
    MleReport
    """
    x = np.atleast_2d(np.asarray(sample, dtype=float))
    size = x.shape[0]
    start_ll = model.loglik(x)
    pmap = ParameterMap(model)
    if pmap.size == 0:
        return MleReport(model, start_ll, start_ll, 0, size, 0, True, "no free parameters")
    if model.n == 2:
        cop = model.copulas[1][0]
        fitted, ll = fit_pair_mle(cop.family, x[:, int(model.structure.matrix[0, 0]) - 1],
                                  x[:, int(model.structure.matrix[1, 0]) - 1], demote=False)
        best = model.with_copulas({(1, 0): fitted})
        if ll < start_ll:
            best, ll = model, start_ll
        return MleReport(best, start_ll, ll, best.n_params, size, 1, True, "bivariate fit")

    work = _IncrementalLoglik(model, x)

    def objective(theta):
        try:
            val = -work.reset(pmap.build(theta)) / size
        except (ValueError, ArithmeticError):
            return np.inf, np.zeros_like(theta)
        if not np.isfinite(val):
            return np.inf, np.zeros_like(theta)
        grad = np.empty_like(theta)
        for i, k, fam, off, width in pmap.slots:
            for j in range(off, off + width):
                lo, hi = pmap.bounds[j]
                up = min(theta[j] + FD_STEP, hi)
                dn = max(theta[j] - FD_STEP, lo)
                vals = theta[off:off + width].copy()
                vals[j - off] = up
                f_up = work.perturbed(i, k, _from_free(fam, vals))
                vals[j - off] = dn
                f_dn = work.perturbed(i, k, _from_free(fam, vals))
                grad[j] = -(f_up - f_dn) / (up - dn) / size
        return val, grad

    res = optimize.minimize(objective, pmap.start, jac=True, method="L-BFGS-B",
                            bounds=pmap.bounds,
                            options={"maxiter": max_iter, "ftol": FTOL, "gtol": 1e-7})
    best = pmap.build(res.x)
    best_ll = best.loglik(x)
    if not best_ll >= start_ll:
        best, best_ll = model, start_ll
    return MleReport(best, start_ll, best_ll, model.n_params, size, int(res.nit),
                     bool(res.success), str(res.message))


class Correction(str, Enum):
    NONE = "none"
    AKAIKE = "akaike"
    SCHWARZ = "schwarz"


class Favored(str, Enum):
    A = "A"
    B = "B"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class VuongResult:
    statistic: float
    p_value: float
    correction: Correction
    favored: Favored

    def __str__(self):
        return (f"Vuong statistic {self.statistic:.4f} (p = {self.p_value:.4g}, "
                f"{self.correction.value} correction): favors {self.favored.value}")


def vuong_from_terms(terms, p_a: int, p_b: int, correction="none", alpha: float = 0.05):
    """Vuong test on per-observation log-likelihood differences ``terms``.

    The statistic is ``(sum(m) - K) / (sqrt(N) * sd(m))`` with the sample
    standard deviation (ddof 1) and ``K`` equal to 0, ``p_a - p_b`` or
    ``(p_a - p_b) * log(N) / 2``.
    """
    m = np.asarray(terms, dtype=float)
    size = m.size
    if size < 2:
        raise ValueError("Vuong test needs at least two observations")
    correction = Correction(correction)
    sd = np.std(m, ddof=1)
    if not sd > 0:
        raise ValueError("log-likelihood differences have zero variance; models are indistinguishable")
    if correction == Correction.NONE:
        shift = 0.0
    elif correction == Correction.AKAIKE:
        shift = float(p_a - p_b)
    else:
        shift = (p_a - p_b) * np.log(size) / 2.0
    stat = (np.sum(m) - shift) / (np.sqrt(size) * sd)
    p_value = 2.0 * stats.norm.sf(abs(stat))
    if p_value >= alpha:
        favored = Favored.INCONCLUSIVE
    else:
        favored = Favored.A if stat > 0 else Favored.B
    return VuongResult(float(stat), float(p_value), correction, favored)


def vuong(a: RVineModel, b: RVineModel, sample, correction="none", alpha: float = 0.05) -> VuongResult:
    """Vuong comparison of two fitted models on the same sample; positive favors ``a``."""
    x = np.atleast_2d(np.asarray(sample, dtype=float))
    terms = a.log_density(x) - b.log_density(x)
    return vuong_from_terms(terms, a.n_params, b.n_params, correction, alpha)
