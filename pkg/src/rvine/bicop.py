"""
Bivariate copula families used as pair-copula building blocks.

Every family exposes a density, the two conditional distribution functions
(h-functions) and their inverses, the copula CDF and the population Kendall's
tau.  Rotations of the Gumbel copula follow one convention throughout:

* survival (180 degrees) reflects both arguments,
* 90 degrees reflects the first argument,
* 270 degrees reflects the second argument.

Rotated Gumbel copulas carry a negative parameter ``theta <= -1``.
"""

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate, optimize, special
from scipy.stats import norm

from .errors import ConvergenceError, DomainError, FittingError
from .kendall import kendall_tau

EPS = 1e-10
FRANK_MAX = 50.0
GUMBEL_MAX = 50.0
RHO_MAX = 0.9999
NU_MIN = 2.0001
NU_MAX = 30.0
MIN_FIT_SIZE = 10
HINV_TOL = 1e-10
HINV_MAXITER = 100


class Family(IntEnum):
    """Pair-copula family tags; the integer value is the serialization code."""

    INDEPENDENCE = 0
    GAUSSIAN = 1
    STUDENT_T = 2
    GUMBEL = 3
    FRANK = 5
    SURVIVAL_GUMBEL = 13
    GUMBEL90 = 23
    GUMBEL270 = 33

    @property
    def n_params(self):
        return {Family.INDEPENDENCE: 0, Family.STUDENT_T: 2}.get(self, 1)

    @property
    def short_name(self):
        return _SHORT_NAMES[self]

    @classmethod
    def parse(cls, text):
        """Look up a family by short name, enum name or integer code."""
        key = str(text).strip().lower()
        for fam, name in _SHORT_NAMES.items():
            if key in (name, fam.name.lower()):
                return fam
        try:
            return cls(int(key))
        except ValueError:
            raise DomainError(f"unknown copula family {text!r}") from None


_SHORT_NAMES = {
    Family.INDEPENDENCE: "indep",
    Family.GAUSSIAN: "gauss",
    Family.STUDENT_T: "t",
    Family.GUMBEL: "gumbel",
    Family.FRANK: "frank",
    Family.SURVIVAL_GUMBEL: "sgumbel",
    Family.GUMBEL90: "gumbel90",
    Family.GUMBEL270: "gumbel270",
}

ALL_FAMILIES = (
    Family.GAUSSIAN,
    Family.STUDENT_T,
    Family.GUMBEL,
    Family.SURVIVAL_GUMBEL,
    Family.GUMBEL90,
    Family.GUMBEL270,
    Family.FRANK,
)
POSITIVE_ONLY = frozenset({Family.GUMBEL, Family.SURVIVAL_GUMBEL})
NEGATIVE_ONLY = frozenset({Family.GUMBEL90, Family.GUMBEL270})


def clamp(x):
    """Validate that ``x`` lies in [0, 1] and clamp it to [EPS, 1 - EPS]."""
    x = np.asarray(x, dtype=float)
    if np.any(~((x >= 0.0) & (x <= 1.0))):
        raise DomainError("copula arguments must lie in [0, 1]")
    return np.clip(x, EPS, 1.0 - EPS)


def _unit(x):
    return np.clip(x, EPS, 1.0 - EPS)


# --------------------------------------------------------------------------
# family kernels; each returns (log density, F(u|v), F(v|u))


def _gauss_kernel(u, v, rho):
    x = special.ndtri(u)
    y = special.ndtri(v)
    r2 = 1.0 - rho * rho
    s = np.sqrt(r2)
    logc = -0.5 * np.log(r2) - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2)
    h1 = special.ndtr((x - rho * y) / s)
    h2 = special.ndtr((y - rho * x) / s)
    return logc, h1, h2


@lru_cache(maxsize=256)
def _t_const(nu):
    return (special.gammaln((nu + 2.0) / 2.0) + special.gammaln(nu / 2.0)
            - 2.0 * special.gammaln((nu + 1.0) / 2.0))


def t_quantile(nu, p):
    """Student-t quantile via the inverse regularized incomplete beta function.

    One Newton step on the CDF polishes the result to about 1e-11 relative
    accuracy at roughly half the cost of ``scipy.special.stdtrit``.
    """
    p = np.asarray(p, dtype=float)
    q = np.minimum(p, 1.0 - p)
    z = special.betaincinv(0.5 * nu, 0.5, 2.0 * q)
    x = np.sqrt(nu * (1.0 / z - 1.0))
    x = np.where(p < 0.5, -x, x)
    log_dens = (special.gammaln(0.5 * (nu + 1.0)) - special.gammaln(0.5 * nu)
                - 0.5 * np.log(nu * np.pi) - 0.5 * (nu + 1.0) * np.log1p(x * x / nu))
    return x - (special.stdtr(nu, x) - p) / np.exp(log_dens)


def _t_kernel(u, v, rho, nu, x=None, y=None):
    if x is None:
        x = t_quantile(nu, u)
    if y is None:
        y = t_quantile(nu, v)
    r2 = 1.0 - rho * rho
    q = (x * x + y * y - 2.0 * rho * x * y) / (nu * r2)
    logc = (_t_const(nu) - 0.5 * np.log(r2) - 0.5 * (nu + 2.0) * np.log1p(q)
            + 0.5 * (nu + 1.0) * (np.log1p(x * x / nu) + np.log1p(y * y / nu)))
    scale_y = np.sqrt((nu + y * y) * r2 / (nu + 1.0))
    scale_x = np.sqrt((nu + x * x) * r2 / (nu + 1.0))
    h1 = special.stdtr(nu + 1.0, (x - rho * y) / scale_y)
    h2 = special.stdtr(nu + 1.0, (y - rho * x) / scale_x)
    return logc, h1, h2


def _gumbel_kernel(u, v, theta):
    lx = np.log(-np.log(u))
    ly = np.log(-np.log(v))
    log_s = np.logaddexp(theta * lx, theta * ly)
    a = np.exp(log_s / theta)
    log_uv = np.log(u) + np.log(v)
    logc = (-a - log_uv + (theta - 1.0) * (lx + ly)
            + (1.0 - 2.0 * theta) * np.log(a) + np.log(a + theta - 1.0))
    common = -a + (1.0 / theta - 1.0) * log_s
    h1 = np.exp(common + (theta - 1.0) * ly - np.log(v))
    h2 = np.exp(common + (theta - 1.0) * lx - np.log(u))
    return logc, h1, h2


def _frank_pos(u, v, theta):
    # theta > 0; all terms stay in (0, 1] so nothing cancels catastrophically
    a = np.exp(-theta * u)
    b = np.exp(-theta * v)
    denom = a + b - a * b - np.exp(-theta)
    logc = np.log(-theta * np.expm1(-theta)) - theta * (u + v) - 2.0 * np.log(denom)
    h1 = -b * np.expm1(-theta * u) / denom
    h2 = -a * np.expm1(-theta * v) / denom
    return logc, h1, h2


def _frank_kernel(u, v, theta):
    if abs(theta) < 1e-10:
        return np.zeros(np.broadcast(u, v).shape), u + 0.0 * v, v + 0.0 * u
    if theta > 0:
        return _frank_pos(u, v, theta)
    # negative parameter: reflect the second argument
    logc, h1, h2 = _frank_pos(u, 1.0 - v, -theta)
    return logc, h1, 1.0 - h2


def _frank_hinv(w, v, theta):
    if theta < 0:
        return _frank_hinv(w, 1.0 - v, -theta)
    b = np.exp(-theta * v)
    a = (b * (1.0 - w) + w * np.exp(-theta)) / (b * (1.0 - w) + w)
    return -np.log(a) / theta


def _frank_cdf(u, v, theta):
    if theta < 0:
        return u - _frank_cdf(u, 1.0 - v, -theta)
    a = np.exp(-theta * u)
    b = np.exp(-theta * v)
    denom = a + b - a * b - np.exp(-theta)
    return -np.log(denom / -np.expm1(-theta)) / theta


def _gumbel_hinv(w, v, theta):
    """Solve ``F_Gumbel(u | v) = w`` for ``u`` by vectorised bisection."""
    w, v = np.broadcast_arrays(np.asarray(w, float), np.asarray(v, float))
    lo = np.full(w.shape, EPS)
    hi = np.full(w.shape, 1.0 - EPS)
    for _ in range(HINV_MAXITER):
        mid = 0.5 * (lo + hi)
        below = _gumbel_kernel(mid, v, theta)[1] < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo, initial=0.0) < HINV_TOL * 1e-2:
            return 0.5 * (lo + hi)
    if np.max(hi - lo, initial=0.0) > HINV_TOL:
        raise ConvergenceError("Gumbel h-inverse did not reach tolerance")
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PairCopula:
    """A bivariate copula: family tag plus parameters.

    Parameters
    ----------
    family : Family
        Copula family.
    theta : float
        First parameter (correlation for Gaussian/Student-t, Gumbel/Frank
        parameter otherwise).  Ignored for the independence copula.
    nu : float, optional
        Degrees of freedom; present only for the Student-t family.
    """

    family: Family
    theta: float = 0.0
    nu: Optional[float] = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        th = float(self.theta)
        object.__setattr__(self, "theta", th)
        if (self.nu is not None) != (fam == Family.STUDENT_T):
            raise DomainError("nu must be given exactly for the Student-t family")
        if fam == Family.INDEPENDENCE:
            if th != 0.0:
                raise DomainError("independence copula takes no parameter")
        elif fam in (Family.GAUSSIAN, Family.STUDENT_T):
            if not -1.0 < th < 1.0:
                raise DomainError(f"correlation {th} outside (-1, 1)")
            if fam == Family.STUDENT_T:
                nu = float(self.nu)
                object.__setattr__(self, "nu", nu)
                if not 2.0 < nu <= NU_MAX:
                    raise DomainError(f"degrees of freedom {nu} outside (2, {NU_MAX}]")
        elif fam in POSITIVE_ONLY:
            if not th >= 1.0:
                raise DomainError(f"{fam.name} parameter {th} must be >= 1")
        elif fam in NEGATIVE_ONLY:
            if not th <= -1.0:
                raise DomainError(f"{fam.name} parameter {th} must be <= -1")
        elif fam == Family.FRANK:
            if th == 0.0 or not np.isfinite(th):
                raise DomainError("Frank parameter must be finite and non-zero")

    def __str__(self):
        if self.family == Family.INDEPENDENCE:
            return "indep"
        if self.family == Family.STUDENT_T:
            return f"t(rho={self.theta:.4g}, nu={self.nu:.4g})"
        return f"{self.family.short_name}({self.theta:.4g})"

    @property
    def n_params(self):
        return self.family.n_params

    @property
    def params(self):
        """Parameters as a tuple of scalars (empty for independence)."""
        if self.family == Family.INDEPENDENCE:
            return ()
        if self.family == Family.STUDENT_T:
            return (self.theta, self.nu)
        return (self.theta,)

    def transpose(self):
        """Copula of the swapped pair ``(V, U)``."""
        if self.family == Family.GUMBEL90:
            return PairCopula(Family.GUMBEL270, self.theta)
        if self.family == Family.GUMBEL270:
            return PairCopula(Family.GUMBEL90, self.theta)
        return self

    # -- core evaluation -------------------------------------------------

    def evaluate(self, u, v):
        """Joint evaluation on clamped inputs.

        Returns
        -------
        logc, h1, h2 : ndarray
            Log density, ``F(u | v)`` and ``F(v | u)``.
        """
        fam = self.family
        th = self.theta
        if fam == Family.INDEPENDENCE:
            return np.zeros(np.broadcast(u, v).shape), u + 0.0 * v, v + 0.0 * u
        if fam == Family.GAUSSIAN:
            out = _gauss_kernel(u, v, th)
        elif fam == Family.STUDENT_T:
            out = _t_kernel(u, v, th, self.nu)
        elif fam == Family.FRANK:
            out = _frank_kernel(u, v, th)
        elif fam == Family.GUMBEL:
            out = _gumbel_kernel(u, v, th)
        elif fam == Family.SURVIVAL_GUMBEL:
            logc, h1, h2 = _gumbel_kernel(1.0 - u, 1.0 - v, th)
            out = logc, 1.0 - h1, 1.0 - h2
        elif fam == Family.GUMBEL90:
            logc, h1, h2 = _gumbel_kernel(1.0 - u, v, -th)
            out = logc, 1.0 - h1, h2
        else:
            logc, h1, h2 = _gumbel_kernel(u, 1.0 - v, -th)
            out = logc, h1, 1.0 - h2
        logc, h1, h2 = out
        return logc, _unit(h1), _unit(h2)

    def logpdf(self, u, v):
        """Log copula density."""
        return self.evaluate(clamp(u), clamp(v))[0]

    def pdf(self, u, v):
        """Copula density ``c(u, v)``."""
        return np.exp(self.logpdf(u, v))

    def hfunc(self, u, v):
        """Conditional distribution ``F(u | v) = dC(u, v)/dv``."""
        return self.evaluate(clamp(u), clamp(v))[1]

    def hfunc2(self, u, v):
        """Conditional distribution ``F(v | u) = dC(u, v)/du``."""
        return self.evaluate(clamp(u), clamp(v))[2]

    def hinv(self, w, v):
        """Inverse of :meth:`hfunc` in its first argument: solve ``F(u | v) = w``."""
        return _unit(self._hinv(clamp(w), clamp(v)))

    def hinv2(self, w, u):
        """Inverse of :meth:`hfunc2` in its second argument: solve ``F(v | u) = w``."""
        return _unit(self.transpose()._hinv(clamp(w), clamp(u)))

    def _hinv(self, w, v):
        fam = self.family
        th = self.theta
        if fam == Family.INDEPENDENCE:
            return w + 0.0 * v
        if fam == Family.GAUSSIAN:
            return special.ndtr(special.ndtri(w) * np.sqrt(1.0 - th * th) + th * special.ndtri(v))
        if fam == Family.STUDENT_T:
            nu = self.nu
            y = t_quantile(nu, v)
            scale = np.sqrt((nu + y * y) * (1.0 - th * th) / (nu + 1.0))
            return special.stdtr(nu, t_quantile(nu + 1.0, w) * scale + th * y)
        if fam == Family.FRANK:
            if abs(th) < 1e-10:
                return w + 0.0 * v
            return _frank_hinv(w, v, th)
        if fam == Family.GUMBEL:
            return _gumbel_hinv(w, v, th)
        if fam == Family.SURVIVAL_GUMBEL:
            return 1.0 - _gumbel_hinv(1.0 - w, 1.0 - v, th)
        if fam == Family.GUMBEL90:
            return 1.0 - _gumbel_hinv(1.0 - w, v, -th)
        return _gumbel_hinv(w, 1.0 - v, -th)

    def cdf(self, u, v):
        """Copula distribution function ``C(u, v)``."""
        u = clamp(u)
        v = clamp(v)
        fam = self.family
        th = self.theta
        if fam == Family.INDEPENDENCE:
            return u * v
        if fam == Family.GAUSSIAN:
            return _bvn_cdf(special.ndtri(u), special.ndtri(v), th)
        if fam == Family.STUDENT_T:
            return _integrated_cdf(self, u, v)
        if fam == Family.FRANK:
            if abs(th) < 1e-10:
                return u * v
            return _frank_cdf(u, v, th)
        if fam == Family.GUMBEL:
            return _gumbel_cdf(u, v, th)
        if fam == Family.SURVIVAL_GUMBEL:
            return u + v - 1.0 + _gumbel_cdf(1.0 - u, 1.0 - v, th)
        if fam == Family.GUMBEL90:
            return v - _gumbel_cdf(1.0 - u, v, -th)
        return u - _gumbel_cdf(u, 1.0 - v, -th)

    @property
    def tau(self):
        """Population Kendall's tau."""
        return family_tau(self.family, self.theta)

    def simulate(self, size, rng):
        """Draw ``size`` pairs by inverting the h-function of uniform draws."""
        w = rng.random((size, 2))
        u = w[:, 0]
        v = self.hinv2(w[:, 1], u)
        return np.column_stack([u, v])


def _gumbel_cdf(u, v, theta):
    s = (-np.log(u)) ** theta + (-np.log(v)) ** theta
    return np.exp(-s ** (1.0 / theta))


def _bvn_cdf(x, y, rho):
    """Standard bivariate normal CDF through Owen's T function."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    # the formula is singular on the axes; the CDF is continuous there
    x = np.where(x == 0.0, 1e-13, x)
    y = np.where(y == 0.0, 1e-13, y)
    s = np.sqrt(1.0 - rho * rho)
    tx = special.owens_t(x, (y - rho * x) / (x * s))
    ty = special.owens_t(y, (x - rho * y) / (y * s))
    beta = np.where(x * y < 0, 0.5, 0.0)
    return 0.5 * (special.ndtr(x) + special.ndtr(y)) - tx - ty - beta


def _integrated_cdf(cop, u, v):
    """``C(u, v)`` as the integral over ``[0, v]`` of ``F(u | t)``."""
    u, v = np.broadcast_arrays(u, v)
    out = np.empty(u.shape)
    for idx in np.ndindex(u.shape):
        uu = float(u[idx])
        out[idx] = integrate.quad(lambda t: float(cop.hfunc(uu, t)), 0.0, float(v[idx]),
                                  epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    return out


# --------------------------------------------------------------------------
# Kendall's tau relations


def _debye1(theta):
    val = integrate.quad(lambda t: t / np.expm1(t) if t != 0 else 1.0, 0.0, theta,
                         epsabs=1e-14, epsrel=1e-13)[0]
    return val / theta


def frank_tau(theta):
    """Kendall's tau of the Frank copula, ``1 + 4 (D1(theta) - 1) / theta``."""
    if abs(theta) < 1e-6:
        return theta / 9.0
    return 1.0 + 4.0 * (_debye1(theta) - 1.0) / theta


def family_tau(family, theta):
    """Population Kendall's tau of a family at parameter ``theta``."""
    family = Family(family)
    if family == Family.INDEPENDENCE:
        return 0.0
    if family in (Family.GAUSSIAN, Family.STUDENT_T):
        return 2.0 / np.pi * np.arcsin(theta)
    if family in POSITIVE_ONLY:
        return 1.0 - 1.0 / theta
    if family in NEGATIVE_ONLY:
        return -(1.0 - 1.0 / abs(theta))
    return frank_tau(theta)


def tau_to_param(family, tau, nu=None):
    """Parameter whose population Kendall's tau equals ``tau``.

    Parameters
    ----------
    family : Family
    tau : float
        Target Kendall's tau in ``(-1, 1)``.
    nu : float, optional
        Degrees of freedom for the Student-t family (default 4).

    Returns
    -------
    PairCopula

    Raises
    ------
    DomainError
        If ``tau`` is outside ``(-1, 1)`` or its sign is incompatible with the
        family (e.g. a Gumbel copula with negative tau).
    """
    family = Family(family)
    tau = float(tau)
    if not -1.0 < tau < 1.0:
        raise DomainError(f"Kendall's tau {tau} outside (-1, 1)")
    if family == Family.INDEPENDENCE:
        return PairCopula(family)
    if family in POSITIVE_ONLY and tau < 0:
        raise DomainError(f"{family.name} cannot represent negative tau {tau}")
    if family in NEGATIVE_ONLY and tau > 0:
        raise DomainError(f"{family.name} cannot represent positive tau {tau}")
    if family in (Family.GAUSSIAN, Family.STUDENT_T):
        rho = np.sin(np.pi * tau / 2.0)
        if family == Family.STUDENT_T:
            return PairCopula(family, rho, 4.0 if nu is None else nu)
        return PairCopula(family, rho)
    if family in POSITIVE_ONLY:
        return PairCopula(family, min(1.0 / (1.0 - tau), GUMBEL_MAX))
    if family in NEGATIVE_ONLY:
        return PairCopula(family, -min(1.0 / (1.0 - abs(tau)), GUMBEL_MAX))
    # Frank
    if tau == 0.0:
        raise DomainError("Frank copula cannot represent tau = 0")
    sign = 1.0 if tau > 0 else -1.0
    if abs(tau) >= frank_tau(FRANK_MAX):
        return PairCopula(family, sign * FRANK_MAX)
    theta = optimize.brentq(lambda t: frank_tau(t) - abs(tau), 1e-8, FRANK_MAX,
                            xtol=1e-14, rtol=1e-14)
    return PairCopula(family, sign * theta)


# --------------------------------------------------------------------------
# estimation


def _check_pair(u, v):
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.size != v.size:
        raise DomainError("u and v must have equal length")
    if u.size < 2:
        raise DomainError("a pair sample needs at least two observations")
    return clamp(u), clamp(v)


def pair_loglik(cop, u, v):
    """Sum of log densities; ``-inf`` for non-finite contributions."""
    val = float(np.sum(cop.evaluate(u, v)[0]))
    return val if np.isfinite(val) else -np.inf


def _bounded_fit(make, lo, hi, u, v, start=None):
    def nll(th):
        try:
            return -pair_loglik(make(th), u, v)
        except DomainError:
            return np.inf

    res = optimize.minimize_scalar(nll, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-8, "maxiter": 200})
    best, best_val = res.x, res.fun
    if start is not None and lo <= start <= hi and nll(start) < best_val:
        best = start
    return make(best)


def _fit_student(u, v, tau_hat):
    """Profile likelihood over the degrees of freedom.

    For each trial ``nu`` the t quantiles are computed once and the
    correlation is fitted by a bounded line search; the outer search runs on
    ``log(nu - 2)``.
    """
    rho0 = float(np.sin(np.pi * tau_hat / 2.0))

    def profile(log_nu):
        nu = min(2.0 + np.exp(log_nu), NU_MAX)
        x = t_quantile(nu, u)
        y = t_quantile(nu, v)
        sq = x * x + y * y
        cross = 2.0 * x * y
        base = u.size * _t_const(nu) + 0.5 * (nu + 1.0) * np.sum(
            np.log1p(x * x / nu) + np.log1p(y * y / nu))

        def nll(rho):
            r2 = 1.0 - rho * rho
            val = base - 0.5 * u.size * np.log(r2) - 0.5 * (nu + 2.0) * np.sum(
                np.log1p((sq - rho * cross) / (nu * r2)))
            return -val if np.isfinite(val) else np.inf

        res = optimize.minimize_scalar(nll, bounds=(-RHO_MAX, RHO_MAX), method="bounded",
                                       options={"xatol": 1e-8, "maxiter": 200})
        start = nll(rho0)
        if res.fun <= start:
            return res.fun, res.x, nu
        return start, rho0, nu

    lo, hi = np.log(NU_MIN - 2.0), np.log(NU_MAX - 2.0)
    grid = np.log(np.array([3.0, 6.0, 12.0, NU_MAX]) - 2.0)
    vals = [profile(g)[0] for g in grid]
    j = int(np.argmin(vals))
    a = lo if j == 0 else grid[j - 1]
    b = hi if j == len(grid) - 1 else grid[j + 1]
    res = optimize.minimize_scalar(lambda z: profile(z)[0], bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-3, "maxiter": 200})
    z = res.x if res.fun <= vals[j] else grid[j]
    _, rho, nu = profile(z)
    return PairCopula(Family.STUDENT_T, rho, nu)


def fit_pair_mle(family, u, v, demote=True):
    """Maximum-likelihood fit of one family to a pair sample.

    Parameters
    ----------
    family : Family
    u, v : array_like
        Observations on the copula scale.
    demote : bool
        Replace a Student-t fit whose degrees of freedom reach the cap of 30
        by the Gaussian fit.

    Returns
    -------
    (PairCopula, float)
        Fitted copula and its log-likelihood.
    """
    family = Family(family)
    u, v = _check_pair(u, v)
    if u.size < MIN_FIT_SIZE:
        raise FittingError(f"refusing to fit with {u.size} < {MIN_FIT_SIZE} observations")
    if family == Family.INDEPENDENCE:
        return PairCopula(family), 0.0
    tau_hat = kendall_tau(u, v)
    if not np.isfinite(tau_hat):
        tau_hat = 0.0
    tau_hat = float(np.clip(tau_hat, -0.95, 0.95))

    if family == Family.GAUSSIAN:
        cop = _bounded_fit(lambda r: PairCopula(family, r), -RHO_MAX, RHO_MAX, u, v,
                           np.sin(np.pi * tau_hat / 2.0))
    elif family == Family.STUDENT_T:
        cop = _fit_student(u, v, tau_hat)
        if demote and cop.nu >= NU_MAX * (1.0 - 1e-3):
            return fit_pair_mle(Family.GAUSSIAN, u, v)
    elif family in POSITIVE_ONLY:
        cop = _bounded_fit(lambda th: PairCopula(family, th), 1.0, GUMBEL_MAX, u, v,
                           1.0 / (1.0 - max(tau_hat, 0.0)))
    elif family in NEGATIVE_ONLY:
        cop = _bounded_fit(lambda th: PairCopula(family, th), -GUMBEL_MAX, -1.0, u, v,
                           -1.0 / (1.0 - max(-tau_hat, 0.0)))
    else:
        def frank(th):
            return PairCopula(family, th if th != 0.0 else 1e-8)

        cop = _bounded_fit(frank, -FRANK_MAX, FRANK_MAX, u, v)
    return cop, pair_loglik(cop, u, v)


def indep_test(u, v):
    """Two-sided p-value of the asymptotic Kendall's tau independence test.

    The statistic ``sqrt(9 N (N - 1) / (2 (2 N + 5))) * |tau|`` is compared
    with the standard normal distribution.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    n = u.size
    if n < MIN_FIT_SIZE:
        raise FittingError(f"independence test needs at least {MIN_FIT_SIZE} observations")
    tau_hat = kendall_tau(u, v)
    if not np.isfinite(tau_hat):
        return 1.0
    stat = np.sqrt(9.0 * n * (n - 1) / (2.0 * (2.0 * n + 5.0))) * abs(tau_hat)
    return float(2.0 * norm.sf(stat))


def sign_compatible(family, tau_hat):
    """Whether a family can represent dependence of the sign of ``tau_hat``."""
    if family in POSITIVE_ONLY:
        return tau_hat >= 0
    if family in NEGATIVE_ONLY:
        return tau_hat <= 0
    return True


class FamilyChoice(NamedTuple):
    copula: PairCopula
    aic: float
    loglik: float


def select_family(u, v, candidates=ALL_FAMILIES, use_indep_test=False, alpha=0.05):
    """Choose the candidate family with the smallest AIC.

    Parameters
    ----------
    u, v : array_like
        Pair sample on the copula scale.
    candidates : iterable of Family
        Families to consider; Gumbel variants whose dependence sign contradicts
        the empirical Kendall's tau are skipped.
    use_indep_test : bool
        Run the Kendall's tau independence test first and return the
        independence copula if its p-value exceeds ``alpha``.
    alpha : float
        Level of the independence test.

    Returns
    -------
    FamilyChoice
        Selected copula, its AIC and its log-likelihood.
    """
    candidates = [Family(f) for f in candidates]
    if not candidates:
        raise FittingError("no candidate families given")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    u, v = _check_pair(u, v)
    if use_indep_test and indep_test(u, v) > alpha:
        return FamilyChoice(PairCopula(Family.INDEPENDENCE), 0.0, 0.0)
    tau_hat = kendall_tau(u, v)
    if not np.isfinite(tau_hat):
        tau_hat = 0.0
    best = None
    seen = set()
    for fam in candidates:
        if fam in seen or not sign_compatible(fam, tau_hat):
            continue
        seen.add(fam)
        cop, ll = fit_pair_mle(fam, u, v)
        aic = -2.0 * ll + 2.0 * cop.n_params
        if best is None or aic < best[1]:
            best = FamilyChoice(cop, aic, ll)
    if best is None:
        raise FittingError(f"no candidate family is compatible with tau = {tau_hat:.3f}")
    return best
