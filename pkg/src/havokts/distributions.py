"""Maximum-likelihood fits of nine distribution families and one-sample K-S testing.

Parameter names follow the usual table layout: Normal (mu, sigma), Beta (a, b),
Exponential (mu = mean), EV (mu, sigma; Gumbel for minima), Gamma (a shape,
b scale), GEV (k, mu, sigma; k > 0 is the heavy Frechet-type tail), Lognormal
(mu, sigma of log x), StudentT (mu, sigma, nu) and Weibull (A scale, B shape).
CDFs and reported densities come from scipy.stats; the estimators are implemented here.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from havokts.errors import ConvergenceError, DataError, DomainError, InsufficientDataError, ParameterError

FAMILIES = ("Normal", "Beta", "Exponential", "EV", "Gamma", "GEV", "Lognormal", "StudentT", "Weibull")
POSITIVE_FAMILIES = ("Exponential", "Gamma", "Lognormal", "Weibull")
ZERO_NUDGE = 1e-12
BETA_EPS = 1e-6
SIGNIFICANCE = 0.05
MIN_SAMPLES = 10


def shift_positive(v) -> np.ndarray:
    """``v + |min(v)|``, the shift applied to the forcing term before fitting.

    The shift is applied even when every value is already positive.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ParameterError("shift_positive needs a nonempty series")
    m = v.min()
    out = v + abs(m)
    # guard the minimum against rounding when |m| dwarfs other entries
    out[v == m] = 0.0 if m <= 0 else 2.0 * m
    return out


@dataclass(frozen=True, eq=False)
class FittedDistribution:
    """A fitted family. ``transform`` = (offset, scale) maps data to the
    distribution's argument as ``(x - offset) / scale`` (Beta only)."""

    family: str
    params: dict
    loglik: float
    transform: tuple[float, float] = (0.0, 1.0)
    n: int = 0
    iterations: int = 0

    def frozen(self):
        p = self.params
        f = self.family
        if f == "Normal":
            return stats.norm(p["mu"], p["sigma"])
        if f == "Beta":
            return stats.beta(p["a"], p["b"])
        if f == "Exponential":
            return stats.expon(scale=p["mu"])
        if f == "EV":
            return stats.gumbel_l(p["mu"], p["sigma"])
        if f == "Gamma":
            return stats.gamma(p["a"], scale=p["b"])
        if f == "GEV":
            return stats.genextreme(-p["k"], p["mu"], p["sigma"])
        if f == "Lognormal":
            return stats.lognorm(p["sigma"], scale=np.exp(p["mu"]))
        if f == "StudentT":
            return stats.t(p["nu"], p["mu"], p["sigma"])
        if f == "Weibull":
            return stats.weibull_min(p["B"], scale=p["A"])
        raise ParameterError(f"unknown family {f!r}")

    def argument(self, x) -> np.ndarray:
        off, scale = self.transform
        y = (np.asarray(x, dtype=np.float64) - off) / scale
        if self.family == "Beta":
            return np.clip(y, BETA_EPS, 1.0 - BETA_EPS)
        if self.family in POSITIVE_FAMILIES:
            return np.where(y == 0.0, ZERO_NUDGE, y)
        return y

    def cdf(self, x) -> np.ndarray:
        return self.frozen().cdf(self.argument(x))

    def logpdf(self, x) -> np.ndarray:
        return self.frozen().logpdf(self.argument(x)) - np.log(self.transform[1])

    def describe(self) -> str:
        return ", ".join(f"{k} = {v:.4g}" for k, v in self.params.items())


def _check(x, family) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < MIN_SAMPLES:
        raise InsufficientDataError(f"{family} fit needs at least {MIN_SAMPLES} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DataError("samples contain non-finite values")
    if np.ptp(x) == 0.0:
        raise DataError("samples are constant")
    return x


def _newton(f, fprime, x0, family, lo=0.0, tol=1e-12, max_iter=100):
    """Safeguarded scalar Newton: steps are halved to stay above ``lo``."""
    x = x0
    for it in range(1, max_iter + 1):
        step = f(x) / fprime(x)
        nxt = x - step
        while nxt <= lo:
            step *= 0.5
            nxt = x - step
        if abs(nxt - x) <= tol * max(1.0, abs(nxt)):
            return nxt, it
        x = nxt
    raise ConvergenceError(f"{family} fit did not converge in {max_iter} Newton steps")


def _fit_gamma(x):
    s = np.log(x.mean()) - np.log(x).mean()
    a0 = (3.0 - s + np.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    a, it = _newton(lambda a: np.log(a) - special.digamma(a) - s,
                    lambda a: 1.0 / a - special.polygamma(1, a), a0, "Gamma")
    return {"a": a, "b": x.mean() / a}, it


def _fit_weibull(x):
    # work on x / max(x) to keep x**B finite; the shape is scale-free
    c = x.max()
    lx = np.log(x / c)
    mlx = lx.mean()

    def g(B):
        w = np.exp(B * lx)
        return np.dot(w, lx) / w.sum() - 1.0 / B - mlx

    def dg(B):
        w = np.exp(B * lx)
        sw = w.sum()
        m1 = np.dot(w, lx) / sw
        return np.dot(w, lx * lx) / sw - m1 * m1 + 1.0 / B**2

    B0 = 1.2 / max(np.std(lx), 1e-12)
    B, it = _newton(g, dg, B0, "Weibull")
    A = c * np.mean(np.exp(B * lx)) ** (1.0 / B)
    return {"A": A, "B": B}, it


def _fit_ev(x):
    # Gumbel for minima; centre on the maximum so exp((x - c)/s) <= 1
    c = x.max()
    y = x - c
    my = y.mean()

    def moments(s):
        w = np.exp(y / s)
        sw = w.sum()
        m1 = np.dot(w, y) / sw
        return w, sw, m1, np.dot(w, y * y) / sw - m1 * m1

    def h(s):
        return s + my - moments(s)[2]

    def dh(s):
        return 1.0 + moments(s)[3] / s**2

    s0 = np.std(x) * np.sqrt(6.0) / np.pi
    s, it = _newton(h, dh, s0, "EV")
    w = np.exp(y / s)
    mu = c + s * np.log(w.mean())
    return {"mu": mu, "sigma": s}, it


def beta_transform(x) -> tuple[float, float]:
    """Data inside [0, 1] are used as is; otherwise map [min, max] onto [eps, 1 - eps]."""
    lo, hi = x.min(), x.max()
    if lo >= 0.0 and hi <= 1.0:
        return 0.0, 1.0
    span = (hi - lo) / (1.0 - 2.0 * BETA_EPS)
    return lo - BETA_EPS * span, span


def _fit_beta(y):
    ly, l1y = np.log(y).mean(), np.log1p(-y).mean()
    m, v = y.mean(), y.var()
    common = m * (1.0 - m) / v - 1.0
    a, b = (m * common, (1.0 - m) * common) if common > 0 else (1.0, 1.0)
    for it in range(1, 201):
        dab = special.digamma(a + b)
        f = np.array([special.digamma(a) - dab - ly, special.digamma(b) - dab - l1y])
        t = special.polygamma(1, a + b)
        J = np.array([[special.polygamma(1, a) - t, -t], [-t, special.polygamma(1, b) - t]])
        step = np.linalg.solve(J, f)
        lam = 1.0
        while a - lam * step[0] <= 0 or b - lam * step[1] <= 0:
            lam *= 0.5
        a, b = a - lam * step[0], b - lam * step[1]
        if np.max(np.abs(lam * step) / np.maximum(1.0, np.abs([a, b]))) < 1e-12:
            return {"a": a, "b": b}, it
    raise ConvergenceError("Beta fit did not converge in 200 Newton steps")


def gev_pwm_start(x) -> dict:
    """Probability-weighted-moment estimates for the GEV (k > 0 heavy tail)."""
    xs = np.sort(x)
    n = xs.size
    i = np.arange(n)
    b0 = xs.mean()
    b1 = np.sum(i / (n - 1) * xs) / n
    b2 = np.sum(i * (i - 1) / ((n - 1) * (n - 2)) * xs) / n
    c = (2.0 * b1 - b0) / (3.0 * b2 - b0) - np.log(2.0) / np.log(3.0)
    kh = 7.8590 * c + 2.9554 * c * c  # Hosking's shape, opposite sign to k here
    if abs(kh) < 1e-6:
        kh = 1e-6
    g = special.gamma(1.0 + kh)
    sigma = (2.0 * b1 - b0) * kh / (g * (1.0 - 2.0 ** (-kh)))
    mu = b0 + sigma * (g - 1.0) / kh
    return {"k": -kh, "mu": mu, "sigma": sigma}


def studentt_moment_start(x) -> dict:
    c = x - x.mean()
    kurt = np.mean(c**4) / np.mean(c**2) ** 2 - 3.0
    nu = 4.0 + 6.0 / kurt if kurt > 0 else 30.0
    return {"mu": float(np.median(x)), "sigma": float(x.std() * np.sqrt((nu - 2.0) / nu)), "nu": nu}


def _simplex(nll, theta0, family, max_iter=5000):
    # the function tolerance is relative: absolute 1e-12 is below rounding for large n
    f0 = nll(theta0)
    fatol = 1e-12 * max(1.0, abs(f0)) if np.isfinite(f0) else 1e-9
    res = optimize.minimize(nll, theta0, method="Nelder-Mead",
                            options={"maxiter": max_iter, "maxfev": 2 * max_iter,
                                     "xatol": 1e-9, "fatol": fatol})
    if not res.success or not np.isfinite(res.fun):
        raise ConvergenceError(f"{family} simplex search failed: {res.message}")
    return res.x, int(res.nit)


def _gev_nll(x, k, mu, log_sigma):
    # heavy-tailed (k > 0) parameterization; k -> 0 is the Gumbel limit
    sigma = np.exp(log_sigma)
    z = (x - mu) / sigma
    if abs(k) < 1e-9:
        return x.size * log_sigma + np.sum(z + np.exp(-z))
    t = 1.0 + k * z
    if np.any(t <= 0.0):
        return np.inf
    lt = np.log(t)
    return x.size * log_sigma + (1.0 + 1.0 / k) * np.sum(lt) + np.sum(np.exp(-lt / k))


def _t_nll(x, mu, log_sigma, log_nu):
    nu = np.exp(log_nu)
    z = (x - mu) / np.exp(log_sigma)
    const = special.gammaln(0.5 * (nu + 1.0)) - special.gammaln(0.5 * nu) - 0.5 * np.log(nu * np.pi)
    return -(x.size * (const - log_sigma) - 0.5 * (nu + 1.0) * np.sum(np.log1p(z * z / nu)))


def _fit_gev(x):
    p0 = gev_pwm_start(x)

    def nll(th):
        return _gev_nll(x, th[0], th[1], th[2])

    th0 = np.array([p0["k"], p0["mu"], np.log(p0["sigma"])])
    if not np.isfinite(nll(th0)):
        # PWM start may exclude an extreme sample from the support
        th0[0] = 0.0
    th, it = _simplex(nll, th0, "GEV")
    return {"k": th[0], "mu": th[1], "sigma": np.exp(th[2])}, it


def _fit_studentt(x):
    p0 = studentt_moment_start(x)

    def nll(th):
        # nu beyond 1e6 is indistinguishable from the normal limit; stop the walk there
        return _t_nll(x, th[0], th[1], min(th[2], np.log(1e6)))

    th, it = _simplex(nll, np.array([p0["mu"], np.log(p0["sigma"]), np.log(p0["nu"])]), "StudentT")
    return {"mu": th[0], "sigma": np.exp(th[1]), "nu": np.exp(th[2])}, it


def fit_mle(samples, family: str) -> FittedDistribution:
    """Maximum-likelihood fit of one family.

    Positive-support families nudge exact zeros (as produced by
    :func:`shift_positive`) to 1e-12 and reject negative data.
    """
    if family not in FAMILIES:
        raise ParameterError(f"unknown family {family!r}; choose from {FAMILIES}")
    x = _check(samples, family)
    transform = (0.0, 1.0)
    it = 0
    if family in POSITIVE_FAMILIES:
        if x.min() < 0.0:
            raise DomainError(f"{family} needs non-negative samples (min = {x.min():.6g})")
        x = np.where(x == 0.0, ZERO_NUDGE, x)
    if family == "Normal":
        params = {"mu": x.mean(), "sigma": x.std()}
    elif family == "Exponential":
        params = {"mu": x.mean()}
    elif family == "Lognormal":
        lx = np.log(x)
        params = {"mu": lx.mean(), "sigma": lx.std()}
    elif family == "Gamma":
        params, it = _fit_gamma(x)
    elif family == "Weibull":
        params, it = _fit_weibull(x)
    elif family == "EV":
        params, it = _fit_ev(x)
    elif family == "Beta":
        transform = beta_transform(x)
        y = np.clip((x - transform[0]) / transform[1], BETA_EPS, 1.0 - BETA_EPS)
        params, it = _fit_beta(y)
    elif family == "GEV":
        params, it = _fit_gev(x)
    else:
        params, it = _fit_studentt(x)
    params = {k: float(v) for k, v in params.items()}
    fd = FittedDistribution(family, params, 0.0, transform, x.size, it)
    loglik = float(np.sum(fd.logpdf(x)))
    if not np.isfinite(loglik):
        raise ConvergenceError(f"{family} fit produced a non-finite log-likelihood")
    return FittedDistribution(family, params, loglik, transform, x.size, it)


def ks_statistic(samples, cdf) -> float:
    """Two-sided one-sample statistic ``sup |F_n - F|`` over the sorted samples."""
    xs = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = xs.size
    F = np.asarray(cdf(xs), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def kolmogorov_sf(lam: float, tol: float = 1e-12) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam < 0.05:
        # the CDF is below 1e-200 here and the series would overflow
        return 1.0
    if lam < 1.0:
        # CDF series that converges fast for small arguments
        c = np.sqrt(2.0 * np.pi) / lam
        total, k = 0.0, 1
        while True:
            term = np.exp(-((2 * k - 1) ** 2) * np.pi**2 / (8.0 * lam * lam))
            total += term
            if term < tol:
                break
            k += 1
        return float(min(1.0, max(0.0, 1.0 - c * total)))
    total, k = 0.0, 1
    while True:
        term = np.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 else -term
        if term < tol:
            break
        k += 1
    return float(min(1.0, max(0.0, 2.0 * total)))


@dataclass(frozen=True)
class KsReport:
    statistic: float
    p_value: float
    decision: str
    n: int
    significance: float = SIGNIFICANCE

    @property
    def passed(self) -> bool:
        return self.decision == "Pass"


def ks_test(samples, dist: FittedDistribution, significance: float = SIGNIFICANCE) -> KsReport:
    """One-sample K-S test with the asymptotic p-value at ``sqrt(n) * D_n``.

    Parameters estimated from the same samples make the test lenient; this is
    the conventional usage and is not corrected here.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ParameterError("ks_test needs samples")
    d = ks_statistic(x, dist.cdf)
    p = kolmogorov_sf(np.sqrt(x.size) * d)
    return KsReport(d, p, "Pass" if p >= significance else "Rejected", int(x.size), significance)


@dataclass(frozen=True, eq=False)
class FitTable:
    """Families ranked by descending p-value, plus those skipped and why."""

    rows: tuple
    skipped: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __getitem__(self, i):
        return self.rows[i]

    @property
    def best(self) -> tuple[FittedDistribution, KsReport]:
        return self.rows[0]

    def by_family(self, family: str) -> tuple[FittedDistribution, KsReport]:
        for fd, rep in self.rows:
            if fd.family == family:
                return fd, rep
        raise KeyError(family)


def best_fit(samples, families=FAMILIES, significance: float = SIGNIFICANCE) -> FitTable:
    families = list(families)
    if not families:
        raise ParameterError("best_fit needs at least one family")
    rows, skipped, numeric = [], {}, False
    for fam in families:
        try:
            fd = fit_mle(samples, fam)
        except (DomainError, ConvergenceError) as exc:
            skipped[fam] = str(exc)
            numeric = numeric or isinstance(exc, ConvergenceError)
            continue
        rows.append((fd, ks_test(samples, fd, significance)))
    if not rows:
        msg = "no family could be fitted: " + "; ".join(f"{k}: {v}" for k, v in skipped.items())
        raise ConvergenceError(msg) if numeric else DomainError(msg)
    order = {f: i for i, f in enumerate(FAMILIES)}
    rows.sort(key=lambda r: (-r[1].p_value, order[r[0].family]))
    return FitTable(tuple(rows), skipped)
