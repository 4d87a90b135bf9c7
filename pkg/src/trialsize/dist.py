"""Distribution kernel: normal, central/noncentral t and F, scaled chi-square,
adaptive quadrature and bracketed root finding.

Everything downstream (power formulas, sample-size inversion, equivalence
integrals) is built on the routines in this module.  The noncentral t CDF is
computed from its defining mixture representation

    Pr[t(f, lam) <= x] = E_xi[ Phi(x*sqrt(xi) - lam) ],   xi ~ chi2_f / f,

by adaptive quadrature over the weight density, truncated where the tail mass
of xi drops below ``NumericSettings.tail_mass``.  This single quadrature engine
handles fractional degrees of freedom and large noncentrality uniformly.

Integrands passed to :func:`integrate` are evaluated on numpy arrays of
abscissae and may return either a vector (one value per point) or a matrix
(one row per point) when several integrals share the same weight function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import BracketError, ConvergenceError, DomainError

__all__ = [
    "NumericSettings",
    "DEFAULT_SETTINGS",
    "normal_cdf",
    "normal_quantile",
    "t_cdf",
    "t_quantile",
    "f_cdf",
    "scaled_chi2_density",
    "f_density",
    "integrate",
    "find_root",
]


@dataclass(frozen=True)
class NumericSettings:
    """All numeric tolerances used by the package, in one record.

    tail_mass        truncation mass for chi-square weight densities
    outer_tail_mass  truncation mass for F-law outer integrals
    nct_tol          absolute tolerance of the noncentral t CDF quadrature
    power_tol        tolerance of single-integral power formulas
    double_tol       total budget for nested double integrals
    root_tol         bracket width at which find_root stops
    size_tol         resolution (in n) of sample-size inversion
    """

    tail_mass: float = 1e-12
    outer_tail_mass: float = 1e-10
    nct_tol: float = 1e-10
    power_tol: float = 1e-8
    double_tol: float = 1e-7
    root_tol: float = 1e-9
    size_tol: float = 1e-6
    max_root_iter: int = 200
    max_quad_levels: int = 48
    max_quad_intervals: int = 65536


DEFAULT_SETTINGS = NumericSettings()

# Beyond this many standard deviations the normal CDF is 0/1 to < 1e-16.
_PHI_SATURATION = 9.0


def _check_df(f: float, name: str = "df") -> float:
    f = float(f)
    if not math.isfinite(f) or f <= 0.0:
        raise DomainError(f"{name} must be a positive finite real, got {f!r}")
    return f


def _check_prob_open(p: float, name: str = "p") -> float:
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"{name} must lie strictly in (0, 1), got {p!r}")
    return p


def normal_cdf(x: float) -> float:
    """Standard normal CDF Phi(x); saturates to 0/1 for extreme arguments."""
    x = float(x)
    if math.isnan(x):
        raise DomainError("normal_cdf: x must not be NaN")
    return float(special.ndtr(x))


def normal_quantile(p: float) -> float:
    """Standard normal quantile z_p for p in (0, 1)."""
    p = _check_prob_open(p)
    return float(special.ndtri(p))


def scaled_chi2_density(xi: float, f: float) -> float:
    """Density of xi = chi2_f / f at ``xi``; zero for xi <= 0."""
    f = _check_df(f)
    xi = float(xi)
    if xi <= 0.0:
        return 0.0
    return float(np.exp(_log_scaled_chi2_density(np.asarray(xi), f)))


def _log_scaled_chi2_density(xi: np.ndarray, f: float) -> np.ndarray:
    h = 0.5 * f
    return h * math.log(h) - special.gammaln(h) + (h - 1.0) * np.log(xi) - h * xi


def f_density(u: float, f1: float, f2: float) -> float:
    """Central F(f1, f2) density at ``u``; zero for u <= 0."""
    f1 = _check_df(f1, "f1")
    f2 = _check_df(f2, "f2")
    u = float(u)
    if u <= 0.0:
        return 0.0
    return float(np.exp(_log_f_density(np.asarray(u), f1, f2)))


def _log_f_density(u: np.ndarray, f1: float, f2: float) -> np.ndarray:
    a, b = 0.5 * f1, 0.5 * f2
    lognorm = special.gammaln(a + b) - special.gammaln(a) - special.gammaln(b)
    return (
        lognorm
        + a * math.log(f1 / f2)
        + (a - 1.0) * np.log(u)
        - (a + b) * np.log1p(f1 * u / f2)
    )


def _chi2_over_f_quantile(p: float, f: float) -> float:
    """Quantile of chi2_f / f."""
    return float(2.0 * special.gammaincinv(0.5 * f, p) / f)


def _f_quantile(p: float, f1: float, f2: float) -> float:
    """Quantile of the central F(f1, f2) law."""
    w = float(special.betaincinv(0.5 * f1, 0.5 * f2, p))
    w = min(w, 1.0 - 1e-16)
    return f2 * w / (f1 * (1.0 - w))


def integrate(
    fn: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    tol: float,
    settings: NumericSettings = DEFAULT_SETTINGS,
):
    """Adaptive Simpson quadrature of ``fn`` over the finite interval [lo, hi].

    ``fn`` receives a numpy array of abscissae and must return a vector of
    values, or a matrix with one row per abscissa to evaluate several
    integrands that share the interval.  The absolute error is at most ``tol``
    on smooth integrands (the per-interval budget is split proportionally to
    interval width).  Raises :class:`ConvergenceError` with the best estimate
    attached if the refinement cap is hit.
    """
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DomainError(f"integrate: need finite lo < hi, got [{lo}, {hi}]")
    if tol <= 0.0:
        raise DomainError("integrate: tol must be positive")
    total_width = hi - lo

    # Seed with several panels so a ridge between coarse probe points cannot
    # fool the first convergence estimate.
    edges = np.linspace(lo, hi, 9)
    a = edges[:-1]
    b = edges[1:]
    mid = 0.5 * (a + b)
    first = np.asarray(fn(np.concatenate([a, mid, b[-1:]])), dtype=float)
    scalar = first.ndim == 1
    if scalar:
        first = first[:, None]
    ncols = first.shape[1]

    def evaluate(x: np.ndarray) -> np.ndarray:
        y = np.asarray(fn(x), dtype=float)
        return y[:, None] if scalar else y

    k = a.size
    fa = first[:k]
    fm = first[k : 2 * k]
    fb = np.vstack([first[1:k], first[2 * k :]])
    s_est = (b - a)[:, None] / 6.0 * (fa + 4.0 * fm + fb)
    total = np.zeros(ncols)

    for _ in range(settings.max_quad_levels):
        lm = 0.5 * (a + mid)
        rm = 0.5 * (mid + b)
        fboth = evaluate(np.concatenate([lm, rm]))
        flm, frm = fboth[: a.size], fboth[a.size :]
        h12 = (b - a)[:, None] / 12.0
        s_left = h12 * (fa + 4.0 * flm + fm)
        s_right = h12 * (fm + 4.0 * frm + fb)
        s_two = s_left + s_right
        err = np.abs(s_two - s_est) / 15.0
        budget = tol * (b - a) / total_width
        with np.errstate(invalid="ignore"):
            done = np.nanmax(err, axis=1) <= budget
        if done.any():
            refined = s_two[done] + (s_two[done] - s_est[done]) / 15.0
            total += refined.sum(axis=0)
        keep = ~done
        if not keep.any():
            return float(total[0]) if scalar else total
        a, b_old, m_old = a[keep], b[keep], mid[keep]
        a = np.concatenate([a, m_old])
        b = np.concatenate([m_old, b_old])
        mid = np.concatenate([lm[keep], rm[keep]])
        fa = np.vstack([fa[keep], fm[keep]])
        fb = np.vstack([fm[keep], fb[keep]])
        fm = np.vstack([flm[keep], frm[keep]])
        s_est = np.vstack([s_left[keep], s_right[keep]])
        if a.size > settings.max_quad_intervals:
            break

    best = total + s_est.sum(axis=0)
    raise ConvergenceError(
        f"integrate: refinement cap reached with {a.size} active intervals",
        best_estimate=float(best[0]) if scalar else best,
    )


def find_root(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
    settings: NumericSettings = DEFAULT_SETTINGS,
) -> float:
    """Root of ``fn`` on [lo, hi] by bisection with secant acceleration.

    Requires a sign change over the bracket.  Alternating bisection steps
    guarantee the bracket halves at least every other iteration, so the
    iteration cap (default 200) is never binding for continuous functions.
    Fully deterministic.
    """
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise DomainError(f"find_root: need lo < hi, got [{lo}, {hi}]")
    fa, fb = float(fn(lo)), float(fn(hi))
    if fa == 0.0:
        return lo
    if fb == 0.0:
        return hi
    if fa * fb > 0.0:
        raise BracketError(
            f"find_root: no sign change on [{lo}, {hi}] (f(lo)={fa:.6g}, f(hi)={fb:.6g})"
        )
    a, b = lo, hi
    for it in range(settings.max_root_iter):
        width = b - a
        if width <= tol:
            return 0.5 * (a + b)
        x = math.nan
        if it % 2 == 0 and fb != fa:
            x = b - fb * (b - a) / (fb - fa)
        if not (a + 1e-3 * width <= x <= b - 1e-3 * width):
            x = a + 0.5 * width
        fx = float(fn(x))
        if fx == 0.0:
            return x
        if fa * fx < 0.0:
            b, fb = x, fx
        else:
            a, fa = x, fx
    raise ConvergenceError(
        f"find_root: no convergence to width {tol} in {settings.max_root_iter} iterations",
        best_estimate=0.5 * (a + b),
    )


def _nct_mixture(
    x: float, f: float, lam: float, tol: float, tail_mass: float
) -> float:
    """Noncentral t CDF from the chi-square mixture, by log-domain quadrature."""
    lo = _chi2_over_f_quantile(tail_mass, f)
    hi = _chi2_over_f_quantile(1.0 - tail_mass, f)
    # The argument x*sqrt(xi) - lam is monotone in xi; skip the quadrature when
    # Phi saturates over the whole truncated window.
    args = (x * math.sqrt(lo) - lam, x * math.sqrt(hi) - lam)
    if min(args) > _PHI_SATURATION:
        return 1.0
    if max(args) < -_PHI_SATURATION:
        return 0.0

    def fn(v: np.ndarray) -> np.ndarray:
        xi = np.exp(v)
        weight = np.exp(_log_scaled_chi2_density(xi, f) + v)
        return special.ndtr(x * np.sqrt(xi) - lam) * weight

    val = integrate(fn, math.log(lo), math.log(hi), tol)
    return min(1.0, max(0.0, val))


def t_cdf(
    x: float,
    f: float,
    lam: float = 0.0,
    settings: NumericSettings = DEFAULT_SETTINGS,
) -> float:
    """CDF of the t distribution with ``f`` d.f. and noncentrality ``lam``.

    ``f`` may be fractional.  ``lam == 0`` falls back to the central CDF;
    non-finite ``x`` is handled as the corresponding limit.
    """
    f = _check_df(f)
    lam = float(lam)
    if not math.isfinite(lam):
        raise DomainError("t_cdf: noncentrality must be finite")
    x = float(x)
    if math.isnan(x):
        raise DomainError("t_cdf: x must not be NaN")
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    if lam == 0.0:
        return float(special.stdtr(f, x))
    return _nct_mixture(x, f, lam, settings.nct_tol, settings.tail_mass)


_GL_NODES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    if m not in _GL_NODES:
        _GL_NODES[m] = np.polynomial.legendre.leggauss(m)
    return _GL_NODES[m]


def _chi2_mixture_grid(
    kernel: Callable[[np.ndarray], np.ndarray],
    f: float,
    tol: float,
    tail_mass: float,
) -> np.ndarray:
    """E_xi[kernel(xi)] over xi ~ chi2_f/f for a vector-valued kernel.

    ``kernel`` maps a vector of xi values to a (len(xi), m) matrix.  The
    expectation is taken by Gauss-Legendre quadrature in log(xi) over the
    truncated window, doubling the node count until the estimate moves by
    less than ``tol``.
    """
    lo = math.log(_chi2_over_f_quantile(tail_mass, f))
    hi = math.log(_chi2_over_f_quantile(1.0 - tail_mass, f))
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    prev = None
    for m in (64, 128, 256, 512, 1024, 2048):
        x, w = _gauss_legendre(m)
        v = half * x + mid
        xi = np.exp(v)
        weight = np.exp(_log_scaled_chi2_density(xi, f) + v) * (w * half)
        vals = weight @ kernel(xi)
        if prev is not None and np.max(np.abs(vals - prev)) <= tol:
            return vals
        prev = vals
    raise ConvergenceError(
        "chi-square mixture quadrature did not converge", best_estimate=prev
    )


def _nct_upper_tail_grid(
    thresholds: np.ndarray,
    f: float,
    lam: float,
    tol: float,
    tail_mass: float,
) -> np.ndarray:
    """Pr[t(f, lam) > c_i] for an array of thresholds, one shared quadrature.

    Uses Pr[t > c] = E_xi[Phi(lam - c*sqrt(xi))] over xi ~ chi2_f/f.
    """
    c = np.atleast_1d(np.asarray(thresholds, dtype=float))
    vals = _chi2_mixture_grid(
        lambda xi: special.ndtr(lam - np.sqrt(xi)[:, None] * c[None, :]),
        f,
        tol,
        tail_mass,
    )
    return np.clip(vals, 0.0, 1.0)


def _nct_cdf_ncp_grid(
    threshold: float,
    f: float,
    lams: np.ndarray,
    tol: float,
    tail_mass: float,
) -> np.ndarray:
    """Pr[t(f, lam_i) <= c] for an array of noncentralities, shared quadrature."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    vals = _chi2_mixture_grid(
        lambda xi: special.ndtr(threshold * np.sqrt(xi)[:, None] - lams[None, :]),
        f,
        tol,
        tail_mass,
    )
    return np.clip(vals, 0.0, 1.0)


def t_quantile(
    p: float, f: float, settings: NumericSettings = DEFAULT_SETTINGS
) -> float:
    """Quantile of the central t(f) distribution; fractional ``f`` supported."""
    p = _check_prob_open(p)
    f = _check_df(f)
    return float(special.stdtrit(f, p))


def _poisson_weights(half_lam: float) -> np.ndarray:
    """Poisson(half_lam) pmf on 0..K with K chosen so the tail mass < 1e-15."""
    k_max = int(half_lam + 10.0 * math.sqrt(half_lam + 1.0) + 30.0)
    k = np.arange(k_max + 1)
    with np.errstate(divide="ignore"):
        logw = -half_lam + k * np.log(half_lam) - special.gammaln(k + 1.0)
    logw[0] = -half_lam
    return np.exp(logw)


def f_cdf(
    x: float,
    f1: float,
    f2: float,
    lam: float = 0.0,
    settings: NumericSettings = DEFAULT_SETTINGS,
) -> float:
    """CDF of the F distribution with (f1, f2) d.f. and noncentrality lam >= 0.

    Central case via the regularized incomplete beta function; noncentral case
    via the Poisson-weighted beta series.  Returns 0 for x <= 0.
    """
    f1 = _check_df(f1, "f1")
    f2 = _check_df(f2, "f2")
    lam = float(lam)
    if not math.isfinite(lam) or lam < 0.0:
        raise DomainError("f_cdf: noncentrality must be finite and >= 0")
    x = float(x)
    if math.isnan(x):
        raise DomainError("f_cdf: x must not be NaN")
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    xb = f1 * x / (f1 * x + f2)
    if lam == 0.0:
        return float(special.betainc(0.5 * f1, 0.5 * f2, xb))
    w = _poisson_weights(0.5 * lam)
    k = np.arange(w.size)
    terms = special.betainc(0.5 * f1 + k, 0.5 * f2, xb)
    return float(min(1.0, np.dot(w, terms) + (1.0 - w.sum())))


def _f_sf_ncp_grid(x: float, f1: float, f2: float, lams: np.ndarray) -> np.ndarray:
    """Pr[F(f1, f2, lam_i) > x] for an array of noncentralities, shared series."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if x <= 0.0:
        return np.ones_like(lams)
    half = 0.5 * lams
    k_max = int(half.max() + 10.0 * math.sqrt(half.max() + 1.0) + 30.0)
    k = np.arange(k_max + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = -half[:, None] + k[None, :] * np.log(half[:, None]) - special.gammaln(k + 1.0)
    logw[:, 0] = -half
    w = np.exp(logw)
    terms = special.betainc(0.5 * f2, 0.5 * f1 + k, f2 / (f1 * x + f2))
    return np.minimum(1.0, w @ terms + (1.0 - w.sum(axis=1)))


def _f_sf(x: float, f1: float, f2: float, lam: float = 0.0) -> float:
    """Upper tail Pr[F(f1, f2, lam) > x], accurate when the tail is small."""
    if x <= 0.0:
        return 1.0
    xb_c = f2 / (f1 * x + f2)
    if lam == 0.0:
        return float(special.betainc(0.5 * f2, 0.5 * f1, xb_c))
    w = _poisson_weights(0.5 * lam)
    k = np.arange(w.size)
    terms = special.betainc(0.5 * f2, 0.5 * f1 + k, xb_c)
    return float(min(1.0, np.dot(w, terms) + (1.0 - w.sum())))
