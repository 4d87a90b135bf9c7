"""Covariate-adjusted two-arm comparison (ANCOVA): power and sample size.

At the design stage the covariates are unknown; the exact power integrates
the conditional noncentral-F power against the F law of the standardized
between-group covariate imbalance.  The sample-size chain corrects the
asymptotic normal-approximation size for the covariate count and for the
nonnormality of the t statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import core, dist
from .core import PowerEstimate, SizeEstimate, TestKernel
from .dist import DEFAULT_SETTINGS, NumericSettings
from .errors import DomainError

__all__ = [
    "AncovaSpec",
    "ImbalanceMixture",
    "ancova_power_exact",
    "ancova_power_approx",
    "ancova_power_asymptotic_t",
    "ancova_size_chain",
    "ancova_kernel",
]


@dataclass(frozen=True)
class AncovaSpec:
    """Two-arm trial analyzed with a linear model in treatment plus q covariates.

    ``sigma_sq`` is the residual variance after covariate adjustment; ``q``
    excludes the intercept and the treatment indicator (q_star = q + 2 model
    parameters in total).
    """

    tau1: float
    tau0: float
    sigma_sq: float
    gamma0: float = 0.5
    q: int = 0

    def __post_init__(self):
        if self.sigma_sq <= 0.0:
            raise DomainError("sigma_sq must be positive")
        if not (0.0 < self.gamma0 < 1.0):
            raise DomainError(f"allocation fraction must lie in (0, 1), got {self.gamma0}")
        if self.q < 0 or self.q != int(self.q):
            raise DomainError(f"covariate count q must be a nonnegative integer, got {self.q}")

    @property
    def gamma1(self) -> float:
        return 1.0 - self.gamma0

    @property
    def q_star(self) -> int:
        return self.q + 2

    @property
    def effect(self) -> float:
        return self.tau1 - self.tau0


@dataclass(frozen=True)
class ImbalanceMixture:
    """F law of the standardized between-group covariate imbalance.

    At the design stage the q-covariate imbalance statistic follows an
    F(q, n - q - 1) distribution (exactly so for normal covariates); the
    exact power integrates the conditional power against it.
    """

    q: int
    f2: float  # n - q - 1

    def __post_init__(self):
        if self.q < 1:
            raise DomainError("the imbalance mixture needs at least one covariate")
        if not self.f2 > 0.0:
            raise DomainError(f"need n > q + 1, got second d.f. {self.f2}")

    def support(self, tail_mass: float) -> tuple[float, float]:
        return (
            dist._f_quantile(tail_mass, self.q, self.f2),
            dist._f_quantile(1.0 - tail_mass, self.q, self.f2),
        )

    def log_density(self, u: np.ndarray) -> np.ndarray:
        return dist._log_f_density(u, self.q, self.f2)

    def variance_factor(self, u: np.ndarray, gamma0: float, n: float) -> np.ndarray:
        """Conditional variance multiplier of the adjusted treatment effect."""
        return (1.0 + self.q * u / self.f2) / (n * gamma0 * (1.0 - gamma0))


def ancova_kernel(s: AncovaSpec) -> TestKernel:
    """Asymptotic-variance kernel: v = sigma^2/(gamma0*gamma1), f = n - q*, rho = 1."""
    v = s.sigma_sq / (s.gamma0 * s.gamma1)
    qs = s.q_star
    return TestKernel(
        tau0=s.tau0,
        tau1=s.tau1,
        v=v,
        rho_at=lambda n: 1.0,
        df_at=lambda n: n - qs,
        min_n=float(s.q + 3),
        allocation=(s.gamma0, s.gamma1),
        label="ancova",
    )


def _check_n(s: AncovaSpec, n: float) -> None:
    if not n > s.q + 3:
        raise DomainError(f"ANCOVA power needs n > q + 3 = {s.q + 3}, got n = {n}")


def ancova_power_exact(
    s: AncovaSpec,
    n: float,
    alpha: float,
    settings: NumericSettings = DEFAULT_SETTINGS,
) -> PowerEstimate:
    """Exact two-sided power, integrating over the covariate-imbalance law.

    Exact when the covariates are normally distributed; in randomized trials
    it remains very accurate for nonnormal covariates.  With q = 0 this is the
    plain two-sample equal-variance power with f = n - 2.
    """
    core._check_alpha_power(alpha)
    _check_n(s, n)
    f = n - s.q_star
    crit_sq = dist.t_quantile(1.0 - alpha / 2.0, f, settings) ** 2
    base_ncp = n * s.gamma0 * s.gamma1 * s.effect**2 / s.sigma_sq
    if s.q == 0:
        value = dist._f_sf(crit_sq, 1.0, f, base_ncp)
        return PowerEstimate(value=value, method="integral_exact", n_used=n)

    mixture = ImbalanceMixture(q=s.q, f2=n - s.q - 1.0)
    lo, hi = mixture.support(settings.outer_tail_mass)

    def fn(w: np.ndarray) -> np.ndarray:
        ups = np.exp(w)
        inflation = 1.0 + s.q * ups / mixture.f2
        tails = dist._f_sf_ncp_grid(crit_sq, 1.0, f, base_ncp / inflation)
        dens = np.exp(mixture.log_density(ups) + w)
        return tails * dens

    value = dist.integrate(fn, math.log(lo), math.log(hi), settings.power_tol, settings)
    return PowerEstimate(value=min(1.0, max(0.0, value)), method="integral_exact", n_used=n)


def ancova_power_approx(
    s: AncovaSpec,
    n: float,
    alpha: float,
    settings: NumericSettings = DEFAULT_SETTINGS,
) -> PowerEstimate:
    """Integration-free power: the imbalance term replaced by its expectation,
    inflating the variance by 1 + q/(n - q - 3)."""
    core._check_alpha_power(alpha)
    _check_n(s, n)
    f = n - s.q_star
    crit_sq = dist.t_quantile(1.0 - alpha / 2.0, f, settings) ** 2
    ncp = n * s.gamma0 * s.gamma1 * s.effect**2 / (
        s.sigma_sq * (1.0 + s.q / (n - s.q - 3.0))
    )
    value = dist._f_sf(crit_sq, 1.0, f, ncp)
    return PowerEstimate(value=value, method="approx", n_used=n)


def ancova_power_asymptotic_t(
    s: AncovaSpec,
    n: float,
    alpha: float,
    settings: NumericSettings = DEFAULT_SETTINGS,
) -> PowerEstimate:
    """t-distribution power with the asymptotic variance (no covariate inflation)."""
    core._check_alpha_power(alpha)
    if not n > s.q_star:
        raise DomainError(f"need n > q* = {s.q_star}, got n = {n}")
    f = n - s.q_star
    crit_sq = dist.t_quantile(1.0 - alpha / 2.0, f, settings) ** 2
    ncp = n * s.gamma0 * s.gamma1 * s.effect**2 / s.sigma_sq
    value = dist._f_sf(crit_sq, 1.0, f, ncp)
    return PowerEstimate(value=value, method="approx", n_used=n)


def ancova_size_chain(
    s: AncovaSpec,
    alpha: float,
    power: float,
    rounding: str = "up",
    settings: NumericSettings = DEFAULT_SETTINGS,
) -> dict[str, SizeEstimate]:
    """All deterministic sample-size estimates for the ANCOVA design.

    Returns fractional sizes keyed by method:

    n_asy      normal approximation with the asymptotic variance
    quadratic  explicit root of the self-consistent covariate-corrected size
    approx     one-step evaluation of that correction (used by the chain)
    g1, g2     noniterative corrected sizes (rho = 1)
    two_step   t-quantile recomputation with the covariate correction
    inversion  numerical inversion of the exact power
    """
    core._check_alpha_power(alpha, power)
    if s.effect == 0.0:
        raise DomainError("tau1 must differ from tau0 for sample-size formulas")
    k = ancova_kernel(s)
    q = s.q

    zsum = dist.normal_quantile(1.0 - alpha / 2.0) + dist.normal_quantile(power)
    n_asy = zsum**2 * s.sigma_sq / (s.gamma0 * s.gamma1 * s.effect**2)

    disc = (n_asy + q + 3.0) ** 2 - 12.0 * n_asy
    assert disc > 0.0, "quadratic-size discriminant must be positive"
    n_quad = 0.5 * ((n_asy + q + 3.0) + math.sqrt(disc))

    if n_asy <= 2.0:
        raise DomainError(
            f"normal-approximation size {n_asy:.3f} too small for the covariate correction"
        )
    n_tilde = n_asy * (1.0 + q / (n_asy - 2.0))

    g1 = core.g1_total(n_tilde, 1.0, alpha)
    g2 = core.g2_total(n_tilde, 1.0, alpha)

    f_l = n_tilde - s.q_star
    if not f_l > 0.0:
        raise DomainError(f"two-step d.f. non-positive at first-pass size {n_tilde:.3f}")
    tsum = dist.t_quantile(1.0 - alpha / 2.0, f_l, settings) + dist.t_quantile(
        power, f_l, settings
    )
    n_u_asy = tsum**2 * s.sigma_sq / (s.gamma0 * s.gamma1 * s.effect**2)
    if n_u_asy <= 2.0:
        raise DomainError(
            f"two-step base size {n_u_asy:.3f} too small for the covariate correction"
        )
    n_ts = n_u_asy * (1.0 + q / (n_u_asy - 2.0))

    inversion = core.size_invert(
        lambda n: ancova_power_exact(s, n, alpha, settings).value,
        power,
        bracket_hint=g2,
        min_n=k.min_n,
        allocation=k.allocation,
        alpha=alpha,
        rounding=rounding,
        settings=settings,
    )

    def est(frac: float, method: str) -> SizeEstimate:
        return core._as_estimate(k, frac, method, alpha, power, rounding)

    return {
        "n_asy": est(n_asy, "normal"),
        "quadratic": est(n_quad, "normal"),
        "approx": est(n_tilde, "normal"),
        "g1": est(g1, "g1"),
        "g2": est(g2, "g2"),
        "two_step": est(n_ts, "two_step"),
        "inversion": inversion,
    }
