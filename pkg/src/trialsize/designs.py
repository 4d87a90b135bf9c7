"""Lowering of the classical designs to test kernels.

Covers the one-sample t test, the two-sample t tests with equal and unequal
variances (Welch/Satterthwaite), and the 2x2 crossover with or without a
period effect in the analysis.  Also provides the exact unequal-variance
power, which conditions on the observed variance ratio and integrates it out
against its F law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import dist
from .core import PowerEstimate, TestKernel
from .dist import DEFAULT_SETTINGS, NumericSettings
from .errors import DomainError

__all__ = [
    "OneSampleSpec",
    "TwoSampleSpec",
    "CrossoverSpec",
    "one_sample_kernel",
    "two_sample_equal_kernel",
    "two_sample_unequal_kernel",
    "crossover_kernel",
    "moser_exact_power",
    "satterthwaite_df",
]


@dataclass(frozen=True)
class OneSampleSpec:
    """Single-group design: test the mean against a fixed null value."""

    mu: float
    tau0: float
    sigma_sq: float

    def __post_init__(self):
        if self.sigma_sq <= 0.0:
            raise DomainError("sigma_sq must be positive")


@dataclass(frozen=True)
class TwoSampleSpec:
    """Two-group parallel design on the mean difference."""

    mu0: float
    mu1: float
    sigma0_sq: float
    sigma1_sq: float
    gamma0: float = 0.5
    equal_variance: bool = False

    def __post_init__(self):
        if self.sigma0_sq <= 0.0 or self.sigma1_sq <= 0.0:
            raise DomainError("group variances must be positive")
        if not (0.0 < self.gamma0 < 1.0):
            raise DomainError(f"allocation fraction must lie in (0, 1), got {self.gamma0}")

    @property
    def gamma1(self) -> float:
        return 1.0 - self.gamma0


@dataclass(frozen=True)
class CrossoverSpec:
    """2x2 crossover on log scale; sigma_d_sq is var of the within-subject difference."""

    mu_star_a: float
    mu_star_b: float
    sigma_d_sq: float
    gamma0: float = 0.5
    period_effect_in_analysis: bool = True

    def __post_init__(self):
        if self.sigma_d_sq <= 0.0:
            raise DomainError("sigma_d_sq must be positive")
        if not (0.0 < self.gamma0 < 1.0):
            raise DomainError(f"allocation fraction must lie in (0, 1), got {self.gamma0}")

    @property
    def gamma1(self) -> float:
        return 1.0 - self.gamma0


def one_sample_kernel(mu: float, tau0: float, sigma_sq: float) -> TestKernel:
    """One-sample t test: v = sigma^2, f = n - 1, rho = 1."""
    if sigma_sq <= 0.0:
        raise DomainError("sigma_sq must be positive")
    return TestKernel(
        tau0=tau0,
        tau1=mu,
        v=sigma_sq,
        rho_at=lambda n: 1.0,
        df_at=lambda n: n - 1.0,
        min_n=2.0,
        allocation=(1.0,),
        label="one_sample",
    )


def two_sample_equal_kernel(s: TwoSampleSpec, tau0: float) -> TestKernel:
    """Pooled t test: v = sigma^2/(gamma0*gamma1), f = n - 2, rho = 1."""
    if not s.equal_variance:
        raise DomainError("two_sample_equal_kernel requires equal_variance to be set")
    if s.sigma0_sq != s.sigma1_sq:
        raise DomainError("equal-variance kernel requires sigma0_sq == sigma1_sq")
    v = s.sigma0_sq / (s.gamma0 * s.gamma1)
    return TestKernel(
        tau0=tau0,
        tau1=s.mu1 - s.mu0,
        v=v,
        rho_at=lambda n: 1.0,
        df_at=lambda n: n - 2.0,
        min_n=3.0,
        allocation=(s.gamma0, s.gamma1),
        label="two_sample_equal",
    )


def satterthwaite_df(v0: float, v1: float, n0: float, n1: float) -> float:
    """Satterthwaite approximate d.f. for v0/n0 + v1/n1; group sizes may be fractional."""
    if min(n0, n1) <= 1.0:
        raise DomainError("Satterthwaite d.f. needs more than one subject per group")
    a0 = v0 / n0
    a1 = v1 / n1
    return (a0 + a1) ** 2 / (a0 * a0 / (n0 - 1.0) + a1 * a1 / (n1 - 1.0))


def two_sample_unequal_kernel(s: TwoSampleSpec, tau0: float) -> TestKernel:
    """Welch t test: v = sigma0^2/gamma0 + sigma1^2/gamma1, Satterthwaite f(n)."""
    v = s.sigma0_sq / s.gamma0 + s.sigma1_sq / s.gamma1
    rho = v * v / (
        s.sigma0_sq**2 / s.gamma0**3 + s.sigma1_sq**2 / s.gamma1**3
    )
    g0, g1 = s.gamma0, s.gamma1
    sig0, sig1 = s.sigma0_sq, s.sigma1_sq
    return TestKernel(
        tau0=tau0,
        tau1=s.mu1 - s.mu0,
        v=v,
        rho_at=lambda n: rho,
        df_at=lambda n: satterthwaite_df(sig0, sig1, g0 * n, g1 * n),
        min_n=1.0 / min(g0, g1),
        allocation=(g0, g1),
        label="two_sample_unequal",
    )


def crossover_kernel(s: CrossoverSpec) -> TestKernel:
    """Crossover lowering: one-sample form without a period effect in the
    analysis (v = sigma_d^2, f = n-1), two-sample form with one
    (v = sigma_d^2/(4*gamma0*gamma1), f = n-2)."""
    effect = s.mu_star_b - s.mu_star_a
    if s.period_effect_in_analysis:
        v = s.sigma_d_sq / (4.0 * s.gamma0 * s.gamma1)
        return TestKernel(
            tau0=0.0,
            tau1=effect,
            v=v,
            rho_at=lambda n: 1.0,
            df_at=lambda n: n - 2.0,
            min_n=3.0,
            allocation=(s.gamma0, s.gamma1),
            label="crossover_period",
        )
    return TestKernel(
        tau0=0.0,
        tau1=effect,
        v=s.sigma_d_sq,
        rho_at=lambda n: 1.0,
        df_at=lambda n: n - 1.0,
        min_n=2.0,
        allocation=(s.gamma0, s.gamma1),
        label="crossover_no_period",
    )


def _welch_given_ratio(u: np.ndarray, sig0: float, sig1: float, n0: float, n1: float):
    """Per-ratio variance scale, d.f. and scaled critical multiplier inputs.

    ``u`` is the variance-ratio statistic s1^2*sigma0^2 / (s0^2*sigma1^2),
    distributed F(n1-1, n0-1) and independent of the pooled chi-square scale.
    """
    a1 = u * sig1 / n1
    a0 = sig0 / n0
    v_u = (n0 + n1 - 2.0) / ((n1 - 1.0) * u + (n0 - 1.0)) * (a1 + a0)
    f_u = (a1 + a0) ** 2 / (a1 * a1 / (n1 - 1.0) + a0 * a0 / (n0 - 1.0))
    return v_u, f_u


def moser_exact_power(
    s: TwoSampleSpec,
    tau0: float,
    n: float,
    alpha: float,
    settings: NumericSettings = DEFAULT_SETTINGS,
) -> PowerEstimate:
    """Exact power of the Welch test, integrating over the variance ratio.

    One-tailed toward the alternative (the opposite tail is negligible at any
    practically relevant power).  Group sizes gamma_g * n may be fractional.
    """
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    n0 = s.gamma0 * n
    n1 = s.gamma1 * n
    if min(n0, n1) <= 1.0:
        raise DomainError("moser_exact_power needs more than one subject per group")
    base = s.sigma1_sq / n1 + s.sigma0_sq / n0
    lam = abs(s.mu1 - s.mu0 - tau0) / math.sqrt(base)
    fxi = n - 2.0
    lo = dist._f_quantile(settings.outer_tail_mass, n1 - 1.0, n0 - 1.0)
    hi = dist._f_quantile(1.0 - settings.outer_tail_mass, n1 - 1.0, n0 - 1.0)

    def fn(w: np.ndarray) -> np.ndarray:
        u = np.exp(w)
        v_u, f_u = _welch_given_ratio(u, s.sigma0_sq, s.sigma1_sq, n0, n1)
        crit = special.stdtrit(f_u, 1.0 - alpha / 2.0)
        h = crit * np.sqrt(v_u / base)
        tails = dist._nct_upper_tail_grid(h, fxi, lam, settings.nct_tol, settings.tail_mass)
        dens = np.exp(dist._log_f_density(u, n1 - 1.0, n0 - 1.0) + w)
        return tails * dens

    value = dist.integrate(fn, math.log(lo), math.log(hi), settings.power_tol, settings)
    return PowerEstimate(value=min(1.0, max(0.0, value)), method="integral_exact", n_used=n)
