"""trialsize: power and sample size for t-based trial designs.

Analytic power and sample-size methods for the one-sample and two-sample
t tests, crossover designs, covariate-adjusted comparisons, and repeated-
measures mixed models, across superiority, noninferiority, equivalence and
bioequivalence objectives, plus a seeded Monte Carlo simulator that verifies
every analytic formula empirically.
"""

from .ancova import AncovaSpec, ancova_power_approx, ancova_power_exact, ancova_size_chain
from .core import (
    PowerEstimate,
    SizeEstimate,
    TestKernel,
    apply_ni_margin,
    power_one_sided_approx,
    power_two_sided,
    size_g1,
    size_g2,
    size_invert,
    size_normal,
    size_two_step,
)
from .designs import (
    CrossoverSpec,
    TwoSampleSpec,
    crossover_kernel,
    moser_exact_power,
    one_sample_kernel,
    satterthwaite_df,
    two_sample_equal_kernel,
    two_sample_unequal_kernel,
)
from .dist import DEFAULT_SETTINGS, NumericSettings
from .equivalence import (
    BE_LIMITS,
    BeLimits,
    Margins,
    be_adapter,
    equiv_power_approx,
    equiv_power_exact,
    equiv_size_bounds,
    equiv_size_symmetric,
    ts_unequal_equiv_power,
)
from .mmrm import (
    LdlFactors,
    MmrmDesign,
    ar1,
    compound_symmetry,
    ldl_decompose,
    mmrm_equiv_power,
    mmrm_power,
    mmrm_power_approx,
    mmrm_size_chain,
    toeplitz,
)
from .simulate import FactorSpec, ScenarioSpec, SimReport, analyze_ancova, analyze_mmrm, simulate_power

__version__ = "0.1.0"

__all__ = [
    "AncovaSpec",
    "BE_LIMITS",
    "BeLimits",
    "CrossoverSpec",
    "DEFAULT_SETTINGS",
    "FactorSpec",
    "LdlFactors",
    "Margins",
    "MmrmDesign",
    "NumericSettings",
    "PowerEstimate",
    "ScenarioSpec",
    "SimReport",
    "SizeEstimate",
    "TestKernel",
    "TwoSampleSpec",
    "analyze_ancova",
    "analyze_mmrm",
    "ancova_power_approx",
    "ancova_power_exact",
    "ancova_size_chain",
    "apply_ni_margin",
    "ar1",
    "be_adapter",
    "compound_symmetry",
    "crossover_kernel",
    "equiv_power_approx",
    "equiv_power_exact",
    "equiv_size_bounds",
    "equiv_size_symmetric",
    "ldl_decompose",
    "mmrm_equiv_power",
    "mmrm_power",
    "mmrm_power_approx",
    "mmrm_size_chain",
    "moser_exact_power",
    "one_sample_kernel",
    "power_one_sided_approx",
    "power_two_sided",
    "satterthwaite_df",
    "simulate_power",
    "size_g1",
    "size_g2",
    "size_invert",
    "size_normal",
    "size_two_step",
    "toeplitz",
    "ts_unequal_equiv_power",
    "two_sample_equal_kernel",
    "two_sample_unequal_kernel",
]
