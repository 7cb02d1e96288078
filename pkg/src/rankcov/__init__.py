"""Rank tests of linear hypotheses in corrupted linear models.

ANOVA-type and covariance-adjusted (ANOCOVA) rank criteria, exact and Monte
Carlo permutation inference, asymptotic-efficiency calculators, and a
reproducible Monte Carlo power-study harness.
"""

from .ancova import (
    AncovaWork,
    GammaLimit,
    ancova_rank_test,
    ancova_workspace,
    covariate_criterion,
    covariate_rank_stats,
    gamma_limit_estimate,
    joint_criterion,
    rank_score_cov,
    schur_complement,
)
from .anova import (
    TestMethod,
    TestResult,
    anova_rank_test,
    anova_rank_test_contaminated,
    linear_rank_statistic,
)
from .design import Design, build_design, quad_form_inverse
from .distributions import (
    ChiSquareRef,
    ErrorLaw,
    cauchy,
    chisq_sf,
    convolve_densities,
    laplace,
    logistic,
    noncentral_chisq_cdf,
    normal,
    parse_law,
    sample,
    uniform,
)
from .efficiency import (
    EfficiencyReport,
    are_ancova,
    are_latent,
    fisher_information,
    gamma_phi,
    gamma_phi_stieltjes,
    noncentrality,
)
from .errors import (
    DataError,
    DegenerateCovariateError,
    DegenerateDesignError,
    DegenerateScoreError,
    DimensionError,
    ExactEnumerationError,
    InsufficientDataError,
    InvalidScoreError,
    NumericError,
    ParseError,
    RankCovError,
    SchemaError,
    SingularDesignError,
    TieError,
)
from .permute import (
    PermutationPlan,
    exact_null_distribution,
    permutation_pvalue,
)
from .ranking import (
    RankCollection,
    RankVector,
    TiePolicy,
    rank_collection,
    ranks,
)
from .scores import (
    ScoreFunction,
    ScoreKind,
    ScoreMode,
    ScoreVector,
    custom,
    from_name,
    from_table,
    score_norm_sq,
    scores_approximate,
    scores_exact,
    sign_scores,
    van_der_waerden,
    wilcoxon,
)
from .simlab import (
    Model,
    PowerCurve,
    ScenarioConfig,
    fixed_design,
    generate_dataset,
    run_power_study,
)

__version__ = "0.1.0"
