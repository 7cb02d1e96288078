"""Monte Carlo power-study engine.

Reproduces the simulation protocol behind the package: a fixed uniform design
x on (-2, 10), a stochastic covariate z on (-10, 30), and responses

    y_i = beta0 + x_i beta1 + nu(w_i) + e_i,     w_i = z_i + eta_i,

with nu one of gamma*w (linear), delta*w^2 (quadratic), or sin(w); errors e
and measurement errors eta drawn from configurable laws. For every beta1 on
the grid, both criteria are run against the asymptotic chi-square critical
value at level alpha and rejection rates recorded.

By default z is redrawn i.i.d. each replication: the tests' null calibration
rests on the (Y_i, W_i) tuples being i.i.d. under the hypothesis, which fails
if the same z values are reused while nu(z) has nontrivial spread. Freezing z
alongside x (``resample_covariate=False``) is kept as an option for studying
that misuse case.

Every (beta1, replication) cell draws from its own counter-based stream keyed
by (seed, beta1 index, replication index), so runs are bit-reproducible and
embarrassingly parallel in principle. Within a cell, z, e and eta come from
per-variable child streams: a run at a smaller n consumes exact prefixes of a
larger-n run's draws, which couples power estimates across sample sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.stats

from ._rng import substream
from .ancova import ancova_rank_test
from .anova import anova_rank_test
from .design import build_design
from .distributions import ErrorLaw, parse_law
from .errors import DataError, NumericError, SchemaError
from .permute import PermutationPlan
from .ranking import TiePolicy
from .scores import ScoreFunction, ScoreMode, from_name


class Model(str, Enum):
    LINEAR = "linear"        # nu(w) = gamma * w
    QUADRATIC = "quadratic"  # nu(w) = delta * w^2
    SINE = "sine"            # nu(w) = sin(w)


@dataclass(frozen=True)
class ScenarioConfig:
    model: Model
    n: int
    beta0: float = 1.0
    beta1_grid: tuple[float, ...] = (-0.5, -0.4, -0.3, -0.2, -0.1, 0.0,
                                     0.1, 0.2, 0.3, 0.4, 0.5)
    gamma: float = 3.0
    delta: float = -2.0
    error_law: ErrorLaw = None  # type: ignore[assignment]
    noise_law: Optional[ErrorLaw] = None
    replications: int = 10_000
    alpha: float = 0.05
    score_kind: str = "wilcoxon"
    score_mode: ScoreMode = ScoreMode.APPROXIMATE
    seed: int = 0
    design_seed: int = 0
    permutation_b: Optional[int] = None  # calibrate by MC permutation instead
    resample_covariate: bool = True      # redraw z each replication (i.i.d.)

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0,1)")
        if self.n < 4:
            raise ValueError("need n >= 4")
        if self.error_law is None:
            raise ValueError("error_law is required")

    def score_function(self) -> ScoreFunction:
        return from_name(self.score_kind)

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "n": self.n,
            "beta0": self.beta0,
            "beta1_grid": list(self.beta1_grid),
            "gamma": self.gamma,
            "delta": self.delta,
            "error_law": self.error_law.spec(),
            "noise_law": self.noise_law.spec() if self.noise_law else "none",
            "replications": self.replications,
            "alpha": self.alpha,
            "scores": self.score_kind,
            "score_mode": self.score_mode.value,
            "seed": self.seed,
            "design_seed": self.design_seed,
            "permutation_b": self.permutation_b,
            "resample_covariate": self.resample_covariate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {
            "model", "n", "beta0", "beta1_grid", "gamma", "delta", "error_law",
            "noise_law", "replications", "alpha", "scores", "score_mode",
            "seed", "design_seed", "permutation_b", "resample_covariate",
        }
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown scenario keys: {sorted(unknown)}")
        try:
            model = Model(d["model"])
            error_law = parse_law(d["error_law"])
        except KeyError as exc:
            raise SchemaError(f"scenario config missing key {exc}") from exc
        if error_law is None:
            raise SchemaError("error_law may not be 'none'")
        return cls(
            model=model,
            n=int(d["n"]),
            beta0=float(d.get("beta0", 1.0)),
            beta1_grid=tuple(
                float(b)
                for b in d.get("beta1_grid",
                               (-0.5, -0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5))
            ),
            gamma=float(d.get("gamma", 3.0)),
            delta=float(d.get("delta", -2.0)),
            error_law=error_law,
            noise_law=parse_law(d.get("noise_law", "none")),
            replications=int(d.get("replications", 10_000)),
            alpha=float(d.get("alpha", 0.05)),
            score_kind=d.get("scores", "wilcoxon"),
            score_mode=ScoreMode(d.get("score_mode", "approximate")),
            seed=int(d.get("seed", 0)),
            design_seed=int(d.get("design_seed", 0)),
            permutation_b=(int(d["permutation_b"]) if d.get("permutation_b") else None),
            resample_covariate=bool(d.get("resample_covariate", True)),
        )


@dataclass(frozen=True)
class PowerCurve:
    beta1: np.ndarray
    power_anova: np.ndarray
    power_ancova: np.ndarray
    mc_se: np.ndarray
    errors_anova: np.ndarray
    errors_ancova: np.ndarray
    config: dict = field(default_factory=dict)

    CSV_HEADER = "beta1,power_anova,power_ancova,mc_se,n,model,error_law,noise_law,scores,seed"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for i, b in enumerate(self.beta1):
            lines.append(
                f"{b!r},{self.power_anova[i]!r},{self.power_ancova[i]!r},"
                f"{self.mc_se[i]!r},{self.config['n']},{self.config['model']},"
                f"{self.config['error_law']},{self.config['noise_law']},"
                f"{self.config['scores']},{self.config['seed']}"
            )
        return "\n".join(lines) + "\n"


def fixed_design(n: int, design_seed: int) -> tuple[np.ndarray, np.ndarray]:
    """The frozen design: x ~ U(-2,10) and z ~ U(-10,30), keyed by (n, seed)."""
    if n < 4:
        raise ValueError("need n >= 4")
    x = -2.0 + 12.0 * substream(design_seed, 1).random(n)
    z = -10.0 + 40.0 * substream(design_seed, 2).random(n)
    return x, z


def _nu(cfg: ScenarioConfig, w: np.ndarray) -> np.ndarray:
    if cfg.model is Model.LINEAR:
        return cfg.gamma * w
    if cfg.model is Model.QUADRATIC:
        return cfg.delta * w * w
    return np.sin(w)


def generate_dataset(
    cfg: ScenarioConfig, beta1: float, rep_stream: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One replication's (y, x, w) given the frozen design and a cell stream.

    z, e and eta draw from per-variable child streams of ``rep_stream``, so a
    smaller-n run consumes exact prefixes of a larger-n run's randomness.
    """
    x, z_frozen = fixed_design(cfg.n, cfg.design_seed)
    z_stream, e_stream, eta_stream = rep_stream.spawn(3)
    if cfg.resample_covariate:
        z = -10.0 + 40.0 * z_stream.random(cfg.n)
    else:
        z = z_frozen
    e = cfg.error_law.sample(cfg.n, e_stream)
    eta = cfg.noise_law.sample(cfg.n, eta_stream) if cfg.noise_law else np.zeros(cfg.n)
    w = z + eta
    y = cfg.beta0 + x * beta1 + _nu(cfg, w) + e
    return y, x, w


def run_power_study(cfg: ScenarioConfig) -> PowerCurve:
    """Empirical rejection rates of both tests along the beta1 grid.

    Test errors inside a cell (degenerate covariates and the like) are counted
    per grid point and excluded from the rate denominator, never fatal.
    """
    x, z = fixed_design(cfg.n, cfg.design_seed)
    design = build_design(x)
    phi = cfg.score_function()
    crit = float(scipy.stats.chi2.isf(cfg.alpha, design.p))

    grid = np.asarray(cfg.beta1_grid, dtype=float)
    rej_anova = np.zeros(grid.size)
    rej_ancova = np.zeros(grid.size)
    err_anova = np.zeros(grid.size, dtype=int)
    err_ancova = np.zeros(grid.size, dtype=int)

    for b_idx, beta1 in enumerate(grid):
        for rep in range(cfg.replications):
            stream = substream(cfg.seed, b_idx, rep)
            y, _, w = generate_dataset(cfg, float(beta1), stream)
            plan = None
            if cfg.permutation_b is not None:
                plan = PermutationPlan.monte_carlo(
                    cfg.n, cfg.permutation_b, seed=int(stream.integers(1 << 62))
                )
            try:
                res = anova_rank_test(design, y, phi, score_mode=cfg.score_mode,
                                      permutation=plan)
                if _rejects(res, crit, cfg.alpha):
                    rej_anova[b_idx] += 1
            except (DataError, NumericError):
                err_anova[b_idx] += 1
            try:
                res = ancova_rank_test(design, y, w, phi, score_mode=cfg.score_mode,
                                       permutation=plan)
                if _rejects(res, crit, cfg.alpha):
                    rej_ancova[b_idx] += 1
            except (DataError, NumericError):
                err_ancova[b_idx] += 1

    done_anova = np.maximum(cfg.replications - err_anova, 1)
    done_ancova = np.maximum(cfg.replications - err_ancova, 1)
    p_anova = rej_anova / done_anova
    p_ancova = rej_ancova / done_ancova
    se = np.maximum(
        np.sqrt(p_anova * (1 - p_anova) / done_anova),
        np.sqrt(p_ancova * (1 - p_ancova) / done_ancova),
    )
    return PowerCurve(
        beta1=grid,
        power_anova=p_anova,
        power_ancova=p_ancova,
        mc_se=se,
        errors_anova=err_anova,
        errors_ancova=err_ancova,
        config=cfg.to_dict(),
    )


def _rejects(res, crit: float, alpha: float) -> bool:
    if res.p_permutation is not None:
        return res.p_permutation <= alpha
    return res.statistic > crit
