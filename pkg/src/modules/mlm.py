"""
Mixed Model Module - Two-level random-intercept regression.

    y_ij = b0 + x_ij'b + u_j + e_ij,   u_j ~ N(0, s2_u),  e_ij ~ N(0, s2_e)

Fitted by profiling the likelihood over the variance ratio theta = s2_u / s2_e.
For fixed theta the GLS estimate of b and the level-1 variance have closed
forms, because the scaled covariance of group j is I + theta * 11' with
inverse I - c_j 11', c_j = theta / (1 + n_j theta). A coarse geometric grid
brackets the optimum, bounded Brent search refines it.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import optimize, stats

from .panel import PanelRow, panel_frame

try:
    from ..core.errors import (ConfigError, ConvergenceError, InadmissibleModelError,
                               ModelError, RankDeficientError)
    from ..core.logging_system import get_logger
    from ..core.workflow import run_parallel
except ImportError:
    from core.errors import (ConfigError, ConvergenceError, InadmissibleModelError,
                             ModelError, RankDeficientError)
    from core.logging_system import get_logger
    from core.workflow import run_parallel


INTERCEPT = "const"
CRITERIA = ("ml", "reml")
GRID_POINTS = 60
GRID_FLOOR = 1e-6

MONTH_NAMES = ("january", "february", "march", "april", "may", "june", "july",
               "august", "september", "october", "november", "december")

PanelLike = Union[Sequence[PanelRow], pd.DataFrame]


@dataclass(frozen=True)
class ModelSpec:
    """Outcome, fixed-effect covariates and grouping column of one model."""
    name: str
    covariates: Tuple[str, ...] = ()
    outcome: str = "joiners"
    group: str = "community_id"

    def __post_init__(self):
        if self.outcome in self.covariates:
            raise InadmissibleModelError(f"Model '{self.name}': outcome '{self.outcome}' is also a covariate")
        if len(set(self.covariates)) != len(self.covariates):
            raise InadmissibleModelError(f"Model '{self.name}' lists a covariate twice")

    def with_covariates(self, extra: Iterable[str]) -> "ModelSpec":
        added = tuple(c for c in extra if c not in self.covariates)
        return ModelSpec(self.name, self.covariates + added, self.outcome, self.group)


# Five-column layout: null, maturity control, language, network, combined.
MODEL_PRESETS: Dict[str, ModelSpec] = {
    "null": ModelSpec("null"),
    "maturity": ModelSpec("maturity", ("maturity",)),
    "language": ModelSpec("language", ("sentiment", "complexity", "emotionality")),
    "network": ModelSpec("network", ("past_activity", "group_betweenness", "rotating_leadership")),
    "full": ModelSpec("full", ("complexity", "past_activity", "group_betweenness", "rotating_leadership")),
}


@dataclass(frozen=True)
class VarianceComponents:
    """Level-2 (between-group) and level-1 (residual) variances."""
    sigma2_u: float
    sigma2_e: float


@dataclass
class ModelFit:
    """Estimates and diagnostics of one fitted model."""
    spec: ModelSpec
    criterion: str
    coefficients: Dict[str, float]
    standard_errors: Dict[str, float]
    z_values: Dict[str, float]
    p_values: Dict[str, float]
    sigma2_u: float
    sigma2_e: float
    theta: float
    log_likelihood: float
    n_obs: int
    n_groups: int
    converged: bool = True
    evaluations: int = 0
    trace: List[Tuple[float, float]] = field(default_factory=list, repr=False)

    @property
    def n_params(self) -> int:
        return len(self.coefficients) + 2

    @property
    def icc(self) -> float:
        return variance_icc(self.sigma2_u, self.sigma2_e)

    @property
    def deviance(self) -> float:
        return -2.0 * self.log_likelihood

    @property
    def aic(self) -> float:
        return self.deviance + 2.0 * self.n_params

    @property
    def bic(self) -> float:
        return self.deviance + self.n_params * math.log(self.n_obs)

    @property
    def variances(self) -> VarianceComponents:
        return VarianceComponents(self.sigma2_u, self.sigma2_e)

    def to_dict(self) -> Dict:
        """JSON-ready report (the evaluation trace is left out)."""
        return {
            "model": self.spec.name,
            "outcome": self.spec.outcome,
            "group": self.spec.group,
            "covariates": list(self.spec.covariates),
            "criterion": self.criterion,
            "coefficients": {
                name: {
                    "estimate": self.coefficients[name],
                    "std_error": self.standard_errors[name],
                    "z": self.z_values[name],
                    "p_value": self.p_values[name],
                }
                for name in self.coefficients
            },
            "variance_level2": self.sigma2_u,
            "variance_level1": self.sigma2_e,
            "theta": self.theta,
            "icc": self.icc,
            "log_likelihood": self.log_likelihood,
            "deviance": self.deviance,
            "aic": self.aic,
            "bic": self.bic,
            "n_obs": self.n_obs,
            "n_groups": self.n_groups,
            "convergence": {"converged": self.converged, "evaluations": self.evaluations},
        }


def variance_icc(sigma2_u: float, sigma2_e: float) -> float:
    total = sigma2_u + sigma2_e
    return sigma2_u / total if total > 0 else 0.0


def icc(fit: Union[ModelFit, VarianceComponents]) -> float:
    """Intraclass correlation s2_u / (s2_u + s2_e)."""
    return variance_icc(fit.sigma2_u, fit.sigma2_e)


def _percent_change(value: float, reference: float) -> Optional[float]:
    if reference == 0:
        return None
    return 100.0 * (value - reference) / reference


def variance_change(fit: Union[ModelFit, VarianceComponents],
                    null_fit: Union[ModelFit, VarianceComponents]) -> Tuple[Optional[float], Optional[float]]:
    """Percent change of (level-2, level-1) variance against the null model; None when undefined."""
    if isinstance(fit, ModelFit) and isinstance(null_fit, ModelFit):
        if (fit.spec.outcome, fit.spec.group) != (null_fit.spec.outcome, null_fit.spec.group):
            raise ModelError("Variance change needs fits with the same outcome and grouping")
    return (_percent_change(fit.sigma2_u, null_fit.sigma2_u),
            _percent_change(fit.sigma2_e, null_fit.sigma2_e))


def seasonal_covariates(panel: PanelLike, months: Iterable[int] = (12,)) -> pd.DataFrame:
    """Panel frame with a 0/1 dummy column per requested calendar month (named 'december' etc.)."""
    frame = panel.copy() if isinstance(panel, pd.DataFrame) else panel_frame(panel)
    calendar = frame["month"].str.slice(5, 7).astype(int)
    for month in sorted(set(months)):
        if not 1 <= month <= 12:
            raise ConfigError(f"Seasonal month {month} outside 1..12")
        frame[MONTH_NAMES[month - 1]] = (calendar == month).astype(float)
    return frame


def seasonal_names(months: Iterable[int]) -> List[str]:
    return [MONTH_NAMES[m - 1] for m in sorted(set(months))]


def parse_model_list(text: str, seasonal_months: Iterable[int] = ()) -> List[ModelSpec]:
    """
    Parse 'null,full,custom:size+sentiment' into model specs.
    Seasonal dummies are appended to every model except the null model.
    """
    seasonal = seasonal_names(seasonal_months)
    specs: List[ModelSpec] = []
    for item in (part.strip() for part in text.split(",")):
        if not item:
            continue
        if ":" in item:
            name, _, covariates = item.partition(":")
            spec = ModelSpec(name.strip(), tuple(c.strip() for c in covariates.split("+") if c.strip()))
        elif item in MODEL_PRESETS:
            spec = MODEL_PRESETS[item]
        else:
            raise ConfigError(f"Unknown model '{item}'. Presets: {', '.join(MODEL_PRESETS)}")
        if spec.covariates or spec.name != "null":
            spec = spec.with_covariates(seasonal)
        specs.append(spec)
    if not specs:
        raise ConfigError("No models requested")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError(f"Duplicate model names in '{text}'")
    return specs


def collinear_columns(X: np.ndarray, names: Sequence[str]) -> List[str]:
    """Columns that do not raise the rank when added left to right."""
    collinear = []
    kept: List[int] = []
    rank = 0
    for i, name in enumerate(names):
        trial = kept + [i]
        trial_rank = np.linalg.matrix_rank(X[:, trial])
        if trial_rank > rank:
            kept, rank = trial, trial_rank
        else:
            collinear.append(name)
    return collinear


class RandomInterceptModel:
    """
    Design data of one model, prepared for profile-likelihood fitting.

    Rows are sorted by group and then by value so that the estimates do not
    depend on input order.
    """

    def __init__(self, panel: PanelLike, spec: ModelSpec, criterion: str = "ml"):
        if criterion not in CRITERIA:
            raise ConfigError(f"Unknown criterion '{criterion}', expected one of {', '.join(CRITERIA)}")
        self.spec = spec
        self.criterion = criterion

        frame = panel if isinstance(panel, pd.DataFrame) else panel_frame(panel)
        columns = [spec.group, spec.outcome] + list(spec.covariates)
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise ModelError(f"Model '{spec.name}': unknown columns {', '.join(missing)}")

        data = frame[columns].copy()
        for column in columns[1:]:
            data[column] = pd.to_numeric(data[column], errors="coerce").astype(float)
        data = data.dropna()
        data[spec.group] = data[spec.group].astype(str)
        data = data.sort_values(columns, kind="mergesort").reset_index(drop=True)

        self.names = [INTERCEPT] + list(spec.covariates)
        self.n_obs = len(data)
        self.p = len(self.names)
        labels, codes = np.unique(data[spec.group].to_numpy(), return_inverse=True)
        self.groups = [str(g) for g in labels]
        self.n_groups = len(labels)

        if self.n_groups < 2:
            raise InadmissibleModelError(
                f"Model '{spec.name}' needs at least 2 groups, got {self.n_groups}")
        if self.n_obs < len(spec.covariates) + 2 or self.n_obs <= self.p:
            raise InadmissibleModelError(
                f"Model '{spec.name}' has {self.n_obs} complete rows for {len(spec.covariates)} covariates")

        self.y = data[spec.outcome].to_numpy(dtype=float)
        self.X = np.column_stack([np.ones(self.n_obs)] + [data[c].to_numpy(dtype=float)
                                                          for c in spec.covariates])
        collinear = collinear_columns(self.X, self.names)
        if collinear:
            raise RankDeficientError(collinear)

        self.codes = codes
        self.sizes = np.bincount(codes, minlength=self.n_groups).astype(float)
        self.XtX = self.X.T @ self.X
        self.Xty = self.X.T @ self.y
        self.S = np.vstack([np.bincount(codes, weights=self.X[:, k], minlength=self.n_groups)
                            for k in range(self.p)]).T
        self.Sy = np.bincount(codes, weights=self.y, minlength=self.n_groups)
        self.trace: List[Tuple[float, float]] = []

    def _gls(self, theta: float):
        c = theta / (1.0 + self.sizes * theta)
        A = self.XtX - self.S.T @ (c[:, None] * self.S)
        b = self.Xty - self.S.T @ (c * self.Sy)
        beta = np.linalg.solve(A, b)
        r = self.y - self.X @ beta
        group_sums = np.bincount(self.codes, weights=r, minlength=self.n_groups)
        Q = float(r @ r - np.sum(c * group_sums ** 2))
        return beta, A, Q

    def profile(self, theta: float) -> float:
        """Profile log-likelihood (ML or REML) at a variance ratio."""
        if theta < 0:
            return -math.inf
        _, A, Q = self._gls(theta)
        if Q <= 0:
            return -math.inf
        logdet_v = float(np.sum(np.log1p(self.sizes * theta)))
        if self.criterion == "ml":
            n = self.n_obs
            return -0.5 * n * (math.log(2.0 * math.pi) + 1.0 + math.log(Q / n)) - 0.5 * logdet_v
        dof = self.n_obs - self.p
        sign, logdet_a = np.linalg.slogdet(A)
        if sign <= 0:
            return -math.inf
        return -0.5 * (dof * (math.log(2.0 * math.pi) + 1.0 + math.log(Q / dof)) + logdet_v + logdet_a)

    def _objective(self, theta: float) -> float:
        value = self.profile(theta)
        self.trace.append((float(theta), float(value)))
        return -value if math.isfinite(value) else math.inf

    def fit(self, theta_max: float = 1e4, tolerance: float = 1e-10) -> ModelFit:
        """
        Maximize the profile likelihood over theta in [0, theta_max].

        Raises:
            ConvergenceError: no finite likelihood, or the refinement failed.
        """
        self.trace = []
        grid = np.concatenate(([0.0], np.geomspace(GRID_FLOOR, theta_max, GRID_POINTS)))
        values = [self._objective(t) for t in grid]
        best = int(np.argmin(values))
        if not math.isfinite(values[best]):
            raise ConvergenceError(f"Model '{self.spec.name}': likelihood is not finite on [0, {theta_max}]",
                                   list(self.trace))

        theta_hat, best_value = float(grid[best]), values[best]
        lower = float(grid[max(best - 1, 0)])
        upper = float(grid[min(best + 1, len(grid) - 1)])
        if upper > lower:
            result = optimize.minimize_scalar(self._objective, bounds=(lower, upper), method="bounded",
                                              options={"xatol": tolerance, "maxiter": 500})
            if not result.success:
                raise ConvergenceError(f"Model '{self.spec.name}': {result.message}", list(self.trace))
            if result.fun <= best_value:
                theta_hat, best_value = float(result.x), float(result.fun)
        if best_value > self._objective(0.0):
            theta_hat = 0.0
        if theta_hat >= theta_max * (1 - 1e-6):
            get_logger().warning(f"Model '{self.spec.name}': variance ratio at upper bound {theta_max}",
                                 source="mlm")

        beta, A, Q = self._gls(theta_hat)
        dof = self.n_obs if self.criterion == "ml" else self.n_obs - self.p
        sigma2_e = Q / dof
        cov = sigma2_e * np.linalg.inv(A)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        z = np.divide(beta, se, out=np.full_like(beta, np.nan), where=se > 0)
        p = 2.0 * stats.norm.sf(np.abs(z))

        fit = ModelFit(
            spec=self.spec,
            criterion=self.criterion,
            coefficients={n: float(v) for n, v in zip(self.names, beta)},
            standard_errors={n: float(v) for n, v in zip(self.names, se)},
            z_values={n: float(v) for n, v in zip(self.names, z)},
            p_values={n: float(v) for n, v in zip(self.names, p)},
            sigma2_u=theta_hat * sigma2_e,
            sigma2_e=sigma2_e,
            theta=theta_hat,
            log_likelihood=self.profile(theta_hat),
            n_obs=self.n_obs,
            n_groups=self.n_groups,
            converged=True,
            evaluations=len(self.trace),
            trace=list(self.trace),
        )
        get_logger().info(
            f"Fitted '{self.spec.name}' ({self.criterion.upper()}): loglik {fit.log_likelihood:.3f}, "
            f"ICC {fit.icc:.2%}, N {fit.n_obs}, groups {fit.n_groups}", source="mlm")
        return fit


def fit_lmm(panel: PanelLike, spec: ModelSpec, criterion: str = "ml",
            theta_max: float = 1e4, tolerance: float = 1e-10) -> ModelFit:
    """Fit one random-intercept model on the listwise-complete rows of the panel."""
    return RandomInterceptModel(panel, spec, criterion).fit(theta_max, tolerance)


def fit_models(panel: PanelLike, specs: Sequence[ModelSpec], criterion: str = "ml",
               theta_max: float = 1e4, tolerance: float = 1e-10, jobs: int = 1) -> List[ModelFit]:
    """Fit independent model specs, results in spec order."""
    return run_parallel(lambda s: fit_lmm(panel, s, criterion, theta_max, tolerance), specs, jobs)


def likelihood_ratio_test(smaller: ModelFit, larger: ModelFit) -> Tuple[float, int, float]:
    """
    Likelihood-ratio test of nested ML fits on identical rows.

    Returns:
        (statistic, degrees of freedom, chi-square p-value)
    """
    if smaller.criterion != "ml" or larger.criterion != "ml":
        raise ModelError("Likelihood-ratio tests need ML fits")
    if smaller.n_obs != larger.n_obs:
        raise ModelError(f"Fits use different rows ({smaller.n_obs} vs {larger.n_obs})")
    if not set(smaller.spec.covariates) <= set(larger.spec.covariates):
        raise ModelError(f"Model '{smaller.spec.name}' is not nested in '{larger.spec.name}'")
    df = larger.n_params - smaller.n_params
    if df <= 0:
        raise ModelError("Larger model must have more parameters")
    statistic = max(0.0, 2.0 * (larger.log_likelihood - smaller.log_likelihood))
    return statistic, df, float(stats.chi2.sf(statistic, df))
