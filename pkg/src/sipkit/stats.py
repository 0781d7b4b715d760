"""Statistical machinery: Spearman rank correlation, OLS with standardized
betas and adjusted R^2, repeated 2-fold cross-validation, greedy forward
feature selection, and Euclidean correlation-pattern distances.

Cross-validation repetitions draw their random splits from indexed seed
substreams (one per repetition, derived from the scheme seed), so results do
not depend on evaluation order and parallel execution would reproduce the
sequential result bit for bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import t as student_t

from .errors import LengthMismatch, SingularDesign

log = logging.getLogger(__name__)

# Relative eigenvalue floor below which a CV fold's Gram matrix is treated as
# singular (matches a ~1e-10 condition number on the design, squared and
# padded for float64 noise).
_GRAM_EIG_TOL = 1e-12


@dataclass(frozen=True)
class CvScheme:
    """Repeated 2-fold cross-validation configuration."""

    repetitions: int = 100
    folds: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.folds != 2:
            raise ValueError("only 2-fold splits are supported")


@dataclass
class RegressionModel:
    """A fitted linear model plus its selection/validation bookkeeping."""

    selected: list  # predictor names, in selection order
    coefficients: np.ndarray  # [intercept, b_1..b_p] on raw predictors
    standardized_betas: np.ndarray  # (p,), from the z-scored refit
    coef_p_values: np.ndarray  # (p,), t-test p-values of the raw coefficients
    r2: float  # in-sample
    r2_adjusted: float  # in-sample
    r2_adjusted_cv: float | None  # mean over CV folds; None if never CV'd
    n: int
    p: int


@dataclass(frozen=True)
class CorrelationMap:
    """Spearman rho and p-values, properties x datasets."""

    rows: list  # property names
    cols: list  # dataset / rating ids
    rho: np.ndarray  # (S, D); NaN marks unavailable entries
    p_values: np.ndarray  # (S, D)

    def __post_init__(self):
        if self.rho.shape != (len(self.rows), len(self.cols)):
            raise ValueError("rho shape does not match row/col labels")
        if self.p_values.shape != self.rho.shape:
            raise ValueError("p-value shape does not match rho")
        finite = self.rho[np.isfinite(self.rho)]
        if finite.size and np.abs(finite).max() > 1 + 1e-9:
            raise ValueError("|rho| exceeds 1")


def rank_with_ties(values) -> np.ndarray:
    """Ranks 1..n with tied values receiving their average rank."""
    v = np.asarray(values, dtype=np.float64)
    _, inverse, counts = np.unique(v, return_inverse=True, return_counts=True)
    csum = np.cumsum(counts)
    average = (csum - counts + 1 + csum) / 2.0
    return average[inverse]


def spearman(x, y):
    """Spearman's rho with average ranks for ties, plus a two-sided p-value.

    The p-value comes from t = rho * sqrt((n-2) / (1-rho^2)) against a
    Student-t(n-2) distribution; rho = +-1 gives p = 0. Constant input has
    undefined rank correlation and is reported as (0, 1).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"got lengths {x.shape} and {y.shape}")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    rx = rank_with_ties(x)
    ry = rank_with_ties(y)
    sx = rx.std()
    sy = ry.std()
    if sx == 0 or sy == 0:
        return 0.0, 1.0
    rho = float(((rx - rx.mean()) * (ry - ry.mean())).mean() / (sx * sy))
    rho = min(1.0, max(-1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    tval = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(student_t.sf(abs(tval), n - 2))
    return rho, min(1.0, p)


def _as_design(X, n):
    return np.column_stack([np.ones(n), X]) if X.size else np.ones((n, 1))


def ols_fit(X, y, names=None) -> RegressionModel:
    """Least-squares fit with intercept.

    Standardized betas come from refitting on z-scored predictors and
    response; the in-sample adjusted R^2 uses the usual
    1 - (1-R^2)(n-1)/(n-p-1) penalty. Raises SingularDesign when the design
    matrix condition number exceeds 1e10.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise LengthMismatch(f"X has {n} rows but y has shape {y.shape}")
    if n <= p + 1:
        raise ValueError(f"need n > p + 1 (n={n}, p={p})")
    if names is None:
        names = [f"x{i}" for i in range(p)]

    D = _as_design(X, n)
    svals = np.linalg.svd(D, compute_uv=False)
    if svals[-1] <= svals[0] * 1e-10:
        raise SingularDesign("design matrix is numerically rank deficient")
    coef, *_ = np.linalg.lstsq(D, y, rcond=None)
    resid = y - D @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0:
        raise ValueError("response is constant")
    r2 = 1.0 - ss_res / ss_tot
    r2_adj = 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)

    if p:
        zx = (X - X.mean(axis=0)) / X.std(axis=0)
        zy = (y - y.mean()) / y.std()
        zcoef, *_ = np.linalg.lstsq(_as_design(zx, n), zy, rcond=None)
        std_betas = zcoef[1:]
    else:
        std_betas = np.empty(0)

    dof = n - p - 1
    sigma2 = ss_res / dof
    cov = sigma2 * np.linalg.inv(D.T @ D)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(se > 0, coef / se, np.inf)
    pvals = 2.0 * student_t.sf(np.abs(tvals), dof)

    return RegressionModel(
        selected=list(names),
        coefficients=coef,
        standardized_betas=std_betas,
        coef_p_values=pvals[1:],
        r2=r2,
        r2_adjusted=r2_adj,
        r2_adjusted_cv=None,
        n=n,
        p=p,
    )


class _RepeatedHalves:
    """Precomputed repeated 2-fold splits over a fixed candidate design.

    Per repetition the rows are split into two random halves; each half is
    fit and scored on the other, so ``score`` averages 2 * repetitions
    holdout evaluations. Fitting uses per-fold normal equations sliced out of
    one precomputed Gram tensor, which keeps greedy selection cheap. Folds
    whose Gram matrix is numerically singular fall back to the intercept-only
    model for that fold (logged).
    """

    def __init__(self, X, y, repetitions: int, seed_key: tuple):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        self.y = np.asarray(y, dtype=np.float64)
        n = self.y.size
        self.D = _as_design(X, n)
        train = np.zeros((2 * repetitions, n), dtype=bool)
        for rep in range(repetitions):
            rng = np.random.default_rng(np.random.SeedSequence(seed_key + (rep,)))
            perm = rng.permutation(n)
            half = n // 2
            train[2 * rep, perm[:half]] = True
            train[2 * rep + 1, perm[half:]] = True
        self.train = train
        tf = train.astype(np.float64)
        self.gram = np.einsum("rn,ni,nj->rij", tf, self.D, self.D, optimize=True)
        self.moment = tf @ (self.D * self.y[:, None])
        hold = ~train
        self.hold = hold
        self.hold_n = hold.sum(axis=1)
        hold_mean = (hold * self.y).sum(axis=1) / self.hold_n
        self.ss_tot = (hold * (self.y[None, :] - hold_mean[:, None]) ** 2).sum(axis=1)
        train_n = train.sum(axis=1)
        self.train_mean = (train * self.y).sum(axis=1) / train_n
        # Largest predictor count the smallest holdout can still adjust for.
        self.max_predictors = int(self.hold_n.min()) - 2

    def score(self, cols) -> float:
        """Mean holdout adjusted R^2 of the model using predictor ``cols``.

        Each holdout R^2 is adjusted with the holdout size and the number of
        predictors before averaging.
        """
        idx = np.concatenate([[0], np.asarray(cols, dtype=np.int64) + 1])
        p = len(idx) - 1
        if np.any(self.hold_n <= p + 1):
            raise ValueError("holdout folds too small for this predictor count")
        G = self.gram[:, idx[:, None], idx[None, :]]
        c = self.moment[:, idx]
        eig = np.linalg.eigvalsh(G)
        good = eig[:, 0] > eig[:, -1] * _GRAM_EIG_TOL
        n_folds = G.shape[0]
        r2 = np.empty(n_folds)

        if good.any():
            beta = np.linalg.solve(G[good], c[good][..., None])[..., 0]
            pred = beta @ self.D[:, idx].T
            resid2 = (self.y[None, :] - pred) ** 2
            ss_res = (resid2 * self.hold[good]).sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                raw = 1.0 - ss_res / self.ss_tot[good]
            raw = np.where(self.ss_tot[good] > 0, raw, 0.0)
            hn = self.hold_n[good]
            r2[good] = 1.0 - (1.0 - raw) * (hn - 1) / (hn - p - 1)
        if not good.all():
            # Singular training design: fall back to the intercept-only model.
            log.warning("singular design in %d/%d CV folds; using intercept-only",
                        int((~good).sum()), n_folds)
            bad = ~good
            resid2 = (self.y[None, :] - self.train_mean[bad, None]) ** 2
            ss_res = (resid2 * self.hold[bad]).sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                raw = 1.0 - ss_res / self.ss_tot[bad]
            r2[bad] = np.where(self.ss_tot[bad] > 0, raw, 0.0)
        return float(r2.mean())


def cv_adjusted_r2(X, y, scheme: CvScheme, predictors=None) -> float:
    """Mean holdout-adjusted R^2 over repeated 2-fold cross-validation.

    ``predictors`` selects column indices of X (all columns when None; an
    empty sequence scores the intercept-only baseline). Identical seeds give
    bit-identical results.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    cols = np.arange(X.shape[1]) if predictors is None else list(predictors)
    engine = _RepeatedHalves(X, y, scheme.repetitions, seed_key=(scheme.seed,))
    return engine.score(cols)


def forward_select(X, y, scheme: CvScheme, names=None) -> RegressionModel:
    """Greedy forward selection under repeated 2-fold cross-validation.

    Starting from an empty set, each step scores every not-yet-selected
    predictor added to the current set and adopts the best one if it strictly
    improves the current set's mean CV-adjusted R^2; otherwise selection
    stops. Each step draws a fresh seed substream for its splits, shared by
    all candidates of that step and by the current-set score they must beat,
    so the improvement comparison never mixes split sets. Ties break toward
    the lower column index. The returned model is refit on all rows for
    coefficients and standardized betas and carries the CV score of the
    selected set from its adoption step. If no single predictor beats the
    intercept-only baseline, the model has zero predictors and the baseline
    score.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.float64)
    n, p_all = X.shape
    if names is None:
        names = [f"x{i}" for i in range(p_all)]
    if len(names) != p_all:
        raise LengthMismatch("one name per predictor column required")

    reps = scheme.repetitions
    best_score = None
    selected: list[int] = []
    remaining = list(range(p_all))
    step = 1
    while remaining:
        engine = _RepeatedHalves(X, y, reps, seed_key=(scheme.seed, step))
        if len(selected) + 1 > engine.max_predictors:
            if best_score is None:
                best_score = engine.score(selected)
            break
        current = engine.score(selected)
        cand_best = None
        cand_score = -np.inf
        for j in remaining:
            s = engine.score(selected + [j])
            if s > cand_score:
                cand_score = s
                cand_best = j
        if cand_score > current:
            selected.append(cand_best)
            remaining.remove(cand_best)
            best_score = cand_score
            step += 1
        else:
            if best_score is None:
                best_score = current  # intercept-only baseline
            break
    if best_score is None:  # every predictor got selected
        best_score = cand_score

    if not selected:
        return RegressionModel(
            selected=[],
            coefficients=np.array([y.mean()]),
            standardized_betas=np.empty(0),
            coef_p_values=np.empty(0),
            r2=0.0,
            r2_adjusted=0.0,
            r2_adjusted_cv=best_score,
            n=n,
            p=0,
        )
    model = ols_fit(X[:, selected], y, names=[names[j] for j in selected])
    return replace(model, r2_adjusted_cv=best_score)


def pattern_distance(cmap: CorrelationMap) -> np.ndarray:
    """Euclidean distances between the correlation columns of the map.

    Missing (NaN) entries are treated as 0. The result is symmetric with a
    zero diagonal.
    """
    rho = np.nan_to_num(cmap.rho, nan=0.0)
    diff = rho[:, :, None] - rho[:, None, :]
    return np.sqrt((diff**2).sum(axis=0))
