"""RBF-kernel support vector classification trained with sequential minimal
optimization (SMO), one-vs-rest for multiclass, plus the cross-validated
forward feature selection used for content classification.

Callers are expected to standardize features before training.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels
from .stats import CvScheme

log = logging.getLogger(__name__)

_ALPHA_EPS = 1e-8


@dataclass(frozen=True)
class BinarySvm:
    support_vectors: np.ndarray  # (m, p)
    alphas: np.ndarray  # (m,), in (0, C]
    sv_labels: np.ndarray  # (m,), +-1
    bias: float


@dataclass(frozen=True)
class SvmModel:
    """One-vs-rest RBF SVMs, one binary machine per class."""

    classes: list
    machines: list  # BinarySvm per class, same order as classes
    gamma: float
    C: float


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        (a**2).sum(axis=1)[:, None]
        + (b**2).sum(axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


class _Smo:
    """Platt-style SMO on a precomputed kernel matrix."""

    def __init__(self, K, y, C, tol=1e-3, max_passes=200):
        self.K = K
        self.y = y.astype(np.float64)
        self.C = C
        self.tol = tol
        self.max_passes = max_passes
        n = y.size
        self.alpha = np.zeros(n)
        self.b = 0.0
        self.f = np.zeros(n)  # decision values at training points

    def _take_step(self, i1, i2) -> bool:
        if i1 == i2:
            return False
        a1, a2 = self.alpha[i1], self.alpha[i2]
        y1, y2 = self.y[i1], self.y[i2]
        e1 = self.f[i1] - y1
        e2 = self.f[i2] - y2
        s = y1 * y2
        if s < 0:
            lo, hi = max(0.0, a2 - a1), min(self.C, self.C + a2 - a1)
        else:
            lo, hi = max(0.0, a2 + a1 - self.C), min(self.C, a2 + a1)
        if lo >= hi:
            return False
        k11 = self.K[i1, i1]
        k22 = self.K[i2, i2]
        k12 = self.K[i1, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2_new = a2 + y2 * (e1 - e2) / eta
            a2_new = min(hi, max(lo, a2_new))
        else:
            # Flat direction: evaluate the dual objective at both clip bounds.
            v1 = self.f[i1] - self.b - y1 * a1 * k11 - y2 * a2 * k12
            v2 = self.f[i2] - self.b - y1 * a1 * k12 - y2 * a2 * k22

            def objective(t2):
                t1 = a1 + s * (a2 - t2)
                return (
                    0.5 * k11 * t1 * t1
                    + 0.5 * k22 * t2 * t2
                    + s * k12 * t1 * t2
                    + y1 * t1 * v1
                    + y2 * t2 * v2
                    - t1
                    - t2
                )

            obj_lo, obj_hi = objective(lo), objective(hi)
            if obj_lo < obj_hi - 1e-12:
                a2_new = lo
            elif obj_lo > obj_hi + 1e-12:
                a2_new = hi
            else:
                a2_new = a2
        if abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12):
            return False
        a1_new = a1 + s * (a2 - a2_new)

        d1 = a1_new - a1
        d2 = a2_new - a2
        b1 = self.b - e1 - y1 * d1 * k11 - y2 * d2 * k12
        b2 = self.b - e2 - y1 * d1 * k12 - y2 * d2 * k22
        if 0 < a1_new < self.C:
            b_new = b1
        elif 0 < a2_new < self.C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        self.f += y1 * d1 * self.K[i1] + y2 * d2 * self.K[i2] + (b_new - self.b)
        self.alpha[i1] = a1_new
        self.alpha[i2] = a2_new
        self.b = b_new
        return True

    def _examine(self, i2) -> bool:
        y2 = self.y[i2]
        a2 = self.alpha[i2]
        e2 = self.f[i2] - y2
        r2 = e2 * y2
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0)):
            return False
        err = self.f - self.y
        non_bound = np.flatnonzero((self.alpha > 0) & (self.alpha < self.C))
        if non_bound.size > 1:
            i1 = int(non_bound[np.argmax(np.abs(err[non_bound] - err[i2]))])
            if self._take_step(i1, i2):
                return True
        for i1 in np.roll(non_bound, i2 % max(1, non_bound.size)):
            if self._take_step(int(i1), i2):
                return True
        for i1 in np.roll(np.arange(self.y.size), i2):
            if self._take_step(int(i1), i2):
                return True
        return False

    def solve(self):
        examine_all = True
        for _ in range(self.max_passes):
            changed = 0
            if examine_all:
                for i in range(self.y.size):
                    changed += self._examine(i)
            else:
                for i in np.flatnonzero((self.alpha > 0) & (self.alpha < self.C)):
                    changed += self._examine(int(i))
            if examine_all:
                if changed == 0:
                    break
                examine_all = False
            elif changed == 0:
                examine_all = True
        return self.alpha, self.b


def default_gamma(X: np.ndarray) -> float:
    """Kernel width 1 / (n_features * var(X)) with var over all entries."""
    var = float(np.asarray(X).var())
    if var == 0:
        var = 1.0
    return 1.0 / (X.shape[1] * var)


def svm_train(X, labels, C: float = 1.0, gamma: float | None = None,
              tol: float = 1e-3) -> SvmModel:
    """Train one-vs-rest RBF SVMs with SMO (default KKT tolerance 1e-3)."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    classes = sorted(np.unique(labels).tolist())
    if len(classes) < 2:
        raise DegenerateLabels("need at least 2 classes")
    for c in classes:
        if (labels == c).sum() < 2:
            raise DegenerateLabels(f"class {c!r} has fewer than 2 samples")
    if gamma is None:
        gamma = default_gamma(X)
    K = rbf_kernel(X, X, gamma)
    machines = []
    for c in classes:
        y = np.where(labels == c, 1.0, -1.0)
        alpha, b = _Smo(K, y, C, tol=tol).solve()
        sv = alpha > _ALPHA_EPS
        if not sv.any():
            raise DegenerateLabels(f"class {c!r} trained with no support vectors")
        machines.append(
            BinarySvm(
                support_vectors=X[sv].copy(),
                alphas=alpha[sv],
                sv_labels=y[sv],
                bias=b,
            )
        )
    return SvmModel(classes=classes, machines=machines, gamma=gamma, C=C)


def svm_decision(model: SvmModel, X) -> np.ndarray:
    """One-vs-rest decision values, shape (n, n_classes)."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty((X.shape[0], len(model.classes)))
    for k, m in enumerate(model.machines):
        Kx = rbf_kernel(X, m.support_vectors, model.gamma)
        out[:, k] = Kx @ (m.alphas * m.sv_labels) + m.bias
    return out

def svm_predict(model: SvmModel, X) -> np.ndarray:
    """Predicted labels: argmax of the one-vs-rest decision values."""
    winners = svm_decision(model, X).argmax(axis=1)
    return np.array([model.classes[k] for k in winners])


def _majority(labels):
    values, counts = np.unique(labels, return_counts=True)
    return values[counts.argmax()]


def svm_cv_accuracy(X, labels, scheme: CvScheme, predictors=None,
                    C: float = 1.0, gamma: float | None = None) -> float:
    """Mean repeated 2-fold holdout accuracy of an RBF SVM.

    Splits use the same indexed seed substreams as the regression CV. An
    empty predictor set (or a single-class training half) is scored by
    majority-class prediction.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    n = labels.size
    cols = np.arange(X.shape[1]) if predictors is None else list(predictors)
    accs = []
    for rep in range(scheme.repetitions):
        rng = np.random.default_rng(np.random.SeedSequence((scheme.seed, rep)))
        perm = rng.permutation(n)
        half = n // 2
        for tr, ho in ((perm[:half], perm[half:]), (perm[half:], perm[:half])):
            _, counts = np.unique(labels[tr], return_counts=True)
            if len(cols) == 0 or counts.size < 2 or counts.min() < 2:
                pred = np.full(ho.size, _majority(labels[tr]))
            else:
                model = svm_train(X[tr][:, cols], labels[tr], C=C, gamma=gamma)
                pred = svm_predict(model, X[ho][:, cols])
            accs.append(float((pred == labels[ho]).mean()))
    return float(np.mean(accs))


def svm_forward_select(X, labels, scheme: CvScheme, names=None,
                       C: float = 1.0, gamma: float | None = None):
    """Greedy forward feature selection maximizing CV accuracy.

    Mirrors the regression selection loop: fresh seed substream per step,
    strict improvement, lower column index wins ties. Returns
    (selected names, mean CV accuracy of the selected set).
    """
    X = np.asarray(X, dtype=np.float64)
    p_all = X.shape[1]
    if names is None:
        names = [f"x{i}" for i in range(p_all)]
    best = svm_cv_accuracy(X, labels, replace_seed(scheme, (scheme.seed, 0)), [])
    selected: list[int] = []
    remaining = list(range(p_all))
    step = 1
    while remaining:
        step_scheme = replace_seed(scheme, (scheme.seed, step))
        cand_best, cand_score = None, -np.inf
        for j in remaining:
            s = svm_cv_accuracy(X, labels, step_scheme, selected + [j], C, gamma)
            if s > cand_score:
                cand_score, cand_best = s, j
        if cand_score > best:
            selected.append(cand_best)
            remaining.remove(cand_best)
            best = cand_score
            step += 1
        else:
            break
    return [names[j] for j in selected], best


def replace_seed(scheme: CvScheme, key) -> CvScheme:
    """Derive a scheme whose substreams hang off a composite seed key."""
    seed = int(np.random.SeedSequence(key).generate_state(1)[0])
    return CvScheme(repetitions=scheme.repetitions, folds=scheme.folds, seed=seed)
