"""Standardisation, PCA and linear SVMs, written against plain numpy.

The SVMs are solved in the dual by coordinate descent (one coordinate per
training sample, seeded random order each epoch).  The bias is handled as
an extra constant feature, so it is regularised like the weights.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numba
import numpy as np


class ConvergenceError(RuntimeError):
    pass


class ConvergenceWarning(UserWarning):
    pass


class TooFewSamples(ValueError):
    pass


# ---------------------------------------------------------------------------
# scaling


@dataclass(frozen=True)
class ScalerModel:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def inverse_transform(self, Z):
        return np.asarray(Z, dtype=float) * self.scale + self.mean


def scaler_fit(X) -> ScalerModel:
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("need at least two samples")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # constant columns map to zero
    std[std == 0] = 1.0
    return ScalerModel(mean, std)


def scaler_fit_transform(X) -> tuple[ScalerModel, np.ndarray]:
    model = scaler_fit(X)
    return model, model.transform(X)


# ---------------------------------------------------------------------------
# PCA


def jacobi_eigh(A, tol: float = 1e-15, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and the matching eigenvectors as
    columns.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ValueError("matrix must be square and symmetric")
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if scale == 0:
        return np.zeros(n), V
    floor = 1e-15 * scale
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= max(floor, tol * np.sqrt(abs(A[p, p] * A[q, q]))):
                    continue
                rotated = True
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * ap - s * aq, s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * ap - s * aq, s * ap + c * aq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p], V[:, q] = c * vp - s * vq, s * vp + c * vq
        if not rotated:
            break
    else:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    vals = np.diag(A).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], V[:, order]


@dataclass(frozen=True)
class PcaModel:
    """``components`` holds one unit-length direction per row.

    Explained variances use the sample (N-1) covariance.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    total_variance: float = np.nan

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) @ self.components.T

    def inverse_transform(self, Z):
        return np.asarray(Z, dtype=float) @ self.components + self.mean

    @property
    def explained_variance_ratio(self):
        return self.explained_variance / self.total_variance


def pca_fit(X, n: int | None = None, rank_tol: float = 1e-13) -> PcaModel:
    """Top-``n`` principal directions of X.

    ``n=None`` keeps every direction whose variance exceeds ``rank_tol``
    times the largest one (the numerical rank of the centred data).
    """
    X = np.asarray(X, dtype=float)
    N, D = X.shape
    if n is not None and not 1 <= n <= min(N, D):
        raise ValueError(f"n must lie in 1..{min(N, D)}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (N - 1)
    vals, vecs = jacobi_eigh(cov)
    vals = np.maximum(vals, 0.0)
    if n is None:
        n = max(1, int(np.sum(vals > rank_tol * vals[0]))) if vals[0] > 0 else 1
        n = min(n, N - 1 if N > 1 else 1)
    comps = vecs[:, :n].T.copy()
    # deterministic sign: largest-magnitude loading positive
    for i in range(n):
        j = np.argmax(np.abs(comps[i]))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    return PcaModel(mean, comps, vals[:n], float(vals.sum()))


def pca_transform(model: PcaModel, X) -> np.ndarray:
    return model.transform(X)


# ---------------------------------------------------------------------------
# dual coordinate descent kernels


@numba.njit(cache=True)
def _dcd_hinge(X, y, C, max_iter, tol, seed):
    n, D = X.shape
    np.random.seed(seed)
    w = np.zeros(D)
    alpha = np.zeros(n)
    qii = np.empty(n)
    for i in range(n):
        qii[i] = X[i] @ X[i]
    order = np.arange(n)
    it = 0
    while it < max_iter:
        it += 1
        np.random.shuffle(order)
        pg_max, pg_min = -np.inf, np.inf
        for s in range(n):
            i = order[s]
            if qii[i] == 0.0:
                continue
            g = y[i] * (X[i] @ w) - 1.0
            if alpha[i] == 0.0:
                pg = min(g, 0.0)
            elif alpha[i] == C:
                pg = max(g, 0.0)
            else:
                pg = g
            pg_max = max(pg_max, pg)
            pg_min = min(pg_min, pg)
            if pg != 0.0:
                old = alpha[i]
                alpha[i] = min(max(old - g / qii[i], 0.0), C)
                w += (alpha[i] - old) * y[i] * X[i]
        if pg_max - pg_min <= tol:
            return w, it, True
    return w, it, False


@numba.njit(cache=True)
def _dcd_svr(X, y, C, eps, max_iter, tol, seed):
    n, D = X.shape
    np.random.seed(seed)
    w = np.zeros(D)
    beta = np.zeros(n)
    qii = np.empty(n)
    for i in range(n):
        qii[i] = X[i] @ X[i]
    order = np.arange(n)
    it = 0
    while it < max_iter:
        it += 1
        np.random.shuffle(order)
        change = 0.0
        scale = 0.0
        for s in range(n):
            i = order[s]
            if qii[i] == 0.0:
                continue
            g = X[i] @ w - y[i]
            z = beta[i] - g / qii[i]
            thr = eps / qii[i]
            if z > thr:
                nb = z - thr
            elif z < -thr:
                nb = z + thr
            else:
                nb = 0.0
            nb = min(max(nb, -C), C)
            d = nb - beta[i]
            if d != 0.0:
                beta[i] = nb
                w += d * X[i]
                change = max(change, abs(d) * np.sqrt(qii[i]))
            scale = max(scale, abs(beta[i]) * np.sqrt(qii[i]))
        if change <= tol * max(scale, 1.0):
            return w, it, True
    return w, it, False


def _augment(X):
    X = np.asarray(X, dtype=float)
    return np.hstack([X, np.ones((X.shape[0], 1))])


# ---------------------------------------------------------------------------
# classifiers and regressors


@dataclass(frozen=True)
class LinearClassifier:
    classes: tuple
    weights: np.ndarray  # (n_classes, D)
    bias: np.ndarray  # (n_classes,)
    C: float
    converged: bool = True

    def decision_function(self, X):
        return np.asarray(X, dtype=float) @ self.weights.T + self.bias

    def predict(self, X):
        scores = self.decision_function(X)
        # argmax returns the first maximum, i.e. ties go to the earlier class
        return np.array(self.classes, dtype=object)[np.argmax(scores, axis=1)]


def svc_train(X, labels, C: float = 1.0, max_iter: int = 2000, tol: float = 1e-6, seed: int = 0) -> LinearClassifier:
    """One-vs-rest L2-regularised hinge-loss linear SVMs."""
    if C <= 0:
        raise ValueError("C must be positive")
    labels = list(labels)
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    Xa = _augment(X)
    # canonical row order makes the fit independent of the input ordering
    codes = np.array([classes.index(v) for v in labels], dtype=float)
    order = np.lexsort(np.vstack([codes, Xa.T[::-1]]))
    Xa = np.ascontiguousarray(Xa[order])
    lab = [labels[i] for i in order]
    W, converged = [], True
    for c in classes:
        y = np.array([1.0 if v == c else -1.0 for v in lab])
        w, _, ok = _dcd_hinge(Xa, y, float(C), max_iter, tol, seed)
        W.append(w)
        converged &= ok
    if not converged:
        warnings.warn(f"SVC hit the iteration cap ({max_iter}) at C={C}", ConvergenceWarning)
    W = np.array(W)
    return LinearClassifier(classes, W[:, :-1], W[:, -1], float(C), converged)


def svc_predict(model: LinearClassifier, X):
    return model.predict(X)


@dataclass(frozen=True)
class LinearRegressor:
    weights: np.ndarray
    bias: float
    C: float
    epsilon: float
    converged: bool = True

    def predict(self, X):
        return np.asarray(X, dtype=float) @ self.weights + self.bias


def svr_train(
    X, targets, C: float = 1.0, epsilon: float = 0.0, max_iter: int = 5000, tol: float = 1e-6, seed: int = 0
) -> LinearRegressor:
    """L2-regularised epsilon-insensitive (L1-loss) linear regression."""
    if C <= 0 or epsilon < 0:
        raise ValueError("need C > 0 and epsilon >= 0")
    Xa = _augment(X)
    y = np.asarray(targets, dtype=float)
    order = np.lexsort(np.vstack([y, Xa.T[::-1]]))
    Xa, y = np.ascontiguousarray(Xa[order]), np.ascontiguousarray(y[order])
    w, _, ok = _dcd_svr(Xa, y, float(C), float(epsilon), max_iter, tol, seed)
    if not ok:
        warnings.warn(f"SVR hit the iteration cap ({max_iter}) at C={C}", ConvergenceWarning)
    return LinearRegressor(w[:-1], float(w[-1]), float(C), float(epsilon), ok)


def svr_predict(model: LinearRegressor, X):
    return model.predict(X)


# ---------------------------------------------------------------------------
# splits


def split(labels: Sequence, fraction: float, strategy: str = "stratified", seed: int = 0):
    """Indices ``(train, test)`` with ``fraction`` of the data in train.

    ``strategy="stratified"`` splits every class separately; pass binned
    targets as ``labels`` to stratify a regression problem.
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie strictly between 0 and 1")
    labels = list(labels)
    n = len(labels)
    rng = np.random.default_rng(seed)
    if strategy == "random":
        perm = rng.permutation(n)
        cut = int(round(fraction * n))
        return np.sort(perm[:cut]), np.sort(perm[cut:])
    if strategy != "stratified":
        raise ValueError(f"unknown split strategy {strategy!r}")
    train, test = [], []
    groups: dict = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    for lab in sorted(groups, key=repr):
        members = np.array(groups[lab])
        if len(members) < 2:
            raise TooFewSamples(f"class {lab!r} has {len(members)} member(s)")
        members = members[rng.permutation(len(members))]
        cut = min(max(int(round(fraction * len(members))), 1), len(members) - 1)
        train.extend(members[:cut])
        test.extend(members[cut:])
    return np.sort(np.array(train, dtype=int)), np.sort(np.array(test, dtype=int))


def quantile_bins(values, n_bins: int = 10) -> np.ndarray:
    """Bin labels 0..n_bins-1 by empirical quantiles (ties stay together)."""
    values = np.asarray(values, dtype=float)
    edges = np.quantile(values, np.linspace(0, 1, n_bins + 1)[1:-1])
    return np.searchsorted(edges, values, side="right")


def decade_bins(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return np.floor(np.log10(np.maximum(values, 1e-300))).astype(int)


def kfold(labels, n_folds: int, seed: int = 0):
    """Stratified folds as a list of ``(train, validation)`` index pairs."""
    labels = list(labels)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=int)
    groups: dict = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    for lab in sorted(groups, key=repr):
        members = np.array(groups[lab])[rng.permutation(len(groups[lab]))]
        fold_of[members] = np.arange(len(members)) % n_folds
    idx = np.arange(len(labels))
    return [(idx[fold_of != f], idx[fold_of == f]) for f in range(n_folds)]


# ---------------------------------------------------------------------------
# metrics


def accuracy(preds, labels) -> float:
    preds, labels = list(preds), list(labels)
    if len(preds) != len(labels):
        raise ValueError("length mismatch")
    return sum(p == t for p, t in zip(preds, labels)) / len(labels)


@dataclass(frozen=True)
class Confusion:
    classes: tuple
    matrix: np.ndarray  # rows: true class, columns: predicted class
    empty_rows: tuple  # true classes with no support


def confusion(preds, labels, row_normalised: bool = False, classes=None) -> Confusion:
    preds, labels = list(preds), list(labels)
    if len(preds) != len(labels):
        raise ValueError("length mismatch")
    if classes is None:
        classes = sorted(set(labels) | set(preds), key=lambda c: (str(type(c)), c))
    index = {c: i for i, c in enumerate(classes)}
    M = np.zeros((len(classes), len(classes)))
    for p, t in zip(preds, labels):
        M[index[t], index[p]] += 1
    support = M.sum(axis=1)
    empty = tuple(c for c, s in zip(classes, support) if s == 0)
    if row_normalised:
        M = np.divide(M, support[:, None], out=np.zeros_like(M), where=support[:, None] > 0)
    return Confusion(tuple(classes), M, empty)


def r2(preds, targets) -> float:
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if preds.shape != targets.shape:
        raise ValueError("length mismatch")
    ss_res = np.sum((targets - preds) ** 2)
    ss_tot = np.sum((targets - targets.mean()) ** 2)
    if ss_tot == 0:
        return 1.0 if ss_res == 0 else 0.0
    return float(1.0 - ss_res / ss_tot)


def class_prior_baseline(labels) -> float:
    """Accuracy of always predicting the most frequent class."""
    labels = list(labels)
    counts: dict = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    return max(counts.values()) / len(labels)


# ---------------------------------------------------------------------------
# pipelines


@dataclass
class ClassifierPipeline:
    """Optional PCA projection, then standardisation, then a linear SVC.

    ``n_components``: an int (capped at the number of samples and features),
    ``"rank"`` for every non-degenerate direction, or None to skip PCA.
    """

    C: float = 1.0
    n_components: int | str | None = None
    seed: int = 0
    max_iter: int = 2000
    pca: PcaModel | None = None
    scaler: ScalerModel | None = None
    model: LinearClassifier | None = None

    def _project(self, X):
        return self.pca.transform(X) if self.pca is not None else np.asarray(X, dtype=float)

    def fit(self, X, y, pca: PcaModel | None = None):
        if self.n_components is not None:
            n = None if self.n_components == "rank" else min(int(self.n_components), *np.shape(X))
            self.pca = pca if pca is not None else pca_fit(X, n)
        Z = self._project(X)
        self.scaler, Z = scaler_fit_transform(Z)
        self.model = svc_train(Z, y, self.C, max_iter=self.max_iter, seed=self.seed)
        return self

    def predict(self, X):
        return self.model.predict(self.scaler.transform(self._project(X)))


@dataclass
class RegressorPipeline:
    C: float = 1.0
    epsilon: float = 0.0
    seed: int = 0
    max_iter: int = 5000
    scaler: ScalerModel | None = None
    model: LinearRegressor | None = None

    def fit(self, X, y):
        self.scaler, Z = scaler_fit_transform(X)
        self.model = svr_train(Z, y, self.C, self.epsilon, max_iter=self.max_iter, seed=self.seed)
        return self

    def predict(self, X):
        return self.model.predict(self.scaler.transform(X))


def tune(make: Callable[[float], object], X, y, grid: Sequence[float], score: Callable, n_folds: int = 3, seed: int = 0, strata=None):
    """Pick the grid value with the best mean validation score.

    Ties go to the earlier grid entry.  Returns ``(best, {value: score})``.
    """
    folds = kfold(strata if strata is not None else y, n_folds, seed)
    X, y = np.asarray(X), np.asarray(y)
    scores = {}
    for value in grid:
        vals = []
        for tr, va in folds:
            if len(va) == 0:
                continue
            model = make(value).fit(X[tr], y[tr])
            vals.append(score(model.predict(X[va]), y[va]))
        scores[value] = float(np.mean(vals))
    best = max(grid, key=lambda v: (scores[v], -list(grid).index(v)))
    return best, scores


def learning_curve(make: Callable[[], object], X_train, y_train, X_val, y_val, fractions: Sequence[float], seed: int = 0):
    """Retrain on growing stratified subsets of the training data.

    Returns rows ``(fraction, n_train, train_accuracy, validation_accuracy)``.
    """
    X_train, y_train = np.asarray(X_train), np.asarray(y_train)
    rows = []
    for frac in fractions:
        if frac >= 1:
            idx = np.arange(len(y_train))
        else:
            idx, _ = split(y_train, frac, "stratified", seed)
        model = make().fit(X_train[idx], y_train[idx])
        rows.append(
            (
                float(frac),
                len(idx),
                accuracy(model.predict(X_train[idx]), y_train[idx]),
                accuracy(model.predict(X_val), y_val),
            )
        )
    return rows
