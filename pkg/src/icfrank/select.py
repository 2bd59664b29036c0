"""Linear SVM, recursive feature elimination and split-stability ranking.

The SVM solves the standard soft-margin problem

    min_{w, b}  1/2 ||w||^2 + C sum_i max(0, 1 - y_i (w . x_i + b))

through its dual with sequential minimal optimization (maximal-violating
pair, second-order working-set choice). The bias is unregularized.
"""

import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numba
import numpy as np

from ._util import derive_rng
from .errors import DegenerateDataError, ValidationError

DEFAULT_C = 1.0
DEFAULT_EPS = 1e-8
DEFAULT_TOP = 10
SVM_TOL = 1e-7
SMO_CHUNK = 2000  # SMO updates between active-set polishing steps
POLISH_ROUNDS = 25


@dataclass
class FeatureMatrix:
    """Raw feature values per subject; NaN marks a missing value.

    ``labels`` are 0 (healthy) / 1 (CHF); :attr:`y` gives the +-1 form used
    for training, with CHF as the positive class.
    """

    ids: List[str]
    names: List[str]
    values: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.ids), len(self.names)):
            raise ValidationError("feature matrix shape does not match ids/names")
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("duplicate subject ids in feature matrix")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)

    @property
    def imputation_flags(self):
        return np.isnan(self.values)

    @property
    def y(self):
        if self.labels is None:
            raise ValidationError("feature matrix is unlabeled")
        return 2 * self.labels - 1

    @classmethod
    def from_vectors(cls, vectors):
        if not vectors:
            raise ValidationError("no feature vectors")
        names = vectors[0].names
        for v in vectors[1:]:
            if v.names != names:
                raise ValidationError(f"feature layout of {v.id!r} differs")
        labels = [v.label for v in vectors]
        labels = None if any(lab is None for lab in labels) else np.array(labels)
        return cls(ids=[v.id for v in vectors], names=names,
                   values=np.stack([v.values for v in vectors]), labels=labels)


@dataclass
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, values):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            mean = np.nanmean(values, axis=0)
            std = np.nanstd(values, axis=0)
        mean = np.where(np.isnan(mean), 0.0, mean)
        std = np.where(np.isnan(std), 0.0, std)
        return cls(mean=mean, std=std)

    def transform(self, values):
        """z-scores; zero-std columns and missing cells become 0."""
        values = np.asarray(values, dtype=float)
        safe = np.where(self.std > 0, self.std, 1.0)
        z = (values - self.mean) / safe
        z[..., self.std == 0] = 0.0
        return np.where(np.isnan(z), 0.0, z)


def variance_filter(values, eps=DEFAULT_EPS):
    """Indices of columns whose std exceeds ``eps * (|mean| + 1)``.

    Missing cells are ignored; all-missing columns are dropped.
    """
    values = np.asarray(values, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(values, axis=0)
        std = np.nanstd(values, axis=0)
    keep = np.flatnonzero(std > eps * (np.abs(mean) + 1.0))
    if len(keep) == 0:
        raise DegenerateDataError("every feature column is (almost) constant")
    return keep


def standardize(values, train_rows):
    """Scale every row with mean/std taken from ``train_rows``."""
    values = np.asarray(values, dtype=float)
    scaler = Scaler.fit(values[train_rows])
    return scaler.transform(values), scaler


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    C: float
    feature_names: List[str] = field(default_factory=list)
    scaler: Optional[Scaler] = None
    seed: int = 0
    alpha: Optional[np.ndarray] = None
    objective: float = np.nan
    iterations: int = 0
    settings: Dict[str, str] = field(default_factory=dict)

    def decision_function(self, X):
        return np.asarray(X, dtype=float) @ self.weights + self.bias


def hinge_objective(w, b, X, y, C):
    margins = y * (X @ w + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - margins).sum())


def _check_labels(y):
    y = np.asarray(y)
    if not np.all(np.isin(y, (-1, 1))):
        raise ValidationError("labels must be +1 or -1")
    if not (np.any(y == 1) and np.any(y == -1)):
        raise ValidationError("training needs samples from both classes")
    return y.astype(float)


@numba.njit(cache=True)
def _smo(K, y, C, alpha, tol, max_iter):
    """In-place SMO on ``alpha``; returns updates done (max_iter + 1 if unconverged)."""
    n = len(y)
    G = np.empty(n)
    for t in range(n):
        acc = 0.0
        for s in range(n):
            acc += y[t] * y[s] * K[t, s] * alpha[s]
        G[t] = acc - 1.0
    for it in range(1, max_iter + 1):
        i = -1
        m = -np.inf
        M = np.inf
        for t in range(n):
            v = -y[t] * G[t]
            if (alpha[t] < C) if y[t] > 0 else (alpha[t] > 0):
                if v > m:
                    m = v
                    i = t
            if (alpha[t] > 0) if y[t] > 0 else (alpha[t] < C):
                if v < M:
                    M = v
        if i < 0 or m - M < tol:
            return it - 1
        j = -1
        best = np.inf
        for t in range(n):
            if (alpha[t] > 0) if y[t] > 0 else (alpha[t] < C):
                b = m + y[t] * G[t]
                if b > 0:
                    a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                    if a <= 1e-12:
                        a = 1e-12
                    score = -(b * b) / a
                    if score < best:
                        best = score
                        j = t
        a = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if a <= 1e-12:
            a = 1e-12
        step = (m + y[j] * G[j]) / a
        step = min(step, C - alpha[i] if y[i] > 0 else alpha[i])
        step = min(step, alpha[j] if y[j] > 0 else C - alpha[j])
        alpha[i] = min(max(alpha[i] + y[i] * step, 0.0), C)
        alpha[j] = min(max(alpha[j] - y[j] * step, 0.0), C)
        for t in range(n):
            G[t] += step * y[t] * (K[t, i] - K[t, j])
    return max_iter + 1


def _dual_objective(Q, alpha):
    return 0.5 * alpha @ Q @ alpha - alpha.sum()


def _polish(Q, y, C, alpha, rounds=POLISH_ROUNDS):
    """Active-set refinement of ``alpha`` between SMO chunks.

    SMO converges only linearly on degenerate problems (many free support
    vectors, rank-deficient kernel). With the bounded variables fixed, the
    optimum over the free ones solves a linear KKT system; we step toward
    it as far as the box allows, which never increases the dual objective.
    A blocked step pins one more variable at its bound; repeat.
    """
    for _ in range(rounds):
        if not _face_step(Q, y, C, alpha):
            return


def _face_step(Q, y, C, alpha):
    """One step toward the face optimum; True if blocked by a bound."""
    free = (alpha > 1e-12 * C) & (alpha < C - 1e-12 * C)
    if not np.any(free):
        return
    F, B = np.flatnonzero(free), np.flatnonzero(~free)
    nF = len(F)
    kkt = np.zeros((nF + 1, nF + 1))
    kkt[:nF, :nF] = Q[np.ix_(F, F)]
    kkt[:nF, nF] = y[F]
    kkt[nF, :nF] = y[F]
    rhs = np.empty(nF + 1)
    rhs[:nF] = 1.0 - Q[np.ix_(F, B)] @ alpha[B]
    rhs[nF] = -(y[B] @ alpha[B])
    target = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:nF]
    d = target - alpha[F]
    # largest t in [0, 1] keeping alpha[F] + t d inside [0, C]
    with np.errstate(divide="ignore", invalid="ignore"):
        limits = np.where(d < 0, -alpha[F] / d, np.where(d > 0, (C - alpha[F]) / d, np.inf))
    t = min(1.0, float(limits.min()))
    if t <= 0:
        return False
    trial = alpha.copy()
    trial[F] = np.clip(alpha[F] + t * d, 0.0, C)
    if t < 1.0:
        # snap the blocking variable exactly onto its bound
        b = F[np.argmin(limits)]
        trial[b] = 0.0 if d[np.argmin(limits)] < 0 else C
    # keep the equality constraint exact after clipping round-off
    # absorb round-off in the equality constraint into the most interior variable
    k = F[np.argmax(np.minimum(trial[F], C - trial[F]))]
    trial[k] -= y[k] * (trial @ y)
    if np.all((trial >= 0) & (trial <= C)) and _dual_objective(Q, trial) < _dual_objective(Q, alpha):
        alpha[:] = trial
        return t < 1.0
    return False


def train_linear_svm(X, y, C=DEFAULT_C, seed=0, tol=SVM_TOL, max_iter=200_000, alpha0=None):
    """Fit a soft-margin linear SVM by SMO on the dual.

    ``alpha0`` warm-starts the dual variables; any feasible vector
    (``0 <= alpha <= C``, ``sum(alpha * y) == 0``) works,
    which RFE exploits since the dual constraints do not depend on the
    features. The solver itself is deterministic; ``seed`` is recorded on
    the model for provenance.
    """
    X = np.asarray(X, dtype=float)
    y = _check_labels(y)
    if C <= 0:
        raise ValidationError("C must be positive")
    K = X @ X.T
    alpha = np.zeros(len(y)) if alpha0 is None else np.clip(np.asarray(alpha0, dtype=float), 0.0, C)
    alpha = np.ascontiguousarray(alpha)
    Q = K * np.outer(y, y)
    it = 0
    while True:
        chunk = min(SMO_CHUNK, max_iter - it)
        done = _smo(K, y, float(C), alpha, float(tol), chunk)
        if done <= chunk:
            it += done
            break
        it += chunk
        if it >= max_iter:
            warnings.warn(f"SMO stopped after max_iter={max_iter} updates", RuntimeWarning)
            break
        _polish(Q, y, C, alpha)

    # round-off residue must not count as a free support vector
    snap = 1e-12 * C
    alpha[alpha < snap] = 0.0
    alpha[alpha > C - snap] = C
    pos = y > 0
    w = X.T @ (alpha * y)
    yG = -y * (Q @ alpha - 1.0)
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        bias = float(yG[free].mean())
    else:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        lo = yG[up].max() if np.any(up) else -np.inf
        hi = yG[low].min() if np.any(low) else np.inf
        bias = float(0.5 * (lo + hi)) if np.isfinite(lo) and np.isfinite(hi) else float(lo if np.isfinite(lo) else hi)
    return LinearModel(weights=w, bias=bias, C=C, seed=seed, alpha=alpha,
                       objective=hinge_objective(w, bias, X, y, C), iterations=it)


def svm_rfe(X, y, C=DEFAULT_C, seed=0, step=1):
    """Recursive feature elimination with a linear SVM.

    Returns column indices in elimination order: the first entry was
    dropped first, the last entry is the final survivor (rank 1). Each
    round drops the ``step`` columns with the smallest ``|w|``; ties go to
    the lower column index.
    """
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    if p < 2:
        raise ValidationError("RFE needs at least two features")
    if step < 1:
        raise ValidationError("step must be >= 1")
    surviving = np.arange(p)
    order = []
    alpha = None
    while len(surviving) > 1:
        model = train_linear_svm(X[:, surviving], y, C=C, seed=seed, alpha0=alpha)
        alpha = model.alpha
        k = min(step, len(surviving) - 1)
        drop = np.argsort(np.abs(model.weights), kind="stable")[:k]
        # within one chunk, weaker weights leave first
        order.extend(surviving[drop].tolist())
        surviving = np.delete(surviving, drop)
    order.append(int(surviving[0]))
    return np.array(order, dtype=int)


def ranks_from_order(order):
    """Rank per column (1 = last eliminated) from an elimination order."""
    order = np.asarray(order)
    ranks = np.empty(len(order), dtype=int)
    ranks[order[::-1]] = np.arange(1, len(order) + 1)
    return ranks


@dataclass
class RankResult:
    """Aggregate of repeated split / RFE runs.

    ``ranking`` lists feature indices best first: by top-set frequency, then
    mean RFE rank, then canonical index. ``elimination_order`` is its
    reverse, matching the single-run convention of :func:`svm_rfe`.
    """

    names: List[str]
    frequency: np.ndarray
    mean_rank: np.ndarray
    ranking: np.ndarray
    error_histogram: Dict[int, int]
    test_errors: List[int]
    n_test: int
    top_sets: List[List[int]]

    @property
    def elimination_order(self):
        return self.ranking[::-1]

    @property
    def rank(self):
        return ranks_from_order(self.elimination_order)

    @property
    def splits(self):
        return len(self.test_errors)

    @property
    def mean_accuracy(self):
        if self.n_test == 0:
            return np.nan
        return 1.0 - float(np.mean(self.test_errors)) / self.n_test

    def top(self, k=DEFAULT_TOP):
        return [self.names[i] for i in self.ranking[:k]]


def stratified_split(labels, train_counts, rng):
    """Random train/test rows with ``train_counts = (n_healthy, n_chf)``."""
    labels = np.asarray(labels)
    train, test = [], []
    for cls, count in zip((0, 1), train_counts):
        rows = np.flatnonzero(labels == cls)
        if count > len(rows):
            raise ValidationError(
                f"train count {count} exceeds class size {len(rows)} for label {cls}"
            )
        if count < 1:
            raise ValidationError("each class needs at least one training subject")
        rows = rng.permutation(rows)
        train.append(rows[:count])
        test.append(rows[count:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def _one_repeat(matrix, y, train_counts, C, seed, r, top, step, eps):
    rng = derive_rng(seed, "rank", r)
    train, test = stratified_split(matrix.labels, train_counts, rng)
    kept = variance_filter(matrix.values[train], eps)
    Z, scaler = standardize(matrix.values[:, kept], train)
    if len(kept) >= 2:
        order = svm_rfe(Z[train], y[train], C=C, seed=seed, step=step)
    else:
        order = np.array([0])
    ranks = np.full(len(matrix.names), len(kept) + 1, dtype=float)
    ranks[kept] = ranks_from_order(order)
    best = order[::-1][:top]
    model = train_linear_svm(Z[np.ix_(train, best)], y[train], C=C, seed=seed)
    if len(test):
        scores = model.decision_function(Z[np.ix_(test, best)])
        predicted = np.where(scores >= 0, 1, -1)
        errors = int(np.sum(predicted != y[test]))
    else:
        errors = 0
    return kept[best].tolist(), ranks, errors, len(test)


def stability_rank(matrix, splits=1000, train_counts=(50, 30), C=DEFAULT_C, seed=0,
                   top=DEFAULT_TOP, step=1, eps=DEFAULT_EPS):
    """Repeat stratified split -> filter -> standardize -> RFE ``splits`` times.

    Each repeat contributes its ``top`` surviving features to the frequency
    count and the test-error count of a model trained on just those.
    Repeat ``r`` draws from the stream ``(seed, "rank", r)``.
    """
    if splits < 1:
        raise ValidationError("splits must be >= 1")
    if matrix.labels is None:
        raise ValidationError("stability ranking needs a labeled feature matrix")
    y = matrix.y
    p = len(matrix.names)
    frequency = np.zeros(p, dtype=int)
    rank_sum = np.zeros(p)
    errors = []
    top_sets = []
    n_test = 0
    for r in range(splits):
        best, ranks, err, n_test = _one_repeat(matrix, y, train_counts, C, seed, r, top, step, eps)
        frequency[best] += 1
        rank_sum += ranks
        errors.append(err)
        top_sets.append(best)
    mean_rank = rank_sum / splits
    ranking = np.array(sorted(range(p), key=lambda k: (-frequency[k], mean_rank[k], k)), dtype=int)
    hist = {}
    for e in errors:
        hist[e] = hist.get(e, 0) + 1
    return RankResult(names=list(matrix.names), frequency=frequency, mean_rank=mean_rank,
                      ranking=ranking, error_histogram=dict(sorted(hist.items())),
                      test_errors=errors, n_test=n_test, top_sets=top_sets)


def fit_model(matrix, feature_names, C=DEFAULT_C, seed=0, settings=None):
    """Train a model on all labeled rows using the named features."""
    index = {n: k for k, n in enumerate(matrix.names)}
    try:
        cols = [index[n] for n in feature_names]
    except KeyError as exc:
        raise ValidationError(f"unknown feature {exc.args[0]!r}") from None
    Z, scaler = standardize(matrix.values[:, cols], np.arange(len(matrix.ids)))
    model = train_linear_svm(Z, matrix.y, C=C, seed=seed)
    model.feature_names = list(feature_names)
    model.scaler = scaler
    model.settings = dict(settings or {})
    return model


def predict(model, features):
    """``(label, margin)`` for one subject; label is +1 (CHF) when margin >= 0.

    ``features`` maps feature names to raw values (a FeatureVector also
    works). Missing values (NaN) are imputed like in training.
    """
    if hasattr(features, "as_dict"):
        features = features.as_dict()
    missing = [n for n in model.feature_names if n not in features]
    if missing:
        raise ValidationError(f"feature vector lacks {missing[0]!r}")
    raw = np.array([features[n] for n in model.feature_names], dtype=float)
    x = model.scaler.transform(raw) if model.scaler is not None else np.nan_to_num(raw)
    margin = float(x @ model.weights + model.bias)
    return (1 if margin >= 0 else -1), margin


MODEL_MAGIC = "icfrank-linear-model 1"


def format_model(model):
    r = repr
    lines = [MODEL_MAGIC, f"C={r(float(model.C))}", f"seed={model.seed}",
             f"bias={r(float(model.bias))}"]
    for key, value in model.settings.items():
        lines.append(f"setting.{key}={value}")
    scaler = model.scaler or Scaler(np.zeros(len(model.weights)), np.ones(len(model.weights)))
    for name, mu, sd, w in zip(model.feature_names, scaler.mean, scaler.std, model.weights):
        lines.append(f"feature={name} {r(float(mu))} {r(float(sd))} {r(float(w))}")
    return "\n".join(lines) + "\n"


def parse_model(text):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != MODEL_MAGIC:
        raise ValidationError("not a model file")
    head = {}
    settings = {}
    names, means, stds, weights = [], [], [], []
    for ln in lines[1:]:
        key, _, value = ln.partition("=")
        if key == "feature":
            name, mu, sd, w = value.split()
            names.append(name)
            means.append(float(mu))
            stds.append(float(sd))
            weights.append(float(w))
        elif key.startswith("setting."):
            settings[key[len("setting."):]] = value
        else:
            head[key] = value
    try:
        return LinearModel(weights=np.array(weights), bias=float(head["bias"]),
                           C=float(head["C"]), feature_names=names,
                           scaler=Scaler(np.array(means), np.array(stds)),
                           seed=int(head["seed"]), settings=settings)
    except KeyError as exc:
        raise ValidationError(f"model file lacks {exc.args[0]!r}") from None
