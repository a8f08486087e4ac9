"""Linear output layer: ridge regression, thresholding, blocked cross-validation.

The readout solves w = argmin ||y - Q v||^2 + alpha ||v||^2 through the normal
equations with a Cholesky factorization (eigendecomposition fallback). An
optional constant column models an intercept; with it disabled the fit is the
literal regularized least-squares above. Cross-validation uses contiguous
folds with a guard band masked at fold boundaries so reservoir memory cannot
leak between train and test blocks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

DEFAULT_ALPHA = 0.1
DEFAULT_GUARD = 10


class RankWarning(UserWarning):
    """Unregularized fit on a rank-deficient state matrix."""


@dataclass
class ReadoutModel:
    weights: np.ndarray
    bias: float = 0.0
    threshold: float | None = None
    alpha: float = DEFAULT_ALPHA
    use_bias: bool = True


@dataclass(frozen=True)
class FoldPlan:
    """Contiguous fold assignment with guard-masked boundary symbols.

    ``assignments[n]`` is the fold of symbol n; guard-masked symbols carry
    ``mask[n] = False`` and belong to neither train nor test sets.
    """

    n_folds: int
    assignments: np.ndarray
    mask: np.ndarray
    guard: int

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero((self.assignments == fold) & self.mask)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero((self.assignments != fold) & self.mask)


def build_fold_plan(n_rows: int, n_folds: int = 5, guard: int = DEFAULT_GUARD) -> FoldPlan:
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    if n_rows < n_folds:
        raise ValueError(f"cannot split {n_rows} rows into {n_folds} folds")
    if guard < 0:
        raise ValueError("guard must be >= 0")
    bounds = np.linspace(0, n_rows, n_folds + 1).astype(int)
    assignments = np.empty(n_rows, dtype=int)
    mask = np.ones(n_rows, dtype=bool)
    for f in range(n_folds):
        assignments[bounds[f] : bounds[f + 1]] = f
        if f > 0:
            # symbols right after an internal boundary still carry memory of
            # the previous block; drop them from every set
            mask[bounds[f] : min(bounds[f] + guard, n_rows)] = False
    return FoldPlan(n_folds=n_folds, assignments=assignments, mask=mask, guard=guard)


def _design(Q: np.ndarray, use_bias: bool) -> np.ndarray:
    if use_bias:
        return np.hstack([Q, np.ones((Q.shape[0], 1))])
    return Q


def ridge_fit(Q: np.ndarray, y: np.ndarray, alpha: float = DEFAULT_ALPHA, use_bias: bool = True) -> ReadoutModel:
    """Solve the ridge problem on the (optionally bias-extended) state matrix.

    alpha = 0 falls back to the minimum-norm least-squares solution and emits a
    RankWarning when Q is rank deficient.
    """
    Q = np.asarray(Q, dtype=float)
    y = np.asarray(y, dtype=float)
    if Q.ndim != 2:
        raise ValueError("Q must be 2-D")
    if len(y) != Q.shape[0]:
        raise ValueError(f"{Q.shape[0]} state rows but {len(y)} targets")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    X = _design(Q, use_bias)
    n_park = X.shape[1]
    if alpha == 0.0:
        w, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
        if rank < n_park:
            warnings.warn(
                f"rank-deficient state matrix (rank {rank} < {n_park}); returning minimum-norm solution",
                RankWarning,
            )
    else:
        gram = X.T @ X + alpha * np.eye(n_park)
        rhs = X.T @ y
        try:
            cho = scipy.linalg.cho_factor(gram, check_finite=False)
            w = scipy.linalg.cho_solve(cho, rhs, check_finite=False)
        except scipy.linalg.LinAlgError:
            # nearly singular gram despite regularization; eigendecomposition
            # stays stable there
            evals, evecs = np.linalg.eigh(X.T @ X)
            w = evecs @ ((evecs.T @ rhs) / (evals + alpha))
    if use_bias:
        return ReadoutModel(weights=w[:-1], bias=float(w[-1]), alpha=alpha, use_bias=True)
    return ReadoutModel(weights=w, bias=0.0, alpha=alpha, use_bias=False)


def predict(model: ReadoutModel, Q: np.ndarray) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != len(model.weights):
        raise ValueError(f"state matrix has {Q.shape[1] if Q.ndim == 2 else '?'} columns, model expects {len(model.weights)}")
    return Q @ model.weights + model.bias


def threshold_decide(a: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    return np.asarray(a, dtype=float) >= threshold


def optimal_threshold(a_train: np.ndarray, y_train: np.ndarray) -> float:
    """Threshold minimizing the training BER, scanned over output midpoints."""
    a_train = np.asarray(a_train, dtype=float)
    y_train = np.asarray(y_train).astype(bool)
    order = np.argsort(a_train)
    a_sorted = a_train[order]
    y_sorted = y_train[order]
    candidates = [a_sorted[0] - 1.0]
    candidates.extend(0.5 * (a_sorted[:-1] + a_sorted[1:]))
    candidates.append(a_sorted[-1] + 1.0)
    # errors(theta) = #(y=1 below theta) + #(y=0 at/above theta); sweep via cumsums
    ones_below = np.concatenate([[0], np.cumsum(y_sorted)])
    zeros_at_or_above = np.concatenate([np.cumsum((~y_sorted)[::-1])[::-1], [0]])
    errors = ones_below + zeros_at_or_above
    return float(candidates[int(np.argmin(errors))])


def ridge_objective(Q: np.ndarray, y: np.ndarray, w: np.ndarray, alpha: float) -> float:
    resid = y - Q @ w
    return float(resid @ resid + alpha * (w @ w))


@dataclass
class CVResult:
    per_fold: np.ndarray
    mean: float
    pooled_outputs: np.ndarray
    pooled_mask: np.ndarray
    models: list = field(default_factory=list)


def cross_validate(
    Q: np.ndarray,
    y: np.ndarray,
    plan: FoldPlan,
    alpha: float = DEFAULT_ALPHA,
    metric=None,
    valid: np.ndarray | None = None,
    use_bias: bool = True,
) -> CVResult:
    """Blocked cross-validation: fit on the other folds, score each test fold.

    ``metric(a_test, y_test, a_train, y_train)`` computes the per-fold score;
    any threshold selection must happen inside the metric and may only use the
    training arguments. ``valid`` marks rows with defined targets (warm-in
    positions of windowed tasks are excluded everywhere).
    """
    Q = np.asarray(Q, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(plan.assignments) != Q.shape[0]:
        raise ValueError("fold plan does not cover the state matrix")
    if valid is None:
        valid = ~np.isnan(y)
    if metric is None:
        metric = rmse_metric
    n_cols = Q.shape[1] + (1 if use_bias else 0)
    per_fold = np.empty(plan.n_folds)
    pooled = np.full(Q.shape[0], np.nan)
    pooled_mask = np.zeros(Q.shape[0], dtype=bool)
    models = []
    for f in range(plan.n_folds):
        train = plan.train_rows(f)
        test = plan.test_rows(f)
        train = train[valid[train]]
        test = test[valid[test]]
        if len(train) < n_cols:
            warnings.warn(f"fold {f}: only {len(train)} training rows for {n_cols} weights", UserWarning)
        model = ridge_fit(Q[train], y[train], alpha=alpha, use_bias=use_bias)
        a_train = predict(model, Q[train])
        a_test = predict(model, Q[test])
        per_fold[f] = metric(a_test, y[test], a_train, y[train])
        pooled[test] = a_test
        pooled_mask[test] = True
        models.append(model)
    return CVResult(
        per_fold=per_fold,
        mean=float(np.mean(per_fold)),
        pooled_outputs=pooled,
        pooled_mask=pooled_mask,
        models=models,
    )


def rmse_metric(a_test, y_test, a_train, y_train) -> float:
    return float(np.sqrt(np.mean((np.asarray(a_test) - np.asarray(y_test)) ** 2)))


def ber_metric(threshold: str | float = 0.5):
    """BER metric factory. threshold: a number, or 'optimal' for a train scan."""

    def _metric(a_test, y_test, a_train, y_train) -> float:
        if threshold == "optimal":
            theta = optimal_threshold(a_train, y_train)
        else:
            theta = float(threshold)
        decisions = threshold_decide(a_test, theta)
        return float(np.mean(decisions != np.asarray(y_test).astype(bool)))

    return _metric


def export_weights_csv(model: ReadoutModel, node_ids, path) -> None:
    """Weights as ``node_id,weight`` rows behind a metadata comment line."""
    node_ids = list(node_ids)
    if len(node_ids) != len(model.weights):
        raise ValueError("node id count does not match weight count")
    lines = [
        f"# alpha={model.alpha!r} threshold={model.threshold!r} bias={model.bias!r}",
        "node_id,weight",
    ]
    lines.extend(f"{nid},{w:.17g}" for nid, w in zip(node_ids, model.weights))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
