"""Tree execution over data batches, linear scaling, and MSE fitness.

Fitness is the mean squared error of ``a + b * f(X)`` against the targets,
with (a, b) the least-squares affine fit recomputed per evaluation. Any
non-finite prediction or error collapses to the worst-sentinel (+inf),
which orders worse than every finite value. One ``evaluate_fitness`` call
costs exactly one budget tick regardless of batch size.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .symbols import Constant, Feature
from .trees import SolutionTree

WORST_MSE = float("inf")

# Stamp for evaluations on the full training set (elitist bookkeeping),
# distinct from every per-generation batch stamp.
FULLSET_STAMP = -1


@dataclass(frozen=True)
class Batch:
    """A row view of the training data with its generation stamp."""

    X: np.ndarray
    y: np.ndarray
    stamp: int

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class FitnessInfo:
    """MSE plus the linear-scaling coefficients behind it."""

    mse: float
    scale_a: float
    scale_b: float
    batch_id: int

    @property
    def is_worst(self) -> bool:
        return self.mse == WORST_MSE


@dataclass
class EvalBudget:
    """Monotone evaluation counter; safe under concurrent ticking."""

    limit: int
    used: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def tick(self) -> None:
        with self._lock:
            self.used += 1

    @property
    def exhausted(self) -> bool:
        return self.used >= self.limit


def predict(tree: SolutionTree, X: np.ndarray) -> np.ndarray:
    """Evaluate the active subtree bottom-up over the rows of X.

    Protected semantics: division guards denominators below 1e-12 in
    magnitude (sign-preserving), log takes log(|x| + 1e-12), sqrt takes
    sqrt(|x|). Non-finite outputs are not masked here; the fitness layer
    maps them to the worst-sentinel.
    """
    slots = tree.slots
    children = tree.shape.children

    def ev(pos: int):
        sym = slots[pos]
        arity = sym.arity
        if arity == 0:
            if type(sym) is Feature:
                return X[:, sym.index]
            return sym.c
        kids = children[pos]
        if arity == 1:
            return sym.kernel(ev(kids[0]))
        if arity == 2:
            return sym.kernel(ev(kids[0]), ev(kids[1]))
        return sym.kernel(*(ev(k) for k in kids[:arity]))

    with np.errstate(all="ignore"):
        out = ev(0)
    if np.ndim(out) == 0:
        return np.full(X.shape[0], float(out))
    return out


def linear_scale(f: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares (a, b) minimizing mean((a + b*f - y)^2).

    Degenerate f (variance below 1e-30) falls back to the mean predictor
    (a, b) = (mean(y), 0).
    """
    f_mean = f.mean()
    y_mean = y.mean()
    f_centered = f - f_mean
    denom = f_centered @ f_centered
    if not denom > 1e-30:
        return float(y_mean), 0.0
    b = (f_centered @ (y - y_mean)) / denom
    return float(y_mean - b * f_mean), float(b)


def evaluate_fitness(tree: SolutionTree, batch: Batch, budget: EvalBudget) -> FitnessInfo:
    """One budget tick; MSE of the linearly scaled predictions on the batch."""
    budget.tick()
    pred = predict(tree, batch.X)
    if not np.isfinite(pred).all():
        return FitnessInfo(WORST_MSE, 0.0, 0.0, batch.stamp)
    a, b = linear_scale(pred, batch.y)
    residual = a + b * pred - batch.y
    mse = float(residual @ residual) / batch.n
    if not np.isfinite(mse):
        return FitnessInfo(WORST_MSE, 0.0, 0.0, batch.stamp)
    return FitnessInfo(mse, a, b, batch.stamp)


def is_better_or_equal(f1: FitnessInfo, f2: FitnessInfo) -> bool:
    """True iff f1 is at least as good as f2 (minimization; ties accepted).

    Both values must carry the same batch stamp: batches change every
    generation, so cross-batch comparisons are meaningless.
    """
    assert f1.batch_id == f2.batch_id, (
        f"fitness comparison across batches: {f1.batch_id} vs {f2.batch_id}"
    )
    return f1.mse <= f2.mse


def evaluate_on(tree: SolutionTree, X: np.ndarray, y: np.ndarray, stamp: int = FULLSET_STAMP,
                budget: EvalBudget | None = None) -> FitnessInfo:
    """Convenience wrapper: evaluate on an explicit (X, y) pair.

    With ``budget=None`` no tick is charged; used for reporting-only
    evaluations (test-set metrics) that are not part of the search.
    """
    batch = Batch(X, y, stamp)
    if budget is not None:
        return evaluate_fitness(tree, batch, budget)
    silent = EvalBudget(limit=1)
    return evaluate_fitness(tree, batch, silent)
