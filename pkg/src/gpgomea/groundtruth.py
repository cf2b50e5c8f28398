"""Numeric ground-truth recovery proxy and synthetic dataset generation.

Whether a candidate "re-discovered" a known equation is decided
numerically: sample the truth's domain, fit the affine scaling of the
candidate onto the truth outputs, and require near-perfect agreement
(R^2 >= 0.999 by default) together with a size guard (candidate at most
twice the truth's node count) that rejects bloated interpolators. The test
is invariant under affine transforms of the candidate by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import DataMatrix
from .errors import ConfigError
from .evaluation import linear_scale
from .expressions import (
    ExprNode,
    count_nodes,
    evaluate,
    n_features_referenced,
    parse_expression,
)
from .trees import SolutionTree, active_expr_node


@dataclass(frozen=True)
class GroundTruthSpec:
    """A known data-generating equation plus its sampling domain."""

    expression: str
    domain: tuple[tuple[float, float], ...]
    n_probe: int = 1024
    _parsed: ExprNode = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        parsed = parse_expression(self.expression)
        if n_features_referenced(parsed) > len(self.domain):
            raise ConfigError(
                f"expression uses feature x{n_features_referenced(parsed)} but the "
                f"domain covers only {len(self.domain)} feature(s)"
            )
        if self.n_probe < 2:
            raise ConfigError("n_probe must be >= 2")
        for lo, hi in self.domain:
            if not lo < hi:
                raise ConfigError(f"empty domain interval ({lo}, {hi})")
        object.__setattr__(self, "_parsed", parsed)

    @property
    def parsed(self) -> ExprNode:
        return self._parsed

    @property
    def node_count(self) -> int:
        return count_nodes(self._parsed)


def sample_domain(spec: GroundTruthSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    cols = [rng.uniform(lo, hi, size=n) for lo, hi in spec.domain]
    return np.column_stack(cols)


def _as_expr(candidate) -> ExprNode:
    if isinstance(candidate, ExprNode):
        return candidate
    if isinstance(candidate, SolutionTree):
        return active_expr_node(candidate)
    return parse_expression(candidate)


def numeric_ground_truth_match(
    candidate,
    truth: GroundTruthSpec,
    rng: np.random.Generator,
    r2_threshold: float = 0.999,
    size_factor: float = 2.0,
) -> bool:
    """Affine-invariant equivalence proxy on a fresh probe sample.

    ``candidate`` may be an expression string, a template tree, or an
    already parsed AST. Returns False when the candidate misbehaves
    (non-finite outputs on more than 1% of probes, or features beyond the
    truth's domain) rather than raising.
    """
    try:
        expr = _as_expr(candidate)
    except ValueError:
        return False
    if n_features_referenced(expr) > len(truth.domain):
        return False
    if count_nodes(expr) > size_factor * truth.node_count:
        return False
    X = sample_domain(truth, truth.n_probe, rng)
    target = evaluate(truth.parsed, X)
    values = evaluate(expr, X)
    finite = np.isfinite(values)
    if (~finite).mean() > 0.01:
        return False
    values, target = values[finite], target[finite]
    a, b = linear_scale(values, target)
    residual = a + b * values - target
    ss_res = float(residual @ residual)
    centered = target - target.mean()
    ss_tot = float(centered @ centered)
    if ss_tot <= 1e-30:
        return ss_res <= 1e-30
    return 1.0 - ss_res / ss_tot >= r2_threshold


def generate_dataset(
    truth: GroundTruthSpec,
    n: int,
    rng: np.random.Generator,
    snr: float | None = None,
) -> DataMatrix:
    """Sample the truth's domain; optionally add Gaussian target noise with
    the given signal-to-noise ratio (noise variance = var(y) / snr)."""
    X = sample_domain(truth, n, rng)
    y = evaluate(truth.parsed, X)
    if not np.isfinite(y).all():
        raise ConfigError("truth expression produced non-finite values on its domain")
    if snr is not None:
        if snr <= 0:
            raise ConfigError(f"snr must be > 0, got {snr}")
        noise_sd = float(np.sqrt(y.var() / snr))
        y = y + rng.normal(0.0, noise_sd, size=n)
    names = tuple(f"x{j + 1}" for j in range(len(truth.domain)))
    return DataMatrix(X=X, y=y, feature_names=names)
