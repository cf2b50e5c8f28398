"""Coefficient mutation: update rules, application procedure, and the
temperature decay/patience controller.

Two update rules are supported. The ES-like rule perturbs a constant with
its own self-adapted step size sigma and then updates sigma itself; the
temperature rule perturbs with standard deviation |c| * tau, where tau is
shared by all constants and optionally decays after a patience-length stall
of the best-ever solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .errors import ConfigError
from .symbols import Constant


class Strategy(Enum):
    """When, and how many times, coefficient mutation is applied per
    offspring during mixing."""

    NEVER = "never"
    AFTER_ONCE = "after1"
    AFTER_FOS_SIZE = "afterfos"
    BETWEEN = "between"
    WITHIN = "within"


class MutationType(Enum):
    ES_LIKE = "es"
    TEMPERATURE = "temp"


@dataclass
class CoeffMutConfig:
    """Full coefficient-mutation configuration surface."""

    strategy: Strategy = Strategy.NEVER
    probability: float = 0.9
    mut_type: MutationType = MutationType.TEMPERATURE
    tau: float = 0.1
    gamma: float = 0.1
    epsilon: float = 1e-16
    decay: Optional[float] = None
    patience: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ConfigError(f"probability must be in [0, 1], got {self.probability}")
        if self.tau <= 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.decay is not None and not 0.0 < self.decay < 1.0:
            raise ConfigError(f"decay must be in (0, 1), got {self.decay}")
        if self.patience is not None and self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")


@dataclass
class TemperatureState:
    """Shared temperature plus the stall counter driving its decay."""

    tau_initial: float
    tau_current: float
    stall_counter: int = 0
    n_decays: int = 0

    @classmethod
    def for_config(cls, config: CoeffMutConfig) -> "TemperatureState":
        return cls(tau_initial=config.tau, tau_current=config.tau)


def init_sigma(rng: np.random.Generator, gamma: float = 0.1, epsilon: float = 1e-16) -> float:
    """Initial step size: max(exp(N(0, gamma^2)), epsilon)."""
    return max(math.exp(gamma * rng.standard_normal()), epsilon)


def es_mutate(
    c: float,
    sigma: float,
    rng: np.random.Generator,
    gamma: float = 0.1,
    epsilon: float = 1e-16,
) -> tuple[float, float]:
    """Self-adaptive update: c' = N(c, sigma^2), then
    sigma' = max(sigma * exp(N(0, gamma^2)), epsilon). Independent draws,
    value first."""
    c_new = c + sigma * rng.standard_normal()
    sigma_new = max(sigma * math.exp(gamma * rng.standard_normal()), epsilon)
    return c_new, sigma_new


def temp_mutate(c: float, tau_current: float, rng: np.random.Generator) -> float:
    """Temperature update: c' = N(c, (c * tau)^2). Zero is a fixed point:
    a constant at exactly 0 never moves under this rule."""
    return c + (c * tau_current) * rng.standard_normal()


def apply_coefficient_mutation(
    tree,
    config: CoeffMutConfig,
    temp_state: TemperatureState,
    rng: np.random.Generator,
    restrict_to: Optional[Iterable[int]] = None,
) -> bool:
    """Flip a probability-biased coin per constant slot and mutate winners
    in place.

    ``restrict_to`` (1-based slot indices) limits eligibility to the given
    subset; otherwise every constant slot is eligible, introns included.
    Returns True iff at least one value changed.
    """
    if restrict_to is None:
        positions = range(len(tree.slots))
    else:
        positions = [i - 1 for i in sorted(restrict_to)]
    p = config.probability
    changed = False
    for pos in positions:
        sym = tree.slots[pos]
        if not isinstance(sym, Constant):
            continue
        if p <= 0.0 or rng.random() >= p:
            continue
        if config.mut_type is MutationType.ES_LIKE:
            c_new, sigma_new = es_mutate(sym.c, sym.sigma, rng, config.gamma, config.epsilon)
            tree.slots[pos] = Constant(c_new, sigma_new)
            changed = changed or c_new != sym.c
        else:
            c_new = temp_mutate(sym.c, temp_state.tau_current, rng)
            tree.slots[pos] = Constant(c_new, sym.sigma)
            changed = changed or c_new != sym.c
    return changed


def update_temperature(
    temp_state: TemperatureState, elitist_improved: bool, config: CoeffMutConfig
) -> TemperatureState:
    """Advance the stall counter once per generation; multiply tau by the
    decay factor each time the counter reaches the patience limit. No-op
    when decay or patience is unset."""
    if config.decay is None or config.patience is None:
        return temp_state
    if elitist_improved:
        temp_state.stall_counter = 0
        return temp_state
    temp_state.stall_counter += 1
    if temp_state.stall_counter >= config.patience:
        temp_state.tau_current *= config.decay
        temp_state.n_decays += 1
        temp_state.stall_counter = 0
    return temp_state
