"""The generational loop: batch refresh, fitness re-stamping, linkage
learning, mixing, replacement, elitist tracking, and budget termination.

Every generation draws a fresh batch and re-evaluates the whole population
on it, so all accept/reject comparisons inside mixing share one batch
stamp. The elitist is tracked on the full training set (batch MSE is
noisy): one extra evaluation per generation for the generation's best
member, charged to the budget like everything else. The run stops once the
budget is spent; the overshoot is bounded by one re-stamp sweep plus one
elitist evaluation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import BatchSampler, DataMatrix, coefficient_scale
from .errors import ConfigError
from .evaluation import (
    FULLSET_STAMP,
    Batch,
    EvalBudget,
    FitnessInfo,
    evaluate_fitness,
    predict,
)
from .linkage import FOS, build_fos
from .mutation import CoeffMutConfig, TemperatureState, update_temperature
from .symbols import DEFAULT_FUNCTIONS, FunctionSpec, max_arity
from .trees import SolutionTree, random_tree, to_expression_string
from .variation import GomTrace, gom

# Spawn keys for the independent rng streams derived from one seed.
_STREAM_INIT = 0
_STREAM_BATCH = 1
_STREAM_GOM = 2
STREAM_SPLIT = 3


@dataclass
class RunConfig:
    """Everything a single run needs besides the data."""

    population_size: int = 1000
    depth: int = 4
    budget: int = 1_000_000
    batch_size: int = 256
    seed: int = 0
    functions: tuple[FunctionSpec, ...] = DEFAULT_FUNCTIONS
    coeffmut: CoeffMutConfig = field(default_factory=CoeffMutConfig)
    threads: int = 1
    collect_traces: bool = False

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError(f"population_size must be >= 2, got {self.population_size}")
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if self.budget < 0:
            raise ConfigError(f"budget must be >= 0, got {self.budget}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if not self.functions:
            raise ConfigError("function set must be non-empty")


@dataclass
class GenerationStats:
    generation: int
    best_mse: float
    mean_mse: float
    tau: float
    evaluations: int


@dataclass
class RunReport:
    """Outcome of one run; per-generation rows mirror the stats CSV."""

    best_expression: str
    best_train_mse_fullset: float
    test_mse: Optional[float]
    test_r2: Optional[float]
    evaluations_used: int
    generations: int
    per_generation_stats: list[GenerationStats]

    def to_json_dict(self) -> dict:
        return {
            "best_expression": self.best_expression,
            "best_train_mse_fullset": _json_float(self.best_train_mse_fullset),
            "test_mse": _json_float(self.test_mse),
            "test_r2": _json_float(self.test_r2),
            "evaluations_used": int(self.evaluations_used),
            "generations": int(self.generations),
            "per_generation_stats": [
                {
                    "generation": int(s.generation),
                    "best_mse": _json_float(s.best_mse),
                    "mean_mse": _json_float(s.mean_mse),
                    "tau": _json_float(s.tau),
                    "evaluations": int(s.evaluations),
                }
                for s in self.per_generation_stats
            ],
        }


def _json_float(x) -> Optional[float]:
    # JSON has no Infinity/NaN; non-finite values serialize as null.
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


@dataclass
class EngineState:
    config: RunConfig
    data: DataMatrix
    population: list[SolutionTree]
    budget: EvalBudget
    temp_state: TemperatureState
    sampler: BatchSampler
    generation: int = 0
    elitist: Optional[SolutionTree] = None
    elitist_fitness: Optional[FitnessInfo] = None
    stats: list[GenerationStats] = field(default_factory=list)
    last_fos: Optional[FOS] = None
    last_traces: Optional[list[GomTrace]] = None


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def initialize_population(
    config: RunConfig, data: DataMatrix, rng: np.random.Generator
) -> list[SolutionTree]:
    """Half-and-half initialization; odd sizes round toward grow."""
    scale = coefficient_scale(data)
    m = max_arity(config.functions)
    n_full = config.population_size // 2
    population = []
    for i in range(config.population_size):
        mode = "full" if i < n_full else "grow"
        population.append(
            random_tree(
                mode,
                rng,
                config.functions,
                data.d,
                scale,
                config.depth,
                m,
                gamma=config.coeffmut.gamma,
                epsilon=config.coeffmut.epsilon,
            )
        )
    return population


def new_state(config: RunConfig, data: DataMatrix) -> EngineState:
    init_rng = _stream(config.seed, _STREAM_INIT)
    return EngineState(
        config=config,
        data=data,
        population=initialize_population(config, data, init_rng),
        budget=EvalBudget(limit=config.budget),
        temp_state=TemperatureState.for_config(config.coeffmut),
        sampler=BatchSampler(config.batch_size, _stream(config.seed, _STREAM_BATCH)),
    )


def run_generation(state: EngineState) -> EngineState:
    """One full generation: resample, re-stamp, build FOS, mix every member,
    replace the population, refresh the elitist and the temperature."""
    config = state.config
    state.generation += 1
    gen = state.generation
    idx = state.sampler.resample(state.data.n, gen)
    batch = Batch(state.data.X[idx], state.data.y[idx], gen)

    # Fresh batch, fresh stamps: the re-stamp sweep always completes so
    # every comparison this generation is well defined.
    for member in state.population:
        member.fitness = evaluate_fitness(member, batch, state.budget)

    fos = build_fos(state.population)
    state.last_fos = fos

    parents = state.population

    def make_offspring(i: int) -> tuple[SolutionTree, GomTrace]:
        rng = _stream(config.seed, _STREAM_GOM, gen, i)
        return gom(
            parents[i],
            fos,
            parents,
            batch,
            state.budget,
            config.coeffmut,
            state.temp_state,
            rng,
        )

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(make_offspring, range(len(parents))))
    else:
        results = [make_offspring(i) for i in range(len(parents))]
    state.population = [tree for tree, _ in results]
    if config.collect_traces:
        state.last_traces = [trace for _, trace in results]

    best_idx = min(
        range(len(state.population)), key=lambda i: state.population[i].fitness.mse
    )
    full_batch = Batch(state.data.X, state.data.y, FULLSET_STAMP)
    best_full = evaluate_fitness(state.population[best_idx], full_batch, state.budget)
    improved = state.elitist_fitness is None or best_full.mse < state.elitist_fitness.mse
    if improved:
        state.elitist = state.population[best_idx].copy()
        state.elitist_fitness = best_full
    update_temperature(state.temp_state, improved, config.coeffmut)

    batch_mses = np.array([t.fitness.mse for t in state.population])
    finite = batch_mses[np.isfinite(batch_mses)]
    state.stats.append(
        GenerationStats(
            generation=gen,
            best_mse=float(batch_mses.min()),
            mean_mse=float(finite.mean()) if finite.size else float("inf"),
            tau=state.temp_state.tau_current,
            evaluations=state.budget.used,
        )
    )
    return state


def run(
    config: RunConfig, data: DataMatrix, test_data: Optional[DataMatrix] = None
) -> RunReport:
    """Loop generations until the budget is spent, then report the best-ever
    individual by full-training-set MSE.

    Single-threaded runs are bit-deterministic for identical (config, seed).
    A zero budget still runs one generation's bookkeeping (re-stamp plus
    elitist evaluation) so the report reflects the initial population.
    """
    state = new_state(config, data)
    while True:
        run_generation(state)
        if state.budget.exhausted:
            break
    return finalize_report(state, test_data)


def finalize_report(state: EngineState, test_data: Optional[DataMatrix] = None) -> RunReport:
    tree = state.elitist
    fit = state.elitist_fitness
    test_mse: Optional[float] = None
    test_r2: Optional[float] = None
    if test_data is not None:
        test_mse, test_r2 = scaled_test_metrics(tree, fit, test_data)
    return RunReport(
        best_expression=to_expression_string(tree),
        best_train_mse_fullset=fit.mse,
        test_mse=test_mse,
        test_r2=test_r2,
        evaluations_used=state.budget.used,
        generations=state.generation,
        per_generation_stats=list(state.stats),
    )


def scaled_test_metrics(
    tree: SolutionTree, fit: FitnessInfo, test_data: DataMatrix
) -> tuple[float, float]:
    """Held-out MSE and R^2 using the training-set scaling coefficients."""
    pred = predict(tree, test_data.X)
    if not np.isfinite(pred).all():
        return float("inf"), float("-inf")
    residual = fit.scale_a + fit.scale_b * pred - test_data.y
    mse = float(residual @ residual) / test_data.n
    centered = test_data.y - test_data.y.mean()
    ss_tot = float(centered @ centered)
    if ss_tot <= 1e-30:
        r2 = 1.0 if mse <= 1e-30 else 0.0
    else:
        r2 = 1.0 - (mse * test_data.n) / ss_tot
    if not np.isfinite(mse):
        return float("inf"), float("-inf")
    return mse, r2
