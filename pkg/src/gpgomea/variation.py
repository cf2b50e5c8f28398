"""Gene-pool optimal mixing: subset-wise donation with accept/reject
gating, meaningful-change skipping, and the coefficient-mutation insertion
points.

Per offspring, the parent is cloned (slots and fitness) and the family of
subsets is walked in a fresh random order. Each step copies the subset's
slots from a uniformly drawn donor and keeps the change iff fitness does
not worsen on the current batch. Changes that cannot alter the computed
function (identical symbols, or edits confined to intron slots) are kept
without spending an evaluation.

Strategy insertion points: WITHIN mutates constants among the just-copied
subset slots before the step's assessment (no extra evaluations); BETWEEN
applies coefficient mutation to the whole offspring after every step, each
application assessed; AFTER_ONCE / AFTER_FOS_SIZE apply it 1 / |FOS| times
after the subset walk, each application assessed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .evaluation import Batch, EvalBudget, evaluate_fitness, is_better_or_equal
from .linkage import FOS
from .mutation import CoeffMutConfig, Strategy, TemperatureState, apply_coefficient_mutation
from .symbols import symbols_equal
from .trees import SolutionTree, compute_active_mask


@dataclass
class GomTrace:
    """Per-offspring accounting of one mixing pass."""

    steps_attempted: int = 0
    evaluations_spent: int = 0
    mutation_evaluations: int = 0
    accepted_steps: int = 0
    fitness_trajectory: list = field(default_factory=list)
    subset_order: Optional[list] = None


def inherit_nodes_by_subset(
    offspring: SolutionTree, donor: SolutionTree, subset: Iterable[int]
) -> SolutionTree:
    """A copy of ``offspring`` with the subset's slots (1-based) replaced by
    full copies of the donor's, step sizes included."""
    candidate = offspring.copy()
    for i in subset:
        candidate.slots[i - 1] = donor.slots[i - 1]
    return candidate


def no_meaningful_change(
    before: SolutionTree, after: SolutionTree, subset: Optional[Iterable[int]] = None
) -> bool:
    """True iff every changed slot is symbol-identical or an intron of
    ``after``; such edits cannot alter predictions, so evaluation is skipped.

    ``subset`` narrows the scan to the slots a step could have touched;
    None compares the whole template.
    """
    positions = range(len(before.slots)) if subset is None else [i - 1 for i in subset]
    changed = [
        pos for pos in positions if not symbols_equal(before.slots[pos], after.slots[pos])
    ]
    if not changed:
        return True
    mask = compute_active_mask(after)
    return not any(mask[pos] for pos in changed)


def assess_changes_and_return_best(
    candidate: SolutionTree,
    incumbent: SolutionTree,
    batch: Batch,
    budget: EvalBudget,
    subset: Optional[Iterable[int]] = None,
    trace: Optional[GomTrace] = None,
    mutation_eval: bool = False,
) -> SolutionTree:
    """Keep the candidate iff it cannot be worse.

    Non-meaningful changes ride along with the incumbent's fitness for
    free. Meaningful ones cost one evaluation (checked against the budget
    first) and are kept on equal-or-better batch MSE.
    """
    if no_meaningful_change(incumbent, candidate, subset):
        candidate.fitness = incumbent.fitness
        if trace is not None:
            trace.accepted_steps += 1
        return candidate
    if budget.exhausted:
        return incumbent
    fitness = evaluate_fitness(candidate, batch, budget)
    if trace is not None:
        trace.evaluations_spent += 1
        if mutation_eval:
            trace.mutation_evaluations += 1
    if is_better_or_equal(fitness, incumbent.fitness):
        candidate.fitness = fitness
        if trace is not None:
            trace.accepted_steps += 1
        return candidate
    return incumbent


def gom(
    parent: SolutionTree,
    fos: FOS,
    population: Sequence[SolutionTree],
    batch: Batch,
    budget: EvalBudget,
    coeffmut: CoeffMutConfig,
    temp_state: TemperatureState,
    rng: np.random.Generator,
    keep_order: bool = False,
) -> tuple[SolutionTree, GomTrace]:
    """One full mixing pass; returns the offspring and its trace.

    The parent must carry a fitness stamped with the current batch. Budget
    checks happen before each evaluation; on exhaustion no change is rolled
    back, the pass just stops attempting further steps.
    """
    offspring = parent.copy()
    trace = GomTrace(fitness_trajectory=[parent.fitness.mse])
    order = rng.permutation(len(fos))
    if keep_order:
        trace.subset_order = [int(k) for k in order]
    strategy = coeffmut.strategy

    def mutate_whole_and_assess(current: SolutionTree) -> SolutionTree:
        candidate = current.copy()
        if not apply_coefficient_mutation(candidate, coeffmut, temp_state, rng):
            trace.fitness_trajectory.append(current.fitness.mse)
            return current
        best = assess_changes_and_return_best(
            candidate, current, batch, budget, trace=trace, mutation_eval=True
        )
        trace.fitness_trajectory.append(best.fitness.mse)
        return best

    for k in order:
        if budget.exhausted:
            break
        subset = fos[k]
        trace.steps_attempted += 1
        donor = population[rng.integers(len(population))]
        candidate = inherit_nodes_by_subset(offspring, donor, subset)
        if strategy is Strategy.WITHIN:
            apply_coefficient_mutation(candidate, coeffmut, temp_state, rng, restrict_to=subset)
        offspring = assess_changes_and_return_best(
            candidate, offspring, batch, budget, subset=subset, trace=trace
        )
        trace.fitness_trajectory.append(offspring.fitness.mse)
        if strategy is Strategy.BETWEEN:
            offspring = mutate_whole_and_assess(offspring)

    if strategy in (Strategy.AFTER_ONCE, Strategy.AFTER_FOS_SIZE):
        n_applications = 1 if strategy is Strategy.AFTER_ONCE else len(fos)
        for _ in range(n_applications):
            if budget.exhausted:
                break
            offspring = mutate_whole_and_assess(offspring)

    return offspring, trace
