"""Fixed-template solution trees.

Every solution is a full m-ary tree of depth D flattened into a slot array
of length l = (m^(D+1) - 1) / (m - 1) in pre-order: slot index 1 is the
root, index 2 the left-most child of the root, and index l the right-most
leaf. Public slot indices (here, in family-of-subsets masks, and in
``children_indices``) are 1-based to match that convention; the underlying
``slots`` list and boolean masks are ordinary 0-based Python/numpy
containers, so slot i lives at ``slots[i - 1]``.

A slot holding a function of arity a feeds only on its left-most a
children; every other slot below it is an intron: populated, inherited and
mutated like any other slot, but without influence on the tree's output.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .expressions import ExprNode, format_expression
from .mutation import init_sigma
from .symbols import Constant, Feature, FunctionSpec, NodeSymbol

MAX_SLOTS = 1 << 20


def template_size(depth: int, max_arity: int) -> int:
    """Number of slots in a full ``max_arity``-ary tree of depth ``depth``."""
    if depth < 0 or max_arity < 1:
        raise ConfigError(f"invalid template shape: depth={depth}, max_arity={max_arity}")
    if max_arity == 1:
        size = depth + 1
    else:
        size = (max_arity ** (depth + 1) - 1) // (max_arity - 1)
    if size > MAX_SLOTS:
        raise ConfigError(f"template of depth {depth}, arity {max_arity} has {size} slots (max {MAX_SLOTS})")
    return size


def children_indices(i: int, depth_of_i: int, depth: int, max_arity: int) -> list[int]:
    """Pre-order child slot indices (1-based) of slot ``i`` at ``depth_of_i``.

    Child k sits at ``i + 1 + (k - 1) * s`` where s is the size of one
    subtree rooted one level below ``i``. Leaf-level slots have no children.
    """
    if depth_of_i >= depth:
        return []
    sub = template_size(depth - depth_of_i - 1, max_arity)
    return [i + 1 + k * sub for k in range(max_arity)]


class TreeShape:
    """Precomputed navigation tables for one (depth, max_arity) template."""

    def __init__(self, depth: int, max_arity: int):
        self.depth = depth
        self.max_arity = max_arity
        self.size = template_size(depth, max_arity)
        depths = np.zeros(self.size, dtype=np.int32)
        children: list[tuple[int, ...]] = [()] * self.size
        stack = [(0, 0)]
        while stack:
            pos, d = stack.pop()
            depths[pos] = d
            if d < depth:
                kids = tuple(j - 1 for j in children_indices(pos + 1, d, depth, max_arity))
                children[pos] = kids
                stack.extend((k, d + 1) for k in kids)
        self.depths = depths
        self.children = tuple(children)


@lru_cache(maxsize=None)
def tree_shape(depth: int, max_arity: int) -> TreeShape:
    return TreeShape(depth, max_arity)


@dataclass
class SolutionTree:
    """A full template tree: slot array plus cached fitness.

    ``slots`` always has every position populated, introns included, so
    donating any index set between trees is well defined.
    """

    depth: int
    max_arity: int
    slots: list[NodeSymbol]
    fitness: Optional["FitnessInfo"] = None  # noqa: F821 - evaluation.FitnessInfo

    @property
    def size(self) -> int:
        return len(self.slots)

    @property
    def shape(self) -> TreeShape:
        return tree_shape(self.depth, self.max_arity)

    def copy(self) -> "SolutionTree":
        """Independent slot array; symbols are immutable and shared."""
        return SolutionTree(self.depth, self.max_arity, list(self.slots), self.fitness)


def compute_active_mask(tree: SolutionTree) -> np.ndarray:
    """Boolean mask over slots: True where the slot feeds the root's output.

    The root is always active; an interior slot is active iff it is one of
    the left-most ``arity`` children of an active function slot.
    """
    shape = tree.shape
    mask = np.zeros(shape.size, dtype=bool)
    stack = [0]
    while stack:
        pos = stack.pop()
        mask[pos] = True
        sym = tree.slots[pos]
        if isinstance(sym, FunctionSpec):
            stack.extend(shape.children[pos][: sym.arity])
    return mask


def random_tree(
    mode: str,
    rng: np.random.Generator,
    functions: Sequence[FunctionSpec],
    n_features: int,
    coeff_scale: float,
    depth: int,
    max_arity: int | None = None,
    gamma: float = 0.1,
    epsilon: float = 1e-16,
) -> SolutionTree:
    """Draw a tree with every slot populated, introns included.

    ``mode="full"`` places a function in every slot above the leaf level;
    ``mode="grow"`` draws function vs. terminal with probability 1/2 there.
    Leaf-level slots are always terminals. A terminal is uniform over the
    ``n_features`` features plus one constant option; constant values are
    ``coeff_scale * U(-5, +5)`` with the step size drawn by
    :func:`~gpgomea.mutation.init_sigma`.
    """
    if mode not in ("full", "grow"):
        raise ConfigError(f"unknown initialization mode {mode!r}")
    if not functions:
        raise ConfigError("function set must be non-empty")
    if coeff_scale < 0:
        raise ConfigError("coeff_scale must be >= 0")
    m = max_arity if max_arity is not None else max(f.arity for f in functions)
    if any(f.arity > m for f in functions):
        raise ConfigError("a function exceeds the template's maximal arity")
    shape = tree_shape(depth, m)
    functions = list(functions)
    slots: list[NodeSymbol] = []
    for pos in range(shape.size):
        at_max_depth = shape.depths[pos] == depth
        as_function = not at_max_depth and (mode == "full" or rng.random() < 0.5)
        if as_function:
            slots.append(functions[rng.integers(len(functions))])
        else:
            k = rng.integers(n_features + 1)
            if k < n_features:
                slots.append(Feature(int(k)))
            else:
                value = coeff_scale * rng.uniform(-5.0, 5.0)
                slots.append(Constant(value, init_sigma(rng, gamma, epsilon)))
    return SolutionTree(depth, m, slots)


def active_expr_node(tree: SolutionTree) -> ExprNode:
    """The active subtree as a plain expression AST."""
    shape = tree.shape

    def build(pos: int) -> ExprNode:
        sym = tree.slots[pos]
        if isinstance(sym, FunctionSpec):
            kids = shape.children[pos][: sym.arity]
            return ExprNode(sym, tuple(build(k) for k in kids))
        return ExprNode(sym)

    return build(0)


def to_expression_string(tree: SolutionTree) -> str:
    """Infix rendering of the active subtree; intron slots never appear.

    Constants print via ``repr`` so the text parses back to the exact
    same float values.
    """
    return format_expression(active_expr_node(tree))
