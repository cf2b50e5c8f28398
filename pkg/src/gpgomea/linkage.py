"""Linkage learning: positional symbolization, pairwise normalized mutual
information, and hierarchical clustering into the linkage-tree family of
subsets.

Each slot position is treated as a categorical random variable with the
population as its sample. Constants collapse to one shared token (their
values are continuous and per-node distinct, so value-level statistics
would be degenerate); functions and features keep distinct tokens. The
linkage tree is built by average-linkage (UPGMA) agglomeration on the NMI
matrix and emits every cluster except the full slot set: exactly 2l - 2
subsets, all 1-based.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .symbols import Constant, Feature, FunctionSpec
from .trees import SolutionTree

FOS = list  # list[frozenset[int]]; subsets of 1-based slot indices


def symbolize_population(population: Sequence[SolutionTree]) -> np.ndarray:
    """N x l integer token matrix; introns are columns like any other."""
    if not population:
        raise ValueError("cannot symbolize an empty population")
    size = population[0].size
    token_ids: dict = {}
    tokens = np.empty((len(population), size), dtype=np.int64)
    for row, tree in enumerate(population):
        if tree.size != size:
            raise ValueError("population members do not share one template")
        for col, sym in enumerate(tree.slots):
            if isinstance(sym, Constant):
                key = "CONST"
            elif isinstance(sym, Feature):
                key = ("X", sym.index)
            else:
                key = ("F", sym.id)
            tid = token_ids.get(key)
            if tid is None:
                tid = len(token_ids)
                token_ids[key] = tid
            tokens[row, col] = tid
    return tokens


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def pairwise_nmi(tokens: np.ndarray) -> np.ndarray:
    """Plug-in mutual information of column pairs, normalized by their
    joint entropy; 1 by convention when the joint entropy is zero."""
    n, size = tokens.shape
    if n < 2:
        raise ValueError("need at least two population members")
    codes = []
    n_codes = []
    entropies = []
    for col in range(size):
        _, inv, counts = np.unique(tokens[:, col], return_inverse=True, return_counts=True)
        codes.append(inv.astype(np.int64))
        n_codes.append(len(counts))
        entropies.append(_entropy(counts, n))
    nmi = np.ones((size, size), dtype=np.float64)
    for i in range(size):
        for j in range(i + 1, size):
            joint_counts = np.bincount(codes[i] * n_codes[j] + codes[j], minlength=n_codes[i] * n_codes[j])
            h_joint = _entropy(joint_counts, n)
            if h_joint <= 0.0:
                value = 1.0
            else:
                mi = entropies[i] + entropies[j] - h_joint
                value = min(max(mi, 0.0) / h_joint, 1.0)
            nmi[i, j] = value
            nmi[j, i] = value
    return nmi


def build_linkage_tree(nmi: np.ndarray, rng: Optional[np.random.Generator] = None) -> FOS:
    """Agglomerate slots by maximal average inter-cluster NMI (UPGMA).

    Ties break toward the smallest (min-index) cluster pair, so the result
    is a deterministic function of the matrix; ``rng`` is accepted for
    interface symmetry but unused (subset order is shuffled during mixing,
    not here). Emits singletons then merges in creation order, omitting the
    final full set: 2l - 2 subsets for l >= 2.
    """
    size = nmi.shape[0]
    if size == 1:
        return [frozenset({1})]
    total = 2 * size - 1
    sim = np.full((total, total), -1.0)
    sim[:size, :size] = nmi
    np.fill_diagonal(sim, -1.0)
    members: list[frozenset[int]] = [frozenset({i + 1}) for i in range(size)]
    sizes = np.zeros(total, dtype=np.int64)
    sizes[:size] = 1
    alive = np.zeros(total, dtype=bool)
    alive[:size] = True
    upper = np.triu(np.ones((total, total), dtype=bool), k=1)
    fos: FOS = list(members)
    for step in range(size - 1):
        new = size + step
        # Row-major argmax over live upper-triangle entries: smallest
        # (i, j) wins ties.
        live = upper & alive[:, None] & alive[None, :]
        masked = np.where(live, sim, -1.0)
        flat = int(np.argmax(masked))
        a, b = divmod(flat, total)
        merged = members[a] | members[b]
        members.append(merged)
        # UPGMA update: member-pair average of the two merged clusters.
        wa, wb = sizes[a], sizes[b]
        combined = (wa * sim[a] + wb * sim[b]) / (wa + wb)
        sim[new, :] = combined
        sim[:, new] = combined
        sim[new, new] = -1.0
        sizes[new] = wa + wb
        alive[a] = alive[b] = False
        alive[new] = True
        if len(merged) < size:
            fos.append(merged)
    return fos


def build_fos(population: Sequence[SolutionTree], rng: Optional[np.random.Generator] = None) -> FOS:
    """Symbolize, measure NMI, and cluster: the per-generation default FOS."""
    return build_linkage_tree(pairwise_nmi(symbolize_population(population)), rng)
