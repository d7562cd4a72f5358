"""Vectorized traversal of the cylinder tree with mass-monotone pruning.

Cylinder masses are nonincreasing along branches, so a subtree whose root
mass is below the threshold can be discarded wholesale.  The traversal is
level-synchronous: levels below the potential range are walked explicitly
(their words are not suffix-indexed), after which each level is a pair of
numpy arrays (suffix index, mass) expanded through the precomputed edge
tables of the solution.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from . import sft
from .errors import BudgetExceeded
from .sft import Word
from .thermo import ThermoSolution

DEFAULT_NODE_BUDGET = 10_000_000


def subtree_nodes(
    solution: ThermoSolution,
    root: Sequence[int],
    t_min: float,
    which: str = "nu",
    budget: int = DEFAULT_NODE_BUDGET,
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (masses, alphas) batches over all words y containing root with mass > t_min.

    Visits every admissible word ``y`` with ``root`` as a prefix, ``len(y) >= 1``
    (the root itself included when nonempty) and cylinder mass strictly above
    ``t_min``.  Batches arrive level by level; ``alphas`` are children counts.
    """
    root = sft.require_admissible(solution.spec, root)
    if not 0.0 <= t_min < 1.0:
        raise ValueError(f"t_min must be in [0, 1), got {t_min}")
    spec, r = solution.spec, solution.r
    alpha_of = np.diff(solution.child_offsets)
    q = solution.q_nu if which == "nu" else solution.q_mu
    visited = 0

    # Explicit walk through the levels whose words are shorter than r.
    frontier_words: list[tuple[Word, float]] = [(root, solution.mass(root, which))]
    while frontier_words and len(frontier_words[0][0]) < r:
        level = [(w, m) for w, m in frontier_words if m > t_min]
        if level and level[0][0]:
            visited += len(level)
            if visited > budget:
                raise BudgetExceeded(f"node budget {budget} exceeded")
            masses = np.array([m for _, m in level])
            alphas = np.array([sft.alpha(spec, w) for w, _ in level])
            yield masses, alphas
        frontier_words = [
            (w + (b,), m)
            for w, m in level
            for b, m in zip(*solution.children_masses(w, which))
        ]

    if not frontier_words:
        return
    u_idx = np.array([solution.word_index[w[-r:]] for w, _ in frontier_words], dtype=np.int64)
    mass = np.array([m for _, m in frontier_words])
    keep = mass > t_min
    u_idx, mass = u_idx[keep], mass[keep]

    while u_idx.size:
        visited += u_idx.size
        if visited > budget:
            raise BudgetExceeded(f"node budget {budget} exceeded")
        yield mass, alpha_of[u_idx]

        counts = alpha_of[u_idx]
        starts = solution.child_offsets[u_idx]
        total = int(counts.sum())
        pos = np.repeat(starts, counts) + np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        new_u = solution.child_index[pos]
        new_mass = np.repeat(mass, counts) * q[pos]
        keep = new_mass > t_min
        u_idx, mass = new_u[keep], new_mass[keep]
