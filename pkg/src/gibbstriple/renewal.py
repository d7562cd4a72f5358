"""Cylinder counting functions and their renewal asymptotics.

Upsilon_x(t) counts the words y inside [x] whose cylinder mass exceeds t;
Xi_x(t) sums those masses.  As t shrinks, t * Upsilon stays inside a
two-sided positive band and Xi(e^-r) grows linearly in r with slope
mass([x]) / entropy; both are checked by exact pruned traversal of the
cylinder tree.  The same machinery evaluates the preimage-counting sums
behind those asymptotics and a seeded Monte-Carlo surrogate of the
law-of-large-numbers renewal statement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import sft, tree
from .errors import BudgetExceeded, Inadmissible, ThresholdOutOfRange
from .sft import Word
from .thermo import ThermoSolution


@dataclass(frozen=True)
class CountingProfile:
    """Exact (Upsilon, Xi) values on a decreasing threshold grid."""

    restriction: Word
    thresholds: tuple[float, ...]
    upsilon: tuple[int, ...]
    xi: tuple[float, ...]

    def rows(self) -> list[tuple[float, int, float, float]]:
        return [
            (t, u, x, t * u)
            for t, u, x in zip(self.thresholds, self.upsilon, self.xi)
        ]


def count_profile(
    solution: ThermoSolution,
    restriction: Sequence[int],
    thresholds: Sequence[float],
    which: str = "nu",
    budget: int = tree.DEFAULT_NODE_BUDGET,
) -> CountingProfile:
    """Upsilon and Xi on a whole grid of thresholds in one pruned traversal."""
    x = sft.require_admissible(solution.spec, restriction)
    ts = sorted(set(float(t) for t in thresholds))
    if not ts:
        raise ThresholdOutOfRange("no thresholds given")
    if ts[-1] >= 1.0 or ts[0] <= 0.0:
        raise ThresholdOutOfRange(f"thresholds must lie in (0, 1), got range [{ts[0]}, {ts[-1]}]")
    grid = np.array(ts)  # increasing
    g = len(ts)
    hist_counts = np.zeros(g + 1, dtype=np.int64)
    hist_masses = np.zeros(g + 1)
    for masses, _ in tree.subtree_nodes(solution, x, ts[0], which, budget):
        # idx = number of grid thresholds strictly below the node mass
        idx = np.searchsorted(grid, masses, side="left")
        hist_counts += np.bincount(idx, minlength=g + 1)
        hist_masses += np.bincount(idx, weights=masses, minlength=g + 1)
    # Upsilon(grid[j]) counts nodes whose idx exceeds j.
    suffix_counts = hist_counts[::-1].cumsum()[::-1]
    suffix_masses = hist_masses[::-1].cumsum()[::-1]
    ups_inc = suffix_counts[1:]
    xi_inc = suffix_masses[1:]
    order = slice(None, None, -1)  # report with thresholds decreasing
    return CountingProfile(
        x,
        tuple(grid[order]),
        tuple(int(u) for u in ups_inc[order]),
        tuple(float(v) for v in xi_inc[order]),
    )


def count_cylinders(
    solution: ThermoSolution,
    restriction: Sequence[int],
    t: float,
    which: str = "nu",
    budget: int = tree.DEFAULT_NODE_BUDGET,
) -> tuple[int, float]:
    """(Upsilon_x(t), Xi_x(t)): exact count and mass of cylinders with mass > t."""
    profile = count_profile(solution, restriction, [t], which, budget)
    return profile.upsilon[0], profile.xi[0]


@dataclass(frozen=True)
class ComparabilityBand:
    c1: float
    c2: float
    profile: CountingProfile

    @property
    def ratio(self) -> float:
        return self.c2 / self.c1


def upsilon_comparability(
    solution: ThermoSolution,
    restriction: Sequence[int],
    t_grid: Sequence[float],
    which: str = "nu",
    budget: int = tree.DEFAULT_NODE_BUDGET,
) -> ComparabilityBand:
    """Empirical two-sided band (c1, c2) for t * Upsilon_x(t) over the grid tail.

    The tail is the smaller half of the thresholds.  Both band edges are
    reported; finiteness and positivity are the claim under test, the ratio
    c2/c1 is diagnostic only.
    """
    ts = sorted(set(float(t) for t in t_grid), reverse=True)
    if len(ts) < 4:
        raise ThresholdOutOfRange("need at least 4 thresholds")
    if ts[0] / ts[-1] < 1e4:
        raise ThresholdOutOfRange("grid should span at least four decades")
    profile = count_profile(solution, restriction, ts, which, budget)
    tail = [(t, u) for t, u in zip(profile.thresholds, profile.upsilon) if t <= ts[len(ts) // 2]]
    values = [t * u for t, u in tail]
    c1, c2 = min(values), max(values)
    if not (0.0 < c1 <= c2 < np.inf):
        raise BudgetExceeded(f"comparability band degenerate: [{c1}, {c2}]")
    return ComparabilityBand(c1, c2, profile)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    reference: float
    relative_error: float
    rows: tuple[tuple[float, float], ...]  # (r, Xi(e^-r))


def xi_slope(
    solution: ThermoSolution,
    restriction: Sequence[int],
    r_grid: Sequence[float],
    which: str = "nu",
    budget: int = tree.DEFAULT_NODE_BUDGET,
) -> SlopeFit:
    """Least-squares slope of Xi_x(e^-r) against r over the tail of the grid.

    The reference slope is mass([x]) / entropy; the fit uses the upper half
    of the r values, where the asymptotic linear growth has set in.
    """
    rs = sorted(set(float(r) for r in r_grid))
    if len(rs) < 4 or rs[-1] < 12:
        raise ThresholdOutOfRange("r grid must have >= 4 points and reach at least 12")
    profile = count_profile(solution, restriction, [np.exp(-r) for r in rs], which, budget)
    # decreasing thresholds exp(-r) pair up with increasing r
    pairs = list(zip(rs, profile.xi))
    tail = [(r, v) for r, v in pairs if r >= rs[len(rs) // 2]]
    a = np.array([r for r, _ in tail])
    b = np.array([v for _, v in tail])
    slope, intercept = np.polyfit(a, b, 1)
    reference = solution.mass(restriction, which) / solution.entropy
    return SlopeFit(
        float(slope),
        float(intercept),
        float(reference),
        float(abs(slope - reference) / reference),
        tuple((float(r), float(v)) for r, v in pairs),
    )


# -- preimage counting sums ----------------------------------------------------


def lalley_sum(
    solution: ThermoSolution,
    anchor: Sequence[int],
    r: float,
    restriction: Sequence[int] = (),
    budget: int = tree.DEFAULT_NODE_BUDGET,
) -> tuple[float, float]:
    """Sum of chi_[x] over shift preimages of the anchored point at renewal depth r.

    Counts pairs (k, upsilon) with sigma^k(upsilon) = omega and
    S_k phit(upsilon) >= -r, where phit is the zero-pressure normalized
    potential (strictly nonpositive) and omega is the periodic extension of
    the anchor word; each counted preimage contributes chi_[x](upsilon).
    Because phit <= 0 the sum is finite and evaluated exactly by pruned
    depth-first search over prepended words.  Returns (value, exp(-r) * value).
    """
    spec = solution.spec
    x = sft.require_admissible(spec, restriction)
    anchor = sft.require_admissible(spec, anchor)
    if not anchor:
        raise Inadmissible("anchor word must be nonempty")
    rr = solution.r
    window = max(rr, len(x))
    reps = -(-(window + 1) // len(anchor))
    omega = (anchor * reps)[: window + 1]
    if not sft.is_admissible(spec, anchor + anchor[:1]):
        raise Inadmissible(f"periodic extension of anchor {anchor} is not admissible")

    phit = {w: v for w, v in solution.normalized_potential().values.items()}
    total = 0
    if r >= 0.0 and omega[: len(x)] == x:
        total += 1
    # state: first `window` symbols of the current preimage, Birkhoff sum so far
    stack = [(omega[:window], 0.0)]
    visited = 0
    while stack:
        state, s = stack.pop()
        for a in range(spec.alphabet_size, 0, -1):
            if not spec.allows(a, state[0]):
                continue
            term = phit[(a,) + state[:rr]]
            s_new = s + term
            if s_new < -r:
                continue
            visited += 1
            if visited > budget:
                raise BudgetExceeded(f"node budget {budget} exceeded")
            new_state = ((a,) + state)[:window]
            if new_state[: len(x)] == x:
                total += 1
            stack.append((new_state, s_new))
    return float(total), float(np.exp(-r) * total)


# -- Monte-Carlo surrogate of the renewal law -----------------------------------


@dataclass(frozen=True)
class RenewalSurrogate:
    mean: float
    reference: float
    relative_error: float
    n_samples: int
    seed: int


def krw_surrogate(
    solution: ThermoSolution,
    t: float,
    n_samples: int = 10_000,
    seed: int = 0,
) -> RenewalSurrogate:
    """Monte-Carlo mean of N_t / t for the stationary waiting times -phit.

    Trajectories are sampled from the induced Markov chain of the
    equilibrium measure started in its stationary law; N_t is the number of
    partial sums of -phit that stay below t.  The mean converges to the
    reciprocal of the mean waiting time, which equals 1 / entropy.
    """
    if t <= 0:
        raise ThresholdOutOfRange("t must be positive")
    rng = np.random.default_rng(seed)
    n_words = len(solution.words)
    alpha = np.diff(solution.child_offsets)
    width = int(alpha.max())
    cum_rows = np.ones((n_words, width))
    edge_rows = np.zeros((n_words, width), dtype=np.int64)
    for u in range(n_words):
        lo, hi = solution.child_offsets[u], solution.child_offsets[u + 1]
        cum_rows[u, : hi - lo] = np.cumsum(solution.q_nu[lo:hi])
        cum_rows[u, hi - lo - 1] = 1.0 + 1e-12
        edge_rows[u, : hi - lo] = np.arange(lo, hi)

    state = rng.choice(n_words, size=n_samples, p=solution.equilibrium_masses
                       / solution.equilibrium_masses.sum())
    cum = np.zeros(n_samples)
    count = np.zeros(n_samples, dtype=np.int64)
    alive = np.arange(n_samples)
    while alive.size:
        u = state[alive]
        draws = rng.random(alive.size)
        slots = (cum_rows[u] < draws[:, None]).sum(axis=1)
        edges = edge_rows[u, slots]
        cum[alive] += -solution.phi_tilde_edge[edges]
        state[alive] = solution.child_index[edges]
        still = cum[alive] <= t
        count[alive[still]] += 1
        alive = alive[still]
    mean = float(np.mean(count / t))
    reference = 1.0 / solution.entropy
    return RenewalSurrogate(mean, reference, abs(mean - reference) / reference, n_samples, seed)
