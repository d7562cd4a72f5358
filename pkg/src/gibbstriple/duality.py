"""Commutator-norm distances between states and the transport comparison.

A level-k state is a probability vector over k-cylinders, understood as a
measure with locally constant density.  The distance between two states is
the supremum of |p(a) - q(a)| over real locally constant a whose commutator
with the Dirac operator has norm at most one.  For level-k functions that
commutator is exactly a finite matrix on the span of the k-cylinder
characteristics (it vanishes on every deeper Haar vector), so feasibility
is decidable, every feasible a certifies a lower bound, and projected
subgradient ascent with seeded restarts searches for the best certificate.

The optimal-transport distance on the cylinder tree (dyadic or
measure-ultrametric costs) is computed in closed form for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import sft
from .errors import LevelMismatch, NotNormalized, ShapeMismatch
from .sft import Word
from .spectral import DiracModel
from .thermo import ThermoSolution


@dataclass(frozen=True)
class State:
    """Finitely supported state: nonnegative weights on level-k cylinders summing to one."""

    level: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = self.weights
        if (w < -1e-12).any():
            raise ShapeMismatch("state weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ShapeMismatch(f"state weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)


def state_from_weights(spec, level: int, weights) -> State:
    words = sft.enumerate_cylinders(spec, level)
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(words),):
        raise ShapeMismatch(f"expected {len(words)} weights for level {level}, got {w.shape}")
    return State(level, w)


def point_state(spec, word: Sequence[int]) -> State:
    """Unit mass on one cylinder (the level equals the word length)."""
    word = sft.require_admissible(spec, word)
    words = sft.enumerate_cylinders(spec, len(word))
    w = np.zeros(len(words))
    w[words.index(word)] = 1.0
    return State(len(word), w)


def measure_state(solution: ThermoSolution, level: int, which: str = "nu") -> State:
    words = sft.enumerate_cylinders(solution.spec, level)
    w = np.array([solution.mass(x, which) for x in words])
    return State(level, w / w.sum())


def lift_state(model: DiracModel, state: State, level: int) -> State:
    """Represent a state at a deeper level, spreading mass by measure conditionals."""
    if level < state.level:
        raise LevelMismatch(f"cannot lift level {state.level} state down to {level}")
    if level == state.level:
        return state
    spec = model.spec
    coarse = {w: x for w, x in zip(sft.enumerate_cylinders(spec, state.level), state.weights)}
    words = sft.enumerate_cylinders(spec, level)
    out = np.empty(len(words))
    for i, w in enumerate(words):
        head = w[: state.level]
        out[i] = coarse[head] * model.mass(w) / model.mass(head)
    return State(level, out / out.sum())


# -- commutator norm -----------------------------------------------------------


class CommutatorFrame:
    """Cached finite-block data for commutators of level-k functions.

    The commutator of the Dirac operator with multiplication by a level-k
    function maps the span of the k-cylinder characteristics to itself and
    kills its orthogonal complement, so its operator norm is the spectral
    norm of an n x n matrix, n = card of the level-k words.
    """

    def __init__(self, model: DiracModel, level: int):
        if level < 1:
            raise ShapeMismatch("level must be >= 1")
        self.model = model
        self.level = level
        plan = model.plan
        labels, b, words = plan.value_matrix(level)
        self.words = words
        self.basis_values = b
        self.masses = np.array([model.mass(w) for w in words])
        n = len(labels)
        d = np.zeros((n, n))
        l = model.spec.alphabet_size
        d[:l, :l] = model.root_block
        for i, (word, j) in enumerate(labels):
            if j > 0:
                d[i, i] = (sft.alpha(model.spec, word) - 1) / model.mass(word)
        self.dirac = d

    def check(self, a_values) -> np.ndarray:
        a = np.asarray(a_values, dtype=float)
        if a.shape != (len(self.words),):
            raise ShapeMismatch(f"expected {len(self.words)} values for level {self.level}")
        return a

    def commutator(self, a_values) -> np.ndarray:
        a = self.check(a_values)
        b = self.basis_values
        a_h = (b * (self.masses * a)) @ b.T
        return self.dirac @ a_h - a_h @ self.dirac

    def norm(self, a_values) -> float:
        return float(np.linalg.svd(self.commutator(a_values), compute_uv=False)[0])

    def norm_and_gradient(self, a_values) -> tuple[float, np.ndarray]:
        a = self.check(a_values)
        u, s, vt = np.linalg.svd(self.commutator(a))
        u1, v1 = u[:, 0], vt[0]
        b, d = self.basis_values, self.dirac
        bu, bv = b.T @ u1, b.T @ v1
        bdu, bdv = b.T @ (d @ u1), b.T @ (d @ v1)
        grad = self.masses * (bdu * bv - bu * bdv)
        return float(s[0]), grad


def commutator_norm(model: DiracModel, a_values, level: int) -> float:
    """Exact operator norm of the commutator of D with a level-``level`` function."""
    return CommutatorFrame(model, level).norm(a_values)


# -- distance optimization -----------------------------------------------------


@dataclass(frozen=True)
class LipschitzCertificate:
    """A feasible function witnessing a lower bound for the state distance."""

    level: int
    function: np.ndarray
    commutator_norm: float
    objective: float


@dataclass(frozen=True)
class ConnesDistanceResult:
    distance: float
    certificate: LipschitzCertificate
    restarts: int
    iterations: int
    max_centered_supnorm: float  # largest sup-norm deviation from the mean over all iterates


def connes_distance(
    model: DiracModel,
    p: State,
    q: State,
    level: int | None = None,
    restarts: int = 32,
    iterations: int = 1000,
    seed: int = 0,
    warm_start: LipschitzCertificate | None = None,
) -> ConnesDistanceResult:
    """Certified-from-below distance between two states.

    Maximizes (p(a) - q(a)) / ||[D, pi(a)]|| over non-constant level-k
    functions by projected subgradient ascent with seeded restarts; every
    iterate is rescaled to commutator norm one, so each is feasible and the
    best objective found is a valid lower bound.  Passing the previous
    level's certificate as ``warm_start`` makes the result monotone in k.
    """
    if level is None:
        level = max(p.level, q.level)
    p_k = lift_state(model, p, level)
    q_k = lift_state(model, q, level)
    c = p_k.weights - q_k.weights
    frame = CommutatorFrame(model, level)
    masses = frame.masses

    zero = LipschitzCertificate(level, np.zeros(c.size), 0.0, 0.0)
    if np.abs(c).max() == 0.0:
        return ConnesDistanceResult(0.0, zero, 0, 0, 0.0)
    # |p(a) - q(a)| is symmetric in (p, q); canonicalizing the sign of the
    # objective direction makes the two computations bit-identical.
    nonzero = np.nonzero(c)[0][0]
    if c[nonzero] < 0:
        c = -c

    rng = np.random.default_rng(seed)
    best = zero
    max_centered = 0.0
    total_iters = 0

    starts: list[np.ndarray] = [c.copy()]
    if warm_start is not None and warm_start.objective > 0.0:
        lifted = np.empty(c.size)
        coarse_words = sft.enumerate_cylinders(model.spec, warm_start.level)
        coarse = {w: v for w, v in zip(coarse_words, warm_start.function)}
        for i, w in enumerate(frame.words):
            lifted[i] = coarse[w[: warm_start.level]]
        starts.append(lifted)
    while len(starts) < restarts:
        starts.append(rng.standard_normal(c.size))

    for a0 in starts:
        a = a0 - float(masses @ a0)
        norm = frame.norm(a)
        if norm < 1e-14:
            continue
        a = a / norm
        for it in range(1, iterations + 1):
            total_iters += 1
            objective = float(c @ a)
            centered = a - float(masses @ a)
            max_centered = max(max_centered, float(np.abs(centered).max()))
            if abs(objective) > best.objective:
                best = LipschitzCertificate(level, a.copy(), 1.0, abs(objective))
            norm, grad = frame.norm_and_gradient(a)
            direction = c - objective * grad
            step = 1.0 / np.sqrt(it)
            a = a + step * direction if objective >= 0 else a - step * direction
            norm = frame.norm(a)
            if norm < 1e-14:
                break
            a = a / norm
    if best.objective > 0.0:
        # re-evaluate the certificate norm exactly so stored data are consistent
        exact_norm = frame.norm(best.function)
        best = LipschitzCertificate(level, best.function, exact_norm,
                                    abs(float(c @ best.function)))
    return ConnesDistanceResult(
        best.objective / max(best.commutator_norm, 1e-300) if best.objective else 0.0,
        best, len(starts), total_iters, max_centered,
    )


# -- explicit norm bound from the solved constants -------------------------------


@dataclass(frozen=True)
class ProofConstants:
    c_prime: float
    diameter_bound: float


def proof_constants(solution: ThermoSolution) -> ProofConstants:
    """Explicit constants bounding feasible functions in sup norm.

    C' = sqrt(l) * c * exp(gamma/2) and the bound is
    2 sqrt(l) + C' / (1 - exp(beta/2)), finite only when beta < 0 strictly,
    i.e. when the normalized potential has no zero values (no forced
    transitions).
    """
    if solution.beta >= -1e-12:
        raise NotNormalized(
            "normalized potential is not strictly negative (forced transitions); no finite bound"
        )
    l = solution.spec.alphabet_size
    c_prime = np.sqrt(l) * solution.gibbs_c * np.exp(solution.gamma / 2.0)
    bound = 2.0 * np.sqrt(l) + c_prime / (1.0 - np.exp(solution.beta / 2.0))
    return ProofConstants(float(c_prime), float(bound))


# -- optimal transport on the cylinder tree --------------------------------------


def monge_kantorovich(
    solution: ThermoSolution,
    p: State,
    q: State,
    metric: str = "dyadic",
    which: str = "nu",
) -> float:
    """Exact transport distance between two level-k states under an ultrametric.

    Costs: ``dyadic`` pays 2^-n to move between cylinders splitting at depth
    n; ``gibbs`` pays the measure of the deepest common cylinder.  On an
    ultrametric tree the optimum matches surpluses as deep as possible, so
    the distance is a weighted sum of |p([y]) - q([y])| with weights equal
    to the diameter drop from parent to child, points inside one level-k
    cylinder being at distance zero.
    """
    if p.level != q.level:
        raise LevelMismatch(f"states at levels {p.level} != {q.level}")
    if metric not in ("dyadic", "gibbs"):
        raise ValueError(f"metric must be 'dyadic' or 'gibbs', got {metric!r}")
    k = p.level
    spec = solution.spec

    def diameter(word: Word) -> float:
        if metric == "dyadic":
            return 2.0 ** -len(word)
        return solution.mass(word, which)

    words = sft.enumerate_cylinders(spec, k)
    delta = {w: pw - qw for w, pw, qw in zip(words, p.weights, q.weights)}
    total = 0.0
    for m in range(k, 0, -1):
        coarser: dict[Word, float] = {}
        for w, d in delta.items():
            coarser[w[:-1]] = coarser.get(w[:-1], 0.0) + d
            drop = diameter(w[:-1]) - (diameter(w) if m < k else 0.0)
            total += drop * abs(d)
        delta = coarser
    return 0.5 * total


# -- weak-* topology report -------------------------------------------------------


@dataclass(frozen=True)
class WeakStarReport:
    rows: tuple[tuple[int, float], ...]  # (sequence index, distance lower bound)
    monotone_decreasing: bool
    final: float


def weak_star_consistency(
    model: DiracModel,
    states: Sequence[State],
    limit: State,
    level: int,
    restarts: int = 8,
    iterations: int = 200,
    seed: int = 0,
) -> WeakStarReport:
    """Distance lower bounds along a state sequence against its limit.

    Reported, not asserted: the optimizer only certifies from below, so the
    rows show the trend (shrinking for converging sequences, bounded below
    for separated ones).
    """
    rows = []
    for i, s in enumerate(states):
        res = connes_distance(model, s, limit, level, restarts, iterations, seed)
        rows.append((i, res.distance))
    values = [v for _, v in rows]
    monotone = all(values[i + 1] <= values[i] + 1e-12 for i in range(len(values) - 1))
    return WeakStarReport(tuple(rows), monotone, values[-1] if values else 0.0)
