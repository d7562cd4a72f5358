"""Transfer operator, pressure, Gibbs and equilibrium measures.

Potentials are finite-range locally constant: a range-r potential assigns
one real value to every admissible r-word.  On that class the transfer
operator is an exact finite matrix acting on r-cylinder functions, the
leading eigendata give pressure, eigenfunction and eigenmeasure, and every
deeper cylinder mass follows from an exact Markov extension rule.  Nothing
here is truncated; the only approximation is the power-iteration residual.

Conventions
-----------
* Functions on r-cylinders are numpy arrays aligned with
  ``sft.enumerate_cylinders(spec, r)`` (lexicographic order).
* ``(L f)(w) = sum_a exp(phi(a w_1..w_{r-1})) f(a w_1..w_{r-1})`` over the
  admissible prepended symbols ``a``; the operator preserves the space of
  r-cylinder functions exactly.
* The eigenmeasure mu and the equilibrium measure nu both extend below
  level r by row-normalized transition ratios, so children masses sum to
  their parent's mass to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import sft
from .errors import (
    ComputeError,
    Inadmissible,
    NoConvergence,
    NonNegativeValue,
    ShapeMismatch,
)
from .sft import SubshiftSpec, Word

DEFAULT_TOL = 1e-13
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class Potential:
    """Finite-range potential: one value (natural log scale) per admissible range-word."""

    range: int
    values: Mapping[Word, float]

    def __call__(self, word: Sequence[int]) -> float:
        return self.values[tuple(word)]


def make_potential(spec: SubshiftSpec, range_: int, values: Mapping[Sequence[int], float]) -> Potential:
    """Validate and freeze a potential given as a word -> value mapping.

    Every admissible range-word must be present with a finite value; extra or
    inadmissible words are rejected.
    """
    words = sft.enumerate_cylinders(spec, range_)
    table: dict[Word, float] = {}
    normalized = {tuple(w): float(v) for w, v in values.items()}
    for w in words:
        if w not in normalized:
            raise ShapeMismatch(f"potential is missing admissible word {w}")
        v = normalized.pop(w)
        if not np.isfinite(v):
            raise ShapeMismatch(f"potential value for {w} is not finite")
        table[w] = v
    if normalized:
        raise ShapeMismatch(f"potential has values for unexpected words: {sorted(normalized)}")
    return Potential(range_, table)


def constant_potential(spec: SubshiftSpec, value: float) -> Potential:
    return make_potential(spec, 1, {(a,): value for a in spec.symbols})


def scaled_potential(potential: Potential, t: float) -> Potential:
    return Potential(potential.range, {w: t * v for w, v in potential.values.items()})


def potential_array(spec: SubshiftSpec, potential: Potential) -> np.ndarray:
    """Potential values aligned with the lexicographic range-word enumeration."""
    words = sft.enumerate_cylinders(spec, potential.range)
    if set(words) != set(potential.values):
        raise ShapeMismatch("potential words do not match the admissible set for this spec")
    return np.array([potential.values[w] for w in words], dtype=float)


def transfer_matrix(spec: SubshiftSpec, potential: Potential) -> tuple[list[Word], np.ndarray]:
    """Dense matrix of the transfer operator on r-cylinder functions.

    ``M[c, u] = exp(phi(u))`` whenever the r-word ``c`` can follow ``u`` under
    the shift, i.e. ``u[1:] == c[:-1]`` with the final transition allowed.
    """
    r = potential.range
    words = sft.enumerate_cylinders(spec, r)
    index = {w: i for i, w in enumerate(words)}
    phi = potential_array(spec, potential)
    n = len(words)
    mat = np.zeros((n, n))
    for u_idx, u in enumerate(words):
        weight = np.exp(phi[u_idx])
        for b in sft.children(spec, u):
            c_idx = index[u[1:] + (b,)]
            mat[c_idx, u_idx] = weight
    return words, mat


def transfer_apply(spec: SubshiftSpec, potential: Potential, f: np.ndarray) -> np.ndarray:
    """Apply the transfer operator to an r-cylinder function (array form)."""
    words, mat = transfer_matrix(spec, potential)
    f = np.asarray(f, dtype=float)
    if f.shape != (len(words),):
        raise ShapeMismatch(f"expected {len(words)} values (one per r-word), got shape {f.shape}")
    return mat @ f


def _power_iteration(mat: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray, float]:
    """Leading eigenvalue/eigenvector of a nonnegative primitive matrix.

    Returns (eigenvalue, L1-normalized positive eigenvector, residual) where
    the residual is ``max |M v - lam v| / lam``.
    """
    n = mat.shape[0]
    v = np.full(n, 1.0 / n)
    lam = 1.0
    for _ in range(max_iter):
        w = mat @ v
        lam = w.sum()
        w /= lam
        if np.max(np.abs(w - v)) <= tol:
            v = w
            resid = float(np.max(np.abs(mat @ v - lam * v)) / lam)
            return float(lam), v, resid
        v = w
    raise NoConvergence(f"power iteration did not reach tol={tol} in {max_iter} iterations")


class ThermoSolution:
    """Solved thermodynamic data for one (spec, potential) pair.

    Immutable after construction.  Holds pressure, eigenfunction h,
    eigenmeasure mu and equilibrium measure nu on r-cylinders, the
    normalized zero-pressure potential on (r+1)-words, Gibbs constants and
    the edge tables used to extend masses to arbitrary depth.
    """

    def __init__(self, spec: SubshiftSpec, potential: Potential, tol: float, max_iter: int):
        self.spec = spec
        self.potential = potential
        self.r = potential.range
        self.words: list[Word] = sft.enumerate_cylinders(spec, self.r)
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.phi = potential_array(spec, potential)

        _, mat = transfer_matrix(spec, potential)
        lam_h, h, resid_h = _power_iteration(mat, tol, max_iter)
        lam_m, m, _ = _power_iteration(mat.T, tol, max_iter)
        self.pressure = float(np.log(lam_h))
        resid_m = float(np.sum(np.abs(mat.T @ m - lam_h * m)) / lam_h)
        self.residual = max(resid_h, resid_m, abs(lam_h - lam_m) / lam_h)

        m = m / m.sum()
        h = h / float(h @ m)
        nu = h * m
        nu = nu / nu.sum()
        self.eigenfunction = h
        self.eigenmeasure = m
        self.equilibrium_masses = nu
        self.entropy = float(self.pressure - self.phi @ nu)

        self._build_edge_tables()
        self._build_prefix_masses()
        self._normalize_potential(tol)
        self.gibbs_c = self._estimate_gibbs_constant()

        for arr in (self.eigenfunction, self.eigenmeasure, self.equilibrium_masses,
                    self.q_nu, self.q_mu, self.phi_tilde_edge):
            arr.setflags(write=False)

    # -- edge tables -------------------------------------------------------

    def _build_edge_tables(self) -> None:
        """Flat CSR-style child tables on r-words.

        Edge e of word u appends symbol ``child_symbols[e]`` and lands on the
        r-word ``child_index[e]`` (the suffix window slides by one).  The
        transition ratios ``q_nu``/``q_mu`` are row-normalized so that the
        children of any cylinder sum exactly to their parent.
        """
        spec = self.spec
        offsets = [0]
        symbols: list[int] = []
        child_idx: list[int] = []
        for u in self.words:
            for b in sft.children(spec, u):
                symbols.append(b)
                child_idx.append(self.word_index[u[1:] + (b,)])
            offsets.append(len(symbols))
        self.child_offsets = np.array(offsets, dtype=np.int64)
        self.child_symbols = np.array(symbols, dtype=np.int64)
        self.child_index = np.array(child_idx, dtype=np.int64)
        self._edge_of = {
            (u_idx, int(self.child_symbols[e])): e
            for u_idx in range(len(self.words))
            for e in range(self.child_offsets[u_idx], self.child_offsets[u_idx + 1])
        }

    def _row_normalized(self, edge_mass: np.ndarray) -> np.ndarray:
        q = edge_mass.copy()
        for u_idx in range(len(self.words)):
            lo, hi = self.child_offsets[u_idx], self.child_offsets[u_idx + 1]
            q[lo:hi] /= q[lo:hi].sum()
        return q

    def _normalize_potential(self, tol: float) -> None:
        """Zero-pressure normalization phi~ = phi - P + log h - log h o sigma.

        phi~ lives on (r+1)-words, indexed here by edges (u, b).  Its values
        are <= 0, with equality exactly at forced transitions (words whose
        first symbol has a unique admissible predecessor); gamma = inf phi~
        and beta = (sup phi~)/2 are recorded.
        """
        log_h = np.log(self.eigenfunction)
        u_idx = np.repeat(np.arange(len(self.words)), np.diff(self.child_offsets))
        self.phi_tilde_edge = (
            self.phi[u_idx] - self.pressure + log_h[u_idx] - log_h[self.child_index]
        )
        if self.phi_tilde_edge.max() > 1e-8:
            raise NonNegativeValue(
                f"normalized potential has positive value {self.phi_tilde_edge.max():.3e}"
            )
        self.gamma = float(self.phi_tilde_edge.min())
        self.beta = float(self.phi_tilde_edge.max() / 2.0)

        # nu extends by nu(u.b) = exp(phi~(u.b)) nu(suffix(u.b)); mu extends by
        # mu(u.b) = exp(phi(u) - P) mu(suffix(u.b)).  Row-normalizing makes the
        # extension additive to machine precision (the defect is the
        # eigen-residual, already below tol).
        nu_edge = np.exp(self.phi_tilde_edge) * self.equilibrium_masses[self.child_index]
        mu_edge = np.exp(self.phi[u_idx] - self.pressure) * self.eigenmeasure[self.child_index]
        self.q_nu = self._row_normalized(nu_edge)
        self.q_mu = self._row_normalized(mu_edge)

    def _build_prefix_masses(self) -> None:
        """Aggregate r-cylinder masses up to every level 1..r-1."""
        self._prefix_mu: dict[Word, float] = {}
        self._prefix_nu: dict[Word, float] = {}
        for w, mu_w, nu_w in zip(self.words, self.eigenmeasure, self.equilibrium_masses):
            for k in range(1, self.r):
                self._prefix_mu[w[:k]] = self._prefix_mu.get(w[:k], 0.0) + mu_w
                self._prefix_nu[w[:k]] = self._prefix_nu.get(w[:k], 0.0) + nu_w

    # -- cylinder masses ----------------------------------------------------

    def _q(self, which: str) -> np.ndarray:
        if which == "nu":
            return self.q_nu
        if which == "mu":
            return self.q_mu
        raise ValueError(f"measure selector must be 'mu' or 'nu', got {which!r}")

    def masses_r(self, which: str = "nu") -> np.ndarray:
        return self.equilibrium_masses if which == "nu" else self.eigenmeasure

    def mass(self, word: Sequence[int], which: str = "nu") -> float:
        """Exact mass of the cylinder [word] under mu or nu."""
        word = sft.require_admissible(self.spec, word)
        k = len(word)
        if k == 0:
            return 1.0
        if k < self.r:
            table = self._prefix_nu if which == "nu" else self._prefix_mu
            return table[word]
        q = self._q(which)
        value = float(self.masses_r(which)[self.word_index[word[: self.r]]])
        for i in range(self.r, k):
            u_idx = self.word_index[word[i - self.r: i]]
            value *= q[self._edge_of[(u_idx, word[i])]]
        return value

    def children_masses(self, word: Sequence[int], which: str = "nu") -> tuple[list[int], np.ndarray]:
        """Child symbols of ``word`` with the masses of the child cylinders."""
        word = sft.require_admissible(self.spec, word)
        symbols = sft.children(self.spec, word)
        if len(word) < self.r:
            masses = np.array([self.mass(word + (b,), which) for b in symbols])
        else:
            u_idx = self.word_index[word[-self.r:]]
            lo, hi = self.child_offsets[u_idx], self.child_offsets[u_idx + 1]
            masses = self.mass(word, which) * self._q(which)[lo:hi]
        return symbols, masses

    def normalized_potential(self) -> Potential:
        """The zero-pressure potential phi~ as a range-(r+1) Potential."""
        values: dict[Word, float] = {}
        for u_idx, u in enumerate(self.words):
            for e in range(self.child_offsets[u_idx], self.child_offsets[u_idx + 1]):
                values[u + (int(self.child_symbols[e]),)] = float(self.phi_tilde_edge[e])
        return Potential(self.r + 1, values)

    # -- Gibbs constant -----------------------------------------------------

    def _estimate_gibbs_constant(self) -> float:
        """Certified empirical Gibbs constant, inflated by 10 percent.

        The sandwich ratio mu([x]) / exp(S_k phi - k P) on a depth-k cylinder
        depends only on the last r symbols of x and on the (r-1)-symbol
        continuation, so sampling all cylinders to depth 2r together with all
        continuations covers every depth.
        """
        spec, r = self.spec, self.r
        worst = 1.0
        for k in range(1, 2 * r + 1):
            for x in sft.enumerate_cylinders(spec, k):
                mass = self.mass(x, "mu")
                for ext in _extensions(spec, x, r - 1):
                    full = x + ext
                    s_k = sum(self.phi[self.word_index[full[j: j + r]]] for j in range(k))
                    ratio = mass / np.exp(s_k - k * self.pressure)
                    worst = max(worst, ratio, 1.0 / ratio)
        return 1.1 * worst

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"ThermoSolution(r={self.r}, P={self.pressure:.12g}, "
            f"h={self.entropy:.12g}, c={self.gibbs_c:.4g})"
        )


def _extensions(spec: SubshiftSpec, word: Word, length: int) -> list[Word]:
    """All admissible continuations of ``word`` of the given length."""
    exts: list[Word] = [()]
    for _ in range(length):
        exts = [
            e + (b,)
            for e in exts
            for b in sft.children(spec, word + e)
        ]
    return exts


def solve_thermo(
    spec: SubshiftSpec,
    potential: Potential,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ThermoSolution:
    """Solve the eigenproblem of the transfer operator for a finite-range potential.

    Power iteration on the transfer matrix gives the eigenfunction h and
    pressure P = log(leading eigenvalue); iteration on the transpose gives
    the eigenmeasure mu.  Both are normalized so that mu is a probability
    and the integral of h against mu is one; the equilibrium measure is
    nu = h mu renormalized, and entropy = P - integral of phi d nu.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return ThermoSolution(spec, potential, tol, max_iter)


def cylinder_mass(solution: ThermoSolution, word: Sequence[int], which: str = "nu") -> float:
    """Mass of the cylinder [word]; ``which`` selects mu or nu."""
    return solution.mass(word, which)


def normalize_potential(solution: ThermoSolution) -> Potential:
    """Return the strictly nonpositive zero-pressure normalization of the potential.

    The returned potential has range r+1, pressure zero and transfer of the
    constant one function equal to one (both up to the solve residual).  Its
    values are <= 0; zeros occur exactly at forced transitions, in which case
    the recorded ``beta`` is 0 rather than strictly negative.
    """
    return solution.normalized_potential()


def birkhoff_sum(solution: ThermoSolution, word: Sequence[int], k: int) -> float:
    """k-th Birkhoff sum of the potential along the periodic extension of ``word``.

    Exact whenever ``len(word) >= k + r - 1``; otherwise the word is extended
    periodically, which must itself be admissible.
    """
    word = sft.require_admissible(solution.spec, word)
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return 0.0
    if not word:
        raise Inadmissible("cannot evaluate a Birkhoff sum on the empty word")
    r = solution.r
    needed = k + r - 1
    if len(word) < needed:
        reps = -(-needed // len(word))
        seq = word * reps
        if not sft.is_admissible(solution.spec, seq[: needed]):
            raise Inadmissible(f"periodic extension of {word} is not admissible")
        seq = seq[:needed]
    else:
        seq = word[:needed]
    return float(sum(solution.phi[solution.word_index[seq[j: j + r]]] for j in range(k)))


def birkhoff_variance(solution: ThermoSolution, k: int) -> float:
    """Variance of the k-th Birkhoff sum under the equilibrium measure.

    Computed exactly over (k+r-1)-cylinders as the integral of
    (S_k phi - k * mean)^2; the usual centered second moment, since the
    uncentered first power integrates to zero identically.  The ratio
    variance/k stabilizes at the curvature of the pressure function.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    spec, r = solution.spec, solution.r
    mean = float(solution.phi @ solution.equilibrium_masses)
    total = 0.0
    for w in sft.enumerate_cylinders(spec, k + r - 1):
        s_k = sum(solution.phi[solution.word_index[w[j: j + r]]] for j in range(k))
        total += solution.mass(w) * (s_k - k * mean) ** 2
    return total


def pressure_function(
    spec: SubshiftSpec,
    potential: Potential,
    t_values: Sequence[float],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> list[dict[str, float]]:
    """Sample t -> (p(t), p'(t), p''(t)) for the family t * phi.

    p(t) is the pressure of t phi, p'(t) the equilibrium average of phi
    under nu_{t phi}, and p''(t) a central finite difference of p' on the
    sampled grid (NaN at the ends).  Convexity of the sampled p is asserted
    up to 1e-9.
    """
    ts = sorted(float(t) for t in t_values)
    if any(not np.isfinite(t) for t in ts):
        raise ValueError("t values must be finite")
    base = potential_array(spec, potential)
    rows = []
    for t in ts:
        sol = solve_thermo(spec, scaled_potential(potential, t), tol, max_iter)
        rows.append({
            "t": t,
            "pressure": sol.pressure,
            "dpressure": float(base @ sol.equilibrium_masses),
            "d2pressure": float("nan"),
        })
    for i in range(1, len(rows) - 1):
        dt = rows[i + 1]["t"] - rows[i - 1]["t"]
        rows[i]["d2pressure"] = (rows[i + 1]["dpressure"] - rows[i - 1]["dpressure"]) / dt
        second = (
            (rows[i + 1]["pressure"] - rows[i]["pressure"]) / (rows[i + 1]["t"] - rows[i]["t"])
            - (rows[i]["pressure"] - rows[i - 1]["pressure"]) / (rows[i]["t"] - rows[i - 1]["t"])
        )
        if second < -1e-9:
            raise ComputeError(f"sampled pressure function is not convex at t={rows[i]['t']}")
    return rows
