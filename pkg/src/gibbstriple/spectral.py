"""Dirac operator of the measure space and its singular-value stream.

The operator is diagonal on the Haar basis: the elements supported on a
word y carry eigenvalue (alpha(y)-1)/mass([y]), and the l-dimensional span
of the 1-cylinder characteristics carries a finite symmetric block whose
kernel is the constant function.  Inverse singular values therefore come in
two families: mass([y])/(alpha(y)-1) with multiplicity alpha(y)-1 over the
cylinder tree, plus finitely many root/boundary values.  Streams enumerate
them in exact nonincreasing order with a best-first frontier; Dixmier-type
normalized partial sums, dimension estimators and summability tables are
built on top.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import sft, tree
from .errors import BudgetExceeded, Degenerate
from .haar import HaarPlan
from .sft import Word
from .thermo import ThermoSolution

DEFAULT_NODE_BUDGET = 10_000_000
_ROOT_EIG_TOL = 1e-12


def word_label(word: Sequence[int], alphabet_size: int) -> str:
    sep = "" if alphabet_size <= 9 else "."
    return sep.join(map(str, word))


class DiracModel:
    """Dirac operator data for one solved measure (the equilibrium measure by default)."""

    def __init__(self, solution: ThermoSolution, which: str = "nu"):
        self.solution = solution
        self.spec = solution.spec
        self.which = which
        self.plan = HaarPlan(solution, which)
        l = self.spec.alphabet_size
        masses1 = np.array([solution.mass((a,), which) for a in self.spec.symbols])
        v = np.sqrt(masses1)
        # Finite block on span{chi_[a]}: identity minus the projection onto
        # the constant function, expressed in the orthonormal frame
        # mass^{-1/2} chi_[a].  Its kernel is chi of the whole space.
        self.root_block = np.eye(l) - np.outer(v, v)
        eigvals = np.linalg.eigvalsh(self.root_block)
        self.root_eigenvalues = eigvals
        self.kernel_dim = int((np.abs(eigvals) < _ROOT_EIG_TOL).sum())
        nonzero = sorted((float(e) for e in eigvals if abs(e) >= _ROOT_EIG_TOL), reverse=False)
        self.root_inverse_values = tuple(1.0 / e for e in nonzero)  # nonincreasing

    def mass(self, word) -> float:
        return self.solution.mass(word, self.which)

    def branching_mass(self) -> float:
        """Measure of the 1-cylinders whose symbol has two or more successors.

        Words ending in a non-branching symbol carry no eigenvalue, so per
        tree level the total mass feeding the singular-value stream is this
        number rather than one; it is the empirically observed scale factor
        of the log-normalized partial sums on shifts with forced
        transitions.
        """
        return float(sum(
            self.mass((a,)) for a in self.spec.symbols if self.spec.out_degree(a) >= 2
        ))

    def haar_value(self, word) -> float:
        """Inverse singular value mass([y])/(alpha(y)-1) carried by word y."""
        a = sft.alpha(self.spec, word)
        if a < 2:
            raise ValueError(f"word {word} carries no Haar eigenvalue (single child)")
        return self.mass(word) / (a - 1)

    def boundary_value(self, restriction) -> float:
        """Norm of the rank-one block of the restricted operator.

        Multiplying by chi_[x] sends every basis vector whose word is a
        strict prefix of x (and every non-kernel root vector) to a multiple
        of chi_[x]; the resulting rank-one operator contributes exactly one
        singular value, computed here in closed form.
        """
        x = sft.require_admissible(self.spec, restriction)
        if not x:
            raise ValueError("boundary value is defined for nonempty restrictions")
        nu_first = self.mass(x[:1])
        total = (1.0 - nu_first) / nu_first  # root vectors, inverse eigenvalue 1
        for m in range(1, len(x)):
            y = x[:m]
            if sft.alpha(self.spec, y) < 2:
                continue
            symbols, coeffs = self.plan._block(y)
            slot = symbols.index(x[m])
            lam = (len(symbols) - 1) / self.mass(y)
            total += float(((coeffs[slot] / lam) ** 2).sum())
        return float(np.sqrt(self.mass(x) * total))

    def finite_values(self, restriction) -> list[tuple[float, tuple[int, ...], str]]:
        """(value, tie-key, label) for the finite root values merged into the full stream.

        Restricted streams (x nonempty) carry no extra entries here: their
        rank-one boundary block is computed by :meth:`boundary_value` and
        reported alongside the stream, never merged into the yielded
        sequence (it cannot affect a log-normalized limit, but at desk-scale
        N it would visibly bias the partial sums it is excluded from).
        """
        x = tuple(restriction)
        if not x:
            return [
                (val, (0, i + 1), f"root{i + 1}")
                for i, val in enumerate(self.root_inverse_values)
            ]
        return []


# -- exact labeled stream ----------------------------------------------------


class SpectralStream:
    """Nonincreasing stream of singular values of pi(chi_[x]) |D|^{-1}.

    Exactness: frontier entries are subtree nodes keyed by their cylinder
    mass, which bounds every value inside the subtree; value candidates are
    keyed by the value itself.  Popping the heap therefore emits values in
    exact nonincreasing order.  Ties break lexicographically on the word
    label (subtree nodes expand before equal-keyed candidates so that the
    smallest word among equal values is emitted first).
    """

    def __init__(self, model: DiracModel, restriction: Sequence[int] = (),
                 budget_nodes: int = DEFAULT_NODE_BUDGET):
        self.model = model
        self.restriction = sft.require_admissible(model.spec, restriction)
        self.budget_nodes = budget_nodes
        self.produced = 0
        self.expanded = 0
        # heap entries: (-key, kind, word) + payload;  kind 0 = subtree node
        # (payload: mass), kind 1 = candidate (payload: multiplicity, value).
        self._heap: list[tuple] = []
        start_mass = model.mass(self.restriction)
        heapq.heappush(self._heap, (-start_mass, 0, self.restriction, start_mass))
        for value, key, label in model.finite_values(self.restriction):
            heapq.heappush(self._heap, (-value, 1, key, 1, value, label))
        self.boundary = model.boundary_value(self.restriction) if self.restriction else None

    def _expand(self, word: Word, mass: float) -> None:
        self.expanded += 1
        if self.expanded > self.budget_nodes:
            raise BudgetExceeded(f"stream expanded more than {self.budget_nodes} nodes")
        model = self.model
        symbols, cmasses = model.solution.children_masses(word, model.which)
        for b, m in zip(symbols, cmasses):
            heapq.heappush(self._heap, (-m, 0, word + (b,), float(m)))
        alpha = len(symbols)
        if word and alpha >= 2:
            value = mass / (alpha - 1)
            label = word_label(word, model.spec.alphabet_size)
            heapq.heappush(self._heap, (-value, 1, word, alpha - 1, value, label))

    def __iter__(self) -> Iterator[tuple[float, str]]:
        return self

    def __next__(self) -> tuple[float, str]:
        while True:
            entry = heapq.heappop(self._heap)
            if entry[1] == 0:
                self._expand(entry[2], entry[3])
                continue
            _, _, key, mult, value, label = entry
            if mult > 1:
                heapq.heappush(self._heap, (-value, 1, key, mult - 1, value, label))
            self.produced += 1
            return value, label

    def take(self, n: int) -> list[tuple[float, str]]:
        return [next(self) for _ in range(n)]

    def take_values(self, n: int) -> np.ndarray:
        out = np.empty(n)
        for i in range(n):
            out[i] = next(self)[0]
        return out


def build_dirac(solution: ThermoSolution, which: str = "nu") -> DiracModel:
    return DiracModel(solution, which)


def singular_values(model: DiracModel, restriction: Sequence[int] = (), n: int | None = None,
                    budget_nodes: int = DEFAULT_NODE_BUDGET):
    """Exact labeled stream; with ``n`` given, the first n (value, label) pairs."""
    stream = SpectralStream(model, restriction, budget_nodes)
    if n is None:
        return stream
    return stream.take(n)


# -- fast unlabeled bulk enumeration ------------------------------------------


def top_values(model: DiracModel, restriction: Sequence[int] = (), n: int = 1000,
               budget_nodes: int = tree.DEFAULT_NODE_BUDGET) -> np.ndarray:
    """First n singular values (no labels) as a sorted array, via threshold collection.

    Collects every tree value above a threshold t chosen so that at least n
    values are found; since any value below t is no larger than each
    collected one, the sorted prefix is exact.
    """
    x = sft.require_admissible(model.spec, restriction)
    extras = np.array([v for v, _, _ in model.finite_values(x)])
    mass_x = model.mass(x)
    entropy = max(model.solution.entropy, 0.05)
    t = mass_x / max(2.0, 1.5 * n * entropy)
    while True:
        chunks = [extras]
        count = extras.size
        for masses, alphas in tree.subtree_nodes(model.solution, x, t, model.which, budget_nodes):
            internal = alphas >= 2
            m, a = masses[internal], alphas[internal]
            values = m / (a - 1)
            above = values > t
            if above.any():
                chunks.append(np.repeat(values[above], (a - 1)[above]))
                count += int((a[above] - 1).sum())
        if count >= n:
            break
        t /= 4.0
    values = np.concatenate(chunks)
    values = np.sort(values)[::-1]
    return values[:n]


def count_values_above(model: DiracModel, restriction: Sequence[int], t: float,
                       budget_nodes: int = tree.DEFAULT_NODE_BUDGET) -> int:
    """Number of tree singular values > t under the restriction (root values excluded).

    Equals the (alpha-1)-weighted count of words y inside [x] whose value
    mass([y])/(alpha(y)-1) exceeds t; cross-checkable against renewal
    counting with alpha-adjusted thresholds.
    """
    x = sft.require_admissible(model.spec, restriction)
    total = 0
    for masses, alphas in tree.subtree_nodes(model.solution, x, t, model.which, budget_nodes):
        internal = alphas >= 2
        m, a = masses[internal], alphas[internal]
        total += int(((m / (a - 1) > t) * (a - 1)).sum())
    return total


# -- Dixmier partial sums ------------------------------------------------------


@dataclass(frozen=True)
class DixmierTable:
    """Normalized partial sums sum_{k<=N} sigma_k / ln N at the checkpoints."""

    rows: tuple[tuple[int, float], ...]
    spread: float

    @property
    def final(self) -> float:
        return self.rows[-1][1]


def _normalized_sums(values: np.ndarray, checkpoints: Sequence[int]) -> DixmierTable:
    checkpoints = [int(c) for c in checkpoints]
    if len(checkpoints) < 1 or any(c < 2 for c in checkpoints):
        raise ValueError("checkpoints must be >= 2")
    if sorted(checkpoints) != checkpoints:
        raise ValueError("checkpoints must be increasing")
    if values.size < checkpoints[-1]:
        raise ValueError(f"need {checkpoints[-1]} values, have {values.size}")
    cum = np.cumsum(values[: checkpoints[-1]])
    rows = tuple((c, float(cum[c - 1] / np.log(c))) for c in checkpoints)
    tail = [s for _, s in rows[-3:]]
    spread = float(max(tail) - min(tail))
    return DixmierTable(rows, spread)


def partial_dixmier(stream, checkpoints: Sequence[int]) -> DixmierTable:
    """Normalized partial sums of a stream (SpectralStream or value array)."""
    checkpoints = [int(c) for c in checkpoints]
    if sorted(checkpoints) != checkpoints:
        raise ValueError("checkpoints must be increasing")
    if isinstance(stream, SpectralStream):
        values = stream.take_values(checkpoints[-1])
    else:
        values = np.asarray(stream, dtype=float)
    return _normalized_sums(values, checkpoints)


def dixmier_checkpoints(model: DiracModel, restriction: Sequence[int], checkpoints: Sequence[int],
                        budget_nodes: int = tree.DEFAULT_NODE_BUDGET) -> DixmierTable:
    """Fast-path normalized partial sums using bulk enumeration."""
    cps = sorted(int(c) for c in checkpoints)
    values = top_values(model, restriction, cps[-1], budget_nodes)
    return _normalized_sums(values, cps)


@dataclass(frozen=True)
class DixmierIntegral:
    estimate: float
    reference: float
    terms: tuple[tuple[str, float, float, float], ...]  # label, coeff, term estimate, term reference


def dixmier_integral(model: DiracModel, a: Mapping[Sequence[int], float], n: int,
                     checkpoints: Sequence[int] | None = None) -> DixmierIntegral:
    """Estimate the logarithmic singular-value average of pi(a) |D|^{-1}.

    ``a`` is a finite combination of cylinder characteristics given as a
    word -> coefficient mapping; the estimate combines the per-cylinder
    normalized partial sums at N = n by linearity.  The reported reference
    value is (1/entropy) * integral of a d nu.
    """
    if checkpoints is None:
        checkpoints = [max(2, n // 4), max(3, n // 2), n]
    sol = model.solution
    terms = []
    estimate = 0.0
    reference = 0.0
    for word, coeff in a.items():
        word = tuple(word)
        table = dixmier_checkpoints(model, word, checkpoints)
        ref = sol.mass(word, model.which) / sol.entropy
        label = word_label(word, model.spec.alphabet_size) or "empty"
        terms.append((label, float(coeff), table.final, ref))
        estimate += coeff * table.final
        reference += coeff * ref
    return DixmierIntegral(estimate, reference, tuple(terms))


# -- dimension estimators ------------------------------------------------------


@dataclass(frozen=True)
class DimensionEstimate:
    d1: float
    d2: float
    d3: float
    d4: float
    n_used: int

    def values(self) -> tuple[float, float, float, float]:
        return (self.d1, self.d2, self.d3, self.d4)


def _increment_ratio(log_x: np.ndarray, alpha: float, n0: int, n1: int, n2: int) -> float:
    """(S(n0)-S(n1)) / (S(n1)-S(n2)) for S(N) = sum_{k<=N} x_k^-alpha."""
    powers = np.exp(-alpha * log_x[:n0])
    s2 = powers[:n2].sum()
    s1 = powers[:n1].sum()
    s0 = powers.sum()
    return float((s0 - s1) / max(s1 - s2, 1e-300))


def _bisect_flip(log_x: np.ndarray, threshold: float, n0: int, n1: int, n2: int,
                 tol: float = 1e-3) -> float:
    """Largest alpha with increment ratio >= threshold (ratio is decreasing in alpha)."""
    lo, hi = 0.0, 1.0
    while _increment_ratio(log_x, hi, n0, n1, n2) >= threshold:
        lo, hi = hi, 2.0 * hi
        if hi > 64.0:
            return float("inf")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _increment_ratio(log_x, mid, n0, n1, n2) >= threshold:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _tail_slope(log_x: np.ndarray, n: int) -> float:
    """Median of pairwise slopes of log x_k against log k over a geometric tail grid.

    Pairwise slopes cancel the comparability constant, so the estimate is
    offset-free; the grid averages out lattice oscillation.
    """
    k_lo = max(16, n // 256)
    ks = np.unique(np.geomspace(k_lo, n, 48).astype(np.int64))
    lk = np.log(ks)
    lx = log_x[ks - 1]
    min_gap = min(np.log(8.0), 0.5 * (lk[-1] - lk[0]))
    slopes = [
        (lx[j] - lx[i]) / (lk[j] - lk[i])
        for i in range(len(ks))
        for j in range(i + 1, len(ks))
        if lk[j] - lk[i] >= min_gap
    ]
    if not slopes:
        return (lx[-1] - lx[0]) / max(lk[-1] - lk[0], 1e-12)
    return float(np.median(slopes))


def dimension_estimators(x_values: np.ndarray, n: int | None = None) -> DimensionEstimate:
    """Four estimates of the exponent d with x_k comparable to k^{1/d}.

    ``x_values`` is the nondecreasing sequence of inverted singular values.
    d1 and d2 bracket the critical exponent of the log-normalized partial
    sums of x^-alpha (bisection on alpha, window ratios 16); d3 locates the
    series convergence threshold on a wider window; d4 inverts a median
    tail slope of log x_k versus log k (offset-free, so the comparability
    constants do not bias it).
    """
    x = np.asarray(x_values, dtype=float)
    n = x.size if n is None else min(int(n), x.size)
    if n < 64:
        raise ValueError("need at least 64 values")
    x = x[:n]
    if x[-1] <= x[0] * (1 + 1e-12):
        raise Degenerate("sequence carries no growth to estimate a dimension from")
    log_x = np.log(x)
    if n >= 4096:
        n1, n2 = n // 16, n // 256
    else:
        n1, n2 = n // 4, n // 16
    d1 = _bisect_flip(log_x, 0.999, n, n1, n2)
    d2 = _bisect_flip(log_x, 1.001, n, n1, n2)
    if n >= 16384:
        d3 = _bisect_flip(log_x, 1.0, n, n // 64, n // 4096)
    else:
        d3 = _bisect_flip(log_x, 1.0, n, n1, n2)
    slope = _tail_slope(log_x, n)
    d4 = float("inf") if slope <= 0 else 1.0 / slope
    return DimensionEstimate(d1, d2, d3, d4, n)


# -- summability ---------------------------------------------------------------


@dataclass(frozen=True)
class SummabilityRow:
    p: float
    checkpoint: int
    partial_sum: float
    normalized_sum: float


@dataclass(frozen=True)
class SummabilityReport:
    rows: tuple[SummabilityRow, ...]
    verdicts: Mapping[float, str]


def summability_report(model: DiracModel, p_values: Sequence[float], n: int,
                       sigma: np.ndarray | None = None) -> SummabilityReport:
    """Partial sums of the singular values of (1 + D^2)^{-p/2} at geometric checkpoints.

    Values are (1 + lambda^2)^{-p/2} with lambda = 1/sigma ranging over the
    nonzero spectrum, prepended with the kernel contribution 1.  Verdict per
    p: 'convergent' when increments shrink markedly between the last two
    ln-octaves, 'divergent' when they grow, 'critical' in between.
    """
    if any(p <= 0 for p in p_values):
        raise ValueError("p values must be positive")
    if sigma is None:
        sigma = top_values(model, (), n)
    lam = 1.0 / sigma[:n]
    checkpoints = [max(4, n // 64), max(5, n // 16), max(6, n // 4), n]
    rows = []
    verdicts = {}
    for p in p_values:
        # kernel of D contributes the top value 1; checkpoints count it in
        vals = np.concatenate(([1.0], (1.0 + lam * lam) ** (-p / 2.0)))
        cum = np.cumsum(vals)
        sums = {c: float(cum[c - 1]) for c in checkpoints}
        for c in checkpoints:
            rows.append(SummabilityRow(float(p), c, sums[c], sums[c] / float(np.log(c))))
        inc_last = sums[checkpoints[-1]] - sums[checkpoints[-2]]
        inc_prev = sums[checkpoints[-2]] - sums[checkpoints[-3]]
        ratio = inc_last / max(inc_prev, 1e-300)
        if ratio < 0.7:
            verdicts[float(p)] = "convergent"
        elif ratio > 1.4:
            verdicts[float(p)] = "divergent"
        else:
            verdicts[float(p)] = "critical"
    return SummabilityReport(tuple(rows), verdicts)
