"""Generalized Haar basis of the measure space of a subshift.

For every word x with alpha(x) >= 2 children the basis carries alpha(x)-1
mean-zero functions supported on [x], piecewise constant on the children
cylinders; together with the normalized characteristic functions of the
1-cylinders they form an orthonormal basis of L^2 of the chosen measure.

The coefficients on the children come from an orthogonal matrix W mapping
the last standard unit vector to u = sqrt(children masses / parent mass).
W is the minimal (in-plane) rotation with that property, which for equal
children masses coincides with the canonical recursion V_k built from the
single possible 2x2 rotation; the conjugated map S^{-1} W S then preserves
the mass-weighted inner product and sends the last weighted basis vector
to the constant vector, the two properties the construction needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sft
from .errors import BadDimension, IndexOutOfRange, ShapeMismatch, SingleChild, TooDeep
from .sft import Word
from .thermo import ThermoSolution

GRAM_BUDGET = 8192


def canonical_rotation(k: int) -> np.ndarray:
    """The canonical orthogonal k x k matrix V_k with V_k e_k = k^{-1/2} (1,..,1).

    V_2 is the unique such rotation; for k > 2 the matrix is built by the
    recursion V_k = Vt_k O_k Vt_k^T where Vt_k embeds V_{k-1} and O_k rotates
    the last two coordinates by arccos(k^{-1/2}).
    """
    if k < 2:
        raise BadDimension(f"rotation dimension must be >= 2, got {k}")
    s = 2.0 ** -0.5
    v = np.array([[s, s], [-s, s]])
    for m in range(3, k + 1):
        vt = np.eye(m)
        vt[: m - 1, : m - 1] = v
        o = np.eye(m)
        c = m ** -0.5
        t = (1.0 - 1.0 / m) ** 0.5
        o[m - 2: m, m - 2: m] = [[c, t], [-t, c]]
        v = vt @ o @ vt.T
    return v


def mass_rotation(u: np.ndarray) -> np.ndarray:
    """Minimal rotation W in SO(k) with W e_k = u, for a unit vector u.

    W rotates only within the plane spanned by e_k and u and fixes its
    orthogonal complement.  For u = k^{-1/2} (1,..,1) this reproduces
    :func:`canonical_rotation` exactly.
    """
    u = np.asarray(u, dtype=float)
    k = u.size
    c = u[-1]
    w = u.copy()
    w[-1] = 0.0
    s = float(np.linalg.norm(w))
    if s < 1e-300:
        return np.eye(k)
    f = w / s
    e = np.zeros(k)
    e[-1] = 1.0
    return np.eye(k) + (c - 1.0) * (np.outer(e, e) + np.outer(f, f)) + s * (np.outer(f, e) - np.outer(e, f))


@dataclass(frozen=True)
class HaarElement:
    """One basis function e_{x,j}: its constant values on the children of x."""

    word: Word
    index: int
    child_symbols: tuple[int, ...]
    coefficients: np.ndarray

    def value_on_child(self, symbol: int) -> float:
        return float(self.coefficients[self.child_symbols.index(symbol)])


class HaarPlan:
    """Haar basis of L^2 for one solved measure (mu by default).

    The children ordering theta_x is globally fixed to ascending symbol
    order.  Element coefficient blocks are cached per word; the plan is
    immutable to callers.
    """

    def __init__(self, solution: ThermoSolution, which: str = "mu"):
        if which not in ("mu", "nu"):
            raise ValueError(f"measure selector must be 'mu' or 'nu', got {which!r}")
        self.solution = solution
        self.spec = solution.spec
        self.which = which
        self.rotations = {k: canonical_rotation(k) for k in range(2, solution.spec.alphabet_size + 1)}
        self._blocks: dict[Word, tuple[tuple[int, ...], np.ndarray]] = {}

    def mass(self, word) -> float:
        return self.solution.mass(word, self.which)

    def _child_rotation(self, u: np.ndarray) -> np.ndarray:
        """Rotation taking the last unit vector to u; cached V_k when u is uniform."""
        if (u == u[0]).all():
            return self.rotations[u.size]
        return mass_rotation(u)

    def ux(self, word) -> np.ndarray:
        """The canonical inner-product-preserving map U_x on the children of x.

        U_x = S^{-1} W S with S = diag(sqrt children masses) and W the minimal
        rotation sending the last unit vector to the square roots of the
        children mass fractions; for equal fractions W is the canonical V_k
        and U_x reduces to S^{-1} V_k S = V_k.
        """
        word = sft.require_admissible(self.spec, word)
        symbols, masses = self.solution.children_masses(word, self.which)
        if len(symbols) < 2:
            raise SingleChild(f"word {word} has a single child")
        u = np.sqrt(masses / masses.sum())
        s = np.sqrt(masses)
        return (self._child_rotation(u) * s) / s[:, None]

    def _block(self, word: Word) -> tuple[tuple[int, ...], np.ndarray]:
        """Children symbols and the alpha x (alpha-1) matrix of element values."""
        cached = self._blocks.get(word)
        if cached is not None:
            return cached
        symbols, masses = self.solution.children_masses(word, self.which)
        if len(symbols) < 2:
            raise SingleChild(f"word {word} has a single child")
        u = np.sqrt(masses / masses.sum())
        w = self._child_rotation(u)
        # Value of e_{x,j} on child m is (W e_j)_m / sqrt(child mass).
        coeffs = w[:, : len(symbols) - 1] / np.sqrt(masses)[:, None]
        block = (tuple(symbols), coeffs)
        self._blocks[word] = block
        return block

    def haar_element(self, word, index: int) -> HaarElement:
        """The basis element e_{x,index}, index in 1..alpha(x)-1."""
        word = sft.require_admissible(self.spec, word)
        symbols, coeffs = self._block(word)
        if not 1 <= index <= len(symbols) - 1:
            raise IndexOutOfRange(f"index must be in 1..{len(symbols) - 1}, got {index}")
        return HaarElement(word, index, symbols, coeffs[:, index - 1].copy())

    def root_vectors(self) -> list[tuple[int, float]]:
        """(symbol, normalization) pairs of the vectors mass([x])^{-1/2} chi_[x]."""
        return [(a, self.mass((a,)) ** -0.5) for a in self.spec.symbols]

    # -- value representation on level-K cylinders ---------------------------

    def basis_labels(self, max_word_level: int) -> list[tuple[Word, int]]:
        """Labels of the basis: roots as ((a), 0), elements as (word, j), |word| <= max level."""
        labels: list[tuple[Word, int]] = [((a,), 0) for a in self.spec.symbols]
        for m in range(1, max_word_level + 1):
            for w in sft.enumerate_cylinders(self.spec, m):
                for j in range(1, sft.alpha(self.spec, w)):
                    labels.append((w, j))
        return labels

    def value_matrix(self, level: int) -> tuple[list[tuple[Word, int]], np.ndarray, list[Word]]:
        """Values of every basis vector with word level < ``level`` on the level-K cylinders.

        Returns (labels, B, words) with B[p, w] the constant value of basis
        vector p on the cylinder of the level-``level`` word w.  The basis
        restricted this way spans exactly the level-``level`` cylinder
        functions, so B is square.
        """
        words = sft.enumerate_cylinders(self.spec, level)
        if len(words) > GRAM_BUDGET:
            raise TooDeep(f"level {level} has {len(words)} cylinders (budget {GRAM_BUDGET})")
        index_ranges: dict[Word, list[int]] = {}
        for i, w in enumerate(words):
            for p in range(1, level + 1):
                index_ranges.setdefault(w[:p], []).append(i)
        labels = self.basis_labels(level - 1)
        b = np.zeros((len(labels), len(words)))
        for p, (word, j) in enumerate(labels):
            if j == 0:
                b[p, index_ranges[word]] = self.mass(word) ** -0.5
            else:
                symbols, coeffs = self._block(word)
                for sym, c in zip(symbols, coeffs[:, j - 1]):
                    b[p, index_ranges[word + (sym,)]] = c
        return labels, b, words

    def gram_matrix(self, depth: int) -> np.ndarray:
        """Pairwise L^2 inner products of all basis vectors with word level <= depth."""
        if depth < 1:
            raise ValueError("depth must be >= 1")
        _, b, words = self.value_matrix(depth + 1)
        masses = np.array([self.mass(w) for w in words])
        return (b * masses) @ b.T

    def expand(self, values: np.ndarray, level: int) -> np.ndarray:
        """Haar coefficients of a level-``level`` cylinder function (array form)."""
        labels, b, words = self.value_matrix(level)
        values = np.asarray(values, dtype=float)
        if values.shape != (len(words),):
            raise ShapeMismatch(f"expected {len(words)} values, got shape {values.shape}")
        masses = np.array([self.mass(w) for w in words])
        return b @ (masses * values)

    def reconstruct(self, coefficients: np.ndarray, level: int) -> np.ndarray:
        """Inverse of :meth:`expand`: function values on level-``level`` cylinders."""
        labels, b, _ = self.value_matrix(level)
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (len(labels),):
            raise ShapeMismatch(f"expected {len(labels)} coefficients, got shape {coefficients.shape}")
        return b.T @ coefficients

    def basis_dump(self, depth: int) -> list[tuple[str, int, int, float]]:
        """(word, index, child symbol, coefficient) rows for inspection/diffing."""
        rows: list[tuple[str, int, int, float]] = []
        for a, norm in self.root_vectors():
            rows.append((str(a), 0, a, norm))
        for m in range(1, depth + 1):
            for w in sft.enumerate_cylinders(self.spec, m):
                if sft.alpha(self.spec, w) < 2:
                    continue
                symbols, coeffs = self._block(w)
                for j in range(1, len(symbols)):
                    for sym, c in zip(symbols, coeffs[:, j - 1]):
                        rows.append(("".join(map(str, w)), j, sym, float(c)))
        return rows
