"""Combinatorics of one-sided subshifts of finite type.

Symbols are the integers ``1 .. l``; a word is a tuple of symbols whose
consecutive transitions are allowed by a primitive 0/1 adjacency matrix.
The empty word ``()`` stands for the whole shift space.  Cylinder sets are
identified with their defining words throughout the library: every
functional we compute is evaluated on finitely many cylinders, so infinite
sequences never need a concrete representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadShape, Inadmissible, NotPrimitive

Word = tuple[int, ...]


def wielandt_bound(n: int) -> int:
    """Smallest exponent that certifies primitivity of an n x n 0/1 matrix."""
    return (n - 1) * (n - 1) + 1


@dataclass(frozen=True)
class SubshiftSpec:
    """Validated alphabet-plus-adjacency description of a subshift.

    Instances are built through :func:`build_subshift`, which checks that the
    adjacency matrix is primitive (some power strictly positive) and has no
    dead symbols.  The object is immutable and safe to share between threads.
    """

    alphabet_size: int
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.adjacency.setflags(write=False)

    @property
    def symbols(self) -> range:
        return range(1, self.alphabet_size + 1)

    def allows(self, a: int, b: int) -> bool:
        """True when symbol b may follow symbol a."""
        return bool(self.adjacency[a - 1, b - 1])

    def out_degree(self, a: int) -> int:
        return int(self.adjacency[a - 1].sum())


def build_subshift(alphabet_size: int, adjacency) -> SubshiftSpec:
    """Validate an adjacency matrix and wrap it as a :class:`SubshiftSpec`.

    Raises
    ------
    BadShape
        If the matrix is not square 0/1 of size ``alphabet_size >= 2``.
    NotPrimitive
        If some row or column is zero, or no power of the matrix up to the
        Wielandt bound ``(l-1)^2 + 1`` is strictly positive.
    """
    if alphabet_size < 2:
        raise BadShape(f"alphabet_size must be >= 2, got {alphabet_size}")
    mat = np.asarray(adjacency, dtype=np.int64)
    if mat.shape != (alphabet_size, alphabet_size):
        raise BadShape(f"adjacency must be {alphabet_size}x{alphabet_size}, got {mat.shape}")
    if not np.isin(mat, (0, 1)).all():
        raise BadShape("adjacency entries must be 0 or 1")
    if (mat.sum(axis=1) == 0).any() or (mat.sum(axis=0) == 0).any():
        raise NotPrimitive("adjacency has a symbol with no successor or no predecessor")

    # Boolean squaring: if A^m > 0 for some m <= bound, then A^(2^j) > 0 for
    # the first power of two past the bound (positivity is preserved upward
    # once rows and columns are nonzero).
    bound = wielandt_bound(alphabet_size)
    power = mat.astype(bool)
    exponent = 1
    while not power.all():
        if exponent >= bound:
            raise NotPrimitive("no power up to the Wielandt bound is strictly positive")
        power = power @ power
        exponent *= 2
    return SubshiftSpec(alphabet_size, mat)


def is_admissible(spec: SubshiftSpec, word: Sequence[int]) -> bool:
    """Check symbols are in range and all consecutive transitions allowed."""
    for a in word:
        if not 1 <= a <= spec.alphabet_size:
            return False
    return all(spec.allows(a, b) for a, b in zip(word, word[1:]))


def require_admissible(spec: SubshiftSpec, word: Sequence[int]) -> Word:
    word = tuple(word)
    if not is_admissible(spec, word):
        raise Inadmissible(f"word {word} is not admissible")
    return word


def children(spec: SubshiftSpec, word: Sequence[int]) -> list[int]:
    """Symbols that may extend ``word``, in ascending order.

    For the empty word every symbol is a child.  The list length equals the
    children count alpha(word).
    """
    word = require_admissible(spec, word)
    if not word:
        return list(spec.symbols)
    row = spec.adjacency[word[-1] - 1]
    return [b for b in spec.symbols if row[b - 1]]


def alpha(spec: SubshiftSpec, word: Sequence[int]) -> int:
    """Number of admissible one-symbol extensions of ``word``."""
    word = require_admissible(spec, word)
    if not word:
        return spec.alphabet_size
    return spec.out_degree(word[-1])


def enumerate_cylinders(spec: SubshiftSpec, k: int) -> list[Word]:
    """All admissible k-words in lexicographic order (k >= 1)."""
    if k < 1:
        raise BadShape(f"cylinder level must be >= 1, got {k}")
    level: list[Word] = [(a,) for a in spec.symbols]
    for _ in range(k - 1):
        level = [w + (b,) for w in level for b in spec.symbols if spec.allows(w[-1], b)]
    return level


def count_cylinders_at(spec: SubshiftSpec, k: int) -> int:
    """card(Sigma_A^k), computed from powers of the adjacency matrix."""
    if k < 1:
        raise BadShape(f"cylinder level must be >= 1, got {k}")
    if k == 1:
        return spec.alphabet_size
    power = np.linalg.matrix_power(spec.adjacency.astype(np.int64), k - 1)
    return int(power.sum())


def common_prefix_metric(w1: Sequence[int], w2: Sequence[int]) -> float:
    """2^(-n) where n is the longest common prefix length of the two words."""
    n = 0
    for a, b in zip(w1, w2):
        if a != b:
            break
        n += 1
    return 2.0 ** (-n)
