"""Words, cylinders and Markov maps with Moebius inverse branches.

Every concrete system here (Gauss, Lueroth, the ternary Cantor control) has
inverse branches of the form ``T_a(x) = (alpha x + beta) / (gamma x + delta)``
with integer coefficients.  Composite branches are then products of 2x2
integer matrices, which gives exact rational evaluation for free and stable
closed forms for derivatives and distortions of long words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BudgetError, DomainError, StructuralError

Matrix = tuple[int, int, int, int]

# Above this length the Gauss derivative uses the continuant closed form.
CLOSED_FORM_MIN_LENGTH = 20


class Word(tuple):
    """Finite digit string. The empty word is the identity for concatenation."""

    __slots__ = ()

    def __new__(cls, digits: Iterable[int] = ()):
        digits = tuple(int(d) for d in digits)
        for d in digits:
            if d < 1:
                raise DomainError(f"digits must be positive integers, got {d}")
        return super().__new__(cls, digits)

    def __add__(self, other):
        return Word(tuple.__add__(self, tuple(other)))

    def __getitem__(self, item):
        out = tuple.__getitem__(self, item)
        return Word(out) if isinstance(item, slice) else out

    def __repr__(self) -> str:
        return f"Word{tuple(self)!r}"

    def mirror(self) -> Word:
        return Word(reversed(self))

    def shift(self) -> Word:
        if not self:
            raise DomainError("cannot shift the empty word")
        return self[1:]

    def parent(self) -> Word:
        if not self:
            raise DomainError("the empty word has no parent")
        return self[:-1]

    def prefix(self, k: int) -> Word:
        return self[:k]

    def is_prefix_of(self, other: Sequence[int]) -> bool:
        return tuple(other[: len(self)]) == tuple(self)


@dataclass(frozen=True)
class MarkovSystem:
    """Expanding Markov map given by its inverse branches.

    ``matrix(a)`` returns the integer Moebius coefficients of ``T_a``.
    ``orientation`` is the sign of ``T_a'`` (shared by all branches) and
    ``distortion_bound`` bounds ``|T_w''/T_w'|`` uniformly over words.
    """

    name: str
    alphabet_cutoff: int
    matrix: Callable[[int], Matrix]
    orientation: int
    distortion_bound: float
    digit_of: Callable[[np.ndarray], np.ndarray]

    def check_digit(self, a: int) -> None:
        if not 1 <= a <= self.alphabet_cutoff:
            raise DomainError(
                f"digit {a} outside alphabet 1..{self.alphabet_cutoff} of {self.name}"
            )

    def branch(self, a: int, x):
        """Return ``(T_a(x), T_a'(x), T_a''(x))``; exact when ``x`` is a Fraction."""
        al, be, ga, de = self.matrix(a)
        den = ga * x + de
        det = al * de - be * ga
        return (al * x + be) / den, det / den**2, -2 * ga * det / den**3

    def digits_of(self, alphabet: Iterable[int]) -> tuple[int, ...]:
        digits = tuple(sorted(set(int(a) for a in alphabet)))
        if not digits:
            raise DomainError("alphabet is empty")
        for a in digits:
            self.check_digit(a)
        return digits

    def log_expansion(self, x) -> np.ndarray:
        """``log|T'(x)|`` for the forward map, vectorised over ``x``."""
        x = np.asarray(x, dtype=float)
        a = self.digit_of(x)
        al, be, ga, de = (np.asarray(v, dtype=float) for v in self.matrix(a))
        det = np.abs(al * de - be * ga)
        return np.log(det) - 2.0 * np.log(np.abs(al - ga * x))


def _gauss_matrix(a: int) -> Matrix:
    return (0, 1, 1, a)


def _lueroth_matrix(a: int) -> Matrix:
    return (1, a, 0, a * (a + 1))


def _cantor_matrix(a: int) -> Matrix:
    return (1, 2 * (a - 1), 0, 3)


def _reciprocal_digit(x):
    # digit a with 1/(a+1) < x <= 1/a, shared by the Gauss and Lueroth partitions
    return np.maximum(np.floor(1.0 / np.asarray(x, dtype=float)), 1).astype(np.int64)


def _cantor_digit(x):
    return np.where(np.asarray(x, dtype=float) <= 0.5, 1, 2)


def gauss(cutoff: int = 10_000) -> MarkovSystem:
    """Gauss map ``1/x mod 1``; branches ``T_a(x) = 1/(x + a)``."""
    return MarkovSystem("gauss", cutoff, _gauss_matrix, -1, 2.0, _reciprocal_digit)


def lueroth(cutoff: int = 10_000) -> MarkovSystem:
    """Lueroth map; affine branches ``T_a(x) = (x + a)/(a(a + 1))``."""
    return MarkovSystem("lueroth", cutoff, _lueroth_matrix, 1, 0.0, _reciprocal_digit)


def cantor() -> MarkovSystem:
    """Middle-third Cantor system: digit 1 is ``x/3``, digit 2 is ``(x + 2)/3``."""
    return MarkovSystem("cantor", 2, _cantor_matrix, 1, 0.0, _cantor_digit)


SYSTEMS = {"gauss": gauss, "lueroth": lueroth, "cantor": cantor}


def get_system(name: str, cutoff: int | None = None) -> MarkovSystem:
    try:
        factory = SYSTEMS[name]
    except KeyError:
        raise DomainError(f"unknown map {name!r}; choose from {sorted(SYSTEMS)}") from None
    if name == "cantor" or cutoff is None:
        return factory()
    return factory(cutoff)


def _check_word(sys: MarkovSystem, w: Sequence[int]) -> None:
    for a in w:
        sys.check_digit(a)


def _check_point(x) -> None:
    if not 0 <= x <= 1:
        raise DomainError(f"point {x} outside [0, 1]")


def mobius_product(sys: MarkovSystem, w: Sequence[int]) -> Matrix:
    """Exact integer matrix of ``T_w = T_{a_1} o ... o T_{a_n}``."""
    _check_word(sys, w)
    al, be, ga, de = 1, 0, 0, 1
    for a in w:
        a1, b1, c1, d1 = sys.matrix(a)
        al, be, ga, de = (
            al * a1 + be * c1,
            al * b1 + be * d1,
            ga * a1 + de * c1,
            ga * b1 + de * d1,
        )
    return al, be, ga, de


def branch_point(sys: MarkovSystem, w: Sequence[int], x):
    """``T_w(x)`` by right-to-left composition of single branches."""
    _check_word(sys, w)
    _check_point(x)
    y = x
    for a in reversed(w):
        y = sys.branch(a, y)[0]
    return y


def _chain(sys: MarkovSystem, w: Sequence[int], x):
    # returns (T_w(x), T_w'(x), T_w''(x)/T_w'(x))
    y, d, dist = x, 1, 0
    for a in reversed(w):
        t, t1, t2 = sys.branch(a, y)
        dist = dist + (t2 / t1) * d
        d = d * t1
        y = t
    return y, d, dist


def _use_closed_form(sys: MarkovSystem, w: Sequence[int], x) -> bool:
    return (
        sys.name == "gauss"
        and len(w) > CLOSED_FORM_MIN_LENGTH
        and not isinstance(x, Fraction)
    )


def branch_derivative(sys: MarkovSystem, w: Sequence[int], x):
    """``T_w'(x)`` via the chain rule, or the continuant closed form for long Gauss words."""
    _check_word(sys, w)
    _check_point(x)
    if _use_closed_form(sys, w, x):
        al, be, ga, de = mobius_product(sys, w)
        det = al * de - be * ga
        return det * math.exp(-2.0 * _log_affine(ga, de, x))
    return _chain(sys, w, x)[1]


def _log_affine(ga: int, de: int, x) -> float:
    # log(ga*x + de) without overflowing on huge integer coefficients
    if isinstance(x, Fraction):
        return math.log(ga * x.numerator + de * x.denominator) - math.log(x.denominator)
    if ga == 0:
        return math.log(de)
    return math.log(de) + math.log1p(float(Fraction(ga, de)) * x)


def log_abs_derivative(sys: MarkovSystem, w: Sequence[int], x) -> float:
    """``log|T_w'(x)|``; finite for words of any length."""
    _check_word(sys, w)
    _check_point(x)
    al, be, ga, de = mobius_product(sys, w)
    det = abs(al * de - be * ga)
    return math.log(det) - 2.0 * _log_affine(ga, de, x)


def distortion(sys: MarkovSystem, w: Sequence[int], x):
    """``T_w''(x) / T_w'(x)``; exact for Fraction ``x``."""
    _check_word(sys, w)
    _check_point(x)
    if _use_closed_form(sys, w, x):
        _, _, ga, de = mobius_product(sys, w)
        return -2.0 * float(Fraction(ga, de)) / (float(Fraction(ga, de)) * x + 1.0)
    if not w:
        return 0 * x
    return _chain(sys, w, x)[2]


def cylinder(sys: MarkovSystem, w: Sequence[int], exact: bool = False):
    """Closed interval ``I_w = T_w([0, 1])`` as ``(lo, hi)``; ``[0, 1]`` for the empty word."""
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    if not w:
        return zero, one
    a, b = branch_point(sys, w, zero), branch_point(sys, w, one)
    return (a, b) if a <= b else (b, a)


def cylinder_length(sys: MarkovSystem, w: Sequence[int], exact: bool = False):
    lo, hi = cylinder(sys, w, exact=exact)
    return hi - lo


def cylinder_center(sys: MarkovSystem, w: Sequence[int], exact: bool = False):
    lo, hi = cylinder(sys, w, exact=exact)
    return (lo + hi) / 2


@dataclass(frozen=True)
class Block:
    """A tuple of words sharing one length."""

    words: tuple[Word, ...]

    def __post_init__(self):
        words = tuple(Word(w) for w in self.words)
        object.__setattr__(self, "words", words)
        if len({len(w) for w in words}) > 1:
            raise StructuralError("block words must share one length")

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def __getitem__(self, i):
        return self.words[i]

    @property
    def word_length(self) -> int:
        return len(self.words[0]) if self.words else 0


def _as_block(x) -> Block:
    return x if isinstance(x, Block) else Block(tuple(x))


def _check_arity(A: Block, B: Block) -> None:
    if len(A) != len(B) + 1:
        raise StructuralError(f"need |A| = |B| + 1, got |A|={len(A)}, |B|={len(B)}")
    if B.words and A.word_length != B.word_length:
        raise StructuralError("blocks A and B use different word lengths")


def hash_concat(A, B) -> Word:
    """``a_0 b_1 a_1 b_2 ... a_{k-1} b_k``."""
    A, B = _as_block(A), _as_block(B)
    _check_arity(A, B)
    out: list[int] = []
    for a, b in zip(A.words, B.words):
        out.extend(a)
        out.extend(b)
    return Word(out)


def star_concat(A, B) -> Word:
    """``a_0 b_1 a_1 ... b_k a_k``, i.e. ``hash_concat(A, B)`` followed by ``a_k``."""
    A, B = _as_block(A), _as_block(B)
    return hash_concat(A, B) + A.words[-1]


# ---------------------------------------------------------------------------
# vectorised enumeration


@dataclass
class Level:
    """All words of one length over an alphabet, in lexicographic order.

    Arrays hold the float Moebius coefficients of each composite branch and
    the branch determinant, so ``T_w'(x) = det / (gamma x + delta)**2`` and
    ``T_w''/T_w'(x) = -2 gamma / (gamma x + delta)``.
    """

    alphabet: tuple[int, ...]
    n: int
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    det: np.ndarray

    def __len__(self) -> int:
        return self.alpha.shape[0]

    def digits(self) -> np.ndarray:
        """Integer array of shape (len, n) with the digits of each word."""
        m = len(self.alphabet)
        idx = np.arange(len(self))
        letters = np.asarray(self.alphabet)
        out = np.empty((len(self), self.n), dtype=np.int64)
        for pos in range(self.n - 1, -1, -1):
            out[:, pos] = letters[idx % m]
            idx //= m
        return out

    def words(self, index: Iterable[int] | None = None) -> list[Word]:
        digits = self.digits()
        rows = range(len(self)) if index is None else index
        return [Word(digits[i]) for i in rows]

    def point(self, x) -> np.ndarray:
        return (self.alpha * x + self.beta) / (self.gamma * x + self.delta)

    def derivative(self, x) -> np.ndarray:
        return self.det / (self.gamma * x + self.delta) ** 2

    def log_abs_derivative(self, x) -> np.ndarray:
        return np.log(np.abs(self.det)) - 2.0 * np.log(np.abs(self.gamma * x + self.delta))

    def distortion(self, x) -> np.ndarray:
        return -2.0 * self.gamma / (self.gamma * x + self.delta)

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.point(0.0), self.point(1.0)
        return np.minimum(a, b), np.maximum(a, b)

    def lengths(self) -> np.ndarray:
        return np.abs(self.det) / (np.abs(self.delta) * np.abs(self.gamma + self.delta))

    def centers(self) -> np.ndarray:
        lo, hi = self.endpoints()
        return 0.5 * (lo + hi)

    def center_preimage(self) -> np.ndarray:
        """Point ``y`` with ``T_w(y)`` equal to the centre of ``I_w``."""
        return self.delta / (self.gamma + 2.0 * self.delta)


def letter_arrays(sys: MarkovSystem, alphabet: Sequence[int]):
    mats = np.array([sys.matrix(a) for a in alphabet], dtype=float)
    dets = mats[:, 0] * mats[:, 3] - mats[:, 1] * mats[:, 2]
    return mats[:, 0], mats[:, 1], mats[:, 2], mats[:, 3], dets


def extend_level(sys: MarkovSystem, level: Level) -> Level:
    """Append every letter to every word of ``level``."""
    la, lb, lc, ld, ldet = letter_arrays(sys, level.alphabet)
    al, be, ga, de = (v[:, None] for v in (level.alpha, level.beta, level.gamma, level.delta))
    return Level(
        level.alphabet,
        level.n + 1,
        (al * la + be * lc).ravel(),
        (al * lb + be * ld).ravel(),
        (ga * la + de * lc).ravel(),
        (ga * lb + de * ld).ravel(),
        (level.det[:, None] * ldet).ravel(),
    )


def root_level(alphabet: Sequence[int]) -> Level:
    one, zero = np.ones(1), np.zeros(1)
    return Level(tuple(alphabet), 0, one, zero.copy(), zero.copy(), one.copy(), one.copy())


def check_budget(alphabet: Sequence[int], n: int, budget: int) -> None:
    if len(alphabet) ** n > budget:
        raise BudgetError(
            f"enumerating {len(alphabet)}^{n} words exceeds budget {budget}"
        )


def enumerate_levels(
    sys: MarkovSystem, alphabet: Sequence[int], n: int, budget: int | None = None
) -> list[Level]:
    """Levels ``0..n``; ``levels[k]`` holds every word of length ``k``."""
    alphabet = sys.digits_of(alphabet)
    if budget is not None:
        check_budget(alphabet, n, budget)
    levels = [root_level(alphabet)]
    for _ in range(n):
        levels.append(extend_level(sys, levels[-1]))
    return levels


def enumerate_level(
    sys: MarkovSystem, alphabet: Sequence[int], n: int, budget: int | None = None
) -> Level:
    return enumerate_levels(sys, alphabet, n, budget)[-1]


def word_level(sys: MarkovSystem, words: Sequence[Sequence[int]], alphabet=None) -> Level:
    """Level holding an arbitrary list of equal-length words (not lexicographic)."""
    if not words:
        raise DomainError("need at least one word")
    n = len(words[0])
    mats = [mobius_product(sys, w) for w in words]
    arr = np.array([[float(v) for v in m] for m in mats], dtype=float)
    det = np.array([float(m[0] * m[3] - m[1] * m[2]) for m in mats])
    alphabet = tuple(alphabet) if alphabet is not None else tuple(sorted({a for w in words for a in w}))
    return Level(alphabet, n, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], det)


def concat_level(sys: MarkovSystem, left: Level, right: Level) -> Level:
    """Outer concatenation: row ``i * len(right) + j`` is word ``left_i right_j``."""
    al, be, ga, de = (v[:, None] for v in (left.alpha, left.beta, left.gamma, left.delta))
    return Level(
        left.alphabet,
        left.n + right.n,
        (al * right.alpha + be * right.gamma).ravel(),
        (al * right.beta + be * right.delta).ravel(),
        (ga * right.alpha + de * right.gamma).ravel(),
        (ga * right.beta + de * right.delta).ravel(),
        (left.det[:, None] * right.det).ravel(),
    )

