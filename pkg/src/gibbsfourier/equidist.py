"""Weyl sums of ``(n_k x)`` for Gibbs-typical badly approximable ``x``.

Phases are computed exactly: for rational ``x = p/q`` the fractional part of
``m n_k x`` is ``((m n_k p) mod q) / q``, so arbitrarily large ``n_k`` lose no
accuracy.  Sampled points are long continued fractions whose denominator is
made large enough that the rational stands in for the limit point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .continuants import q_sequence
from .errors import DomainError
from .parallel import ordered_map
from .symbolic import Word
from .thermo import GibbsSpec

KINDS = ("identity", "explicit", "continuant-denominators")

# sampled denominators exceed 2**GUARD_BITS * max(m n_k)
GUARD_BITS = 64


@dataclass(frozen=True)
class SequenceSpec:
    kind: str
    payload: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown sequence kind {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "payload", tuple(int(v) for v in self.payload))
        if self.kind == "explicit":
            _check_increasing(self.payload)
        if self.kind == "continuant-denominators":
            Word(self.payload)

    @classmethod
    def identity(cls) -> SequenceSpec:
        return cls("identity")

    @classmethod
    def explicit(cls, values: Sequence[int]) -> SequenceSpec:
        return cls("explicit", tuple(values))

    @classmethod
    def denominators(cls, digits: Sequence[int]) -> SequenceSpec:
        return cls("continuant-denominators", tuple(digits))

    @classmethod
    def from_file(cls, path) -> SequenceSpec:
        with open(path) as fh:
            values = [int(line) for line in fh if line.strip()]
        return cls.explicit(values)

    def available(self) -> int | None:
        """Number of available terms; ``None`` for unbounded."""
        return None if self.kind == "identity" else len(self.payload)

    def terms(self, N: int) -> list[int]:
        if N < 1:
            raise DomainError("N must be positive")
        avail = self.available()
        if avail is not None and N > avail:
            raise DomainError(f"sequence has only {avail} terms, asked for {N}")
        if self.kind == "identity":
            return list(range(1, N + 1))
        if self.kind == "explicit":
            return list(self.payload[:N])
        return continuant_denominators(self.payload[:N])


def _check_increasing(values: Sequence[int]) -> None:
    if not values:
        raise DomainError("sequence is empty")
    if values[0] < 1 or any(b <= a for a, b in zip(values, values[1:])):
        raise DomainError("sequence must be positive and strictly increasing")


def continuant_denominators(digits: Sequence[int]) -> list[int]:
    """``[q_1, ..., q_n]`` of the word ``digits``."""
    return q_sequence(digits)[1:]


# ---------------------------------------------------------------------------
# sampling


def _digit_probs(spec: GibbsSpec, ratio: float) -> np.ndarray:
    # P(a | w) proportional to (|I_{wa}| / |I_w|)^s; only r = gamma_w / delta_w matters
    logs = []
    for a in spec.alphabet:
        a1, b1, c1, d1 = spec.system.matrix(a)
        g, d = ratio * a1 + c1, ratio * b1 + d1
        det = abs(a1 * d1 - b1 * c1)
        logs.append(math.log(det) + math.log1p(ratio) - math.log(abs(d)) - math.log(abs(g + d)))
    logs = spec.s * np.array(logs)
    p = np.exp(logs - logs.max())
    return p / p.sum()


@dataclass(frozen=True)
class SampledPoint:
    word: Word
    x: Fraction

    @property
    def denominator(self) -> int:
        return self.x.denominator


def sample_point(
    spec: GibbsSpec,
    length: int | None = None,
    seed=0,
    min_denominator: int | None = None,
) -> SampledPoint:
    """Draw digits one at a time from prefix-conditional Gibbs weights.

    Stops after ``length`` digits, or once the exact denominator of ``T_w(0)``
    reaches ``min_denominator`` (whichever is given; both means both).
    ``x = T_w(0)``, which for the Gauss map is ``[a_1, ..., a_L]``.
    """
    if length is None and min_denominator is None:
        raise DomainError("give a length or a minimum denominator")
    rng = np.random.default_rng(seed)
    al, be, ga, de = 1, 0, 0, 1
    digits: list[int] = []
    while True:
        done_len = length is None or len(digits) >= length
        done_den = min_denominator is None or (
            abs(de) >= min_denominator and Fraction(be, de).denominator >= min_denominator
        )
        if done_len and done_den:
            break
        a = spec.alphabet[int(rng.choice(len(spec.alphabet), p=_digit_probs(spec, ga / de)))]
        a1, b1, c1, d1 = spec.system.matrix(a)
        al, be, ga, de = al * a1 + be * c1, al * b1 + be * d1, ga * a1 + de * c1, ga * b1 + de * d1
        digits.append(a)
    return SampledPoint(Word(digits), Fraction(be, de))


def sample_points(spec: GibbsSpec, count: int, seed=0, **kwargs) -> list[SampledPoint]:
    """Independent samples on child streams of one seed sequence."""
    children = np.random.SeedSequence(seed).spawn(count)
    return ordered_map(lambda ss: sample_point(spec, seed=ss, **kwargs), children)


def required_denominator(seq: SequenceSpec, N: int, m_max: int) -> int:
    return (1 << GUARD_BITS) * m_max * max(seq.terms(N))


# ---------------------------------------------------------------------------
# Weyl sums


def _to_unit(r: int, q: int) -> float:
    # r / q in [0, 1) without a full-width big-integer division
    shift = max(0, q.bit_length() - 64)
    return (r >> shift) / (q >> shift)


def base_residues(x: Fraction, terms: Sequence[int]) -> list[int]:
    """``(n_k p) mod q`` for ``x = p/q``; frequency ``m`` multiplies these mod ``q``."""
    p, q = x.numerator, x.denominator
    return [(p * n) % q for n in terms]


def _phases(q: int, residues: Sequence[int], m: int) -> np.ndarray:
    return np.array([_to_unit((m * r) % q, q) for r in residues])


def weyl_partial_sums(x, terms: Sequence[int], m: int, residues: Sequence[int] | None = None) -> np.ndarray:
    """Cumulative sums ``sum_{k <= N} e^{2 pi i m n_k x}`` for ``N = 1..len(terms)``."""
    x = Fraction(x)
    if residues is None:
        residues = base_residues(x, terms)
    return np.cumsum(np.exp(2j * np.pi * _phases(x.denominator, residues, m)))


def weyl_sum(x, seq: SequenceSpec, N: int, m: int) -> complex:
    """``(1/N) sum_{k=1}^N e^{2 pi i m n_k x}``; ``x`` is used as an exact rational."""
    if m < 0:
        raise DomainError("frequency m must be nonnegative")
    if m == 0:
        return 1 + 0j
    return complex(weyl_partial_sums(x, seq.terms(N), m)[-1] / N)


@dataclass(frozen=True)
class DelRow:
    m: int
    N: int
    value: complex

    @property
    def abs(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class DelReport:
    rows: list[DelRow]
    series: dict[int, float]

    def max_abs(self, N: int) -> float:
        return max(r.abs for r in self.rows if r.N == N)


def del_report(x, seq: SequenceSpec, m_max: int, N_grid: Sequence[int]) -> DelReport:
    """``W_N(m)`` for ``m = 1..m_max`` and ``N`` in the grid.

    ``series[m]`` is ``sum_N |W_N(m)|^2 / N`` over the grid, a finite
    surrogate for the series in the Davenport-Erdos-LeVeque criterion.
    """
    N_grid = list(N_grid)
    if not N_grid or any(b <= a for a, b in zip(N_grid, N_grid[1:])) or N_grid[0] < 1:
        raise DomainError("N_grid must be positive and strictly increasing")
    terms = seq.terms(N_grid[-1])
    x = Fraction(x)
    residues = base_residues(x, terms)

    def cell(m):
        sums = weyl_partial_sums(x, terms, m, residues)
        return [DelRow(m, N, complex(sums[N - 1] / N)) for N in N_grid]

    per_m = ordered_map(cell, range(1, m_max + 1))
    rows = [r for cells in per_m for r in cells]
    series = {cells[0].m: math.fsum(r.abs**2 / r.N for r in cells) for cells in per_m}
    return DelReport(rows, series)
