"""Exact continued-fraction arithmetic on finite digit words.

All quantities are Python integers or ``Fraction``; nothing here rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, IdentityError
from .symbolic import Word


@dataclass(frozen=True)
class ContinuantPair:
    p: int
    q: int

    def __post_init__(self):
        if self.q < 1 or self.p < 0:
            raise IdentityError(f"invalid continuant pair ({self.p}, {self.q})")
        if math.gcd(self.p, self.q) != 1:
            raise IdentityError(f"continuant pair ({self.p}, {self.q}) not coprime")

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


def _digits(w: Sequence[int]) -> tuple[int, ...]:
    return tuple(Word(w))


def continuant_table(w: Sequence[int]) -> tuple[list[int], list[int]]:
    """Lists ``p[k+1], q[k+1]`` for ``k = -1..n``, i.e. index 0 is the ``-1`` seed."""
    p, q = [1, 0], [0, 1]
    for a in _digits(w):
        p.append(a * p[-1] + p[-2])
        q.append(a * q[-1] + q[-2])
    return p, q


def continuants(w: Sequence[int]) -> ContinuantPair:
    """``(p_n, q_n)`` with ``[a_1, ..., a_n] = p_n / q_n``."""
    p, q = continuant_table(w)
    return ContinuantPair(p[-1], q[-1])


def q_sequence(w: Sequence[int]) -> list[int]:
    """``[q_0, q_1, ..., q_n]``."""
    return continuant_table(w)[1][1:]


def cf_value(w: Sequence[int]) -> Fraction:
    return continuants(w).value


def nested_value(w: Sequence[int]) -> Fraction:
    """Fold-right evaluation of ``1/(a_1 + 1/(a_2 + ...))``; independent of the recurrence."""
    x = Fraction(0)
    for a in reversed(_digits(w)):
        x = 1 / (a + x)
    return x


def check_determinant(w: Sequence[int]) -> int:
    """Return ``q_n p_{n-1} - q_{n-1} p_n`` after checking it equals ``(-1)^n``."""
    w = _digits(w)
    if not w:
        raise DomainError("determinant identity needs a nonempty word")
    p, q = continuant_table(w)
    value = q[-1] * p[-2] - q[-2] * p[-1]
    if value != (-1) ** len(w):
        raise IdentityError(f"determinant identity failed for {w}: {value}")
    return value


@dataclass(frozen=True)
class MirrorReport:
    q_n: int
    q_n_mirror: int
    q_prev: int
    p_n_mirror: int

    @property
    def ok(self) -> bool:
        return self.q_n == self.q_n_mirror and self.q_prev == self.p_n_mirror


def mirror_identities(w: Sequence[int]) -> MirrorReport:
    """Check ``q_n(w) = q_n(w^<-)`` and ``q_{n-1}(w) = p_n(w^<-)``."""
    w = Word(w)
    if not w:
        raise DomainError("mirror identities need a nonempty word")
    _, q = continuant_table(w)
    rev = continuants(w.mirror())
    report = MirrorReport(q[-1], rev.q, q[-2], rev.p)
    if not report.ok:
        raise IdentityError(f"mirror identity failed for {w}: {report}")
    return report


def interval_length(w: Sequence[int]) -> Fraction:
    """Exact ``|I_w| = 1 / (q_n (q_n + q_{n-1}))``."""
    w = _digits(w)
    if not w:
        raise DomainError("interval length needs a nonempty word")
    _, q = continuant_table(w)
    return Fraction(1, q[-1] * (q[-1] + q[-2]))


def length_bounds_check(w: Sequence[int]) -> bool:
    """``q_n^-2 / 4 <= |I_w| <= q_n^-2``."""
    length = interval_length(w)
    qn = continuants(w).q
    return Fraction(1, 4 * qn * qn) <= length <= Fraction(1, qn * qn)


def quasi_multiplicativity(w: Sequence[int], k: int) -> Fraction:
    """``q_n(w) / (q_{n-k}(prefix) q_k(suffix))`` for the split after ``n - k`` digits."""
    w = _digits(w)
    n = len(w)
    if not 1 <= k < n:
        raise DomainError(f"need 1 <= k < {n}, got k={k}")
    b, c = w[: n - k], w[n - k:]
    return Fraction(continuants(w).q, continuants(b).q * continuants(c).q)


def identity_suite(w: Sequence[int], k: int | None = None) -> None:
    """Run every exact identity on one word; raises ``IdentityError`` on failure."""
    w = _digits(w)
    pair = continuants(w)
    if pair.value != nested_value(w):
        raise IdentityError(f"recurrence disagrees with nested fraction for {w}")
    check_determinant(w)
    mirror_identities(w)
    if not length_bounds_check(w):
        raise IdentityError(f"interval length outside its bounds for {w}")
    if len(w) < 2:
        return
    if k is not None:
        ratios = {k: quasi_multiplicativity(w, k)}
    else:
        ratios = _all_quasi_ratios(w)
    for kk, r in ratios.items():
        if not Fraction(1, 2) <= r <= 4:
            raise IdentityError(f"quasi-multiplicativity ratio {r} for {w}, k={kk}")


def _suffix_denominators(w: tuple[int, ...]) -> list[int]:
    """``q(w[j:])`` for ``j = 0..n-1``, folding from the right."""
    # [a, rest] = q_rest / (a q_rest + p_rest)
    out = [0] * len(w)
    p, q = 0, 1
    for j in range(len(w) - 1, -1, -1):
        p, q = q, w[j] * q + p
        out[j] = q
    return out


def _all_quasi_ratios(w: tuple[int, ...]) -> dict[int, Fraction]:
    n = len(w)
    q = continuant_table(w)[1]
    suffix = _suffix_denominators(w)
    # prefix of length n - k has q = q[n - k + 1] in the seeded table
    return {k: Fraction(q[-1], q[n - k + 1] * suffix[n - k]) for k in range(1, n)}
