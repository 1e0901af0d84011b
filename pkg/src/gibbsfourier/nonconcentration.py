"""Counting statistics for distortions ``T''_{ab}/T'_{ab}`` over regular words.

These are the quantities behind the non-concentration (nonlinearity)
condition: how many regular continuations ``c`` produce a distortion within
``rho`` of a given one, the triple counts that feed the well-distribution of
blocks, and the Gauss-specific reduction of distortions to continued-fraction
values of mirrored words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .continuants import cf_value
from .errors import DegenerateError, DomainError, UnsupportedError
from .symbolic import Level, MarkovSystem, Word, concat_level, distortion, mobius_product, word_level
from .thermo import RegularTree, zeta_values

X_GRID = tuple(Fraction(i, 16) for i in range(17))
EPS3 = 0.25


def _check_regular(tree: RegularTree, a: Sequence[int]) -> Word:
    a = Word(a)
    if a not in tree.word_index:
        raise DomainError(f"{tuple(a)} is not a regular word of depth {tree.n}")
    return a


def _joined(tree: RegularTree, a: Sequence[int]) -> Level:
    """Level holding ``a b`` for every regular ``b``, in tree order."""
    if len(a) == 0:
        return tree.level
    return concat_level(tree.system, word_level(tree.system, [a], tree.level.alphabet), tree.level)


def distortion_set(tree: RegularTree, a: Sequence[int], x, exact: bool = False) -> np.ndarray | list:
    """``T''_{ab}(x) / T'_{ab}(x)`` for every regular ``b`` (a multiset, tree order).

    With ``exact=True`` and rational ``x`` the values are Fractions.
    """
    a = _check_regular(tree, a)
    if exact:
        x = Fraction(x)
        return [distortion(tree.system, a + b, x) for b in tree.words]
    return _joined(tree, a).distortion(float(x))


def rho_range(tree: RegularTree) -> tuple[float, float]:
    return math.exp(-tree.lambda_hat * tree.n / 2), 1.0


def _check_rho(tree: RegularTree, rho: float) -> None:
    lo, hi = rho_range(tree)
    if not lo <= rho <= hi:
        raise DomainError(f"rho={rho} outside [{lo:.6g}, {hi}]")


def _close_counts(values: np.ndarray, radius: float) -> np.ndarray:
    """For each value, how many entries lie within ``radius`` (itself included)."""
    srt = np.sort(values)
    return np.searchsorted(srt, values + radius, side="right") - np.searchsorted(
        srt, values - radius, side="left"
    )


def nonlinearity_counter(tree: RegularTree, a: Sequence[int], b: Sequence[int], x, rho: float) -> int:
    """``#{c regular : |D(ab, x) - D(ac, x)| <= rho}``."""
    _check_rho(tree, rho)
    a = _check_regular(tree, a)
    b = _check_regular(tree, b)
    values = _joined(tree, a).distortion(float(x))
    target = values[tree.word_index[b]]
    return int(np.count_nonzero(np.abs(values - target) <= rho))


def dyadic_grid(lo: float, hi: float) -> list[float]:
    """Powers of two in ``[lo, hi]``, decreasing."""
    if lo > hi or lo <= 0:
        return []
    top = math.floor(math.log2(hi))
    bottom = math.ceil(math.log2(lo))
    return [2.0**e for e in range(top, bottom - 1, -1)]


@dataclass(frozen=True)
class NonConcReport:
    n: int
    size: int
    rho_grid: list[float]
    counts: list[int]
    kappa_hat: float
    C0_hat: float
    residual: float
    bound_ok: list[bool]

    def bound(self, rho: float) -> float:
        return self.C0_hat * rho**self.kappa_hat * self.size

    def rows(self) -> Iterator[tuple]:
        for rho, count, ok in zip(self.rho_grid, self.counts, self.bound_ok):
            yield self.n, rho, count, self.bound(rho), ok


def fit_power_law(scales: Sequence[float], ratios: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares slope of ``log ratio`` on ``log scale``, clamped at zero.

    Returns ``(exponent, constant, rms residual)`` where ``constant`` is the
    smallest value with ``ratio <= constant * scale**exponent`` on the grid.
    """
    ls = np.log(np.asarray(scales, dtype=float))
    lr = np.log(np.asarray(ratios, dtype=float))
    if ls.size < 2 or np.ptp(ls) == 0:
        return 0.0, float(np.exp(lr.max())), 0.0
    slope, intercept = np.polyfit(ls, lr, 1)
    residual = float(np.sqrt(np.mean((lr - (slope * ls + intercept)) ** 2)))
    kappa = max(0.0, float(slope))
    const = float(np.exp(np.max(lr - kappa * ls)))
    return kappa, const, residual


def nonconcentration_report(
    tree: RegularTree,
    rho_grid: Sequence[float] | None = None,
    x_grid: Sequence = X_GRID,
    words: Sequence[Sequence[int]] | None = None,
) -> NonConcReport:
    """Worst-case counter over ``(a, b, x)`` for each ``rho``, with a power-law fit.

    ``words`` restricts the prefixes ``a`` (default: every regular word).
    """
    if rho_grid is None:
        rho_grid = dyadic_grid(*rho_range(tree))
    rho_grid = sorted(rho_grid, reverse=True)
    for rho in rho_grid:
        _check_rho(tree, rho)
    if not rho_grid:
        raise DomainError("empty rho grid")
    prefixes = tree.words if words is None else [_check_regular(tree, a) for a in words]
    worst = np.zeros(len(rho_grid), dtype=np.int64)
    for a in prefixes:
        joined = _joined(tree, a)
        for x in x_grid:
            values = joined.distortion(float(x))
            for i, rho in enumerate(rho_grid):
                worst[i] = max(worst[i], int(_close_counts(values, rho).max()))
    size = len(tree)
    kappa, C0, residual = fit_power_law(rho_grid, worst / size)
    ok = [bool(c <= C0 * r**kappa * size * (1 + 1e-12)) for r, c in zip(rho_grid, worst)]
    return NonConcReport(tree.n, size, list(rho_grid), [int(c) for c in worst], kappa, C0, residual, ok)


# ---------------------------------------------------------------------------
# Gauss reduction to continued fractions


def _require_gauss(system: MarkovSystem) -> None:
    if system.name != "gauss":
        raise UnsupportedError(f"continued-fraction reduction needs the Gauss map, not {system.name}")


@dataclass(frozen=True)
class Sandwich:
    lhs: Fraction
    mid: Fraction
    rhs: Fraction

    @property
    def ok(self) -> bool:
        return self.lhs <= self.mid <= self.rhs


def mirror_value(w: Sequence[int]) -> Fraction:
    """``[w^<-]``, the continued fraction of the reversed word (0 for the empty word)."""
    w = Word(w)
    return cf_value(w.mirror()) if w else Fraction(0)


def distdioph_check(system: MarkovSystem, b: Sequence[int], c: Sequence[int], x) -> Sandwich:
    """``|[b^<-] - [c^<-]| / 2 <= |D(b, x) - D(c, x)| <= 2 |[b^<-] - [c^<-]|`` exactly.

    The middle term comes from the chain rule on rational ``x``; the outer
    terms from continuants of the mirrored words.
    """
    _require_gauss(system)
    b, c = Word(b), Word(c)
    if len(b) != len(c):
        raise DomainError("words must have equal length")
    x = Fraction(x)
    gap = abs(mirror_value(b) - mirror_value(c))
    mid = abs(distortion(system, b, x) - distortion(system, c, x))
    return Sandwich(gap / 2, mid, 2 * gap)


def distdioph_sweep(system: MarkovSystem, b: Sequence[int], c: Sequence[int], xs: Sequence) -> list[Sandwich]:
    """``distdioph_check`` over many ``x`` with one matrix product per word.

    The middle term uses ``T_w''/T_w' = -2 gamma / (gamma x + delta)`` for the
    Moebius map ``T_w`` rather than the chain rule.
    """
    _require_gauss(system)
    b, c = Word(b), Word(c)
    if len(b) != len(c):
        raise DomainError("words must have equal length")
    gap = abs(mirror_value(b) - mirror_value(c))
    _, _, gb, db = mobius_product(system, b)
    _, _, gc, dc = mobius_product(system, c)
    out = []
    for x in xs:
        x = Fraction(x)
        mid = abs(Fraction(-2 * gb) / (gb * x + db) - Fraction(-2 * gc) / (gc * x + dc))
        out.append(Sandwich(gap / 2, mid, 2 * gap))
    return out


def dist_concat_slack(tree: RegularTree, a: Sequence[int], b: Sequence[int], c: Sequence[int]) -> float:
    """``|[(ab)^<-] - [(ac)^<-]| + 2 C e^{-lambda n/2} - |[b^<-] - [c^<-]|``; nonnegative when the bound holds."""
    _require_gauss(tree.system)
    a, b, c = Word(a), Word(b), Word(c)
    if len(b) != len(c):
        raise DomainError("words must have equal length")
    inner = abs(mirror_value(b) - mirror_value(c))
    outer = abs(mirror_value(a + b) - mirror_value(a + c))
    margin = 2.0 * tree.C_eps * math.exp(-tree.lambda_hat * tree.n / 2)
    return float(outer - inner) + margin


# ---------------------------------------------------------------------------
# triple counts


def sigma_range(tree: RegularTree) -> tuple[float, float]:
    return math.exp(-tree.lambda_hat * tree.n), 1.0


def _check_sigma(tree: RegularTree, sigma: float) -> None:
    lo, hi = sigma_range(tree)
    if not lo <= sigma <= hi:
        raise DomainError(f"sigma={sigma} outside [{lo:.6g}, {hi}]")


def triple_count_D1(
    tree: RegularTree, a: Sequence[int], sigma: float, x_source: Sequence[float] | None = None
) -> int:
    """Triples ``(b, c, d)`` with ``|D(ab, x_d) - D(ac, x_d)| <= sqrt(sigma)/2``.

    ``x_source`` defaults to the centres ``x_d`` of the regular cylinders.
    """
    _check_sigma(tree, sigma)
    a = _check_regular(tree, a)
    joined = _joined(tree, a)
    xs = tree.centers() if x_source is None else np.asarray(x_source, dtype=float)
    radius = 0.5 * math.sqrt(sigma)
    return int(sum(_close_counts(joined.distortion(x), radius).sum() for x in xs))


def triple_count_D2(tree: RegularTree, a: Sequence[int], sigma: float) -> int:
    """Triples with distortion gap ``>= sqrt(sigma)/2`` but ``|T'_{ab}(x_d) - T'_{ac}(x_d)| <= e^{-2 lambda n} sigma``."""
    _check_sigma(tree, sigma)
    a = _check_regular(tree, a)
    joined = _joined(tree, a)
    radius = 0.5 * math.sqrt(sigma)
    close = math.exp(-2.0 * tree.lambda_hat * tree.n) * sigma
    total = 0
    for x in tree.centers():
        dist = joined.distortion(x)
        der = joined.derivative(x)
        far = np.abs(dist[:, None] - dist[None, :]) >= radius
        near = np.abs(der[:, None] - der[None, :]) <= close
        total += int(np.count_nonzero(far & near))
    return total


@dataclass(frozen=True)
class TripleBounds:
    d1: float
    d2_proof: float
    d2_statement: float


def triple_bounds(tree: RegularTree, sigma: float, kappa: float | None = None) -> TripleBounds:
    """Right-hand sides of the D1 and D2 bounds at ``sigma``.

    D1 uses ``alpha = 192 e^lambda``, ``beta = 11 lambda`` and ``kappa``
    (default ``s_hat``); D2 is given with both constants in circulation.
    """
    lam, s, n = tree.lambda_hat, tree.s_hat, tree.n
    kappa = s if kappa is None else kappa
    C, log_ceps = tree.gibbs_constant, tree.epsilon * n
    mass = math.exp(3.0 * lam * s * n)
    d1 = 192.0 * math.exp(lam) * math.exp(11.0 * lam * log_ceps) * mass * sigma ** (kappa / 2)
    tail = C**2 * math.exp(lam) * mass * sigma ** (s / 2)
    return TripleBounds(
        d1,
        96.0**2 * tail * math.exp(11.0 * lam * log_ceps),
        96.0 * tail * math.exp(10.0 * lam * log_ceps),
    )


# ---------------------------------------------------------------------------
# well-distributed blocks


def sigma_grid(tree: RegularTree, eps3: float = EPS3) -> list[float]:
    lam, n = tree.lambda_hat, tree.n
    grid = dyadic_grid(math.exp(-lam * n), math.exp(-lam * eps3 * n / 4))
    if not grid:
        raise DomainError(f"no dyadic sigma in the window for eps3={eps3}")
    return grid


@dataclass
class WellDistributed:
    """Blocks ``(a_0, ..., a_k)`` whose consecutive pairs all pass the zeta test."""

    tree: RegularTree
    k: int
    s0: float
    sigma_grid: list[float]
    good_pairs: np.ndarray
    count: int

    @property
    def total(self) -> int:
        return len(self.tree) ** (self.k + 1)

    @property
    def complement_fraction(self) -> float:
        return 1.0 - self.count / self.total

    def __len__(self) -> int:
        return self.count

    def blocks(self) -> Iterator[tuple[Word, ...]]:
        """Every well-distributed block, in lexicographic tree order."""
        words = self.tree.words
        succ = [np.flatnonzero(row) for row in self.good_pairs]

        def extend(path):
            if len(path) == self.k + 1:
                yield tuple(words[i] for i in path)
                return
            for j in succ[path[-1]]:
                yield from extend(path + [int(j)])

        for i in range(len(words)):
            yield from extend([i])

    def sample(self, rng: np.random.Generator, size: int) -> list[tuple[Word, ...]]:
        """Uniform sample (with replacement) from the well-distributed blocks."""
        if self.count == 0:
            raise DegenerateError("no well-distributed blocks")
        G = self.good_pairs.astype(float)
        # paths[i][v] = number of good paths of length i starting at v
        paths = [np.ones(G.shape[0])]
        for _ in range(self.k):
            paths.append(G @ paths[-1])
        words = self.tree.words
        out = []
        for _ in range(size):
            p = paths[self.k] / paths[self.k].sum()
            v = int(rng.choice(len(p), p=p))
            path = [v]
            for step in range(self.k, 0, -1):
                w = G[v] * paths[step - 1]
                v = int(rng.choice(len(w), p=w / w.sum()))
                path.append(v)
            out.append(tuple(words[i] for i in path))
        return out


def pair_is_good(tree: RegularTree, left, right, grid: Sequence[float], s0: float) -> bool:
    zeta = np.sort(zeta_values(tree, left, right))
    norm = math.exp(-2.0 * tree.lambda_hat * tree.s_hat * tree.n)
    for sigma in grid:
        pairs = int(_close_counts(zeta, sigma).sum())
        if norm * pairs > sigma**s0:
            return False
    return True


def well_distributed_blocks(
    tree: RegularTree, k: int, s0: float, eps3: float = EPS3
) -> WellDistributed:
    """Keep the blocks in ``R_n^{k+1}`` whose zeta maps do not concentrate at any scale in the grid.

    The zeta map for index ``j`` depends only on ``(a_{j-1}, a_j)``, so the
    test factors through a good-pair matrix and the kept count is
    ``1^T G^k 1``.
    """
    if k < 1:
        raise DomainError("k must be at least 1")
    grid = sigma_grid(tree, eps3)
    N = len(tree)
    G = np.zeros((N, N), dtype=bool)
    for i, left in enumerate(tree.words):
        for j, right in enumerate(tree.words):
            G[i, j] = pair_is_good(tree, left, right, grid, s0)
    counts = np.ones(N, dtype=object)
    Gi = G.astype(object)
    for _ in range(k):
        counts = Gi.dot(counts)
    return WellDistributed(tree, k, s0, grid, G, int(sum(counts)))


def default_s0(kappa_hat: float, s_hat: float) -> float:
    return min(kappa_hat, s_hat) / 4
