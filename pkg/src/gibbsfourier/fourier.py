"""Fourier transforms of atomic measures, multiplicative convolutions and
exponential sums over regular blocks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import BudgetError, DegenerateError, DomainError
from .parallel import ordered_map
from .thermo import DiscreteMeasure, RegularTree, ZetaSystem, zeta_table

log = logging.getLogger(__name__)

MERGE_TOL = 1e-14
CHUNK = 1 << 22  # atoms x frequencies per vectorised slab


def fourier_transform(m: DiscreteMeasure, xi):
    """``sum_a w_a exp(-2 pi i xi x_a)``; vectorised over ``xi``."""
    xis = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty(xis.size, dtype=complex)
    step = max(1, CHUNK // len(m))
    for start in range(0, xis.size, step):
        block = xis[start: start + step]
        phase = np.exp(-2j * np.pi * np.outer(block, m.atoms))
        out[start: start + step] = phase @ m.weights
    return out if np.ndim(xi) else complex(out[0])


# ---------------------------------------------------------------------------
# decay scans


@dataclass(frozen=True)
class Fit:
    """Slope of ``-log y`` against ``log x`` with a two-sided confidence band."""

    exponent: float
    intercept: float
    stderr: float
    lower: float
    upper: float
    residual: float
    points: int


def fit_decay(x: Sequence[float], y: Sequence[float], level: float = 0.95) -> Fit:
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 3:
        raise DegenerateError("need at least three points to fit a decay exponent")
    res = stats.linregress(lx, ly)
    resid = ly - (res.slope * lx + res.intercept)
    q = stats.t.ppf(0.5 + level / 2, lx.size - 2)
    e = -float(res.slope)
    return Fit(
        e, float(res.intercept), float(res.stderr), e - q * res.stderr, e + q * res.stderr,
        float(np.sqrt(np.mean(resid**2))), int(lx.size),
    )


@dataclass(frozen=True)
class DecayBlock:
    j: int
    xi_lo: float
    xi_hi: float
    sup_abs: float
    n_samples: int
    aliased: bool


@dataclass(frozen=True)
class DecayScan:
    blocks: list[DecayBlock]
    fit: Fit | None
    xi_max: float
    resolution_warning: bool

    @property
    def exponent(self) -> float:
        return math.nan if self.fit is None else self.fit.exponent

    @property
    def valid_blocks(self) -> list[DecayBlock]:
        return [b for b in self.blocks if not b.aliased]


def block_frequencies(j: int, samples: int, spacing: str = "log") -> np.ndarray:
    """Sample points in ``[2^j, 2^{j+1})``.

    ``log`` and ``linear`` place ``samples`` points; ``integer`` uses every
    integer in the block when there are at most ``samples`` of them and an
    evenly strided subset otherwise.
    """
    lo, hi = 2.0**j, 2.0 ** (j + 1)
    if spacing == "log":
        return lo * 2.0 ** (np.arange(samples) / samples)
    if spacing == "linear":
        return lo + (hi - lo) * np.arange(samples) / samples
    if spacing == "integer":
        first, last = math.ceil(lo), math.ceil(hi) - 1
        if last < first:
            return np.array([lo])
        stride = max(1, -(-(last - first + 1) // samples))
        return np.arange(first, last + 1, stride, dtype=float)
    raise DomainError(f"unknown spacing {spacing!r}")


def aliasing_limit(m: DiscreteMeasure) -> float:
    """``0.1 / max cell length``: beyond this the atoms no longer stand in for the cells."""
    if m.cell_lengths is None:
        gaps = np.diff(m.atoms)
        scale = gaps.max() if gaps.size else 1.0
    else:
        scale = float(np.max(m.cell_lengths))
    return 0.1 / scale


def decay_scan(
    m: DiscreteMeasure,
    j_range: Sequence[int],
    samples_per_block: int = 256,
    spacing: str = "log",
    fit_from: int | None = None,
) -> DecayScan:
    """Sampled ``sup |m^(xi)|`` over each dyadic block with a log-log decay fit.

    Blocks reaching past :func:`aliasing_limit` are flagged and excluded from
    the fit; ``fit_from`` drops blocks with smaller ``j`` from the fit.
    """
    if samples_per_block < 64:
        raise DomainError("samples_per_block must be at least 64")
    j_range = list(j_range)
    xi_max = aliasing_limit(m)
    warn = False
    if m.cell_lengths is not None:
        reach = 1.0 / float(np.min(m.cell_lengths))
        warn = 2.0 ** (max(j_range) + 1) > reach
        if warn:
            log.warning("scan reaches past 1/min cell length %.3g", reach)

    def one(j):
        xs = block_frequencies(j, samples_per_block, spacing)
        sup = float(np.max(np.abs(fourier_transform(m, xs))))
        return DecayBlock(j, 2.0**j, 2.0 ** (j + 1), sup, int(xs.size), 2.0 ** (j + 1) > xi_max)

    blocks = ordered_map(one, j_range)
    usable = [b for b in blocks if not b.aliased and (fit_from is None or b.j >= fit_from)]
    fit = None
    if len(usable) >= 3:
        fit = fit_decay([b.xi_lo for b in usable], [max(b.sup_abs, 1e-300) for b in usable])
    return DecayScan(blocks, fit, xi_max, warn)


# ---------------------------------------------------------------------------
# multiplicative convolution and dyadic pieces


def merge_atoms(atoms: np.ndarray, weights: np.ndarray, tol: float = MERGE_TOL) -> DiscreteMeasure:
    """Sort and merge atoms within ``tol`` of the first atom of their group."""
    order = np.argsort(atoms, kind="stable")
    atoms, weights = atoms[order], weights[order]
    keep_atoms, keep_weights = [], []
    start = atoms[0]
    group_w: list[float] = []
    for x, w in zip(atoms, weights):
        if x - start > tol:
            keep_atoms.append(start)
            keep_weights.append(math.fsum(group_w))
            start, group_w = x, []
        group_w.append(w)
    keep_atoms.append(start)
    keep_weights.append(math.fsum(group_w))
    return DiscreteMeasure(np.array(keep_atoms), np.array(keep_weights))


def mult_convolution(m1: DiscreteMeasure, m2: DiscreteMeasure, budget: int = 1 << 24) -> DiscreteMeasure:
    """Pushforward of ``m1 x m2`` under ``(x, y) -> x y``."""
    if len(m1) * len(m2) > budget:
        raise BudgetError(f"{len(m1)} x {len(m2)} products exceed budget {budget}")
    atoms = np.multiply.outer(m1.atoms, m2.atoms).ravel()
    weights = np.multiply.outer(m1.weights, m2.weights).ravel()
    return merge_atoms(atoms, weights)


def dyadic_scale(x: np.ndarray) -> np.ndarray:
    """``i`` with ``x in (2^{i-1}, 2^i]``."""
    mant, expo = np.frexp(np.asarray(x, dtype=float))
    return np.where(mant == 0.5, expo - 1, expo)


def dyadic_decompose(m: DiscreteMeasure, R: float) -> list[tuple[int, DiscreteMeasure]]:
    """Split ``m`` by dyadic scale and rescale each piece into ``(1/2, 1]``.

    A power of two ``2^i`` belongs to the piece of scale ``i``.
    """
    if R < 1:
        raise DomainError("R must be at least 1")
    if np.any(m.atoms < 1.0 / R) or np.any(m.atoms > R):
        raise DomainError(f"atoms outside [1/{R}, {R}]")
    scale = dyadic_scale(m.atoms)
    out = []
    for i in np.unique(scale):
        sel = scale == i
        out.append((int(i), DiscreteMeasure(np.ldexp(m.atoms[sel], -int(i)), m.weights[sel])))
    return out


def reassemble(pieces: Sequence[tuple[int, DiscreteMeasure]]) -> DiscreteMeasure:
    atoms = np.concatenate([np.ldexp(p.atoms, i) for i, p in pieces])
    weights = np.concatenate([p.weights for _, p in pieces])
    return DiscreteMeasure.from_points(atoms, weights)


@dataclass(frozen=True)
class BallReport:
    kappa: float
    rho_grid: list[float]
    max_mass: list[float]
    worst_ratio: float

    @property
    def holds(self) -> bool:
        return self.worst_ratio < 1.0


def max_ball_mass(m: DiscreteMeasure, rho: float) -> float:
    """``max_a m(B(a, rho))`` over real centres ``a`` (closed balls)."""
    cum = np.concatenate([[0.0], np.cumsum(m.weights)])
    right = np.searchsorted(m.atoms, m.atoms + 2.0 * rho * (1 + 1e-15), side="right")
    return float(np.max(cum[right] - cum[:-1]))


def bourgain_hypothesis_check(m: DiscreteMeasure, kappa: float, rho_grid: Sequence[float]) -> BallReport:
    """Largest ``m(B(a, rho)) / rho^kappa`` over the grid; the hypothesis holds when it is below 1."""
    if abs(m.total_mass - 1.0) > 1e-12:
        raise DomainError(f"measure has mass {m.total_mass}, expected 1")
    if m.atoms[0] < 0.5 or m.atoms[-1] > 1.0:
        raise DomainError("measure must live on [1/2, 1]")
    grid = list(rho_grid)
    masses = [max_ball_mass(m, r) for r in grid]
    worst = max(mass / r**kappa for mass, r in zip(masses, grid))
    return BallReport(kappa, grid, masses, float(worst))


# ---------------------------------------------------------------------------
# exponential sums over regular blocks


def exp_sum(zetas: Sequence[ZetaSystem], eta: float) -> complex:
    """``N^-k sum_{b_1..b_k} exp(2 pi i eta prod_j zeta_j(b_j))``."""
    if not zetas:
        raise DomainError("need at least one zeta table")
    prod = np.ones(1)
    for z in zetas:
        prod = np.multiply.outer(prod, z.values).ravel()
    return complex(np.mean(np.exp(2j * np.pi * eta * prod)))


def eta_window(tree: RegularTree) -> tuple[float, float]:
    return tree.eta_window()


def frequency_scale(tree: RegularTree, k: int, rho: float, with_lambda: bool = True) -> float:
    """``|xi| = rho e^{(2k + 3/2) lambda n}`` matching the ``eta`` scale ``e^{3 lambda n/2}``."""
    lam = tree.lambda_hat if with_lambda else 1.0
    return rho * math.exp((2 * k + 1.5) * lam * tree.n)


@dataclass(frozen=True)
class ExpSumScan:
    window: tuple[float, float]
    eta: list[float]
    max_abs: list[float]
    n_blocks: int
    fit: Fit | None
    excluded: list[float]

    def decade_ratio(self) -> float:
        """Max over the top decade of the window divided by max over the bottom decade."""
        lo, hi = self.window
        eta = np.asarray(self.eta)
        vals = np.asarray(self.max_abs)
        bottom = vals[eta <= 10 * lo].max()
        top = vals[eta >= hi / 10].max()
        return float(top / bottom)


def expsum_decay_scan(
    tree: RegularTree,
    blocks: Sequence[Sequence],
    eta_grid: Sequence[float] | None = None,
    points: int = 64,
) -> ExpSumScan:
    """``max_A |exp_sum(zeta_A, eta)|`` over the given blocks ``A`` in ``R_n^{k+1}``.

    ``eta_grid`` defaults to ``points`` log-uniform values spanning the
    window ``J_n``; values outside the window are dropped and listed.
    """
    if not blocks:
        raise DegenerateError("no well-distributed blocks to scan")
    lo, hi = tree.eta_window()
    if eta_grid is None:
        eta_grid = np.geomspace(lo, hi, points)
    eta_grid = [float(e) for e in eta_grid]
    inside = [e for e in eta_grid if lo <= abs(e) <= hi]
    excluded = [e for e in eta_grid if not lo <= abs(e) <= hi]
    tables = [zeta_table(tree, A) for A in blocks]

    def worst(eta):
        return max(abs(exp_sum(z, eta)) for z in tables)

    vals = ordered_map(worst, inside)
    fit = None
    if len(inside) >= 3 and min(vals) > 0:
        fit = fit_decay(inside, vals)
    return ExpSumScan((lo, hi), inside, vals, len(blocks), fit, excluded)
