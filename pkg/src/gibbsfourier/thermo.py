"""Thermodynamic formalism on a finite alphabet at fixed depth.

Potentials are of the form ``phi = -s log|T'| - c`` where ``c`` is the
pressure shift that normalises ``P(phi)`` to zero.  Everything is evaluated
by exhaustive enumeration of words, vectorised over whole levels of the
symbolic tree.
"""

from __future__ import annotations

import functools
import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy import optimize, special

from .errors import DegenerateError, DomainError
from .symbolic import (
    Level,
    MarkovSystem,
    Word,
    branch_point,
    check_budget,
    concat_level,
    cylinder_center,
    enumerate_levels,
    get_system,
    log_abs_derivative,
    mobius_product,
    word_level,
)

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 2**22
PRESSURE_DEPTH = 12
GRID_POINTS = 33
DENSITY_NODES = 40
LD_REFINE = 6  # complement masses are stable to ~1e-4 from here on


@dataclass(frozen=True)
class GibbsSpec:
    system: MarkovSystem
    alphabet: tuple[int, ...]
    s: float
    n: int
    epsilon: float
    budget: int = DEFAULT_BUDGET
    pressure_shift: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "alphabet", self.system.digits_of(self.alphabet))
        if self.n < 1:
            raise DomainError(f"depth must be positive, got {self.n}")
        if self.epsilon <= 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if self.s < 0:
            raise DomainError(f"exponent s must be nonnegative, got {self.s}")
        check_budget(self.alphabet, self.n, self.budget)

    @property
    def shift(self) -> float:
        return 0.0 if self.pressure_shift is None else self.pressure_shift

    def to_config(self) -> dict:
        return {
            "map": self.system.name,
            "alphabet": [min(self.alphabet), max(self.alphabet)],
            "s": self.s,
            "n": self.n,
            "epsilon": self.epsilon,
            "budget": self.budget,
        }

    @classmethod
    def from_config(cls, config: dict) -> GibbsSpec:
        lo, hi = config["alphabet"]
        system = get_system(config["map"], max(hi, 2))
        return cls(
            system,
            tuple(range(int(lo), int(hi) + 1)),
            float(config["s"]),
            int(config["n"]),
            float(config["epsilon"]),
            int(config.get("budget", DEFAULT_BUDGET)),
        )


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite atomic measure with strictly increasing atoms.

    ``cell_lengths`` and ``words`` are optional per-atom annotations kept by
    measures built from cylinders.
    """

    atoms: np.ndarray
    weights: np.ndarray
    cell_lengths: np.ndarray | None = None
    words: np.ndarray | None = None

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.ndim != 1 or atoms.shape != weights.shape or atoms.size == 0:
            raise DomainError("atoms and weights must be equal-length nonempty vectors")
        if np.any(np.diff(atoms) <= 0):
            raise DomainError("atoms must be strictly increasing")
        if np.any(weights <= 0):
            raise DomainError("weights must be positive")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def __len__(self) -> int:
        return self.atoms.size

    def normalized(self) -> DiscreteMeasure:
        return replace(self, weights=self.weights / self.total_mass)

    @classmethod
    def from_points(cls, atoms, weights, cell_lengths=None, words=None) -> DiscreteMeasure:
        """Sort atoms, drop zero weights; duplicate atoms are rejected."""
        atoms = np.asarray(atoms, dtype=float)
        weights = np.asarray(weights, dtype=float)
        keep = weights > 0
        order = np.argsort(atoms[keep], kind="stable")

        def pick(v):
            return None if v is None else np.asarray(v)[keep][order]

        return cls(atoms[keep][order], weights[keep][order], pick(cell_lengths), pick(words))


# ---------------------------------------------------------------------------
# Birkhoff sums and the transfer operator


def birkhoff_sum(spec: GibbsSpec, w: Sequence[int], x) -> float:
    """``S_n phi(T_w x)`` for ``phi = -s log|T'| - c``, summed over suffix branch points."""
    w = Word(w)
    total = 0.0
    for i in range(len(w)):
        # phi(T^i T_w x) = s log|T_{a_{i+1}}'(T_{sigma^{i+1} w} x)| - c
        y = branch_point(spec.system, w[i + 1:], x)
        total += spec.s * log_abs_derivative(spec.system, w[i: i + 1], y) - spec.shift
    return total


def _tail_weight(system: MarkovSystem, s: float, x, cutoff: int):
    """Analytic ``sum_{a > cutoff} |T_a'(x)|^s``."""
    if system.name == "gauss":
        return special.zeta(2.0 * s, np.asarray(x, dtype=float) + cutoff + 1)
    if system.name == "lueroth":
        if s == 1 and isinstance(x, Fraction):
            return Fraction(1, cutoff + 1)
        if s == 1:
            return 1.0 / (cutoff + 1)
        # (a(a+1))^-s = (a+1/2)^-2s (1 + s/(4(a+1/2)^2) + ...)
        q = cutoff + 1.5
        return special.zeta(2.0 * s, q) + 0.25 * s * special.zeta(2.0 * s + 2.0, q)
    raise DomainError(f"no analytic tail for {system.name}")


def transfer_apply(
    spec: GibbsSpec,
    f: Callable,
    x,
    m: int = 1,
    tail: bool = False,
):
    """``L_phi^m f(x) = sum_{|w| = m} exp(S_m phi(T_w x)) f(T_w x)`` over the alphabet of ``spec``.

    ``x`` may be a float array (vectorised) or a ``Fraction`` (exact when ``s``
    is an integer and ``f`` returns Fractions).  With ``tail=True`` the digits
    beyond the largest alphabet letter contribute ``f(0)`` times their analytic
    weight; this only makes sense for ``m = 1`` on a full alphabet ``1..N``.
    """
    check_budget(spec.alphabet, m, spec.budget)
    system = spec.system
    if isinstance(x, Fraction):
        total = Fraction(0)
        for w in itertools.product(spec.alphabet, repeat=m):
            al, be, ga, de = mobius_product(system, w)
            den = ga * x + de
            deriv = abs(Fraction(al * de - be * ga) / den**2)
            weight = deriv ** int(spec.s) if float(spec.s).is_integer() else Fraction(float(deriv) ** spec.s)
            total += weight * f((al * x + be) / den)
        shift = spec.shift
        if shift:
            total *= Fraction(math.exp(-m * shift))
        if tail:
            total += _tail_weight(system, spec.s, x, max(spec.alphabet)) * f(Fraction(0))
        return total
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    level = enumerate_levels(system, spec.alphabet, m)[-1]
    out = np.zeros_like(xs)
    for i, xv in enumerate(xs):
        pts = level.point(xv)
        weights = np.exp(spec.s * level.log_abs_derivative(xv) - m * spec.shift)
        out[i] = np.dot(weights, f(pts))
    if tail:
        out = out + _tail_weight(system, spec.s, xs, max(spec.alphabet)) * f(np.zeros_like(xs))
    return out if np.ndim(x) else float(out[0])


def gauss_kuzmin_density(x):
    return 1.0 / ((1.0 + np.asarray(x, dtype=float)) * math.log(2.0))


# ---------------------------------------------------------------------------
# pressure


@dataclass(frozen=True)
class PressureEstimate:
    """Bounds for ``P(-s log|T'|)`` at depth ``m``.

    ``upper``/``lower`` are the sup/inf partition-function proxies
    ``(1/m) log sum_w sup|T_w'|^s``; ``ratio_upper``/``ratio_lower`` are
    min/max over a grid of ``h_{m+1}/h_m`` with ``h_m = L^m trial``, which
    bracket the pressure much more tightly.
    """

    s: float
    depth: int
    upper: float
    lower: float
    ratio_upper: float
    ratio_lower: float

    @property
    def value(self) -> float:
        return 0.5 * (self.ratio_upper + self.ratio_lower)

    @property
    def residual(self) -> float:
        return 0.5 * (self.ratio_upper - self.ratio_lower)


def _level_partition(level: Level, s: float, xs: np.ndarray, chunk: int = 1 << 16) -> np.ndarray:
    # h(x) = sum_w |T_w'(x)|^s for each x in xs
    out = np.zeros(xs.size)
    for start in range(0, len(level), chunk):
        sl = slice(start, start + chunk)
        logdet = np.log(np.abs(level.det[sl]))[:, None]
        den = np.log(np.abs(level.gamma[sl][:, None] * xs[None, :] + level.delta[sl][:, None]))
        out += np.exp(s * (logdet - 2.0 * den)).sum(axis=0)
    return out


def max_depth(alphabet: Sequence[int], budget: int, cap: int = PRESSURE_DEPTH) -> int:
    m = 0
    while m < cap and len(alphabet) ** (m + 1) <= budget:
        m += 1
    return m


def pressure_estimate(
    system: MarkovSystem,
    alphabet: Sequence[int],
    s: float,
    m: int = PRESSURE_DEPTH,
    budget: int = DEFAULT_BUDGET,
    trial: Callable | None = None,
) -> PressureEstimate:
    """Pressure of ``-s log|T'|`` restricted to ``alphabet`` at depth ``m``.

    The ratio bracket needs level ``m + 1``; with ``m = 0`` a ``trial``
    function (default 1) stands in for ``h_0``.
    """
    alphabet = system.digits_of(alphabet)
    check_budget(alphabet, m + 1, budget)
    levels = enumerate_levels(system, alphabet, m + 1)
    if m >= 1:
        lv = levels[m]
        logdet = np.log(np.abs(lv.det))
        sup_log = logdet - 2.0 * np.minimum(np.log(np.abs(lv.delta)), np.log(np.abs(lv.gamma + lv.delta)))
        inf_log = logdet - 2.0 * np.maximum(np.log(np.abs(lv.delta)), np.log(np.abs(lv.gamma + lv.delta)))
        upper = special.logsumexp(s * sup_log) / m
        lower = special.logsumexp(s * inf_log) / m
    else:
        upper, lower = math.inf, -math.inf
    xs = np.linspace(0.0, 1.0, GRID_POINTS)
    if trial is None and m >= 1:
        h_m = _level_partition(levels[m], s, xs)
        h_next = _level_partition(levels[m + 1], s, xs)
    else:
        trial = trial or (lambda t: np.ones_like(t))
        h_m = np.asarray(trial(xs), dtype=float)
        lv = levels[1]
        h_next = np.array(
            [np.dot(np.exp(s * lv.log_abs_derivative(x)), trial(lv.point(x))) for x in xs]
        )
        if m > 1:
            raise DomainError("trial functions are only supported at depth 0")
    ratio = np.log(h_next) - np.log(h_m)
    return PressureEstimate(s, m, float(upper), float(lower), float(ratio.max()), float(ratio.min()))


@dataclass(frozen=True)
class DimensionRoot:
    lower: float
    upper: float
    proxy_lower: float
    proxy_upper: float
    depth: int

    @property
    def value(self) -> float:
        return 0.5 * (self.lower + self.upper)


def _root(fn: Callable[[float], float], lo: float = 0.0, hi: float = 1.0) -> float:
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0:
        return lo
    if f_hi >= 0:
        return hi
    if f_lo < 0:
        return lo
    return optimize.bisect(fn, lo, hi, xtol=1e-12)


def dimension_root(
    system: MarkovSystem,
    alphabet: Sequence[int],
    m: int | None = None,
    budget: int = DEFAULT_BUDGET,
    trial: Callable | None = None,
) -> DimensionRoot:
    """Bisection for the zero of ``s -> P(-s log|T'|)`` on ``[0, 1]``.

    Pressure is decreasing in ``s``, so the root of an upper bound is an
    upper bound for the root.
    """
    alphabet = system.digits_of(alphabet)
    if m is None:
        m = max_depth(alphabet, budget)

    def est(s):
        return pressure_estimate(system, alphabet, s, m, budget, trial)

    lower = _root(lambda s: est(s).ratio_lower)
    upper = _root(lambda s: est(s).ratio_upper)
    if m >= 1:
        p_lower = _root(lambda s: est(s).lower)
        p_upper = _root(lambda s: est(s).upper)
    else:
        p_lower, p_upper = 0.0, 1.0
    return DimensionRoot(lower, upper, p_lower, p_upper, m)


def pressure_shift(spec: GibbsSpec) -> tuple[float, float]:
    """``(c, residual)``: the estimated pressure of ``-s log|T'|`` and its bracket half-width."""
    m = max_depth(spec.alphabet, spec.budget)
    est = pressure_estimate(spec.system, spec.alphabet, spec.s, m, spec.budget)
    return est.value, est.residual


def normalize(spec: GibbsSpec) -> GibbsSpec:
    """Fill in ``pressure_shift`` so that ``P(phi)`` is (numerically) zero."""
    if spec.pressure_shift is not None:
        return spec
    c, residual = pressure_shift(spec)
    log.debug("pressure shift %.12g (bracket half-width %.2g)", c, residual)
    return replace(spec, pressure_shift=c)


# ---------------------------------------------------------------------------
# Gibbs measures on the depth-n tree


class GibbsTree:
    """All depth ``0..n`` levels of a spec with Birkhoff data and Gibbs weights."""

    def __init__(self, spec: GibbsSpec):
        self.spec = normalize(spec)
        self.levels = enumerate_levels(spec.system, spec.alphabet, spec.n, spec.budget)
        top = self.levels[-1]
        logw = self.spec.s * top.log_abs_derivative(top.center_preimage())
        self.log_weights = logw - special.logsumexp(logw)
        self._marginals: dict[int, np.ndarray] = {}

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def size(self) -> int:
        return len(self.spec.alphabet)

    def marginal(self, k: int) -> np.ndarray:
        """Log masses of the depth-``k`` cylinders under the depth-``n`` measure."""
        if k not in self._marginals:
            w = self.log_weights.reshape(-1, self.size ** (self.n - k))
            self._marginals[k] = special.logsumexp(w, axis=1)
        return self._marginals[k]

    def prefix_index(self, k: int) -> np.ndarray:
        return np.arange(len(self.levels[-1])) // self.size ** (self.n - k)

    def log_derivative(self, k: int, where: str) -> np.ndarray:
        """``log|T_w'|`` over depth-``k`` words at the preimage of the centre, or its min/max."""
        lv = self.levels[k]
        if where == "center":
            return lv.log_abs_derivative(lv.center_preimage())
        ends = np.stack([lv.log_abs_derivative(0.0), lv.log_abs_derivative(1.0)])
        return ends.min(axis=0) if where == "min" else ends.max(axis=0)

    def gibbs_constant(self) -> float:
        """``max |log mu(I_w) - S_k phi(x)|`` exponentiated, over depths and points ``x in I_w``."""
        worst = 0.0
        for k in range(1, self.n + 1):
            lv = self.levels[k]
            logmu = self.marginal(k)
            for y in (0.0, 1.0, lv.center_preimage()):
                sphi = self.spec.s * lv.log_abs_derivative(y) - k * self.spec.shift
                worst = max(worst, float(np.max(np.abs(logmu - sphi))))
        return math.exp(worst)

    def measure(self) -> DiscreteMeasure:
        top = self.levels[-1]
        return DiscreteMeasure.from_points(
            top.centers(), np.exp(self.log_weights), top.lengths(), top.digits()
        )


def gibbs_measure(spec: GibbsSpec) -> DiscreteMeasure:
    """Depth-``n`` Gibbs approximation: atoms at cylinder centres, weights ``exp(S_n phi)`` normalised."""
    return GibbsTree(spec).measure()


def gauss_kuzmin_measure(
    cutoff: int = 10_000, max_length: float = 1e-3, branching: int = 200
) -> DiscreteMeasure:
    """Gauss measure ``dx / ((1 + x) log 2)`` discretised on an adaptive cylinder partition.

    Depth-1 cylinders ``a <= cutoff`` are split into children ``1..branching``
    plus one tail cell until every cell is shorter than ``max_length``.
    Weights are exact Gauss masses; mass beyond ``cutoff`` is dropped.
    """
    cells: list[tuple[float, float]] = []
    # each entry is the Moebius matrix (p', p, q', q) of a Gauss cylinder
    stack = [(0, 1, 1, a) for a in range(1, cutoff + 1)]
    t = 1.0 / (branching + 1)
    while stack:
        al, be, ga, de = stack.pop()
        lo, hi = sorted((be / de, (al + be) / (ga + de)))
        if hi - lo <= max_length:
            cells.append((lo, hi))
            continue
        for b in range(1, branching + 1):
            stack.append((be, al + b * be, de, ga + b * de))
        # children beyond the branching digit: image of [0, 1/(branching+1)]
        tail = (al * t + be) / (ga * t + de)
        cells.append(tuple(sorted((be / de, tail))))
    lo, hi = np.array(cells).T
    weights = (np.log1p(hi) - np.log1p(lo)) / math.log(2.0)
    return DiscreteMeasure.from_points(0.5 * (lo + hi), weights, hi - lo)


def invariant_density(spec: GibbsSpec, xs, depth: int | None = None) -> np.ndarray:
    """Unnormalised eigenfunction ``h`` of the transfer operator, ``h ~ L^m 1``.

    The depth-``n`` weights ``|T_w'|^s`` approximate the conformal measure
    ``nu``; the invariant equilibrium state is ``h nu``.
    """
    m = max_depth(spec.alphabet, spec.budget) if depth is None else depth
    level = enumerate_levels(spec.system, spec.alphabet, m, spec.budget)[-1]
    # h is analytic on [0, 1]; interpolate from Chebyshev nodes
    cheb = np.polynomial.Chebyshev.interpolate(
        lambda t: _level_partition(level, spec.s, np.asarray(t, dtype=float)), DENSITY_NODES, domain=[0, 1]
    )
    return cheb(np.asarray(xs, dtype=float))


def equilibrium_measure(spec: GibbsSpec) -> DiscreteMeasure:
    """Depth-``n`` atoms weighted by ``exp(S_n phi) h``, the invariant equilibrium state."""
    gt = GibbsTree(spec)
    top = gt.levels[-1]
    centres = top.centers()
    weights = np.exp(gt.log_weights) * invariant_density(gt.spec, centres)
    return DiscreteMeasure.from_points(centres, weights / weights.sum(), top.lengths(), top.digits())


def pressure_lyapunov(
    system: MarkovSystem, alphabet: Sequence[int], s: float, m: int = PRESSURE_DEPTH, step: float = 1e-4
) -> float:
    """``-dP/ds`` by a central difference of the pressure estimate."""
    lo = pressure_estimate(system, alphabet, s - step, m).value
    hi = pressure_estimate(system, alphabet, s + step, m).value
    return -(hi - lo) / (2 * step)


def lyapunov_estimate(measure: DiscreteMeasure, system: MarkovSystem) -> float:
    """``int log|T'| d mu`` by summing over atoms (normalised)."""
    vals = system.log_expansion(measure.atoms)
    return float(np.dot(measure.weights, vals) / measure.total_mass)


def cylinder_lyapunov(measure: DiscreteMeasure) -> float:
    """``-(1/n) sum mu(I_w) log|I_w|`` for a uniform-depth cylinder measure."""
    if measure.cell_lengths is None or measure.words is None:
        raise DomainError("measure carries no cylinder annotations")
    n = np.asarray(measure.words).shape[1]
    w = measure.weights / measure.total_mass
    return float(-np.dot(w, np.log(measure.cell_lengths)) / n)


@dataclass(frozen=True)
class Constants:
    lambda_hat: float
    s_hat: float
    shift: float
    depth: int


def estimate_constants(spec: GibbsSpec, n_ref: int | None = None) -> Constants:
    """Lyapunov exponent and dimension of the equilibrium state, frozen once per spec.

    ``lambda_hat`` integrates ``log|T'|`` against the depth-``n_ref``
    equilibrium measure; ``s_hat = s + c / lambda_hat`` since the entropy is
    ``s lambda + c`` for the equilibrium state of ``-s log|T'| - c``.
    """
    spec = normalize(spec)
    if n_ref is None:
        n_ref = spec.n + 4
    while n_ref > 1 and len(spec.alphabet) ** n_ref > spec.budget:
        n_ref -= 1
    ref = replace(spec, n=n_ref)
    lam = lyapunov_estimate(equilibrium_measure(ref), spec.system)
    return Constants(lam, spec.s + spec.shift / lam, spec.shift, n_ref)


# ---------------------------------------------------------------------------
# regular words


@dataclass
class RegularTree:
    """Regular words at depth ``n`` and the data needed by later stages."""

    spec: GibbsSpec
    n: int
    epsilon: float
    lambda_hat: float
    s_hat: float
    words: list[Word]
    index: np.ndarray
    level: Level
    kept_mass: float
    gibbs_constant: float
    mode: str
    gibbs: GibbsTree = field(repr=False)

    @property
    def C_eps(self) -> float:
        return math.exp(self.epsilon * self.n)

    @functools.cached_property
    def word_index(self) -> dict[Word, int]:
        return {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    @property
    def system(self) -> MarkovSystem:
        return self.spec.system

    def centers(self) -> np.ndarray:
        return self.level.centers()

    def eta_window(self) -> tuple[float, float]:
        """``J_n = [e^{lambda n/4}, C_eps e^{lambda n/2}]``."""
        lam, n = self.lambda_hat, self.n
        return math.exp(lam * n / 4), self.C_eps * math.exp(lam * n / 2)


def _scales(n: int) -> range:
    return range(max(1, n // 4), n + 1)


def _corridor_mask(gt: GibbsTree, k: int, lam: float, s_hat: float, eps: float, mode: str) -> np.ndarray:
    spec = gt.spec
    wheres = ("center",) if mode == "center" else ("min", "max")
    ok = np.ones(len(gt.levels[k]), dtype=bool)
    for where in wheres:
        spsi = gt.log_derivative(k, where)
        sphi = spec.s * spsi - k * spec.shift
        ok &= np.abs(spsi / k + lam) < eps
        with np.errstate(divide="ignore", invalid="ignore"):
            ok &= np.abs(sphi / spsi - s_hat) < eps
    return ok


def regular_words(
    spec: GibbsSpec,
    lambda_hat: float,
    s_hat: float,
    mode: str = "center",
    gibbs: GibbsTree | None = None,
) -> RegularTree:
    """Words whose prefixes of every length ``floor(n/4)..n`` satisfy both Birkhoff corridors.

    ``mode="center"`` evaluates Birkhoff sums at cylinder centres;
    ``mode="cylinder"`` requires the corridor on the whole cylinder.
    """
    if mode not in ("center", "cylinder"):
        raise DomainError(f"unknown corridor mode {mode!r}")
    gt = gibbs if gibbs is not None else GibbsTree(spec)
    n, eps = gt.n, spec.epsilon
    keep = np.ones(len(gt.levels[-1]), dtype=bool)
    for k in _scales(n):
        ok = _corridor_mask(gt, k, lambda_hat, s_hat, eps, mode)
        keep &= ok[gt.prefix_index(k)]
    index = np.flatnonzero(keep)
    if index.size == 0:
        raise DegenerateError(f"no regular words at n={n}, epsilon={eps}; increase epsilon")
    top = gt.levels[-1]
    level = Level(
        top.alphabet, n, top.alpha[index], top.beta[index], top.gamma[index],
        top.delta[index], top.det[index],
    )
    kept_mass = float(np.exp(special.logsumexp(gt.log_weights[index])))
    return RegularTree(
        gt.spec, n, eps, lambda_hat, s_hat, top.words(index), index, level,
        min(kept_mass, 1.0), gt.gibbs_constant(), mode, gt,
    )


def build_tree(spec: GibbsSpec, mode: str = "center", constants: Constants | None = None) -> RegularTree:
    spec = normalize(spec)
    consts = constants or estimate_constants(spec)
    return regular_words(spec, consts.lambda_hat, consts.s_hat, mode)


def regular_blocks(tree: RegularTree, k: int) -> Iterator[tuple[Word, ...]]:
    """Iterate over ``R_n^k`` as ``k``-tuples of regular words."""
    if k < 1:
        raise DomainError("block arity must be positive")
    return itertools.product(tree.words, repeat=k)


@dataclass(frozen=True)
class ZetaSystem:
    """``b -> e^{2 lambda n} T'_{a_{j-1} b}(x_{a_j})`` tabulated over the regular words."""

    block: tuple[Word, ...]
    j: int
    values: np.ndarray

    def range_ok(self, C_eps: float) -> bool:
        lo, hi = C_eps**-2 / 256.0, C_eps**2
        return bool(np.all((self.values >= lo) & (self.values <= hi)))


def zeta_values(tree: RegularTree, left: Sequence[int], right: Sequence[int]) -> np.ndarray:
    """Zeta table for the consecutive pair ``(a_{j-1}, a_j) = (left, right)``."""
    sys = tree.system
    lv = word_level(sys, [left], tree.level.alphabet)
    x = float(cylinder_center(sys, right))
    joined = concat_level(sys, lv, tree.level)
    return math.exp(2.0 * tree.lambda_hat * tree.n) * joined.derivative(x)


def zeta_table(tree: RegularTree, A: Sequence[Sequence[int]]) -> list[ZetaSystem]:
    """One ``ZetaSystem`` for each ``j = 1..k`` of a block ``A`` in ``R_n^{k+1}``."""
    A = tuple(Word(a) for a in A)
    if len(A) < 2:
        raise DomainError("a zeta block needs at least two words")
    return [ZetaSystem(A, j, zeta_values(tree, A[j - 1], A[j])) for j in range(1, len(A))]


# ---------------------------------------------------------------------------
# regularity bounds


@dataclass(frozen=True)
class CorridorReport:
    length_ok: float
    measure_ok: float
    concat_ok: float
    zeta_ok: float
    cardinality: int
    cardinality_bounds: tuple[float, float]

    @property
    def cardinality_ok(self) -> bool:
        lo, hi = self.cardinality_bounds
        return lo <= self.cardinality <= hi


def corridor_report(tree: RegularTree, zeta: bool = True) -> CorridorReport:
    """Fractions of kept words satisfying the regularity bounds, plus the cardinality check."""
    gt, n, lam, s, eps = tree.gibbs, tree.n, tree.lambda_hat, tree.s_hat, tree.epsilon
    C = tree.gibbs_constant
    len_ok = np.ones(len(tree), dtype=bool)
    mu_ok = np.ones(len(tree), dtype=bool)
    for j in _scales(n):
        idx = gt.prefix_index(j)[tree.index]
        Cj = math.exp(eps * j)
        length = np.log(gt.levels[j].lengths()[idx])
        len_ok &= (length >= math.log(Cj**-1 * math.exp(-lam * j) / 16)) & (
            length <= math.log(Cj * math.exp(-lam * j))
        )
        logmu = gt.marginal(j)[idx]
        base = -s * lam * j
        slack = math.log(C) + 3 * lam * eps * j
        mu_ok &= (logmu >= base - slack) & (logmu <= base + slack)
    Cn = tree.C_eps
    pair = concat_level(tree.system, tree.level, tree.level).lengths()
    concat_ok = (pair >= Cn**-2 * math.exp(-2 * lam * n) / 256) & (pair <= Cn**2 * math.exp(-2 * lam * n))
    zeta_frac = math.nan
    if zeta:
        good = 0
        centers = tree.centers()
        joined = concat_level(tree.system, tree.level, tree.level)
        scale = math.exp(2.0 * lam * n)
        lo, hi = Cn**-2 / 256.0, Cn**2
        for x in centers:
            z = scale * joined.derivative(x)
            good += int(np.count_nonzero((z >= lo) & (z <= hi)))
        zeta_frac = good / (len(tree) ** 3)
    card_lo = 0.5 / C * Cn ** (-3 * lam) * math.exp(lam * s * n)
    card_hi = C * Cn ** (3 * lam) * math.exp(lam * s * n)
    return CorridorReport(
        float(len_ok.mean()), float(mu_ok.mean()), float(concat_ok.mean()), zeta_frac,
        len(tree), (card_lo, card_hi),
    )


# ---------------------------------------------------------------------------
# large deviations


@dataclass(frozen=True)
class LargeDeviationScan:
    rows: list[tuple[int, float]]
    rate: float
    intercept: float
    lambda_hat: float
    s_hat: float


def complement_mass(
    spec: GibbsSpec, lambda_hat: float, s_hat: float, epsilon: float, refine: int = LD_REFINE
) -> float:
    """Gibbs mass of the points outside ``A_n(epsilon)``.

    Points are the centres of depth ``n + refine`` cylinders (capped by the
    budget), weighted by the Gibbs measure at that depth; ``refine=0`` tests
    each depth-``n`` cylinder at its midpoint.
    """
    n = spec.n
    depth = n + max(0, refine)
    while depth > n and len(spec.alphabet) ** depth > spec.budget:
        depth -= 1
    gt = GibbsTree(replace(spec, n=depth))
    top = gt.levels[depth]
    tail = gt.levels[depth - n]
    i = np.arange(len(top))
    tail_i = i % len(tail)
    head_i = i // len(tail)
    # T^n x for x the centre of the depth-`depth` cylinder
    y = top.center_preimage()
    z = (tail.alpha[tail_i] * y + tail.beta[tail_i]) / (tail.gamma[tail_i] * y + tail.delta[tail_i])
    head = gt.levels[n]
    spsi = np.log(np.abs(head.det[head_i])) - 2.0 * np.log(
        np.abs(head.gamma[head_i] * z + head.delta[head_i])
    )
    sphi = gt.spec.s * spsi - n * gt.spec.shift
    with np.errstate(divide="ignore", invalid="ignore"):
        bad = (np.abs(spsi / n + lambda_hat) >= epsilon) | (np.abs(sphi / spsi - s_hat) >= epsilon)
    if not np.any(bad):
        return 0.0
    return float(np.exp(special.logsumexp(gt.log_weights[bad])))


def large_deviation_scan(
    spec: GibbsSpec,
    epsilon: float,
    n_list: Sequence[int],
    constants: Constants | None = None,
    refine: int = LD_REFINE,
) -> LargeDeviationScan:
    """Complement mass of ``A_n(epsilon)`` per ``n`` with a fitted exponential rate."""
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError("n_list must be strictly increasing")
    spec = normalize(spec)
    if constants is None:
        constants = estimate_constants(replace(spec, n=max(n_list)))
    rows = []
    for n in n_list:
        sub = replace(spec, n=n)
        rows.append((n, complement_mass(sub, constants.lambda_hat, constants.s_hat, epsilon, refine)))
    pos = [(n, m) for n, m in rows if m > 0]
    if len(pos) >= 2:
        slope, intercept = np.polyfit([n for n, _ in pos], [math.log(m) for _, m in pos], 1)
        rate, icpt = float(-slope), float(intercept)
    else:
        rate, icpt = math.inf, -math.inf
    return LargeDeviationScan(rows, rate, icpt, constants.lambda_hat, constants.s_hat)


def check_spec(spec: GibbsSpec, lambda_hat: float) -> None:
    """Warn when the corridor width is not small compared to ``s lambda``."""
    if spec.epsilon >= spec.s * lambda_hat / 10:
        log.warning(
            "epsilon=%.3g is not below s*lambda/10=%.3g; corridors are wide",
            spec.epsilon, spec.s * lambda_hat / 10,
        )


