import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from conftest import E2_DIM
from gibbsfourier import nonconcentration as nc
from gibbsfourier import thermo
from gibbsfourier.errors import DomainError, UnsupportedError
from gibbsfourier.symbolic import Word, distortion, get_system

F = Fraction


@pytest.fixture(scope="module")
def full6(G):
    # every word of length 6 is kept
    return thermo.build_tree(thermo.GibbsSpec(G, (1, 2), E2_DIM, 6, 100.0))


def test_distortion_set_lueroth_is_zero(lueroth_tree8):
    a = lueroth_tree8.words[0]
    vals = nc.distortion_set(lueroth_tree8, a, 0.3)
    assert len(vals) == len(lueroth_tree8)
    assert set(vals.tolist()) == {0.0}


def test_distortion_set_gauss_distinct(full6):
    vals = nc.distortion_set(full6, (1,) * 6, F(0), exact=True)
    assert len(vals) == 64 and len(set(vals)) == 64
    floats = nc.distortion_set(full6, (1,) * 6, 0.0)
    assert np.allclose(floats, [float(v) for v in vals], rtol=1e-13, atol=0)


def test_distortion_set_rejects_irregular(gauss_tree8):
    with pytest.raises(DomainError):
        nc.distortion_set(gauss_tree8, (1,) * 7, 0.0)


def test_counter_rho_range(gauss_tree8):
    a = gauss_tree8.words[0]
    with pytest.raises(DomainError):
        nc.nonlinearity_counter(gauss_tree8, a, a, 0.5, 2.0)
    with pytest.raises(DomainError):
        nc.nonlinearity_counter(gauss_tree8, a, a, 0.5, 1e-9)


def test_counter_matches_brute_force(gauss_tree8):
    t = gauss_tree8
    a, b = t.words[3], t.words[7]
    x, rho = F(5, 16), 0.05
    target = distortion(t.system, a + b, x)
    brute = sum(abs(distortion(t.system, a + c, x) - target) <= rho for c in t.words)
    assert nc.nonlinearity_counter(t, a, b, x, rho) == brute


def test_counter_monotone_in_rho(gauss_tree8):
    t = gauss_tree8
    a, b = t.words[0], t.words[-1]
    grid = nc.dyadic_grid(*nc.rho_range(t))
    counts = [nc.nonlinearity_counter(t, a, b, 0.5, r) for r in grid]
    assert all(c2 <= c1 for c1, c2 in zip(counts, counts[1:]))
    assert nc.nonlinearity_counter(t, a, b, 0.5, 1.0) <= len(t)


def test_lueroth_counter_saturates(lueroth_tree8):
    t = lueroth_tree8
    a, b = t.words[0], t.words[1]
    for rho in nc.dyadic_grid(*nc.rho_range(t)):
        assert nc.nonlinearity_counter(t, a, b, 0.25, rho) == len(t)


def test_dyadic_grid():
    assert nc.dyadic_grid(0.1, 1.0) == [1.0, 0.5, 0.25, 0.125]
    assert nc.dyadic_grid(0.3, 0.2) == []


def test_fit_power_law_recovers_exponent():
    rho = np.array([1, 0.5, 0.25, 0.125])
    kappa, C0, res = nc.fit_power_law(rho, 0.7 * rho**0.4)
    assert kappa == pytest.approx(0.4) and C0 == pytest.approx(0.7) and res < 1e-12
    assert nc.fit_power_law(rho, 1 / rho)[0] == 0


def test_report_gauss_vs_lueroth(gauss_tree8, lueroth_tree8):
    g = nc.nonconcentration_report(gauss_tree8)
    assert g.kappa_hat >= 0.2
    assert all(g.bound_ok)
    assert all(c2 <= c1 for c1, c2 in zip(g.counts, g.counts[1:]))
    lu = nc.nonconcentration_report(lueroth_tree8)
    assert lu.kappa_hat == 0
    assert set(lu.counts) == {len(lueroth_tree8)}


@pytest.mark.parametrize(
    "b, c, x",
    [((1, 2), (2, 1), F(1, 3)), ((1, 1, 2), (1, 1, 2), F(0)), ((3, 1), (1, 3), F(1))],
)
def test_distdioph_examples(G, b, c, x):
    r = nc.distdioph_check(G, b, c, x)
    assert r.ok
    if b == c:
        assert r.lhs == r.mid == r.rhs == 0


def test_distdioph_mirror_values():
    assert nc.mirror_value((1, 2)) == F(1, 3)
    assert nc.mirror_value((2, 1)) == F(2, 3)
    assert nc.mirror_value(()) == 0


def test_distdioph_random_pairs(G):
    rng = random.Random(11)
    grid = nc.X_GRID
    for _ in range(500):
        n = rng.randint(1, 10)
        b = tuple(rng.randint(1, 9) for _ in range(n))
        c = tuple(rng.randint(1, 9) for _ in range(n))
        assert nc.distdioph_check(G, b, c, rng.choice(grid)).ok


def test_distdioph_errors(G, L):
    with pytest.raises(UnsupportedError):
        nc.distdioph_check(L, (1,), (2,), 0)
    with pytest.raises(DomainError):
        nc.distdioph_check(G, (1,), (2, 1), 0)


def test_dist_concat_slack(gauss_tree8):
    t = gauss_tree8
    margin = 2 * t.C_eps * math.exp(-t.lambda_hat * t.n / 2)
    b = t.words[5]
    assert nc.dist_concat_slack(t, t.words[0], b, b) == pytest.approx(margin)
    # empty prefix: both sides coincide
    assert nc.dist_concat_slack(t, (), t.words[1], t.words[9]) == pytest.approx(margin)
    words = t.words[::4]
    for a, b, c in itertools.product(words, repeat=3):
        assert nc.dist_concat_slack(t, a, b, c) >= 0


def test_D1_monotone_and_bounded(gauss_tree8):
    t = gauss_tree8
    grid = nc.dyadic_grid(*nc.sigma_range(t))
    idx = np.linspace(0, len(grid) - 1, 10).astype(int)
    grid = [grid[i] for i in idx]
    for a in (t.words[0], t.words[-1]):
        counts = [nc.triple_count_D1(t, a, s) for s in grid]
        assert all(c2 <= c1 for c1, c2 in zip(counts, counts[1:]))
        for s, c in zip(grid, counts):
            assert c <= nc.triple_bounds(t, s).d1


def test_D1_lueroth_saturates(lueroth_tree8):
    t = lueroth_tree8
    assert nc.triple_count_D1(t, t.words[0], 1e-3) == len(t) ** 3


def test_D2_below_proof_constant(gauss_tree8):
    t = gauss_tree8
    for s in (1.0, 0.01, 1e-4):
        assert nc.triple_count_D2(t, t.words[2], s) <= nc.triple_bounds(t, s).d2_proof


def test_sigma_range_checked(gauss_tree8):
    with pytest.raises(DomainError):
        nc.triple_count_D1(gauss_tree8, gauss_tree8.words[0], 2.0)
    with pytest.raises(DomainError):
        nc.sigma_grid(gauss_tree8, eps3=100.0)


def test_well_distributed_s0_zero_keeps_all(gauss_tree8):
    W = nc.well_distributed_blocks(gauss_tree8, 2, 0.0)
    assert W.count == W.total and W.complement_fraction == 0


def test_well_distributed_gauss_default(gauss_tree8):
    kappa = nc.nonconcentration_report(gauss_tree8).kappa_hat
    W = nc.well_distributed_blocks(gauss_tree8, 2, nc.default_s0(kappa, gauss_tree8.s_hat))
    assert W.complement_fraction < 0.5
    assert sum(1 for _ in itertools.islice(W.blocks(), 1000)) == 1000


def test_well_distributed_contrast(gauss_tree8, lueroth_tree8):
    # Lueroth zeta values repeat so pair counts saturate; Gauss ones spread out
    assert nc.well_distributed_blocks(lueroth_tree8, 1, 0.5).count == 0
    assert nc.well_distributed_blocks(gauss_tree8, 1, 0.5).complement_fraction == 0


def test_well_distributed_count_matches_enumeration(gauss_tree8):
    t = gauss_tree8
    W = nc.well_distributed_blocks(t, 2, 0.5)
    small = sum(1 for _ in W.blocks())
    assert small == W.count
    rng = np.random.default_rng(0)
    for block in W.sample(rng, 20):
        assert len(block) == 3
        for left, right in zip(block, block[1:]):
            assert W.good_pairs[t.word_index[Word(left)], t.word_index[Word(right)]]


def test_distdioph_sweep_matches_chain_rule(G):
    rng = random.Random(5)
    for _ in range(100):
        n = rng.randint(1, 8)
        b = tuple(rng.randint(1, 9) for _ in range(n))
        c = tuple(rng.randint(1, 9) for _ in range(n))
        swept = nc.distdioph_sweep(G, b, c, nc.X_GRID)
        assert swept == [nc.distdioph_check(G, b, c, x) for x in nc.X_GRID]
