import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbsfourier.errors import BudgetError, DomainError, StructuralError
from gibbsfourier.symbolic import (
    Block,
    Word,
    branch_derivative,
    branch_point,
    check_budget,
    concat_level,
    cylinder,
    cylinder_length,
    distortion,
    enumerate_levels,
    get_system,
    hash_concat,
    log_abs_derivative,
    mobius_product,
    star_concat,
    word_level,
)

F = Fraction


def test_word_basics():
    w = Word([2, 3, 5])
    assert w.mirror().mirror() == w
    assert len(w.shift()) == 2
    assert w.parent() == Word([2, 3])
    assert isinstance(w + (1,), Word)
    assert Word() + w == w
    assert Word([2]).is_prefix_of(w)
    with pytest.raises(DomainError):
        Word([0, 1])
    with pytest.raises(DomainError):
        Word().shift()


@pytest.mark.parametrize(
    "name, w, x, expected",
    [
        ("gauss", (2,), F(0), F(1, 2)),
        ("gauss", (2, 3), F(0), F(3, 7)),
        ("lueroth", (1,), F(0), F(1, 2)),
    ],
)
def test_branch_point_examples(name, w, x, expected):
    assert branch_point(get_system(name), w, x) == expected


def test_branch_point_against_nested_fraction(G):
    # independent oracle: 1/(a1 + 1/(a2 + ... + 1/(an + x)))
    w, x = (3, 1, 4, 1, 5), F(2, 7)
    y = x
    for a in reversed(w):
        y = 1 / (a + y)
    assert branch_point(G, w, x) == y


@pytest.mark.parametrize(
    "name, w, x, expected",
    [
        ("gauss", (2,), F(0), F(-1, 4)),
        ("gauss", (1, 1), F(0), F(1, 4)),
        ("lueroth", (1, 1), F(0), F(1, 4)),
        ("lueroth", (1, 1), F(5, 7), F(1, 4)),
    ],
)
def test_branch_derivative_examples(name, w, x, expected):
    assert branch_derivative(get_system(name), w, x) == expected


def test_derivative_sign_alternates(G):
    for n in range(1, 8):
        assert np.sign(branch_derivative(G, (1,) * n, 0.3)) == (-1) ** n


@pytest.mark.parametrize(
    "name, w, x, expected",
    [
        ("gauss", (2,), F(0), F(-1)),
        ("gauss", (1, 1), F(0), F(-1)),
        ("lueroth", (3, 1, 2), F(1, 3), F(0)),
    ],
)
def test_distortion_examples(name, w, x, expected):
    assert distortion(get_system(name), w, x) == expected


def test_distortion_closed_form_matches_continuants(G):
    # T_w''/T_w' = -2 q_{n-1} / (q_{n-1} x + q_n)
    w, x = (2, 1, 3), F(1, 5)
    _, _, qm, qn = mobius_product(G, w)
    assert distortion(G, w, x) == -2 * qm / (qm * x + qn)


@pytest.mark.parametrize(
    "name, w, lo, hi",
    [
        ("gauss", (1,), F(1, 2), F(1)),
        ("gauss", (2, 3), F(3, 7), F(4, 9)),
        ("lueroth", (2,), F(1, 3), F(1, 2)),
    ],
)
def test_cylinder_examples(name, w, lo, hi):
    assert cylinder(get_system(name), w, exact=True) == (lo, hi)


def test_cylinder_length_continuant_form(G):
    assert cylinder_length(G, (2, 3), exact=True) == F(1, 63)
    assert cylinder(G, (), exact=True) == (0, 1)


def test_domain_errors(G):
    with pytest.raises(DomainError):
        branch_point(G, (1,), 1.5)
    with pytest.raises(DomainError):
        branch_point(get_system("gauss", 5), (6,), 0.5)
    with pytest.raises(DomainError):
        get_system("tent")


@pytest.mark.parametrize(
    "A, B, star, hsh",
    [
        (((1,), (2,)), ((3,),), (1, 3, 2), (1, 3)),
        (((1, 1), (2, 2), (3, 3)), ((4, 4), (5, 5)), (1, 1, 4, 4, 2, 2, 5, 5, 3, 3), (1, 1, 4, 4, 2, 2, 5, 5)),
    ],
)
def test_concatenations(A, B, star, hsh):
    assert star_concat(A, B) == Word(star)
    assert hash_concat(A, B) == Word(hsh)
    assert star_concat(A, B) == hash_concat(A, B) + A[-1]


def test_concat_arity_errors():
    with pytest.raises(StructuralError):
        star_concat(((1,), (2,)), ((3,), (4,)))
    with pytest.raises(StructuralError):
        Block(((1,), (2, 2)))


words = st.lists(st.integers(1, 12), min_size=0, max_size=8)
unit = st.floats(0.0, 1.0, allow_nan=False)


@settings(max_examples=1000, deadline=None)
@given(u=words, v=words, x=unit)
def test_chain_rule(G, u, v, x):
    lhs = branch_derivative(G, tuple(u) + tuple(v), x)
    rhs = branch_derivative(G, u, branch_point(G, v, x)) * branch_derivative(G, v, x)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(w=st.lists(st.integers(1, 50), min_size=1, max_size=12))
def test_distortion_bound(G, w):
    xs = np.linspace(0, 1, 101)
    assert max(abs(distortion(G, w, float(x))) for x in xs) <= G.distortion_bound


@settings(max_examples=300, deadline=None)
@given(w=st.lists(st.integers(1, 30), min_size=1, max_size=15), x=unit, y=unit)
def test_frac_bound(G, w, x, y):
    ratio = abs(branch_derivative(G, w, x) / branch_derivative(G, w, y))
    assert ratio <= math.exp(G.distortion_bound * abs(x - y)) * (1 + 1e-12)


@pytest.mark.parametrize("name", ["gauss", "lueroth", "cantor"])
def test_nesting_and_sibling_disjointness(name):
    sys_ = get_system(name)
    alphabet = (1, 2) if name == "cantor" else (1, 2, 3)
    for w in [(), (1,), (2, 1), (1, 2, 2)]:
        lo, hi = cylinder(sys_, w, exact=True)
        kids = sorted(cylinder(sys_, Word(w) + (a,), exact=True) for a in alphabet)
        for klo, khi in kids:
            assert lo <= klo < khi <= hi
        for (_, h1), (l2, _) in zip(kids, kids[1:]):
            assert h1 <= l2


def test_long_gauss_words_closed_form_and_log_space(G):
    w = (1, 2) * 200
    # |T_w'| underflows; its log stays finite and matches the exact value
    exact = log_abs_derivative(G, w, F(1, 3))
    assert math.isfinite(exact)
    assert log_abs_derivative(G, w, 1 / 3) == pytest.approx(exact, rel=1e-12)
    w30 = (1, 2, 3) * 10
    assert branch_derivative(G, w30, 0.4) == pytest.approx(float(branch_derivative(G, w30, F(2, 5))), rel=1e-12)
    assert distortion(G, w30, 0.4) == pytest.approx(float(distortion(G, w30, F(2, 5))), rel=1e-12)


def test_levels_match_scalar_evaluation(G):
    levels = enumerate_levels(G, (1, 2, 3), 3)
    assert [len(lv) for lv in levels] == [1, 3, 9, 27]
    top = levels[-1]
    words = top.words()
    assert words[0] == Word((1, 1, 1)) and words[-1] == Word((3, 3, 3))
    x = 0.37
    for i in (0, 5, 13, 26):
        w = words[i]
        assert top.point(x)[i] == pytest.approx(branch_point(G, w, x), rel=1e-14)
        assert top.derivative(x)[i] == pytest.approx(branch_derivative(G, w, x), rel=1e-14)
        assert top.distortion(x)[i] == pytest.approx(distortion(G, w, x), rel=1e-14)
        assert top.lengths()[i] == pytest.approx(float(cylinder_length(G, w, exact=True)), rel=1e-14)
        c = top.centers()[i]
        assert branch_point(G, w, float(top.center_preimage()[i])) == pytest.approx(c, rel=1e-13)


def test_concat_level_order(G):
    left = word_level(G, [(1, 2), (2, 2)])
    right = word_level(G, [(3, 1), (1, 1), (2, 3)])
    joined = concat_level(G, left, right)
    w = Word((2, 2)) + (1, 1)
    assert joined.derivative(0.25)[1 * 3 + 1] == pytest.approx(branch_derivative(G, w, 0.25), rel=1e-14)


def test_budget_guard(G):
    check_budget((1, 2), 10, 1024)
    with pytest.raises(BudgetError):
        check_budget((1, 2), 11, 1024)
    with pytest.raises(BudgetError):
        enumerate_levels(G, (1, 2, 3), 10, budget=1000)


def test_lueroth_cylinders_tile_unit_interval(L):
    level = enumerate_levels(L, range(1, 51), 1)[-1]
    assert level.lengths().sum() == pytest.approx(1 - 1 / 51, rel=1e-14)
