"""Acceptance criteria, one test each.

Every test records a ``criterion N: PASS|FAIL`` line; the lines are printed in
the pytest terminal summary and when this file is run as a script.
"""

import json
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from gibbsfourier import cli, equidist, fourier, nonconcentration, thermo
from gibbsfourier.continuants import identity_suite
from gibbsfourier.errors import IdentityError
from gibbsfourier.symbolic import cantor, gauss, lueroth
from gibbsfourier.thermo import GibbsSpec

E2_DIM = 0.5312805062772051
RESULTS: dict[int, tuple[bool, str]] = {}


def _gauss_tree(n=8, eps=0.2):
    return thermo.build_tree(GibbsSpec(gauss(), (1, 2), E2_DIM, n, eps))


def _lueroth_tree(n=8, eps=0.2):
    s = thermo.dimension_root(lueroth(), (1, 2)).value
    return thermo.build_tree(GibbsSpec(lueroth(), (1, 2), s, n, eps))


def criterion_1():
    rng = random.Random(2024)
    start = time.perf_counter()
    failures = 0
    for _ in range(10_000):
        w = [rng.randint(1, 100) for _ in range(rng.randint(1, 30))]
        try:
            identity_suite(w)
        except IdentityError:
            failures += 1
    elapsed = time.perf_counter() - start
    return failures == 0 and elapsed < 10, f"{failures} failures in {elapsed:.1f}s"


def criterion_2():
    rng = random.Random(2025)
    G = gauss()
    failures = 0
    for _ in range(10_000):
        n = rng.randint(1, 10)
        b = [rng.randint(1, 20) for _ in range(n)]
        c = [rng.randint(1, 20) for _ in range(n)]
        failures += sum(not s.ok for s in nonconcentration.distdioph_sweep(G, b, c, nonconcentration.X_GRID))
    return failures == 0, f"{failures} failures over 10000 pairs x 17 points"


def criterion_3():
    lu = GibbsSpec(lueroth(), tuple(range(1, 10_001)), 1.0, 1, 0.2)
    exact = all(
        thermo.transfer_apply(lu, lambda y: Fraction(1), x, tail=True) == 1
        for x in (Fraction(0), Fraction(2, 7), Fraction(1))
    )
    gs = GibbsSpec(gauss(), tuple(range(1, 10_001)), 1.0, 1, 0.2)
    xs = np.linspace(0, 1, 101)
    h = thermo.gauss_kuzmin_density
    residual = float(np.max(np.abs(thermo.transfer_apply(gs, h, xs, tail=True) - h(xs))))
    return exact and residual < 1e-3, f"Lueroth L1 == 1: {exact}; Gauss-Kuzmin residual {residual:.2e}"


def criterion_4():
    oracle, _ = integrate.quad(lambda x: -2 * math.log(x) / ((1 + x) * math.log(2)), 0, 1)
    full = thermo.lyapunov_estimate(thermo.gauss_kuzmin_measure(), gauss())
    golden = thermo.lyapunov_estimate(thermo.gibbs_measure(GibbsSpec(gauss(), (1,), 0.5, 30, 0.2)), gauss())
    target = 2 * math.log((1 + math.sqrt(5)) / 2)
    ok = abs(full - oracle) < 0.02 and abs(golden - target) < 1e-6
    return ok, f"full {full:.5f} vs {oracle:.5f}; {{1}} {golden:.10f} vs {target:.10f}"


def criterion_5():
    start = time.perf_counter()
    r = thermo.dimension_root(gauss(), (1, 2), m=12)
    elapsed = time.perf_counter() - start
    ok = 0.525 <= r.lower <= r.upper <= 0.540 and elapsed < 60
    return ok, (
        f"bracket [{r.lower:.7f}, {r.upper:.7f}], sup/inf proxies "
        f"[{r.proxy_lower:.4f}, {r.proxy_upper:.4f}], {elapsed:.1f}s"
    )


def _binomial_tail(n, lam, s_hat, eps):
    bad = 0
    for j in range(n + 1):
        spsi = -(j * math.log(2) + (n - j) * math.log(6))
        if abs(spsi / n + lam) >= eps or abs(-n * math.log(2) / spsi - s_hat) >= eps:
            bad += math.comb(n, j)
    return bad / 2**n


def criterion_6():
    scan = thermo.large_deviation_scan(GibbsSpec(gauss(), (1, 2), E2_DIM, 6, 0.2), 0.2, range(6, 15))
    masses = dict(scan.rows)
    positive = all(m > 0 for m in masses.values())
    tail = [masses[n] for n in range(8, 15)]
    monotone = all(b <= a for a, b in zip(tail, tail[1:]))
    lam = 0.5 * (math.log(2) + math.log(6))
    consts = thermo.Constants(lam, math.log(2) / lam, math.log(2), 14)
    lu = thermo.large_deviation_scan(GibbsSpec(lueroth(), (1, 2), 0.0, 6, 0.1), 0.1, range(6, 15), consts)
    worst = max(abs(m - _binomial_tail(n, lam, math.log(2) / lam, 0.1)) for n, m in lu.rows)
    rises = [n for n in range(9, 15) if masses[n] > masses[n - 1]]
    return positive and monotone and worst < 1e-12, (
        f"Gauss positive={positive} nonincreasing from 8={monotone} (rises at n={rises}); "
        f"Lueroth binomial error {worst:.1e}"
    )


def criterion_7():
    start = time.perf_counter()
    g = nonconcentration.nonconcentration_report(_gauss_tree())
    lu = nonconcentration.nonconcentration_report(_lueroth_tree())
    elapsed = time.perf_counter() - start
    ok = lu.kappa_hat == 0 and g.kappa_hat >= 0.2 and elapsed < 120
    return ok, f"Gauss kappa {g.kappa_hat:.4f}, Lueroth kappa {lu.kappa_hat}, {elapsed:.1f}s"


def criterion_8():
    tree = _gauss_tree()
    r = thermo.corridor_report(tree)
    ok = r.length_ok == 1 and r.measure_ok == 1 and r.zeta_ok == 1 and r.cardinality_ok
    lo, hi = r.cardinality_bounds
    return ok, (
        f"length {r.length_ok:.0%}, measure {r.measure_ok:.0%}, zeta {r.zeta_ok:.0%}, "
        f"|R_n|={r.cardinality} in [{lo:.3g}, {hi:.3g}]"
    )


def criterion_9():
    gm = thermo.gibbs_measure(GibbsSpec(gauss(), (1, 2), E2_DIM, 16, 0.2))
    g = fourier.decay_scan(gm, range(0, 25), samples_per_block=256)
    cm = thermo.gibbs_measure(GibbsSpec(cantor(), (1, 2), math.log(2) / math.log(3), 10, 0.2))
    c = fourier.decay_scan(cm, range(0, 25), samples_per_block=8192, spacing="integer")
    ok = g.fit.exponent > 0 and g.fit.lower > 0 and c.fit.lower <= 0 <= c.fit.upper
    return ok, (
        f"Gauss e={g.fit.exponent:.3f} CI [{g.fit.lower:.3f}, {g.fit.upper:.3f}] over "
        f"{len(g.valid_blocks)} blocks; Cantor e={c.fit.exponent:.3f} CI [{c.fit.lower:.3f}, {c.fit.upper:.3f}]"
    )


def criterion_10():
    tree = _gauss_tree()
    kappa = nonconcentration.nonconcentration_report(tree).kappa_hat
    W = nonconcentration.well_distributed_blocks(tree, 2, nonconcentration.default_s0(kappa, tree.s_hat))
    blocks = W.sample(np.random.default_rng(0), 64)
    scan = fourier.expsum_decay_scan(tree, blocks, points=64)
    ratio = scan.decade_ratio()
    return ratio <= 0.9, f"top/bottom decade ratio {ratio:.3f} over {len(blocks)} blocks"


def criterion_11():
    N, m_max = 10_000, 5
    spec = GibbsSpec(gauss(), (1, 2), E2_DIM, 1, 0.2)
    worst = {}
    for name, seq in (
        ("identity", equidist.SequenceSpec.identity()),
        ("pell", equidist.SequenceSpec.denominators([2] * N)),
    ):
        need = equidist.required_denominator(seq, N, m_max)
        vals = []
        for p in equidist.sample_points(spec, 3, seed=11, min_denominator=need):
            vals.append(equidist.del_report(p.x, seq, m_max, [N]).max_abs(N))
        worst[name] = max(vals)
    control = equidist.del_report(
        Fraction(3, 5), equidist.SequenceSpec.identity(), m_max, [10, 100, N]
    )
    at_q = [r.abs for r in control.rows if r.m == 5]
    control_ok = all(abs(v - 1) < 1e-12 for v in at_q)
    ok = max(worst.values()) <= 0.1 and control_ok
    return ok, f"max |W_N|: identity {worst['identity']:.2e}, Pell {worst['pell']:.2e}; control |W|=1: {control_ok}"


def criterion_12(tmp_dir):
    commands = [
        ["decay", "--n", "10", "--samples", "64"],
        ["nonconc", "--n", "8"],
        ["expsum", "--blocks", "16", "--points", "32"],
        ["equidist", "--N", "2000", "--sequence", "pell"],
        ["largedev", "--n-list", "6-10"],
    ]
    same = []
    for argv in commands:
        bodies = []
        for run in ("a", "b"):
            out = tmp_dir / run / f"{argv[0]}.csv"
            code = cli.main([*argv, "--seed", "7", "--out", str(out)])
            bodies.append((code, out.read_bytes()))
            json.loads(out.with_suffix(".json").read_text())
        same.append(bodies[0] == bodies[1] and bodies[0][0] == 0)
    return all(same), f"{sum(same)}/{len(same)} commands byte-identical"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


def _record(number, ok, detail):
    RESULTS[number] = (ok, detail)
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    return line


@pytest.mark.parametrize("number", range(1, 13))
def test_criterion(number, tmp_path):
    fn = CRITERIA[number - 1]
    ok, detail = fn(tmp_path) if number == 12 else fn()
    line = _record(number, ok, detail)
    assert ok, line


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        for i, fn in enumerate(CRITERIA, 1):
            ok, detail = fn(Path(tmp)) if i == 12 else fn()
            _record(i, ok, detail)
