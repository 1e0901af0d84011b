"""Command-line front end: each subcommand writes a CSV table and a JSON summary."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import math
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import continuants, equidist, fourier, nonconcentration, thermo
from .errors import BudgetError, ConfigError, DegenerateError, DomainError, IdentityError
from .symbolic import get_system

EXIT_OK = 0
EXIT_IDENTITY = 1
EXIT_BUDGET = 2
EXIT_ALIASED = 3
EXIT_CONFIG = 4
EXIT_DEGENERATE = 5

log = logging.getLogger("gibbsfourier")

DEFAULTS = {
    "map": "gauss",
    "alphabet": [1, 2],
    "s": None,
    "n": 8,
    "epsilon": 0.2,
    "k": 2,
    "seed": 0,
    "budget": thermo.DEFAULT_BUDGET,
}


# ---------------------------------------------------------------------------
# configuration


def _parse_alphabet(text: str) -> list[int]:
    parts = text.replace("-", ",").split(",")
    if len(parts) != 2:
        raise ConfigError(f"alphabet must look like LO,HI, got {text!r}")
    try:
        lo, hi = (int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"alphabet bounds must be integers, got {text!r}") from exc
    return [lo, hi]


def _parse_int_range(text: str) -> list[int]:
    try:
        if "-" in text:
            lo, hi = (int(p) for p in text.split("-"))
            return list(range(lo, hi + 1))
        return [int(p) for p in text.split(",") if p]
    except ValueError as exc:
        raise ConfigError(f"expected LO-HI or a comma list of integers, got {text!r}") from exc


def load_config(args: argparse.Namespace) -> dict:
    """Defaults, then ``--config``, then explicit flags."""
    config = dict(DEFAULTS)
    if args.config:
        try:
            config.update(json.loads(Path(args.config).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = _parse_alphabet(value) if key == "alphabet" else value
    validate(config)
    return config


def validate(config: dict) -> None:
    lo, hi = config["alphabet"]
    if hi < lo:
        raise ConfigError(f"alphabet [{lo}, {hi}] is empty")
    if lo < 1:
        raise ConfigError("alphabet digits must be positive")
    if config["map"] == "cantor" and hi > 2:
        raise ConfigError("the Cantor control has digits 1 and 2 only")
    if config["n"] < 1:
        raise ConfigError("n must be positive")
    if config["epsilon"] <= 0:
        raise ConfigError("epsilon must be positive")
    if config["k"] < 1:
        raise ConfigError("k must be positive")
    if config["s"] is not None and config["s"] < 0:
        raise ConfigError("s must be nonnegative")


def build_spec(config: dict, n: int | None = None) -> thermo.GibbsSpec:
    lo, hi = config["alphabet"]
    system = get_system(config["map"], max(hi, 2))
    alphabet = tuple(range(lo, hi + 1))
    s = config["s"]
    if s is None:
        s = thermo.dimension_root(system, alphabet, budget=config["budget"]).value
        config["s"] = s
    return thermo.GibbsSpec(
        system, alphabet, float(s), int(n or config["n"]), float(config["epsilon"]), int(config["budget"])
    )


# ---------------------------------------------------------------------------
# output


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, Fraction):
        return str(value)
    return value


def write_summary(path: Path, params: dict, fitted: dict, started: float, **extra) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"params": params, "fitted_exponents": fitted, "runtime_s": time.perf_counter() - started}
    body.update(extra)
    path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n")


def _outputs(args, command: str) -> tuple[Path, Path]:
    csv_path = Path(args.out) if args.out else Path(f"{command}.csv")
    return csv_path, csv_path.with_suffix(".json")


# ---------------------------------------------------------------------------
# commands


@contextlib.contextmanager
def _corrupted_recurrence():
    # test hook: perturb q_n so that every identity downstream must notice
    original = continuants.continuant_table

    def corrupted(w):
        p, q = original(w)
        q[-1] += 1
        return p, q

    continuants.continuant_table = corrupted
    try:
        yield
    finally:
        continuants.continuant_table = original


def cmd_identities(args, config) -> int:
    started = time.perf_counter()
    rng = np.random.default_rng(config["seed"])
    lo, hi = config["alphabet"]
    failures: list[dict] = []
    checked = 0
    guard = _corrupted_recurrence() if args.inject_fault else contextlib.nullcontext()
    with guard:
        for _ in range(args.count):
            length = int(rng.integers(1, args.max_length + 1))
            word = [int(d) for d in rng.integers(lo, hi + 1, size=length)]
            try:
                continuants.identity_suite(word)
            except IdentityError as exc:
                failures.append({"word": word, "error": str(exc)})
            checked += 1
    path = Path(args.out) if args.out else Path("identities.json")
    report = {
        "params": {"alphabet": [lo, hi], "count": args.count, "max_length": args.max_length, "seed": config["seed"]},
        "words_checked": checked,
        "failures": len(failures),
        "first_failures": failures[:5],
        "runtime_s": time.perf_counter() - started,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    print(f"identities: {checked} words, {len(failures)} failures -> {path}")
    return EXIT_IDENTITY if failures else EXIT_OK


def cmd_decay(args, config) -> int:
    started = time.perf_counter()
    spec = build_spec(config)
    measure = thermo.gibbs_measure(spec)
    xi_max = fourier.aliasing_limit(measure)
    j_max = args.j_max if args.j_max is not None else max(19, math.ceil(math.log2(xi_max)))
    scan = fourier.decay_scan(measure, range(args.j_min, j_max + 1), args.samples, args.spacing)
    csv_path, json_path = _outputs(args, "decay")
    write_csv(
        csv_path,
        ["j", "xi_lo", "xi_hi", "sup_abs", "n_samples", "aliased"],
        ((b.j, b.xi_lo, b.xi_hi, b.sup_abs, b.n_samples, b.aliased) for b in scan.blocks),
    )
    fit = scan.fit
    fitted = {} if fit is None else {"e_hat": fit.exponent, "e_lower": fit.lower, "e_upper": fit.upper}
    write_summary(
        json_path, config, fitted, started,
        xi_max=xi_max, resolution_warning=scan.resolution_warning, atoms=len(measure),
    )
    if not scan.valid_blocks:
        print("decay: every block is past the aliasing limit", file=sys.stderr)
        return EXIT_ALIASED
    print(f"decay: e_hat={fitted.get('e_hat', float('nan')):.4g} -> {csv_path}")
    return EXIT_OK


def _tree(config) -> thermo.RegularTree:
    spec = build_spec(config)
    tree = thermo.build_tree(spec)
    thermo.check_spec(spec, tree.lambda_hat)
    return tree


def cmd_nonconc(args, config) -> int:
    started = time.perf_counter()
    tree = _tree(config)
    report = nonconcentration.nonconcentration_report(tree)
    csv_path, json_path = _outputs(args, "nonconc")
    write_csv(csv_path, ["n", "rho", "count", "bound", "ok"], report.rows())
    write_summary(
        json_path, config,
        {"kappa_hat": report.kappa_hat, "C0_hat": report.C0_hat, "residual": report.residual},
        started, regular_words=len(tree), lambda_hat=tree.lambda_hat, s_hat=tree.s_hat,
    )
    print(f"nonconc: kappa_hat={report.kappa_hat:.4g} over {len(tree)} regular words -> {csv_path}")
    return EXIT_OK


def cmd_expsum(args, config) -> int:
    started = time.perf_counter()
    tree = _tree(config)
    report = nonconcentration.nonconcentration_report(tree)
    s0 = nonconcentration.default_s0(report.kappa_hat, tree.s_hat)
    wd = nonconcentration.well_distributed_blocks(tree, config["k"], s0, args.eps3)
    if wd.count == 0:
        raise DegenerateError("no well-distributed blocks")
    rng = np.random.default_rng(config["seed"])
    blocks = wd.sample(rng, args.blocks)
    scan = fourier.expsum_decay_scan(tree, blocks, points=args.points)
    csv_path, json_path = _outputs(args, "expsum")
    write_csv(
        csv_path, ["eta", "max_abs", "n_blocks_sampled"],
        ((e, v, scan.n_blocks) for e, v in zip(scan.eta, scan.max_abs)),
    )
    fit = scan.fit
    fitted = {"s0": s0, "kappa_hat": report.kappa_hat}
    if fit is not None:
        fitted.update(eps2_hat=fit.exponent, eps2_lower=fit.lower, eps2_upper=fit.upper)
    write_summary(
        json_path, config, fitted, started,
        window=list(scan.window), decade_ratio=scan.decade_ratio(),
        well_distributed=wd.count, complement_fraction=wd.complement_fraction,
    )
    print(f"expsum: decade ratio {scan.decade_ratio():.3g} -> {csv_path}")
    return EXIT_OK


def _sequence(args, N: int) -> equidist.SequenceSpec:
    if args.sequence_file:
        return equidist.SequenceSpec.from_file(args.sequence_file)
    if args.sequence == "identity":
        return equidist.SequenceSpec.identity()
    if args.sequence == "pell":
        return equidist.SequenceSpec.denominators([2] * N)
    if args.sequence == "fibonacci":
        return equidist.SequenceSpec.denominators([1] * N)
    raise ConfigError(f"unknown sequence {args.sequence!r}")


def cmd_equidist(args, config) -> int:
    started = time.perf_counter()
    N = args.N
    seq = _sequence(args, N)
    grid = sorted({min(N, 10**e) for e in range(1, int(math.log10(N)) + 1)} | {N})
    if args.x is not None:
        x = Fraction(args.x)
        point = None
    else:
        spec = build_spec(config, n=1)
        need = equidist.required_denominator(seq, N, args.m_max)
        point = equidist.sample_point(spec, seed=config["seed"], min_denominator=need)
        x = point.x
    report = equidist.del_report(x, seq, args.m_max, grid)
    csv_path, json_path = _outputs(args, "equidist")
    write_csv(
        csv_path, ["m", "N", "re_W", "im_W", "abs_W"],
        ((r.m, r.N, r.value.real, r.value.imag, r.abs) for r in report.rows),
    )
    extra = {"sequence": seq.kind, "del_series": report.series, "max_abs_at_N": report.max_abs(N)}
    if point is not None:
        extra.update(digits=len(point.word), denominator_bits=point.denominator.bit_length())
    write_summary(json_path, config, {}, started, **extra)
    print(f"equidist: max |W_N| at N={N} is {report.max_abs(N):.3g} -> {csv_path}")
    return EXIT_OK


def cmd_largedev(args, config) -> int:
    started = time.perf_counter()
    n_list = _parse_int_range(args.n_list)
    spec = build_spec(config, n=max(n_list))
    scan = thermo.large_deviation_scan(spec, config["epsilon"], n_list, refine=args.refine)
    csv_path, json_path = _outputs(args, "largedev")
    write_csv(csv_path, ["n", "complement_mass"], scan.rows)
    write_summary(
        json_path, config, {"delta_hat": scan.rate}, started,
        lambda_hat=scan.lambda_hat, s_hat=scan.s_hat,
    )
    print(f"largedev: delta_hat={scan.rate:.4g} -> {csv_path}")
    return EXIT_OK


COMMANDS: dict[str, Callable] = {
    "identities": cmd_identities,
    "decay": cmd_decay,
    "nonconc": cmd_nonconc,
    "expsum": cmd_expsum,
    "equidist": cmd_equidist,
    "largedev": cmd_largedev,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with map, alphabet, s, n, epsilon, budget")
    common.add_argument("--map", choices=["gauss", "lueroth", "cantor"])
    common.add_argument("--alphabet", help="digit range LO,HI")
    common.add_argument("--s", type=float, help="potential exponent (default: dimension root)")
    common.add_argument("--n", type=int, help="word length")
    common.add_argument("--epsilon", type=float, help="regular-corridor width")
    common.add_argument("--k", type=int, help="block arity")
    common.add_argument("--seed", type=int)
    common.add_argument("--budget", type=int, help="max words per enumeration")
    common.add_argument("--out", help="output CSV (JSON summary goes next to it)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gibbsfourier", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identities", parents=[common], help="exact continuant identities on random words")
    p.add_argument("--count", type=int, default=10_000)
    p.add_argument("--max-length", type=int, default=30)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("decay", parents=[common], help="dyadic Fourier decay scan of a Gibbs measure")
    p.add_argument("--j-min", type=int, default=0)
    p.add_argument("--j-max", type=int)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--spacing", choices=["log", "linear", "integer"], default="log")

    sub.add_parser("nonconc", parents=[common], help="distortion non-concentration counts")

    p = sub.add_parser("expsum", parents=[common], help="exponential sums over well-distributed blocks")
    p.add_argument("--blocks", type=int, default=64, help="blocks sampled from the kept set")
    p.add_argument("--points", type=int, default=64, help="eta samples in the window")
    p.add_argument("--eps3", type=float, default=nonconcentration.EPS3)

    p = sub.add_parser("equidist", parents=[common], help="Weyl sums at a sampled point")
    p.add_argument("--sequence", choices=["identity", "pell", "fibonacci"], default="identity")
    p.add_argument("--sequence-file", help="file with one integer n_k per line")
    p.add_argument("--m-max", type=int, default=5)
    p.add_argument("--N", type=int, default=10_000)
    p.add_argument("--x", help="use this rational instead of a sampled point, e.g. 0 or 3/7")

    p = sub.add_parser("largedev", parents=[common], help="large-deviation complement masses")
    p.add_argument("--n-list", default="6-14", help="e.g. 6-14 or 6,8,10")
    p.add_argument("--refine", type=int, default=thermo.LD_REFINE, help="extra depth for the test points")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for budget overruns
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = load_config(args)
        return COMMANDS[args.command](args, config)
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, DomainError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateError as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"I/O error on {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
