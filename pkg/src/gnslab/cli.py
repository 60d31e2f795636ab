"""Batch driver: load models, run check suites, build triples, emit reports.

Subcommands
    check     run the verification suite on a map file
    gns       build the cyclic representation and dump the triple
    examples  materialize the stock example maps at requested sizes
    random    emit seeded random map files for fuzzing
    report    pretty-print an existing report file

Exit codes: 0 all selected checks pass, 1 a check failed, 2 input error.
All randomness flows from --seed; identical (config, inputs) produce
byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .cstar import CStarAlgebra
from .errors import GnslabError, PreconditionError
from .gns import build_gns, unitary_equivalence, verify_representation
from .nc_examples import (
    OperatorValuedCurve,
    TraceAlgebra,
    min_cutoff_family,
    pettis_integral_map,
    phi_right_mult,
    schatten_trace_map,
    series_map,
)
from .quasi import full_matrix_model
from .reporting import FAIL, Report
from .sampling import rng_from_seed
from .sesq import (
    STANDARD_SUITE,
    density_ranks,
    random_certificate_map,
    random_invariant_map,
    run_suite,
)
from .serialize import (
    decode_map,
    dumps,
    encode_instance,
    encode_map,
    encode_triple,
    load_json,
    save_json,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2

DEFAULT_SEED = 0
DEFAULT_TOL = 1e-9
DEFAULT_SAMPLES = 10_000

MAX_MATRIX_SIZE = 8
MAX_GRID = 256


def _environment(args) -> dict:
    return {
        "version": __version__,
        "seed": args.seed,
        "tol": args.tol,
        "n_samples": args.samples,
    }


def _emit(args, data: dict) -> None:
    if args.out:
        save_json(args.out, data)
    else:
        sys.stdout.write(dumps(data))


def _load_map(path: str):
    import os

    try:
        data = load_json(path)
    except json.JSONDecodeError as exc:
        raise _InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise _InputError(str(exc)) from exc
    try:
        return decode_map(data, base_dir=os.path.dirname(os.path.abspath(path)))
    except GnslabError as exc:
        raise _InputError(f"{path}: {exc}") from exc


class _InputError(Exception):
    pass


def cmd_check(args) -> int:
    phi = _load_map(args.map)
    suite = [s for s in (args.suite.split(",") if args.suite else []) if s]
    if args.suite is None:
        suite = list(STANDARD_SUITE)
    rng = rng_from_seed(args.seed)
    try:
        report = run_suite(phi, suite, rng, n_samples=args.samples, tol=args.tol)
    except PreconditionError as exc:
        raise _InputError(str(exc)) from exc
    report.environment = _environment(args)
    _emit(args, report.to_dict())
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_gns(args) -> int:
    phi = _load_map(args.map)
    rng = rng_from_seed(args.seed)
    report = Report(environment=_environment(args))
    if phi.domain is None:
        print("error: map has no domain model; cannot build a representation", file=sys.stderr)
        return EXIT_INPUT_ERROR
    core_rank, full_rank = density_ranks(phi, tol=args.tol)
    if core_rank != full_rank:
        print(
            f"error: not representable (core image rank {core_rank} < {full_rank})",
            file=sys.stderr,
        )
        return EXIT_CHECK_FAILED
    try:
        triple = build_gns(phi, tol=args.tol, rng=rng)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    report.extend(verify_representation(triple).checks)

    if args.verify_uniqueness:
        rotated = build_gns(phi, tol=args.tol, rotate_with=rng, rng=rng)
        _, eq_report = unitary_equivalence(triple, rotated)
        for check in eq_report.checks:
            check.name = f"uniqueness_{check.name}"
        report.extend(eq_report.checks)

    payload = report.to_dict()
    payload["triple"] = encode_triple(triple)
    _emit(args, payload)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _instance_weight(m: int) -> np.ndarray:
    return np.diag(np.arange(1, m + 1, dtype=float))


def cmd_examples(args) -> int:
    if args.m > MAX_MATRIX_SIZE:
        raise _InputError(f"--m exceeds the size limit {MAX_MATRIX_SIZE}")
    if args.grid > MAX_GRID:
        raise _InputError(f"--grid exceeds the limit {MAX_GRID}")
    rng = rng_from_seed(args.seed)
    W = _instance_weight(args.m)
    TA = TraceAlgebra(args.m, p=args.p)
    if args.which == "rightmult":
        phi = phi_right_mult(CStarAlgebra((args.m,)))
    elif args.which == "schatten":
        phi = schatten_trace_map(TA, W, args.grid, rng=rng)
    elif args.which == "pettis":
        grid, _ = min_cutoff_family(W, args.grid)
        curve = OperatorValuedCurve.random(rng, args.m, grid)
        phi = pettis_integral_map(TA, W, curve, rng=rng)
    elif args.which == "series":
        grid, _ = min_cutoff_family(W, args.grid)
        curves = [OperatorValuedCurve.random(rng, args.m, grid) for _ in range(2)]
        maps = [pettis_integral_map(TA, W, c, rng=rng) for c in curves]
        codomain = maps[0].codomain
        coeffs = [codomain.random_element(rng) for _ in range(2)]
        phi = series_map(maps, coeffs)
    else:
        raise _InputError(f"unknown example {args.which!r}")
    payload = encode_map(phi)
    payload["instance"] = encode_instance(args.m, args.p, W, args.grid)
    _emit(args, payload)
    return EXIT_OK


def _parse_blocks(spec: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in spec.split(",") if x)
    except ValueError as exc:
        raise _InputError(f"bad --blocks spec {spec!r}") from exc
    if not dims or any(n < 1 or n > MAX_MATRIX_SIZE for n in dims):
        raise _InputError(f"bad --blocks spec {spec!r}")
    return dims


def cmd_random(args) -> int:
    if args.dim > MAX_MATRIX_SIZE:
        raise _InputError(f"--dim exceeds the size limit {MAX_MATRIX_SIZE}")
    rng = rng_from_seed(args.seed)
    codomain = CStarAlgebra(_parse_blocks(args.blocks))
    if args.invariant:
        Q = full_matrix_model(args.dim)
        phi = random_invariant_map(rng, Q, codomain)
    else:
        phi = random_certificate_map(rng, args.dim, codomain)
    _emit(args, encode_map(phi))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = Report.from_dict(load_json(getattr(args, "in")))
    except json.JSONDecodeError as exc:
        raise _InputError(f"{getattr(args, 'in')}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    for check in sorted(report.checks, key=lambda c: c.name):
        bits = [f"{check.name}: {check.status}"]
        if check.worst_ratio is not None:
            bits.append(f"worst_ratio={check.worst_ratio:.6g}")
        if check.residual is not None:
            bits.append(f"residual={check.residual:.3e}")
        print("  ".join(bits))
    failed = [c for c in report.checks if c.status == FAIL]
    print(f"{len(report.checks) - len(failed)}/{len(report.checks)} checks passed")
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gnslab",
        description="Verification lab for C*-valued inner products and their representations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
        p.add_argument("--out", type=str, default=None)

    p_check = sub.add_parser("check", help="run the verification suite on a map file")
    p_check.add_argument("--map", required=True)
    p_check.add_argument(
        "--suite",
        type=str,
        default=None,
        help=f"comma-separated subset of {','.join(STANDARD_SUITE)} (default: all)",
    )
    common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_gns = sub.add_parser("gns", help="build the cyclic representation from a map file")
    p_gns.add_argument("--map", required=True)
    p_gns.add_argument("--verify-uniqueness", action="store_true")
    common(p_gns)
    p_gns.set_defaults(func=cmd_gns)

    p_ex = sub.add_parser("examples", help="materialize a stock example map")
    p_ex.add_argument(
        "--which", required=True, choices=["rightmult", "schatten", "pettis", "series"]
    )
    p_ex.add_argument("--m", type=int, default=2)
    p_ex.add_argument("--grid", type=int, default=16)
    p_ex.add_argument("--p", type=float, default=2.0, choices=[2.0, 4.0])
    common(p_ex)
    p_ex.set_defaults(func=cmd_examples)

    p_rand = sub.add_parser("random", help="emit a seeded random map file")
    p_rand.add_argument("--dim", type=int, default=4, help="domain dimension")
    p_rand.add_argument("--blocks", type=str, default="2", help="codomain block dims, e.g. 2,1")
    p_rand.add_argument(
        "--invariant",
        action="store_true",
        help="emit an invariant map built from a positive linear map",
    )
    common(p_rand)
    p_rand.set_defaults(func=cmd_random)

    p_rep = sub.add_parser("report", help="pretty-print a report file")
    p_rep.add_argument("--in", required=True)
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except GnslabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
