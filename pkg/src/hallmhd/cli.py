"""Command-line front end: ``verify``, ``run`` and ``analyze``.

Exit codes: 0 success, 1 failure, 2 usage error.  ``run`` additionally
returns 3 when a blow-up was detected and 4 when the step limit was hit.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import __version__
from .diagnostics import Recorder, sample
from .fields import curl_array, resample
from .hall import aux_fields, decompose_hall_2d, decompose_hall_3d, effective_band_limit
from .io import (
    TIMESERIES_VERSION,
    ConfigError,
    SnapshotError,
    initial_state,
    load_config,
    read_snapshot,
    timeseries_rows,
    write_csv,
    write_snapshot,
)
from .mhd import State
from .spectral import l2_sq_array
from .timestepper import run as run_trajectory
from .verify import HEADER, SUITES, run_suite

log = logging.getLogger("hallmhd")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BLOWUP, EXIT_STEP_LIMIT = 0, 1, 2, 3, 4
RUN_EXIT = {"completed": EXIT_OK, "blowup_detected": EXIT_BLOWUP, "step_limit": EXIT_STEP_LIMIT}


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    if args.trials < 0 or (args.n is not None and args.n <= 0):
        print("error: trials must be >= 0 and n > 0", file=sys.stderr)
        return EXIT_USAGE
    fh, close = _open_out(args.out)
    failures = []
    total = 0
    try:
        rows = []
        for row in run_suite(args.suite, args.trials, args.seed, args.n):
            total += 1
            rows.append(row.as_list())
            if not row.passed:
                failures.append(row)
        write_csv(fh, HEADER, rows)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if close:
            fh.close()
    if failures:
        worst = max(failures, key=lambda r: r.value / r.normalizer if r.normalizer else math.inf)
        print(
            f"FAIL: {len(failures)} of {total} rows exceed tolerance; worst {worst.suite}/{worst.identity} "
            f"seed {worst.seed}: {worst.value:.3e} vs {worst.tolerance:g} x {worst.normalizer:.3e}",
            file=sys.stderr,
        )
        return EXIT_FAIL
    print(f"ok: {total} rows passed", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        state, spec = initial_state(cfg)
    except (ConfigError, SnapshotError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    write_snapshot(out / "initial.snap", state, spec)

    rec = Recorder(spec, cfg.criteria, cfg.m, cfg.cadence)
    result = run_trajectory(state, spec, cfg.stepper, [rec])
    history = rec.finish(result.status)
    if result.steps:
        write_snapshot(out / "final.snap", result.last_finite, spec)
    header, rows = timeseries_rows(history)
    with open(out / "timeseries.csv", "w", newline="") as fh:
        write_csv(fh, header, rows, comment=f"hallmhd timeseries v{TIMESERIES_VERSION}")
    msg = f"{result.status} after {result.steps} steps at t={result.state.t:.6g}"
    if result.message:
        msg += f": {result.message}"
    print(msg, file=sys.stderr)
    return RUN_EXIT[result.status]


# ---------------------------------------------------------------------------
# analyze


def _cubic_exact(state: State) -> State:
    """Refine the grid until cubic quadrature of b is exact."""
    K = effective_band_limit(state.b.coeffs, state.grid)
    n = state.grid.n
    while 3 * K >= n:
        n *= 2
    if n == state.grid.n:
        return state
    return State(resample(state.u, n), resample(state.b, n), state.t)


def _analyze_rows(state: State, spec, what: str):
    if what in ("hall2d", "hall3d"):
        dim = 2 if what == "hall2d" else 3
        if state.grid.dim != dim:
            raise ValueError(f"{what} needs a {dim}-D snapshot")
        fine = _cubic_exact(state)
        if dim == 2:
            br = decompose_hall_2d(fine.b, spec.epsilon)
            terms = [(f"I5_{d}_{i}", br.term(d, i)) for d in (1, 2) for i in range(1, 7)]
            direct = br.i5_direct
        else:
            br = decompose_hall_3d(fine.b, spec.epsilon)
            terms = [(f"V_{k}_{i}", br.V(k, i)) for k in (1, 2, 3) for i in range(1, 7)]
            for fam, get in (("VI", br.VI), ("VII", br.VII), ("VIII", br.VIII)):
                terms += [(f"{fam}_{k}_{l}", get(k, l)) for k in (1, 2, 3) for l in range(1, 9)]
            direct = br.direct
        header = ["term", "value", "direct"]
        rows = [[name, val, direct] for name, val in terms]
        main = terms if dim == 2 else terms[:18]
        rows.append(["sum", math.fsum(v for _, v in main), direct])
        return header, rows
    if what == "aux":
        aux = aux_fields(state)
        g = state.grid
        curl_om = aux.curl_omega()
        j3 = aux.z2.coeffs[2] - curl_om.coeffs[2]
        j3_direct = curl_array(state.b.coeffs, g)[2]
        rows = [
            ["omega_l2sq", aux.omega.l2_norm() ** 2],
            ["z1_l2sq", aux.z1.l2_norm() ** 2],
            ["z2_l2sq", aux.z2.l2_norm() ** 2],
        ]
        rows += [[f"curl_omega_{k + 1}_l2sq", l2_sq_array(curl_om.coeffs[k], g)] for k in range(3)]
        rows.append(["j3_reconstruction_error", math.sqrt(l2_sq_array(j3 - j3_direct, g))])
        return ["quantity", "value"], rows
    if what == "sample":
        r = sample(state, spec)
        rows = [
            ["t", r.t], ["l2_u", r.l2_u], ["l2_b", r.l2_b], ["h1_u", r.h1_u], ["h1_b", r.h1_b],
            [f"hm_u_m{r.m}", r.hm_u], [f"hm_b_m{r.m}", r.hm_b], ["dissipation_rate", r.dissipation_rate],
        ]
        rows += [[f"z_{k}", v] for k, v in r.z_norms.items()]
        rows += [[k, v] for k, v in r.linf_proxies.items()]
        return ["quantity", "value"], rows
    raise ValueError(f"unknown analysis {what!r}")


def cmd_analyze(args) -> int:
    try:
        state, spec = read_snapshot(args.snapshot)
    except OSError as exc:
        print(f"error: {args.snapshot}: {exc.strerror}", file=sys.stderr)
        return EXIT_FAIL
    except SnapshotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    try:
        header, rows = _analyze_rows(state, spec, args.what)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    fh, close = _open_out(args.out)
    try:
        write_csv(fh, header, rows)
    finally:
        if close:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hallmhd", description="Hall-MHD spectral solver and identity checks")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run seeded identity suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--n", type=int, default=None, help="grid size (default depends on the suite)")
    v.add_argument("--out", default=None, help="CSV report path (default stdout)")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("run", help="integrate a configured system")
    r.add_argument("--config", required=True)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="one-shot analysis of a snapshot")
    a.add_argument("--snapshot", required=True)
    a.add_argument("--what", choices=("hall2d", "hall3d", "aux", "sample"), required=True)
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    with np.errstate(over="ignore", invalid="ignore"):
        return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
