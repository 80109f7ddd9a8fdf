"""Command-line front end.

Subcommands::

    epsim ep STATEFILE                 sector table and particle entanglement
    epsim transfer STATEFILE           register state via the exact protocol
                                       (--path quadrature for the grid route)
    epsim measure --ntr N              phase-difference measurement analysis
    epsim sweep --ntr-list 25,50,100   visibility / formation-entanglement table
    epsim bounds --seeds N --s S       Robertson / visibility-bound sweep

Exit codes: 0 success, 2 state-file parse error, 3 capacity overflow,
4 unwritable output, 5 uncertainty-inequality violation.  Every run prints a
JSON report to stdout; ``--out`` additionally writes a deterministic result
file (the stdout report carries wall time, the file does not, so identical
inputs and seed give byte-identical files).
"""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from .fock import CapacityError, entropy_of_entanglement, trace_distance
from .phase import (
    VisibilityReport,
    coherent_visibility_model,
    concurrence_ef_oracle,
    ef_large_visibility,
    ef_upper_bound,
    entanglement_of_formation_x,
    post_measurement_register_state,
    visibility,
)
from .protocol import (
    AncillaSpec,
    GridError,
    ProtocolConfig,
    coherent_coefficients,
    equal_different_measurement,
    phase_grid_register_state,
    run_transfer,
    transfer_entanglement,
)
from .sectors import (
    particle_entanglement,
    register_sector_table,
    register_sector_weights,
    sector_decompose,
)
from .statefile import (
    StateFileError,
    density_to_dict,
    dump_json,
    format_float,
    load_state,
    state_to_dict,
)
from .uncertainty import (
    PhaseOperatorSpace,
    PhysicalityError,
    coherent_pair_state,
    random_uncorrelated_pair,
    robertson_checks,
    visibility_bound_check,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CAPACITY = 3
EXIT_IO = 4
EXIT_VIOLATION = 5

SWEEP_COLUMNS = ("ntr", "vis2_full", "vis2_model", "ef", "ef_bound")


class InequalityViolation(RuntimeError):
    """An uncertainty inequality came out below the slack tolerance."""


def _write_out(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _emit(report: dict, args, file_payload: dict | None = None,
          started: float | None = None) -> None:
    if args.out and file_payload is not None:
        _write_out(args.out, dump_json(file_payload) + "\n")
    if started is not None:
        report = dict(report)
        report["wall_time_s"] = time.perf_counter() - started
    print(dump_json(report))


def _transfer_ancilla(m: int, nbar: float | None) -> AncillaSpec:
    if nbar is None:
        return AncillaSpec.uniform(m)
    return coherent_coefficients(nbar, m)


def cmd_ep(args) -> int:
    started = time.perf_counter()
    state = load_state(args.statefile)
    decomp = sector_decompose(state)
    sector_rows = [
        {"n": s.n, "p": s.probability, "entanglement": entropy_of_entanglement(s.state)}
        for s in decomp.sectors
    ]
    results = {
        "particle_entanglement": particle_entanglement(state),
        "entropy_of_entanglement": entropy_of_entanglement(state),
        "sectors": sector_rows,
    }
    report = {"command": "ep", "inputs": {"statefile": args.statefile},
              "seed": args.seed, "results": results}
    _emit(report, args, file_payload={"results": results}, started=started)
    return EXIT_OK


def cmd_transfer(args) -> int:
    started = time.perf_counter()
    state = load_state(args.statefile)
    spec = _transfer_ancilla(args.M, args.nbar)
    config = ProtocolConfig(state, spec, spec, sink_headroom=args.headroom)
    rho = run_transfer(config)
    results = {
        "register_state": density_to_dict(rho),
        "sector_weights": register_sector_weights(rho),
        "sector_entanglements": register_sector_table(rho),
        "transfer_entanglement": transfer_entanglement(rho),
        "input_particle_entanglement": particle_entanglement(state),
    }
    n_regs = len(rho.layout.modes)
    if (n_regs == 4 and all(m.capacity == 1 for m in rho.layout.modes)
            and len(rho.layout.indices(site="A")) == 2):
        outcomes = equal_different_measurement(rho)
        results["equal_different"] = [
            {"outcome": [o.outcome_a, o.outcome_b], "probability": o.probability,
             "entanglement": o.entanglement}
            for o in outcomes
        ]
        results["average_entanglement"] = sum(
            o.probability * o.entanglement for o in outcomes)
    if args.path == "quadrature":
        grid = args.grid if args.grid else 2 * args.M + 3
        approx = phase_grid_register_state(config, grid)
        results["quadrature"] = {
            "grid": grid,
            "trace": approx.trace(),
            "trace_distance_to_exact": trace_distance(approx, rho),
            "distance_bound": 3.0 / (args.M + 1),
        }
    report = {"command": "transfer", "inputs": {"statefile": args.statefile,
              "M": args.M, "path": args.path, "nbar": args.nbar},
              "seed": args.seed, "results": results}
    _emit(report, args, file_payload={"results": results}, started=started)
    return EXIT_OK


def _measurement_report(ntr: float, local_scale: float,
                        grid: int | None) -> VisibilityReport:
    """Visibility analysis for a transported coherent reference of mean ntr
    against a local one whose amplitude is ``local_scale`` times larger
    (mean occupation local_scale^2 * ntr)."""
    m_tr = max(1, math.ceil(ntr + 10.0 * math.sqrt(ntr)))
    nbar_local = local_scale ** 2 * ntr
    m_local = max(1, math.ceil(nbar_local + 10.0 * math.sqrt(nbar_local)))
    transported = coherent_coefficients(ntr, m_tr)
    local = coherent_coefficients(nbar_local, m_local)
    c = visibility(transported, local, grid=grid)
    return VisibilityReport(
        c=c,
        visibility_sq=abs(c) ** 2,
        ef=entanglement_of_formation_x(c),
        bound=ef_upper_bound(transported.variance),
        transported_mean=transported.mean,
        transported_variance=transported.variance,
    )


def cmd_measure(args) -> int:
    started = time.perf_counter()
    if args.ntr < 1.0:
        raise StateFileError(f"--ntr must be >= 1, got {args.ntr}")
    rep = _measurement_report(args.ntr, args.local_scale, args.grid)
    ef_oracle = concurrence_ef_oracle(post_measurement_register_state(rep.c))
    results = {
        "c": rep.c,
        "visibility_sq": rep.visibility_sq,
        "ef_formula": rep.ef,
        "ef_oracle": ef_oracle,
        "visibility_sq_model": coherent_visibility_model(args.ntr),
        "ef_bound": rep.bound,
        "transported_mean": rep.transported_mean,
        "transported_variance": rep.transported_variance,
    }
    report = {"command": "measure",
              "inputs": {"ntr": args.ntr, "local_scale": args.local_scale},
              "seed": args.seed, "results": results}
    _emit(report, args, file_payload={"results": results}, started=started)
    return EXIT_OK


def sweep_rows(ntr_values: list[float], local_scale: float) -> list[dict]:
    rows = []
    for ntr in ntr_values:
        rep = _measurement_report(ntr, local_scale, None)
        rows.append({
            "ntr": ntr,
            "vis2_full": rep.visibility_sq,
            "vis2_model": coherent_visibility_model(ntr),
            "ef": ef_large_visibility(rep.c),
            "ef_bound": ef_upper_bound(ntr),
        })
    return rows


def sweep_csv(rows: list[dict]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(format_float(float(row[c])) for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    ntr_values = [float(x) for x in args.ntr_list.split(",") if x.strip()]
    if not ntr_values:
        raise StateFileError("empty --ntr-list")
    if any(v < 1.0 for v in ntr_values):
        raise StateFileError("all --ntr-list values must be >= 1")
    rows = sweep_rows(ntr_values, args.local_scale)
    efs = [r["ef"] for r in rows]
    monotone = all(b > a for a, b in zip(efs, efs[1:]))
    if args.out:
        if args.format == "csv":
            _write_out(args.out, sweep_csv(rows))
        else:
            _write_out(args.out, dump_json({"rows": rows, "monotone_ef": monotone}) + "\n")
    report = {"command": "sweep",
              "inputs": {"ntr_list": ntr_values, "local_scale": args.local_scale,
                         "format": args.format},
              "seed": args.seed,
              "results": {"rows": rows, "monotone_ef": monotone}}
    _emit(report, args, started=started)
    return EXIT_OK


def _check_summary(reports) -> dict:
    summary: dict[str, dict] = {}
    for rep in reports:
        for check in rep.checks:
            if check.skipped:
                continue
            entry = summary.setdefault(check.name, {"min_slack": math.inf, "violations": 0})
            entry["min_slack"] = min(entry["min_slack"], check.slack)
            if not check.holds:
                entry["violations"] += 1
    return summary


def cmd_bounds(args) -> int:
    started = time.perf_counter()
    if args.s < 16:
        raise StateFileError(f"--s must be >= 16, got {args.s}")
    space = PhaseOperatorSpace(args.s)
    rng = np.random.RandomState(args.seed)
    reports = []
    offenders = []
    resampled = 0
    produced = 0
    while produced < args.seeds:
        state = random_uncorrelated_pair(space, rng)
        try:
            pair = (robertson_checks(state, space),
                    visibility_bound_check(state, space))
        except PhysicalityError:
            resampled += 1
            continue
        reports.extend(pair)
        if not all(rep.all_hold for rep in pair):
            offenders.append(state_to_dict(state))
        produced += 1
    results = {
        "states": produced,
        "resampled": resampled,
        "trig_identity_max_residual": max(abs(r.trig_identity_residual) for r in reports),
        "inequalities": _check_summary(reports),
    }
    if offenders:
        results["violating_states"] = offenders
    if args.nbar:
        nbar_a, nbar_b = (float(x) for x in args.nbar.split(","))
        # Grow the truncation if needed so the coherent pair stays physical.
        s_pair = max(args.s, math.ceil(max(nbar_a, nbar_b)
                                       + 12.0 * math.sqrt(max(nbar_a, nbar_b))))
        pair_space = space if s_pair == args.s else PhaseOperatorSpace(s_pair)
        pair = coherent_pair_state(nbar_a, nbar_b, pair_space)
        rep = visibility_bound_check(pair, pair_space)
        results["coherent_pair"] = {
            "nbar": [nbar_a, nbar_b],
            "s": s_pair,
            "visibility_sq": rep.visibility_sq,
            "checks": {c.name: {"lhs": c.lhs, "rhs": c.rhs, "slack": c.slack}
                       for c in rep.checks if not c.skipped},
        }
        reports.append(rep)
    violations = sum(entry["violations"] for entry in results["inequalities"].values())
    results["violations"] = violations
    report = {"command": "bounds",
              "inputs": {"seeds": args.seeds, "s": args.s, "nbar": args.nbar},
              "seed": args.seed, "results": results}
    _emit(report, args, file_payload={"results": results}, started=started)
    if violations or any(not r.all_hold for r in reports):
        raise InequalityViolation(f"{violations} inequality violations")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epsim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", default=None, help="write a deterministic result file")
        p.add_argument("--seed", type=int, default=42)

    p_ep = sub.add_parser("ep", help="particle entanglement of a state file")
    p_ep.add_argument("statefile")
    common(p_ep)
    p_ep.set_defaults(func=cmd_ep)

    p_tr = sub.add_parser("transfer", help="run the register transfer protocol")
    p_tr.add_argument("statefile")
    p_tr.add_argument("--M", type=int, default=32, help="ancilla truncation")
    p_tr.add_argument("--grid", type=int, default=None, help="phase grid size")
    p_tr.add_argument("--path", choices=("exact", "quadrature"), default="exact")
    p_tr.add_argument("--nbar", type=float, default=None,
                      help="coherent ancilla mean (default: uniform amplitudes)")
    p_tr.add_argument("--headroom", type=int, default=None,
                      help="sink capacity margin above M (default: particle number)")
    common(p_tr)
    p_tr.set_defaults(func=cmd_transfer)

    p_me = sub.add_parser("measure", help="phase-difference measurement analysis")
    p_me.add_argument("--ntr", type=float, default=100.0,
                      help="mean transported particle number")
    p_me.add_argument("--local-scale", type=float, default=10.0,
                      help="local/transported coherent amplitude ratio "
                           "(local mean occupation is scale^2 * ntr)")
    p_me.add_argument("--grid", type=int, default=None)
    common(p_me)
    p_me.set_defaults(func=cmd_measure)

    p_sw = sub.add_parser("sweep", help="visibility / formation entanglement table")
    p_sw.add_argument("--ntr-list", required=True, help="comma-separated ntr values")
    p_sw.add_argument("--local-scale", type=float, default=10.0)
    common(p_sw)
    p_sw.set_defaults(func=cmd_sweep)

    p_bo = sub.add_parser("bounds", help="uncertainty inequality sweep")
    p_bo.add_argument("--seeds", type=int, default=100, help="number of random states")
    p_bo.add_argument("--s", type=int, default=256, help="phase-space truncation")
    p_bo.add_argument("--nbar", default=None,
                      help="comma pair, e.g. 25,250: add a coherent-pair check")
    common(p_bo)
    p_bo.set_defaults(func=cmd_bounds)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (StateFileError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InequalityViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
