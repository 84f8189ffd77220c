"""Command-line front end: ``sapd solve|oracle|sweep <scenario.yaml>``.

Exit codes: 0 success, 2 invalid input, 3 instance not supported by the
analytic solver, 4 oracle budget refused, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import logging
import sys
from dataclasses import asdict
from typing import Any, Dict, Optional, Sequence

from .closed_form import FdmaSolution
from .exceptions import SapdError
from .io import dump_report, load_scenario, psd_to_dict, scenario_to_dict, tool_metadata
from .model import Objective
from .oracle import (
    DEFAULT_BUDGET,
    brute_force,
    discretize,
    search_space_size,
    verify_max_power,
    verify_rectangular_structure,
)
from .partial_overlap import (
    Candidate,
    PartialOverlapSolution,
    SolveReport,
    SolverOptions,
    solve,
    sweep_curve,
)

__all__ = ["main", "build_parser", "solve_report", "oracle_report", "sweep_csv"]

SWEEP_HEADER = ("sigma2", "branch", "sigma1", "B", "feasible")

logger = logging.getLogger("sapd")


def _objective_dict(objective: Objective) -> Dict[str, str]:
    return {"kind": objective.kind, "log_base": objective.base_label}


def _candidate_dict(c: Candidate) -> Dict[str, Any]:
    out: Dict[str, Any] = {"form": c.form, "value": c.value, "capacities": c.capacities}
    sol = c.solution
    if isinstance(sol, PartialOverlapSolution):
        out.update(subcase=sol.subcase, branch=sol.branch, endpoint=sol.endpoint,
                   variables=sol.variables, B=sol.B, stationarity=sol.stationarity,
                   residuals=sol.residuals, diagnostics=sol.diagnostics)
    elif isinstance(sol, FdmaSolution):
        out.update(split=sol.split, densities=list(sol.densities), closed_form=sol.closed_form)
    out["psd"] = psd_to_dict(c.psd)
    return out


def solve_report(report: SolveReport, scenario, source: Optional[str] = None) -> Dict[str, Any]:
    """Plain-data report of a :func:`~sapd.partial_overlap.solve` run."""
    best = _candidate_dict(report.best)
    return {
        "tool": tool_metadata(),
        "command": "solve",
        "source": source,
        "scenario": scenario_to_dict(scenario),
        "objective": _objective_dict(report.objective),
        "options": asdict(report.options),
        "best": best,
        "candidates": [_candidate_dict(c) for c in report.candidates],
        "notes": list(report.notes),
    }


def oracle_report(alloc, scenario, source: Optional[str] = None) -> Dict[str, Any]:
    """Plain-data report of a :func:`~sapd.oracle.brute_force` run."""
    inst = alloc.instance
    mp = verify_max_power(alloc)
    out: Dict[str, Any] = {
        "tool": tool_metadata(),
        "command": "oracle",
        "source": source,
        "scenario": scenario_to_dict(scenario),
        "objective": _objective_dict(alloc.objective),
        "grid": {"channels": inst.channels, "levels": inst.levels, "method": alloc.method,
                 "search_space": search_space_size(inst.channels, inst.levels)},
        "value": alloc.value,
        "capacities": alloc.capacities,
        "units": alloc.units,
        "psd": psd_to_dict(alloc.psd()),
        "max_power": {"ratios": mp.ratios, "threshold": mp.threshold,
                      "flagged": list(mp.flagged), "ok": mp.ok},
        "structure": None,
    }
    if scenario.is_flat:
        st = verify_rectangular_structure(alloc)
        out["structure"] = {"shared_channels": st.shared_channels,
                            "spread_units": list(st.spread_units),
                            "relative_spread": list(st.relative_spread),
                            "max_steps": st.max_steps, "passed": st.passed}
    return out


def sweep_csv(rows) -> str:
    """CSV text with header ``sigma2,branch,sigma1,B,feasible``; infeasible rows carry ``nan``."""
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in rows:
        writer.writerow([repr(r.sigma2), r.branch, repr(r.sigma1), repr(r.B),
                         "true" if r.feasible else "false"])
    return buf.getvalue()


def _objective_from(args, sf) -> Objective:
    kind = args.objective or sf.objective.kind
    base: Any = sf.objective.base
    if args.log_base is not None:
        base = 2.0 if args.log_base == "2" else "e"
    return Objective(kind, base)


def _solver_options(args, sf) -> SolverOptions:
    opts = dict(sf.solver)
    if args.tol is not None:
        opts["tol"] = args.tol
    return SolverOptions(**opts)


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    sf = load_scenario(args.scenario)
    report = solve(sf.scenario, _objective_from(args, sf), _solver_options(args, sf))
    _emit(dump_report(solve_report(report, sf.scenario, args.scenario)), args.out)
    return 0


def cmd_oracle(args) -> int:
    sf = load_scenario(args.scenario)
    k = args.channels or sf.oracle.get("channels", 16)
    L = args.levels or sf.oracle.get("levels", 8)
    budget = args.budget or sf.oracle.get("budget", DEFAULT_BUDGET)
    method = args.method or sf.oracle.get("method", "dp")
    instance = discretize(sf.scenario, k, L)
    alloc = brute_force(instance, _objective_from(args, sf), budget=budget, method=method)
    _emit(dump_report(oracle_report(alloc, sf.scenario, args.scenario)), args.out)
    return 0


def cmd_sweep(args) -> int:
    sf = load_scenario(args.scenario)
    objective = _objective_from(args, sf)
    rows = sweep_curve(sf.scenario, args.samples, _solver_options(args, sf), objective.base)
    _emit(sweep_csv(rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sapd", description="Two-user spectrum allocation and power distribution.")
    parser.add_argument("--version", action="version", version=tool_metadata()["version"])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario YAML file")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--objective", choices=("sum", "product"))
        p.add_argument("--log-base", choices=("2", "e"), dest="log_base")
        p.add_argument("--tol", type=float, help="residual acceptance threshold (relative)")

    p = sub.add_parser("solve", help="analytic best of FDMA, full share and partial overlap")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="exact optimum on a discrete channel and power grid")
    common(p)
    p.add_argument("--channels", type=int, help="number of equal channels k (default 16)")
    p.add_argument("--levels", type=int, help="power units per user L (default 8)")
    p.add_argument("--budget", type=int, help=f"work limit (default {DEFAULT_BUDGET})")
    p.add_argument("--method", choices=("dp", "enumerate"))
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="CSV table of the partial-overlap curve")
    common(p)
    p.add_argument("--samples", type=int, default=200, help="number of sigma2 samples")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for name in ("channels", "levels", "budget", "samples"):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            print(f"sapd: error: --{name} must be >= 1", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except SapdError as exc:
        print(f"sapd: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"sapd: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
