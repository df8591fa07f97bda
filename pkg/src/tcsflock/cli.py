"""Command-line entry point: graph-info, simulate, certify, limit-check.

Exit codes: 0 success / satisfied, 1 unsatisfied certificate (or no spanning
tree), 2 invalid scenario, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import certificates as cert
from . import graph as graphmod
from .dynamics import Diameters, Trajectory, simulate_continuous, simulate_discrete
from .errors import NumericError, ScenarioError, TCSError
from .scenario import Scenario, load_scenario

EXIT_OK, EXIT_UNSATISFIED, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


def fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain str for everything else."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, allow_nan=True)
        fh.write("\n")


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    d = traj.samples[0].dim
    header = (
        ["t", "agent"]
        + [f"x{k + 1}" for k in range(d)]
        + [f"v{k + 1}" for k in range(d)]
        + ["beta", "theta"]
    )

    def rows():
        for s in traj.samples:
            theta = s.theta
            for i in range(s.n):
                yield [s.t, i, *s.X[i], *s.V[i], s.B[i], theta[i]]

    _write_csv(path, header, rows())


def write_diagnostics_csv(path: Path, traj: Trajectory, certificate=None) -> None:
    header = ["t", *Diameters._fields]
    diag = traj.diagnostics()
    times = traj.times
    columns = [times, *diag.T]
    if certificate is not None:
        if traj.mode == "discrete":
            clock = np.rint((times - times[0]) / traj.h)
        else:
            clock = times - times[0]
        header += ["env_DB", "env_DV"]
        columns += [np.atleast_1d(certificate.envelope_B(clock)), np.atleast_1d(certificate.envelope_V(clock))]
    _write_csv(path, header, zip(*columns))


def _certificate_for(scn: Scenario, model, s0):
    """Evaluate the scenario's certificate section (grid search when lists are given)."""
    spec = scn.certificate
    if scn.mode == "continuous":
        result = cert.search_parameters(s0, model, spec.x_inf_grid, delta_grid=spec.delta_grid)
    else:
        if scn.numerics is None:
            raise ScenarioError("numerics.h is required for a discrete certificate")
        result = cert.search_parameters(s0, model, spec.x_inf_grid, n0_grid=spec.n0_grid, h=scn.numerics.h)
    chosen = result.best or result.best_failing
    if chosen is None:
        raise ScenarioError("certificate: no admissible grid point (n0 below gamma_g everywhere)")
    return chosen, result


def cmd_graph_info(scn: Scenario, out: Path) -> int:
    g = scn.build_graph()
    rs = graphmod.roots(g)
    info = {"N": g.n, "edges": g.edge_count, "roots": rs}
    info["gamma_g"] = graphmod.smallest_depth(g) if rs else None
    print(f"N: {g.n}")
    print(f"edges: {g.edge_count}")
    print(f"roots: {rs}")
    print(f"gamma_g: {info['gamma_g'] if rs else 'no spanning tree'}")
    _write_json(out / scn.output.graph_info, info)
    return EXIT_OK if rs else EXIT_UNSATISFIED


def cmd_simulate(scn: Scenario, out: Path) -> int:
    if scn.numerics is None:
        raise ScenarioError("numerics: section is required for simulate")
    model = scn.build_model()
    s0 = scn.build_state(model.n)
    num = scn.numerics
    if scn.mode == "continuous":
        traj = simulate_continuous(s0, model, num.h, num.t_end, num.sample_every)
    else:
        traj = simulate_discrete(s0, model, num.h, num.n_steps, num.sample_every)
    certificate = None
    if scn.certificate is not None:
        chosen, _ = _certificate_for(scn, model, s0)
        if chosen.usable:
            certificate = chosen
        else:
            print(f"note: certificate unusable ({chosen.reason}); envelope columns omitted", file=sys.stderr)
    write_trajectory_csv(out / scn.output.trajectory, traj)
    write_diagnostics_csv(out / scn.output.diagnostics, traj, certificate)
    print(f"samples: {len(traj)}  t_final: {fmt(traj.final.t)}")
    if traj.mode == "discrete" and not traj.h_certified:
        print(f"warning: h={fmt(num.h)} exceeds the certified discrete step bound", file=sys.stderr)
    if traj.error is not None:
        _write_json(out / scn.output.error, {"error": traj.error, "t_last": traj.final.t})
        print(f"error: {traj.error}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_certify(scn: Scenario, out: Path) -> int:
    if scn.certificate is None:
        raise ScenarioError("certificate: section is required for certify")
    model = scn.build_model()
    s0 = scn.build_state(model.n)
    chosen, result = _certificate_for(scn, model, s0)
    report = chosen.to_report()
    report["gamma_g"] = chosen.inputs.gamma
    report["window_parameter"] = {"delta": chosen.inputs.delta, "n0": chosen.inputs.n0, "h": chosen.inputs.h}
    report["grid_points"] = len(result.evaluated)
    _write_json(out / scn.output.certificate, report)
    print(f"mode: {chosen.mode}  lhs: {fmt(chosen.lhs)}  x_inf: {fmt(chosen.x_inf)}  satisfied: {chosen.satisfied}")
    if chosen.reason and not chosen.satisfied:
        print(f"reason: {chosen.reason}")
    return EXIT_OK if chosen.satisfied else EXIT_UNSATISFIED


def cmd_limit_check(scn: Scenario, out: Path) -> int:
    spec, lim = scn.certificate, scn.limit_check
    if spec is None or spec.delta is None or lim is None:
        raise ScenarioError("limit-check needs certificate.x_inf, certificate.delta and limit_check")
    if scn.mode != "continuous":
        raise ScenarioError("limit-check compares against the continuous certificate; set mode to continuous")
    model = scn.build_model()
    s0 = scn.build_state(model.n)
    if len(spec.x_inf_grid) == 1 and len(spec.delta_grid) == 1:
        x_inf, delta = spec.x_inf_grid[0], spec.delta_grid[0]
    else:
        # grids: compare at the best continuous grid point
        chosen, _ = _certificate_for(scn, model, s0)
        x_inf, delta = chosen.x_inf, chosen.inputs.delta
    inp = cert.CertificateInputs.from_state(s0, model, x_inf, delta=delta)
    h_values = lim.h_values if lim.h_values is not None else [delta / k for k in lim.divisors]
    rows = cert.continuum_limit_check(inp, h_values)
    table = [
        [r.h, r.n0, r.lhs_discrete, r.lhs_continuous, r.gap, "skipped" if r.skipped else "ok"]
        for r in rows
    ]
    header = ["h", "n0", "lhs_discrete", "lhs_continuous", "gap", "status"]
    _write_csv(out / scn.output.limit, header, table)
    print("  ".join(header))
    for row in table:
        print("  ".join(fmt(v) for v in row))
    return EXIT_OK


COMMANDS = {
    "graph-info": cmd_graph_info,
    "simulate": cmd_simulate,
    "certify": cmd_certify,
    "limit-check": cmd_limit_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcsflock", description="Simulate and certify thermomechanical Cucker-Smale flocking."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="path to the scenario JSON file")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scn = load_scenario(args.scenario)
        if args.seed is not None:
            scn = scn.with_seed(args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](scn, out)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TCSError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
