# Command-line entry point: nambu-em run|audit|convergence|ic.
#
# Exit codes: 0 success, 2 config error, 3 numerical abort, 4 audit or
# convergence regression.

import argparse
import logging
import os
import sys

import numpy as np

from ..api import Grid, ConstraintError, validate
from ..audit import (
    AuditThresholds, run_audit, rate_crosscheck, failed_expectations, format_table, audit_document,
)
from ..generator import PolarizationError, make_ic, to_lattice
from ..simulator import IntegrationError, Simulator, DiagnosticsPlotter, convergence_orders
from ..utils import (
    ConfigError, read_config, preset_path, artifact_header, threads_from_env, write_json,
    write_snapshot, read_snapshot, write_lattice, write_diagnostics,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_REGRESSION = 4

COMMANDS = ("run", "audit", "convergence", "ic")
PROGRESS_COMMANDS = ("run", "convergence")
ORDERS = {"rk4": 4, "midpoint": 2}
ORDER_TOLERANCE = 0.1
HALVINGS = 5

logger = logging.getLogger("nambu_em.cli")


def build_state(config):
    """ Initial state of a run: read from a snapshot or generated by make_ic.

    Raises:
        ConfigError: if the initial condition cannot be built.
    """
    source = config.source
    if "modes" in source:
        _, state = read_snapshot(source["modes"])
        return state
    grid = Grid(**source["grid"]) if "grid" in source else None
    ic = config.ic
    try:
        return make_ic(ic["kind"], ic["params"], grid=grid, seed=ic["seed"])
    except (PolarizationError, ConstraintError, ValueError, TypeError) as err:
        raise ConfigError("ic.params", str(err)) from None


def check_state(state, config):
    report = validate(state, tol=config.tolerances["constraint"])
    if not report.is_empty():
        logger.warning("initial state violates constraints: {}".format(report.max_by_constraint))
    return report


def cmd_run(config, progress=False):
    """ Simulates and writes diagnostics.csv, snapshots and summary.json. """
    out = config.outputs["dir"]
    artifact = artifact_header(config)
    state = build_state(config)

    simulator = Simulator(state, config.integrator, config.functionals,
                          constraint_tol=config.tolerances["constraint"])
    trajectory = simulator.run(log=True, show_progress=progress)
    write_diagnostics(os.path.join(out, "diagnostics.csv"), trajectory.to_frame(), artifact)
    if config.outputs["snapshots"]:
        snapshots_dir = os.path.join(out, "snapshots")
        os.makedirs(snapshots_dir, exist_ok=True)
        for i, (t, snapshot) in enumerate(trajectory.snapshots):
            write_snapshot(os.path.join(snapshots_dir, f"snapshot_{i:05d}.json"),
                           snapshot, t, artifact)
    if config.outputs["plot"]:
        DiagnosticsPlotter(trajectory).plot_drift(os.path.join(out, "diagnostics.png"))

    last = trajectory.diagnostics[-1]
    summary = {
        "artifact": artifact,
        "aborted": trajectory.aborted,
        "error": trajectory.error,
        "steps_completed": len(trajectory.diagnostics) - 1,
        "t_final": last["t"],
        "gauss_max": last["gauss_max"],
        "herm_max": last["herm_max"],
        "drift": {name: trajectory.drift(name) for name in trajectory.functionals},
    }
    write_json(os.path.join(out, "summary.json"), summary)
    if trajectory.aborted:
        logger.error("run aborted: {}".format(trajectory.error))
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_audit(config):
    """ Classifies the functionals, cross-checks the rate identities and writes audit.json/audit.txt. """
    out = config.outputs["dir"]
    artifact = artifact_header(config)
    tolerances = config.tolerances
    state = build_state(config)
    check_state(state, config)

    thresholds = AuditThresholds(tolerances["rate"], tolerances["drift"], tolerances["fd_step"])
    try:
        records = run_audit(state, config.integrator, config.functionals, thresholds,
                            workers=threads_from_env())
    except IntegrationError as err:
        logger.error("audit aborted: {}".format(err))
        write_json(os.path.join(out, "audit.json"), {"artifact": artifact, "aborted": True,
                                                     "error": str(err)})
        return EXIT_NUMERICAL
    crosscheck = rate_crosscheck(state)

    document = audit_document(records, thresholds, config.integrator, crosscheck,
                              metadata={"artifact": artifact})
    write_json(os.path.join(out, "audit.json"), document)
    with open(os.path.join(out, "audit.txt"), 'w') as f:
        f.write(f"# {artifact['name']} {artifact['version']} config_sha256={artifact['config_hash']}\n")
        f.write(format_table(records) + "\n")
        f.write(f"rate crosscheck residual: {crosscheck:.3e}\n")

    failed = failed_expectations(records)
    if failed:
        logger.error("expected conserved quantities classified varying: {}".format(failed))
        return EXIT_REGRESSION
    if crosscheck > tolerances["crosscheck"]:
        logger.error("rate crosscheck residual {} above {}".format(crosscheck, tolerances["crosscheck"]))
        return EXIT_REGRESSION
    return EXIT_OK


def cmd_convergence(config, progress=False):
    """ Observed order of rk4 or midpoint against the exact propagator; writes convergence.csv. """
    spec = config.integrator
    if spec.kind not in ORDERS:
        raise ConfigError("integrator.kind",
                          f"'{spec.kind}' has nothing to converge, use one of {tuple(ORDERS)}.")
    out = config.outputs["dir"]
    artifact = artifact_header(config)
    state = build_state(config)
    check_state(state, config)

    df = convergence_orders(state, spec.kind, spec.dt, spec.steps, halvings=HALVINGS,
                            show_progress=progress)
    write_diagnostics(os.path.join(out, "convergence.csv"), df, artifact)
    orders = df["order"].dropna().to_numpy()
    expected = ORDERS[spec.kind]
    if not np.all(np.abs(orders - expected) <= ORDER_TOLERANCE):
        logger.error("{} orders {} outside {} +- {}".format(spec.kind, orders, expected, ORDER_TOLERANCE))
        return EXIT_REGRESSION
    return EXIT_OK


def cmd_ic(config):
    """ Writes the initial state as ic.json and, on a grid, its lattice samples as lattice.json. """
    out = config.outputs["dir"]
    artifact = artifact_header(config)
    state = build_state(config)
    check_state(state, config)
    write_snapshot(os.path.join(out, "ic.json"), state, 0., artifact)
    if state.grid is not None:
        field = to_lattice(state, workers=threads_from_env())
        write_lattice(os.path.join(out, "lattice.json"), field, artifact)
    return EXIT_OK


COMMAND_FUNCTIONS = dict(run=cmd_run, audit=cmd_audit, convergence=cmd_convergence, ic=cmd_ic)


def setup_logging(out):
    logging.basicConfig(filename=os.path.join(out, "nambu_em.log"), level=logging.DEBUG,
                        filemode='w', format='%(name)s:%(levelname)s\n%(message)s\n', force=True)


def main(args):
    parser = argparse.ArgumentParser(prog="nambu-em")

    parser.add_argument("command", type=str, choices=COMMANDS)
    parser.add_argument("-c", "--config", type=str,
                        default=None, required=False)
    parser.add_argument("-o", "--out", type=str,
                        default=None, required=False)
    parser.add_argument("-s", "--seed", type=int,
                        default=None, required=False)
    parser.add_argument("-p", "--preset", type=str,
                        default=None, required=False)
    parser.add_argument("-i", "--integrator", type=str,
                        default=None, required=False)
    parser.add_argument("--progress", action="store_true")

    try:
        args = parser.parse_args(args)
    except SystemExit as err:
        return EXIT_OK if err.code == 0 else EXIT_CONFIG

    try:
        if (args.config is None) == (args.preset is None):
            raise ConfigError("config", "give exactly one of --config or --preset.")
        path = args.config if args.config is not None else preset_path(args.preset)
        config = read_config(path, out=args.out, seed=args.seed, integrator=args.integrator)
        out = config.outputs["dir"]
        os.makedirs(out, exist_ok=True)
        setup_logging(out)
        logger.info("{} with config {}".format(args.command, path))
        if args.command in PROGRESS_COMMANDS:
            return COMMAND_FUNCTIONS[args.command](config, progress=args.progress)
        return COMMAND_FUNCTIONS[args.command](config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        logger.error("config error: {}".format(err))
        return EXIT_CONFIG


def cli():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    cli()
