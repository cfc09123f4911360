# Module simulator advances a SpectralState in time and records the
# diagnostics of the run: every requested functional, the worst Gauss
# violation and the worst Hermitian violation at every step.

import logging
import time

import numpy as np
import pandas as pd

from tqdm import trange

from ..api import TOL_CONSTRAINT, validate, max_gauss_violation, max_hermitian_violation
from ..functionals import REGISTRY, get_functional
from .integrators import IntegrationError, exact_step, make_stepper


class Trajectory:
    """ Time-ordered snapshots plus per-step diagnostic records. """

    def __init__(self, functionals):
        """
        Args:
            functionals ([str, ]): names of the recorded functionals.
        """
        self.functionals = list(functionals)
        self.snapshots = []  # (t, SpectralState)
        self.diagnostics = []  # dict(t, values, scales, gauss_max, herm_max)
        self.aborted = False
        self.error = ""

    def record(self, t, state):
        values = {}
        scales = {}
        for name in self.functionals:
            f = get_functional(name)
            values[name] = f.value(state)
            scales[name] = f.scale(state)
        self.diagnostics.append(dict(
            t=t, values=values, scales=scales,
            gauss_max=max_gauss_violation(state),
            herm_max=max_hermitian_violation(state),
        ))

    def add_snapshot(self, t, state):
        self.snapshots.append((t, state))

    @property
    def times(self):
        return np.array([d["t"] for d in self.diagnostics])

    def values(self, name):
        return np.array([d["values"][name] for d in self.diagnostics])

    def scales(self, name):
        return np.array([d["scales"][name] for d in self.diagnostics])

    def drift(self, name):
        """ max_t |F(t) - F(0)| relative to the largest scale of F over the run. """
        values = self.values(name)
        diff = np.abs(values - values[0]).max()
        scale = self.scales(name).max()
        if scale == 0:
            return 0. if diff == 0 else float("inf")
        return float(diff / scale)

    @property
    def final_state(self):
        return self.snapshots[-1][1] if self.snapshots else None

    def to_frame(self):
        """ Diagnostics as a DataFrame: t, <name>_re, <name>_im per functional, gauss_max, herm_max. """
        columns = ["t"]
        for name in self.functionals:
            columns += [f"{name}_re", f"{name}_im"]
        columns += ["gauss_max", "herm_max"]
        rows = []
        for d in self.diagnostics:
            row = [d["t"]]
            for name in self.functionals:
                row += [d["values"][name].real, d["values"][name].imag]
            row += [d["gauss_max"], d["herm_max"]]
            rows.append(row)
        return pd.DataFrame(rows, columns=columns)


class Simulator:
    """ Simulator advances a spectral state with the chosen integrator
        and records a Trajectory.
    """

    def __init__(self, state, spec, functionals=None, constraint_tol=TOL_CONSTRAINT):
        """
        Args:
            state (SpectralState): initial state (validated or waived).
            spec (IntegratorSpec): integrator kind and step schedule.
            functionals ([str, ]): names of the recorded functionals,
                the whole registry if None or empty.
            constraint_tol (float): tolerance of the initial validation.

        Raises:
            UnknownFunctional: if a name is not registered.
        """
        self.state = state
        self.spec = spec
        self.functionals = list(functionals) if functionals else list(REGISTRY)
        self.constraint_tol = constraint_tol
        for name in self.functionals:
            get_functional(name)
        self.logger = None

    def run(self, log=True, print_out=False, show_progress=False):
        """
        Args:
            log (bool): whether log the simulation or not.
            print_out (bool): whether show the print out or not.
            show_progress (bool): whether show a progress bar or not.

        Returns:
            Trajectory: diagnostics for every step and snapshots at multiples of
                spec.snapshot_every; aborted is set if a step failed.
        """
        if log:
            self.logger = logging.getLogger("nambu_em.simulator.Simulator")
            report = validate(self.state, tol=self.constraint_tol)
            if not report.is_empty():
                self.log_violation(report)

        if print_out:
            self.print_start()
            simulation_start_time = time.time()

        spec = self.spec
        trajectory = Trajectory(self.functionals)
        state = self.state
        trajectory.record(0., state)
        trajectory.add_snapshot(0., state)

        steps = trange(1, spec.steps + 1) if show_progress else range(1, spec.steps + 1)
        try:
            stepper = make_stepper(spec.kind, state, spec.dt)
            for step in steps:
                state = stepper(state)
                if not state.is_finite():
                    raise IntegrationError(f"non-finite amplitudes at step {step}.")
                t = step * spec.dt
                trajectory.record(t, state)
                if step % spec.snapshot_every == 0:
                    trajectory.add_snapshot(t, state)
                if log:
                    self.log_iteration(step, trajectory.diagnostics[-1])
        except IntegrationError as err:
            trajectory.aborted = True
            trajectory.error = str(err)
            if log:
                self.log_abort(err)

        if print_out:
            simulation_time = time.time() - simulation_start_time
            self.print_end(trajectory, simulation_time)

        return trajectory

    def log_iteration(self, iteration, record):
        self.logger.debug("Iter #{} \tt: {} \tgauss: {} \therm: {}".format(
            iteration, record["t"], record["gauss_max"], record["herm_max"]))

    def log_violation(self, report):
        self.logger.warning(
            "Initial state violates constraints: {}".format(report.max_by_constraint))

    def log_abort(self, err):
        self.logger.error("Simulation aborted: {}".format(err))

    def print_start(self):
        print("Simulation started.\n\nIntegrator: {} \t dt: {} \t steps: {}\n".format(
            self.spec.kind, self.spec.dt, self.spec.steps))
        print(f"Modes: {self.state.n_modes} \t Grid: {self.state.metadata}")

    def print_end(self, trajectory, simulation_time):
        print(f"Simulation ended in {simulation_time:.5} sec.")
        if trajectory.aborted:
            print(f"Aborted: {trajectory.error}")
        df = pd.DataFrame(index=trajectory.functionals, columns=["initial", "final", "drift"])
        for name in trajectory.functionals:
            values = trajectory.values(name)
            df.loc[name] = [values[0], values[-1], trajectory.drift(name)]
        with pd.option_context('display.max_rows', None, 'display.max_columns', None):
            print(df)


def simulate(state, spec, functionals=None):
    """ Advances state spec.steps times and returns the Trajectory. c(k) is never mutated. """
    return Simulator(state, spec, functionals).run(log=False)


def convergence_orders(state, kind, dt, steps, halvings=5, show_progress=False):
    """ Observed order of an integrator against the exact propagator.

    The run length T = dt * steps is kept fixed while dt is halved.

    Args:
        state (SpectralState): initial state.
        kind (str): "rk4" or "midpoint".
        dt (float): coarsest step.
        steps (int): number of steps at the coarsest dt.
        halvings (int): number of dt halvings (>= 1).

    Returns:
        pd.DataFrame: columns dt, steps, error, order (NaN in the first row), where
            error is the max componentwise difference relative to the largest
            reference amplitude and order = log2(err(dt) / err(dt/2)).
    """
    if halvings < 1:
        raise ValueError(f"halvings: {halvings}, should be >= 1.")
    reference = exact_step(state, dt * steps).amplitudes()
    scale = max(np.abs(reference).max(initial=0.), np.finfo(float).tiny)
    rows = []
    levels = trange(halvings + 1) if show_progress else range(halvings + 1)
    for level in levels:
        h = dt / 2 ** level
        n = steps * 2 ** level
        stepper = make_stepper(kind, state, h)
        current = state
        for _ in range(n):
            current = stepper(current)
        error = float(np.abs(current.amplitudes() - reference).max() / scale)
        rows.append([h, n, error])
    df = pd.DataFrame(rows, columns=["dt", "steps", "error"])
    df["order"] = np.log2(df["error"].shift(1) / df["error"])
    return df


class DiagnosticsPlotter:
    """ Save diagnostics drift plots into images. """

    def __init__(self, trajectory):
        self.trajectory = trajectory

    def plot_drift(self, path):
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        trajectory = self.trajectory
        fig = plt.figure(figsize=[14, 10])
        ax = fig.add_subplot(111)
        plt.title("Relative drift of functionals")
        plt.xlabel("t")
        plt.ylabel("|F(t) - F(0)| / scale")
        ax.grid()
        times = trajectory.times
        tiny = np.finfo(float).tiny
        for name in trajectory.functionals:
            values = trajectory.values(name)
            scale = max(trajectory.scales(name).max(), tiny)
            ax.semilogy(times, np.abs(values - values[0]) / scale + tiny, label=name)
        ax.legend(loc=4, prop={'size': 10})
        fig.savefig(path, dpi=fig.dpi)
        plt.close(fig)
