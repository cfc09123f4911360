# Module integrators provides the time steppers of the spectral Maxwell flow
# E_dot = i k x B, B_dot = -i k x E: the exact per-mode propagator, the
# implicit midpoint (Cayley) map and classical RK4.

import logging
from collections import namedtuple

import numpy as np
import scipy.linalg

from ..api.api_utils import cross, unit_vectors, longitudinal_transverse

logger = logging.getLogger("nambu_em.integrators")

KINDS = ("exact", "midpoint", "rk4")


class IntegrationError(RuntimeError):
    """Time step could not be completed."""


class IntegratorSpec(namedtuple("IntegratorSpec", ["kind", "dt", "steps", "snapshot_every"])):
    """ Integrator choice and step schedule.

    Args:
        kind (str): "exact", "midpoint" or "rk4".
        dt (float): time step, > 0 (c = 1).
        steps (int): number of steps, >= 1.
        snapshot_every (int): snapshot stride in steps, >= 1.

    Raises:
        ValueError: if any field is out of range.
    """

    __slots__ = ()

    def __new__(cls, kind, dt, steps, snapshot_every=1):
        if kind not in KINDS:
            raise ValueError(f"integrator kind: '{kind}', should be one of {KINDS}.")
        dt = float(dt)
        if not (np.isfinite(dt) and dt > 0):
            raise ValueError(f"dt: {dt}, should be > 0.")
        if int(steps) != steps or steps < 1:
            raise ValueError(f"steps: {steps}, should be a positive integer.")
        if int(snapshot_every) != snapshot_every or snapshot_every < 1:
            raise ValueError(
                f"snapshot_every: {snapshot_every}, should be a positive integer.")
        return super().__new__(cls, kind, dt, int(steps), int(snapshot_every))

    @property
    def duration(self):
        return self.dt * self.steps


def exact_step(state, dt):
    """ Closed-form propagation of every mode over dt.

    Longitudinal parts are frozen; transverse parts rotate at frequency |k|:
        E_perp' = cos(|k| dt) E_perp + i sin(|k| dt) (k_hat x B_perp),
        B_perp' = cos(|k| dt) B_perp - i sin(|k| dt) (k_hat x E_perp).

    Args:
        state (SpectralState): state to advance.
        dt (float): time step (any sign).

    Returns:
        SpectralState: advanced state.
    """
    k_hat, k2 = unit_vectors(state.k)
    theta = np.sqrt(k2) * dt
    cos = np.cos(theta)[:, np.newaxis]
    sin = np.sin(theta)[:, np.newaxis]
    E_par, E_perp = longitudinal_transverse(state.k, state.E)
    B_par, B_perp = longitudinal_transverse(state.k, state.B)
    E = E_par + cos * E_perp + 1j * sin * cross(k_hat, B_perp)
    B = B_par + cos * B_perp - 1j * sin * cross(k_hat, E_perp)
    return state.evolve(E, B)


def cross_matrices(k):
    """Real antisymmetric K per mode with K v = k x v, shape (n, 3, 3)."""
    k = np.asarray(k, dtype=float)
    K = np.zeros((k.shape[0], 3, 3))
    K[:, 0, 1], K[:, 0, 2] = -k[:, 2], k[:, 1]
    K[:, 1, 0], K[:, 1, 2] = k[:, 2], -k[:, 0]
    K[:, 2, 0], K[:, 2, 1] = -k[:, 1], k[:, 0]
    return K


def generator_matrices(k):
    """ Skew-Hermitian per-mode generator M with d/dt [E, B] = M [E, B].

    Returns:
        np.array with shape (n, 6, 6): [[0, iK], [-iK, 0]].
    """
    K = cross_matrices(k)
    M = np.zeros((K.shape[0], 6, 6), dtype=complex)
    M[:, :3, 3:] = 1j * K
    M[:, 3:, :3] = -1j * K
    return M


def exact_propagator_matrix(k, dt):
    """ Matrix exponential expm(dt M) per mode, shape (n, 6, 6).

    Dense reference for exact_step; applied with apply_propagator.
    """
    return scipy.linalg.expm(dt * generator_matrices(k))


def cayley_propagator(k, dt):
    """ Implicit midpoint map (I - dt/2 M)^-1 (I + dt/2 M) per mode.

    Solved by LU with partial pivoting; the map is unitary because M is
    skew-Hermitian.

    Returns:
        np.array with shape (n, 6, 6).

    Raises:
        IntegrationError: if a solve degenerates numerically.
    """
    M = generator_matrices(k)
    eye = np.broadcast_to(np.eye(6, dtype=complex), M.shape)
    try:
        U = np.linalg.solve(eye - 0.5 * dt * M, eye + 0.5 * dt * M)
    except np.linalg.LinAlgError as err:
        raise IntegrationError(f"midpoint solve failed for dt={dt}: {err}") from err
    if not np.all(np.isfinite(U)):
        raise IntegrationError(f"midpoint solve produced non-finite entries for dt={dt}.")
    return U


def apply_propagator(U, state):
    """Applies per-mode 6x6 matrices to the stacked [E, B] amplitudes."""
    amps = np.einsum("nij,nj->ni", U, state.amplitudes())
    return state.evolve(amps[:, :3], amps[:, 3:])


def midpoint_step(state, dt):
    """ One implicit midpoint step; per-mode |E|^2 + |B|^2 is preserved to roundoff. """
    return apply_propagator(cayley_propagator(state.k, dt), state)


def _rhs(k, E, B):
    return 1j * cross(k, B), -1j * cross(k, E)


def rk4_step(state, dt):
    """ One classical Runge-Kutta step of the closed-form Maxwell right-hand side. """
    k, E, B = state.k, state.E, state.B
    k1E, k1B = _rhs(k, E, B)
    k2E, k2B = _rhs(k, E + 0.5 * dt * k1E, B + 0.5 * dt * k1B)
    k3E, k3B = _rhs(k, E + 0.5 * dt * k2E, B + 0.5 * dt * k2B)
    k4E, k4B = _rhs(k, E + dt * k3E, B + dt * k3B)
    E_new = E + dt / 6. * (k1E + 2 * k2E + 2 * k3E + k4E)
    B_new = B + dt / 6. * (k1B + 2 * k2B + 2 * k3B + k4B)
    return state.evolve(E_new, B_new)


def make_stepper(kind, state, dt):
    """ Returns a one-argument step function for the integrator kind.

    The midpoint stepper reuses one Cayley propagator for every step.
    """
    if kind == "exact":
        return lambda s: exact_step(s, dt)
    if kind == "midpoint":
        U = cayley_propagator(state.k, dt)
        return lambda s: apply_propagator(U, s)
    if kind == "rk4":
        k_max = float(np.sqrt(np.max(np.sum(state.k ** 2, axis=1), initial=0.)))
        if dt * k_max >= 2 / np.pi:
            logger.warning("rk4: dt*max|k| = {} exceeds the advisory bound 2/pi".format(
                dt * k_max))
        return lambda s: rk4_step(s, dt)
    raise ValueError(f"integrator kind: '{kind}', should be one of {KINDS}.")
