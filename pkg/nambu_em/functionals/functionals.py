# Module functionals provides the field functionals audited by the bracket
# engine: value plus Wirtinger pair of variational derivatives per mode.
#
# All sums run over modes with the quadrature weights w_k. Gradients are
# densities: F(s + eps d) - F(s) = eps sum_k w_k [gE·dE + gB·dB
# + cgE·conj(dE) + cgB·conj(dB)] + O(eps^2).

import logging

import numpy as np

from ..api import SpectralState
from ..api.api_utils import dot, cdot, cross, norm3, pairwise_sum

logger = logging.getLogger("nambu_em.functionals")

COMPONENTS = "xyz"


class UnknownFunctional(ValueError):
    """Functional name is not in the registry."""


class NonFiniteValue(ValueError):
    """Functional evaluated to a non-finite number."""


def maxwell_flow(state):
    """ Closed-form Maxwell time derivatives per mode (J = 0, static charge).

    Returns:
        E_dot, B_dot (np.array with shape (n, 3)): i k x B and -i k x E.
    """
    return 1j * cross(state.k, state.B), -1j * cross(state.k, state.E)


class Functional:
    """ Functional is a named quantity over a SpectralState exposing its value and
        its formal and conjugate derivatives with respect to each mode's amplitudes.
    """

    name = None
    holomorphic = True

    def density(self, state):
        """Per-mode integrand, shape (n,)."""
        raise NotImplementedError

    def value(self, state):
        return complex(pairwise_sum(state.w * self.density(state)))

    def support(self, state):
        """Mode indices where gradients may be nonzero, None for all modes."""
        return None

    def _grad_E(self, state):
        raise NotImplementedError

    def _grad_B(self, state):
        raise NotImplementedError

    def _congrad_E(self, state):
        return np.zeros((state.n_modes, 3), dtype=complex)

    def _congrad_B(self, state):
        return np.zeros((state.n_modes, 3), dtype=complex)

    @staticmethod
    def _select(grad, index):
        return grad if index is None else grad[index]

    def grad_E(self, state, index=None):
        """Formal derivative dF/dE(k) (components treated as independent variables).

        Args:
            state (SpectralState): state to differentiate at.
            index (int, np.array or None): mode index or indices; None for all modes.

        Returns:
            np.array with shape (3,) for an int index, (len(index), 3) otherwise.
        """
        return self._select(self._grad_E(state), index)

    def grad_B(self, state, index=None):
        return self._select(self._grad_B(state), index)

    def congrad_E(self, state, index=None):
        """Derivative with respect to conj(E(k)); exact zeros for holomorphic functionals."""
        return self._select(self._congrad_E(state), index)

    def congrad_B(self, state, index=None):
        return self._select(self._congrad_B(state), index)

    def scale(self, state):
        """Non-negative magnitude bounding |value|, the scale of relative tolerances."""
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class ChargeInvariant(Functional):
    """I1 = sum (k·E - k·B)."""

    name = "I1"

    def density(self, state):
        return dot(state.k, state.E) - dot(state.k, state.B)

    def _grad_E(self, state):
        return state.k.astype(complex)

    def _grad_B(self, state):
        return -state.k.astype(complex)

    def scale(self, state):
        return float(pairwise_sum(
            state.w * norm3(state.k) * (norm3(state.E) + norm3(state.B))))


class FieldInvariant(Functional):
    """I2 = sum E·B."""

    name = "I2"

    def density(self, state):
        return dot(state.E, state.B)

    def _grad_E(self, state):
        return np.array(state.B)

    def _grad_B(self, state):
        return np.array(state.E)

    def scale(self, state):
        # |E·B| <= (|E|^2 + |B|^2) / 2
        return float(pairwise_sum(
            0.5 * state.w * (norm3(state.E) ** 2 + norm3(state.B) ** 2)))


class _ConjugatedQuadratic(Functional):
    """ (1/2) sum (|E|^2 + sign |B|^2) with the Wirtinger pair of derivatives. """

    holomorphic = False
    sign_B = 1.

    def density(self, state):
        return 0.5 * (cdot(state.E, state.E) + self.sign_B * cdot(state.B, state.B))

    def _grad_E(self, state):
        return 0.5 * np.conj(state.E)

    def _grad_B(self, state):
        return 0.5 * self.sign_B * np.conj(state.B)

    def _congrad_E(self, state):
        return 0.5 * np.array(state.E)

    def _congrad_B(self, state):
        return 0.5 * self.sign_B * np.array(state.B)

    def scale(self, state):
        return float(pairwise_sum(
            0.5 * state.w * (norm3(state.E) ** 2 + norm3(state.B) ** 2)))


class Energy(_ConjugatedQuadratic):
    """H = 1/2 sum (E·E* + B·B*)."""

    name = "H"


class ConjugatedInvariant(_ConjugatedQuadratic):
    """S_conj = 1/2 sum (E·E* - B·B*)."""

    name = "S_conj"
    sign_B = -1.


class _FormalQuadratic(Functional):
    """ sum (E·E + sign B·B), no conjugation. """

    sign_B = 1.

    def density(self, state):
        return dot(state.E, state.E) + self.sign_B * dot(state.B, state.B)

    def _grad_E(self, state):
        return 2. * state.E

    def _grad_B(self, state):
        return 2. * self.sign_B * state.B

    def scale(self, state):
        return float(pairwise_sum(
            state.w * (norm3(state.E) ** 2 + norm3(state.B) ** 2)))


class FormalInvariant(_FormalQuadratic):
    """S_formal = sum (E·E - B·B)."""

    name = "S_formal"
    sign_B = -1.


class FormalEnergy(_FormalQuadratic):
    """H_formal = sum (E·E + B·B)."""

    name = "H_formal"


class HelicityFlux(Functional):
    """G = sum k·(E x B)."""

    name = "G"

    def density(self, state):
        return dot(state.k, cross(state.E, state.B))

    def _grad_E(self, state):
        return cross(state.B, state.k)

    def _grad_B(self, state):
        return cross(state.k, state.E)

    def scale(self, state):
        return float(pairwise_sum(
            0.5 * state.w * norm3(state.k) * (norm3(state.E) ** 2 + norm3(state.B) ** 2)))


class _Coordinate(Functional):
    """ Evaluation functional returning one field component of one mode.

    Its gradient is the unit basis vector scaled by 1/w_j at mode j, so a
    bracket with the coordinate functional yields the per-mode equation of
    motion whatever the weights.
    """

    field = None

    def __init__(self, mode_index, component):
        if component not in (0, 1, 2):
            raise ValueError(f"component: {component}, must be 0, 1 or 2.")
        self.mode_index = int(mode_index)
        self.component = int(component)
        self.name = f"{self.field}[{self.mode_index}].{COMPONENTS[self.component]}"

    def _amplitudes(self, state):
        return state.E if self.field == "E" else state.B

    def value(self, state):
        return complex(self._amplitudes(state)[self.mode_index, self.component])

    def density(self, state):
        dens = np.zeros(state.n_modes, dtype=complex)
        j = self.mode_index
        dens[j] = self._amplitudes(state)[j, self.component] / state.w[j]
        return dens

    def support(self, state):
        return np.array([self.mode_index])

    def _basis(self, state, index, active):
        j = self.mode_index
        if index is None:
            index = np.arange(state.n_modes)
        rows = np.atleast_1d(index)
        grad = np.zeros((rows.shape[0], 3), dtype=complex)
        if active:
            grad[rows == j, self.component] = 1. / state.w[j]
        return grad[0] if np.ndim(index) == 0 else grad

    def grad_E(self, state, index=None):
        return self._basis(state, index, self.field == "E")

    def grad_B(self, state, index=None):
        return self._basis(state, index, self.field == "B")

    def congrad_E(self, state, index=None):
        return self._basis(state, index, False)

    def congrad_B(self, state, index=None):
        return self._basis(state, index, False)

    def scale(self, state):
        return float(norm3(self._amplitudes(state)[self.mode_index]))


class CoordE(_Coordinate):
    """E_j^alpha as a functional."""

    field = "E"


class CoordB(_Coordinate):
    """B_j^alpha as a functional."""

    field = "B"


I1 = ChargeInvariant()
I2 = FieldInvariant()
H = Energy()
S_CONJ = ConjugatedInvariant()
S_FORMAL = FormalInvariant()
H_FORMAL = FormalEnergy()
G = HelicityFlux()

REGISTRY = {f.name: f for f in (I1, I2, H, S_CONJ, S_FORMAL, H_FORMAL, G)}


def get_functional(f):
    """ Resolves a registry name (or passes a Functional through).

    Raises:
        UnknownFunctional: if the name is not registered.
    """
    if isinstance(f, Functional):
        return f
    try:
        return REGISTRY[f]
    except (KeyError, TypeError):
        raise UnknownFunctional(
            f"unknown functional '{f}', registered: {', '.join(REGISTRY)}.") from None


def evaluate(f, state):
    """ Value of the functional with deterministic summation order.

    Args:
        f (Functional or str): functional or registry name.
        state (SpectralState): state to evaluate at.

    Returns:
        complex: the weighted sum over modes.
    """
    return get_functional(f).value(state)


def flow_rate(f, state):
    """ dF/dt along the Maxwell flow by the full Wirtinger chain rule.

    Args:
        f (Functional or str): functional or registry name.
        state (SpectralState): state to evaluate at.

    Returns:
        complex: sum_k w [gE·E_dot + gB·B_dot + cgE·conj(E_dot) + cgB·conj(B_dot)].
    """
    f = get_functional(f)
    E_dot, B_dot = maxwell_flow(state)
    terms = (dot(f.grad_E(state), E_dot) + dot(f.grad_B(state), B_dot)
             + dot(f.congrad_E(state), np.conj(E_dot))
             + dot(f.congrad_B(state), np.conj(B_dot)))
    return complex(pairwise_sum(state.w * terms))


def flow_rate_scale(f, state):
    """Sum of the moduli of the chain-rule terms of flow_rate, the roundoff scale of the rate."""
    f = get_functional(f)
    E_dot, B_dot = maxwell_flow(state)
    nE, nB = norm3(E_dot), norm3(B_dot)
    terms = ((norm3(f.grad_E(state)) + norm3(f.congrad_E(state))) * nE
             + (norm3(f.grad_B(state)) + norm3(f.congrad_B(state))) * nB)
    return float(pairwise_sum(state.w * terms))


def _perturbed(state, field, j, alpha, delta):
    E = np.array(state.E)
    B = np.array(state.B)
    target = E if field == "E" else B
    target[j, alpha] += delta
    return SpectralState(state.k, E, B, state.w, state.c)


def gradient_check(f, state, eps=1e-6):
    """ Compares central finite differences of value() with the Wirtinger expansion.

    Every component of every mode is perturbed along the real and the imaginary
    direction.

    Args:
        f (Functional or str): functional to check.
        state (SpectralState): state with finite amplitudes.
        eps (float): perturbation size in [1e-8, 1e-4].

    Returns:
        float: worst error, relative to the largest weighted gradient component.

    Raises:
        ValueError: if eps is out of range.
        NonFiniteValue: if value() returns a non-finite number.
    """
    if not 1e-8 <= eps <= 1e-4:
        raise ValueError(f"eps: {eps}, should be in [1e-8, 1e-4].")
    f = get_functional(f)
    w = state.w[:, np.newaxis]
    grads = {
        "E": (w * f.grad_E(state), w * f.congrad_E(state)),
        "B": (w * f.grad_B(state), w * f.congrad_B(state)),
    }
    scale = max([np.abs(g).max(initial=0.) for pair in grads.values() for g in pair]
                + [np.finfo(float).tiny])

    worst = 0.
    for field, (grad, congrad) in grads.items():
        for j in range(state.n_modes):
            for alpha in range(3):
                for direction in (1., 1j):
                    plus = f.value(_perturbed(state, field, j, alpha, eps * direction))
                    minus = f.value(_perturbed(state, field, j, alpha, -eps * direction))
                    if not (np.isfinite(plus) and np.isfinite(minus)):
                        raise NonFiniteValue(f"{f.name}: non-finite value near mode {j}.")
                    fd = (plus - minus) / (2 * eps)
                    analytic = (grad[j, alpha] * direction
                                + congrad[j, alpha] * np.conj(direction))
                    worst = max(worst, abs(fd - analytic) / scale)
    return worst
