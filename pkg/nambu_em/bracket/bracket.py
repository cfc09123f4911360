# Module bracket provides the trilinear Nambu brackets of the spectral Maxwell
# system and the evolution law dF/dt = [F, I1, I2]_EEE + [F, I1, I2]_BBB.
#
# Only formal (unconjugated) gradients enter a bracket. Rates of non-holomorphic
# functionals are routed to functionals.flow_rate.

import itertools
import logging
from collections import namedtuple

import numpy as np

from ..api.api_utils import dot, cross, norm3, pairwise_sum
from ..functionals import (
    CoordE, CoordB, I1, I2, G, get_functional, maxwell_flow,
)

logger = logging.getLogger("nambu_em.bracket")

PATH_GENERIC = "generic"
PATH_CLOSED_FORM = "closed_form"


class NonHolomorphicError(ValueError):
    """Bracket rate requested for a functional with conjugate dependence."""


BracketResult = namedtuple("BracketResult", ["value", "path"])


class BracketEngine:
    """ BracketEngine evaluates [f, a, b] for many f with the slot pair (a, b) fixed.

        The cross products grad a x grad b of both triplets are computed once per
        state; each bracket then touches only the modes in the support of f.
    """

    def __init__(self, a, b, state):
        """
        Args:
            a, b (Functional or str): second and third bracket slots.
            state (SpectralState): state the brackets are evaluated at.
        """
        self.a = get_functional(a)
        self.b = get_functional(b)
        self.state = state
        self.cross_E = cross(self.a.grad_E(state), self.b.grad_E(state))
        self.cross_B = cross(self.a.grad_B(state), self.b.grad_B(state))

    def bracket(self, f):
        """ i sum_k w_k [gE f·(gE a x gE b) + gB f·(gB a x gB b)].

        Returns:
            BracketResult: value with path "generic".
        """
        f = get_functional(f)
        state = self.state
        support = f.support(state)
        if support is None:
            w, cross_E, cross_B = state.w, self.cross_E, self.cross_B
        else:
            w, cross_E, cross_B = state.w[support], self.cross_E[support], self.cross_B[support]
        terms = (dot(f.grad_E(state, support), cross_E)
                 + dot(f.grad_B(state, support), cross_B))
        return BracketResult(complex(1j * pairwise_sum(w * terms)), PATH_GENERIC)


def bracket3(f, a, b, state):
    """ Trilinear Nambu bracket [f, a, b] summed over the E and B triplets.

    Args:
        f, a, b (Functional or str): functionals or registry names.
        state (SpectralState): state to evaluate at.

    Returns:
        BracketResult: complex value with provenance "generic".
    """
    return BracketEngine(a, b, state).bracket(f)


def maxwell_rhs(state, path=PATH_GENERIC):
    """ Per-mode time derivatives of the fields.

    Args:
        state (SpectralState): state to evaluate at.
        path (str): "generic" brackets every coordinate functional with (I1, I2);
            "closed_form" evaluates i k x B and -i k x E directly.

    Returns:
        E_dot, B_dot (np.array with shape (n, 3)).

    Raises:
        ValueError: on an unknown path.
    """
    if path == PATH_CLOSED_FORM:
        return maxwell_flow(state)
    if path != PATH_GENERIC:
        raise ValueError(f"unknown bracket path '{path}'.")
    engine = BracketEngine(I1, I2, state)
    E_dot = np.zeros((state.n_modes, 3), dtype=complex)
    B_dot = np.zeros((state.n_modes, 3), dtype=complex)
    for j in range(state.n_modes):
        for alpha in range(3):
            E_dot[j, alpha] = engine.bracket(CoordE(j, alpha)).value
            B_dot[j, alpha] = engine.bracket(CoordB(j, alpha)).value
    return E_dot, B_dot


def _parity(perm):
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def triple_scale(f, a, b, state):
    """ sum_k w_k (|gE f||gE a||gE b| + |gB f||gB a||gB b|), the modulus scale of [f, a, b]. """
    f, a, b = get_functional(f), get_functional(a), get_functional(b)
    terms = (norm3(f.grad_E(state)) * norm3(a.grad_E(state)) * norm3(b.grad_E(state))
             + norm3(f.grad_B(state)) * norm3(a.grad_B(state)) * norm3(b.grad_B(state)))
    return float(pairwise_sum(state.w * terms))


def antisymmetry_check(f, a, b, state):
    """ Max residual of total antisymmetry over the 6 argument orderings.

    Brackets that vanish identically (e.g. [S_formal, I1, I2]) leave only
    roundoff, so residuals are measured against the larger of the biggest
    bracket modulus and the triple-product scale.

    Returns:
        float: max |[perm] - sign(perm) [f, a, b]| / scale (0/0 is 0).
    """
    args = (get_functional(f), get_functional(a), get_functional(b))
    identity = bracket3(*args, state).value
    values = {}
    for perm in itertools.permutations(range(3)):
        values[perm] = bracket3(*(args[i] for i in perm), state).value
    scale = max(max(abs(v) for v in values.values()), triple_scale(*args, state))
    if scale == 0:
        return 0.
    return max(abs(v - _parity(perm) * identity) for perm, v in values.items()) / scale


def closed_form_rate(f, state):
    """ Analytic value of [f, I1, I2] for functionals with a known closed form.

    Returns:
        BracketResult: value with path "closed_form".

    Raises:
        NonHolomorphicError: for functionals with conjugate dependence.
        ValueError: if no closed form is known for f.
    """
    f = get_functional(f)
    if not f.holomorphic:
        raise NonHolomorphicError("non-holomorphic functional: use flow_rate")
    if f.name in ("I1", "I2", "S_formal"):
        value = 0j
    elif f.name == "H_formal":
        value = -4j * G.value(state)
    elif f.name == "G":
        k, E, B = state.k, state.E, state.B
        terms = (dot(k, E) ** 2 + dot(k, B) ** 2
                 - dot(k, k) * (dot(E, E) + dot(B, B)))
        value = complex(1j * pairwise_sum(state.w * terms))
    elif isinstance(f, (CoordE, CoordB)):
        E_dot, B_dot = maxwell_flow(state)
        rates = E_dot if isinstance(f, CoordE) else B_dot
        value = complex(rates[f.mode_index, f.component])
    else:
        raise ValueError(f"no closed-form rate for functional '{f.name}'.")
    return BracketResult(value, PATH_CLOSED_FORM)


def conservation_rate(f, state, path=PATH_GENERIC):
    """ dF/dt as the bracket [f, I1, I2].

    Args:
        f (Functional or str): holomorphic functional.
        state (SpectralState): state to evaluate at.
        path (str): "generic" or "closed_form".

    Returns:
        complex: the rate.

    Raises:
        NonHolomorphicError: for H and S_conj.
    """
    f = get_functional(f)
    if not f.holomorphic:
        raise NonHolomorphicError("non-holomorphic functional: use flow_rate")
    if path == PATH_CLOSED_FORM:
        return closed_form_rate(f, state).value
    return bracket3(f, I1, I2, state).value
