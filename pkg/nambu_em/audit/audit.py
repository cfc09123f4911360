# Module audit classifies field functionals by how they are conserved along the
# Maxwell flow:
#   bracket_invariant  [F, I1, I2] vanishes and the trajectory drift is below threshold;
#   supercasimir       the bracket path does not apply or does not vanish, yet the
#                      true flow rate vanishes and the drift is below threshold;
#   varying            everything else.
#
# All thresholds are relative to the scale of the functional, so classes do not
# change when the amplitudes are rescaled.

import logging
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from ..bracket import conservation_rate, closed_form_rate, bracket3, triple_scale
from ..functionals import (
    REGISTRY, I1, I2, G, H_FORMAL, get_functional, flow_rate, flow_rate_scale,
)
from ..simulator import IntegrationError, exact_step, simulate

logger = logging.getLogger("nambu_em.audit")

BRACKET_INVARIANT = "bracket_invariant"
SUPERCASIMIR = "supercasimir"
VARYING = "varying"
CLASSES = (BRACKET_INVARIANT, SUPERCASIMIR, VARYING)

# classes a correct implementation must reach on every valid initial state
EXPECTED_CLASSES = {
    "I1": BRACKET_INVARIANT,
    "I2": BRACKET_INVARIANT,
    "S_formal": BRACKET_INVARIANT,
    "H": SUPERCASIMIR,
}

CLAIMS = {
    "G": "a novel non-trivial invariant",
}

AuditRecord = namedtuple("AuditRecord", ["name", "cls", "max_drift", "rate_residual", "notes"])


class AuditThresholds(namedtuple("AuditThresholds", ["rate", "drift", "fd_step"])):
    """ Relative classification thresholds and the finite-difference step.

    Args:
        rate (float): |rate| / rate scale below which a rate counts as zero.
        drift (float): relative drift below which a functional counts as constant.
        fd_step (float): base step of the five-point rate stencil, divided by max(1, max|k|).
    """

    __slots__ = ()

    def __new__(cls, rate=1e-12, drift=1e-10, fd_step=1e-3):
        for name, value in (("rate", rate), ("drift", drift), ("fd_step", fd_step)):
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} threshold: {value}, must be > 0.")
        return super().__new__(cls, float(rate), float(drift), float(fd_step))


def _relative(diff, scale):
    if diff == 0:
        return 0.
    return float(diff / max(scale, np.finfo(float).tiny))


def _k_max(state):
    return float(np.sqrt(np.max(np.sum(state.k ** 2, axis=1), initial=0.)))


def fd_step_for(state, fd_step):
    return fd_step / max(1., _k_max(state))


def rate_scale(f, state):
    """ Scale of dF/dt: the chain-rule modulus, floored by max|k| times the scale of F. """
    f = get_functional(f)
    return max(flow_rate_scale(f, state), _k_max(state) * f.scale(state))


def finite_difference_rate(f, state, h):
    """ Five-point central difference of f along the exact flow at step h. """
    f = get_functional(f)
    values = [f.value(exact_step(state, s * h)) for s in (-2, -1, 1, 2)]
    return (values[0] - 8 * values[1] + 8 * values[2] - values[3]) / (12 * h)


def _audit_functional(name, trajectory, thresholds, kind):
    f = get_functional(name)
    drift = trajectory.drift(name)
    bracket_zero = f.holomorphic
    flow_zero = True
    residual = 0.
    max_rate = 0.
    for _, state in trajectory.snapshots:
        scale = rate_scale(f, state)
        analytic = flow_rate(f, state)
        fd = finite_difference_rate(f, state, fd_step_for(state, thresholds.fd_step))
        residual = max(residual, _relative(abs(fd - analytic), scale))
        max_rate = max(max_rate, _relative(abs(analytic), scale))
        if abs(analytic) > thresholds.rate * scale:
            flow_zero = False
        if bracket_zero:
            rate = conservation_rate(f, state)
            if abs(rate) > thresholds.rate * max(scale, triple_scale(f, I1, I2, state)):
                bracket_zero = False

    if bracket_zero and drift <= thresholds.drift:
        cls = BRACKET_INVARIANT
    elif flow_zero and drift <= thresholds.drift:
        cls = SUPERCASIMIR
    else:
        cls = VARYING

    notes = []
    if not f.holomorphic:
        notes.append("conjugate dependence: bracket path inapplicable, flow rate used")
    if cls == VARYING:
        values = trajectory.values(name)
        amplitude = float(np.abs(values - values[0]).max())
        notes.append(f"max |F(t) - F(0)| = {amplitude!r}, max relative rate = {max_rate!r}")
    if name in CLAIMS:
        notes.append(f'claimed: "{CLAIMS[name]}"; measured class: {cls}')
    if kind != "exact":
        notes.append(f"integrator '{kind}': drift includes discretization error")
    return AuditRecord(name, cls, drift, residual, "; ".join(notes))


def run_audit(state, spec, functionals=None, thresholds=None, workers=None):
    """ Simulates the state and classifies every functional.

    Args:
        state (SpectralState): valid initial state.
        spec (IntegratorSpec): integrator schedule; "exact" is the reference for classification.
        functionals ([str, ]): names to audit, the whole registry if None or empty.
        thresholds (AuditThresholds): classification thresholds.
        workers (int or None): thread count for the per-functional work.

    Returns:
        [AuditRecord, ]: one record per functional in the requested order.

    Raises:
        IntegrationError: if the simulation aborted.
        UnknownFunctional: if a name is not registered.
    """
    thresholds = thresholds or AuditThresholds()
    names = list(functionals) if functionals else list(REGISTRY)
    if spec.kind != "exact":
        logger.warning("audit with '{}' integrator: classification is relative to exact flow".format(
            spec.kind))
    trajectory = simulate(state, spec, names)
    if trajectory.aborted:
        raise IntegrationError(f"audit simulation aborted: {trajectory.error}")

    with ThreadPoolExecutor(max_workers=workers) as executor:
        records = list(executor.map(
            lambda name: _audit_functional(name, trajectory, thresholds, spec.kind), names))
    for record in records:
        logger.info("{}: {} drift {} residual {}".format(
            record.name, record.cls, record.max_drift, record.rate_residual))
    return records


def rate_crosscheck(state, fd_step=1e-4):
    """ Worst relative residual between the derived rate identities and the measured rates.

    Checks d(H_formal)/dt = -4i G and the closed-form rate of G against the chain-rule
    flow rate, the generic bracket and a five-point difference along the exact flow.

    Returns:
        float: worst residual, each measured against rate_scale.
    """
    h = fd_step_for(state, fd_step)
    target_h = -4j * G.value(state)
    target_g = closed_form_rate(G, state).value
    worst = 0.
    for f, target in ((H_FORMAL, target_h), (G, target_g)):
        scale = max(rate_scale(f, state), triple_scale(f, I1, I2, state))
        measured = (
            flow_rate(f, state),
            bracket3(f, I1, I2, state).value,
            finite_difference_rate(f, state, h),
        )
        for value in measured:
            worst = max(worst, _relative(abs(value - target), scale))
    return worst


def failed_expectations(records):
    """Names whose expected conserved class came out varying."""
    return [r.name for r in records if r.name in EXPECTED_CLASSES and r.cls == VARYING]


def records_frame(records):
    return pd.DataFrame(
        [[r.name, r.cls, r.max_drift, r.rate_residual] for r in records],
        columns=["name", "class", "max_drift", "rate_residual"])


def format_table(records):
    """Aligned plain-text table of the records."""
    df = records_frame(records)
    with pd.option_context('display.max_rows', None, 'display.max_columns', None,
                           'display.float_format', '{:.3e}'.format):
        return df.to_string(index=False)


def audit_document(records, thresholds, spec, crosscheck=None, metadata=None):
    """ Report document: run metadata, thresholds and records in a JSON-ready dict. """
    document = {
        "run": dict(metadata or {}, integrator=spec._asdict()),
        "thresholds": thresholds._asdict(),
        "records": [
            {"name": r.name, "class": r.cls, "max_drift": r.max_drift,
             "rate_residual": r.rate_residual, "notes": r.notes}
            for r in records
        ],
        "failed": failed_expectations(records),
    }
    if crosscheck is not None:
        document["crosscheck"] = crosscheck
    return document
