# We need to test the classification of functionals and the rate cross-check.
import unittest

import numpy as np

from nambu_em.api import Grid, SpectralState
from nambu_em.functionals import G, H_FORMAL, flow_rate
from nambu_em.generator import make_ic
from nambu_em.simulator import IntegrationError, IntegratorSpec
from nambu_em.audit import (
    BRACKET_INVARIANT, SUPERCASIMIR, VARYING, CLAIMS,
    AuditThresholds, run_audit, rate_crosscheck, finite_difference_rate, rate_scale,
    failed_expectations, records_frame, format_table, audit_document,
)


def classes(records):
    return {r.name: r.cls for r in records}


class TestPlaneWaveAudit(unittest.TestCase):

    def setUp(self):
        self.state = make_ic("plane_wave", {"index": [0, 0, 1], "amplitude": 1.,
                                            "polarization": [1, 0, 0]}, grid=Grid(4, 4, 4))
        self.spec = IntegratorSpec("exact", 2 * np.pi / 100, 100, snapshot_every=10)

    def test_classes(self):
        records = run_audit(self.state, self.spec)
        self.assertEqual(classes(records), {
            "I1": BRACKET_INVARIANT,
            "I2": BRACKET_INVARIANT,
            "H": SUPERCASIMIR,
            "S_conj": SUPERCASIMIR,
            "S_formal": BRACKET_INVARIANT,
            "H_formal": VARYING,
            "G": VARYING,
        })
        self.assertEqual(failed_expectations(records), [])
        for record in records:
            self.assertLessEqual(record.rate_residual, 1e-8, record.name)

    def test_notes(self):
        records = {r.name: r for r in run_audit(self.state, self.spec)}
        self.assertIn(CLAIMS["G"], records["G"].notes)
        self.assertIn("measured class: varying", records["G"].notes)
        self.assertIn("max |F(t) - F(0)|", records["H_formal"].notes)
        self.assertIn("conjugate dependence", records["H"].notes)
        self.assertEqual(records["I1"].notes, "")

    def test_requested_order_and_workers(self):
        names = ["G", "I1", "H"]
        serial = run_audit(self.state, self.spec, names, workers=1)
        parallel = run_audit(self.state, self.spec, names, workers=3)
        self.assertEqual([r.name for r in serial], names)
        self.assertEqual(serial, parallel)

    def test_tight_thresholds_flag_expected_invariants(self):
        rng_state = make_ic("random_solenoidal", {}, grid=Grid(8, 8, 8), seed=7)
        spec = IntegratorSpec("exact", 0.05, 20, snapshot_every=5)
        records = run_audit(rng_state, spec, thresholds=AuditThresholds(1e-16, 1e-16))
        self.assertNotEqual(failed_expectations(records), [])


class TestAuditClasses(unittest.TestCase):

    def test_random_field(self):
        state = make_ic("random_solenoidal", {}, grid=Grid(6, 6, 6), seed=11)
        records = run_audit(state, IntegratorSpec("exact", 0.05, 20, snapshot_every=5))
        result = classes(records)
        for name in ("I1", "I2", "S_formal"):
            self.assertEqual(result[name], BRACKET_INVARIANT, name)
        self.assertEqual(result["H"], SUPERCASIMIR)
        self.assertEqual(result["S_conj"], VARYING)
        self.assertEqual(result["G"], VARYING)
        self.assertEqual(result["H_formal"], VARYING)

    def test_static_coulomb_field(self):
        state = make_ic("coulomb_static", {"charges": [
            {"index": [0, 0, 2], "c": 2.}, {"index": [1, 0, 0], "c": [0.5, -0.25]}]},
            grid=Grid(8, 8, 8))
        records = run_audit(state, IntegratorSpec("exact", 0.1, 100, snapshot_every=25))
        result = classes(records)
        self.assertEqual(result["G"], BRACKET_INVARIANT)
        self.assertEqual(result["H_formal"], BRACKET_INVARIANT)
        self.assertEqual(result["H"], SUPERCASIMIR)
        self.assertEqual(result["S_conj"], SUPERCASIMIR)
        self.assertNotIn(VARYING, result.values())

    def test_rescaling_keeps_classes(self):
        state = make_ic("random_solenoidal", {}, grid=Grid(6, 6, 6), seed=5)
        spec = IntegratorSpec("exact", 0.05, 10, snapshot_every=5)
        reference = classes(run_audit(state, spec))
        for factor in (1e-3, 1e3):
            self.assertEqual(classes(run_audit(state.scaled(factor), spec)), reference)

    def test_zero_state(self):
        grid = Grid(4, 4, 4)
        n = grid.n_modes
        state = SpectralState(grid.wave_vectors(), np.zeros((n, 3)), np.zeros((n, 3)), grid=grid)
        records = run_audit(state, IntegratorSpec("exact", 0.1, 5))
        for record in records:
            self.assertEqual(record.max_drift, 0.)
            expected = SUPERCASIMIR if record.name in ("H", "S_conj") else BRACKET_INVARIANT
            self.assertEqual(record.cls, expected, record.name)

    def test_inexact_integrator_is_noted(self):
        state = make_ic("plane_wave", {"k": [0, 0, 1]})
        with self.assertLogs("nambu_em.audit", level="WARNING"):
            records = run_audit(state, IntegratorSpec("midpoint", 0.01, 10), ["I2"])
        self.assertIn("midpoint", records[0].notes)

    def test_abort(self):
        state = make_ic("plane_wave", {"k": [0, 0, 1]})
        with np.errstate(all="ignore"), self.assertRaises(IntegrationError):
            run_audit(state, IntegratorSpec("rk4", 100., 200), ["I1"])

    def test_thresholds(self):
        self.assertEqual(AuditThresholds(), (1e-12, 1e-10, 1e-3))
        with self.assertRaises(ValueError):
            AuditThresholds(rate=0.)
        with self.assertRaises(ValueError):
            AuditThresholds(fd_step=np.nan)


class TestRates(unittest.TestCase):

    def setUp(self):
        self.state = make_ic("random_solenoidal", {"cutoff": 3.}, grid=Grid(8, 8, 8), seed=2)

    def test_crosscheck(self):
        self.assertLessEqual(rate_crosscheck(self.state), 1e-6)
        plane = make_ic("plane_wave", {"k": [0, 0, 1]})
        self.assertLessEqual(rate_crosscheck(plane), 1e-6)

    def test_crosscheck_many_states(self):
        for seed in range(20):
            if seed % 2:
                state = make_ic("random_solenoidal", {"n_modes": 64}, seed=seed)
            else:
                state = make_ic("random_solenoidal", {"cutoff": 3.}, grid=Grid(8, 8, 8), seed=seed)
            self.assertLessEqual(rate_crosscheck(state), 1e-6, seed)

    def test_finite_difference_rate(self):
        h = 1e-3 / 3.
        for f in (G, H_FORMAL):
            fd = finite_difference_rate(f, self.state, h)
            diff = abs(fd - flow_rate(f, self.state))
            self.assertLessEqual(diff, 1e-8 * rate_scale(f, self.state))


class TestReports(unittest.TestCase):

    def setUp(self):
        state = make_ic("plane_wave", {"k": [0, 0, 1]})
        self.spec = IntegratorSpec("exact", 0.1, 10)
        self.thresholds = AuditThresholds()
        self.records = run_audit(state, self.spec, thresholds=self.thresholds)

    def test_frame_and_table(self):
        df = records_frame(self.records)
        self.assertEqual(list(df.columns), ["name", "class", "max_drift", "rate_residual"])
        self.assertEqual(len(df), 7)
        table = format_table(self.records)
        for record in self.records:
            self.assertIn(record.name, table)
            self.assertIn(record.cls, table)

    def test_document(self):
        document = audit_document(self.records, self.thresholds, self.spec, crosscheck=1e-15,
                                  metadata={"artifact": {"name": "nambu_em"}})
        self.assertEqual(document["run"]["integrator"]["kind"], "exact")
        self.assertEqual(document["run"]["artifact"]["name"], "nambu_em")
        self.assertEqual(document["thresholds"]["drift"], 1e-10)
        self.assertEqual(len(document["records"]), 7)
        self.assertEqual(document["failed"], [])
        self.assertEqual(document["crosscheck"], 1e-15)


if __name__ == '__main__':
    unittest.main()
