# We need to test the command line: artifacts, exit codes and determinism.
import contextlib
import io
import json
import logging
import os
import tempfile
import unittest
from unittest import mock

import numpy as np
import pandas as pd

from nambu_em.cli import main
from nambu_em.generator import make_ic, to_lattice
from nambu_em.api import Grid, SpectralState
from nambu_em.utils import read_snapshot, read_lattice, read_json, write_json, write_snapshot

PLANE_WAVE = {
    "source": {"explicit": True},
    "ic": {"kind": "plane_wave", "params": {"k": [0, 0, 1]}, "seed": 0},
    "integrator": {"kind": "rk4", "dt": 0.2, "steps": 10, "snapshot_every": 1},
    "functionals": [],
}


def run_cli(args):
    """Runs main and returns (exit code, stderr text)."""
    err = io.StringIO()
    with contextlib.redirect_stderr(err), contextlib.redirect_stdout(io.StringIO()):
        code = main(args)
    return code, err.getvalue()


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = os.path.join(self.tmp.name, "out")

    def tearDown(self):
        for handler in logging.root.handlers[:]:
            handler.close()
            logging.root.removeHandler(handler)
        self.tmp.cleanup()

    def write_config(self, document, name="config.json"):
        path = os.path.join(self.tmp.name, name)
        with open(path, 'w') as f:
            json.dump(document, f, indent=2)
        return path

    def config(self, **changes):
        document = json.loads(json.dumps(PLANE_WAVE))
        for key, value in changes.items():
            if isinstance(value, dict) and isinstance(document.get(key), dict):
                document[key].update(value)
            else:
                document[key] = value
        return self.write_config(document)


class TestRun(CliTestCase):

    def test_plane_wave_preset(self):
        code, _ = run_cli(["run", "-p", "planewave", "-o", self.out])
        self.assertEqual(code, 0)
        df = pd.read_csv(os.path.join(self.out, "diagnostics.csv"), comment='#')
        self.assertEqual(len(df), 101)
        self.assertIn("G_re", df.columns)
        self.assertLessEqual(df["gauss_max"].max(), 1e-12)
        with open(os.path.join(self.out, "diagnostics.csv")) as f:
            self.assertTrue(f.readline().startswith("# nambu_em 0.1.0 config_sha256="))
        self.assertEqual(len(os.listdir(os.path.join(self.out, "snapshots"))), 11)
        summary = read_json(os.path.join(self.out, "summary.json"))
        self.assertFalse(summary["aborted"])
        self.assertEqual(summary["steps_completed"], 100)
        self.assertLessEqual(summary["drift"]["I2"], 1e-12)
        self.assertTrue(os.path.isfile(os.path.join(self.out, "nambu_em.log")))

    def test_snapshots_round_trip(self):
        run_cli(["run", "-p", "planewave", "-o", self.out])
        t, state = read_snapshot(os.path.join(self.out, "snapshots", "snapshot_00000.json"))
        self.assertEqual(t, 0.)
        expected = make_ic("plane_wave", {"index": [0, 0, 1], "amplitude": 1.,
                                          "polarization": [1, 0, 0]}, grid=Grid(4, 4, 4))
        self.assertEqual(state, expected)

    def test_deterministic_artifacts(self):
        other = os.path.join(self.tmp.name, "other")
        for out in (self.out, other):
            self.assertEqual(run_cli(["run", "-p", "coulomb", "-o", out])[0], 0)
        for name in ("diagnostics.csv", "summary.json",
                     os.path.join("snapshots", "snapshot_00004.json")):
            with open(os.path.join(self.out, name), 'rb') as a, open(os.path.join(other, name), 'rb') as b:
                self.assertEqual(a.read(), b.read(), name)

    def test_plot(self):
        path = self.config(outputs={"plot": True, "snapshots": False})
        self.assertEqual(run_cli(["run", "-c", path, "-o", self.out])[0], 0)
        self.assertTrue(os.path.isfile(os.path.join(self.out, "diagnostics.png")))
        self.assertFalse(os.path.exists(os.path.join(self.out, "snapshots")))

    def test_abort(self):
        path = self.config(integrator={"dt": 100., "steps": 200})
        with np.errstate(all="ignore"):
            code, _ = run_cli(["run", "-c", path, "-o", self.out])
        self.assertEqual(code, 3)
        self.assertTrue(read_json(os.path.join(self.out, "summary.json"))["aborted"])

    def test_progress_bar(self):
        code, err = run_cli(["run", "-c", self.config(), "-o", self.out, "--progress"])
        self.assertEqual(code, 0)
        self.assertIn("10/10", err)
        _, quiet = run_cli(["run", "-c", self.config(), "-o", self.out])
        self.assertNotIn("10/10", quiet)

    def test_integrator_override(self):
        other = os.path.join(self.tmp.name, "other")
        run_cli(["run", "-p", "planewave", "-o", self.out])
        self.assertEqual(run_cli(["run", "-p", "planewave", "-o", other, "-i", "midpoint"])[0], 0)
        a = read_json(os.path.join(self.out, "summary.json"))["artifact"]
        b = read_json(os.path.join(other, "summary.json"))["artifact"]
        self.assertNotEqual(a["config_hash"], b["config_hash"])

    def violating_snapshot(self):
        path = os.path.join(self.tmp.name, "violating.json")
        write_snapshot(path, SpectralState([[0, 0, 1]], [[0, 0, 1]], [[0, 0, 0]], c=[0]))
        return path

    def test_constraint_warning_logged_once(self):
        path = self.write_config({
            "source": {"modes": self.violating_snapshot()},
            "integrator": {"kind": "exact", "dt": 0.1, "steps": 2},
        })
        self.assertEqual(run_cli(["run", "-c", path, "-o", self.out])[0], 0)
        with open(os.path.join(self.out, "nambu_em.log")) as f:
            self.assertEqual(f.read().count("violates constraints"), 1)

    def test_constraint_tolerance_from_config(self):
        path = self.write_config({
            "source": {"modes": self.violating_snapshot()},
            "integrator": {"kind": "exact", "dt": 0.1, "steps": 2},
            "tolerances": {"constraint": 10.},
        })
        self.assertEqual(run_cli(["run", "-c", path, "-o", self.out])[0], 0)
        with open(os.path.join(self.out, "nambu_em.log")) as f:
            self.assertNotIn("violates constraints", f.read())

    def test_snapshot_source(self):
        run_cli(["ic", "-p", "standing", "-o", self.out])
        path = self.write_config({
            "source": {"modes": os.path.join(self.out, "ic.json")},
            "integrator": {"kind": "exact", "dt": 0.1, "steps": 5},
            "functionals": ["H"],
        })
        out = os.path.join(self.tmp.name, "from_snapshot")
        self.assertEqual(run_cli(["run", "-c", path, "-o", out])[0], 0)
        df = pd.read_csv(os.path.join(out, "diagnostics.csv"), comment='#')
        self.assertEqual(list(df.columns), ["t", "H_re", "H_im", "gauss_max", "herm_max"])


class TestConfigErrors(CliTestCase):

    def test_unknown_functional(self):
        code, err = run_cli(["run", "-c", self.config(functionals=["I3"]), "-o", self.out])
        self.assertEqual(code, 2)
        self.assertIn("I3", err)
        self.assertIn("functionals", err)

    def test_zero_steps(self):
        code, err = run_cli(["run", "-c", self.config(integrator={"steps": 0}), "-o", self.out])
        self.assertEqual(code, 2)
        self.assertIn("integrator.steps", err)

    def test_malformed_json(self):
        path = os.path.join(self.tmp.name, "broken.json")
        with open(path, 'w') as f:
            f.write('{\n  "source": {"explicit": true},\n  "ic": [\n}\n')
        code, err = run_cli(["run", "-c", path, "-o", self.out])
        self.assertEqual(code, 2)
        self.assertIn("line", err)

    def test_bad_ic_params(self):
        path = self.config(ic={"params": {"k": [0, 0, 1], "polarization": [0, 0, 1]}})
        code, err = run_cli(["ic", "-c", path, "-o", self.out])
        self.assertEqual(code, 2)
        self.assertIn("ic.params", err)

    def test_wrongly_typed_sections(self):
        cases = {
            "outputs": self.config(outputs="x"),
            "tolerances": self.config(tolerances=[1]),
            "functionals": self.config(functionals=[["I1"]]),
        }
        for field, path in cases.items():
            code, err = run_cli(["run", "-c", path, "-o", self.out])
            self.assertEqual(code, 2, field)
            self.assertIn(field, err)

    def test_incomplete_snapshot(self):
        path = os.path.join(self.tmp.name, "incomplete.json")
        write_json(path, {"version": 1, "t": 0.})
        config = self.write_config({
            "source": {"modes": path},
            "integrator": {"kind": "exact", "dt": 0.1, "steps": 2},
        }, name="from_snapshot.json")
        code, err = run_cli(["run", "-c", config, "-o", self.out])
        self.assertEqual(code, 2)
        self.assertIn("source.modes", err)

    def test_unknown_integrator_override(self):
        code, err = run_cli(["run", "-p", "planewave", "-o", self.out, "-i", "euler"])
        self.assertEqual(code, 2)
        self.assertIn("integrator.kind", err)

    def test_arguments(self):
        self.assertEqual(run_cli(["run"])[0], 2)
        self.assertEqual(run_cli(["run", "-p", "planewave", "-c", self.config()])[0], 2)
        self.assertEqual(run_cli(["run", "-p", "nonexistent"])[0], 2)
        self.assertEqual(run_cli(["simulate", "-p", "planewave"])[0], 2)

    def test_threads_env(self):
        with mock.patch.dict(os.environ, {"NAMBU_EM_THREADS": "zero"}):
            code, err = run_cli(["audit", "-p", "planewave", "-o", self.out])
        self.assertEqual(code, 2)
        self.assertIn("NAMBU_EM_THREADS", err)


class TestAudit(CliTestCase):

    def test_plane_wave_preset(self):
        with mock.patch.dict(os.environ, {"NAMBU_EM_THREADS": "2"}):
            code, _ = run_cli(["audit", "-p", "planewave", "-o", self.out])
        self.assertEqual(code, 0)
        document = read_json(os.path.join(self.out, "audit.json"))
        classes = {r["name"]: r["class"] for r in document["records"]}
        self.assertEqual(classes["I1"], "bracket_invariant")
        self.assertEqual(classes["H"], "supercasimir")
        self.assertEqual(classes["G"], "varying")
        self.assertEqual(document["failed"], [])
        self.assertLessEqual(document["crosscheck"], 1e-6)
        with open(os.path.join(self.out, "audit.txt")) as f:
            text = f.read()
        self.assertIn("supercasimir", text)
        self.assertIn("rate crosscheck residual", text)

    def test_tight_tolerances_fail(self):
        path = self.write_config({
            "source": {"grid": {"nx": 8, "ny": 8, "nz": 8}},
            "ic": {"kind": "random_solenoidal", "params": {}, "seed": 7},
            "integrator": {"kind": "exact", "dt": 0.05, "steps": 20, "snapshot_every": 5},
            "tolerances": {"rate": 1e-16, "drift": 1e-16},
        })
        code, _ = run_cli(["audit", "-c", path, "-o", self.out])
        self.assertEqual(code, 4)
        self.assertNotEqual(read_json(os.path.join(self.out, "audit.json"))["failed"], [])

    def test_deterministic_report(self):
        other = os.path.join(self.tmp.name, "other")
        for out in (self.out, other):
            self.assertEqual(run_cli(["audit", "-p", "coulomb", "-o", out])[0], 0)
        with open(os.path.join(self.out, "audit.json"), 'rb') as a, \
                open(os.path.join(other, "audit.json"), 'rb') as b:
            self.assertEqual(a.read(), b.read())


class TestConvergence(CliTestCase):

    def test_rk4(self):
        self.assertEqual(run_cli(["convergence", "-c", self.config(), "-o", self.out])[0], 0)
        df = pd.read_csv(os.path.join(self.out, "convergence.csv"), comment='#')
        self.assertEqual(len(df), 6)
        self.assertTrue(np.all(np.abs(df["order"].dropna() - 4) <= 0.1))

    def test_midpoint(self):
        path = self.config(integrator={"kind": "midpoint"})
        self.assertEqual(run_cli(["convergence", "-c", path, "-o", self.out])[0], 0)

    def test_plane_wave_preset_override(self):
        for kind, order in (("rk4", 4), ("midpoint", 2)):
            out = os.path.join(self.out, kind)
            self.assertEqual(run_cli(["convergence", "-p", "planewave", "-o", out, "-i", kind])[0], 0)
            df = pd.read_csv(os.path.join(out, "convergence.csv"), comment='#')
            self.assertTrue(np.all(np.abs(df["order"].dropna() - order) <= 0.1), kind)

    def test_progress_bar(self):
        code, err = run_cli(["convergence", "-c", self.config(), "-o", self.out, "--progress"])
        self.assertEqual(code, 0)
        self.assertIn("6/6", err)

    def test_exact_is_rejected(self):
        code, err = run_cli(["convergence", "-c", self.config(integrator={"kind": "exact"}),
                             "-o", self.out])
        self.assertEqual(code, 2)
        self.assertIn("integrator.kind", err)


class TestInitialCondition(CliTestCase):

    def test_grid_preset(self):
        self.assertEqual(run_cli(["ic", "-p", "coulomb", "-o", self.out])[0], 0)
        _, state = read_snapshot(os.path.join(self.out, "ic.json"))
        self.assertEqual(state.grid, Grid(8, 8, 8))
        field = read_lattice(os.path.join(self.out, "lattice.json"))
        self.assertEqual(field.dims, (8, 8, 8))
        self.assertIsNotNone(field.charge)

    def test_threads_cap_lattice_transform(self):
        with mock.patch.dict(os.environ, {"NAMBU_EM_THREADS": "2"}), \
                mock.patch("nambu_em.cli.runner.to_lattice", wraps=to_lattice) as transform:
            self.assertEqual(run_cli(["ic", "-p", "planewave", "-o", self.out])[0], 0)
        self.assertEqual(transform.call_args.kwargs["workers"], 2)

    def test_explicit(self):
        self.assertEqual(run_cli(["ic", "-c", self.config(), "-o", self.out])[0], 0)
        _, state = read_snapshot(os.path.join(self.out, "ic.json"))
        self.assertEqual(state.n_modes, 2)
        self.assertFalse(os.path.exists(os.path.join(self.out, "lattice.json")))

    def test_seed_override(self):
        path = self.write_config({
            "source": {"grid": {"nx": 4, "ny": 4, "nz": 4}},
            "ic": {"kind": "random_solenoidal", "params": {}, "seed": 1},
            "integrator": {"kind": "exact", "dt": 0.1, "steps": 1},
        })
        other = os.path.join(self.tmp.name, "other")
        run_cli(["ic", "-c", path, "-o", self.out])
        run_cli(["ic", "-c", path, "-o", other, "-s", "2"])
        a = read_json(os.path.join(self.out, "ic.json"))
        b = read_json(os.path.join(other, "ic.json"))
        self.assertNotEqual(a["E"], b["E"])
        self.assertNotEqual(a["artifact"]["config_hash"], b["artifact"]["config_hash"])


if __name__ == '__main__':
    unittest.main()
