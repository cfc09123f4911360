import hashlib
import json
import os
from collections import namedtuple

import numpy as np

from ..api import Grid, SpectralState
from ..functionals import REGISTRY
from ..generator import IC_KINDS, LatticeField
from ..simulator import IntegratorSpec, KINDS

NAME = "nambu_em"
VERSION = "0.1.0"
FORMAT_VERSION = 1
THREADS_ENV = "NAMBU_EM_THREADS"

PRESETS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "presets")

DEFAULT_OUTPUTS = dict(dir="out", snapshots=True, plot=False)
DEFAULT_TOLERANCES = dict(constraint=1e-12, rate=1e-12, drift=1e-10, fd_step=1e-3, crosscheck=1e-6)

RunConfig = namedtuple("RunConfig", [
    "source", "ic", "integrator", "functionals", "outputs", "tolerances", "document"])


class ConfigError(ValueError):
    """Config document is malformed or inconsistent."""

    def __init__(self, field, message, line=None):
        self.field = field
        self.line = line
        where = f"{field}" if line is None else f"{field} (line {line})"
        super().__init__(f"{where}: {message}")


def _line_of(text, key):
    """1-based line of the first occurrence of "key" in the document text."""
    if not text:
        return None
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def canonical_json(document):
    return json.dumps(document, sort_keys=True, separators=(",", ":"))


def config_hash(config):
    """ SHA-256 of the canonical JSON of the resolved config document. """
    document = config.document if isinstance(config, RunConfig) else config
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()


def artifact_header(config):
    return {"name": NAME, "version": VERSION, "config_hash": config_hash(config)}


def preset_path(name):
    """ Path to a committed preset config.

    Raises:
        ConfigError: if no preset has that name.
    """
    path = os.path.join(PRESETS_DIR, f"{name}.json")
    if not os.path.isfile(path):
        available = sorted(p[:-5] for p in os.listdir(PRESETS_DIR) if p.endswith(".json"))
        raise ConfigError("preset", f"unknown preset '{name}', available: {', '.join(available)}.")
    return path


def read_config(path, out=None, seed=None, integrator=None):
    """ Reads and validates a run config document.

    Args:
        path (str): path to the JSON document.
        out (str or None): overrides outputs.dir.
        seed (int or None): overrides ic.seed.
        integrator (str or None): overrides integrator.kind.

    Returns:
        RunConfig: validated config with defaults filled in.

    Raises:
        ConfigError: with the offending field and, when known, its line.
    """
    try:
        with open(path, 'r') as f:
            text = f.read()
    except OSError as err:
        raise ConfigError("config", f"cannot read '{path}': {err}") from None
    try:
        document = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("config", err.msg, err.lineno) from None
    return parse_config(document, text=text, base_dir=os.path.dirname(os.path.abspath(path)),
                        out=out, seed=seed, integrator=integrator)


def parse_config(document, text=None, base_dir=".", out=None, seed=None, integrator=None):
    """ Validates a config dict; see read_config. """
    if not isinstance(document, dict):
        raise ConfigError("config", "document must be an object.")

    def fail(field, message):
        raise ConfigError(field, message, _line_of(text, field.split(".")[-1]))

    # source
    source = document.get("source")
    if not isinstance(source, dict) or len(source) != 1 or \
            next(iter(source)) not in ("grid", "modes", "explicit"):
        fail("source", "must hold exactly one of 'grid', 'modes' or 'explicit'.")
    if "grid" in source:
        grid = source["grid"]
        if not isinstance(grid, dict):
            fail("source.grid", "must be an object with nx, ny, nz and optional lx, ly, lz.")
        try:
            grid = Grid(**grid)
        except (TypeError, ValueError) as err:
            fail("source.grid", str(err))
        source = {"grid": grid.to_dict()}
    elif "modes" in source:
        modes = source["modes"]
        if not isinstance(modes, str):
            fail("source.modes", "must be a snapshot path.")
        source = {"modes": os.path.normpath(os.path.join(base_dir, modes))}
    else:
        source = {"explicit": True}

    # ic
    ic = document.get("ic")
    if "modes" in source:
        ic = None
    else:
        if not isinstance(ic, dict):
            fail("ic", "must be an object with kind, params and seed.")
        kind = ic.get("kind")
        if kind not in IC_KINDS:
            fail("ic.kind", f"'{kind}', should be one of {IC_KINDS}.")
        params = ic.get("params", {})
        if not isinstance(params, dict):
            fail("ic.params", "must be an object.")
        ic_seed = ic.get("seed", 0) if seed is None else seed
        if not isinstance(ic_seed, int) or isinstance(ic_seed, bool) or ic_seed < 0:
            fail("ic.seed", f"{ic_seed}, must be a non-negative integer.")
        ic = {"kind": kind, "params": params, "seed": ic_seed}

    # integrator
    kind_override = integrator
    integrator = document.get("integrator")
    if not isinstance(integrator, dict):
        fail("integrator", "must be an object with kind, dt, steps and snapshot_every.")
    if kind_override is not None:
        integrator = dict(integrator, kind=kind_override)
    if integrator.get("kind") not in KINDS:
        fail("integrator.kind", f"'{integrator.get('kind')}', should be one of {KINDS}.")
    for field in ("dt", "steps", "snapshot_every"):
        value = integrator.get(field, 1 if field == "snapshot_every" else None)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            fail(f"integrator.{field}", f"{value}, must be a number.")
        if field == "dt" and not (np.isfinite(value) and value > 0):
            fail("integrator.dt", f"{value}, must be > 0.")
        if field != "dt" and (int(value) != value or value < 1):
            fail(f"integrator.{field}", f"{value}, must be a positive integer.")
    spec = IntegratorSpec(integrator["kind"], integrator["dt"], integrator["steps"],
                          integrator.get("snapshot_every", 1))

    # functionals
    functionals = document.get("functionals", [])
    if not isinstance(functionals, list):
        fail("functionals", "must be a list of names.")
    for name in functionals:
        if not isinstance(name, str) or name not in REGISTRY:
            fail("functionals", f"unknown functional '{name}', registered: {', '.join(REGISTRY)}.")
    functionals = list(functionals) or list(REGISTRY)

    # outputs
    outputs = document.get("outputs", {})
    if not isinstance(outputs, dict):
        fail("outputs", "must be an object with dir, snapshots and plot.")
    outputs = dict(DEFAULT_OUTPUTS, **outputs)
    if out is not None:
        outputs["dir"] = out
    if set(outputs) - set(DEFAULT_OUTPUTS):
        fail("outputs", f"unknown keys {sorted(set(outputs) - set(DEFAULT_OUTPUTS))}.")
    if not isinstance(outputs["dir"], str):
        fail("outputs.dir", "must be a path.")
    for field in ("snapshots", "plot"):
        if not isinstance(outputs[field], bool):
            fail(f"outputs.{field}", "must be true or false.")

    # tolerances
    tolerances = document.get("tolerances", {})
    if not isinstance(tolerances, dict):
        fail("tolerances", f"must be an object with keys {sorted(DEFAULT_TOLERANCES)}.")
    tolerances = dict(DEFAULT_TOLERANCES, **tolerances)
    if set(tolerances) - set(DEFAULT_TOLERANCES):
        fail("tolerances", f"unknown keys {sorted(set(tolerances) - set(DEFAULT_TOLERANCES))}.")
    for field, value in tolerances.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
            fail(f"tolerances.{field}", f"{value}, must be > 0.")
        tolerances[field] = float(value)

    resolved = {
        "source": source,
        "ic": ic,
        "integrator": spec._asdict(),
        "functionals": functionals,
        "outputs": {k: v for k, v in outputs.items() if k != "dir"},
        "tolerances": tolerances,
    }
    return RunConfig(source, ic, spec, functionals, outputs, tolerances, resolved)


def threads_from_env():
    """ Worker cap from NAMBU_EM_THREADS, None when unset.

    Raises:
        ConfigError: if the variable is not a positive integer.
    """
    value = os.environ.get(THREADS_ENV)
    if value is None or value == "":
        return None
    try:
        threads = int(value)
    except ValueError:
        threads = 0
    if threads < 1:
        raise ConfigError(THREADS_ENV, f"'{value}', must be a positive integer.")
    return threads


def write_json(path, document):
    with open(path, 'w') as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")


def read_json(path):
    with open(path, 'r') as f:
        return json.load(f)


def _pairs(values):
    """Complex array as nested [re, im] lists."""
    values = np.asarray(values)
    return np.stack((values.real, values.imag), axis=-1).tolist()


def _complex_array(pairs, shape):
    pairs = np.asarray(pairs, dtype=float)
    if pairs.size == 0:
        return np.zeros(shape, dtype=complex)
    return (pairs[..., 0] + 1j * pairs[..., 1]).reshape(shape)


def snapshot_document(state, t=0., artifact=None):
    """ Snapshot document of a state with exactly round-tripping floats. """
    document = {
        "version": FORMAT_VERSION,
        "t": float(t),
        "grid": None if state.grid is None else state.grid.to_dict(),
        "k": state.k.tolist(),
        "E": _pairs(state.E),
        "B": _pairs(state.B),
        "w": state.w.tolist(),
        "c": _pairs(state.c),
        "partners": state.partners.tolist(),
    }
    if artifact is not None:
        document["artifact"] = artifact
    return document


def write_snapshot(path, state, t=0., artifact=None):
    write_json(path, snapshot_document(state, t, artifact))


def read_snapshot(path):
    """ Reads a snapshot document.

    Returns:
        (float, SpectralState): time and state.

    Raises:
        ConfigError: if the document is not a version 1 snapshot.
    """
    try:
        document = read_json(path)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError("source.modes", f"cannot read snapshot '{path}': {err}") from None
    if not isinstance(document, dict) or document.get("version") != FORMAT_VERSION:
        version = document.get("version") if isinstance(document, dict) else None
        raise ConfigError("source.modes", f"unsupported snapshot version {version}.")
    try:
        grid = None if document["grid"] is None else Grid(**document["grid"])
        n = len(document["k"])
        shape = (n, 3)
        state = SpectralState(
            np.asarray(document["k"], dtype=float).reshape(shape),
            _complex_array(document["E"], shape),
            _complex_array(document["B"], shape),
            w=document["w"],
            c=_complex_array(document["c"], (n,)),
            partners=document["partners"],
            grid=grid,
        )
        t = float(document["t"])
    except KeyError as err:
        raise ConfigError("source.modes", f"snapshot '{path}' lacks {err}.") from None
    except (TypeError, ValueError) as err:
        raise ConfigError("source.modes", f"malformed snapshot '{path}': {err}") from None
    return t, state


def write_lattice(path, field, artifact=None):
    """ Lattice document: row-major samples with z fastest. """
    document = {
        "version": FORMAT_VERSION,
        "dims": list(field.dims),
        "lengths": list(field.lengths),
        "E": field.E.reshape(-1, 3).tolist(),
        "B": field.B.reshape(-1, 3).tolist(),
        "rho": None if field.charge is None else field.charge.reshape(-1).tolist(),
    }
    if artifact is not None:
        document["artifact"] = artifact
    write_json(path, document)


def read_lattice(path):
    document = read_json(path)
    if document.get("version") != FORMAT_VERSION:
        raise ConfigError("lattice", f"unsupported lattice version {document.get('version')}.")
    return LatticeField(document["dims"], document["lengths"], document["E"], document["B"],
                        document["rho"])


def write_diagnostics(path, frame, artifact):
    """ Diagnostics CSV with a leading '#' line carrying the artifact header. """
    with open(path, 'w') as f:
        f.write(f"# {artifact['name']} {artifact['version']} config_sha256={artifact['config_hash']}\n")
        frame.to_csv(f, index=False, float_format="%.17g")
