from .utils import (
    NAME, VERSION, THREADS_ENV, PRESETS_DIR, RunConfig, ConfigError,
    canonical_json, config_hash, artifact_header, preset_path, read_config, parse_config,
    threads_from_env, write_json, read_json, snapshot_document, write_snapshot, read_snapshot,
    write_lattice, read_lattice, write_diagnostics,
)
