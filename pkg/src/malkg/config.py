"""Runtime configuration for the CLI and the HTTP service."""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import yaml

from .enrichment import DEFAULT_FIELD_MAP, DEFAULT_SOURCE_ID, ReputationSource
from .errors import ConfigError

_PATH_FIELDS = ("schema_path", "snapshot_path", "fixture_dir", "feed_manifest",
                "state_dir")


@dataclass
class AppConfig:
    """Everything the toolkit reads from its config file.

    Relative paths in a loaded file resolve against the file's directory; a
    default config resolves them against the working directory as usual.
    """

    schema_path: Path | None = None  # None selects the bundled schema
    snapshot_path: Path = Path("malkg-snapshot.json")
    fixture_dir: Path | None = None
    feed_manifest: Path | None = None
    state_dir: Path = Path(".malkg-state")
    host: str = "127.0.0.1"
    port: int = 8642
    mode: str = "lenient"
    include_inferred: bool = True
    enrichment_mode: str = "fixture"
    enrichment_source_id: str = DEFAULT_SOURCE_ID
    enrichment_endpoint: str | None = None
    enrichment_credential_env: str | None = None
    enrichment_field_map: dict[str, str] = field(
        default_factory=lambda: dict(DEFAULT_FIELD_MAP))
    parallelism: int = 4
    writer_timeout: float = 5.0
    watch_interval: float = 300.0
    watch_in_serve: bool = False

    def validate(self) -> "AppConfig":
        def expect(condition: bool, name: str, message: str) -> None:
            if not condition:
                raise ConfigError(message, field=name)

        expect(isinstance(self.host, str) and bool(self.host.strip()),
               "host", "must be a nonempty string")
        expect(isinstance(self.port, int) and not isinstance(self.port, bool)
               and 1 <= self.port <= 65535,
               "port", "must be an integer in 1..65535")
        expect(self.mode in ("strict", "lenient"),
               "mode", "must be 'strict' or 'lenient'")
        expect(isinstance(self.include_inferred, bool),
               "include_inferred", "must be a boolean")
        expect(self.enrichment_mode in ("fixture", "live"),
               "enrichment_mode", "must be 'fixture' or 'live'")
        expect(isinstance(self.parallelism, int)
               and not isinstance(self.parallelism, bool)
               and self.parallelism >= 1,
               "parallelism", "must be an integer >= 1")
        expect(isinstance(self.writer_timeout, (int, float))
               and not isinstance(self.writer_timeout, bool)
               and self.writer_timeout > 0,
               "writer_timeout", "must be a positive number")
        expect(isinstance(self.watch_interval, (int, float))
               and not isinstance(self.watch_interval, bool)
               and self.watch_interval > 0,
               "watch_interval", "must be a positive number")
        expect(isinstance(self.watch_in_serve, bool),
               "watch_in_serve", "must be a boolean")
        expect(isinstance(self.enrichment_field_map, dict)
               and all(isinstance(k, str) and isinstance(v, str)
                       for k, v in self.enrichment_field_map.items()),
               "enrichment_field_map", "must map strings to strings")
        missing = set(DEFAULT_FIELD_MAP) - set(self.enrichment_field_map)
        expect(not missing, "enrichment_field_map",
               f"missing keys: {', '.join(sorted(missing))}")
        if self.enrichment_mode == "live":
            expect(bool(self.enrichment_endpoint), "enrichment_endpoint",
                   "required when enrichment_mode is 'live'")
            expect(bool(self.enrichment_credential_env),
                   "enrichment_credential_env",
                   "required when enrichment_mode is 'live'")
        for name in ("host", "enrichment_source_id"):
            value = getattr(self, name)
            expect(isinstance(value, str), name, "must be a string")
        return self

    def reputation_source(self) -> ReputationSource:
        if self.enrichment_mode == "fixture" and self.fixture_dir is None:
            raise ConfigError("required for fixture-mode enrichment",
                              field="fixture_dir")
        return ReputationSource(
            mode=self.enrichment_mode,
            source_id=self.enrichment_source_id,
            fixture_dir=self.fixture_dir,
            endpoint=self.enrichment_endpoint,
            credential_env=self.enrichment_credential_env,
            field_map=dict(self.enrichment_field_map),
        )


def load_config(path: Path | str) -> AppConfig:
    """Parse and validate a YAML config file; bad settings name their field."""
    path = Path(path)
    try:
        raw = path.read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"unreadable config file {path}: {exc}") from exc
    try:
        data = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must be a mapping")

    known = {f.name for f in dataclass_fields(AppConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError("unknown setting", field=unknown[0])

    base = path.resolve().parent
    kwargs = {}
    for name, value in data.items():
        if name in _PATH_FIELDS:
            if value is None:
                kwargs[name] = None
                continue
            if not isinstance(value, str) or not value.strip():
                raise ConfigError("must be a path string", field=name)
            candidate = Path(value)
            kwargs[name] = candidate if candidate.is_absolute() else base / candidate
        else:
            kwargs[name] = value
    try:
        config = AppConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return config.validate()
