"""Runtime settings resolved from flags, environment, and a config file.

Precedence: command-line flags beat CORE_* environment variables, which beat
the key/value config file.  The file format is flat ``key = value`` lines
with ``#`` comments; quotes around values are optional.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from .backends import BackendConfig, BackendKind

DEFAULT_CONFIG_FILE = Path("core.toml")

_ENV_KEYS = {
    "CORE_BACKEND": "backend",
    "CORE_HTTP_BASE_URL": "http_base_url",
    "CORE_HTTP_MODEL": "http_model",
    "CORE_TRANSCRIPT": "transcript",
    "CORE_DATA_DIR": "data_dir",
}

_VALID_KEYS = {"backend", "http_base_url", "http_model", "transcript", "data_dir", "port", "host"}


@dataclass(frozen=True)
class Settings:
    backend: str = "oracle"
    http_base_url: str | None = None
    http_model: str | None = None
    transcript: str | None = None
    data_dir: str = "data"
    port: int = 8000
    host: str = "127.0.0.1"


def parse_config_file(path: Path) -> dict[str, str]:
    """Read flat ``key = value`` lines; unknown keys are rejected loudly."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in ("'", '"'):
            value = value[1:-1]
        if key not in _VALID_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def load_settings(
    flags: dict[str, object] | None = None,
    env: dict[str, str] | None = None,
    config_path: Path | None = None,
) -> Settings:
    """Merge the three sources into one :class:`Settings`."""
    merged: dict[str, object] = {}

    path = config_path if config_path is not None else DEFAULT_CONFIG_FILE
    if path.is_file():
        merged.update(parse_config_file(path))

    env_map = os.environ if env is None else env
    for env_key, key in _ENV_KEYS.items():
        if env_key in env_map and env_map[env_key] != "":
            merged[key] = env_map[env_key]

    if flags:
        for key, value in flags.items():
            if value is not None:
                merged[key] = value

    if "port" in merged:
        merged["port"] = int(merged["port"])  # type: ignore[arg-type]
    return Settings(**merged)  # type: ignore[arg-type]


def backend_config(settings: Settings) -> BackendConfig:
    kind = BackendKind(settings.backend)
    if kind is BackendKind.HTTP:
        return BackendConfig(
            kind=kind,
            base_url=settings.http_base_url,
            model_name=settings.http_model,
        )
    if kind is BackendKind.TRANSCRIPT:
        if settings.transcript is None:
            raise ValueError("transcript backend requires a transcript path")
        return BackendConfig(kind=kind, transcript_path=Path(settings.transcript))
    return BackendConfig(kind=kind)
