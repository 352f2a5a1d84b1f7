"""Settings resolution: config file parsing and source precedence."""

from pathlib import Path

import pytest

from core import (
    BackendConfig,
    BackendKind,
    Settings,
    backend_config,
    load_settings,
    parse_config_file,
)


def write_config(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "core.toml"
    path.write_text(text, encoding="utf-8")
    return path


class TestParseConfigFile:
    def test_basic_pairs(self, tmp_path):
        path = write_config(tmp_path, "backend = oracle\ndata_dir = /srv/data\nport = 9000\n")
        assert parse_config_file(path) == {
            "backend": "oracle",
            "data_dir": "/srv/data",
            "port": "9000",
        }

    def test_quotes_stripped(self, tmp_path):
        path = write_config(tmp_path, "data_dir = \"quoted dir\"\nhost = 'localhost'\n")
        assert parse_config_file(path) == {"data_dir": "quoted dir", "host": "localhost"}

    def test_comments_and_blanks_skipped(self, tmp_path):
        path = write_config(tmp_path, "# comment\n\nbackend = oracle\n   \n# another\n")
        assert parse_config_file(path) == {"backend": "oracle"}

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(tmp_path, "mystery = 1\n")
        with pytest.raises(ValueError, match="unknown key"):
            parse_config_file(path)

    def test_missing_equals_rejected(self, tmp_path):
        path = write_config(tmp_path, "just some words\n")
        with pytest.raises(ValueError, match="key = value"):
            parse_config_file(path)

    def test_value_may_contain_equals(self, tmp_path):
        path = write_config(tmp_path, "http_base_url = http://h/?a=b\n")
        assert parse_config_file(path)["http_base_url"] == "http://h/?a=b"


class TestPrecedence:
    def test_defaults(self):
        settings = load_settings(flags={}, env={}, config_path=Path("/nonexistent"))
        assert settings == Settings()
        assert settings.backend == "oracle"
        assert settings.port == 8000

    def test_file_applies(self, tmp_path):
        path = write_config(tmp_path, "data_dir = from-file\nport = 9001\n")
        settings = load_settings(flags={}, env={}, config_path=path)
        assert settings.data_dir == "from-file"
        assert settings.port == 9001

    def test_env_beats_file(self, tmp_path):
        path = write_config(tmp_path, "data_dir = from-file\n")
        settings = load_settings(
            flags={}, env={"CORE_DATA_DIR": "from-env"}, config_path=path
        )
        assert settings.data_dir == "from-env"

    def test_flags_beat_env_and_file(self, tmp_path):
        path = write_config(tmp_path, "data_dir = from-file\n")
        settings = load_settings(
            flags={"data_dir": "from-flag"},
            env={"CORE_DATA_DIR": "from-env"},
            config_path=path,
        )
        assert settings.data_dir == "from-flag"

    def test_empty_env_value_ignored(self):
        settings = load_settings(flags={}, env={"CORE_DATA_DIR": ""}, config_path=Path("/no"))
        assert settings.data_dir == "data"

    def test_none_flags_ignored(self):
        settings = load_settings(
            flags={"data_dir": None}, env={}, config_path=Path("/no")
        )
        assert settings.data_dir == "data"

    def test_default_file_read_from_cwd(self, tmp_path, monkeypatch):
        write_config(tmp_path, "data_dir = implicit\n")
        monkeypatch.chdir(tmp_path)
        settings = load_settings(flags={}, env={})
        assert settings.data_dir == "implicit"

    def test_env_backend_keys(self):
        settings = load_settings(
            flags={},
            env={
                "CORE_BACKEND": "http",
                "CORE_HTTP_BASE_URL": "http://m.local",
                "CORE_HTTP_MODEL": "m1",
            },
            config_path=Path("/no"),
        )
        assert settings.backend == "http"
        assert settings.http_base_url == "http://m.local"
        assert settings.http_model == "m1"


class TestBackendConfig:
    def test_oracle_default(self):
        cfg = backend_config(Settings())
        assert cfg == BackendConfig(kind=BackendKind.ORACLE)

    def test_transcript_requires_path(self):
        with pytest.raises(ValueError):
            backend_config(Settings(backend="transcript"))

    def test_transcript_with_path(self):
        cfg = backend_config(Settings(backend="transcript", transcript="t.json"))
        assert cfg.kind is BackendKind.TRANSCRIPT
        assert cfg.transcript_path == Path("t.json")

    def test_http_requires_url_and_model(self):
        with pytest.raises(ValueError):
            backend_config(Settings(backend="http"))
        with pytest.raises(ValueError):
            backend_config(Settings(backend="http", http_base_url="http://m"))

    def test_http_complete(self):
        cfg = backend_config(
            Settings(backend="http", http_base_url="http://m", http_model="m1")
        )
        assert cfg.kind is BackendKind.HTTP
        assert cfg.base_url == "http://m"
        assert cfg.model_name == "m1"

    def test_unknown_backend_name(self):
        with pytest.raises(ValueError):
            backend_config(Settings(backend="imaginary"))
