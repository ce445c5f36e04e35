"""
Testes Unitários - Carregamento das configurações do laboratório
"""

import tempfile
from pathlib import Path

import pytest

from src.exceptions import ConfigError, SettingsNotFoundError, SettingsValidationError
from src.settings import get_settings, load_settings


def _write_yaml(content: str) -> str:
    handle = tempfile.NamedTemporaryFile("w", suffix=".yaml", delete=False, encoding="utf-8")
    handle.write(content)
    handle.close()
    return handle.name


class TestLoadSettings:
    """Testes para load_settings."""

    def test_project_settings(self):
        """Testa o YAML do projeto."""
        settings = load_settings()
        assert settings.numerics.support_cap == 5_000_000
        assert "biased" in settings.measures
        assert settings.measures["biased"].weights["a"] == 0.375
        assert settings.commands["lamplighter"].group == "zwrz"

    def test_cached_settings(self):
        """Testa que get_settings carrega uma vez."""
        assert get_settings() is get_settings()

    def test_missing_file(self):
        """Testa arquivo inexistente."""
        with pytest.raises(SettingsNotFoundError) as exc_info:
            load_settings("/nonexistent/lab_settings.yaml")
        assert exc_info.value.exit_code == 3
        assert "path" in exc_info.value.diagnostics

    def test_malformed_yaml(self):
        """Testa YAML malformado."""
        path = _write_yaml("numerics: [1, 2\n")
        try:
            with pytest.raises(ConfigError):
                load_settings(path)
        finally:
            Path(path).unlink()

    def test_schema_violation(self):
        """Testa estrutura fora do schema."""
        path = _write_yaml("statistics:\n  lil_envelope: [3.0, 0.3]\n")
        try:
            with pytest.raises(SettingsValidationError) as exc_info:
                load_settings(path)
            assert exc_info.value.diagnostics["errors"]
        finally:
            Path(path).unlink()

    def test_empty_file(self):
        """Testa arquivo vazio → padrões."""
        path = _write_yaml("")
        try:
            settings = load_settings(path)
            assert settings.commands == {}
        finally:
            Path(path).unlink()
