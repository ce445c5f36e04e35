"""
Testes Unitários - Modelos Pydantic
"""

import pytest
from pydantic import ValidationError

from src.exceptions import ConfigError
from src.models import (
    CommandDefaults,
    ExperimentConfig,
    ExperimentReport,
    Finding,
    LabSettings,
    MeasurePreset,
    StatisticsSettings,
)


class TestStatisticsSettings:
    """Testes para o modelo StatisticsSettings."""

    def test_defaults(self):
        """Testa limiares padrão."""
        stats = StatisticsSettings()
        assert stats.ks_threshold == 0.01
        assert stats.lil_envelope == (0.3, 3.0)

    def test_envelope_reversed(self):
        """Testa envelope com low ≥ high."""
        with pytest.raises(ValidationError):
            StatisticsSettings(lil_envelope=(3.0, 0.3))

    def test_confidence_range(self):
        """Testa confiança fora de (0, 1)."""
        with pytest.raises(ValidationError):
            StatisticsSettings(confidence_level=1.0)


class TestMeasurePreset:
    """Testes para o modelo MeasurePreset."""

    def test_valid_preset(self):
        """Testa preset que soma 1."""
        preset = MeasurePreset(group="free:2", weights={"a": 0.5, "a-": 0.5})
        assert preset.description == ""
        assert preset.weights["a"] == 0.5

    def test_mass_not_one(self):
        """Testa pesos que não somam 1."""
        with pytest.raises(ValidationError):
            MeasurePreset(group="free:2", weights={"a": 0.5, "a-": 0.4})

    def test_non_positive_weight(self):
        """Testa peso nulo."""
        with pytest.raises(ValidationError):
            MeasurePreset(group="free:2", weights={"a": 1.0, "a-": 0.0})

    def test_empty_support(self):
        """Testa medida sem suporte."""
        with pytest.raises(ValidationError):
            MeasurePreset(group="free:2", weights={})


class TestLabSettings:
    """Testes para o modelo LabSettings."""

    def test_unknown_command(self):
        """Testa padrões para comando inexistente."""
        with pytest.raises(ValidationError) as exc_info:
            LabSettings(commands={"entropy": CommandDefaults(n=10)})
        assert "entropy" in str(exc_info.value)

    def test_command_defaults_forbid_extra(self):
        """Testa campo desconhecido em commands.<comando>."""
        with pytest.raises(ValidationError):
            CommandDefaults(steps=10)

    def test_empty_settings(self):
        """Testa que todas as seções têm padrão."""
        settings = LabSettings()
        assert settings.numerics.support_cap == 5_000_000
        assert settings.measures == {}


class TestExperimentConfig:
    """Testes para o modelo ExperimentConfig."""

    def test_defaults(self):
        """Testa valores padrão e grupo canônico."""
        config = ExperimentConfig(command="drift")
        assert config.group == "free:2"
        assert config.metric == "word"
        assert config.format == "json"

    def test_group_canonicalized(self):
        """Testa normalização da spec de grupo."""
        config = ExperimentConfig(command="green", group=" free:3 ")
        assert config.group == "free:3"

    def test_malformed_group(self):
        """Testa spec de grupo inválida (ConfigError é um ValueError)."""
        with pytest.raises((ValidationError, ConfigError)):
            ExperimentConfig(command="green", group="free:x")

    def test_unknown_field(self):
        """Testa campo fora do schema."""
        with pytest.raises(ValidationError):
            ExperimentConfig(command="drift", steps=10)

    def test_unknown_command(self):
        """Testa comando fora da lista."""
        with pytest.raises(ValidationError):
            ExperimentConfig(command="entropy")

    def test_invalid_ranges(self):
        """Testa trajectories < 1 e semente negativa."""
        with pytest.raises(ValidationError):
            ExperimentConfig(command="drift", trajectories=0)
        with pytest.raises(ValidationError):
            ExperimentConfig(command="drift", seed=-1)

    def test_empty_measure(self):
        """Testa medida vazia."""
        with pytest.raises(ValidationError):
            ExperimentConfig(command="drift", measure="  ")

    def test_json_round_trip(self):
        """Testa ida e volta sem perda pelo JSON."""
        config = ExperimentConfig(command="lil", n=5000, seed=2 ** 63, format="csv")
        assert ExperimentConfig.model_validate_json(config.model_dump_json()) == config


class TestExperimentReport:
    """Testes para o envelope do relatório."""

    def _report(self, findings):
        return ExperimentReport(
            command="delta",
            config=ExperimentConfig(command="delta"),
            findings=findings,
            lab_version="1.0.0",
            timestamp="2026-01-01T00:00:00+00:00",
        )

    def test_passed_when_all_pass(self):
        """Testa passed com todas as verificações ok."""
        report = self._report([Finding(check="tree_delta", passed=True, observed=0.0, expected=0.0)])
        assert report.passed

    def test_failed_finding(self):
        """Testa passed falso com uma verificação falha."""
        report = self._report([
            Finding(check="a", passed=True),
            Finding(check="b", passed=False, detail="desvio"),
        ])
        assert not report.passed

    def test_no_findings(self):
        """Testa relatório sem verificações."""
        assert self._report([]).passed
