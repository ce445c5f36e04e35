"""
Testes Unitários - Autoteste com valores de referência
"""

import pytest

from src.exceptions import ConfigError
from src.selftest import GOLDEN_CHECKS, golden, run_selftest

FAST_CHECKS = [
    "invert_free_word",
    "invert_identity",
    "invert_lamplighter",
    "multiply_examples",
    "lamplighter_length",
    "word_length_examples",
    "ball_sizes",
    "parse_error_position",
    "convolution_return",
    "convolution_examples",
    "exponential_moment",
    "delta_tree",
    "gromov_product_examples",
    "horofunction",
    "boundary_action_examples",
    "busemann_trace",
    "cocycle_examples",
    "stationary_uniform",
    "transfer_indicator",
    "transfer_fixes_constants",
    "biased_psi",
    "biased_poisson",
    "srw_variance",
    "ks_constant_samples",
    "ks_calibration",
    "lil_deterministic",
    "lindeberg_trivial",
    "exponent_linear",
]


class TestSelftest:
    """Testes para o registro e a execução das verificações."""

    def test_fast_checks_pass(self):
        """Testa as verificações sem tabela de Green."""
        findings = run_selftest(FAST_CHECKS)
        failed = [f.check for f in findings if not f.passed]
        assert failed == []
        assert len(findings) == len(FAST_CHECKS)

    def test_convolution_values(self):
        """Testa o valor esperado 7/64 no relatório da verificação."""
        finding = run_selftest(["convolution_return"])[0]
        assert finding.expected == pytest.approx(7 / 64)

    def test_registry_order(self):
        """Testa ordem de registro e nomes conhecidos."""
        names = list(GOLDEN_CHECKS)
        assert names[0] == "invert_free_word"
        assert set(FAST_CHECKS) <= set(names)
        assert "green_identity" in names

    def test_unknown_check(self):
        """Testa nome desconhecido."""
        with pytest.raises(ConfigError) as exc_info:
            run_selftest(["invert_free_word", "entropy"])
        assert exc_info.value.diagnostics["unknown"] == ["entropy"]

    def test_duplicate_registration(self):
        """Testa registro duplicado."""
        with pytest.raises(ValueError):
            golden("ball_sizes")(lambda: None)

    def test_calibration_reports_acceptances(self):
        """Testa a contagem de lotes aceitos no relatório da calibração KS."""
        finding = run_selftest(["ks_calibration"])[0]
        assert finding.passed
        assert 95 <= finding.observed <= 100

    def test_biased_psi_reported(self):
        """Testa ψ enviesada contra o padrão ¼ − A, ¾ − A."""
        finding = run_selftest(["biased_psi"])[0]
        assert finding.passed
        assert finding.observed <= 1e-12
