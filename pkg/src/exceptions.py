"""
Exceções Customizadas - Laboratório de Passeios Hiperbólicos
Define exceções específicas para melhor tratamento de erros

Cada exceção carrega um dicionário `diagnostics` serializável em JSON e o
código de saída que a CLI usa ao encerrar (ver src/main.py).
"""

from typing import Any, Dict, Optional


class LabError(Exception):
    """Exceção base para todos os erros do laboratório."""

    exit_code: int = 2

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})

    def __str__(self) -> str:
        # KeyError usa repr() da mensagem; mantemos o texto limpo
        return self.message

    def to_dict(self) -> Dict[str, Any]:
        """Representação JSON usada pela CLI em stderr."""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "diagnostics": self.diagnostics,
        }


# ----------------------------------------------------------------------------
# Configuração (exit 3)
# ----------------------------------------------------------------------------

class ConfigError(LabError, ValueError):
    """Erro ao interpretar uma especificação de grupo, medida ou configuração."""
    exit_code = 3


class SettingsNotFoundError(LabError, FileNotFoundError):
    """Arquivo de configurações do laboratório não encontrado."""
    exit_code = 3


class SettingsValidationError(LabError, ValueError):
    """Erro ao validar o YAML de configurações."""
    exit_code = 3


class DomainError(LabError, ValueError):
    """Operandos fora do domínio da operação (specs misturadas, medida inválida)."""
    exit_code = 3


class CapabilityError(LabError, NotImplementedError):
    """Combinação de grupo/raio não suportada pelo laboratório."""
    exit_code = 3


# ----------------------------------------------------------------------------
# Recursos e precisão numérica (exit 4)
# ----------------------------------------------------------------------------

class ResourceError(LabError, MemoryError):
    """Suporte ou bola excedeu o limite configurado."""
    exit_code = 4


class AccuracyError(LabError, ArithmeticError):
    """Bola pequena demais para a tolerância pedida."""
    exit_code = 4


class RangeError(LabError, KeyError):
    """Consulta fora da bola coberta pela tabela de Green."""
    exit_code = 4


class PrecisionError(LabError, ArithmeticError):
    """Profundidade do prefixo de fronteira insuficiente."""
    exit_code = 4


class NumericError(LabError, ArithmeticError):
    """Iteração numérica não convergiu ou massa ausente."""
    exit_code = 4


# ----------------------------------------------------------------------------
# Achados estatísticos e teóricos (exit 2)
# ----------------------------------------------------------------------------

class SpectralError(LabError, ArithmeticError):
    """Série de Neumann sem decaimento (τ̂ ≥ 1)."""
    exit_code = 2


class StatisticalError(LabError, ValueError):
    """Amostras degeneradas ou insuficientes para a estatística pedida."""
    exit_code = 2


class TheoryViolation(LabError, AssertionError):
    """Propriedade garantida pela teoria falhou na escala de bancada."""
    exit_code = 2
