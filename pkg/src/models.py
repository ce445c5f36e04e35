"""
Modelos Pydantic para Validação de Dados
Valida o YAML de configurações, a configuração efetiva de cada experimento
e o envelope dos relatórios emitidos pela CLI
"""

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

COMMANDS = (
    "green", "hilbert", "boundary", "drift", "clt",
    "lil", "lamplighter", "delta", "selftest",
)

Command = Literal[
    "green", "hilbert", "boundary", "drift", "clt",
    "lil", "lamplighter", "delta", "selftest",
]


# ============================================================================
# Modelos de Configuração (YAML)
# ============================================================================

class NumericsSettings(BaseModel):
    """Limites e tolerâncias numéricas."""
    support_cap: int = Field(default=5_000_000, gt=0, description="Máximo de entradas por suporte/bola")
    lamplighter_ball_limit: int = Field(default=8, ge=0)
    ball_enumeration_cap: int = Field(default=500_000, gt=0)
    green_tolerance: float = Field(default=1e-3, gt=0)
    poisson_tolerance: float = Field(default=1e-8, gt=0)
    stationary_tolerance: float = Field(default=1e-12, gt=0)
    stationary_max_iterations: int = Field(default=20_000, gt=0)
    poisson_max_iterations: int = Field(default=5_000, gt=0)
    default_depth: int = Field(default=6, ge=1)
    holder_alpha: float = Field(default=0.25, gt=0)
    settle_fraction: float = Field(default=0.5, gt=0, le=1)


class StatisticsSettings(BaseModel):
    """Limiares dos testes estatísticos."""
    confidence_level: float = Field(default=0.95, gt=0, lt=1)
    ks_threshold: float = Field(default=0.01, gt=0, lt=1)
    martingale_se_threshold: float = Field(default=3.0, gt=0)
    martingale_min_occupancy: int = Field(default=30, gt=0)
    lil_envelope: Tuple[float, float] = (0.3, 3.0)
    divergence_sigmas: float = Field(default=5.0, gt=0)
    min_stabilized_rays: int = Field(default=100, gt=0)

    @field_validator('lil_envelope')
    @classmethod
    def validate_envelope(cls, v):
        """Valida que o envelope do LIL é um intervalo positivo."""
        low, high = v
        if not 0 < low < high:
            raise ValueError(f"Envelope do LIL inválido: {v}")
        return v


class MeasurePreset(BaseModel):
    """Medida de passo nomeada (pesos por palavra)."""
    group: str
    weights: Dict[str, float] = Field(description="Palavra ('a.b-') → peso")
    description: str = ""

    @field_validator('weights')
    @classmethod
    def validate_weights(cls, v):
        """Pesos positivos que somam 1."""
        if not v:
            raise ValueError("Medida sem suporte")
        if any(w <= 0 for w in v.values()):
            raise ValueError("Pesos devem ser positivos")
        total = sum(v.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"Pesos somam {total}, esperado 1")
        return v


class CommandDefaults(BaseModel):
    """Valores padrão de um comando da CLI (campos ausentes herdam do global)."""
    model_config = ConfigDict(extra="forbid")
    group: Optional[str] = None
    measure: Optional[str] = None
    metric: Optional[Literal["word", "green"]] = None
    n: Optional[int] = None
    trajectories: Optional[int] = None
    depth: Optional[int] = None
    truncation: Optional[int] = None
    radius: Optional[int] = None
    tolerance: Optional[float] = None
    seed: Optional[int] = None


class LabSettings(BaseModel):
    """Configurações completas do laboratório (config/lab_settings.yaml)."""
    numerics: NumericsSettings = Field(default_factory=NumericsSettings)
    statistics: StatisticsSettings = Field(default_factory=StatisticsSettings)
    measures: Dict[str, MeasurePreset] = Field(default_factory=dict)
    commands: Dict[str, CommandDefaults] = Field(default_factory=dict)

    @field_validator('commands')
    @classmethod
    def validate_command_names(cls, v):
        """Valida que só comandos conhecidos têm padrões."""
        for name in v:
            if name not in COMMANDS:
                raise ValueError(
                    f"Comando '{name}' não é suportado. Comandos válidos: {list(COMMANDS)}"
                )
        return v


# ============================================================================
# Configuração efetiva de um experimento
# ============================================================================

class ExperimentConfig(BaseModel):
    """
    Configuração efetiva de uma execução.

    Todos os campos são explícitos no relatório; a serialização JSON faz
    ida e volta sem perda (model_dump_json ↔ model_validate_json).
    """
    model_config = ConfigDict(extra="forbid")

    command: Command
    group: str = "free:2"
    measure: str = "uniform-generators"
    metric: Literal["word", "green"] = "word"
    n: int = Field(default=10_000, ge=0)
    trajectories: int = Field(default=1_000, ge=1)
    depth: int = Field(default=6, ge=1)
    truncation: int = Field(default=60, ge=0)
    radius: int = Field(default=6, ge=0)
    tolerance: float = Field(default=1e-3, gt=0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    threads: int = Field(default=1, ge=1)
    out: Optional[str] = None
    format: Literal["json", "csv"] = "json"

    @field_validator('group')
    @classmethod
    def validate_group(cls, v):
        """A spec de grupo precisa ser interpretável."""
        from .groups import parse_group_spec
        return parse_group_spec(v).name

    @model_validator(mode='after')
    def validate_measure_text(self):
        """Medida não pode ser vazia."""
        if not self.measure.strip():
            raise ValueError("Spec de medida vazia")
        return self


# ============================================================================
# Relatórios
# ============================================================================

class Finding(BaseModel):
    """Resultado de uma verificação (teórica ou numérica)."""
    check: str
    passed: bool
    detail: str = ""
    observed: Optional[float] = None
    expected: Optional[float] = None


class ExperimentReport(BaseModel):
    """Envelope JSON de toda execução da CLI."""
    command: Command
    config: ExperimentConfig
    results: Dict[str, Any] = Field(default_factory=dict)
    findings: List[Finding] = Field(default_factory=list)
    provenance: Dict[str, str] = Field(default_factory=dict)
    lab_version: str
    timestamp: str = Field(description="Excluído das comparações de reprodutibilidade")

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.findings)
