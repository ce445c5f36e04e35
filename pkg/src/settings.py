"""
Carregamento das Configurações do Laboratório
Lê config/lab_settings.yaml e valida com Pydantic

Os módulos numéricos recebem limites e tolerâncias como argumentos; a CLI
e os valores padrão consultam get_settings(), que carrega o YAML uma vez.
"""

from functools import lru_cache
from pathlib import Path

import yaml
from pydantic import ValidationError

from .exceptions import ConfigError, SettingsNotFoundError, SettingsValidationError
from .logger import get_logger
from .models import LabSettings

logger = get_logger(__name__)

DEFAULT_SETTINGS_PATH = "config/lab_settings.yaml"


def load_settings(settings_path: str = DEFAULT_SETTINGS_PATH) -> LabSettings:
    """
    Carrega e valida o arquivo YAML de configurações.

    Caminhos relativos são resolvidos a partir da raiz do projeto.

    Raises:
        SettingsNotFoundError: Se o arquivo não existir
        ConfigError: Se o YAML estiver malformado
        SettingsValidationError: Se a estrutura não corresponder ao schema
    """
    path = Path(settings_path)
    if not path.is_absolute():
        path = Path(__file__).parent.parent / settings_path

    try:
        logger.debug(f"Carregando configurações de: {path}")
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
    except FileNotFoundError as e:
        logger.error(f"Arquivo de configurações não encontrado: {path}")
        raise SettingsNotFoundError(
            f"Arquivo de configurações não encontrado: {path}",
            {"path": str(path)},
        ) from e
    except yaml.YAMLError as e:
        logger.error(f"Erro ao processar YAML: {e}")
        raise ConfigError(f"Erro ao processar YAML: {e}", {"path": str(path)}) from e

    try:
        settings = LabSettings(**data)
    except ValidationError as e:
        logger.error(f"Erro de validação Pydantic: {e}")
        raise SettingsValidationError(
            f"Erro ao validar configurações: {e}. "
            "Verifique se o YAML está no formato correto.",
            {"path": str(path), "errors": e.errors(include_url=False, include_context=False)},
        ) from e
    logger.debug(
        f"Configurações validadas: {len(settings.measures)} medidas, "
        f"{len(settings.commands)} comandos"
    )
    return settings


@lru_cache(maxsize=1)
def get_settings() -> LabSettings:
    """Configurações padrão do projeto (carregadas uma vez por processo)."""
    return load_settings()
