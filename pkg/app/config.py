# app/config.py
import os
from typing import Optional
from pydantic_settings import BaseSettings
from functools import lru_cache
from dotenv import load_dotenv

# Carregar variáveis do .env
load_dotenv()


class Settings(BaseSettings):
    # Projeto
    project_name: str = "qecforge"
    version: str = "1.0.0"
    description: str = "Otimização de códigos de superfície adaptáveis com Projective Simulation"

    # Execução
    threads: int = 1
    log_level: str = "INFO"
    output_dir: str = "runs"

    # Estimador
    estimator_trials: int = 100_000  # escala de bancada (10^6 na escala completa)
    chunk_size: int = 4096  # tentativas por subfluxo do gerador
    failure_convention: str = "any"  # "any" ou "z_only"
    failure_mode: str = "covered"  # "covered" (apagamento cobre um lógico) ou "decoder"
    debug_checks: bool = False

    # Cache de estimativas
    estimate_cache: bool = False
    cache_size: int = 50_000

    # Agente
    reset_glow: bool = False

    # Caminho opcional para um arquivo de cenários extra
    scenario_file: Optional[str] = os.getenv("QECFORGE_SCENARIO_FILE")

    model_config = {
        "env_prefix": "QECFORGE_",
        "env_file": ".env",
        "extra": "ignore"  # Ignora campos extras do .env
    }


@lru_cache()
def get_settings():
    """
    Cria uma instância única das configurações (singleton)
    """
    return Settings()


# Constantes do sistema
MIN_DEGREE = 3
MAX_DEGREE = 8
QUBIT_BUDGET = 50
DEFAULT_REWARD_THRESHOLD = 0.001
EXACT_EDGE_LIMIT = 20
CENSUS_DEPTH_LIMIT = 4
RANK_MEMO_SIZE = 100_000  # entradas (digest, setor, máscara) somadas entre reticulados
CSV_SCHEMA_VERSION = 1
FAILURE_CONVENTIONS = ("any", "z_only")
FAILURE_MODES = ("covered", "decoder")

# Códigos de saída da CLI
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_SIZE_GUARD = 4
