# app/core/exceptions.py
from app.config import EXIT_CONFIG, EXIT_INVARIANT, EXIT_SIZE_GUARD


class QecForgeError(Exception):
    """Erro base do sistema; carrega o código de saída usado pela CLI"""
    exit_code: int = 1


class ConfigError(QecForgeError, ValueError):
    """Configuração, cenário ou argumentos inválidos"""
    exit_code = EXIT_CONFIG


class ProfileResolutionError(ConfigError):
    """Seletor de ruído aponta para face/vértice inexistente"""


class InvariantViolation(QecForgeError):
    """Algum invariante da rede ou do decodificador foi violado"""
    exit_code = EXIT_INVARIANT


class IllegalActionError(InvariantViolation):
    """Ação de deformação que não pertence a enumerate_actions"""


class SyndromeInconsistencyError(InvariantViolation):
    """Síndrome não suportada pelo conjunto apagado"""


class TerminalPerceptError(InvariantViolation):
    """Percepto sem ações disponíveis"""


class SizeGuardError(QecForgeError):
    """Entrada grande demais para uma operação exaustiva"""
    exit_code = EXIT_SIZE_GUARD
