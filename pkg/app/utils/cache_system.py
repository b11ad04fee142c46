# app/utils/cache_system.py
from collections import OrderedDict
import hashlib
import json
from typing import Any, Optional
import logging

from app.config import RANK_MEMO_SIZE

logger = logging.getLogger(__name__)


class LRUCache:
    """Cache LRU (Least Recently Used) com tamanho máximo."""

    def __init__(self, max_size: int = 1000):
        self.cache = OrderedDict()
        self.max_size = max_size

    def get(self, key: Any) -> Optional[Any]:
        """Recupera um item do cache."""
        if key not in self.cache:
            return None

        # Mover para o fim (mais recentemente usado)
        self.cache.move_to_end(key)
        return self.cache[key]

    def set(self, key: Any, value: Any):
        """Armazena um item no cache."""
        if key in self.cache:
            del self.cache[key]
        elif len(self.cache) >= self.max_size:
            self.cache.popitem(last=False)

        self.cache[key] = value

    def resize(self, max_size: int):
        """Ajusta o tamanho máximo, descartando os mais antigos."""
        self.max_size = max_size
        while len(self.cache) > max_size:
            self.cache.popitem(last=False)
        logger.debug(f"Cache redimensionado para {max_size} entradas")

    def __contains__(self, key: Any) -> bool:
        return key in self.cache

    def __len__(self) -> int:
        return len(self.cache)

    def clear(self):
        """Limpa o cache."""
        self.cache.clear()


# Instância global para estimativas de P_L (ligada por QECFORGE_ESTIMATE_CACHE)
estimate_cache = LRUCache(max_size=50_000)

# Posto homológico por (digest do reticulado, setor, máscara apagada), único por processo
rank_memo = LRUCache(max_size=RANK_MEMO_SIZE)


def generate_cache_key(prefix: str, **kwargs) -> str:
    """
    Gera uma chave de cache única baseada nos parâmetros.

    Args:
        prefix: Prefixo para identificar o tipo de cache
        **kwargs: Parâmetros para gerar a chave

    Returns:
        Chave hash única
    """
    # A semente não participa: estimativas em cache são reaproveitadas entre sementes
    excluded_keys = ['seed']

    params = {k: v for k, v in sorted(kwargs.items()) if k not in excluded_keys}
    params_str = json.dumps(params, sort_keys=True)

    combined = f"{prefix}::{params_str}"
    return hashlib.md5(combined.encode('utf-8')).hexdigest()
