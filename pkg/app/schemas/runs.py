# app/schemas/runs.py
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field


class RunManifest(BaseModel):
    """Metadados gravados ao lado de toda saída, suficientes para repetir a execução"""
    command: str
    arguments: Dict[str, object] = {}
    config_digest: str
    seed: int
    versions: Dict[str, str] = {}
    outputs: List[str] = []
    wall_time: float = 0.0
    csv_schema_version: int = 1


class ExploreNode(BaseModel):
    """Nó da árvore de busca explorada"""
    node_id: int
    parent_id: Optional[int] = None
    depth: int = Field(..., ge=0)
    action: Optional[Tuple[int, int, int, int]] = None
    n_qubits: int
    digest: str
    p_l: float
    stderr: float
