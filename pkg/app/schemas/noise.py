# app/schemas/noise.py
import hashlib
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class NoiseTarget(BaseModel):
    """Seletor de qubits: arestas de faces/vértices nomeados"""
    kind: Literal["face", "vertex", "intersection", "union", "edge"]
    labels: List[int] = Field(..., min_length=1)

    @model_validator(mode="after")
    def check_arity(self):
        if self.kind == "intersection" and len(self.labels) < 2:
            raise ValueError("intersection precisa de pelo menos duas faces")
        return self

    def __str__(self) -> str:
        return " ".join([self.kind] + [str(label) for label in self.labels])


class NoiseOverride(BaseModel):
    """Ajuste local das probabilidades; add_* soma, set_* fixa o valor"""
    target: NoiseTarget
    add_px: Optional[float] = None
    set_px: Optional[float] = Field(None, ge=0.0, le=1.0)
    add_pz: Optional[float] = None
    set_pz: Optional[float] = Field(None, ge=0.0, le=1.0)

    @field_validator("target", mode="before")
    @classmethod
    def parse_compact_target(cls, value):
        # Aceita a forma compacta "face 4" / "intersection 4 5"
        if isinstance(value, str):
            parts = value.split()
            if len(parts) < 2:
                raise ValueError(f"Seletor inválido: '{value}'")
            try:
                labels = [int(p) for p in parts[1:]]
            except ValueError:
                raise ValueError(f"Seletor inválido: '{value}'")
            return {"kind": parts[0], "labels": labels}
        return value


class NoiseProfile(BaseModel):
    """Perfil de ruído Pauli X/Z por qubit, com ajustes espaciais"""
    name: str = "custom"
    description: Optional[str] = None
    base_px: float = Field(0.0, ge=0.0, le=1.0)
    base_pz: float = Field(0.0, ge=0.0, le=1.0)
    overrides: List[NoiseOverride] = []

    def profile_id(self) -> str:
        """Identificador estável do conteúdo (nome + parâmetros)"""
        payload = self.model_dump_json(exclude={"description"})
        return f"{self.name}:{hashlib.md5(payload.encode('utf-8')).hexdigest()[:12]}"
