# app/utils/file_formats.py
import hashlib
import json
import logging
from pathlib import Path
from typing import List, Union

import pandas as pd
from pydantic import BaseModel, ValidationError

from app.config import CSV_SCHEMA_VERSION
from app.core.exceptions import ConfigError
from app.core.topology import check_invariants
from app.models.lattice import CodeLattice
from app.schemas.noise import NoiseProfile
from app.schemas.runs import RunManifest
from app.schemas.training import NetworkSnapshot

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

LATTICE_HEADER = "torus-code v1"
SCHEMA_LINE = f"# csv_schema_version={CSV_SCHEMA_VERSION}"


def _ensure_parent(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# Reticulados
# ---------------------------------------------------------------------------

def dump_lattice(lat: CodeLattice) -> str:
    lines = [LATTICE_HEADER, f"darts {lat.n_darts}"]
    for d in range(lat.n_darts):
        lines.append(
            f"{d} {lat.opposite[d]} {lat.next_around_vertex[d]} {lat.vertex_of[d]} {lat.face_of[d]} {lat.edge_of[d]}"
        )
    lines.append(f"initial_qubits {lat.n_initial_qubits}")
    return "\n".join(lines) + "\n"


def parse_lattice(text: str) -> CodeLattice:
    """
    Lê o formato texto de reticulado e valida os invariantes

    Raises:
        ConfigError: arquivo malformado
        InvariantViolation: mapa inconsistente
    """
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != LATTICE_HEADER:
        raise ConfigError(f"Cabeçalho esperado: '{LATTICE_HEADER}'")
    try:
        tag, count = lines[1].split()
        if tag != "darts":
            raise ValueError(tag)
        n = int(count)
        rows = [[int(x) for x in line.split()] for line in lines[2:2 + n]]
        tag, initial = lines[2 + n].split()
        if tag != "initial_qubits":
            raise ValueError(tag)
    except (IndexError, ValueError) as e:
        raise ConfigError(f"Reticulado malformado: {e}") from e

    if any(len(row) != 6 for row in rows) or [row[0] for row in rows] != list(range(n)):
        raise ConfigError("Cada dart deve ter 'id opposite next vertex face edge', em ordem")
    columns = list(zip(*rows)) if rows else [()] * 6
    lat = CodeLattice(
        opposite=columns[1],
        next_around_vertex=columns[2],
        vertex_of=columns[3],
        face_of=columns[4],
        edge_of=columns[5],
        n_initial_qubits=int(initial),
    )
    check_invariants(lat)
    return lat


def save_lattice(lat: CodeLattice, path: PathLike) -> Path:
    path = _ensure_parent(path)
    path.write_text(dump_lattice(lat), encoding="utf-8")
    return path


def load_lattice(path: PathLike) -> CodeLattice:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Arquivo de reticulado não encontrado: {path}")
    return parse_lattice(path.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# JSON (perfis, redes, manifestos)
# ---------------------------------------------------------------------------

def _load_model(model: type, path: PathLike, what: str):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Arquivo de {what} não encontrado: {path}")
    try:
        return model.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ConfigError(f"{what.capitalize()} inválido em {path}: {e}") from e


def _save_model(item: BaseModel, path: PathLike) -> Path:
    path = _ensure_parent(path)
    path.write_text(item.model_dump_json(indent=2), encoding="utf-8")
    return path


def load_profile(path: PathLike) -> NoiseProfile:
    return _load_model(NoiseProfile, path, "perfil de ruído")


def save_profile(profile: NoiseProfile, path: PathLike) -> Path:
    return _save_model(profile, path)


def load_snapshot(path: PathLike) -> NetworkSnapshot:
    return _load_model(NetworkSnapshot, path, "rede")


def save_snapshot(snapshot: NetworkSnapshot, path: PathLike) -> Path:
    return _save_model(snapshot, path)


def save_manifest(manifest: RunManifest, path: PathLike) -> Path:
    return _save_model(manifest, path)


def config_digest(item: BaseModel) -> str:
    payload = json.dumps(item.model_dump(mode="json"), sort_keys=True)
    return hashlib.md5(payload.encode()).hexdigest()


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    """CSV com linha de versão do esquema no topo"""
    path = _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(SCHEMA_LINE + "\n")
        frame.to_csv(fh, index=False)
    logger.info(f"{len(frame)} linhas gravadas em {path}")
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first != SCHEMA_LINE:
        raise ConfigError(f"{path}: versão de esquema ausente ou incompatível ({first!r})")
    return pd.read_csv(path, comment="#")


def census_frame(counts: List[int]) -> pd.DataFrame:
    return pd.DataFrame({"depth": range(len(counts)), "count": counts})
