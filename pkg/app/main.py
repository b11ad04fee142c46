# app/main.py
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app import cli
from app.config import EXIT_CONFIG, FAILURE_CONVENTIONS, FAILURE_MODES, get_settings
from app.core.exceptions import QecForgeError
from app.core.noise import list_profiles
from app.services.scenarios import list_scenarios

logger = logging.getLogger(__name__)


def _common(parser: argparse.ArgumentParser, lattice: bool = True) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="Diretório de saída")
    parser.add_argument("--threads", type=int, default=None)
    if lattice:
        parser.add_argument("--rows", type=int, default=3)
        parser.add_argument("--cols", type=int, default=3)
        parser.add_argument("--lattice", default=None, help="Arquivo 'torus-code v1' usado como raiz")


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog=settings.project_name, description=settings.description)
    parser.add_argument("--log-level", default=settings.log_level)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("census", help="Conta sequências de ações até uma profundidade")
    _common(p)
    p.add_argument("--depth", type=int, default=3)
    p.set_defaults(handler=cli.cmd_census)

    p = sub.add_parser("explore", help="Exploração aleatória da árvore de códigos")
    _common(p)
    p.add_argument("--profile", default="dephasing-0.1", help=f"Perfil ({', '.join(list_profiles())}) ou .json")
    p.add_argument("--p-expl", type=float, default=1.0)
    p.add_argument("--radius", type=int, default=1)
    p.add_argument("--trials", type=int, default=None, help="Amostras por nó")
    p.set_defaults(handler=cli.cmd_explore)

    p = sub.add_parser("train", help="Treina um conjunto de agentes PS")
    _common(p, lattice=False)
    p.add_argument("scenario", help=f"Cenário ({', '.join(list_scenarios())}) ou .json")
    p.add_argument("--agents", type=int, default=None)
    p.add_argument("--trials", type=int, default=None, help="Tentativas por fase")
    p.add_argument("--estimator-trials", type=int, default=None)
    p.add_argument("--desk-scale", action="store_true")
    p.add_argument("--pretrained", default=None, help="Rede salva (.json) que substitui a primeira fase")
    p.set_defaults(handler=cli.cmd_train)

    p = sub.add_parser("estimate", help="Estima P_L de um reticulado")
    _common(p)
    p.add_argument("--profile", default="dephasing-0.1")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--convention", choices=FAILURE_CONVENTIONS, default=None)
    p.add_argument("--mode", choices=FAILURE_MODES, default=None)
    p.add_argument("--exact", action="store_true", help="Também calcula o valor exato (até 20 qubits)")
    p.set_defaults(handler=cli.cmd_estimate)

    p = sub.add_parser("decode-bench", help="Union-Find sob ruído Pauli na raiz e nos filhos")
    _common(p)
    p.add_argument("--p", type=float, nargs="+", default=[0.01, 0.03, 0.05])
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(handler=cli.cmd_decode_bench)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    # Configurar logging
    logging.basicConfig(
        level=args.log_level.upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    logger.info(f"{get_settings().project_name} {get_settings().version}: {args.command}")

    try:
        return args.handler(args)
    except QecForgeError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except ValidationError as e:
        logger.error(f"Configuração inválida: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
