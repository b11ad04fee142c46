# app/cli.py
import argparse
import json
import logging
import time
from importlib import metadata
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from app.config import get_settings
from app.core.estimation import estimate_logical_rate, estimate_union_find_rate, exact_logical_rate
from app.core.exceptions import ConfigError
from app.core.noise import get_profile, pauli_profile
from app.core.topology import ErrorType, apply_action, build_torus_grid, code_distance, enumerate_actions
from app.models.lattice import CodeLattice
from app.schemas.noise import NoiseProfile
from app.schemas.runs import RunManifest
from app.schemas.training import ScenarioConfig
from app.services.environment import (
    COLD_START_ARM,
    MAIN_ARM,
    best_rewarded,
    run_experiment,
    stabilizer_ratio,
    x_stabilizer_fraction,
)
from app.services.explorer import census, explore, explore_frame
from app.services.scenarios import desk_scale, get_scenario
from app.utils.file_formats import (
    census_frame,
    config_digest,
    load_lattice,
    load_profile,
    load_snapshot,
    save_lattice,
    save_manifest,
    save_snapshot,
    write_csv,
)

logger = logging.getLogger(__name__)

TRACKED_PACKAGES = ("numpy", "pandas", "networkx", "pydantic")


def _versions() -> Dict[str, str]:
    versions = {"qecforge": get_settings().version}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def _out_dir(args: argparse.Namespace, command: str) -> Path:
    out = Path(args.out) if args.out else Path(get_settings().output_dir) / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_profile(name_or_path: str) -> NoiseProfile:
    if name_or_path.endswith(".json"):
        return load_profile(name_or_path)
    return get_profile(name_or_path)


def _root(args: argparse.Namespace) -> CodeLattice:
    if getattr(args, "lattice", None):
        return load_lattice(args.lattice)
    return build_torus_grid(args.rows, args.cols)


def _arguments(args: argparse.Namespace) -> Dict[str, object]:
    return {k: v for k, v in vars(args).items() if k != "handler"}


def _finish(command: str, args: argparse.Namespace, out: Path, outputs: List[Path], started: float,
            digest: Optional[str] = None) -> RunManifest:
    arguments = _arguments(args)
    manifest = RunManifest(
        command=command,
        arguments=arguments,
        config_digest=digest or config_digest(RunManifest(command=command, arguments=arguments,
                                                           config_digest="", seed=args.seed)),
        seed=args.seed,
        versions=_versions(),
        outputs=[str(p) for p in outputs],
        wall_time=time.time() - started,
    )
    save_manifest(manifest, out / "manifest.json")
    logger.info(f"{command} concluído em {manifest.wall_time:.1f}s; saídas em {out}")
    return manifest


# ---------------------------------------------------------------------------
# Comandos
# ---------------------------------------------------------------------------

def cmd_census(args: argparse.Namespace) -> int:
    started = time.time()
    counts = census(_root(args), args.depth)
    out = _out_dir(args, "census")
    path = write_csv(census_frame(counts), out / "census.csv")
    for depth, count in enumerate(counts):
        print(f"C({depth}) = {count}")
    _finish("census", args, out, [path], started)
    return 0


def cmd_explore(args: argparse.Namespace) -> int:
    started = time.time()
    profile = _resolve_profile(args.profile)
    nodes = explore(_root(args), profile, args.p_expl, args.radius, args.trials, seed=args.seed)
    out = _out_dir(args, "explore")
    path = write_csv(explore_frame(nodes), out / "explore.csv")
    best = min(nodes, key=lambda n: (n.p_l, n.n_qubits))
    print(f"{len(nodes)} nós avaliados; melhor P_L = {best.p_l:.5f} (nó {best.node_id}, {best.n_qubits} qubits)")
    _finish("explore", args, out, [path], started)
    return 0


def _apply_overrides(cfg: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    if args.desk_scale:
        cfg = desk_scale(cfg, args.agents)
    data = cfg.model_dump()
    data["seed"] = args.seed
    if args.agents is not None:
        data["n_agents"] = args.agents
    for stage in data["stages"]:
        if args.trials is not None:
            stage["trials"] = args.trials
        if args.estimator_trials is not None:
            stage["estimator_trials"] = args.estimator_trials
    # Revalida para que overrides inválidos virem ValidationError
    return ScenarioConfig.model_validate(data)


def cmd_train(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _apply_overrides(get_scenario(args.scenario), args)
    pretrained = load_snapshot(args.pretrained) if args.pretrained else None
    logger.info(f"Cenário {cfg.name}: {cfg.n_agents} agentes, {cfg.total_trials} tentativas")

    result = run_experiment(cfg, pretrained=pretrained, threads=args.threads)
    out = _out_dir(args, f"train-{cfg.name}")
    outputs = [write_csv(result.curve, out / "learning_curve.csv")]

    for arm, snapshots in result.snapshots.items():
        for agent, snapshot in enumerate(snapshots):
            if snapshot is not None:
                outputs.append(save_snapshot(snapshot, out / "networks" / arm / f"agent_{agent:03d}.json"))

    main_records = result.arm_records(MAIN_ARM)
    for rank, record in enumerate(best_rewarded(main_records)):
        if record.final_lattice is not None:
            outputs.append(save_lattice(record.final_lattice, out / "codes" / f"best_{rank}.txt"))
            print(f"#{rank}: +{record.qubits_added} qubits, P_L={record.final_pl:.5f}, "
                  f"ações {record.action_sequence()}")

    summary = {
        "reward_rate": float(pd.Series([r.rewarded for r in main_records], dtype=float).mean()),
        "x_stabilizer_fraction": x_stabilizer_fraction(main_records),
        "stabilizer_ratio": stabilizer_ratio(main_records),
    }
    if COLD_START_ARM in result.snapshots:
        cold = result.arm_records(COLD_START_ARM)
        summary["cold_start_reward_rate"] = float(pd.Series([r.rewarded for r in cold], dtype=float).mean())
    print(json.dumps(summary, indent=2))
    _finish("train", args, out, outputs, started, digest=config_digest(cfg))
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    started = time.time()
    lat = _root(args)
    profile = _resolve_profile(args.profile)
    report = {
        "n_qubits": lat.n_edges,
        "distance_z": code_distance(lat, ErrorType.Z),
        "distance_x": code_distance(lat, ErrorType.X),
    }
    if args.exact:
        report["exact"] = exact_logical_rate(lat, profile, convention=args.convention, mode=args.mode)
    estimate = estimate_logical_rate(lat, profile, trials=args.trials, seed=args.seed,
                                     convention=args.convention, mode=args.mode, threads=args.threads)
    report["estimate"] = estimate.model_dump()
    print(json.dumps(report, indent=2))
    out = _out_dir(args, "estimate")
    path = out / "estimate.json"
    path.write_text(json.dumps(report, indent=2), encoding="utf-8")
    _finish("estimate", args, out, [path], started)
    return 0


def cmd_decode_bench(args: argparse.Namespace) -> int:
    """
    P_L da raiz e de seus filhos por setor, nos dois pipelines: apagamento
    com descascamento (modo decoder) e Union-Find sob ruído Pauli.
    """
    started = time.time()
    if not args.p:
        raise ConfigError("Informe ao menos uma taxa com --p")
    root = _root(args)
    codes = [("root", root)] + [
        (" ".join(str(x) for x in a.key()), apply_action(root, a)) for a in enumerate_actions(root)
    ]
    rows = []
    for p in args.p:
        for code_seed, (code_id, lat) in enumerate(codes):
            for sector in (ErrorType.Z, ErrorType.X):
                # Taxa nula no outro setor: a convenção "any" mede só este
                profile = pauli_profile(0.0, p) if sector == ErrorType.Z else pauli_profile(p, 0.0)
                seed = args.seed + code_seed
                estimates = {
                    "erasure": estimate_logical_rate(lat, profile, trials=args.trials, seed=seed, convention="any",
                                                     mode="decoder", threads=args.threads),
                    "union_find": estimate_union_find_rate(lat, profile, trials=args.trials, seed=seed,
                                                           convention="any", threads=args.threads),
                }
                for pipeline, estimate in estimates.items():
                    rows.append({
                        "code_id": code_id,
                        "n_edges": lat.n_edges,
                        "pipeline": pipeline,
                        "sector": sector.value,
                        "p": p,
                        "trials": estimate.trials,
                        "failures": estimate.failures,
                        "rate": estimate.p_hat,
                        "stderr": estimate.stderr,
                    })
    out = _out_dir(args, "decode-bench")
    path = write_csv(pd.DataFrame(rows), out / "decode_bench.csv")
    print(f"{len(rows)} linhas ({len(codes)} códigos x {len(args.p)} taxas x 2 setores x 2 pipelines)")
    _finish("decode-bench", args, out, [path], started)
    return 0
