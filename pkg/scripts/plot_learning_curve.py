# scripts/plot_learning_curve.py
"""
Gráfico da curva de aprendizado gravada por `train`.

Uso: python scripts/plot_learning_curve.py runs/train-dephasing/learning_curve.csv [saida.png]
"""
import logging
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from app.utils.file_formats import read_csv  # noqa: E402

logger = logging.getLogger(__name__)


def plot(csv_path: str, out_path: str) -> None:
    curve = read_csv(csv_path)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for arm, group in curve.groupby("arm"):
        x = group["trial_index"]
        mean, std = group["mean_qubits"], group["std_qubits"]
        ax.plot(x, mean, label=arm, linewidth=1)
        ax.fill_between(x, mean - std, mean + std, alpha=0.2)
    ax.set_xlabel("tentativa")
    ax.set_ylabel("qubits adicionados")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    logger.info(f"Gráfico salvo em {out_path}")


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    source = sys.argv[1]
    target = sys.argv[2] if len(sys.argv) > 2 else str(Path(source).with_suffix(".png"))
    plot(source, target)
