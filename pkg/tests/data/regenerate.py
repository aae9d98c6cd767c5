"""Rebuild the shipped fixtures and golden outputs.

Run from the repository root only when a format change is intended:

    python tests/data/regenerate.py
"""

from pathlib import Path

import numpy as np

from knnood.cli import main
from knnood.tensor_io import EmbeddingMatrix, save_matrix

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"

SYNTH_COMMANDS = {
    "synth_t1.csv": ["synth", "t1", "--n", "4000", "--k", "150", "--trials", "4", "--seed", "17"],
    "synth_ranking.csv": ["synth", "ranking", "--n", "3000", "--pairs", "100", "--seed", "17"],
    "synth_contraction.csv": ["synth", "contraction", "--n", "3000", "--pairs", "100", "--trials", "3", "--seed", "17"],
    "synth_ballmass.csv": ["synth", "ballmass", "--n", "20000", "--k", "60", "--balls", "150", "--seed", "17"],
}

SCORE_COMMAND = [
    "score",
    "--train", str(HERE / "train_l0.csv"), str(HERE / "train_l1.emb"),
    "--query", str(HERE / "query_l0.csv"), str(HERE / "query_l1.emb"),
    "--k", "1", "--threshold", "1.5",
]


def fixtures():
    rng = np.random.default_rng(2021)
    centers = rng.normal(size=(3, 3)) * 4
    labels = rng.integers(0, 3, size=30)
    train_l0 = centers[labels] + rng.normal(size=(30, 3))
    proj = rng.normal(size=(3, 5))
    train_l1 = np.tanh(train_l0 @ proj)
    query_l0 = np.vstack([centers[rng.integers(0, 3, size=5)] + rng.normal(size=(5, 3)),
                          rng.normal(size=(3, 3)) * 8])
    query_l1 = np.tanh(query_l0 @ proj)
    save_matrix(EmbeddingMatrix(np.round(train_l0, 6)), HERE / "train_l0.csv")
    save_matrix(EmbeddingMatrix(train_l1), HERE / "train_l1.emb")
    save_matrix(EmbeddingMatrix(np.round(query_l0, 6)), HERE / "query_l0.csv")
    save_matrix(EmbeddingMatrix(query_l1), HERE / "query_l1.emb")
    (HERE / "tiny_train.csv").write_text("x\n0\n1\n3\n")
    (HERE / "tiny_query.csv").write_text("x\n2\n")


if __name__ == "__main__":
    fixtures()
    main(SCORE_COMMAND + ["--out", str(GOLDEN / "scorecard.csv")])
    for name, argv in SYNTH_COMMANDS.items():
        main(argv + ["--out", str(GOLDEN / name)])
