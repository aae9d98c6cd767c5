"""
Scoring query embeddings across layers
======================================

Each layer's k-NN radius is divided by the mean leave-one-out radius of the
training set, then the normalized radii are averaged over layers.
"""

import tempfile
from pathlib import Path

import numpy as np

from knnood import EmbeddingMatrix, LayerStack, load_layer_stack, save_matrix, score_stack

rng = np.random.default_rng(1)
centers = rng.normal(size=(4, 6)) * 3
labels = rng.integers(0, 4, size=400)
train_l0 = centers[labels] + rng.normal(size=(400, 6))
proj = rng.normal(size=(6, 16))
train_l1 = np.tanh(train_l0 @ proj / 4)

# 20 in-distribution queries, then 20 drawn far from every center
q_in = centers[rng.integers(0, 4, size=20)] + rng.normal(size=(20, 6))
q_out = rng.normal(size=(20, 6)) * 8
q_l0 = np.vstack([q_in, q_out])
q_l1 = np.tanh(q_l0 @ proj / 4)

# round-trip through the two file formats
tmp = Path(tempfile.mkdtemp())
save_matrix(EmbeddingMatrix(train_l0), tmp / "train_l0.csv")
save_matrix(EmbeddingMatrix(train_l1), tmp / "train_l1.emb")
save_matrix(EmbeddingMatrix(q_l0), tmp / "query_l0.csv")
save_matrix(EmbeddingMatrix(q_l1), tmp / "query_l1.emb")
train = load_layer_stack([tmp / "train_l0.csv", tmp / "train_l1.emb"])
queries = load_layer_stack([tmp / "query_l0.csv", tmp / "query_l1.emb"])

card = score_stack(train, queries, k=1, threshold=2.0)
print("normalizers:", [round(nm.q_hat, 4) for nm in card.normalizers])
print("in  :", card.aggregate_T[:20].round(2))
print("out :", card.aggregate_T[20:].round(2))
print("flagged in/out:", card.verdicts[:20].sum(), card.verdicts[20:].sum())

# scores do not depend on the units of a layer
scaled = LayerStack(tuple(EmbeddingMatrix(m.values * 100) for m in train.layers))
qscaled = LayerStack(tuple(EmbeddingMatrix(m.values * 100) for m in queries.layers))
print(np.allclose(score_stack(scaled, qscaled).aggregate_T, score_stack(train, queries).aggregate_T))

print(card.to_csv()[:300])
