"""k-NN radius out-of-distribution scores over layer embeddings."""

from .errors import KnnOodError
from .knn import KnnIndex, RadiusQueryResult, build_index, unit_ball_volume
from .metrics import (
    HistogramSpec,
    LabeledScores,
    pr_at_threshold,
    radius_histogram,
    roc_auc,
    roc_auc_pairs,
)
from .scoring import (
    DEFAULT_K,
    LayerNormalizer,
    OodScorecard,
    aggregate_statistic,
    classify_threshold,
    estimate_normalizer,
    layer_statistic,
    loo_statistic,
    score_stack,
)
from .tensor_io import (
    EmbeddingMatrix,
    LayerStack,
    load_layer_stack,
    load_matrix,
    parse_csv_matrix,
    parse_emb,
    save_matrix,
    write_csv_matrix,
    write_emb,
)

__version__ = "0.1.0"
