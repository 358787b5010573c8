"""Open-set retrieval evaluation and the ablation harness."""
from .ablate import AblationReport, AblationRow, ablate, mask_independence_check, write_report
from .metrics import (EmbeddingSet, MetricsReport, distance_matrix, mean_average_precision,
                      metrics_report, rank_k)
from .pipeline import embed_sequence, evaluate, extract_embeddings

__all__ = [
    "AblationReport", "AblationRow", "ablate", "mask_independence_check", "write_report",
    "EmbeddingSet", "MetricsReport", "distance_matrix", "mean_average_precision",
    "metrics_report", "rank_k", "embed_sequence", "evaluate", "extract_embeddings",
]
