"""Audio-visual synchrony evaluation toolkit."""

from ._core import (
    PeavsError,
    bin_score,
    binary_sync_accuracy,
    classify_disagreement,
    extract_features,
    favd_score,
    frechet_distance,
    kind_names,
    krippendorff_alpha,
    make_clip,
    pearson,
    predict_score,
    read_embeddings,
    spearman,
)

__all__ = [
    "PeavsError",
    "bin_score",
    "binary_sync_accuracy",
    "classify_disagreement",
    "extract_features",
    "favd_score",
    "frechet_distance",
    "kind_names",
    "krippendorff_alpha",
    "make_clip",
    "pearson",
    "predict_score",
    "read_embeddings",
    "spearman",
]
