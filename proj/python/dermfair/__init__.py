"""Skin-tone audit, preprocessing, graph-cut segmentation and evaluation metrics."""

from ._core import (
    DermfairError,
    analyze,
    cls_scores,
    compute_ita,
    eval_transform,
    glcm_features,
    ita_to_fitzpatrick,
    max_flow,
    preprocess,
    read_manifest,
    rgb_to_ycbcr,
    roc_auc,
    seg_scores,
    segment,
    skin_mask,
    srgb_to_lab,
    ssim,
    validate_synthetic,
)

__all__ = [
    "DermfairError",
    "analyze",
    "cls_scores",
    "compute_ita",
    "eval_transform",
    "glcm_features",
    "ita_to_fitzpatrick",
    "max_flow",
    "preprocess",
    "read_manifest",
    "rgb_to_ycbcr",
    "roc_auc",
    "seg_scores",
    "segment",
    "skin_mask",
    "srgb_to_lab",
    "ssim",
    "validate_synthetic",
]
