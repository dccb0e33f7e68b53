"""Poincare-ball face anti-spoofing toolkit.

Thin Python surface over the C++ core: ball geometry, training losses,
evaluation metrics, the synthetic taxonomy generator, a gradient checker,
and the full command-line entry point.
"""

from hypball._core import (
    DegenerateInputError,
    DomainError,
    ParseError,
    ProtocolError,
    SchemaError,
    TrainingError,
    UsageError,
    acer,
    ball_radius,
    binary_cross_entropy,
    cli_run,
    clip_to_ball,
    conformal_factor,
    contrastive_loss,
    distance_loss,
    eer,
    exp_map,
    exp_map_origin,
    generate_synthetic,
    gradcheck,
    hter_fixed,
    hyp_distance,
    log_map_origin,
    mobius_add,
    roc_auc,
    threshold_at_bpcer,
)

__all__ = [
    "DegenerateInputError",
    "DomainError",
    "ParseError",
    "ProtocolError",
    "SchemaError",
    "TrainingError",
    "UsageError",
    "acer",
    "ball_radius",
    "binary_cross_entropy",
    "cli_run",
    "clip_to_ball",
    "conformal_factor",
    "contrastive_loss",
    "distance_loss",
    "eer",
    "exp_map",
    "exp_map_origin",
    "generate_synthetic",
    "gradcheck",
    "hter_fixed",
    "hyp_distance",
    "log_map_origin",
    "mobius_add",
    "roc_auc",
    "threshold_at_bpcer",
]
