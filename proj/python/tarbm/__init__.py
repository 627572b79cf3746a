"""Temporal autoencoding RBMs with TRBM and CRBM baselines.

Arrays are float64 numpy matrices with one frame per row. Model settings are
the same ``key = value`` pairs the command-line tool reads from config files,
passed as a dict of strings.
"""

from ._core import (
    CapacityError,
    DomainError,
    Model,
    ParseError,
    ShapeError,
    bench,
    contrast_normalize,
    covariance,
    exact_log_likelihood,
    filter_grid,
    forward_projection,
    free_energy,
    joint_energy,
    rbm_energy,
    synth,
    temporal_variation_rank,
    train,
    whiten,
)

__all__ = [
    "CapacityError",
    "DomainError",
    "Model",
    "ParseError",
    "ShapeError",
    "bench",
    "contrast_normalize",
    "covariance",
    "exact_log_likelihood",
    "filter_grid",
    "forward_projection",
    "free_energy",
    "joint_energy",
    "rbm_energy",
    "synth",
    "temporal_variation_rank",
    "train",
    "whiten",
]
