"""Skip connections and degenerate manifolds in deep networks."""

from ._deglab import (
    DeglabError,
    config_digest,
    degraded_skip,
    derive_seed,
    designed_skip,
    elimination_check,
    emit_plot_data,
    estimate_moments_dense,
    fit_mixture,
    load_campaign,
    mixture_moments,
    mode_strength_rhs,
    normalize_config,
    numerical_rank,
    overlap_check,
    param_count,
    random_orthogonal,
    run_campaign,
    skew_normal_moments,
    skew_normal_pdf,
    time_to_band,
    two_mode_threshold_iterations,
)

__all__ = [
    "DeglabError",
    "config_digest",
    "degraded_skip",
    "derive_seed",
    "designed_skip",
    "elimination_check",
    "emit_plot_data",
    "estimate_moments_dense",
    "fit_mixture",
    "load_campaign",
    "mixture_moments",
    "mode_strength_rhs",
    "normalize_config",
    "numerical_rank",
    "overlap_check",
    "param_count",
    "random_orthogonal",
    "run_campaign",
    "skew_normal_moments",
    "skew_normal_pdf",
    "time_to_band",
    "two_mode_threshold_iterations",
]
