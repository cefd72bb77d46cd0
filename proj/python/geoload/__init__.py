"""Graph-convolutional day-ahead load forecasting with Shapley location importance."""

from ._core import (
    Dataset,
    GeoloadError,
    Location,
    Model,
    RunConfig,
    build_adjacency,
    composite,
    exact_shapley,
    explain,
    forecast,
    generate_masks,
    kernel_weight,
    load_dataset,
    load_model,
    mae,
    mape,
    min_mask_count,
    normalize,
    save_dataset,
    solve_wls,
    spatial_weights,
    stratified_metrics,
    synthesize,
    synthetic_grid,
    train,
)

__all__ = [
    "Dataset",
    "GeoloadError",
    "Location",
    "Model",
    "RunConfig",
    "build_adjacency",
    "composite",
    "exact_shapley",
    "explain",
    "forecast",
    "generate_masks",
    "kernel_weight",
    "load_dataset",
    "load_model",
    "mae",
    "mape",
    "min_mask_count",
    "normalize",
    "save_dataset",
    "solve_wls",
    "spatial_weights",
    "stratified_metrics",
    "synthesize",
    "synthetic_grid",
    "train",
]
