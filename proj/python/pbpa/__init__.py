"""Pairwise body-part attention layers: ROI-pairwise pooling, top-k feature
selection, MIL aggregation and a trainable toy pipeline, backed by the C++
core."""

from ._pbpa import (  # noqa: F401
    ContractError,
    Dataset,
    DimensionError,
    GenConfig,
    GenerationError,
    IoError,
    Model,
    ModelConfig,
    NumericError,
    Scene,
    StateError,
    enumerate_pairs,
    generate_dataset,
    generate_scene,
    gradcheck_suite,
    load_dataset,
    pair_index,
    pair_name,
    part_names,
    project_to_feature,
    read_dataset,
    roi_max_pool,
    roi_pairwise_pool,
    select_top_k,
    union_box,
)

__all__ = [
    "ContractError",
    "Dataset",
    "DimensionError",
    "GenConfig",
    "GenerationError",
    "IoError",
    "Model",
    "ModelConfig",
    "NumericError",
    "Scene",
    "StateError",
    "enumerate_pairs",
    "generate_dataset",
    "generate_scene",
    "gradcheck_suite",
    "load_dataset",
    "pair_index",
    "pair_name",
    "part_names",
    "project_to_feature",
    "read_dataset",
    "roi_max_pool",
    "roi_pairwise_pool",
    "select_top_k",
    "union_box",
]
