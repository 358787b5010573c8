from .checkpoint import CheckpointError, load_model, save_model
from .config import ModelConfig, backbone_output_size
from .network import (Backbone, ParsingGait, gcn_layer, horizontal_pyramid_pool,
                      regional_features, regional_pooling, temporal_max)

__all__ = ["CheckpointError", "load_model", "save_model", "ModelConfig", "backbone_output_size",
           "Backbone", "ParsingGait", "gcn_layer", "horizontal_pyramid_pool",
           "regional_features", "regional_pooling", "temporal_max"]
