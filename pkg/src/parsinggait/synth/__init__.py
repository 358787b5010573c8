"""Procedural synthetic gait parsing datasets."""
from .dataset import (SynthConfig, camera_table, generate_dataset, generate_sequence, make_split,
                      sequence_name, subject_name)
from .walker import (FigureOutOfBoundsError, IdentityProfile, Occlusion, Viewpoint,
                     generate_identity, pose_shapes, render_pose, render_walk_sequence)

__all__ = [
    "SynthConfig", "camera_table", "generate_dataset", "generate_sequence", "make_split",
    "sequence_name", "subject_name", "FigureOutOfBoundsError", "IdentityProfile", "Occlusion",
    "Viewpoint", "generate_identity", "pose_shapes", "render_pose", "render_walk_sequence",
]
