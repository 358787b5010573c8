"""Gait parsing sequences: data model, GPSQ codec, transforms and statistics."""
from .codec import (BadMagicError, CodecError, CRCMismatchError, MalformedStreamError,
                    TruncatedStreamError, decode_gps, encode_gps, read_gps, write_gps)
from .manifest import DatasetManifest, ManifestEntry, ManifestError, Split
from .ops import (LabelHistogram, binarize, binarize_sequence, entropy_bits, label_histogram,
                  one_hot, resize_mask, scalar_encode)
from .render import DEFAULT_PALETTE, render, to_ppm_bytes
from .stats import DatasetStats, dataset_stats
from .types import (MIRROR_LABELS, NUM_CLASSES, PART_NAMES, GaitParsingSequence,
                    InvalidFrameError, ParsingFrame)

__all__ = [
    "BadMagicError", "CodecError", "CRCMismatchError", "MalformedStreamError",
    "TruncatedStreamError", "decode_gps", "encode_gps", "read_gps", "write_gps",
    "DatasetManifest", "ManifestEntry", "ManifestError", "Split",
    "LabelHistogram", "binarize", "binarize_sequence", "entropy_bits", "label_histogram",
    "one_hot", "resize_mask", "scalar_encode", "DEFAULT_PALETTE", "render", "to_ppm_bytes",
    "DatasetStats", "dataset_stats", "MIRROR_LABELS", "NUM_CLASSES", "PART_NAMES",
    "GaitParsingSequence", "InvalidFrameError", "ParsingFrame",
]
