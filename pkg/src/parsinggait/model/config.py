from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields


def backbone_output_size(h: int, w: int) -> tuple[int, int]:
    """Spatial size after the two stride-2 stages (3×3 kernels, padding 1)."""
    for _ in range(2):
        h = (h - 1) // 2 + 1
        w = (w - 1) // 2 + 1
    return h, w


@dataclass
class ModelConfig:
    input_size: tuple = (64, 44)
    input_encoding: str = "one_hot"         # or "scalar"
    input_mode: str = "parsing"             # "silhouette" collapses labels to {0, 1} first
    num_classes: int = 12
    widths: tuple = (32, 64, 128, 256)
    hpp_bins: tuple = (1, 2, 4, 8, 16)
    part_graph: str = "coarse"              # or "fine"
    use_gcn: bool = True
    gamma_mode: object = "learnable"        # or a fixed float
    gamma_init: float = 0.75
    embedding_dim: int = 128
    num_ids: int = 1
    seed: int = 0

    def __post_init__(self):
        self.input_size = tuple(int(v) for v in self.input_size)
        self.widths = tuple(int(v) for v in self.widths)
        self.hpp_bins = tuple(int(v) for v in self.hpp_bins)
        if self.input_encoding not in ("one_hot", "scalar"):
            raise ValueError(f"unknown input_encoding {self.input_encoding!r}")
        if self.input_mode not in ("parsing", "silhouette"):
            raise ValueError(f"unknown input_mode {self.input_mode!r}")
        if self.part_graph not in ("fine", "coarse"):
            raise ValueError(f"part_graph must be 'fine' or 'coarse', got {self.part_graph!r}")
        if len(self.widths) != 4:
            raise ValueError("widths lists the four residual stages")
        if self.embedding_dim <= 0 or self.num_ids < 1:
            raise ValueError("embedding_dim and num_ids must be positive")
        if self.gamma_mode != "learnable":
            self.gamma_mode = float(self.gamma_mode)
        h, _ = self.feature_size
        bad = [b for b in self.hpp_bins if b <= 0 or h % b]
        if bad:
            raise ValueError(f"hpp bins {bad} do not divide the feature height {h}")

    @property
    def feature_size(self):
        return backbone_output_size(*self.input_size)

    @property
    def in_channels(self):
        return self.num_classes if self.input_encoding == "one_hot" else 1

    @property
    def num_nodes(self):
        return 11 if self.part_graph == "fine" else 5

    @property
    def num_parts(self):
        return sum(self.hpp_bins) + self.num_nodes

    def to_dict(self):
        d = asdict(self)
        d["input_size"] = list(self.input_size)
        d["widths"] = list(self.widths)
        d["hpp_bins"] = list(self.hpp_bins)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)
