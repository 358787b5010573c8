"""The ParsingGait network.

Frames go through a 9-convolution residual backbone. A global head pools
over time and then over horizontal strips at several pyramid scales; a
cross-part head weights the feature map by each part mask with a per-node
blend factor, pools every region, and mixes node features with a two-layer
graph convolution. Both heads' vectors go through independent per-part
linear maps to form the embedding.
"""
from __future__ import annotations

import numpy as np

from ..autodiff import functional as F
from ..autodiff.nn import BatchNorm, Conv2d, Module
from ..autodiff.tensor import Parameter, ShapeError, Tensor
from ..gps.ops import nearest_indices, one_hot, scalar_encode
from ..partgraph import get_graph, group_masks
from .config import ModelConfig


class BasicBlock(Module):
    def __init__(self, c_in, c_out, stride, rng):
        super().__init__()
        self.conv1 = Conv2d(c_in, c_out, 3, stride, 1, rng=rng, layout="NHWC")
        self.bn1 = BatchNorm(c_out, axis=-1)
        self.conv2 = Conv2d(c_out, c_out, 3, 1, 1, rng=rng, layout="NHWC")
        self.bn2 = BatchNorm(c_out, axis=-1)
        if stride != 1 or c_in != c_out:
            self.down = Conv2d(c_in, c_out, 1, stride, 0, rng=rng, layout="NHWC")
            self.down_bn = BatchNorm(c_out, axis=-1)
        else:
            self.down = None

    def forward(self, x):
        out = F.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        short = self.down_bn(self.down(x)) if self.down is not None else x
        return F.relu(out + short)


class Backbone(Module):
    """Stem conv + four single-block residual stages; stride 2 entering stages 3 and 4.

    Activations are channels-last: (B·N)×H×W×K in, (B·N)×h×w×c out.
    """

    def __init__(self, in_channels, widths, rng):
        super().__init__()
        w0, w1, w2, w3 = widths
        self.stem = Conv2d(in_channels, w0, 3, 1, 1, rng=rng, layout="NHWC")
        self.stem_bn = BatchNorm(w0, axis=-1)
        self.layer1 = BasicBlock(w0, w0, 1, rng)
        self.layer2 = BasicBlock(w0, w1, 1, rng)
        self.layer3 = BasicBlock(w1, w2, 2, rng)
        self.layer4 = BasicBlock(w2, w3, 2, rng)

    def forward(self, x):
        x = F.relu(self.stem_bn(self.stem(x)))
        for layer in (self.layer1, self.layer2, self.layer3, self.layer4):
            x = layer(x)
        return x


def temporal_max(feats: Tensor) -> Tensor:
    """B×N×... -> B×... (max over frames)."""
    if feats.shape[1] == 0:
        raise ShapeError("temporal pooling needs at least one frame")
    return F.max_over(feats, 1)


def horizontal_pyramid_pool(fmap: Tensor, bins) -> Tensor:
    """B×h×w×c -> B×Σbins×c; each strip is max-pool + mean-pool."""
    B, h, w, c = fmap.shape
    strips = []
    for s in bins:
        if h % s:
            raise ShapeError(f"{s} strips do not divide height {h}")
        z = F.reshape(fmap, (B, s, (h // s) * w, c))
        strips.append(F.max_over(z, 2) + F.mean_over(z, 2))
    return F.concat(strips, axis=1)


def regional_features(fmap: Tensor, masks, gamma) -> Tensor:
    """Blend ``gamma*F*M + (1-gamma)*F*(1-M)`` for every node.

    ``fmap`` is ...×h×w×c, ``masks`` ...×C×h×w (binary), ``gamma`` has C
    entries. Returns ...×C×h×w×c.
    """
    masks = masks if isinstance(masks, Tensor) else Tensor(masks, dtype=fmap.dtype)
    if not isinstance(gamma, Tensor):
        gamma = Tensor(np.asarray(gamma, dtype=fmap.dtype).reshape(-1))
    if masks.shape[-2:] != fmap.shape[-3:-1]:
        raise ShapeError(f"mask size {masks.shape[-2:]} != feature size {fmap.shape[-3:-1]}")
    g = F.reshape(gamma, (-1, 1, 1))
    weight = F.mul(g, masks) + F.mul(1.0 - g, 1.0 - masks)
    lead = fmap.shape[:-3]
    f = F.reshape(fmap, lead + (1,) + fmap.shape[-3:])
    return F.mul(f, F.reshape(weight, weight.shape + (1,)))


def regional_pooling(region: Tensor) -> Tensor:
    """...×h×w×c -> ...×c: global spatial max + mean."""
    flat = F.reshape(region, region.shape[:-3] + (-1, region.shape[-1]))
    return F.max_over(flat, -2) + F.mean_over(flat, -2)


def gcn_layer(x: Tensor, adj_norm, weight: Tensor) -> Tensor:
    """relu(Â X W) for X of shape ...×C×c_in."""
    adj = np.asarray(adj_norm.data if isinstance(adj_norm, Tensor) else adj_norm)
    if adj.shape[-1] != x.shape[-2] or weight.shape[0] != x.shape[-1]:
        raise ShapeError(f"gcn shapes: A {adj.shape}, X {x.shape}, W {weight.shape}")
    return F.relu(F.matmul(F.graph_aggregate(adj, x), weight))


class ParsingGait(Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(config.seed)
        c = config.widths[-1]
        self.graph = get_graph(config.part_graph)
        self.backbone = Backbone(config.in_channels, config.widths, rng)
        C = self.graph.num_nodes
        if config.gamma_mode == "learnable":
            self.gamma = Parameter(np.full(C, config.gamma_init))
        else:
            self.gamma = Tensor(np.full(C, config.gamma_mode, dtype=np.float32))
        if config.use_gcn:
            self.gcn1 = Parameter(rng.uniform(-1, 1, (c, c)) * np.sqrt(6.0 / (2 * c)))
            self.gcn2 = Parameter(rng.uniform(-1, 1, (c, c)) * np.sqrt(6.0 / (2 * c)))
        P, d = config.num_parts, config.embedding_dim
        self.fc = Parameter(rng.uniform(-1, 1, (P, c, d)) * np.sqrt(6.0 / (c + d)))
        # BN-neck and identity classifier used by the cross-entropy term
        self.bnneck = BatchNorm(P * d)
        self.classifier = Parameter(rng.standard_normal((P, d, config.num_ids)) * 0.001)
        self._row_idx, self._col_idx = (nearest_indices(config.input_size[0], config.feature_size[0]),
                                        nearest_indices(config.input_size[1], config.feature_size[1]))

    @property
    def dtype(self):
        return self.fc.dtype

    # -- inputs ---------------------------------------------------------------
    def encode_input(self, labels: np.ndarray) -> Tensor:
        """B×N×H×W labels -> (B·N)×H×W×K channels-last tensor."""
        cfg = self.config
        if labels.shape[-2:] != cfg.input_size:
            raise ShapeError(f"input frames are {labels.shape[-2:]}, model expects {cfg.input_size}")
        flat = labels.reshape((-1,) + labels.shape[-2:])
        if cfg.input_encoding == "one_hot":
            x = np.moveaxis(one_hot(flat, cfg.num_classes, dtype=self.dtype), 1, -1)
        else:
            x = np.moveaxis(scalar_encode(flat, cfg.num_classes, dtype=self.dtype), 1, -1)
        return Tensor(np.ascontiguousarray(x), dtype=self.dtype)

    def part_masks(self, labels: np.ndarray) -> np.ndarray:
        """B×N×H×W labels -> B×N×C×h×w node masks at feature resolution."""
        small = labels[..., self._row_idx, :][..., :, self._col_idx]
        return group_masks(small, self.graph, dtype=self.dtype)

    # -- heads ----------------------------------------------------------------
    def global_head(self, feats: Tensor) -> Tensor:
        """B×N×h×w×c -> B×Σbins×c."""
        return horizontal_pyramid_pool(temporal_max(feats), self.config.hpp_bins)

    def cross_part_head(self, feats: Tensor, masks: np.ndarray) -> Tensor:
        """B×N×h×w×c features and B×N×C×h×w masks -> B×C×c."""
        if feats.shape[:2] != masks.shape[:2]:
            raise ShapeError(f"{feats.shape[:2]} feature frames vs {masks.shape[:2]} mask frames")
        x = regional_pooling(regional_features(feats, masks, self.gamma))  # B×N×C×c
        if self.config.use_gcn:
            adj = self.graph.normalized
            x = gcn_layer(x, adj, self.gcn1)
            x = gcn_layer(x, adj, self.gcn2)
        return temporal_max(x)

    def forward(self, labels: np.ndarray, mask_labels: np.ndarray | None = None) -> Tensor:
        """Embed a batch of B sequences of N frames each: returns B×P×d.

        ``mask_labels`` overrides the label maps the cross-part head reads
        (defaults to ``labels``). In silhouette mode both are binarized
        first, so every foreground pixel reads as label 1.
        """
        labels = np.asarray(labels)
        if labels.ndim == 3:
            labels = labels[None]
        B, N = labels.shape[:2]
        mask_labels = labels if mask_labels is None else np.asarray(mask_labels).reshape(labels.shape)
        if self.config.input_mode == "silhouette":
            labels = (labels > 0).astype(np.uint8)
            mask_labels = (mask_labels > 0).astype(np.uint8)
        fmap = self.backbone(self.encode_input(labels))
        feats = F.reshape(fmap, (B, N) + fmap.shape[1:])
        parts = F.concat([self.global_head(feats),
                          self.cross_part_head(feats, self.part_masks(mask_labels))], axis=1)
        emb = F.matmul(F.transpose(parts, (1, 0, 2)), self.fc)     # P×B×d
        return F.transpose(emb, (1, 0, 2))

    def logits(self, emb: Tensor) -> Tensor:
        """B×P×d embeddings -> P×B×num_ids classifier scores (after the BN-neck)."""
        B, P, d = emb.shape
        z = F.reshape(self.bnneck(F.reshape(emb, (B, P * d))), (B, P, d))
        return F.matmul(F.transpose(z, (1, 0, 2)), self.classifier)
