"""Graph-convolutional attribute head.

Nodes are the twelve attribute slots; edges come from a thresholded,
re-weighted co-occurrence matrix.  Stacked graph convolutions turn one-hot
node embeddings into per-attribute classifiers that are applied to the
macroscopic latent by inner product and sigmoid.
"""

import logging

import numpy as np
import torch
from torch import nn

from ..errors import ValidationError

log = logging.getLogger(__name__)

LEAKY_SLOPE = 0.2
DEFAULT_TAU = 0.4
DEFAULT_REWEIGHT = 0.2


def build_correlation_matrix(label_matrix, tau=DEFAULT_TAU, reweight=DEFAULT_REWEIGHT):
    """Row-stochastic co-occurrence graph over attribute columns.

    Conditional frequencies P(j|i) are thresholded at tau (strictly), the
    surviving off-diagonal mass is re-weighted to `reweight` with the
    remainder on the self-loop, and rows are normalized.  Attributes that
    never occur fall back to a pure self-loop.
    """
    labels = np.asarray(label_matrix, dtype=np.float64)
    if labels.ndim != 2 or labels.shape[0] < 1:
        raise ValidationError("label matrix must be (n_samples, n_attributes) with n >= 1")
    if not np.isin(labels, (0.0, 1.0)).all():
        raise ValidationError("label matrix must be binary")
    c = labels.shape[1]
    counts = labels.sum(axis=0)
    cooc = labels.T @ labels
    adj = np.zeros((c, c))
    for i in range(c):
        if counts[i] == 0:
            log.warning("attribute column %d never occurs; using a self-loop only", i)
            continue
        cond = cooc[i] / counts[i]
        keep = cond > tau
        keep[i] = False
        adj[i, keep] = 1.0
    matrix = np.zeros((c, c))
    for i in range(c):
        row_edges = adj[i].sum()
        if row_edges > 0:
            matrix[i] = reweight * adj[i] / row_edges
            matrix[i, i] = 1.0 - reweight
        else:
            matrix[i, i] = 1.0
    matrix /= matrix.sum(axis=1, keepdims=True)
    return matrix


def gcn_forward(h0, correlation, weights, slope=LEAKY_SLOPE):
    """Apply L propagation layers: H <- LeakyReLU(B H W)."""
    h = h0
    for w in weights:
        if h.shape[1] != w.shape[0]:
            raise ValidationError(f"feature dim {h.shape[1]} does not chain into weight {tuple(w.shape)}")
        h = torch.nn.functional.leaky_relu(correlation @ h @ w, negative_slope=slope)
    return h


def predict_attributes(a, node_features):
    """Per-node sigmoid scores of the macroscopic latent: (n, q_a) -> (n, c)."""
    if a.shape[-1] != node_features.shape[-1]:
        raise ValidationError(
            f"latent dim {a.shape[-1]} != node feature dim {node_features.shape[-1]}"
        )
    return torch.sigmoid(a @ node_features.T)


class AttributeGcn(nn.Module):
    """Two propagation layers over one-hot node embeddings, then scoring."""

    def __init__(self, correlation, out_dim, hidden=32, num_layers=2, slope=LEAKY_SLOPE):
        super().__init__()
        correlation = torch.as_tensor(np.asarray(correlation), dtype=torch.float32)
        if correlation.ndim != 2 or correlation.shape[0] != correlation.shape[1]:
            raise ValidationError("correlation matrix must be square")
        c = correlation.shape[0]
        self.num_nodes = c
        self.slope = slope
        self.register_buffer("correlation", correlation)
        self.register_buffer("h0", torch.eye(c))
        dims = [c] + [hidden] * (num_layers - 1) + [out_dim]
        self.weights = nn.ParameterList(
            nn.Parameter(torch.empty(dims[i], dims[i + 1])) for i in range(num_layers)
        )
        for w in self.weights:
            nn.init.xavier_uniform_(w)

    def node_features(self):
        return gcn_forward(self.h0, self.correlation, list(self.weights), self.slope)

    def forward(self, a):
        return predict_attributes(a, self.node_features())
