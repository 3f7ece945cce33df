"""Two-layer graph convolutional classifier trained semi-supervised.

Forward pass: softmax(A_hat @ relu(A_hat @ X @ W1) @ W2 @ W3 + b), where
A_hat is the symmetrically normalized adjacency with self-loops and W3/b a
linear head mapping the 16-dim embedding to class logits. Identity features
(X = I) are the default and are handled without materializing the identity.
Training is full-batch Adam on mean cross-entropy over the labeled nodes,
with L2 weight decay applied through the optimizer. Everything is float64
and deterministic given the init seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from pgal.graph import Graph

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

PARAM_BLOCKS = ("w1", "w2", "w3", "b")


@dataclass(frozen=True)
class GcnHyper:
    hidden_dim: int = 32
    embed_dim: int = 16
    learning_rate: float = 0.02
    weight_decay: float = 0.005
    epochs: int = 200
    init_seed: int = 0

    def __post_init__(self):
        if self.hidden_dim < 1 or self.embed_dim < 1:
            raise ValueError("layer dimensions must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class Model:
    """Trained parameters plus the training graph's normalized adjacency."""

    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    b: np.ndarray
    adj_norm: sp.csr_matrix
    feature_dim: int
    class_count: int
    final_loss: float

    @property
    def params(self) -> dict:
        return {"w1": self.w1, "w2": self.w2, "w3": self.w3, "b": self.b}


def normalize_adjacency(g: Graph) -> sp.csr_matrix:
    """Symmetric normalization with self-loops over the weighted adjacency."""
    adj = g.adjacency(weighted=True) + sp.identity(g.n, format="csr")
    deg = np.asarray(adj.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    scale = sp.diags(inv_sqrt)
    return sp.csr_matrix(scale @ adj @ scale)


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(feature_dim: int, class_count: int, hyper: GcnHyper) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence(hyper.init_seed))
    return {
        "w1": _glorot(rng, feature_dim, hyper.hidden_dim),
        "w2": _glorot(rng, hyper.hidden_dim, hyper.embed_dim),
        "w3": _glorot(rng, hyper.embed_dim, class_count),
        "b": np.zeros(class_count),
    }


def _log_softmax(z):
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _forward(params, adj, features):
    # identity features: X @ W1 == W1
    xw1 = params["w1"] if features is None else features @ params["w1"]
    s1 = adj @ xw1
    h1 = np.maximum(s1, 0.0)
    s2 = adj @ (h1 @ params["w2"])
    logits = s2 @ params["w3"] + params["b"]
    return s1, h1, s2, logits


def loss_and_grads(params: dict, adj: sp.csr_matrix, features,
                   labeled_idx: np.ndarray, labeled_y: np.ndarray):
    """Mean cross-entropy over labeled nodes and its analytic gradients."""
    s1, h1, s2, logits = _forward(params, adj, features)
    logp = _log_softmax(logits)
    m = labeled_idx.size
    loss = -logp[labeled_idx, labeled_y].sum() / m

    dlogits = np.zeros_like(logits)
    probs = np.exp(logp[labeled_idx])
    probs[np.arange(m), labeled_y] -= 1.0
    dlogits[labeled_idx] = probs / m

    db = dlogits.sum(axis=0)
    dw3 = s2.T @ dlogits
    ds2 = dlogits @ params["w3"].T
    dh1w2 = adj @ ds2          # adj is symmetric
    dw2 = h1.T @ dh1w2
    dh1 = dh1w2 @ params["w2"].T
    ds1 = dh1 * (s1 > 0.0)
    dxw1 = adj @ ds1
    dw1 = dxw1 if features is None else features.T @ dxw1
    return loss, {"w1": dw1, "w2": dw2, "w3": dw3, "b": db}


def train(g: Graph, labeled: Mapping[int, int], hyper: GcnHyper) -> Model:
    """Train from scratch on the labeled node -> class mapping."""
    if not labeled:
        raise ValueError("labeled set must be nonempty")
    labeled_idx = np.asarray(sorted(labeled), dtype=np.int64)
    if labeled_idx.min() < 0 or labeled_idx.max() >= g.n:
        raise ValueError("labeled node index out of range")
    labeled_y = np.asarray([labeled[int(i)] for i in labeled_idx], dtype=np.int64)
    if (labeled_y < 0).any() or (labeled_y >= g.class_count).any():
        raise ValueError("labeled class out of range")

    adj = normalize_adjacency(g)
    features = g.features
    params = init_params(g.feature_dim, g.class_count, hyper)

    m_state = {k: np.zeros_like(v) for k, v in params.items()}
    v_state = {k: np.zeros_like(v) for k, v in params.items()}
    loss = np.nan
    for t in range(1, hyper.epochs + 1):
        loss, grads = loss_and_grads(params, adj, features, labeled_idx, labeled_y)
        if not np.isfinite(loss):
            raise RuntimeError(f"non-finite training loss ({loss}) at epoch {t}")
        for k in PARAM_BLOCKS:
            gk = grads[k] + hyper.weight_decay * params[k]
            m_state[k] = ADAM_BETA1 * m_state[k] + (1 - ADAM_BETA1) * gk
            v_state[k] = ADAM_BETA2 * v_state[k] + (1 - ADAM_BETA2) * gk * gk
            m_hat = m_state[k] / (1 - ADAM_BETA1 ** t)
            v_hat = v_state[k] / (1 - ADAM_BETA2 ** t)
            params[k] = params[k] - hyper.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)

    return Model(params["w1"], params["w2"], params["w3"], params["b"],
                 adj, g.feature_dim, g.class_count, float(loss))


def predict_distributions(model: Model, g: Graph) -> np.ndarray:
    """Row-stochastic (n, c) prediction matrix on g with the trained weights."""
    if g.feature_dim != model.feature_dim:
        raise ValueError(f"feature width mismatch: model {model.feature_dim}, graph {g.feature_dim}")
    if g.class_count != model.class_count:
        raise ValueError("class count mismatch between model and graph")
    adj = normalize_adjacency(g)
    _, _, _, logits = _forward(model.params, adj, g.features)
    return np.exp(_log_softmax(logits))


def save_model(model: Model, path) -> None:
    """Checkpoint as JSON: shape header plus flat parameter blocks.

    {"format": "pgal-gcn-v1", "feature_dim": d, "class_count": c,
     "blocks": {name: {"shape": [...], "data": [...]}}}
    The normalized adjacency is not stored; supply a graph when loading.
    """
    blocks = {k: {"shape": list(v.shape), "data": v.ravel().tolist()}
              for k, v in model.params.items()}
    doc = {"format": "pgal-gcn-v1",
           "feature_dim": model.feature_dim,
           "class_count": model.class_count,
           "final_loss": model.final_loss,
           "blocks": blocks}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path, g: Graph) -> Model:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "pgal-gcn-v1":
        raise ValueError("unrecognized checkpoint format")
    if doc["feature_dim"] != g.feature_dim or doc["class_count"] != g.class_count:
        raise ValueError("checkpoint does not match the supplied graph")
    params = {}
    for k in PARAM_BLOCKS:
        blk = doc["blocks"][k]
        params[k] = np.asarray(blk["data"], dtype=np.float64).reshape(blk["shape"])
    return Model(params["w1"], params["w2"], params["w3"], params["b"],
                 normalize_adjacency(g), g.feature_dim, g.class_count,
                 float(doc.get("final_loss", np.nan)))
