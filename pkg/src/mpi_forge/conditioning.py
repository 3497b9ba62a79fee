"""Desk-scale reference implementation of the conditioning network pieces.

Pure numpy float64 forwards with hand-derived backwards, verified against
central finite differences. This is deliberately not a trainer: the point
is to pin the numerical contracts of the building blocks that inject an
MPI stack into a denoising UNet:

* a 1x1 convolutional encoder (receptive field 1, no downsampling) over
  plane-stacked label channels,
* scaled dot-product attention,
* residual cross-view / cross-frame mixing whose neighbor contributions
  are gated by zero-initialized scalars, so at initialization the mix is
  exactly the identity and a pretrained backbone is undisturbed,
* the reweighed mean-squared denoising objective.

Tensors are plain float64 ndarrays, row-major, at most 4 axes, finite.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ValidationError

__all__ = [
    "Conv1x1Params",
    "NeighborParams",
    "AttentionParams",
    "init_encoder",
    "init_attention_params",
    "one_hot_planes",
    "embed_labels",
    "mpi_encode",
    "add_condition",
    "attention",
    "cross_view_mix",
    "cross_frame_mix",
    "reweighed_loss",
    "finite_diff_gradcheck",
    "run_gradchecks",
    "GradcheckResult",
]

_UNKNOWN_ROW = 17  # embedding row for label 255


def as_dense(x, name: str = "tensor") -> np.ndarray:
    """Coerce to a finite float64 array of at most 4 axes."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim > 4:
        raise ValidationError(f"{name} has {arr.ndim} axes, at most 4 supported")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# label -> channel conversion


def one_hot_planes(slab: np.ndarray, num_classes: int = 17) -> np.ndarray:
    """Expand a D x H x W label slab to (D * num_classes) x H x W one-hot
    channels, plane-major. Label 255 encodes as the all-zero vector."""
    slab = np.asarray(slab)
    d, h, w = slab.shape
    out = np.zeros((d, num_classes, h, w), dtype=np.float64)
    for c in range(num_classes):
        out[:, c][slab == c] = 1.0
    return out.reshape(d * num_classes, h, w)


def embed_labels(slab: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Map labels through a per-class embedding table, plane-major.

    ``table`` has one row per class id 0..16 plus a final row for the
    unknown label 255; output shape is (D * embed_dim) x H x W. This keeps
    the encoder input at D * embed_dim channels instead of D * 17.
    """
    table = as_dense(table, "embedding table")
    if table.shape[0] != _UNKNOWN_ROW + 1:
        raise ValidationError(f"embedding table needs {_UNKNOWN_ROW + 1} rows, got {table.shape[0]}")
    slab = np.asarray(slab)
    d, h, w = slab.shape
    idx = np.where(slab == 255, _UNKNOWN_ROW, slab).astype(np.int64)
    emb = table[idx]  # (D, H, W, e)
    return np.moveaxis(emb, 3, 1).reshape(d * table.shape[1], h, w)


def init_embedding(num_dims: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((_UNKNOWN_ROW + 1, num_dims)) / np.sqrt(num_dims)


# ---------------------------------------------------------------------------
# 1x1 convolutional encoder


@dataclass(frozen=True)
class Conv1x1Params:
    """One 1x1 conv layer: weight (out_ch, in_ch), bias (out_ch,)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = as_dense(self.weight, "conv weight")
        b = as_dense(self.bias, "conv bias")
        if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise ValidationError(f"conv param shapes {w.shape} / {b.shape} inconsistent")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


def init_encoder(channels: list[int], rng: np.random.Generator) -> list[Conv1x1Params]:
    """He-style initialization for a chain of 1x1 conv + ReLU layers."""
    layers = []
    for c_in, c_out in zip(channels[:-1], channels[1:]):
        w = rng.standard_normal((c_out, c_in)) * np.sqrt(2.0 / c_in)
        layers.append(Conv1x1Params(weight=w, bias=np.zeros(c_out)))
    return layers


def encode_forward(x: np.ndarray, layers: list[Conv1x1Params]):
    """Chain of per-pixel affine maps + ReLU; returns (features, cache).

    features[i] is the output of layer i, all at the input's spatial size
    (receptive field 1, no downsampling). The multi-scale list is what a
    conditioned decoder would consume stage by stage.
    """
    x = as_dense(x, "encoder input")
    if x.ndim != 3:
        raise ValidationError(f"encoder input must be C x H x W, got shape {x.shape}")
    feats = []
    pre = []
    cur = x
    for i, layer in enumerate(layers):
        if layer.weight.shape[1] != cur.shape[0]:
            raise ValidationError(
                f"layer {i} expects {layer.weight.shape[1]} channels, got {cur.shape[0]}"
            )
        z = np.einsum("oc,chw->ohw", layer.weight, cur) + layer.bias[:, None, None]
        cur = np.maximum(z, 0.0)
        pre.append(z)
        feats.append(cur)
    cache = (x, feats, pre, layers)
    return feats, cache


def encode_backward(dfeats: list[np.ndarray], cache):
    """Backward through the chain.

    ``dfeats[i]`` is the upstream gradient on features[i] (zeros array or
    None when a scale is unused). Returns (dx, [(dweight, dbias), ...]).
    """
    x, feats, pre, layers = cache
    dlayers: list[tuple[np.ndarray, np.ndarray]] = [None] * len(layers)
    dcur = np.zeros_like(feats[-1])
    for i in range(len(layers) - 1, -1, -1):
        if dfeats[i] is not None:
            dcur = dcur + dfeats[i]
        dz = dcur * (pre[i] > 0)
        below = x if i == 0 else feats[i - 1]
        dw = np.einsum("ohw,chw->oc", dz, below)
        db = dz.sum(axis=(1, 2))
        dlayers[i] = (dw, db)
        dcur = np.einsum("oc,ohw->chw", layers[i].weight, dz)
    return dcur, dlayers


def mpi_encode(x: np.ndarray, layers: list[Conv1x1Params]) -> list[np.ndarray]:
    """Multi-scale features of the 1x1 encoder (forward only)."""
    feats, _ = encode_forward(x, layers)
    return feats


def add_condition(features: np.ndarray, latent: np.ndarray) -> np.ndarray:
    """Inject conditioning features into a latent by elementwise addition."""
    features = as_dense(features, "features")
    latent = as_dense(latent, "latent")
    if features.shape != latent.shape:
        raise ValidationError(f"shape mismatch {features.shape} vs {latent.shape}")
    return features + latent


# ---------------------------------------------------------------------------
# scaled dot-product attention


def attention_forward(q: np.ndarray, k: np.ndarray, v: np.ndarray):
    """softmax(q k^T / sqrt(d)) v with a row-stable softmax; returns
    (output, cache). q is (t_q, d); k and v are (t_k, d)."""
    q = as_dense(q, "q")
    k = as_dense(k, "k")
    v = as_dense(v, "v")
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ValidationError("attention operands must be token x dim matrices")
    d = q.shape[1]
    if d == 0:
        raise ValidationError("attention dimension d must be positive")
    if k.shape[1] != d or v.shape[0] != k.shape[0]:
        raise ValidationError(
            f"incompatible attention shapes q{q.shape} k{k.shape} v{v.shape}"
        )
    scores = q @ k.T / np.sqrt(d)
    scores = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    weights = e / e.sum(axis=1, keepdims=True)
    out = weights @ v
    return out, (q, k, v, weights)


def attention_backward(dout: np.ndarray, cache):
    """Gradients (dq, dk, dv) of attention for upstream gradient dout."""
    q, k, v, weights = cache
    d = q.shape[1]
    dv = weights.T @ dout
    dweights = dout @ v.T
    # softmax Jacobian: dS = W * (dW - rowsum(dW * W))
    dscores = weights * (dweights - (dweights * weights).sum(axis=1, keepdims=True))
    dq = dscores @ k / np.sqrt(d)
    dk = dscores.T @ q / np.sqrt(d)
    return dq, dk, dv


def attention(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    out, _ = attention_forward(q, k, v)
    return out


# ---------------------------------------------------------------------------
# gated residual mixing across neighbor views / frames


@dataclass(frozen=True)
class NeighborParams:
    """Projections and output gate for one neighbor stream."""

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    gate: float = 0.0


@dataclass(frozen=True)
class AttentionParams:
    """Parameters of a two-neighbor residual mix (left/right or
    future/history). Gates start at exactly zero so the op is the
    identity at initialization."""

    first: NeighborParams
    second: NeighborParams


def init_attention_params(d: int, rng: np.random.Generator) -> AttentionParams:
    def neighbor():
        scale = 1.0 / np.sqrt(d)
        return NeighborParams(
            wq=rng.standard_normal((d, d)) * scale,
            wk=rng.standard_normal((d, d)) * scale,
            wv=rng.standard_normal((d, d)) * scale,
            gate=0.0,
        )

    return AttentionParams(first=neighbor(), second=neighbor())


def _mix_forward(h_in, h_first, h_second, params: AttentionParams):
    h_in = as_dense(h_in, "h_in")
    h_first = as_dense(h_first, "first neighbor")
    h_second = as_dense(h_second, "second neighbor")
    if h_in.ndim != 2 or h_first.shape[1:] != h_in.shape[1:] or h_second.shape[1:] != h_in.shape[1:]:
        raise ValidationError(
            f"mix operands must share the feature dim: {h_in.shape}, {h_first.shape}, {h_second.shape}"
        )
    yields = []
    for h_n, p in ((h_first, params.first), (h_second, params.second)):
        q = h_in @ p.wq
        k = h_n @ p.wk
        v = h_n @ p.wv
        term, att_cache = attention_forward(q, k, v)
        yields.append((term, att_cache, h_n, p))
    t1, t2 = yields[0][0], yields[1][0]
    g1, g2 = params.first.gate, params.second.gate
    if g1 == 0.0 and g2 == 0.0:
        out = h_in.copy()  # identity at init, bit-exact
    else:
        out = h_in + g1 * t1 + g2 * t2
    return out, (h_in, yields)


def _mix_backward(dout: np.ndarray, cache):
    """Returns (dh_in, dh_first, dh_second, dparams) where dparams mirrors
    AttentionParams with gradient arrays and float gate gradients."""
    h_in, yields = cache
    dh_in = dout.copy()
    dh_neighbors = []
    dneighbor_params = []
    for term, att_cache, h_n, p in yields:
        dterm = p.gate * dout
        dgate = float(np.sum(dout * term))
        dq, dk, dv = attention_backward(dterm, att_cache)
        dwq = h_in.T @ dq
        dwk = h_n.T @ dk
        dwv = h_n.T @ dv
        dh_in += dq @ p.wq.T
        dh_n = dk @ p.wk.T + dv @ p.wv.T
        dh_neighbors.append(dh_n)
        dneighbor_params.append(NeighborParams(wq=dwq, wk=dwk, wv=dwv, gate=dgate))
    dparams = AttentionParams(first=dneighbor_params[0], second=dneighbor_params[1])
    return dh_in, dh_neighbors[0], dh_neighbors[1], dparams


def cross_view_mix(h_in, h_left, h_right, params: AttentionParams) -> np.ndarray:
    """Residual attention over the left and right neighbor views:

        h_out = h_in + g_l * Attention(h_in Wq_l, h_l Wk_l, h_l Wv_l)
                     + g_r * Attention(h_in Wq_r, h_r Wk_r, h_r Wv_r)

    With both gates at their zero initialization, h_out equals h_in
    exactly.
    """
    out, _ = _mix_forward(h_in, h_left, h_right, params)
    return out


def cross_frame_mix(h_in, h_future, h_history, params: AttentionParams) -> np.ndarray:
    """Same contract as cross_view_mix with the neighbor set
    {future frame, history frame}."""
    out, _ = _mix_forward(h_in, h_future, h_history, params)
    return out


# ---------------------------------------------------------------------------
# reweighed denoising objective


def reweighed_loss(pred_noise, true_noise, weight_map) -> float:
    """Mean over elements of weight * squared error.

    ``weight_map`` is H x W and broadcasts over any leading channel axes
    of the noise tensors; weights must be nonnegative.
    """
    value, _ = reweighed_loss_forward(pred_noise, true_noise, weight_map)
    return value


def reweighed_loss_forward(pred_noise, true_noise, weight_map):
    pred = as_dense(pred_noise, "predicted noise")
    true = as_dense(true_noise, "true noise")
    w = as_dense(weight_map, "weight map")
    if pred.shape != true.shape:
        raise ValidationError(f"noise shapes differ: {pred.shape} vs {true.shape}")
    if pred.shape[-w.ndim:] != w.shape:
        raise ValidationError(f"weight map {w.shape} does not broadcast over {pred.shape}")
    if np.any(w < 0):
        raise ValidationError("weights must be nonnegative")
    diff = pred - true
    value = float(np.sum(w * diff * diff) / pred.size)
    return value, (diff, w, pred.size)


def reweighed_loss_backward(dvalue: float, cache):
    """Gradient w.r.t. the predicted noise (true noise gets the negative)."""
    diff, w, size = cache
    dpred = dvalue * 2.0 * w * diff / size
    return dpred


# ---------------------------------------------------------------------------
# finite-difference gradient checking


def finite_diff_gradcheck(
    value_and_grads: Callable[[list[np.ndarray]], tuple[float, list[np.ndarray]]],
    arrays: list[np.ndarray],
    h: float = 1e-5,
) -> float:
    """Max relative error between analytic gradients and central differences.

    ``value_and_grads(arrays)`` returns a scalar objective and one
    gradient array per input array. Every element of every array is
    perturbed by +-h; the relative error of an element is
    |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    if not (h > 0):
        raise ValidationError(f"step size h must be positive, got {h}")
    arrays = [np.array(a, dtype=np.float64) for a in arrays]
    _, grads = value_and_grads(arrays)
    worst = 0.0
    for ai, base in enumerate(arrays):
        flat = base.reshape(-1)
        for j in range(flat.size):
            saved = flat[j]
            flat[j] = saved + h
            up, _ = value_and_grads(arrays)
            flat[j] = saved - h
            down, _ = value_and_grads(arrays)
            flat[j] = saved
            numeric = (up - down) / (2.0 * h)
            analytic = float(grads[ai].reshape(-1)[j])
            err = abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))
            worst = max(worst, err)
    return worst


@dataclass(frozen=True)
class GradcheckResult:
    op: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def _case_encode(rng: np.random.Generator):
    c0, c1, c2, hh, ww = 3, 4, 2, 2, 3
    # keep preactivations away from the ReLU kink so central differences
    # see a smooth function
    for _ in range(200):
        x = rng.standard_normal((c0, hh, ww))
        layers = [
            Conv1x1Params(rng.standard_normal((c1, c0)), rng.standard_normal(c1)),
            Conv1x1Params(rng.standard_normal((c2, c1)), rng.standard_normal(c2)),
        ]
        _, cache = encode_forward(x, layers)
        if min(np.min(np.abs(z)) for z in cache[2]) > 1e-3:
            break
    proj = [rng.standard_normal((c1, hh, ww)), rng.standard_normal((c2, hh, ww))]

    def f(arrays):
        x_, w1, b1, w2, b2 = arrays
        lys = [Conv1x1Params(w1, b1), Conv1x1Params(w2, b2)]
        feats, cache = encode_forward(x_, lys)
        value = sum(float(np.sum(p * f_)) for p, f_ in zip(proj, feats))
        dx, dlayers = encode_backward(list(proj), cache)
        grads = [dx]
        for dw, db in dlayers:
            grads.extend([dw, db])
        return value, grads

    arrays = [x, layers[0].weight, layers[0].bias, layers[1].weight, layers[1].bias]
    return f, arrays


def _case_attention(rng: np.random.Generator):
    tq, tk, d = 3, 4, 4
    q = rng.standard_normal((tq, d))
    k = rng.standard_normal((tk, d))
    v = rng.standard_normal((tk, d))
    proj = rng.standard_normal((tq, d))

    def f(arrays):
        q_, k_, v_ = arrays
        out, cache = attention_forward(q_, k_, v_)
        value = float(np.sum(proj * out))
        dq, dk, dv = attention_backward(proj, cache)
        return value, [dq, dk, dv]

    return f, [q, k, v]


def _mix_case(rng: np.random.Generator, zero_gates: bool):
    t, d = 3, 4
    h_in = rng.standard_normal((t, d))
    h_a = rng.standard_normal((t, d))
    h_b = rng.standard_normal((t, d))
    params = init_attention_params(d, rng)
    if not zero_gates:
        params = AttentionParams(
            first=replace(params.first, gate=float(rng.uniform(0.5, 1.5))),
            second=replace(params.second, gate=float(rng.uniform(0.5, 1.5))),
        )
    proj = rng.standard_normal((t, d))

    def f(arrays):
        hi, ha, hb, wq1, wk1, wv1, g1, wq2, wk2, wv2, g2 = arrays
        p = AttentionParams(
            first=NeighborParams(wq1, wk1, wv1, float(g1)),
            second=NeighborParams(wq2, wk2, wv2, float(g2)),
        )
        out, cache = _mix_forward(hi, ha, hb, p)
        value = float(np.sum(proj * out))
        dhi, dha, dhb, dp = _mix_backward(proj, cache)
        return value, [
            dhi, dha, dhb,
            dp.first.wq, dp.first.wk, dp.first.wv, np.array(dp.first.gate),
            dp.second.wq, dp.second.wk, dp.second.wv, np.array(dp.second.gate),
        ]

    arrays = [
        h_in, h_a, h_b,
        params.first.wq, params.first.wk, params.first.wv, np.array(params.first.gate),
        params.second.wq, params.second.wk, params.second.wv, np.array(params.second.gate),
    ]
    return f, arrays


def _case_loss(rng: np.random.Generator):
    pred = rng.standard_normal((2, 3, 3))
    true = rng.standard_normal((2, 3, 3))
    w = rng.uniform(0.0, 4.0, size=(3, 3))

    def f(arrays):
        p, t = arrays
        value, cache = reweighed_loss_forward(p, t, w)
        dpred = reweighed_loss_backward(1.0, cache)
        return value, [dpred, -dpred]

    return f, [pred, true]


_CASES = {
    "mpi_encode": lambda rng: _case_encode(rng),
    "attention": lambda rng: _case_attention(rng),
    "cross_view_mix": lambda rng: _mix_case(rng, zero_gates=False),
    "cross_view_mix_zero_gate": lambda rng: _mix_case(rng, zero_gates=True),
    "cross_frame_mix": lambda rng: _mix_case(rng, zero_gates=False),
    "reweighed_loss": lambda rng: _case_loss(rng),
}


def run_gradchecks(
    seed: int = 0, cases: int = 20, h: float = 1e-5, tol: float = 1e-4
) -> list[GradcheckResult]:
    """Gradcheck every op over ``cases`` seeded random instances each."""
    results = []
    for name, builder in _CASES.items():
        worst = 0.0
        for i in range(cases):
            rng = np.random.default_rng(seed * 10_000 + i)
            f, arrays = builder(rng)
            worst = max(worst, finite_diff_gradcheck(f, arrays, h=h))
        results.append(GradcheckResult(op=name, max_rel_error=worst, tolerance=tol))
    return results
