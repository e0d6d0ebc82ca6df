"""Micro convolutional network and class-balanced focal loss.

The network is three 3x3 conv + ReLU + 2x2 maxpool stages (1 -> 16 -> 32
-> 64 channels), global average pooling, and an affine map to the 7 brand
logits: about 24k parameters, float64 throughout, with exact analytic
gradients.  Convolutions run as im2col matrix products; the input
gradient is itself a convolution of the upstream gradient with rotated
kernels, so backprop needs no scatter loops.

The focal loss is the hard-label form -alpha_t (1 - p_t)^gamma ln(p_t);
with gamma = 0 it is exactly weighted cross-entropy.  Class weights come
from inverse sample counts normalized to sum 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyBatch, InputError, ShapeMismatch, TooFewClasses, ZeroCount
from .labels import N_CLASSES
from .spectral import MODEL_BANDS, MODEL_FRAMES, ModelInput

#: Per-brand slice counts of the seven-piano recording set this pipeline
#: was designed around (test split).  compute_alphas on these gives the
#: canonical class weights.
REFERENCE_SLICE_COUNTS = (73, 338, 336, 198, 131, 134, 232)

#: Class-weight vector distributed with the original seven-piano study.
#: The counts behind it are unpublished and it does not equal
#: compute_alphas(REFERENCE_SLICE_COUNTS); it is retained for comparison
#: only and is not used anywhere in this package's computations.
REFERENCE_ALPHAS = (0.3182, 0.0673, 0.0663, 0.1128, 0.1605, 0.1618, 0.1131)

_P_CLAMP = 1e-12

#: Mel images live in [0, 1]; the network subtracts this constant up
#: front so first-layer features are roughly zero-mean, which plain SGD
#: handles much better than an all-positive input.
INPUT_OFFSET = 0.5


@dataclass
class ClassWeights:
    """Normalized per-class weights alpha, summing to 1."""

    alphas: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=np.float64)
        if a.ndim != 1 or a.size < 2:
            raise TooFewClasses(f"need at least 2 classes, got shape {a.shape}")
        if np.any(a < 0) or np.any(a > 1):
            raise InputError("alphas must lie in [0, 1]")
        if abs(a.sum() - 1.0) > 1e-12:
            raise InputError(f"alphas must sum to 1, got {a.sum()!r}")
        self.alphas = a


@dataclass
class FocalLossConfig:
    """Focal loss settings: class weights and the focusing exponent gamma."""

    weights: ClassWeights
    gamma: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise InputError(f"gamma must be non-negative, got {self.gamma}")


@dataclass
class ProbabilityVector:
    """Distribution over the 7 brands; non-negative, sums to 1."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (N_CLASSES,):
            raise ShapeMismatch(f"expected {N_CLASSES} probabilities, got shape {p.shape}")
        if np.any(p < 0):
            raise InputError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise InputError(f"probabilities must sum to 1, got {p.sum()!r}")
        self.probs = p


def compute_alphas(counts) -> ClassWeights:
    """Inverse-frequency class weights: alpha_i = (1/n_i) / sum_j (1/n_j)."""
    c = np.asarray(counts, dtype=np.float64)
    if c.ndim != 1 or c.size < 2:
        raise TooFewClasses(f"need at least 2 class counts, got shape {c.shape}")
    if np.any(c < 1):
        raise ZeroCount("every class count must be >= 1")
    inv = 1.0 / c
    return ClassWeights(alphas=inv / inv.sum())


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def focal_loss(probs: ProbabilityVector, target: int, config: FocalLossConfig) -> float:
    """Hard-label focal loss for one prediction.

    Returns -alpha_target * (1 - p_t)^gamma * ln(p_t) with p_t clamped at
    1e-12 before the log.  gamma = 0 reduces this to weighted
    cross-entropy bit-for-bit, since (1 - p)^0 evaluates to exactly 1.
    """
    alphas = config.weights.alphas
    if not 0 <= target < alphas.size:
        raise InputError(f"target {target} outside 0..{alphas.size - 1}")
    p_t = max(float(probs.probs[target]), _P_CLAMP)
    return float(-alphas[target] * (1.0 - p_t) ** config.gamma * np.log(p_t))


def _focal_terms(p: np.ndarray, targets: np.ndarray, config: FocalLossConfig):
    """Per-sample losses and d(loss)/d(p_t) for a batch of probability rows."""
    alphas = config.weights.alphas
    gamma = config.gamma
    a_t = alphas[targets]
    p_t = np.maximum(p[np.arange(len(targets)), targets], _P_CLAMP)
    one_minus = 1.0 - p_t
    focus = one_minus**gamma
    losses = -a_t * focus * np.log(p_t)
    if gamma == 0.0:
        dloss_dpt = -a_t / p_t
    else:
        # d/dp [-a (1-p)^g ln p] = a g (1-p)^(g-1) ln p - a (1-p)^g / p;
        # at p_t = 1 the loss is flat, so the derivative is 0 there.
        safe = np.where(one_minus > 0.0, one_minus, 1.0)
        dloss_dpt = np.where(
            one_minus > 0.0,
            a_t * gamma * safe ** (gamma - 1.0) * np.log(p_t) - a_t * focus / p_t,
            0.0,
        )
    return losses, dloss_dpt, p_t


class MicroCnn:
    """Three-stage convolutional classifier over 128 x 35 spectrogram images."""

    LAYOUT = (
        ("conv1_w", (16, 1, 3, 3)),
        ("conv1_b", (16,)),
        ("conv2_w", (32, 16, 3, 3)),
        ("conv2_b", (32,)),
        ("conv3_w", (64, 32, 3, 3)),
        ("conv3_b", (64,)),
        ("fc_w", (N_CLASSES, 64)),
        ("fc_b", (N_CLASSES,)),
    )

    def __init__(self, params: dict[str, np.ndarray]):
        for name, shape in self.LAYOUT:
            if name not in params:
                raise ShapeMismatch(f"missing parameter {name}")
            arr = np.asarray(params[name], dtype=np.float64)
            if arr.shape != shape:
                raise ShapeMismatch(f"{name}: expected shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{name} contains non-finite values")
            setattr(self, name, arr)

    @classmethod
    def initialize(cls, rng: np.random.Generator) -> "MicroCnn":
        """He-scaled conv weights, zero biases, near-zero head.

        The small head makes the initial prediction almost uniform, so
        the first gradient steps go into separating classes instead of
        undoing random confident logits.
        """
        params = {}
        for name, shape in cls.LAYOUT:
            if name.endswith("_b"):
                params[name] = np.zeros(shape)
            elif name == "fc_w":
                params[name] = rng.normal(0.0, 0.01, shape)
            else:
                fan_in = int(np.prod(shape[1:]))
                params[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), shape)
        return cls(params)

    @classmethod
    def zeros(cls) -> "MicroCnn":
        return cls({name: np.zeros(shape) for name, shape in cls.LAYOUT})

    def parameters(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name, _ in self.LAYOUT}

    def copy(self) -> "MicroCnn":
        return MicroCnn({k: v.copy() for k, v in self.parameters().items()})

    @property
    def param_count(self) -> int:
        return sum(int(np.prod(shape)) for _, shape in self.LAYOUT)

    # -- forward / backward ------------------------------------------------
    #
    # Activations are kept channels-last (B, H, W, C) internally: im2col
    # columns then come out with good memory locality, conv outputs land
    # contiguous without a transpose, and backward reshapes are free.

    def forward_batch(self, x: np.ndarray):
        """Logits for a batch (B, 1, 128, 35); also returns the cache
        needed by backward_batch."""
        if x.ndim != 4 or x.shape[1:] != (1, MODEL_BANDS, MODEL_FRAMES):
            raise ShapeMismatch(f"expected (B, 1, {MODEL_BANDS}, {MODEL_FRAMES}), got {x.shape}")
        cache = {}
        h = np.ascontiguousarray(x.transpose(0, 2, 3, 1)) - INPUT_OFFSET
        for stage in (1, 2, 3):
            w = getattr(self, f"conv{stage}_w")
            b = getattr(self, f"conv{stage}_b")
            conv, cols = _conv2d_same(h, w, b)
            relu_mask = conv > 0
            act = conv * relu_mask
            pooled, pool_idx, pre_pool_shape = _maxpool2(act)
            cache[f"cols{stage}"] = cols
            cache[f"relu{stage}"] = relu_mask
            cache[f"pool_idx{stage}"] = pool_idx
            cache[f"pre_pool{stage}"] = pre_pool_shape
            h = pooled
        gap = h.mean(axis=(1, 2))
        cache["gap_in_shape"] = h.shape
        cache["gap"] = gap
        logits = gap @ self.fc_w.T + self.fc_b
        return logits, cache

    def backward_batch(self, dlogits: np.ndarray, cache) -> dict[str, np.ndarray]:
        """Parameter gradients given d(loss)/d(logits).

        The input-image gradient is never needed, so stage 1 skips its
        (expensive) input-convolution entirely.
        """
        grads = {}
        gap = cache["gap"]
        grads["fc_w"] = dlogits.T @ gap
        grads["fc_b"] = dlogits.sum(axis=0)
        dgap = dlogits @ self.fc_w

        b, hh, ww, c = cache["gap_in_shape"]
        dh = np.broadcast_to(dgap[:, None, None, :] / (hh * ww), (b, hh, ww, c))

        for stage in (3, 2, 1):
            dact = _maxpool2_backward(dh, cache[f"pool_idx{stage}"], cache[f"pre_pool{stage}"])
            dconv = dact * cache[f"relu{stage}"]
            w = getattr(self, f"conv{stage}_w")
            dw, db, dh = _conv2d_same_backward(dconv, cache[f"cols{stage}"], w, need_dx=stage > 1)
            grads[f"conv{stage}_w"] = dw
            grads[f"conv{stage}_b"] = db
        return grads


def _conv2d_same(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """3x3 stride-1 'same' convolution via im2col, channels-last.

    x is (B, H, W, C_in); w keeps the public (C_out, C_in, 3, 3) layout.
    Returns the output (B, H, W, C_out) and the column matrix
    (B, H*W, C_in*9) cached for the weight gradient.
    """
    bsz, h, wid, c_in = x.shape
    c_out = w.shape[0]
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    view = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(1, 2))
    cols = view.reshape(bsz, h * wid, c_in * 9)  # flattened (c, u, v) per position
    out = cols @ w.reshape(c_out, -1).T + b
    return out.reshape(bsz, h, wid, c_out), cols


def _conv2d_same_backward(dout: np.ndarray, cols: np.ndarray, w: np.ndarray, need_dx: bool = True):
    """Gradients of a 'same' 3x3 convolution (channels-last).

    The weight gradient reuses the forward column matrix.  The input
    gradient accumulates nine shifted GEMMs into a padded buffer, which
    needs no gather at all: each tap contributes dout @ w[:, :, u, v]
    added at offset (u, v).
    """
    bsz, h, wid, c_out = dout.shape
    dflat = dout.reshape(-1, c_out)
    dw = (dflat.T @ cols.reshape(-1, cols.shape[2])).reshape(w.shape)
    db = dflat.sum(axis=0)
    dx = None
    if need_dx:
        c_in = w.shape[1]
        wall = np.ascontiguousarray(w.transpose(0, 2, 3, 1).reshape(c_out, 9 * c_in))
        taps = (dflat @ wall).reshape(bsz, h, wid, 9, c_in)
        dxp = np.zeros((bsz, h + 2, wid + 2, c_in))
        for u in range(3):
            for v in range(3):
                dxp[:, u : u + h, v : v + wid, :] += taps[:, :, :, u * 3 + v, :]
        dx = dxp[:, 1 : 1 + h, 1 : 1 + wid, :]
    return dw, db, dx


def _maxpool2(x: np.ndarray):
    """2x2 stride-2 max pooling; odd trailing rows/columns are dropped.

    Ties go to the first element in block order (argmax convention), which
    keeps the backward routing deterministic.
    """
    b, h, w, c = x.shape
    h2, w2 = h // 2 * 2, w // 2 * 2
    blocks = (
        x[:, :h2, :w2, :]
        .reshape(b, h2 // 2, 2, w2 // 2, 2, c)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(b, h2 // 2, w2 // 2, c, 4)
    )
    idx = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
    return out, idx, (b, h, w, c)


def _maxpool2_backward(dout: np.ndarray, idx: np.ndarray, in_shape):
    b, h, w, c = in_shape
    h2, w2 = h // 2 * 2, w // 2 * 2
    dblocks = np.zeros((b, h2 // 2, w2 // 2, c, 4))
    np.put_along_axis(dblocks, idx[..., None], dout[..., None], axis=-1)
    dx = np.zeros(in_shape)
    dx[:, :h2, :w2, :] = (
        dblocks.reshape(b, h2 // 2, w2 // 2, c, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(b, h2, w2, c)
    )
    return dx


def forward(model: MicroCnn, model_input: ModelInput):
    """Logits and probabilities for one input image."""
    img = np.asarray(model_input.image, dtype=np.float64)
    if img.shape != (MODEL_BANDS, MODEL_FRAMES):
        raise ShapeMismatch(f"expected ({MODEL_BANDS}, {MODEL_FRAMES}), got {img.shape}")
    logits, _ = model.forward_batch(img[None, None])
    return logits[0], ProbabilityVector(probs=softmax(logits[0]))


def batch_loss_and_probs(model: MicroCnn, images: np.ndarray, targets: np.ndarray, config: FocalLossConfig):
    """Mean focal loss and softmax probabilities for a stacked batch."""
    logits, cache = model.forward_batch(images)
    p = softmax(logits)
    losses, _, _ = _focal_terms(p, targets, config)
    return float(losses.mean()), p, logits, cache


def loss_gradients(model: MicroCnn, batch, config: FocalLossConfig):
    """Mean focal loss over a batch and its exact analytic gradients.

    The batch is a list of (ModelInput, target index) pairs; the returned
    dict matches every parameter name of the model.
    """
    if not batch:
        raise EmptyBatch("batch must contain at least one sample")
    images = np.stack([np.asarray(mi.image, dtype=np.float64) for mi, _ in batch])[:, None]
    targets = np.asarray([t for _, t in batch], dtype=np.int64)
    if np.any(targets < 0) or np.any(targets >= config.weights.alphas.size):
        raise InputError("target index out of range")

    logits, cache = model.forward_batch(images)
    p = softmax(logits)
    losses, dloss_dpt, p_t = _focal_terms(p, targets, config)
    loss = float(losses.mean())

    # chain rule through softmax: dz_j = f'(p_t) * p_t * (1[j=t] - p_j)
    n = len(batch)
    onehot = np.zeros_like(p)
    onehot[np.arange(n), targets] = 1.0
    dlogits = (dloss_dpt * p_t)[:, None] * (onehot - p) / n
    grads = model.backward_batch(dlogits, cache)
    return loss, grads
