"""Hand-rolled feed-forward embedding network with triplet-loss training.

Everything is explicit numpy: forward traces, backprop through the three
weight-shared passes of a triplet, and Adam. No autodiff framework is used
so the gradients can be checked against finite differences directly.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"CPRM"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """A model file is malformed or fails its integrity check."""


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: ELU hidden layers, tanh output, inverted dropout on hiddens."""

    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int
    dropout: float = 0.5

    def __post_init__(self) -> None:
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden layer sizes must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim,) + self.hidden + (self.output_dim,)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "output_dim": self.output_dim,
            "dropout": self.dropout,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkSpec":
        return cls(
            input_dim=int(data["input_dim"]),
            hidden=tuple(int(h) for h in data["hidden"]),
            output_dim=int(data["output_dim"]),
            dropout=float(data["dropout"]),
        )


@dataclass
class ModelParams:
    """Per-layer weight matrices (out, in) and bias vectors (out,)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "ModelParams":
        return ModelParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    @property
    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def to_blob(self) -> bytes:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
            parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
        return b"".join(parts)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_blob()).hexdigest()


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> ModelParams:
    """He-normal weights for the ELU hiddens, Glorot-uniform for the tanh output."""
    sizes = spec.layer_sizes
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    last = len(sizes) - 2
    for layer in range(len(sizes) - 1):
        fan_in, fan_out = sizes[layer], sizes[layer + 1]
        if layer == last:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        else:
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return ModelParams(weights=weights, biases=biases)


def elu(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def elu_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))


@dataclass
class ForwardTrace:
    """Everything backprop needs: inputs, pre-activations, activations, masks."""

    inputs: np.ndarray
    zs: list[np.ndarray]
    activations: list[np.ndarray]
    masks: list[np.ndarray] | None

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]


def make_dropout_masks(
    spec: NetworkSpec, batch: int, rng: np.random.Generator
) -> list[np.ndarray] | None:
    """Inverted-dropout masks per hidden layer: keep / (1 - rate), drop zero."""
    if spec.dropout == 0.0 or not spec.hidden:
        return None
    keep = 1.0 - spec.dropout
    return [
        (rng.random((batch, h)) < keep).astype(np.float64) / keep for h in spec.hidden
    ]


def forward_batch(
    params: ModelParams, x: np.ndarray, masks: list[np.ndarray] | None = None
) -> ForwardTrace:
    """Forward pass over a (batch, input_dim) matrix; masks=None means eval mode."""
    a = x
    zs: list[np.ndarray] = []
    acts: list[np.ndarray] = []
    last = len(params.weights) - 1
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        zs.append(z)
        if layer == last:
            a = np.tanh(z)
        else:
            a = elu(z)
            if masks is not None:
                a = a * masks[layer]
        acts.append(a)
    return ForwardTrace(inputs=x, zs=zs, activations=acts, masks=masks)


def embed(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Eval-mode embedding of a single input vector.

    Anchors and candidates must both go through this exact path so that a
    one-card pool embeds bitwise identically to the card itself.
    """
    a = x
    last = len(params.weights) - 1
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = w @ a + b
        a = np.tanh(z) if layer == last else elu(z)
    return a


@dataclass
class Grads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "Grads":
        return cls(
            weights=[np.zeros_like(w) for w in params.weights],
            biases=[np.zeros_like(b) for b in params.biases],
        )

    def add_(self, other: "Grads") -> None:
        for g, o in zip(self.weights, other.weights):
            g += o
        for g, o in zip(self.biases, other.biases):
            g += o


def backward_batch(
    params: ModelParams, trace: ForwardTrace, grad_output: np.ndarray
) -> Grads:
    """Backprop a (batch, output_dim) upstream gradient; grads are summed over rows."""
    n_layers = len(params.weights)
    grads_w: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    grads_b: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    delta = grad_output * (1.0 - trace.activations[-1] ** 2)
    for layer in reversed(range(n_layers)):
        a_prev = trace.inputs if layer == 0 else trace.activations[layer - 1]
        grads_w[layer] = delta.T @ a_prev
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            back = delta @ params.weights[layer]
            if trace.masks is not None:
                back = back * trace.masks[layer - 1]
            delta = back * elu_grad(trace.zs[layer - 1])
    return Grads(weights=grads_w, biases=grads_b)


def euclidean_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b))


def euclidean_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise distances between two (batch, dim) matrices."""
    return np.linalg.norm(a - b, axis=-1)


def triplet_losses(
    ea: np.ndarray, ep: np.ndarray, en: np.ndarray, margin: float
) -> np.ndarray:
    """Hinge on the distance gap: max(d(a,p) - d(a,n) + margin, 0), per row."""
    d_ap = euclidean_distances(ea, ep)
    d_an = euclidean_distances(ea, en)
    return np.maximum(d_ap - d_an + margin, 0.0)


def _safe_unit(diff: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """diff / dist rows, with zero-distance rows mapped to the zero vector."""
    out = np.zeros_like(diff)
    nz = dist > 0
    out[nz] = diff[nz] / dist[nz, None]
    return out


@dataclass
class TripletBatchResult:
    loss: float
    grads: Grads
    active_fraction: float


def triplet_batch_step(
    params: ModelParams,
    spec: NetworkSpec,
    anchors: np.ndarray,
    positives: np.ndarray,
    negatives: np.ndarray,
    margin: float,
    rng: np.random.Generator | None = None,
    train: bool = True,
) -> TripletBatchResult:
    """Mean triplet loss over a batch plus gradients for all shared weights.

    The three inputs each get their own forward pass (independent dropout
    masks when training); gradients from the three passes accumulate into
    one set because the network is shared. Triplets at or below zero loss
    contribute nothing; a zero anchor-positive or anchor-negative distance
    zeroes that branch of the distance gradient.
    """
    batch = anchors.shape[0]
    if batch == 0:
        raise ValueError("empty batch")
    use_masks = train and spec.dropout > 0.0
    if use_masks and rng is None:
        raise ValueError("training with dropout requires an rng")
    traces = []
    for x in (anchors, positives, negatives):
        masks = make_dropout_masks(spec, batch, rng) if use_masks else None
        traces.append(forward_batch(params, x, masks))
    ea, ep, en = (t.output for t in traces)

    diff_ap = ea - ep
    diff_an = ea - en
    d_ap = np.linalg.norm(diff_ap, axis=1)
    d_an = np.linalg.norm(diff_an, axis=1)
    losses = np.maximum(d_ap - d_an + margin, 0.0)
    active = losses > 0.0

    scale = active.astype(np.float64) / batch
    unit_ap = _safe_unit(diff_ap, d_ap) * scale[:, None]
    unit_an = _safe_unit(diff_an, d_an) * scale[:, None]
    grad_ea = unit_ap - unit_an
    grad_ep = -unit_ap
    grad_en = unit_an

    grads = Grads.zeros_like(params)
    for trace, grad_out in zip(traces, (grad_ea, grad_ep, grad_en)):
        grads.add_(backward_batch(params, trace, grad_out))
    return TripletBatchResult(
        loss=float(losses.mean()),
        grads=grads,
        active_fraction=float(active.mean()),
    )


def triplet_batch_loss(
    params: ModelParams,
    anchors: np.ndarray,
    positives: np.ndarray,
    negatives: np.ndarray,
    margin: float,
) -> float:
    """Eval-mode mean loss only (used by the finite-difference check)."""
    ea = forward_batch(params, anchors).output
    ep = forward_batch(params, positives).output
    en = forward_batch(params, negatives).output
    return float(triplet_losses(ea, ep, en, margin).mean())


def grad_check(
    params: ModelParams,
    spec: NetworkSpec,
    anchors: np.ndarray,
    positives: np.ndarray,
    negatives: np.ndarray,
    margin: float = 1.0,
    eps: float = 1e-5,
) -> float:
    """Max relative error between backprop and central finite differences.

    Dropout is disabled so the loss is a deterministic function of the
    parameters. Run this away from the hinge kink (clearly active triplets)
    or the two sides will straddle the non-differentiable point. The
    relative error is floored at 1e-5: the differences themselves carry
    roundoff of order |loss| * machine epsilon / eps, so gradient entries
    smaller than that are compared against the floor rather than their own
    magnitude, which pure measurement noise could otherwise dominate.
    """
    result = triplet_batch_step(
        params, spec, anchors, positives, negatives, margin, train=False
    )
    worst = 0.0
    for analytic_list, param_list in (
        (result.grads.weights, params.weights),
        (result.grads.biases, params.biases),
    ):
        for g_arr, p_arr in zip(analytic_list, param_list):
            for idx in np.ndindex(p_arr.shape):
                orig = p_arr[idx]
                p_arr[idx] = orig + eps
                loss_plus = triplet_batch_loss(
                    params, anchors, positives, negatives, margin
                )
                p_arr[idx] = orig - eps
                loss_minus = triplet_batch_loss(
                    params, anchors, positives, negatives, margin
                )
                p_arr[idx] = orig
                fd = (loss_plus - loss_minus) / (2.0 * eps)
                ga = float(g_arr[idx])
                rel = abs(ga - fd) / max(abs(ga), abs(fd), 1e-5)
                worst = max(worst, rel)
    return worst


# ---------------------------------------------------------------------------
# Optimizer


@dataclass
class AdamState:
    """First/second moment accumulators shaped like the parameters."""

    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    step: int = 0

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(w) for w in params.weights],
            v_w=[np.zeros_like(w) for w in params.weights],
            m_b=[np.zeros_like(b) for b in params.biases],
            v_b=[np.zeros_like(b) for b in params.biases],
        )


def adam_step(
    params: ModelParams,
    grads: Grads,
    state: AdamState,
    lr: float = 1e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One in-place Adam update with bias correction."""
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, v in (
        *zip(params.weights, grads.weights, state.m_w, state.v_w),
        *zip(params.biases, grads.biases, state.m_b, state.v_b),
    ):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        m_hat = m / c1
        v_hat = v / c2
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)


# ---------------------------------------------------------------------------
# Model files


def save_model(
    path: str | Path,
    params: ModelParams,
    spec: NetworkSpec,
    metadata: dict | None = None,
) -> str:
    """Binary model file: magic, version, JSON header, float64 LE parameter blob.

    The header records layer shapes and a sha256 of the blob so corruption
    is detected on load. Returns the parameter fingerprint.
    """
    blob = params.to_blob()
    digest = hashlib.sha256(blob).hexdigest()
    header = {
        "spec": spec.to_dict(),
        "metadata": metadata or {},
        "layers": [
            {"weight": list(w.shape), "bias": list(b.shape)}
            for w, b in zip(params.weights, params.biases)
        ],
        "params_sha256": digest,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        fh.write(blob)
    return digest


def load_model(path: str | Path) -> tuple[ModelParams, NetworkSpec, dict]:
    """Read and verify a model file; raises ModelFormatError on any mismatch."""
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 8 or raw[: len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic)")
    version, header_len = struct.unpack_from("<II", raw, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported format version {version}")
    header_start = len(MAGIC) + 8
    header_end = header_start + header_len
    if len(raw) < header_end:
        raise ModelFormatError(f"{path}: truncated header")
    try:
        header = json.loads(raw[header_start:header_end])
        spec = NetworkSpec.from_dict(header["spec"])
        layers = header["layers"]
        expected_sha = header["params_sha256"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: bad header: {exc}") from exc
    blob = raw[header_end:]
    if hashlib.sha256(blob).hexdigest() != expected_sha:
        raise ModelFormatError(f"{path}: parameter checksum mismatch")
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    offset = 0
    for entry in layers:
        w_shape = tuple(int(s) for s in entry["weight"])
        b_shape = tuple(int(s) for s in entry["bias"])
        w_size = int(np.prod(w_shape)) * 8
        b_size = int(np.prod(b_shape)) * 8
        if offset + w_size + b_size > len(blob):
            raise ModelFormatError(f"{path}: parameter blob shorter than header claims")
        weights.append(
            np.frombuffer(blob, dtype="<f8", count=w_size // 8, offset=offset)
            .reshape(w_shape)
            .copy()
        )
        offset += w_size
        biases.append(
            np.frombuffer(blob, dtype="<f8", count=b_size // 8, offset=offset)
            .reshape(b_shape)
            .copy()
        )
        offset += b_size
    if offset != len(blob):
        raise ModelFormatError(f"{path}: trailing bytes after parameters")
    params = ModelParams(weights=weights, biases=biases)
    sizes = spec.layer_sizes
    for layer, w in enumerate(params.weights):
        if w.shape != (sizes[layer + 1], sizes[layer]):
            raise ModelFormatError(
                f"{path}: layer {layer} weight shape {w.shape} does not match spec"
            )
    return params, spec, dict(header.get("metadata", {}))
