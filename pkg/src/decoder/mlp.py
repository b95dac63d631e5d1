"""
Fully-connected SDF decoder with hand-written reverse mode.

Layer i computes h_{i+1} = relu(h_i @ W_i + b_i); the last layer has no
rectifier. Input is the concatenation [e_v; e_k].

Model file (little-endian):
    u32 header length | header JSON (sorted keys)
    | u32 blob length | f32 blob: W_0, b_0, W_1, b_1, ..., then latent codes if present

Public API:
- MlpParams (weights, biases, optional latent codes) with .init(...), .widths, .copy()
- forward(params, x) -> (out, activations); backward(params, activations, upstream) -> (MlpGrads, input grad)
- sdf_forward(params, e_v, e_k) / sdf_backward(params, e_v, e_k, upstream)
- predict(params, e_k, e_v=None)
- save_model(params, path, header) / load_model(path) -> (params, header)
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.decoder import config
from src.errors import ConfigError, DimensionMismatchError, InputParseError


@dataclass(eq=False)
class MlpParams:
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    latent: Optional[np.ndarray] = None
    visual_dim: int = 0
    feature_mode: str = "k1"

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ConfigError("weights and biases must be non-empty lists of equal length", field="weights")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionMismatchError(f"layer {i}: weight {w.shape} and bias {b.shape} disagree", field="weights")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise DimensionMismatchError(f"layer {i}: input width {w.shape[0]} != previous output", field="weights")
        if self.weights[-1].shape[1] != 1:
            raise DimensionMismatchError("last layer must have a single output", field="weights")
        if self.visual_dim > self.widths[0]:
            raise DimensionMismatchError("visual_dim exceeds the input width", field="visual_dim")

    @classmethod
    def init(cls, feature_dim: int, rng: np.random.Generator, visual_dim: int = 0,
             hidden: int = config.HIDDEN_WIDTH, layers: int = config.LAYER_COUNT,
             feature_mode: str = "k1") -> "MlpParams":
        """Uniform in +-1/sqrt(fan_in) per layer, drawn layer by layer from rng."""
        widths = [visual_dim + feature_dim] + [hidden] * (layers - 1) + [1]
        weights, biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(weights, biases, visual_dim=visual_dim, feature_mode=feature_mode)

    @property
    def widths(self) -> List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def feature_dim(self) -> int:
        return self.widths[0] - self.visual_dim

    def arrays(self) -> List[np.ndarray]:
        """Parameter arrays in file / optimizer order."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        if self.latent is not None:
            out.append(self.latent)
        return out

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                         None if self.latent is None else self.latent.copy(),
                         self.visual_dim, self.feature_mode)


@dataclass
class MlpGrads:
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    latent: Optional[np.ndarray] = None

    def arrays(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out


def forward(params: MlpParams, x: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """x (N, in) -> output (N,) plus per-layer activations for backward."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.widths[0]:
        raise DimensionMismatchError(f"decoder expects inputs of width {params.widths[0]}, got {x.shape}", field="input")
    acts = [x]
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    return h[:, 0], acts


def backward(params: MlpParams, acts: List[np.ndarray], upstream) -> Tuple[MlpGrads, np.ndarray]:
    """Gradients of sum(upstream * out) w.r.t. every parameter and the input."""
    g = np.asarray(upstream, dtype=np.float64).reshape(-1, 1)
    n_layers = len(params.weights)
    dw: List[np.ndarray] = [None] * n_layers
    db: List[np.ndarray] = [None] * n_layers
    for i in reversed(range(n_layers)):
        dw[i] = acts[i].T @ g
        db[i] = g.sum(axis=0)
        g = g @ params.weights[i].T
        if i > 0:
            g = g * (acts[i] > 0.0)
    return MlpGrads(dw, db), g


def _join(params: MlpParams, e_v, e_k) -> Tuple[np.ndarray, bool]:
    e_k = np.asarray(e_k, dtype=np.float64)
    single = e_k.ndim == 1
    e_k = e_k.reshape(1, -1) if single else e_k
    if params.visual_dim:
        if e_v is None:
            ev = np.zeros((len(e_k), params.visual_dim))
        else:
            ev = np.asarray(e_v, dtype=np.float64)
            if ev.size == 0 or ev.size % params.visual_dim:
                raise DimensionMismatchError(f"e_v must have width {params.visual_dim}", field="e_v")
            ev = ev.reshape(-1, params.visual_dim)
            if len(ev) == 1 and len(e_k) > 1:
                ev = np.repeat(ev, len(e_k), axis=0)
            if len(ev) != len(e_k):
                raise DimensionMismatchError("e_v and e_k batch sizes differ", field="e_v")
        x = np.concatenate([ev, e_k], axis=1)
    else:
        if e_v is not None and np.size(e_v):
            raise DimensionMismatchError("decoder has no visual input but e_v was given", field="e_v")
        x = e_k
    if x.shape[1] != params.widths[0]:
        raise DimensionMismatchError(
            f"feature width {e_k.shape[1]} + visual width {params.visual_dim} != decoder input {params.widths[0]}",
            field="e_k")
    return x, single


def sdf_forward(params: MlpParams, e_v, e_k):
    x, single = _join(params, e_v, e_k)
    out, _ = forward(params, x)
    return float(out[0]) if single else out


def sdf_backward(params: MlpParams, e_v, e_k, upstream=1.0) -> Tuple[MlpGrads, np.ndarray]:
    x, single = _join(params, e_v, e_k)
    _, acts = forward(params, x)
    up = np.broadcast_to(np.asarray(upstream, dtype=np.float64), (len(x),))
    grads, g_in = backward(params, acts, up)
    return grads, (g_in[0] if single else g_in)


def predict(params: MlpParams, e_k: np.ndarray, e_v=None, chunk: int = config.PREDICT_CHUNK) -> np.ndarray:
    e_k = np.asarray(e_k, dtype=np.float64).reshape(len(e_k), -1)
    out = np.empty(len(e_k))
    for s in range(0, len(e_k), chunk):
        part_v = None
        if e_v is not None:
            ev = np.asarray(e_v, dtype=np.float64)
            part_v = ev if ev.ndim == 1 or len(ev) == 1 else ev[s:s + chunk]
        x, _ = _join(params, part_v, e_k[s:s + chunk])
        out[s:s + chunk], _ = forward(params, x)
    return out


def save_model(params: MlpParams, path: str, header: Optional[Dict[str, Any]] = None):
    with open(path, "wb") as f:
        f.write(encode_model(params, header))


def encode_model(params: MlpParams, header: Optional[Dict[str, Any]] = None) -> bytes:
    head = dict(header or {})
    head.update({
        "widths": params.widths,
        "visual_dim": params.visual_dim,
        "feature_mode": params.feature_mode,
        "latent_shapes": 0 if params.latent is None else int(params.latent.shape[0]),
    })
    head_bytes = json.dumps(head, sort_keys=True, separators=(",", ":")).encode("utf-8")
    blob = b"".join(a.astype("<f4").tobytes(order="C") for a in params.arrays())
    return struct.pack("<I", len(head_bytes)) + head_bytes + struct.pack("<I", len(blob)) + blob


def load_model(path: str) -> Tuple[MlpParams, Dict[str, Any]]:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}", file=path)
    try:
        return decode_model(data)
    except InputParseError as e:
        e.file = path
        raise


def decode_model(data: bytes) -> Tuple[MlpParams, Dict[str, Any]]:
    if len(data) < 4:
        raise InputParseError("model file is truncated", field="header")
    (head_len,) = struct.unpack_from("<I", data, 0)
    try:
        head = json.loads(data[4:4 + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InputParseError(f"bad model header: {e}", field="header")
    for key in ("widths", "visual_dim", "feature_mode"):
        if key not in head:
            raise InputParseError(f"model header is missing '{key}'", field=key)
    off = 4 + head_len
    if len(data) < off + 4:
        raise InputParseError("model file is truncated", field="blob")
    (blob_len,) = struct.unpack_from("<I", data, off)
    if len(data) != off + 4 + blob_len or blob_len % 4:
        raise InputParseError("model blob length does not match file size", field="blob")
    blob = np.frombuffer(data, dtype="<f4", count=blob_len // 4, offset=off + 4).astype(np.float64)

    widths = [int(w) for w in head["widths"]]
    shapes = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        shapes += [(fan_in, fan_out), (fan_out,)]
    n_latent = int(head.get("latent_shapes", 0))
    if n_latent:
        shapes.append((n_latent, int(head["visual_dim"])))
    expected = sum(int(np.prod(s)) for s in shapes)
    if len(blob) != expected:
        raise InputParseError(f"model blob holds {len(blob)} values, widths need {expected}", field="blob")

    arrays, pos = [], 0
    for s in shapes:
        size = int(np.prod(s))
        arrays.append(blob[pos:pos + size].reshape(s))
        pos += size
    n_layers = len(widths) - 1
    params = MlpParams(
        weights=[arrays[2 * i] for i in range(n_layers)],
        biases=[arrays[2 * i + 1] for i in range(n_layers)],
        latent=arrays[-1] if n_latent else None,
        visual_dim=int(head["visual_dim"]),
        feature_mode=str(head["feature_mode"]),
    )
    return params, head
