"""
Deterministic decoder training.

Every step draws a balanced batch (half inside, half outside) of the chosen
target, takes the L1 SDF loss, back-propagates through the decoder and
applies one Adam update. The learning rate is multiplied by `decay_factor`
every `decay_every` epochs. With `latent_dim > 0` and no fixed visual
feature, each shape owns a learned code that is optimized jointly
(auto-decoder); `fit_latent_code` infers a code for a new shape with the
decoder frozen.

`train_joint` trains a hand and an object decoder side by side on the
weighted shape loss, using the configured loss weights.

Public API:
- TrainConfig, TrainingData, TrainResult, JointTrainResult
- Adam
- train(params, data, cfg, latent=False, verbose=False) -> TrainResult
- train_joint(hand_params, obj_params, hand_data, obj_data, cfg, latent=False, verbose=False) -> JointTrainResult
- fit_latent_code(params, features, sdf, steps, lr, seed, reg) -> (code, loss trace)
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.decoder import config
from src.decoder.losses import sdf_losses
from src.decoder.mlp import MlpParams, backward, forward
from src.errors import ConfigError, DimensionMismatchError, DivergenceError
from src.sdfdata.sampling import SampleSet, balanced_indices

FeatureProvider = Callable[[np.ndarray], np.ndarray]


@dataclass
class TrainConfig:
    learning_rate: float = config.LEARNING_RATE
    decay_every: int = config.DECAY_EVERY
    decay_factor: float = config.DECAY_FACTOR
    batch_size: int = config.BATCH_SIZE
    epochs: int = 1
    steps_per_epoch: Optional[int] = None
    seed: int = 0
    target: str = "hand"
    loss_weights: Tuple[float, float, float] = config.LOSS_WEIGHTS
    betas: Tuple[float, float] = config.ADAM_BETAS
    eps: float = config.ADAM_EPS
    latent_reg: float = config.LATENT_REG

    def __post_init__(self):
        if self.learning_rate <= 0 or self.decay_factor <= 0 or self.decay_every <= 0:
            raise ConfigError("learning rate, decay factor and decay period must be positive", field="learning_rate")
        if self.batch_size < 2 or self.batch_size % 2:
            raise ConfigError(f"batch_size must be an even number >= 2, got {self.batch_size}", field="batch_size")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative", field="epochs")
        if self.target not in ("hand", "object"):
            raise ConfigError(f"target must be 'hand' or 'object', got '{self.target}'", field="target")
        if len(self.loss_weights) != 3 or min(self.loss_weights) < 0 or not sum(self.loss_weights[1:]) > 0:
            raise ConfigError("loss_weights must be three non-negative values with a positive SDF weight",
                              field="loss_weights")

    def lr_at(self, epoch: int) -> float:
        return self.learning_rate * self.decay_factor ** (epoch // self.decay_every)

    def to_dict(self) -> Dict:
        d = asdict(self)
        d["loss_weights"] = list(self.loss_weights)
        d["betas"] = list(self.betas)
        return d


@dataclass(eq=False)
class TrainingData:
    """Samples plus their kinematic features (array or provider over sample indices)."""

    samples: SampleSet
    features: Union[np.ndarray, FeatureProvider]
    shape_ids: Optional[np.ndarray] = None
    visual: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.samples)
        if not callable(self.features):
            self.features = np.asarray(self.features, dtype=np.float64)
            if len(self.features) != n:
                raise DimensionMismatchError(f"{len(self.features)} feature rows for {n} samples", field="features")
        if self.shape_ids is None:
            self.shape_ids = np.zeros(n, dtype=np.int64)
        self.shape_ids = np.asarray(self.shape_ids, dtype=np.int64)
        if len(self.shape_ids) != n:
            raise DimensionMismatchError("shape_ids length differs from sample count", field="shape_ids")
        if self.visual is not None:
            self.visual = np.asarray(self.visual, dtype=np.float64)
            if len(self.visual) != n:
                raise DimensionMismatchError("visual feature rows differ from sample count", field="visual")

    @property
    def shape_count(self) -> int:
        return int(self.shape_ids.max()) + 1 if len(self.shape_ids) else 0

    def features_at(self, idx: np.ndarray) -> np.ndarray:
        if callable(self.features):
            return np.asarray(self.features(idx), dtype=np.float64)
        return self.features[idx]


@dataclass(eq=False)
class TrainResult:
    params: MlpParams
    loss_trace: List[float] = field(default_factory=list)
    lr_trace: List[float] = field(default_factory=list)


@dataclass(eq=False)
class JointTrainResult:
    hand_params: MlpParams
    obj_params: MlpParams
    loss_trace: List[float] = field(default_factory=list)      # weighted L_shape per epoch
    hand_trace: List[float] = field(default_factory=list)
    object_trace: List[float] = field(default_factory=list)
    lr_trace: List[float] = field(default_factory=list)


class Adam:
    """Adam over a fixed list of arrays, updated in place."""

    def __init__(self, arrays: Sequence[np.ndarray], betas=config.ADAM_BETAS, eps: float = config.ADAM_EPS):
        self.arrays = list(arrays)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = [np.zeros_like(a) for a in self.arrays]
        self.v = [np.zeros_like(a) for a in self.arrays]
        self.t = 0

    def step(self, grads: Sequence[np.ndarray], lr: float):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for a, g, m, v in zip(self.arrays, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            a -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _inputs(params: MlpParams, data: TrainingData, idx: np.ndarray) -> np.ndarray:
    feats = data.features_at(idx)
    if not params.visual_dim:
        return feats
    if data.visual is not None:
        return np.concatenate([data.visual[idx], feats], axis=1)
    if params.latent is not None:
        return np.concatenate([params.latent[data.shape_ids[idx]], feats], axis=1)
    return np.concatenate([np.zeros((len(idx), params.visual_dim)), feats], axis=1)


def _attach_latent(params: MlpParams, data: TrainingData, latent: bool, rng: np.random.Generator) -> bool:
    learn_latent = latent and params.visual_dim > 0 and data.visual is None
    if learn_latent and params.latent is None:
        params.latent = rng.normal(scale=config.LATENT_INIT_STD, size=(data.shape_count, params.visual_dim))
    return learn_latent


def _optimizer(params: MlpParams, learn_latent: bool, cfg: TrainConfig) -> Adam:
    arrays = [a for pair in zip(params.weights, params.biases) for a in pair]
    if learn_latent:
        arrays.append(params.latent)
    return Adam(arrays, cfg.betas, cfg.eps)


def _batch_gradients(params: MlpParams, data: TrainingData, idx: np.ndarray, target: np.ndarray,
                     weight: float, learn_latent: bool, cfg: TrainConfig) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Batch predictions plus the gradients of weight * L1."""
    pred, acts = forward(params, _inputs(params, data, idx))
    resid = pred - target[idx]
    grads, g_in = backward(params, acts, weight * np.sign(resid) / len(idx))
    grad_list = grads.arrays()
    if learn_latent:
        g_lat = 2.0 * cfg.latent_reg * params.latent
        np.add.at(g_lat, data.shape_ids[idx], g_in[:, :params.visual_dim])
        grad_list.append(g_lat)
    return pred, grad_list


def train(params: MlpParams, data: TrainingData, cfg: TrainConfig, latent: bool = False,
          verbose: bool = False) -> TrainResult:
    """Train a copy of params. latent=True attaches and learns one code per shape."""
    params = params.copy()
    if cfg.epochs == 0:
        return TrainResult(params)

    rng = np.random.default_rng(cfg.seed)
    learn_latent = _attach_latent(params, data, latent, rng)
    opt = _optimizer(params, learn_latent, cfg)

    half = cfg.batch_size // 2
    steps = cfg.steps_per_epoch or max(1, len(data.samples) // cfg.batch_size)
    target = data.samples.sdf(cfg.target)
    result = TrainResult(params)

    if verbose:
        print(f"🚀 Training {cfg.target} decoder: {cfg.epochs} epochs x {steps} steps, batch {cfg.batch_size}")
    for epoch in range(cfg.epochs):
        lr = cfg.lr_at(epoch)
        total = 0.0
        for _ in range(steps):
            idx = balanced_indices(data.samples, half, cfg.target, int(rng.integers(2 ** 31)))
            pred, grad_list = _batch_gradients(params, data, idx, target, 1.0, learn_latent, cfg)
            loss = float(np.mean(np.abs(pred - target[idx])))
            if not np.isfinite(loss):
                raise DivergenceError(f"loss became non-finite at epoch {epoch}", field="loss")
            opt.step(grad_list, lr)
            total += loss
        result.loss_trace.append(total / steps)
        result.lr_trace.append(lr)
        if verbose and (epoch % max(1, cfg.epochs // 10) == 0 or epoch == cfg.epochs - 1):
            print(f"   epoch {epoch + 1}/{cfg.epochs}  L1={result.loss_trace[-1]:.6f}  lr={lr:.2e}")
    if verbose:
        print(f"✅ Training done, final L1={result.loss_trace[-1]:.6f}")
    return result


def train_joint(hand_params: MlpParams, obj_params: MlpParams, hand_data: TrainingData,
                obj_data: TrainingData, cfg: TrainConfig, latent: bool = False,
                verbose: bool = False) -> JointTrainResult:
    """
    Train the hand and object decoders together on the weighted shape loss.

    Each step draws one balanced batch per target from the shared sample set,
    evaluates `sdf_losses` with `cfg.loss_weights` (object centers are given,
    so the center term is zero) and back-propagates the weighted sum into both
    decoders. `cfg.target` is ignored.

    Args:
        hand_params, obj_params: initial decoders; copies are trained.
        hand_data, obj_data: the same samples with hand- and object-mode features.
        cfg: schedule, batch size, seed and loss weights.
        latent: learn one code per shape for each decoder with a visual input.
    """
    if len(hand_data.samples) != len(obj_data.samples):
        raise DimensionMismatchError("hand and object training data must share one sample set", field="samples")
    hand_params, obj_params = hand_params.copy(), obj_params.copy()
    result = JointTrainResult(hand_params, obj_params)
    if cfg.epochs == 0:
        return result

    rng = np.random.default_rng(cfg.seed)
    _, w_h, w_o = cfg.loss_weights
    latent_h = _attach_latent(hand_params, hand_data, latent, rng)
    latent_o = _attach_latent(obj_params, obj_data, latent, rng)
    opt_h = _optimizer(hand_params, latent_h, cfg)
    opt_o = _optimizer(obj_params, latent_o, cfg)

    half = cfg.batch_size // 2
    steps = cfg.steps_per_epoch or max(1, len(hand_data.samples) // cfg.batch_size)
    gt_h, gt_o = hand_data.samples.sdf("hand"), obj_data.samples.sdf("object")

    if verbose:
        print(f"🚀 Training hand + object decoders jointly: {cfg.epochs} epochs x {steps} steps, "
              f"weights {tuple(cfg.loss_weights)}")
    for epoch in range(cfg.epochs):
        lr = cfg.lr_at(epoch)
        totals = np.zeros(3)
        for _ in range(steps):
            idx_h = balanced_indices(hand_data.samples, half, "hand", int(rng.integers(2 ** 31)))
            idx_o = balanced_indices(obj_data.samples, half, "object", int(rng.integers(2 ** 31)))
            pred_h, grads_h = _batch_gradients(hand_params, hand_data, idx_h, gt_h, w_h, latent_h, cfg)
            pred_o, grads_o = _batch_gradients(obj_params, obj_data, idx_o, gt_o, w_o, latent_o, cfg)
            l_h, l_o, l_shape = sdf_losses(pred_h, gt_h[idx_h], pred_o, gt_o[idx_o], 0.0, cfg.loss_weights)
            if not np.isfinite(l_shape):
                raise DivergenceError(f"joint loss became non-finite at epoch {epoch}", field="loss")
            opt_h.step(grads_h, lr)
            opt_o.step(grads_o, lr)
            totals += (l_h, l_o, l_shape)
        l_h, l_o, l_shape = totals / steps
        result.hand_trace.append(float(l_h))
        result.object_trace.append(float(l_o))
        result.loss_trace.append(float(l_shape))
        result.lr_trace.append(lr)
        if verbose and (epoch % max(1, cfg.epochs // 10) == 0 or epoch == cfg.epochs - 1):
            print(f"   epoch {epoch + 1}/{cfg.epochs}  L_shape={l_shape:.6f}  "
                  f"L_hsdf={l_h:.6f}  L_osdf={l_o:.6f}  lr={lr:.2e}")
    if verbose:
        print(f"✅ Joint training done, final L_shape={result.loss_trace[-1]:.6f}")
    return result


def fit_latent_code(params: MlpParams, features: np.ndarray, sdf: np.ndarray,
                    steps: int = config.LATENT_FIT_STEPS, lr: float = config.LATENT_FIT_LR,
                    seed: int = 0, reg: float = config.LATENT_REG) -> Tuple[np.ndarray, List[float]]:
    """Optimize a single code for one shape against (features, sdf) with the decoder frozen."""
    if not params.visual_dim:
        raise ConfigError("decoder has no visual input to fit a code for", field="visual_dim")
    features = np.asarray(features, dtype=np.float64)
    sdf = np.asarray(sdf, dtype=np.float64).reshape(-1)
    if len(features) != len(sdf) or len(sdf) == 0:
        raise DimensionMismatchError("features and sdf must be non-empty and equally long", field="sdf")

    rng = np.random.default_rng(seed)
    code = rng.normal(scale=config.LATENT_INIT_STD, size=params.visual_dim)
    opt = Adam([code])
    trace = []
    for _ in range(steps):
        x = np.concatenate([np.broadcast_to(code, (len(sdf), params.visual_dim)), features], axis=1)
        pred, acts = forward(params, x)
        resid = pred - sdf
        loss = float(np.mean(np.abs(resid)))
        if not np.isfinite(loss):
            raise DivergenceError("latent fit loss became non-finite", field="loss")
        _, g_in = backward(params, acts, np.sign(resid) / len(sdf))
        opt.step([g_in[:, :params.visual_dim].sum(axis=0) + 2.0 * reg * code], lr)
        trace.append(loss)
    return code, trace
