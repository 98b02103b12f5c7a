"""Minimal feed-forward MLP: software training plus crossbar-backed inference.

Training is plain backprop with Adam on binary cross-entropy. The crossbar
inference path quantizes each layer's weights once, maps the levels onto the
device's resistance range, routes every layer matmul through the tiled
crossbar simulation, and applies biases and activations digitally.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import crossbar, quantizer
from .device import default_profile

ACTIVATIONS = ("sigmoid", "relu", "none")


class TrainingDivergedError(RuntimeError):
    pass


class CalibrationOverflowWarning(UserWarning):
    """An input fell outside its layer's calibration range (still encoded linearly)."""


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError("unknown activation %r" % self.activation)


@dataclass
class Mlp:
    layers: list

    def __post_init__(self):
        for prev, cur in zip(self.layers, self.layers[1:]):
            if cur.weights.shape[1] != prev.weights.shape[0]:
                raise ValueError("layer dimensions do not chain")

    @property
    def input_size(self):
        return self.layers[0].weights.shape[1]

    @property
    def output_size(self):
        return self.layers[-1].weights.shape[0]


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 2000
    batch_size: int = 0  # 0 = full batch
    loss: str = "binary-cross-entropy"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.loss != "binary-cross-entropy":
            raise ValueError("unsupported loss %r" % self.loss)


@dataclass
class CrossbarInferenceConfig:
    n_states: int = 4
    tile_rows: int = 4
    tile_cols: int = 4
    profile: object = field(default_factory=default_profile)
    calibrations: list = None  # per-layer (x_min, x_max); None = assume [0, 1] everywhere
    seed: int = 0
    systematic_redraw: str = "per_call"


def init_mlp(dims, activations, seed=0):
    """Fresh network; He-scaled normals for relu layers, Glorot otherwise."""
    if len(activations) != len(dims) - 1:
        raise ValueError("need one activation per layer")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, act in zip(dims[:-1], dims[1:], activations):
        if act == "relu":
            std = math.sqrt(2.0 / fan_in)
        else:
            std = math.sqrt(2.0 / (fan_in + fan_out))
        layers.append(
            Layer(
                weights=std * rng.standard_normal((fan_out, fan_in)),
                biases=np.zeros(fan_out),
                activation=act,
            )
        )
    return Mlp(layers)


def _activate(z, kind):
    if kind == "sigmoid":
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if kind == "relu":
        return np.maximum(z, 0.0)
    return z


def forward(model, x):
    """Software forward pass; accepts a vector or a (batch, features) matrix."""
    a = np.asarray(x, dtype=np.float64)
    single = a.ndim == 1
    if single:
        a = a[None, :]
    if a.shape[1] != model.input_size:
        raise ValueError(
            "input size %d does not match network input %d" % (a.shape[1], model.input_size)
        )
    for layer in model.layers:
        a = _activate(a @ layer.weights.T + layer.biases, layer.activation)
    return a[0] if single else a


def _forward_trace(model, xs):
    """Forward pass keeping pre-activations and activations for backprop."""
    zs, acts = [], [xs]
    a = xs
    for layer in model.layers:
        z = a @ layer.weights.T + layer.biases
        a = _activate(z, layer.activation)
        zs.append(z)
        acts.append(a)
    return zs, acts


def bce_loss(outputs, targets):
    p = np.clip(outputs, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p)))


def loss_and_gradients(model, xs, targets):
    """Mean BCE loss and its gradients w.r.t. every weight and bias.

    Output layers must be sigmoid (the BCE/sigmoid pair keeps the output
    delta linear in the error).
    """
    if model.layers[-1].activation != "sigmoid":
        raise ValueError("binary cross-entropy requires a sigmoid output layer")
    zs, acts = _forward_trace(model, xs)
    loss = bce_loss(acts[-1], targets)
    count = targets.size
    delta = (acts[-1] - targets) / count
    grads = []
    for li in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[li]
        grads.append((delta.T @ acts[li], delta.sum(axis=0)))
        if li > 0:
            delta = delta @ layer.weights
            prev = model.layers[li - 1]
            if prev.activation == "sigmoid":
                delta = delta * acts[li] * (1.0 - acts[li])
            elif prev.activation == "relu":
                delta = delta * (zs[li - 1] > 0)
    grads.reverse()
    return loss, grads


def train(model, inputs, targets, config):
    """Adam on mini-batch BCE gradients; returns (trained model, epoch losses).

    Deterministic for a given config.seed. Raises TrainingDivergedError if
    the loss goes non-finite.
    """
    xs = np.asarray(inputs, dtype=np.float64)
    ts = np.asarray(targets, dtype=np.float64)
    if ts.ndim == 1:
        ts = ts[:, None]
    if xs.shape[0] != ts.shape[0] or xs.shape[0] == 0:
        raise ValueError("inputs and targets must be non-empty and aligned")
    layers = [Layer(l.weights.copy(), l.biases.copy(), l.activation) for l in model.layers]
    net = Mlp(layers)
    m_w = [np.zeros_like(l.weights) for l in layers]
    v_w = [np.zeros_like(l.weights) for l in layers]
    m_b = [np.zeros_like(l.biases) for l in layers]
    v_b = [np.zeros_like(l.biases) for l in layers]
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon
    rng = np.random.default_rng(config.seed)
    n = xs.shape[0]
    batch = config.batch_size if config.batch_size > 0 else n
    history = []
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for lo in range(0, n, batch):
            sel = order[lo:lo + batch]
            loss, grads = loss_and_gradients(net, xs[sel], ts[sel])
            if not math.isfinite(loss):
                raise TrainingDivergedError("loss became non-finite")
            epoch_loss += loss
            n_batches += 1
            step += 1
            corr1 = 1.0 - b1 ** step
            corr2 = 1.0 - b2 ** step
            for li, (gw, gb) in enumerate(grads):
                m_w[li] = b1 * m_w[li] + (1 - b1) * gw
                v_w[li] = b2 * v_w[li] + (1 - b2) * gw * gw
                m_b[li] = b1 * m_b[li] + (1 - b1) * gb
                v_b[li] = b2 * v_b[li] + (1 - b2) * gb * gb
                layers[li].weights -= config.learning_rate * (m_w[li] / corr1) / (
                    np.sqrt(v_w[li] / corr2) + eps
                )
                layers[li].biases -= config.learning_rate * (m_b[li] / corr1) / (
                    np.sqrt(v_b[li] / corr2) + eps
                )
        history.append(epoch_loss / max(n_batches, 1))
    return net, history


def calibrate(model, sample_inputs):
    """Per-layer input calibration ranges from a sample of real inputs.

    First layer: [0, 1] when the samples already live there, else the
    observed range (PCA-reduced inputs go negative). Later layers follow the
    preceding activation: relu maps [0, observed max], sigmoid [0, 1].
    """
    xs = np.asarray(sample_inputs, dtype=np.float64)
    lo, hi = float(xs.min()), float(xs.max())
    if 0.0 <= lo and hi <= 1.0:
        ranges = [(0.0, 1.0)]
    else:
        ranges = [(lo, hi)]
    a = xs
    for layer in model.layers[:-1]:
        a = _activate(a @ layer.weights.T + layer.biases, layer.activation)
        if layer.activation == "sigmoid":
            ranges.append((0.0, 1.0))
        elif layer.activation == "relu":
            ranges.append((0.0, float(a.max())))
        else:
            ranges.append((float(a.min()), float(a.max())))
    return ranges


class CrossbarMlp:
    """A network prepared for crossbar inference: quantized, mapped, programmed.

    Each layer's weights are quantized once; the tiles stay programmed for
    the lifetime of the object (one physical programming serving any number
    of inferences). Construct a fresh instance to redraw programming noise.
    """

    def __init__(self, model, cfg):
        self.model = model
        self.cfg = cfg
        ladder = cfg.profile.ladder
        noise = cfg.profile.noise
        cals = cfg.calibrations or [(0.0, 1.0)] * len(model.layers)
        if len(cals) != len(model.layers):
            raise ValueError("need one calibration range per layer")
        rng = np.random.default_rng(cfg.seed)
        self.layers = []
        for layer, (x_min, x_max) in zip(model.layers, cals):
            q = quantizer.quantize(layer.weights, cfg.n_states)
            params = crossbar.weight_to_resistance_map(q.level_set, ladder, x_min, x_max)
            tiles = crossbar.program_matrix(
                q, params, cfg.tile_rows, cfg.tile_cols, ladder, noise, rng,
                systematic_redraw=cfg.systematic_redraw,
            )
            self.layers.append((q, params, tiles, (x_min, x_max)))

    @property
    def sub_op_count(self):
        """Tile sub-operations for one full forward pass."""
        return sum(len(tiles) * len(tiles[0]) for _, _, tiles, _ in self.layers)

    def layer_sub_ops(self, index):
        tiles = self.layers[index][2]
        return len(tiles) * len(tiles[0])

    def _check_range(self, a, cal):
        lo, hi = float(a.min()), float(a.max())
        if lo < cal[0] - 1e-12 or hi > cal[1] + 1e-12:
            warnings.warn(
                "layer input range [%g, %g] exceeds calibration [%g, %g]"
                % (lo, hi, cal[0], cal[1]),
                CalibrationOverflowWarning,
                stacklevel=3,
            )

    def forward(self, x, trace=None):
        a = np.asarray(x, dtype=np.float64)
        for (q, params, tiles, cal), layer in zip(self.layers, self.model.layers):
            self._check_range(a, cal)
            res = crossbar.matvec_programmed(tiles, q, a, params, trace=trace)
            a = _activate(res.y_tilde + layer.biases, layer.activation)
        return a

    def forward_batch(self, xs):
        a = np.asarray(xs, dtype=np.float64)
        for (q, params, tiles, cal), layer in zip(self.layers, self.model.layers):
            self._check_range(a, cal)
            y = crossbar.matvec_programmed_batch(tiles, q, a, params)
            a = _activate(y + layer.biases, layer.activation)
        return a


def forward_crossbar(model, x, cfg, trace=None):
    """Crossbar-backed forward pass (fresh tile programming per call)."""
    return CrossbarMlp(model, cfg).forward(x, trace=trace)


def accuracy(model, dataset, mode="software", cfg=None):
    """Fraction of correct predictions: argmax for multi-class, 0.5 threshold otherwise."""
    if mode == "software":
        outputs = forward(model, dataset.inputs)
    elif mode == "crossbar":
        if cfg is None:
            raise ValueError("crossbar mode needs a CrossbarInferenceConfig")
        outputs = CrossbarMlp(model, cfg).forward_batch(dataset.inputs)
    else:
        raise ValueError("unknown mode %r" % mode)
    if model.output_size == 1:
        predicted = (outputs[:, 0] > 0.5).astype(np.int64)
    else:
        predicted = np.argmax(outputs, axis=1)
    return float(np.mean(predicted == dataset.labels))
