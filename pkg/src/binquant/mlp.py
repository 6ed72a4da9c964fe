"""Minimal fully-connected classifier in plain numpy.

ReLU hidden layers, softmax cross-entropy loss, manual backprop.  Parameters
live in a ParamSet (per-layer weight matrices and bias vectors); only the
weight matrices are ever quantized, biases stay full precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "MlpSpec",
    "ParamSet",
    "Gradient",
    "init_params",
    "flatten",
    "unflatten",
    "MlpModel",
    "gradient_check",
]


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths, input first and class count last; hidden layers ReLU."""

    layer_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2:
            raise ValidationError(f"need at least input and output dims, got {dims}")
        if any(d < 1 for d in dims):
            raise ValidationError(f"layer dims must be >= 1, got {dims}")
        object.__setattr__(self, "layer_dims", dims)

    @property
    def num_classes(self) -> int:
        return self.layer_dims[-1]


@dataclass
class ParamSet:
    """Per-layer parameters; weights[i] is (fan_in, fan_out), biases[i] is (fan_out,)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "ParamSet":
        return ParamSet([w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])


# gradients share the parameter container layout
Gradient = ParamSet


def init_params(spec: MlpSpec, seed: int) -> ParamSet:
    """Seeded uniform init: weights in [-a, a] with a = sqrt(6/(fan_in+fan_out)),
    biases zero.  Layers draw in order, so layouts are reproducible."""
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_dims, spec.layer_dims[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-a, a, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ParamSet(weights, biases)


def flatten(params: ParamSet) -> np.ndarray:
    chunks = [w.ravel() for w in params.weights] + [b.ravel() for b in params.biases]
    return np.concatenate(chunks)


def unflatten(vec: np.ndarray, like: ParamSet) -> ParamSet:
    """Inverse of flatten for any ParamSet with the template's shapes."""
    vec = np.asarray(vec, dtype=np.float64).ravel()
    total = sum(w.size for w in like.weights) + sum(b.size for b in like.biases)
    if vec.size != total:
        raise ValidationError(f"flat vector has {vec.size} entries, template needs {total}")
    weights, biases, k = [], [], 0
    for w in like.weights:
        weights.append(vec[k:k + w.size].reshape(w.shape).copy())
        k += w.size
    for b in like.biases:
        biases.append(vec[k:k + b.size].reshape(b.shape).copy())
        k += b.size
    return ParamSet(weights, biases)


def _check_batch(params: ParamSet, x: np.ndarray, y: np.ndarray) -> None:
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ValidationError(f"batch shapes disagree: x {x.shape}, y {y.shape}")
    if x.shape[0] == 0:
        raise ValidationError("empty batch")
    if x.shape[1] != params.weights[0].shape[0]:
        raise ValidationError(
            f"input dim {x.shape[1]} does not match first layer fan-in {params.weights[0].shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("batch inputs contain non-finite values")
    k = params.weights[-1].shape[1]
    if y.min() < 0 or y.max() >= k:
        raise ValidationError(f"labels must lie in [0, {k}), got range [{y.min()}, {y.max()}]")


class MlpModel:
    """Forward/backward/accuracy for an MlpSpec; stateless apart from the spec."""

    def __init__(self, spec: MlpSpec):
        self.spec = spec

    def _forward(self, params: ParamSet, x: np.ndarray):
        # Returns hidden activations (inputs to each layer) and final logits.
        # Overflow here surfaces as inf/nan that the training loop's finite
        # check turns into a NumericsError, so numpy warnings are suppressed.
        acts = [x]
        h = x
        last = len(params.weights) - 1
        with np.errstate(over="ignore", invalid="ignore"):
            for i, (w, b) in enumerate(zip(params.weights, params.biases)):
                z = h @ w + b
                if i < last:
                    h = np.maximum(z, 0.0)
                    acts.append(h)
                else:
                    return acts, z
        raise AssertionError("unreachable")

    @staticmethod
    def _log_softmax(logits: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            shifted = logits - logits.max(axis=1, keepdims=True)
            return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))

    def forward_loss(self, params: ParamSet, batch) -> tuple[float, np.ndarray]:
        """Mean cross-entropy and the (batch, classes) probability matrix.

        The softmax is computed via max-subtraction, so saturated logits do
        not overflow and a zero network yields exactly log(num_classes).
        """
        x, y = batch
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        _check_batch(params, x, y)
        _, logits = self._forward(params, x)
        logp = self._log_softmax(logits)
        loss = float(-logp[np.arange(y.size), y].mean())
        return loss, np.exp(logp)

    def loss_and_grad(self, params: ParamSet, batch) -> tuple[float, Gradient]:
        """One fused forward/backward pass (what the training loop calls)."""
        x, y = batch
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        _check_batch(params, x, y)
        acts, logits = self._forward(params, x)
        logp = self._log_softmax(logits)
        loss = float(-logp[np.arange(y.size), y].mean())

        n = y.size
        dz = np.exp(logp)
        dz[np.arange(n), y] -= 1.0
        dz /= n
        gw = [np.empty(0)] * len(params.weights)
        gb = [np.empty(0)] * len(params.biases)
        for i in range(len(params.weights) - 1, -1, -1):
            gw[i] = acts[i].T @ dz
            gb[i] = dz.sum(axis=0)
            if i > 0:
                da = dz @ params.weights[i].T
                dz = da * (acts[i] > 0)   # ReLU mask; subgradient 0 at the kink
        return loss, Gradient(gw, gb)

    def backward(self, params: ParamSet, batch) -> Gradient:
        """Exact gradient of the mean cross-entropy w.r.t. every parameter."""
        return self.loss_and_grad(params, batch)[1]

    def accuracy(self, params: ParamSet, dataset) -> float:
        """Fraction of argmax-correct predictions; ties pick the lowest class."""
        x, y = dataset.inputs, dataset.labels
        _check_batch(params, np.asarray(x, dtype=np.float64), np.asarray(y))
        _, logits = self._forward(params, np.asarray(x, dtype=np.float64))
        return float((logits.argmax(axis=1) == y).mean())


def gradient_check(spec: MlpSpec, seed: int, batch_size: int = 4,
                   step: float = 1e-5, _corrupt: bool = False) -> float:
    """Compare backward against central finite differences on a seeded
    random net and batch; returns the global relative error
    ||g_a - g_n|| / max(||g_a|| + ||g_n||, 1e-12).

    ``_corrupt`` scales the analytic gradient by 1.001 so the comparison
    must fail; it exists as a negative control for the CLI self-test.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    params = init_params(spec, seed)
    # non-zero biases so their gradient path is exercised too
    for b in params.biases:
        b[:] = rng.normal(0.0, 0.1, b.shape)
    x = rng.normal(0.0, 1.0, (batch_size, spec.layer_dims[0]))
    y = rng.integers(0, spec.num_classes, batch_size)
    model = MlpModel(spec)
    analytic = flatten(model.backward(params, (x, y)))
    if _corrupt:
        analytic = analytic * 1.001

    theta = flatten(params)
    numeric = np.empty_like(theta)
    for i in range(theta.size):
        for sgn, slot in ((1.0, 0), (-1.0, 1)):
            t = theta.copy()
            t[i] += sgn * step
            loss, _ = model.forward_loss(unflatten(t, params), (x, y))
            if slot == 0:
                hi = loss
            else:
                lo = loss
        numeric[i] = (hi - lo) / (2.0 * step)
    num = float(np.linalg.norm(analytic - numeric))
    den = max(float(np.linalg.norm(analytic) + np.linalg.norm(numeric)), 1e-12)
    return num / den
