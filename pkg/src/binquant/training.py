"""Quantized-weight SGD variants and the experiment loop.

Three algorithms share one step rule; they differ only in how the quantized
iterate w is produced from the float shadow weights w_f:

    bc         w = binary l2 projection of w_f (mean-scale)
    median_bc  w = binary l1 projection of w_f (median-scale)
    br         w = relaxed projection (lam * proj(w_f) + w_f) / (lam + 1)
               with lam growing geometrically, then hard projection from
               br_phase2_start onward

plus "none" (plain SGD, no projection) which produces the full-precision
baseline and warm-start checkpoints.  The gradient is always evaluated at the
quantized iterate w, never at w_f.  With blending, the shadow update anchors
at (1 - rho) * w_f + rho * w instead of w_f, which restores a sufficient
descent property at small step sizes.
"""

from __future__ import annotations

import dataclasses
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset
from .errors import NumericsError, ValidationError
from .mlp import Gradient, MlpModel, MlpSpec, ParamSet, init_params
from .projections import project_binary_l1, project_binary_l2, relax_projection
from .reporting import ResultRow
from .tensorfile import load_checkpoint, save_checkpoint

__all__ = [
    "ALGORITHMS",
    "LrSchedule",
    "TrainConfig",
    "TrainState",
    "QuadraticObjective",
    "blend",
    "project_params",
    "train_step",
    "run_experiment",
    "train_full_precision",
]

ALGORITHMS = ("bc", "median_bc", "br", "none")


@dataclass(frozen=True)
class LrSchedule:
    """Piecewise-constant learning rate: starts at ``initial`` and multiplies
    by ``drop_factor`` at each iteration index in ``drop_at``."""

    initial: float = 0.025
    drop_factor: float = 0.1
    drop_at: tuple[int, ...] = (800,)

    def __post_init__(self):
        if not self.initial > 0:
            raise ValidationError(f"initial rate must be > 0, got {self.initial}")
        if not 0.0 < self.drop_factor < 1.0:
            raise ValidationError(f"drop_factor must be in (0, 1), got {self.drop_factor}")
        drops = tuple(int(t) for t in self.drop_at)
        if any(t < 0 for t in drops) or any(b <= a for a, b in zip(drops, drops[1:])):
            raise ValidationError(f"drop_at must be strictly increasing and >= 0, got {drops}")
        object.__setattr__(self, "drop_at", drops)

    def rate_at(self, iteration: int) -> float:
        return self.initial * self.drop_factor ** bisect_right(self.drop_at, iteration)


@dataclass(frozen=True)
class TrainConfig:
    algorithm: str = "median_bc"
    blend_rho: float = 0.0
    lr_schedule: LrSchedule = field(default_factory=LrSchedule)
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    start: str = "cold"
    warm_source: str | None = None
    momentum: float = 0.0
    weight_decay: float = 0.0
    br_gamma: float = 1.1
    br_lambda0: float = 1.0
    br_phase2_start: int | None = None    # None: 75% of total iterations
    br_lambda_every: int | None = None    # None: every half epoch
    br_phase2_projector: str = "l2"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not 0.0 <= self.blend_rho < 1.0:
            raise ValidationError(f"blend_rho must be in [0, 1), got {self.blend_rho}")
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.start not in ("cold", "warm"):
            raise ValidationError(f"start must be 'cold' or 'warm', got {self.start!r}")
        if self.start == "warm" and not self.warm_source:
            raise ValidationError("warm start needs warm_source")
        if not 0.0 <= self.momentum < 1.0:
            raise ValidationError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValidationError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.algorithm == "br":
            if not self.br_gamma > 1.0:
                raise ValidationError(f"br_gamma must be > 1, got {self.br_gamma}")
            if not self.br_lambda0 > 0:
                raise ValidationError(f"br_lambda0 must be > 0, got {self.br_lambda0}")
            if self.br_phase2_start is not None and self.br_phase2_start < 1:
                raise ValidationError(f"br_phase2_start must be >= 1, got {self.br_phase2_start}")
            if self.br_lambda_every is not None and self.br_lambda_every < 1:
                raise ValidationError(f"br_lambda_every must be >= 1, got {self.br_lambda_every}")
            if self.br_phase2_projector not in ("l1", "l2"):
                raise ValidationError(
                    f"br_phase2_projector must be 'l1' or 'l2', got {self.br_phase2_projector!r}")


@dataclass
class TrainState:
    float_params: ParamSet          # w_f, the full-precision shadow weights
    quantized_params: ParamSet      # w, what gradients are evaluated at
    iteration: int = 0
    lam: float = 0.0
    velocity: ParamSet | None = None
    metrics_log: list[tuple[int, float, float]] = field(default_factory=list)


def blend(w_f: ParamSet, w: ParamSet, rho: float) -> ParamSet:
    """Elementwise (1 - rho) * w_f + rho * w across every parameter array."""
    if not 0.0 <= rho < 1.0:
        raise ValidationError(f"rho must be in [0, 1), got {rho}")
    return ParamSet(
        [(1.0 - rho) * a + rho * b for a, b in zip(w_f.weights, w.weights)],
        [(1.0 - rho) * a + rho * b for a, b in zip(w_f.biases, w.biases)],
    )


def project_params(w_f: ParamSet, config: TrainConfig, lam: float,
                   iteration: int) -> ParamSet:
    """Per-matrix projection of the shadow weights; biases pass through.

    Each weight matrix is fit with its own scale.  For br the projection is
    the relaxed form until ``iteration`` reaches br_phase2_start, hard
    afterwards.
    """
    alg = config.algorithm
    if alg == "none":
        return w_f.copy()
    weights = []
    for mat in w_f.weights:
        if alg == "bc":
            dense = project_binary_l2(mat.ravel()).quantized.dense()
        elif alg == "median_bc":
            dense = project_binary_l1(mat.ravel()).quantized.dense()
        elif alg == "br":
            phase2 = config.br_phase2_start is not None and iteration >= config.br_phase2_start
            if phase2:
                norm = config.br_phase2_projector
                res = project_binary_l2(mat.ravel()) if norm == "l2" else project_binary_l1(mat.ravel())
                dense = res.quantized.dense()
            else:
                weights.append(relax_projection(mat, lam, norm="l2"))
                continue
        else:
            raise ValidationError(f"unknown algorithm {alg!r}")
        weights.append(dense.reshape(mat.shape))
    return ParamSet(weights, [b.copy() for b in w_f.biases])


def _axpy(base: ParamSet, direction: Gradient, scale: float) -> ParamSet:
    return ParamSet([a - scale * g for a, g in zip(base.weights, direction.weights)],
                    [a - scale * g for a, g in zip(base.biases, direction.biases)])


def train_step(state: TrainState, batch, config: TrainConfig, model) -> TrainState:
    """One update: gradient at w, blended shadow step, re-projection.

        g        = grad f(w)                        (never at w_f)
        w_f'     = (1-rho) w_f + rho w - eta_t * g
        w'       = project(w_f')                    (per algorithm)

    followed by the br lambda ramp on its cadence and iteration += 1.
    A non-finite loss or gradient aborts with NumericsError carrying a state
    snapshot.
    """
    loss, grad = model.loss_and_grad(state.quantized_params, batch)
    if not np.isfinite(loss) or not all(
            np.all(np.isfinite(a)) for a in grad.weights + grad.biases):
        snapshot = {"loss": np.array([loss]),
                    "iteration": np.array([float(state.iteration)])}
        for i, (wf, wq) in enumerate(zip(state.float_params.weights,
                                         state.quantized_params.weights)):
            snapshot[f"float/w{i}"] = wf
            snapshot[f"quant/w{i}"] = wq
        for i, (bf, bq) in enumerate(zip(state.float_params.biases,
                                         state.quantized_params.biases)):
            snapshot[f"float/b{i}"] = bf
            snapshot[f"quant/b{i}"] = bq
        raise NumericsError(
            f"non-finite loss/gradient at iteration {state.iteration}",
            snapshot=snapshot)

    if config.weight_decay > 0:
        grad = ParamSet([g + config.weight_decay * w for g, w in zip(grad.weights, state.float_params.weights)],
                        [g.copy() for g in grad.biases])
    velocity = state.velocity
    if config.momentum > 0:
        if velocity is None:
            velocity = ParamSet([np.zeros_like(g) for g in grad.weights],
                                [np.zeros_like(g) for g in grad.biases])
        velocity = ParamSet([config.momentum * v + g for v, g in zip(velocity.weights, grad.weights)],
                            [config.momentum * v + g for v, g in zip(velocity.biases, grad.biases)])
        direction = velocity
    else:
        direction = grad

    eta = config.lr_schedule.rate_at(state.iteration)
    anchor = blend(state.float_params, state.quantized_params, config.blend_rho)
    new_wf = _axpy(anchor, direction, eta)

    new_iteration = state.iteration + 1
    new_w = project_params(new_wf, config, state.lam, new_iteration)

    lam = state.lam
    if (config.algorithm == "br" and config.br_lambda_every
            and new_iteration % config.br_lambda_every == 0):
        lam *= config.br_gamma

    return TrainState(float_params=new_wf, quantized_params=new_w,
                      iteration=new_iteration, lam=lam, velocity=velocity,
                      metrics_log=state.metrics_log)


def _resolve(config: TrainConfig, total_iterations: int, batches_per_epoch: int) -> TrainConfig:
    """Fill in schedule defaults that depend on the run length."""
    if config.algorithm != "br":
        return config
    phase2 = config.br_phase2_start
    if phase2 is None:
        phase2 = max(1, int(0.75 * total_iterations))
    if total_iterations > 0 and phase2 > total_iterations:
        raise ValidationError(
            f"br_phase2_start {phase2} lies beyond the run's {total_iterations} iterations, "
            "so the final weights would never harden")
    every = config.br_lambda_every
    if every is None:
        every = max(1, batches_per_epoch // 2)
    return dataclasses.replace(config, br_phase2_start=phase2, br_lambda_every=every)


def _initial_params(config: TrainConfig, spec: MlpSpec) -> ParamSet:
    if config.start == "cold":
        return init_params(spec, config.seed)
    params, manifest = load_checkpoint(config.warm_source)
    dims = tuple(manifest.get("layer_dims", ()))
    if dims and dims != spec.layer_dims:
        raise ValidationError(
            f"warm checkpoint was trained with dims {dims}, expected {spec.layer_dims}")
    shapes = [w.shape for w in params.weights]
    wanted = [(a, b) for a, b in zip(spec.layer_dims, spec.layer_dims[1:])]
    if shapes != wanted:
        raise ValidationError(f"warm checkpoint shapes {shapes} do not match spec {wanted}")
    return params


def _result_row(config: TrainConfig, accuracy: float) -> ResultRow:
    return ResultRow(algorithm=config.algorithm, start=config.start,
                     blend=config.blend_rho > 0, seeds=str(config.seed),
                     accuracy=accuracy)


def run_experiment(config: TrainConfig, train: Dataset, test: Dataset,
                   spec: MlpSpec) -> tuple[TrainState, ResultRow]:
    """Train per the config on the given split; returns the final state and a
    one-line result row.

    Cold runs draw fresh seeded weights; warm runs load the full-precision
    checkpoint named by warm_source into w_f.  The metrics log gets one
    (iteration, train loss, test accuracy) entry at iteration 0 and after
    every epoch.  epochs = 0 therefore returns the initial state with its
    initial accuracy row.
    """
    n = len(train)
    batches_per_epoch = (n + config.batch_size - 1) // config.batch_size
    config = _resolve(config, config.epochs * batches_per_epoch, batches_per_epoch)
    model = MlpModel(spec)

    w_f = _initial_params(config, spec)
    lam0 = config.br_lambda0 if config.algorithm == "br" else 0.0
    state = TrainState(float_params=w_f,
                       quantized_params=project_params(w_f, config, lam0, 0),
                       lam=lam0)

    def log_metrics():
        loss, _ = model.forward_loss(state.quantized_params, (train.inputs, train.labels))
        acc = model.accuracy(state.quantized_params, test)
        state.metrics_log.append((state.iteration, loss, acc))

    log_metrics()
    # batch order stream is separated from the init stream by a spawn key
    shuffle_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((config.seed, 1))))
    for _ in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = perm[lo:lo + config.batch_size]
            batch = (train.inputs[idx], train.labels[idx])
            state = train_step(state, batch, config, model)
        log_metrics()

    return state, _result_row(config, state.metrics_log[-1][2])


def train_full_precision(config: TrainConfig, train: Dataset, test: Dataset,
                         spec: MlpSpec, checkpoint_path=None) -> tuple[TrainState, ResultRow]:
    """Plain SGD baseline (no projection); optionally writes the checkpoint
    that warm starts load."""
    config = dataclasses.replace(config, algorithm="none", start="cold", warm_source=None)
    state, row = run_experiment(config, train, test, spec)
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, state.float_params,
                        {"layer_dims": list(spec.layer_dims), "seed": config.seed})
    return state, row


class QuadraticObjective:
    """f(w) = 0.5 * ||w - target||^2 over a single weight vector.

    A drop-in "model" for exercising the step rule on a smooth objective
    where descent behavior can be measured exactly.
    """

    def __init__(self, target):
        self.target = np.asarray(target, dtype=np.float64)

    def make_params(self, w0) -> ParamSet:
        w0 = np.asarray(w0, dtype=np.float64)
        if w0.shape != self.target.shape:
            raise ValidationError(f"w0 shape {w0.shape} != target shape {self.target.shape}")
        return ParamSet([w0.copy()], [])

    def forward_loss(self, params: ParamSet, batch=None) -> tuple[float, None]:
        diff = params.weights[0] - self.target
        return 0.5 * float((diff * diff).sum()), None

    def loss_and_grad(self, params: ParamSet, batch=None) -> tuple[float, Gradient]:
        diff = params.weights[0] - self.target
        return 0.5 * float((diff * diff).sum()), Gradient([diff.copy()], [])

    def backward(self, params: ParamSet, batch=None) -> Gradient:
        return self.loss_and_grad(params, batch)[1]
