"""Line-based experiment configs: ``key = value`` with # comments.

Keys carry dotted prefixes (train., data., model.) and map one-to-one onto
TrainConfig / DatasetSpec / model dims fields.  Every key has a documented
default, so an empty file parses to the default experiment.  Unknown keys,
type errors, and duplicates are reported with the offending key name and
1-based line number.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .datasets import DatasetSpec
from .errors import ValidationError
from .mlp import MlpSpec
from .training import LrSchedule, TrainConfig

__all__ = ["ConfigError", "ExperimentConfig", "parse_config",
           "parse_config_text", "render_config", "resolve_model_spec"]


class ConfigError(ValidationError):
    """Config file problem; message names the key and line involved."""


def _parse_int(s: str) -> int:
    return int(s, 10)


def _parse_float(s: str) -> float:
    return float(s)


def _parse_str(s: str) -> str:
    return s


def _parse_int_list(s: str) -> tuple[int, ...]:
    s = s.strip()
    if not s:
        return ()
    return tuple(int(part.strip(), 10) for part in s.split(","))


def _choice(*options: str):
    def cast(s: str) -> str:
        if s not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return s
    return cast


# key -> (caster, human-readable type name for error messages)
_SCHEMA = {
    "train.algorithm": (_choice("bc", "median_bc", "br", "none"), "algorithm name"),
    "train.blend_rho": (_parse_float, "float"),
    "train.lr_initial": (_parse_float, "float"),
    "train.lr_drop_factor": (_parse_float, "float"),
    "train.lr_drop_at": (_parse_int_list, "comma-separated integers"),
    "train.epochs": (_parse_int, "integer"),
    "train.batch_size": (_parse_int, "integer"),
    "train.seed": (_parse_int, "integer"),
    "train.start": (_choice("cold", "warm"), "start mode"),
    "train.warm_source": (_parse_str, "path"),
    "train.momentum": (_parse_float, "float"),
    "train.weight_decay": (_parse_float, "float"),
    "train.br_gamma": (_parse_float, "float"),
    "train.br_lambda0": (_parse_float, "float"),
    "train.br_phase2_start": (_parse_int, "integer"),
    "train.br_lambda_every": (_parse_int, "integer"),
    "train.br_phase2_projector": (_choice("l1", "l2"), "norm name"),
    "data.kind": (_choice("gaussian_blobs", "two_spirals", "file"), "dataset kind"),
    "data.num_classes": (_parse_int, "integer"),
    "data.dim": (_parse_int, "integer"),
    "data.samples_per_class": (_parse_int, "integer"),
    "data.class_separation": (_parse_float, "float"),
    "data.noise_sigma": (_parse_float, "float"),
    "data.seed": (_parse_int, "integer"),
    "data.train_fraction": (_parse_float, "float"),
    "data.path": (_parse_str, "path"),
    "model.layer_dims": (_parse_int_list, "comma-separated integers"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    train: TrainConfig
    data: DatasetSpec
    model_dims: tuple[int, ...] | None = None


def parse_config_text(text: str) -> ExperimentConfig:
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r} (line {lineno})")
        if key in raw:
            raise ConfigError(
                f"duplicate key {key!r} (line {lineno}, first set at line {raw[key][1]})")
        raw[key] = (value, lineno)

    values: dict[str, object] = {}
    for key, (value, lineno) in raw.items():
        caster, typename = _SCHEMA[key]
        try:
            values[key] = caster(value)
        except ValueError as e:
            detail = str(e) if str(e).startswith("must be") else f"expects {typename}"
            raise ConfigError(f"line {lineno}: key {key!r} {detail}, got {value!r}") from None

    algorithm = values.get("train.algorithm", "median_bc")
    if algorithm != "br":
        for key in raw:
            if key.startswith("train.br_"):
                raise ConfigError(
                    f"key {key!r} (line {raw[key][1]}) is only valid when train.algorithm = br")

    lr = LrSchedule(
        initial=values.get("train.lr_initial", 0.025),
        drop_factor=values.get("train.lr_drop_factor", 0.1),
        drop_at=values.get("train.lr_drop_at", (800,)),
    )
    train = TrainConfig(
        algorithm=algorithm,
        blend_rho=values.get("train.blend_rho", 0.0),
        lr_schedule=lr,
        epochs=values.get("train.epochs", 30),
        batch_size=values.get("train.batch_size", 32),
        seed=values.get("train.seed", 0),
        start=values.get("train.start", "cold"),
        warm_source=values.get("train.warm_source"),
        momentum=values.get("train.momentum", 0.0),
        weight_decay=values.get("train.weight_decay", 0.0),
        br_gamma=values.get("train.br_gamma", 1.1),
        br_lambda0=values.get("train.br_lambda0", 1.0),
        br_phase2_start=values.get("train.br_phase2_start"),
        br_lambda_every=values.get("train.br_lambda_every"),
        br_phase2_projector=values.get("train.br_phase2_projector", "l2"),
    )
    data = DatasetSpec(
        kind=values.get("data.kind", "gaussian_blobs"),
        num_classes=values.get("data.num_classes", 10),
        dim=values.get("data.dim", 20),
        samples_per_class=values.get("data.samples_per_class", 200),
        class_separation=values.get("data.class_separation", 4.0),
        noise_sigma=values.get("data.noise_sigma", 1.0),
        seed=values.get("data.seed", 11),
        train_fraction=values.get("data.train_fraction", 0.8),
        path=values.get("data.path"),
    )
    model_dims = values.get("model.layer_dims")
    if model_dims is not None and data.kind != "file":
        if model_dims[0] != data.dim or model_dims[-1] != data.num_classes:
            raise ConfigError(
                f"key 'model.layer_dims': dims {list(model_dims)} must start at data.dim "
                f"({data.dim}) and end at data.num_classes ({data.num_classes})")
    return ExperimentConfig(train=train, data=data, model_dims=model_dims)


def parse_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


def resolve_model_spec(cfg: ExperimentConfig, train_dataset) -> MlpSpec:
    """Final layer dims: the configured ones, or [dim, 64, 32, classes]
    derived from the actual dataset (which matters for kind = file)."""
    d = train_dataset.inputs.shape[1]
    k = train_dataset.num_classes
    if cfg.model_dims is not None:
        if cfg.model_dims[0] != d or cfg.model_dims[-1] != k:
            raise ValidationError(
                f"model.layer_dims {list(cfg.model_dims)} does not match the dataset "
                f"(dim {d}, classes {k})")
        return MlpSpec(cfg.model_dims)
    return MlpSpec((d, 64, 32, k))


def render_config(cfg: ExperimentConfig) -> str:
    """Emit a config that parses back to ``cfg`` (the round-trip property)."""
    t, d = cfg.train, cfg.data
    lines = [
        f"train.algorithm = {t.algorithm}",
        f"train.blend_rho = {t.blend_rho!r}",
        f"train.lr_initial = {t.lr_schedule.initial!r}",
        f"train.lr_drop_factor = {t.lr_schedule.drop_factor!r}",
        "train.lr_drop_at = " + ",".join(str(x) for x in t.lr_schedule.drop_at),
        f"train.epochs = {t.epochs}",
        f"train.batch_size = {t.batch_size}",
        f"train.seed = {t.seed}",
        f"train.start = {t.start}",
        f"train.momentum = {t.momentum!r}",
        f"train.weight_decay = {t.weight_decay!r}",
    ]
    if t.warm_source:
        lines.append(f"train.warm_source = {t.warm_source}")
    if t.algorithm == "br":
        lines.append(f"train.br_gamma = {t.br_gamma!r}")
        lines.append(f"train.br_lambda0 = {t.br_lambda0!r}")
        if t.br_phase2_start is not None:
            lines.append(f"train.br_phase2_start = {t.br_phase2_start}")
        if t.br_lambda_every is not None:
            lines.append(f"train.br_lambda_every = {t.br_lambda_every}")
        lines.append(f"train.br_phase2_projector = {t.br_phase2_projector}")
    lines += [
        f"data.kind = {d.kind}",
        f"data.num_classes = {d.num_classes}",
        f"data.dim = {d.dim}",
        f"data.samples_per_class = {d.samples_per_class}",
        f"data.class_separation = {d.class_separation!r}",
        f"data.noise_sigma = {d.noise_sigma!r}",
        f"data.seed = {d.seed}",
        f"data.train_fraction = {d.train_fraction!r}",
    ]
    if d.path:
        lines.append(f"data.path = {d.path}")
    if cfg.model_dims is not None:
        lines.append("model.layer_dims = " + ",".join(str(x) for x in cfg.model_dims))
    return "\n".join(lines) + "\n"
