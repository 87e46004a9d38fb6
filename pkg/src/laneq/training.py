"""Min-over-modes loss and gradient-free training of the full angle vector.

The objective is the mean squared error of the best-matching hypothesis plus
a small penalty on all residual magnitudes, computed in normalized
lane-frame units.  All ~1.2k angles are updated together by simultaneous
perturbation: two loss evaluations per random +-1 direction estimate the
full gradient, with decaying gain and perturbation schedules that restart
every epoch.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .metrics import evaluate_examples
from .model import DEFAULT_ARCH, Architecture, check_param_vector, forward, init_params
from .qdecoder import ModeSet
from .scenario import Example

CHECKPOINT_FORMAT_VERSION = 1


class NonFiniteLossError(RuntimeError):
    """A loss evaluation produced NaN or infinity; the step was aborted."""


@dataclass
class SpsaConfig:
    """Optimizer and loop hyperparameters (defaults follow standard practice
    for this setup: gains a=0.05/c=0.1 with stability constant 80 and decay
    exponents 0.602/0.101, two perturbation draws averaged per update)."""

    a: float = 0.05
    c: float = 0.1
    A: float = 80.0
    alpha: float = 0.602
    gamma: float = 0.101
    grad_averages: int = 2
    epochs: int = 100
    batches_per_epoch: int = 200
    batch_size: int = 32
    reg_weight: float = 1e-4
    init_std: float = 0.05
    seed: int = 0
    val_fraction: float = 0.2

    def validate(self) -> None:
        positive = {
            "a": self.a, "c": self.c, "A": self.A, "alpha": self.alpha,
            "gamma": self.gamma, "batch_size": self.batch_size,
            "batches_per_epoch": self.batches_per_epoch, "init_std": self.init_std,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.grad_averages < 1:
            raise ValueError(f"grad_averages must be at least 1, got {self.grad_averages}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must be in [0, 1), got {self.val_fraction}")


def gain_schedule(config: SpsaConfig, k: int) -> tuple[float, float]:
    """Decaying step size and perturbation scale at iteration k >= 1."""
    if k < 1:
        raise ValueError(f"iteration counter must be at least 1, got {k}")
    return config.a / (config.A + k) ** config.alpha, config.c / k**config.gamma


def min_mode_loss(modes: ModeSet, target_positions: np.ndarray, reg_weight: float) -> float:
    """Best-mode mean squared error plus a residual-magnitude penalty."""
    squared = np.sum((modes.trajectories - target_positions[None, :, :]) ** 2, axis=2)
    best = float(squared.mean(axis=1).min())
    penalty = float(np.sum(modes.residuals**2) / (modes.residuals.shape[0] * modes.residuals.shape[1]))
    return best + reg_weight * penalty


def example_loss(
    example: Example, theta: np.ndarray, config: SpsaConfig, arch: Architecture = DEFAULT_ARCH
) -> float:
    return min_mode_loss(forward(example, theta, arch), example.target_positions, config.reg_weight)


def spsa_step(
    theta: np.ndarray,
    k: int,
    loss_fn,
    config: SpsaConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """One parameter update; returns (new theta, mean of the evaluated losses).

    Every perturbation draw costs exactly two loss evaluations regardless of
    the parameter count; ``grad_averages`` independent draws are averaged.
    """
    a_k, c_k = gain_schedule(config, k)
    gradient = np.zeros_like(theta)
    losses = []
    for _ in range(config.grad_averages):
        delta = rng.integers(0, 2, size=theta.size) * 2.0 - 1.0
        loss_plus = loss_fn(theta + c_k * delta)
        loss_minus = loss_fn(theta - c_k * delta)
        if not (np.isfinite(loss_plus) and np.isfinite(loss_minus)):
            raise NonFiniteLossError(
                f"non-finite loss at iteration {k}: L+={loss_plus}, L-={loss_minus}"
            )
        gradient += (loss_plus - loss_minus) / (2.0 * c_k) * delta
        losses.extend((loss_plus, loss_minus))
    gradient /= config.grad_averages
    return theta - a_k * gradient, float(np.mean(losses))


@dataclass
class TrainLogRow:
    epoch: int
    train_loss: float
    val_min_ade: dict[int, float]
    val_min_fde: dict[int, float]
    val_miss_2m: float
    val_miss_4m: float
    val_hit_at_1: float
    best_val_min_ade_16: float
    checkpoint: str = ""


@dataclass
class TrainResult:
    params: np.ndarray
    best_params: np.ndarray
    best_epoch: int
    log: list[TrainLogRow] = field(default_factory=list)


def _perturbation_rng(seed: int, epoch: int) -> np.random.Generator:
    # counter-based stream keyed by (seed, epoch): the batch layout cannot
    # change which delta the k-th sample of an epoch draws
    key = np.random.SeedSequence(entropy=seed, spawn_key=(2, epoch))
    return np.random.Generator(np.random.Philox(key))


def split_train_val(
    examples: list[Example], config: SpsaConfig
) -> tuple[list[Example], list[Example]]:
    """Deterministic shuffle-split; an empty validation share validates on
    the training set."""
    order = np.random.default_rng(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(1,))
    ).permutation(len(examples))
    n_val = int(round(config.val_fraction * len(examples)))
    if n_val == 0:
        train = [examples[i] for i in order]
        return train, train
    val_idx, train_idx = order[:n_val], order[n_val:]
    return [examples[i] for i in train_idx], [examples[i] for i in val_idx]


def train(
    examples: list[Example],
    config: SpsaConfig,
    arch: Architecture = DEFAULT_ARCH,
    checkpoint_dir=None,
    config_hash: str = "",
) -> TrainResult:
    """Online SPSA over the dataset: per-sample updates, schedules reset per
    epoch, per-epoch validation, best epoch selected by validation minADE@16.
    """
    if not examples:
        raise ValueError("training requires a non-empty dataset")
    config.validate()
    train_set, val_set = split_train_val(examples, config)
    if not train_set:
        raise ValueError("training split is empty; lower val_fraction")

    theta = init_params(
        np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(0,))),
        std=config.init_std,
        arch=arch,
    )
    data_rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(3,)))

    result = TrainResult(params=theta, best_params=theta.copy(), best_epoch=0)
    best_ade = np.inf
    for epoch in range(1, config.epochs + 1):
        perturb_rng = _perturbation_rng(config.seed, epoch)
        k = 0
        step_losses = []
        for _ in range(config.batches_per_epoch):
            batch = data_rng.integers(0, len(train_set), size=config.batch_size)
            for index in batch:
                example = train_set[index]
                k += 1
                theta, step_loss = spsa_step(
                    theta,
                    k,
                    lambda t: example_loss(example, t, config, arch),
                    config,
                    perturb_rng,
                )
                step_losses.append(step_loss)

        report = evaluate_examples(val_set, theta, arch, config_hash=config_hash)
        ade16 = report.min_ade_at_k[16]
        if ade16 < best_ade:
            best_ade = ade16
            result.best_params = theta.copy()
            result.best_epoch = epoch
        checkpoint = ""
        if checkpoint_dir is not None:
            checkpoint = f"ckpt_epoch_{epoch:03d}.json"
            save_checkpoint(
                f"{checkpoint_dir}/{checkpoint}", theta, config.seed, epoch, config_hash
            )
        result.log.append(
            TrainLogRow(
                epoch=epoch,
                train_loss=float(np.mean(step_losses)),
                val_min_ade=dict(report.min_ade_at_k),
                val_min_fde=dict(report.min_fde_at_k),
                val_miss_2m=report.miss_at_2m,
                val_miss_4m=report.miss_at_4m,
                val_hit_at_1=report.hit_at_1,
                best_val_min_ade_16=float(best_ade),
                checkpoint=checkpoint,
            )
        )
    result.params = theta
    return result


# --- checkpoint and log files ------------------------------------------------


def save_checkpoint(path, theta: np.ndarray, seed: int, epoch: int, config_hash: str = "") -> None:
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "seed": int(seed),
        "epoch": int(epoch),
        "config_hash": config_hash,
        "params": [float(v) for v in np.asarray(theta, dtype=float)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path, arch: Architecture = DEFAULT_ARCH) -> tuple[np.ndarray, dict]:
    """Read a checkpoint and validate version and dimension."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(
            f"unsupported checkpoint format_version {version!r} "
            f"(expected {CHECKPOINT_FORMAT_VERSION})"
        )
    params = np.asarray(payload.get("params", []), dtype=float)
    if params.shape != (arch.param_count,):
        raise ValueError(
            f"checkpoint has {params.size} parameters, expected {arch.param_count}"
        )
    header = {key: payload[key] for key in ("format_version", "seed", "epoch", "config_hash")}
    return check_param_vector(params, arch), header


TRAIN_LOG_COLUMNS = (
    ["epoch", "train_loss"]
    + [f"val_min_ade_k{k}" for k in (1, 5, 10, 16)]
    + [f"val_min_fde_k{k}" for k in (1, 5, 10, 16)]
    + ["val_miss_2m", "val_miss_4m", "val_hit_at_1", "best_val_min_ade_16", "checkpoint"]
)


def write_train_log(path, rows: list[TrainLogRow], config_hash: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write(",".join(TRAIN_LOG_COLUMNS) + "\n")
        for row in rows:
            values = (
                [row.epoch, repr(row.train_loss)]
                + [repr(row.val_min_ade[k]) for k in (1, 5, 10, 16)]
                + [repr(row.val_min_fde[k]) for k in (1, 5, 10, 16)]
                + [
                    repr(row.val_miss_2m),
                    repr(row.val_miss_4m),
                    repr(row.val_hit_at_1),
                    repr(row.best_val_min_ade_16),
                    row.checkpoint,
                ]
            )
            fh.write(",".join(str(v) for v in values) + "\n")


def read_train_log(path) -> list[dict]:
    """Parse a training log CSV into one dict per epoch row."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            parts = line.split(",")
            row = {}
            for name, value in zip(header, parts):
                if name == "checkpoint":
                    row[name] = value
                elif name == "epoch":
                    row[name] = int(value)
                else:
                    row[name] = float(value)
            rows.append(row)
    return rows


def config_fingerprint(fields: dict) -> str:
    """Stable hash of resolved configuration key/value pairs."""
    canonical = "\n".join(f"{key}={fields[key]!r}" for key in sorted(fields))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
