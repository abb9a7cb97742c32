"""Momentum SGD over summed minibatch gradients, and the epoch loop.

The update is exactly

    g <- momentum * g + sum over minibatch of dLoss/dtheta
    theta <- theta - lr * g

note the gradient is the minibatch SUM, not the mean, so the effective
step size scales with batch size. Runs are fully deterministic given
(arch, data, config, seed): initialization is seeded, shuffling is keyed
by (shuffle_seed, epoch), and per-example gradients reduce in example
index order.
"""

from __future__ import annotations

import io
import csv
import math
import time
from dataclasses import dataclass, field

from .data import Dataset, minibatches
from .errors import NumericError, ShapeError
from .model import ArchConfig, Params, error_rate, init_params, loss_and_grads, zeros_like_params


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int = 128
    learning_rate: float = 1e-3
    momentum: float = 0.9
    shuffle_seed: int = 0
    eval_every: int = 1

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")


@dataclass
class TrainState:
    """Momentum buffers plus the completed-epoch counter. Shuffling is
    keyed statelessly by (shuffle_seed, epoch), so no generator state
    needs to persist here."""

    velocity: Params
    epochs_completed: int = 0

    @classmethod
    def fresh(cls, params: Params) -> "TrainState":
        return cls(velocity=zeros_like_params(params))


@dataclass
class EpochRecord:
    """Metrics for one completed epoch. ``train_loss`` is the mean
    per-example NLL over the epoch's minibatches; error fields are NaN on
    epochs the evaluation cadence skipped. Wall time is excluded from
    equality so determinism checks compare only the computed payload."""

    epoch: int
    train_loss: float
    train_error: float
    test_error: float
    seconds: float = field(compare=False, default=0.0)


@dataclass
class TrainResult:
    records: list[EpochRecord]
    params: Params
    state: TrainState


def sgd_momentum_step(params: Params, grads: Params, state: TrainState,
                      cfg: TrainConfig) -> tuple[Params, TrainState]:
    """One in-place momentum update; ``grads`` must be the minibatch sum."""
    for (name, p), (_, g), (_, v) in zip(
            params.tensors(), grads.tensors(), state.velocity.tensors()):
        if p.shape != g.shape or p.shape != v.shape:
            raise ShapeError(
                f"{name}: params {p.shape}, grads {g.shape}, velocity {v.shape}")
        v *= cfg.momentum
        v += g
        p -= cfg.learning_rate * v
    return params, state


def train(arch: ArchConfig, train_data: Dataset, test_data: Dataset,
          cfg: TrainConfig, seed: int) -> TrainResult:
    """Run the full training loop and collect per-epoch metrics.

    Evaluations (train and test error) happen every ``eval_every`` epochs
    and always on the final epoch; skipped epochs record NaN. A non-finite
    minibatch loss aborts with a diagnostic naming the batch.
    """
    if len(train_data) == 0 or len(test_data) == 0:
        raise ShapeError("train and test datasets must be nonempty")
    params = init_params(arch, seed)
    state = TrainState.fresh(params)
    records: list[EpochRecord] = []
    n = len(train_data)

    for epoch in range(cfg.epochs):
        start = time.perf_counter()
        epoch_loss = 0.0
        for batch_index, idx in enumerate(
                minibatches(train_data, cfg.batch_size, cfg.shuffle_seed, epoch)):
            loss, grads = loss_and_grads(
                params, train_data.images[idx], train_data.labels[idx])
            if not math.isfinite(loss):
                raise NumericError(
                    f"non-finite loss {loss} at epoch {epoch}, batch {batch_index}")
            sgd_momentum_step(params, grads, state, cfg)
            epoch_loss += loss
        state.epochs_completed = epoch + 1

        evaluate = (epoch + 1) % cfg.eval_every == 0 or epoch == cfg.epochs - 1
        train_err = error_rate(params, train_data) if evaluate else math.nan
        test_err = error_rate(params, test_data) if evaluate else math.nan
        records.append(EpochRecord(
            epoch=epoch,
            train_loss=epoch_loss / n,
            train_error=train_err,
            test_error=test_err,
            seconds=time.perf_counter() - start,
        ))
    return TrainResult(records=records, params=params, state=state)


def metrics_csv(result: TrainResult, wall_time: bool = False) -> str:
    """CSV with columns epoch, train_loss, train_error, test_error,
    seconds. Wall timings are only written on request because they break
    byte-identical replays; the default writes 0.0."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "train_loss", "train_error", "test_error", "seconds"])
    for r in result.records:
        writer.writerow([r.epoch, repr(r.train_loss), repr(r.train_error),
                         repr(r.test_error), repr(r.seconds if wall_time else 0.0)])
    return buf.getvalue()
