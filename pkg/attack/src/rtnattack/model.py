"""Next-bit prediction attack with a small LSTM.

The attack frames TRNG evaluation as supervised learning: a sliding
window of prior bits is the context, the following bit the label. A
generator with no usable memory pins held-out accuracy at the majority
rate (~50% for balanced streams); any structure the model can exploit
shows up as a statistically significant lift.

The split is chronological (train on the earliest bits, validate, then
test on the latest) and windows never cross partition boundaries, so no
test bit — as context or as label — is ever seen during training.

Determinism: given a fixed config seed the run is reproducible on a
given machine and torch build (seeded init and shuffling, no dropout,
no multi-worker loading). Bitwise equality across different torch
versions or thread pools is not guaranteed by the framework.
"""

import json
from dataclasses import dataclass
from importlib import resources

import jsonschema
import numpy as np
import torch
from torch import nn

from .bitsio import DataError, read_bits

MIN_TEST_BITS = 10_000


class ConfigError(ValueError):
    """Invalid attack configuration."""


@dataclass(frozen=True)
class AttackConfig:
    window: int = 64
    hidden: int = 64
    epochs: int = 5
    split: tuple = (0.8, 0.1, 0.1)
    seed: int = 0
    batch_size: int = 4096
    learning_rate: float = 1e-2

    def __post_init__(self):
        if self.window < 8:
            raise ConfigError(f"window must be >= 8, got {self.window}")
        if self.hidden < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("hidden, epochs and batch_size must be >= 1")
        if len(self.split) != 3 or any(f <= 0 for f in self.split):
            raise ConfigError("split needs three positive fractions")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {sum(self.split)}")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")


@dataclass(frozen=True)
class AttackReport:
    accuracy: float
    interval: tuple  # 95% binomial, contains accuracy
    n_test: int
    majority_baseline: float
    val_accuracy: float
    config: AttackConfig
    input_name: str

    def to_json(self):
        payload = {
            "accuracy": self.accuracy,
            "interval": list(self.interval),
            "n_test": self.n_test,
            "majority_baseline": self.majority_baseline,
            "val_accuracy": self.val_accuracy,
            "config": {
                "window": self.config.window,
                "hidden": self.config.hidden,
                "epochs": self.config.epochs,
                "split": list(self.config.split),
                "seed": self.config.seed,
                "input": self.input_name,
            },
        }
        validate_report(payload)
        return payload


def report_schema():
    with resources.files("rtnattack").joinpath("report.schema.json").open() as fh:
        return json.load(fh)


def validate_report(payload):
    """Check a report dict against the published schema (raises on mismatch)."""
    jsonschema.validate(payload, report_schema(),
                        cls=jsonschema.Draft202012Validator)


class _NextBitLstm(nn.Module):
    def __init__(self, hidden):
        super().__init__()
        self.lstm = nn.LSTM(input_size=1, hidden_size=hidden, batch_first=True)
        self.head = nn.Linear(hidden, 1)

    def forward(self, x):
        out, _ = self.lstm(x)
        return self.head(out[:, -1, :]).squeeze(-1)


def _windows(bits, window):
    """(contexts, targets) for one partition; empty if too short."""
    t = torch.from_numpy(np.ascontiguousarray(bits)).float()
    if t.numel() <= window:
        return t.new_zeros((0, window, 1)), t.new_zeros((0,))
    ctx = t.unfold(0, window, 1)[:-1].unsqueeze(-1).contiguous()
    tgt = t[window:]
    return ctx, tgt


def _partition(bits, split):
    n = bits.size
    n_train = int(n * split[0])
    n_val = int(n * split[1])
    return bits[:n_train], bits[n_train:n_train + n_val], bits[n_train + n_val:]


@torch.no_grad()
def _accuracy(model, ctx, tgt, batch_size):
    hits = 0
    for i in range(0, tgt.numel(), batch_size):
        logits = model(ctx[i:i + batch_size])
        hits += int(((logits > 0).float() == tgt[i:i + batch_size]).sum())
    return hits / max(1, tgt.numel())


def binomial_interval(p_hat, n):
    """95% normal-approximation binomial interval, clipped to [0, 1]."""
    half = 1.96 * (p_hat * (1.0 - p_hat) / n) ** 0.5
    return max(0.0, p_hat - half), min(1.0, p_hat + half)


def run_attack(bits, config, input_name="<memory>"):
    """Train on the early bits, report held-out accuracy on the latest."""
    bits = np.asarray(bits, dtype=np.uint8)
    train_bits, val_bits, test_bits = _partition(bits, config.split)
    if test_bits.size < MIN_TEST_BITS:
        raise DataError(
            f"test partition holds {test_bits.size} bits, need >= {MIN_TEST_BITS}"
        )
    torch.manual_seed(config.seed)
    train_ctx, train_tgt = _windows(train_bits, config.window)
    val_ctx, val_tgt = _windows(val_bits, config.window)
    test_ctx, test_tgt = _windows(test_bits, config.window)
    if min(train_tgt.numel(), val_tgt.numel(), test_tgt.numel()) < 1:
        raise DataError("a partition is shorter than the context window")

    model = _NextBitLstm(config.hidden)
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.BCEWithLogitsLoss()
    shuffler = torch.Generator().manual_seed(config.seed)

    best_val, best_state = -1.0, None
    for _ in range(config.epochs):
        order = torch.randperm(train_tgt.numel(), generator=shuffler)
        model.train()
        for i in range(0, order.numel(), config.batch_size):
            idx = order[i:i + config.batch_size]
            opt.zero_grad()
            loss = loss_fn(model(train_ctx[idx]), train_tgt[idx])
            loss.backward()
            opt.step()
        model.eval()
        val_acc = _accuracy(model, val_ctx, val_tgt, config.batch_size)
        if val_acc > best_val:
            best_val = val_acc
            best_state = {k: v.clone() for k, v in model.state_dict().items()}

    model.load_state_dict(best_state)
    model.eval()
    acc = _accuracy(model, test_ctx, test_tgt, config.batch_size)
    n_test = test_tgt.numel()
    ones = float(test_tgt.mean())
    return AttackReport(
        accuracy=acc,
        interval=binomial_interval(acc, n_test),
        n_test=n_test,
        majority_baseline=max(ones, 1.0 - ones),
        val_accuracy=best_val,
        config=config,
        input_name=input_name,
    )


def attack(path, config=None):
    """File-level entry point: read an RTNB/ASCII export and run the attack."""
    config = config or AttackConfig()
    bits = read_bits(path)
    import os
    return run_attack(bits, config, input_name=os.path.basename(str(path)))
