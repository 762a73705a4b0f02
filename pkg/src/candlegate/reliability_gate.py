"""Reliability gate (M2): scores the primary forecast and decides execution.

The gate is a logistic model over a fixed-order feature vector, trained with
full-batch gradient descent on log-loss.  A forecast is executed only when the
reliability score clears the threshold AND every required symbolic rule passed,
so both the statistical and the logical leg can veto, and every decision
carries its reasons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .forecaster import Forecast, Side, direction_of
from .indicators import fit_resistance_line, fit_support_line, realized_volatility
from .market_data import Series, Window
from .rule_engine import RuleVerdict

MODEL_FORMAT = 1

BASE_FEATURE_NAMES = (
    "predicted_move",
    "volatility",
    "support_slope",
    "resistance_slope",
    "dist_to_support",
    "dist_to_resistance",
)


class FeatureError(ValueError):
    """A feature component is NaN or infinite."""


class TrainingError(ValueError):
    """The gate cannot be trained on the given dataset/configuration."""


def feature_names(rule_names: list[str] | tuple[str, ...]) -> tuple[str, ...]:
    """Names of the feature vector entries for a given rule configuration."""
    return BASE_FEATURE_NAMES + tuple(f"rule_{name}" for name in rule_names) + ("bias",)


def extract_features(w: Window, forecast: Forecast, verdicts: list[RuleVerdict]) -> np.ndarray:
    """Deterministic fixed-order feature vector for one forecast origin."""
    last = float(w.closes[-1])
    support = fit_support_line(w)
    resistance = fit_resistance_line(w)
    support_end = support.value_at(len(w) - 1)
    resistance_end = resistance.value_at(len(w) - 1)
    values = [
        (forecast.path[-1] - last) / last,
        realized_volatility(w) if len(w) >= 2 else 0.0,
        support.slope / last,
        resistance.slope / last,
        (last - support_end) / last,
        (resistance_end - last) / last,
    ]
    values.extend(1.0 if v.passed else 0.0 for v in verdicts)
    values.append(1.0)
    x = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        names = feature_names([v.rule for v in verdicts])
        bad = names[int(np.argmin(np.isfinite(x)))]
        raise FeatureError(f"non-finite feature {bad!r}")
    return x


def meta_label(forecast: Forecast, realized: Series) -> int:
    """1 if the forecast's directional call matched what the series then did."""
    origin = forecast.origin_index
    end = origin + forecast.horizon
    if origin < 0 or end >= len(realized):
        raise ValueError(
            f"series of length {len(realized)} does not cover origin {origin} "
            f"plus horizon {forecast.horizon}"
        )
    origin_close = realized.candles[origin].close
    realized_side = Side.UP if realized.candles[end].close > origin_close else Side.DOWN
    return int(direction_of(forecast, origin_close) == realized_side)


@dataclass(frozen=True)
class GateModel:
    weights: tuple[float, ...]
    threshold: float
    feature_means: tuple[float, ...]
    feature_stds: tuple[float, ...]
    feature_names: tuple[str, ...]
    epochs: int
    learning_rate: float
    seed: int

    def __post_init__(self):
        # Inclusive bounds so threshold sweeps can pin the gate fully open/closed.
        if not (0.0 <= self.threshold <= 1.0):
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if not all(np.isfinite(self.weights)):
            raise ValueError("model weights must be finite")

    @property
    def dim(self) -> int:
        return len(self.weights)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Stable on both tails.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss_and_gradient(weights: np.ndarray, X: np.ndarray, y: np.ndarray):
    """Mean logistic log-loss and its gradient for label vector y in {0,1}."""
    z = X @ weights
    # softplus(z) - y*z, with softplus computed without overflow
    loss = float(np.mean(np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - y * z))
    grad = X.T @ (_sigmoid(z) - y) / len(y)
    return loss, grad


def _standardize(X: np.ndarray):
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    constant = stds == 0.0
    # Constant features (e.g. the bias term) pass through unchanged.
    means = np.where(constant, 0.0, means)
    stds = np.where(constant, 1.0, stds)
    return (X - means) / stds, means, stds


def train(
    dataset,
    epochs: int = 500,
    learning_rate: float = 0.1,
    seed: int = 0,
    threshold: float = 0.5,
    names: tuple[str, ...] | None = None,
) -> GateModel:
    """Fit the logistic gate by full-batch gradient descent from zero weights.

    The seed is recorded for forward compatibility; with zero initialization
    the fit is already deterministic.
    """
    if not dataset:
        raise TrainingError("empty training dataset")
    X = np.asarray([np.asarray(x, dtype=np.float64) for x, _ in dataset])
    y = np.asarray([float(label) for _, label in dataset])
    classes = set(y.tolist())
    if classes != {0.0, 1.0}:
        raise TrainingError(f"need both labels present, got classes {sorted(classes)}")
    if names is not None and len(names) != X.shape[1]:
        raise TrainingError(f"{len(names)} feature names for {X.shape[1]} features")

    X_std, means, stds = _standardize(X)
    weights = np.zeros(X.shape[1])
    for epoch in range(epochs):
        loss, grad = log_loss_and_gradient(weights, X_std, y)
        if not np.isfinite(loss):
            raise TrainingError(
                f"non-finite loss at epoch {epoch}; lower the learning rate "
                f"(currently {learning_rate})"
            )
        weights -= learning_rate * grad

    if names is None:
        names = tuple(f"f{i}" for i in range(X.shape[1]))
    return GateModel(
        weights=tuple(float(v) for v in weights),
        threshold=threshold,
        feature_means=tuple(float(v) for v in means),
        feature_stds=tuple(float(v) for v in stds),
        feature_names=tuple(names),
        epochs=epochs,
        learning_rate=learning_rate,
        seed=seed,
    )


def score(model: GateModel, x: np.ndarray) -> float:
    """Reliability estimate in [0, 1] for one feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ValueError(f"feature vector of shape {x.shape}, model expects ({model.dim},)")
    x_std = (x - np.asarray(model.feature_means)) / np.asarray(model.feature_stds)
    z = float(np.dot(np.asarray(model.weights), x_std))
    return float(_sigmoid(np.asarray([z]))[0])


@dataclass(frozen=True)
class GateDecision:
    executed: bool
    score: float
    reasons: tuple[str, ...]


def decide(
    score_value: float,
    model: GateModel,
    verdicts: list[RuleVerdict],
    required_rules: list[str] | tuple[str, ...] = (),
) -> GateDecision:
    """Combine the statistical score with rule verdicts into execute/abstain."""
    by_name = {v.rule: v for v in verdicts}
    missing = [name for name in required_rules if name not in by_name]
    if missing:
        raise ValueError(f"required rule(s) {missing} not among verdicts")

    reasons = []
    score_ok = score_value >= model.threshold
    cmp = ">=" if score_ok else "<"
    reasons.append(f"score {score_value:.2f} {cmp} threshold {model.threshold:.2f}")

    rules_ok = True
    for name in required_rules:
        verdict = by_name[name]
        if verdict.passed:
            reasons.append(f"rule {name}: passed")
        else:
            rules_ok = False
            failed = next(e.predicate for e in verdict.trace if not e.passed)
            reasons.append(f"rule {name}: failed ({failed})")

    return GateDecision(executed=score_ok and rules_ok, score=score_value, reasons=tuple(reasons))


def model_to_json(model: GateModel) -> str:
    payload = {
        "format": MODEL_FORMAT,
        "weights": list(model.weights),
        "threshold": model.threshold,
        "feature_means": list(model.feature_means),
        "feature_stds": list(model.feature_stds),
        "feature_names": list(model.feature_names),
        "config": {
            "epochs": model.epochs,
            "learning_rate": model.learning_rate,
            "seed": model.seed,
        },
    }
    return json.dumps(payload, indent=2) + "\n"


def model_from_json(text: str | bytes) -> GateModel:
    payload = json.loads(text)
    fmt = payload.get("format")
    if fmt != MODEL_FORMAT:
        raise ValueError(f"unsupported gate model format {fmt!r}")
    config = payload["config"]
    return GateModel(
        weights=tuple(payload["weights"]),
        threshold=payload["threshold"],
        feature_means=tuple(payload["feature_means"]),
        feature_stds=tuple(payload["feature_stds"]),
        feature_names=tuple(payload["feature_names"]),
        epochs=config["epochs"],
        learning_rate=config["learning_rate"],
        seed=config["seed"],
    )
