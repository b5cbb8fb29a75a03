"""Feedforward demand regressor with two batch trainers.

The network is dense layers with tanh hidden units and a linear output.
Training minimizes the batch mean squared error E either by gradient
descent with momentum,

    delta_w(n) = -epsilon * dE/dw + alpha * delta_w(n-1),

or by the scaled conjugate gradient method, which replaces a line
search with the finite-difference curvature estimate

    H p ~= (E'(w + sigma p) - E'(w)) / sigma + lambda p

regulated by raising and lowering lambda. The SCG core works on any
(value, gradient) callable, so it is reusable outside the network.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import snapshot
from .errors import (
    ConfigError,
    DataError,
    DivergenceError,
    ParseError,
    ShapeError,
)

_LAMBDA_FLOOR = 1e-20


@dataclass
class MlpModel:
    """Layered weights; weights[l] maps layer l (columns) to l+1 (rows)."""

    layer_sizes: tuple
    weights: list
    biases: list
    hidden_activation: str = "tanh_sigmoid"
    output_activation: str = "linear"

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


def init_mlp(layer_sizes, seed: int = 0) -> MlpModel:
    """Seeded uniform init in +-1/sqrt(fan_in); biases start at zero."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ConfigError(f"need input and output layers, got {sizes}")
    if any(s < 1 for s in sizes):
        raise ConfigError(f"layer sizes must be >= 1, got {sizes}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases)


def _forward_layers(model: MlpModel, x: np.ndarray, counter=None):
    """Activations of every layer for a batch; hidden tanh, output linear."""
    acts = [x]
    last = len(model.weights) - 1
    a = x
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        if counter is not None:
            counter.add_gemm(a.shape[0], w.shape[0], w.shape[1])
        a = z if l == last else np.tanh(z)
        if l != last and counter is not None:
            counter.add_transcendental(z.size)
        acts.append(a)
    return acts


def forward(model: MlpModel, x) -> float:
    """Network output for a single input vector; pure."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != model.layer_sizes[0]:
        raise ShapeError(
            f"input has shape {x.shape}, network expects {model.layer_sizes[0]}"
        )
    out = _forward_layers(model, x[None, :])[-1][0]
    return float(out[0]) if out.size == 1 else out


def forward_batch(model: MlpModel, X, counter=None) -> np.ndarray:
    """Outputs for a batch; (N,) when the network has a single output."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.layer_sizes[0]:
        raise ShapeError(
            f"batch has shape {X.shape}, network expects (N, {model.layer_sizes[0]})"
        )
    out = _forward_layers(model, X, counter)[-1]
    return out[:, 0] if model.layer_sizes[-1] == 1 else out


def _as_batch(model: MlpModel, data):
    """Normalize (X, y) arrays or a sequence of (x, y) pairs to arrays."""
    if isinstance(data, tuple) and len(data) == 2:
        X = np.asarray(data[0], dtype=float)
        Y = np.asarray(data[1], dtype=float)
    else:
        pairs = list(data)
        if not pairs:
            raise DataError("empty training batch")
        X = np.stack([np.asarray(x, dtype=float) for x, _ in pairs])
        Y = np.asarray([y for _, y in pairs], dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise DataError("empty training batch")
    if X.shape[1] != model.layer_sizes[0]:
        raise ShapeError(
            f"batch inputs have width {X.shape[1]}, network expects "
            f"{model.layer_sizes[0]}"
        )
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape != (X.shape[0], model.layer_sizes[-1]):
        raise ShapeError(
            f"batch targets have shape {Y.shape}, expected "
            f"({X.shape[0]}, {model.layer_sizes[-1]})"
        )
    return X, Y


def gradient(model: MlpModel, data, counter=None):
    """Exact backpropagated gradient of the batch mean squared error.

    Returns (weight gradients, bias gradients, E).
    """
    X, Y = _as_batch(model, data)
    n = X.shape[0]
    acts = _forward_layers(model, X, counter)
    diff = acts[-1] - Y
    e_value = float((diff * diff).sum(axis=1).mean())
    delta = 2.0 * diff / n
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for l in range(len(model.weights) - 1, -1, -1):
        grads_w[l] = delta.T @ acts[l]
        grads_b[l] = delta.sum(axis=0)
        if counter is not None:
            counter.add_gemm(delta.shape[1], acts[l].shape[1], n)
        if l > 0:
            delta = (delta @ model.weights[l]) * (1.0 - acts[l] * acts[l])
            if counter is not None:
                counter.add_gemm(n, model.weights[l].shape[1], delta.shape[1])
                counter.add(3 * delta.size)
    return grads_w, grads_b, e_value


def flatten_params(model: MlpModel) -> np.ndarray:
    """All weights then all biases as one parameter vector."""
    parts = [w.ravel() for w in model.weights] + [b.ravel() for b in model.biases]
    return np.concatenate(parts)


def set_params(model: MlpModel, vec: np.ndarray) -> None:
    """Write a flat parameter vector back into the layer arrays."""
    if vec.size != model.n_params:
        raise ShapeError(f"vector has {vec.size} entries, model has {model.n_params}")
    pos = 0
    for w in model.weights:
        w[...] = vec[pos : pos + w.size].reshape(w.shape)
        pos += w.size
    for b in model.biases:
        b[...] = vec[pos : pos + b.size]
        pos += b.size


def _flatten_grads(grads_w, grads_b) -> np.ndarray:
    parts = [g.ravel() for g in grads_w] + [g.ravel() for g in grads_b]
    return np.concatenate(parts)


def rmse(predictions, targets) -> float:
    """Root mean squared error between two equal-length sequences."""
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if p.size != t.size:
        raise DataError(f"length mismatch: {p.size} vs {t.size}")
    if p.size == 0:
        raise DataError("rmse of empty sequences")
    return float(np.sqrt(np.mean((p - t) ** 2)))


@dataclass
class BpConfig:
    """Gradient-descent settings: learning rate, momentum, epoch budget."""

    epsilon: float = 0.01
    alpha: float = 0.9
    epochs: int = 2500

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")


def bp_train(model: MlpModel, data, cfg: BpConfig, counter=None) -> list:
    """Full-batch gradient descent with momentum; one update per epoch.

    Returns the per-epoch RMSE trace, evaluated at the parameters each
    epoch starts from. The momentum state persists across epochs.
    """
    X, Y = _as_batch(model, data)
    deltas_w = [np.zeros_like(w) for w in model.weights]
    deltas_b = [np.zeros_like(b) for b in model.biases]
    trace = []
    for epoch in range(1, cfg.epochs + 1):
        # runaway weights overflow quietly here; the check below turns
        # the non-finite error into the failure signal
        with np.errstate(over="ignore", invalid="ignore"):
            grads_w, grads_b, e_value = gradient(model, (X, Y), counter)
        if not math.isfinite(e_value):
            raise DivergenceError(f"training error became non-finite at epoch {epoch}")
        trace.append(math.sqrt(e_value))
        for w, g, d in zip(model.weights, grads_w, deltas_w):
            d *= cfg.alpha
            d -= cfg.epsilon * g
            w += d
        for b, g, d in zip(model.biases, grads_b, deltas_b):
            d *= cfg.alpha
            d -= cfg.epsilon * g
            b += d
        if counter is not None:
            counter.add(4 * model.n_params)
    return trace


def hessian_vector_estimate(fun_grad, w, p, sigma: float, lam: float = 0.0) -> np.ndarray:
    """Finite-difference curvature estimate (E'(w + sigma p) - E'(w)) / sigma + lambda p.

    This is the product the SCG iteration uses in place of an exact
    Hessian-vector multiply. The error is first order in sigma.
    """
    if sigma <= 0.0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    _, g0 = fun_grad(np.asarray(w, dtype=float))
    _, g1 = fun_grad(np.asarray(w, dtype=float) + sigma * np.asarray(p, dtype=float))
    return (g1 - g0) / sigma + lam * np.asarray(p, dtype=float)


@dataclass
class ScgState:
    """Scalars and direction vectors of the scaled conjugate iteration."""

    lam: float
    sigma: float
    direction: np.ndarray
    residual: np.ndarray
    success: bool
    iteration: int


@dataclass
class ScgResult:
    w: np.ndarray
    trace: list
    state: ScgState
    iterations: int
    grad_norm: float
    converged: bool = False


def scg_minimize(fun_grad, w0, iterations: int, sigma0: float = 1e-5,
                 lambda0: float = 1e-6, restart_every: Optional[int] = None,
                 grad_tol: Optional[float] = None, counter=None) -> ScgResult:
    """Scaled conjugate gradient minimization of a smooth function.

    fun_grad(w) must return (value, gradient). Runs the full step
    sequence: curvature along the direction from the sigma-scaled
    gradient difference, positive-definiteness repair and step-quality
    control through lambda (raised x4 on poor steps, lowered x1/4 on
    very good ones), and a restart to steepest descent every
    restart_every iterations (default: problem dimension). Accepted
    steps never increase the function value; rejected steps leave the
    iterate unchanged.
    """
    if iterations < 1:
        raise ConfigError(f"iterations must be >= 1, got {iterations}")
    if sigma0 <= 0.0 or lambda0 < 0.0:
        raise ConfigError("sigma0 must be > 0 and lambda0 >= 0")
    w = np.asarray(w0, dtype=float).copy()
    e_value, g = fun_grad(w)
    if not math.isfinite(e_value):
        raise DivergenceError("objective is non-finite at the starting point")
    r = -np.asarray(g, dtype=float)
    p = r.copy()
    lam = lambda0
    lam_bar = 0.0
    success = True
    delta = 0.0
    n_restart = restart_every if restart_every else max(1, w.size)
    trace = []
    performed = 0
    converged = False
    sigma_k = sigma0
    for k in range(1, iterations + 1):
        trace.append(e_value)
        performed = k
        norm_r = float(np.linalg.norm(r))
        if grad_tol is not None and norm_r < grad_tol:
            converged = True
            break
        pp = float(p @ p)
        if pp == 0.0:
            converged = True
            break
        if success:
            sigma_k = sigma0 / math.sqrt(pp)
            _, g2 = fun_grad(w + sigma_k * p)
            s = (np.asarray(g2, dtype=float) + r) / sigma_k
            delta = float(p @ s)
        delta_k = delta + (lam - lam_bar) * pp
        if delta_k <= 0.0:
            # repair an indefinite curvature estimate
            lam_bar = 2.0 * (lam - delta_k / pp)
            delta_k = -delta_k + lam * pp
            lam = lam_bar
        if delta_k <= 0.0 or not math.isfinite(delta_k):
            delta_k = _LAMBDA_FLOOR * max(pp, 1.0)
        mu = float(p @ r)
        if mu == 0.0:
            p = r.copy()
            success = True
            continue
        alpha = mu / delta_k
        e_new, g_new = fun_grad(w + alpha * p)
        if math.isfinite(e_new):
            comparison = 2.0 * delta_k * (e_value - e_new) / (mu * mu)
        else:
            comparison = -math.inf
        if math.isfinite(comparison) and comparison >= 0.0:
            w = w + alpha * p
            e_value = e_new
            r_old = r
            r = -np.asarray(g_new, dtype=float)
            g = g_new
            lam_bar = 0.0
            success = True
            if k % n_restart == 0:
                p = r.copy()
            else:
                beta = float(r @ r - r @ r_old) / mu
                p = r + beta * p
            if comparison >= 0.75:
                lam = max(lam * 0.25, _LAMBDA_FLOOR)
        else:
            lam_bar = lam
            success = False
        if not (math.isfinite(comparison) and comparison >= 0.25):
            lam = max(lam * 4.0, _LAMBDA_FLOOR)
        if counter is not None:
            counter.add(10 * w.size)
    state = ScgState(
        lam=lam, sigma=sigma_k, direction=p, residual=r,
        success=success, iteration=performed,
    )
    return ScgResult(
        w=w, trace=trace, state=state, iterations=performed,
        grad_norm=float(np.linalg.norm(r)), converged=converged,
    )


def scg_train(model: MlpModel, data, epochs: int, sigma0: float = 1e-5,
              lambda0: float = 1e-6, counter=None) -> list:
    """Train the network by scaled conjugate gradient for a fixed budget.

    Returns the per-epoch RMSE trace (same convention as bp_train).
    """
    X, Y = _as_batch(model, data)

    def fun_grad(vec):
        set_params(model, vec)
        gw, gb, e_value = gradient(model, (X, Y), counter)
        return e_value, _flatten_grads(gw, gb)

    result = scg_minimize(
        fun_grad, flatten_params(model), iterations=epochs,
        sigma0=sigma0, lambda0=lambda0, counter=counter,
    )
    set_params(model, result.w)
    trace = [math.sqrt(e) for e in result.trace]
    while len(trace) < epochs:
        trace.append(trace[-1] if trace else 0.0)
    return trace


# -- serialization ---------------------------------------------------------


def to_text(model: MlpModel, extra: Optional[dict] = None) -> str:
    lines = [snapshot.header_line("mlp")]
    lines.append("layers=" + " ".join(str(s) for s in model.layer_sizes))
    lines.append(f"hidden_activation={model.hidden_activation}")
    lines.append(f"output_activation={model.output_activation}")
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"weight.{l}={snapshot.format_array(w)}")
        lines.append(f"bias.{l}={snapshot.format_array(b)}")
    for key, value in (extra or {}).items():
        lines.append(f"extra.{key}={value}")
    return "\n".join(lines) + "\n"


def from_text(text: str):
    """Rebuild (model, extra) from snapshot text."""
    kind = snapshot.parse_header(text.splitlines()[0] if text else "")
    if kind != "mlp":
        raise ParseError(f"expected an mlp snapshot, got kind={kind!r}")
    body = snapshot.parse_body(text)
    sizes = tuple(int(t) for t in snapshot.need(body, "layers").split())
    if len(sizes) < 2:
        raise ParseError(f"snapshot layer list too short: {sizes}")
    weights = []
    biases = []
    for l, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        w = snapshot.parse_array(snapshot.need(body, f"weight.{l}"))
        if w.size != fan_in * fan_out:
            raise ParseError(f"weight.{l} has {w.size} entries, expected "
                             f"{fan_in * fan_out}")
        weights.append(w.reshape(fan_out, fan_in))
        b = snapshot.parse_array(snapshot.need(body, f"bias.{l}"))
        if b.size != fan_out:
            raise ParseError(f"bias.{l} has {b.size} entries, expected {fan_out}")
        biases.append(b)
    model = MlpModel(
        sizes, weights, biases,
        hidden_activation=snapshot.need(body, "hidden_activation"),
        output_activation=snapshot.need(body, "output_activation"),
    )
    extra = {
        key[len("extra.") :]: value
        for key, value in body.items()
        if key.startswith("extra.")
    }
    return model, extra


def save(model: MlpModel, path, extra: Optional[dict] = None) -> None:
    Path(path).write_text(to_text(model, extra))


def load(path):
    return from_text(Path(path).read_text())
