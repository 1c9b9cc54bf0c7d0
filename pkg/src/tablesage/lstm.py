"""Stacked-LSTM numerics: forward pass, backpropagation through time, the
softmax/cross-entropy head, and the Adam update rule.

Everything operates on a flat ``{name: ndarray}`` parameter dict so the same
code paths serve training, gradient checking and serialization. Naming
convention: ``lstm{L}.{w|u|b}{i|f|o|g}`` for layer L's input/forget/output/
candidate gate parameters, ``dense.w`` / ``dense.b`` for the class head.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Params = dict[str, np.ndarray]

GATES = ("i", "f", "o", "g")


def init_params(
    rng: np.random.Generator,
    input_dim: int,
    hidden_size: int,
    num_classes: int,
    num_layers: int = 4,
) -> Params:
    """Seeded init: LSTM weights uniform in +-1/sqrt(fan_in).

    Forget-gate biases start at 1.0 so cell state survives long sequences
    out of the box; at zero the gate halves the state each step and early
    tokens vanish before the final readout. Other biases start at zero.

    The dense head starts at zero, which keeps class columns exchangeable:
    relabeling classes permutes trained outputs exactly.
    """
    params: Params = {}
    width = input_dim
    for layer in range(num_layers):
        for gate in GATES:
            params[f"lstm{layer}.w{gate}"] = _uniform(rng, (width, hidden_size), width)
            params[f"lstm{layer}.u{gate}"] = _uniform(rng, (hidden_size, hidden_size), hidden_size)
            bias = 1.0 if gate == "f" else 0.0
            params[f"lstm{layer}.b{gate}"] = np.full(hidden_size, bias)
        width = hidden_size
    params["dense.w"] = np.zeros((hidden_size, num_classes))
    params["dense.b"] = np.zeros(num_classes)
    return params


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def num_layers_of(params: Params) -> int:
    return 1 + max(int(k[4]) for k in params if k.startswith("lstm"))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _layer_forward(params: Params, layer: int, x: np.ndarray) -> tuple[np.ndarray, dict]:
    """One LSTM layer over a full (B, T, D) sequence, zero initial states."""
    B, T, _ = x.shape
    h_size = params[f"lstm{layer}.bi"].shape[0]
    w = {g: params[f"lstm{layer}.w{g}"] for g in GATES}
    u = {g: params[f"lstm{layer}.u{g}"] for g in GATES}
    b = {g: params[f"lstm{layer}.b{g}"] for g in GATES}
    h = np.zeros((B, h_size))
    c = np.zeros((B, h_size))
    cache = {
        "x": x,
        "i": np.empty((B, T, h_size)),
        "f": np.empty((B, T, h_size)),
        "o": np.empty((B, T, h_size)),
        "g": np.empty((B, T, h_size)),
        "c_prev": np.empty((B, T, h_size)),
        "tanh_c": np.empty((B, T, h_size)),
        "h_prev": np.empty((B, T, h_size)),
        "h": np.empty((B, T, h_size)),
    }
    for t in range(T):
        xt = x[:, t, :]
        cache["h_prev"][:, t] = h
        cache["c_prev"][:, t] = c
        i = _sigmoid(xt @ w["i"] + h @ u["i"] + b["i"])
        f = _sigmoid(xt @ w["f"] + h @ u["f"] + b["f"])
        o = _sigmoid(xt @ w["o"] + h @ u["o"] + b["o"])
        g = np.tanh(xt @ w["g"] + h @ u["g"] + b["g"])
        c = f * c + i * g
        tanh_c = np.tanh(c)
        h = o * tanh_c
        cache["i"][:, t], cache["f"][:, t] = i, f
        cache["o"][:, t], cache["g"][:, t] = o, g
        cache["tanh_c"][:, t] = tanh_c
        cache["h"][:, t] = h
    return cache["h"], cache


def lstm_forward(params: Params, x: np.ndarray) -> tuple[np.ndarray, list[dict]]:
    """Run the full stack over embedded input (B, T, input_dim).

    Returns the top layer's hidden state at the final time step and the
    per-layer caches needed for backpropagation. Pad positions are ordinary
    inputs.
    """
    layers = num_layers_of(params)
    expected = params["lstm0.wi"].shape[0]
    if x.ndim != 3 or x.shape[2] != expected:
        raise ValueError(f"input shape {x.shape} does not match layer-1 width {expected}")
    caches = []
    seq = x
    for layer in range(layers):
        seq, cache = _layer_forward(params, layer, seq)
        caches.append(cache)
    return seq[:, -1, :], caches


def _layer_backward(
    params: Params, layer: int, cache: dict, d_h_seq: np.ndarray, grads: Params
) -> np.ndarray:
    """BPTT for one layer given upstream gradient on each hidden output."""
    x = cache["x"]
    B, T, _ = x.shape
    w = {g: params[f"lstm{layer}.w{g}"] for g in GATES}
    u = {g: params[f"lstm{layer}.u{g}"] for g in GATES}
    h_size = params[f"lstm{layer}.bi"].shape[0]
    d_x = np.zeros_like(x)
    dh_rec = np.zeros((B, h_size))
    dc_rec = np.zeros((B, h_size))
    gw = {g: grads[f"lstm{layer}.w{g}"] for g in GATES}
    gu = {g: grads[f"lstm{layer}.u{g}"] for g in GATES}
    gb = {g: grads[f"lstm{layer}.b{g}"] for g in GATES}
    for t in range(T - 1, -1, -1):
        i, f = cache["i"][:, t], cache["f"][:, t]
        o, g = cache["o"][:, t], cache["g"][:, t]
        tanh_c = cache["tanh_c"][:, t]
        c_prev = cache["c_prev"][:, t]
        h_prev = cache["h_prev"][:, t]
        xt = x[:, t]

        dh = d_h_seq[:, t] + dh_rec
        da_o = dh * tanh_c * o * (1.0 - o)
        dc = dc_rec + dh * o * (1.0 - tanh_c**2)
        da_f = dc * c_prev * f * (1.0 - f)
        da_i = dc * g * i * (1.0 - i)
        da_g = dc * i * (1.0 - g**2)
        das = {"i": da_i, "f": da_f, "o": da_o, "g": da_g}

        d_xt = np.zeros_like(xt)
        dh_rec = np.zeros((B, h_size))
        for gate, da in das.items():
            d_xt += da @ w[gate].T
            dh_rec += da @ u[gate].T
            gw[gate] += xt.T @ da
            gu[gate] += h_prev.T @ da
            gb[gate] += da.sum(axis=0)
        d_x[:, t] = d_xt
        dc_rec = dc * f
    return d_x


def softmax(logits: np.ndarray) -> np.ndarray:
    """Exp-normalize along the last axis with max subtraction for stability."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """-log p[label], with p clamped at 1e-12 so the loss stays finite."""
    return -float(np.log(max(float(probs[label]), 1e-12)))


def model_forward(params: Params, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[dict]]:
    """Stack + dense head. Returns (probs, h_last, caches) for a batch."""
    h_last, caches = lstm_forward(params, x)
    logits = h_last @ params["dense.w"] + params["dense.b"]
    return softmax(logits), h_last, caches


def batch_loss(params: Params, x: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy of a batch; the scalar minimized by training."""
    probs, _, _ = model_forward(params, x)
    return float(np.mean([cross_entropy(probs[i], int(labels[i])) for i in range(len(labels))]))


def loss_and_grads(params: Params, x: np.ndarray, labels: np.ndarray) -> tuple[float, Params]:
    """Mean batch loss and exact analytic gradients for every parameter."""
    probs, h_last, caches = model_forward(params, x)
    B = x.shape[0]
    loss = float(np.mean([cross_entropy(probs[i], int(labels[i])) for i in range(B)]))

    grads: Params = {k: np.zeros_like(v) for k, v in params.items()}
    d_logits = probs.copy()
    d_logits[np.arange(B), labels] -= 1.0
    d_logits /= B
    grads["dense.w"] = h_last.T @ d_logits
    grads["dense.b"] = d_logits.sum(axis=0)
    d_h_last = d_logits @ params["dense.w"].T

    layers = num_layers_of(params)
    T = x.shape[1]
    h_size = params["dense.w"].shape[0]
    d_h_seq = np.zeros((B, T, h_size))
    d_h_seq[:, -1, :] = d_h_last
    for layer in range(layers - 1, -1, -1):
        d_h_seq = _layer_backward(params, layer, caches[layer], d_h_seq, grads)
    return loss, grads


@dataclass
class AdamState:
    """Step counter plus first/second moment estimates per parameter."""

    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Params) -> "AdamState":
        return cls(
            step=0,
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    params: Params,
    grads: Params,
    state: AdamState,
    learning_rate: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> tuple[Params, AdamState]:
    """One bias-corrected Adam update; inputs are left unmodified."""
    t = state.step + 1
    new_params: Params = {}
    new_m: Params = {}
    new_v: Params = {}
    for key, p in params.items():
        g = grads[key]
        m = beta1 * state.m[key] + (1.0 - beta1) * g
        v = beta2 * state.v[key] + (1.0 - beta2) * g**2
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        new_params[key] = p - learning_rate * m_hat / (np.sqrt(v_hat) + epsilon)
        new_m[key] = m
        new_v[key] = v
    return new_params, AdamState(step=t, m=new_m, v=new_v)


def finite_difference_grads(
    loss_fn, params: Params, step: float = 1e-5
) -> Params:
    """Central finite differences of ``loss_fn(params)`` for every entry.

    Independent numerical oracle for ``loss_and_grads``; never shares code
    with the analytic path.
    """
    grads: Params = {}
    for key, p in params.items():
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        g_flat = g.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + step
            up = loss_fn(params)
            flat[idx] = original - step
            down = loss_fn(params)
            flat[idx] = original
            g_flat[idx] = (up - down) / (2.0 * step)
        grads[key] = g
    return grads


def max_relative_error(analytic: Params, numeric: Params, floor: float = 1e-5) -> float:
    """Worst-case |a-n| / max(|a|, |n|, floor) across all parameters."""
    worst = 0.0
    for key in analytic:
        a = analytic[key].reshape(-1)
        n = numeric[key].reshape(-1)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
