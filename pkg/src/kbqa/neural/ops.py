"""Single-example forward operations for the recurrent/convolutional stack.

These are the reference semantics of every layer, written over plain
float64 arrays.  Batched training uses the layer classes in
kbqa.neural.layers, which are tested for agreement with these functions.

Cell equations (sigmoid s, elementwise *):

  GRU   z = s(W_z x + U_z h + b_z)        LSTM  i, f, o = s(gates)
        r = s(W_r x + U_r h + b_r)              g = tanh(W_g x + U_g h + b_g)
        hc = tanh(W_h x + U_h (r*h) + b_h)      c' = f*c + i*g
        h' = z*h + (1 - z)*hc                   h' = o*tanh(c')
"""

import numpy as np

__all__ = [
    "GRU_PARAM_NAMES",
    "LSTM_PARAM_NAMES",
    "apply_dropout",
    "bidirectional_forward",
    "conv1d_forward",
    "dense_softmax",
    "gru_cell_forward",
    "init_cell_params",
    "loss",
    "lstm_cell_forward",
    "sigmoid",
    "softmax",
]

GRU_PARAM_NAMES = ("W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h")
LSTM_PARAM_NAMES = (
    "W_i", "U_i", "b_i", "W_f", "U_f", "b_f",
    "W_o", "U_o", "b_o", "W_g", "U_g", "b_g",
)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def init_cell_params(
    kind: str, input_dim: int, hidden_dim: int, rng: np.random.Generator, scale: float = 0.08
) -> dict[str, np.ndarray]:
    """Seeded uniform(-scale, scale) parameters for one recurrent cell.

    W_* have shape [input_dim, hidden_dim] (inputs are row vectors),
    U_* are [hidden_dim, hidden_dim], b_* are [hidden_dim].
    """
    names = {"gru": GRU_PARAM_NAMES, "lstm": LSTM_PARAM_NAMES}[kind]
    params = {}
    for name in names:
        if name.startswith("W"):
            shape = (input_dim, hidden_dim)
        elif name.startswith("U"):
            shape = (hidden_dim, hidden_dim)
        else:
            shape = (hidden_dim,)
        params[name] = rng.uniform(-scale, scale, size=shape)
    return params


def _check_cell_shapes(x, h_prev, params, w_name):
    d, hidden = params[w_name].shape
    if x.shape != (d,):
        raise ValueError(f"x has shape {x.shape}, cell expects ({d},)")
    if h_prev.shape != (hidden,):
        raise ValueError(f"h_prev has shape {h_prev.shape}, cell expects ({hidden},)")


def gru_cell_forward(x: np.ndarray, h_prev: np.ndarray, params: dict) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    _check_cell_shapes(x, h_prev, params, "W_z")
    z = sigmoid(x @ params["W_z"] + h_prev @ params["U_z"] + params["b_z"])
    r = sigmoid(x @ params["W_r"] + h_prev @ params["U_r"] + params["b_r"])
    hc = np.tanh(x @ params["W_h"] + (r * h_prev) @ params["U_h"] + params["b_h"])
    return z * h_prev + (1.0 - z) * hc


def lstm_cell_forward(
    x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray, params: dict
) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    _check_cell_shapes(x, h_prev, params, "W_i")
    i = sigmoid(x @ params["W_i"] + h_prev @ params["U_i"] + params["b_i"])
    f = sigmoid(x @ params["W_f"] + h_prev @ params["U_f"] + params["b_f"])
    o = sigmoid(x @ params["W_o"] + h_prev @ params["U_o"] + params["b_o"])
    g = np.tanh(x @ params["W_g"] + h_prev @ params["U_g"] + params["b_g"])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c


def _run_direction(sequence: np.ndarray, cell: str, params: dict, reverse: bool) -> np.ndarray:
    steps = range(len(sequence) - 1, -1, -1) if reverse else range(len(sequence))
    hidden = params["b_z" if cell == "gru" else "b_i"].shape[0]
    h = np.zeros(hidden)
    c = np.zeros(hidden)
    out = np.zeros((len(sequence), hidden))
    for t in steps:
        if cell == "gru":
            h = gru_cell_forward(sequence[t], h, params)
        else:
            h, c = lstm_cell_forward(sequence[t], h, c, params)
        out[t] = h
    return out


def bidirectional_forward(
    sequence: np.ndarray, cell: str, params_fwd: dict, params_bwd: dict
) -> np.ndarray:
    """Run a cell over the sequence in both directions; row t is
    concat(forward state at t, backward state at t).  Initial states zero."""
    sequence = np.asarray(sequence, dtype=np.float64)
    if sequence.ndim != 2 or len(sequence) < 1:
        raise ValueError(f"sequence must be [T, d] with T >= 1, got {sequence.shape}")
    if cell not in ("gru", "lstm"):
        raise ValueError(f"unknown cell kind {cell!r}")
    fwd = _run_direction(sequence, cell, params_fwd, reverse=False)
    bwd = _run_direction(sequence, cell, params_bwd, reverse=True)
    return np.concatenate([fwd, bwd], axis=1)


def conv1d_forward(
    sequence: np.ndarray, filters: np.ndarray, bias: np.ndarray, padding: str = "same"
) -> np.ndarray:
    """Same-length causal 1-D convolution (left zero pad) followed by ReLU."""
    if padding != "same":
        raise ValueError(f"only 'same' padding is supported, got {padding!r}")
    sequence = np.asarray(sequence, dtype=np.float64)
    filters = np.asarray(filters, dtype=np.float64)
    n_filters, width, depth = filters.shape
    if sequence.ndim != 2 or sequence.shape[1] != depth:
        raise ValueError(
            f"sequence shape {sequence.shape} does not match filter depth {depth}"
        )
    t_len = sequence.shape[0]
    padded = np.concatenate([np.zeros((width - 1, depth)), sequence], axis=0)
    pre = np.tile(np.asarray(bias, dtype=np.float64), (t_len, 1))
    for j in range(width):
        pre += padded[j : j + t_len] @ filters[:, j, :].T
    return np.maximum(pre, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax along the last axis."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / np.sum(ex, axis=-1, keepdims=True)


def dense_softmax(h: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Probabilities softmax(W h + b) with weights shaped [classes, hidden]."""
    h = np.asarray(h, dtype=np.float64)
    if weights.shape[1] != h.shape[-1]:
        raise ValueError(
            f"weights {weights.shape} incompatible with input {h.shape}"
        )
    return softmax(h @ weights.T + bias)


def loss(probs: np.ndarray, target, activations=(), l1_activity: float = 0.0) -> float:
    """Mean cross-entropy plus l1_activity times the mean |activation|.

    probs is one distribution [K] with an int target, or a per-step
    matrix [T, K] with a sequence of targets.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 1:
        targets = [int(target)]
        rows = probs[None, :]
    else:
        targets = [int(t) for t in target]
        if len(targets) != probs.shape[0]:
            raise ValueError(
                f"{len(targets)} targets for {probs.shape[0]} distributions"
            )
        rows = probs
    n_classes = rows.shape[1]
    for t in targets:
        if not 0 <= t < n_classes:
            raise ValueError(f"target {t} out of range for {n_classes} classes")
    ce = -np.mean([np.log(rows[i, t]) for i, t in enumerate(targets)])
    penalty = 0.0
    if l1_activity:
        total = 0.0
        count = 0
        for act in activations:
            act = np.asarray(act)
            total += np.sum(np.abs(act))
            count += act.size
        if count:
            penalty = l1_activity * total / count
    return float(ce + penalty)


def apply_dropout(
    activations: np.ndarray, rate: float, training: bool, rng: np.random.Generator
) -> np.ndarray:
    """Inverted dropout: zero units with probability rate, scale survivors."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return activations
    mask = (rng.random(activations.shape) >= rate) / (1.0 - rate)
    return activations * mask
