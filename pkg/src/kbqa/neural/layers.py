"""Batched layers with explicit backward passes.

Inputs are [batch, time, features] float64 arrays with a [batch, time]
mask (1.0 = real token, 0.0 = pad).  Recurrent layers carry the previous
state through masked steps, so right padding never alters the states
seen at real positions and gradients flow straight through pad steps.

Every layer exposes params/grads dicts keyed by local names; models
prefix them with a layer path to build one flat parameter space.
"""

import numpy as np

from .ops import GRU_PARAM_NAMES, LSTM_PARAM_NAMES, init_cell_params, sigmoid

__all__ = [
    "BidirectionalLayer",
    "Conv1dLayer",
    "DenseLayer",
    "DropoutLayer",
    "EmbeddingLayer",
    "RecurrentDirection",
]


class _ParamLayer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def zero_grads(self):
        self.grads = {name: np.zeros_like(arr) for name, arr in self.params.items()}


class EmbeddingLayer(_ParamLayer):
    """Row lookup into a [vocab, dim] matrix; row 0 is reserved for padding
    and is never updated."""

    PAD_ROW = 0

    def __init__(self, matrix: np.ndarray, trainable: bool):
        super().__init__()
        self.params = {"E": np.asarray(matrix, dtype=np.float64)}
        self.trainable = trainable
        self._ids = None

    @property
    def dim(self) -> int:
        return self.params["E"].shape[1]

    def zero_grads(self):
        # skip the (possibly large) grad buffer when frozen
        if self.trainable:
            super().zero_grads()
        else:
            self.grads = {}

    def forward(self, ids: np.ndarray) -> np.ndarray:
        self._ids = ids
        return self.params["E"][ids]

    def backward(self, d_out: np.ndarray) -> None:
        if not self.trainable:
            return
        grad = self.grads["E"]
        np.add.at(grad, self._ids, d_out)
        grad[self.PAD_ROW] = 0.0


class RecurrentDirection(_ParamLayer):
    """One direction of a GRU or LSTM over a padded batch."""

    def __init__(self, kind: str, input_dim: int, hidden_dim: int, reverse: bool,
                 rng: np.random.Generator | None = None, init_scale: float = 0.08):
        super().__init__()
        if kind not in ("gru", "lstm"):
            raise ValueError(f"unknown cell kind {kind!r}")
        self.kind = kind
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.reverse = reverse
        if rng is not None:
            self.params = init_cell_params(kind, input_dim, hidden_dim, rng, init_scale)
        else:
            names = GRU_PARAM_NAMES if kind == "gru" else LSTM_PARAM_NAMES
            self.params = {
                n: np.zeros(
                    (input_dim, hidden_dim) if n.startswith("W")
                    else (hidden_dim, hidden_dim) if n.startswith("U")
                    else (hidden_dim,)
                )
                for n in names
            }
        self._cache = None

    def _step_order(self, t_len: int):
        return range(t_len - 1, -1, -1) if self.reverse else range(t_len)

    def forward(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        b, t_len, _ = x.shape
        p = self.params
        h = np.zeros((b, self.hidden_dim))
        c = np.zeros((b, self.hidden_dim))
        out = np.zeros((b, t_len, self.hidden_dim))
        steps = []
        for t in self._step_order(t_len):
            x_t = x[:, t, :]
            m = mask[:, t, None]
            if self.kind == "gru":
                z = sigmoid(x_t @ p["W_z"] + h @ p["U_z"] + p["b_z"])
                r = sigmoid(x_t @ p["W_r"] + h @ p["U_r"] + p["b_r"])
                rh = r * h
                hc = np.tanh(x_t @ p["W_h"] + rh @ p["U_h"] + p["b_h"])
                h_new = z * h + (1.0 - z) * hc
                steps.append((t, x_t, h, z, r, rh, hc, m))
                h = m * h_new + (1.0 - m) * h
            else:
                i = sigmoid(x_t @ p["W_i"] + h @ p["U_i"] + p["b_i"])
                f = sigmoid(x_t @ p["W_f"] + h @ p["U_f"] + p["b_f"])
                o = sigmoid(x_t @ p["W_o"] + h @ p["U_o"] + p["b_o"])
                g = np.tanh(x_t @ p["W_g"] + h @ p["U_g"] + p["b_g"])
                c_new = f * c + i * g
                tc = np.tanh(c_new)
                h_new = o * tc
                steps.append((t, x_t, h, c, i, f, o, g, tc, m))
                c = m * c_new + (1.0 - m) * c
                h = m * h_new + (1.0 - m) * h
            out[:, t, :] = h
        self._cache = (x.shape, steps)
        return out

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        x_shape, steps = self._cache
        g = self.grads
        p = self.params
        dx = np.zeros(x_shape)
        dh = np.zeros((x_shape[0], self.hidden_dim))
        dc = np.zeros((x_shape[0], self.hidden_dim))
        for step in reversed(steps):
            if self.kind == "gru":
                t, x_t, h_prev, z, r, rh, hc, m = step
                dh = dh + d_out[:, t, :]
                dh_new = dh * m
                dh_prev = dh * (1.0 - m)
                dz = dh_new * (h_prev - hc)
                dhc = dh_new * (1.0 - z)
                dh_prev += dh_new * z
                dah = dhc * (1.0 - hc * hc)
                g["W_h"] += x_t.T @ dah
                g["U_h"] += rh.T @ dah
                g["b_h"] += dah.sum(axis=0)
                dx_t = dah @ p["W_h"].T
                drh = dah @ p["U_h"].T
                dh_prev += drh * r
                dr = drh * h_prev
                daz = dz * z * (1.0 - z)
                dar = dr * r * (1.0 - r)
                g["W_z"] += x_t.T @ daz
                g["U_z"] += h_prev.T @ daz
                g["b_z"] += daz.sum(axis=0)
                g["W_r"] += x_t.T @ dar
                g["U_r"] += h_prev.T @ dar
                g["b_r"] += dar.sum(axis=0)
                dx_t += daz @ p["W_z"].T + dar @ p["W_r"].T
                dh_prev += daz @ p["U_z"].T + dar @ p["U_r"].T
                dx[:, t, :] = dx_t
                dh = dh_prev
            else:
                t, x_t, h_prev, c_prev, i, f, o, g_gate, tc, m = step
                dh = dh + d_out[:, t, :]
                dh_new = dh * m
                dh_prev = dh * (1.0 - m)
                dc_new = dc * m
                dc_prev = dc * (1.0 - m)
                do = dh_new * tc
                dc_new += dh_new * o * (1.0 - tc * tc)
                df = dc_new * c_prev
                di = dc_new * g_gate
                dg = dc_new * i
                dc_prev += dc_new * f
                dai = di * i * (1.0 - i)
                daf = df * f * (1.0 - f)
                dao = do * o * (1.0 - o)
                dag = dg * (1.0 - g_gate * g_gate)
                dx_t = np.zeros_like(x_t)
                for a, w_name in ((dai, "i"), (daf, "f"), (dao, "o"), (dag, "g")):
                    g[f"W_{w_name}"] += x_t.T @ a
                    g[f"U_{w_name}"] += h_prev.T @ a
                    g[f"b_{w_name}"] += a.sum(axis=0)
                    dx_t += a @ p[f"W_{w_name}"].T
                    dh_prev += a @ p[f"U_{w_name}"].T
                dx[:, t, :] = dx_t
                dh = dh_prev
                dc = dc_prev
        return dx


class BidirectionalLayer:
    """Forward and backward recurrences with concatenated outputs [B, T, 2H].

    The final sequence representation (for classification heads) is
    concat(forward state at the last step, backward state at step 0);
    with carry masking these are the states after the last real token in
    each direction.
    """

    def __init__(self, kind: str, input_dim: int, hidden_dim: int,
                 rng: np.random.Generator | None = None, init_scale: float = 0.08):
        self.kind = kind
        self.hidden_dim = hidden_dim
        self.fwd = RecurrentDirection(kind, input_dim, hidden_dim, False, rng, init_scale)
        self.bwd = RecurrentDirection(kind, input_dim, hidden_dim, True, rng, init_scale)

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden_dim

    def param_items(self):
        for name, arr in self.fwd.params.items():
            yield f"fwd.{name}", arr
        for name, arr in self.bwd.params.items():
            yield f"bwd.{name}", arr

    def grad_items(self):
        for name, arr in self.fwd.grads.items():
            yield f"fwd.{name}", arr
        for name, arr in self.bwd.grads.items():
            yield f"bwd.{name}", arr

    def zero_grads(self):
        self.fwd.zero_grads()
        self.bwd.zero_grads()

    def forward(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        return np.concatenate(
            [self.fwd.forward(x, mask), self.bwd.forward(x, mask)], axis=2
        )

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        h = self.hidden_dim
        return self.fwd.backward(d_out[:, :, :h]) + self.bwd.backward(d_out[:, :, h:])

    @staticmethod
    def final_state(out: np.ndarray, hidden_dim: int) -> np.ndarray:
        return np.concatenate([out[:, -1, :hidden_dim], out[:, 0, hidden_dim:]], axis=1)

    @staticmethod
    def inject_final_grad(d_final: np.ndarray, out_shape, hidden_dim: int) -> np.ndarray:
        d_out = np.zeros(out_shape)
        d_out[:, -1, :hidden_dim] = d_final[:, :hidden_dim]
        d_out[:, 0, hidden_dim:] = d_final[:, hidden_dim:]
        return d_out


class Conv1dLayer(_ParamLayer):
    """Causal same-length 1-D convolution (left zero pad) with ReLU."""

    def __init__(self, n_filters: int, width: int, input_dim: int,
                 rng: np.random.Generator | None = None, init_scale: float = 0.08):
        super().__init__()
        self.n_filters = n_filters
        self.width = width
        self.input_dim = input_dim
        if rng is not None:
            self.params = {
                "F": rng.uniform(-init_scale, init_scale, size=(n_filters, width, input_dim)),
                "b": rng.uniform(-init_scale, init_scale, size=n_filters),
            }
        else:
            self.params = {
                "F": np.zeros((n_filters, width, input_dim)),
                "b": np.zeros(n_filters),
            }
        self._cache = None

    @property
    def output_dim(self) -> int:
        return self.n_filters

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, t_len, depth = x.shape
        padded = np.concatenate([np.zeros((b, self.width - 1, depth)), x], axis=1)
        pre = np.broadcast_to(self.params["b"], (b, t_len, self.n_filters)).copy()
        for j in range(self.width):
            pre += padded[:, j : j + t_len, :] @ self.params["F"][:, j, :].T
        self._cache = (padded, pre > 0.0, t_len)
        return np.maximum(pre, 0.0)

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        padded, active, t_len = self._cache
        d_pre = d_out * active
        self.grads["b"] += d_pre.sum(axis=(0, 1))
        d_padded = np.zeros_like(padded)
        for j in range(self.width):
            window = padded[:, j : j + t_len, :]
            self.grads["F"][:, j, :] += np.einsum("btf,btd->fd", d_pre, window)
            d_padded[:, j : j + t_len, :] += d_pre @ self.params["F"][:, j, :]
        return d_padded[:, self.width - 1 :, :]


class DenseLayer(_ParamLayer):
    """Affine map to class logits; weights are [classes, hidden]."""

    def __init__(self, input_dim: int, n_classes: int,
                 rng: np.random.Generator | None = None, init_scale: float = 0.08):
        super().__init__()
        self.input_dim = input_dim
        self.n_classes = n_classes
        if rng is not None:
            self.params = {
                "W": rng.uniform(-init_scale, init_scale, size=(n_classes, input_dim)),
                "b": rng.uniform(-init_scale, init_scale, size=n_classes),
            }
        else:
            self.params = {"W": np.zeros((n_classes, input_dim)), "b": np.zeros(n_classes)}
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        flat = x.reshape(-1, x.shape[-1])
        self._cache = (flat, x.shape)
        logits = flat @ self.params["W"].T + self.params["b"]
        return logits.reshape(*x.shape[:-1], self.n_classes)

    def backward(self, d_logits: np.ndarray) -> np.ndarray:
        flat_in, in_shape = self._cache
        d_flat = d_logits.reshape(-1, self.n_classes)
        self.grads["W"] += d_flat.T @ flat_in
        self.grads["b"] += d_flat.sum(axis=0)
        return (d_flat @ self.params["W"]).reshape(in_shape)


class DropoutLayer:
    """Inverted dropout; identity at inference or rate 0."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self._mask = None

    def forward(self, x: np.ndarray, training: bool, rng: np.random.Generator) -> np.ndarray:
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        self._mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * self._mask

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return d_out
        return d_out * self._mask
