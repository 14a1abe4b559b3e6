"""Parameter update rules: plain SGD and the two Adam weight-decay variants.

ADAM_COUPLED folds weight decay into the gradient before the moment
estimates (the historically common mis-implementation of decay); with
decay 0 it is exactly standard Adam.  ADAM_DECOUPLED applies decay
directly to the parameters after the Adam step.
"""

import numpy as np

__all__ = ["OPTIMIZER_KINDS", "Adam", "Optimizer", "SGD", "make_optimizer"]

OPTIMIZER_KINDS = ("SGD", "ADAM_COUPLED", "ADAM_DECOUPLED")


class Optimizer:
    kind: str

    def __init__(self, learning_rate: float):
        if learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {learning_rate}")
        self.learning_rate = learning_rate
        self.step_count = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        raise NotImplementedError


class SGD(Optimizer):
    kind = "SGD"

    def step(self, params, grads):
        self.step_count += 1
        for name, p in params.items():
            p -= self.learning_rate * grads[name]


class Adam(Optimizer):
    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8, weight_decay: float = 0.0, decoupled: bool = False):
        super().__init__(learning_rate)
        if weight_decay < 0:
            raise ValueError(f"weight decay must be non-negative, got {weight_decay}")
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.weight_decay = weight_decay
        self.decoupled = decoupled
        self.kind = "ADAM_DECOUPLED" if decoupled else "ADAM_COUPLED"
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params, grads):
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - self.beta1**t
        bias2 = 1.0 - self.beta2**t
        for name, p in params.items():
            g = grads[name]
            if self.weight_decay and not self.decoupled:
                g = g + self.weight_decay * p
            if name not in self._m:
                self._m[name] = np.zeros_like(p)
                self._v[name] = np.zeros_like(p)
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bias1) / (np.sqrt(v / bias2) + self.epsilon)
            if self.weight_decay and self.decoupled:
                update = update + self.weight_decay * p
            p -= self.learning_rate * update


def make_optimizer(kind: str, learning_rate: float, **kwargs) -> Optimizer:
    kind = kind.upper()
    if kind == "SGD":
        return SGD(learning_rate)
    if kind == "ADAM_COUPLED":
        return Adam(learning_rate, decoupled=False, **kwargs)
    if kind == "ADAM_DECOUPLED":
        return Adam(learning_rate, decoupled=True, **kwargs)
    raise ValueError(f"unknown optimizer kind {kind!r}; expected one of {OPTIMIZER_KINDS}")
