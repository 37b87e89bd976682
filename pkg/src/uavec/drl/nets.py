"""Multilayer perceptrons with hand-written reverse-mode differentiation.

The actor maps states to sigmoid-bounded actions through LayerNorm+ReLU
hidden layers; the critic runs state and action through separate input layers
before shared hidden layers produce a scalar value.  Backward passes return
both parameter gradients and input gradients (the critic's action-input
gradient drives the policy update).  Everything is float64 numpy so the
finite-difference checks can be tight.
"""

from __future__ import annotations

import numpy as np

_LN_EPS = 1e-5


def _init_linear(rng: np.random.Generator, n_in: int, n_out: int):
    bound = 1.0 / np.sqrt(n_in)
    w = rng.uniform(-bound, bound, (n_in, n_out))
    b = rng.uniform(-bound, bound, n_out)
    return w, b


def _linear(x, w, b):
    return x @ w + b


def _linear_back(grad, x, w):
    return x.T @ grad, grad.sum(axis=0), grad @ w.T


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_back(grad, pre):
    return grad * (pre > 0)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _layernorm(x, gain, bias):
    mu = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = (x - mu) * inv_std
    return gain * xhat + bias, (xhat, inv_std)


def _layernorm_back(grad, gain, cache):
    xhat, inv_std = cache
    dgain = (grad * xhat).sum(axis=0)
    dbias = grad.sum(axis=0)
    dxhat = grad * gain
    dx = inv_std * (
        dxhat
        - dxhat.mean(axis=1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
    )
    return dgain, dbias, dx


class ActorNet:
    """state -> (0,1)^action_dim policy network."""

    PARAM_KEYS = ("w1", "b1", "g1", "n1", "w2", "b2", "g2", "n2", "w3", "b3")

    def __init__(self, params: dict[str, np.ndarray]):
        self.params = params

    @classmethod
    def init(cls, state_dim: int, action_dim: int, hidden1: int, hidden2: int,
             rng: np.random.Generator) -> "ActorNet":
        w1, b1 = _init_linear(rng, state_dim, hidden1)
        w2, b2 = _init_linear(rng, hidden1, hidden2)
        w3, b3 = _init_linear(rng, hidden2, action_dim)
        return cls({
            "w1": w1, "b1": b1, "g1": np.ones(hidden1), "n1": np.zeros(hidden1),
            "w2": w2, "b2": b2, "g2": np.ones(hidden2), "n2": np.zeros(hidden2),
            "w3": w3, "b3": b3,
        })

    def forward(self, state: np.ndarray):
        p = self.params
        s = np.atleast_2d(state)
        z1 = _linear(s, p["w1"], p["b1"])
        n1, ln1 = _layernorm(z1, p["g1"], p["n1"])
        a1 = _relu(n1)
        z2 = _linear(a1, p["w2"], p["b2"])
        n2, ln2 = _layernorm(z2, p["g2"], p["n2"])
        a2 = _relu(n2)
        z3 = _linear(a2, p["w3"], p["b3"])
        out = _sigmoid(z3)
        cache = (s, n1, ln1, a1, n2, ln2, a2, out)
        return out, cache

    def backward(self, cache, grad_out: np.ndarray):
        p = self.params
        s, n1, ln1, a1, n2, ln2, a2, out = cache
        g = grad_out * out * (1.0 - out)
        dw3, db3, g = _linear_back(g, a2, p["w3"])
        g = _relu_back(g, n2)
        dg2, dn2, g = _layernorm_back(g, p["g2"], ln2)
        dw2, db2, g = _linear_back(g, a1, p["w2"])
        g = _relu_back(g, n1)
        dg1, dn1, g = _layernorm_back(g, p["g1"], ln1)
        dw1, db1, g_in = _linear_back(g, s, p["w1"])
        grads = {
            "w1": dw1, "b1": db1, "g1": dg1, "n1": dn1,
            "w2": dw2, "b2": db2, "g2": dg2, "n2": dn2,
            "w3": dw3, "b3": db3,
        }
        return grads, g_in

    def __call__(self, state: np.ndarray) -> np.ndarray:
        return self.forward(state)[0]


class CriticNet:
    """(state, action) -> scalar value, dual-stream input layers."""

    PARAM_KEYS = ("ws", "bs", "wa", "ba", "w2", "b2", "w3", "b3")

    def __init__(self, params: dict[str, np.ndarray]):
        self.params = params

    @classmethod
    def init(cls, state_dim: int, action_dim: int, hidden1: int, hidden2: int,
             rng: np.random.Generator) -> "CriticNet":
        ws, bs = _init_linear(rng, state_dim, hidden1)
        wa, ba = _init_linear(rng, action_dim, hidden1)
        w2, b2 = _init_linear(rng, 2 * hidden1, hidden2)
        w3, b3 = _init_linear(rng, hidden2, 1)
        return cls({"ws": ws, "bs": bs, "wa": wa, "ba": ba,
                    "w2": w2, "b2": b2, "w3": w3, "b3": b3})

    def forward(self, state: np.ndarray, action: np.ndarray):
        p = self.params
        s, a = np.atleast_2d(state), np.atleast_2d(action)
        zs = _linear(s, p["ws"], p["bs"])
        za = _linear(a, p["wa"], p["ba"])
        hs, ha = _relu(zs), _relu(za)
        cat = np.concatenate([hs, ha], axis=1)
        z2 = _linear(cat, p["w2"], p["b2"])
        h2 = _relu(z2)
        q = _linear(h2, p["w3"], p["b3"])
        cache = (s, a, zs, za, cat, z2, h2)
        return q[:, 0], cache

    def backward(self, cache, grad_q: np.ndarray):
        p = self.params
        s, a, zs, za, cat, z2, h2 = cache
        g = np.atleast_2d(grad_q).reshape(-1, 1)
        dw3, db3, g = _linear_back(g, h2, p["w3"])
        g = _relu_back(g, z2)
        dw2, db2, g = _linear_back(g, cat, p["w2"])
        h1 = p["ws"].shape[1]
        gs, ga = g[:, :h1], g[:, h1:]
        gs = _relu_back(gs, zs)
        ga = _relu_back(ga, za)
        dws, dbs, g_state = _linear_back(gs, s, p["ws"])
        dwa, dba, g_action = _linear_back(ga, a, p["wa"])
        grads = {"ws": dws, "bs": dbs, "wa": dwa, "ba": dba,
                 "w2": dw2, "b2": db2, "w3": dw3, "b3": db3}
        return grads, g_state, g_action

    def __call__(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        return self.forward(state, action)[0]


class Adam:
    """Per-parameter Adam state for one network."""

    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + self.eps)


def soft_update(online: dict[str, np.ndarray], target: dict[str, np.ndarray],
                tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, elementwise."""
    for k in online:
        target[k] *= 1.0 - tau
        target[k] += tau * online[k]


def clone_params(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: v.copy() for k, v in params.items()}


def numerical_gradient(f, params: dict[str, np.ndarray], key: str,
                       h: float = 1e-5) -> np.ndarray:
    """Central finite differences of scalar f() w.r.t. params[key]."""
    p = params[key]
    grad = np.zeros_like(p)
    it = np.nditer(p, flags=["multi_index"])
    while not it.finished:
        i = it.multi_index
        orig = p[i]
        p[i] = orig + h
        f_plus = f()
        p[i] = orig - h
        f_minus = f()
        p[i] = orig
        grad[i] = (f_plus - f_minus) / (2.0 * h)
        it.iternext()
    return grad
