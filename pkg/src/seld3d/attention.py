"""Audio-guided video attention stage with a hand-written backward pass.

For audio vector ``a`` (n) and visual vector ``v`` (k)::

    a' = W_a lrelu(U_a a + b_Ua) + b_Wa            (d)
    v' = W_v lrelu(U_v v + b_Uv) + b_Wv            (d)
    g  = sigmoid(W_av tanh(a' + v') + b_Wav)       (k), each entry in (0, 1)

and the stage output is the gated visual vector ``v * g``. All operations
are row-wise, so inputs may be stacked as (rows, n) and (rows, k).
"""

from dataclasses import dataclass, fields

import numpy as np

from .errors import ShapeMismatch, StaleCache
from . import tensorstore

LEAK = 0.01
PARAM_NAMES = ("U_a", "b_Ua", "U_v", "b_Uv", "W_a", "b_Wa", "W_v", "b_Wv", "W_av", "b_Wav")


def lrelu(x):
    return np.where(x > 0, x, LEAK * x)


def lrelu_grad(x):
    # the kink at 0 takes the leaky branch, matching lrelu
    return np.where(x > 0, 1.0, LEAK)


def sigmoid(x):
    # split by sign to avoid overflow in exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass
class AttentionParams:
    U_a: np.ndarray
    b_Ua: np.ndarray
    U_v: np.ndarray
    b_Uv: np.ndarray
    W_a: np.ndarray
    b_Wa: np.ndarray
    W_v: np.ndarray
    b_Wv: np.ndarray
    W_av: np.ndarray
    b_Wav: np.ndarray

    @property
    def dims(self):
        """(n, k, d)"""
        return self.U_a.shape[0], self.U_v.shape[0], self.W_a.shape[0]

    @classmethod
    def init(cls, n, k, d, rng, dtype=np.float64):
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases."""
        def lin(out_dim, in_dim):
            lim = 1.0 / np.sqrt(in_dim)
            w = rng.uniform(-lim, lim, size=(out_dim, in_dim)).astype(dtype)
            b = rng.uniform(-lim, lim, size=out_dim).astype(dtype)
            return w, b

        U_a, b_Ua = lin(n, n)
        U_v, b_Uv = lin(k, k)
        W_a, b_Wa = lin(d, n)
        W_v, b_Wv = lin(d, k)
        W_av, b_Wav = lin(k, d)
        return cls(U_a, b_Ua, U_v, b_Uv, W_a, b_Wa, W_v, b_Wv, W_av, b_Wav)

    @classmethod
    def zeros(cls, n, k, d, dtype=np.float64):
        return cls(np.zeros((n, n), dtype), np.zeros(n, dtype), np.zeros((k, k), dtype),
                   np.zeros(k, dtype), np.zeros((d, n), dtype), np.zeros(d, dtype),
                   np.zeros((d, k), dtype), np.zeros(d, dtype), np.zeros((k, d), dtype),
                   np.zeros(k, dtype))

    def validate(self):
        n, k, d = self.dims
        want = {"U_a": (n, n), "b_Ua": (n,), "U_v": (k, k), "b_Uv": (k,), "W_a": (d, n),
                "b_Wa": (d,), "W_v": (d, k), "b_Wv": (d,), "W_av": (k, d), "b_Wav": (k,)}
        for name, shape in want.items():
            if getattr(self, name).shape != shape:
                raise ShapeMismatch(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def save(self, directory):
        tensorstore.save_dict(self.as_dict(), directory)

    @classmethod
    def load(cls, directory):
        p = cls(**tensorstore.load_dict(directory))
        p.validate()
        return p


@dataclass
class AttentionGrad(AttentionParams):
    dA: np.ndarray = None
    dV: np.ndarray = None


def att_forward(V, A, p: AttentionParams):
    """Return ``(g, cache)`` where ``g`` are the attention weights in (0, 1)."""
    V = np.asarray(V)
    A = np.asarray(A)
    n, k, d = p.dims
    if V.shape[-1] != k or A.shape[-1] != n or V.shape[:-1] != A.shape[:-1]:
        raise ShapeMismatch(f"visual {V.shape} / audio {A.shape} incompatible with n={n}, k={k}")
    ha = A @ p.U_a.T + p.b_Ua
    ra = lrelu(ha)
    hv = V @ p.U_v.T + p.b_Uv
    rv = lrelu(hv)
    s = ra @ p.W_a.T + p.b_Wa + rv @ p.W_v.T + p.b_Wv
    th = np.tanh(s)
    g = sigmoid(th @ p.W_av.T + p.b_Wav)
    cache = {"V": V, "A": A, "ha": ha, "ra": ra, "hv": hv, "rv": rv, "th": th, "g": g,
             "dims": (n, k, d)}
    return g, cache


def apply_gate(V, g):
    V = np.asarray(V)
    g = np.asarray(g)
    if V.shape != g.shape:
        raise ShapeMismatch(f"gate {g.shape} does not match visual {V.shape}")
    return V * g


def attend(V, A, p):
    """Gated visual output ``V * Att(V, A)`` plus the cache for backward."""
    g, cache = att_forward(V, A, p)
    return apply_gate(V, g), cache


def att_backward(d_out, cache, p: AttentionParams) -> AttentionGrad:
    """Gradients of ``L(V * Att(V, A))`` given ``dL/d(V * Att)``."""
    if cache["dims"] != p.dims or np.shape(d_out) != cache["V"].shape:
        raise StaleCache("cache does not belong to these parameters / this output")
    V, A, g, th = cache["V"], cache["A"], cache["g"], cache["th"]
    lead = V.shape[:-1]
    rows = int(np.prod(lead)) if lead else 1
    n, k, d = p.dims

    def flat(x):
        return x.reshape(rows, x.shape[-1])

    d_out = flat(np.asarray(d_out))
    V2, A2, g2, th2 = flat(V), flat(A), flat(g), flat(th)
    ra, rv, ha, hv = flat(cache["ra"]), flat(cache["rv"]), flat(cache["ha"]), flat(cache["hv"])

    dz = d_out * V2 * g2 * (1.0 - g2)
    dW_av = dz.T @ th2
    db_Wav = dz.sum(axis=0)
    ds = (dz @ p.W_av) * (1.0 - th2 ** 2)
    db_Wa = ds.sum(axis=0)
    db_Wv = db_Wa.copy()
    dW_a = ds.T @ ra
    dW_v = ds.T @ rv
    dha = (ds @ p.W_a) * lrelu_grad(ha)
    dhv = (ds @ p.W_v) * lrelu_grad(hv)
    dU_a = dha.T @ A2
    dU_v = dhv.T @ V2
    dA = dha @ p.U_a
    dV = d_out * g2 + dhv @ p.U_v
    return AttentionGrad(dU_a, dha.sum(axis=0), dU_v, dhv.sum(axis=0), dW_a, db_Wa, dW_v,
                         db_Wv, dW_av, db_Wav, dA=dA.reshape(A.shape), dV=dV.reshape(V.shape))
