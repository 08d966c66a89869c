"""Desk-scale multi-stage video attention network with manual backprop.

Data flow for a batch of B clips (T audio frames, F mel bins, Tv = T / 5)::

    audio (B, 7, T, F) -> 4 x [conv3x3 -> lrelu -> freq avg-pool x2]
        stage s: freq-mean -> avg+max pool to video rate -> A_s (B, Tv, w_s)
                 V_s = V_{s-1} * Att_s(V_{s-1}, A_s)          (V_0 = visual, 49-dim)
    concat(pooled flattened stage-4 audio, V_4) -> dilated temporal conv -> lrelu
        -> SED head: fc -> lrelu -> fc -> sigmoid      (B, Tv, C)
        -> SCE head: fc -> lrelu -> fc (linear)        (B, Tv, C, 3)
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .attention import AttentionParams, att_backward, att_forward, lrelu, lrelu_grad, sigmoid
from .errors import NonFiniteLoss, ShapeMismatch
from .features import VIDEO_REPEAT, VISUAL_DIM
from .losses import LossBreakdown, sce_masked_mse, sed_bce, total_loss
from . import tensorstore

N_STAGES = 4
AUDIO_CHANNELS = 7


@dataclass
class ToyNetConfig:
    n_classes: int = 3
    widths: tuple = (16, 16, 16, 16)
    visual_dim: int = VISUAL_DIM
    att_dim: int = 256
    context_width: int = 64
    head_hidden: int = 64
    dilation: int = 2
    n_mels: int = 64
    use_attention: bool = True
    zero_heads: bool = False
    seed: int = 0

    def validate(self):
        if len(self.widths) != N_STAGES or min(self.widths) <= 0:
            raise ValueError(f"need {N_STAGES} positive stage widths, got {self.widths}")
        if self.n_mels % 2 ** N_STAGES:
            raise ValueError(f"n_mels must be divisible by {2 ** N_STAGES}")
        for name in ("n_classes", "visual_dim", "att_dim", "context_width", "head_hidden", "dilation"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def fused_dim(self):
        return (self.n_mels // 2 ** N_STAGES) * self.widths[-1] + self.visual_dim


def _uniform(rng, shape, fan_in, dtype):
    lim = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-lim, lim, size=shape).astype(dtype)


def init_params(cfg: ToyNetConfig, dtype=np.float64) -> dict:
    """Fresh parameters, uniform(+-1/sqrt(fan_in)), deterministic in ``cfg.seed``."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    p = {}
    cin = AUDIO_CHANNELS
    for s, w in enumerate(cfg.widths):
        p[f"conv{s}.W"] = _uniform(rng, (3, 3, cin, w), 9 * cin, dtype)
        p[f"conv{s}.b"] = _uniform(rng, (w,), 9 * cin, dtype)
        att = AttentionParams.init(w, cfg.visual_dim, cfg.att_dim, rng, dtype)
        for name, arr in att.as_dict().items():
            p[f"att{s}.{name}"] = arr
        cin = w
    fd, cw, hh, C = cfg.fused_dim, cfg.context_width, cfg.head_hidden, cfg.n_classes
    p["ctx.W"] = _uniform(rng, (3, fd, cw), 3 * fd, dtype)
    p["ctx.b"] = _uniform(rng, (cw,), 3 * fd, dtype)
    for head, out in (("sed", C), ("sce", 3 * C)):
        p[f"{head}1.W"] = _uniform(rng, (cw, hh), cw, dtype)
        p[f"{head}1.b"] = _uniform(rng, (hh,), cw, dtype)
        if cfg.zero_heads:
            p[f"{head}2.W"] = np.zeros((hh, out), dtype)
            p[f"{head}2.b"] = np.zeros(out, dtype)
        else:
            p[f"{head}2.W"] = _uniform(rng, (hh, out), hh, dtype)
            p[f"{head}2.b"] = _uniform(rng, (out,), hh, dtype)
    # fixed input standardisation, set from data by fit_normalizer
    p["norm.mean"] = np.zeros(AUDIO_CHANNELS, dtype)
    p["norm.std"] = np.ones(AUDIO_CHANNELS, dtype)
    return p


FROZEN = ("norm.mean", "norm.std")


def trainable(params):
    return [k for k in params if k not in FROZEN]


def fit_normalizer(params, audio):
    """Per-channel mean/std over a (B, 7, T, F) training array."""
    params["norm.mean"] = audio.mean(axis=(0, 2, 3)).astype(params["norm.mean"].dtype)
    std = audio.std(axis=(0, 2, 3))
    params["norm.std"] = np.where(std > 1e-6, std, 1.0).astype(params["norm.std"].dtype)


def _attention_view(params, s):
    return AttentionParams(**{n: params[f"att{s}.{n}"] for n in
                              ("U_a", "b_Ua", "U_v", "b_Uv", "W_a", "b_Wa", "W_v", "b_Wv",
                               "W_av", "b_Wav")})


def forward(params, audio, visual, cfg: ToyNetConfig):
    """Run the network.

    audio: (B, 7, T, F) or (7, T, F); visual: (B, T/5, 49) or (T/5, 49).
    Returns ``(sed, sce, cache)`` with sed (B, Tv, C) in (0, 1) and sce (B, Tv, C, 3).
    """
    single = np.ndim(audio) == 3
    if single:
        audio, visual = audio[None], visual[None]
    audio = np.asarray(audio)
    visual = np.asarray(visual)
    if audio.ndim != 4 or audio.shape[1] != AUDIO_CHANNELS:
        raise ShapeMismatch(f"audio features must be (B, 7, T, F), got {audio.shape}")
    B, _, T, F = audio.shape
    if T % VIDEO_REPEAT or F % 2 ** N_STAGES:
        raise ShapeMismatch(f"T must divide by {VIDEO_REPEAT} and F by {2 ** N_STAGES}")
    Tv = T // VIDEO_REPEAT
    if visual.shape != (B, Tv, cfg.visual_dim):
        raise ShapeMismatch(f"visual features must be {(B, Tv, cfg.visual_dim)}, got {visual.shape}")
    dtype = params["conv0.W"].dtype
    x = np.ascontiguousarray(
        ((audio - params["norm.mean"][:, None, None]) / params["norm.std"][:, None, None])
        .transpose(0, 2, 3, 1), dtype=dtype)
    v = np.asarray(visual, dtype=dtype)
    cache = {"stages": [], "B": B, "single": single}
    for s in range(N_STAGES):
        h = kernels.conv3x3_fwd(x, params[f"conv{s}.W"], params[f"conv{s}.b"])
        r = lrelu(h)
        b_, t_, f_, w_ = r.shape
        pooled = r.reshape(b_, t_, f_ // 2, 2, w_).mean(axis=3)
        a_emb = np.ascontiguousarray(pooled.mean(axis=2))
        A, a_idx = kernels.temporal_pool_fwd(a_emb)
        st = {"x": x, "h": h, "a_idx": a_idx, "F": f_, "v_in": v}
        if cfg.use_attention:
            g, att_cache = att_forward(v, A, _attention_view(params, s))
            st["att"] = att_cache
            v = v * g
        cache["stages"].append(st)
        x = np.ascontiguousarray(pooled)
    b_, t_, f_, w_ = x.shape
    a_final, fin_idx = kernels.temporal_pool_fwd(np.ascontiguousarray(x.reshape(b_, t_, f_ * w_)))
    z = np.ascontiguousarray(np.concatenate([a_final, v], axis=2))
    hc = kernels.dilated_conv_fwd(z, params["ctx.W"], params["ctx.b"], cfg.dilation)
    ctx = lrelu(hc)
    h_sed = ctx @ params["sed1.W"] + params["sed1.b"]
    r_sed = lrelu(h_sed)
    sed = sigmoid(r_sed @ params["sed2.W"] + params["sed2.b"])
    h_sce = ctx @ params["sce1.W"] + params["sce1.b"]
    r_sce = lrelu(h_sce)
    sce = (r_sce @ params["sce2.W"] + params["sce2.b"]).reshape(B, Tv, cfg.n_classes, 3)
    cache.update(final_shape=x.shape, fin_idx=fin_idx, a_final_dim=f_ * w_, z=z, hc=hc, ctx=ctx,
                 h_sed=h_sed, r_sed=r_sed, sed=sed, h_sce=h_sce, r_sce=r_sce)
    if single:
        return sed[0], sce[0], cache
    return sed, sce, cache


def backward(params, cache, d_sed, d_sce, cfg: ToyNetConfig) -> dict:
    """Gradients of every parameter given dL/dsed and dL/dsce."""
    if cache["single"]:
        d_sed, d_sce = d_sed[None], d_sce[None]
    B = cache["B"]
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    sed = cache["sed"]
    d_logit = d_sed * sed * (1.0 - sed)
    d_sce = d_sce.reshape(B, -1, 3 * cfg.n_classes)

    ctx = cache["ctx"]
    flat_ctx = ctx.reshape(-1, ctx.shape[-1])
    d_ctx = np.zeros_like(ctx)
    for head, dout in (("sed", d_logit), ("sce", d_sce)):
        r = cache[f"r_{head}"]
        d2 = dout.reshape(-1, dout.shape[-1])
        grads[f"{head}2.W"] = r.reshape(-1, r.shape[-1]).T @ d2
        grads[f"{head}2.b"] = d2.sum(axis=0)
        dh = (dout @ params[f"{head}2.W"].T) * lrelu_grad(cache[f"h_{head}"])
        dh2 = dh.reshape(-1, dh.shape[-1])
        grads[f"{head}1.W"] = flat_ctx.T @ dh2
        grads[f"{head}1.b"] = dh2.sum(axis=0)
        d_ctx += dh @ params[f"{head}1.W"].T

    d_hc = np.ascontiguousarray(d_ctx * lrelu_grad(cache["hc"]))
    d_z, grads["ctx.W"], grads["ctx.b"] = kernels.dilated_conv_bwd(
        cache["z"], params["ctx.W"], d_hc, cfg.dilation)
    na = cache["a_final_dim"]
    d_afinal = np.ascontiguousarray(d_z[..., :na])
    d_v = d_z[..., na:]
    b_, t_, f_, w_ = cache["final_shape"]
    d_x = kernels.temporal_pool_bwd(d_afinal, cache["fin_idx"]).reshape(b_, t_, f_, w_)

    for s in reversed(range(N_STAGES)):
        st = cache["stages"][s]
        d_A = None
        if cfg.use_attention:
            ag = att_backward(d_v, st["att"], _attention_view(params, s))
            for name in ("U_a", "b_Ua", "U_v", "b_Uv", "W_a", "b_Wa", "W_v", "b_Wv", "W_av", "b_Wav"):
                grads[f"att{s}.{name}"] = getattr(ag, name)
            d_A = ag.dA
            d_v = ag.dV
        # d_x is the gradient w.r.t. the pooled stage output (B, T, F/2, w)
        if d_A is not None:
            d_emb = kernels.temporal_pool_bwd(np.ascontiguousarray(d_A), st["a_idx"])
            half = st["F"] // 2
            d_x = d_x + d_emb[:, :, None, :] / half
        d_r = np.repeat(d_x, 2, axis=2) / 2.0
        d_h = np.ascontiguousarray(d_r * lrelu_grad(st["h"]))
        d_x, grads[f"conv{s}.W"], grads[f"conv{s}.b"] = kernels.conv3x3_bwd(
            st["x"], params[f"conv{s}.W"], d_h)
    return grads


def batch_targets(labels, n_frames, n_classes):
    """Stacked (B, Tv, C) activity and (B, Tv, C, 3) targets from per-clip label lists."""
    from .codec import encode_sequence
    acts, tgts = zip(*(encode_sequence(l, n_frames, n_classes) for l in labels))
    return np.stack(acts), np.stack(tgts)


def loss_and_grad(params, audio, visual, activity, targets, cfg: ToyNetConfig, need_grad=True):
    """Joint loss over a batch; T in the normalisation is B * Tv frames."""
    sed, sce, cache = forward(params, audio, visual, cfg)
    C = cfg.n_classes
    l1, g_sed = sed_bce(sed.reshape(-1, C), np.reshape(activity, (-1, C)))
    l2, g_sce = sce_masked_mse(sce.reshape(-1, C, 3), np.reshape(targets, (-1, C, 3)),
                               np.reshape(activity, (-1, C)))
    lb = total_loss(l1, l2)
    if not need_grad:
        return lb, None
    g = backward(params, cache, lb.sed_weight * g_sed.reshape(sed.shape),
                 lb.sce_weight * g_sce.reshape(sce.shape), cfg)
    return lb, g


# ---------------------------------------------------------------------------
# optimisation

def tri_stage_lr(step, total_steps, peak=5e-4, phases=(0.1, 0.4, 0.5), floor_factor=0.01):
    """Linear warm-up, hold at ``peak``, exponential decay to ``peak * floor_factor``."""
    if total_steps <= 0:
        return peak
    step = min(max(step, 0), total_steps)
    warm = phases[0] * total_steps
    hold = phases[1] * total_steps
    decay = phases[2] * total_steps
    low = peak * floor_factor
    if step < warm:
        return low + (peak - low) * step / warm
    if step <= warm + hold or decay <= 0:
        return peak
    frac = min((step - warm - hold) / decay, 1.0)
    return peak * floor_factor ** frac


@dataclass
class TrainState:
    params: dict
    m: dict
    v: dict
    step: int = 0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    @classmethod
    def create(cls, params, seed=0):
        names = trainable(params)
        return cls(params, {k: np.zeros_like(params[k]) for k in names},
                   {k: np.zeros_like(params[k]) for k in names}, 0, np.random.default_rng(seed))


def adam_update(state: TrainState, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One in-place Adam step with bias correction."""
    state.step += 1
    c1 = 1.0 - beta1 ** state.step
    c2 = 1.0 - beta2 ** state.step
    for k in state.m:
        g = grads[k]
        m = state.m[k]
        v = state.v[k]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        state.params[k] -= (lr * (m / c1) / (np.sqrt(v / c2) + eps)).astype(state.params[k].dtype)


def train_step(state: TrainState, batch, lr, cfg: ToyNetConfig):
    """Compute the loss on ``batch = (audio, visual, activity, targets)`` and take an Adam step."""
    audio, visual, activity, targets = batch
    lb, grads = loss_and_grad(state.params, audio, visual, activity, targets, cfg)
    if not np.isfinite(lb.total):
        raise NonFiniteLoss(f"loss became {lb.total} at step {state.step}")
    adam_update(state, grads, lr)
    return state, lb


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(directory, params, cfg: ToyNetConfig):
    import os
    tensorstore.save_dict(params, directory)
    with open(os.path.join(directory, "config.txt"), "w") as fh:
        fh.write(config_to_text(cfg))


def load_checkpoint(directory):
    import os
    with open(os.path.join(directory, "config.txt")) as fh:
        cfg = config_from_text(fh.read())
    params = tensorstore.load_dict(directory)
    ref = init_params(cfg, dtype=params["conv0.W"].dtype)
    for k, arr in ref.items():
        if k not in params or params[k].shape != arr.shape:
            raise ShapeMismatch(f"checkpoint tensor {k} missing or mis-shaped")
    return params, cfg


def config_to_text(cfg: ToyNetConfig) -> str:
    return "".join(f"{k}={','.join(map(str, v)) if isinstance(v, tuple) else v}\n"
                   for k, v in cfg.__dict__.items())


def config_from_text(text: str) -> ToyNetConfig:
    kv = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            k, _, v = line.partition("=")
            kv[k.strip()] = v.strip()
    cfg = ToyNetConfig()
    for k, v in kv.items():
        if not hasattr(cfg, k):
            continue
        cur = getattr(cfg, k)
        if isinstance(cur, bool):
            setattr(cfg, k, v.lower() in ("1", "true", "yes"))
        elif isinstance(cur, tuple):
            setattr(cfg, k, tuple(int(x) for x in v.split(",")))
        else:
            setattr(cfg, k, type(cur)(v))
    cfg.validate()
    return cfg
