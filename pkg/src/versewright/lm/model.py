"""Transformer forward pass, analytic backward pass, and loss.

Pre-norm GPT-style blocks: layer norm at the input of each sub-block, one
more after the final block, learned positional embeddings, and the output
projection tied to the token embedding.  All math is plain numpy so the
float64 mode can be checked against finite differences parameter by
parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError

LN_EPS = 1e-5
INIT_STD = 0.02
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int = 4
    n_heads: int = 4
    d_model: int = 128
    context_len: int = 256
    vocab_size: int = 2000
    ffn_mult: int = 4
    precision: str = "float32"

    def __post_init__(self) -> None:
        if self.d_model % self.n_heads != 0:
            raise ValidationError("d_model must be divisible by n_heads")
        if self.context_len < 2:
            raise ValidationError("context_len must be >= 2")
        if self.vocab_size < 257:
            raise ValidationError("vocab_size must be >= 257")
        if self.precision not in ("float32", "float64"):
            raise ValidationError(f"unsupported precision {self.precision!r}")

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(self.precision)

    @property
    def d_ffn(self) -> int:
        return self.d_model * self.ffn_mult

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    def to_dict(self) -> dict:
        return {
            "n_layers": self.n_layers,
            "n_heads": self.n_heads,
            "d_model": self.d_model,
            "context_len": self.context_len,
            "vocab_size": self.vocab_size,
            "ffn_mult": self.ffn_mult,
            "precision": self.precision,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)


def tensor_shapes(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """The documented fixed tensor order used by init and checkpoints."""
    d, f = config.d_model, config.d_ffn
    shapes: list[tuple[str, tuple[int, ...]]] = [
        ("wte", (config.vocab_size, d)),
        ("wpe", (config.context_len, d)),
    ]
    for i in range(config.n_layers):
        shapes += [
            (f"h{i}.ln1.g", (d,)),
            (f"h{i}.ln1.b", (d,)),
            (f"h{i}.attn.wq", (d, d)),
            (f"h{i}.attn.bq", (d,)),
            (f"h{i}.attn.wk", (d, d)),
            (f"h{i}.attn.bk", (d,)),
            (f"h{i}.attn.wv", (d, d)),
            (f"h{i}.attn.bv", (d,)),
            (f"h{i}.attn.wo", (d, d)),
            (f"h{i}.attn.bo", (d,)),
            (f"h{i}.ln2.g", (d,)),
            (f"h{i}.ln2.b", (d,)),
            (f"h{i}.ffn.w1", (d, f)),
            (f"h{i}.ffn.b1", (f,)),
            (f"h{i}.ffn.w2", (f, d)),
            (f"h{i}.ffn.b2", (d,)),
        ]
    shapes += [("lnf.g", (d,)), ("lnf.b", (d,))]
    return shapes


def param_count(config: ModelConfig) -> int:
    return sum(int(np.prod(shape)) for _, shape in tensor_shapes(config))


@dataclass
class Model:
    config: ModelConfig
    params: dict[str, np.ndarray] = field(repr=False)

    def copy(self) -> "Model":
        return Model(self.config, {k: v.copy() for k, v in self.params.items()})

    def all_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.params.values())


def init_model(config: ModelConfig, seed: int) -> Model:
    """Normal(0, 0.02) weights, unit layer-norm gains, zero biases.

    Tensors are drawn in the documented fixed order, so a (config, seed)
    pair always yields bit-identical models.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    params: dict[str, np.ndarray] = {}
    for name, shape in tensor_shapes(config):
        leaf = name.rsplit(".", maxsplit=1)[-1]
        if name.startswith("ln") or ".ln" in name:
            value = np.ones(shape) if leaf == "g" else np.zeros(shape)
        elif leaf.startswith("b"):
            value = np.zeros(shape)
        else:
            value = rng.normal(0.0, INIT_STD, size=shape)
        params[name] = value.astype(config.dtype)
    return Model(config=config, params=params)


def _layer_norm(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv_std
    return xhat * g + b, (xhat, inv_std)


def _layer_norm_backward(dy, g, cache):
    xhat, inv_std = cache
    dg = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    db = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * g
    dx = inv_std * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def _gelu(x: np.ndarray):
    u = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(u)
    return 0.5 * x * (1.0 + t), t


def _gelu_backward(dy, x, t):
    du = 0.5 * x * (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
    return dy * (0.5 * (1.0 + t) + du)


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _check_tokens(config: ModelConfig, ids: np.ndarray) -> None:
    if ids.shape[-1] < 1 or ids.shape[-1] > config.context_len:
        raise ValidationError(
            f"sequence length {ids.shape[-1]} outside [1, {config.context_len}]"
        )
    if ids.min() < 0 or ids.max() >= config.vocab_size:
        raise ValidationError("token id outside vocabulary")


def _forward_batch(model: Model, ids: np.ndarray, keep_cache: bool):
    """Run a (batch, seq) id array through the stack.

    Returns (logits, attentions, cache); attention rows over masked-out
    positions hold exact zeros, so later tokens cannot leak backward.
    """
    cfg = model.config
    p = model.params
    dtype = cfg.dtype
    B, T = ids.shape
    H, dh = cfg.n_heads, cfg.d_head

    x = p["wte"][ids] + p["wpe"][:T]
    mask = np.triu(np.full((T, T), -np.inf, dtype=dtype), k=1)

    cache: dict = {"ids": ids, "blocks": []} if keep_cache else {}
    attentions = []
    for i in range(cfg.n_layers):
        pre = f"h{i}"
        a, ln1_cache = _layer_norm(x, p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])
        q = a @ p[f"{pre}.attn.wq"] + p[f"{pre}.attn.bq"]
        k = a @ p[f"{pre}.attn.wk"] + p[f"{pre}.attn.bk"]
        v = a @ p[f"{pre}.attn.wv"] + p[f"{pre}.attn.bv"]
        # (B, T, d) -> (B, H, T, dh)
        qh = q.reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        kh = k.reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        vh = v.reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        scores = qh @ kh.swapaxes(-1, -2) / np.asarray(math.sqrt(dh), dtype=dtype)
        att = _softmax(scores + mask)
        oh = att @ vh
        o = oh.transpose(0, 2, 1, 3).reshape(B, T, cfg.d_model)
        attn_out = o @ p[f"{pre}.attn.wo"] + p[f"{pre}.attn.bo"]
        x_attn = x + attn_out

        a2, ln2_cache = _layer_norm(x_attn, p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"])
        h1 = a2 @ p[f"{pre}.ffn.w1"] + p[f"{pre}.ffn.b1"]
        hg, tanh_cache = _gelu(h1)
        h2 = hg @ p[f"{pre}.ffn.w2"] + p[f"{pre}.ffn.b2"]
        x_out = x_attn + h2

        attentions.append(att)
        if keep_cache:
            cache["blocks"].append(
                {
                    "x": x,
                    "a": a,
                    "ln1": ln1_cache,
                    "qh": qh,
                    "kh": kh,
                    "vh": vh,
                    "att": att,
                    "o": o,
                    "x_attn": x_attn,
                    "a2": a2,
                    "ln2": ln2_cache,
                    "h1": h1,
                    "tanh": tanh_cache,
                    "hg": hg,
                }
            )
        x = x_out

    xf, lnf_cache = _layer_norm(x, p["lnf.g"], p["lnf.b"])
    logits = xf @ p["wte"].T
    if keep_cache:
        cache["x_final"] = x
        cache["lnf"] = lnf_cache
        cache["xf"] = xf
    return logits, attentions, cache


def forward(model: Model, tokens, return_attention: bool = False):
    """Logits over the vocabulary at every position of one sequence.

    Causal by construction: row t depends only on tokens[0..t].
    """
    ids = np.asarray(tokens, dtype=np.int64).reshape(1, -1)
    _check_tokens(model.config, ids)
    logits, attentions, _ = _forward_batch(model, ids, keep_cache=False)
    if return_attention:
        return logits[0], [a[0] for a in attentions]
    return logits[0]


def loss(model: Model, batch) -> float:
    """Mean next-token cross-entropy in nats, order-invariant over the batch.

    Per-position log losses are accumulated with exact summation so that
    permuting the batch cannot change the result even in the last bit.
    """
    position_losses: list[float] = []
    for seq in batch:
        ids = np.asarray(seq, dtype=np.int64)
        if ids.size < 2:
            raise ValidationError("loss needs sequences of length >= 2")
        logits = forward(model, ids)
        logits64 = logits[:-1].astype(np.float64)
        shifted = logits64 - logits64.max(axis=-1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=-1))
        targets = ids[1:]
        picked = shifted[np.arange(len(targets)), targets]
        position_losses.extend((logz - picked).tolist())
    return math.fsum(position_losses) / len(position_losses)


def loss_and_grads(model: Model, ids: np.ndarray):
    """One batched forward/backward; returns (mean CE, grads by tensor name)."""
    cfg = model.config
    p = model.params
    dtype = cfg.dtype
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim == 1:
        ids = ids.reshape(1, -1)
    if ids.shape[-1] < 2:
        raise ValidationError("training windows need length >= 2")
    _check_tokens(cfg, ids)

    logits, _, cache = _forward_batch(model, ids, keep_cache=True)
    B, T = ids.shape
    H, dh = cfg.n_heads, cfg.d_head
    n_positions = B * (T - 1)
    targets = ids[:, 1:]

    probs = _softmax(logits[:, :-1, :])
    rows = np.arange(T - 1)
    picked = probs[np.arange(B)[:, None], rows[None, :], targets]
    ce = float(-np.log(picked).mean())

    grads = {name: np.zeros_like(value) for name, value in p.items()}

    dlogits = np.zeros_like(logits)
    dpart = probs.copy()
    dpart[np.arange(B)[:, None], rows[None, :], targets] -= 1.0
    dlogits[:, :-1, :] = dpart / np.asarray(n_positions, dtype=dtype)

    xf = cache["xf"]
    grads["wte"] += np.einsum("btv,btd->vd", dlogits, xf)
    dxf = dlogits @ p["wte"]

    dx, dg, db = _layer_norm_backward(dxf, p["lnf.g"], cache["lnf"])
    grads["lnf.g"] += dg
    grads["lnf.b"] += db

    scale = np.asarray(1.0 / math.sqrt(dh), dtype=dtype)
    for i in reversed(range(cfg.n_layers)):
        pre = f"h{i}"
        blk = cache["blocks"][i]

        # FFN sub-block
        dh2 = dx
        grads[f"{pre}.ffn.w2"] += np.einsum("btf,btd->fd", blk["hg"], dh2)
        grads[f"{pre}.ffn.b2"] += dh2.sum(axis=(0, 1))
        dhg = dh2 @ p[f"{pre}.ffn.w2"].T
        dh1 = _gelu_backward(dhg, blk["h1"], blk["tanh"])
        grads[f"{pre}.ffn.w1"] += np.einsum("btd,btf->df", blk["a2"], dh1)
        grads[f"{pre}.ffn.b1"] += dh1.sum(axis=(0, 1))
        da2 = dh1 @ p[f"{pre}.ffn.w1"].T
        dx_attn, dg2, db2 = _layer_norm_backward(da2, p[f"{pre}.ln2.g"], blk["ln2"])
        grads[f"{pre}.ln2.g"] += dg2
        grads[f"{pre}.ln2.b"] += db2
        dx_attn = dx_attn + dx  # residual

        # attention sub-block
        do = dx_attn @ p[f"{pre}.attn.wo"].T
        grads[f"{pre}.attn.wo"] += np.einsum("btd,bte->de", blk["o"], dx_attn)
        grads[f"{pre}.attn.bo"] += dx_attn.sum(axis=(0, 1))
        doh = do.reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        datt = doh @ blk["vh"].swapaxes(-1, -2)
        dvh = blk["att"].swapaxes(-1, -2) @ doh
        att = blk["att"]
        dscores = (datt - (datt * att).sum(axis=-1, keepdims=True)) * att
        dqh = dscores @ blk["kh"] * scale
        dkh = dscores.swapaxes(-1, -2) @ blk["qh"] * scale
        dq = dqh.transpose(0, 2, 1, 3).reshape(B, T, cfg.d_model)
        dk = dkh.transpose(0, 2, 1, 3).reshape(B, T, cfg.d_model)
        dv = dvh.transpose(0, 2, 1, 3).reshape(B, T, cfg.d_model)
        a = blk["a"]
        grads[f"{pre}.attn.wq"] += np.einsum("btd,bte->de", a, dq)
        grads[f"{pre}.attn.bq"] += dq.sum(axis=(0, 1))
        grads[f"{pre}.attn.wk"] += np.einsum("btd,bte->de", a, dk)
        grads[f"{pre}.attn.bk"] += dk.sum(axis=(0, 1))
        grads[f"{pre}.attn.wv"] += np.einsum("btd,bte->de", a, dv)
        grads[f"{pre}.attn.bv"] += dv.sum(axis=(0, 1))
        da = (
            dq @ p[f"{pre}.attn.wq"].T
            + dk @ p[f"{pre}.attn.wk"].T
            + dv @ p[f"{pre}.attn.wv"].T
        )
        dx_block, dg1, db1 = _layer_norm_backward(da, p[f"{pre}.ln1.g"], blk["ln1"])
        grads[f"{pre}.ln1.g"] += dg1
        grads[f"{pre}.ln1.b"] += db1
        dx = dx_block + dx_attn  # residual into the block input

    # embeddings
    grads["wpe"][:T] += dx.sum(axis=0)
    np.add.at(grads["wte"], ids, dx)
    return ce, grads


class IncrementalDecoder:
    """Single-sequence decoding with cached keys and values.

    Computes the same function as `forward` restricted to the newest
    position, at O(context) per token instead of O(context^2).  When the
    context window fills up, the oldest token falls off and the cache is
    rebuilt because every position embedding shifts.
    """

    def __init__(self, model: Model):
        self.model = model
        self.tokens: list[int] = []
        cfg = model.config
        self._k = [
            np.zeros((cfg.context_len, cfg.n_heads, cfg.d_head), dtype=cfg.dtype)
            for _ in range(cfg.n_layers)
        ]
        self._v = [np.zeros_like(k) for k in self._k]

    def feed(self, token_id: int) -> np.ndarray:
        """Append one token; return the logits at its position."""
        cfg = self.model.config
        if len(self.tokens) == cfg.context_len:
            window = self.tokens[1:] + [int(token_id)]
            self.tokens = []
            for token in window[:-1]:
                self.feed(token)
            return self.feed(window[-1])

        p = self.model.params
        H, dh = cfg.n_heads, cfg.d_head
        t = len(self.tokens)
        self.tokens.append(int(token_id))

        x = p["wte"][token_id] + p["wpe"][t]
        for i in range(cfg.n_layers):
            pre = f"h{i}"
            a, _ = _layer_norm(x, p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])
            q = (a @ p[f"{pre}.attn.wq"] + p[f"{pre}.attn.bq"]).reshape(H, dh)
            self._k[i][t] = (a @ p[f"{pre}.attn.wk"] + p[f"{pre}.attn.bk"]).reshape(H, dh)
            self._v[i][t] = (a @ p[f"{pre}.attn.wv"] + p[f"{pre}.attn.bv"]).reshape(H, dh)
            keys, values = self._k[i][: t + 1], self._v[i][: t + 1]
            scores = np.einsum("shd,hd->hs", keys, q) / np.asarray(
                math.sqrt(dh), dtype=cfg.dtype
            )
            att = _softmax(scores)
            o = np.einsum("hs,shd->hd", att, values).reshape(cfg.d_model)
            x = x + o @ p[f"{pre}.attn.wo"] + p[f"{pre}.attn.bo"]
            a2, _ = _layer_norm(x, p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"])
            hg, _ = _gelu(a2 @ p[f"{pre}.ffn.w1"] + p[f"{pre}.ffn.b1"])
            x = x + hg @ p[f"{pre}.ffn.w2"] + p[f"{pre}.ffn.b2"]
        xf, _ = _layer_norm(x, p["lnf.g"], p["lnf.b"])
        return xf @ p["wte"].T
