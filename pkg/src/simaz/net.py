"""Fully connected policy/value network in numpy with hand-written backprop.

A two-layer ReLU trunk feeds three heads: a policy for each player and a
categorical value distribution over fixed bins (trained against
Gaussian-smoothed histogram targets). The scalar value is the expectation of
that distribution over the bin centers.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr

LOG_FLOOR = 1e-12
MAGIC = b"SAZ1"
FORMAT_VERSION = 1
HEADS = ("pi1", "pi2", "value")


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class ValueBinning:
    """``bins`` centers evenly spaced on ``[v_min, v_max]``; edges sit half a bin outside."""

    v_min: float
    v_max: float
    bins: int = 51
    sigma: float | None = None

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise ValueError("v_min must be < v_max")
        if self.bins < 2:
            raise ValueError("need at least 2 bins")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be > 0")

    @property
    def bin_width(self) -> float:
        return (self.v_max - self.v_min) / (self.bins - 1)

    @property
    def width(self) -> float:
        return 0.75 * self.bin_width if self.sigma is None else self.sigma

    @property
    def centers(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.bins)

    @property
    def edges(self) -> np.ndarray:
        h = 0.5 * self.bin_width
        return np.linspace(self.v_min - h, self.v_max + h, self.bins + 1)


def hl_gauss_target(v, binning: ValueBinning) -> np.ndarray:
    """Histogram of a Gaussian centred on ``v``, truncated to the bin range.

    ``v`` is clamped to ``[v_min, v_max]`` first. Accepts a scalar (returns
    ``(bins,)``) or an array of targets (returns ``(k, bins)``).
    """
    v = np.clip(np.asarray(v, dtype=np.float64), binning.v_min, binning.v_max)
    cdf = ndtr((binning.edges - v[..., None]) / binning.width)
    mass = np.diff(cdf, axis=-1)
    return mass / (cdf[..., -1:] - cdf[..., :1])


@dataclass
class NetConfig:
    input_size: int
    n1: int
    n2: int
    v_min: float = -1.0
    v_max: float = 1.0
    bins: int = 51
    sigma: float | None = None
    trunk_width: int = 64
    head_width: int = 64
    dtype: str = "float64"

    @property
    def binning(self) -> ValueBinning:
        return ValueBinning(self.v_min, self.v_max, self.bins, self.sigma)


def layer_shapes(cfg: NetConfig) -> list[tuple[str, tuple[int, int]]]:
    out = {"pi1": cfg.n1, "pi2": cfg.n2, "value": cfg.bins}
    shapes = [
        ("trunk.0.W", (cfg.input_size, cfg.trunk_width)), ("trunk.0.b", (1, cfg.trunk_width)),
        ("trunk.1.W", (cfg.trunk_width, cfg.trunk_width)), ("trunk.1.b", (1, cfg.trunk_width)),
    ]
    for h in HEADS:
        shapes += [
            (f"{h}.0.W", (cfg.trunk_width, cfg.head_width)), (f"{h}.0.b", (1, cfg.head_width)),
            (f"{h}.1.W", (cfg.head_width, out[h])), (f"{h}.1.b", (1, out[h])),
        ]
    return shapes


@dataclass
class NetworkParams:
    cfg: NetConfig
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def binning(self) -> ValueBinning:
        return self.cfg.binning

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.cfg, {k: v.copy() for k, v in self.arrays.items()})

    def sq_norm(self) -> float:
        return float(sum(np.sum(a * a) for a in self.arrays.values()))


def init_params(cfg: NetConfig, seed: int | np.random.Generator | None = 0,
                zero_final: bool = False) -> NetworkParams:
    """He-scaled normal weights, zero biases. ``zero_final`` zeroes each head's output layer."""
    rng = np.random.default_rng(seed)
    dtype = np.dtype(cfg.dtype)
    arrays = {}
    for name, shape in layer_shapes(cfg):
        if name.endswith(".b") or (zero_final and name.endswith(".1.W") and not name.startswith("trunk")):
            arrays[name] = np.zeros(shape, dtype=dtype)
        else:
            arrays[name] = (rng.standard_normal(shape) * np.sqrt(2.0 / shape[0])).astype(dtype)
    return NetworkParams(cfg, arrays)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class ForwardOutput:
    p1: np.ndarray
    p2: np.ndarray
    value_dist: np.ndarray
    value: np.ndarray
    cache: dict = field(default_factory=dict, repr=False)


def forward(params: NetworkParams, x) -> ForwardOutput:
    """Evaluate a single encoded state ``(d,)`` or a batch ``(k, d)``."""
    a = params.arrays
    x = np.asarray(x, dtype=a["trunk.0.W"].dtype)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != params.cfg.input_size:
        raise ValueError(f"input shape {x.shape} does not match width {params.cfg.input_size}")
    cache = {"x": X}
    h = X
    for i in range(2):
        h = np.maximum(h @ a[f"trunk.{i}.W"] + a[f"trunk.{i}.b"], 0.0)
        cache[f"trunk.{i}"] = h
    probs = {}
    for name in HEADS:
        g = np.maximum(h @ a[f"{name}.0.W"] + a[f"{name}.0.b"], 0.0)
        cache[f"{name}.0"] = g
        probs[name] = _softmax(g @ a[f"{name}.1.W"] + a[f"{name}.1.b"])
    value = probs["value"] @ params.binning.centers.astype(X.dtype)
    out = ForwardOutput(probs["pi1"], probs["pi2"], probs["value"], value, cache)
    if single:
        out = ForwardOutput(out.p1[0], out.p2[0], out.value_dist[0], out.value[0], cache)
    return out


@dataclass
class Batch:
    x: np.ndarray
    pi1: np.ndarray
    pi2: np.ndarray
    v: np.ndarray

    def __len__(self) -> int:
        return self.x.shape[0]


def _ce(p: np.ndarray, t: np.ndarray) -> np.ndarray:
    return -(t * np.log(np.maximum(p, LOG_FLOOR))).sum(axis=-1)


def _ce_logit_grad(p: np.ndarray, t: np.ndarray) -> np.ndarray:
    # d/dz of -sum t log(max(p, floor)); floored entries carry no gradient
    t = np.where(p > LOG_FLOOR, t, 0.0)
    return p * t.sum(axis=-1, keepdims=True) - t


@dataclass
class LossParts:
    total: float
    value: float
    policy: float
    l2: float


def loss(params: NetworkParams, batch: Batch, l2: float = 0.0) -> LossParts:
    return loss_grads(params, batch, l2, need_grads=False)[0]


def loss_grads(params: NetworkParams, batch: Batch, l2: float = 0.0,
               need_grads: bool = True) -> tuple[LossParts, dict[str, np.ndarray] | None]:
    """Value cross-entropy + both policy cross-entropies + ``l2 * |theta|^2`` and its gradient."""
    B = len(batch)
    if B == 0:
        raise ValueError("empty batch")
    out = forward(params, batch.x)
    target_v = hl_gauss_target(batch.v, params.binning)
    ce_v = _ce(out.value_dist, target_v)
    ce_p = _ce(out.p1, batch.pi1) + _ce(out.p2, batch.pi2)
    reg = l2 * params.sq_norm()
    parts = LossParts(float(ce_v.mean() + ce_p.mean() + reg), float(ce_v.mean()), float(ce_p.mean()), reg)
    if not need_grads:
        return parts, None

    a = params.arrays
    c = out.cache
    h2 = c["trunk.1"]
    grads: dict[str, np.ndarray] = {}
    dh2 = np.zeros_like(h2)
    dz_heads = {
        "pi1": _ce_logit_grad(out.p1, batch.pi1) / B,
        "pi2": _ce_logit_grad(out.p2, batch.pi2) / B,
        "value": _ce_logit_grad(out.value_dist, target_v) / B,
    }
    for name, dz in dz_heads.items():
        g = c[f"{name}.0"]
        grads[f"{name}.1.W"] = g.T @ dz
        grads[f"{name}.1.b"] = dz.sum(axis=0, keepdims=True)
        dg = (dz @ a[f"{name}.1.W"].T) * (g > 0)
        grads[f"{name}.0.W"] = h2.T @ dg
        grads[f"{name}.0.b"] = dg.sum(axis=0, keepdims=True)
        dh2 += dg @ a[f"{name}.0.W"].T
    dz1 = dh2 * (h2 > 0)
    h1 = c["trunk.0"]
    grads["trunk.1.W"] = h1.T @ dz1
    grads["trunk.1.b"] = dz1.sum(axis=0, keepdims=True)
    dz0 = (dz1 @ a["trunk.1.W"].T) * (h1 > 0)
    grads["trunk.0.W"] = c["x"].T @ dz0
    grads["trunk.0.b"] = dz0.sum(axis=0, keepdims=True)
    if l2:
        for k in grads:
            grads[k] = grads[k] + 2.0 * l2 * a[k]
    return parts, {k: grads[k] for k in a}


class Optimizer:
    """Adam (default) or plain SGD, updating parameter arrays in place."""

    def __init__(self, kind: str = "adam", lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if kind not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {kind!r}")
        if lr <= 0:
            raise ValueError("learning rate must be > 0")
        self.kind = kind
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: NetworkParams, grads: dict[str, np.ndarray]) -> None:
        if set(grads) != set(params.arrays):
            raise ValueError("gradient keys do not match parameters")
        for k, g in grads.items():
            if g.shape != params.arrays[k].shape:
                raise ValueError(f"gradient shape mismatch for {k}: {g.shape} vs {params.arrays[k].shape}")
        if self.kind == "sgd":
            for k, g in grads.items():
                params.arrays[k] -= self.lr * g
            return
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            params.arrays[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def optimizer_step(params: NetworkParams, grads: dict[str, np.ndarray], opt: Optimizer) -> NetworkParams:
    opt.step(params, grads)
    return params


class NetworkEvaluator:
    """Adapts a network to the search evaluator interface for a given game."""

    def __init__(self, params: NetworkParams, spec):
        self.params = params
        self.spec = spec

    def evaluate(self, states):
        X = np.stack([self.spec.encode(s) for s in states])
        out = forward(self.params, X)
        return out.p1, out.p2, out.value


# ---------------------------------------------------------------------------
# Checkpoints
#
#   "SAZ1" | u8 version | u32 count | count x (u8 tag_len, tag, u32 rows, u32 cols)
#   | row-major float64 little-endian payload per entry, in manifest order
#
# The first entry is the "meta" record carrying the architecture; the rest
# are the parameter arrays.
# ---------------------------------------------------------------------------

def _meta_array(cfg: NetConfig) -> np.ndarray:
    sigma = -1.0 if cfg.sigma is None else cfg.sigma
    return np.array([[cfg.input_size, cfg.n1, cfg.n2, cfg.trunk_width, cfg.head_width,
                      cfg.bins, cfg.v_min, cfg.v_max, sigma,
                      1.0 if cfg.dtype == "float32" else 0.0]], dtype=np.float64)


def dumps(params: NetworkParams) -> bytes:
    entries = [("meta", _meta_array(params.cfg))] + list(params.arrays.items())
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<BI", FORMAT_VERSION, len(entries)))
    for tag, arr in entries:
        t = tag.encode("ascii")
        buf.write(struct.pack("<B", len(t)) + t + struct.pack("<II", *arr.shape))
    for _, arr in entries:
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return buf.getvalue()


def loads(data: bytes) -> NetworkParams:
    if data[:4] != MAGIC:
        raise CheckpointError("bad magic bytes")
    try:
        version, count = struct.unpack_from("<BI", data, 4)
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        off = 9
        manifest = []
        for _ in range(count):
            (n,) = struct.unpack_from("<B", data, off)
            tag = data[off + 1:off + 1 + n].decode("ascii")
            rows, cols = struct.unpack_from("<II", data, off + 1 + n)
            manifest.append((tag, rows, cols))
            off += 1 + n + 8
        arrays = {}
        for tag, rows, cols in manifest:
            size = rows * cols * 8
            if off + size > len(data):
                raise CheckpointError("truncated payload")
            arrays[tag] = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=off).reshape(rows, cols).astype(np.float64)
            off += size
    except (struct.error, UnicodeDecodeError) as e:
        raise CheckpointError(f"malformed manifest: {e}") from e
    if off != len(data):
        raise CheckpointError("trailing bytes after payload")
    if not manifest or manifest[0][0] != "meta":
        raise CheckpointError("missing meta record")
    meta = arrays.pop("meta")
    if meta.shape != (1, 10):
        raise CheckpointError("malformed meta record")
    meta = meta[0]
    try:
        cfg = NetConfig(input_size=int(meta[0]), n1=int(meta[1]), n2=int(meta[2]),
                        trunk_width=int(meta[3]), head_width=int(meta[4]), bins=int(meta[5]),
                        v_min=float(meta[6]), v_max=float(meta[7]),
                        sigma=None if meta[8] < 0 else float(meta[8]),
                        dtype="float32" if meta[9] else "float64")
        cfg.binning
    except (ValueError, OverflowError) as e:
        raise CheckpointError(f"malformed meta record: {e}") from e
    expected = layer_shapes(cfg)
    if [(k, v.shape) for k, v in arrays.items()] != expected:
        raise CheckpointError("parameter manifest does not match the architecture")
    dtype = np.dtype(cfg.dtype)
    return NetworkParams(cfg, {k: v.astype(dtype) for k, v in arrays.items()})


def save_checkpoint(params: NetworkParams, path) -> Path:
    path = Path(path)
    path.write_bytes(dumps(params))
    return path


def load_checkpoint(path) -> NetworkParams:
    return loads(Path(path).read_bytes())
