"""Supervision signals: cross-entropy, relative separation, and their combination.

The relative-separation (RS) term pushes generated-fake features away from the
generated-real centroid instead of label-supervising the generated-real side.
Each loss comes with an exact gradient w.r.t. its feature inputs so the trainer
can compose objectives without autodiff.
"""

from dataclasses import dataclass

import numpy as np

RS_METRICS = ("cosine", "l2")
RS_GRANULARITIES = ("sample_wise", "centroid_based")

# smoothing inside the L2 distance so its gradient is defined everywhere
_L2_SMOOTH = 1e-12


@dataclass(frozen=True)
class LossConfig:
    rs_metric: str = "cosine"
    rs_granularity: str = "sample_wise"
    eps_cos: float = 1e-8

    def __post_init__(self):
        if self.rs_metric not in RS_METRICS:
            raise ValueError(f"unknown rs_metric {self.rs_metric!r}")
        if self.rs_granularity not in RS_GRANULARITIES:
            raise ValueError(f"unknown rs_granularity {self.rs_granularity!r}")
        if self.eps_cos <= 0:
            raise ValueError("eps_cos must be positive")


@dataclass(frozen=True)
class BatchLossBreakdown:
    l_cf: float
    l_ce_gen_real: float
    l_rs: float
    alpha: float
    l_c: float
    l_overall: float


def ce_loss(y_p, label):
    """Binary cross-entropy for a clamped probability; label 1 means fake."""
    if not 0.0 < y_p < 1.0:
        raise ValueError(f"y_p must lie strictly inside (0,1), got {y_p}")
    y = float(label)
    return -(y * np.log(y_p) + (1.0 - y) * np.log(1.0 - y_p))


def ce_loss_batch(y_p, labels):
    """Mean CE over a batch plus d(mean CE)/d y_p per sample."""
    y_p = np.asarray(y_p, dtype=float)
    y = np.asarray(labels, dtype=float)
    if y_p.size == 0:
        return 0.0, y_p.copy()
    if np.any(y_p <= 0.0) or np.any(y_p >= 1.0):
        raise ValueError("y_p entries must lie strictly inside (0,1)")
    n = y_p.size
    value = float(np.mean(-(y * np.log(y_p) + (1.0 - y) * np.log(1.0 - y_p))))
    grad = (-(y / y_p) + (1.0 - y) / (1.0 - y_p)) / n
    return value, grad


def centroid(features):
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("centroid needs a non-empty 2-d feature array")
    return features.mean(axis=0)


def _cos_with_grads(f, c, eps):
    """cos(f, c) with eps-padded norms, plus gradients w.r.t. f and c."""
    nf = np.linalg.norm(f)
    nc = np.linalg.norm(c)
    denom = (nf + eps) * (nc + eps)
    dot = float(f @ c)
    val = dot / denom
    f_unit = f / nf if nf > 0 else np.zeros_like(f)
    c_unit = c / nc if nc > 0 else np.zeros_like(c)
    d_f = c / denom - dot * f_unit / ((nf + eps) ** 2 * (nc + eps))
    d_c = f / denom - dot * c_unit / ((nf + eps) * (nc + eps) ** 2)
    return val, d_f, d_c


def _dist_with_grads(f, c):
    """Smoothed L2 distance ||f - c|| with gradients w.r.t. f and c."""
    diff = f - c
    dist = np.sqrt(float(diff @ diff) + _L2_SMOOTH)
    d_f = diff / dist
    return dist, d_f, -d_f


def rs_loss(fake_features, real_centroid, cfg):
    """Relative separation value only (see rs_loss_with_grads)."""
    value, _, _ = rs_loss_with_grads(fake_features, real_centroid, None, cfg)
    return value


def rs_loss_with_grads(fake_features, real_centroid, real_count, cfg):
    """RS loss and gradients w.r.t. fake features and (optionally) real features.

    Cosine: mean cosine similarity between fake features and the real centroid;
    minimizing it increases angular separation. L2: negated mean distance, so
    minimizing the returned value increases separation for both metrics.
    Centroid-based granularity collapses the fake side to its centroid first.

    real_count, when given, is the number of generated-real samples behind the
    centroid; the returned d_real is then the per-real-sample feature gradient
    (the centroid gradient divided by that count). With real_count None, d_real
    is the gradient w.r.t. the centroid itself.
    """
    fake = np.asarray(fake_features, dtype=float)
    c = np.asarray(real_centroid, dtype=float)
    if fake.ndim != 2 or fake.shape[0] == 0:
        raise ValueError("rs_loss needs a non-empty 2-d fake feature array")
    if cfg.rs_metric == "cosine" and np.linalg.norm(c) <= cfg.eps_cos:
        raise ValueError("degenerate geometry: real centroid has ~zero norm under cosine metric")

    m = fake.shape[0]
    d_fake = np.zeros_like(fake)
    if cfg.rs_granularity == "centroid_based":
        cf = fake.mean(axis=0)
        if cfg.rs_metric == "cosine":
            value, d_cf, d_c = _cos_with_grads(cf, c, cfg.eps_cos)
        else:
            dist, d_cf, d_c = _dist_with_grads(cf, c)
            value, d_cf, d_c = -dist, -d_cf, -d_c
        d_fake[:] = d_cf / m
    else:
        value = 0.0
        d_c = np.zeros_like(c)
        for j in range(m):
            if cfg.rs_metric == "cosine":
                v, d_f, d_cj = _cos_with_grads(fake[j], c, cfg.eps_cos)
            else:
                dist, d_f, d_cj = _dist_with_grads(fake[j], c)
                v, d_f, d_cj = -dist, -d_f, -d_cj
            value += v / m
            d_fake[j] = d_f / m
            d_c += d_cj / m

    d_real = d_c if real_count is None else d_c / real_count
    return float(value), d_fake, d_real


def combine_losses(l_ce_gen_real, l_rs, l_cf, alpha):
    """Confusion-aware combination: l_c = a*ce + (1-a)*rs; overall = l_c + l_cf."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0,1], got {alpha}")
    l_c = alpha * l_ce_gen_real + (1.0 - alpha) * l_rs
    return BatchLossBreakdown(
        l_cf=float(l_cf),
        l_ce_gen_real=float(l_ce_gen_real),
        l_rs=float(l_rs),
        alpha=float(alpha),
        l_c=float(l_c),
        l_overall=float(l_c + l_cf),
    )
