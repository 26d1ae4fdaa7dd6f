"""Incremental training engine and the strategy/ablation registry.

Per batch, current samples plus generated fakes are always label-supervised
(the confusion-free part). Generated-real replays are handled per strategy:
directly supervised, dropped, pushed through the relative-separation term, or
blended between the two with a fixed or confusion-driven weight.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .confusion import DcsConfig, compute_alpha
from .losses import LossConfig, ce_loss_batch, centroid, combine_losses, rs_loss_with_grads
from .metrics import TaskEval, accuracy, auc, build_table
from .model import MLP
from .numerics import AdamState, Rng, adam_step
from .replay import GeneratorPair, fit_generator, sample_replay
from .samples import LABEL_FAKE, LABEL_REAL, Sample
from .streams import draw_stream_data

STRATEGY_KINDS = (
    "adaptive",
    "lower_bound",
    "full_replay",
    "fake_only_replay",
    "fixed_alpha",
    "no_gen_real_sup",
    "no_rs",
)

# strategies that consume replay samples at all
_REPLAY_KINDS = tuple(k for k in STRATEGY_KINDS if k != "lower_bound")
# strategies whose alpha comes from the confusion score unless overridden
_DYNAMIC_ALPHA_KINDS = ("adaptive", "no_gen_real_sup")


@dataclass(frozen=True)
class Strategy:
    kind: str = "adaptive"
    fixed_alpha: float | None = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "fixed_alpha":
            if self.fixed_alpha is None:
                raise ValueError("fixed_alpha strategy needs a fixed_alpha value")
        elif self.fixed_alpha is not None and self.kind not in _DYNAMIC_ALPHA_KINDS:
            raise ValueError(f"{self.kind} does not take a fixed_alpha override")
        if self.fixed_alpha is not None and not 0.0 <= self.fixed_alpha <= 1.0:
            raise ValueError("fixed_alpha must lie in [0,1]")

    @property
    def uses_replay(self):
        return self.kind in _REPLAY_KINDS

    @property
    def keeps_gen_real(self):
        return self.uses_replay and self.kind != "fake_only_replay"

    @property
    def name(self):
        if self.kind == "fixed_alpha":
            return f"fixed_alpha_{self.fixed_alpha:g}"
        return self.kind


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    batch_current: int = 32
    batch_gen_real: int = 12
    batch_gen_fake: int = 12
    lr: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    arch: tuple = (64, 64)
    init_scale: float = 1.0
    generator_kind: str = "gaussian"
    gmm_components: int = 2
    replay_pool_size: int | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if min(self.batch_current, self.batch_gen_real, self.batch_gen_fake) < 0:
            raise ValueError("batch sizes must be >= 0")
        if self.generator_kind not in ("gaussian", "gmm"):
            raise ValueError(f"unknown generator kind {self.generator_kind!r}")


@dataclass
class RunState:
    model: MLP
    adam: AdamState
    generator_pairs: list = field(default_factory=list)
    dcs_history: list = field(default_factory=list)
    loss_trace: list = field(default_factory=list)
    replay_pools: dict = field(default_factory=dict)


def split_round_robin(n, k):
    """Split n draws over k pools, earlier pools absorbing the remainder."""
    base, extra = divmod(n, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def assemble_batch(current, pairs, cfg, rng, include_gen_real=True, pools=None):
    """Current chunk plus replay draws split round-robin over stored pairs."""
    batch = list(current)
    if not pairs:
        return batch
    n_real = cfg.batch_gen_real if include_gen_real else 0
    n_fake = cfg.batch_gen_fake
    real_counts = split_round_robin(n_real, len(pairs))
    fake_counts = split_round_robin(n_fake, len(pairs))
    for i, pair in enumerate(pairs):
        if pools is not None and pair.task_index in pools:
            batch += _draw_from_pool(
                pools[pair.task_index], pair.task_index, real_counts[i], fake_counts[i], rng.fork(f"pool{i}")
            )
        else:
            batch += sample_replay(pair, real_counts[i], fake_counts[i], rng.fork(f"pair{i}"))
    return batch


def _draw_from_pool(pool, task_index, n_real, n_fake, rng):
    real_arr, fake_arr = pool
    out = []
    if n_real:
        idx = rng.integers(0, len(real_arr), size=n_real)
        out += [Sample(real_arr[i], LABEL_REAL, "gen_real", task_index) for i in idx]
    if n_fake:
        idx = rng.integers(0, len(fake_arr), size=n_fake)
        out += [Sample(fake_arr[i], LABEL_FAKE, "gen_fake", task_index) for i in idx]
    return out


def _strategy_weights(strategy, alpha):
    """(gen-real CE weight, RS weight, alpha and CE value used in the breakdown)."""
    kind = strategy.kind
    if kind in ("lower_bound", "fake_only_replay"):
        return 0.0, 0.0, 1.0, False
    if kind in ("full_replay", "no_rs"):
        return 1.0, 0.0, 1.0, True
    if kind == "no_gen_real_sup":
        return 0.0, 1.0 - alpha, alpha, False
    # adaptive / fixed_alpha
    return alpha, 1.0 - alpha, alpha, True


def batch_objective(model, batch, strategy, alpha, loss_cfg):
    """Loss breakdown and flat parameter gradient for one assembled batch."""
    x = np.stack([s.features for s in batch])
    labels = np.array([s.label for s in batch])
    origins = [s.origin for s in batch]
    rec = model.forward(x)

    cf_idx = np.array(
        [i for i, o in enumerate(origins) if o in ("current_real", "current_fake", "gen_fake")],
        dtype=int,
    )
    gr_idx = np.array([i for i, o in enumerate(origins) if o == "gen_real"], dtype=int)
    gf_idx = np.array([i for i, o in enumerate(origins) if o == "gen_fake"], dtype=int)

    d_yp = np.zeros(len(batch))
    d_feat = np.zeros_like(rec.features)

    l_cf, g_cf = ce_loss_batch(rec.y_p[cf_idx], labels[cf_idx])
    d_yp[cf_idx] += g_cf

    w_ce, w_rs, alpha_eff, ce_counts = _strategy_weights(strategy, alpha)

    l_ce_gr = 0.0
    if gr_idx.size:
        l_ce_gr, g_gr = ce_loss_batch(rec.y_p[gr_idx], labels[gr_idx])
        if w_ce:
            d_yp[gr_idx] += w_ce * g_gr

    l_rs = 0.0
    if w_rs and gr_idx.size and gf_idx.size:
        cent = centroid(rec.features[gr_idx])
        l_rs, d_gf, d_gr = rs_loss_with_grads(
            rec.features[gf_idx], cent, gr_idx.size, loss_cfg
        )
        d_feat[gf_idx] += w_rs * d_gf
        d_feat[gr_idx] += w_rs * d_gr

    grad = model.backward(rec, d_yp, d_feat)
    if gr_idx.size == 0:
        # degenerate batch: no gen-real part, the combination reduces to l_cf
        breakdown = combine_losses(0.0, 0.0, l_cf, 1.0)
    else:
        breakdown = combine_losses(l_ce_gr if ce_counts else 0.0, l_rs, l_cf, alpha_eff)
    return breakdown, grad


def _alpha_pool(pairs, probe_cap, rng):
    # an even share of fresh gen-real draws per past task
    per = max(1, math.ceil(probe_cap / len(pairs)))
    pool = []
    for i, pair in enumerate(pairs):
        pool += sample_replay(pair, per, 0, rng.fork(f"pair{i}"))
    return pool


def _resolve_alpha(state, strategy, current_fakes, dcs_cfg, rng, task_index, epoch):
    """Alpha for the coming epoch, plus a confusion record when one was computed."""
    if strategy.kind in _DYNAMIC_ALPHA_KINDS and strategy.fixed_alpha is None:
        if not state.generator_pairs:
            return 1.0, None
        pool = _alpha_pool(state.generator_pairs, dcs_cfg.probe_cap, rng.fork("pool"))
        record = compute_alpha(
            state.model, pool, current_fakes, dcs_cfg, rng.fork("probe"),
            task_index=task_index, epoch=epoch,
        )
        return record.alpha, record
    if strategy.fixed_alpha is not None:
        return strategy.fixed_alpha, None
    return 1.0, None


def train_task(
    state,
    task_index,
    train_samples,
    replay_signature,
    strategy,
    cfg,
    rng,
    loss_cfg=None,
    dcs_cfg=None,
):
    """Train the model on one task, then fit and freeze its generator pair."""
    if not train_samples:
        raise ValueError("task has no training data")
    loss_cfg = loss_cfg or LossConfig()
    dcs_cfg = dcs_cfg or DcsConfig()
    pairs = state.generator_pairs if strategy.uses_replay else []
    pools = state.replay_pools if cfg.replay_pool_size else None
    current_fakes = [s for s in train_samples if s.label == LABEL_FAKE]
    last_alpha = None

    for epoch in range(cfg.epochs):
        epoch_rng = rng.fork(f"epoch{epoch}")
        alpha, record = _resolve_alpha(
            state, strategy, current_fakes, dcs_cfg, epoch_rng.fork("alpha"), task_index, epoch
        )
        if record is not None:
            state.dcs_history.append(record)
            last_alpha = record.alpha
        elif strategy.fixed_alpha is not None:
            last_alpha = strategy.fixed_alpha

        order = np.arange(len(train_samples))
        epoch_rng.fork("shuffle").shuffle(order)
        replay_rng = epoch_rng.fork("replay")
        n_batches = len(order) // cfg.batch_current
        for b in range(n_batches):
            chunk = [train_samples[i] for i in order[b * cfg.batch_current : (b + 1) * cfg.batch_current]]
            batch = assemble_batch(
                chunk, pairs, cfg, replay_rng.fork(f"b{b}"),
                include_gen_real=strategy.keeps_gen_real, pools=pools,
            )
            breakdown, grad = batch_objective(state.model, batch, strategy, alpha, loss_cfg)
            state.loss_trace.append(breakdown.l_overall)
            flat = adam_step(
                state.model.get_flat(), grad, state.adam,
                lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps,
            )
            state.model.set_flat(flat)

    _fit_task_generators(state, task_index, train_samples, replay_signature, cfg, rng.fork("fit"))
    return last_alpha


def _fit_task_generators(state, task_index, train_samples, replay_signature, cfg, rng):
    if any(p.task_index == task_index for p in state.generator_pairs):
        raise ValueError(f"generators for task {task_index} already fitted")
    reals = np.stack([s.features for s in train_samples if s.label == LABEL_REAL])
    fakes = np.stack([s.features for s in train_samples if s.label == LABEL_FAKE])
    n_comp = 1 if cfg.generator_kind == "gaussian" else cfg.gmm_components
    g_real = fit_generator(reals, cfg.generator_kind, n_comp, replay_signature, rng.fork("real"))
    g_fake = fit_generator(fakes, cfg.generator_kind, n_comp, replay_signature, rng.fork("fake"))
    pair = GeneratorPair(task_index, g_real, g_fake)
    state.generator_pairs.append(pair)
    if cfg.replay_pool_size:
        pool_rng = rng.fork("pool")
        state.replay_pools[task_index] = (
            pair.g_real.sample(cfg.replay_pool_size, pool_rng.fork("real")),
            pair.g_fake.sample(cfg.replay_pool_size, pool_rng.fork("fake")),
        )


def evaluate(model, test_samples):
    x = np.stack([s.features for s in test_samples])
    labels = np.array([s.label for s in test_samples])
    scores = model.forward(x).y_p
    overall, real_acc, fake_acc = accuracy(scores, labels)
    return TaskEval(auc=auc(scores, labels), acc=overall, acc_real=real_acc, acc_fake=fake_acc)


def run_incremental(stream, strategy, cfg, loss_cfg=None, dcs_cfg=None, return_state=False):
    """Train through the stream; after each task, evaluate every seen task."""
    loss_cfg = loss_cfg or LossConfig()
    dcs_cfg = dcs_cfg or DcsConfig()
    rng = Rng(cfg.seed)
    data = draw_stream_data(stream, rng.fork("data"))
    model = MLP([stream.dim] + list(cfg.arch), rng.fork("init"), cfg.init_scale)
    state = RunState(model=model, adam=AdamState(model.n_params))

    per_step = []
    alphas = []
    for k in range(stream.n_tasks):
        train, _ = data[k]
        last_alpha = train_task(
            state, k, train, stream.replay_signatures[k], strategy, cfg,
            rng.fork(f"task{k}"), loss_cfg=loss_cfg, dcs_cfg=dcs_cfg,
        )
        evals = {t: evaluate(state.model, data[t][1]) for t in range(k + 1)}
        per_step.append(evals)
        alphas.append(last_alpha)

    table = build_table(per_step, alphas)
    if return_state:
        return table, state
    return table
