"""Density-model replay generators with an explicit artifact signature.

Each finished task gets a pair of fitted samplers, one per class. Every draw
from a pair is shifted along the pair's signature direction, which models the
generator's own artifact: when that direction lines up with a later task's
forgery direction, generated-real replays start to look like fakes.
"""

from dataclasses import dataclass

import numpy as np

from .samples import LABEL_FAKE, LABEL_REAL, Sample

VAR_FLOOR = 1e-6
EM_MAX_ITERS = 200
EM_TOL = 1e-7


@dataclass(frozen=True)
class Signature:
    vector: np.ndarray
    strength: float

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=float)
        if not np.all(np.isfinite(vec)):
            raise ValueError("signature vector must be finite")
        if self.strength < 0:
            raise ValueError("signature strength must be >= 0")
        object.__setattr__(self, "vector", vec)


def signature_similarity(a, b):
    """Cosine of two signature vectors; 0 if either carries no artifact."""
    va = np.asarray(a.vector, dtype=float)
    vb = np.asarray(b.vector, dtype=float)
    if va.shape != vb.shape:
        raise ValueError("signature dimensions differ")
    if a.strength == 0.0 or b.strength == 0.0:
        return 0.0
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(va @ vb / (na * nb))


class GeneratorModel:
    """Diagonal Gaussian or mixture sampler with an attached signature."""

    def __init__(self, kind, weights, means, variances, signature, loglik_trace=None):
        weights = np.asarray(weights, dtype=float)
        means = np.asarray(means, dtype=float)
        variances = np.asarray(variances, dtype=float)
        if not (weights > 0).all() or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("component weights must be positive and sum to 1")
        if (variances < VAR_FLOOR - 1e-12).any():
            raise ValueError("variances below the jitter floor")
        self.kind = kind
        self.weights = weights
        self.means = means
        self.variances = variances
        self.signature = signature
        self.loglik_trace = loglik_trace or []

    @property
    def dim(self):
        return self.means.shape[1]

    def sample(self, n, rng):
        """Draw n vectors, shifted by signature.vector * signature.strength."""
        if n == 0:
            return np.empty((0, self.dim))
        comps = rng.gen.choice(len(self.weights), size=n, p=self.weights)
        noise = rng.normal(size=(n, self.dim))
        out = self.means[comps] + noise * np.sqrt(self.variances[comps])
        return out + self.signature.vector * self.signature.strength


@dataclass(frozen=True)
class GeneratorPair:
    task_index: int
    g_real: GeneratorModel
    g_fake: GeneratorModel

    def __post_init__(self):
        sr, sf = self.g_real.signature, self.g_fake.signature
        if not (np.array_equal(sr.vector, sf.vector) and sr.strength == sf.strength):
            raise ValueError("both generators of a pair must share one signature")


def _log_gauss_diag(x, mean, var):
    # (n,) log density of diagonal gaussian for rows of x
    return -0.5 * (
        np.sum(np.log(2.0 * np.pi * var)) + np.sum((x - mean) ** 2 / var, axis=1)
    )


def _kmeanspp_means(x, k, rng):
    n = x.shape[0]
    means = [x[rng.integers(0, n)]]
    for _ in range(1, k):
        d2 = np.min(
            np.stack([np.sum((x - m) ** 2, axis=1) for m in means]), axis=0
        )
        total = d2.sum()
        if total <= 0:
            means.append(x[rng.integers(0, n)])
            continue
        probs = d2 / total
        means.append(x[rng.gen.choice(n, p=probs)])
    return np.stack(means)


def _hard_assignment_init(x, seed_means):
    """Per-component moments from a nearest-seed hard assignment.

    Starting every component from the pooled variance lets high-variance
    cluster axes be drowned out by tight noise dimensions, which steers EM
    into the collapsed symmetric optimum; cluster-local variances avoid that.
    """
    k = seed_means.shape[0]
    d2 = np.stack([np.sum((x - m) ** 2, axis=1) for m in seed_means])
    assign = np.argmin(d2, axis=0)
    global_var = np.maximum(x.var(axis=0), VAR_FLOOR)
    means = np.empty_like(seed_means)
    variances = np.empty((k, x.shape[1]))
    counts = np.empty(k)
    for c in range(k):
        members = x[assign == c]
        counts[c] = max(len(members), 1)
        if len(members) == 0:
            means[c] = seed_means[c]
            variances[c] = global_var
        else:
            means[c] = members.mean(axis=0)
            variances[c] = np.maximum(members.var(axis=0), VAR_FLOOR)
    return means, variances, counts / counts.sum()


def fit_generator(samples, kind, n_components, replay_signature, rng):
    """Maximum-likelihood density fit; the signature is stored, not baked in."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[0] < n_components:
        raise ValueError("need at least n_components samples with uniform dimension")
    if kind == "gaussian":
        mean = x.mean(axis=0)
        var = np.maximum(x.var(axis=0), VAR_FLOOR)
        return GeneratorModel(
            "gaussian", [1.0], mean[None, :], var[None, :], replay_signature
        )
    if kind != "gmm":
        raise ValueError(f"unknown generator kind {kind!r}")

    n, d = x.shape
    k = n_components
    means, variances, weights = _hard_assignment_init(x, _kmeanspp_means(x, k, rng))
    trace = []
    prev_ll = -np.inf
    reseeded = False
    it = 0
    while it < EM_MAX_ITERS:
        it += 1
        log_resp = np.stack(
            [np.log(weights[c]) + _log_gauss_diag(x, means[c], variances[c]) for c in range(k)],
            axis=1,
        )
        log_norm = np.logaddexp.reduce(log_resp, axis=1)
        ll = float(log_norm.sum())
        trace.append(ll)
        resp = np.exp(log_resp - log_norm[:, None])
        nk = resp.sum(axis=0)
        if (nk < 1e-10).any():
            if reseeded:
                raise RuntimeError("EM degenerate component after re-seeding")
            reseeded = True
            means, variances, weights = _hard_assignment_init(
                x, _kmeanspp_means(x, k, rng.fork("reseed"))
            )
            trace = []
            prev_ll = -np.inf
            it = 0
            continue
        weights = nk / n
        means = (resp.T @ x) / nk[:, None]
        sq = resp.T @ (x**2) / nk[:, None] - means**2
        variances = np.maximum(sq, VAR_FLOOR)
        if np.isfinite(prev_ll) and abs(ll - prev_ll) <= EM_TOL * (abs(prev_ll) + 1.0):
            break
        prev_ll = ll
    return GeneratorModel("gmm", weights, means, variances, replay_signature, trace)


def sample_replay(pair, n_real, n_fake, rng):
    """Draw labeled replay samples from a fitted pair."""
    if n_real < 0 or n_fake < 0:
        raise ValueError("replay counts must be >= 0")
    out = []
    reals = pair.g_real.sample(n_real, rng.fork("real"))
    fakes = pair.g_fake.sample(n_fake, rng.fork("fake"))
    for row in reals:
        out.append(Sample(row, LABEL_REAL, "gen_real", pair.task_index))
    for row in fakes:
        out.append(Sample(row, LABEL_FAKE, "gen_fake", pair.task_index))
    return out


def _write_model(fh, name, model):
    fh.write(f"model {name} {model.kind} {len(model.weights)} {model.dim}\n")
    fh.write("weights " + " ".join(float(w).hex() for w in model.weights) + "\n")
    for c in range(len(model.weights)):
        fh.write("mean " + " ".join(float(v).hex() for v in model.means[c]) + "\n")
        fh.write("var " + " ".join(float(v).hex() for v in model.variances[c]) + "\n")
    fh.write("sig_vector " + " ".join(float(v).hex() for v in model.signature.vector) + "\n")
    fh.write("sig_strength " + float(model.signature.strength).hex() + "\n")


def _read_floats(fh, tag):
    toks = fh.readline().split()
    if not toks or toks[0] != tag:
        raise ValueError(f"expected {tag!r} line in generator file")
    return np.array([float.fromhex(t) for t in toks[1:]])


def _read_model(fh):
    head = fh.readline().split()
    if len(head) != 5 or head[0] != "model":
        raise ValueError("bad generator model header")
    _, _, kind, k, _ = head
    k = int(k)
    weights = _read_floats(fh, "weights")
    means, variances = [], []
    for _ in range(k):
        means.append(_read_floats(fh, "mean"))
        variances.append(_read_floats(fh, "var"))
    sig_vec = _read_floats(fh, "sig_vector")
    sig_strength = float(_read_floats(fh, "sig_strength")[0])
    return GeneratorModel(
        kind, weights, np.stack(means), np.stack(variances), Signature(sig_vec, sig_strength)
    )


def save_pair(pair, path):
    with open(path, "w") as fh:
        fh.write(f"generator_pair task {pair.task_index}\n")
        _write_model(fh, "g_real", pair.g_real)
        _write_model(fh, "g_fake", pair.g_fake)


def load_pair(path):
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 3 or head[0] != "generator_pair":
            raise ValueError(f"bad generator pair header in {path}")
        task_index = int(head[2])
        g_real = _read_model(fh)
        g_fake = _read_model(fh)
    return GeneratorPair(task_index, g_real, g_fake)
