"""Small feed-forward detector: ReLU hidden layers, logistic head, manual backprop.

Features are the activations of the last hidden layer; the head maps them to a
single forgery probability. Backward works on a cached forward record, so the
gradient always corresponds to the params the record was computed with.
"""

import numpy as np

PROB_CLAMP = 1e-7


class ForwardRecord:
    """Per-batch forward cache: pre-activations, activations, features, y_p."""

    def __init__(self, x, pre_acts, acts, features, y_p, u):
        self.x = x
        self.pre_acts = pre_acts
        self.acts = acts
        self.features = features
        self.y_p = y_p
        self.u = u


class MLP:
    """Feature extractor plus scalar logistic head.

    widths is [input_dim, hidden1, ..., hiddenL]; the feature dimension is
    widths[-1] and the head adds widths[-1] + 1 parameters.
    """

    def __init__(self, widths, rng, scale=1.0):
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ValueError("architecture needs an input width and >=1 hidden layer")
        if scale < 0:
            raise ValueError("scale must be >= 0")
        self.widths = list(widths)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            half = scale / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-half, half, (fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        half = scale / np.sqrt(widths[-1])
        self.head_w = rng.uniform(-half, half, widths[-1])
        self.head_b = 0.0

    @property
    def input_dim(self):
        return self.widths[0]

    @property
    def feature_dim(self):
        return self.widths[-1]

    @property
    def n_params(self):
        n = sum(w.size + b.size for w, b in zip(self.weights, self.biases))
        return n + self.head_w.size + 1

    def get_flat(self):
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        parts.append(self.head_w)
        parts.append(np.array([self.head_b]))
        return np.concatenate(parts)

    def set_flat(self, flat):
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.n_params:
            raise ValueError(f"expected {self.n_params} params, got {flat.size}")
        i = 0
        for li, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[li] = flat[i : i + w.size].reshape(w.shape).copy()
            i += w.size
            self.biases[li] = flat[i : i + b.size].copy()
            i += b.size
        self.head_w = flat[i : i + self.head_w.size].copy()
        i += self.head_w.size
        self.head_b = float(flat[i])

    def forward(self, x):
        """Forward a batch (n, input_dim) or single vector (input_dim,)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise ValueError(f"input dim {x.shape[1]} != model dim {self.input_dim}")
        a = x
        pre_acts = []
        acts = []
        for w, b in zip(self.weights, self.biases):
            z = a @ w + b
            a = np.maximum(z, 0.0)
            pre_acts.append(z)
            acts.append(a)
        u = a @ self.head_w + self.head_b
        y_p = np.clip(1.0 / (1.0 + np.exp(-u)), PROB_CLAMP, 1.0 - PROB_CLAMP)
        return ForwardRecord(x, pre_acts, acts, a, y_p, u)

    def backward(self, record, d_yp=None, d_features=None):
        """Flat gradient of a scalar loss given upstream grads on y_p/features.

        Upstream grads must already carry the loss's own batch averaging; this
        only applies the chain rule through head and hidden layers.
        """
        n = record.x.shape[0]
        if d_yp is None:
            d_yp = np.zeros(n)
        d_yp = np.asarray(d_yp, dtype=float)
        if d_yp.shape != (n,):
            raise ValueError("d_yp length must match the batch size")
        du = d_yp * record.y_p * (1.0 - record.y_p)
        g_head_w = record.features.T @ du
        g_head_b = du.sum()
        da = np.outer(du, self.head_w)
        if d_features is not None:
            d_features = np.asarray(d_features, dtype=float)
            if d_features.shape != record.features.shape:
                raise ValueError("d_features shape must match features")
            da = da + d_features

        g_ws = [None] * len(self.weights)
        g_bs = [None] * len(self.biases)
        for li in range(len(self.weights) - 1, -1, -1):
            dz = da * (record.pre_acts[li] > 0)
            a_prev = record.x if li == 0 else record.acts[li - 1]
            g_ws[li] = a_prev.T @ dz
            g_bs[li] = dz.sum(axis=0)
            da = dz @ self.weights[li].T

        parts = []
        for gw, gb in zip(g_ws, g_bs):
            parts.append(gw.ravel())
            parts.append(gb)
        parts.append(g_head_w)
        parts.append(np.array([g_head_b]))
        return np.concatenate(parts)

    def save(self, path):
        """Text checkpoint: widths header + hex floats, bit-exact round trip."""
        arrays = []
        for w, b in zip(self.weights, self.biases):
            arrays.append(w.ravel())
            arrays.append(b)
        arrays.append(self.head_w)
        arrays.append(np.array([self.head_b]))
        with open(path, "w") as fh:
            fh.write("widths " + " ".join(str(w) for w in self.widths) + "\n")
            for arr in arrays:
                fh.write(" ".join(float(v).hex() for v in arr) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            header = fh.readline().split()
            if not header or header[0] != "widths":
                raise ValueError(f"bad checkpoint header in {path}")
            widths = [int(w) for w in header[1:]]
            model = cls.__new__(cls)
            model.widths = widths
            model.weights = []
            model.biases = []

            def read_row(n):
                row = [float.fromhex(t) for t in fh.readline().split()]
                if len(row) != n:
                    raise ValueError(f"truncated checkpoint {path}")
                return np.array(row)

            for fan_in, fan_out in zip(widths[:-1], widths[1:]):
                model.weights.append(read_row(fan_in * fan_out).reshape(fan_in, fan_out))
                model.biases.append(read_row(fan_out))
            model.head_w = read_row(widths[-1])
            model.head_b = float(read_row(1)[0])
        return model


def init_model(widths, rng, scale=1.0):
    return MLP(widths, rng, scale)
