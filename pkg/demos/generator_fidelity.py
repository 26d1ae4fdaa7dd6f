"""How faithful the replay generators are, and what a signature does to draws.

Walkthrough: fit a diagonal Gaussian and a 2-component GMM on known data,
check recovered parameters and the EM log-likelihood trace, then show that a
signature of strength s shifts every draw by exactly s along its direction --
the knob the stream builder uses to make replays safe or risky.

Run:  python3 demos/generator_fidelity.py
"""

import numpy as np

from genreplay import Rng, Signature, fit_generator

DIM = 5


def main():
    rng = Rng(5)

    print("== Gaussian fit ==")
    true_mean = np.array([1.0, -2.0, 0.5, 3.0, 0.0])
    x = true_mean + 0.8 * rng.fork("x").normal(size=(10000, DIM))
    g = fit_generator(x, "gaussian", 1, Signature(np.zeros(DIM), 0.0), rng.fork("fit"))
    print(f"true mean      : {np.round(true_mean, 3)}")
    print(f"recovered mean : {np.round(g.means[0], 3)}")
    print(f"max error      : {np.abs(g.means[0] - true_mean).max():.4f}\n")

    print("== GMM fit (EM) ==")
    two = np.vstack([
        np.array([3.0, 0, 0, 0, 0]) + 0.4 * rng.fork("a").normal(size=(1500, DIM)),
        np.array([-3.0, 0, 0, 0, 0]) + 0.4 * rng.fork("b").normal(size=(1500, DIM)),
    ])
    gm = fit_generator(two, "gmm", 2, Signature(np.zeros(DIM), 0.0), rng.fork("em"))
    print(f"component means (axis 0): {np.round(sorted(gm.means[:, 0]), 3)}")
    print(f"weights                 : {np.round(gm.weights, 3)}")
    trace = gm.loglik_trace
    print(f"EM iterations           : {len(trace)}")
    print(f"log-likelihood monotone : {bool(np.all(np.diff(trace) >= -1e-7 * (np.abs(trace[:-1]) + 1.0)))}\n")

    print("== Signature shift ==")
    direction = np.zeros(DIM)
    direction[1] = 1.0
    for strength in (0.0, 1.0, 2.0):
        gs = fit_generator(x, "gaussian", 1, Signature(direction, strength), rng.fork(f"s{strength}"))
        draws = gs.sample(20000, rng.fork(f"d{strength}"))
        shift = draws.mean(axis=0)[1] - gs.means[0][1]
        print(f"strength {strength:.1f} -> measured shift along the signature: {shift:+.3f}")
    print("\nA replay signature aligned with a later forgery direction therefore")
    print("moves every generated-'real' sample toward that task's fake cluster.")


if __name__ == "__main__":
    main()
