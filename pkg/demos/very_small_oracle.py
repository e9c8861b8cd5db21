"""Semi-analytic hopcount law and Gumbel KS distance for gamma = 2.

Treats the number of k-edge paths lighter than w as Poisson with mean
N_k F^{*k}(w), N_k = (n-2)(n-3)...(n-k), independently over k.  The uniform
closed form gives F^{*k} exactly, so P(H = k) and the KS distance of the
transformed weight to the Gumbel limit follow by one-dimensional quadrature.

At n = 1e3..1e5 these numbers agree with the simulations in the acceptance
suite, and show how slowly both quantities approach their limits:

    python demos/very_small_oracle.py
"""
import math

import numpy as np
from scipy import special

from fppkn.predictor import limit_cdf, predict
from fppkn.weights import parse_model

MODEL = parse_model("powered:uniform:lambda=1:rule=gammalog(gamma=2)")
KMAX = 8


def log_conv(p, k, w):
    return k * p * np.log(w) + k * special.gammaln(p + 1) - special.gammaln(k * p + 1)


def oracle(n, points=400_001):
    p = math.log(n) / 2
    w = np.linspace(1e-4, 1 - 1e-4, points)
    dw = w[1] - w[0]
    hazard = {}
    for k in range(1, KMAX + 1):
        log_count = sum(math.log(n - 1 - j) for j in range(1, k))
        hazard[k] = np.exp(log_count + log_conv(p, k, w))
    surv = np.exp(-sum(hazard.values()))
    p_hop = {k: float(np.sum(np.gradient(hazard[k], w) * surv) * dw) for k in (1, 2, 3, 4)}
    spec = predict(MODEL, n).limit_law
    ks = float(np.max(np.abs((1 - surv) - limit_cdf(spec.statistic(w), spec.a_k))))
    return p_hop, ks


def main():
    print(f"{'n':>6}  {'P(H=1)':>7} {'P(H=2)':>7} {'P(H=3)':>7} {'P(H=4)':>7}  {'KS':>6}")
    for e in (3, 4, 5, 6, 8, 12):
        p_hop, ks = oracle(10**e)
        print(f"{'1e' + str(e):>6}  " + " ".join(f"{p_hop[k]:7.3f}" for k in (1, 2, 3, 4)) + f"  {ks:6.3f}")


if __name__ == "__main__":
    main()
