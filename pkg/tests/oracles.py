"""Slow reference implementations used as test oracles."""

import math

import mpmath


@mpmath.workdps(50)
def naive_posterior(S, x, alpha, knee, psi):
    """Plain-sum posterior mean at 50 digits, no log-space tricks."""
    S = [[mpmath.mpf(float(v)) for v in row] for row in S]
    x = [mpmath.mpf(float(v)) for v in x]
    knee = [mpmath.mpf(float(v)) for v in knee]
    a = mpmath.mpf(float(alpha))
    psi = mpmath.mpf(float(psi))
    n = len(x)
    weights = []
    for s in S:
        prior = mpmath.exp(-sum((si - ki) ** 2 for si, ki in zip(s, knee)) / (2 * psi**2))
        prior /= (2 * mpmath.pi * psi**2) ** (mpmath.mpf(n) / 2)
        like = mpmath.exp(-sum((xi - mpmath.sqrt(a) * si) ** 2 for xi, si in zip(x, s)) / (2 * (1 - a)))
        like /= (2 * mpmath.pi * (1 - a)) ** (mpmath.mpf(n) / 2)
        weights.append(prior * like)
    Z = sum(weights)
    return [float(sum(w * s[j] for w, s in zip(weights, S)) / Z) for j in range(n)]


def igd_double_loop(R, P):
    """Nearest-member distance per reference point, averaged with an exactly rounded sum."""
    dists = []
    for v in R:
        best = math.inf
        for u in P:
            best = min(best, math.sqrt(sum((a - b) ** 2 for a, b in zip(u, v))))
        dists.append(best)
    return math.fsum(dists) / len(R)
