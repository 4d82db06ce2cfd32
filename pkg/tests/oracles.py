"""Independent reference computations shared by the tests.

None of these reuse package code paths: they sample or integrate directly.
"""

import math

import numpy as np
from scipy import integrate


def sphere_slice(basis: np.ndarray, samples: int, rng) -> np.ndarray:
    """Points on the unit sphere of span(basis): a uniform angle grid for k <= 2, random otherwise."""
    k = basis.shape[1]
    if k == 1:
        return np.stack([basis[:, 0], -basis[:, 0]])
    if k == 2:
        t = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
        return np.cos(t)[:, None] * basis[:, 0] + np.sin(t)[:, None] * basis[:, 1]
    g = rng.standard_normal((samples, k))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g @ basis.T


def one_sided(U: np.ndarray, W: np.ndarray) -> float:
    """sup over sampled unit u in V of the distance from u to the unit sphere of W.

    The inner infimum is exact: dist(u, S_W) = sqrt(2 - 2 |P_W u|) for unit u.
    """
    Q, _ = np.linalg.qr(W)
    proj = np.linalg.norm(U @ Q, axis=1)
    return float(np.sqrt(np.maximum(2.0 - 2.0 * proj, 0.0)).max())


def sampled_gr_distance(V: np.ndarray, W: np.ndarray, samples: int = 100_000, rng=None) -> float:
    rng = rng or np.random.default_rng(0)
    return one_sided(sphere_slice(V, samples, rng), W) + one_sided(sphere_slice(W, samples, rng), V)


def extension_by_quad(Fmap, f, lo, hi, x):
    """int_lo^hi e^{2 pi i x.F(xi)} f(xi) d xi for n = 1 by adaptive quadrature."""

    def re(t):
        return math.cos(2 * math.pi * float(np.dot(x, Fmap(t)))) * f(t)

    def im(t):
        return math.sin(2 * math.pi * float(np.dot(x, Fmap(t)))) * f(t)

    a = integrate.quad(re, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    b = integrate.quad(im, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    return complex(a, b)


def weak_norm_bruteforce(values: np.ndarray, cell: float, q: float) -> float:
    """sup over lambda of lambda |{|f| > lambda}|^{1/q}, approached from below each level."""
    a = np.abs(values)
    best = 0.0
    for lam in np.unique(a):
        if lam <= 0:
            continue
        for t in (lam * (1 - 1e-13), lam):
            best = max(best, t * (np.count_nonzero(a > t) * cell) ** (1.0 / q))
    return best
