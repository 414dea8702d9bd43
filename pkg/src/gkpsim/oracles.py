"""Slow, obviously-correct reference implementations used to validate the fast paths."""

from __future__ import annotations

import math
from itertools import product

import numpy as np
from scipy import integrate, stats

from gkpsim.analytics import SqueezeParams, squeezed_marginal_density
from gkpsim.core import SQRT_PI, ContractError
from gkpsim.decoders import CLASSES, RATE_FLOOR, _dual_adjacency
from gkpsim.lattice import ToricLattice, logical_class_bits, syndrome_bits


def enumerate_matchings(n: int):
    """Yield every perfect matching of ``range(n)`` as a list of pairs."""
    if n == 0:
        yield []
        return
    for j in range(1, n):
        rest = [x for x in range(1, n) if x != j]
        for sub in enumerate_matchings(len(rest)):
            yield [(0, j)] + [(rest[a], rest[b]) for a, b in sub]


def brute_force_matching_weight(distances: np.ndarray) -> float:
    """Minimum total weight over all ``(n-1)!!`` perfect matchings."""
    n = distances.shape[0]
    if n % 2:
        raise ContractError("brute-force matching needs an even number of defects")
    return min(sum(float(distances[a, b]) for a, b in m) for m in enumerate_matchings(n))


def enumerate_path_weights(lat: ToricLattice, w: np.ndarray, source: int, target: int) -> float:
    """Cheapest simple dual-lattice path by depth-first enumeration of every simple path."""
    adj = _dual_adjacency(lat.L)
    best = math.inf
    visited = np.zeros(lat.n_plaquettes, dtype=bool)

    def walk(node: int, cost: float) -> None:
        nonlocal best
        if node == target:
            best = min(best, cost)
            return
        visited[node] = True
        for nb, e in adj[node]:
            if not visited[nb]:
                walk(nb, cost + float(w[e]))
        visited[node] = False

    walk(source, 0.0)
    return best


def class_probabilities_by_enumeration(lat: ToricLattice, defects: np.ndarray, rates) -> np.ndarray:
    """Sum the probability of every edge pattern with the given syndrome, by cut-parity class."""
    p = np.clip(np.asarray(rates, dtype=float), RATE_FLOOR, 1.0 - RATE_FLOOR)
    patterns = np.array(list(product((False, True), repeat=lat.n_edges)), dtype=bool)
    match = np.all(syndrome_bits(lat, patterns) == np.asarray(defects, dtype=bool), axis=1)
    patterns = patterns[match]
    probs = np.prod(np.where(patterns, p, 1.0 - p), axis=1)
    h, v = logical_class_bits(lat, patterns)
    out = np.zeros(4)
    for idx, cls in enumerate(CLASSES):
        out[idx] = probs[(h == cls[0]) & (v == cls[1])].sum()
    return out


def squeezed_marginal_tv(delta: float) -> float:
    """Total-variation distance to N(0, delta^2/2) on [-sqrt(pi), sqrt(pi)]."""
    d = SqueezeParams(delta)
    ref = stats.norm(0.0, delta / math.sqrt(2.0))
    f = lambda u: abs(squeezed_marginal_density(d, u) - ref.pdf(u))
    val, _ = integrate.quad(f, -SQRT_PI, SQRT_PI, points=[0.0], epsabs=1e-12, limit=400)
    return 0.5 * val
