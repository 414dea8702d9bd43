"""Quick oracle checks behind ``gkpsim validate``."""

from __future__ import annotations

import numpy as np

from gkpsim.analytics import RatePair, average_success, conditional_success, outcome_density
from gkpsim.core import HALF_SQRT_PI, SQRT_PI, wrap_to_fundamental
from gkpsim.decoders import (
    all_pairs_defect_paths,
    chain_weight,
    decode_mwpm,
    mld_class_probabilities,
    min_weight_perfect_matching,
    shortest_paths_from,
)
from gkpsim.lattice import ToricLattice, syndrome_bits
from gkpsim.oracles import (
    brute_force_matching_weight,
    class_probabilities_by_enumeration,
    enumerate_path_weights,
    squeezed_marginal_tv,
)

Result = tuple[str, bool, str]


def check_matching(rng: np.random.Generator, instances: int = 300) -> Result:
    worst = 0.0
    for _ in range(instances):
        L = int(rng.integers(3, 7))
        lat = ToricLattice(L)
        n = 2 * int(rng.integers(1, 5))
        defects = rng.choice(lat.n_plaquettes, size=min(n, lat.n_plaquettes - lat.n_plaquettes % 2), replace=False)
        mask = np.zeros(lat.n_plaquettes, dtype=bool)
        mask[defects] = True
        g = all_pairs_defect_paths(lat, mask, rng.uniform(0.0, 3.0, lat.n_edges))
        m = min_weight_perfect_matching(g)
        worst = max(worst, abs(m.weight - brute_force_matching_weight(g.distances)))
    return "matching vs brute force", worst < 1e-9, f"{instances} instances, max gap {worst:.2e}"


def check_paths(rng: np.random.Generator, instances: int = 20) -> Result:
    lat = ToricLattice(3)
    worst = 0.0
    for _ in range(instances):
        w = rng.uniform(0.0, 3.0, lat.n_edges)
        src = int(rng.integers(lat.n_plaquettes))
        dist, _ = shortest_paths_from(lat, w, src)
        for t in range(lat.n_plaquettes):
            worst = max(worst, abs(dist[t] - enumerate_path_weights(lat, w, src, t)))
    return "shortest paths vs enumeration (L=3)", worst < 1e-12, f"max gap {worst:.2e}"


def check_mld(rng: np.random.Generator, instances: int = 20) -> Result:
    lat = ToricLattice(2)
    worst = 0.0
    for _ in range(instances):
        rates = rng.uniform(0.01, 0.45, lat.n_edges)
        s = syndrome_bits(lat, rng.random(lat.n_edges) < rates)
        got, _ = mld_class_probabilities(lat, s, rates)
        ref = class_probabilities_by_enumeration(lat, s, rates)
        worst = max(worst, float(np.max(np.abs(got - ref) / ref.sum())))
    return "exact MLD vs enumeration (L=2)", worst < 1e-12, f"max relative gap {worst:.2e}"


def check_marginal() -> Result:
    tv = squeezed_marginal_tv(0.25)
    return "squeezed marginal vs Gaussian (delta=0.25)", tv < 1e-3, f"TV {tv:.2e}"


def check_wrap(rng: np.random.Generator) -> Result:
    x = rng.normal(0.0, 20.0, 100_000)
    q, n = wrap_to_fundamental(x)
    ok = bool(np.all((q >= -HALF_SQRT_PI) & (q < HALF_SQRT_PI)) and np.allclose(q + n * SQRT_PI, x, rtol=0, atol=1e-13))
    return "wrap identity", ok, "100000 draws"


def check_bayes() -> Result:
    from scipy import integrate

    rp = RatePair(0.6, 0.0, 3)
    val, _ = integrate.quad(lambda q: conditional_success(q, rp) * outcome_density(q, rp), -HALF_SQRT_PI, HALF_SQRT_PI,
                            epsabs=1e-12)
    gap = abs(val - average_success(rp))
    return "Bayes consistency (sigma=0.6)", gap < 1e-6, f"gap {gap:.2e}"


def check_decoder_routes(rng: np.random.Generator, instances: int = 50) -> Result:
    worst = 0.0
    for _ in range(instances):
        lat = ToricLattice(int(rng.integers(3, 9)))
        w = rng.uniform(0.1, 3.0, lat.n_edges)
        s = syndrome_bits(lat, rng.random(lat.n_edges) < 0.1)
        a = chain_weight(w, decode_mwpm(lat, s, w, method="lattice"))
        b = chain_weight(w, decode_mwpm(lat, s, w, method="graph"))
        worst = max(worst, abs(a - b))
    return "matching routes agree", worst < 1e-6, f"max weight gap {worst:.2e}"


def run_all(seed: int = 12345) -> list[Result]:
    rng = np.random.default_rng(seed)
    return [
        check_wrap(rng),
        check_bayes(),
        check_marginal(),
        check_paths(rng),
        check_matching(rng),
        check_mld(rng),
        check_decoder_routes(rng),
    ]
