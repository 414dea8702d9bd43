"""Decoders for the toric-code bit-flip sector.

Edge weights are negative log-likelihood ratios ``ln((1-p)/p)`` of each
qubit's flip probability. Two minimum-weight matching routes are provided:

* ``"graph"``: Dijkstra from every defect on the dual lattice, then exact
  minimum-weight perfect matching of the complete defect graph (networkx
  blossom). Transparent and used as the reference.
* ``"lattice"``: PyMatching on the plaquette check matrix. Much faster; used
  by the Monte Carlo sweeps.

Exact maximum-likelihood decoding sums the probability of every chain in each
of the four homology classes, which is feasible for ``L <= 3``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import networkx as nx
import numpy as np
import pymatching
from scipy import special

from gkpsim.core import ContractError, ParameterError
from gkpsim.lattice import SyndromeMeasurement, ToricLattice, logical_class_bits, syndrome_bits

RATE_FLOOR = 1e-12
W_MAX = math.log((1.0 - RATE_FLOOR) / RATE_FLOOR)
MLD_MAX_L = 3

# Class order used by the exact decoder: (wraps_horizontal, wraps_vertical).
CLASSES = ((0, 0), (1, 0), (0, 1), (1, 1))


def edge_weights_from_rates(rates) -> np.ndarray:
    """Per-edge ``ln((1-p)/p)``, clamped to ``[0, W_MAX]``."""
    p = np.clip(np.asarray(rates, dtype=float), RATE_FLOOR, 1.0 - RATE_FLOOR)
    w = np.log1p(-p) - np.log(p)
    return np.clip(w, 0.0, W_MAX)


@dataclass(frozen=True)
class DefectGraph:
    """Defects with pairwise shortest-path distances and the realizing edge sets."""

    defects: np.ndarray
    distances: np.ndarray
    paths: dict[tuple[int, int], np.ndarray]

    def path(self, i: int, j: int) -> np.ndarray:
        return self.paths[(i, j)] if i < j else self.paths[(j, i)]


@dataclass(frozen=True)
class Matching:
    """Pairs of positions into ``DefectGraph.defects``; ``-1`` marks the virtual defect."""

    pairs: tuple[tuple[int, int], ...]
    weight: float


@lru_cache(maxsize=None)
def _dual_adjacency(L: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    # For each plaquette, (neighbour plaquette, shared edge) in edge-id order.
    lat = ToricLattice(L)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(lat.n_plaquettes)]
    for e, (a, b) in enumerate(lat.edge_plaquettes):
        adj[a].append((int(b), e))
        adj[b].append((int(a), e))
    return tuple(tuple(x) for x in adj)


def shortest_paths_from(lat: ToricLattice, w: np.ndarray, source: int) -> tuple[np.ndarray, np.ndarray]:
    """Dijkstra on the dual lattice; returns distances and the edge used to reach each node."""
    adj = _dual_adjacency(lat.L)
    dist = np.full(lat.n_plaquettes, np.inf)
    via = np.full(lat.n_plaquettes, -1, dtype=np.int64)
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = np.zeros(lat.n_plaquettes, dtype=bool)
    while heap:
        d, node = heapq.heappop(heap)
        if done[node]:
            continue
        done[node] = True
        for nb, e in adj[node]:
            nd = d + w[e]
            if nd < dist[nb]:
                dist[nb] = nd
                via[nb] = e
                heapq.heappush(heap, (nd, nb))
    return dist, via


def _trace(lat: ToricLattice, via: np.ndarray, source: int, target: int) -> np.ndarray:
    edges = []
    node = target
    while node != source:
        e = int(via[node])
        edges.append(e)
        a, b = lat.edge_plaquettes[e]
        node = int(b) if a == node else int(a)
    return np.array(edges[::-1], dtype=np.int64)


def all_pairs_defect_paths(lat: ToricLattice, s: SyndromeMeasurement | np.ndarray, w) -> DefectGraph:
    defects = _defect_ids(s)
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ParameterError("edge weights must be non-negative")
    n = defects.size
    dist = np.zeros((n, n))
    paths: dict[tuple[int, int], np.ndarray] = {}
    for i in range(n - 1):
        d, via = shortest_paths_from(lat, w, int(defects[i]))
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = d[defects[j]]
            paths[(i, j)] = _trace(lat, via, int(defects[i]), int(defects[j]))
    return DefectGraph(defects, dist, paths)


def _defect_ids(s) -> np.ndarray:
    if isinstance(s, SyndromeMeasurement):
        return s.defect_ids
    return np.flatnonzero(np.asarray(s, dtype=bool))


def min_weight_perfect_matching(g: DefectGraph, pad_odd: bool = False) -> Matching:
    """Exact minimum-weight perfect matching of the defect graph.

    With ``pad_odd`` an odd defect set gets one virtual defect whose distance
    to every real defect is the largest finite pairwise distance.
    """
    n = g.defects.size
    if n % 2 and not pad_odd:
        raise ContractError(f"cannot perfectly match an odd number of defects ({n})")
    if n == 0:
        return Matching((), 0.0)
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            graph.add_edge(i, j, weight=float(g.distances[i, j]))
    if n % 2:
        finite = g.distances[np.isfinite(g.distances)]
        pad = float(finite.max()) if finite.size else 0.0
        for i in range(n):
            graph.add_edge(i, -1, weight=pad)
    mate = nx.min_weight_matching(graph)
    pairs = []
    total = 0.0
    for a, b in mate:
        i, j = (a, b) if (b == -1 or (a != -1 and a < b)) else (b, a)
        pairs.append((i, j))
        total += graph[i][j]["weight"]
    pairs.sort(key=lambda p: (p[0] if p[0] >= 0 else n, p[1]))
    return Matching(tuple(pairs), total)


def _correction_from_matching(lat: ToricLattice, g: DefectGraph, m: Matching) -> np.ndarray:
    corr = np.zeros(lat.n_edges, dtype=bool)
    for i, j in m.pairs:
        if i < 0 or j < 0:
            continue
        corr[g.path(i, j)] ^= True
    return corr


def _lattice_matcher(lat: ToricLattice, w: np.ndarray) -> pymatching.Matching:
    return pymatching.Matching.from_check_matrix(lat.check_matrix, weights=w)


def decode_mwpm(
    lat: ToricLattice,
    s: SyndromeMeasurement | np.ndarray,
    w=None,
    method: Literal["lattice", "graph"] = "lattice",
) -> np.ndarray:
    """Minimum-weight matching correction; ``w=None`` means uniform weights."""
    w = np.ones(lat.n_edges) if w is None else np.asarray(w, dtype=float)
    defects = _defect_ids(s)
    if defects.size == 0:
        return np.zeros(lat.n_edges, dtype=bool)
    if method == "lattice" and defects.size % 2 == 0:
        syndrome = np.zeros(lat.n_plaquettes, dtype=np.uint8)
        syndrome[defects] = 1
        return _lattice_matcher(lat, w).decode(syndrome).astype(bool)
    if method not in ("lattice", "graph"):
        raise ParameterError(f"unknown matching method {method!r}")
    g = all_pairs_defect_paths(lat, defects_mask(lat, defects), w)
    m = min_weight_perfect_matching(g, pad_odd=True)
    return _correction_from_matching(lat, g, m)


def defects_mask(lat: ToricLattice, defects) -> np.ndarray:
    mask = np.zeros(lat.n_plaquettes, dtype=bool)
    mask[np.asarray(defects, dtype=np.int64)] = True
    return mask


class UniformDecoder:
    """Batch unit-weight matching with a single reusable matcher."""

    def __init__(self, lat: ToricLattice):
        self.lat = lat
        self._matcher = _lattice_matcher(lat, np.ones(lat.n_edges))

    def decode_batch(self, syndromes: np.ndarray) -> np.ndarray:
        syndromes = np.asarray(syndromes, dtype=np.uint8)
        odd = syndromes.sum(axis=1) % 2 == 1
        out = np.zeros((syndromes.shape[0], self.lat.n_edges), dtype=bool)
        if np.any(~odd):
            out[~odd] = self._matcher.decode_batch(syndromes[~odd]).astype(bool)
        for i in np.flatnonzero(odd):
            out[i] = decode_mwpm(self.lat, syndromes[i], None, method="graph")
        return out


def weighted_decode_batch(lat: ToricLattice, syndromes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Per-trial weighted matching; ``weights`` has one row per syndrome."""
    syndromes = np.asarray(syndromes, dtype=np.uint8)
    out = np.zeros((syndromes.shape[0], lat.n_edges), dtype=bool)
    for i in range(syndromes.shape[0]):
        if not syndromes[i].any():
            continue
        if syndromes[i].sum() % 2:
            out[i] = decode_mwpm(lat, syndromes[i], weights[i], method="graph")
        else:
            out[i] = _lattice_matcher(lat, weights[i]).decode(syndromes[i]).astype(bool)
    return out


def chain_weight(w, chain) -> float:
    return float(np.sum(np.asarray(w, dtype=float)[np.asarray(chain, dtype=bool)]))


def defect_probability(neighborhood_rates) -> np.ndarray:
    """Chance that an odd number of a plaquette's four data qubits flipped.

    Counts exactly one or exactly three flips; ``neighborhood_rates`` has a
    trailing axis of length 4.
    """
    p = np.asarray(neighborhood_rates, dtype=float)
    q = 1.0 - p
    total = np.zeros(p.shape[:-1])
    for i in range(4):
        others = [j for j in range(4) if j != i]
        total += q[..., i] * np.prod(p[..., others], axis=-1)
        total += p[..., i] * np.prod(q[..., others], axis=-1)
    return total


def measured_defect_success(p_defect, p_syn) -> np.ndarray:
    """Posterior that a measured defect is a true defect."""
    p_defect = np.asarray(p_defect, dtype=float)
    p_syn = np.asarray(p_syn, dtype=float)
    num = p_defect * (1.0 - p_syn)
    den = num + (1.0 - p_defect) * p_syn
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 1.0)
    return out


def precorrect_defects(
    s: SyndromeMeasurement,
    per_plaquette_success,
    neighborhood_rates,
    p_c: float,
) -> SyndromeMeasurement:
    """Clear measured defects whose posterior of being real is at most ``p_c``.

    ``per_plaquette_success`` is one minus the readout failure probability.
    Non-defects are left alone.
    """
    if not (0.0 <= p_c <= 1.0):
        raise ParameterError(f"p_c must lie in [0, 1], got {p_c!r}")
    p_syn = 1.0 - np.asarray(per_plaquette_success, dtype=float)
    p_succ = measured_defect_success(defect_probability(neighborhood_rates), p_syn)
    keep = np.asarray(s.defects, dtype=bool) & (p_succ > p_c)
    return SyndromeMeasurement(keep, s.per_plaquette_fail_prob, s.q_cor)


@lru_cache(maxsize=None)
def _star_group(L: int) -> np.ndarray:
    """All ``2**(L*L-1)`` products of star operators as a boolean matrix."""
    lat = ToricLattice(L)
    gens = np.zeros((lat.n_plaquettes - 1, lat.n_edges), dtype=np.uint8)
    for v in range(lat.n_plaquettes - 1):
        gens[v, lat.star_edges[v]] = 1
    m = gens.shape[0]
    coeffs = (np.arange(1 << m)[:, None] >> np.arange(m)) & 1
    group = (coeffs.astype(np.int64) @ gens.astype(np.int64)) & 1
    group.setflags(write=False)
    return group.astype(bool)


def _class_representative(lat: ToricLattice, cls: tuple[int, int]) -> np.ndarray:
    rep = np.zeros(lat.n_edges, dtype=bool)
    if cls[0]:
        rep ^= lat.horizontal_loop()
    if cls[1]:
        rep ^= lat.vertical_loop()
    return rep


def mld_class_probabilities(
    lat: ToricLattice, s: SyndromeMeasurement | np.ndarray, rates, canonical=None
) -> tuple[np.ndarray, np.ndarray]:
    """Total probability of each homology class of chains matching the syndrome.

    Classes are labelled by the cut parities of the chains themselves, in the
    order of ``CLASSES``. Returns ``(class_probabilities, canonical_chain)``.
    """
    if lat.L > MLD_MAX_L:
        raise ParameterError(f"exact maximum-likelihood decoding supports L <= {MLD_MAX_L}, got {lat.L}")
    p = np.clip(np.asarray(rates, dtype=float), RATE_FLOOR, 1.0 - RATE_FLOOR)
    if canonical is None:
        canonical = decode_mwpm(lat, s, edge_weights_from_rates(p), method="graph")
    canonical = np.asarray(canonical, dtype=bool)
    if not np.array_equal(syndrome_bits(lat, canonical), defects_mask(lat, _defect_ids(s))):
        raise ContractError("canonical chain does not reproduce the syndrome")
    group = _star_group(lat.L)
    log_odds = np.log(p) - np.log1p(-p)
    base = float(np.sum(np.log1p(-p)))
    h0, v0 = logical_class_bits(lat, canonical)
    probs = np.zeros(4)
    for cls in CLASSES:
        shift = (cls[0] ^ int(h0), cls[1] ^ int(v0))
        chains = group ^ (canonical ^ _class_representative(lat, shift))
        probs[CLASSES.index(cls)] = math.exp(base + special.logsumexp(chains @ log_odds))
    return probs, canonical


def decode_mld_exact(lat: ToricLattice, s: SyndromeMeasurement | np.ndarray, rates, canonical=None) -> np.ndarray:
    """Correction from the most probable homology class; ties favour the canonical chain's class."""
    probs, canonical = mld_class_probabilities(lat, s, rates, canonical)
    h0, v0 = logical_class_bits(lat, canonical)
    own = CLASSES.index((int(h0), int(v0)))
    best = own
    for idx in range(4):
        if probs[idx] > probs[best]:
            best = idx
    h, v = CLASSES[best]
    return canonical ^ _class_representative(lat, (h ^ int(h0), v ^ int(v0)))
