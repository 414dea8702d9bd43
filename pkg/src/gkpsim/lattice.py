"""L x L toric code, bit-flip sector only.

Edge indexing (version 1, see docs/lattice_indexing.md)::

    edge(orientation, r, c) = orientation * L*L + (r % L) * L + (c % L)

``orientation`` 0 is a horizontal edge ``h(r, c)`` (top side of plaquette
``(r, c)``), 1 a vertical edge ``v(r, c)`` (left side of plaquette ``(r, c)``).
Plaquette ``p = r * L + c`` holds ``h(r, c), h(r+1, c), v(r, c), v(r, c+1)``.
Star ``(r, c)`` sits on the top-left corner of plaquette ``(r, c)`` and holds
``h(r, c), h(r, c-1), v(r, c), v(r-1, c)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from gkpsim.analytics import RatePair, conditional_error
from gkpsim.core import ContractError, ParameterError, wrap_to_fundamental

INDEXING_VERSION = 1

HORIZONTAL = 0
VERTICAL = 1


@dataclass(frozen=True)
class SyndromeMeasurement:
    """Measured plaquette defects and the conditional chance each reading is wrong."""

    defects: np.ndarray
    per_plaquette_fail_prob: np.ndarray
    q_cor: np.ndarray | None = field(default=None, compare=False)

    @property
    def defect_ids(self) -> np.ndarray:
        return np.flatnonzero(self.defects)


class ToricLattice:
    def __init__(self, L: int):
        if not (isinstance(L, (int, np.integer)) and L >= 2):
            raise ParameterError(f"lattice size must be an integer >= 2, got {L!r}")
        self.L = int(L)
        self.n_edges = 2 * self.L * self.L
        self.n_plaquettes = self.L * self.L

    def __repr__(self) -> str:
        return f"ToricLattice(L={self.L})"

    def edge(self, orientation: int, r: int, c: int) -> int:
        L = self.L
        return orientation * L * L + (r % L) * L + (c % L)

    def plaquette(self, r: int, c: int) -> int:
        return (r % self.L) * self.L + (c % self.L)

    @cached_property
    def plaquette_edges(self) -> np.ndarray:
        """``(L*L, 4)`` edge ids per plaquette."""
        L = self.L
        out = np.empty((L * L, 4), dtype=np.int64)
        for r in range(L):
            for c in range(L):
                out[self.plaquette(r, c)] = (
                    self.edge(HORIZONTAL, r, c),
                    self.edge(HORIZONTAL, r + 1, c),
                    self.edge(VERTICAL, r, c),
                    self.edge(VERTICAL, r, c + 1),
                )
        return out

    @cached_property
    def star_edges(self) -> np.ndarray:
        """``(L*L, 4)`` edge ids per star (vertex), vertex id ``r*L + c``."""
        L = self.L
        out = np.empty((L * L, 4), dtype=np.int64)
        for r in range(L):
            for c in range(L):
                out[r * L + c] = (
                    self.edge(HORIZONTAL, r, c),
                    self.edge(HORIZONTAL, r, c - 1),
                    self.edge(VERTICAL, r, c),
                    self.edge(VERTICAL, r - 1, c),
                )
        return out

    @cached_property
    def edge_plaquettes(self) -> np.ndarray:
        """``(2*L*L, 2)`` the two plaquettes containing each edge."""
        out = np.empty((self.n_edges, 2), dtype=np.int64)
        L = self.L
        for r in range(L):
            for c in range(L):
                out[self.edge(HORIZONTAL, r, c)] = (self.plaquette(r, c), self.plaquette(r - 1, c))
                out[self.edge(VERTICAL, r, c)] = (self.plaquette(r, c), self.plaquette(r, c - 1))
        return out

    @cached_property
    def check_matrix(self) -> sp.csc_matrix:
        rows = np.repeat(np.arange(self.n_plaquettes), 4)
        cols = self.plaquette_edges.ravel()
        data = np.ones(rows.size, dtype=np.uint8)
        return sp.csc_matrix((data, (rows, cols)), shape=(self.n_plaquettes, self.n_edges))

    @cached_property
    def horizontal_cut(self) -> np.ndarray:
        """Vertical edges of column 0; odd overlap means a horizontally wrapping chain."""
        return np.array([self.edge(VERTICAL, r, 0) for r in range(self.L)])

    @cached_property
    def vertical_cut(self) -> np.ndarray:
        """Horizontal edges of row 0; odd overlap means a vertically wrapping chain."""
        return np.array([self.edge(HORIZONTAL, 0, c) for c in range(self.L)])

    def horizontal_loop(self, row: int = 0) -> np.ndarray:
        """Syndrome-free chain crossing every plaquette of one row; class (1, 0)."""
        e = np.zeros(self.n_edges, dtype=bool)
        e[[self.edge(VERTICAL, row, c) for c in range(self.L)]] = True
        return e

    def vertical_loop(self, col: int = 0) -> np.ndarray:
        """Syndrome-free chain crossing every plaquette of one column; class (0, 1)."""
        e = np.zeros(self.n_edges, dtype=bool)
        e[[self.edge(HORIZONTAL, r, col) for r in range(self.L)]] = True
        return e

    def star_support(self, vertex: int) -> np.ndarray:
        e = np.zeros(self.n_edges, dtype=bool)
        e[self.star_edges[vertex]] = True
        return e

    def plaquette_support(self, p: int) -> np.ndarray:
        e = np.zeros(self.n_edges, dtype=bool)
        e[self.plaquette_edges[p]] = True
        return e


def build_lattice(L: int) -> ToricLattice:
    return ToricLattice(L)


def _as_pattern(lat: ToricLattice, e) -> np.ndarray:
    arr = np.asarray(e, dtype=bool)
    if arr.shape[-1] != lat.n_edges:
        raise ParameterError(f"error pattern must have {lat.n_edges} entries, got {arr.shape[-1]}")
    return arr


def syndrome_bits(lat: ToricLattice, e) -> np.ndarray:
    """Plaquette parities of one pattern or a ``(batch, n_edges)`` stack."""
    arr = _as_pattern(lat, e)
    return np.bitwise_xor.reduce(arr[..., lat.plaquette_edges], axis=-1)


def ideal_syndrome(lat: ToricLattice, e) -> SyndromeMeasurement:
    defects = syndrome_bits(lat, e)
    return SyndromeMeasurement(defects, np.zeros(lat.n_plaquettes))


def noisy_syndrome(lat: ToricLattice, e, sigma2: float, rng: np.random.Generator, k: int = 1) -> SyndromeMeasurement:
    """Plaquette readout through a GKP ancilla carrying five accumulated shifts.

    Each readout shift is drawn independently from N(0, 5*sigma2^2).
    """
    if not sigma2 >= 0:
        raise ParameterError(f"sigma2 must be non-negative, got {sigma2!r}")
    true_bits = syndrome_bits(lat, e)
    if sigma2 == 0:
        return SyndromeMeasurement(true_bits, np.zeros(lat.n_plaquettes), np.zeros(lat.n_plaquettes))
    sigma_t = np.sqrt(5.0) * sigma2
    q_cor, teeth = wrap_to_fundamental(rng.normal(0.0, sigma_t, size=lat.n_plaquettes))
    fail = conditional_error(q_cor, RatePair(float(sigma_t), 0.0, k))
    return SyndromeMeasurement(true_bits ^ (teeth & 1).astype(bool), fail, q_cor)


def logical_class_bits(lat: ToricLattice, residual) -> tuple[np.ndarray, np.ndarray]:
    """Cut parities for one pattern or a stack; no syndrome check."""
    arr = _as_pattern(lat, residual)
    h = np.bitwise_xor.reduce(arr[..., lat.horizontal_cut], axis=-1)
    v = np.bitwise_xor.reduce(arr[..., lat.vertical_cut], axis=-1)
    return h, v


def logical_class(lat: ToricLattice, residual) -> tuple[int, int]:
    """Homology class ``(wraps_horizontal, wraps_vertical)`` of a syndrome-free chain."""
    arr = _as_pattern(lat, residual)
    if arr.ndim != 1:
        raise ParameterError("logical_class takes a single pattern; use logical_class_bits for stacks")
    if syndrome_bits(lat, arr).any():
        raise ContractError("residual has a non-empty syndrome")
    h, v = logical_class_bits(lat, arr)
    return int(h), int(v)
