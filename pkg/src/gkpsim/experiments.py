"""Vectorized trial kernels, one per experiment.

A kernel simulates ``n`` trials of one grid cell from a single random stream
and returns a dict of counts (ints or integer arrays). Counts from separate
blocks of the same cell are summed by the harness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gkpsim.analytics import RatePair, conditional_error, double_measurement_decision, posterior_params
from gkpsim.core import HALF_SQRT_PI, SQRT_PI, GkpQubit, ShiftPair, steane_correct_q, wrap_to_fundamental
from gkpsim.decoders import (
    UniformDecoder,
    decode_mld_exact,
    defect_probability,
    edge_weights_from_rates,
    measured_defect_success,
    weighted_decode_batch,
)
from gkpsim.lattice import ToricLattice, logical_class_bits, syndrome_bits
from gkpsim.repetition import repetition_batch

STEANE_BINS = 50


@dataclass(frozen=True)
class Cell:
    experiment: str
    sigma: float
    sigma2: float = 0.0
    L: int = 0
    param: float | None = None
    decoders: tuple[str, ...] = ()
    k: int = 1
    p_c_grid: tuple[float, ...] = field(default=())


def steane_bin_edges(bins: int = STEANE_BINS) -> np.ndarray:
    return np.linspace(-HALF_SQRT_PI, HALF_SQRT_PI, bins + 1)


def steane_kernel(cell: Cell, n: int, rng: np.random.Generator) -> dict:
    u1 = rng.normal(0.0, cell.sigma, size=n)
    u2 = rng.normal(0.0, cell.sigma2, size=n)
    _, outcome = steane_correct_q(GkpQubit(ShiftPair(u1, np.zeros(n))), ShiftPair(u2, np.zeros(n)))
    ok = outcome.truth.success
    idx = np.clip(np.searchsorted(steane_bin_edges(), outcome.q_cor, side="right") - 1, 0, STEANE_BINS - 1)
    return {
        "errors": int(np.count_nonzero(~ok)),
        "bin_total": np.bincount(idx, minlength=STEANE_BINS).astype(np.int64),
        "bin_success": np.bincount(idx, weights=ok, minlength=STEANE_BINS).astype(np.int64),
    }


def repetition_kernel(cell: Cell, n: int, rng: np.random.Generator) -> dict:
    shifts = rng.normal(0.0, cell.sigma, size=(n, 3))
    ml_err, avg_err = repetition_batch(shifts, cell.sigma, cell.k)
    return {
        "errors_ml": int(ml_err.sum()),
        "errors_average": int(avg_err.sum()),
        "only_ml": int(np.count_nonzero(ml_err & ~avg_err)),
        "only_average": int(np.count_nonzero(avg_err & ~ml_err)),
    }


def draw_data_qubits(cell: Cell, lat: ToricLattice, n: int, rng: np.random.Generator):
    """Edge flips and conditional flip rates after one Steane round per data qubit."""
    w = rng.normal(0.0, cell.sigma, size=(n, lat.n_edges))
    if cell.sigma2 > 0:
        w += rng.normal(0.0, cell.sigma2, size=(n, lat.n_edges))
    q_cor, teeth = wrap_to_fundamental(w)
    flips = (teeth & 1).astype(bool)
    rates = conditional_error(q_cor, RatePair(cell.sigma, cell.sigma2, cell.k))
    return flips, rates


def toric_kernel(cell: Cell, n: int, rng: np.random.Generator) -> dict:
    lat = ToricLattice(cell.L)
    flips, rates = draw_data_qubits(cell, lat, n, rng)
    syndromes = syndrome_bits(lat, flips)
    failed: dict[str, np.ndarray] = {}
    weighted = None
    for dec in cell.decoders:
        if dec == "uniform":
            corr = UniformDecoder(lat).decode_batch(syndromes)
        elif dec in ("weighted", "mld"):
            if weighted is None:
                weighted = weighted_decode_batch(lat, syndromes, edge_weights_from_rates(rates))
            if dec == "weighted":
                corr = weighted
            else:
                corr = np.stack(
                    [decode_mld_exact(lat, syndromes[i], rates[i], canonical=weighted[i]) for i in range(n)]
                ) if n else weighted
        else:
            raise ValueError(f"unknown decoder {dec!r}")
        h, v = logical_class_bits(lat, corr ^ flips)
        failed[dec] = h | v
    out: dict = {f"errors_{d}": int(f.sum()) for d, f in failed.items()}
    for a in cell.decoders:
        for b in cell.decoders:
            if a != b:
                out[f"only_{a}_vs_{b}"] = int(np.count_nonzero(failed[a] & ~failed[b]))
    return out


def toric_noisy_kernel(cell: Cell, n: int, rng: np.random.Generator) -> dict:
    """Confusion counts of the defect pre-correction for every threshold in the grid."""
    lat = ToricLattice(cell.L)
    flips, rates = draw_data_qubits(cell, lat, n, rng)
    true_def = syndrome_bits(lat, flips)
    sigma_t = float(np.sqrt(5.0) * cell.sigma2)
    if sigma_t > 0:
        q_t, teeth_t = wrap_to_fundamental(rng.normal(0.0, sigma_t, size=(n, lat.n_plaquettes)))
        readout_flip = (teeth_t & 1).astype(bool)
        p_syn = conditional_error(q_t, RatePair(sigma_t, 0.0, cell.k))
    else:
        readout_flip = np.zeros_like(true_def)
        p_syn = np.zeros(true_def.shape)
    measured = true_def ^ readout_flip
    p_succ = measured_defect_success(defect_probability(rates[:, lat.plaquette_edges]), p_syn)
    grid = np.asarray(cell.p_c_grid, dtype=float)
    kept = measured[..., None] & (p_succ[..., None] > grid)
    real = true_def[..., None]
    return {
        "data_flips": int(flips.sum()),
        "data_qubits": int(flips.size),
        "readout_flips": int(readout_flip.sum()),
        "plaquettes": int(measured.size),
        "measured": int(measured.sum()),
        "measured_true": int((measured & true_def).sum()),
        "kept": kept.sum(axis=(0, 1)).astype(np.int64),
        "kept_true": (kept & real).sum(axis=(0, 1)).astype(np.int64),
        "cleared_false": (measured[..., None] & ~kept & ~real).sum(axis=(0, 1)).astype(np.int64),
    }


def double_measurement_kernel(cell: Cell, n: int, rng: np.random.Generator) -> dict:
    """Second q-measurement after a first outcome fixed at ``cell.param``."""
    rp = RatePair(cell.sigma, cell.sigma2, cell.k)
    q1 = float(cell.param)
    teeth = np.arange(-cell.k, cell.k + 1)
    logw = -((q1 + teeth * SQRT_PI) ** 2) / (2.0 * rp.sigma**2)
    prob = np.exp(logw - logw.max())
    prob /= prob.sum()
    n1 = teeth[np.searchsorted(np.cumsum(prob), rng.random(n), side="right").clip(0, teeth.size - 1)]
    mean_u0, _, var = posterior_params(q1, n1, rp)
    u0 = mean_u0 + np.sqrt(var) * rng.standard_normal(n)
    w2 = u0 + rng.normal(0.0, cell.sigma2, size=n) + rng.normal(0.0, cell.sigma2, size=n)
    q2, n2 = wrap_to_fundamental(w2)
    truly_even = n2 % 2 == 0
    out = {}
    for model in ("closed_form", "exact"):
        even, _, _ = double_measurement_decision(np.full(n, q1), q2, rp, model=model)
        out[f"errors_{model}"] = int(np.count_nonzero(even != truly_even))
    return out


KERNELS = {
    "steane_stats": steane_kernel,
    "repetition": repetition_kernel,
    "toric_ideal": toric_kernel,
    "mld_compare": toric_kernel,
    "toric_noisy": toric_noisy_kernel,
    "double_measurement": double_measurement_kernel,
}
