"""Parameter sweeps: config validation, deterministic parallel execution, summaries.

Work is split into fixed-size blocks per grid cell. Block ``b`` of a cell
always draws from the same counter-based stream, so the reduction (summed in
block order) does not depend on how many worker processes ran the blocks.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import integrate

from gkpsim import __version__
from gkpsim.analytics import RatePair, average_error, conditional_error, conditional_success, outcome_density
from gkpsim.core import HALF_SQRT_PI
from gkpsim.decoders import MLD_MAX_L
from gkpsim.experiments import KERNELS, Cell, steane_bin_edges
from gkpsim.rng import block_stream, cell_id
from gkpsim.stats import Crossing, find_crossing, mcnemar_pvalue, wilson_interval

SCHEMA_VERSION = 1
EXPERIMENTS = tuple(KERNELS)
DECODERS = ("uniform", "weighted", "mld")
BASE_COLUMNS = (
    "schema_version", "experiment", "sigma", "sigma2", "L", "decoder", "param",
    "trials", "n", "count", "rate", "ci_low", "ci_high",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    sigma_grid: tuple[float, ...]
    trials: int
    master_seed: int = 0
    L_grid: tuple[int, ...] = ()
    sigma2: float | None = None
    sigma2_ratio: float | None = None
    k: int = 1
    p_c_grid: tuple[float, ...] | None = None
    q1_grid: tuple[float, ...] | None = None
    decoder: tuple[str, ...] = ("uniform",)
    block_size: int = 4096

    def __post_init__(self) -> None:
        def fail(name: str, msg: str) -> None:
            raise ConfigError(f"{name}: {msg}")

        if self.experiment not in EXPERIMENTS:
            fail("experiment", f"must be one of {', '.join(EXPERIMENTS)}; got {self.experiment!r}")
        if not self.sigma_grid:
            fail("sigma_grid", "must be non-empty")
        if any(not (isinstance(s, (int, float)) and s > 0 and math.isfinite(s)) for s in self.sigma_grid):
            fail("sigma_grid", "every sigma must be a positive finite number")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            fail("trials", f"must be an integer >= 1; got {self.trials!r}")
        if not (isinstance(self.master_seed, int) and 0 <= self.master_seed < 2**64):
            fail("master_seed", "must be an integer in [0, 2**64)")
        if not (isinstance(self.k, int) and 1 <= self.k <= 8):
            fail("k", "must be an integer in [1, 8]")
        if not (isinstance(self.block_size, int) and self.block_size >= 1):
            fail("block_size", "must be an integer >= 1")
        if self.sigma2 is not None and self.sigma2_ratio is not None:
            fail("sigma2", "give either sigma2 or sigma2_ratio, not both")
        for name in ("sigma2", "sigma2_ratio"):
            val = getattr(self, name)
            if val is not None and not (isinstance(val, (int, float)) and val >= 0 and math.isfinite(val)):
                fail(name, "must be a non-negative finite number")
        bad = [d for d in self.decoder if d not in DECODERS]
        if bad or not self.decoder:
            fail("decoder", f"entries must be among {', '.join(DECODERS)}; got {list(self.decoder)!r}")
        if self.experiment in ("toric_ideal", "toric_noisy", "mld_compare"):
            if not self.L_grid:
                fail("L_grid", f"must be non-empty for {self.experiment}")
            if any(not (isinstance(L, int) and L >= 2) for L in self.L_grid):
                fail("L_grid", "lattice sizes must be integers >= 2")
        if self.experiment == "mld_compare" or (self.experiment == "toric_ideal" and "mld" in self.decoder):
            if any(L > MLD_MAX_L for L in self.L_grid):
                fail("L_grid", f"exact maximum-likelihood decoding needs L <= {MLD_MAX_L}")
        if self.experiment == "toric_noisy":
            if not self.p_c_grid:
                fail("p_c_grid", "must be non-empty for toric_noisy")
            if any(not 0 <= p <= 1 for p in self.p_c_grid):
                fail("p_c_grid", "thresholds must lie in [0, 1]")
        if self.experiment == "double_measurement":
            if all(self.sigma2_for(s) == 0 for s in self.sigma_grid):
                fail("sigma2", "double_measurement needs a noisy ancilla")
            if self.q1_grid is not None and any(not 0 <= q <= HALF_SQRT_PI for q in self.q1_grid):
                fail("q1_grid", "first outcomes must lie in [0, sqrt(pi)/2]")

    def sigma2_for(self, sigma: float) -> float:
        if self.sigma2 is not None:
            return float(self.sigma2)
        if self.sigma2_ratio is not None:
            return float(self.sigma2_ratio) * sigma
        return 0.0

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown field")
        missing = [f for f in ("experiment", "sigma_grid", "trials") if f not in data]
        if missing:
            raise ConfigError(f"{missing[0]}: required field missing")
        kw = dict(data)
        for name in ("sigma_grid", "L_grid", "p_c_grid", "q1_grid"):
            if kw.get(name) is not None:
                if not isinstance(kw[name], (list, tuple)):
                    raise ConfigError(f"{name}: must be a list")
                kw[name] = tuple(kw[name])
        if "decoder" in kw:
            dec = kw["decoder"]
            kw["decoder"] = (dec,) if isinstance(dec, str) else tuple(dec)
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(f"config: {exc}") from exc

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        for key, val in out.items():
            if isinstance(val, tuple):
                out[key] = list(val)
        return out


def default_q1_grid(points: int = 41) -> tuple[float, ...]:
    return tuple(float(x) for x in np.linspace(0.0, HALF_SQRT_PI, points, endpoint=False))


def build_cells(cfg: ExperimentConfig) -> list[Cell]:
    cells = []
    Ls = cfg.L_grid if cfg.L_grid else (0,)
    # The comparison experiment always pairs weighted matching with exact decoding.
    decoders = ("weighted", "mld") if cfg.experiment == "mld_compare" else cfg.decoder
    for sigma in cfg.sigma_grid:
        s2 = cfg.sigma2_for(sigma)
        if cfg.experiment == "double_measurement":
            for q1 in cfg.q1_grid if cfg.q1_grid is not None else default_q1_grid():
                cells.append(Cell(cfg.experiment, float(sigma), s2, 0, float(q1), (), cfg.k))
        elif cfg.experiment in ("toric_ideal", "mld_compare"):
            for L in Ls:
                cells.append(Cell(cfg.experiment, float(sigma), s2, int(L), None, tuple(decoders), cfg.k))
        elif cfg.experiment == "toric_noisy":
            for L in Ls:
                cells.append(Cell(cfg.experiment, float(sigma), s2, int(L), None, (), cfg.k, tuple(cfg.p_c_grid)))
        else:
            cells.append(Cell(cfg.experiment, float(sigma), s2, 0, None, (), cfg.k))
    return cells


def _cell_key(cell: Cell) -> int:
    # Decoders are excluded so every decoder of a cell sees the same draws.
    return cell_id(cell.experiment, cell.sigma, cell.sigma2, cell.L, cell.param, cell.k)


def _run_block(args: tuple[Cell, int, int, int]) -> dict:
    cell, seed, block, n = args
    return KERNELS[cell.experiment](cell, n, block_stream(seed, _cell_key(cell), block))


def _work_units(cfg: ExperimentConfig, cells: Sequence[Cell]) -> list[tuple[Cell, int, int, int]]:
    units = []
    for cell in cells:
        n_blocks = -(-cfg.trials // cfg.block_size)
        for b in range(n_blocks):
            n = min(cfg.block_size, cfg.trials - b * cfg.block_size)
            units.append((cell, cfg.master_seed, b, n))
    return units


def _accumulate(total: dict, part: dict) -> None:
    for key, val in part.items():
        total[key] = total[key] + val if key in total else val


def default_threads() -> int:
    env = os.environ.get("GKP_MC_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"GKP_MC_THREADS: not an integer ({env!r})") from exc
        if n >= 1:
            return n
        raise ConfigError("GKP_MC_THREADS: must be >= 1")
    return os.cpu_count() or 1


@dataclass
class SweepSummary:
    config: ExperimentConfig
    rows: list[dict[str, Any]]
    cells: list[tuple[Cell, dict]] = field(repr=False)
    extras: dict[str, Any] = field(default_factory=dict)

    def select(self, **match) -> list[dict[str, Any]]:
        return [r for r in self.rows if all(r.get(k) == v for k, v in match.items())]

    def to_csv(self) -> str:
        columns = list(BASE_COLUMNS)
        for row in self.rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", restval="")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "software": "gkpsim",
            "version": __version__,
            "schema_version": SCHEMA_VERSION,
            "master_seed": self.config.master_seed,
            "config": self.config.to_dict(),
            "rows": self.rows,
            **self.extras,
        }
        return json.dumps(doc, indent=2, sort_keys=False, default=_json_default) + "\n"

    def write(self, csv_path: str | None = None, json_path: str | None = None) -> None:
        if csv_path:
            with open(csv_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(self.to_csv())
        if json_path:
            with open(json_path, "w", encoding="utf-8") as fh:
                fh.write(self.to_json())


def _fmt(v: Any) -> Any:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return v


def _json_default(o: Any) -> Any:
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def run_sweep(cfg: ExperimentConfig, threads: int | None = None) -> SweepSummary:
    cells = build_cells(cfg)
    units = _work_units(cfg, cells)
    threads = default_threads() if threads is None else threads
    if threads < 1:
        raise ConfigError("threads: must be >= 1")
    if threads == 1 or len(units) == 1:
        parts = [_run_block(u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_block, units, chunksize=max(1, len(units) // (4 * threads))))
    totals: dict[Cell, dict] = {c: {} for c in cells}
    for unit, part in zip(units, parts):
        _accumulate(totals[unit[0]], part)
    cell_totals = [(c, totals[c]) for c in cells]
    rows, extras = _summarize(cfg, cell_totals)
    return SweepSummary(cfg, rows, cell_totals, extras)


def _rate_columns(count: int, n: int) -> dict[str, Any]:
    if n == 0:
        return {"n": 0, "count": 0, "rate": None, "ci_low": None, "ci_high": None}
    lo, hi = wilson_interval(count, n)
    return {"n": n, "count": count, "rate": count / n, "ci_low": lo, "ci_high": hi}


def _base_row(cfg: ExperimentConfig, cell: Cell, decoder: str = "", param: float | None = None) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": cell.experiment,
        "sigma": cell.sigma,
        "sigma2": cell.sigma2,
        "L": cell.L,
        "decoder": decoder,
        "param": param,
        "trials": cfg.trials,
    }


def _summarize(cfg: ExperimentConfig, cell_totals: list[tuple[Cell, dict]]) -> tuple[list[dict], dict]:
    rows: list[dict] = []
    extras: dict[str, Any] = {}
    exp = cfg.experiment
    if exp == "steane_stats":
        centers = 0.5 * (steane_bin_edges()[1:] + steane_bin_edges()[:-1])
        extras["bins"] = []
        for cell, t in cell_totals:
            rp = RatePair(cell.sigma, cell.sigma2, cell.k)
            row = _base_row(cfg, cell)
            row.update(_rate_columns(t["errors"], cfg.trials))
            row["analytic_rate"] = average_error(rp)
            rows.append(row)
            extras["bins"].append({
                "sigma": cell.sigma,
                "sigma2": cell.sigma2,
                "bin_edges": steane_bin_edges().tolist(),
                "bin_total": t["bin_total"].tolist(),
                "bin_success": t["bin_success"].tolist(),
                "analytic_success_at_center": [float(x) for x in conditional_success(centers, rp)],
            })
    elif exp == "repetition":
        for cell, t in cell_totals:
            p = mcnemar_pvalue(t["only_ml"], t["only_average"])
            for dec, key in (("ml", "errors_ml"), ("average", "errors_average")):
                row = _base_row(cfg, cell, dec)
                row.update(_rate_columns(t[key], cfg.trials))
                row.update({"only_ml": t["only_ml"], "only_average": t["only_average"], "mcnemar_p": p})
                rows.append(row)
    elif exp in ("toric_ideal", "mld_compare"):
        for cell, t in cell_totals:
            for dec in cell.decoders:
                row = _base_row(cfg, cell, dec)
                row.update(_rate_columns(t[f"errors_{dec}"], cfg.trials))
                rows.append(row)
            if len(cell.decoders) == 2:
                a, b = cell.decoders
                p = mcnemar_pvalue(t[f"only_{a}_vs_{b}"], t[f"only_{b}_vs_{a}"])
                rows[-2].update({"paired_only_self": t[f"only_{a}_vs_{b}"], "mcnemar_p": p})
                rows[-1].update({"paired_only_self": t[f"only_{b}_vs_{a}"], "mcnemar_p": p})
        if len(cfg.L_grid) >= 2 and len(cfg.sigma_grid) >= 2:
            summary = SweepSummary(cfg, rows, cell_totals)
            extras["crossing"] = {dec: asdict(detect_crossing(summary, dec)) for dec in cell_totals[0][0].decoders}
    elif exp == "toric_noisy":
        for cell, t in cell_totals:
            for i, p_c in enumerate(cell.p_c_grid):
                row = _base_row(cfg, cell, "", float(p_c))
                correct = int(t["kept_true"][i] + t["cleared_false"][i])
                row.update(_rate_columns(correct, t["measured"]))
                kept = int(t["kept"][i])
                row.update({
                    "kept": kept,
                    "kept_true": int(t["kept_true"][i]),
                    "purity": (int(t["kept_true"][i]) / kept) if kept else None,
                    "measured_true_fraction": t["measured_true"] / t["measured"] if t["measured"] else None,
                    "data_error_rate": t["data_flips"] / t["data_qubits"],
                    "readout_error_rate": t["readout_flips"] / t["plaquettes"],
                })
                rows.append(row)
    elif exp == "double_measurement":
        by_sigma: dict[tuple[float, float], list[dict]] = {}
        for cell, t in cell_totals:
            rp = RatePair(cell.sigma, cell.sigma2, cell.k)
            single = float(conditional_error(cell.param, rp))
            row = _base_row(cfg, cell, "closed_form", cell.param)
            row.update(_rate_columns(t["errors_closed_form"], cfg.trials))
            row.update({
                "single_error": single,
                "improvement": single - row["rate"],
                "exact_model_rate": t["errors_exact"] / cfg.trials,
                "exact_model_improvement": single - t["errors_exact"] / cfg.trials,
            })
            rows.append(row)
            by_sigma.setdefault((cell.sigma, cell.sigma2), []).append(row)
        extras["averaged_improvement"] = [
            {"sigma": s1, "sigma2": s2, **averaged_improvement(group, RatePair(s1, s2, cfg.k))}
            for (s1, s2), group in by_sigma.items()
        ]
    return rows, extras


def averaged_improvement(rows: list[dict], rp: RatePair) -> dict[str, float]:
    """Outcome-weighted gain when the second measurement is used only where it helps.

    Integrates ``P(q1) * max(improvement, 0)`` over ``|q1| < sqrt(pi)/2`` with
    the trapezoid rule on the simulated grid (mirrored by symmetry).
    """
    q = np.array([r["param"] for r in rows])
    order = np.argsort(q)
    q = q[order]
    dens = 2.0 * outcome_density(q, rp)
    result = {}
    for key, name in (("improvement", "closed_form"), ("exact_model_improvement", "exact")):
        gain = np.maximum(np.array([r[key] for r in rows])[order], 0.0)
        result[name] = float(integrate.trapezoid(dens * gain, q))
    return result


def detect_crossing(summary: SweepSummary, decoder: str | None = None) -> Crossing:
    """Crossing of the smallest- and largest-lattice curves for one decoder."""
    rows = [r for r in summary.rows if decoder is None or r["decoder"] == decoder]
    Ls = sorted({r["L"] for r in rows})
    sigmas = sorted({r["sigma"] for r in rows})
    if len(Ls) < 2 or len(sigmas) < 2:
        raise ValueError("crossing detection needs two lattice sizes and two sigma values")
    rate = {(r["sigma"], r["L"]): r["rate"] for r in rows}
    return find_crossing(sigmas, [rate[(s, Ls[0])] for s in sigmas], [rate[(s, Ls[-1])] for s in sigmas])
