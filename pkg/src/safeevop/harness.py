"""Batch experiment runner: drives sessions against catalog plants and audits them.

A run wires an EVOP session to a simulated plant: every suggestion is
evaluated with noise drawn from the run's seeded generator, fed back as a
measurement, and logged as one trajectory row carrying both the noisy values
the optimizer saw and the true values only the audit layer may see. A
violation is counted if and only if a *true* constraint value is positive;
noisy measurements never trigger counts.

Exports are deterministic byte-for-byte for a fixed spec: floats are
serialized with ``repr`` (shortest round-trip form), and replicate r always
uses seed ``base_seed + r``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from statistics import median

import numpy as np

from .engine import EvopConfig, EvopSession, Measurement
from .errors import SafeEvopError
from .plants import Plant, evaluate, get_plant, grid_oracle

ORACLE_RESOLUTION = 1e-3


@dataclass(frozen=True)
class RunSpec:
    """One batch-run request: plant, session settings, seeding."""

    plant: str
    delta_e: float = 0.05
    anneal: bool = False
    backoff_enabled: bool = True
    auto_shrink: bool = False
    max_cycles: int = 40
    seed: int = 0
    replicates: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise SafeEvopError("replicates must be at least 1")
        if self.max_cycles < 1:
            raise SafeEvopError("max_cycles must be at least 1")


@dataclass(frozen=True)
class TrajectoryRow:
    """Audit log for a single experiment."""

    cycle: int
    index: int
    purpose: str
    u_raw: np.ndarray
    u_scaled: np.ndarray
    phi_hat: float
    g_hat: np.ndarray
    phi_true: float
    g_true: np.ndarray
    violations: np.ndarray  # per constraint, true g > 0 exactly
    is_reference: bool
    delta_e: float


@dataclass(frozen=True)
class RunSummary:
    """Totals and convergence data for one trajectory."""

    total_experiments: int
    total_violations: int
    final_reference: np.ndarray
    final_cost_gap: float
    best_cost_series: tuple[float, ...]
    phi_opt: float


@lru_cache(maxsize=None)
def _cached_optimum(plant_name: str, resolution: float) -> float:
    return grid_oracle(get_plant(plant_name), resolution).phi_opt


def _plant_optimum(plant: Plant, resolution: float) -> float:
    if plant.name in ("quad-linear", "quad-circle", "two-constraint"):
        return _cached_optimum(plant.name, resolution)
    return grid_oracle(plant, resolution).phi_opt


def build_config(plant: Plant, spec: RunSpec) -> EvopConfig:
    return EvopConfig(
        space=plant.space,
        initial_reference=plant.start,
        noise=plant.noise,
        delta_e=spec.delta_e,
        anneal=spec.anneal,
        backoff_enabled=spec.backoff_enabled,
        auto_shrink=spec.auto_shrink,
        max_cycles=spec.max_cycles,
    )


def run_trajectory(
    spec: RunSpec, seed: int | None = None, plant: Plant | None = None
) -> tuple[list[TrajectoryRow], RunSummary]:
    """Run one seeded trajectory of ``spec`` to completion.

    ``seed`` overrides ``spec.seed`` (used by the replicate fan-out);
    ``plant`` substitutes a pre-built plant for the catalog lookup.
    """
    plant = plant if plant is not None else get_plant(spec.plant)
    session = EvopSession(build_config(plant, spec))
    rng = np.random.default_rng(spec.seed if seed is None else seed)

    rows: list[TrajectoryRow] = []
    true_by_id: dict[str, float] = {}
    reference_costs: list[float] = []
    index = 0
    while True:
        state = session.state.value
        if state == "finished":
            break
        if state == "cycle_ready":
            session.advance_cycle()
            ref_id = session.reference_measurement_id
            reference_costs.append(true_by_id[ref_id])
            continue
        sug = session.next_suggestion()
        reading = evaluate(plant, sug.u_raw, rng, noise_scale=session.noise_scale)
        rows.append(
            TrajectoryRow(
                cycle=session.k,
                index=index,
                purpose=sug.purpose,
                u_raw=reading.u,
                u_scaled=sug.u_scaled.coords,
                phi_hat=reading.phi_hat,
                g_hat=reading.g_hat,
                phi_true=reading.phi_true,
                g_true=reading.g_true,
                violations=reading.g_true > 0.0,
                is_reference=sug.is_reference,
                delta_e=session.delta_e,
            )
        )
        true_by_id[sug.id] = reading.phi_true
        session.ingest_measurement(
            Measurement(suggestion_id=sug.id, phi_hat=reading.phi_hat, g_hat=reading.g_hat)
        )
        index += 1

    phi_opt = _plant_optimum(plant, ORACLE_RESOLUTION)
    best_series = tuple(np.minimum.accumulate(reference_costs)) if reference_costs else ()
    final_ref = session.reference_raw
    summary = RunSummary(
        total_experiments=len(rows),
        total_violations=int(sum(int(r.violations.sum()) for r in rows)),
        final_reference=final_ref,
        final_cost_gap=float(reference_costs[-1] - phi_opt) if reference_costs else float("nan"),
        best_cost_series=best_series,
        phi_opt=phi_opt,
    )
    return rows, summary


def run_replicates(spec: RunSpec) -> list[tuple[int, list[TrajectoryRow], RunSummary]]:
    """Run ``spec.replicates`` trajectories with seeds ``spec.seed + r``."""
    out = []
    plant = get_plant(spec.plant)
    for r in range(spec.replicates):
        seed = spec.seed + r
        rows, summary = run_trajectory(spec, seed=seed, plant=plant)
        out.append((seed, rows, summary))
    return out


# ---------------------------------------------------------------------------
# Aggregation


def aggregate(specs: list[RunSpec]) -> list[dict]:
    """Per-run rows, per-spec medians, and (for exactly two specs) paired gaps.

    Each run contributes ``{"kind": "run", ...}`` with its violation count,
    final cost gap and experiment count; each spec contributes a
    ``{"kind": "median", ...}`` row. When exactly two specs with the same
    replicate count are given (e.g. annealed vs fixed), per-seed
    ``{"kind": "pair", "gap_diff": first - second}`` rows are appended.
    """
    if not specs:
        raise SafeEvopError("aggregate needs at least one spec")
    table: list[dict] = []
    per_spec_results = []
    for si, spec in enumerate(specs):
        results = run_replicates(spec)
        per_spec_results.append(results)
        for seed, rows, summary in results:
            table.append(
                {
                    "kind": "run",
                    "spec": si,
                    "plant": spec.plant,
                    "seed": seed,
                    "anneal": spec.anneal,
                    "backoff": spec.backoff_enabled,
                    "violations": summary.total_violations,
                    "final_gap": summary.final_cost_gap,
                    "experiments": summary.total_experiments,
                }
            )
        table.append(
            {
                "kind": "median",
                "spec": si,
                "plant": spec.plant,
                "seed": None,
                "anneal": spec.anneal,
                "backoff": spec.backoff_enabled,
                "violations": median(r[2].total_violations for r in results),
                "final_gap": median(r[2].final_cost_gap for r in results),
                "experiments": median(r[2].total_experiments for r in results),
            }
        )
    if len(specs) == 2 and specs[0].replicates == specs[1].replicates:
        for (seed_a, _, sa), (seed_b, _, sb) in zip(*per_spec_results):
            if seed_a == seed_b:
                table.append(
                    {
                        "kind": "pair",
                        "seed": seed_a,
                        "gap_diff": sa.final_cost_gap - sb.final_cost_gap,
                    }
                )
    return table


# ---------------------------------------------------------------------------
# Exports


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_header(n_u: int, n_g: int) -> list[str]:
    cols = ["cycle", "index", "purpose"]
    cols += [f"u_raw_{i}" for i in range(n_u)]
    cols += [f"u_scaled_{i}" for i in range(n_u)]
    cols += ["phi_hat"]
    cols += [f"g_hat_{j}" for j in range(n_g)]
    cols += ["phi_true"]
    cols += [f"g_true_{j}" for j in range(n_g)]
    cols += [f"violations_{j}" for j in range(n_g)]
    cols += ["is_reference", "delta_e"]
    return cols


def row_cells(row: TrajectoryRow) -> list[str]:
    cells = [str(row.cycle), str(row.index), row.purpose]
    cells += [_fmt(v) for v in row.u_raw]
    cells += [_fmt(v) for v in row.u_scaled]
    cells += [_fmt(row.phi_hat)]
    cells += [_fmt(v) for v in row.g_hat]
    cells += [_fmt(row.phi_true)]
    cells += [_fmt(v) for v in row.g_true]
    cells += [_fmt(bool(v)) for v in row.violations]
    cells += [_fmt(row.is_reference), _fmt(row.delta_e)]
    return cells


def write_csv(rows: list[TrajectoryRow], path) -> None:
    if not rows:
        raise SafeEvopError("no rows to export")
    n_u, n_g = rows[0].u_raw.size, rows[0].g_true.size
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(csv_header(n_u, n_g))
        for row in rows:
            writer.writerow(row_cells(row))


def rows_as_dicts(rows: list[TrajectoryRow]) -> list[dict]:
    out = []
    for r in rows:
        out.append(
            {
                "cycle": r.cycle,
                "index": r.index,
                "purpose": r.purpose,
                "u_raw": [float(v) for v in r.u_raw],
                "u_scaled": [float(v) for v in r.u_scaled],
                "phi_hat": r.phi_hat,
                "g_hat": [float(v) for v in r.g_hat],
                "phi_true": r.phi_true,
                "g_true": [float(v) for v in r.g_true],
                "violations": [bool(v) for v in r.violations],
                "is_reference": r.is_reference,
                "delta_e": r.delta_e,
            }
        )
    return out


def write_json(rows: list[TrajectoryRow], summary: RunSummary, path) -> None:
    payload = {
        "rows": rows_as_dicts(rows),
        "summary": {
            "total_experiments": summary.total_experiments,
            "total_violations": summary.total_violations,
            "final_reference": [float(v) for v in summary.final_reference],
            "final_cost_gap": summary.final_cost_gap,
            "best_cost_series": list(summary.best_cost_series),
            "phi_opt": summary.phi_opt,
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def export_run(spec: RunSpec, out_dir) -> list[Path]:
    """Run all replicates of ``spec`` and write CSV/JSON pairs plus a summary table."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    results = run_replicates(spec)
    for seed, rows, summary in results:
        base = out_dir / f"trajectory_seed{seed}"
        write_csv(rows, base.with_suffix(".csv"))
        write_json(rows, summary, base.with_suffix(".json"))
        written += [base.with_suffix(".csv"), base.with_suffix(".json")]
    summary_rows = [
        {
            "seed": seed,
            "experiments": s.total_experiments,
            "violations": s.total_violations,
            "final_gap": s.final_cost_gap,
        }
        for seed, _, s in results
    ]
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary_rows, indent=2) + "\n")
    written.append(summary_path)
    return written
