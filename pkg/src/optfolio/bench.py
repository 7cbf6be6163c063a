"""Solver sweeps over generated instance pools.

Runs the integer solver (exact or gap-bounded) and the rounded
continuous relaxation across pool sizes and seeds, recording wall time
and portfolio value per run. Timing brackets the solve call only;
generation and model building happen outside the clock.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import statistics
import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

from .datagen import GenParams, Sukp, generate_instance
from .expansion import expand
from .ilp import build_model
from .solver import (
    SolveOptions,
    relative_gap,
    round_continuous,
    solve,
    solve_lp_relaxation,
)

__all__ = ["BenchRecord", "Mode", "parse_mode", "run_sweep", "emit_report", "main"]


@dataclass(frozen=True)
class Mode:
    """A solve mode: exact integer, gap-bounded integer, or rounded LP."""

    kind: str
    tolerance: float | None = None

    @property
    def label(self) -> str:
        if self.kind == "gap":
            return f"gap:{self.tolerance:g}"
        return self.kind


def parse_mode(text: str) -> Mode:
    """Parse a mode string: "exact", "gap:<tol>" or "rounded"."""
    text = text.strip()
    if text == "exact":
        return Mode("exact")
    if text == "rounded":
        return Mode("rounded")
    if text.startswith("gap:"):
        try:
            tol = float(text[4:])
        except ValueError:
            raise ValueError(f"bad gap tolerance in mode {text!r}") from None
        if not math.isfinite(tol) or tol < 0:
            raise ValueError(f"gap tolerance must be a finite non-negative number, got {text!r}")
        return Mode("gap", tol)
    raise ValueError(f"unknown mode {text!r}; expected exact, gap:<tol> or rounded")


@dataclass(frozen=True)
class BenchRecord:
    """One (pool size, mode, seed) measurement."""

    n_projects: int
    mode: str
    seed: int
    wall_time: float
    value: float
    gap: float
    feasible: bool
    status: str


def _run_one(size: int, mode: Mode, seed: int, base: GenParams) -> BenchRecord:
    params = dataclasses.replace(base, n_projects=size, seed=seed)
    instance = generate_instance(params)
    model = build_model(instance, expand(instance))

    if mode.kind == "rounded":
        t0 = time.perf_counter()
        relax = solve_lp_relaxation(model)
        _, value, feasible, _ = round_continuous(model, relax.x)
        dt = time.perf_counter() - t0
        gap = relative_gap(value, relax.objective) if feasible else math.inf
        return BenchRecord(size, mode.label, seed, dt, value, gap, feasible, relax.status)

    opts = SolveOptions() if mode.kind == "exact" else SolveOptions(gap_tolerance=mode.tolerance)
    t0 = time.perf_counter()
    res = solve(model, opts)
    dt = time.perf_counter() - t0
    value = res.primal_bound if res.incumbent is not None else math.nan
    return BenchRecord(size, mode.label, seed, dt, value, res.relative_gap,
                       res.incumbent is not None, res.status)


def run_sweep(sizes: Iterable[int], modes: Iterable[str | Mode],
              seeds: int | Iterable[int],
              base: GenParams | None = None) -> list[BenchRecord]:
    """One record per (size, mode, seed); failures become status "error"."""
    if base is None:
        base = GenParams(n_projects=1)
    mode_list = [m if isinstance(m, Mode) else parse_mode(m) for m in modes]
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    records = []
    for size in sizes:
        for mode in mode_list:
            for seed in seed_list:
                try:
                    records.append(_run_one(size, mode, seed, base))
                except Exception:
                    records.append(BenchRecord(size, mode.label, seed, math.nan,
                                               math.nan, math.nan, False, "error"))
    return records


_FIELDS = [f.name for f in dataclasses.fields(BenchRecord)]


def emit_report(records: Sequence[BenchRecord], path: str | Path) -> tuple[Path, Path]:
    """Write the records as CSV plus a plain-text median summary."""
    if not records:
        raise ValueError("no records to report")
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_FIELDS)
        for rec in records:
            writer.writerow([getattr(rec, f) for f in _FIELDS])

    groups: dict[tuple[int, str], list[BenchRecord]] = {}
    for rec in records:
        groups.setdefault((rec.n_projects, rec.mode), []).append(rec)
    lines = [f"{'size':>6} {'mode':>10} {'runs':>5} {'med_time_s':>11} {'med_value':>10}"]
    for (size, mode), recs in sorted(groups.items()):
        med_t = statistics.median(r.wall_time for r in recs)
        med_v = statistics.median(r.value for r in recs)
        lines.append(f"{size:>6} {mode:>10} {len(recs):>5} {med_t:>11.3f} {med_v:>10.4f}")
    bad = sum(1 for r in records if not r.feasible)
    if bad:
        lines.append(f"non-feasible runs: {bad}")
    summary = path.with_suffix(".txt")
    summary.write_text("\n".join(lines) + "\n")
    return path, summary


def _csv_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bench", description="Sweep solver time and value over pool sizes.")
    parser.add_argument("--sizes", type=_csv_ints, default=[10, 20, 40],
                        help="comma-separated pool sizes (default 10,20,40)")
    parser.add_argument("--modes", default="exact,gap:0.05,rounded",
                        help="comma-separated modes: exact, gap:<tol>, rounded")
    parser.add_argument("--seeds", type=int, default=5,
                        help="number of seeds per (size, mode) cell")
    parser.add_argument("--out", default="results.csv", help="CSV output path")
    parser.add_argument("--structure", choices=["linear", "sukp"], default="linear",
                        help="instance structure (default linear knapsack)")
    parser.add_argument("--n-start-years", type=int, default=None,
                        help="override start-window width")
    parser.add_argument("--budget-fraction", type=float, default=None,
                        help="override yearly budget fraction")
    args = parser.parse_args(argv)

    modes = [parse_mode(tok) for tok in args.modes.split(",") if tok.strip()]
    base = GenParams(n_projects=1)
    if args.structure == "sukp":
        base = dataclasses.replace(base, structure=Sukp())
    if args.n_start_years is not None:
        base = dataclasses.replace(base, n_start_years=args.n_start_years)
    if args.budget_fraction is not None:
        base = dataclasses.replace(base, budget_fraction=args.budget_fraction)

    records = run_sweep(args.sizes, modes, args.seeds, base)
    if not records:
        print("nothing to run: empty sizes or modes")
        return 1
    _, summary = emit_report(records, args.out)
    print(summary.read_text(), end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
