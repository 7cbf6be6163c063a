"""Synthetic portfolio instances with lognormal project economics.

Durations and total costs are drawn jointly lognormal. The default
parameters are stylized rather than calibrated: median duration about
three years, median total cost about twenty (in currency thousands),
correlation 0.5 so expensive projects tend to run longer. Every
default is a field on :class:`GenParams` and can be overridden.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .model import (BudgetLine, CapabilityOption, Family, PortfolioInstance,
                    Project)

_COV_OFF = 0.5 * math.sqrt(0.3 * 0.8)
DEFAULT_LOG_MEAN = (1.1, 3.0)
DEFAULT_LOG_COV = ((0.3, _COV_OFF), (_COV_OFF, 0.8))
VALUE_DECAY = 0.95


@dataclasses.dataclass(frozen=True)
class LinearKnapsack:
    """One single-project option per family; no project sharing."""


@dataclasses.dataclass(frozen=True)
class Sukp:
    """Multi-option families with cross-family project sharing."""

    share_prob: float = 0.3
    options_per_family: tuple[int, int] = (1, 3)


@dataclasses.dataclass(frozen=True)
class GenParams:
    n_projects: int
    n_start_years: int = 16
    # None sizes the budget span to the placements actually possible;
    # a fixed range would starve the per-year budget when windows shrink.
    horizon: tuple[int, int] | None = None
    log_mean: tuple[float, float] = DEFAULT_LOG_MEAN
    log_cov: tuple[tuple[float, float], tuple[float, float]] = DEFAULT_LOG_COV
    budget_fraction: float = 0.5
    seed: int = 0
    structure: LinearKnapsack | Sukp = LinearKnapsack()
    cost_shape: str = "triangular"


def _cholesky(params: GenParams) -> np.ndarray:
    cov = np.asarray(params.log_cov, dtype=float)
    if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
        raise ValueError("log_cov must be a symmetric 2x2 matrix")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("log_cov is not positive definite") from None


def sample_duration_cost(params: GenParams, n: int,
                         rng: np.random.Generator | None = None) -> np.ndarray:
    """Raw (duration years, total cost) draws, shape (n, 2), unrounded.

    Exposed separately so distribution moments can be checked without
    the integer rounding the instance builder applies.
    """
    chol = _cholesky(params)
    if rng is None:
        rng = np.random.default_rng(params.seed)
    z = rng.standard_normal((n, 2))
    return np.exp(np.asarray(params.log_mean) + z @ chol.T)


def spread_cost(total: int, years: int, shape: str = "triangular") -> tuple[int, ...]:
    """Split a positive integer total over at most ``years`` yearly amounts.

    The profile sums to ``total`` exactly and both end years are
    nonzero, so writing and re-reading the instance cannot shorten it.
    """
    if total < 1:
        raise ValueError("total must be positive")
    if shape not in ("triangular", "uniform"):
        raise ValueError(f"unknown cost shape {shape!r}")
    years = max(1, min(years, total))
    if shape == "uniform":
        weights = [1.0] * years
    else:
        weights = [float(min(k + 1, years - k)) for k in range(years)]
    scale = sum(weights)
    quota = [total * w / scale for w in weights]
    out = [int(q) for q in quota]
    # Leftover units go to the largest fractional remainders, lowest
    # index first on ties, so the split is exact and deterministic.
    order = sorted(range(years), key=lambda k: (out[k] - quota[k], k))
    for k in order[:total - sum(out)]:
        out[k] += 1
    for edge in (0, years - 1):
        if out[edge] == 0:
            donor = max(range(years), key=lambda k: (out[k], -k))
            out[edge] += 1
            out[donor] -= 1
    return tuple(out)


def _int_samples(params: GenParams, rng: np.random.Generator) -> list[tuple[int, int]]:
    raw = sample_duration_cost(params, params.n_projects, rng)
    out = []
    for dur, cost in raw:
        d = int(max(1, round(dur)))
        t = int(max(1, round(cost)))
        out.append((min(d, t), t))
    return out


def _value_schedule(rng: np.random.Generator, first_effective: int,
                    n_years: int) -> dict[int, float]:
    # Later effectiveness is worth less, so schedules reward early starts.
    base = rng.uniform(0.1, 1.0)
    return {first_effective + k: base * VALUE_DECAY ** k for k in range(n_years)}


def _project(key: str, first_year: int, n_starts: int, duration: int,
             total: int, shape: str) -> Project:
    profile = spread_cost(total, duration, shape)
    return Project(key, key, key, False, False, first_year, first_year,
                   first_year + n_starts - 1, profile)


def generate_instance(params: GenParams) -> PortfolioInstance:
    """Build a valid instance; identical params give identical output."""
    if params.n_start_years < 1:
        raise ValueError("n_start_years must be at least 1")
    if params.horizon is not None and params.horizon[0] > params.horizon[1]:
        raise ValueError("horizon range is reversed")
    rng = np.random.default_rng(params.seed)
    first_year = params.horizon[0] if params.horizon else 1
    samples = _int_samples(params, rng)
    projects = [_project(f"P{i + 1}", first_year, params.n_start_years,
                         d, t, params.cost_shape)
                for i, (d, t) in enumerate(samples)]

    families: list[Family] = []
    options: list[CapabilityOption] = []
    if isinstance(params.structure, LinearKnapsack):
        for i, p in enumerate(projects):
            fam = f"F{i + 1}"
            d = len(p.cost_profile)
            options.append(CapabilityOption(f"{fam}.0", fam, frozenset(), {1: 0.0}))
            options.append(CapabilityOption(
                f"{fam}.1", fam, frozenset({p.variant_key}),
                _value_schedule(rng, first_year + d, params.n_start_years)))
            families.append(Family(fam, frozenset({f"{fam}.0", f"{fam}.1"})))
    elif params.n_projects > 0:
        families, options = _sukp_structure(params, rng, projects)

    budget = _budget_lines(params, projects)
    return PortfolioInstance(tuple(families), tuple(options), tuple(projects),
                             budget, label=f"gen-{params.seed}")


def _sukp_structure(params: GenParams, rng: np.random.Generator,
                    projects: list[Project]):
    lo, hi = params.structure.options_per_family
    n_fam = max(1, round(params.n_projects / 3))
    pools: list[list[Project]] = [[] for _ in range(n_fam)]
    for i, p in enumerate(projects):
        pools[i % n_fam].append(p)

    first_year = params.horizon[0] if params.horizon else 1
    by_key = {p.variant_key: p for p in projects}
    all_keys = [p.variant_key for p in projects]
    families, options = [], []
    for fi, pool in enumerate(pools):
        fam = f"F{fi + 1}"
        keys = [f"{fam}.0"]
        options.append(CapabilityOption(keys[0], fam, frozenset(), {1: 0.0}))
        for oi in range(int(rng.integers(lo, hi + 1))):
            take = int(rng.integers(1, min(2, len(pool)) + 1))
            idx = sorted(rng.choice(len(pool), size=take, replace=False).tolist())
            refs = {pool[k].variant_key for k in idx}
            if rng.random() < params.structure.share_prob:
                refs.add(all_keys[int(rng.integers(len(all_keys)))])
            key = f"{fam}.{oi + 1}"
            eff = max(first_year + len(by_key[r].cost_profile) for r in refs)
            options.append(CapabilityOption(
                key, fam, frozenset(refs),
                _value_schedule(rng, eff, params.n_start_years)))
            keys.append(key)
        families.append(Family(fam, frozenset(keys)))

    # Round-robin assignment can still leave a project unreferenced;
    # the model drops such orphans, which would break the project count.
    referenced = {r for o in options for r in o.project_refs}
    spare = [o for o in options if o.project_refs]
    for i, p in enumerate(projects):
        if p.variant_key not in referenced:
            o = spare[i % len(spare)]
            options[options.index(o)] = o = CapabilityOption(
                o.option_key, o.family_key,
                o.project_refs | {p.variant_key}, o.value_schedule)
            spare[i % len(spare)] = o
    return families, options


def _budget_lines(params: GenParams, projects: list[Project]) -> tuple[BudgetLine, ...]:
    first, last = params.horizon if params.horizon else (1, 1)
    demand = 0
    for p in projects:
        demand += sum(p.cost_profile)
        last = max(last, p.latest_start + len(p.cost_profile) - 1)
    n_years = last - first + 1
    per_year = int(round(params.budget_fraction * demand / n_years))
    # Floors are disarmed: the experiments here are pure ceilings.
    return tuple(BudgetLine(y, per_year, per_year, 0)
                 for y in range(first, last + 1))
