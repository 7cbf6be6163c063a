"""Branch and bound over LP relaxations of the portfolio model.

Nodes are explored best-bound-first with depth-first plunging: after
branching, the child that agrees with the rounded LP value is solved
immediately from the parent basis, which keeps warm starts hot. The
other child goes on the heap carrying its parent bound.

Incumbents are never trusted from floating point alone. Constraint
data is integral by construction, so every candidate is re-checked in
exact integer arithmetic before it can become the new best. Objective
values are summed in model variable order, giving bit-identical
results for identical selections however they were found.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import simplex
from .ilp import GE, LE, IlpModel

log = logging.getLogger(__name__)

INT_TOL = 1e-6
PRUNE_TOL = 1e-9

OPTIMAL = "optimal"
GAP_REACHED = "gap_reached"
TIME_LIMIT = "time_limit"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class SolverError(Exception):
    pass


@dataclass(frozen=True)
class SolveOptions:
    """Knobs for :func:`solve`. Zero gap means prove optimality."""

    variable_category: str = "binary"      # "binary" | "continuous"
    gap_tolerance: float = 0.0
    time_limit: float | None = None        # seconds
    node_limit: int | None = None
    rounding_threshold: float = 0.5


@dataclass(frozen=True)
class SolveResult:
    status: str
    incumbent: dict[str, float] | None
    primal_bound: float
    dual_bound: float
    relative_gap: float
    nodes_explored: int
    wall_time: float
    violated_rows: tuple[str, ...] = ()


def relative_gap(primal: float, dual: float) -> float:
    """|zP - zD| / |zP|, with 0/0 -> 0 and z/0 -> inf."""
    if primal is None or primal == -np.inf:
        return float("inf")
    if primal == 0.0:
        return 0.0 if dual == 0.0 else float("inf")
    return abs(primal - dual) / abs(primal)


def portfolio_value(model: IlpModel, selection: dict[str, float]) -> float:
    """Objective of a selection, summed in model variable order."""
    total = 0.0
    for name, _ in model.variables:
        x = selection.get(name, 0.0)
        if x:
            total += model.objective[name] * x
    return total


class CompiledModel:
    """Matrix form of an IlpModel plus a reusable simplex instance."""

    def __init__(self, model: IlpModel):
        self.model = model
        self.names = [name for name, _ in model.variables]
        self.kinds = [kind for _, kind in model.variables]
        self.index = {name: i for i, name in enumerate(self.names)}
        n = len(self.names)
        rows_i, cols_i, data = [], [], []
        b = []
        relations = []
        for i, row in enumerate(model.constraints):
            for name, coef in row.terms.items():
                if name not in self.index:
                    raise SolverError(f"row {row.label!r} uses unknown variable {name!r}")
                if coef != 0.0:
                    rows_i.append(i)
                    cols_i.append(self.index[name])
                    data.append(coef)
            b.append(row.rhs)
            relations.append(row.relation)
        m = len(model.constraints)
        A = sp.coo_matrix((data, (rows_i, cols_i)), shape=(m, n)).tocsc()
        c = np.array([model.objective[name] for name in self.names])
        self.A = A
        self.c = c
        self.b = np.asarray(b, dtype=float)
        self.relations = relations
        self.engine = simplex.BoundedSimplex(c, A, relations, self.b)
        # Structure the primal heuristics lean on: each family row's
        # option columns, each option's supporting project columns, and
        # relation masks for a vectorized feasibility screen.
        self.family_rows: list[tuple[np.ndarray, bool]] = []
        self.option_projects: dict[int, np.ndarray] = {}
        for row in model.constraints:
            if row.label.startswith("family-"):
                cols = np.sort(np.fromiter(
                    (self.index[v] for v in row.terms), dtype=int))
                self.family_rows.append((cols, row.relation == "="))
            elif row.label.startswith("proj-opt-"):
                opts = [self.index[v] for v, cf in row.terms.items() if cf < 0]
                prjs = [self.index[v] for v, cf in row.terms.items() if cf > 0]
                if len(opts) == 1:
                    self.option_projects[opts[0]] = np.array(sorted(prjs), dtype=int)
        rel = np.array(relations) if relations else np.empty(0, dtype="<U2")
        self._le_rows = np.nonzero(rel == LE)[0]
        self._ge_rows = np.nonzero(rel == GE)[0]
        self._eq_rows = np.nonzero(rel == "=")[0]
        self._row_tol = simplex.FEAS_TOL * np.maximum(1.0, np.abs(self.b))
        # Yearly spending ceilings and per-variant cost columns for the
        # packing heuristic, plus schedule-slot ownership and directives.
        bud = [i for i, row in enumerate(model.constraints)
               if row.label.startswith("budget-hi-")]
        self._cap = self.b[bud]
        self._cost = self.A[bud].toarray() if bud else np.zeros((0, n))
        self.sched_row_of: dict[int, int] = {}
        for k, row in enumerate(model.constraints):
            if row.label.startswith(("schedule-", "mandate-proj-")):
                for v in row.terms:
                    self.sched_row_of[self.index[v]] = k
        self.forced_options: set[int] = set()
        self.banned_options: set[int] = set()
        for row in model.constraints:
            if row.label.startswith("mandate-opt-") and len(row.terms) == 1:
                col = self.index[next(iter(row.terms))]
                (self.forced_options if row.rhs else self.banned_options).add(col)

    def feasible_point(self, x: np.ndarray) -> bool:
        """Tolerance-level feasibility of a point, fully vectorized."""
        r = self.A @ x - self.b
        return bool((r[self._le_rows] <= self._row_tol[self._le_rows]).all()
                    and (r[self._ge_rows] >= -self._row_tol[self._ge_rows]).all()
                    and (np.abs(r[self._eq_rows]) <= self._row_tol[self._eq_rows]).all())

    def solve_lp(self, fixings: dict[int, int] | None = None,
                 basis: simplex.Basis | None = None) -> simplex.LpSolution:
        n = len(self.names)
        lo = np.zeros(n)
        hi = np.ones(n)
        if fixings:
            for j, v in fixings.items():
                lo[j] = hi[j] = float(v)
        sol = self.engine.solve(lo, hi, basis=basis)
        if sol.status == simplex.ITERATION_LIMIT:
            # A stuck warm start is retried cold before giving up.
            sol = self.engine.solve(lo, hi, basis=None)
            if sol.status == simplex.ITERATION_LIMIT:
                raise SolverError("simplex iteration limit on a cold solve")
        return sol

    def violated_rows(self, x: np.ndarray) -> tuple[str, ...]:
        """Labels of rows the point x breaches beyond tolerance."""
        labels = []
        act = self.A @ x
        for i, row in enumerate(self.model.constraints):
            slack_tol = simplex.FEAS_TOL * max(1.0, abs(row.rhs))
            if row.relation == LE and act[i] > row.rhs + slack_tol:
                labels.append(row.label)
            elif row.relation == GE and act[i] < row.rhs - slack_tol:
                labels.append(row.label)
            elif row.relation == "=" and abs(act[i] - row.rhs) > slack_tol:
                labels.append(row.label)
        return tuple(labels)

    def verify_exact(self, x_int: dict[str, int]) -> tuple[bool, tuple[str, ...]]:
        """Integer-arithmetic feasibility check of a 0/1 point."""
        bad = []
        for row in self.model.constraints:
            act = 0
            for name, coef in row.terms.items():
                xi = x_int.get(name, 0)
                if xi:
                    act += int(round(coef)) * xi
            rhs = int(round(row.rhs))
            ok = (act <= rhs if row.relation == LE
                  else act >= rhs if row.relation == GE
                  else act == rhs)
            if not ok:
                bad.append(row.label)
        return not bad, tuple(bad)


@dataclass
class LpRelaxation:
    """Result of the continuous relaxation."""

    status: str
    x: dict[str, float]
    objective: float
    violated_rows: tuple[str, ...] = ()


def solve_lp_relaxation(model: IlpModel,
                        compiled: CompiledModel | None = None) -> LpRelaxation:
    """Solve the model with variables relaxed to [0, 1]."""
    cm = compiled if compiled is not None else CompiledModel(model)
    sol = cm.solve_lp()
    x = {name: float(sol.x[i]) for i, name in enumerate(cm.names)}
    if sol.status == simplex.INFEASIBLE:
        return LpRelaxation(INFEASIBLE, x, -np.inf, cm.violated_rows(sol.x))
    if sol.status == simplex.UNBOUNDED:
        return LpRelaxation(UNBOUNDED, x, np.inf)
    return LpRelaxation(OPTIMAL, x, sol.objective)


def round_continuous(model: IlpModel, x: dict[str, float],
                     threshold: float = 0.5) -> tuple[dict[str, int], float, bool, tuple[str, ...]]:
    """Round a fractional point at the threshold and check it exactly.

    Values at the threshold round up. Returns (point, objective,
    feasible, violated row labels); infeasibility is reported, not
    raised, since rounding legitimately fails on tight instances.
    """
    cm = CompiledModel(model)
    x_int = {name: (1 if x.get(name, 0.0) >= threshold else 0) for name, _ in model.variables}
    feasible, bad = cm.verify_exact(x_int)
    return x_int, portfolio_value(model, x_int), feasible, bad


def _fractional_branch(cm: CompiledModel, x: np.ndarray) -> int | None:
    """Most fractional variable, options before projects, lowest index."""
    best = None
    best_score = None
    for kind_wanted in ("option", "project"):
        for j, kind in enumerate(cm.kinds):
            if kind != kind_wanted:
                continue
            frac = abs(x[j] - round(x[j]))
            if frac <= INT_TOL:
                continue
            score = abs(x[j] - 0.5)
            if best_score is None or score < best_score - 1e-12:
                best, best_score = j, score
        if best is not None:
            return best
    return best


def _heuristic_points(cm: CompiledModel, x: np.ndarray):
    """Cheap integral candidates derived from a node's LP point.

    Plain rounding, two family-greedy picks (keep each family's
    LP-favourite option with exactly its supporting projects, once only
    where the LP mass is convincing and once greedily), then a
    budget-aware packing that chooses fitting start variants.
    """
    yield (x >= 0.5).astype(float)
    for min_mass in (0.5, INT_TOL):
        cand = np.zeros(len(cm.names))
        for cols, required in cm.family_rows:
            j = int(cols[np.argmax(x[cols])])
            if not required and x[j] < min_mass:
                continue
            cand[j] = 1.0
            prjs = cm.option_projects.get(j)
            if prjs is not None:
                cand[prjs] = 1.0
        yield cand
    yield _pack_greedy(cm, x)


def _pack_greedy(cm: CompiledModel, x: np.ndarray) -> np.ndarray:
    """Constructive packing under the yearly ceilings.

    Families are visited mandate-first then by best option value; each
    family tries its options by value (LP mass breaks ties) and keeps
    the first start combination that fits the remaining budget without
    stealing another pick's schedule slot. Costs accrue only for newly
    funded projects, which is the set-union economics of sharing.
    """
    cand = np.zeros(len(cm.names))
    spend = np.zeros(len(cm._cap))
    funded: set[int] = set()
    sched_owner: dict[int, int] = {}

    def fits(j: int):
        prjs = cm.option_projects.get(j)
        new = [] if prjs is None else [p for p in prjs.tolist() if p not in funded]
        for p in new:
            row = cm.sched_row_of.get(p)
            if row is not None and sched_owner.get(row, p) != p:
                return None
        if new and cm._cost.size:
            add = cm._cost[:, new].sum(axis=1)
            if np.any(spend + add > cm._cap + 1e-9):
                return None
            return new, add
        return new, None

    def best_value(cols: np.ndarray) -> float:
        return max(float(cm.c[j]) for j in cols)

    order = sorted(range(len(cm.family_rows)),
                   key=lambda f: (not any(j in cm.forced_options
                                          for j in cm.family_rows[f][0]),
                                  -best_value(cm.family_rows[f][0]), f))
    for f in order:
        cols, _required = cm.family_rows[f]
        forced = [j for j in cols if j in cm.forced_options]
        pool = forced or [j for j in cols if j not in cm.banned_options]
        pool.sort(key=lambda j: (-cm.c[j], -x[j], j))
        for j in pool:
            got = fits(int(j))
            if got is None:
                continue
            new, add = got
            cand[j] = 1.0
            for p in new:
                funded.add(p)
                cand[p] = 1.0
                row = cm.sched_row_of.get(p)
                if row is not None:
                    sched_owner[row] = p
            if add is not None:
                spend += add
            break
    return cand


def _assemble(cm: CompiledModel, chosen: list[int | None]) -> np.ndarray:
    """Point selecting the given option per family plus needed projects."""
    cand = np.zeros(len(cm.names))
    for j in chosen:
        if j is None:
            continue
        cand[j] = 1.0
        prjs = cm.option_projects.get(j)
        if prjs is not None:
            cand[prjs] = 1.0
    return cand


def _improve_swaps(cm: CompiledModel, cand: np.ndarray) -> np.ndarray:
    """Hill-climb a candidate by reassigning one family at a time.

    Each sweep tries every alternative option (and dropping the family
    where allowed) and keeps the best feasible improvement; sweeps stop
    at a fixed cap so degenerate plateaus cannot spin.
    """
    chosen: list[int | None] = []
    for cols, _req in cm.family_rows:
        picked = [j for j in cols.tolist() if cand[j] >= 0.5]
        chosen.append(picked[0] if picked else None)
    value = float(cm.c @ cand)
    for _sweep in range(8):
        moved = False
        for f, (cols, required) in enumerate(cm.family_rows):
            cur = chosen[f]
            if cur is not None and cur in cm.forced_options:
                continue
            alts: list[int | None] = [j for j in cols.tolist()
                                      if j != cur and j not in cm.banned_options]
            if not required and cur is not None:
                alts.append(None)
            for alt in alts:
                chosen[f] = alt
                trial = _assemble(cm, chosen)
                tv = float(cm.c @ trial)
                if tv > value + 1e-12 and cm.feasible_point(trial):
                    cand, value, cur, moved = trial, tv, alt, True
            chosen[f] = cur
        if not moved:
            break
    return cand


def _try_heuristics(cm: CompiledModel, x: np.ndarray, zP: float):
    """Best exact-verified candidate better than zP, or None."""
    best_vec = None
    best_val = -np.inf
    for cand in _heuristic_points(cm, x):
        if not cm.feasible_point(cand):
            continue
        value = float(cm.c @ cand)
        if value > best_val:
            best_vec, best_val = cand, value
    if best_vec is None:
        return None
    found = None
    for cand in (_improve_swaps(cm, best_vec), best_vec):
        x_int = {name: (1 if cand[i] >= 0.5 else 0)
                 for i, name in enumerate(cm.names)}
        ok, _ = cm.verify_exact(x_int)
        if not ok:
            continue
        value = portfolio_value(cm.model, x_int)
        if value > zP:
            return (x_int, value)
        return None
    return found


def _fmt(v: float) -> str:
    return "%.6g" % v


def branch_and_bound(model: IlpModel, options: SolveOptions | None = None,
                     log_interval: int | None = None) -> SolveResult:
    """Exact or gap-bounded binary solve of the portfolio model."""
    options = options or SolveOptions()
    t0 = time.monotonic()
    cm = CompiledModel(model)

    zP = -np.inf
    best: dict[str, int] | None = None
    zD = np.inf
    nodes = 0
    seq = 0
    status = None
    violated: tuple[str, ...] = ()

    # Heap entries: (-parent_bound, seq, fixings, basis). The current
    # plunge node lives outside the heap. The root has no parent, so
    # its bound is +inf and its key -inf.
    heap: list = [(-np.inf, seq, {}, None)]
    current = None

    def open_dual_bound(current_bound: float | None) -> float:
        cands = [zP]
        if heap:
            cands.append(-heap[0][0])
        if current_bound is not None:
            cands.append(current_bound)
        return max(cands)

    while True:
        if current is None:
            if not heap:
                status = OPTIMAL
                zD = zP
                break
            neg_bound, _, fixings, basis = heapq.heappop(heap)
            if -neg_bound <= zP + PRUNE_TOL:
                continue
            current = (fixings, basis)

        if options.time_limit is not None and time.monotonic() - t0 > options.time_limit:
            status = TIME_LIMIT
            break
        if options.node_limit is not None and nodes >= options.node_limit:
            status = TIME_LIMIT
            break

        fixings, basis = current
        current = None
        sol = cm.solve_lp(fixings, basis)
        nodes += 1

        node_bound = None
        if sol.status == simplex.UNBOUNDED:
            wall = time.monotonic() - t0
            return SolveResult(UNBOUNDED, None, np.inf, np.inf, float("inf"),
                               nodes, wall)
        if sol.status == simplex.OPTIMAL:
            bound = sol.objective
            if bound > zP + PRUNE_TOL:
                hit = _try_heuristics(cm, sol.x, zP)
                if hit is not None:
                    best, zP = hit[0], hit[1]
            if bound > zP + PRUNE_TOL:
                frac_j = _fractional_branch(cm, sol.x)
                if frac_j is None:
                    x_int = {name: int(round(sol.x[i])) for i, name in enumerate(cm.names)}
                    feasible, bad = cm.verify_exact(x_int)
                    if not feasible:
                        raise SolverError("LP-integral point failed exact check: "
                                          + ", ".join(bad))
                    value = portfolio_value(model, x_int)
                    if value > zP:
                        zP, best = value, x_int
                else:
                    node_bound = bound
                    near = 1 if sol.x[frac_j] >= 0.5 else 0
                    far_fix = dict(fixings)
                    far_fix[frac_j] = 1 - near
                    seq += 1
                    heapq.heappush(heap, (-bound, seq, far_fix, sol.basis))
                    near_fix = dict(fixings)
                    near_fix[frac_j] = near
                    current = (near_fix, sol.basis)
        elif sol.status == simplex.INFEASIBLE and nodes == 1:
            wall = time.monotonic() - t0
            return SolveResult(INFEASIBLE, None, -np.inf, -np.inf, float("inf"),
                               1, wall, cm.violated_rows(sol.x))

        # The global bound can only tighten, so keep zD monotone.
        zD = min(zD, open_dual_bound(node_bound))
        if log_interval and nodes % log_interval == 0:
            log.info("node=%s zP=%s zD=%s gap=%s",
                     nodes, _fmt(zP), _fmt(zD), _fmt(relative_gap(zP, zD)))
        if options.gap_tolerance > 0 and best is not None:
            if relative_gap(zP, zD) <= options.gap_tolerance:
                status = GAP_REACHED
                break

    wall = time.monotonic() - t0
    if status == OPTIMAL:
        zD = zP
    gap = relative_gap(zP, zD)
    if log_interval:
        log.info("node=%s zP=%s zD=%s gap=%s", nodes, _fmt(zP), _fmt(zD), _fmt(gap))
    incumbent = {k: float(v) for k, v in best.items()} if best is not None else None
    if best is None and status == OPTIMAL:
        # Every node pruned or infeasible without a single incumbent.
        return SolveResult(INFEASIBLE, None, -np.inf, -np.inf, float("inf"),
                           nodes, wall, violated)
    return SolveResult(status, incumbent, float(zP), float(zD), float(gap),
                       nodes, wall)


def solve(model: IlpModel, options: SolveOptions | None = None,
          log_interval: int | None = None) -> SolveResult:
    """Entry point dispatching on variable category."""
    options = options or SolveOptions()
    if options.variable_category == "continuous":
        t0 = time.monotonic()
        relax = solve_lp_relaxation(model)
        wall = time.monotonic() - t0
        if relax.status != OPTIMAL:
            bnd = -np.inf if relax.status == INFEASIBLE else np.inf
            return SolveResult(relax.status, None, bnd, bnd, float("inf"),
                               1, wall, relax.violated_rows)
        return SolveResult(OPTIMAL, dict(relax.x), relax.objective,
                           relax.objective, 0.0, 1, wall)
    if options.variable_category != "binary":
        raise ValueError(f"unknown variable_category {options.variable_category!r}")
    return branch_and_bound(model, options, log_interval=log_interval)
