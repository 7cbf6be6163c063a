"""Bounded-variable primal simplex for the portfolio LP relaxations.

Revised simplex with an explicit dense basis inverse, rank-1 pivot
updates and periodic refactorization. Rows become equalities with one
slack each; slack bounds encode the relation:

    a.x <= b   ->   a.x + s = b,  s in [0, +inf)
    a.x >= b   ->   a.x + s = b,  s in (-inf, 0]
    a.x  = b   ->   a.x + s = b,  s = 0

Phase 1 minimizes the summed bound violation of basic variables (a
composite objective, no artificial columns), so any starting basis is
usable. That is what makes warm starts cheap inside branch and bound:
a child node fixes one variable, typically a basic one now violating
its tightened bounds, and phase 1 repairs it in a few pivots.

Pricing is Dantzig with a Bland fallback after a degenerate streak.
All tolerances assume constraint data of modest integer magnitude
(costs in the thousands), which holds for models built here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg.blas import dger

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9
DEGEN_STREAK = 60
REFACTOR_EVERY = 512
DRIFT_CHECK_EVERY = 64
DRIFT_TOL = 1e-7

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


class SimplexError(Exception):
    pass


@dataclass
class Basis:
    """Snapshot of a simplex basis, cheap to copy between nodes."""

    basic: np.ndarray      # column index per row
    at_upper: np.ndarray   # bool per column; meaningful for nonbasics


@dataclass
class LpSolution:
    status: str
    x: np.ndarray          # structural variables only
    objective: float
    basis: Basis | None
    iterations: int
    infeasibility: float   # summed bound violation at the final point


class BoundedSimplex:
    """Reusable solver for one constraint matrix with varying bounds.

    The matrix, relations and rhs are fixed at construction; each
    ``solve`` call takes structural bounds (branch fixings) and an
    optional starting basis.
    """

    def __init__(self, c, A, relations, b):
        A = sp.csc_matrix(A)
        m, n = A.shape
        if len(b) != m or len(relations) != m or len(c) != n:
            raise ValueError("inconsistent LP dimensions")
        self.m, self.n = m, n
        self._live_basis: Basis | None = None
        self.c_full = np.concatenate([np.asarray(c, dtype=float), np.zeros(m)])
        self.A_full = sp.hstack([A, sp.identity(m, format="csc")], format="csc")
        self.AT_csr = self.A_full.T.tocsr()
        self.b = np.asarray(b, dtype=float)
        self.slack_lo = np.empty(m)
        self.slack_hi = np.empty(m)
        for i, rel in enumerate(relations):
            if rel == "<=":
                self.slack_lo[i], self.slack_hi[i] = 0.0, np.inf
            elif rel == ">=":
                self.slack_lo[i], self.slack_hi[i] = -np.inf, 0.0
            elif rel == "=":
                self.slack_lo[i], self.slack_hi[i] = 0.0, 0.0
            else:
                raise ValueError(f"unknown relation {rel!r}")
        # Per-column sparse views; scipy slicing is too slow per pivot.
        self.col_idx = []
        self.col_val = []
        indptr, indices, data = self.A_full.indptr, self.A_full.indices, self.A_full.data
        for j in range(n + m):
            s, e = indptr[j], indptr[j + 1]
            self.col_idx.append(indices[s:e].copy())
            self.col_val.append(data[s:e].copy())

    # -- internal state per solve call ------------------------------------

    def _column(self, j: int) -> np.ndarray:
        w = np.zeros(self.m)
        w[self.col_idx[j]] = self.col_val[j]
        return w

    def _nonbasic_value(self, j: int) -> float:
        if self.at_upper[j] and np.isfinite(self.hi[j]):
            return self.hi[j]
        if np.isfinite(self.lo[j]):
            return self.lo[j]
        if np.isfinite(self.hi[j]):
            return self.hi[j]
        return 0.0

    def _nonbasic_values(self) -> np.ndarray:
        hi_f = np.isfinite(self.hi)
        v = np.where(np.isfinite(self.lo), self.lo, np.where(hi_f, self.hi, 0.0))
        return np.where(self.at_upper & hi_f, self.hi, v)

    def _rebuild_point(self) -> None:
        v = self._nonbasic_values()
        v[self.basic] = 0.0
        self.rhs_eff = self.b - self.A_full @ v
        self.xB = self.Binv @ self.rhs_eff

    def _refactor(self) -> bool:
        B = self.A_full[:, self.basic].toarray()
        try:
            # Fortran order lets the rank-1 pivot update run in place.
            self.Binv = np.asfortranarray(np.linalg.inv(B))
        except np.linalg.LinAlgError:
            return False
        self._rebuild_point()
        self.pivots_since_refactor = 0
        return True

    def _reset_to_slack_basis(self) -> None:
        self.basic = np.arange(self.n, self.n + self.m)
        self.at_upper = np.zeros(self.n + self.m, dtype=bool)
        # >= slacks live in (-inf, 0]; they sit at their upper bound 0.
        self.at_upper[self.n:] = ~np.isfinite(self.slack_lo)
        self._sync_is_basic()
        self.Binv = np.eye(self.m, order="F")
        self._rebuild_point()
        self.pivots_since_refactor = 0

    def _sync_is_basic(self) -> None:
        self.is_basic = np.zeros(self.n + self.m, dtype=bool)
        self.is_basic[self.basic] = True

    def _violation_dirs(self) -> np.ndarray:
        lo = self.lo[self.basic]
        hi = self.hi[self.basic]
        d = np.zeros(self.m)
        d[self.xB < lo - FEAS_TOL] = -1.0
        d[self.xB > hi + FEAS_TOL] = 1.0
        return d

    def _infeasibility(self) -> float:
        lo = self.lo[self.basic]
        hi = self.hi[self.basic]
        below = np.maximum(lo - self.xB, 0.0)
        above = np.maximum(self.xB - hi, 0.0)
        below[~np.isfinite(below)] = 0.0
        above[~np.isfinite(above)] = 0.0
        return float(below.sum() + above.sum())

    def solve(self, lo, hi, basis: Basis | None = None,
              max_iter: int | None = None) -> LpSolution:
        """Solve with the given structural bounds.

        ``lo``/``hi`` cover the n structural columns; slack bounds are
        fixed by the relations. Returns the final basis for reuse.
        """
        self.lo = np.concatenate([np.asarray(lo, dtype=float), self.slack_lo])
        self.hi = np.concatenate([np.asarray(hi, dtype=float), self.slack_hi])
        if np.any(self.lo > self.hi + 1e-12):
            return LpSolution(INFEASIBLE, np.full(self.n, np.nan), -np.inf,
                              None, 0, np.inf)
        if max_iter is None:
            max_iter = 50 * (self.m + self.n) + 500

        if basis is not None and basis is self._live_basis:
            # The engine still holds this basis factored (the common
            # plunge pattern: child solved right after its parent).
            # Only the bounds changed, so just recompute the point.
            self._rebuild_point()
        elif basis is not None:
            self.basic = basis.basic.copy()
            self.at_upper = basis.at_upper.copy()
            self._sync_is_basic()
            self.pivots_since_refactor = 0
            if not self._refactor():
                self._reset_to_slack_basis()
        else:
            self._reset_to_slack_basis()

        status = self._run(max_iter)
        x_full = self._nonbasic_values()
        x_full[self.basic] = self.xB
        x = x_full[:self.n]
        obj = float(self.c_full[:self.n] @ x)
        out = Basis(self.basic.copy(), self.at_upper.copy())
        self._live_basis = out
        return LpSolution(status, x, obj, out,
                          self.iterations, self._infeasibility())

    # -- the simplex loop ---------------------------------------------------

    def _run(self, max_iter: int) -> str:
        self.iterations = 0
        bland = False
        degen_streak = 0
        repairs = 0
        phase1 = self._infeasibility() > FEAS_TOL
        while True:
            if self.iterations >= max_iter:
                return ITERATION_LIMIT
            if self.pivots_since_refactor >= REFACTOR_EVERY:
                if not self._refactor():
                    self._reset_to_slack_basis()
            elif self.pivots_since_refactor % DRIFT_CHECK_EVERY == DRIFT_CHECK_EVERY - 1:
                true_xB = self.Binv @ self.rhs_eff
                if np.max(np.abs(true_xB - self.xB)) > DRIFT_TOL:
                    if not self._refactor():
                        self._reset_to_slack_basis()

            if phase1:
                inf0 = self._infeasibility()
                if inf0 <= FEAS_TOL:
                    phase1 = False
                    bland = False
                    degen_streak = 0
                    continue
                d = self._violation_dirs()
                y = d @ self.Binv
                # Minimizing the violation sum is maximizing its
                # negation, which grows at rate +y.a_j per unit of x_j;
                # the same eligibility rule as phase 2 then applies.
                r = self.AT_csr @ y
            else:
                inf0 = self._infeasibility()
                if inf0 > 100 * FEAS_TOL:
                    # Numerical slip back to infeasibility; repair.
                    repairs += 1
                    if repairs > 3:
                        raise SimplexError("repeated loss of feasibility")
                    if not self._refactor():
                        self._reset_to_slack_basis()
                    if self._infeasibility() > FEAS_TOL:
                        phase1 = True
                    continue
                y = self.c_full[self.basic] @ self.Binv
                r = self.c_full - (self.AT_csr @ y)

            j = self._price(r, bland)
            if j is None:
                # Phase 1 only prices while violation > tol, so a stall
                # there means the violation cannot be reduced further.
                return INFEASIBLE if phase1 else OPTIMAL

            up = self._entering_direction(r, j)
            w = self.Binv @ self._column(j)
            step, leave_pos, leave_to_upper = self._ratio_test(j, w, up, phase1, bland)
            if step is None:
                if phase1:
                    raise SimplexError("unbounded phase-1 direction")
                return UNBOUNDED

            if step <= PIVOT_TOL:
                degen_streak += 1
                if degen_streak > DEGEN_STREAK:
                    bland = True
            else:
                degen_streak = 0
                if bland and not phase1:
                    bland = False

            self._pivot(j, w, up, step, leave_pos, leave_to_upper)
            self.iterations += 1
            self.pivots_since_refactor += 1

    def _entering_direction(self, r: np.ndarray, j: int) -> bool:
        """True when x_j increases from its current bound."""
        if self.at_upper[j] and np.isfinite(self.hi[j]):
            return False
        if not np.isfinite(self.lo[j]) and np.isfinite(self.hi[j]):
            return False
        return True

    def _price(self, r: np.ndarray, bland: bool) -> int | None:
        at_up = self.at_upper & np.isfinite(self.hi)
        free = ~self.is_basic & (self.lo != self.hi)
        eligible = (free & ~at_up & (r > OPT_TOL)) | (free & at_up & (r < -OPT_TOL))
        if not eligible.any():
            return None
        idx = np.nonzero(eligible)[0]
        if bland:
            return int(idx[0])
        return int(idx[np.argmax(np.abs(r[idx]))])

    def _ratio_test(self, j: int, w: np.ndarray, up: bool, phase1: bool,
                    bland: bool):
        """Largest step for x_j; returns (step, leaving row, to_upper).

        A leaving row of None with a finite step is a bound flip of the
        entering variable. Violated basics block only at the bound they
        are currently violating (the conservative composite rule).
        """
        t = 1.0 if up else -1.0
        lo_b = self.lo[self.basic]
        hi_b = self.hi[self.basic]
        rate = t * w                      # xB decreases at this rate
        flip = self.hi[j] - self.lo[j]    # bound-to-bound flip

        lims = np.full(self.m, np.inf)
        to_up = np.zeros(self.m, dtype=bool)
        active = np.abs(w) > PIVOT_TOL
        if phase1:
            below = active & (self.xB < lo_b - FEAS_TOL)
            above = active & (self.xB > hi_b + FEAS_TOL)
            inside = active & ~below & ~above
            # Violated basics block only while moving toward the bound
            # they violate (the conservative composite rule).
            k = below & (rate < 0)
            lims[k] = (self.xB[k] - lo_b[k]) / rate[k]
            k = above & (rate > 0)
            lims[k] = (self.xB[k] - hi_b[k]) / rate[k]
            to_up[k] = True
        else:
            inside = active
        k = inside & (rate > PIVOT_TOL) & np.isfinite(lo_b)
        lims[k] = (self.xB[k] - lo_b[k]) / rate[k]
        k = inside & (rate < -PIVOT_TOL) & np.isfinite(hi_b)
        lims[k] = (self.xB[k] - hi_b[k]) / rate[k]
        to_up[k] = True

        np.maximum(lims, 0.0, out=lims)
        row_min = float(lims.min()) if self.m else np.inf
        if not row_min < flip:
            # The entering variable hits its own far bound first.
            if not np.isfinite(flip):
                return None, None, False
            return flip, None, False
        tied = np.nonzero(lims <= row_min + 1e-10)[0]
        if bland:
            pos = int(tied[np.argmin(self.basic[tied])])
        else:
            pos = int(tied[np.argmax(np.abs(w[tied]))])
        return float(lims[pos]), pos, bool(to_up[pos])

    def _pivot(self, j: int, w: np.ndarray, up: bool, step: float,
               leave_pos: int | None, leave_to_upper: bool) -> None:
        t = 1.0 if up else -1.0
        old_val = self._nonbasic_value(j)
        self.xB = self.xB - t * step * w
        if leave_pos is None:
            # Bound flip: j stays nonbasic, jumps to its other bound.
            new_val = old_val + t * step
            self.at_upper[j] = up
            delta = new_val - old_val
            if delta != 0.0:
                self.rhs_eff[self.col_idx[j]] -= self.col_val[j] * delta
            return
        leaving = int(self.basic[leave_pos])
        hit = self.hi[leaving] if leave_to_upper else self.lo[leaving]
        self.basic[leave_pos] = j
        self.is_basic[leaving] = False
        self.is_basic[j] = True
        self.xB[leave_pos] = old_val + t * step
        self.at_upper[leaving] = leave_to_upper
        # Rank-1 update of the basis inverse, in place via BLAS.
        piv = w[leave_pos]
        row = self.Binv[leave_pos] / piv
        w_masked = w.copy()
        w_masked[leave_pos] = 0.0
        if self.Binv.flags.f_contiguous:
            dger(-1.0, w_masked, row, a=self.Binv, overwrite_a=1)
        else:
            self.Binv -= np.outer(w_masked, row)
        self.Binv[leave_pos] = row
        # rhs_eff tracks b minus contributions of nonzero nonbasics.
        if old_val != 0.0:
            self.rhs_eff[self.col_idx[j]] += self.col_val[j] * old_val
        if hit != 0.0:
            self.rhs_eff[self.col_idx[leaving]] -= self.col_val[leaving] * hit
