"""Bounded-variable revised simplex.

Problems are stated as ``min c @ x`` subject to row constraints ``A @ x
(<=|>=|==) b`` and per-variable boxes ``lb <= x <= ub`` (infinite bounds
allowed). Internally every row gets a slack, ``A @ x + s = b``, whose box
encodes the row sense. Cold solves run a two-phase primal simplex over
artificial columns; warm solves restart from a previous basis and repair
primal feasibility with the dual simplex, which is the cheap path for a
chain of dispatch problems that differ only in right-hand sides and boxes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
BLAND_AFTER = 50
REFACTOR_EVERY = 40
MAX_ITER = 50_000

LE, GE, EQ = "<=", ">=", "=="
_SENSE_ALIASES = {"<=": LE, "L": LE, "<": LE, ">=": GE, "G": GE, ">": GE, "==": EQ, "=": EQ, "E": EQ}

# nonbasic status codes
_AT_LOWER, _AT_UPPER, _FREE, _BASIC = 0, 1, 2, 3


class LpError(Exception):
    pass


class DimensionError(LpError, ValueError):
    pass


class NumericalError(LpError):
    """Raised when a basis becomes too ill-conditioned to pivot on."""


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class LpProblem:
    objective: np.ndarray
    constraint_matrix: np.ndarray
    senses: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        A = self.constraint_matrix
        if hasattr(A, "toarray"):
            A = A.toarray()
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.size == 0:
            A = A.reshape(0, c.size)
        b = np.asarray(self.rhs, dtype=float).ravel()
        lb = np.asarray(self.lower, dtype=float).ravel()
        ub = np.asarray(self.upper, dtype=float).ravel()
        try:
            senses = tuple(_SENSE_ALIASES[s] for s in self.senses)
        except KeyError as exc:
            raise DimensionError(f"unknown constraint sense {exc.args[0]!r}") from None
        m, n = A.shape
        if c.size != n:
            raise DimensionError(f"objective has {c.size} entries, matrix has {n} columns")
        if b.size != m or len(senses) != m:
            raise DimensionError(f"matrix has {m} rows but rhs/senses have {b.size}/{len(senses)}")
        if lb.size != n or ub.size != n:
            raise DimensionError(f"bounds must have {n} entries")
        if np.any(np.isnan(lb)) or np.any(np.isnan(ub)) or np.any(lb > ub):
            bad = int(np.flatnonzero(~(lb <= ub))[0])
            raise DimensionError(f"variable {bad} has lower bound above upper bound")
        for name, arr in (("objective", c), ("constraint_matrix", A), ("rhs", b)):
            if not np.all(np.isfinite(arr)):
                raise DimensionError(f"{name} contains non-finite entries")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "lower", lb)
        object.__setattr__(self, "upper", ub)

    @property
    def shape(self) -> tuple[int, int]:
        return self.constraint_matrix.shape

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.constraint_matrix @ x

    def max_violation(self, x: np.ndarray) -> float:
        """Largest row or bound violation of ``x`` (0 when feasible)."""
        act = self.row_activity(x)
        viol = [0.0]
        for sense, a, b in zip(self.senses, act, self.rhs):
            if sense == LE:
                viol.append(a - b)
            elif sense == GE:
                viol.append(b - a)
            else:
                viol.append(abs(a - b))
        viol.append(float(np.max(self.lower - x, initial=0.0)))
        viol.append(float(np.max(x - self.upper, initial=0.0)))
        return max(viol)

    def dump(self) -> str:
        """Fixed-layout text form used by golden-file tests."""
        lines = ["MIN " + " ".join(f"{v:.12g}" for v in self.objective)]
        for i, sense in enumerate(self.senses):
            row = " ".join(f"{v:.12g}" for v in self.constraint_matrix[i])
            lines.append(f"ROW {row} {sense} {self.rhs[i]:.12g}")
        for j in range(self.objective.size):
            lines.append(f"BND {j} {self.lower[j]:.12g} {self.upper[j]:.12g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Basis:
    """Basic column indices (into ``[A | I]``) and nonbasic-at-upper flags."""

    basic: tuple[int, ...]
    at_upper: frozenset[int] = field(default_factory=frozenset)
    shape: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class LpSolution:
    status: Status
    primal: np.ndarray
    objective_value: float
    iterations: int = 0
    basis: Basis | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    warm_started: bool = False


class _Simplex:
    """Working state for one solve over the column set ``[A | I | artificials]``."""

    def __init__(self, problem: LpProblem):
        A = problem.constraint_matrix
        m, n = A.shape
        self.m, self.n = m, n
        self.b = problem.rhs
        slack_lo = np.empty(m)
        slack_hi = np.empty(m)
        for i, sense in enumerate(problem.senses):
            if sense == LE:
                slack_lo[i], slack_hi[i] = 0.0, np.inf
            elif sense == GE:
                slack_lo[i], slack_hi[i] = -np.inf, 0.0
            else:
                slack_lo[i], slack_hi[i] = 0.0, 0.0
        self.M = np.hstack([A, np.eye(m)])
        self.lo = np.concatenate([problem.lower, slack_lo])
        self.hi = np.concatenate([problem.upper, slack_hi])
        self.cost = np.concatenate([problem.objective, np.zeros(m)])
        self.iterations = 0

    # -- basis bookkeeping -------------------------------------------------

    def _nonbasic_value(self, j: int, prefer_upper: bool = False) -> tuple[float, int]:
        lo, hi = self.lo[j], self.hi[j]
        if prefer_upper and np.isfinite(hi):
            return hi, _AT_UPPER
        if np.isfinite(lo):
            return lo, _AT_LOWER
        if np.isfinite(hi):
            return hi, _AT_UPPER
        return 0.0, _FREE

    def _factor(self):
        B = self.M[:, self.basic]
        try:
            cond = np.linalg.cond(B)
        except np.linalg.LinAlgError:
            cond = np.inf
        if not np.isfinite(cond) or cond > 1e12:
            raise NumericalError(f"basis matrix is singular or ill-conditioned (cond={cond:.3g})")
        self.Binv = np.linalg.inv(B)
        self.since_refactor = 0
        self._recompute_basic_values()

    def _recompute_basic_values(self):
        nb = self.status != _BASIC
        resid = self.b - self.M[:, nb] @ self.x[nb]
        self.x[self.basic] = self.Binv @ resid

    def _pivot_update(self, r: int, alpha: np.ndarray):
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self._factor()

    def _duals(self, cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y = cost[self.basic] @ self.Binv
        d = cost - y @ self.M
        d[self.basic] = 0.0
        return y, d

    # -- primal simplex ----------------------------------------------------

    def primal(self, cost: np.ndarray) -> Status:
        degenerate_run = 0
        while True:
            if self.iterations >= MAX_ITER:
                raise NumericalError("iteration limit reached")
            _, d = self._duals(cost)
            st = self.status
            score = np.zeros_like(d)
            movable = self.lo < self.hi
            at_lo = (st == _AT_LOWER) & movable & (d < -OPT_TOL)
            at_hi = (st == _AT_UPPER) & movable & (d > OPT_TOL)
            free = (st == _FREE) & (np.abs(d) > OPT_TOL)
            score[at_lo] = -d[at_lo]
            score[at_hi] = d[at_hi]
            score[free] = np.abs(d[free])
            candidates = np.flatnonzero(score > 0)
            if candidates.size == 0:
                return Status.OPTIMAL
            if degenerate_run >= BLAND_AFTER:
                q = int(candidates[0])
            else:
                q = int(candidates[np.argmax(score[candidates])])
            direction = 1.0 if (st[q] == _AT_LOWER or (st[q] == _FREE and d[q] < 0)) else -1.0

            alpha = self.Binv @ self.M[:, q]
            delta = -direction * alpha  # rate of change of basic values
            xb = self.x[self.basic]
            lob = self.lo[self.basic]
            hib = self.hi[self.basic]
            ratios = np.full(self.m, np.inf)
            dec = delta < -PIVOT_TOL
            inc = delta > PIVOT_TOL
            with np.errstate(invalid="ignore", divide="ignore"):
                ratios[dec] = (xb[dec] - lob[dec]) / -delta[dec]
                ratios[inc] = (hib[inc] - xb[inc]) / delta[inc]
            ratios = np.maximum(ratios, 0.0)
            flip = self.hi[q] - self.lo[q]
            t_min = ratios.min() if self.m else np.inf
            if flip <= t_min:
                if not np.isfinite(flip):
                    return Status.UNBOUNDED
                self.x[q] += direction * flip
                self.status[q] = _AT_UPPER if direction > 0 else _AT_LOWER
                self.x[self.basic] = xb + flip * delta
                self.iterations += 1
                degenerate_run = 0
                continue
            if not np.isfinite(t_min):
                return Status.UNBOUNDED
            tie = np.flatnonzero(ratios <= t_min + 1e-12 * max(1.0, t_min))
            r = int(tie[np.argmin(self.basic[tie])])
            leaving = int(self.basic[r])
            t = ratios[r]
            self.x[self.basic] = xb + t * delta
            self.x[q] += direction * t
            self.x[leaving] = self.lo[leaving] if delta[r] < 0 else self.hi[leaving]
            self.status[leaving] = _AT_LOWER if delta[r] < 0 else _AT_UPPER
            if self.lo[leaving] == -np.inf and self.hi[leaving] == np.inf:
                self.status[leaving] = _FREE
            self.status[q] = _BASIC
            self.basic[r] = q
            self._pivot_update(r, alpha)
            self.iterations += 1
            degenerate_run = degenerate_run + 1 if t <= FEAS_TOL else 0

    # -- dual simplex (warm path) ------------------------------------------

    def dual(self, limit: int) -> Status | None:
        """Restore primal feasibility keeping dual feasibility; None = give up."""
        cost = self.cost
        for _ in range(limit):
            xb = self.x[self.basic]
            lob = self.lo[self.basic]
            hib = self.hi[self.basic]
            below = lob - xb
            above = xb - hib
            infeas = np.maximum(below, above)
            r = int(np.argmax(infeas))
            if infeas[r] <= FEAS_TOL:
                return Status.OPTIMAL
            to_lower = below[r] > above[r]
            target = lob[r] if to_lower else hib[r]
            _, d = self._duals(cost)
            alpha_r = self.Binv[r] @ self.M
            st = self.status
            movable = (st != _BASIC) & (self.lo < self.hi)
            ratios = np.full(alpha_r.shape, np.inf)
            sign = 1.0 if to_lower else -1.0
            a = sign * alpha_r
            # to_lower: at-lower needs a<0, at-upper needs a>0 (mirrored above)
            lo_ok = movable & (st == _AT_LOWER) & (a < -PIVOT_TOL)
            hi_ok = movable & (st == _AT_UPPER) & (a > PIVOT_TOL)
            fr_ok = movable & (st == _FREE) & (np.abs(a) > PIVOT_TOL)
            ratios[lo_ok] = np.maximum(d[lo_ok], 0.0) / -a[lo_ok]
            ratios[hi_ok] = np.maximum(-d[hi_ok], 0.0) / a[hi_ok]
            ratios[fr_ok] = 0.0
            t_min = ratios.min()
            if not np.isfinite(t_min):
                return Status.INFEASIBLE
            tie = np.flatnonzero(ratios <= t_min + 1e-12 * max(1.0, t_min))
            q = int(tie[np.argmax(np.abs(alpha_r[tie]))]) if tie.size > 1 else int(tie[0])
            alpha = self.Binv @ self.M[:, q]
            if abs(alpha[r]) < PIVOT_TOL:
                return None
            leaving = int(self.basic[r])
            step = (self.x[leaving] - target) / alpha[r]
            self.x[self.basic] -= step * alpha
            self.x[q] += step
            self.x[leaving] = target
            self.status[leaving] = _AT_LOWER if to_lower else _AT_UPPER
            self.status[q] = _BASIC
            self.basic[r] = q
            self._pivot_update(r, alpha)
            self.iterations += 1
        return None

    # -- drivers -----------------------------------------------------------

    def cold(self) -> Status:
        m, n = self.m, self.n
        total = n + m
        self.x = np.zeros(total)
        self.status = np.empty(total, dtype=np.int8)
        for j in range(n):
            self.x[j], self.status[j] = self._nonbasic_value(j)
        resid = self.b - self.M[:, :n] @ self.x[:n]
        basic = []
        art_rows = []
        art_signs = []
        for i in range(m):
            s = n + i
            if self.lo[s] - FEAS_TOL <= resid[i] <= self.hi[s] + FEAS_TOL:
                self.x[s] = resid[i]
                self.status[s] = _BASIC
                basic.append(s)
            else:
                self.x[s], self.status[s] = self._nonbasic_value(s)
                if self.status[s] == _FREE:  # cannot happen: slack boxes are one-sided at least
                    self.x[s] = 0.0
                r = resid[i] - self.x[s]
                art_rows.append(i)
                art_signs.append(1.0 if r >= 0 else -1.0)
                basic.append(-1)
        k = len(art_rows)
        if k:
            art = np.zeros((m, k))
            art[art_rows, np.arange(k)] = art_signs
            self.M = np.hstack([self.M, art])
            self.lo = np.concatenate([self.lo, np.zeros(k)])
            self.hi = np.concatenate([self.hi, np.full(k, np.inf)])
            self.cost = np.concatenate([self.cost, np.zeros(k)])
            self.x = np.concatenate([self.x, np.zeros(k)])
            self.status = np.concatenate([self.status, np.full(k, _BASIC, dtype=np.int8)])
            for a_idx, i in enumerate(art_rows):
                basic[i] = total + a_idx
        self.basic = np.array(basic, dtype=np.intp)
        self._factor()
        if k:
            phase1 = np.zeros(self.cost.size)
            phase1[total:] = 1.0
            status = self.primal(phase1)
            if status is not Status.OPTIMAL:
                raise NumericalError("phase one did not terminate at an optimum")
            infeas = float(self.x[total:].sum())
            if infeas > FEAS_TOL * max(1, k):
                return Status.INFEASIBLE
            self.hi[total:] = 0.0
            self.x[total:] = np.clip(self.x[total:], 0.0, 0.0)
            self._recompute_basic_values()
        return self.primal(self.cost)

    def warm(self, basis: Basis) -> Status | None:
        m, n = self.m, self.n
        total = n + m
        basic = np.array(basis.basic, dtype=np.intp)
        if basis.shape != (m, n) or basic.size != m or np.any(basic < 0) or np.any(basic >= total):
            return None
        if np.unique(basic).size != m:
            return None
        self.basic = basic
        self.x = np.zeros(total)
        self.status = np.empty(total, dtype=np.int8)
        for j in range(total):
            self.x[j], self.status[j] = self._nonbasic_value(j, prefer_upper=j in basis.at_upper)
        self.status[basic] = _BASIC
        self.x[basic] = 0.0
        try:
            self._factor()
        except NumericalError:
            return None
        _, d = self._duals(self.cost)
        # restore dual feasibility by bound flips where the box allows it
        dual_ok = True
        for j in np.flatnonzero((self.status != _BASIC) & (self.lo < self.hi)):
            st = self.status[j]
            if st == _AT_LOWER and d[j] < -OPT_TOL:
                if np.isfinite(self.hi[j]):
                    self.x[j], self.status[j] = self.hi[j], _AT_UPPER
                else:
                    dual_ok = False
            elif st == _AT_UPPER and d[j] > OPT_TOL:
                if np.isfinite(self.lo[j]):
                    self.x[j], self.status[j] = self.lo[j], _AT_LOWER
                else:
                    dual_ok = False
            elif st == _FREE and abs(d[j]) > OPT_TOL:
                dual_ok = False
        self._recompute_basic_values()
        xb = self.x[basic]
        primal_ok = bool(np.all(xb >= self.lo[basic] - FEAS_TOL) and np.all(xb <= self.hi[basic] + FEAS_TOL))
        if primal_ok:
            return self.primal(self.cost)
        if not dual_ok:
            return None
        status = self.dual(limit=20 * (m + 1))
        if status is Status.OPTIMAL:
            # dual pivots can leave tiny reduced-cost violations; finish primal
            return self.primal(self.cost)
        return status

    def solution(self, status: Status, problem: LpProblem, warm: bool) -> LpSolution:
        n, m = self.n, self.m
        if status is not Status.OPTIMAL:
            return LpSolution(status, np.full(n, np.nan), np.nan, self.iterations, warm_started=warm)
        self._factor()
        x = self.x[:n].copy()
        x = np.clip(x, problem.lower, problem.upper)
        y, d = self._duals(self.cost)
        total = n + m
        if np.any(self.basic >= total):
            basis = None
        else:
            at_upper = frozenset(int(j) for j in np.flatnonzero(self.status[:total] == _AT_UPPER))
            basis = Basis(tuple(int(j) for j in self.basic), at_upper, (m, n))
        obj = float(problem.objective @ x)
        return LpSolution(Status.OPTIMAL, x, obj, self.iterations, basis, y, d[:n], warm)


def solve(problem: LpProblem) -> LpSolution:
    """Cold two-phase solve."""
    sx = _Simplex(problem)
    status = sx.cold()
    return sx.solution(status, problem, warm=False)


def warm_hint(problem: LpProblem, basis: Basis | None) -> LpSolution:
    """Solve starting from ``basis``; silently cold-starts when it does not fit."""
    if basis is not None:
        sx = _Simplex(problem)
        try:
            status = sx.warm(basis)
        except NumericalError:
            status = None
        if status is Status.OPTIMAL:
            return sx.solution(status, problem, warm=True)
        # an infeasible/unbounded verdict from a warm path is re-checked cold
    return solve(problem)
