"""Single-period real-time economic dispatch and day-long simulation.

The network is a zonal copper plate: each zone balances its own load with
local generation, shedding, surplus spill (renewable curtailment or
must-run over-generation) and a net export bounded by the zone's cap;
exports sum to zero. Two reserve products are procured:
regulating (capped by each unit's 5-minute ramp) and spinning, which
together form operating reserve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid_model import (
    STEPS_PER_DAY,
    STEPS_PER_HOUR,
    CommitmentSchedule,
    Realization,
    SystemModel,
)
from .lpsolve import GE, LE, EQ, Basis, LpProblem, Status, warm_hint, solve

STEP_HOURS = 1.0 / STEPS_PER_HOUR
# Small reward per MW of procured reserve. Without it the LP is indifferent
# to reserve above the requirement and the reserve QoIs become arbitrary.
# Regulating reserve earns twice as much, so headroom is booked as
# regulation first. The reward is excluded from the reported cost.
RESERVE_TIEBREAK = 1e-3

QOI_NAMES = ("cost", "load_shed", "reg_reserve", "op_reserve")
COST, LOAD_SHED, REG_RESERVE, OP_RESERVE = range(4)


class ScedError(RuntimeError):
    pass


@dataclass(frozen=True)
class DispatchState:
    p: np.ndarray  # MW per generator, 0 when off

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def check(self, system: SystemModel, commitment: np.ndarray, tol: float = 1e-6) -> None:
        pmin, pmax = system.column("p_min"), system.column("p_max")
        on = np.asarray(commitment, dtype=bool)
        if self.p.shape != (system.n_generators,):
            raise ValueError("dispatch vector length does not match generator count")
        if np.any(np.abs(self.p[~on]) > tol):
            raise ValueError("uncommitted generator has nonzero output")
        if np.any(self.p[on] < pmin[on] - tol) or np.any(self.p[on] > pmax[on] + tol):
            raise ValueError("committed generator outside [p_min, p_max]")


@dataclass(frozen=True)
class QoiSample:
    cost: float
    load_shed: float
    reg_reserve: float
    op_reserve: float

    def as_array(self) -> np.ndarray:
        return np.array([self.cost, self.load_shed, self.reg_reserve, self.op_reserve])


class ScedLayout:
    """Column/row layout of the dispatch LP for one commitment pattern.

    The constraint matrix depends only on the system and the committed set,
    so it is built once and reused for every step that shares the pattern.
    """

    def __init__(self, system: SystemModel, commitment: np.ndarray):
        commitment = np.asarray(commitment, dtype=bool)
        if commitment.shape != (system.n_generators,):
            raise ValueError(
                f"commitment has {commitment.size} entries, system has {system.n_generators} generators"
            )
        self.system = system
        self.commitment = commitment
        on = np.flatnonzero(commitment)
        self.on = on
        k = on.size
        nz = system.n_zones
        reg_capable = np.array([system.generators[g].reg_capable for g in on], dtype=bool)
        self.reg_gens = np.flatnonzero(reg_capable)  # positions within `on`
        kr = self.reg_gens.size

        # column blocks
        self.p = np.arange(k)
        self.r_reg = k + np.arange(kr)
        self.r_spin = k + kr + np.arange(k)
        base = 2 * k + kr
        self.shed = base + np.arange(nz)
        self.spill = base + nz + np.arange(nz)
        self.export = base + 2 * nz + np.arange(nz)
        self.reg_short = base + 3 * nz
        self.op_short = base + 3 * nz + 1
        n = base + 3 * nz + 2
        self.n_cols = n

        zone_of = system.zone_index()[on]
        pmax = system.column("p_max")[on]
        pmin = system.column("p_min")[on]
        ramp = system.column("ramp_rate")[on]
        self.pmin, self.pmax, self.ramp = pmin, pmax, ramp

        # rows: zonal balance, export sum, headroom per unit, two reserve rows
        m = nz + 1 + k + 2
        A = np.zeros((m, n))
        senses = []
        for z in range(nz):
            A[z, self.p[zone_of == z]] = 1.0
            A[z, self.shed[z]] = 1.0
            A[z, self.spill[z]] = -1.0
            A[z, self.export[z]] = -1.0
            senses.append(EQ)
        A[nz, self.export] = 1.0
        senses.append(EQ)
        head0 = nz + 1
        for i in range(k):
            A[head0 + i, self.p[i]] = 1.0
            A[head0 + i, self.r_spin[i]] = 1.0
            senses.append(LE)
        for j, i in enumerate(self.reg_gens):
            A[head0 + i, self.r_reg[j]] = 1.0
        self.reg_row = head0 + k
        self.op_row = head0 + k + 1
        A[self.reg_row, self.r_reg] = 1.0
        A[self.reg_row, self.reg_short] = 1.0
        A[self.op_row, self.r_reg] = 1.0
        A[self.op_row, self.r_spin] = 1.0
        A[self.op_row, self.op_short] = 1.0
        senses += [GE, GE]
        A.setflags(write=False)
        self.A = A
        self.senses = tuple(senses)
        self.n_rows = m

        c = np.zeros(n)
        c[self.p] = system.column("energy_cost")[on] * STEP_HOURS
        c[self.shed] = system.voll * STEP_HOURS
        c[self.reg_short] = system.reserve_penalty * STEP_HOURS
        c[self.op_short] = system.reserve_penalty * STEP_HOURS
        c[self.r_reg] = -2 * RESERVE_TIEBREAK
        c[self.r_spin] = -RESERVE_TIEBREAK
        c.setflags(write=False)
        self.c = c

        self.rhs_template = np.zeros(m)
        self.rhs_template[head0 : head0 + k] = pmax
        self.rhs_template[self.reg_row] = system.mrr_reg
        self.rhs_template[self.op_row] = system.mrr_op

        lo = np.zeros(n)
        hi = np.full(n, np.inf)
        hi[self.r_reg] = ramp[self.reg_gens]
        hi[self.r_spin] = pmax
        limits = np.array([system.zonal_export_limit[z] for z in system.zones])
        lo[self.export] = -limits
        hi[self.export] = limits
        self.lo_template, self.hi_template = lo, hi

    def problem(self, prev_p: np.ndarray | None, values: np.ndarray) -> LpProblem:
        """LP for one step; ``values`` is a (zones, 3) load/wind/solar array."""
        values = np.asarray(values, dtype=float)
        nz = self.system.n_zones
        if values.shape != (nz, 3):
            raise ValueError(f"realization must be ({nz}, 3), got {values.shape}")
        rhs = self.rhs_template.copy()
        renew = values[:, 1] + values[:, 2]
        rhs[:nz] = values[:, 0] - renew
        lo = self.lo_template.copy()
        hi = self.hi_template.copy()
        if prev_p is None:
            lo[self.p] = self.pmin
            hi[self.p] = self.pmax
        else:
            prev = np.asarray(prev_p, dtype=float)[self.on]
            lo[self.p] = np.maximum(self.pmin, prev - self.ramp)
            hi[self.p] = np.minimum(self.pmax, prev + self.ramp)
            # guard against a previous output fractionally outside the box
            hi[self.p] = np.maximum(hi[self.p], lo[self.p])
        return LpProblem(self.c, self.A, self.senses, rhs, lo, hi)

    def qoi(self, x: np.ndarray) -> np.ndarray:
        s = self.system
        energy = float(self.c[self.p] @ x[self.p])
        shed = float(x[self.shed].sum())
        short = float(x[self.reg_short] + x[self.op_short])
        cost = energy + s.voll * STEP_HOURS * shed + s.reserve_penalty * STEP_HOURS * short
        reg = float(x[self.r_reg].sum())
        op = reg + float(x[self.r_spin].sum())
        return np.array([max(cost, 0.0), max(shed, 0.0), max(reg, 0.0), max(op, 0.0)])

    def dispatch(self, x: np.ndarray) -> np.ndarray:
        p = np.zeros(self.system.n_generators)
        p[self.on] = x[self.p]
        return p


def build_sced(
    system: SystemModel, commitment: np.ndarray, prev: DispatchState | None, realization: Realization | np.ndarray
) -> LpProblem:
    layout = ScedLayout(system, commitment)
    values = realization.as_array() if isinstance(realization, Realization) else realization
    return layout.problem(None if prev is None else prev.p, values)


def _solve_layout(layout: ScedLayout, prev_p, values, basis: Basis | None = None):
    prob = layout.problem(prev_p, values)
    sol = warm_hint(prob, basis) if basis is not None else solve(prob)
    if sol.status is not Status.OPTIMAL:
        raise ScedError(f"dispatch LP returned {sol.status.value}; slacks should make this impossible")
    return sol


def solve_sced(
    system: SystemModel, commitment: np.ndarray, prev: DispatchState | None, realization: Realization | np.ndarray
) -> tuple[DispatchState, QoiSample]:
    layout = ScedLayout(system, commitment)
    values = realization.as_array() if isinstance(realization, Realization) else realization
    sol = _solve_layout(layout, None if prev is None else prev.p, values)
    return DispatchState(layout.dispatch(sol.primal)), QoiSample(*layout.qoi(sol.primal))


def initial_dispatch(system: SystemModel, commitment: np.ndarray, values: np.ndarray) -> DispatchState:
    """Ramp-free dispatch of one step, used as the chain's starting point."""
    layout = ScedLayout(system, commitment)
    sol = _solve_layout(layout, None, values)
    return DispatchState(layout.dispatch(sol.primal))


@dataclass
class SimulationResult:
    qoi: np.ndarray  # (T, 4)
    dispatch: np.ndarray  # (T, G)
    primal: list[np.ndarray] | None = None  # per-step LP solutions when requested


class Simulator:
    """Chains dispatch LPs across steps, reusing layouts and warm bases."""

    def __init__(self, system: SystemModel, schedule: CommitmentSchedule):
        schedule.check(system)
        self.system = system
        self.schedule = schedule
        self._layouts: dict[bytes, ScedLayout] = {}

    def layout(self, commitment: np.ndarray) -> ScedLayout:
        key = np.packbits(commitment).tobytes()
        lay = self._layouts.get(key)
        if lay is None:
            lay = self._layouts[key] = ScedLayout(self.system, commitment)
        return lay

    def run(
        self, y0: DispatchState, trajectory: np.ndarray, start_step: int = 0, keep_primal: bool = False
    ) -> SimulationResult:
        trajectory = np.asarray(trajectory, dtype=float)
        T = trajectory.shape[0]
        if start_step < 0 or start_step + T > STEPS_PER_DAY:
            raise ValueError(f"steps {start_step}..{start_step + T - 1} fall outside the day")
        pmin = self.system.column("p_min")
        G = self.system.n_generators
        qoi = np.empty((T, 4))
        disp = np.empty((T, G))
        prev = np.array(y0.p, dtype=float)
        prev_on = self.schedule.at_step(max(start_step - 1, 0))
        # bases are per run so a scenario's result never depends on another's
        bases: dict[bytes, Basis] = {}
        primal = [] if keep_primal else None
        for t in range(T):
            step = start_step + t
            on = self.schedule.at_step(step)
            if step == start_step or not np.array_equal(on, prev_on):
                entering = on & ~prev_on
                prev = np.where(on, prev, 0.0)
                prev[entering] = pmin[entering]
            lay = self.layout(on)
            key = np.packbits(on).tobytes()
            try:
                sol = _solve_layout(lay, prev, trajectory[t], bases.get(key))
            except Exception as exc:
                raise ScedError(f"dispatch failed at step {step}: {exc}") from exc
            if sol.basis is not None:
                bases[key] = sol.basis
            qoi[t] = lay.qoi(sol.primal)
            if keep_primal:
                primal.append(sol.primal)
            prev = lay.dispatch(sol.primal)
            disp[t] = prev
            prev_on = on
        return SimulationResult(qoi, disp, primal)


def simulate_day(
    system: SystemModel, schedule: CommitmentSchedule, y0: DispatchState, scenario: np.ndarray
) -> np.ndarray:
    """(288, 4) QoI trajectory of one scenario."""
    scenario = np.asarray(scenario, dtype=float)
    if scenario.shape[0] != STEPS_PER_DAY:
        raise ValueError(f"day trajectory needs {STEPS_PER_DAY} steps, got {scenario.shape[0]}")
    return Simulator(system, schedule).run(y0, scenario).qoi
