"""Simulators for delayed averaging dynamics and their variants.

The core system moves each agent toward delayed neighbor values,

    dx_i/dt = sum_j a_ij(t) (x_j(t - h_ij(t)) - x_i(t)) + inputs,

with optional per-agent damping, exogenous disturbances, affine source
terms (leader attraction, target selectors) and positive nonlinear
coupling gains.  Discrete-time averaging uses the same data model on the
integer grid.

Two integration schemes are provided:

* ``exact-exponential``: when breakpoints, delays and the horizon align
  on a common rational grid, each step solves the segment dynamics in
  closed form.  Couplings with zero delay are integrated through the
  matrix exponential of the segment; couplings with positive delay read
  the stored grid history, held constant over the step.  The samples
  are then an exact solution of a delayed system from the same class
  (held lookups are themselves admissible bounded delays), so
  structural properties can be asserted at machine precision.
* ``rk4``: a fixed-step 4th-order fallback with linear interpolation of
  the history, used whenever exact alignment is impossible.

Determinism: identical inputs produce bit-identical trajectories.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import (
    CouplingContractError,
    InvariantViolation,
    KindError,
    OutOfRangeError,
)
from .geometry import point_ball_distance, point_hull_distance
from .schedule import (
    DELAY_CONSTANT,
    DELAY_PIECEWISE,
    DELAY_SAWTOOTH,
    DelaySchedule,
    WeightSchedule,
)
from .timegrid import as_fraction, choose_step, exact_index

HISTORY_HOLD = "hold-state"
HISTORY_ZERO = "zero"

SCHEME_EXACT = "exact-exponential"
SCHEME_RK4 = "rk4"
SCHEME_DISCRETE = "discrete"


# ---------------------------------------------------------------------------
# piecewise-constant vector signals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseVector:
    """Right-continuous piecewise-constant signal with array values."""

    breakpoints: tuple[float, ...]
    values: np.ndarray  # (S, ...) with one leading entry per breakpoint

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if len(self.breakpoints) != vals.shape[0] or vals.shape[0] == 0:
            raise InvariantViolation("one value block per breakpoint expected")
        if any(b >= c for b, c in zip(self.breakpoints, self.breakpoints[1:])):
            raise InvariantViolation("breakpoints must be strictly increasing")
        vals = np.ascontiguousarray(vals)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))

    @classmethod
    def constant(cls, value, start: float = 0.0) -> "PiecewiseVector":
        return cls((float(start),), np.asarray(value, dtype=float)[None, ...])

    @property
    def domain_start(self) -> float:
        return self.breakpoints[0]

    def segment_at(self, t: float) -> int:
        i = bisect_right(self.breakpoints, t) - 1
        if i < 0:
            raise OutOfRangeError(f"time {t} precedes the signal domain ({self.breakpoints[0]})")
        return i

    def value_at(self, t: float) -> np.ndarray:
        return self.values[self.segment_at(t)]


def merge_piecewise(a: PiecewiseVector, b: PiecewiseVector, combine) -> PiecewiseVector:
    """Pointwise combination on the union of the two breakpoint grids."""
    cuts = sorted(set(a.breakpoints) | set(b.breakpoints))
    start = max(a.domain_start, b.domain_start)
    cuts = [t for t in cuts if t >= start]
    if not cuts or cuts[0] != start:
        cuts.insert(0, start)
    vals = [combine(a.value_at(t), b.value_at(t)) for t in cuts]
    return PiecewiseVector(tuple(cuts), np.stack(vals))


class DisturbanceSignal(PiecewiseVector):
    """Per-agent piecewise-constant exogenous input f_i(t)."""

    @classmethod
    def zero(cls, n: int, start: float = 0.0) -> "DisturbanceSignal":
        return cls((float(start),), np.zeros((1, n)))

    @classmethod
    def pulse_train(
        cls,
        pattern,
        times: Sequence[float],
        width: float,
        masses: Sequence[float],
        start: float = 0.0,
    ) -> "DisturbanceSignal":
        """Rectangular pulses with prescribed per-pulse L1 masses.

        Each pulse occupies [s, s + width) with amplitude mass/width in
        the direction of ``pattern`` (a per-agent vector); the total
        input mass over a pulse equals ``mass * max|pattern|``.
        """
        if width <= 0:
            raise ValueError("pulse width must be positive")
        pat = np.asarray(pattern, dtype=float)
        if len(times) != len(masses):
            raise ValueError("one mass per pulse time expected")
        for s, s_next in zip(times, times[1:]):
            if s_next < s + width:
                raise ValueError("pulses must not overlap")
        zero = np.zeros_like(pat)

        def emit(cuts: list[float], vals: list[np.ndarray], t: float, v: np.ndarray) -> None:
            if cuts and cuts[-1] == t:
                vals[-1] = v
            else:
                cuts.append(t)
                vals.append(v)

        cuts: list[float] = [float(start)]
        vals: list[np.ndarray] = [zero]
        for s, mass in zip(times, masses):
            s = float(s)
            if s < cuts[-1]:
                raise ValueError("pulse times must be increasing and after the start")
            emit(cuts, vals, s, (mass / width) * pat)
            emit(cuts, vals, s + width, zero)
        return cls(tuple(cuts), np.stack(vals))


@dataclass(frozen=True)
class CouplingFunction:
    """Positive scalar gain psi(y, z) applied to the difference y - z.

    ``gain`` is either a single callable used on every link or a mapping
    from (i, j) to callables.  Discrete-time algorithms additionally
    require gains in (0, 1].
    """

    gain: Callable[[np.ndarray, np.ndarray], float] | Mapping[tuple[int, int], Callable]
    lower: float | None = None
    upper: float | None = None

    def gain_at(self, i: int, j: int, y: np.ndarray, z: np.ndarray) -> float:
        fn = self.gain[(i, j)] if isinstance(self.gain, Mapping) else self.gain
        return float(fn(y, z))


def inverse_square_gain(y, z) -> float:
    """The bounded gain 1 / (1 + |y - z|^2), positive and at most 1."""
    d = np.asarray(y, dtype=float) - np.asarray(z, dtype=float)
    return 1.0 / (1.0 + float(d @ d))


@dataclass(frozen=True)
class LeaderConfig:
    """Static leaders and a piecewise-constant attraction table b_ik(t)."""

    positions: np.ndarray  # (L, m)
    attraction: PiecewiseVector  # values (S, n, L)

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.shape[0] == 0:
            raise ValueError("leader set must not be empty")
        if np.any(self.attraction.values < 0):
            raise InvariantViolation("attraction weights must be nonnegative")
        if self.attraction.values.shape[-1] != pos.shape[0]:
            raise InvariantViolation("one attraction column per leader expected")
        pos = np.ascontiguousarray(pos)
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    @classmethod
    def constant_attraction(cls, positions, attraction, start: float = 0.0) -> "LeaderConfig":
        b = np.atleast_2d(np.asarray(attraction, dtype=float))
        return cls(np.asarray(positions, dtype=float), PiecewiseVector.constant(b, start))

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def damping(self) -> PiecewiseVector:
        """d_i(t): row sums of the attraction table."""
        return PiecewiseVector(self.attraction.breakpoints, self.attraction.values.sum(axis=2))

    def source(self) -> PiecewiseVector:
        """Per-agent drive toward the leaders, sum_k b_ik(t) x_k."""
        vals = np.einsum("snl,lm->snm", self.attraction.values, self.positions)
        return PiecewiseVector(self.attraction.breakpoints, vals)

    def common_target(self) -> np.ndarray:
        first = self.positions[0]
        if np.max(np.abs(self.positions - first)) > 1e-12:
            raise ValueError("leaders do not share a common position")
        return first


@dataclass(frozen=True)
class TargetSet:
    """Convex target (ball or vertex polytope) with per-agent selectors."""

    kind: str  # "ball" | "polytope"
    selector: PiecewiseVector  # values (S, n, m)
    center: np.ndarray | None = None
    radius: float | None = None
    vertices: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("ball", "polytope"):
            raise KindError(f"unknown target kind {self.kind!r}")
        sel = self.selector.values
        if sel.ndim != 3:
            raise InvariantViolation("selector values must be (segments, agents, dim)")
        for block in sel:
            for point in block:
                if self.distance(point) > 1e-9:
                    raise InvariantViolation("selector values must lie in the target set")

    @classmethod
    def ball(cls, center, radius: float, selector: PiecewiseVector) -> "TargetSet":
        return cls("ball", selector, center=np.asarray(center, dtype=float), radius=float(radius))

    @classmethod
    def polytope(cls, vertices, selector: PiecewiseVector) -> "TargetSet":
        return cls("polytope", selector, vertices=np.asarray(vertices, dtype=float))

    def distance(self, point) -> float:
        if self.kind == "ball":
            return point_ball_distance(point, self.center, self.radius)
        return point_hull_distance(point, self.vertices)


# ---------------------------------------------------------------------------
# initial data and trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InitialCondition:
    """Start time, start state and the prehistory on [t* - hbar, t*).

    ``history`` is a PiecewiseVector covering the prehistory window, or
    one of the fills "hold-state" (constant, equal to the start state)
    and "zero".  The solution is right-continuous at the start time by
    convention, so the history never includes t* itself.
    """

    start: float
    state: np.ndarray
    history: PiecewiseVector | str = HISTORY_HOLD

    def __post_init__(self):
        st = np.asarray(self.state, dtype=float)
        if st.ndim not in (1, 2):
            raise InvariantViolation("state must be (n,) or (n, m)")
        st = np.ascontiguousarray(st)
        st.flags.writeable = False
        object.__setattr__(self, "state", st)
        if isinstance(self.history, str) and self.history not in (HISTORY_HOLD, HISTORY_ZERO):
            raise ValueError(f"unknown history fill {self.history!r}")

    @classmethod
    def resting(cls, state, start: float = 0.0) -> "InitialCondition":
        return cls(float(start), np.asarray(state, dtype=float), HISTORY_HOLD)

    @classmethod
    def zero_history(cls, state, start: float = 0.0) -> "InitialCondition":
        return cls(float(start), np.asarray(state, dtype=float), HISTORY_ZERO)

    @classmethod
    def with_history(cls, state, history: PiecewiseVector, start: float = 0.0) -> "InitialCondition":
        return cls(float(start), np.asarray(state, dtype=float), history)

    @classmethod
    def from_window(cls, window, start: float = 0) -> "InitialCondition":
        """Discrete initial data: window rows are x(t*-W+1), ..., x(t*)."""
        win = np.asarray(window, dtype=float)
        if win.ndim < 2:
            raise InvariantViolation("window must stack at least the start state")
        state = win[-1]
        if win.shape[0] == 1:
            return cls(float(start), state, HISTORY_HOLD)
        past = win[:-1]
        cuts = tuple(float(start) - (win.shape[0] - 1) + k for k in range(win.shape[0] - 1))
        return cls(float(start), state, PiecewiseVector(cuts, past))

    @property
    def matrix(self) -> np.ndarray:
        """State as (n, m); scalar agents become single-coordinate rows."""
        return self.state[:, None] if self.state.ndim == 1 else self.state

    def history_value(self, t: float) -> np.ndarray:
        if isinstance(self.history, PiecewiseVector):
            v = self.history.value_at(t)
            return v[:, None] if v.ndim == 1 else v
        if self.history == HISTORY_ZERO:
            return np.zeros_like(self.matrix)
        return self.matrix


@dataclass(frozen=True)
class Trajectory:
    """Sampled multi-agent state, prehistory samples included.

    Rows before ``start_index`` sample the prehistory; the row at
    ``start_index`` is the start state.
    """

    times: np.ndarray  # (T,)
    states: np.ndarray  # (T, n, m)
    start_index: int
    scheme: str
    step: float
    delay_bound: float

    @property
    def agent_count(self) -> int:
        return self.states.shape[1]

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    @property
    def solution_times(self) -> np.ndarray:
        return self.times[self.start_index :]

    @property
    def solution_states(self) -> np.ndarray:
        return self.states[self.start_index :]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def index_at(self, t: float) -> int:
        i = int(np.searchsorted(self.times, t - 1e-9))
        if i >= len(self.times) or abs(self.times[i] - t) > 1e-9:
            raise OutOfRangeError(f"time {t} is not a sample time")
        return i

    def state_at(self, t: float) -> np.ndarray:
        return self.states[self.index_at(t)]

    def scalar_values(self) -> np.ndarray:
        """States flattened to (T, n); requires one-dimensional agents."""
        if self.dim != 1:
            raise KindError("scalar view requires one-dimensional agent values")
        return self.states[:, :, 0]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,agent,coord,value\n")
            for t, block in zip(self.times, self.states):
                for agent in range(block.shape[0]):
                    for coord in range(block.shape[1]):
                        fh.write(f"{t!r},{agent},{coord},{block[agent, coord]!r}\n")


# ---------------------------------------------------------------------------
# exact grid planning
# ---------------------------------------------------------------------------


class _NotAlignable(Exception):
    pass


def _pw_anchor_spans(breakpoints: Sequence[float], t0: Fraction, tend: Fraction) -> list[Fraction]:
    spans = []
    for b in breakpoints:
        bf = as_fraction(b)
        if bf is None:
            raise _NotAlignable
        if t0 < bf <= tend:
            spans.append(bf - t0)
    return spans


def _segment_of_step(breakpoints: Sequence[float], t0: Fraction, delta: Fraction, steps: int) -> np.ndarray:
    fracs = []
    for b in breakpoints:
        bf = as_fraction(b)
        if bf is None:
            raise _NotAlignable
        fracs.append(bf)
    s0 = -1
    for i, bf in enumerate(fracs):
        if bf <= t0:
            s0 = i
        else:
            break
    if s0 < 0:
        raise OutOfRangeError("signal domain starts after the simulation start")
    out = np.full(max(steps, 1), s0, dtype=int)
    tend = t0 + steps * delta
    for i in range(s0 + 1, len(fracs)):
        if fracs[i] > tend:
            break
        gi = exact_index(fracs[i], t0, delta)
        if gi is None:
            raise _NotAlignable
        if gi < steps:
            out[gi if gi > 0 else 0 :] = i
    return out


def _normalize_values(values: np.ndarray, n: int, m: int) -> np.ndarray:
    """Broadcast (S, n) signal blocks to (S, n, m) coordinate blocks."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 2:
        v = np.repeat(v[:, :, None], m, axis=2)
    if v.shape[1] != n or v.shape[2] != m:
        raise InvariantViolation("signal shape does not match the simulated system")
    return v


@dataclass
class _ExactPlan:
    t0: Fraction
    delta: Fraction
    steps: int
    n: int
    m: int
    a_idx: np.ndarray
    a_segs: np.ndarray
    f_idx: np.ndarray | None
    f_vals: np.ndarray | None
    d_idx: np.ndarray | None
    d_vals: np.ndarray | None
    r_idx: np.ndarray | None
    r_vals: np.ndarray | None
    delay_kind: str
    off_tables: np.ndarray | None  # (Sd, n, n) lookback in steps (held), -1 for live
    off_idx: np.ndarray | None
    saw_rows: np.ndarray | None  # (K, n, n) absolute grid index of the frozen lookup
    saw_unit: np.ndarray | None  # (steps,) absolute unit-interval index
    lookback: int  # prehistory rows M

    def times(self) -> np.ndarray:
        t0, d = self.t0, self.delta
        pre = [float(t0 - (self.lookback - q) * d) for q in range(self.lookback)]
        main = [float(t0 + k * d) for k in range(self.steps + 1)]
        return np.array(pre + main)


def _plan_exact(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    initial: InitialCondition,
    t_end: float,
    dt: float,
    disturbance: PiecewiseVector | None,
    damping: PiecewiseVector | None,
    source: PiecewiseVector | None,
) -> _ExactPlan:
    t0 = as_fraction(initial.start)
    tend = as_fraction(t_end)
    dtf = as_fraction(dt)
    if t0 is None or tend is None or dtf is None or dtf <= 0:
        raise _NotAlignable
    n = schedule.agent_count
    x0 = initial.matrix
    m = x0.shape[1]

    anchors: list[Fraction] = []
    anchors += _pw_anchor_spans(schedule.breakpoints, t0, tend)
    for sig in (disturbance, damping, source):
        if sig is not None:
            anchors += _pw_anchor_spans(sig.breakpoints, t0, tend)

    if delays.kind == DELAY_SAWTOOTH:
        if t0 < 0:
            raise OutOfRangeError("sawtooth delays are defined from time 0")
        anchors.append(Fraction(1))
        frac_part = t0 - Fraction(math.floor(t0))
        if frac_part:
            anchors.append(Fraction(1) - frac_part)
    else:
        anchors += _pw_anchor_spans(delays.breakpoints, t0, tend)
        for h in np.unique(delays.matrices):
            hf = as_fraction(float(h))
            if hf is None:
                raise _NotAlignable
            if hf > 0:
                anchors.append(hf)

    delta = choose_step(tend - t0, dtf, anchors)
    if delta is None:
        raise _NotAlignable
    steps = int((tend - t0) / delta)

    a_idx = _segment_of_step(schedule.breakpoints, t0, delta, steps)

    def _signal(sig: PiecewiseVector | None):
        if sig is None:
            return None, None
        idx = _segment_of_step(sig.breakpoints, t0, delta, steps)
        return idx, _normalize_values(sig.values, n, m)

    f_idx, f_vals = _signal(disturbance)
    r_idx, r_vals = _signal(source)
    d_idx, d_vals = (None, None)
    if damping is not None:
        d_idx = _segment_of_step(damping.breakpoints, t0, delta, steps)
        d_vals = np.asarray(damping.values, dtype=float)
        if d_vals.ndim != 2 or d_vals.shape[1] != n:
            raise InvariantViolation("damping values must be (segments, agents)")
        if np.any(d_vals < 0):
            raise ValueError("damping must be nonnegative")

    off_tables = off_idx = saw_rows = saw_unit = None
    if delays.kind == DELAY_SAWTOOTH:
        offs = delays.matrices.astype(int)
        L = int(Fraction(1) / delta)
        ceil_t0 = math.ceil(t0)
        c0 = int((Fraction(ceil_t0) - t0) / delta)
        first_unit = math.floor(t0)
        # grid indices at which the active unit interval changes
        boundaries = [(z - ceil_t0) * L + c0 for z in range(first_unit + 1, math.floor(tend) + 1)]
        saw_unit = first_unit + np.searchsorted(np.array(boundaries), np.arange(max(steps, 1)), side="right")
        if steps and int(saw_unit.max()) >= offs.shape[0]:
            raise OutOfRangeError("sawtooth offset table shorter than the horizon")
        units = np.arange(offs.shape[0])
        saw_rows = ((units[:, None, None] - offs) - ceil_t0) * L + c0
        lookback = int(max(0, -saw_rows[saw_unit].min())) if steps else 0
    else:
        if delays.kind == DELAY_CONSTANT:
            off_idx = np.zeros(max(steps, 1), dtype=int)
        else:
            off_idx = _segment_of_step(delays.breakpoints, t0, delta, steps)
        tables = []
        for mat in delays.matrices:
            tab = np.empty((n, n), dtype=int)
            for i in range(n):
                for j in range(n):
                    hf = as_fraction(float(mat[i, j]))
                    if hf is None:
                        raise _NotAlignable
                    if hf == 0:
                        tab[i, j] = -1  # live coupling
                    else:
                        k = hf / delta
                        if k.denominator != 1:
                            raise _NotAlignable
                        tab[i, j] = int(k)
            tables.append(tab)
        off_tables = np.stack(tables)
        lookback = int(max(0, off_tables.max()))

    return _ExactPlan(
        t0=t0,
        delta=delta,
        steps=steps,
        n=n,
        m=m,
        a_idx=a_idx,
        a_segs=schedule.segments,
        f_idx=f_idx,
        f_vals=f_vals,
        d_idx=d_idx,
        d_vals=d_vals,
        r_idx=r_idx,
        r_vals=r_vals,
        delay_kind=delays.kind,
        off_tables=off_tables,
        off_idx=off_idx,
        saw_rows=saw_rows,
        saw_unit=saw_unit,
        lookback=lookback,
    )


@dataclass
class StepRecord:
    """Per-step quantities needed to rebuild the solution from inputs."""

    gains: np.ndarray  # (steps, n, n): x(t_{k+1}) gains G_k on (f + g)
    disturbance: np.ndarray  # (steps, n, m)
    history_drive: np.ndarray  # (steps, n, m): prehistory-sourced coupling g
    alpha: np.ndarray  # (steps, n): per-agent exit rates


def _run_exact(
    plan: _ExactPlan,
    initial: InitialCondition,
    coupling: CouplingFunction | None,
    record: bool,
) -> tuple[np.ndarray, StepRecord | None]:
    n, m, M, steps = plan.n, plan.m, plan.lookback, plan.steps
    x0 = initial.matrix
    dt = float(plan.delta)

    X = np.empty((M + steps + 1, n, m))
    for q in range(M):
        t_q = plan.t0 - (M - q) * plan.delta
        X[q] = initial.history_value(float(t_q))
    X[M] = x0

    rec = None
    if record:
        rec = StepRecord(
            gains=np.zeros((steps, n, n)),
            disturbance=np.zeros((steps, n, m)),
            history_drive=np.zeros((steps, n, m)),
            alpha=np.zeros((steps, n)),
        )

    cols = np.arange(n)[None, :]
    diag = np.arange(n)
    expm_cache: dict[bytes, tuple[np.ndarray, np.ndarray]] = {}

    for k in range(steps):
        A = plan.a_segs[plan.a_idx[k]]
        state = X[M + k]

        if plan.delay_kind == DELAY_SAWTOOTH:
            rows = M + plan.saw_rows[plan.saw_unit[k]]
            live = np.zeros((n, n), dtype=bool)
        else:
            off = plan.off_tables[plan.off_idx[k]]
            live = off < 0
            rows = M + k - np.where(live, 0, off)
        if rows.min() < 0:
            raise OutOfRangeError("delay lookup before the prehistory start")
        V = X[rows, cols]  # (n, n, m): agent j's value at the resolved lookup

        if coupling is not None:
            psi = np.ones((n, n))
            for i in range(n):
                for j in range(n):
                    if i == j or A[i, j] == 0.0:
                        continue
                    val = coupling.gain_at(i, j, V[i, j], state[i])
                    if not val > 0.0:
                        raise CouplingContractError(f"gain psi[{i},{j}] = {val} is not positive")
                    psi[i, j] = val
            W = A * psi
        else:
            W = A

        held = ~live
        np.fill_diagonal(held, False)
        alpha = W.sum(axis=1) - W[diag, diag]
        beta = alpha.copy()
        if plan.d_vals is not None:
            beta = beta + plan.d_vals[plan.d_idx[k]]

        c = np.einsum("ij,ijm->im", np.where(held, W, 0.0), V)
        g_pre = None
        if record:
            pre_mask = held & (rows < M)
            g_pre = np.einsum("ij,ijm->im", np.where(pre_mask, W, 0.0), V)
        f_k = plan.f_vals[plan.f_idx[k]] if plan.f_vals is not None else None
        if f_k is not None:
            c = c + f_k
        if plan.r_vals is not None:
            c = c + plan.r_vals[plan.r_idx[k]]

        has_live = bool(np.any(live & (W > 0.0)))
        if has_live:
            Mmat = np.where(live, W, 0.0)
            np.fill_diagonal(Mmat, 0.0)
            Mmat[diag, diag] = -beta
            key = Mmat.tobytes()
            hit = expm_cache.get(key)
            if hit is None:
                aug = np.zeros((2 * n, 2 * n))
                aug[:n, :n] = Mmat * dt
                aug[:n, n:] = np.eye(n) * dt
                E = expm(aug)
                hit = (E[:n, :n], E[:n, n:])
                if len(expm_cache) < 512:
                    expm_cache[key] = hit
            F, G = hit
            X[M + k + 1] = F @ state + G @ c
            if record:
                rec.gains[k] = G
        else:
            F = np.exp(-beta * dt)
            G = np.where(beta > 0.0, -np.expm1(-beta * dt) / np.where(beta > 0.0, beta, 1.0), dt)
            X[M + k + 1] = F[:, None] * state + G[:, None] * c
            if record:
                rec.gains[k] = np.diag(G)
        if record:
            rec.alpha[k] = alpha
            if f_k is not None:
                rec.disturbance[k] = f_k
            rec.history_drive[k] = g_pre

    return X, rec


# ---------------------------------------------------------------------------
# RK4 fallback
# ---------------------------------------------------------------------------


def _run_rk4(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    initial: InitialCondition,
    t_end: float,
    dt: float,
    disturbance: PiecewiseVector | None,
    damping: PiecewiseVector | None,
    source: PiecewiseVector | None,
    coupling: CouplingFunction | None,
) -> Trajectory:
    n = schedule.agent_count
    x0 = initial.matrix
    m = x0.shape[1]
    t0 = float(initial.start)

    grid = list(np.arange(t0, t_end, dt)) + [t_end]
    for b in list(schedule.breakpoints) + (list(disturbance.breakpoints) if disturbance else []):
        if t0 < b < t_end:
            grid.append(float(b))
    grid = sorted(set(round(t, 12) for t in grid))

    hbar = delays.bound
    pre_times: list[float] = []
    if hbar > 0:
        q = max(1, int(math.ceil(hbar / dt)))
        pre_times = [t0 - hbar + i * (hbar / q) for i in range(q)]
    times = np.array(pre_times + grid)
    start_index = len(pre_times)

    states = np.empty((len(times), n, m))
    for i, t in enumerate(pre_times):
        states[i] = initial.history_value(t)
    states[start_index] = x0

    known_t = list(times[: start_index + 1])
    known_x = [states[i] for i in range(start_index + 1)]

    def lookup(tau: float, j: int, stage_state: np.ndarray) -> np.ndarray:
        if tau >= known_t[-1]:
            return stage_state[j]
        if tau < t0:
            return initial.history_value(max(tau, t0 - hbar))[j]
        arr_t = np.asarray(known_t)
        i = int(np.searchsorted(arr_t, tau))
        i = min(max(i, 1), len(arr_t) - 1)
        lo, hi = arr_t[i - 1], arr_t[i]
        w = 0.0 if hi == lo else (tau - lo) / (hi - lo)
        return (1 - w) * known_x[i - 1][j] + w * known_x[i][j]

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        A = schedule.evaluate(min(t, schedule.horizon))
        H = delays.delay_at(t)
        out = np.zeros_like(y)
        for i in range(n):
            acc = np.zeros(m)
            rate = 0.0
            for j in range(n):
                if i == j or A[i, j] == 0.0:
                    continue
                xj = lookup(t - H[i, j], j, y)
                w = A[i, j]
                if coupling is not None:
                    val = coupling.gain_at(i, j, xj, y[i])
                    if not val > 0.0:
                        raise CouplingContractError(f"gain psi[{i},{j}] = {val} is not positive")
                    w = w * val
                acc += w * xj
                rate += w
            if damping is not None:
                rate += damping.value_at(t)[i]
            acc -= rate * y[i]
            if disturbance is not None:
                fv = disturbance.value_at(t)
                acc += fv[i] if fv.ndim > 1 else np.full(m, fv[i])
            if source is not None:
                acc += source.value_at(t)[i]
            out[i] = acc
        return out

    for idx in range(start_index, len(times) - 1):
        t, t_next = float(times[idx]), float(times[idx + 1])
        h = t_next - t
        y = states[idx]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        states[idx + 1] = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        known_t.append(t_next)
        known_x.append(states[idx + 1])

    return Trajectory(times, states, start_index, SCHEME_RK4, dt, delays.bound)


# ---------------------------------------------------------------------------
# public simulators
# ---------------------------------------------------------------------------


def _simulate(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    initial: InitialCondition,
    t_end: float,
    dt: float,
    disturbance: PiecewiseVector | None = None,
    damping: PiecewiseVector | None = None,
    source: PiecewiseVector | None = None,
    coupling: CouplingFunction | None = None,
    record: bool = False,
    dt_exact: Fraction | None = None,
):
    if not schedule.is_continuous:
        raise KindError("continuous simulation requires a continuous schedule")
    if dt is None or dt <= 0:
        raise ValueError("the step must be positive")
    if t_end < initial.start:
        raise ValueError("t_end precedes the start time")
    if t_end > schedule.horizon:
        raise OutOfRangeError("t_end exceeds the schedule horizon")
    if schedule.agent_count != delays.agent_count:
        raise InvariantViolation("schedule and delays disagree on the agent count")
    try:
        plan = _plan_exact(schedule, delays, initial, t_end, dt if dt_exact is None else float(dt_exact), disturbance, damping, source)
    except _NotAlignable:
        if dt_exact is not None:
            raise RuntimeError("internal grid reuse failed to align") from None
        traj = _run_rk4(schedule, delays, initial, t_end, dt, disturbance, damping, source, coupling)
        return (traj, None) if record else traj
    if dt_exact is not None and plan.delta != dt_exact:
        raise RuntimeError("internal grid reuse produced a different step")
    X, rec = _run_exact(plan, initial, coupling, record)
    traj = Trajectory(plan.times(), X, plan.lookback, SCHEME_EXACT, float(plan.delta), delays.bound)
    return (traj, rec) if record else traj


def simulate_continuous(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    initial: InitialCondition,
    t_end: float,
    dt: float,
    disturbance: DisturbanceSignal | None = None,
) -> Trajectory:
    """Delayed linear averaging, optionally disturbed."""
    return _simulate(schedule, delays, initial, t_end, dt, disturbance=disturbance)


def simulate_damped(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    damping,
    initial: InitialCondition,
    t_end: float,
    dt: float,
) -> Trajectory:
    """Averaging with an extra per-agent decay -d_i(t) x_i."""
    d = _as_damping(damping, schedule.agent_count)
    return _simulate(schedule, delays, initial, t_end, dt, damping=d)


def simulate_leader_following(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    leader: LeaderConfig,
    initial: InitialCondition,
    t_end: float,
    dt: float,
) -> Trajectory:
    """Dynamics pulled toward a single common leader value."""
    leader.common_target()
    return _simulate(
        schedule,
        delays,
        initial,
        t_end,
        dt,
        damping=leader.damping(),
        source=leader.source(),
    )


def simulate_containment(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    leader: LeaderConfig,
    initial: InitialCondition,
    t_end: float,
    dt: float,
) -> Trajectory:
    """Followers attracted into the convex hull of static leaders."""
    if initial.matrix.shape[1] != leader.dim:
        raise InvariantViolation("follower and leader dimensions differ")
    return _simulate(
        schedule,
        delays,
        initial,
        t_end,
        dt,
        damping=leader.damping(),
        source=leader.source(),
    )


def simulate_target_aggregation(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    target: TargetSet,
    damping,
    initial: InitialCondition,
    t_end: float,
    dt: float,
) -> Trajectory:
    """Dynamics driven toward selected members of a convex target set."""
    d = _as_damping(damping, schedule.agent_count)
    source = merge_piecewise(d, target.selector, lambda dv, sv: dv[:, None] * sv)
    return _simulate(schedule, delays, initial, t_end, dt, damping=d, source=source)


def simulate_nonlinear(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    initial: InitialCondition,
    coupling: CouplingFunction,
    t_end: float,
    dt: float | None = None,
) -> Trajectory:
    """Averaging through positive coupling gains psi_ij(y, z)(y - z)."""
    if schedule.is_discrete:
        steps = int(round(t_end)) - int(round(initial.start))
        return _simulate_discrete(schedule, delays, initial, steps=steps, coupling=coupling)
    if dt is None:
        raise ValueError("continuous nonlinear simulation needs a step")
    return _simulate(schedule, delays, initial, t_end, dt, coupling=coupling)


def simulate_discrete(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    initial: InitialCondition,
    steps: int | None = None,
) -> Trajectory:
    """Exact iteration of the discrete averaging recursion."""
    return _simulate_discrete(schedule, delays, initial, steps=steps)


def _simulate_discrete(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    initial: InitialCondition,
    steps: int | None = None,
    coupling: CouplingFunction | None = None,
) -> Trajectory:
    if not schedule.is_discrete:
        raise KindError("discrete simulation requires a discrete schedule")
    t0 = int(round(initial.start))
    if abs(initial.start - t0) > 1e-9 or t0 < 0:
        raise ValueError("discrete runs start at a nonnegative integer time")
    horizon = int(schedule.horizon)
    if steps is None:
        steps = horizon - t0 + 1
    if t0 + steps - 1 > horizon:
        raise OutOfRangeError("run extends past the last scheduled matrix")
    hbar = int(round(delays.bound))
    if abs(delays.bound - hbar) > 1e-9:
        raise InvariantViolation("discrete runs need an integer delay bound")
    if delays.kind == DELAY_SAWTOOTH:
        raise KindError("sawtooth delays describe continuous time")

    n = schedule.agent_count
    x0 = initial.matrix
    m = x0.shape[1]
    X = np.empty((hbar + steps + 1, n, m))
    for q in range(hbar):
        X[q] = initial.history_value(float(t0 - hbar + q))
    X[hbar] = x0

    for k in range(steps):
        t = t0 + k
        B = schedule.segments[t]
        H = delays.delay_at(float(t))
        if np.any(np.abs(H - np.round(H)) > 1e-9):
            raise InvariantViolation("discrete schedules use integer delays only")
        state = X[hbar + k]
        new = state.copy()
        for i in range(n):
            acc = np.zeros(m)
            for j in range(n):
                if i == j or B[i, j] == 0.0:
                    continue
                lag = int(round(H[i, j]))
                if lag > hbar:
                    raise OutOfRangeError("delay exceeds the declared bound")
                xj = X[hbar + k - lag, j]
                w = B[i, j]
                if coupling is not None:
                    val = coupling.gain_at(i, j, xj, state[i])
                    if not val > 0.0:
                        raise CouplingContractError(f"gain psi[{i},{j}] = {val} is not positive")
                    if val > 1.0 + 1e-12:
                        raise CouplingContractError(f"discrete gains must lie in (0, 1], got {val}")
                    w = w * val
                acc += w * (xj - state[i])
            new[i] = state[i] + acc
        X[hbar + k + 1] = new

    times = np.array([float(t0 - hbar + q) for q in range(hbar + steps + 1)])
    return Trajectory(times, X, hbar, SCHEME_DISCRETE, 1.0, float(hbar))


def _as_damping(damping, n: int) -> PiecewiseVector:
    if damping is None:
        return PiecewiseVector.constant(np.zeros(n))
    if isinstance(damping, PiecewiseVector):
        if np.any(damping.values < 0):
            raise ValueError("damping must be nonnegative")
        return damping
    arr = np.asarray(damping, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if np.any(arr < 0):
        raise ValueError("damping must be nonnegative")
    return PiecewiseVector.constant(arr)


# ---------------------------------------------------------------------------
# helpers built on the simulators
# ---------------------------------------------------------------------------


def initial_from_trajectory(traj: Trajectory, t: float, bound: float | None = None) -> InitialCondition:
    """Restart data at a sample time, history read back from the samples."""
    if bound is None:
        bound = traj.delay_bound
    i = traj.index_at(t)
    state = traj.states[i]
    if bound <= 0:
        return InitialCondition(float(traj.times[i]), state.copy())
    lo = float(traj.times[i]) - bound
    mask = (traj.times >= lo - 1e-12) & (traj.times < traj.times[i] - 1e-12)
    cuts = traj.times[mask]
    vals = traj.states[mask]
    if len(cuts) == 0:
        return InitialCondition(float(traj.times[i]), state.copy())
    history = PiecewiseVector(tuple(float(c) for c in cuts), vals.copy())
    return InitialCondition(float(traj.times[i]), state.copy(), history)


def verify_leader_shift(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    leader: LeaderConfig,
    initial: InitialCondition,
    t_end: float,
    dt: float,
) -> float:
    """Max gap between leader-following and the shifted damped dynamics."""
    x_target = leader.common_target()
    lf = simulate_leader_following(schedule, delays, leader, initial, t_end, dt)
    shifted_state = initial.matrix - x_target[None, :]
    if isinstance(initial.history, PiecewiseVector):
        hist_vals = initial.history.values
        hist_vals = hist_vals[:, :, None] if hist_vals.ndim == 2 else hist_vals
        history: PiecewiseVector | str = PiecewiseVector(
            initial.history.breakpoints, hist_vals - x_target[None, None, :]
        )
    elif initial.history == HISTORY_ZERO:
        history = PiecewiseVector.constant(
            np.zeros_like(shifted_state) - x_target[None, :], initial.start - max(delays.bound, 1.0)
        )
    else:
        history = HISTORY_HOLD
    shifted = InitialCondition(initial.start, shifted_state, history)
    damped = simulate_damped(schedule, delays, leader.damping(), shifted, t_end, dt)
    return float(np.max(np.abs(lf.states - (damped.states + x_target[None, None, :]))))
