"""Time-varying weight matrices, delay functions, and skeleton graphs.

Two weight-schedule kinds are supported:

* ``continuous-piecewise-constant``: nonnegative matrices A(t) with zero
  diagonal, switching at a finite breakpoint list and evaluated
  right-continuously.  Interval weights are Lebesgue integrals, computed
  exactly segment by segment.
* ``discrete-sequence``: a finite run B(0), B(1), ... of row-stochastic
  matrices on the integer grid.  Interval weights are sums over the
  inclusive index range [t1, t2].

Arc convention: the influence of agent j on agent i is the entry
``matrix[i][j]`` and the directed arc (j, i).
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvariantViolation, KindError, OutOfRangeError

CONTINUOUS = "continuous-piecewise-constant"
DISCRETE = "discrete-sequence"

ROW_SUM_TOL = 1e-12

DELAY_CONSTANT = "constant"
DELAY_PIECEWISE = "piecewise-constant"
DELAY_SAWTOOTH = "sawtooth"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class WeightSchedule:
    """Piecewise-constant weight matrix A(t) on [0, horizon]."""

    kind: str
    breakpoints: tuple[float, ...]
    segments: np.ndarray  # (S, n, n), read-only
    horizon: float

    def __post_init__(self):
        segs = np.asarray(self.segments, dtype=float)
        if segs.ndim != 3 or segs.shape[1] != segs.shape[2] or segs.shape[0] == 0:
            raise InvariantViolation("segments must be a nonempty stack of square matrices")
        n = segs.shape[1]
        if np.any(segs < 0):
            raise InvariantViolation("weights must be nonnegative on every segment")
        if self.kind == CONTINUOUS:
            if len(self.breakpoints) != segs.shape[0]:
                raise InvariantViolation("one matrix per breakpoint segment expected")
            if self.breakpoints[0] != 0.0:
                raise InvariantViolation("breakpoint list must start at 0")
            if any(b >= c for b, c in zip(self.breakpoints, self.breakpoints[1:])):
                raise InvariantViolation("breakpoints must be strictly increasing")
            if self.horizon < self.breakpoints[-1]:
                raise InvariantViolation("horizon must cover the last breakpoint")
            diag = segs[:, np.arange(n), np.arange(n)]
            if np.any(diag != 0.0):
                raise InvariantViolation("continuous schedules use zero self-weights")
        elif self.kind == DISCRETE:
            if self.breakpoints:
                raise InvariantViolation("discrete schedules use the implicit integer grid")
            if self.horizon != segs.shape[0] - 1:
                raise InvariantViolation("discrete horizon is the last matrix index")
            rows = segs.sum(axis=2)
            if np.max(np.abs(rows - 1.0)) > ROW_SUM_TOL:
                raise InvariantViolation("discrete rows must sum to 1 within 1e-12")
        else:
            raise KindError(f"unknown schedule kind: {self.kind!r}")
        object.__setattr__(self, "segments", _readonly(segs))

    # -- constructors -------------------------------------------------

    @classmethod
    def continuous(cls, breakpoints: Sequence[float], matrices, horizon: float) -> "WeightSchedule":
        return cls(CONTINUOUS, tuple(float(b) for b in breakpoints), np.asarray(matrices, dtype=float), float(horizon))

    @classmethod
    def constant(cls, matrix, horizon: float) -> "WeightSchedule":
        return cls.continuous((0.0,), np.asarray(matrix, dtype=float)[None, :, :], horizon)

    @classmethod
    def discrete(cls, matrices) -> "WeightSchedule":
        segs = np.asarray(matrices, dtype=float)
        return cls(DISCRETE, (), segs, float(segs.shape[0] - 1))

    # -- queries -------------------------------------------------------

    @property
    def agent_count(self) -> int:
        return self.segments.shape[1]

    @property
    def is_continuous(self) -> bool:
        return self.kind == CONTINUOUS

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE

    def segment_index(self, t: float) -> int:
        if self.is_discrete:
            k = round(t)
            if abs(t - k) > 1e-9:
                raise OutOfRangeError(f"discrete schedules are defined at integer times, got {t}")
            if not 0 <= k <= self.horizon:
                raise OutOfRangeError(f"time {t} outside horizon [0, {self.horizon}]")
            return int(k)
        if not 0.0 <= t <= self.horizon:
            raise OutOfRangeError(f"time {t} outside horizon [0, {self.horizon}]")
        return bisect_right(self.breakpoints, t) - 1

    def evaluate(self, t: float) -> np.ndarray:
        """Active matrix at time t (right-continuous at breakpoints)."""
        return self.segments[self.segment_index(t)]

    def integrate_weights(self, t1: float, t2: float) -> np.ndarray:
        """Interval weight matrix over [t1, t2].

        Continuous kind: the exact Lebesgue integral.  Discrete kind:
        the sum over the inclusive integer range [t1, t2].
        """
        if t1 > t2:
            raise ValueError(f"reversed interval [{t1}, {t2}]")
        if self.is_discrete:
            k1, k2 = self.segment_index(t1), self.segment_index(t2)
            return self.segments[k1 : k2 + 1].sum(axis=0)
        if t1 < 0.0 or t2 > self.horizon:
            raise OutOfRangeError(f"interval [{t1}, {t2}] outside horizon [0, {self.horizon}]")
        total = np.zeros_like(self.segments[0])
        bps = list(self.breakpoints) + [self.horizon]
        for i, mat in enumerate(self.segments):
            lo = max(bps[i], t1)
            hi = min(bps[i + 1], t2)
            if hi > lo:
                total += (hi - lo) * mat
        return total

    def alpha(self, t: float) -> np.ndarray:
        """Per-agent exit rates: row sums of off-diagonal weights at t."""
        a = self.evaluate(t)
        return a.sum(axis=1) - np.diag(a)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.agent_count,
            "kind": self.kind,
            "breakpoints": list(self.breakpoints),
            "segments": [m.tolist() for m in self.segments],
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WeightSchedule":
        kind = data["kind"]
        segs = np.asarray(data["segments"], dtype=float)
        if kind == DISCRETE:
            return cls.discrete(segs)
        return cls.continuous(data["breakpoints"], segs, data["horizon"])


@dataclass(frozen=True)
class DelaySchedule:
    """Per-link delay functions h_ij(t), all bounded by ``bound``.

    ``constant``: one matrix of delays.  ``piecewise-constant``:
    breakpointed matrices.  ``sawtooth``: integer offsets so that
    h_ij(t) = t - k + offsets[k][i][j] on [k, k+1), which freezes the
    delayed argument at the integer grid point k - offsets[k][i][j].
    """

    kind: str
    bound: float
    matrices: np.ndarray  # constant: (1,n,n); piecewise: (S,n,n); sawtooth: (K,n,n) integral
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise InvariantViolation("delay data must be a stack of square matrices")
        if self.bound < 0:
            raise InvariantViolation("delay bound must be nonnegative")
        if np.any(mats < 0):
            raise InvariantViolation("delays must be nonnegative")
        if self.kind == DELAY_CONSTANT:
            if mats.shape[0] != 1 or self.breakpoints:
                raise InvariantViolation("constant delays use a single matrix")
            if np.any(mats > self.bound + 1e-12):
                raise InvariantViolation("delay exceeds the declared bound")
        elif self.kind == DELAY_PIECEWISE:
            if len(self.breakpoints) != mats.shape[0] or not self.breakpoints or self.breakpoints[0] != 0.0:
                raise InvariantViolation("piecewise delays need breakpoints starting at 0")
            if any(b >= c for b, c in zip(self.breakpoints, self.breakpoints[1:])):
                raise InvariantViolation("delay breakpoints must be strictly increasing")
            if np.any(mats > self.bound + 1e-12):
                raise InvariantViolation("delay exceeds the declared bound")
        elif self.kind == DELAY_SAWTOOTH:
            if np.any(mats != np.round(mats)):
                raise InvariantViolation("sawtooth offsets must be integers")
            # h(t) sweeps [offset, offset + 1) on each unit interval.
            if np.any(mats + 1.0 > self.bound + 1e-12):
                raise InvariantViolation("sawtooth offset + 1 exceeds the declared bound")
        else:
            raise KindError(f"unknown delay kind: {self.kind!r}")
        object.__setattr__(self, "matrices", _readonly(mats))

    # -- constructors -------------------------------------------------

    @classmethod
    def none(cls, n: int) -> "DelaySchedule":
        return cls(DELAY_CONSTANT, 0.0, np.zeros((1, n, n)))

    @classmethod
    def constant(cls, matrix, bound: float | None = None) -> "DelaySchedule":
        mat = np.asarray(matrix, dtype=float)
        if bound is None:
            bound = float(mat.max()) if mat.size else 0.0
        return cls(DELAY_CONSTANT, float(bound), mat[None, :, :])

    @classmethod
    def uniform(cls, n: int, delay: float, bound: float | None = None) -> "DelaySchedule":
        return cls.constant(np.full((n, n), float(delay)), bound)

    @classmethod
    def piecewise(cls, breakpoints: Sequence[float], matrices, bound: float | None = None) -> "DelaySchedule":
        mats = np.asarray(matrices, dtype=float)
        if bound is None:
            bound = float(mats.max()) if mats.size else 0.0
        return cls(DELAY_PIECEWISE, float(bound), mats, tuple(float(b) for b in breakpoints))

    @classmethod
    def sawtooth(cls, offsets, bound: float | None = None) -> "DelaySchedule":
        offs = np.asarray(offsets, dtype=float)
        if bound is None:
            bound = float(offs.max()) + 1.0 if offs.size else 1.0
        return cls(DELAY_SAWTOOTH, float(bound), offs)

    # -- queries -------------------------------------------------------

    @property
    def agent_count(self) -> int:
        return self.matrices.shape[1]

    def delay_at(self, t: float) -> np.ndarray:
        if self.kind == DELAY_CONSTANT:
            return self.matrices[0]
        if self.kind == DELAY_PIECEWISE:
            i = bisect_right(self.breakpoints, t) - 1
            if i < 0:
                raise OutOfRangeError(f"time {t} precedes the delay schedule")
            return self.matrices[i]
        k = int(np.floor(t))
        if not 0 <= k < self.matrices.shape[0]:
            raise OutOfRangeError(f"time {t} outside the sawtooth offset table")
        return (t - k) + self.matrices[k]

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        data = {"n": self.agent_count, "kind": self.kind, "bound": self.bound}
        if self.kind == DELAY_CONSTANT:
            data["delays"] = self.matrices[0].tolist()
        elif self.kind == DELAY_PIECEWISE:
            data["breakpoints"] = list(self.breakpoints)
            data["matrices"] = [m.tolist() for m in self.matrices]
        else:
            data["offsets"] = [m.astype(int).tolist() for m in self.matrices]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "DelaySchedule":
        kind = data["kind"]
        bound = data.get("bound")
        if kind == DELAY_CONSTANT:
            return cls.constant(data["delays"], bound)
        if kind == DELAY_PIECEWISE:
            return cls.piecewise(data["breakpoints"], data["matrices"], bound)
        if kind == DELAY_SAWTOOTH:
            return cls.sawtooth(data["offsets"], bound)
        raise KindError(f"unknown delay kind: {kind!r}")


@dataclass(frozen=True)
class SkeletonGraph:
    """Arcs (j, i) whose source weight satisfies matrix[i][j] >= threshold."""

    node_count: int
    arcs: frozenset[tuple[int, int]]
    threshold: float

    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.node_count)]
        for j, i in self.arcs:
            out[j].append(i)
        return out

    def predecessors(self) -> list[list[int]]:
        inc: list[list[int]] = [[] for _ in range(self.node_count)]
        for j, i in self.arcs:
            inc[i].append(j)
        return inc


def epsilon_skeleton(matrix, epsilon: float) -> SkeletonGraph:
    """Keep only arcs of weight >= epsilon; the diagonal is ignored."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    mat = np.asarray(matrix, dtype=float)
    n = mat.shape[0]
    arcs = {(j, i) for i in range(n) for j in range(n) if i != j and mat[i, j] >= epsilon}
    return SkeletonGraph(n, frozenset(arcs), float(epsilon))


def _reachable(start: int, succ: list[list[int]]) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in succ[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def is_quasi_strongly_connected(graph: SkeletonGraph) -> tuple[bool, int | None]:
    """True iff some root reaches every node along arcs (j, i) read j -> i."""
    n = graph.node_count
    if n == 0:
        return True, None
    succ = graph.successors()
    for root in range(n):
        if len(_reachable(root, succ)) == n:
            return True, root
    return False, None


def is_strongly_connected(graph: SkeletonGraph) -> bool:
    n = graph.node_count
    if n <= 1:
        return True
    if len(_reachable(0, graph.successors())) != n:
        return False
    return len(_reachable(0, graph.predecessors())) == n


def persistent_graph_estimate(schedule: WeightSchedule, growth_threshold: float) -> tuple[SkeletonGraph, np.ndarray]:
    """Arcs whose total weight over the whole horizon reaches the threshold.

    A finite-horizon surrogate for divergent-integral persistence; the
    full table of totals is returned so callers can judge the margin.
    """
    if growth_threshold <= 0:
        raise ValueError("growth_threshold must be positive")
    if schedule.is_discrete:
        totals = schedule.segments.sum(axis=0)
    else:
        totals = schedule.integrate_weights(0.0, schedule.horizon)
    totals = totals.copy()
    np.fill_diagonal(totals, 0.0)
    return epsilon_skeleton(totals, growth_threshold), totals


def make_intermittent(base, on_intervals: Sequence[tuple[float, float]], horizon: float | None = None) -> WeightSchedule:
    """Continuous schedule equal to ``base`` on the on-intervals, 0 elsewhere."""
    base = np.asarray(base, dtype=float)
    n = base.shape[0]
    intervals = [(float(a), float(b)) for a, b in on_intervals]
    for a, b in intervals:
        if b <= a:
            raise ValueError(f"empty or reversed on-interval [{a}, {b})")
    for (a1, b1), (a2, b2) in zip(intervals, intervals[1:]):
        if a2 < b1:
            raise ValueError("on-intervals must be disjoint and increasing")
    if intervals and intervals[0][0] < 0.0:
        raise ValueError("on-intervals must start at or after 0")
    end = intervals[-1][1] if intervals else 0.0
    if horizon is None:
        horizon = end
    if horizon < end:
        raise ValueError("horizon must cover the last on-interval")
    zero = np.zeros((n, n))
    breakpoints: list[float] = []
    segments: list[np.ndarray] = []
    cursor = 0.0
    for a, b in intervals:
        if a > cursor:
            breakpoints.append(cursor)
            segments.append(zero)
        breakpoints.append(a)
        segments.append(base)
        cursor = b
    if cursor < horizon or not intervals:
        breakpoints.append(cursor)
        segments.append(zero)
    return WeightSchedule.continuous(breakpoints, np.stack(segments), horizon)


def save_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj.to_dict(), fh, indent=2, sort_keys=True)


def load_schedule(path) -> WeightSchedule:
    with open(path, encoding="utf-8") as fh:
        return WeightSchedule.from_dict(json.load(fh))


def load_delays(path) -> DelaySchedule:
    with open(path, encoding="utf-8") as fh:
        return DelaySchedule.from_dict(json.load(fh))
