"""Connectivity certificates for time-varying weight schedules.

A certificate is a witnessing time sequence (t_p) together with the
constants that make a connectivity notion checkable:

* AQSC / UQSC: each interval union graph is quasi-strongly
  epsilon-connected, and the per-interval per-pair weight is bounded by
  a finite ell.
* NITS: per-interval weights of opposite arcs are commensurate within a
  ratio K, plus the same ell-boundedness.

All "for all t" conditions are verified on the finite horizon only; the
certificate records the horizon it was verified on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import KindError, OutOfRangeError
from .schedule import (
    SkeletonGraph,
    WeightSchedule,
    epsilon_skeleton,
    is_quasi_strongly_connected,
)

AQSC = "AQSC"
NITS = "NITS"
UQSC = "UQSC"

_REL_TOL = 1e-9


@dataclass(frozen=True)
class ConnectivityCertificate:
    kind: str
    sequence: tuple[float, ...]
    epsilon: float | None
    ratio_bound: float | None
    ell: float
    verified_horizon: float

    def __post_init__(self):
        if any(b >= c for b, c in zip(self.sequence, self.sequence[1:])):
            raise ValueError("certificate sequence must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sequence": list(self.sequence),
            "epsilon": self.epsilon,
            "K": self.ratio_bound,
            "ell": self.ell,
            "verified_horizon": self.verified_horizon,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConnectivityCertificate":
        return cls(
            kind=data["kind"],
            sequence=tuple(float(t) for t in data["sequence"]),
            epsilon=data.get("epsilon"),
            ratio_bound=data.get("K"),
            ell=float(data["ell"]),
            verified_horizon=float(data["verified_horizon"]),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


@dataclass(frozen=True)
class AqscSearchFailure:
    """Greedy search stalled: no epsilon-connected union up to the horizon."""

    stalled_from: float
    horizon: float
    last_union: np.ndarray
    skeleton: SkeletonGraph


@dataclass(frozen=True)
class NitsCheck:
    ok: bool
    violations: tuple[tuple[int, int, int], ...]
    ell: float


@dataclass(frozen=True)
class AnalysisReport:
    """Diagnostic constants of a schedule, as far as the horizon shows them."""

    mu_table: dict[float, float]
    aperiodicity_floor: float | None = None
    arc_balance_ratio: float | None = None
    notes: str = ""

    def __post_init__(self):
        values = [self.mu_table[d] for d in sorted(self.mu_table)]
        if any(b < a - 1e-12 for a, b in zip(values, values[1:])):
            raise ValueError("window bounds must be nondecreasing in the window length")
        if self.aperiodicity_floor is not None and not 0.0 <= self.aperiodicity_floor <= 1.0:
            raise ValueError("aperiodicity floor must lie in [0, 1]")


def _pair_ell(schedule: WeightSchedule, sequence: Sequence[float]) -> float:
    ell = 0.0
    for a, b in zip(sequence, sequence[1:]):
        union = schedule.integrate_weights(a, b)
        off = union.copy()
        np.fill_diagonal(off, 0.0)
        ell = max(ell, float(off.max()))
    return ell


def compute_mu(schedule: WeightSchedule, window: float, stride: float | None = None) -> float:
    """Largest per-entry weight over any window of the given length.

    Exact for piecewise-constant schedules: as a function of the window
    start the integral is piecewise linear with kinks only at
    breakpoints and breakpoints minus the window length, so anchoring
    the sweep there (plus an optional stride grid) finds the maximum.
    """
    if window < 0:
        raise ValueError("window length must be nonnegative")
    if window == 0:
        return 0.0
    if schedule.is_discrete:
        if abs(window - round(window)) > 1e-9:
            raise ValueError("discrete schedules use integer window lengths")
        d = int(round(window))
        span = int(schedule.horizon) + 1
        if d > span:
            raise OutOfRangeError("window exceeds the schedule horizon")
        sums = np.array([schedule.segments[t : t + d].sum(axis=0) for t in range(span - d + 1)])
        off = sums.copy()
        off[:, np.arange(off.shape[1]), np.arange(off.shape[1])] = 0.0
        return float(off.max())
    if window > schedule.horizon:
        raise OutOfRangeError("window exceeds the schedule horizon")
    last = schedule.horizon - window
    starts = {0.0, last}
    for b in schedule.breakpoints:
        if 0.0 <= b <= last:
            starts.add(b)
        if 0.0 <= b - window <= last:
            starts.add(b - window)
    if stride is not None:
        if stride <= 0:
            raise ValueError("stride must be positive")
        s = 0.0
        while s <= last:
            starts.add(s)
            s += stride
    best = 0.0
    for s in sorted(starts):
        win = schedule.integrate_weights(s, s + window)
        np.fill_diagonal(win, 0.0)
        best = max(best, float(win.max()))
    return best


def _crossing_times_continuous(schedule: WeightSchedule, start: Fraction, epsilon: Fraction) -> dict[tuple[int, int], Fraction]:
    """First time each arc's integral from ``start`` reaches epsilon.

    Every float is an exact rational, so the sweep over the piecewise
    linear integrals is done in Fraction arithmetic: crossing times come
    out exact and the greedy sequence accumulates no rounding drift.
    """
    n = schedule.agent_count
    bps = [Fraction(b) for b in schedule.breakpoints] + [Fraction(schedule.horizon)]
    acc = [[Fraction(0)] * n for _ in range(n)]
    crossing: dict[tuple[int, int], Fraction] = {}
    remaining = {(i, j) for i in range(n) for j in range(n) if i != j}
    for seg in range(schedule.segments.shape[0]):
        lo, hi = max(bps[seg], start), bps[seg + 1]
        if hi <= lo:
            continue
        length = hi - lo
        mat = schedule.segments[seg]
        done = set()
        for i, j in remaining:
            rate = Fraction(float(mat[i, j]))
            if rate <= 0:
                continue
            need = epsilon - acc[i][j]
            if rate * length >= need:
                crossing[(i, j)] = lo + need / rate
                done.add((i, j))
            acc[i][j] += rate * length
        remaining -= done
        if not remaining:
            break
    return crossing


def _first_qsc_time(schedule: WeightSchedule, start: Fraction, epsilon: Fraction):
    """Smallest t > start with the union over [start, t] epsilon-connected."""
    n = schedule.agent_count
    if schedule.is_discrete:
        horizon = int(schedule.horizon)
        acc = schedule.segments[int(start)].copy()  # inclusive union convention
        for t in range(int(start) + 1, horizon + 1):
            acc += schedule.segments[t]
            ok, _ = is_quasi_strongly_connected(epsilon_skeleton(acc, float(epsilon)))
            if ok:
                return Fraction(t)
        return None
    crossing = _crossing_times_continuous(schedule, start, epsilon)
    arcs_by_time = sorted(crossing.items(), key=lambda kv: (kv[1], kv[0]))
    arcs: set[tuple[int, int]] = set()
    idx = 0
    while idx < len(arcs_by_time):
        t = arcs_by_time[idx][1]
        while idx < len(arcs_by_time) and arcs_by_time[idx][1] <= t:
            (i, j), _ = arcs_by_time[idx]
            arcs.add((j, i))
            idx += 1
        ok, _ = is_quasi_strongly_connected(SkeletonGraph(n, frozenset(arcs), float(epsilon)))
        if ok:
            return t
    return None


def find_aqsc_sequence(schedule: WeightSchedule, epsilon: float):
    """Greedy-minimal witnessing sequence for aperiodic connectivity.

    Starts at t_0 = 0 and repeatedly takes the smallest time at which
    the union since the previous point becomes quasi-strongly
    epsilon-connected.  Returns a certificate on success, or the stalled
    interval with its union graph on failure.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    eps_f = Fraction(float(epsilon))
    sequence_f = [Fraction(0)]
    horizon = schedule.horizon
    while True:
        t_next = _first_qsc_time(schedule, sequence_f[-1], eps_f)
        if t_next is None:
            break
        sequence_f.append(t_next)
        if schedule.is_discrete and t_next >= horizon:
            break
    sequence = [float(t) for t in sequence_f]
    if len(sequence) < 2:
        union = schedule.integrate_weights(sequence[-1], horizon)
        return AqscSearchFailure(sequence[-1], horizon, union, epsilon_skeleton(union, epsilon))
    return ConnectivityCertificate(
        kind=AQSC,
        sequence=tuple(sequence),
        epsilon=float(epsilon),
        ratio_bound=None,
        ell=_pair_ell(schedule, sequence),
        verified_horizon=sequence[-1],
    )


def check_aqsc(schedule: WeightSchedule, sequence: Sequence[float], epsilon: float) -> tuple[bool, list[int], float]:
    """Re-verify a caller-supplied sequence; returns (ok, bad intervals, ell).

    Skeletons are taken at epsilon relaxed by the 1e-9 relative
    quadrature tolerance, so exact crossings survive float summation.
    """
    eps_eff = epsilon * (1.0 - _REL_TOL)
    bad = []
    for p, (a, b) in enumerate(zip(sequence, sequence[1:])):
        union = schedule.integrate_weights(a, b)
        ok, _ = is_quasi_strongly_connected(epsilon_skeleton(union, eps_eff))
        if not ok:
            bad.append(p)
    return not bad, bad, _pair_ell(schedule, sequence)


def uniform_sequence(period: float, horizon: float, start: float = 0.0) -> tuple[float, ...]:
    """The uniform candidate sequence t_p = start + p*period."""
    if period <= 0:
        raise ValueError("period must be positive")
    out = []
    t = start
    while t <= horizon + 1e-12:
        out.append(round(t, 12))
        t += period
    return tuple(out)


def check_nits(schedule: WeightSchedule, sequence: Sequence[float], ratio_bound: float) -> NitsCheck:
    """Check per-interval reciprocity within factor K over a sequence."""
    if ratio_bound < 1.0:
        raise ValueError("the ratio bound K must be at least 1")
    violations = []
    n = schedule.agent_count
    for p, (a, b) in enumerate(zip(sequence, sequence[1:])):
        union = schedule.integrate_weights(a, b)
        for i in range(n):
            for j in range(i + 1, n):
                fwd, bwd = union[i, j], union[j, i]
                hi = ratio_bound * bwd * (1.0 + _REL_TOL) + 1e-15
                lo = ratio_bound * fwd * (1.0 + _REL_TOL) + 1e-15
                if fwd > hi or bwd > lo:
                    violations.append((p, i, j))
    return NitsCheck(not violations, tuple(violations), _pair_ell(schedule, sequence))


def check_arc_balance(
    schedule: WeightSchedule,
    persistent: SkeletonGraph,
    ratio_bound: float,
    sample_times: Sequence[float],
) -> tuple[bool, float]:
    """Instantaneous commensurability of all persistent arcs.

    Verifies K^-1 a_km(t) <= a_ij(t) <= K a_km(t) for every pair of
    persistent arcs on the segments active at the sample times; returns
    the worst observed ratio (inf when one arc is active while another
    is silent).
    """
    if ratio_bound < 1.0:
        raise ValueError("the ratio bound K must be at least 1")
    arcs = sorted(persistent.arcs)
    if len(arcs) <= 1:
        return True, 1.0
    worst = 1.0
    ok = True
    for t in sample_times:
        mat = schedule.evaluate(t)
        weights = np.array([mat[i, j] for (j, i) in arcs])
        top, bottom = float(weights.max()), float(weights.min())
        if top == 0.0:
            continue
        if bottom == 0.0:
            return False, float("inf")
        worst = max(worst, top / bottom)
        if top > ratio_bound * bottom * (1.0 + _REL_TOL):
            ok = False
    return ok, worst


def check_strong_aperiodicity(schedule: WeightSchedule, eta: float) -> tuple[bool, float]:
    """Uniform positivity of the diagonal of a discrete schedule."""
    if not schedule.is_discrete:
        raise KindError("strong aperiodicity applies to discrete schedules")
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    n = schedule.agent_count
    floor = float(schedule.segments[:, np.arange(n), np.arange(n)].min())
    return floor >= eta, floor


def thin_by_dwell(
    certificate: ConnectivityCertificate,
    dwell: float,
    schedule: WeightSchedule | None = None,
):
    """Pass to the subsequence (t_0, t_k, t_2k, ...) with gaps >= dwell.

    Unions over merged intervals only gain weight, so quasi-strong
    epsilon-connectivity survives the merge; ell is recomputed when the
    schedule is available and bounded by k*ell otherwise.  Returns None
    when no subsampling realizes the dwell on the verified horizon.
    """
    if certificate.kind not in (AQSC, UQSC):
        raise KindError("dwell thinning applies to AQSC certificates")
    if dwell <= 0:
        raise ValueError("dwell must be positive")
    seq = certificate.sequence
    for k in range(1, len(seq)):
        sub = seq[::k]
        if len(sub) < 2:
            break
        if all(b - a >= dwell - 1e-12 for a, b in zip(sub, sub[1:])):
            if schedule is not None:
                ell = _pair_ell(schedule, sub)
            else:
                ell = certificate.ell * k
            return ConnectivityCertificate(
                kind=certificate.kind,
                sequence=sub,
                epsilon=certificate.epsilon,
                ratio_bound=certificate.ratio_bound,
                ell=ell,
                verified_horizon=sub[-1],
            )
    return None


def build_analysis_report(
    schedule: WeightSchedule,
    window_lengths: Sequence[float],
    eta: float | None = None,
    persistent: SkeletonGraph | None = None,
    ratio_bound: float | None = None,
    sample_times: Sequence[float] | None = None,
    notes: str = "",
) -> AnalysisReport:
    mu_table = {float(d): compute_mu(schedule, d) for d in window_lengths}
    floor = None
    if schedule.is_discrete and eta is not None:
        _, floor = check_strong_aperiodicity(schedule, eta)
    worst = None
    if persistent is not None and ratio_bound is not None and sample_times is not None:
        _, worst = check_arc_balance(schedule, persistent, ratio_bound, sample_times)
    return AnalysisReport(mu_table, floor, worst, notes)
