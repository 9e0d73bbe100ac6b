"""Discrete averaging as a continuous delay system.

A discrete run with stochastic matrices B(k) and positive diagonals is
interpolated exactly by a continuous delayed flow: on each unit interval
[k, k+1) the weights are

    a_ij(t) = -b_ij(k) ln(b_ii(k)) / (1 - b_ii(k)),    a_ii = 0,

and the delays are sawtooth, freezing the delayed argument at the integer
grid.  The continuous solution then passes through the discrete iterates
at every integer time, which lets the continuous-time theory cover the
discrete algorithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import InitialCondition, simulate_discrete, _simulate
from .errors import KindError, ReductionDomainError
from .schedule import DELAY_SAWTOOTH, DelaySchedule, WeightSchedule


def decay_weight(b: float) -> float:
    """-ln(b) / (1 - b) on (0, 1], evaluated series-safely near b = 1."""
    if b <= 0.0:
        raise ReductionDomainError("the diagonal entry must be positive")
    if b > 1.0:
        raise ReductionDomainError("stochastic diagonals cannot exceed 1")
    u = 1.0 - b
    if u < 1e-6:
        # -ln(1-u)/u = 1 + u/2 + u^2/3 + u^3/4 + O(u^4)
        return 1.0 + u / 2.0 + u * u / 3.0 + u * u * u / 4.0
    return -math.log(b) / u


@dataclass(frozen=True)
class ReductionResult:
    continuous: WeightSchedule
    delays: DelaySchedule
    source_steps: int


def reduce_discrete(schedule: WeightSchedule, delays: DelaySchedule) -> ReductionResult:
    """Build the interpolating continuous schedule and sawtooth delays."""
    if not schedule.is_discrete:
        raise KindError("the reduction starts from a discrete schedule")
    if delays.kind == DELAY_SAWTOOTH:
        raise KindError("discrete delays must be integer constant or piecewise tables")
    n = schedule.agent_count
    K = schedule.segments.shape[0]
    segments = np.empty_like(schedule.segments)
    for k, B in enumerate(schedule.segments):
        diag = np.diag(B)
        if np.any(diag <= 0.0):
            bad = int(np.argmin(diag))
            raise ReductionDomainError(
                f"b[{k}] has zero diagonal at agent {bad}; strong aperiodicity is violated"
            )
        factors = np.array([decay_weight(b) for b in diag])
        A = B * factors[:, None]
        np.fill_diagonal(A, 0.0)
        segments[k] = A
    continuous = WeightSchedule.continuous(tuple(float(k) for k in range(K)), segments, float(K))

    offsets = np.empty((K, n, n), dtype=float)
    for k in range(K):
        H = delays.delay_at(float(k))
        if np.any(np.abs(H - np.round(H)) > 1e-9):
            raise ReductionDomainError("discrete delays must be integers")
        offsets[k] = np.round(H)
    sawtooth = DelaySchedule.sawtooth(offsets)
    return ReductionResult(continuous, sawtooth, K)


def verify_reduction(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    initial: InitialCondition,
    k_end: int,
    dt: float = 1.0,
) -> float:
    """Max gap between discrete iterates and the reduced flow at integers."""
    if k_end < 0:
        raise ValueError("k_end must be nonnegative")
    k_end = int(k_end)
    if k_end > int(schedule.horizon) + 1:
        raise ValueError("k_end extends past the scheduled matrices")
    reduced = reduce_discrete(schedule, delays)
    discrete = simulate_discrete(schedule, delays, initial, steps=k_end)
    continuous = _simulate(reduced.continuous, reduced.delays, initial, float(k_end), dt)
    worst = 0.0
    for k in range(k_end + 1):
        a = discrete.state_at(float(k))
        b = continuous.state_at(float(k))
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst
