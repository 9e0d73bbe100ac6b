"""Diagnostics extracted from trajectories.

Window extrema track the running min/max of the state over the trailing
delay window; their difference is the consensus diameter.  On
undisturbed linear runs the upper envelope is nonincreasing and the
lower one nondecreasing, so the diameter is a Lyapunov-like quantity
whose per-block contraction ratio is the measured counterpart of the
geometric decay estimate.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .connectivity import ConnectivityCertificate
from .dynamics import PiecewiseVector, Trajectory
from .geometry import containment_margin, point_ball_distance, point_hull_distance


@dataclass(frozen=True)
class WindowExtrema:
    """Running extrema over the trailing window [t - window, t]."""

    times: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    window: float

    def value_at(self, t: float) -> tuple[float, float]:
        i = int(np.searchsorted(self.times, t - 1e-9))
        i = min(i, len(self.times) - 1)
        return float(self.lower[i]), float(self.upper[i])


@dataclass(frozen=True)
class DiameterSeries:
    times: np.ndarray
    values: np.ndarray

    @property
    def final(self) -> float:
        return float(self.values[-1])

    @property
    def initial(self) -> float:
        return float(self.values[0])

    def consensus_reached(self, tol: float, monotone_tol: float = 1e-12) -> bool:
        """Final value below tol with a nonincreasing tail."""
        tail = self.values[3 * len(self.values) // 4 :]
        monotone = bool(np.all(np.diff(tail) <= monotone_tol))
        return self.final <= tol and monotone

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,D\n")
            for t, v in zip(self.times, self.values):
                fh.write(f"{t!r},{v!r}\n")


@dataclass(frozen=True)
class ContractionReport:
    """Measured per-block diameter ratios along a certificate sequence."""

    block_ratios: tuple[float, ...]
    theta: float
    passed: bool
    block_span: int
    insufficient_horizon: bool


def window_extrema(
    trajectory: Trajectory,
    window: float | None = None,
    agents: Sequence[int] | None = None,
) -> WindowExtrema:
    """Trailing-window extrema at every solution sample.

    Prehistory samples are part of the window, so the extrema are
    defined from the start time on.  ``agents`` restricts the extrema
    to a subgroup (useful for per-component consensus).
    """
    if window is None:
        window = trajectory.delay_bound
    times = trajectory.times
    states = trajectory.states
    if agents is not None:
        states = states[:, list(agents), :]
    per_sample_min = states.min(axis=(1, 2))
    per_sample_max = states.max(axis=(1, 2))

    start = trajectory.start_index
    lo_out = np.empty(len(times) - start)
    hi_out = np.empty(len(times) - start)
    min_q: deque[int] = deque()
    max_q: deque[int] = deque()
    left = 0
    for idx in range(len(times)):
        while min_q and per_sample_min[min_q[-1]] >= per_sample_min[idx]:
            min_q.pop()
        min_q.append(idx)
        while max_q and per_sample_max[max_q[-1]] <= per_sample_max[idx]:
            max_q.pop()
        max_q.append(idx)
        while times[left] < times[idx] - window - 1e-9:
            if min_q[0] == left:
                min_q.popleft()
            if max_q[0] == left:
                max_q.popleft()
            left += 1
        if idx >= start:
            lo_out[idx - start] = per_sample_min[min_q[0]]
            hi_out[idx - start] = per_sample_max[max_q[0]]
    return WindowExtrema(times[start:].copy(), lo_out, hi_out, float(window))


def diameter_series(extrema: WindowExtrema) -> DiameterSeries:
    return DiameterSeries(extrema.times, extrema.upper - extrema.lower)


def contraction_fit(
    extrema: WindowExtrema,
    certificate: ConnectivityCertificate,
    n: int,
) -> ContractionReport:
    """Diameter ratios over blocks of 2(n-1) certificate intervals.

    The geometric decay estimate predicts a uniform ratio theta < 1 per
    complete block; the report carries the measured maximum.  Block
    boundaries are evaluated conservatively: the numerator reads the
    last sample at or before the block end, the denominator the first
    sample at or after the block start, so measured ratios only
    overestimate the true ones.
    """
    diam = diameter_series(extrema)
    seq = certificate.sequence
    span = 2 * (n - 1)
    # first certificate index at or after the trajectory start
    r = next((i for i, t in enumerate(seq) if t >= extrema.times[0] - 1e-9), None)
    ratios: list[float] = []
    if r is not None:
        k = 0
        while r + (k + 1) * span < len(seq):
            t_lo = seq[r + k * span]
            t_hi = seq[r + (k + 1) * span]
            i_lo = int(np.searchsorted(diam.times, t_lo - 1e-9))
            i_hi = int(np.searchsorted(diam.times, t_hi + 1e-9)) - 1
            if i_hi >= len(diam.times):
                break
            d_lo = float(diam.values[i_lo])
            d_hi = float(diam.values[max(i_hi, i_lo)])
            if d_lo <= 1e-300:
                ratios.append(0.0)
            else:
                ratios.append(d_hi / d_lo)
            k += 1
    if not ratios:
        return ContractionReport((), float("nan"), False, span, True)
    theta = max(ratios)
    return ContractionReport(tuple(ratios), theta, theta < 1.0, span, False)


def hull_distance(points, hull) -> np.ndarray:
    """Euclidean distances to a convex target, one per row of ``points``.

    ``hull`` is a vertex array, or any object with a ``distance``
    method (target sets), or a (center, radius) pair for balls.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if hasattr(hull, "distance"):
        return np.array([hull.distance(p) for p in pts])
    if isinstance(hull, tuple) and len(hull) == 2 and np.ndim(hull[1]) == 0:
        center, radius = hull
        return np.array([point_ball_distance(p, center, radius) for p in pts])
    verts = np.asarray(hull, dtype=float)
    return np.array([point_hull_distance(p, verts) for p in pts])


def hull_margins(points, vertices) -> np.ndarray:
    """Containment margins (positive inside) for each row of ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.array([containment_margin(p, vertices) for p in pts])


@dataclass(frozen=True)
class DisturbanceReport:
    """Per-interval disturbance masses against the tail diameter."""

    interval_masses: tuple[float, ...]
    masses_vanishing: bool
    tail_diameter: float
    final_diameter: float
    initial_diameter: float

    @property
    def qualitative_ok(self) -> bool:
        """Vanishing masses must come with a collapsing tail diameter."""
        if not self.masses_vanishing:
            return True
        scale = max(self.initial_diameter, 1e-12)
        return self.tail_diameter <= 0.1 * scale


def disturbance_bound_check(
    trajectory: Trajectory,
    certificate: ConnectivityCertificate,
    disturbance: PiecewiseVector,
    window: float | None = None,
) -> DisturbanceReport:
    """Compare per-interval input masses with the final-quarter diameter.

    limsup conditions are approximated on the finite horizon: masses are
    called vanishing when the final-quarter maxima fall an order of
    magnitude below the first-quarter maxima.
    """
    ex = window_extrema(trajectory, window)
    diam = diameter_series(ex)
    masses = []
    for a, b in zip(certificate.sequence, certificate.sequence[1:]):
        masses.append(_mass_on_interval(disturbance, a, b))
    masses_arr = np.asarray(masses)
    q = max(1, len(masses_arr) // 4)
    first = float(masses_arr[:q].max()) if len(masses_arr) else 0.0
    last = float(masses_arr[-q:].max()) if len(masses_arr) else 0.0
    vanishing = last <= 0.1 * first + 1e-15
    tail = diam.values[3 * len(diam.values) // 4 :]
    return DisturbanceReport(
        interval_masses=tuple(float(v) for v in masses),
        masses_vanishing=vanishing,
        tail_diameter=float(tail.max()) if len(tail) else diam.final,
        final_diameter=diam.final,
        initial_diameter=diam.initial,
    )


def _mass_on_interval(signal: PiecewiseVector, a: float, b: float) -> float:
    """Exact integral of the sup-norm of a piecewise-constant signal."""
    cuts = [t for t in signal.breakpoints if a < t < b]
    grid = [a] + cuts + [b]
    total = 0.0
    for lo, hi in zip(grid, grid[1:]):
        if hi <= lo:
            continue
        total += (hi - lo) * float(np.max(np.abs(signal.value_at(lo))))
    return total
