"""State-transition (evolutionary) matrices of the delayed dynamics.

U(t, s) collects, column by column, the solutions started at time s from
the coordinate basis vectors with identically zero prehistory.  For
delayed averaging these matrices are nonnegative and substochastic (row
sums can fall below 1, unlike the undelayed stochastic case), and the
solution admits a variation-of-constants form

    x(t) = U(t, t*) x(t*) + integral of U(t, s)[f(s) + g(s)] ds,

where g collects the couplings that still read the prehistory.  On the
exact sampling grid the integral is replaced by the segment-exact sum
with per-step input gains, so the reconstruction error is pure float
roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .connectivity import ConnectivityCertificate
from .dynamics import (
    DisturbanceSignal,
    InitialCondition,
    _simulate,
    simulate_discrete,
)
from .errors import InvariantViolation, KindError
from .schedule import (
    DelaySchedule,
    WeightSchedule,
    epsilon_skeleton,
    is_quasi_strongly_connected,
)
from .timegrid import as_fraction

_NEG_TOL = 1e-12
_ROW_TOL = 1e-9


@dataclass(frozen=True)
class EvolutionaryMatrix:
    """U(t, s) with its source interval and the scheme that produced it."""

    t_start: float
    t_end: float
    matrix: np.ndarray
    scheme: str

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if np.min(mat) < -_NEG_TOL:
            raise InvariantViolation(f"evolutionary matrix has entry {mat.min()} < -1e-12")
        rows = mat.sum(axis=1)
        if np.max(rows) > 1.0 + _ROW_TOL:
            raise InvariantViolation(f"row sum {rows.max()} exceeds 1 beyond tolerance")
        mat = np.clip(mat, 0.0, None)
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def order(self) -> int:
        return self.matrix.shape[0]

    def row_sum_floor(self) -> float:
        return float(self.matrix.sum(axis=1).min())

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# t_start={self.t_start!r} t_end={self.t_end!r}\n")
            for row in self.matrix:
                fh.write(",".join(repr(v) for v in row) + "\n")


def _basis_initial(n: int, start: float) -> InitialCondition:
    return InitialCondition.zero_history(np.eye(n), start)


def compute_evolutionary(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    t_start: float,
    t_end: float,
    dt: float = 1.0,
) -> EvolutionaryMatrix:
    """Assemble U(t_end, t_start) from basis-vector runs.

    The n columns are advanced together as one matrix-valued state; the
    linear dynamics treat coordinates independently, so this equals n
    separate simulations.
    """
    if t_end < t_start:
        raise ValueError("t_end must not precede t_start")
    n = schedule.agent_count
    if schedule.is_discrete:
        traj = simulate_discrete(
            schedule,
            delays,
            _basis_initial(n, t_start),
            steps=int(round(t_end)) - int(round(t_start)),
        )
    else:
        traj = _simulate(schedule, delays, _basis_initial(n, t_start), t_end, dt)
    return EvolutionaryMatrix(float(t_start), float(t_end), traj.final_state, traj.scheme)


@dataclass(frozen=True)
class RowSumFloorReport:
    ok: bool
    floor: float
    bound: float  # e^{-(n-1) mu_hbar}


def verify_row_sum_floor(U: EvolutionaryMatrix, mu_hbar: float) -> RowSumFloorReport:
    """Check the uniform row-sum floor e^{-(n-1) mu} of substochastic U."""
    bound = float(np.exp(-(U.order - 1) * mu_hbar))
    floor = U.row_sum_floor()
    return RowSumFloorReport(floor >= bound - _ROW_TOL, floor, bound)


@dataclass(frozen=True)
class SegmentStructureReport:
    """Diagonal floor and skeleton connectivity of U over two intervals."""

    p: int
    interval: tuple[float, float, float]
    eta_bound: float
    epsilon_bound: float
    diagonal_floor: float
    diagonal_ok: bool
    skeleton_qsc: bool
    root: int | None

    @property
    def ok(self) -> bool:
        return self.diagonal_ok and self.skeleton_qsc


def verify_segment_structure(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    certificate: ConnectivityCertificate,
    p: int,
    dt: float = 1.0,
) -> SegmentStructureReport:
    """Two-interval transition structure under an AQSC certificate.

    With interval gaps at least the delay bound, U(t_{p+2}, t_p) has
    diagonal at least e^{-2(n-1) ell} and its skeleton at level
    e^{-3(n-1) ell} is quasi-strongly connected.
    """
    seq = certificate.sequence
    if p + 2 >= len(seq):
        raise ValueError("certificate too short for a two-interval window at p")
    t0, t1, t2 = seq[p], seq[p + 1], seq[p + 2]
    if min(t1 - t0, t2 - t1) < delays.bound - 1e-12:
        raise ValueError("interval gaps must reach the delay bound; thin the certificate first")
    n = schedule.agent_count
    ell = certificate.ell
    eta = float(np.exp(-2 * (n - 1) * ell))
    eps = float(np.exp(-3 * (n - 1) * ell))
    U = compute_evolutionary(schedule, delays, t0, t2, dt)
    diag_floor = float(np.diag(U.matrix).min())
    ok_qsc, root = is_quasi_strongly_connected(epsilon_skeleton(U.matrix, eps))
    return SegmentStructureReport(
        p=p,
        interval=(t0, t1, t2),
        eta_bound=eta,
        epsilon_bound=eps,
        diagonal_floor=diag_floor,
        diagonal_ok=diag_floor >= eta - 1e-12,
        skeleton_qsc=ok_qsc,
        root=root,
    )


@dataclass(frozen=True)
class CauchyReport:
    """Dual-path solution comparison at one time."""

    t: float
    discrepancy: float
    direct: np.ndarray
    reconstructed: np.ndarray
    transition: np.ndarray  # U(t, t*)
    forced_term: np.ndarray  # discrete integral of U(t, s) f(s) ds


def reconstruct_cauchy(
    schedule: WeightSchedule,
    delays: DelaySchedule,
    initial: InitialCondition,
    disturbance: DisturbanceSignal | None,
    t_end: float,
    dt: float,
) -> CauchyReport:
    """Rebuild x(t) from transition matrices and per-step inputs.

    The simulated run records, per step, the input gain G_k, the
    disturbance f_k and the prehistory-sourced coupling g_k.  Summing
    U(t, t_{k+1}) G_k (f_k + g_k) against the zero-history transition
    reproduces the direct solution up to roundoff.
    """
    traj, rec = _simulate(schedule, delays, initial, t_end, dt, disturbance=disturbance, record=True)
    if rec is None:
        raise KindError("the exact stepper is required for the dual-path reconstruction")
    n = traj.agent_count
    steps = rec.gains.shape[0]
    t0f = as_fraction(initial.start)
    df = as_fraction(traj.step)
    if t0f is None or df is None:
        raise RuntimeError("exact run produced an unrecoverable grid step")

    transition = _transition_on_grid(schedule, delays, initial.start, t_end, df)
    reconstructed = transition @ initial.matrix
    forced = np.zeros_like(initial.matrix)
    for k in range(steps):
        drive = rec.disturbance[k] + rec.history_drive[k]
        f_only = rec.disturbance[k]
        if not np.any(drive) and not np.any(f_only):
            continue
        s = float(t0f + (k + 1) * df)
        U_k = np.eye(n) if s >= t_end else _transition_on_grid(schedule, delays, s, t_end, df)
        reconstructed = reconstructed + U_k @ (rec.gains[k] @ drive)
        forced = forced + U_k @ (rec.gains[k] @ f_only)
    direct = traj.final_state
    return CauchyReport(
        t=float(t_end),
        discrepancy=float(np.max(np.abs(direct - reconstructed))),
        direct=direct,
        reconstructed=reconstructed,
        transition=transition,
        forced_term=forced,
    )


def _transition_on_grid(schedule, delays, s: float, t_end: float, delta_frac) -> np.ndarray:
    n = schedule.agent_count
    traj = _simulate(
        schedule,
        delays,
        _basis_initial(n, s),
        t_end,
        float(delta_frac),
        dt_exact=delta_frac,
    )
    return traj.final_state


@dataclass(frozen=True)
class ConsensusVerdict:
    linked: np.ndarray  # (n, n) bool
    global_consensus: bool
    last_increment: float


def consensus_from_rows(matrices: Sequence[EvolutionaryMatrix], tol: float) -> ConsensusVerdict:
    """Pairwise consensus from converging, coinciding transition rows.

    Agents i, j are linked when rows i and j of the latest matrices
    agree within tol and the row increments between the last two
    matrices are below tol (a finite-horizon Cauchy surrogate).
    """
    if len(matrices) < 2:
        raise ValueError("need at least two transition matrices at increasing times")
    times = [m.t_end for m in matrices]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("matrices must be ordered by increasing final time")
    last, prev = matrices[-1].matrix, matrices[-2].matrix
    n = last.shape[0]
    increments = np.abs(last - prev).max(axis=1)
    linked = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            row_gap = float(np.max(np.abs(last[i] - last[j])))
            linked[i, j] = row_gap <= tol and increments[i] <= tol and increments[j] <= tol
    return ConsensusVerdict(linked, bool(linked.all()), float(increments.max()))
