"""Scenario catalogue and the config-driven analysis pipeline.

A scenario bundles a schedule/delay generator, initial data, optional
disturbance or coupling, and a list of analyses.  Running one produces a
trajectory, a JSON-able report and a set of named pass/fail checks; the
bundled catalogue pins the parameters so the same claims are exercised
reproducibly from the command line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import connectivity, evolution, metrics, reduction
from .connectivity import AqscSearchFailure, ConnectivityCertificate
from .dynamics import (
    CouplingFunction,
    DisturbanceSignal,
    InitialCondition,
    LeaderConfig,
    PiecewiseVector,
    TargetSet,
    Trajectory,
    inverse_square_gain,
    simulate_containment,
    simulate_continuous,
    simulate_discrete,
    simulate_nonlinear,
    simulate_target_aggregation,
)
from .schedule import DelaySchedule, WeightSchedule, load_delays, load_schedule

SPEC_VERSION = 1


@dataclass(frozen=True)
class CheckOutcome:
    passed: bool
    value: float
    threshold: float
    direction: str  # "<=" or ">="

    def to_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "value": self.value,
            "threshold": self.threshold,
            "direction": self.direction,
        }


def _check_le(value: float, threshold: float) -> CheckOutcome:
    return CheckOutcome(bool(value <= threshold), float(value), float(threshold), "<=")


def _check_ge(value: float, threshold: float) -> CheckOutcome:
    return CheckOutcome(bool(value >= threshold), float(value), float(threshold), ">=")


def _check_true(flag: bool) -> CheckOutcome:
    return CheckOutcome(bool(flag), 1.0 if flag else 0.0, 1.0, ">=")


@dataclass
class ScenarioResult:
    name: str
    claim: str
    report: dict
    checks: dict[str, CheckOutcome]
    trajectory: Trajectory | None = None
    diameter: metrics.DiameterSeries | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def report_dict(self) -> dict:
        out = dict(self.report)
        out["name"] = self.name
        out["claim"] = self.claim
        out["checks"] = {k: v.to_dict() for k, v in sorted(self.checks.items())}
        out["passed"] = self.passed
        return out


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _parse_delays(spec: dict | None, n: int) -> DelaySchedule:
    if spec is None or spec.get("kind") == "none":
        return DelaySchedule.none(n)
    kind = spec["kind"]
    bound = spec.get("bound")
    if kind == "constant":
        if "matrix" in spec:
            return DelaySchedule.constant(np.asarray(spec["matrix"], dtype=float), bound)
        return DelaySchedule.uniform(n, float(spec["value"]), bound)
    if kind == "piecewise-constant":
        return DelaySchedule.piecewise(spec["breakpoints"], np.asarray(spec["matrices"], dtype=float), bound)
    if kind == "sawtooth":
        return DelaySchedule.sawtooth(np.asarray(spec["offsets"], dtype=float), bound)
    raise ValueError(f"unknown delay spec kind {kind!r}")


def _parse_initial(spec: dict, discrete: bool) -> InitialCondition:
    if discrete and "window" in spec:
        return InitialCondition.from_window(np.asarray(spec["window"], dtype=float), spec.get("start", 0))
    state = np.asarray(spec["state"], dtype=float)
    start = float(spec.get("start", 0.0))
    history = spec.get("history", "hold-state")
    if isinstance(history, dict):
        history = PiecewiseVector(tuple(history["breakpoints"]), np.asarray(history["values"], dtype=float))
    return InitialCondition(start, state, history)


def _parse_disturbance(spec: dict | None) -> DisturbanceSignal | None:
    if spec is None:
        return None
    if spec.get("kind") == "pulse-train":
        return DisturbanceSignal.pulse_train(
            np.asarray(spec["pattern"], dtype=float),
            [float(t) for t in spec["times"]],
            float(spec["width"]),
            [float(m) for m in spec["masses"]],
            float(spec.get("start", 0.0)),
        )
    return DisturbanceSignal(tuple(spec["breakpoints"]), np.asarray(spec["values"], dtype=float))


def _parse_coupling(spec: dict | None) -> CouplingFunction | None:
    if spec is None:
        return None
    kind = spec.get("kind")
    if kind == "inverse-square":
        return CouplingFunction(inverse_square_gain)
    if kind == "unit":
        return CouplingFunction(lambda y, z: 1.0)
    raise ValueError(f"unknown coupling kind {kind!r}")


@dataclass
class _Built:
    """Everything a scenario run needs, assembled from its config."""

    schedule: WeightSchedule
    delays: DelaySchedule
    initial: InitialCondition
    disturbance: DisturbanceSignal | None = None
    coupling: CouplingFunction | None = None
    leader: LeaderConfig | None = None
    target: TargetSet | None = None
    damping: Any = None
    mode: str = "linear"  # linear | discrete | containment | aggregation
    discrete_source: WeightSchedule | None = None
    discrete_delays: DelaySchedule | None = None
    generator: dict = field(default_factory=dict)


def _build_generator(gen: dict, config: dict) -> _Built:
    kind = gen["kind"]
    if kind == "constant":
        mat = np.asarray(gen["matrix"], dtype=float)
        sched = WeightSchedule.constant(mat, float(gen["horizon"]))
        delays = _parse_delays(gen.get("delays"), sched.agent_count)
        return _Built(sched, delays, _parse_initial(config["initial"], False), generator=gen)
    if kind == "intermittent":
        from .schedule import make_intermittent

        sched = make_intermittent(
            np.asarray(gen["base"], dtype=float),
            [(float(a), float(b)) for a, b in gen["on_intervals"]],
            float(gen["horizon"]),
        )
        delays = _parse_delays(gen.get("delays"), sched.agent_count)
        return _Built(sched, delays, _parse_initial(config["initial"], False), generator=gen)
    if kind == "appendix-a":
        steps = int(gen["steps"])
        base = float(gen.get("base", 4.0))
        factors = [base ** (-(k + 1)) for k in range(steps)]
        segs = np.zeros((steps, 2, 2))
        for k, a_k in enumerate(factors):
            rate = -math.log(a_k)
            segs[k] = [[0.0, rate], [rate, 0.0]]
        sched = WeightSchedule.continuous([float(k) for k in range(steps)], segs, float(steps))
        delays = DelaySchedule.sawtooth(np.zeros((steps, 2, 2)))
        built = _Built(sched, delays, _parse_initial(config["initial"], False), generator=dict(gen))
        built.generator["factors"] = factors
        return built
    if kind == "reduction-of-discrete":
        mats = np.asarray(gen["matrices"], dtype=float)
        sched = WeightSchedule.discrete(mats)
        delays = _parse_delays(gen.get("delays"), sched.agent_count)
        built = _Built(sched, delays, _parse_initial(config["initial"], True), mode="discrete", generator=gen)
        built.discrete_source = sched
        built.discrete_delays = delays
        return built
    if kind == "containment":
        leaders = np.asarray(gen["leaders"], dtype=float)
        attraction = np.asarray(gen["attraction"], dtype=float)
        leader = LeaderConfig.constant_attraction(leaders, attraction)
        net = np.asarray(gen["network"], dtype=float)
        sched = WeightSchedule.constant(net, float(gen["horizon"]))
        delays = _parse_delays(gen.get("delays"), sched.agent_count)
        return _Built(
            sched, delays, _parse_initial(config["initial"], False), leader=leader, mode="containment", generator=gen
        )
    if kind == "aggregation":
        tgt = gen["target"]
        sel = gen["selector"]
        selector = PiecewiseVector(tuple(sel["breakpoints"]), np.asarray(sel["values"], dtype=float))
        if tgt["kind"] == "ball":
            target = TargetSet.ball(np.asarray(tgt["center"], dtype=float), float(tgt["radius"]), selector)
        else:
            target = TargetSet.polytope(np.asarray(tgt["vertices"], dtype=float), selector)
        net = np.asarray(gen["network"], dtype=float)
        sched = WeightSchedule.constant(net, float(gen["horizon"]))
        delays = _parse_delays(gen.get("delays"), sched.agent_count)
        return _Built(
            sched,
            delays,
            _parse_initial(config["initial"], False),
            target=target,
            damping=float(gen.get("damping", 1.0)),
            mode="aggregation",
            generator=gen,
        )
    raise ValueError(f"unknown generator kind {kind!r}")


def _build(config: dict) -> _Built:
    if config.get("spec_version", SPEC_VERSION) != SPEC_VERSION:
        raise ValueError(f"unsupported spec_version {config.get('spec_version')!r}")
    if config.get("generator"):
        built = _build_generator(config["generator"], config)
    else:
        sched = load_schedule(config["schedule_file"])
        delays = (
            load_delays(config["delays_file"])
            if config.get("delays_file")
            else DelaySchedule.none(sched.agent_count)
        )
        built = _Built(sched, delays, _parse_initial(config["initial"], sched.is_discrete))
        if sched.is_discrete:
            built.mode = "discrete"
            built.discrete_source = sched
            built.discrete_delays = delays
    built.disturbance = _parse_disturbance(config.get("disturbance"))
    built.coupling = _parse_coupling(config.get("coupling"))
    return built


def _simulate_built(built: _Built, t_end: float, step: float) -> Trajectory:
    if built.mode == "discrete":
        return simulate_discrete(built.schedule, built.delays, built.initial)
    if built.mode == "containment":
        return simulate_containment(built.schedule, built.delays, built.leader, built.initial, t_end, step)
    if built.mode == "aggregation":
        return simulate_target_aggregation(
            built.schedule, built.delays, built.target, built.damping, built.initial, t_end, step
        )
    if built.coupling is not None:
        return simulate_nonlinear(built.schedule, built.delays, built.initial, built.coupling, t_end, step)
    return simulate_continuous(built.schedule, built.delays, built.initial, t_end, step, built.disturbance)


# ---------------------------------------------------------------------------
# analyses
# ---------------------------------------------------------------------------


@dataclass
class _RunContext:
    built: _Built
    trajectory: Trajectory
    diameter: metrics.DiameterSeries
    extrema: metrics.WindowExtrema
    t_end: float
    step: float
    certificate: ConnectivityCertificate | None = None


def _an_aqsc(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    eps = float(params.get("epsilon", 0.5))
    result = connectivity.find_aqsc_sequence(ctx.built.schedule, eps)
    found = not isinstance(result, AqscSearchFailure)
    expect = bool(params.get("expect", True))
    checks["aqsc-found"] = _check_true(found == expect)
    if found:
        ctx.certificate = result
        report["certificate"] = result.to_dict()
        ok, bad, _ = connectivity.check_aqsc(ctx.built.schedule, result.sequence, eps)
        checks["aqsc-revalidates"] = _check_true(ok)
    else:
        report["aqsc_failure"] = {"stalled_from": result.stalled_from, "horizon": result.horizon}


def _an_nits(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    K = float(params.get("K", 1.0))
    if "sequence" in params:
        seq = [float(t) for t in params["sequence"]]
    elif "period" in params:
        seq = list(connectivity.uniform_sequence(float(params["period"]), ctx.t_end))
    elif ctx.certificate is not None:
        seq = list(ctx.certificate.sequence)
    else:
        raise ValueError("nits analysis needs a sequence, a period, or a prior aqsc certificate")
    res = connectivity.check_nits(ctx.built.schedule, seq, K)
    report["nits"] = {"K": K, "ok": res.ok, "ell": res.ell, "violations": len(res.violations)}
    checks["nits-holds"] = _check_true(res.ok == bool(params.get("expect", True)))


def _an_evolution(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    built = ctx.built
    sched = built.discrete_source if built.mode == "discrete" else built.schedule
    delays = built.discrete_delays if built.mode == "discrete" else built.delays
    t0 = built.initial.start
    U = evolution.compute_evolutionary(sched, delays, t0, ctx.t_end, ctx.step)
    rows = U.matrix.sum(axis=1)
    checks["evolution-substochastic"] = _check_le(float(rows.max()), 1.0 + 1e-9)
    checks["evolution-nonnegative"] = _check_ge(float(U.matrix.min()), -1e-12)
    window = params.get("mu_window", delays.bound)
    if window and window > 0:
        mu = connectivity.compute_mu(sched, float(window))
        floor_rep = evolution.verify_row_sum_floor(U, mu)
        report["row_sum_floor"] = {"floor": floor_rep.floor, "bound": floor_rep.bound}
        checks["evolution-row-floor"] = _check_true(floor_rep.ok)


def _an_contraction(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    if ctx.certificate is None:
        raise ValueError("contraction analysis needs a prior aqsc certificate")
    rep = metrics.contraction_fit(ctx.extrema, ctx.certificate, ctx.built.schedule.agent_count)
    report["contraction"] = {
        "theta": rep.theta,
        "block_ratios": list(rep.block_ratios),
        "insufficient_horizon": rep.insufficient_horizon,
    }
    checks["contraction-theta"] = (
        _check_le(rep.theta, 1.0 - 1e-12) if not rep.insufficient_horizon else _check_true(False)
    )
    if "final_ratio" in params:
        ratio = ctx.diameter.final / max(ctx.diameter.initial, 1e-300)
        checks["contraction-final-ratio"] = _check_le(ratio, float(params["final_ratio"]))


def _an_cauchy(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    tol = float(params.get("tol", 1e-6))
    t_check = float(params.get("t", min(ctx.t_end, ctx.built.initial.start + 4.0)))
    rep = evolution.reconstruct_cauchy(
        ctx.built.schedule, ctx.built.delays, ctx.built.initial, ctx.built.disturbance, t_check, ctx.step
    )
    report["cauchy"] = {"t": rep.t, "discrepancy": rep.discrepancy}
    checks["cauchy-reconstruction"] = _check_le(rep.discrepancy, tol)


def _an_reduction(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    built = ctx.built
    if built.discrete_source is None:
        raise ValueError("reduction analysis needs a discrete generator")
    k_end = int(params.get("k_end", built.discrete_source.horizon + 1))
    gap = reduction.verify_reduction(built.discrete_source, built.discrete_delays, built.initial, k_end)
    report["reduction"] = {"k_end": k_end, "max_gap": gap}
    checks["reduction-agreement"] = _check_le(gap, float(params.get("tol", 1e-12)))


def _an_aperiodicity(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    eta = float(params.get("eta", 0.1))
    ok, floor = connectivity.check_strong_aperiodicity(ctx.built.discrete_source, eta)
    report["aperiodicity"] = {"eta": eta, "floor": floor}
    checks["strong-aperiodicity"] = _check_true(ok)


def _an_consensus(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    tol = float(params.get("tol", 1e-6))
    expect = bool(params.get("expect", True))
    final = ctx.diameter.final
    report["final_diameter"] = final
    report["initial_diameter"] = ctx.diameter.initial
    report["consensus"] = bool(final <= tol)
    if expect:
        checks["consensus-diameter"] = _check_le(final, tol)
    else:
        floor = float(params.get("floor", tol))
        checks["consensus-fails"] = _check_ge(final, floor)


def _an_group_consensus(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    tol = float(params.get("tol", 1e-4))
    groups = [list(map(int, g)) for g in params["groups"]]
    finals = []
    for gi, group in enumerate(groups):
        d = metrics.diameter_series(metrics.window_extrema(ctx.trajectory, agents=group))
        finals.append(d.final)
        checks[f"group-{gi}-consensus"] = _check_le(d.final, tol)
    report["group_diameters"] = finals
    if "min_gap" in params and len(groups) == 2:
        x = ctx.trajectory.final_state[:, 0]
        gap = float(x[groups[1]].min() - x[groups[0]].max())
        report["group_gap"] = abs(gap)
        checks["group-separation"] = _check_ge(abs(gap), float(params["min_gap"]))


def _an_diameter_limit(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    factors = ctx.built.generator.get("factors")
    if factors is None:
        raise ValueError("a diameter-limit analysis needs the appendix-a generator")
    prod = 1.0
    k = 0
    while True:
        f = 1.0 - 2.0 * ctx.built.generator.get("base", 4.0) ** (-(k + 1))
        nxt = prod * f
        if nxt == prod or k > 10_000:
            break
        prod, k = nxt, k + 1
    report["diameter_limit"] = prod
    checks["diameter-limit"] = _check_le(abs(ctx.diameter.final - prod), float(params.get("tol", 1e-6)))


def _an_map_agreement(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    factors = ctx.built.generator.get("factors")
    if factors is None:
        raise ValueError("a map-agreement analysis needs the appendix-a generator")
    x = ctx.trajectory.scalar_values()
    z = ctx.built.initial.matrix[:, 0].copy()
    worst = 0.0
    for k in range(len(factors) + 1):
        idx = ctx.trajectory.index_at(float(k))
        worst = max(worst, float(np.max(np.abs(x[idx] - z))))
        if k < len(factors):
            a_k = factors[k]
            z = np.array([(1 - a_k) * z[1] + a_k * z[0], (1 - a_k) * z[0] + a_k * z[1]])
    report["map_agreement_gap"] = worst
    checks["map-agreement"] = _check_le(worst, float(params.get("tol", 1e-12)))


def _an_segment_growth(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    factors = ctx.built.generator.get("factors")
    if factors is None:
        raise ValueError("a segment-growth analysis needs the appendix-a generator")
    table = []
    worst = 0.0
    for k, a_k in enumerate(factors):
        mu_seg = float(ctx.built.schedule.integrate_weights(float(k), float(k + 1)).max())
        expected = -math.log(a_k)
        table.append({"segment": k, "mu_1": mu_seg, "expected": expected})
        worst = max(worst, abs(mu_seg - expected))
    report["per_segment_mu"] = table
    report["mu_growth_unbounded"] = bool(table[-1]["mu_1"] > table[0]["mu_1"])
    checks["segment-growth"] = _check_le(worst, float(params.get("tol", 1e-9)))
    checks["mu-grows"] = _check_true(report["mu_growth_unbounded"])


def _an_hull(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    built = ctx.built
    if built.mode == "containment":
        hull: Any = built.leader.positions
    elif built.mode == "aggregation":
        hull = built.target
    else:
        hull = np.asarray(params["vertices"], dtype=float)
    tol = float(params.get("tol", 1e-4))
    final_d = metrics.hull_distance(ctx.trajectory.final_state, hull)
    report["final_hull_distances"] = [float(v) for v in final_d]
    checks["hull-distance"] = _check_le(float(final_d.max()), tol)
    if params.get("invariance_initial") is not None:
        inside = np.asarray(params["invariance_initial"], dtype=float)
        init2 = InitialCondition.resting(inside, built.initial.start)
        traj2 = simulate_containment(built.schedule, built.delays, built.leader, init2, ctx.t_end, ctx.step)
        worst = max(float(metrics.hull_distance(block, hull).max()) for block in traj2.states)
        report["invariance_worst_distance"] = worst
        checks["hull-invariance"] = _check_le(worst, 1e-10)


def _an_disturbance(ctx: _RunContext, params: dict, report: dict, checks: dict) -> None:
    if ctx.certificate is None:
        raise ValueError("disturbance analysis needs a prior aqsc certificate")
    rep = metrics.disturbance_bound_check(ctx.trajectory, ctx.certificate, ctx.built.disturbance)
    report["disturbance"] = {
        "interval_masses_head": list(rep.interval_masses[:8]),
        "masses_vanishing": rep.masses_vanishing,
        "tail_diameter": rep.tail_diameter,
        "final_diameter": rep.final_diameter,
    }
    expect_vanishing = bool(params.get("expect_vanishing", True))
    checks["disturbance-vanishing-flag"] = _check_true(rep.masses_vanishing == expect_vanishing)
    if "tail_floor" in params:
        checks["disturbance-tail-floor"] = _check_ge(rep.tail_diameter, float(params["tail_floor"]))
    if "tail_tol" in params:
        checks["disturbance-tail"] = _check_le(rep.tail_diameter, float(params["tail_tol"]))


_ANALYSES: dict[str, Callable[[_RunContext, dict, dict, dict], None]] = {
    "aqsc": _an_aqsc,
    "nits": _an_nits,
    "evolution": _an_evolution,
    "contraction": _an_contraction,
    "cauchy-check": _an_cauchy,
    "reduction-check": _an_reduction,
    "aperiodicity": _an_aperiodicity,
    "consensus": _an_consensus,
    "group-consensus": _an_group_consensus,
    "diameter-limit": _an_diameter_limit,
    "map-agreement": _an_map_agreement,
    "segment-growth": _an_segment_growth,
    "hull": _an_hull,
    "disturbance": _an_disturbance,
}


def run_config(config: dict) -> ScenarioResult:
    """Execute one scenario config: simulate, analyze, collect checks."""
    built = _build(config)
    name = config.get("name", "scenario")
    claim = config.get("claim", "")
    step = float(config.get("step", 0.25))
    t_end = float(config.get("horizon", built.schedule.horizon))
    traj = _simulate_built(built, t_end, step)
    extrema = metrics.window_extrema(traj)
    diam = metrics.diameter_series(extrema)
    ctx = _RunContext(built, traj, diam, extrema, t_end, step)

    report: dict = {
        "scheme": traj.scheme,
        "step": traj.step,
        "agents": traj.agent_count,
        "horizon": t_end,
        "final_diameter": diam.final,
    }
    checks: dict[str, CheckOutcome] = {}
    for entry in config.get("analyses", []):
        if isinstance(entry, str):
            kind, params = entry, {}
        else:
            params = dict(entry)
            kind = params.pop("kind")
        fn = _ANALYSES.get(kind)
        if fn is None:
            raise ValueError(f"unknown analysis kind {kind!r}")
        fn(ctx, params, report, checks)
    return ScenarioResult(name, claim, report, checks, traj, diam)


# ---------------------------------------------------------------------------
# bundled catalogue
# ---------------------------------------------------------------------------


def _chain(n: int, w: float) -> list[list[float]]:
    A = np.zeros((n, n))
    for i in range(n - 1):
        A[i + 1, i] = w
    return A.tolist()


def _symmetric_chain(n: int, w: float) -> list[list[float]]:
    A = np.zeros((n, n))
    for i in range(n - 1):
        A[i + 1, i] = A[i, i + 1] = w
    return A.tolist()


def _complete(n: int, w: float = 1.0) -> list[list[float]]:
    return (w * (np.ones((n, n)) - np.eye(n))).tolist()


def _reduction_matrices(seed: int, n: int, steps: int) -> list:
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(steps):
        off = rng.uniform(0.05, 1.0, (n, n))
        np.fill_diagonal(off, 0.0)
        diag = rng.uniform(0.3, 0.8, n)
        scale = (1.0 - diag) / off.sum(axis=1)
        B = np.round(off * scale[:, None], 6)  # rounded so configs stay readable
        B[np.arange(n), np.arange(n)] = 0.0
        B[np.arange(n), np.arange(n)] = 1.0 - B.sum(axis=1)
        mats.append(B)
    return np.array(mats).tolist()


def bundled_configs() -> dict[str, dict]:
    """Name -> scenario config for every bundled scenario."""
    on_1 = [[float(2**p), float(2**p + 1)] for p in range(7)]
    on_2 = [[float(2**p), float(2**p + 2)] for p in range(1, 8)]
    configs: dict[str, dict] = {}

    configs["two-agent-symmetric"] = {
        "spec_version": SPEC_VERSION,
        "name": "two-agent-symmetric",
        "summary": "constant symmetric pair with delay; geometric contraction to consensus",
        "claim": "checks geometric window-diameter contraction and consensus for a delayed symmetric pair under uniform connectivity",
        "generator": {
            "kind": "constant",
            "matrix": _complete(2),
            "horizon": 16.0,
            "delays": {"kind": "constant", "value": 0.5},
        },
        "initial": {"state": [0.0, 1.0]},
        "step": 0.25,
        "analyses": [
            {"kind": "aqsc", "epsilon": 0.5},
            {"kind": "contraction", "final_ratio": 1e-6},
            {"kind": "nits", "K": 1.0, "period": 1.0},
            "evolution",
            {"kind": "consensus", "tol": 1e-6},
        ],
    }

    configs["constant-complete"] = {
        "spec_version": SPEC_VERSION,
        "name": "constant-complete",
        "summary": "constant complete triangle with delay; uniform connectivity contraction",
        "claim": "checks the per-block contraction estimate and transition-matrix structure on a constant complete graph",
        "generator": {
            "kind": "constant",
            "matrix": _complete(3),
            "horizon": 16.0,
            "delays": {"kind": "constant", "value": 0.5},
        },
        "initial": {"state": [0.0, 1.0, 0.4]},
        "step": 0.25,
        "analyses": [
            {"kind": "aqsc", "epsilon": 0.5},
            {"kind": "contraction", "final_ratio": 1e-6},
            "evolution",
            {"kind": "cauchy-check", "tol": 1e-6},
            {"kind": "consensus", "tol": 1e-6},
        ],
    }

    configs["intermittent-chain"] = {
        "spec_version": SPEC_VERSION,
        "name": "intermittent-chain",
        "summary": "rooted chain awake on [2^p, 2^p+1); consensus despite growing silent gaps",
        "claim": "checks that aperiodic (non-uniform) connectivity with geometrically growing gaps still yields contraction and consensus",
        "generator": {
            "kind": "intermittent",
            "base": _chain(3, 4.0),
            "on_intervals": on_1,
            "horizon": 65.0,
            "delays": {"kind": "constant", "value": 0.5},
        },
        "initial": {"state": [0.0, 1.0, 0.5]},
        "step": 0.25,
        "analyses": [
            {"kind": "aqsc", "epsilon": 1.0},
            {"kind": "contraction", "final_ratio": 1e-6},
            "evolution",
            {"kind": "consensus", "tol": 1e-6},
        ],
    }

    configs["appendix-a-counterexample"] = {
        "spec_version": SPEC_VERSION,
        "name": "appendix-a-counterexample",
        "summary": "two symmetric agents with unboundedly growing weights; consensus fails",
        "claim": "checks that without a uniform window bound on interval weights, connectivity certificates alone do not force consensus: the diameter stalls at a positive partial-product limit while per-window weight grows without bound",
        "generator": {"kind": "appendix-a", "steps": 25, "base": 4.0},
        "initial": {"state": [0.0, 1.0]},
        "step": 1.0,
        "analyses": [
            {"kind": "aqsc", "epsilon": 1.0},
            {"kind": "map-agreement", "tol": 1e-12},
            {"kind": "diameter-limit", "tol": 1e-6},
            "segment-growth",
            {"kind": "consensus", "tol": 1e-6, "expect": False, "floor": 0.41},
        ],
    }

    configs["nits-type-symmetric"] = {
        "spec_version": SPEC_VERSION,
        "name": "nits-type-symmetric",
        "summary": "symmetric intermittent chain, delay bound 1; reciprocity yields consensus",
        "claim": "checks consensus under non-instantaneous type-symmetry with integral connectivity and geometrically growing gaps",
        "generator": {
            "kind": "intermittent",
            "base": _symmetric_chain(3, 1.25),
            "on_intervals": on_2,
            "horizon": 131.0,
            "delays": {"kind": "constant", "value": 1.0, "bound": 1.0},
        },
        "initial": {"state": [0.0, 1.0, 0.3]},
        "step": 0.25,
        "analyses": [
            {"kind": "nits", "K": 1.0, "sequence": [0.0] + [iv[1] for iv in on_2]},
            {"kind": "consensus", "tol": 1e-4},
        ],
    }

    configs["nits-two-components"] = {
        "spec_version": SPEC_VERSION,
        "name": "nits-two-components",
        "summary": "two disconnected symmetric pairs; per-component consensus, distinct limits",
        "claim": "checks that under type-symmetry, consensus forms exactly within connected components of the persistent graph",
        "generator": {
            "kind": "intermittent",
            "base": [[0.0, 1.25, 0.0, 0.0], [1.25, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.25], [0.0, 0.0, 1.25, 0.0]],
            "on_intervals": on_2,
            "horizon": 131.0,
            "delays": {"kind": "constant", "value": 1.0, "bound": 1.0},
        },
        "initial": {"state": [0.0, 0.4, 1.0, 1.4]},
        "step": 0.25,
        "analyses": [
            {"kind": "nits", "K": 1.0, "sequence": [0.0] + [iv[1] for iv in on_2]},
            {"kind": "group-consensus", "groups": [[0, 1], [2, 3]], "tol": 1e-4, "min_gap": 0.1},
            {"kind": "consensus", "tol": 1e-6, "expect": False, "floor": 0.1},
        ],
    }

    configs["discrete-reduction"] = {
        "spec_version": SPEC_VERSION,
        "name": "discrete-reduction",
        "summary": "random aperiodic discrete averaging vs its continuous interpolation",
        "claim": "checks that strongly aperiodic discrete averaging embeds exactly into a continuous flow with sawtooth delays, matching at integer times",
        "generator": {
            "kind": "reduction-of-discrete",
            "matrices": _reduction_matrices(20240801, 3, 60),
            "delays": {"kind": "constant", "value": 2.0, "bound": 2.0},
        },
        "initial": {"window": [[0.2, 0.9, -0.3], [0.1, 1.0, -0.5], [0.0, 1.0, -0.4]]},
        "analyses": [
            {"kind": "aperiodicity", "eta": 0.3},
            {"kind": "reduction-check", "tol": 1e-12, "k_end": 50},
            {"kind": "aqsc", "epsilon": 0.05},
            {"kind": "consensus", "tol": 1e-3},
        ],
    }

    configs["containment-two-leaders"] = {
        "spec_version": SPEC_VERSION,
        "name": "containment-two-leaders",
        "summary": "followers herded into the segment spanned by two static leaders",
        "claim": "checks containment: followers converge into the leaders' convex hull, and followers starting inside never leave it",
        "generator": {
            "kind": "containment",
            "leaders": [[0.0, 0.0], [2.0, 1.0]],
            "attraction": [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]],
            "network": _symmetric_chain(3, 1.0),
            "horizon": 48.0,
            "delays": {"kind": "constant", "value": 0.5},
        },
        "initial": {"state": [[3.0, -1.0], [-2.0, 4.0], [0.5, 3.0]]},
        "step": 0.25,
        "analyses": [
            {
                "kind": "hull",
                "tol": 1e-4,
                "invariance_initial": [[0.5, 0.25], [1.0, 0.5], [1.5, 0.75]],
            }
        ],
    }

    configs["target-ball-aggregation"] = {
        "spec_version": SPEC_VERSION,
        "name": "target-ball-aggregation",
        "summary": "agents gathered into a ball by attraction toward member points",
        "claim": "checks target aggregation: attraction toward selected set members drives every agent's set distance to zero",
        "generator": {
            "kind": "aggregation",
            "target": {"kind": "ball", "center": [1.0, 1.0], "radius": 0.5},
            "selector": {
                "breakpoints": [0.0],
                "values": [[[1.0, 1.0], [1.2, 0.8], [0.9, 1.3]]],
            },
            "network": _symmetric_chain(3, 1.0),
            "damping": 1.0,
            "horizon": 24.0,
            "delays": {"kind": "constant", "value": 0.5},
        },
        "initial": {"state": [[4.0, -2.0], [-3.0, 5.0], [0.0, 6.0]]},
        "step": 0.25,
        "analyses": [{"kind": "hull", "tol": 1e-3}],
    }

    pulse_pattern = [1.0, -1.0, 0.5]
    pulse_times = [float(p) for p in range(30)]
    configs["vanishing-disturbance"] = {
        "spec_version": SPEC_VERSION,
        "name": "vanishing-disturbance",
        "summary": "geometric L1 pulse disturbances; consensus survives",
        "claim": "checks robustness: disturbances with per-interval masses tending to zero leave consensus intact",
        "generator": {
            "kind": "constant",
            "matrix": _complete(3),
            "horizon": 32.0,
            "delays": {"kind": "constant", "value": 0.5},
        },
        "initial": {"state": [0.0, 1.0, 0.5]},
        "disturbance": {
            "kind": "pulse-train",
            "pattern": pulse_pattern,
            "times": pulse_times,
            "width": 0.25,
            "masses": [2.0 ** (-p) for p in range(30)],
        },
        "step": 0.25,
        "analyses": [
            {"kind": "aqsc", "epsilon": 0.5},
            {"kind": "disturbance", "expect_vanishing": True, "tail_tol": 1e-3},
            {"kind": "consensus", "tol": 1e-3},
        ],
    }

    configs["constant-mass-disturbance"] = {
        "spec_version": SPEC_VERSION,
        "name": "constant-mass-disturbance",
        "summary": "non-vanishing pulse masses; bounded but persistent disagreement",
        "claim": "checks the robustness bound direction: constant per-interval input masses keep the tail diameter bounded but visibly nonzero, and are flagged as non-vanishing",
        "generator": {
            "kind": "constant",
            "matrix": _complete(3),
            "horizon": 32.0,
            "delays": {"kind": "constant", "value": 0.5},
        },
        "initial": {"state": [0.0, 1.0, 0.5]},
        "disturbance": {
            "kind": "pulse-train",
            "pattern": pulse_pattern,
            "times": pulse_times,
            "width": 0.25,
            "masses": [0.8] * 30,
        },
        "step": 0.25,
        "analyses": [
            {"kind": "aqsc", "epsilon": 0.5},
            {"kind": "disturbance", "expect_vanishing": False, "tail_floor": 1e-3, "tail_tol": 100.0},
        ],
    }

    configs["nonlinear-complete"] = {
        "spec_version": SPEC_VERSION,
        "name": "nonlinear-complete",
        "summary": "bounded positive coupling gains on the complete triangle; consensus",
        "claim": "checks that positive difference-shaped coupling gains preserve consensus under the same connectivity certificates",
        "generator": {
            "kind": "constant",
            "matrix": _complete(3),
            "horizon": 16.0,
            "delays": {"kind": "constant", "value": 0.5},
        },
        "initial": {"state": [0.0, 1.0, 0.4]},
        "coupling": {"kind": "inverse-square"},
        "step": 0.25,
        "analyses": [
            {"kind": "aqsc", "epsilon": 0.5},
            {"kind": "contraction"},
            {"kind": "consensus", "tol": 1e-4},
        ],
    }

    return configs


def list_scenarios() -> list[tuple[str, str, str]]:
    """(name, summary, claim) for every bundled scenario."""
    return [(name, cfg["summary"], cfg["claim"]) for name, cfg in sorted(bundled_configs().items())]


def run_scenario_by_name(name: str) -> ScenarioResult:
    configs = bundled_configs()
    if name not in configs:
        raise KeyError(f"unknown bundled scenario {name!r}")
    return run_config(configs[name])
