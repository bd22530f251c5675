"""Metrics and the runtime verification harness.

Every structural result about the dynamics is re-checked numerically on
concrete trajectories, with measured slack:

* ``check_contraction``: each leader's distance to its target is bounded by
  its degree times the worst neighbor distance, per agent and per group, at
  every step.
* ``check_target_envelope``: with degrees uniformly below delta < 1, the max
  leader-target distance decays inside the geometric envelope delta^t, and
  falls below a target tolerance by the derivable horizon.
* ``check_ball_invariance``: once all opinions lie in a ball around the
  target, they never leave it.
* ``check_consensus_bound``: for one leader group, after the system enters a
  ball of radius delta < epsilon around the target and degrees stay bounded
  by gamma < 1, follower distances obey the two-term bound
  ``gamma^(t-p+1) A_p + (t-p+1) gamma^(t-p) C_p`` and the whole system ends
  at the target.
* ``check_mixture_limit``: with several leader groups and stabilized betas,
  each follower ends at the beta-weighted mixture of the targets.
* ``check_subsystem_independence``: spatially separated subsystems evolve as
  if simulated alone and each reaches its own target; any cross-group
  neighbor contact is flagged.

All checks recompute distances and neighbor sets from raw states with the
exact O(N^2) scan, independent of the engine's internals, so a pass is
evidence rather than tautology. Hypothesis parameters (delta, gamma, onset
steps) are measured from the realized run and reported, never assumed.
Checks whose hypotheses are not met return reports flagged inapplicable
(reason prefixed with the failure kind) instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Trajectory, realized_alpha, realized_betas, run
from .model import Partition, Scenario, SystemState
from .neighbors import neighbors_naive
from .schedules import RemappedAgents

SLACK_TOL = 1e-9
CONSENSUS_TOL = 1e-6
BALL_TOL = 1e-12
STABILIZATION_TOL = 1e-12

INAPPLICABLE = "InapplicableHypothesis"
UNDEFINED_LIMIT = "UndefinedLimit"
CROSSTALK = "CrossTalk"


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    """One checked inequality: passes when lhs <= rhs + tolerance."""

    t: int
    label: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass
class CheckReport:
    name: str
    applicable: bool = True
    reason: str | None = None
    tolerance: float = SLACK_TOL
    records: list[StepRecord] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def worst_slack(self) -> float | None:
        return min((r.slack for r in self.records), default=None)

    @property
    def passed(self) -> bool:
        return all(r.slack >= -self.tolerance for r in self.records)

    @property
    def status(self) -> str:
        if not self.applicable:
            return "skipped"
        return "pass" if self.passed else "fail"

    def failures(self) -> list[StepRecord]:
        return [r for r in self.records if r.slack < -self.tolerance]

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "status": self.status,
            "records": len(self.records),
            "worst_slack": self.worst_slack,
            "params": dict(self.params),
        }
        if self.reason:
            out["reason"] = self.reason
        if not self.passed:
            out["failures"] = [
                {"t": r.t, "label": r.label, "lhs": r.lhs, "rhs": r.rhs} for r in self.failures()[:20]
            ]
        return out


def _skipped(name: str, kind: str, message: str, **params) -> CheckReport:
    return CheckReport(name, applicable=False, reason=f"{kind}: {message}", params=params)


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    first_step: int | None
    limit: np.ndarray | None


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsRow:
    """Per-step summary: target distances, follower spread, diameter, degrees.

    ``max_alpha`` and ``max_one_minus_beta_sum`` describe the degrees applied
    in the step leaving t and are None for the final recorded state.
    """

    t: int
    target_distances: tuple[float, ...]
    follower_max_distance: float | None
    diameter: float
    max_alpha: float | None
    max_one_minus_beta_sum: float | None


def distances_to(x: np.ndarray, point: np.ndarray) -> np.ndarray:
    diff = x - point
    return np.sqrt((diff * diff).sum(axis=1))


def max_target_distance(state: SystemState, scenario: Scenario, k: int) -> float:
    """Largest distance from a member of leader group k to its target."""
    if not 1 <= k <= scenario.m:
        raise ValueError(f"leader group {k} out of range 1..{scenario.m}")
    ids = scenario.partition.leader_ids[k - 1]
    return float(distances_to(state.opinions[ids], scenario.target(k)).max())


_DIAMETER_CHUNK = 512
_HULL_MIN_AGENTS = 2048


def opinion_diameter(x: np.ndarray) -> float:
    """Exact max pairwise opinion distance."""
    n, d = x.shape
    if n <= 1:
        return 0.0
    if d == 1:
        return float(x.max() - x.min())
    if n > _HULL_MIN_AGENTS and d <= 3:
        # the farthest pair lies on the convex hull; qhull shrinks the scan
        try:
            from scipy.spatial import ConvexHull, QhullError

            x = x[ConvexHull(x).vertices]
            n = x.shape[0]
        except (QhullError, ValueError):
            pass  # degenerate input, fall through to the full scan
    best = 0.0
    for start in range(0, n, _DIAMETER_CHUNK):
        block = x[start : start + _DIAMETER_CHUNK]
        d2 = ((block[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(d2.max()))
    return math.sqrt(best)


def _degree_extremes(scenario: Scenario, t: int) -> tuple[float | None, float | None]:
    part = scenario.partition
    max_alpha = None
    for ids in part.leader_ids:
        for i in ids.tolist():
            a = realized_alpha(scenario, i, t)
            max_alpha = a if max_alpha is None else max(max_alpha, a)
    max_rest = None
    for i in part.follower_ids.tolist():
        rest = 1.0 - sum(realized_betas(scenario, i, t))
        max_rest = rest if max_rest is None else max(max_rest, rest)
    return max_alpha, max_rest


def metrics_rows(trajectory: Trajectory, reference: np.ndarray | None = None) -> list[MetricsRow]:
    """Summaries for every recorded state.

    The follower spread is measured against ``reference`` (default: the first
    leader group's target; None when there are no leader groups).
    """
    scenario = trajectory.scenario
    part = scenario.partition
    if reference is None and scenario.m >= 1:
        reference = scenario.target(1)
    horizon = trajectory.horizon
    rows = []
    for state in trajectory.states:
        cds = tuple(max_target_distance(state, scenario, k) for k in range(1, scenario.m + 1))
        a = None
        if reference is not None and part.follower_ids.size:
            a = float(distances_to(state.opinions[part.follower_ids], reference).max())
        max_alpha = max_rest = None
        if state.t < horizon:
            max_alpha, max_rest = _degree_extremes(scenario, state.t)
        rows.append(MetricsRow(state.t, cds, a, opinion_diameter(state.opinions), max_alpha, max_rest))
    return rows


# ---------------------------------------------------------------------------
# Independent references and convergence detection
# ---------------------------------------------------------------------------


def hk_reference_step(opinions: np.ndarray, epsilon: float) -> np.ndarray:
    """Plain bounded-confidence averaging step, written independently of the
    engine: each agent moves to the mean of all opinions within epsilon,
    summed in ascending id order. Used as an equivalence oracle for the
    engine's no-leader reduction."""
    eps2 = epsilon * epsilon
    n = opinions.shape[0]
    out = np.empty_like(opinions)
    for i in range(n):
        diff = opinions - opinions[i]
        ids = np.nonzero((diff * diff).sum(axis=1) <= eps2)[0]
        out[i] = np.sum(opinions[ids], axis=0) / len(ids)
    return out


def detect_convergence(states, tol: float, window: int) -> ConvergenceReport:
    """Converged at the first step t >= window whose trailing ``window``
    per-agent displacements all stay within ``tol``."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if isinstance(states, Trajectory):
        states = states.states
    disps = []
    for prev, cur in zip(states, states[1:]):
        diff = cur.opinions - prev.opinions
        disps.append(float(np.sqrt((diff * diff).sum(axis=1).max())))
    for t in range(window, len(states)):
        if max(disps[t - window : t]) <= tol:
            return ConvergenceReport(True, t, states[-1].opinions)
    return ConvergenceReport(False, None, None)


# ---------------------------------------------------------------------------
# Contraction of leader groups
# ---------------------------------------------------------------------------


def check_contraction_step(
    state_t: SystemState,
    state_t1: SystemState,
    neighbors_t,
    alphas_t,
    scenario: Scenario,
    tol: float = SLACK_TOL,
) -> CheckReport:
    """One step of the leader contraction bound.

    For every leader i with degree alpha: the new distance to the target is
    at most alpha times the worst neighbor distance at time t; per group, the
    max distance contracts by the group's max degree.
    """
    report = CheckReport("contraction", tolerance=tol)
    part = scenario.partition
    for k in range(1, scenario.m + 1):
        g = scenario.target(k)
        ids = part.leader_ids[k - 1]
        dist0 = distances_to(state_t.opinions, g)
        dist1 = distances_to(state_t1.opinions, g)
        group_alpha = 0.0
        for i in ids.tolist():
            alpha = alphas_t[i]
            group_alpha = max(group_alpha, alpha)
            nbrs = neighbors_t.leader_sets[i]
            report.records.append(
                StepRecord(state_t.t, f"agent {i}", float(dist1[i]), alpha * float(dist0[nbrs].max()))
            )
        c0 = float(dist0[ids].max())
        c1 = float(dist1[ids].max())
        report.records.append(
            StepRecord(state_t.t, f"group {part.leader_names[k - 1]}", c1, group_alpha * c0)
        )
    return report


def check_contraction(trajectory: Trajectory, tol: float = SLACK_TOL) -> CheckReport:
    """Contraction bound at every step of a trajectory.

    Neighbor sets are recomputed with the exact scan and degrees re-queried
    from the schedules, independently of whatever the engine did.
    """
    scenario = trajectory.scenario
    report = CheckReport("contraction", tolerance=tol)
    if scenario.m == 0:
        report.params["note"] = "no leader groups; nothing to check"
        return report
    leader_ids = [i for ids in scenario.partition.leader_ids for i in ids.tolist()]
    for t in range(trajectory.horizon):
        state_t = trajectory.states[t]
        neighbors = neighbors_naive(state_t, scenario)
        alphas = {i: realized_alpha(scenario, i, t) for i in leader_ids}
        sub = check_contraction_step(state_t, trajectory.states[t + 1], neighbors, alphas, scenario, tol)
        report.records.extend(sub.records)
    report.params["steps"] = trajectory.horizon
    return report


# ---------------------------------------------------------------------------
# Geometric envelope toward the target
# ---------------------------------------------------------------------------


def _target_curve(trajectory: Trajectory, k: int) -> list[float]:
    return [max_target_distance(s, trajectory.scenario, k) for s in trajectory.states]


def check_target_envelope(
    trajectory: Trajectory,
    k: int,
    delta: float,
    tol: float = SLACK_TOL,
    target_tol: float = 1e-9,
) -> CheckReport:
    """Geometric decay of leader group k's max target distance.

    Requires delta in [0, 1) with every realized degree of the group bounded
    by delta; then C_t <= delta^t * C_0 at every step, and C_T <= target_tol
    once the horizon passes log(target_tol / C_0) / log(delta).
    """
    scenario = trajectory.scenario
    name = "target_envelope"
    if not 1 <= k <= scenario.m:
        return _skipped(name, INAPPLICABLE, f"no leader group {k}")
    if not 0.0 <= delta < 1.0:
        return _skipped(name, INAPPLICABLE, f"delta {delta} outside [0, 1)")
    ids = scenario.partition.leader_ids[k - 1].tolist()
    for t in range(trajectory.horizon):
        for i in ids:
            a = realized_alpha(scenario, i, t)
            if a > delta:
                return _skipped(
                    name, INAPPLICABLE, f"degree {a} of agent {i} at t={t} exceeds delta {delta}",
                    delta=delta, k=k,
                )
    curve = _target_curve(trajectory, k)
    c0 = curve[0]
    report = CheckReport(name, tolerance=tol, params={"k": k, "delta": delta, "c0": c0})
    for t, ct in enumerate(curve):
        report.records.append(StepRecord(t, "envelope", ct, delta**t * c0))
    if c0 <= target_tol:
        needed = 0
    elif delta == 0.0:
        needed = 1
    else:
        needed = math.ceil(math.log(target_tol / c0) / math.log(delta))
    report.params["target_tol"] = target_tol
    report.params["needed_horizon"] = needed
    report.params["final_value"] = curve[-1]
    if trajectory.horizon >= needed:
        report.records.append(StepRecord(trajectory.horizon, "final_target", curve[-1], target_tol))
    else:
        report.params["note"] = "horizon below certification threshold; envelope only"
    return report


def check_target_envelope_all(
    trajectory: Trajectory,
    tol: float = SLACK_TOL,
    target_tol: float = 1e-9,
) -> CheckReport:
    """Envelope check for every leader group with delta measured from the run.

    Per group, delta is the largest realized degree over the trajectory.
    Groups whose measured delta reaches 1 are noted and skipped; the report
    is inapplicable only when no group qualifies.
    """
    scenario = trajectory.scenario
    name = "target_envelope"
    if scenario.m == 0:
        return _skipped(name, INAPPLICABLE, "no leader groups")
    merged = CheckReport(name, tolerance=tol, params={"target_tol": target_tol})
    eligible = 0
    for k in range(1, scenario.m + 1):
        ids = scenario.partition.leader_ids[k - 1].tolist()
        delta = 0.0
        for t in range(trajectory.horizon):
            for i in ids:
                delta = max(delta, realized_alpha(scenario, i, t))
        gname = scenario.partition.leader_names[k - 1]
        if delta >= 1.0:
            merged.params[f"group_{gname}"] = "skipped (measured delta reaches 1)"
            continue
        eligible += 1
        sub = check_target_envelope(trajectory, k, delta, tol, target_tol)
        merged.records.extend(
            StepRecord(r.t, f"{gname}: {r.label}", r.lhs, r.rhs) for r in sub.records
        )
        merged.params[f"delta_{gname}"] = delta
        merged.params[f"final_{gname}"] = sub.params.get("final_value")
    if not eligible:
        return _skipped(name, INAPPLICABLE, "every leader group has measured delta at 1")
    return merged


def target_envelope_along(
    trajectory: Trajectory,
    k: int,
    delta: float,
    steps,
    tol: float = SLACK_TOL,
) -> CheckReport:
    """Envelope applied only along designated contraction steps.

    At every step the group's max target distance is nonincreasing; at each
    step in ``steps`` the group's degrees must be bounded by delta, so the
    bound gains one delta factor there: C_t <= delta^(count of designated
    steps before t) * C_0.
    """
    scenario = trajectory.scenario
    name = "target_envelope_subsequence"
    if not 1 <= k <= scenario.m:
        return _skipped(name, INAPPLICABLE, f"no leader group {k}")
    if not 0.0 <= delta < 1.0:
        return _skipped(name, INAPPLICABLE, f"delta {delta} outside [0, 1)")
    steps = sorted(set(int(s) for s in steps))
    if any(s < 0 or s >= trajectory.horizon for s in steps):
        return _skipped(name, INAPPLICABLE, "designated steps outside the trajectory")
    ids = scenario.partition.leader_ids[k - 1].tolist()
    for s in steps:
        for i in ids:
            a = realized_alpha(scenario, i, s)
            if a > delta:
                return _skipped(
                    name, INAPPLICABLE, f"degree {a} of agent {i} at designated step {s} exceeds {delta}"
                )
    curve = _target_curve(trajectory, k)
    report = CheckReport(name, tolerance=tol, params={"k": k, "delta": delta, "steps": len(steps)})
    count = 0
    next_idx = 0
    for t, ct in enumerate(curve):
        while next_idx < len(steps) and steps[next_idx] < t:
            count += 1
            next_idx += 1
        report.records.append(StepRecord(t, "envelope", ct, delta**count * curve[0]))
    return report


# ---------------------------------------------------------------------------
# Ball invariance
# ---------------------------------------------------------------------------


def check_ball_invariance(
    trajectory: Trajectory,
    center: np.ndarray,
    radius: float,
    tol: float = BALL_TOL,
) -> CheckReport:
    """Containment in the ball around the single leader group's target.

    Finds the first step with every opinion inside the ball and asserts
    containment at every later step. Vacuous pass when the ball is never
    entered.
    """
    scenario = trajectory.scenario
    name = "ball_invariance"
    if scenario.m != 1:
        return _skipped(name, INAPPLICABLE, f"needs exactly one leader group, found {scenario.m}")
    center = np.asarray(center, dtype=np.float64)
    if center.shape != (scenario.dimension,) or not np.array_equal(center, scenario.target(1)):
        return _skipped(name, INAPPLICABLE, "center must equal the leader group's target")
    report = CheckReport(name, tolerance=tol, params={"radius": radius})
    radii = [float(distances_to(s.opinions, center).max()) for s in trajectory.states]
    t0 = next((t for t, r in enumerate(radii) if r <= radius), None)
    if t0 is None:
        report.params["t0"] = "never"
        report.reason = "ball never entered within the horizon; containment holds vacuously"
        return report
    report.params["t0"] = t0
    for t in range(t0 + 1, len(radii)):
        report.records.append(StepRecord(t, "containment", radii[t], radius))
    return report


# ---------------------------------------------------------------------------
# Consensus with one leader group
# ---------------------------------------------------------------------------


def _first_stable_suffix(flags: list[bool], start: int) -> int | None:
    """Smallest p >= start with flags[p:] all true."""
    p = None
    for t in range(len(flags) - 1, start - 1, -1):
        if flags[t]:
            p = t
        else:
            break
    return p


def check_consensus_bound(
    trajectory: Trajectory,
    tol: float = SLACK_TOL,
    consensus_tol: float = CONSENSUS_TOL,
) -> CheckReport:
    """Follower convergence bound for a single leader group.

    Hypotheses are measured from the run: the first step t* with every
    opinion strictly inside the epsilon ball around the target (delta is the
    radius attained there), and gamma, the largest degree slack
    max(1 - beta, alpha) realized from t* on, which must stay below 1. With
    p the first step after which the leader distance stays below
    epsilon - delta, follower distances A satisfy
    A_(t+1) <= gamma^(t-p+1) A_p + (t-p+1) gamma^(t-p) C_p for t >= p,
    and the final state must lie within consensus_tol of the target.
    """
    scenario = trajectory.scenario
    name = "consensus_bound"
    if scenario.m != 1:
        return _skipped(name, INAPPLICABLE, f"needs exactly one leader group, found {scenario.m}")
    part = scenario.partition
    g = scenario.target(1)
    eps = scenario.epsilon
    horizon = trajectory.horizon

    radii = [float(distances_to(s.opinions, g).max()) for s in trajectory.states]
    curve_c = _target_curve(trajectory, 1)
    fol = part.follower_ids
    curve_a = [
        float(distances_to(s.opinions[fol], g).max()) if fol.size else 0.0 for s in trajectory.states
    ]

    t_star = next((t for t, r in enumerate(radii) if r < eps), None)
    if t_star is None:
        return _skipped(name, INAPPLICABLE, "opinions never entered the epsilon ball around the target")
    if t_star >= horizon:
        return _skipped(name, INAPPLICABLE, "ball entered only at the final state; no steps to bound")
    delta = radii[t_star]

    gamma = 0.0
    for s in range(t_star, horizon):
        for i in fol.tolist():
            gamma = max(gamma, 1.0 - realized_betas(scenario, i, s)[0])
        for i in part.leader_ids[0].tolist():
            gamma = max(gamma, realized_alpha(scenario, i, s))
    if gamma >= 1.0:
        return _skipped(
            name, INAPPLICABLE, f"measured gamma {gamma} is not below 1",
            gamma=gamma, t_star=t_star, delta=delta,
        )

    inside = [c < eps - delta for c in curve_c]
    p = _first_stable_suffix(inside, t_star)
    if p is None:
        return _skipped(
            name, INAPPLICABLE, "leader distances never stayed below epsilon - delta",
            gamma=gamma, t_star=t_star, delta=delta,
        )

    report = CheckReport(
        name,
        tolerance=tol,
        params={
            "t_star": t_star,
            "delta": delta,
            "gamma": gamma,
            "p": p,
            "final_distance": radii[-1],
            "consensus_tol": consensus_tol,
            "hypothesis_window": "measured over horizon",
        },
    )
    a_p, c_p = curve_a[p], curve_c[p]
    for t in range(p, horizon):
        bound = gamma ** (t - p + 1) * a_p + (t - p + 1) * gamma ** (t - p) * c_p
        report.records.append(StepRecord(t + 1, "follower_bound", curve_a[t + 1], bound))
    report.records.append(StepRecord(horizon, "final_consensus", radii[-1], consensus_tol))
    return report


# ---------------------------------------------------------------------------
# Mixture limit with several leader groups
# ---------------------------------------------------------------------------


def check_mixture_limit(
    trajectory: Trajectory,
    tol: float = SLACK_TOL,
    consensus_tol: float = CONSENSUS_TOL,
    stabilization_tol: float = STABILIZATION_TOL,
    window: int = 10,
) -> CheckReport:
    """Limit point of followers under several leader groups.

    Requires stabilized betas (spread within stabilization_tol over the
    trailing window), a step at which all opinions and all targets fit in a
    ball of radius delta < epsilon around one target, and measured gamma < 1.
    Each follower must end within consensus_tol of the beta-weighted mixture
    of the targets; each leader ends at its own target.
    """
    scenario = trajectory.scenario
    name = "mixture_limit"
    part = scenario.partition
    m = scenario.m
    horizon = trajectory.horizon
    if m < 1:
        return _skipped(name, INAPPLICABLE, "needs at least one leader group")
    if horizon < 1:
        return _skipped(name, INAPPLICABLE, "trajectory has no steps")

    tail = range(max(0, horizon - window), horizon)
    limits: dict[int, np.ndarray] = {}
    for i in part.follower_ids.tolist():
        values = np.asarray([realized_betas(scenario, i, s) for s in tail])
        spread = float((values.max(axis=0) - values.min(axis=0)).max()) if values.size else 0.0
        if spread > stabilization_tol:
            return _skipped(
                name, INAPPLICABLE, f"betas of agent {i} not stabilized (spread {spread:.3g})"
            )
        final = values[-1]
        total = float(final.sum())
        if total == 0.0:
            return _skipped(name, UNDEFINED_LIMIT, f"agent {i} has zero beta sum; mixture undefined")
        limits[i] = (final / total) @ scenario.targets

    t_star = delta = center_group = None
    for t, state in enumerate(trajectory.states):
        for j in range(1, m + 1):
            r = max(
                float(distances_to(state.opinions, scenario.target(j)).max()),
                float(distances_to(scenario.targets, scenario.target(j)).max()),
            )
            if r < scenario.epsilon:
                t_star, delta, center_group = t, r, j
                break
        if t_star is not None:
            break
    if t_star is None:
        return _skipped(
            name, INAPPLICABLE, "no step where all opinions and targets fit one epsilon ball"
        )
    if t_star >= horizon:
        return _skipped(name, INAPPLICABLE, "ball entered only at the final state; no steps to bound")

    gamma = 0.0
    for s in range(t_star, horizon):
        for i in part.follower_ids.tolist():
            gamma = max(gamma, 1.0 - sum(realized_betas(scenario, i, s)))
        for k in range(1, m + 1):
            for i in part.leader_ids[k - 1].tolist():
                gamma = max(gamma, realized_alpha(scenario, i, s))
    if gamma >= 1.0:
        return _skipped(
            name, INAPPLICABLE, f"measured gamma {gamma} is not below 1",
            gamma=gamma, t_star=t_star, delta=delta,
        )

    report = CheckReport(
        name,
        tolerance=tol,
        params={
            "t_star": t_star,
            "delta": delta,
            "gamma": gamma,
            "ball_center_group": center_group,
            "consensus_tol": consensus_tol,
        },
    )
    final = trajectory.final_state.opinions
    for i in sorted(limits):
        lhs = float(np.sqrt(((final[i] - limits[i]) ** 2).sum()))
        report.records.append(StepRecord(horizon, f"follower {i} mixture", lhs, consensus_tol))
    for k in range(1, m + 1):
        dists = distances_to(final[part.leader_ids[k - 1]], scenario.target(k))
        report.records.append(
            StepRecord(horizon, f"group {part.leader_names[k - 1]} target", float(dists.max()), consensus_tol)
        )
    return report


# ---------------------------------------------------------------------------
# Independent subsystems
# ---------------------------------------------------------------------------


def subsystem_scenario(scenario: Scenario, k: int, follower_ids) -> tuple[Scenario, np.ndarray]:
    """Extract leader group k plus the given followers as a standalone system.

    Agents are reindexed in ascending original-id order; schedules keep their
    original agent keys through a remapping wrapper, and the follower beta
    vector is restricted to the single remaining group. Returns the scenario
    and the original ids (indexed by new id).
    """
    part = scenario.partition
    follower_ids = np.asarray(sorted(follower_ids), dtype=np.int64)
    originals = np.asarray(sorted(follower_ids.tolist() + part.leader_ids[k - 1].tolist()), dtype=np.int64)
    orig_tuple = tuple(int(i) for i in originals)
    new_id = {orig: new for new, orig in enumerate(orig_tuple)}

    new_followers = np.asarray([new_id[i] for i in follower_ids.tolist()], dtype=np.int64)
    new_leaders = np.asarray([new_id[i] for i in part.leader_ids[k - 1].tolist()], dtype=np.int64)
    n = len(orig_tuple)
    group_of = np.zeros(n, dtype=np.int64)
    group_of[new_leaders] = 1

    names, kinds, members = [], [], []
    if new_followers.size:
        names.append(part.follower_name or "followers")
        kinds.append("follower")
        members.append(new_followers)
    names.append(part.leader_names[k - 1])
    kinds.append("leader")
    members.append(new_leaders)

    alphas: list = [None] * n
    betas: list = [None] * n
    for new, orig in enumerate(orig_tuple):
        if group_of[new]:
            alphas[new] = RemappedAgents(scenario.alphas[orig], orig_tuple)
        else:
            betas[new] = (RemappedAgents(scenario.betas[orig][k - 1], orig_tuple),)

    sub = Scenario(
        dimension=scenario.dimension,
        epsilon=scenario.epsilon,
        partition=Partition(
            group_names=tuple(names),
            group_kinds=tuple(kinds),
            group_members=tuple(members),
            group_of=group_of,
            follower_ids=new_followers,
            leader_ids=(new_leaders,),
            leader_names=(part.leader_names[k - 1],),
            follower_name=part.follower_name if new_followers.size else None,
        ),
        targets=scenario.targets[k - 1 : k],
        initial_state=SystemState(0, scenario.initial_state.opinions[originals]),
        alphas=tuple(alphas),
        betas=tuple(betas),
        engine=scenario.engine,
        base_seed=scenario.base_seed,
        canonical={},
    )
    return sub, originals


def derive_subsystem_assignment(scenario: Scenario, horizon: int) -> dict[int, int] | None:
    """Map each follower to the unique leader group it can mix toward.

    A follower belongs to group k when its beta toward k is positive at some
    step and its betas toward every other group are identically zero. Returns
    None when any follower has no group or several."""
    assignment: dict[int, int] = {}
    for i in scenario.partition.follower_ids.tolist():
        active = set()
        for s in range(max(horizon, 1)):
            for k, b in enumerate(realized_betas(scenario, i, s), start=1):
                if b > 0.0:
                    active.add(k)
        if len(active) != 1:
            return None
        assignment[i] = active.pop()
    return assignment


def check_subsystem_independence(
    scenario: Scenario,
    horizon: int | None = None,
    tol: float = SLACK_TOL,
    consensus_tol: float = CONSENSUS_TOL,
    joint: Trajectory | None = None,
    threads: int = 1,
) -> CheckReport:
    """Spatially separated leader groups each reach their own target.

    Followers are assigned to the single group their betas point at; each
    subsystem (its leaders plus assigned followers) must start inside a ball
    of radius delta_k < epsilon around its target with measured degree bound
    gamma_k < 1. Each subsystem is then re-run standalone and every agent
    must end within consensus_tol of its group target, in the standalone run
    and in the joint run. Any epsilon-contact between different subsystems in
    the joint run is flagged as cross talk and the premise fails.
    """
    name = "subsystem_independence"
    if scenario.m < 1:
        return _skipped(name, INAPPLICABLE, "needs at least one leader group")
    if joint is None:
        joint = run(scenario, horizon, threads=threads)
    horizon = joint.horizon
    part = scenario.partition

    assignment = derive_subsystem_assignment(scenario, horizon)
    if assignment is None:
        return _skipped(
            name, INAPPLICABLE, "followers do not split into one leader group each (betas overlap or vanish)"
        )
    subsystem_of = dict(assignment)
    for k in range(1, scenario.m + 1):
        for i in part.leader_ids[k - 1].tolist():
            subsystem_of[i] = k

    # cross-subsystem contact scan on the joint run
    for state in joint.states:
        nbrs = neighbors_naive(state, scenario)
        for i in part.follower_ids.tolist():
            a = assignment[i]
            for j in nbrs.follower_sets[i].tolist():
                if assignment[j] != a:
                    return _skipped(
                        name, CROSSTALK,
                        f"followers {i} and {j} of different subsystems are neighbors at t={state.t}",
                    )
            for b, ids in enumerate(nbrs.follower_leader_sets[i], start=1):
                if b != a and ids.size:
                    return _skipped(
                        name, CROSSTALK,
                        f"follower {i} (subsystem {a}) sees leader group {b} at t={state.t}",
                    )

    report = CheckReport(name, tolerance=tol, params={"consensus_tol": consensus_tol, "cross_contacts": 0})
    x0 = scenario.initial_state.opinions
    final_joint = joint.final_state.opinions
    for k in range(1, scenario.m + 1):
        members = np.asarray(sorted(i for i, s in subsystem_of.items() if s == k), dtype=np.int64)
        g = scenario.target(k)
        delta_k = float(distances_to(x0[members], g).max())
        if delta_k >= scenario.epsilon:
            return _skipped(
                name, INAPPLICABLE,
                f"subsystem {k} starts at radius {delta_k:.6g}, not inside the epsilon ball",
            )
        gamma_k = 0.0
        for s in range(horizon):
            for i in members.tolist():
                if subsystem_of[i] == k and i in assignment:
                    gamma_k = max(gamma_k, 1.0 - realized_betas(scenario, i, s)[k - 1])
                elif subsystem_of[i] == k:
                    gamma_k = max(gamma_k, realized_alpha(scenario, i, s))
        if gamma_k >= 1.0:
            return _skipped(name, INAPPLICABLE, f"measured gamma {gamma_k} of subsystem {k} is not below 1")
        report.params[f"delta_{k}"] = delta_k
        report.params[f"gamma_{k}"] = gamma_k

        followers_k = [i for i in members.tolist() if i in assignment]
        sub, originals = subsystem_scenario(scenario, k, followers_k)
        alone = run(sub, horizon, stop_tol=None, threads=threads)
        dists = distances_to(alone.final_state.opinions, g)
        for new, orig in enumerate(originals.tolist()):
            report.records.append(
                StepRecord(alone.horizon, f"standalone agent {orig}", float(dists[new]), consensus_tol)
            )
        joint_dists = distances_to(final_joint[members], g)
        for pos, i in enumerate(members.tolist()):
            report.records.append(
                StepRecord(horizon, f"joint agent {i}", float(joint_dists[pos]), consensus_tol)
            )
    return report
