"""Shared scenario builders for the test suite."""

from __future__ import annotations

import numpy as np

from lfmix import Scenario, build_scenario


def config(
    *,
    dimension=1,
    epsilon=1.0,
    followers=0,
    leader_groups=(),
    initial=None,
    random_init=None,
    follower_betas=None,
    horizon=50,
    stop_tol=None,
    stop_window=1,
    neighbor_strategy="auto",
    per_agent_betas=None,
) -> dict:
    """Compact scenario dict builder.

    ``leader_groups`` is a list of (name, size, target, alpha_spec);
    ``follower_betas`` is a list of schedule specs (one per leader group).
    """
    groups = []
    schedules = {}
    if followers:
        groups.append({"name": "crowd", "kind": "follower", "members": followers})
        entry = {"betas": follower_betas if follower_betas is not None else []}
        if per_agent_betas:
            entry["per_agent"] = {str(i): {"betas": specs} for i, specs in per_agent_betas.items()}
        schedules["crowd"] = entry
    for name, size, target, alpha_spec in leader_groups:
        groups.append({"name": name, "kind": "leader", "members": size, "target": list(target)})
        schedules[name] = {"alpha": alpha_spec}
    if initial is not None:
        init = {"explicit": [list(row) for row in initial]}
    else:
        init = {"random": random_init or {"distribution": "uniform_box", "low": 0.0, "high": 1.0, "seed": 0}}
    return {
        "dimension": dimension,
        "epsilon": epsilon,
        "groups": groups,
        "initial_opinions": init,
        "schedules": schedules,
        "engine": {
            "neighbor_strategy": neighbor_strategy,
            "horizon": horizon,
            "stop": {"tol": stop_tol, "window": stop_window},
        },
    }


def constant(value: float) -> dict:
    return {"kind": "constant", "value": value}


def scenario(**kwargs) -> Scenario:
    return build_scenario(config(**kwargs))


def random_alpha_spec(rng: np.random.Generator) -> dict:
    """Constant or seeded-random degree in [0, 1]."""
    if rng.random() < 0.5:
        return constant(round(float(rng.uniform(0.0, 1.0)), 6))
    lo = round(float(rng.uniform(0.0, 0.8)), 6)
    hi = round(float(rng.uniform(lo, 1.0)), 6)
    return {"kind": "seeded_random", "seed": int(rng.integers(0, 2**31)), "low": lo, "high": hi}


def random_beta_specs(rng: np.random.Generator, m: int) -> list[dict]:
    """m beta specs whose per-step sums stay below 1."""
    caps = rng.uniform(0.0, 1.0, size=m)
    total = caps.sum()
    if total > 0.9:
        caps = caps * (0.9 / total)
    specs = []
    for cap in caps:
        cap = round(float(cap), 6)
        if rng.random() < 0.5:
            specs.append(constant(cap))
        else:
            lo = round(float(rng.uniform(0.0, cap)), 6)
            specs.append({"kind": "seeded_random", "seed": int(rng.integers(0, 2**31)), "low": lo, "high": cap})
    return specs


def random_mixed_config(
    rng: np.random.Generator,
    *,
    n_followers_hi=20,
    leader_size_hi=6,
    d_hi=5,
    m_hi=4,
    m_lo=1,
    horizon=200,
) -> dict:
    """Randomized mixed scenario within desk-scale bounds."""
    d = int(rng.integers(1, d_hi + 1))
    m = int(rng.integers(m_lo, m_hi + 1))
    n_followers = int(rng.integers(0, n_followers_hi + 1))
    if n_followers == 0 and m == 0:
        n_followers = 2
    leader_groups = []
    for k in range(m):
        size = int(rng.integers(1, leader_size_hi + 1))
        target = [round(float(v), 6) for v in rng.uniform(0.0, 1.0, size=d)]
        leader_groups.append((f"g{k + 1}", size, target, random_alpha_spec(rng)))
    return config(
        dimension=d,
        epsilon=round(float(rng.uniform(0.15, 1.5)), 6),
        followers=n_followers,
        leader_groups=leader_groups,
        random_init={"distribution": "uniform_box", "low": 0.0, "high": 1.0, "seed": int(rng.integers(0, 2**31))},
        follower_betas=random_beta_specs(rng, m) if n_followers else None,
        horizon=horizon,
    )
