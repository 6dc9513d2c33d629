"""Seeded random model/prospect generators shared by the property tests."""

from __future__ import annotations

import numpy as np

from cptmdp.model import Model, ModelKind, Strategy, StrategyScope, WeightedReachObjective
from cptmdp.prospects import Prospect


def random_distribution(rng: np.random.Generator, support: list[str],
                        sparsity: float = 0.5) -> dict[str, float]:
    keep = [s for s in support if rng.random() > sparsity] or \
        [support[rng.integers(len(support))]]
    raw = rng.random(len(keep)) + 0.05
    raw /= raw.sum()
    return {s: float(p) for s, p in zip(keep, raw)}


def random_mc(rng: np.random.Generator, n_states: int = 8, n_targets: int = 2,
              negative: bool = True) -> tuple[Model, WeightedReachObjective]:
    """Random chain with absorbing rewarded targets; targets stay reachable-ish
    but some mass may drift into reward-free sinks."""
    names = [f"q{i}" for i in range(n_states)]
    targets = names[-n_targets:] if n_targets else []
    transitions = {}
    actions = {}
    for s in names:
        actions[s] = ("a",)
        if s in targets:
            transitions[s] = {"a": {s: 1.0}}
        else:
            transitions[s] = {"a": random_distribution(rng, names)}
    model = Model(kind=ModelKind.MC, states=tuple(names), initial=names[0],
                  actions=actions, transitions=transitions)
    rewards = {}
    for t in targets:
        r = float(rng.integers(1, 30))
        if negative and rng.random() < 0.5:
            r = -r
        rewards[t] = r
    return model, WeightedReachObjective(targets=rewards)


def random_mdp(rng: np.random.Generator, n_states: int = 8, n_targets: int = 3,
               max_actions: int = 3, negative: bool = True,
               absorbing_bias: float = 0.0) -> tuple[Model, WeightedReachObjective]:
    """Random MDP with absorbing rewarded targets.

    ``absorbing_bias`` forces every action to put at least that much mass on
    the absorbing states (keeps the transient system regular under every
    mixing, which the strategy-grid oracle needs).
    """
    names = [f"q{i}" for i in range(n_states)]
    targets = names[-n_targets:] if n_targets else []
    absorbing = list(targets)
    transitions = {}
    actions = {}
    for s in names:
        if s in targets:
            actions[s] = ("a",)
            transitions[s] = {"a": {s: 1.0}}
            continue
        n_act = int(rng.integers(1, max_actions + 1))
        acts = tuple(f"a{j}" for j in range(n_act))
        actions[s] = acts
        transitions[s] = {}
        for a in acts:
            dist = random_distribution(rng, names)
            if absorbing_bias > 0.0 and absorbing:
                sink = absorbing[int(rng.integers(len(absorbing)))]
                dist = {t: p * (1.0 - absorbing_bias) for t, p in dist.items()}
                dist[sink] = dist.get(sink, 0.0) + absorbing_bias
            transitions[s][a] = dist
    model = Model(kind=ModelKind.MDP, states=tuple(names), initial=names[0],
                  actions=actions, transitions=transitions)
    rewards = {}
    for t in targets:
        r = float(rng.integers(1, 30))
        if negative and rng.random() < 0.5:
            r = -r
        rewards[t] = r
    return model, WeightedReachObjective(targets=rewards)


def random_grid_mdp(rng: np.random.Generator, n_decision: int,
                    n_targets: int = 3) -> tuple[Model, WeightedReachObjective]:
    """Small MDP for the strategy-grid oracle: at most three decision states
    with exactly two actions each, every action leaking into the targets."""
    n_states = n_decision + int(rng.integers(1, 3)) + n_targets
    names = [f"q{i}" for i in range(n_states)]
    targets = names[-n_targets:]
    decision = names[:n_decision]
    transitions = {}
    actions = {}
    for s in names:
        if s in targets:
            actions[s] = ("a",)
            transitions[s] = {"a": {s: 1.0}}
            continue
        acts = ("a0", "a1") if s in decision else ("a0",)
        actions[s] = acts
        transitions[s] = {}
        for a in acts:
            dist = random_distribution(rng, names, sparsity=0.4)
            sink = targets[int(rng.integers(n_targets))]
            dist = {t: p * 0.7 for t, p in dist.items()}
            dist[sink] = dist.get(sink, 0.0) + 0.3
            transitions[s][a] = dist
    model = Model(kind=ModelKind.MDP, states=tuple(names), initial=names[0],
                  actions=actions, transitions=transitions)
    rewards = {}
    for t in targets:
        r = float(rng.integers(1, 10))
        if rng.random() < 0.5:
            r = -r
        rewards[t] = r
    return model, WeightedReachObjective(targets=rewards)


def random_memoryless_strategy(rng: np.random.Generator, model: Model) -> Strategy:
    choices = {}
    for s in model.states:
        acts = model.actions[s]
        raw = rng.random(len(acts)) + 0.05
        raw /= raw.sum()
        choices[s] = {a: float(p) for a, p in zip(acts, raw)}
    return Strategy(choices=choices, scope=StrategyScope.ORIGINAL)


def random_prospect(rng: np.random.Generator, k: int, sign: str = "mixed",
                    full: bool = True) -> Prospect:
    """Random prospect with k distinct outcomes of the requested sign pattern."""
    while True:
        outcomes = np.sort(rng.uniform(-50.0, 50.0, size=k))
        if sign == "positive":
            outcomes = np.sort(rng.uniform(0.5, 50.0, size=k))
        elif sign == "negative":
            outcomes = np.sort(rng.uniform(-50.0, -0.5, size=k))
        if np.all(np.diff(outcomes) > 1e-6):
            break
    raw = rng.random(k) + 1e-3
    if full:
        probs = raw / raw.sum()
    else:
        # sub-distribution: total mass at most 1 so rank sums stay in [0, 1]
        probs = raw / raw.sum() * rng.uniform(0.05, 1.0)
    return Prospect(tuple(float(o) for o in outcomes), tuple(float(p) for p in probs),
                    full_distribution=full)
