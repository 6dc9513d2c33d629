"""Mean-payoff objectives, reduced to weighted reachability.

The long-run average reward of a play is decided inside the end component
where the play eventually stays.  Collapsing every MEC to a representative
whose ``stay`` action leads to a fresh absorbing target rewarded with the
component's optimal gain turns the mean-payoff problem into weighted
reachability on a stopping MDP with the same achievable prospects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import Mec, Scc, mecs
from .mdp import (
    STAY,
    CptSolveResult,
    Direction,
    Mode,
    _fresh_name,
    collapse_mecs,
    mdp_cpt_value,
)
from .model import (
    MeanPayoffObjective,
    Model,
    ModelKind,
    Strategy,
    StrategyScope,
    WeightedReachObjective,
)
from .numerics import LinearProgram, LinearSystem, solve_lp, solve_linear
from .prospects import CptParams


@dataclass(frozen=True)
class MecGain:
    mec: Mec
    gain_max: float
    gain_min: float


def bscc_mean_payoff(model: Model, rewards: MeanPayoffObjective, component: Scc) -> float:
    """Long-run average reward inside a bottom SCC of a chain: the stationary
    distribution (nu P = nu, sum nu = 1) weighted by the state rewards."""
    if model.kind is not ModelKind.MC:
        raise ValidationError("bscc_mean_payoff: expected a chain")
    states = list(component.states)
    idx = {s: i for i, s in enumerate(states)}
    n = len(states)
    p = np.zeros((n, n))
    for s in states:
        for t, pr in model.successors(s, model.single_action(s)).items():
            if pr <= 0.0:
                continue
            if t not in idx:
                raise ValidationError(f"bscc_mean_payoff: {component.states} is not closed")
            p[idx[s], idx[t]] = pr
    a = p.T - np.eye(n)
    a[-1, :] = 1.0  # replace one balance row with the normalization
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    nu = solve_linear(LinearSystem(matrix=a, rhs=rhs))
    return float(sum(nu[idx[s]] * rewards.rewards.get(s, 0.0) for s in states))


def mec_optimal_gain(model: Model, rewards: MeanPayoffObjective, mec: Mec,
                     sense: Direction = Direction.MAX) -> float:
    """Best (or worst) long-run average reward achievable while staying in the
    component: LP over stationary occupation measures on its internal pairs."""
    pairs = list(mec.actions)
    idx = {s: i for i, s in enumerate(mec.states)}
    n = len(pairs)
    sign = 1.0 if sense is Direction.MAX else -1.0
    objective = sign * np.array([rewards.rewards.get(s, 0.0) for s, _ in pairs])
    lp = LinearProgram(objective=objective)
    balance = np.zeros((len(mec.states), n))
    for j, (s, a) in enumerate(pairs):
        balance[idx[s], j] += 1.0
        for t, p in model.successors(s, a).items():
            if p > 0.0:
                balance[idx[t], j] -= p
    for row in balance:
        lp.add_row(row, "=", 0.0)
    lp.add_row(np.ones(n), "=", 1.0)
    sol = solve_lp(lp)
    if not sol.optimal:
        raise ValidationError(f"mec_optimal_gain: LP status {sol.status}")
    return sign * float(sol.value)


def mec_gains(model: Model, rewards: MeanPayoffObjective) -> list[MecGain]:
    return [MecGain(mec=c,
                    gain_max=mec_optimal_gain(model, rewards, c, Direction.MAX),
                    gain_min=mec_optimal_gain(model, rewards, c, Direction.MIN))
            for c in mecs(model)]


def weighted_mec_quotient(model: Model, rewards: MeanPayoffObjective,
                          sense: Direction = Direction.MAX
                          ) -> tuple[Model, WeightedReachObjective, dict]:
    """Collapse every MEC; its stay action reaches a fresh absorbing target
    rewarded with the component's optimal gain.  Immediately stopping.

    The maximizing direction values each component at its best stationary
    gain; for minimization the symmetric choice (worst gain) is forced by the
    same dominance argument.
    """
    components = mecs(model)
    if not components:
        raise ValidationError("weighted_mec_quotient: a finite MDP must contain a MEC")
    parts, back_map, action_map, rep_names = collapse_mecs(model, set(), components)
    targets: dict[str, float] = {}
    for i, comp in enumerate(components):
        gain = mec_optimal_gain(model, rewards, comp, sense)
        rep = rep_names[i]
        goal = _fresh_name(rep + "_gain", parts["taken"])
        parts["states"].append(goal)
        parts["actions"][goal] = (STAY,)
        parts["transitions"][goal] = {STAY: {goal: 1.0}}
        parts["actions"][rep] = parts["actions"][rep] + (STAY,)
        parts["transitions"][rep][STAY] = {goal: 1.0}
        action_map[(rep, STAY)] = None
        back_map[goal] = goal
        targets[goal] = gain
    quotient = Model(kind=ModelKind.MDP, states=tuple(parts["states"]),
                     initial=parts["initial"], actions=parts["actions"],
                     transitions=parts["transitions"])
    objective = WeightedReachObjective(targets=targets, penalty=0.0)
    return quotient, objective, {"back_map": back_map, "action_map": action_map}


def mp_cpt_value(model: Model, rewards: MeanPayoffObjective, params: CptParams,
                 eps: float, direction: Direction = Direction.MAX,
                 mode: Mode = Mode.CPT, bnb: bool = True,
                 cell_budget: int = 500) -> CptSolveResult:
    """CPT (or expected-utility) value of a mean-payoff MDP via the reduction.

    The returned strategy refers to the weighted quotient: a ``stay`` choice
    means committing to the collapsed component at its optimal gain.
    """
    quotient, objective, _ = weighted_mec_quotient(model, rewards, sense=direction)
    result = mdp_cpt_value(quotient, objective, params, eps, direction=direction,
                           mode=mode, bnb=bnb, cell_budget=cell_budget)
    old = result.strategy
    note = ("states refer to the weighted MEC quotient; stay commits to a "
            "collapsed component at its optimal gain")
    result.strategy = Strategy(choices=old.choices, scope=StrategyScope.QUOTIENT,
                               notes=(old.notes + "; " if old.notes else "") + note)
    return result
