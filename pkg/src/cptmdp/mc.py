"""Chain solver: absorption probabilities, the induced prospect, and its CPT value.

A chain under a weighted-reachability objective induces a prospect: the
probability of each outcome is the probability of absorption into that
outcome's obtainset.  Applying ``cpt`` (or ``eu``) to the induced prospect
gives the chain's value exactly, up to the precision of the utility and
weighting evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import obtainset
from .model import Model, ModelKind, WeightedReachObjective, outcome_vector, validate_objective
from .numerics import lu_factor, lu_solve
from .prospects import CptParams, Prospect, cpt, eu


@dataclass(frozen=True)
class InducedProspect:
    prospect: Prospect
    per_outcome_states: dict[float, tuple[str, ...]]


def absorption_probabilities(model: Model, absorbing_sets: list[tuple[str, ...]]
                             ) -> tuple[float, ...]:
    """Probability of eventual absorption into each closed set, from the initial state.

    Solves the linear system over the transient states; each set must be
    closed and together they must absorb almost every path.
    """
    if model.kind is not ModelKind.MC:
        raise ValidationError("absorption_probabilities: expected a chain")
    members: dict[str, int] = {}
    for j, group in enumerate(absorbing_sets):
        for s in group:
            if s in members:
                raise ValidationError(f"absorption_probabilities: state {s!r} in two sets")
            members[s] = j
    for j, group in enumerate(absorbing_sets):
        group_set = set(group)
        for s in group:
            for t, p in model.successors(s, model.single_action(s)).items():
                if p > 0.0 and t not in group_set:
                    raise ValidationError(
                        f"absorption_probabilities: set {j} is not closed (edge {s!r}->{t!r})")

    if model.initial in members:
        return tuple(1.0 if members[model.initial] == j else 0.0
                     for j in range(len(absorbing_sets)))

    transient = [s for s in model.states if s not in members]
    idx = {s: i for i, s in enumerate(transient)}
    n = len(transient)
    q = np.zeros((n, n))
    r = np.zeros((n, len(absorbing_sets)))
    for s in transient:
        for t, p in model.successors(s, model.single_action(s)).items():
            if p <= 0.0:
                continue
            if t in idx:
                q[idx[s], idx[t]] += p
            else:
                r[idx[s], members[t]] += p
    lu, perm = lu_factor(np.eye(n) - q)
    start = idx[model.initial]
    return tuple(float(lu_solve(lu, perm, r[:, j])[start]) for j in range(len(absorbing_sets)))


def induced_prospect(model: Model, obj: WeightedReachObjective) -> InducedProspect:
    """Distribution over outcomes generated by the chain under the objective."""
    model, obj = validate_objective(model, obj)
    outcomes = outcome_vector(obj)
    sets = [obtainset(model, obj, o) for o in outcomes]
    nonempty = [(o, group) for o, group in zip(outcomes, sets) if group]
    probs_nonempty = absorption_probabilities(model, [g for _, g in nonempty])
    by_outcome = dict(zip((o for o, _ in nonempty), probs_nonempty))
    probs = tuple(by_outcome.get(o, 0.0) for o in outcomes)
    total = sum(probs)
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"induced prospect: probabilities sum to {total!r}")
    return InducedProspect(prospect=Prospect(outcomes, probs),
                           per_outcome_states={o: g for o, g in zip(outcomes, sets)})


def mc_cpt_value(model: Model, obj: WeightedReachObjective, params: CptParams) -> float:
    """CPT value of a chain: cpt applied to the induced prospect."""
    return cpt(params, induced_prospect(model, obj).prospect)


def mc_eu_value(model: Model, obj: WeightedReachObjective, params: CptParams) -> float:
    """Expected-utility value of a chain."""
    return eu(params, induced_prospect(model, obj).prospect)
