"""Finite MC/MDP data model, objectives, strategies, and JSON ingestion.

State and action identifiers are strings.  Transition probabilities given as
"num/den" strings are kept as exact fractions until a solver needs floats.
Action names are scoped per state; wherever globally unique actions are
required (quotient constructions) the pair (state, action) is used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import ParseError, ScopeError, ValidationError

PROB_TOL = 1e-9
OUTCOME_MERGE_TOL = 1e-9


class ModelKind(str, Enum):
    MC = "mc"
    MDP = "mdp"


TransitionValue = Fraction | float


def _as_float(v: TransitionValue) -> float:
    return float(v)


@dataclass(frozen=True)
class Model:
    kind: ModelKind
    states: tuple[str, ...]
    initial: str
    actions: dict[str, tuple[str, ...]]
    transitions: dict[str, dict[str, dict[str, TransitionValue]]]

    def __post_init__(self) -> None:
        declared = set(self.states)
        if len(declared) != len(self.states):
            raise ValidationError("model: duplicate state identifiers")
        if self.initial not in declared:
            raise ValidationError(f"model: initial state {self.initial!r} not declared")
        for s in self.states:
            acts = self.actions.get(s, ())
            if not acts:
                raise ValidationError(f"model: state {s!r} has no actions")
            if len(set(acts)) != len(acts):
                raise ValidationError(f"model: state {s!r} repeats an action id")
            if self.kind is ModelKind.MC and len(acts) != 1:
                raise ValidationError(f"model: chain state {s!r} must have exactly one action")
            for a in acts:
                dist = self.transitions.get(s, {}).get(a)
                if not dist:
                    raise ValidationError(f"model: missing distribution for ({s!r}, {a!r})")
                total = 0.0
                for t, p in dist.items():
                    if t not in declared:
                        raise ValidationError(
                            f"model: ({s!r}, {a!r}) references undeclared state {t!r}")
                    pf = _as_float(p)
                    if pf < 0.0:
                        raise ValidationError(
                            f"model: negative probability {p!r} at ({s!r}, {a!r})")
                    total += pf
                if abs(total - 1.0) > PROB_TOL:
                    raise ValidationError(
                        f"model: distribution at ({s!r}, {a!r}) sums to {total!r}")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.states)})

    @property
    def state_index(self) -> dict[str, int]:
        return self._index  # type: ignore[attr-defined]

    def successors(self, s: str, a: str) -> dict[str, float]:
        return {t: _as_float(p) for t, p in self.transitions[s][a].items()}

    def edges(self, s: str) -> set[str]:
        out: set[str] = set()
        for a in self.actions[s]:
            out.update(t for t, p in self.transitions[s][a].items() if _as_float(p) > 0.0)
        return out

    def single_action(self, s: str) -> str:
        return self.actions[s][0]

    def is_absorbing(self, s: str) -> bool:
        return all(self.successors(s, a).get(s, 0.0) >= 1.0 - PROB_TOL
                   for a in self.actions[s])


@dataclass(frozen=True)
class WeightedReachObjective:
    """Reward of the first target state visited; a penalty outcome otherwise."""

    targets: dict[str, float]
    penalty: float = 0.0


@dataclass(frozen=True)
class MeanPayoffObjective:
    """Long-run average of per-state rewards."""

    rewards: dict[str, float]


class StrategyScope(str, Enum):
    ORIGINAL = "original"
    QUOTIENT = "quotient"


@dataclass(frozen=True)
class Strategy:
    """Memoryless randomized strategy: a distribution over actions per state."""

    choices: dict[str, dict[str, float]]
    scope: StrategyScope = StrategyScope.ORIGINAL
    notes: str = ""

    def validate_for(self, model: Model) -> None:
        if self.scope is not StrategyScope.ORIGINAL:
            raise ScopeError("strategy is quotient-scoped; expected original scope")
        for s in model.states:
            dist = self.choices.get(s)
            if dist is None:
                raise ValidationError(f"strategy: no choice for state {s!r}")
            if abs(sum(dist.values()) - 1.0) > PROB_TOL:
                raise ValidationError(f"strategy: choices at {s!r} sum to {sum(dist.values())!r}")
            for a, p in dist.items():
                if a not in model.actions[s]:
                    raise ValidationError(f"strategy: action {a!r} unavailable at {s!r}")
                if p < -PROB_TOL:
                    raise ValidationError(f"strategy: negative probability at {s!r}")


Objective = WeightedReachObjective | MeanPayoffObjective


# ---------------------------------------------------------------------------
# JSON ingestion


def _parse_probability(raw, where: str) -> TransitionValue:
    if isinstance(raw, str):
        parts = raw.split("/")
        if len(parts) != 2:
            raise ParseError(f"{where}: bad rational {raw!r}, expected 'num/den'")
        try:
            return Fraction(int(parts[0]), int(parts[1]))
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{where}: bad rational {raw!r} ({exc})")
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    raise ParseError(f"{where}: probability must be a number or 'num/den' string")


def parse_model(text: str) -> tuple[Model, Objective]:
    """Parse and validate a model document; returns the model and its objective."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    return model_from_json_dict(doc)


def model_from_json_dict(doc) -> tuple[Model, Objective]:
    if not isinstance(doc, dict):
        raise ParseError("model document must be a JSON object")
    try:
        kind_raw = doc["type"]
        states_raw = doc["states"]
        initial = doc["initial"]
        transitions_raw = doc["transitions"]
        objective_raw = doc["objective"]
    except KeyError as exc:
        raise ParseError(f"model document: missing field {exc}")
    if kind_raw not in ("mc", "mdp"):
        raise ParseError(f"model type must be 'mc' or 'mdp', got {kind_raw!r}")
    if not isinstance(states_raw, list) or not all(isinstance(s, str) for s in states_raw):
        raise ParseError("'states' must be a list of string identifiers")
    states = tuple(states_raw)
    declared = set(states)

    actions: dict[str, tuple[str, ...]] = {}
    transitions: dict[str, dict[str, dict[str, TransitionValue]]] = {}
    if not isinstance(transitions_raw, dict):
        raise ParseError("'transitions' must be an object keyed by state")
    for s, acts in transitions_raw.items():
        if s not in declared:
            raise ValidationError(f"transitions: undeclared state {s!r}")
        if not isinstance(acts, dict) or not acts:
            raise ParseError(f"transitions[{s!r}] must be a non-empty object keyed by action")
        actions[s] = tuple(acts.keys())
        transitions[s] = {}
        for a, dist in acts.items():
            if not isinstance(dist, dict) or not dist:
                raise ParseError(f"transitions[{s!r}][{a!r}] must be a non-empty object")
            transitions[s][a] = {
                t: _parse_probability(p, f"transitions[{s!r}][{a!r}][{t!r}]")
                for t, p in dist.items()
            }
    missing = [s for s in states if s not in transitions]
    if missing:
        raise ValidationError(f"transitions: no outgoing distribution for state(s) {missing}")

    model = Model(kind=ModelKind(kind_raw), states=states, initial=initial,
                  actions=actions, transitions=transitions)

    if not isinstance(objective_raw, dict):
        raise ParseError("'objective' must be an object")
    obj_kind = objective_raw.get("kind")
    if obj_kind == "weighted-reachability":
        targets_raw = objective_raw.get("targets", {})
        if not isinstance(targets_raw, dict):
            raise ParseError("objective.targets must be an object")
        targets = {}
        for s, r in targets_raw.items():
            if s not in model.state_index:
                raise ValidationError(f"objective: target {s!r} not declared")
            if not isinstance(r, (int, float)) or isinstance(r, bool):
                raise ParseError(f"objective: reward for {s!r} must be a number")
            targets[s] = float(r)
        penalty = objective_raw.get("penalty", 0.0)
        if not isinstance(penalty, (int, float)) or isinstance(penalty, bool):
            raise ParseError("objective.penalty must be a number")
        objective: Objective = WeightedReachObjective(targets=targets, penalty=float(penalty))
    elif obj_kind == "mean-payoff":
        rewards_raw = objective_raw.get("rewards", {})
        if not isinstance(rewards_raw, dict):
            raise ParseError("objective.rewards must be an object")
        rewards = {s: 0.0 for s in states}
        for s, r in rewards_raw.items():
            if s not in model.state_index:
                raise ValidationError(f"objective: reward for undeclared state {s!r}")
            if not isinstance(r, (int, float)) or isinstance(r, bool):
                raise ParseError(f"objective: reward for {s!r} must be a number")
            rewards[s] = float(r)
        objective = MeanPayoffObjective(rewards=rewards)
    else:
        raise ValidationError(
            f"unsupported objective kind {obj_kind!r}; expected "
            f"'weighted-reachability' or 'mean-payoff'")
    return model, objective


def _probability_to_json(v: TransitionValue):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return v


def model_to_json_dict(model: Model, objective: Objective) -> dict:
    doc = {
        "type": model.kind.value,
        "states": list(model.states),
        "initial": model.initial,
        "transitions": {
            s: {a: {t: _probability_to_json(p) for t, p in model.transitions[s][a].items()}
                for a in model.actions[s]}
            for s in model.states
        },
    }
    if isinstance(objective, WeightedReachObjective):
        doc["objective"] = {
            "kind": "weighted-reachability",
            "targets": dict(objective.targets),
            "penalty": objective.penalty,
        }
    else:
        doc["objective"] = {"kind": "mean-payoff", "rewards": dict(objective.rewards)}
    return doc


def serialize_model(model: Model, objective: Objective) -> str:
    return json.dumps(model_to_json_dict(model, objective), indent=2, sort_keys=False)


# ---------------------------------------------------------------------------
# Objective normalization


def validate_objective(model: Model, obj: WeightedReachObjective
                       ) -> tuple[Model, WeightedReachObjective]:
    """Normalize a weighted-reachability objective against its model.

    Targets whose reward equals the penalty outcome are dropped (reaching
    them is indistinguishable from never reaching a target).  Non-absorbing
    targets are rewritten to absorbing by replacing all their outgoing
    distributions with a self-loop, since the value of a path is fixed once
    a target is reached.  Idempotent.
    """
    targets = {}
    for s, r in obj.targets.items():
        if s not in model.state_index:
            raise ValidationError(f"objective: target {s!r} not declared")
        if abs(r - obj.penalty) > OUTCOME_MERGE_TOL:
            targets[s] = r
    rewrites = [s for s in targets if not model.is_absorbing(s)]
    if rewrites:
        actions = dict(model.actions)
        transitions = {s: dict(acts) for s, acts in model.transitions.items()}
        for s in rewrites:
            keep = model.actions[s][0]
            actions[s] = (keep,)
            transitions[s] = {keep: {s: 1.0}}
        model = Model(kind=model.kind, states=model.states, initial=model.initial,
                      actions=actions, transitions=transitions)
    return model, WeightedReachObjective(targets=targets, penalty=obj.penalty)


def outcome_vector(obj: WeightedReachObjective) -> tuple[float, ...]:
    """Sorted, deduplicated outcomes: target rewards plus the penalty outcome."""
    values = sorted(set(obj.targets.values()) | {obj.penalty})
    merged: list[float] = []
    for v in values:
        if merged and v - merged[-1] <= OUTCOME_MERGE_TOL:
            continue
        merged.append(v)
    return tuple(merged)


def apply_strategy(model: Model, strategy: Strategy) -> Model:
    """Induced chain of a memoryless strategy: one mixed action per state."""
    strategy.validate_for(model)
    actions = {}
    transitions: dict[str, dict[str, dict[str, TransitionValue]]] = {}
    for s in model.states:
        mixed: dict[str, float] = {}
        for a, q in strategy.choices[s].items():
            if q <= 0.0:
                continue
            for t, p in model.successors(s, a).items():
                mixed[t] = mixed.get(t, 0.0) + q * p
        actions[s] = ("mix",)
        transitions[s] = {"mix": mixed}
    return Model(kind=ModelKind.MC, states=model.states, initial=model.initial,
                 actions=actions, transitions=transitions)


def strategy_to_json_dict(strategy: Strategy) -> dict:
    return {
        "scope": strategy.scope.value,
        "choices": {s: dict(d) for s, d in strategy.choices.items()},
        "notes": strategy.notes,
    }


def strategy_from_json_dict(doc: dict) -> Strategy:
    try:
        scope = StrategyScope(doc["scope"])
        choices = {s: {a: float(p) for a, p in d.items()} for s, d in doc["choices"].items()}
    except (KeyError, ValueError) as exc:
        raise ParseError(f"strategy document: {exc}")
    return Strategy(choices=choices, scope=scope, notes=str(doc.get("notes", "")))
