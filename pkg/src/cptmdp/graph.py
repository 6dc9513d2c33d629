"""Structural decomposition: SCCs, bottom SCCs, maximal end components, obtainsets."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .model import Model, ModelKind, WeightedReachObjective, OUTCOME_MERGE_TOL, outcome_vector


@dataclass(frozen=True)
class Scc:
    states: tuple[str, ...]
    is_bottom: bool


@dataclass(frozen=True)
class Mec:
    """End component: state set T and the closed (state, action) pairs B."""

    states: tuple[str, ...]
    actions: tuple[tuple[str, str], ...]

    def internal_actions(self, s: str) -> tuple[str, ...]:
        return tuple(a for (t, a) in self.actions if t == s)


def _tarjan(order: tuple[str, ...], succ: dict[str, list[str]]) -> list[list[str]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    components: list[list[str]] = []
    counter = 0
    for root in order:
        if root in index:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            node, child_pos = work[-1]
            if child_pos == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            children = succ[node]
            while child_pos < len(children):
                child = children[child_pos]
                child_pos += 1
                if child not in index:
                    work[-1] = (node, child_pos)
                    work.append((child, 0))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                components.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return components


def sccs(model: Model) -> list[Scc]:
    """All SCCs with bottom flags, ordered by smallest contained state index."""
    succ = {s: sorted(model.edges(s), key=model.state_index.__getitem__)
            for s in model.states}
    comps = _tarjan(model.states, succ)
    result = []
    for comp in comps:
        comp_set = set(comp)
        bottom = all(t in comp_set for s in comp for t in succ[s])
        ordered = tuple(sorted(comp, key=model.state_index.__getitem__))
        result.append(Scc(states=ordered, is_bottom=bottom))
    result.sort(key=lambda c: model.state_index[c.states[0]])
    return result


def bsccs(model: Model) -> list[Scc]:
    return [c for c in sccs(model) if c.is_bottom]


def mecs(model: Model, restrict_to: set[str] | None = None) -> list[Mec]:
    """Maximal end components within ``restrict_to`` (default: all states).

    Standard SCC-refinement: repeatedly decompose the action-restricted graph
    into SCCs and delete state-action pairs that leave their component.
    """
    allowed_states = set(model.states) if restrict_to is None else set(restrict_to)
    candidate: dict[str, list[str]] = {}
    for s in model.states:
        if s not in allowed_states:
            continue
        acts = [a for a in model.actions[s]
                if all(t in allowed_states
                       for t, p in model.successors(s, a).items() if p > 0.0)]
        if acts:
            candidate[s] = acts

    while True:
        states_now = [s for s in model.states if s in candidate]
        succ = {}
        for s in states_now:
            nbrs: set[str] = set()
            for a in candidate[s]:
                nbrs.update(t for t, p in model.successors(s, a).items() if p > 0.0)
            succ[s] = sorted(n for n in nbrs if n in candidate)
        comps = _tarjan(tuple(states_now), succ)
        comp_of = {}
        for ci, comp in enumerate(comps):
            for s in comp:
                comp_of[s] = ci
        changed = False
        for s in states_now:
            keep = []
            for a in candidate[s]:
                support = [t for t, p in model.successors(s, a).items() if p > 0.0]
                if all(t in comp_of and comp_of[t] == comp_of[s] for t in support):
                    keep.append(a)
            if len(keep) != len(candidate[s]):
                changed = True
                if keep:
                    candidate[s] = keep
                else:
                    del candidate[s]
        if not changed:
            break

    result = []
    seen: set[str] = set()
    states_now = [s for s in model.states if s in candidate]
    succ = {s: sorted({t for a in candidate[s]
                       for t, p in model.successors(s, a).items() if p > 0.0})
            for s in states_now}
    for comp in _tarjan(tuple(states_now), succ):
        comp_set = set(comp)
        if comp_set & seen:
            continue
        # singleton components need an actual self-loop action to be an EC
        if len(comp) == 1:
            s = comp[0]
            if not any(all(t in comp_set for t, p in model.successors(s, a).items() if p > 0.0)
                       for a in candidate[s]):
                continue
        pairs = tuple(sorted((s, a) for s in comp for a in candidate[s]))
        ordered = tuple(sorted(comp, key=model.state_index.__getitem__))
        result.append(Mec(states=ordered, actions=pairs))
        seen |= comp_set
    result.sort(key=lambda m: model.state_index[m.states[0]])
    return result


def obtainset(model: Model, obj: WeightedReachObjective, outcome: float,
              sink: str | None = None) -> tuple[str, ...]:
    """States whose reaching realizes the given outcome.

    For non-penalty outcomes these are the matching targets.  The penalty
    outcome is strategy-dependent on a general MDP, so it is only defined on
    chains (union of target-free bottom SCCs) or on a stopping MDP whose
    dedicated sink is passed explicitly.
    """
    outs = outcome_vector(obj)
    if not any(abs(outcome - o) <= OUTCOME_MERGE_TOL for o in outs):
        raise ValidationError(f"obtainset: {outcome!r} is not an outcome of this objective")
    if abs(outcome - obj.penalty) > OUTCOME_MERGE_TOL:
        return tuple(s for s in model.states
                     if s in obj.targets
                     and abs(obj.targets[s] - outcome) <= OUTCOME_MERGE_TOL)
    if sink is not None:
        return (sink,)
    if model.kind is ModelKind.MDP:
        raise ValidationError(
            "obtainset: the penalty outcome is strategy-dependent on an MDP; "
            "pass the stopping sink explicitly or use a chain")
    targets = set(obj.targets)
    states: list[str] = []
    for c in bsccs(model):
        if not (set(c.states) & targets):
            states.extend(c.states)
    return tuple(sorted(states, key=model.state_index.__getitem__))
