"""MDP solver: quotient transform, multi-objective query, frontier optimization,
error accounting, and strategy extraction.

The pipeline: collapse every non-target end component to a representative
with the original leaving actions plus a ``stay`` action into a fresh sink
(the resulting MDP is stopping and has the same value); read the objective
as one reachability target set per outcome; reconstruct the polytope of
achievable outcome distributions; maximize (or minimize) the CPT value over
that polytope with a Lipschitz-bounded branch-and-bound; extract a
memoryless randomized strategy for the best point and map it back to the
original MDP where the quotient strategy permits.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InfeasiblePointError, SolverError, ValidationError
from .graph import Mec, mecs, obtainset
from .mc import mc_cpt_value
from .model import (
    Model,
    ModelKind,
    Strategy,
    StrategyScope,
    WeightedReachObjective,
    apply_strategy,
    outcome_vector,
    validate_objective,
)
from .numerics import LinearProgram, solve_lp
from .prospects import CptParams, Prospect, _cpt_of, lipschitz_constant
from .reachability import ParetoApprox, ReachabilityLp, sandwich_polytope

STAY = "stay"
#: LP witnesses carry ~1e-8 feasibility noise; action probabilities below this
#: are snapped to zero and stay probabilities this close to 0/1 count as pure
CHOICE_SNAP = 1e-6


class Direction(str, Enum):
    MAX = "max"
    MIN = "min"


class Mode(str, Enum):
    CPT = "cpt"
    EU = "eu"


@dataclass(frozen=True)
class QuotientResult:
    """Stopping quotient plus the bookkeeping needed to translate back."""

    quotient: Model
    objective: WeightedReachObjective
    sink: str
    #: quotient state -> original state id, or the Mec it represents
    back_map: dict[str, str | Mec]
    #: (quotient state, action) -> original (state, action); None encodes stay
    action_map: dict[tuple[str, str], tuple[str, str] | None]


def _fresh_name(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name = name + "_"
    taken.add(name)
    return name


def collapse_mecs(model: Model, exclude: set[str], components: list[Mec] | None = None
                  ) -> tuple[dict, dict, dict, list]:
    """Shared quotient scaffolding: collapse each MEC outside ``exclude``.

    Returns (states/actions/transitions under construction, back/action maps,
    rep names per component).  Stay actions are added by the callers.
    """
    comps = mecs(model, restrict_to=set(model.states) - exclude) \
        if components is None else components
    in_mec: dict[str, int] = {}
    for i, comp in enumerate(comps):
        for s in comp.states:
            in_mec[s] = i

    taken = set(model.states)
    rep_names = [_fresh_name(f"mec{i}", taken) for i in range(len(comps))]

    def image(t: str) -> str:
        return rep_names[in_mec[t]] if t in in_mec else t

    def remap(dist: dict[str, float]) -> dict[str, float]:
        out: dict[str, float] = {}
        for t, p in dist.items():
            if p <= 0.0:
                continue
            tt = image(t)
            out[tt] = out.get(tt, 0.0) + p
        return out

    states: list[str] = [s for s in model.states if s not in in_mec] + rep_names
    actions: dict[str, tuple[str, ...]] = {}
    transitions: dict[str, dict[str, dict[str, float]]] = {}
    back_map: dict[str, str | Mec] = {}
    action_map: dict[tuple[str, str], tuple[str, str] | None] = {}

    for s in model.states:
        if s in in_mec:
            continue
        back_map[s] = s
        actions[s] = model.actions[s]
        transitions[s] = {}
        for a in model.actions[s]:
            transitions[s][a] = remap(model.successors(s, a))
            action_map[(s, a)] = (s, a)

    for i, comp in enumerate(comps):
        rep = rep_names[i]
        back_map[rep] = comp
        internal = set(comp.actions)
        names: list[str] = []
        transitions[rep] = {}
        for s in comp.states:
            for a in model.actions[s]:
                if (s, a) in internal:
                    continue
                name = f"{s}::{a}"
                names.append(name)
                transitions[rep][name] = remap(model.successors(s, a))
                action_map[(rep, name)] = (s, a)
        actions[rep] = tuple(names)

    initial = image(model.initial)
    return ({"states": states, "actions": actions, "transitions": transitions,
             "initial": initial, "taken": taken},
            back_map, action_map, rep_names)


def make_stopping(model: Model, obj: WeightedReachObjective) -> QuotientResult:
    """Quotient with every non-target MEC collapsed and a stay action to a sink.

    Staying forever inside a MEC yields the penalty outcome; in the quotient
    this is represented by taking ``stay`` into the absorbing sink.  The
    result is stopping: no end component survives outside the targets and
    the sink.
    """
    parts, back_map, action_map, rep_names = collapse_mecs(model, set(obj.targets))
    sink = _fresh_name("z", parts["taken"])
    parts["states"].append(sink)
    parts["actions"][sink] = (STAY,)
    parts["transitions"][sink] = {STAY: {sink: 1.0}}
    back_map[sink] = sink
    for rep in rep_names:
        parts["actions"][rep] = parts["actions"][rep] + (STAY,)
        parts["transitions"][rep][STAY] = {sink: 1.0}
        action_map[(rep, STAY)] = None

    quotient = Model(kind=ModelKind.MDP, states=tuple(parts["states"]),
                     initial=parts["initial"], actions=parts["actions"],
                     transitions=parts["transitions"])
    leftover = mecs(quotient, restrict_to=set(quotient.states) - set(obj.targets) - {sink})
    if leftover:
        raise SolverError(f"make_stopping: quotient still has end components {leftover}")
    return QuotientResult(quotient=quotient, objective=obj, sink=sink,
                          back_map=back_map, action_map=action_map)


def build_mo_query(q: QuotientResult, obj: WeightedReachObjective) -> list[tuple[str, ...]]:
    """One target set per outcome, in outcome order; the penalty maps to the sink."""
    return [obtainset(q.quotient, obj, o, sink=q.sink) for o in outcome_vector(obj)]


def achievable_point(q: QuotientResult, query: list[tuple[str, ...]], point
                     ) -> dict[tuple[str, str], float] | None:
    """Occupation witness achieving at least ``point`` in every coordinate, or None."""
    return ReachabilityLp(q.quotient, query).feasible_at(point)


def pareto_frontier(q: QuotientResult, query: list[tuple[str, ...]], eps: float,
                    lp: ReachabilityLp | None = None) -> ParetoApprox:
    """Extreme points of the achievable polytope, to within ``eps``."""
    if eps <= 0.0:
        raise ValidationError("pareto_frontier: eps must be positive")
    if lp is None:
        lp = ReachabilityLp(q.quotient, query)
    return sandwich_polytope(lp, eps)


# ---------------------------------------------------------------------------
# Optimizing cpt over the frontier polytope


@dataclass
class OptimizeOutcome:
    best_point: tuple[float, ...]
    value: float
    hypercubes_examined: int
    certified_gap: float
    lp_calls: int


def _edge_grid_counts(n_vertices: int) -> int:
    if n_vertices <= 4:
        return 257
    if n_vertices <= 12:
        return 65
    return 17


class _CellOracle:
    """Feasibility/representative LP for box cells against the vertex polytope."""

    def __init__(self, vertices: list[tuple[float, ...]]):
        self.v = np.array(vertices)
        self.m, self.k = self.v.shape
        self.lp_calls = 0

    def representative(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray | None:
        """A point of the polytope inside the box, chosen by maximizing the
        coordinate sum (deterministic); None when the box misses the polytope."""
        # cheap reject: box must meet the polytope's bounding box
        if np.any(hi < self.v.min(axis=0) - 1e-12) or np.any(lo > self.v.max(axis=0) + 1e-12):
            return None
        lp = LinearProgram(objective=self.v.sum(axis=1))
        for i in range(self.k):
            lp.add_row(self.v[:, i], "<=", float(hi[i]))
            lp.add_row(self.v[:, i], ">=", float(lo[i]))
        lp.add_row(np.ones(self.m), "=", 1.0)
        self.lp_calls += 1
        sol = solve_lp(lp)
        if not sol.optimal:
            return None
        return self.v.T @ sol.x


def optimize_cpt_on_frontier(frontier: ParetoApprox, outcomes, params: CptParams,
                             eps_opt: float, direction: Direction = Direction.MAX,
                             bnb: bool = True, cell_budget: int = 500) -> OptimizeOutcome:
    """Best CPT value over the frontier polytope, within ``eps_opt`` when the
    Lipschitz-certified search completes inside the cell budget.

    All extreme points and a deterministic grid along every edge are always
    evaluated; branch-and-bound (default) then splits boxes best-upper-bound
    first, pruning with ``value(rep) + L . diam`` until certified or out of
    budget.  ``bnb=False`` walks the literal hypercube grid of side
    ``eps_opt / (L sqrt(k))`` instead, under the same budget.
    """
    outcomes = tuple(outcomes)
    vertices = [tuple(p) for p in frontier.extreme_points]
    if not vertices:
        raise ValidationError("optimize_cpt_on_frontier: empty frontier")
    sign = 1.0 if direction is Direction.MAX else -1.0

    def score(point) -> float:
        return sign * _cpt_of(params, outcomes, point)

    best_point = vertices[0]
    best_val = score(best_point)
    for v in vertices[1:]:
        val = score(v)
        if val > best_val or (val == best_val and v < best_point):
            best_val, best_point = val, v

    npts = _edge_grid_counts(len(vertices))
    for i, j in itertools.combinations(range(len(vertices)), 2):
        vi, vj = np.array(vertices[i]), np.array(vertices[j])
        for t in np.linspace(0.0, 1.0, npts)[1:-1]:
            p = tuple(float(v) for v in (1.0 - t) * vi + t * vj)
            val = score(p)
            if val > best_val or (val == best_val and p < best_point):
                best_val, best_point = val, p

    lip = lipschitz_constant(params, outcomes)
    if len(vertices) == 1 or lip == 0.0:
        return OptimizeOutcome(best_point=best_point, value=sign * best_val,
                               hypercubes_examined=0, certified_gap=0.0, lp_calls=0)

    oracle = _CellOracle(vertices)
    lo0 = np.min(np.array(vertices), axis=0)
    hi0 = np.max(np.array(vertices), axis=0)
    examined = 0
    certified_gap = float("inf")

    if bnb:
        counter = itertools.count()
        heap: list = []

        def push(lo: np.ndarray, hi: np.ndarray) -> None:
            nonlocal examined, best_val, best_point
            rep = oracle.representative(lo, hi)
            if rep is None:
                return
            examined += 1
            p = tuple(float(x) for x in rep)
            val = score(p)
            if val > best_val or (val == best_val and p < best_point):
                best_val, best_point = val, p
            ub = val + lip * float(np.linalg.norm(hi - lo))
            heapq.heappush(heap, (-ub, next(counter), lo, hi))

        push(lo0, hi0)
        while heap:
            neg_ub, _, lo, hi = heapq.heappop(heap)
            certified_gap = max(0.0, -neg_ub - best_val)
            if certified_gap <= eps_opt:
                break
            if examined >= cell_budget:
                break
            axis = int(np.argmax(hi - lo))
            if hi[axis] - lo[axis] <= 1e-12:
                continue
            mid = 0.5 * (lo[axis] + hi[axis])
            hi_left = hi.copy()
            hi_left[axis] = mid
            lo_right = lo.copy()
            lo_right[axis] = mid
            push(lo, hi_left)
            push(lo_right, hi)
        else:
            certified_gap = 0.0
    else:
        # literal hypercube grid; every checked cell counts against the budget,
        # so absurdly fine grids terminate (uncertified) instead of spinning
        k = len(outcomes)
        side = eps_opt / (lip * np.sqrt(k))
        counts = [max(1, int(np.ceil((hi0[i] - lo0[i]) / max(side, 1e-15)))) for i in range(k)]
        completed = True
        for idx in itertools.product(*(range(c) for c in counts)):
            if examined >= cell_budget:
                completed = False
                break
            examined += 1
            lo = lo0 + side * np.array(idx)
            hi = np.minimum(lo + side, hi0)
            rep = oracle.representative(lo, hi)
            if rep is None:
                continue
            p = tuple(float(x) for x in rep)
            val = score(p)
            if val > best_val or (val == best_val and p < best_point):
                best_val, best_point = val, p
        certified_gap = eps_opt if completed else float("inf")

    return OptimizeOutcome(best_point=best_point, value=sign * best_val,
                           hypercubes_examined=examined,
                           certified_gap=certified_gap, lp_calls=oracle.lp_calls)


# ---------------------------------------------------------------------------
# Strategy extraction


def _choices_from_occupation(model: Model, occupation: dict[tuple[str, str], float],
                             skip: set[str]) -> dict[str, dict[str, float]]:
    """Normalize visit counts into per-state action distributions.

    Probabilities below CHOICE_SNAP are treated as LP noise and dropped.
    States with no positive outflow keep their first action deterministically.
    """
    choices: dict[str, dict[str, float]] = {}
    for s in model.states:
        if s in skip:
            continue
        weights = {a: max(0.0, occupation.get((s, a), 0.0)) for a in model.actions[s]}
        total = sum(weights.values())
        if total > 1e-12:
            dist = {a: w / total for a, w in weights.items()}
            kept = sum(p for p in dist.values() if p >= CHOICE_SNAP)
            choices[s] = {a: (p / kept if p >= CHOICE_SNAP else 0.0)
                          for a, p in dist.items()}
        else:
            choices[s] = {a: (1.0 if i == 0 else 0.0)
                          for i, a in enumerate(model.actions[s])}
    return choices


def _entry_states(model: Model, comp: Mec) -> list[str]:
    inside = set(comp.states)
    entries = {model.initial} & inside
    for s in model.states:
        if s in inside:
            continue
        for a in model.actions[s]:
            for t, p in model.successors(s, a).items():
                if p > 0.0 and t in inside:
                    entries.add(t)
    return sorted(entries, key=model.state_index.__getitem__)


def _realize_leaving_distribution(model: Model, comp: Mec, wanted: dict[tuple[str, str], float],
                                  entry: str) -> dict[str, dict[str, float]]:
    """Memoryless choices inside a MEC that leave via the wanted (state, action)
    distribution, realized as an occupation-measure LP on the component."""
    inside = set(comp.states)
    internal = set(comp.actions)
    sub_states = list(comp.states)
    rep_of: dict[tuple[str, str], str] = {}
    states = list(sub_states)
    actions: dict[str, tuple[str, ...]] = {}
    transitions: dict[str, dict[str, dict[str, float]]] = {}
    taken = set(sub_states)
    for s in sub_states:
        acts = []
        transitions[s] = {}
        for a in model.actions[s]:
            if (s, a) in internal:
                acts.append(a)
                transitions[s][a] = {t: p for t, p in model.successors(s, a).items() if p > 0.0}
            elif (s, a) in wanted:
                exit_name = _fresh_name(f"exit::{s}::{a}", taken)
                rep_of[(s, a)] = exit_name
                states.append(exit_name)
                actions[exit_name] = (STAY,)
                transitions[exit_name] = {STAY: {exit_name: 1.0}}
                acts.append(a)
                transitions[s][a] = {exit_name: 1.0}
        actions[s] = tuple(acts)
    sub = Model(kind=ModelKind.MDP, states=tuple(states), initial=entry,
                actions=actions, transitions=transitions)
    pairs = sorted(wanted)
    lp = ReachabilityLp(sub, [(rep_of[pair],) for pair in pairs], allow_end_components=True)
    witness = lp.feasible_at([wanted[pair] for pair in pairs], slack=1e-8)
    if witness is None:
        raise InfeasiblePointError(
            f"cannot realize leaving distribution {wanted} inside component {comp.states}")
    return _choices_from_occupation(sub, witness, skip=set(rep_of.values()))


def _map_back(q: QuotientResult, original: Model,
              quotient_choices: dict[str, dict[str, float]]) -> Strategy:
    """Translate a quotient strategy to the original MDP when possible.

    Collapsed components with stay probability 0 or 1 translate exactly; a
    strictly mixed stay probability is not realizable memorylessly inside the
    original component, so the strategy is returned at quotient scope with
    the stay probabilities recorded in the notes.
    """
    mixed: list[str] = []
    for s, comp in q.back_map.items():
        if isinstance(comp, Mec):
            stay = quotient_choices.get(s, {}).get(STAY, 0.0)
            if CHOICE_SNAP < stay < 1.0 - CHOICE_SNAP:
                mixed.append(f"{s}: stay={stay!r}")
    if mixed:
        return Strategy(choices=quotient_choices, scope=StrategyScope.QUOTIENT,
                        notes="mixed stay probabilities not realizable memorylessly in the "
                              "original MDP (" + "; ".join(mixed) + ")")

    choices: dict[str, dict[str, float]] = {}
    for qs in q.quotient.states:
        target = q.back_map.get(qs)
        if target is None:  # the sink exists only in the quotient
            continue
        if isinstance(target, str):
            if qs == q.sink:
                continue
            choices[target] = {a: p for a, p in quotient_choices[qs].items()}
            continue
        comp: Mec = target
        stay = quotient_choices[qs].get(STAY, 0.0)
        if stay >= 1.0 - CHOICE_SNAP:
            for s in comp.states:
                internal = comp.internal_actions(s)
                choices[s] = {a: (1.0 / len(internal) if a in internal else 0.0)
                              for a in original.actions[s]}
            continue
        leaving_mass = {q.action_map[(qs, a)]: p
                        for a, p in quotient_choices[qs].items()
                        if a != STAY and p > CHOICE_SNAP}
        total = sum(leaving_mass.values())
        wanted = {pair: p / total for pair, p in leaving_mass.items()}
        by_state = sorted({pair[0] for pair in wanted})
        if len(by_state) == 1:
            s_exit = by_state[0]
            for s in comp.states:
                if s == s_exit:
                    choices[s] = {a: wanted.get((s, a), 0.0) for a in original.actions[s]}
                else:
                    internal = comp.internal_actions(s)
                    choices[s] = {a: (1.0 / len(internal) if a in internal else 0.0)
                                  for a in original.actions[s]}
            continue
        entries = _entry_states(original, comp)
        if len(entries) != 1:
            return Strategy(choices=quotient_choices, scope=StrategyScope.QUOTIENT,
                            notes=f"component {comp.states} is entered from {entries} and "
                                  f"leaves through several states; exact memoryless "
                                  f"back-mapping needs a single entry")
        sub_choices = _realize_leaving_distribution(original, comp, wanted, entries[0])
        for s in comp.states:
            dist = sub_choices[s]
            choices[s] = {a: dist.get(a, 0.0) for a in original.actions[s]}
    return Strategy(choices=choices, scope=StrategyScope.ORIGINAL, notes="")


def extract_strategy(q: QuotientResult, query: list[tuple[str, ...]], best_point,
                     original: Model | None = None,
                     lp: ReachabilityLp | None = None) -> Strategy:
    """Memoryless randomized strategy achieving ``best_point`` on the quotient,
    mapped back to the original MDP when the stay probabilities allow it."""
    if lp is None:
        lp = ReachabilityLp(q.quotient, query)
    witness = lp.feasible_at(best_point, slack=1e-8)
    if witness is None:
        raise InfeasiblePointError(f"point {best_point} is not achievable within tolerance")
    quotient_choices = _choices_from_occupation(q.quotient, witness, skip=set())
    if original is None:
        return Strategy(choices=quotient_choices, scope=StrategyScope.QUOTIENT, notes="")
    return _map_back(q, original, quotient_choices)


def verify_strategy(model: Model, obj: WeightedReachObjective, sigma: Strategy,
                    params: CptParams) -> float:
    """Value of the chain induced by a memoryless strategy on the original MDP."""
    model, obj = validate_objective(model, obj)
    induced = apply_strategy(model, sigma)
    return mc_cpt_value(induced, obj, params)


# ---------------------------------------------------------------------------
# Full pipeline


@dataclass
class CptSolveResult:
    value: float
    error_bound: float
    best_point: tuple[float, ...]
    best_prospect: Prospect
    strategy: Strategy
    frontier: ParetoApprox
    lipschitz: float
    stats: dict = field(default_factory=dict)


def mdp_cpt_value(model: Model, obj: WeightedReachObjective, params: CptParams,
                  eps: float, direction: Direction = Direction.MAX,
                  mode: Mode = Mode.CPT, bnb: bool = True,
                  cell_budget: int = 500) -> CptSolveResult:
    """Approximate the optimal CPT (or expected-utility) value of an MDP.

    The returned value is within ``eps * (1 + L)`` of the optimum, where L is
    the (possibly grid-estimated) Lipschitz constant of the CPT function for
    this outcome vector.  Expected-utility mode is a single exact LP.
    """
    if eps <= 0.0:
        raise ValidationError("mdp_cpt_value: eps must be positive")
    started = time.perf_counter()
    model2, obj2 = validate_objective(model, obj)
    outcomes = outcome_vector(obj2)
    q = make_stopping(model2, obj2)
    query = build_mo_query(q, obj2)
    rlp = ReachabilityLp(q.quotient, query)
    frontier = sandwich_polytope(rlp, eps)
    lip = lipschitz_constant(params, outcomes)

    if mode is Mode.EU:
        uvec = np.array([params.utility(o) for o in outcomes])
        sign = 1.0 if direction is Direction.MAX else -1.0
        _, best_point, _ = rlp.support(sign * uvec)
        value = float(uvec @ np.array(best_point))
        error_bound = 1e-9 * (1.0 + abs(value))
        opt_stats = {"hypercubes_examined": 0, "optimizer_lp_calls": 0}
    else:
        outcome = optimize_cpt_on_frontier(frontier, outcomes, params, eps_opt=eps,
                                           direction=direction, bnb=bnb,
                                           cell_budget=cell_budget)
        best_point = outcome.best_point
        value = outcome.value
        error_bound = eps * (1.0 + lip)
        opt_stats = {"hypercubes_examined": outcome.hypercubes_examined,
                     "optimizer_lp_calls": outcome.lp_calls}

    strategy = extract_strategy(q, query, best_point, original=model2, lp=rlp)
    probs = tuple(min(1.0, max(0.0, p)) for p in best_point)
    best_prospect = Prospect(outcomes, probs,
                             full_distribution=abs(sum(probs) - 1.0) <= 1e-9)
    stats = {
        "lp_calls": rlp.lp_calls + opt_stats["optimizer_lp_calls"],
        "hypercubes_examined": opt_stats["hypercubes_examined"],
        "wall_time": time.perf_counter() - started,
    }
    return CptSolveResult(value=value, error_bound=error_bound, best_point=tuple(best_point),
                          best_prospect=best_prospect, strategy=strategy,
                          frontier=frontier, lipschitz=lip, stats=stats)
