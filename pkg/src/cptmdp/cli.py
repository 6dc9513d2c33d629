"""Command-line front end.

``cptmdp solve --model model.json [options]`` prints a result document on
stdout (pure JSON; diagnostics go to stderr) and can additionally write the
frontier, the strategy, and 2-D frontier plot data to files.  Exit codes:
0 success, 2 input/validation error, 3 solver error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import CptMdpError, ParseError, SolverError, ValidationError
from .mc import induced_prospect
from .mdp import CptSolveResult, Direction, Mode, mdp_cpt_value
from .meanpayoff import mp_cpt_value
from .model import (
    MeanPayoffObjective,
    ModelKind,
    Strategy,
    StrategyScope,
    WeightedReachObjective,
    outcome_vector,
    parse_model,
    strategy_to_json_dict,
    validate_objective,
)
from .prospects import CptParams, cpt, eu, lipschitz_constant, params_from_json_dict
from .reachability import ParetoApprox


@dataclass
class SolverConfig:
    epsilon: float = 0.01
    mode: Mode = Mode.CPT
    direction: Direction = Direction.MAX
    bnb: bool = True
    cell_budget: int = 500
    params_path: str | None = None
    out: str | None = None
    frontier_out: str | None = None
    strategy_out: str | None = None
    plot_out: str | None = None

    def __post_init__(self) -> None:
        if self.epsilon <= 0.0:
            raise ValidationError("epsilon must be positive")


def _load_params(config: SolverConfig) -> CptParams:
    if config.params_path is None:
        return CptParams.standard() if config.mode is Mode.CPT else CptParams.risk_neutral()
    try:
        doc = json.loads(Path(config.params_path).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read params file: {exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"params file: invalid JSON at line {exc.lineno}: {exc.msg}")
    return params_from_json_dict(doc)


def _solve_chain(model, obj: WeightedReachObjective, params: CptParams,
                 config: SolverConfig) -> CptSolveResult:
    """Chains are solved exactly through the induced prospect."""
    model, obj = validate_objective(model, obj)
    induced = induced_prospect(model, obj)
    prospect = induced.prospect
    value = cpt(params, prospect) if config.mode is Mode.CPT else eu(params, prospect)
    outcomes = outcome_vector(obj)
    strategy = Strategy(choices={s: {model.single_action(s): 1.0} for s in model.states},
                        scope=StrategyScope.ORIGINAL, notes="")
    frontier = ParetoApprox(extreme_points=(tuple(prospect.probs),),
                            witnesses=({},), epsilon_pareto=0.0)
    return CptSolveResult(value=value, error_bound=1e-9 * (1.0 + abs(value)),
                          best_point=tuple(prospect.probs), best_prospect=prospect,
                          strategy=strategy, frontier=frontier,
                          lipschitz=lipschitz_constant(params, outcomes),
                          stats={"lp_calls": 0, "hypercubes_examined": 0, "wall_time": 0.0})


def result_to_json_dict(result: CptSolveResult, config: SolverConfig) -> dict:
    # wall_time is intentionally omitted: outputs must be byte-identical across runs
    return {
        "value": result.value,
        "error_bound": result.error_bound,
        "mode": config.mode.value,
        "direction": config.direction.value,
        "epsilon": config.epsilon,
        "lipschitz": result.lipschitz,
        "outcomes": list(result.best_prospect.outcomes),
        "best_point": list(result.best_point),
        "best_prospect": {"outcomes": list(result.best_prospect.outcomes),
                          "probs": list(result.best_prospect.probs)},
        "strategy": strategy_to_json_dict(result.strategy),
        "stats": {"lp_calls": result.stats.get("lp_calls", 0),
                  "hypercubes_examined": result.stats.get("hypercubes_examined", 0)},
    }


def frontier_to_json_dict(frontier: ParetoApprox, outcomes, epsilon: float) -> dict:
    return {
        "epsilon": epsilon,
        "outcomes": list(outcomes),
        "extreme_points": [list(p) for p in frontier.extreme_points],
    }


def emit_frontier_plot_data(frontier: ParetoApprox, path: str) -> None:
    """CSV of frontier vertices; for 2-D frontiers in traversal order."""
    points = list(frontier.extreme_points)
    lines = []
    if points and len(points[0]) == 2:
        lines.append("x,y")
        for p in sorted(points, key=lambda v: (v[0], -v[1])):
            lines.append(f"{p[0]!r},{p[1]!r}")
    else:
        k = len(points[0]) if points else 0
        lines.append(f"# {k}-dimensional frontier: vertex dump, no facet trace")
        lines.append(",".join(f"p{i}" for i in range(k)))
        for p in points:
            lines.append(",".join(repr(v) for v in p))
    Path(path).write_text("\n".join(lines) + "\n")


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")


def run(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="cptmdp",
                                     description="CPT/EU values of MCs and MDPs")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="solve a model file")
    solve.add_argument("--model", required=True, help="model JSON path")
    solve.add_argument("--params", default=None, help="CPT parameter JSON path")
    solve.add_argument("--epsilon", type=float, default=0.01)
    solve.add_argument("--mode", choices=["cpt", "eu"], default="cpt")
    solve.add_argument("--direction", choices=["max", "min"], default="max")
    solve.add_argument("--no-bnb", action="store_true",
                       help="use the literal hypercube grid instead of branch-and-bound")
    solve.add_argument("--cell-budget", type=int, default=500)
    solve.add_argument("--out", default=None, help="write the result JSON here instead of stdout")
    solve.add_argument("--frontier-out", default=None)
    solve.add_argument("--strategy-out", default=None)
    solve.add_argument("--plot-out", default=None)
    args = parser.parse_args(argv)

    try:
        config = SolverConfig(epsilon=args.epsilon, mode=Mode(args.mode),
                              direction=Direction(args.direction), bnb=not args.no_bnb,
                              cell_budget=args.cell_budget, params_path=args.params,
                              out=args.out, frontier_out=args.frontier_out,
                              strategy_out=args.strategy_out, plot_out=args.plot_out)
        try:
            text = Path(args.model).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read model file: {exc}")
        model, objective = parse_model(text)
        params = _load_params(config)

        if isinstance(objective, MeanPayoffObjective):
            result = mp_cpt_value(model, objective, params, config.epsilon,
                                  direction=config.direction, mode=config.mode,
                                  bnb=config.bnb, cell_budget=config.cell_budget)
            outcomes = result.best_prospect.outcomes
        else:
            if model.kind is ModelKind.MC:
                result = _solve_chain(model, objective, params, config)
            else:
                result = mdp_cpt_value(model, objective, params, config.epsilon,
                                       direction=config.direction, mode=config.mode,
                                       bnb=config.bnb, cell_budget=config.cell_budget)
            outcomes = result.best_prospect.outcomes
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, CptMdpError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3

    _emit(json.dumps(result_to_json_dict(result, config), indent=2), config.out)
    if config.frontier_out:
        doc = frontier_to_json_dict(result.frontier, outcomes, config.epsilon)
        Path(config.frontier_out).write_text(json.dumps(doc, indent=2) + "\n")
    if config.strategy_out:
        Path(config.strategy_out).write_text(
            json.dumps(strategy_to_json_dict(result.strategy), indent=2) + "\n")
    if config.plot_out:
        emit_frontier_plot_data(result.frontier, config.plot_out)
    return 0


def main() -> None:
    sys.exit(run())
