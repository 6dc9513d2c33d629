"""Multi-objective reachability for stopping MDPs.

The achievable reachability vectors of a stopping MDP with absorbing targets
form a polytope: the image of the occupation-measure polytope under the
linear map that reads off the probability of entering each target set.  This
module exposes the occupation-measure LP (support/feasibility oracles) and a
sandwich loop that reconstructs the polytope's vertex set: maintain the
convex hull of LP optima, certify each hull facet by maximizing its normal,
and refine wherever the LP finds points beyond the hull.  For a polytope
this terminates with the exact vertex set (up to LP tolerance); the largest
uncertified facet gap is reported as the approximation guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

try:
    from scipy.spatial import QhullError
except ImportError:  # older scipy layouts
    from scipy.spatial.qhull import QhullError

from .errors import SolverError, ValidationError
from .graph import mecs
from .model import Model
from .numerics import LinearProgram, solve_lp

#: facets whose support gap is below this are considered certified
FACET_GAP_TOL = 1e-8
#: vertices closer than this (per coordinate) are considered identical
VERTEX_DEDUP_TOL = 1e-9
#: lexicographic tie-break perturbation applied to scalarization directions
LEX_PERTURBATION = 1e-7

MAX_SANDWICH_ROUNDS = 10_000
MAX_SUPPORT_CALLS = 50_000


@dataclass(frozen=True)
class ParetoApprox:
    """Extreme points of the achievable polytope plus their occupation witnesses."""

    extreme_points: tuple[tuple[float, ...], ...]
    witnesses: tuple[dict[tuple[str, str], float], ...]
    epsilon_pareto: float


class ReachabilityLp:
    """Occupation-measure LP over the transient part of a stopping MDP.

    ``target_sets`` must consist of absorbing states.  Transient states (those
    outside every target set and not absorbing) must contain no end component;
    then every memoryless strategy's expected visit counts are finite and the
    reachable-probability vectors are exactly the feasible reach images.
    """

    def __init__(self, model: Model, target_sets: list[tuple[str, ...]],
                 allow_end_components: bool = False):
        self.model = model
        self.target_sets = [tuple(ts) for ts in target_sets]
        self.k = len(target_sets)
        self.lp_calls = 0

        set_of: dict[str, int] = {}
        for i, ts in enumerate(self.target_sets):
            for s in ts:
                if s in set_of:
                    raise ValidationError(f"reachability: state {s!r} in two target sets")
                if not model.is_absorbing(s):
                    raise ValidationError(f"reachability: target {s!r} is not absorbing")
                set_of[s] = i
        self.set_of = set_of

        absorbed = set(set_of) | {s for s in model.states if model.is_absorbing(s)}
        self.transient = [s for s in model.states if s not in absorbed]
        # With end components among the transient states the feasible occupation
        # region has circulation rays; basic solutions (what the simplex returns)
        # still carry none, so callers that extract strategies from vertices may
        # opt in.  The reach image is only guaranteed complete for stopping MDPs.
        if not allow_end_components and mecs(model, restrict_to=set(self.transient)):
            raise ValidationError("reachability: transient part contains an end component; "
                                  "the model is not stopping")

        self.pairs = [(s, a) for s in self.transient for a in model.actions[s]]
        self.pair_index = {pair: j for j, pair in enumerate(self.pairs)}
        n = len(self.pairs)
        t_index = {s: i for i, s in enumerate(self.transient)}

        # flow conservation: out - in = 1 at the initial state, 0 elsewhere
        self.flow = np.zeros((len(self.transient), n))
        for j, (s, a) in enumerate(self.pairs):
            self.flow[t_index[s], j] += 1.0
            for t, p in model.successors(s, a).items():
                if p > 0.0 and t in t_index:
                    self.flow[t_index[t], j] -= p
        self.flow_rhs = np.zeros(len(self.transient))
        if model.initial in t_index:
            self.flow_rhs[t_index[model.initial]] = 1.0

        # reach_i(x) = base_i + mass_i . x
        self.mass = np.zeros((self.k, n))
        for j, (s, a) in enumerate(self.pairs):
            for t, p in model.successors(s, a).items():
                if p > 0.0 and t in set_of:
                    self.mass[set_of[t], j] += p
        self.base = np.zeros(self.k)
        if model.initial in set_of:
            self.base[set_of[model.initial]] = 1.0

    def _lp(self, objective: np.ndarray) -> LinearProgram:
        lp = LinearProgram(objective=objective)
        for row, rhs in zip(self.flow, self.flow_rhs):
            lp.add_row(row, "=", rhs)
        return lp

    def _reach(self, x: np.ndarray) -> np.ndarray:
        return self.base + self.mass @ x

    def _witness(self, x: np.ndarray) -> dict[tuple[str, str], float]:
        return {pair: float(v) for pair, v in zip(self.pairs, x)}

    def support(self, lam) -> tuple[float, tuple[float, ...], dict[tuple[str, str], float]]:
        """Maximize ``lam . reach``; returns (support value, vertex point, witness).

        The direction is perturbed lexicographically so ties on the optimal
        face resolve to the same vertex every time.
        """
        lam = np.asarray(lam, dtype=float)
        if not self.pairs:
            return float(lam @ self.base), tuple(self.base), {}
        tilt = LEX_PERTURBATION * np.array([2.0 ** -(i + 1) for i in range(self.k)])
        objective = (lam + tilt) @ self.mass
        self.lp_calls += 1
        sol = solve_lp(self._lp(objective))
        if not sol.optimal:
            raise SolverError(f"support LP terminated with status {sol.status}")
        point = self._reach(sol.x)
        return float(lam @ point), tuple(float(v) for v in point), self._witness(sol.x)

    def feasible_at(self, point, slack: float = 1e-9
                    ) -> dict[tuple[str, str], float] | None:
        """Witness for ``reach >= point`` componentwise, or None if unachievable."""
        point = np.asarray(point, dtype=float)
        if not self.pairs:
            return {} if np.all(self.base >= point - slack) else None
        lp = self._lp(np.ones(self.k) @ self.mass)
        for i in range(self.k):
            lp.add_row(self.mass[i], ">=", float(point[i]) - slack - self.base[i])
        self.lp_calls += 1
        sol = solve_lp(lp)
        if not sol.optimal:
            return None
        return self._witness(sol.x)


def _round_key(values, tol: float) -> tuple[int, ...]:
    return tuple(int(round(v / tol)) for v in values)


def _affine_basis(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean, orthonormal basis of the affine hull, and basis of its complement."""
    mean = points.mean(axis=0)
    centered = points - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=True)
    scale = max(1.0, float(svals[0]) if len(svals) else 1.0)
    rank = int(np.sum(svals > 1e-9 * scale))
    return mean, vt[:rank].T, vt[rank:].T


def sandwich_polytope(lp: ReachabilityLp, eps: float) -> ParetoApprox:
    """Reconstruct the achievable polytope's vertices by facet certification.

    Refines until every facet's support gap is below FACET_GAP_TOL (or the
    round/LP budget is hit); raises if the residual exceeds ``eps``.
    """
    k = lp.k
    vertices: list[tuple[float, ...]] = []
    witnesses: list[dict] = []
    index_of: dict[tuple[int, ...], int] = {}

    def add_point(point, witness) -> bool:
        key = _round_key(point, VERTEX_DEDUP_TOL)
        if key in index_of:
            return False
        index_of[key] = len(vertices)
        vertices.append(point)
        witnesses.append(witness)
        return True

    directions = [np.ones(k), -np.ones(k)]
    for i in range(k):
        e = np.zeros(k)
        e[i] = 1.0
        directions.extend([e.copy(), -e])
    for lam in directions:
        _, point, witness = lp.support(lam)
        add_point(point, witness)

    certified: set[tuple[int, ...]] = set()
    residual = 0.0

    def certify(lam: np.ndarray, offset: float) -> bool:
        """True if the polytope does not extend beyond lam.x <= offset; else add vertex."""
        nonlocal residual
        key = _round_key(lam, 1e-9)
        if key in certified:
            return True
        h, point, witness = lp.support(lam)
        gap = h - offset
        if gap <= FACET_GAP_TOL or not add_point(point, witness):
            certified.add(key)
            residual = max(residual, max(gap, 0.0))
            return True
        return False

    for _ in range(MAX_SANDWICH_ROUNDS):
        if lp.lp_calls > MAX_SUPPORT_CALLS:
            raise SolverError("sandwich: LP budget exhausted")
        pts = np.array(vertices)
        mean, basis, complement = _affine_basis(pts)
        progressed = False

        # flat directions first: the polytope may extend off the current affine hull
        for j in range(complement.shape[1]):
            n_dir = complement[:, j]
            for lam in (n_dir, -n_dir):
                if not certify(lam, float(lam @ mean)):
                    progressed = True
                    break
            if progressed:
                break
        if progressed:
            continue

        dim = basis.shape[1]
        if dim == 0:
            break
        if dim == 1:
            axis = basis[:, 0]
            coords = pts @ axis
            for lam, offset in ((axis, float(coords.max())), (-axis, float(-coords.min()))):
                if not certify(lam, offset):
                    progressed = True
                    break
            if not progressed:
                break
            continue

        projected = (pts - mean) @ basis
        try:
            hull = ConvexHull(projected)
        except QhullError as exc:
            raise SolverError(f"sandwich: hull construction failed ({exc})")
        for eq in hull.equations:
            normal, offset = eq[:-1], eq[-1]
            lam = basis @ normal
            bound = float(-offset + lam @ mean)
            if not certify(lam, bound):
                progressed = True
                break
        if not progressed:
            break
    else:
        raise SolverError("sandwich: refinement did not converge")

    if residual > max(eps, FACET_GAP_TOL):
        raise SolverError(f"sandwich: residual gap {residual} exceeds requested {eps}")

    keep = _hull_vertex_filter(vertices)
    kept_points = [vertices[i] for i in keep]
    kept_witnesses = [witnesses[i] for i in keep]
    order = sorted(range(len(kept_points)), key=lambda i: kept_points[i])
    return ParetoApprox(
        extreme_points=tuple(kept_points[i] for i in order),
        witnesses=tuple(kept_witnesses[i] for i in order),
        epsilon_pareto=residual,
    )


def _hull_vertex_filter(points: list[tuple[float, ...]]) -> list[int]:
    """Indices of points that are genuine vertices of the convex hull."""
    pts = np.array(points)
    if len(points) <= 2:
        return list(range(len(points)))
    mean, basis, _ = _affine_basis(pts)
    dim = basis.shape[1]
    if dim == 0:
        return [0]
    projected = (pts - mean) @ basis
    if dim == 1:
        coords = projected[:, 0]
        return sorted({int(np.argmin(coords)), int(np.argmax(coords))})
    try:
        hull = ConvexHull(projected)
        return sorted(int(i) for i in hull.vertices)
    except QhullError:
        return list(range(len(points)))


def pareto_extreme_points(frontier: ParetoApprox) -> ParetoApprox:
    """Drop extreme points that some convex combination of the others dominates.

    On a stopping partition query every point is a distribution, so nothing
    is dominated and the frontier equals the whole polytope; on general
    queries this leaves exactly the Pareto-maximal vertices.
    """
    points = [np.array(p) for p in frontier.extreme_points]
    m = len(points)
    if m <= 1:
        return frontier
    keep = []
    for i, v in enumerate(points):
        lp = LinearProgram(objective=np.array([float(sum(p)) for p in points]))
        for coord in range(len(v)):
            lp.add_row(np.array([p[coord] for p in points]), ">=", float(v[coord]))
        lp.add_row(np.ones(m), "=", 1.0)
        sol = solve_lp(lp)
        if not sol.optimal or sol.value <= float(v.sum()) + 1e-8:
            keep.append(i)
    return ParetoApprox(
        extreme_points=tuple(frontier.extreme_points[i] for i in keep),
        witnesses=tuple(frontier.witnesses[i] for i in keep),
        epsilon_pareto=frontier.epsilon_pareto,
    )
