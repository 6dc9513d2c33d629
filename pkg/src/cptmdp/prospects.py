"""Prospect arithmetic: utility, probability weighting, decision weights, cpt and eu.

A prospect is a finite distribution over monetary outcomes.  ``eu`` is the
plain utility-weighted expectation; ``cpt`` re-weights each outcome with a
rank-dependent decision weight built from two probability weighting
functions (one for gains, one for losses).

Two loss-ranking conventions are in circulation and they disagree whenever a
prospect mixes losses with a zero or positive outcome:

* ``REFERENCE`` (default): loss ranks cumulate downward from the zero
  reference point, i.e. the rank of a loss is the probability of ending up
  strictly better but still non-positive.  This is what the widely quoted
  worked-example values (e.g. the 11.07 / 10.19 coupon-bet pair) are
  computed with.
* ``TAIL``: loss ranks cumulate upward from the worst outcome, which makes
  ``cpt`` coincide with the tail-difference form implemented by
  :func:`cpt_via_tails` and gives sign-separated monotonicity in the
  probability vector.

All functions are pure and all types are immutable; everything here is safe
to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ParseError, ValidationError

PROB_SUM_TOL = 1e-9
#: probabilities at or below this are treated as exactly zero before weighting
PROB_CLAMP = 1e-12
#: Tversky-Kahneman weighting is non-monotone below this exponent
TK_MIN_EXPONENT = 0.279

DEFAULT_LIP_GRID = 100_000


class LossRanking(str, Enum):
    REFERENCE = "reference"
    TAIL = "tail"


class LipSource(str, Enum):
    USER_SUPPLIED = "user-supplied"
    GRID_ESTIMATED = "grid-estimated"


def _check_piecewise(points: tuple[tuple[float, float], ...], what: str) -> None:
    if len(points) < 2:
        raise ValidationError(f"{what}: need at least two breakpoints")
    xs = [p[0] for p in points]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValidationError(f"{what}: breakpoint x-coordinates must be strictly increasing")


def _interpolate(points: tuple[tuple[float, float], ...], x: float) -> float:
    # linear between breakpoints, extrapolated with the terminal slopes
    if x <= points[0][0]:
        (x0, y0), (x1, y1) = points[0], points[1]
    elif x >= points[-1][0]:
        (x0, y0), (x1, y1) = points[-2], points[-1]
    else:
        for (x0, y0), (x1, y1) in zip(points, points[1:]):
            if x0 <= x <= x1:
                break
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


@dataclass(frozen=True)
class UtilitySpec:
    """Outcome utility: identity, the power/loss-aversion form, or piecewise linear."""

    kind: str
    alpha: float = 1.0
    beta: float = 1.0
    loss_aversion: float = 1.0
    points: tuple[tuple[float, float], ...] = ()

    @classmethod
    def identity(cls) -> "UtilitySpec":
        return cls(kind="identity")

    @classmethod
    def tk_power(cls, alpha: float = 0.88, beta: float = 0.88,
                 loss_aversion: float = 2.25) -> "UtilitySpec":
        if not (0.0 < alpha <= 1.0 and 0.0 < beta <= 1.0):
            raise ValidationError("power utility: exponents must be in (0, 1]")
        if loss_aversion < 1.0:
            raise ValidationError("power utility: loss aversion must be >= 1")
        return cls(kind="tk-power", alpha=alpha, beta=beta, loss_aversion=loss_aversion)

    @classmethod
    def piecewise(cls, points) -> "UtilitySpec":
        pts = tuple((float(x), float(y)) for x, y in points)
        _check_piecewise(pts, "piecewise utility")
        if not any(x == 0.0 and y == 0.0 for x, y in pts):
            raise ValidationError("piecewise utility: breakpoints must pass through (0, 0)")
        ys = [y for _, y in pts]
        if any(b < a for a, b in zip(ys, ys[1:])):
            raise ValidationError("piecewise utility: must be non-decreasing")
        return cls(kind="piecewise", points=pts)

    def __call__(self, x: float) -> float:
        if self.kind == "identity":
            return x
        if self.kind == "tk-power":
            if x >= 0.0:
                return x ** self.alpha
            return -self.loss_aversion * (-x) ** self.beta
        return _interpolate(self.points, x)


@dataclass(frozen=True)
class WeightSpec:
    """Probability weighting function on [0, 1] with w(0)=0 and w(1)=1."""

    kind: str
    exponent: float = 1.0
    points: tuple[tuple[float, float], ...] = ()

    @classmethod
    def identity(cls) -> "WeightSpec":
        return cls(kind="identity")

    @classmethod
    def tk(cls, exponent: float) -> "WeightSpec":
        if exponent <= TK_MIN_EXPONENT:
            raise ValidationError(
                f"tk weighting: exponent must exceed {TK_MIN_EXPONENT} to stay monotone")
        return cls(kind="tk", exponent=exponent)

    @classmethod
    def piecewise(cls, points) -> "WeightSpec":
        pts = tuple((float(x), float(y)) for x, y in points)
        _check_piecewise(pts, "piecewise weighting")
        if pts[0] != (0.0, 0.0) or pts[-1] != (1.0, 1.0):
            raise ValidationError("piecewise weighting: endpoints must be (0,0) and (1,1)")
        for x, y in pts:
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise ValidationError("piecewise weighting: breakpoints must lie in the unit square")
        ys = [y for _, y in pts]
        if any(b < a for a, b in zip(ys, ys[1:])):
            raise ValidationError("piecewise weighting: must be non-decreasing")
        return cls(kind="piecewise", points=pts)

    def __call__(self, p: float) -> float:
        return weight(self, p)


def weight(spec: WeightSpec, p: float) -> float:
    """Evaluate a weighting function; domain error beyond 1e-12 outside [0, 1]."""
    if p < -1e-12 or p > 1.0 + 1e-12:
        raise ValidationError(f"weight: probability {p!r} outside [0, 1]")
    if p <= PROB_CLAMP:
        return 0.0
    if p >= 1.0 - PROB_CLAMP:
        return 1.0
    if spec.kind == "identity":
        return p
    if spec.kind == "tk":
        g = spec.exponent
        num = p ** g
        return num / (num + (1.0 - p) ** g) ** (1.0 / g)
    return min(1.0, max(0.0, _interpolate(spec.points, p)))


@dataclass(frozen=True)
class Prospect:
    """Outcome vector (strictly increasing) with its probability vector."""

    outcomes: tuple[float, ...]
    probs: tuple[float, ...]
    #: sub-distributions are permitted only inside the optimizer and are flagged here
    full_distribution: bool = True

    def __post_init__(self) -> None:
        if len(self.outcomes) != len(self.probs) or len(self.outcomes) < 1:
            raise ValidationError("prospect: need matching, non-empty outcome/probability vectors")
        if any(b <= a for a, b in zip(self.outcomes, self.outcomes[1:])):
            raise ValidationError("prospect: outcomes must be strictly increasing")
        for p in self.probs:
            if p < -PROB_SUM_TOL or p > 1.0 + PROB_SUM_TOL:
                raise ValidationError(f"prospect: probability {p!r} outside [0, 1]")
        if self.full_distribution and abs(sum(self.probs) - 1.0) > PROB_SUM_TOL:
            raise ValidationError(
                f"prospect: probabilities sum to {sum(self.probs)!r}, expected 1")

    @property
    def size(self) -> int:
        return len(self.outcomes)

    @classmethod
    def from_pairs(cls, pairs, full_distribution: bool = True) -> "Prospect":
        """Build from (outcome, probability) pairs, merging equal outcomes."""
        merged: list[list[float]] = []
        for o, p in sorted((float(o), float(p)) for o, p in pairs):
            if merged and o - merged[-1][0] <= 1e-9:
                merged[-1][1] += p
            else:
                merged.append([o, p])
        return cls(tuple(o for o, _ in merged), tuple(p for _, p in merged),
                   full_distribution=full_distribution)

    def as_pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.outcomes, self.probs))


@dataclass(frozen=True)
class CptParams:
    """Utility plus gain/loss weighting functions and their Lipschitz constants."""

    utility: UtilitySpec
    weight_gain: WeightSpec
    weight_loss: WeightSpec
    lip_gain: float
    lip_loss: float
    lip_source: LipSource
    loss_ranking: LossRanking = LossRanking.REFERENCE

    def __post_init__(self) -> None:
        if self.lip_gain < 0 or self.lip_loss < 0:
            raise ValidationError("cpt params: Lipschitz constants must be non-negative")
        if abs(self.utility(0.0)) > 1e-12:
            raise ValidationError("cpt params: utility must map 0 to 0")
        grid = [i / 64 for i in range(65)]
        us = [self.utility(4 * (x - 0.5)) for x in grid]
        if any(b < a - 1e-12 for a, b in zip(us, us[1:])):
            raise ValidationError("cpt params: utility must be increasing on its sampled grid")
        for spec, name in ((self.weight_gain, "gain"), (self.weight_loss, "loss")):
            ws = [weight(spec, x) for x in grid]
            if any(b < a - 1e-12 for a, b in zip(ws, ws[1:])):
                raise ValidationError(f"cpt params: {name} weighting must be increasing")

    @classmethod
    def create(cls, utility: UtilitySpec, weight_gain: WeightSpec, weight_loss: WeightSpec,
               lip_gain: float | None = None, lip_loss: float | None = None,
               loss_ranking: LossRanking = LossRanking.REFERENCE) -> "CptParams":
        """Resolve Lipschitz constants: user values win, piecewise/identity are exact,
        Tversky-Kahneman forms fall back to a grid estimate (flagged)."""
        estimated = False

        def resolve(spec: WeightSpec, given: float | None) -> float:
            nonlocal estimated
            if given is not None:
                return float(given)
            if spec.kind == "identity":
                return 1.0
            if spec.kind == "piecewise":
                return max((y1 - y0) / (x1 - x0)
                           for (x0, y0), (x1, y1) in zip(spec.points, spec.points[1:]))
            estimated = True
            return grid_estimate_weight_lipschitz(spec, DEFAULT_LIP_GRID)

        lg = resolve(weight_gain, lip_gain)
        ll = resolve(weight_loss, lip_loss)
        source = LipSource.GRID_ESTIMATED if estimated else LipSource.USER_SUPPLIED
        return cls(utility, weight_gain, weight_loss, lg, ll, source, loss_ranking)

    @classmethod
    def standard(cls, loss_ranking: LossRanking = LossRanking.REFERENCE) -> "CptParams":
        """The commonly used parameterization: power utility with alpha = beta = 0.88
        and loss aversion 2.25, weighting exponents 0.61 (gains) and 0.69 (losses)."""
        return cls.create(UtilitySpec.tk_power(0.88, 0.88, 2.25),
                          WeightSpec.tk(0.61), WeightSpec.tk(0.69),
                          loss_ranking=loss_ranking)

    @classmethod
    def risk_neutral(cls) -> "CptParams":
        return cls.create(UtilitySpec.identity(), WeightSpec.identity(), WeightSpec.identity())


def utility(params: CptParams, o: float) -> float:
    """Utility of a single outcome under the given parameters."""
    return params.utility(o)


def _clamped(probs) -> list[float]:
    return [0.0 if p <= PROB_CLAMP else min(p, 1.0) for p in probs]


def decision_weights(params: CptParams, x: Prospect) -> tuple[float, ...]:
    """Rank-dependent decision weight of every outcome of ``x``.

    Gains are ranked by the probability of getting strictly more.  Losses are
    ranked per ``params.loss_ranking``; see the module docstring.  A zero
    outcome always gets weight 0.
    """
    probs = _clamped(x.probs)
    k = x.size
    weights = [0.0] * k
    acc = 0.0
    for i in range(k - 1, -1, -1):  # gains, from the top down
        if x.outcomes[i] > 0.0:
            weights[i] = max(0.0, weight(params.weight_gain, probs[i] + acc)
                             - weight(params.weight_gain, acc))
            acc += probs[i]
    if params.loss_ranking is LossRanking.REFERENCE:
        acc = sum(p for o, p in zip(x.outcomes, probs) if o == 0.0)
        for i in range(k - 1, -1, -1):  # losses, ranked downward from the reference
            if x.outcomes[i] < 0.0:
                weights[i] = max(0.0, weight(params.weight_loss, probs[i] + acc)
                                 - weight(params.weight_loss, acc))
                acc += probs[i]
    else:
        acc = 0.0
        for i in range(k):  # losses, ranked upward from the worst outcome
            if x.outcomes[i] < 0.0:
                weights[i] = max(0.0, weight(params.weight_loss, probs[i] + acc)
                                 - weight(params.weight_loss, acc))
                acc += probs[i]
    return tuple(weights)


def cpt(params: CptParams, x: Prospect) -> float:
    """CPT valuation: sum of utilities times decision weights."""
    return _cpt_of(params, x.outcomes, x.probs)


def _cpt_of(params: CptParams, outcomes, probs) -> float:
    """Unvalidated fast path used by the optimizer (accepts sub-distributions)."""
    probs = _clamped(probs)
    u = params.utility
    wg, wl = params.weight_gain, params.weight_loss
    total = 0.0
    acc = 0.0
    for i in range(len(outcomes) - 1, -1, -1):
        if outcomes[i] > 0.0:
            total += u(outcomes[i]) * (weight(wg, probs[i] + acc) - weight(wg, acc))
            acc += probs[i]
    if params.loss_ranking is LossRanking.REFERENCE:
        acc = sum(p for o, p in zip(outcomes, probs) if o == 0.0)
        for i in range(len(outcomes) - 1, -1, -1):
            if outcomes[i] < 0.0:
                total += u(outcomes[i]) * (weight(wl, probs[i] + acc) - weight(wl, acc))
                acc += probs[i]
    else:
        acc = 0.0
        for i in range(len(outcomes)):
            if outcomes[i] < 0.0:
                total += u(outcomes[i]) * (weight(wl, probs[i] + acc) - weight(wl, acc))
                acc += probs[i]
    return total


def cpt_via_tails(params: CptParams, x: Prospect) -> float:
    """CPT evaluated through outcome-tail probabilities.

    Gains use w+(P[X >= o]) - w+(P[X > o]); losses use
    w-(P[X <= o]) - w-(P[X < o]).  Coincides with :func:`cpt` under the TAIL
    loss-ranking convention; implemented independently so the two can be
    checked against each other.
    """
    probs = _clamped(x.probs)
    k = x.size
    total = 0.0
    for i in range(k):
        o = x.outcomes[i]
        if o > 0.0:
            ge = sum(probs[i:])
            gt = sum(probs[i + 1:])
            total += params.utility(o) * (weight(params.weight_gain, ge)
                                          - weight(params.weight_gain, gt))
        elif o < 0.0:
            le = sum(probs[:i + 1])
            lt = sum(probs[:i])
            total += params.utility(o) * (weight(params.weight_loss, le)
                                          - weight(params.weight_loss, lt))
    return total


def eu(params: CptParams, x: Prospect) -> float:
    """Expected utility: plain probability-weighted sum of utilities."""
    return sum(params.utility(o) * p for o, p in zip(x.outcomes, x.probs))


def lipschitz_constant(params: CptParams, outcomes) -> float:
    """Sensitivity bound of cpt with respect to the probability vector.

    Returns ``u* . max(L_w+, L_w-) . (2k^2 + k)`` where ``u*`` is the largest
    absolute utility over the outcomes.  When ``params.lip_source`` is
    GRID_ESTIMATED the weighting constants are grid estimates, so the result
    is an estimate as well (the TK weighting forms have unbounded slope at
    the endpoints and admit no exact constant on [0, 1]).
    """
    outcomes = tuple(outcomes)
    if not outcomes:
        raise ValidationError("lipschitz_constant: need at least one outcome")
    k = len(outcomes)
    u_star = max(abs(params.utility(o)) for o in outcomes)
    return u_star * max(params.lip_gain, params.lip_loss) * (2 * k * k + k)


def grid_estimate_weight_lipschitz(spec: WeightSpec, n_points: int) -> float:
    """Max slope of the weighting function over a uniform grid of ``n_points``."""
    if n_points < 2:
        raise ValidationError("grid_estimate_weight_lipschitz: need at least two points")
    step = 1.0 / (n_points - 1)
    best = 0.0
    prev = weight(spec, 0.0)
    for i in range(1, n_points):
        cur = weight(spec, min(1.0, i * step))
        best = max(best, abs(cur - prev) / step)
        prev = cur
    return best


# ---------------------------------------------------------------------------
# JSON wire format


def _utility_to_json(spec: UtilitySpec) -> dict:
    if spec.kind == "identity":
        return {"kind": "identity"}
    if spec.kind == "tk-power":
        return {"kind": "tk-power", "alpha": spec.alpha, "beta": spec.beta,
                "lambda": spec.loss_aversion}
    return {"kind": "piecewise", "points": [[x, y] for x, y in spec.points]}


def _weight_to_json(spec: WeightSpec) -> dict:
    if spec.kind == "identity":
        return {"kind": "identity"}
    if spec.kind == "tk":
        return {"kind": "tk", "exponent": spec.exponent}
    return {"kind": "piecewise", "points": [[x, y] for x, y in spec.points]}


def params_to_json_dict(params: CptParams) -> dict:
    doc = {
        "utility": _utility_to_json(params.utility),
        "weight_gain": _weight_to_json(params.weight_gain),
        "weight_loss": _weight_to_json(params.weight_loss),
        "loss_ranking": params.loss_ranking.value,
    }
    # grid estimates are derived deterministically, so they are not persisted
    if params.lip_source is LipSource.USER_SUPPLIED:
        doc["lip_gain"] = params.lip_gain
        doc["lip_loss"] = params.lip_loss
    return doc


def _utility_from_json(doc: dict) -> UtilitySpec:
    kind = doc.get("kind")
    if kind == "identity":
        return UtilitySpec.identity()
    if kind == "tk-power":
        return UtilitySpec.tk_power(float(doc["alpha"]), float(doc["beta"]),
                                    float(doc["lambda"]))
    if kind == "piecewise":
        return UtilitySpec.piecewise(doc["points"])
    raise ParseError(f"unknown utility kind {kind!r}")


def _weight_from_json(doc: dict) -> WeightSpec:
    kind = doc.get("kind")
    if kind == "identity":
        return WeightSpec.identity()
    if kind == "tk":
        return WeightSpec.tk(float(doc["exponent"]))
    if kind == "piecewise":
        return WeightSpec.piecewise(doc["points"])
    raise ParseError(f"unknown weighting kind {kind!r}")


def params_from_json_dict(doc: dict) -> CptParams:
    try:
        utility_spec = _utility_from_json(doc["utility"])
        gain = _weight_from_json(doc["weight_gain"])
        loss = _weight_from_json(doc["weight_loss"])
    except KeyError as exc:
        raise ParseError(f"cpt params: missing field {exc}")
    ranking = LossRanking(doc.get("loss_ranking", "reference"))
    lip_gain = doc.get("lip_gain")
    lip_loss = doc.get("lip_loss")
    return CptParams.create(utility_spec, gain, loss,
                            lip_gain=None if lip_gain is None else float(lip_gain),
                            lip_loss=None if lip_loss is None else float(lip_loss),
                            loss_ranking=ranking)
