"""Glicko-2 rating updates with a tie interpolation rule and no inactivity step.

The implementation follows the standard Glicko-2 procedure
(http://www.glicko.net/glicko/glicko2.pdf): ratings are kept on the display
scale (1500/350 initials), converted to the internal mu/phi scale for the
update, and the new volatility is found by a bracketed Illinois iteration on
the characteristic function.

Two deliberate departures from stock Glicko-2, both needed when the rated
players are frozen model snapshots instead of humans:

* No inactivity widening: a player that sits out does not gain uncertainty,
  so :func:`update_inactive` is the identity.
* Ties move the rating by ``tie_ratio`` times the counterfactual decisive
  change: toward a stronger opponent (a fraction of the win gain) and away
  from a weaker one (a fraction of the loss drop). Deviation and volatility
  still follow the ordinary score-0.5 machinery, because a draw is real
  evidence of skill proximity.

All functions are pure; states and configs are immutable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

GLICKO2_SCALE = 173.7178

# Display-scale floor applied to deviations before any division.
DEVIATION_FLOOR = 1e-4

_MAX_VOLATILITY_ITERATIONS = 100
_MAX_BRACKET_EXPANSIONS = 1000


class GameOutcome(enum.Enum):
    """Result of one game from the first player's perspective."""

    WIN = "win"
    LOSS = "loss"
    TIE = "tie"


@dataclass(frozen=True)
class RatingConfig:
    """Constants of the rating system.

    ``tau`` constrains volatility changes, ``epsilon`` is the volatility
    solver tolerance, and ``tie_ratio`` scales a tie's rating effect relative
    to the counterfactual decisive outcome.
    """

    tau: float = 0.5
    epsilon: float = 1e-6
    tie_ratio: float = 0.1
    initial_rating: float = 1500.0
    initial_deviation: float = 350.0
    initial_volatility: float = 0.06
    scale: float = GLICKO2_SCALE

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not (0.0 <= self.tie_ratio <= 1.0):
            raise ValueError(f"tie_ratio must be in [0, 1], got {self.tie_ratio}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be > 0, got {self.scale}")
        for name in ("initial_rating", "initial_deviation", "initial_volatility"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.initial_deviation <= 0 or self.initial_volatility <= 0:
            raise ValueError("initial deviation and volatility must be > 0")

    def initial_state(self) -> "RatingState":
        return RatingState(
            rating=self.initial_rating,
            deviation=self.initial_deviation,
            volatility=self.initial_volatility,
        )


@dataclass(frozen=True)
class RatingState:
    """A player's skill posterior summary on the display scale."""

    rating: float
    deviation: float
    volatility: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.rating):
            raise ValueError(f"rating must be finite, got {self.rating}")
        if not (math.isfinite(self.deviation) and self.deviation > 0):
            raise ValueError(f"deviation must be finite and > 0, got {self.deviation}")
        if not (math.isfinite(self.volatility) and self.volatility > 0):
            raise ValueError(f"volatility must be finite and > 0, got {self.volatility}")

    def as_dict(self) -> dict:
        return {
            "rating": self.rating,
            "deviation": self.deviation,
            "volatility": self.volatility,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RatingState":
        return cls(
            rating=float(data["rating"]),
            deviation=float(data["deviation"]),
            volatility=float(data["volatility"]),
        )


def to_internal(state: RatingState, config: RatingConfig) -> Tuple[float, float]:
    """Display (rating, deviation) -> internal (mu, phi)."""
    mu = (state.rating - 1500.0) / config.scale
    phi = state.deviation / config.scale
    return mu, phi


def from_internal(
    mu: float, phi: float, volatility: float, config: RatingConfig
) -> RatingState:
    """Internal (mu, phi) -> display state, with the deviation floor applied."""
    return RatingState(
        rating=mu * config.scale + 1500.0,
        deviation=max(phi * config.scale, DEVIATION_FLOOR),
        volatility=volatility,
    )


def g(phi: float) -> float:
    """Glicko-2 attenuation of an opponent's influence by their uncertainty."""
    if phi < 0:
        raise ValueError(f"phi must be >= 0, got {phi}")
    return 1.0 / math.sqrt(1.0 + 3.0 * phi * phi / (math.pi * math.pi))


def expected_score(mu: float, mu_j: float, phi_j: float) -> float:
    """Win expectancy of ``mu`` against opponent ``(mu_j, phi_j)``."""
    x = g(phi_j) * (mu - mu_j)
    # Evaluate the logistic on the non-overflowing side.
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


Opponent = Tuple[float, float, float]  # (rating, deviation, score) on display scale


def _new_volatility(
    phi: float, sigma: float, delta: float, v: float, config: RatingConfig
) -> float:
    """Solve the Glicko-2 volatility equation by bracketed Illinois iteration.

    Returns sigma' with |f(ln sigma'^2)| < epsilon; raises if the 100-step
    cap is exceeded or the initial bracket fails to straddle a sign change.
    """
    a = math.log(sigma * sigma)
    phi_sq = phi * phi
    delta_sq = delta * delta
    tau_sq = config.tau * config.tau

    def f(x: float) -> float:
        ex = math.exp(x)
        num = ex * (delta_sq - phi_sq - v - ex)
        den = 2.0 * (phi_sq + v + ex) ** 2
        return num / den - (x - a) / tau_sq

    lo = a
    if delta_sq > phi_sq + v:
        hi = math.log(delta_sq - phi_sq - v)
    else:
        k = 1
        while f(a - k * config.tau) < 0.0:
            k += 1
            if k > _MAX_BRACKET_EXPANSIONS:
                raise ArithmeticError("volatility bracket search did not terminate")
        hi = a - k * config.tau

    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0.0:
        raise ArithmeticError(
            f"volatility bracket does not straddle a sign change: f({lo})={f_lo}, f({hi})={f_hi}"
        )

    for _ in range(_MAX_VOLATILITY_ITERATIONS):
        if abs(hi - lo) <= config.epsilon and abs(f_lo) < config.epsilon:
            break
        mid = lo + (lo - hi) * f_lo / (f_hi - f_lo)
        f_mid = f(mid)
        if f_mid == 0.0:
            lo, f_lo = mid, f_mid
            break
        if f_mid * f_hi < 0.0:
            lo, f_lo = hi, f_hi
        else:
            # Illinois cut: halve the stagnant end so the bracket keeps moving.
            f_lo /= 2.0
        hi, f_hi = mid, f_mid
    else:
        raise ArithmeticError(
            f"volatility iteration exceeded {_MAX_VOLATILITY_ITERATIONS} steps"
        )
    return math.exp(lo / 2.0)


def _validate_opponents(opponents: Sequence[Opponent]) -> None:
    for rating, deviation, score in opponents:
        if not (math.isfinite(rating) and math.isfinite(deviation) and math.isfinite(score)):
            raise ValueError(f"non-finite opponent entry: {(rating, deviation, score)}")
        if deviation < 0:
            raise ValueError(f"opponent deviation must be >= 0, got {deviation}")
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {score}")


def _rate(
    state: RatingState, opponents: Sequence[Opponent], config: RatingConfig
) -> RatingState:
    """One-period Glicko-2 update against ``opponents`` with arbitrary scores."""
    mu, phi = to_internal(state, config)

    terms = []
    for rating, deviation, score in opponents:
        mu_j = (rating - 1500.0) / config.scale
        phi_j = max(deviation, DEVIATION_FLOOR) / config.scale
        g_j = g(phi_j)
        e_j = expected_score(mu, mu_j, phi_j)
        terms.append((g_j, e_j, score))

    v_inv = math.fsum(g_j * g_j * e_j * (1.0 - e_j) for g_j, e_j, _ in terms)
    if v_inv <= 0.0:
        raise ArithmeticError("estimated variance is infinite; opponents carry no information")
    v = 1.0 / v_inv
    improvement = math.fsum(g_j * (score - e_j) for g_j, e_j, score in terms)
    delta = v * improvement

    sigma_new = _new_volatility(phi, state.volatility, delta, v, config)
    phi_star = math.sqrt(phi * phi + sigma_new * sigma_new)
    phi_new = 1.0 / math.sqrt(1.0 / (phi_star * phi_star) + 1.0 / v)
    mu_new = mu + phi_new * phi_new * improvement
    return from_internal(mu_new, phi_new, sigma_new, config)


def update_decisive(
    state: RatingState, opponents: Sequence[Opponent], config: RatingConfig
) -> RatingState:
    """Rate one period of decisive games; each opponent score must be 0 or 1."""
    if not opponents:
        raise ValueError("opponents must be non-empty; use update_inactive for idle players")
    _validate_opponents(opponents)
    for _, _, score in opponents:
        if score not in (0.0, 1.0, 0, 1):
            raise ValueError(f"decisive score must be 0 or 1, got {score}")
    return _rate(state, opponents, config)


def update_inactive(state: RatingState, config: RatingConfig) -> RatingState:
    """No-op: deviation widening for idle players is disabled."""
    return state


def update_tie(
    state: RatingState, opponent: RatingState, config: RatingConfig
) -> RatingState:
    """Update after a draw.

    Rating moves by ``tie_ratio`` times the change a decisive result against
    this opponent would have produced (a win if the opponent is stronger, a
    loss if weaker; no move at exactly equal ratings). Deviation and
    volatility come from the ordinary update with score 0.5.
    """
    entry = (opponent.rating, opponent.deviation)
    half = _rate(state, [entry + (0.5,)], config)
    if opponent.rating > state.rating:
        counterfactual = _rate(state, [entry + (1.0,)], config).rating
    elif opponent.rating < state.rating:
        counterfactual = _rate(state, [entry + (0.0,)], config).rating
    else:
        return RatingState(state.rating, half.deviation, half.volatility)
    new_rating = state.rating + config.tie_ratio * (counterfactual - state.rating)
    return RatingState(new_rating, half.deviation, half.volatility)
