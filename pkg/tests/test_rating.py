"""Rating core tests: scale conversion, the full update, ties, and the solver."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from comparena.rating import (
    DEVIATION_FLOOR,
    GLICKO2_SCALE,
    RatingConfig,
    RatingState,
    expected_score,
    from_internal,
    g,
    to_internal,
    update_decisive,
    update_inactive,
    update_tie,
)

CFG = RatingConfig()

# Sane display-scale ranges for randomized states; extreme gaps are covered
# by dedicated stability tests.
ratings = st.floats(min_value=800.0, max_value=2200.0)
deviations = st.floats(min_value=5.0, max_value=350.0)
volatilities = st.floats(min_value=0.01, max_value=0.12)
states = st.builds(RatingState, rating=ratings, deviation=deviations, volatility=volatilities)


class TestScaleConversion:
    def test_initial_state_maps_to_origin(self):
        mu, phi = to_internal(RatingState(1500, 350, 0.06), CFG)
        assert mu == 0.0
        assert abs(phi - 350.0 / GLICKO2_SCALE) < 1e-12
        assert abs(phi - 2.014761) < 1e-6

    def test_scale_definition_points(self):
        assert to_internal(RatingState(1500, GLICKO2_SCALE, 0.06), CFG) == pytest.approx((0.0, 1.0))
        mu, phi = to_internal(RatingState(1500 + GLICKO2_SCALE, GLICKO2_SCALE, 0.06), CFG)
        assert (mu, phi) == pytest.approx((1.0, 1.0))

    @given(states)
    @settings(deadline=None)
    def test_round_trip_is_identity(self, state):
        mu, phi = to_internal(state, CFG)
        back = from_internal(mu, phi, state.volatility, CFG)
        assert abs(back.rating - state.rating) < 1e-9
        assert abs(back.deviation - state.deviation) < 1e-9


class TestAttenuationAndExpectedScore:
    def test_g_at_zero_is_one(self):
        assert g(0.0) == 1.0

    def test_g_closed_form_point(self):
        # 1 + 3 phi^2 / pi^2 == 2 at phi = pi / sqrt(3)
        assert abs(g(math.pi / math.sqrt(3.0)) - 1.0 / math.sqrt(2.0)) < 1e-12

    def test_g_fresh_player_value(self):
        assert abs(g(2.01476) - 0.6690) < 5e-4

    def test_g_rejects_negative(self):
        with pytest.raises(ValueError):
            g(-0.1)

    @given(st.floats(min_value=0.0, max_value=5.0), st.floats(min_value=1e-6, max_value=1.0))
    @settings(deadline=None)
    def test_g_strictly_decreasing(self, phi, step):
        assert g(phi + step) < g(phi)

    def test_expected_score_half_at_equal_means(self):
        for phi in (0.0, 0.5, 2.0):
            assert expected_score(0.0, 0.0, phi) == 0.5

    def test_expected_score_known_point(self):
        assert abs(expected_score(0.5756, 0.0, 0.1727) - 0.639) < 1e-3

    @given(
        st.floats(min_value=-5, max_value=5),
        st.floats(min_value=-5, max_value=5),
        st.floats(min_value=0, max_value=3),
    )
    @settings(deadline=None)
    def test_expected_score_complements(self, a, b, phi):
        assert abs(expected_score(a, b, phi) + expected_score(b, a, phi) - 1.0) < 1e-12

    def test_expected_score_monotone_in_mu(self):
        values = [expected_score(mu, 0.0, 0.3) for mu in (-4, -1, 0, 1, 4, 20)]
        assert values == sorted(values)
        assert values[-1] > 0.999

    def test_expected_score_no_overflow_at_extreme_gap(self):
        assert expected_score(-1000.0, 1000.0, 0.1) >= 0.0
        assert expected_score(1000.0, -1000.0, 0.1) <= 1.0


class TestDecisiveUpdate:
    def test_worked_example(self):
        """Full update for (1500, 200, 0.06) vs three opponents, tau=0.5."""
        state = RatingState(1500, 200, 0.06)
        new = update_decisive(
            state, [(1400, 30, 1.0), (1550, 100, 0.0), (1700, 300, 0.0)], CFG
        )
        assert new.rating == pytest.approx(1464.06, abs=0.01)
        assert new.deviation == pytest.approx(151.52, abs=0.01)
        assert new.volatility == pytest.approx(0.05999, abs=1e-4)

    def test_symmetric_game_between_fresh_players(self):
        a = RatingState(1500, 350, 0.06)
        b = RatingState(1500, 350, 0.06)
        winner = update_decisive(a, [(b.rating, b.deviation, 1.0)], CFG)
        loser = update_decisive(b, [(a.rating, a.deviation, 0.0)], CFG)
        assert winner.rating > 1500 > loser.rating
        assert abs((winner.rating - 1500) + (loser.rating - 1500)) < 1e-6

    def test_win_and_loss_deltas_have_opposite_signs(self):
        state = RatingState(1500, 200, 0.06)
        opponent = (1480.0, 150.0)
        up = update_decisive(state, [opponent + (1.0,)], CFG)
        down = update_decisive(state, [opponent + (0.0,)], CFG)
        assert up.rating > state.rating
        assert down.rating < state.rating

    def test_empty_opponents_rejected(self):
        with pytest.raises(ValueError, match="update_inactive"):
            update_decisive(RatingState(1500, 200, 0.06), [], CFG)

    def test_non_finite_inputs_rejected(self):
        with pytest.raises(ValueError):
            update_decisive(RatingState(1500, 200, 0.06), [(math.nan, 30, 1.0)], CFG)
        with pytest.raises(ValueError):
            update_decisive(RatingState(1500, 200, 0.06), [(1400, math.inf, 1.0)], CFG)

    def test_fractional_score_rejected(self):
        with pytest.raises(ValueError, match="0 or 1"):
            update_decisive(RatingState(1500, 200, 0.06), [(1400, 30, 0.5)], CFG)

    def test_zero_deviation_opponent_is_floored_not_fatal(self):
        state = RatingState(1500, 200, 0.06)
        new = update_decisive(state, [(1400, 0.0, 1.0)], CFG)
        assert math.isfinite(new.rating) and new.deviation > 0

    @given(states, states)
    @settings(deadline=None, max_examples=60)
    def test_decisive_game_moves_both_players_in_opposite_directions(self, a, b):
        new_a = update_decisive(a, [(b.rating, b.deviation, 1.0)], CFG)
        new_b = update_decisive(b, [(a.rating, a.deviation, 0.0)], CFG)
        assert new_a.rating > a.rating
        assert new_b.rating < b.rating

    @given(
        st.builds(
            RatingState,
            rating=ratings,
            deviation=st.floats(min_value=130.0, max_value=350.0),
            volatility=st.floats(min_value=0.04, max_value=0.08),
        ),
        st.floats(min_value=-300.0, max_value=300.0),
        st.floats(min_value=30.0, max_value=350.0),
    )
    @settings(deadline=None, max_examples=60)
    def test_deviation_shrinks_above_the_volatility_floor(self, a, gap, opp_dev):
        # Below the volatility-driven equilibrium the phi* injection can
        # outweigh one game's information, so the strict shrink is only
        # guaranteed above it and for moderately informative games.
        new_a = update_decisive(a, [(a.rating + gap, opp_dev, 1.0)], CFG)
        assert new_a.deviation < a.deviation

    @given(states, states, st.sampled_from([0.0, 0.5, 1.0]))
    @settings(deadline=None, max_examples=60)
    def test_deviation_always_below_pre_game_phi_star(self, a, b, score):
        from comparena.rating import _rate

        new_a = _rate(a, [(b.rating, b.deviation, score)], CFG)
        phi = a.deviation / GLICKO2_SCALE
        phi_star = math.sqrt(phi * phi + new_a.volatility**2)
        assert new_a.deviation < phi_star * GLICKO2_SCALE

    def test_determinism_bit_identical(self):
        state = RatingState(1517.25, 93.5, 0.0581)
        opponents = [(1611.0, 44.0, 1.0), (1433.0, 210.0, 0.0)]
        first = update_decisive(state, opponents, CFG)
        second = update_decisive(state, opponents, CFG)
        assert first == second


class TestInactiveUpdate:
    def test_identity_for_fresh_state(self):
        state = RatingState(1500, 350, 0.06)
        assert update_inactive(state, CFG) == state

    def test_identity_for_settled_state(self):
        state = RatingState(1700, 80, 0.05)
        assert update_inactive(state, CFG) == state

    def test_idempotent(self):
        state = RatingState(1402.3, 61.7, 0.071)
        once = update_inactive(state, CFG)
        assert update_inactive(once, CFG) == once


class TestTieUpdate:
    def test_equal_ratings_leave_rating_unchanged(self):
        state = RatingState(1500, 200, 0.06)
        other = RatingState(1500, 200, 0.06)
        new = update_tie(state, other, CFG)
        assert new.rating == 1500
        assert new.deviation < state.deviation

    def test_tie_against_stronger_interpolates_win_delta(self):
        state = RatingState(1500, 200, 0.06)
        other = RatingState(1700, 200, 0.06)
        win = update_decisive(state, [(1700, 200, 1.0)], CFG)
        tied = update_tie(state, other, CFG)
        assert tied.rating > 1500
        assert tied.rating == pytest.approx(1500 + 0.1 * (win.rating - 1500), abs=1e-9)

    def test_tie_against_weaker_interpolates_loss_delta(self):
        state = RatingState(1500, 200, 0.06)
        other = RatingState(1300, 200, 0.06)
        loss = update_decisive(state, [(1300, 200, 0.0)], CFG)
        tied = update_tie(state, other, CFG)
        assert tied.rating < 1500
        assert tied.rating == pytest.approx(1500 + 0.1 * (loss.rating - 1500), abs=1e-9)

    def test_zero_ratio_keeps_rating_for_any_opponent(self):
        cfg = RatingConfig(tie_ratio=0.0)
        state = RatingState(1500, 200, 0.06)
        for opponent_rating in (1200.0, 1499.0, 1501.0, 1900.0):
            new = update_tie(state, RatingState(opponent_rating, 140, 0.06), cfg)
            assert new.rating == 1500
            assert new.deviation < state.deviation

    def test_deviation_and_volatility_follow_half_score_update(self):
        from comparena.rating import _rate

        state = RatingState(1480, 170, 0.055)
        other = RatingState(1620, 90, 0.06)
        half = _rate(state, [(other.rating, other.deviation, 0.5)], CFG)
        tied = update_tie(state, other, CFG)
        assert tied.deviation == half.deviation
        assert tied.volatility == half.volatility

    @given(states, states, st.floats(min_value=0.01, max_value=1.0))
    @settings(deadline=None, max_examples=60)
    def test_tie_moves_toward_unequal_opponent(self, a, b, ratio):
        cfg = RatingConfig(tie_ratio=ratio)
        new = update_tie(a, b, cfg)
        if b.rating > a.rating:
            assert new.rating > a.rating
        elif b.rating < a.rating:
            assert new.rating < a.rating
        else:
            assert new.rating == a.rating


class TestVolatilitySolver:
    def test_root_residual_below_epsilon(self):
        """The returned volatility satisfies |f(ln sigma'^2)| < epsilon."""
        from comparena.rating import _new_volatility, expected_score as E, g as g_fn

        cfg = CFG
        state = RatingState(1500, 200, 0.06)
        mu, phi = to_internal(state, cfg)
        cases = [
            [(1400, 30, 1.0), (1550, 100, 0.0), (1700, 300, 0.0)],
            [(1500, 350, 1.0)],
            [(1900, 60, 0.0)],
            [(1500, 350, 0.5)],
        ]
        for opponents in cases:
            terms = []
            for r_j, rd_j, s_j in opponents:
                mu_j = (r_j - 1500.0) / cfg.scale
                phi_j = rd_j / cfg.scale
                terms.append((g_fn(phi_j), E(mu, mu_j, phi_j), s_j))
            v = 1.0 / math.fsum(g_j**2 * e * (1 - e) for g_j, e, _ in terms)
            delta = v * math.fsum(g_j * (s - e) for g_j, e, s in terms)
            sigma_new = _new_volatility(phi, state.volatility, delta, v, cfg)

            a = math.log(state.volatility**2)
            x = math.log(sigma_new**2)
            ex = math.exp(x)
            residual = ex * (delta**2 - phi**2 - v - ex) / (
                2.0 * (phi**2 + v + ex) ** 2
            ) - (x - a) / cfg.tau**2
            assert abs(residual) < cfg.epsilon

    @given(states, states, st.sampled_from([0.0, 0.5, 1.0]))
    @settings(deadline=None, max_examples=80)
    def test_solver_always_converges_on_sane_inputs(self, a, b, score):
        from comparena.rating import _rate

        new = _rate(a, [(b.rating, b.deviation, score)], CFG)
        assert math.isfinite(new.rating)
        assert new.volatility > 0


class TestStateValidation:
    def test_rejects_nonpositive_deviation(self):
        with pytest.raises(ValueError):
            RatingState(1500, 0.0, 0.06)

    def test_rejects_nonpositive_volatility(self):
        with pytest.raises(ValueError):
            RatingState(1500, 350, 0.0)

    def test_rejects_non_finite_rating(self):
        with pytest.raises(ValueError):
            RatingState(math.inf, 350, 0.06)

    def test_config_bounds(self):
        with pytest.raises(ValueError):
            RatingConfig(tau=0.0)
        with pytest.raises(ValueError):
            RatingConfig(tie_ratio=1.5)
        with pytest.raises(ValueError):
            RatingConfig(epsilon=0.0)

    def test_state_round_trips_through_dict(self):
        state = RatingState(1650.5, 75.25, 0.055)
        assert RatingState.from_dict(state.as_dict()) == state
