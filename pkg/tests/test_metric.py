"""
Tests for the Lip-ball program, the distance solver and the polyhedral check.
"""

import math

import numpy as np
import pytest

from qhm_metric.algebra import trace, zero_mode
from qhm_metric.derivations import apply_grid_derivation, lip_seminorm
from qhm_metric.element import Truncation, identity, sample, selfadjoint_part
from qhm_metric.errors import ConfigurationError
from qhm_metric.metric import (
    GAP_LIMIT,
    RADIUS_LIMIT,
    LipBallProgram,
    distance_lower_bound,
    kernel_modes,
    polyhedral_distance,
    radius_check,
    solve_program,
    zero_mode_gap,
)
from qhm_metric.states import localized_state, random_vector_state, state_eval, trace_state
from qhm_metric.windowed import random_element


FAST = {"restarts": 3, "iterations": 150}


@pytest.fixture
def states(params, tiny):
    return random_vector_state(0, params, tiny), random_vector_state(1, params, tiny)


@pytest.fixture
def program(states):
    mu, nu = states
    return LipBallProgram.from_states(mu, nu)


def random_free(program, seed):
    rng = np.random.default_rng(seed)
    shape = (program.band + 1, program.trunc.Nx, program.trunc.Ny)
    return program.project(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


class TestKernelModes:
    """Test the grid modes the discrete derivations cannot see."""

    def test_orthonormal(self):
        """Test the modes are orthonormal."""
        modes = kernel_modes(8, 8).reshape(4, -1)
        np.testing.assert_allclose(modes @ modes.T, np.eye(4), atol=1e-14)

    def test_annihilated(self):
        """Test every grid derivation kills every mode at p = 0."""
        for mode in kernel_modes(16, 16):
            for index in (1, 2, 3):
                assert np.max(np.abs(apply_grid_derivation(index, mode + 0j, 0, 1))) <= 1e-12

    def test_odd_grid(self):
        """Test only the constant survives on an odd grid."""
        assert kernel_modes(9, 9).shape == (1, 9, 9)


class TestProgram:
    """Test the finite-dimensional program."""

    def test_band_range(self, states):
        """Test the band must fit the truncation."""
        mu, nu = states
        with pytest.raises(ConfigurationError):
            LipBallProgram.from_states(mu, nu, band=2)

    def test_radius(self, states):
        """Test the radius must be positive."""
        mu, nu = states
        with pytest.raises(ConfigurationError):
            LipBallProgram.from_states(mu, nu, radius=0.0)

    def test_two_traces_need_setting(self):
        """Test two trace states cannot fix a grid on their own."""
        with pytest.raises(ConfigurationError):
            LipBallProgram.from_states(trace_state(), trace_state())

    def test_different_grids(self, params, tiny, trunc):
        """Test states on different grids are rejected."""
        mu = random_vector_state(0, params, tiny)
        nu = random_vector_state(0, params, trunc)
        with pytest.raises(ConfigurationError):
            LipBallProgram.from_states(mu, nu)

    def test_objective_is_state_difference(self, program, states):
        """Test the linear objective equals mu(phi) - nu(phi)."""
        mu, nu = states
        u = random_free(program, 3)
        phi = program.to_element(u)
        direct = state_eval(mu, phi) - state_eval(nu, phi)
        assert program.objective(u) == pytest.approx(direct, rel=1e-10, abs=1e-12)

    def test_lip_matches_seminorm(self, program):
        """Test the program's L agrees with the seminorm of the element."""
        u = random_free(program, 4)
        assert program.lip(u)[0] == pytest.approx(lip_seminorm(program.to_element(u)), rel=1e-10)

    def test_projection(self, program):
        """Test projected points have a real kernel-free zero fiber."""
        u = random_free(program, 5)
        assert not np.any(u[0].imag)
        for mode in program.kernel:
            assert abs(np.sum(mode * u[0].real)) <= 1e-12
        np.testing.assert_allclose(program.project(u), u, atol=1e-15)

    def test_witness_is_self_adjoint(self, program):
        """Test to_element gives an exactly self-adjoint grid element."""
        phi = program.to_element(random_free(program, 6))
        assert phi.is_selfadjoint()
        assert phi.hermitian


class TestSolver:
    """Test the projected supergradient solver."""

    def test_same_state(self, states):
        """Test d(mu, mu) = 0."""
        mu, _ = states
        result = distance_lower_bound(mu, mu, **FAST)
        assert result.bound == 0.0
        assert result.iterations == 0

    def test_trace_with_itself(self, params, tiny):
        """Test d(tau, tau) = 0."""
        tau = trace_state()
        result = distance_lower_bound(tau, tau, params=params, trunc=tiny, **FAST)
        assert result.bound == 0.0

    def test_bound_and_witness(self, states):
        """Test the bound is attained by a witness inside the Lip ball."""
        mu, nu = states
        result = distance_lower_bound(mu, nu, **FAST)
        assert result.bound > 0
        assert result.bound <= RADIUS_LIMIT
        assert lip_seminorm(result.witness) <= 1.0 + 1e-9
        value = state_eval(mu, result.witness) - state_eval(nu, result.witness)
        assert value == pytest.approx(result.bound, rel=1e-9)
        assert len(result.restart_bounds) == 3
        assert result.bound == max(result.restart_bounds)

    def test_symmetric(self, states):
        """Test swapping the states gives the same bound."""
        mu, nu = states
        forward = distance_lower_bound(mu, nu, **FAST).bound
        backward = distance_lower_bound(nu, mu, **FAST).bound
        assert forward == pytest.approx(backward, rel=1e-9)

    def test_radius_scaling(self, states):
        """Test the bound scales with the radius."""
        mu, nu = states
        full = distance_lower_bound(mu, nu, **FAST).bound
        half = distance_lower_bound(mu, nu, radius=0.5, **FAST).bound
        assert half == pytest.approx(0.5 * full, rel=1e-12)

    def test_workers_do_not_change_result(self, program):
        """Test running restarts concurrently gives the same answer."""
        serial = solve_program(program, workers=1, **FAST)
        parallel = solve_program(program, workers=3, **FAST)
        assert parallel.bound == serial.bound
        assert parallel.restart_index == serial.restart_index

    def test_observer(self, program):
        """Test the observer sees every iterate."""
        seen = []

        def observer(index, k, value, point):
            seen.append((index, k))

        solve_program(program, restarts=2, iterations=20, observer=observer)
        assert {index for index, _ in seen} == {0, 1}
        assert max(k for _, k in seen) <= 20

    def test_bad_restarts(self, program):
        """Test zero restarts are rejected."""
        with pytest.raises(ConfigurationError):
            solve_program(program, restarts=0)

    def test_localized_states_separate(self, params, tiny):
        """Test two distinct bumps are at positive distance."""
        near = localized_state(params, tiny, 0.2, 0.5, width=0.1)
        far = localized_state(params, tiny, 0.6, 0.5, width=0.1)
        result = distance_lower_bound(near, far, **FAST)
        assert 0 < result.bound <= RADIUS_LIMIT

    def test_result_dict(self, states):
        """Test the result serializes without the witness."""
        mu, nu = states
        payload = distance_lower_bound(mu, nu, restarts=1, iterations=10).to_dict()
        assert set(payload) == {
            "bound", "iterations", "stagnated", "restart_index", "restart_bounds", "max_gap",
            "warm_started",
        }


class TestWarmStart:
    """Test restart 0 seeded from the polyhedral LP witness."""

    def test_bound_reaches_lp_lower(self, program):
        """Test the solver never ends below the LP's feasible value."""
        poly = polyhedral_distance(program)
        result = solve_program(program, **FAST)
        assert result.warm_started
        assert result.bound >= poly.lower - 1e-9 * max(1.0, poly.lower)
        assert result.bound <= poly.upper + 1e-6

    def test_short_run_keeps_lp_value(self, program):
        """Test even a zero-iteration run returns the LP's feasible value."""
        poly = polyhedral_distance(program)
        result = solve_program(program, restarts=1, iterations=0)
        assert result.bound == pytest.approx(poly.lower, rel=1e-9)

    def test_disabled(self, program):
        """Test warm_start=False starts restart 0 from the gradient."""
        result = solve_program(program, warm_start=False, **FAST)
        assert not result.warm_started
        assert result.bound > 0

    def test_large_grid_not_warm_started(self, params):
        """Test grids beyond the warm-start size skip the LP."""
        grid = Truncation(P=1, Nx=24, Ny=24, Q=2)
        mu, nu = random_vector_state(0, params, grid), random_vector_state(1, params, grid)
        result = distance_lower_bound(mu, nu, restarts=1, iterations=5)
        assert not result.warm_started

    def test_lp_swapped_states(self, states):
        """Test swapping the states negates the LP witness and keeps its values."""
        mu, nu = states
        forward = polyhedral_distance(LipBallProgram.from_states(mu, nu))
        backward = polyhedral_distance(LipBallProgram.from_states(nu, mu))
        np.testing.assert_array_equal(backward.witness, -forward.witness)
        assert backward.upper == forward.upper
        assert backward.lower == pytest.approx(forward.lower, rel=1e-12)

    def test_lp_radius_scaling(self, states):
        """Test the LP values scale with the radius."""
        mu, nu = states
        unit = polyhedral_distance(LipBallProgram.from_states(mu, nu))
        half = polyhedral_distance(LipBallProgram.from_states(mu, nu, radius=0.5))
        assert half.upper == pytest.approx(0.5 * unit.upper, rel=1e-12)
        assert half.lower == pytest.approx(0.5 * unit.lower, rel=1e-12)


class TestFaithfulness:
    """Test d(mu, mu) = 0 and d(mu, nu) > 0 for distinct states."""

    def test_self_distance_is_zero(self, params, trunc):
        """Test a localized state is at distance 0 from itself."""
        mu = localized_state(params, trunc, 0.2, 0.5, width=0.05)
        assert distance_lower_bound(mu, mu, **FAST).bound == 0.0

    @pytest.mark.parametrize("centers", [((0.2, 0.5), (0.4, 0.5)), ((0.2, 0.5), (0.2, 0.75))])
    def test_distinct_states_separate(self, params, trunc, centers):
        """Test distinct localized states are at positive distance."""
        (x0, y0), (x1, y1) = centers
        mu = localized_state(params, trunc, x0, y0, width=0.05)
        nu = localized_state(params, trunc, x1, y1, width=0.05)
        assert distance_lower_bound(mu, nu, **FAST).bound > 1e-6


class TestLocalizedPair:
    """Regression values for the bumps at (0.2, 0.5) and (0.4, 0.5), width 0.05."""

    @pytest.fixture
    def bumps(self, params, trunc):
        return (
            localized_state(params, trunc, 0.2, 0.5, width=0.05),
            localized_state(params, trunc, 0.4, 0.5, width=0.05),
        )

    def test_reproducible(self, bumps):
        """Test the bound lies in (0, 6] and repeats exactly."""
        mu, nu = bumps
        first = distance_lower_bound(mu, nu, **FAST)
        again = distance_lower_bound(mu, nu, **FAST)
        assert 0 < first.bound <= RADIUS_LIMIT
        assert again.bound == first.bound
        assert again.restart_bounds == first.restart_bounds

    def test_within_lp_bracket(self, bumps):
        """Test the bound sits between the LP's feasible value and its relaxation."""
        mu, nu = bumps
        program = LipBallProgram.from_states(mu, nu)
        poly = polyhedral_distance(program)
        bound = solve_program(program, **FAST).bound
        assert poly.lower - 1e-9 <= bound <= poly.upper + 1e-6

    def test_above_sine_in_x(self, bumps):
        """Test the bound beats cos(pi/16) times the ratio of sin(2 pi (x - 0.3))."""
        mu, nu = bumps
        program = LipBallProgram.from_states(mu, nu)
        X, _ = program.trunc.mesh()
        u = np.zeros((program.band + 1,) + X.shape, dtype=complex)
        u[0] = np.sin(2 * np.pi * (X - 0.3))
        u = program.project(u)
        ratio = abs(program.objective(u)) / program.lip(u)[0]
        assert ratio > 0.1
        bound = solve_program(program, **FAST).bound
        assert bound >= math.cos(math.pi / 16) * ratio - 1e-9


class TestPolyhedral:
    """Test the LP sandwich around the solver."""

    def test_sandwich(self, program):
        """Test solver <= LP upper and cos(pi/sides) * upper <= feasible lower."""
        poly = polyhedral_distance(program, sides=16)
        solver = solve_program(program, **FAST).bound
        assert poly.lower <= poly.upper + 1e-9
        assert solver <= poly.upper + 1e-6
        assert poly.lower >= math.cos(math.pi / 16) * poly.upper - 1e-6

    def test_too_many_points(self, params):
        """Test large grids are refused."""
        big = Truncation(P=1, Nx=48, Ny=48, Q=2)
        mu, nu = random_vector_state(0, params, big), random_vector_state(1, params, big)
        with pytest.raises(ConfigurationError):
            polyhedral_distance(LipBallProgram.from_states(mu, nu))


class TestRadius:
    """Test the radius and zero-mode gap bounds."""

    def test_radius_check(self, params, tiny):
        """Test a few pairs stay within the radius bound."""
        states = [random_vector_state(seed, params, tiny) for seed in range(3)]
        pairs = [(states[0], states[1]), (states[1], states[2])]
        report = radius_check(pairs, **FAST)
        assert report.passed
        assert len(report.bounds) == 2
        assert len(report.results) == 2
        assert report.to_dict()["limit"] == RADIUS_LIMIT

    def test_zero_mode_gap_of_unit(self, params, trunc):
        """Test scalars have no gap."""
        state = random_vector_state(0, params, trunc)
        assert zero_mode_gap(state, identity(params, trunc)) == pytest.approx(0.0, abs=1e-12)

    def test_zero_mode_gap_bound(self, params, trunc):
        """Test the gap of a normalized random element stays below 3."""
        state = random_vector_state(2, params, trunc)
        for seed in range(3):
            a = selfadjoint_part(random_element(seed, trunc, params, decay=1.0))
            assert zero_mode_gap(state, a) <= GAP_LIMIT

    def test_zero_mode_gap_inside_ball(self, params, trunc):
        """Test an element with L(a) < 1 is compared without rescaling."""
        state = random_vector_state(3, params, trunc)
        a = sample(selfadjoint_part(random_element(5, trunc, params, decay=1.0)))
        a = a * (0.25 / lip_seminorm(a))
        direct = abs(state_eval(state, a) - trace(zero_mode(a)).real)
        assert zero_mode_gap(state, a) == pytest.approx(direct, rel=1e-12, abs=1e-15)

    def test_zero_mode_gap_rescales_outside_ball(self, params, trunc):
        """Test an element with L(a) > 1 is brought to L(a) = 1."""
        state = random_vector_state(3, params, trunc)
        a = sample(selfadjoint_part(random_element(5, trunc, params, decay=1.0)))
        unit = a * (1.0 / lip_seminorm(a))
        assert zero_mode_gap(state, 4.0 * unit) == pytest.approx(
            zero_mode_gap(state, unit), rel=1e-9, abs=1e-15
        )
