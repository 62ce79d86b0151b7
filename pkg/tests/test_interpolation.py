"""
Tests for the fiber resampling helpers.
"""

import numpy as np
import pytest

from qhm_metric.element import Element, ModelParams, Truncation, sample
from qhm_metric.errors import DomainError, PreconditionError
from qhm_metric.interpolation import (
    cubic_weights,
    interpolate,
    interpolate_fiber,
    shift_fiber,
    shift_fiber_adjoint,
    twisted_roll,
    twisted_roll_adjoint,
    unit_phase,
)
from qhm_metric.windowed import random_element


def random_fiber(seed, nx=16, ny=16):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((nx, ny)) + 1j * rng.standard_normal((nx, ny))


class TestUnitPhase:
    """Test the reduced exponential."""

    def test_odd_symmetry_is_exact(self):
        """Test unit_phase(-t) is the exact conjugate of unit_phase(t)."""
        t = np.random.default_rng(0).uniform(-1e4, 1e4, 1000)
        np.testing.assert_array_equal(unit_phase(-t), np.conj(unit_phase(t)))

    def test_integers(self):
        """Test e(n) = 1 for integers."""
        np.testing.assert_array_equal(unit_phase(np.arange(-5, 6)), np.ones(11))

    def test_quarter(self):
        """Test e(1/4) = i."""
        assert complex(unit_phase(0.25)) == pytest.approx(1j)


class TestCubicWeights:
    """Test the Lagrange weights."""

    def test_partition_of_unity(self):
        """Test the weights sum to one."""
        theta = np.linspace(0, 1, 11)
        total = sum(cubic_weights(theta))
        np.testing.assert_allclose(total, 1.0, atol=1e-15)

    def test_node(self):
        """Test theta = 0 selects the center node."""
        assert [float(w) for w in cubic_weights(0.0)] == [0.0, 1.0, 0.0, 0.0]

    def test_reproduces_cubics(self):
        """Test cubic polynomials are interpolated exactly."""
        nodes = np.array([-1.0, 0.0, 1.0, 2.0])
        f = nodes ** 3 - 2 * nodes
        theta = 0.37
        value = sum(w * v for w, v in zip(cubic_weights(theta), f))
        assert value == pytest.approx(theta ** 3 - 2 * theta, abs=1e-14)


class TestTwistedRoll:
    """Test integer x-shifts across the twisted edge."""

    def test_untwisted_is_roll(self):
        """Test twist 0 is a plain periodic roll."""
        f = random_fiber(1)
        np.testing.assert_array_equal(twisted_roll(f, 0, 3), np.roll(f, -3, axis=0))

    def test_edge_phase(self):
        """Test the row borrowed from across the edge carries e(twist * y)."""
        f = random_fiber(2)
        y = np.arange(16) / 16
        out = twisted_roll(f, 2, 1)
        np.testing.assert_array_equal(out[:15], f[1:])
        np.testing.assert_allclose(out[15], f[0] * unit_phase(2 * y), atol=1e-15)

    @pytest.mark.parametrize("shift", [-5, -1, 2, 17])
    def test_adjoint(self, shift):
        """Test <roll f, g> = <f, roll* g>."""
        f, g = random_fiber(3), random_fiber(4)
        lhs = np.vdot(twisted_roll(f, 3, shift), g)
        rhs = np.vdot(f, twisted_roll_adjoint(g, 3, shift))
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestShiftFiber:
    """Test uniform resampling of a fiber."""

    @pytest.mark.parametrize("sx,sy", [(0.013, 0.37), (-0.41, -0.08), (1.3, 2.2)])
    def test_adjoint(self, sx, sy):
        """Test shift_fiber_adjoint is the conjugate transpose of shift_fiber."""
        f, g = random_fiber(5), random_fiber(6)
        lhs = np.vdot(shift_fiber(f, 1, sx, sy), g)
        rhs = np.vdot(f, shift_fiber_adjoint(g, 1, sx, sy))
        assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_grid_shift_is_roll(self):
        """Test shifts by whole grid steps reduce to rolls."""
        f = random_fiber(7)
        out = shift_fiber(f, 0, 2 / 16, 3 / 16)
        expected = np.roll(np.roll(f, -2, axis=0), -3, axis=1)
        np.testing.assert_allclose(out, expected, atol=1e-15)

    def test_trigonometric_y_shift_is_exact(self):
        """Test y-shifts of a band-limited fiber are exact."""
        X, Y = Truncation(P=0, Nx=16, Ny=16, Q=1).mesh()
        f = unit_phase(2 * Y) + 0.5 * unit_phase(-3 * Y)
        out = shift_fiber(f, 0, 0.0, 0.123)
        expected = unit_phase(2 * (Y + 0.123)) + 0.5 * unit_phase(-3 * (Y + 0.123))
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_non_finite_shift(self):
        """Test a NaN shift is rejected."""
        with pytest.raises(DomainError):
            shift_fiber(random_fiber(8), 0, float("nan"), 0.0)


class TestInterpolate:
    """Test point evaluation of grid elements."""

    def test_needs_grid(self):
        """Test closed-form elements are refused."""
        params, trunc = ModelParams(), Truncation(P=1, Nx=8, Ny=8, Q=2)
        el = random_element(0, trunc, params, decay=1.0)
        with pytest.raises(PreconditionError):
            interpolate(el, 0.2, 0.3, 0)

    def test_fundamental_domain_only(self):
        """Test points outside [0, 1) x [0, 1) are refused."""
        params, trunc = ModelParams(), Truncation(P=1, Nx=8, Ny=8, Q=2)
        grid = sample(random_element(0, trunc, params, decay=1.0))
        with pytest.raises(DomainError):
            interpolate(grid, 1.0, 0.3, 0)
        with pytest.raises(DomainError):
            interpolate(grid, 0.2, float("inf"), 0)

    def test_scalar_and_array(self):
        """Test scalars give complex numbers and arrays give arrays."""
        params, trunc = ModelParams(), Truncation(P=1, Nx=8, Ny=8, Q=2)
        grid = sample(random_element(0, trunc, params, decay=1.0))
        assert isinstance(interpolate(grid, 0.2, 0.3, 1), complex)
        assert interpolate(grid, np.array([0.1, 0.2]), 0.3, 1).shape == (2,)
        assert interpolate(grid, 0.2, 0.3, 5) == 0

    def test_constant_fiber(self):
        """Test a constant fiber interpolates to the constant."""
        fiber = np.full((8, 8), 2.5 + 1j)
        xs = np.linspace(0, 0.99, 7)
        out = interpolate_fiber(fiber, 0, xs, 0.41)
        np.testing.assert_allclose(out, 2.5 + 1j, atol=1e-14)

    def test_trigonometric_in_y(self):
        """Test a fiber depending only on y is interpolated exactly."""
        params = ModelParams()
        trunc = Truncation(P=0, Nx=8, Ny=8, Q=1)
        _, Y = trunc.mesh()
        el = Element.from_grid(params, trunc, unit_phase(3 * Y)[None])
        ys = np.array([0.05, 0.33, 0.71])
        np.testing.assert_allclose(interpolate(el, 0.4, ys, 0), unit_phase(3 * ys), atol=1e-12)

    def test_convergence_order(self):
        """Test doubling Nx cuts the interpolation error by at least 6."""
        params = ModelParams()
        rng = np.random.default_rng(1)
        xs, ys = rng.uniform(0, 1, 50), rng.uniform(0, 1, 50)
        errors = []
        for n in (32, 64):
            trunc = Truncation(P=1, Nx=n, Ny=n, Q=2)
            el = random_element(9, trunc, params, decay=1.0)
            grid = sample(el)
            err = max(
                float(np.max(np.abs(grid.fundamental(xs, ys, p) - el.fundamental(xs, ys, p))))
                for p in (-1, 0, 1)
            )
            errors.append(err)
        assert errors[0] / errors[1] >= 6.0
