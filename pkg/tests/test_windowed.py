"""
Tests for windowed random elements.
"""

import cmath
import math

import numpy as np
import pytest

from qhm_metric.errors import DomainError
from qhm_metric.interpolation import unit_phase
from qhm_metric.windowed import WindowedElement, random_element, random_windowed


class TestWindow:
    """Test the window function."""

    def test_vanishes_at_edges(self, params, trunc):
        """Test the window and its slope vanish at x = 0 and x = 1."""
        w = random_windowed(0, trunc, params, decay=1.0)
        assert float(w.window(0.0)) == 0.0
        assert abs(float(w.window(1.0))) < 1e-80
        assert abs(float(w.window_derivative(0.0))) == 0.0
        assert float(w.window(0.5)) == pytest.approx(1.0)

    def test_margin(self, params, trunc):
        """Test the window is zero outside [margin, 1 - margin]."""
        w = random_windowed(0, trunc, params, decay=1.0, margin=0.1)
        assert float(w.window(0.05)) == 0.0
        assert float(w.window(0.95)) == 0.0
        assert float(w.window(0.5)) == pytest.approx(1.0)

    def test_derivative_matches_difference(self, params, trunc):
        """Test window_derivative against a central difference."""
        w = random_windowed(0, trunc, params, decay=1.0, order=2)
        x, h = 0.31, 1e-6
        numeric = (float(w.window(x + h)) - float(w.window(x - h))) / (2 * h)
        assert float(w.window_derivative(x)) == pytest.approx(numeric, rel=1e-6)


class TestValidation:
    """Test parameter checks."""

    def test_margin_range(self, params, trunc):
        """Test margins outside [0, 0.5) are rejected."""
        with pytest.raises(DomainError):
            random_windowed(0, trunc, params, decay=1.0, margin=0.5)

    def test_order(self, params, trunc):
        """Test windows of order below 2 are rejected."""
        with pytest.raises(DomainError):
            random_windowed(0, trunc, params, decay=1.0, order=1)

    def test_decay(self, params, trunc):
        """Test a nonpositive decay is rejected."""
        with pytest.raises(DomainError):
            random_windowed(0, trunc, params, decay=0.0)

    def test_band(self, params, trunc):
        """Test a band above P is rejected."""
        with pytest.raises(DomainError):
            random_windowed(0, trunc, params, decay=1.0, band=3)

    def test_even_shape(self, params, trunc):
        """Test coefficient arrays need odd dimensions."""
        with pytest.raises(DomainError):
            WindowedElement(params, trunc, np.zeros((3, 4, 3)))


class TestRandomElement:
    """Test the random closed-form elements."""

    def test_deterministic(self, params, trunc, probes):
        """Test one seed always gives the same element."""
        a = random_element(42, trunc, params, decay=1.0)
        b = random_element(42, trunc, params, decay=1.0)
        for x, y, p in probes:
            assert complex(a.evaluate(x, y, p)) == complex(b.evaluate(x, y, p))

    def test_seeds_differ(self, params, trunc):
        """Test different seeds give different elements."""
        a = random_element(1, trunc, params, decay=1.0)
        b = random_element(2, trunc, params, decay=1.0)
        assert complex(a.evaluate(0.3, 0.3, 0)) != complex(b.evaluate(0.3, 0.3, 0))

    def test_fibers_vanish_at_edge(self, element):
        """Test p != 0 fibers vanish at x = 0 while p = 0 need not."""
        assert complex(element.evaluate(0.0, 0.4, 1)) == 0.0
        assert complex(element.evaluate(0.0, 0.4, 0)) != 0.0

    def test_twist_coherence(self, element, probes):
        """Test the twisted extension across several periods."""
        for x, y, p in probes:
            lhs = complex(element.evaluate(x + 2, y, p))
            rhs = complex(unit_phase(2 * p * y) * element.evaluate(x, y, p))
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))

    @pytest.mark.parametrize("p", [0, 1, -2])
    def test_partials_match_differences(self, element, p):
        """Test the analytic partials against central differences."""
        x, y, h = 0.37, 0.61, 1e-6
        num_x = (element.evaluate(x + h, y, p) - element.evaluate(x - h, y, p)) / (2 * h)
        num_y = (element.evaluate(x, y + h, p) - element.evaluate(x, y - h, p)) / (2 * h)
        scale = max(1.0, abs(complex(num_x)), abs(complex(num_y)))
        assert abs(complex(element.partial_x(x, y, p) - num_x)) <= 1e-5 * scale
        assert abs(complex(element.partial_y(x, y, p) - num_y)) <= 1e-5 * scale

    def test_partial_y_across_periods(self, element):
        """Test the folded y-partial includes the twist term."""
        x, y, h = 1.37, 0.61, 1e-6
        num = (element.evaluate(x, y + h, 1) - element.evaluate(x, y - h, 1)) / (2 * h)
        scale = max(1.0, abs(complex(num)))
        assert abs(complex(element.partial_y(x, y, 1) - num)) <= 1e-5 * scale

    def test_band_argument(self, params, trunc):
        """Test the band argument limits the support."""
        el = random_element(3, trunc, params, decay=1.0, band=0)
        assert el.band == 0
        assert el.has_partials


def direct_value(coeffs, x, y, p, c=1, order=3):
    """Window times trig polynomial times twist phase, written out term by term."""
    k = math.floor(x)
    x0 = x - k
    band = (len(coeffs) - 1) // 2
    mx = (len(coeffs[0]) - 1) // 2
    my = (len(coeffs[0][0]) - 1) // 2
    trig = 0j
    for m in range(-mx, mx + 1):
        for n in range(-my, my + 1):
            trig += coeffs[p + band][m + mx][n + my] * cmath.exp(2j * math.pi * (m * x0 + n * y))
    window = 1.0 if p == 0 else math.sin(math.pi * x0) ** (2 * order)
    return cmath.exp(2j * math.pi * c * k * p * y) * window * trig


class TestKnownCoefficients:
    """Test a hand-built windowed element against a direct evaluation."""

    def test_constant_fiber(self, params, trunc):
        """Test a constant p = 2 fiber at (1.3, 0.25) equals -(9 + 4 sqrt 5) / 64."""
        coeffs = np.zeros((5, 3, 3), dtype=complex)
        coeffs[4, 1, 1] = 1.0
        el = WindowedElement(params, trunc, coeffs).to_element()
        value = complex(el.evaluate(1.3, 0.25, 2))
        assert value.real == pytest.approx(-(9 + 4 * math.sqrt(5)) / 64, abs=1e-12)
        assert abs(value.imag) <= 1e-12

    def test_mixed_modes(self, params, trunc):
        """Test several modes and fibers against the direct evaluation."""
        coeffs = np.zeros((5, 3, 3), dtype=complex)
        coeffs[4, 2, 1] = 1.0
        coeffs[4, 1, 2] = 0.5j
        coeffs[4, 0, 0] = -2.0
        coeffs[2, 1, 1] = 0.75
        coeffs[1, 2, 0] = 1.0 - 1.0j
        el = WindowedElement(params, trunc, coeffs).to_element()
        for x, y, p in [(1.3, 0.25, 2), (-0.6, 0.8, -1), (2.45, 0.1, 0)]:
            expected = direct_value(coeffs.tolist(), x, y, p)
            assert abs(complex(el.evaluate(x, y, p)) - expected) <= 1e-12
