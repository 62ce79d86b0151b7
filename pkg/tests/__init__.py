"""Test suite for the qhm-metric package."""
