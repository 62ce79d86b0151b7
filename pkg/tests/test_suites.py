"""
Tests for the verification suites and their reports.
"""

import csv
import json
import math

import pytest

from qhm_metric.config import RunConfig
from qhm_metric.errors import ConfigurationError, DomainError
from qhm_metric.suites import (
    CSV_FIELDS,
    SUITE_NAMES,
    SUITES,
    PropertyResult,
    SuiteContext,
    VerifyReport,
    _run_check,
    export_report,
    run_suites,
)


TINY = {
    "truncation": {"P": 2, "Nx": 16, "Ny": 16, "Q": 4},
    "samples": {"homomorphism": 2, "dense_oracle": 1, "norm_domination": 2},
}

FAST_SAMPLES = {
    "probes": 10,
    "star_pairs": 2,
    "associativity": 2,
    "trace": 2,
    "positivity": 5,
    "action": 2,
    "submultiplicative": 5,
    "leibniz": 2,
    "tail": 5,
    "proof_steps": 5,
    "gap": 5,
    "cqms": 5,
    "radius_states": 3,
    "symmetry_pairs": 1,
}

FAST = {
    "truncation": {"P": 2, "Nx": 16, "Ny": 16, "Q": 4},
    "samples": FAST_SAMPLES,
    "tolerances": {"triangle": 0.05},
    "solver": {
        "restarts": 2,
        "iterations": 200,
        "workers": 1,
        "truncation": {"P": 1, "Nx": 8, "Ny": 8, "Q": 2},
    },
}


@pytest.fixture
def tiny_config():
    return RunConfig.from_dict(TINY)


@pytest.fixture(scope="module")
def representation_report():
    return run_suites(RunConfig.from_dict(TINY), suite="representation")


class TestRegistry:
    """Test the suite registry."""

    def test_names(self):
        """Test every suite has registered checks."""
        assert set(SUITES) == set(SUITE_NAMES)
        for name in SUITE_NAMES:
            assert SUITES[name]

    def test_check_names_unique(self):
        """Test check names are unique within a suite."""
        for checks in SUITES.values():
            names = [name for name, _ in checks]
            assert len(names) == len(set(names))

    def test_unknown_suite(self, tiny_config):
        """Test an unknown suite name is rejected."""
        with pytest.raises(ConfigurationError):
            run_suites(tiny_config, suite="topology")


class TestContext:
    """Test the shared random inputs."""

    def test_deterministic(self, tiny_config):
        """Test one key gives one seed, different keys different seeds."""
        ctx = SuiteContext(tiny_config)
        assert ctx.seed(3, 1) == ctx.seed(3, 1)
        assert ctx.seed(3, 1) != ctx.seed(3, 2)

    def test_probes_in_band(self, tiny_config):
        """Test probe fibers stay inside the requested band."""
        probes = SuiteContext(tiny_config).probes(30, 1, 5)
        assert len(probes) == 30
        assert all(abs(p) <= 1 and 0 <= y < 1 for _, y, p in probes)


class TestRepresentationSuite:
    """Run the representation suite on a small truncation."""

    def test_passes(self, representation_report):
        """Test every representation property holds."""
        assert representation_report.passed, [r.name for r in representation_report.failures]
        names = {r.name for r in representation_report.results}
        assert {
            "adjoint_identity",
            "interior_homomorphism",
            "twist_equivalence",
            "dense_oracle_agreement",
            "q_monotonicity",
            "norm_domination",
        } <= names
        assert all(r.suite == "representation" for r in representation_report.results)

    def test_deterministic(self, representation_report):
        """Test a second run reproduces the report apart from its timestamp."""
        again = run_suites(RunConfig.from_dict(TINY), suite="representation")
        assert again.to_dict(timestamp=False) == representation_report.to_dict(timestamp=False)

    def test_save_json(self, representation_report, tmp_path):
        """Test the JSON report holds every property."""
        path = representation_report.save(tmp_path / "out" / "report.json")
        payload = json.loads(path.read_text())
        assert payload["suite"] == "representation"
        assert payload["passed"] is True
        assert len(payload["properties"]) == len(representation_report.results)
        assert "created" in payload

    def test_save_csv(self, representation_report, tmp_path):
        """Test the CSV report has one row per property."""
        path = representation_report.save(tmp_path / "report.csv", fmt="csv")
        with open(path) as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == len(representation_report.results)
        assert list(rows[0]) == CSV_FIELDS

    def test_save_unknown_format(self, representation_report, tmp_path):
        """Test an unknown format is refused."""
        with pytest.raises(ConfigurationError):
            representation_report.save(tmp_path / "report.xml", fmt="xml")

    def test_export(self, representation_report, tmp_path):
        """Test a saved JSON report flattens to CSV."""
        report = representation_report.save(tmp_path / "report.json")
        out = export_report(report, tmp_path / "report.csv")
        with open(out) as f:
            rows = list(csv.DictReader(f))
        assert [row["name"] for row in rows] == [r.name for r in representation_report.results]


class TestAlgebraSuite:
    """Run the algebra suite on a fast configuration."""

    def test_passes(self):
        """Test every algebra property holds."""
        report = run_suites(RunConfig.from_dict(FAST), suite="algebra")
        assert report.passed, [(r.name, r.measured, r.detail) for r in report.failures]
        names = {r.name for r in report.results}
        assert {
            "twist_coherence",
            "interpolation_convergence",
            "star_oracle",
            "associativity",
            "central_average",
        } <= names
        assert all(r.suite == "algebra" for r in report.results)


class TestMetricSuite:
    """Run the metric suite on a fast configuration."""

    @pytest.fixture(scope="class")
    def metric_report(self):
        return run_suites(RunConfig.from_dict(FAST), suite="metric")

    def test_passes(self, metric_report):
        """Test every metric property holds."""
        failures = [(r.name, r.measured, r.detail) for r in metric_report.failures]
        assert metric_report.passed, failures
        names = {r.name for r in metric_report.results}
        assert {
            "zero_mode_gap",
            "radius",
            "symmetry",
            "triangle",
            "witness_validity",
            "homogeneity",
            "truncation_consistency",
            "polyhedral_sandwich",
            "lp_lower_attained",
            "self_distance",
            "faithfulness",
        } <= names

    def test_rows(self, metric_report):
        """Test the scaling, LP and faithfulness rows measure real separations."""
        rows = {r.name: r for r in metric_report.results}
        assert rows["truncation_consistency"].measured > 0
        assert rows["lp_lower_attained"].relation == ">="
        assert rows["self_distance"].measured == 0.0
        assert rows["faithfulness"].measured > 1e-6
        assert rows["symmetry"].measured == pytest.approx(0.0, abs=1e-12)


class TestExport:
    """Test export_report on bad inputs."""

    def test_missing(self, tmp_path):
        """Test a missing report is reported."""
        with pytest.raises(ConfigurationError):
            export_report(tmp_path / "none.json", tmp_path / "out.csv")

    def test_no_properties(self, tmp_path):
        """Test a report without a property list is refused."""
        path = tmp_path / "report.json"
        path.write_text(json.dumps({"suite": "all"}))
        with pytest.raises(ConfigurationError):
            export_report(path, tmp_path / "out.csv")


class TestRunCheck:
    """Test how single checks are run."""

    def test_error_becomes_failure(self, tiny_config):
        """Test a raising check is recorded as a failed row."""

        def broken(ctx):
            raise DomainError("no such point")

        results = _run_check(SuiteContext(tiny_config), "algebra", "broken", broken)
        assert len(results) == 1
        assert not results[0].passed
        assert math.isnan(results[0].measured)
        assert results[0].detail == "no such point"

    def test_report_failures(self):
        """Test the report lists failing properties."""
        good = PropertyResult("a", "algebra", True, 0.0, 1.0)
        bad = PropertyResult("b", "algebra", False, 2.0, 1.0)
        report = VerifyReport(suite="algebra", results=[good, bad])
        assert not report.passed
        assert report.failures == [bad]
        assert "created" not in report.to_dict(timestamp=False)
