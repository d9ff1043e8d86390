"""Tests for JSON conversion, report writers and summary tables."""

import json
import math

import numpy as np
import pandas as pd
import pytest

from dissiflow.analyzers.dissipative import BasinEstimate, Fate
from dissiflow.analyzers.periodic import OrbitCatalog
from dissiflow.analyzers.surgery import SaddleData, full_report
from dissiflow.reports.writers import ReportBundle, ReportWriter, load_bundle, running_estimate
from dissiflow.utils.formatters import SummaryFormatter
from dissiflow.utils.serialization import SCHEMA_VERSION, to_jsonable

HASH = "0" * 64


def make_estimate():
    fates = [Fate.HIT, Fate.MISS, Fate.HIT, Fate.LEFT]
    return BasinEstimate(
        region="dissipative-region",
        n=4,
        hits=2,
        estimate=0.5,
        ci_low=0.15,
        ci_high=0.85,
        fates=fates,
        fate_counts={Fate.HIT.value: 2, Fate.MISS.value: 1, Fate.LEFT.value: 1},
        seed=0,
        t_transient=1.0,
        horizon=2.0,
    )


class TestToJsonable:
    """Tests for to_jsonable."""

    def test_numpy_and_complex(self):
        data = to_jsonable({"m": np.eye(2), "z": complex(1.0, -2.0), "k": np.int64(3), "b": np.bool_(True)})
        assert data == {"m": [[1.0, 0.0], [0.0, 1.0]], "z": {"re": 1.0, "im": -2.0}, "k": 3, "b": True}

    def test_non_finite_floats_become_strings(self):
        assert to_jsonable([math.inf, -math.inf, math.nan]) == ["inf", "-inf", "nan"]
        json.dumps(to_jsonable({"x": math.inf}), allow_nan=False)

    def test_enums_and_models(self):
        data = to_jsonable(make_estimate())
        assert data["fates"][0] == "hits-region"
        assert data["ci_low"] == 0.15


class TestReportWriter:
    """Tests for ReportWriter."""

    def test_catalog_files(self, tmp_path):
        writer = ReportWriter(str(tmp_path / "out"))
        paths = writer.write_catalog(OrbitCatalog())
        data = json.loads((tmp_path / "out" / "catalog.json").read_text(encoding="utf-8"))
        assert data["schema_version"] == SCHEMA_VERSION
        assert data["orbits"] == []
        assert set(paths) == {"catalog_json", "catalog_csv"}

    def test_csv_disabled(self, tmp_path):
        writer = ReportWriter(str(tmp_path), write_csv=False, write_plot_data=False)
        paths = writer.write_basin(make_estimate())
        assert list(paths) == ["basin_json"]
        assert writer.written == ["basin.json"]

    def test_basin_plot_data(self, tmp_path):
        writer = ReportWriter(str(tmp_path))
        writer.write_basin(make_estimate())
        frame = pd.read_csv(tmp_path / "basin_plot.csv")
        assert list(frame.columns) == ["n", "estimate"]
        np.testing.assert_allclose(frame["estimate"], [1.0, 0.5, 2.0 / 3.0, 0.5])

    def test_running_estimate_empty(self):
        estimate = make_estimate().model_copy(update={"fates": []})
        assert running_estimate(estimate).empty

    def test_surgery_payload(self, tmp_path):
        report = full_report(SaddleData(lam=0.5, mu=1.6, gamma=0.1, tau=1.0))
        path = ReportWriter(str(tmp_path)).write_surgery([report])
        data = json.loads(open(path, encoding="utf-8").read())
        assert data["sink"]["is_sink"] is True
        assert data["schema_version"] == SCHEMA_VERSION

    def test_bundle_round_trip(self, tmp_path):
        writer = ReportWriter(str(tmp_path))
        writer.write_catalog(OrbitCatalog())
        writer.write_bundle(ReportBundle(config_hash=HASH, seed=3, summary={"sinks": 0}))
        bundle = load_bundle(str(tmp_path))
        assert bundle.seed == 3
        assert bundle.files == ["catalog.csv", "catalog.json"]
        assert bundle.missing_files(tmp_path) == []

    def test_bundle_with_missing_artifact(self, tmp_path):
        writer = ReportWriter(str(tmp_path))
        writer.write_catalog(OrbitCatalog())
        (tmp_path / "catalog.csv").unlink()
        with pytest.raises(FileNotFoundError):
            writer.write_bundle(ReportBundle(config_hash=HASH, seed=0))

    def test_bundle_hash_checked(self):
        with pytest.raises(ValueError):
            ReportBundle(config_hash="not-a-hash", seed=0)


class TestSummaryFormatter:
    """Tests for SummaryFormatter tables."""

    def test_empty_catalog(self):
        text = SummaryFormatter.format_catalog(OrbitCatalog().to_dict())
        assert "No periodic orbits found" in text

    def test_basin_table(self):
        text = SummaryFormatter.format_basin(make_estimate().to_dict())
        assert "0.5000" in text
        assert "[0.1500, 0.8500]" in text
        assert "Fate: left-domain" in text

    def test_surgery_table(self):
        report = to_jsonable(full_report(SaddleData(lam=0.5, mu=1.6, gamma=0.1, tau=1.0)))
        text = SummaryFormatter.format_surgery(report)
        assert "Sink" in text
        assert "yes" in text
        assert "Budget" not in text

    def test_no_certificates(self):
        assert "No certificates" in SummaryFormatter.format_certificates([])

    def test_summary_statement(self):
        text = SummaryFormatter.format_summary({"sinks": 1, "statement": "One sink found."})
        assert "One sink found." in text
