"""
Report writers: schema-versioned JSON, CSV tables and two-column plot data.
"""

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from ..analyzers.dissipative import BasinEstimate, Fate, TrappedSetTable
from ..analyzers.periodic import OrbitCatalog
from ..utils.serialization import SCHEMA_VERSION, to_jsonable

logger = logging.getLogger(__name__)

CATALOG_JSON = "catalog.json"
CATALOG_CSV = "catalog.csv"
BUNDLE_JSON = "bundle.json"
BASIN_JSON = "basin.json"
BASIN_CSV = "basin.csv"
BASIN_PLOT = "basin_plot.csv"
TRAPPED_PLOT = "trapped_plot.csv"
SURGERY_JSON = "surgery.json"
TIMINGS_JSON = "timings.json"


class ReportBundle(BaseModel):
    """Everything one analysis run produced, minus timings."""

    schema_version: str = SCHEMA_VERSION
    config_hash: str = Field(description="SHA-256 of the validated config")
    seed: int
    flow: Dict[str, Any] = Field(default_factory=dict)
    catalog: Dict[str, Any] = Field(default_factory=dict)
    region: Optional[Dict[str, Any]] = None
    cocycle_bound: Optional[Dict[str, Any]] = None
    certificates: List[Dict[str, Any]] = Field(default_factory=list)
    attractors: List[Dict[str, Any]] = Field(default_factory=list)
    basin: Optional[Dict[str, Any]] = None
    saddle_basin: Optional[Dict[str, Any]] = None
    trapped: Optional[Dict[str, Any]] = None
    markov: Optional[Dict[str, Any]] = None
    surgery: List[Dict[str, Any]] = Field(default_factory=list)
    errors: List[Dict[str, Any]] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)
    versions: Dict[str, str] = Field(default_factory=dict)
    files: List[str] = Field(default_factory=list, description="Artifacts written next to the bundle")

    @field_validator("config_hash")
    @classmethod
    def validate_hash(cls, v: str) -> str:
        if not re.fullmatch(r"[0-9a-f]{64}", v):
            raise ValueError("config_hash must be a SHA-256 hex digest")
        return v

    def missing_files(self, directory: Path) -> List[str]:
        return [name for name in self.files if not (Path(directory) / name).exists()]


def write_json(path: Path, data: Any) -> Path:
    """JSON with indent 2, sorted keys and the schema version."""
    payload = to_jsonable(data)
    if isinstance(payload, dict):
        payload.setdefault("schema_version", SCHEMA_VERSION)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False)
        f.write("\n")
    return path


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def running_estimate(estimate: BasinEstimate) -> pd.DataFrame:
    """Two columns (n, estimate) with the hit fraction after each sample."""
    hits = np.cumsum([fate == Fate.HIT for fate in estimate.fates])
    n = np.arange(1, len(hits) + 1)
    return pd.DataFrame({"n": n, "estimate": hits / n if len(n) else []})


class ReportWriter:
    """Writes report artifacts into one output directory and tracks what it wrote."""

    def __init__(self, directory: str, write_csv: bool = True, write_plot_data: bool = True):
        self.directory = Path(directory)
        self.write_csv_tables = write_csv
        self.write_plot_data = write_plot_data
        self.written: List[str] = []
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, name: str) -> Path:
        if name not in self.written:
            self.written.append(name)
        return self.directory / name

    def write_catalog(self, catalog: OrbitCatalog) -> Dict[str, str]:
        paths = {"catalog_json": str(write_json(self._path(CATALOG_JSON), catalog.to_dict()))}
        if self.write_csv_tables:
            paths["catalog_csv"] = str(write_csv(self._path(CATALOG_CSV), catalog.to_frame()))
        logger.info(f"Catalog with {len(catalog)} orbits written to {self.directory}")
        return paths

    def write_basin(
        self, estimate: BasinEstimate, trapped: Optional[TrappedSetTable] = None
    ) -> Dict[str, str]:
        paths = {"basin_json": str(write_json(self._path(BASIN_JSON), estimate.to_dict()))}
        if self.write_csv_tables:
            row = {
                "region": estimate.region,
                "n": estimate.n,
                "hits": estimate.hits,
                "estimate": estimate.estimate,
                "ci_low": estimate.ci_low,
                "ci_high": estimate.ci_high,
                "flags": ";".join(estimate.flags),
            }
            paths["basin_csv"] = str(write_csv(self._path(BASIN_CSV), pd.DataFrame([row])))
        if self.write_plot_data:
            paths["basin_plot"] = str(write_csv(self._path(BASIN_PLOT), running_estimate(estimate)))
            if trapped is not None:
                frame = pd.DataFrame(
                    {"N": [r.N for r in trapped.rows], "estimate": [r.estimate for r in trapped.rows]}
                )
                paths["trapped_plot"] = str(write_csv(self._path(TRAPPED_PLOT), frame))
        return paths

    def write_surgery(self, reports: List[Dict[str, Any]]) -> str:
        payload = reports[0] if len(reports) == 1 else {"reports": reports}
        return str(write_json(self._path(SURGERY_JSON), payload))

    def write_bundle(self, bundle: ReportBundle) -> str:
        """Write bundle.json after checking that every listed artifact exists."""
        bundle = bundle.model_copy(update={"files": sorted(self.written)})
        missing = bundle.missing_files(self.directory)
        if missing:
            raise FileNotFoundError(f"bundle references missing files: {missing}")
        path = write_json(self.directory / BUNDLE_JSON, bundle.model_dump())
        logger.info(f"Report bundle written to {path}")
        return str(path)

    def write_timings(self, timings: Dict[str, float]) -> str:
        return str(write_json(self.directory / TIMINGS_JSON, {"timings": timings}))


def load_bundle(path: str) -> ReportBundle:
    """Read a bundle.json (or the bundle in a directory)."""
    bundle_path = Path(path)
    if bundle_path.is_dir():
        bundle_path = bundle_path / BUNDLE_JSON
    with open(bundle_path, encoding="utf-8") as f:
        return ReportBundle(**json.load(f))
