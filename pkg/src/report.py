"""
Run reports and the files written for them.

A RunReport is the machine-readable result of one command: the resolved
inputs, the computed quantities, provenance (seeds and library versions) and
wall times. Tables (pressure curves, per-center slopes) are written next to
it as CSV.
"""

import json
import math
import os
import platform
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from . import __version__

REPORT_FILE = "report.json"
REPORT_SCHEMA = 1

PRESSURE_CURVE_COLUMNS = ["s", "level", "value", "running_infimum", "upper", "flag"]
LOCAL_DIMENSION_COLUMNS = ["draw", "center", "slope", "intercept", "residual"]
DRAW_SUMMARY_COLUMNS = ["draw", "mode", "median", "iqr", "r_min", "r_max", "target", "status"]


def jsonable(value: Any) -> Any:
    """
    Normalise a value to plain JSON types.

    Non-finite floats become "+inf", "-inf" or None (NaN); numpy scalars
    and arrays become Python numbers and lists; tuples become lists.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "+inf" if value > 0 else "-inf"
        return value
    return value


def _installed_version(package: str) -> str:
    try:
        return version(package)
    except PackageNotFoundError:
        return "unknown"


def provenance(seed: Optional[int], threads: int) -> Dict[str, Any]:
    """Seeds and versions that identify a run"""
    import scipy

    return {
        "affinedim": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "click": _installed_version("click"),
        "seed": seed,
        "threads": threads,
        "generator": "PCG64",
    }


@dataclass
class RunReport:
    """Everything one command computed, ready to serialise"""
    command: str
    spec_name: str
    inputs: Dict[str, Any] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    provenance: Dict[str, Any] = field(default_factory=dict)
    wall_times: Dict[str, float] = field(default_factory=dict)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.inputs = jsonable(self.inputs)
        self.results = jsonable(self.results)
        self.provenance = jsonable(self.provenance)
        self.wall_times = {k: float(v) for k, v in self.wall_times.items()}

    def to_dict(self, include_wall_times: bool = True) -> Dict[str, Any]:
        data = {
            "schema": REPORT_SCHEMA,
            "command": self.command,
            "spec_name": self.spec_name,
            "inputs": self.inputs,
            "results": self.results,
            "provenance": self.provenance,
        }
        if include_wall_times:
            data["wall_times"] = self.wall_times
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunReport":
        if data.get("schema") != REPORT_SCHEMA:
            raise ValueError(f"Unsupported report schema {data.get('schema')!r}")
        return cls(
            command=data["command"],
            spec_name=data["spec_name"],
            inputs=data.get("inputs", {}),
            results=data.get("results", {}),
            provenance=data.get("provenance", {}),
            wall_times=data.get("wall_times", {}),
        )

    def to_json(self, include_wall_times: bool = True) -> str:
        return json.dumps(
            self.to_dict(include_wall_times), sort_keys=True, indent=2, allow_nan=False
        )

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str) -> "RunReport":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_json(handle.read())

    def write(self, out_dir: str) -> Dict[str, str]:
        """Write report.json and every table as CSV into out_dir; returns the written paths"""
        os.makedirs(out_dir, exist_ok=True)
        written = {}
        path = os.path.join(out_dir, REPORT_FILE)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(self.to_json())
            handle.write("\n")
        written["report"] = path
        for name, frame in sorted(self.tables.items()):
            written[name] = write_csv(frame, os.path.join(out_dir, f"{name}.csv"))
        return written


def write_csv(frame: pd.DataFrame, path: str) -> str:
    """Header row, '.' decimals, UTF-8, LF line ends, NaN for values never measured"""
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n", na_rep="NaN")
    return path


def pressure_curve_frame(curve, flags) -> pd.DataFrame:
    """
    Long-format pressure table: one row per (s, level).

    `flags` gives per grid point the state of the upper bound
    ("finite", "+inf" or "-inf"); `upper` repeats that bound on every level.
    """
    infimum = curve.running_infimum()
    rows = []
    for i, s in enumerate(curve.s_grid):
        upper = float(curve.values[i])
        for j, level in enumerate(curve.levels):
            rows.append({
                "s": s,
                "level": level,
                "value": float(curve.per_level[i, j]),
                "running_infimum": float(infimum[i, j]),
                "upper": upper,
                "flag": flags[i],
            })
    return pd.DataFrame(rows, columns=PRESSURE_CURVE_COLUMNS)


def local_dimension_frame(draw: int, estimate) -> pd.DataFrame:
    frame = estimate.to_frame()
    frame.insert(0, "draw", draw)
    return frame[LOCAL_DIMENSION_COLUMNS]
