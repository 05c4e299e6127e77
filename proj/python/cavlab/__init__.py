"""Cavity size estimates from Stokes boundary measurements."""

from ._cavlab import (
    Calibration,
    ConfigError,
    DatumError,
    ExperimentConfig,
    ExperimentRecord,
    GeometryError,
    Measurement,
    MeshError,
    SkippedRun,
    SolverError,
    apply_calibration,
    calibrate,
    calibrate_by_d0,
    calibration_json,
    csv_text,
    measure_disk,
    parse_csv,
    run_grid,
    run_sweep,
)

__all__ = [
    "Calibration",
    "ConfigError",
    "DatumError",
    "ExperimentConfig",
    "ExperimentRecord",
    "GeometryError",
    "Measurement",
    "MeshError",
    "SkippedRun",
    "SolverError",
    "apply_calibration",
    "calibrate",
    "calibrate_by_d0",
    "calibration_json",
    "csv_text",
    "measure_disk",
    "parse_csv",
    "run_grid",
    "run_sweep",
]
