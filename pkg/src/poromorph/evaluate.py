"""Population statistics over sets of binary volumes: per-sample property
tables, quantile summaries, and Pearson correlation matrices.

Samples whose flow solve fails (no percolating path, no pores) keep their
other properties; the missing permeability is excluded pairwise from
correlations. Quantiles use linear interpolation, inclusive of both ends.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatchError
from .morphometrics import minkowski_report
from .pnm import ExtractionParams, extract_network, network_stats, simulate_permeability
from .volume import VoxelVolume

PROPERTY_COLUMNS = ("phi", "k_mD", "euler_chi", "specific_area_per_m",
                    "mean_pore_d_m", "mean_throat_d_m")

JOBS_ENV_VAR = "POROMORPH_JOBS"


def pearson_correlation(x, y) -> float | None:
    """Pearson r of two equal-length sequences.

    Returns None (the undefined marker, serialized as null) when either
    sequence has zero variance; never NaN.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatchError(f"sequences differ in shape: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise LengthMismatchError("need at least two observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        return None
    return float((dx * dy).sum() / (sx * sy))


@dataclass(frozen=True)
class EvaluationReport:
    """Per-sample property table plus quantile and correlation summaries.

    ``table`` maps column name to a float array aligned with ``sample_ids``;
    missing values are NaN. ``correlation`` entries are None when undefined.
    """

    sample_ids: tuple[str, ...]
    table: dict[str, np.ndarray]
    quantiles: dict[str, dict[str, float]]
    correlation: list[list[float | None]]
    failures: tuple[tuple[str, str, str], ...] = field(default_factory=tuple)

    def to_json_dict(self) -> dict:
        def clean(v):
            return None if (v is None or not math.isfinite(v)) else float(v)
        return {
            "sample_ids": list(self.sample_ids),
            "columns": list(PROPERTY_COLUMNS),
            "rows": [[clean(self.table[c][i]) for c in PROPERTY_COLUMNS]
                     for i in range(len(self.sample_ids))],
            "quantiles": {c: {k: clean(v) for k, v in q.items()}
                          for c, q in self.quantiles.items()},
            "correlation": [[clean(v) for v in row] for row in self.correlation],
            "failures": [list(f) for f in self.failures],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("sample_id",) + PROPERTY_COLUMNS)
        for i, sid in enumerate(self.sample_ids):
            row = [sid]
            for c in PROPERTY_COLUMNS:
                v = self.table[c][i]
                row.append("" if not math.isfinite(v) else repr(float(v)))
            writer.writerow(row)
        return buf.getvalue()


def _sample_properties(vol: VoxelVolume, extraction: ExtractionParams,
                       axis: str) -> tuple[dict[str, float], list[tuple[str, str]]]:
    values = {c: math.nan for c in PROPERTY_COLUMNS}
    failures: list[tuple[str, str]] = []
    report = minkowski_report(vol)
    values["phi"] = report.phi
    values["euler_chi"] = float(report.euler_chi)
    values["specific_area_per_m"] = report.specific_area_per_m
    try:
        net = extract_network(vol, extraction, axis=axis)
    except Exception as exc:  # no pores at all; network metrics all missing
        failures.append(("network", str(exc)))
        return values, failures
    stats = network_stats(net)
    values["mean_pore_d_m"] = stats.mean_pore_diameter_m
    if stats.mean_throat_diameter_m is not None:
        values["mean_throat_d_m"] = stats.mean_throat_diameter_m
    else:
        failures.append(("mean_throat_d_m", "network has no throats"))
    try:
        a_m = vol.voxel_size_m
        sizes = dict(zip("xyz", vol.dims))
        length = sizes[axis] * a_m
        area = (vol.voxel_count // sizes[axis]) * a_m ** 2
        result = simulate_permeability(net, axis=axis, domain_length_m=length,
                                       domain_area_m2=area)
        values["k_mD"] = result.k_mD
    except Exception as exc:
        failures.append(("k_mD", str(exc)))
    return values, failures


def default_jobs() -> int:
    """Worker count from the POROMORPH_JOBS environment variable, else 1."""
    raw = os.environ.get(JOBS_ENV_VAR, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def evaluate_population(volumes, sample_ids=None,
                        extraction: ExtractionParams | None = None,
                        axis: str = "z", jobs: int | None = None) -> EvaluationReport:
    """Compute all six properties per sample and summarize the population.

    Needs at least two volumes. Per-sample failures are recorded in the
    report, not raised; correlations use pairwise deletion over samples
    where both properties are defined.
    """
    volumes = list(volumes)
    if len(volumes) < 2:
        raise LengthMismatchError("population evaluation needs at least two volumes")
    if sample_ids is None:
        sample_ids = [f"{i:06d}" for i in range(len(volumes))]
    sample_ids = [str(s) for s in sample_ids]
    if len(sample_ids) != len(volumes):
        raise LengthMismatchError("one sample id per volume required")
    extraction = extraction or ExtractionParams()
    jobs = default_jobs() if jobs is None else max(1, jobs)

    if jobs == 1:
        results = [_sample_properties(v, extraction, axis) for v in volumes]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(
                lambda v: _sample_properties(v, extraction, axis), volumes))

    table = {c: np.full(len(volumes), np.nan) for c in PROPERTY_COLUMNS}
    failures = []
    for i, (values, fails) in enumerate(results):
        for c in PROPERTY_COLUMNS:
            table[c][i] = values[c]
        for metric, message in fails:
            failures.append((sample_ids[i], metric, message))

    quantiles = {}
    for c in PROPERTY_COLUMNS:
        defined = table[c][np.isfinite(table[c])]
        if defined.size == 0:
            quantiles[c] = {k: math.nan for k in ("min", "q1", "median", "q3", "max")}
        else:
            q = np.quantile(defined, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
            quantiles[c] = {"min": float(q[0]), "q1": float(q[1]),
                            "median": float(q[2]), "q3": float(q[3]),
                            "max": float(q[4])}

    n = len(PROPERTY_COLUMNS)
    corr: list[list[float | None]] = [[None] * n for _ in range(n)]
    for i, ci in enumerate(PROPERTY_COLUMNS):
        for j in range(i, n):
            cj = PROPERTY_COLUMNS[j]
            both = np.isfinite(table[ci]) & np.isfinite(table[cj])
            if both.sum() < 2:
                continue
            if i == j:
                # unit diagonal where the column varies at all
                r = pearson_correlation(table[ci][both], table[cj][both])
                corr[i][j] = None if r is None else 1.0
            else:
                r = pearson_correlation(table[ci][both], table[cj][both])
                corr[i][j] = r
                corr[j][i] = r

    return EvaluationReport(
        sample_ids=tuple(sample_ids),
        table=table,
        quantiles=quantiles,
        correlation=corr,
        failures=tuple(failures),
    )
