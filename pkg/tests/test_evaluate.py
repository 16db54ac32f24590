import json

import numpy as np
import pytest

from poromorph import (
    GrfConfig,
    GrfGenerator,
    VoxelVolume,
    evaluate_population,
    pearson_correlation,
)
from poromorph.errors import LengthMismatchError
from poromorph.evaluate import PROPERTY_COLUMNS


def test_pearson_perfect_linearity(rng):
    x = rng.standard_normal(50)
    assert pearson_correlation(x, 2 * x + 1) == pytest.approx(1.0, abs=1e-12)
    assert pearson_correlation(x, -3 * x + 0.5) == pytest.approx(-1.0, abs=1e-12)


def test_pearson_constant_input_undefined():
    assert pearson_correlation([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) is None


def test_pearson_length_mismatch():
    with pytest.raises(LengthMismatchError):
        pearson_correlation([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(LengthMismatchError):
        pearson_correlation([1.0], [2.0])


def test_pearson_matches_numpy(rng):
    x = rng.standard_normal(200)
    y = 0.3 * x + rng.standard_normal(200)
    assert pearson_correlation(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1])


def _population(n=8, seed=0):
    gen = GrfGenerator(GrfConfig(size=24, correlation_length=6.0, threshold=0.5,
                                 mode_count=40))
    rng = np.random.default_rng(seed)
    return [gen(rng.standard_normal(gen.latent_dim)) for _ in range(n)]


def test_population_report_shape_and_consistency():
    vols = _population()
    report = evaluate_population(vols)
    assert len(report.sample_ids) == 8
    for c in PROPERTY_COLUMNS:
        assert report.table[c].shape == (8,)
    assert len(report.correlation) == 6
    # symmetric with unit diagonal where defined
    for i in range(6):
        for j in range(6):
            assert report.correlation[i][j] == report.correlation[j][i]
        if report.correlation[i][i] is not None:
            assert report.correlation[i][i] == 1.0
    # correlation entries match a standalone pearson on the same columns
    phi, chi = report.table["phi"], report.table["euler_chi"]
    both = np.isfinite(phi) & np.isfinite(chi)
    expected = pearson_correlation(phi[both], chi[both])
    got = report.correlation[PROPERTY_COLUMNS.index("phi")][
        PROPERTY_COLUMNS.index("euler_chi")]
    assert got == pytest.approx(expected)


def test_population_quantiles_rule():
    vols = _population()
    report = evaluate_population(vols)
    phi = report.table["phi"]
    q = report.quantiles["phi"]
    assert q["min"] == pytest.approx(phi.min())
    assert q["median"] == pytest.approx(np.quantile(phi, 0.5, method="linear"))
    assert q["q3"] == pytest.approx(np.quantile(phi, 0.75, method="linear"))


def test_population_identical_volumes_degenerate():
    data = np.zeros((12, 12, 12), np.uint8)
    data[4:8, 4:8, :] = 1
    vol = VoxelVolume(data, 1.0)
    report = evaluate_population([vol, vol])
    # zero variance everywhere: all correlations undefined
    for row in report.correlation:
        assert all(v is None for v in row)
    assert report.quantiles["phi"]["min"] == report.quantiles["phi"]["max"]


def test_population_single_volume_rejected():
    with pytest.raises(LengthMismatchError):
        evaluate_population(_population(n=1))


def test_population_failures_recorded_not_fatal():
    solid_heavy = VoxelVolume(np.zeros((12, 12, 12), np.uint8), 1.0)
    channel = np.zeros((12, 12, 12), np.uint8)
    channel[4:8, 4:8, :] = 1
    report = evaluate_population([solid_heavy, VoxelVolume(channel, 1.0),
                                  VoxelVolume(channel, 1.0)])
    assert np.isnan(report.table["k_mD"][0])
    assert np.isfinite(report.table["k_mD"][1])
    assert any(sid == "000000" for sid, _, _ in report.failures)
    assert report.table["phi"][0] == 0.0  # porosity still computed


def test_population_jobs_parallel_equals_serial():
    vols = _population(n=6)
    serial = evaluate_population(vols, jobs=1)
    parallel = evaluate_population(vols, jobs=2)
    for c in PROPERTY_COLUMNS:
        np.testing.assert_array_equal(serial.table[c], parallel.table[c])
    assert serial.to_json() == parallel.to_json()


def test_jobs_env_var_fallback(monkeypatch):
    from poromorph.evaluate import default_jobs
    monkeypatch.delenv("POROMORPH_JOBS", raising=False)
    assert default_jobs() == 1
    monkeypatch.setenv("POROMORPH_JOBS", "4")
    assert default_jobs() == 4
    monkeypatch.setenv("POROMORPH_JOBS", "not-a-number")
    assert default_jobs() == 1
    monkeypatch.setenv("POROMORPH_JOBS", "-2")
    assert default_jobs() == 1


def test_report_csv_and_json_schema():
    vols = _population(n=3)
    report = evaluate_population(vols, sample_ids=["a", "b", "c"])
    csv_text = report.to_csv()
    lines = csv_text.strip().split("\n")
    assert lines[0] == "sample_id," + ",".join(PROPERTY_COLUMNS)
    assert len(lines) == 4
    assert "," in lines[1] and "." in lines[1]  # plain decimal point floats
    payload = json.loads(report.to_json())
    assert payload["columns"] == list(PROPERTY_COLUMNS)
    assert len(payload["rows"]) == 3
