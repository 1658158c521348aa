import numpy as np
import pytest

from glucast.core import TimeSeries

DATA_CSV = "data/synthetic_cgm.csv"


@pytest.fixture(scope="session")
def bundled_csv_path():
    from pathlib import Path

    path = Path(__file__).resolve().parent.parent / DATA_CSV
    assert path.exists(), "bundled synthetic dataset missing"
    return path


@pytest.fixture(scope="session")
def bundled_series(bundled_csv_path):
    from glucast.ingest import parse_csv, regularize

    samples = parse_csv(bundled_csv_path.read_bytes())
    segments = regularize(samples, interval_s=300)
    assert len(segments) == 1
    return segments[0]


@pytest.fixture
def linear_series():
    return TimeSeries.from_values(2.0 + 3.0 * np.arange(100))


@pytest.fixture
def sinusoid_series():
    rng = np.random.default_rng(5)
    n = 240
    values = 100 + 10 * np.sin(2 * np.pi * np.arange(n) / 24.0) + rng.normal(0, 0.3, n)
    return TimeSeries.from_values(values)
