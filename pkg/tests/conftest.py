"""Shared fixtures for the brentcast tests."""

from pathlib import Path

import pytest

from brentcast.pybrentcast.config import TrainConfig
from brentcast.pybrentcast.gbm import synthetic_brent_series
from brentcast.pybrentcast.series_io import PriceSeries, write_series_csv

PRICE_CSV = """date,price
2020-01-03,68.6
2020-01-02,66.25
2020-01-06,70.25
2020-01-07,68.27
2020-02-03,54.45
2020-02-04,53.96
"""


@pytest.fixture
def price_csv() -> str:
    """Return a small unsorted price CSV."""
    return PRICE_CSV


@pytest.fixture
def synthetic_series() -> PriceSeries:
    """Return 300 business days of a seeded Brent-like series."""
    return synthetic_brent_series(300, seed=3)


@pytest.fixture
def prices_file(tmp_path: Path, synthetic_series: PriceSeries) -> Path:
    """Write the synthetic series to a CSV file."""
    path = tmp_path / "prices.csv"
    path.write_text(write_series_csv(synthetic_series), encoding="utf-8")
    return path


@pytest.fixture
def tiny_config() -> TrainConfig:
    """Return a config small enough to train in well under a second."""
    return TrainConfig(
        epochs=2,
        batch_size=8,
        learning_rate=0.01,
        window_len=10,
        layer_sizes=(4,),
        dropout_rate=0.0,
        seed=1,
    )
