"""Tests for scaling, splitting and windowing."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from brentcast.pybrentcast.exceptions import (
    BrentcastConfigError,
    BrentcastShapeError,
    DegenerateScaleError,
    InsufficientDataError,
    SplitError,
)
from brentcast.pybrentcast.preprocess import (
    Scaler,
    WindowedDataset,
    apply_scaler,
    fit_scaler,
    make_windows,
    split_train_test,
)


def test_fit_scaler():
    scaler = fit_scaler(np.array([3.0, 1.0, 5.0]))

    assert scaler == Scaler(1.0, 5.0)
    assert scaler.span == 4.0
    np.testing.assert_allclose(
        apply_scaler(np.array([1.0, 3.0, 5.0]), scaler), [0.0, 0.5, 1.0]
    )


def test_fit_scaler_errors():
    with pytest.raises(DegenerateScaleError):
        fit_scaler(np.array([2.0, 2.0, 2.0]))
    with pytest.raises(InsufficientDataError):
        fit_scaler(np.array([2.0]))
    with pytest.raises(DegenerateScaleError):
        Scaler(1.0, 1.0)


@given(
    arrays(
        np.float64,
        st.integers(min_value=2, max_value=50),
        elements=st.floats(min_value=-1e3, max_value=1e3),
        unique=True,
    )
)
def test_scaler_maps_to_unit_interval_and_back(values):
    scaler = fit_scaler(values)
    scaled = apply_scaler(values, scaler)

    assert scaled.min() == 0.0
    assert scaled.max() == pytest.approx(1.0)
    np.testing.assert_allclose(
        apply_scaler(scaled, scaler, inverse=True), values, rtol=1e-9, atol=1e-9
    )


def test_split_is_chronological():
    train, test = split_train_test(np.arange(10.0), 0.7)

    assert train.tolist() == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    assert test.tolist() == [7.0, 8.0, 9.0]


def test_split_errors():
    with pytest.raises(BrentcastConfigError):
        split_train_test(np.arange(10.0), 1.0)
    with pytest.raises(SplitError):
        split_train_test(np.arange(2.0), 0.4)
    with pytest.raises(SplitError):
        split_train_test(np.arange(1.0), 0.5)


def test_make_windows():
    dataset = make_windows(np.arange(5.0), window_len=2)

    assert dataset.num_samples == 3
    assert dataset.inputs.tolist() == [[0.0, 1.0], [1.0, 2.0], [2.0, 3.0]]
    assert dataset.targets.tolist() == [2.0, 3.0, 4.0]


def test_make_windows_errors():
    with pytest.raises(InsufficientDataError):
        make_windows(np.arange(3.0), window_len=3)
    with pytest.raises(BrentcastConfigError):
        make_windows(np.arange(3.0), window_len=0)


@given(
    st.integers(min_value=1, max_value=12), st.integers(min_value=1, max_value=30)
)
def test_windows_follow_the_series(window_len, extra):
    values = np.arange(window_len + extra, dtype=np.float64) * 0.5
    dataset = make_windows(values, window_len)

    assert dataset.num_samples == extra
    for i in range(dataset.num_samples):
        assert dataset.inputs[i].tolist() == values[i : i + window_len].tolist()
        assert dataset.targets[i] == values[i + window_len]


def test_dataset_shapes_are_checked():
    with pytest.raises(BrentcastShapeError):
        WindowedDataset(np.zeros((3, 2)), np.zeros(3), window_len=3)
    with pytest.raises(BrentcastShapeError):
        WindowedDataset(np.zeros((3, 2)), np.zeros(2), window_len=2)


def test_dataset_subset():
    dataset = make_windows(np.arange(10.0), window_len=3)
    tail = dataset.subset(5)

    assert len(tail) == 2
    assert tail.targets.tolist() == [8.0, 9.0]
