"""Tests for run configuration."""

import pytest

from brentcast.pybrentcast.config import GbmSettings, TrainConfig
from brentcast.pybrentcast.const import DEFAULT_LAYER_SIZES, ScalerScope
from brentcast.pybrentcast.exceptions import BrentcastConfigError


def test_defaults():
    config = TrainConfig()

    assert config.window_len == 90
    assert config.layer_sizes == DEFAULT_LAYER_SIZES == (60, 60, 60)
    assert config.dropout_rate == 0.2
    assert config.train_fraction == 0.7
    assert config.scaler_scope is ScalerScope.TRAIN
    assert config.log_transform is True
    assert config.clip_norm is None


def test_from_mapping_coerces_yaml_values():
    config = TrainConfig.from_mapping(
        {
            "layer_sizes": "32, 16",
            "epochs": "5",
            "log_transform": "false",
            "scaler_scope": "full",
            "learning_rate": 0.005,
        }
    )

    assert config.layer_sizes == (32, 16)
    assert config.epochs == 5
    assert config.log_transform is False
    assert config.scaler_scope is ScalerScope.FULL
    assert config.learning_rate == 0.005


def test_from_mapping_accepts_a_list_of_sizes():
    assert TrainConfig.from_mapping({"layer_sizes": [8, 4]}).layer_sizes == (8, 4)


@pytest.mark.parametrize(
    "data",
    [
        {"epochs": 0},
        {"dropout_rate": 1.0},
        {"train_fraction": 1.0},
        {"scaler_scope": "everything"},
        {"layer_sizes": "a,b"},
        {"clip_norm": -1.0},
        {"unknown": 1},
    ],
)
def test_from_mapping_rejects(data):
    with pytest.raises(BrentcastConfigError):
        TrainConfig.from_mapping(data)


def test_direct_construction_is_checked():
    with pytest.raises(BrentcastConfigError):
        TrainConfig(plateau_factor=1.0)
    with pytest.raises(BrentcastConfigError):
        TrainConfig(layer_sizes=(4, 0))
    with pytest.raises(BrentcastConfigError):
        TrainConfig(validation_fraction=1.0)


def test_as_dict_is_plain():
    data = TrainConfig(layer_sizes=(4, 2)).as_dict()

    assert data["layer_sizes"] == [4, 2]
    assert data["scaler_scope"] == "train"
    assert TrainConfig.from_mapping(data) == TrainConfig(layer_sizes=(4, 2))


def test_gbm_settings():
    settings = GbmSettings.from_mapping({"num_paths": "10", "dt": 1.0})

    assert settings.num_paths == 10
    assert settings.dt == 1.0
    assert settings.horizon == 60
    with pytest.raises(BrentcastConfigError):
        GbmSettings.from_mapping({"workers": 0})
    with pytest.raises(BrentcastConfigError):
        GbmSettings(dt=-1.0)
