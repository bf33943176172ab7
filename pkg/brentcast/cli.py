"""Command line for the brentcast forecasting pipeline."""

from __future__ import annotations

import datetime as dt
import logging
import sys
from collections.abc import Callable, Mapping, Sequence
from pathlib import Path
from typing import Any, Final, TypeVar

import attr
import click
import voluptuous as vol
import yaml
from click.core import ParameterSource

from .const import (
    CONF_DEFAULT,
    CONF_GBM,
    CONF_LOGGER,
    CONF_LOGS,
    CONF_TRAIN,
    DEFAULT_FORECAST_HORIZON,
    LOG_FORMAT,
    NAME,
    VERSION,
    ArtifactKind,
    ExitCode,
)
from .pybrentcast.checkpoint import load_checkpoint, save_checkpoint
from .pybrentcast.config import GbmSettings, TrainConfig
from .pybrentcast.const import (
    DATE_FORMAT,
    DEFAULT_BATCH_SIZE,
    DEFAULT_DROPOUT_RATE,
    DEFAULT_EPOCHS,
    DEFAULT_GBM_DT,
    DEFAULT_GBM_HORIZON,
    DEFAULT_LAYER_SIZES,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MIN_LEARNING_RATE,
    DEFAULT_NUM_PATHS,
    DEFAULT_PLATEAU_FACTOR,
    DEFAULT_PLATEAU_PATIENCE,
    DEFAULT_SEED,
    DEFAULT_TRAIN_FRACTION,
    DEFAULT_WINDOW_LEN,
    ScalerScope,
)
from .pybrentcast.exceptions import (
    BrentcastConfigError,
    BrentcastError,
    BrentcastNumericError,
    BrentcastUsageError,
)
from .pybrentcast.gbm import estimate_gbm, simulate_paths, write_paths_csv
from .pybrentcast.lstm import StackedLstm
from .pybrentcast.pipeline import (
    forecast_prices,
    holdout_predictions,
    prepare_data,
    write_forecast_csv,
    write_predictions_csv,
)
from .pybrentcast.preprocess import Scaler
from .pybrentcast.series_io import (
    PriceSeries,
    log_transform,
    parse_price_csv,
    resample_monthly,
    slice_date_range,
    write_series_csv,
)
from .pybrentcast.train import evaluate, fit, persistence_baseline, write_train_log_csv

_LOGGER = logging.getLogger(__name__)

_F = TypeVar("_F", bound=Callable[..., Any])

LOG_LEVELS: Final = ["debug", "info", "warning", "error", "critical"]

_LEVEL = vol.All(vol.Lower, vol.In(LOG_LEVELS))

CONFIG_FILE_SCHEMA: Final = vol.Schema(
    {
        vol.Optional(CONF_LOGGER, default={}): vol.Schema(
            {
                vol.Optional(CONF_DEFAULT, default="warning"): _LEVEL,
                vol.Optional(CONF_LOGS, default={}): {str: _LEVEL},
            }
        ),
        vol.Optional(CONF_TRAIN, default={}): dict,
        vol.Optional(CONF_GBM, default={}): dict,
    }
)

# CLI parameter name -> TrainConfig field
TRAIN_FLAGS: Final = {
    "window": "window_len",
    "layers": "layer_sizes",
    "dropout": "dropout_rate",
    "epochs": "epochs",
    "batch": "batch_size",
    "lr": "learning_rate",
    "patience": "plateau_patience",
    "factor": "plateau_factor",
    "min_lr": "min_learning_rate",
    "split": "train_fraction",
    "seed": "seed",
    "log_scale": "log_transform",
    "val_split": "validation_fraction",
    "fit_scope": "scaler_scope",
    "clip_norm": "clip_norm",
}

# CLI parameter name -> GbmSettings field
GBM_FLAGS: Final = {
    "paths": "num_paths",
    "horizon": "horizon",
    "seed": "seed",
    "step": "dt",
    "workers": "workers",
}


@attr.define(frozen=True)
class CommandOutcome:
    """Exit code of a command plus the diagnostics it printed."""

    exit_code: ExitCode = attr.field(converter=ExitCode)
    messages: tuple[str, ...] = attr.field(converter=tuple, default=())


@attr.define
class RunState:
    """Per-invocation state shared by the group and its subcommands."""

    messages: list[str] = attr.Factory(list)
    train: dict[str, Any] = attr.Factory(dict)
    gbm: dict[str, Any] = attr.Factory(dict)

    def report(self, message: str) -> None:
        """Print a diagnostic line on stderr and remember it."""
        self.messages.append(message)
        click.echo(message, err=True)

    def fail(self, exit_code: ExitCode, message: str) -> CommandOutcome:
        """Report a failure and build its outcome."""
        self.report(message)
        return CommandOutcome(exit_code, self.messages)


def _read_config_file(path: Path) -> dict[str, Any]:
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as err:
        raise BrentcastConfigError(f"{path} is not valid YAML: {err}") from err
    try:
        return CONFIG_FILE_SCHEMA(raw or {})
    except vol.Invalid as err:
        raise BrentcastConfigError(f"Invalid configuration in {path}: {err}") from err


def _setup_logging(logger_conf: Mapping[str, Any], verbose: bool, quiet: bool) -> None:
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.ERROR
    else:
        level = logging.getLevelName(logger_conf.get(CONF_DEFAULT, "warning").upper())
    logging.basicConfig(format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(level)
    for name, logger_level in logger_conf.get(CONF_LOGS, {}).items():
        logging.getLogger(name).setLevel(logger_level.upper())


def _explicit(ctx: click.Context, flags: Mapping[str, str]) -> dict[str, Any]:
    """Return the flags given on the command line, keyed by config field."""
    return {
        field: ctx.params[name]
        for name, field in flags.items()
        if name in ctx.params
        and ctx.get_parameter_source(name) is ParameterSource.COMMANDLINE
    }


def _train_config(ctx: click.Context) -> TrainConfig:
    state: RunState = ctx.obj
    return TrainConfig.from_mapping({**state.train, **_explicit(ctx, TRAIN_FLAGS)})


def _gbm_settings(ctx: click.Context) -> GbmSettings:
    state: RunState = ctx.obj
    return GbmSettings.from_mapping({**state.gbm, **_explicit(ctx, GBM_FLAGS)})


def _load_series(
    input_path: Path,
    start: dt.datetime | None,
    end: dt.datetime | None,
    monthly: bool = False,
) -> PriceSeries:
    series = parse_price_csv(input_path.read_text(encoding="utf-8"))
    if start is not None or end is not None:
        series = slice_date_range(
            series,
            start.date() if start is not None else series.dates[0],
            end.date() if end is not None else series.dates[-1],
        )
    if monthly:
        series = resample_monthly(series)
    _LOGGER.info(
        "Loaded %d observations from %s (%s to %s)",
        len(series),
        input_path,
        series.dates[0],
        series.dates[-1],
    )
    return series


def _load_model(path: Path) -> tuple[StackedLstm, Scaler, TrainConfig]:
    return load_checkpoint(path.read_bytes())


def export_figure_data(
    kind: ArtifactKind, payload: str | bytes, destination: Path
) -> CommandOutcome:
    """Write a rendered artifact to a file."""
    try:
        if isinstance(payload, bytes):
            destination.write_bytes(payload)
        else:
            destination.write_text(payload, encoding="utf-8", newline="")
    except OSError as err:
        return CommandOutcome(
            ExitCode.DATA_ERROR,
            (
                f"Error: cannot write {kind.value} to {destination}: "
                f"{err.strerror or err}",
            ),
        )
    _LOGGER.info("Wrote %s to %s", kind.value, destination)
    return CommandOutcome(ExitCode.SUCCESS)


def _emit(
    state: RunState, kind: ArtifactKind, payload: str | bytes, out: Path | None
) -> None:
    """Write to `out`, or to stdout when no destination was given."""
    if out is None:
        click.echo(payload, nl=False)
        return
    outcome = export_figure_data(kind, payload, out)
    if outcome.exit_code is not ExitCode.SUCCESS:
        for message in outcome.messages:
            state.report(message)
        raise click.exceptions.Exit(int(outcome.exit_code))


_PATH = click.Path(dir_okay=False, path_type=Path)

input_option = click.option(
    "--input",
    "input_path",
    type=_PATH,
    required=True,
    help="CSV file with a date,price header.",
)
start_option = click.option(
    "--start", type=click.DateTime([DATE_FORMAT]), help="First date to keep."
)
end_option = click.option(
    "--end", type=click.DateTime([DATE_FORMAT]), help="Last date to keep."
)
monthly_option = click.option(
    "--monthly", is_flag=True, default=False, help="Average each calendar month."
)
checkpoint_option = click.option(
    "--checkpoint", type=_PATH, required=True, help="Trained model checkpoint."
)


def out_option(help_text: str) -> Callable[[_F], _F]:
    """Optional destination; stdout when omitted."""
    return click.option("--out", type=_PATH, default=None, help=help_text)


def seed_option(func: _F) -> _F:
    """Seed of every random draw of the command."""
    return click.option(
        "--seed",
        type=click.IntRange(min=0),
        default=DEFAULT_SEED,
        help="Seed for all random draws.",
    )(func)


def log_option(default: bool) -> Callable[[_F], _F]:
    """Toggle the natural log transform."""
    return click.option(
        "--log/--no-log",
        "log_scale",
        default=default,
        help="Model the natural log of prices.",
    )


@click.group(
    context_settings={"help_option_names": ["-h", "--help"], "show_default": True}
)
@click.version_option(VERSION, prog_name=NAME)
@click.option(
    "--config",
    "config_path",
    type=_PATH,
    default=None,
    help="YAML file with logger, train and gbm sections.",
)
@click.option("-v", "--verbose", is_flag=True, default=False, help="Log debug detail.")
@click.option("-q", "--quiet", is_flag=True, default=False, help="Log errors only.")
@click.pass_context
def cli(
    ctx: click.Context, config_path: Path | None, verbose: bool, quiet: bool
) -> None:
    """Forecast crude oil prices with a stacked LSTM and a GBM baseline."""
    state = ctx.ensure_object(RunState)
    settings = (
        _read_config_file(config_path)
        if config_path is not None
        else CONFIG_FILE_SCHEMA({})
    )
    state.train = dict(settings[CONF_TRAIN])
    state.gbm = dict(settings[CONF_GBM])
    _setup_logging(settings[CONF_LOGGER], verbose, quiet)


@cli.command()
@input_option
@out_option("Series CSV destination.")
@start_option
@end_option
@monthly_option
@log_option(default=False)
@click.pass_obj
def describe(
    state: RunState,
    input_path: Path,
    out: Path | None,
    start: dt.datetime | None,
    end: dt.datetime | None,
    monthly: bool,
    log_scale: bool,
) -> None:
    """Write the (sliced, resampled) price series as CSV."""
    series = _load_series(input_path, start, end, monthly)
    if log_scale:
        series = log_transform(series)
    _emit(state, ArtifactKind.SERIES, write_series_csv(series), out)


@cli.command()
@input_option
@out_option("Paths CSV destination.")
@start_option
@end_option
@monthly_option
@click.option(
    "--paths",
    type=click.IntRange(min=1),
    default=DEFAULT_NUM_PATHS,
    help="Number of paths.",
)
@click.option(
    "--horizon",
    type=click.IntRange(min=1),
    default=DEFAULT_GBM_HORIZON,
    help="Steps per path.",
)
@seed_option
@click.option(
    "--dt",
    "step",
    type=click.FloatRange(min=0, min_open=True),
    default=DEFAULT_GBM_DT,
    help="Time step in years.",
)
@click.option(
    "--workers",
    type=click.IntRange(min=1),
    default=1,
    help="Threads simulating paths.",
)
@click.pass_context
def gbm(ctx: click.Context, **params: Any) -> None:
    """Calibrate geometric Brownian motion and simulate price paths."""
    settings = _gbm_settings(ctx)
    series = _load_series(
        params["input_path"], params["start"], params["end"], params["monthly"]
    )
    model = estimate_gbm(series, settings.dt)
    _LOGGER.info(
        "Calibrated mu=%.6g sigma=%.6g s0=%.6g", model.mu, model.sigma, model.s0
    )
    paths = simulate_paths(
        model,
        horizon=settings.horizon,
        num_paths=settings.num_paths,
        seed=settings.seed,
        workers=settings.workers,
    )
    _emit(ctx.obj, ArtifactKind.PATHS, write_paths_csv(paths), params["out"])


@cli.command()
@input_option
@click.option(
    "--checkpoint", type=_PATH, required=True, help="Where to save the trained model."
)
@out_option("Training log CSV destination.")
@start_option
@end_option
@log_option(default=True)
@click.option(
    "--window",
    type=click.IntRange(min=1),
    default=DEFAULT_WINDOW_LEN,
    help="Input window length.",
)
@click.option(
    "--layers",
    default=",".join(str(size) for size in DEFAULT_LAYER_SIZES),
    help="Hidden sizes, bottom layer first.",
)
@click.option(
    "--dropout",
    type=click.FloatRange(min=0, max=1, max_open=True),
    default=DEFAULT_DROPOUT_RATE,
    help="Dropout after each LSTM layer.",
)
@click.option(
    "--epochs",
    type=click.IntRange(min=1),
    default=DEFAULT_EPOCHS,
    help="Training epochs.",
)
@click.option(
    "--batch",
    type=click.IntRange(min=1),
    default=DEFAULT_BATCH_SIZE,
    help="Batch size.",
)
@click.option(
    "--lr",
    type=click.FloatRange(min=0, min_open=True),
    default=DEFAULT_LEARNING_RATE,
    help="Initial Adam learning rate.",
)
@click.option(
    "--patience",
    type=click.IntRange(min=1),
    default=DEFAULT_PLATEAU_PATIENCE,
    help="Epochs without improvement before the learning rate drops.",
)
@click.option(
    "--factor",
    type=click.FloatRange(min=0, max=1, min_open=True, max_open=True),
    default=DEFAULT_PLATEAU_FACTOR,
    help="Learning rate multiplier on a plateau.",
)
@click.option(
    "--min-lr",
    type=click.FloatRange(min=0, min_open=True),
    default=DEFAULT_MIN_LEARNING_RATE,
    help="Learning rate floor.",
)
@click.option(
    "--split",
    type=click.FloatRange(min=0, max=1, min_open=True, max_open=True),
    default=DEFAULT_TRAIN_FRACTION,
    help="Training share of the series.",
)
@seed_option
@click.option(
    "--val-split",
    type=click.FloatRange(min=0, max=1, max_open=True),
    default=0.0,
    help="Share of training windows held out for validation (0 uses the test set).",
)
@click.option(
    "--fit-scope",
    type=click.Choice([scope.value for scope in ScalerScope]),
    default=ScalerScope.TRAIN.value,
    help="Portion the min-max scaler is fitted on.",
)
@click.option(
    "--clip-norm",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
    help="Clip the global gradient norm.",
)
@click.pass_context
def train(ctx: click.Context, **params: Any) -> None:
    """Train the LSTM, save a checkpoint and the per-epoch log."""
    config = _train_config(ctx)
    series = _load_series(params["input_path"], params["start"], params["end"])
    data = prepare_data(series, config)
    net, _, log = fit(data.train_set, data.validation_set, config)
    _emit(
        ctx.obj,
        ArtifactKind.CHECKPOINT,
        save_checkpoint(net, data.scaler, config),
        params["checkpoint"],
    )
    if params["out"] is not None:
        _emit(ctx.obj, ArtifactKind.TRAIN_LOG, write_train_log_csv(log), params["out"])
    metrics = evaluate(net, data.test_set, data.scaler, data.log_scale)
    click.echo(f"test mae={metrics.mae:.6g} rmse={metrics.rmse:.6g}")


@cli.command("evaluate")
@input_option
@checkpoint_option
@start_option
@end_option
@click.pass_obj
def evaluate_command(
    state: RunState,
    input_path: Path,
    checkpoint: Path,
    start: dt.datetime | None,
    end: dt.datetime | None,
) -> None:
    """Report MAE and RMSE in USD/barrel for a saved model."""
    net, scaler, config = _load_model(checkpoint)
    data = prepare_data(_load_series(input_path, start, end), config, scaler=scaler)
    rows = [
        ("train", evaluate(net, data.train_set, data.scaler, data.log_scale)),
        ("test", evaluate(net, data.test_set, data.scaler, data.log_scale)),
        (
            "persistence",
            persistence_baseline(data.test_set, data.scaler, data.log_scale),
        ),
    ]
    for name, metrics in rows:
        click.echo(f"{name} mae={metrics.mae:.6g} rmse={metrics.rmse:.6g}")


@cli.command()
@input_option
@checkpoint_option
@out_option("Forecast CSV destination.")
@start_option
@end_option
@click.option(
    "--horizon",
    type=click.IntRange(min=1),
    default=DEFAULT_FORECAST_HORIZON,
    help="Days to forecast.",
)
@click.pass_obj
def forecast(
    state: RunState,
    input_path: Path,
    checkpoint: Path,
    out: Path | None,
    start: dt.datetime | None,
    end: dt.datetime | None,
    horizon: int,
) -> None:
    """Forecast prices recursively after the last observation."""
    net, scaler, config = _load_model(checkpoint)
    data = prepare_data(_load_series(input_path, start, end), config, scaler=scaler)
    predicted = forecast_prices(net, data, horizon)
    _emit(state, ArtifactKind.FORECAST, write_forecast_csv(predicted), out)


@cli.command()
@input_option
@checkpoint_option
@out_option("Predictions CSV destination.")
@start_option
@end_option
@click.pass_obj
def export(
    state: RunState,
    input_path: Path,
    checkpoint: Path,
    out: Path | None,
    start: dt.datetime | None,
    end: dt.datetime | None,
) -> None:
    """Write actual against predicted test-set prices."""
    net, scaler, config = _load_model(checkpoint)
    data = prepare_data(_load_series(input_path, start, end), config, scaler=scaler)
    actual, predicted = holdout_predictions(net, data)
    payload = write_predictions_csv(actual, predicted)
    _emit(state, ArtifactKind.PREDICTIONS, payload, out)


def run(argv: Sequence[str] | None = None) -> CommandOutcome:
    """Run the command line and map failures onto exit codes."""
    state = RunState()
    try:
        result = cli.main(
            args=list(argv) if argv is not None else None,
            prog_name=NAME,
            standalone_mode=False,
            obj=state,
        )
    except click.UsageError as err:
        if err.ctx is not None:
            state.report(err.ctx.get_usage())
        return state.fail(ExitCode.USAGE_ERROR, f"Error: {err.format_message()}")
    except click.ClickException as err:
        return state.fail(ExitCode.DATA_ERROR, f"Error: {err.format_message()}")
    except click.Abort:
        return state.fail(ExitCode.USAGE_ERROR, "Aborted")
    except (BrentcastUsageError, BrentcastConfigError) as err:
        return state.fail(ExitCode.USAGE_ERROR, f"Error: {err}")
    except BrentcastNumericError as err:
        return state.fail(ExitCode.NUMERIC_ERROR, f"Error: {err}")
    except BrentcastError as err:
        return state.fail(ExitCode.DATA_ERROR, f"Error: {err}")
    except OSError as err:
        return state.fail(
            ExitCode.DATA_ERROR, f"Error: {err.filename}: {err.strerror or err}"
        )

    exit_code = ExitCode(result) if isinstance(result, int) else ExitCode.SUCCESS
    if exit_code is not ExitCode.SUCCESS and not state.messages:
        state.report(f"Error: exited with code {int(exit_code)}")
    return CommandOutcome(exit_code, state.messages)


def main() -> None:
    """Console script entry point."""
    sys.exit(int(run().exit_code))
