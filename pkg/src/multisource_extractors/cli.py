"""Functions for the exposed CLI."""

from collections.abc import Callable
from pathlib import Path
from typing import Annotated

from cyclopts import Parameter
from rich.markup import escape
from seedcase_soil import fmap, pretty_print, run_without_tracebacks, setup_cli

from multisource_extractors.config import ExperimentConfig, SuiteName, read_config
from multisource_extractors.constants import (
    CONFIG_NAME,
    EXIT_CONSTRAINT,
    EXIT_GUARD,
    EXIT_IO,
    EXIT_OK,
)
from multisource_extractors.errors import (
    ExtractorError,
    GuardError,
    InsufficientBlocksError,
    SearchFailure,
)
from multisource_extractors.experiment import derive, run_experiment, search_tables
from multisource_extractors.formats import (
    config_digest,
    constraints_text,
    dump_trace,
    write_manifest,
)
from multisource_extractors.metrics import write_metrics
from multisource_extractors.params import ConstraintError, Mode, explain
from multisource_extractors.suites import run_suites

app = setup_cli(
    name="multisource-extractors",
    help=(
        "multisource-extractors derives parameters for, runs and evaluates"
        " multi-source randomness extractors at desk scale"
    ),
    config_name=CONFIG_NAME,
)

ConfigPath = Annotated[Path, Parameter(help="The experiment TOML file.")]


def _exit_code(error: Exception) -> int:
    if isinstance(error, ConstraintError):
        return EXIT_CONSTRAINT
    if isinstance(error, GuardError | SearchFailure | InsufficientBlocksError):
        return EXIT_GUARD
    return EXIT_IO


def _guarded(action: Callable[[], int]) -> int:
    """Run a command body, reporting library and I/O errors as exit codes."""
    try:
        return action()
    except (ExtractorError, OSError) as error:
        pretty_print(f"[red]{type(error).__name__}[/red]: {escape(str(error))}")
        return _exit_code(error)


def _load(
    config: Path,
    seed: int | None = None,
    workers: int | None = None,
    out: str | None = None,
    mode: Mode | None = None,
) -> tuple[ExperimentConfig, str]:
    experiment, text = read_config(config)
    return experiment.with_overrides(seed, workers, out, mode), text


@app.command(name="params")
def params_cmd(
    *,
    config: ConfigPath = Path("experiment.toml"),
    mode: Mode | None = None,
    out: str | None = None,
) -> int:
    """Derive the parameters and print the constraint checklist.

    Args:
        config: The experiment configuration.
        mode: Overrides the configured mode; `strict` fails on a violation.
        out: A directory to also write `constraints.txt` into.
    """

    def action() -> int:
        experiment, _ = _load(config, mode=mode, out=out)
        _, report = derive(experiment)
        pretty_print(explain(report))
        if out is not None:
            directory = Path(experiment.output.directory)
            directory.mkdir(parents=True, exist_ok=True)
            (directory / "constraints.txt").write_text(
                constraints_text(report) + "\n"
            )
        return EXIT_OK

    return _guarded(action)


@app.command(name="run")
def run_cmd(
    *,
    config: ConfigPath = Path("experiment.toml"),
    seed: int | None = None,
    workers: int | None = None,
    out: str | None = None,
    mode: Mode | None = None,
) -> int:
    """Run the configured pipeline and measure its output.

    Writes `trace.txt`, `metrics.csv`, `metrics.json` and `manifest.txt`.

    Args:
        config: The experiment configuration.
        seed: Overrides the configured seed.
        workers: Overrides the configured worker count.
        out: Overrides the output directory.
        mode: Overrides the configured mode.
    """

    def action() -> int:
        experiment, text = _load(config, seed, workers, out, mode)
        result = run_experiment(experiment)
        directory = Path(experiment.output.directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "trace.txt").write_text(
            dump_trace(result.trace, result.params, result.report)
        )
        write_metrics(
            directory,
            result.metrics,
            experiment.seed,
            config_digest(text),
            experiment.output.formats,
        )
        write_manifest(directory, text, experiment.seed)
        passed = sum(metric.passed for metric in result.metrics)
        pretty_print(
            f"[green]Run complete:[/green] {passed} of {len(result.metrics)} metrics"
            f" passed; results in {escape(str(directory))}"
        )
        return EXIT_OK

    return _guarded(action)


@app.command(name="search")
def search_cmd(
    *,
    config: ConfigPath = Path("experiment.toml"),
    seed: int | None = None,
    workers: int | None = None,
    out: str | None = None,
) -> int:
    """Search the configured lookup tables and write them with their errors.

    Args:
        config: The experiment configuration.
        seed: Overrides the configured seed.
        workers: Overrides the configured worker count.
        out: Overrides the output directory.
    """

    def action() -> int:
        experiment, text = _load(config, seed, workers, out)
        directory = Path(experiment.output.directory)
        paths = search_tables(experiment, directory)
        write_manifest(directory, text, experiment.seed)
        pretty_print(
            "[green]Wrote[/green] " + ", ".join(fmap(paths, lambda p: escape(str(p))))
        )
        return EXIT_OK

    return _guarded(action)


@app.command(name="eval")
def eval_cmd(
    *,
    config: ConfigPath = Path("experiment.toml"),
    seed: int | None = None,
    workers: int | None = None,
    out: str | None = None,
    suites: Annotated[list[SuiteName] | None, Parameter(name="--suite")] = None,
) -> int:
    """Run the evaluation suites and write their metrics.

    Exits with 2 when any metric fails.

    Args:
        config: The experiment configuration.
        seed: Overrides the configured seed.
        workers: Overrides the configured worker count.
        out: Overrides the output directory.
        suites: Overrides the configured suites; repeat for several.
    """

    def action() -> int:
        experiment, text = _load(config, seed, workers, out)
        settings = experiment.eval
        metrics = run_suites(
            suites or settings.suites,
            experiment.seed,
            settings.fixtures,
            settings.budget,
            experiment.workers,
        )
        directory = Path(experiment.output.directory)
        write_metrics(
            directory,
            metrics,
            experiment.seed,
            config_digest(text),
            experiment.output.formats,
        )
        write_manifest(directory, text, experiment.seed)
        failed = [metric for metric in metrics if not metric.passed]
        for metric in failed:
            pretty_print(
                f"[red]FAIL[/red] {metric.metric} on {metric.fixture}:"
                f" {metric.measured:.6g} > {metric.threshold:.6g}"
            )
        if failed:
            return EXIT_CONSTRAINT
        pretty_print(f"[green]All {len(metrics)} metrics passed![/green]")
        return EXIT_OK

    return _guarded(action)


def main() -> None:
    """Create an entry point to run the cli without tracebacks."""
    run_without_tracebacks(app)
