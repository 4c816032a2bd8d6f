"""Build extractors and sources from a configuration and run the pipelines.

Every random choice is drawn from one generator seeded by the configuration,
in a fixed order: sources, extractors, the final extractor, the traced
realisation and the Monte Carlo draws.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from seedcase_soil import fmap

from multisource_extractors.bits import BitString
from multisource_extractors.config import (
    BasicExtSpec,
    ExperimentConfig,
    ExtractorSpec,
    PipelineName,
    SourceSpec,
)
from multisource_extractors.errors import ConfigError
from multisource_extractors.evaluation import (
    conditional_analysis,
    distance_from_uniform,
    mc_distance_upper,
    push_forward,
)
from multisource_extractors.examples import toy_basicext, toy_extractor
from multisource_extractors.extractors import (
    HashedExtractor,
    LookupExtractor,
    LookupSRExtractor,
    SRExtractor,
    StrongSeededExtractor,
    basicext_substitute,
    search_ideal_extractor,
    toeplitz_extractor,
)
from multisource_extractors.formats import (
    read_lookup_table,
    read_source,
    write_lookup_table,
)
from multisource_extractors.internals import make_rng
from multisource_extractors.metrics import Metric
from multisource_extractors.params import (
    ConstraintReport,
    ParamSet,
    derive_block_params,
    derive_params,
)
from multisource_extractors.pipeline import (
    ExtractorSuite,
    PipelineTrace,
    bext,
    iext,
)
from multisource_extractors.sources import (
    DiscreteSource,
    affine_source,
    independent_blocks,
    low_weight_source,
    point_mass,
    prefix_fixed_source,
    random_flat_source,
    sample,
    uniform_source,
)

_REQUIRED_ROLES = ("ext_q", "ext_w", "ext_bridge", "ext1", "ext2", "ext3")
_PIPELINE_ROLES: dict[PipelineName, tuple[str, ...]] = {
    "iext": ("ext_y2", "ext_x"),
    "bext": ("ext_loop", "ext_final"),
}
_PIPELINE_SOURCES: dict[PipelineName, tuple[str, ...]] = {
    "iext": ("x", "y1", "y2"),
    "bext": ("x", "y"),
}


def derive(config: ExperimentConfig) -> tuple[ParamSet, ConstraintReport]:
    """Derive the parameters of the configured pipeline.

    Raises:
        ConstraintError: In strict mode, if a constraint is violated.
    """
    block = config.params
    if block.eta is not None:
        return derive_block_params(
            block.n, block.k, block.eta, block.mode, block.constants()
        )
    return derive_params(
        block.n,
        block.k,
        block.alpha,
        block.beta,
        block.gamma,
        block.mode,
        block.constants(),
    )


# Sources ====


def build_source(spec: SourceSpec, rng: np.random.Generator) -> DiscreteSource:
    """The source a `SourceSpec` describes; random kinds draw from `rng`.

    Raises:
        ConfigError: If a source file is missing or malformed.
    """
    # The validators guarantee the fields each kind needs.
    n, k = spec.n or 0, spec.k or 0
    match spec.kind:
        case "file":
            return read_source(Path(str(spec.path)))
        case "point":
            return point_mass(BitString.from_literal(str(spec.value)))
        case "uniform":
            return uniform_source(n)
        case "flat-random":
            return random_flat_source(n, k, rng)
        case "affine":
            return affine_source(n, k, rng)
        case "prefix":
            return prefix_fixed_source(n, k, spec.prefix)
        case "low-weight":
            return low_weight_source(n, k, spec.mask)


@dataclass(frozen=True)
class Parties:
    """The block sources of the two parties, `X` and `Y`."""

    x: tuple[DiscreteSource, ...]
    y: tuple[DiscreteSource, ...]

    @property
    def all(self) -> list[DiscreteSource]:
        """Every block source, `X` blocks first."""
        return [*self.x, *self.y]


def build_parties(config: ExperimentConfig, rng: np.random.Generator) -> Parties:
    """Build the input sources of the configured pipeline.

    For `iext` the parties are `X = (x,)` and `Y = (y1, y2)`. For `bext`
    each party draws `blocks` independent blocks from its source.

    Raises:
        ConfigError: If a source the pipeline needs is not configured.
    """
    pipeline = config.params.pipeline
    missing = [
        name for name in _PIPELINE_SOURCES[pipeline] if name not in config.sources
    ]
    if missing:
        raise ConfigError(f"The {pipeline} pipeline needs the sources {missing}.")
    specs = config.sources
    if pipeline == "iext":
        x = (build_source(specs["x"], rng),)
        y = (build_source(specs["y1"], rng), build_source(specs["y2"], rng))
        return Parties(x=x, y=y)
    return Parties(
        x=tuple(build_source(specs["x"], rng) for _ in range(specs["x"].blocks)),
        y=tuple(build_source(specs["y"], rng) for _ in range(specs["y"].blocks)),
    )


# Extractors ====


def build_extractor(
    spec: ExtractorSpec,
    role: str,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> StrongSeededExtractor:
    """The extractor an `ExtractorSpec` describes.

    Raises:
        ConfigError: If a Toeplitz seed length is configured inconsistently or
            a table file is missing.
        GuardError: If a search is infeasible.
        SearchFailure: If a search finds no table meeting its target.
    """
    n, d, m = spec.n or 0, spec.d or 0, spec.m or 0
    match spec.kind:
        case "toeplitz":
            if spec.d is not None and spec.d != n + m - 1:
                raise ConfigError(
                    f"The Toeplitz extractor of '{role}' has {n + m - 1} seed bits,"
                    f" not {spec.d}."
                )
            return toeplitz_extractor(n, m)
        case "lookup-file":
            return read_lookup_table(Path(str(spec.path)))
        case "search":
            return search_ideal_extractor_for(spec, config, rng)
        case "hashed":
            return HashedExtractor(n, d, m, key=spec.key)
        case "preset":
            return toy_extractor(role, config.params.pipeline)


def build_suite(config: ExperimentConfig, rng: np.random.Generator) -> ExtractorSuite:
    """Build every configured extractor role.

    Raises:
        ConfigError: If a role is unknown or one the pipeline needs is missing.
    """
    needed = _REQUIRED_ROLES + _PIPELINE_ROLES[config.params.pipeline]
    known = _REQUIRED_ROLES + _PIPELINE_ROLES["iext"] + _PIPELINE_ROLES["bext"]
    unknown = [role for role in config.extractors if role not in known]
    missing = [role for role in needed if role not in config.extractors]
    if unknown or missing:
        raise ConfigError(
            f"Extractor roles: unknown {unknown}, missing {missing}; the roles are"
            f" {', '.join(known)}."
        )
    return ExtractorSuite(
        **{
            role: build_extractor(spec, role, config, rng)
            for role, spec in config.extractors.items()
        }
    )


def final_rows(params: ParamSet, pipeline: PipelineName) -> int:
    """The row count of the matrix handed to the final extractor."""
    if pipeline == "iext":
        return params.N // params.r
    return max(1, int(params.stop_rows))


def build_basicext(
    spec: BasicExtSpec,
    config: ExperimentConfig,
    params: ParamSet,
    n: int,
    rng: np.random.Generator,
) -> SRExtractor:
    """The final extractor for an `n`-bit source.

    Raises:
        GuardError: If an ideal search is infeasible.
        SearchFailure: If an ideal search finds no table meeting its target.
    """
    pipeline = config.params.pipeline
    rows = final_rows(params, pipeline)
    match spec.kind:
        case "preset":
            return toy_basicext(pipeline)
        case "lookup-file":
            return LookupSRExtractor(
                read_lookup_table(Path(str(spec.path))), rows, params.m3
            )
        case "fold":
            if spec.inner is None:
                raise ConfigError("The fold final extractor needs `inner`.")
            return basicext_substitute(
                "fold",
                n=n,
                rows=rows,
                row_len=params.m3,
                m=params.m_out,
                inner=build_extractor(spec.inner, "basicext", config, rng),
            )
        case "ideal":
            return basicext_substitute(
                "ideal",
                n=n,
                rows=rows,
                row_len=params.m3,
                m=params.m_out,
                k=spec.k,
                target_eps=spec.target_eps,
                trials=spec.trials,
                rng=rng,
                family=spec.family,
                workers=config.workers,
                budget=config.eval.budget,
            )


# Running ====


type PartyMap = Callable[[Sequence[BitString], Sequence[BitString]], BitString]


@dataclass(frozen=True)
class RunResult:
    """The outcome of one configured run.

    Attributes:
        params: The derived parameters.
        report: The evaluated constraint checklist.
        trace: The stages of the traced realisation.
        metrics: The measured output quality.
    """

    params: ParamSet
    report: ConstraintReport
    trace: PipelineTrace
    metrics: list[Metric]


def _split(value: BitString, lengths: Sequence[int]) -> list[BitString]:
    parts: list[BitString] = []
    start = 0
    for length in lengths:
        parts.append(value[start : start + length])
        start += length
    return parts


def output_metrics(
    evaluate: PartyMap,
    parties: Parties,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> list[Metric]:
    """Measure the output against uniform, alone and jointly with each party.

    The strong forms condition on every block of one party at once, so they
    are the distances of `(V, Y)` from `(U, Y)` and of `(V, X)` from `(U, X)`.

    Raises:
        GuardError: If an enumeration exceeds the configured budget.
    """
    settings = config.eval
    pipeline = config.params.pipeline
    split = len(parties.x)
    x_lens = fmap(parties.x, lambda source: source.n)
    y_lens = fmap(parties.y, lambda source: source.n)

    def blockwise(*values: BitString) -> BitString:
        return evaluate(values[:split], values[split:])

    def jointly(x: BitString, y: BitString) -> BitString:
        return evaluate(_split(x, x_lens), _split(y, y_lens))

    output = push_forward(blockwise, parties.all, settings.budget)
    metrics = [
        Metric.of(
            "output-distance",
            pipeline,
            distance_from_uniform(output),
            settings.v_threshold,
        )
    ]
    joint = [independent_blocks(parties.x).joint, independent_blocks(parties.y).joint]
    for party, index in (("y", 1), ("x", 0)):
        report = conditional_analysis(
            jointly,
            joint,
            condition_on=index,
            inner_metric=distance_from_uniform,
            threshold=settings.strong_threshold,
            budget=settings.budget,
        )
        metrics.append(
            Metric.of(
                f"strong-in-{party}",
                pipeline,
                report.expected,
                settings.strong_threshold,
                passing_mass=report.passing_mass,
                fixings=len(report.entries),
            )
        )
    if settings.mc_samples:
        estimate = mc_distance_upper(blockwise, parties.all, settings.mc_samples, rng)
        metrics.append(
            Metric(
                metric="output-distance-mc",
                fixture=pipeline,
                measured=estimate.estimate,
                threshold=settings.v_threshold,
                passed=estimate.estimate <= settings.v_threshold,
                biased_up=True,
                detail={
                    "low": estimate.low,
                    "high": estimate.high,
                    "samples": estimate.samples,
                },
            )
        )
    return metrics


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Derive, build, trace one realisation and measure the configured run.

    Raises:
        ConstraintError: In strict mode, if a constraint is violated.
        ConfigError: If a source, role or file is missing.
        GuardError: If a search or enumeration exceeds its budget.
        InsufficientBlocksError: If the block-source run runs out of blocks.
    """
    params, report = derive(config)
    rng = make_rng(config.seed)
    parties = build_parties(config, rng)
    suite = build_suite(config, rng)
    basicext = build_basicext(config.basicext, config, params, parties.y[-1].n, rng)

    def traced(
        xs: Sequence[BitString], ys: Sequence[BitString]
    ) -> tuple[BitString, PipelineTrace]:
        if config.params.pipeline == "iext":
            result = iext(params, suite, basicext, xs[0], ys[0], ys[1])
            return result.v, result.trace
        block_result = bext(params, suite, basicext, xs, ys)
        return block_result.w, block_result.trace

    def evaluate(xs: Sequence[BitString], ys: Sequence[BitString]) -> BitString:
        return traced(xs, ys)[0]

    realised = fmap(parties.all, lambda source: sample(source, rng))
    _, trace = traced(realised[: len(parties.x)], realised[len(parties.x) :])
    metrics = output_metrics(evaluate, parties, config, rng)
    return RunResult(params=params, report=report, trace=trace, metrics=metrics)


def final_source_len(config: ExperimentConfig) -> int:
    """The length of the source handed to the final extractor."""
    spec = config.sources.get("y2") or config.sources.get("y")
    return spec.n if spec is not None and spec.n is not None else config.params.n


def search_tables(config: ExperimentConfig, out_dir: Path) -> list[Path]:
    """Search every `search` extractor and an `ideal` final extractor.

    Tables are written to `out_dir/tables/<role>.toml` with their measured
    errors in the header.

    Raises:
        ConfigError: If nothing is configured for searching.
        GuardError: If a search is infeasible.
        SearchFailure: If a search finds no table meeting its target.
    """
    rng = make_rng(config.seed)
    tables: list[tuple[str, LookupExtractor]] = [
        (role, search_ideal_extractor_for(spec, config, rng))
        for role, spec in config.extractors.items()
        if spec.kind == "search"
    ]
    if config.basicext.kind == "ideal":
        params, _ = derive(config)
        n = final_source_len(config)
        basicext = build_basicext(config.basicext, config, params, n, rng)
        if isinstance(basicext, LookupSRExtractor):
            tables.append(("basicext", basicext.table))
    if not tables:
        raise ConfigError(
            "Nothing to search: no extractor has kind 'search' and basicext is"
            " not 'ideal'."
        )
    return [
        write_lookup_table(out_dir / "tables" / f"{role}.toml", table)
        for role, table in tables
    ]


def search_ideal_extractor_for(
    spec: ExtractorSpec, config: ExperimentConfig, rng: np.random.Generator
) -> LookupExtractor:
    """Run the search a `search` entry describes."""
    return search_ideal_extractor(
        spec.n or 0,
        spec.d or 0,
        spec.m or 0,
        spec.k or 0,
        spec.target_eps,
        spec.trials,
        rng,
        family=spec.family,
        workers=config.workers,
        budget=config.eval.budget,
    )
