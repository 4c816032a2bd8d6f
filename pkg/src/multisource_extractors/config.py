"""The experiment configuration read by the command-line interface.

An experiment is a TOML file with the sections `params`, `extractors`,
`basicext`, `sources`, `eval` and `output` plus the top-level `seed` and
`workers`. Every run is replayable from the file alone.
"""

import re
import tomllib
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Literal, Self

import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from seedcase_soil import fmap

from multisource_extractors.constants import ENUMERATION_BUDGET
from multisource_extractors.errors import ConfigError
from multisource_extractors.extractors import TableFamily
from multisource_extractors.internals import BitLiteral
from multisource_extractors.params import Mode, ParamConstants

type PipelineName = Literal["iext", "bext"]
SuiteName = Literal[
    "toeplitz-lhl",
    "ideal-search",
    "bad-set",
    "row-goodness",
    "lookahead",
    "mc-agreement",
    "param-scan",
]

SUITE_NAMES: tuple[SuiteName, ...] = (
    "toeplitz-lhl",
    "ideal-search",
    "bad-set",
    "row-goodness",
    "lookahead",
    "mc-agreement",
    "param-scan",
)


class _Block(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ParamsBlock(ParamConstants):
    """The inputs of parameter derivation.

    With `eta` set, the block-source exponents replace `alpha`, `beta` and
    `gamma`.

    Attributes:
        pipeline: The extractor `run` executes.
        n: The source length.
        k: The min-entropy.
        alpha: The exponent of `h`.
        beta: The exponent of `ell`.
        gamma: The lightest-bin error exponent.
        eta: The block-source entropy exponent.
        mode: `strict` or `relaxed`.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    pipeline: PipelineName = "iext"
    n: int = Field(ge=2)
    k: int = Field(ge=1)
    alpha: float = 1 / 6
    beta: float = 1 / 3
    gamma: float = 1 / 4
    eta: float | None = Field(default=None, gt=0)
    mode: Mode = "strict"

    def constants(self) -> ParamConstants:
        """The open constants and overrides, without the derivation inputs."""
        fields = set(ParamConstants.model_fields)
        return ParamConstants(**self.model_dump(include=fields))


class ExtractorSpec(_Block):
    """How to build the extractor of one role.

    Attributes:
        kind: `toeplitz`, `lookup-file`, `search`, `hashed` or `preset` (the
            pinned toy extractor of the role).
        n: The source length.
        d: The seed length; Toeplitz extractors use `n + m - 1`.
        m: The output length.
        k: The min-entropy a searched table is verified against.
        path: The lookup-table file.
        target_eps: The error a searched table must meet.
        trials: The candidate tables a search may try.
        family: The candidate table distribution.
        key: The key of a hashed extractor.
    """

    kind: Literal["toeplitz", "lookup-file", "search", "hashed", "preset"]
    n: int | None = Field(default=None, ge=1)
    d: int | None = Field(default=None, ge=1)
    m: int | None = Field(default=None, ge=1)
    k: int | None = Field(default=None, ge=0)
    path: str | None = None
    target_eps: float = Field(default=0.25, gt=0)
    trials: int = Field(default=500, ge=1)
    family: TableFamily = "affine"
    key: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_kind(self) -> Self:
        required = {
            "toeplitz": ("n", "m"),
            "lookup-file": ("path",),
            "search": ("n", "d", "m", "k"),
            "hashed": ("n", "d", "m"),
            "preset": (),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"kind '{self.kind}' needs {', '.join(missing)}.")
        return self


class BasicExtSpec(_Block):
    """How to build the final extractor for a weak source and an SR matrix.

    Its shape follows from the parameters: the row count of the last stage,
    `m3`-bit rows and `m_out` output bits.

    Attributes:
        kind: `ideal` (searched and verified), `fold` (XOR of `inner` over
            the rows, unsound), `lookup-file`, or `preset`.
        inner: The row extractor of `fold`.
        k: The min-entropy an ideal table is verified against.
        path: The lookup-table file; the seed is the concatenated rows.
        target_eps: The error an ideal table must meet.
        trials: The candidate tables an ideal search may try.
        family: The candidate table distribution.
    """

    kind: Literal["ideal", "fold", "lookup-file", "preset"] = "preset"
    inner: ExtractorSpec | None = None
    k: int | None = Field(default=None, ge=0)
    path: str | None = None
    target_eps: float = Field(default=0.3, gt=0)
    trials: int = Field(default=500, ge=1)
    family: TableFamily = "affine"

    @model_validator(mode="after")
    def _check_kind(self) -> Self:
        if self.kind == "fold" and self.inner is None:
            raise ValueError("kind 'fold' needs an inner extractor.")
        if self.kind == "ideal" and self.k is None:
            raise ValueError("kind 'ideal' needs k.")
        if self.kind == "lookup-file" and self.path is None:
            raise ValueError("kind 'lookup-file' needs path.")
        return self


class SourceSpec(_Block):
    """How to build one input source.

    Attributes:
        kind: `file` (written by `write_source`), `uniform`, `flat-random`,
            `affine`, `prefix`, `low-weight` or `point`.
        n: The bit length.
        k: The min-entropy of generated flat sources.
        path: The source file.
        value: The value of a point mass.
        prefix: The fixed prefix of a `prefix` source.
        mask: The mask XORed onto a `low-weight` source.
        blocks: The number of independent blocks the block-source extractor
            draws from this source.
    """

    kind: Literal[
        "file", "uniform", "flat-random", "affine", "prefix", "low-weight", "point"
    ]
    n: int | None = Field(default=None, ge=1)
    k: int | None = Field(default=None, ge=0)
    path: str | None = None
    value: BitLiteral | None = None
    prefix: int = Field(default=0, ge=0)
    mask: int = Field(default=0, ge=0)
    blocks: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_kind(self) -> Self:
        if self.kind == "file" and self.path is None:
            raise ValueError("kind 'file' needs path.")
        if self.kind == "point" and self.value is None:
            raise ValueError("kind 'point' needs value.")
        if self.kind not in ("file", "point") and self.n is None:
            raise ValueError(f"kind '{self.kind}' needs n.")
        if self.kind in ("flat-random", "affine", "prefix", "low-weight"):
            if self.k is None:
                raise ValueError(f"kind '{self.kind}' needs k.")
        return self


class EvalBlock(_Block):
    """Thresholds, budgets and suites of the evaluation.

    Attributes:
        budget: The enumeration budget of every exact computation.
        subsets: How many size-`h` row subsets to sample; 0 means all.
        v_threshold: The largest passing distance of the output from uniform.
        strong_threshold: The largest passing strong distance.
        mc_samples: Draws for a Monte Carlo estimate of the output distance;
            0 skips it.
        fixtures: The number of random fixtures in the suites that use them.
        suites: The suites `eval` runs.
    """

    budget: int = Field(default=ENUMERATION_BUDGET, ge=1)
    subsets: int = Field(default=16, ge=0)
    v_threshold: float = Field(default=0.2, ge=0)
    strong_threshold: float = Field(default=0.25, ge=0)
    mc_samples: int = Field(default=0, ge=0)
    fixtures: int = Field(default=20, ge=1)
    suites: list[SuiteName] = list(SUITE_NAMES)


class OutputBlock(_Block):
    """Where results go.

    Attributes:
        directory: The output directory, relative to the working directory.
        formats: The metric formats to write.
    """

    directory: str = "msx-out"
    formats: list[Literal["csv", "json"]] = ["csv", "json"]


class ExperimentConfig(_Block):
    """A complete, replayable experiment.

    Attributes:
        seed: The seed of every random choice, below `2**64`.
        workers: Processes used by searches and flat-source enumerations.
        params: The parameter-derivation inputs.
        extractors: The extractor of each pipeline role.
        basicext: The final extractor.
        sources: The input sources by name (`x`, `y1`, `y2` or `x`, `y`).
        eval: Evaluation settings.
        output: Output settings.

    Examples:
        ```{python}
        import multisource_extractors as msx

        config = msx.ExperimentConfig.from_toml(msx.example_config_toml())
        config.params.pipeline, config.seed
        ```
    """

    seed: int = Field(ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)
    params: ParamsBlock
    extractors: dict[str, ExtractorSpec] = {}
    basicext: BasicExtSpec = BasicExtSpec()
    sources: dict[str, SourceSpec] = {}
    eval: EvalBlock = EvalBlock()
    output: OutputBlock = OutputBlock()

    @classmethod
    def from_toml(cls, text: str, origin: str = "<config>") -> "ExperimentConfig":
        """Parse and validate a configuration.

        Raises:
            ConfigError: With the line of every problem found.
        """
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as error:
            raise ConfigError(f"{origin}: {error}.") from error
        try:
            return cls.model_validate(data)
        except ValidationError as error:
            raise ConfigError(_explain_validation(error, text, origin)) from error

    def to_toml(self) -> str:
        """Serialise without unset optional entries."""
        return tomli_w.dumps(self.model_dump(exclude_none=True))

    def with_overrides(
        self,
        seed: int | None = None,
        workers: int | None = None,
        out: str | None = None,
        mode: Mode | None = None,
    ) -> "ExperimentConfig":
        """A copy with command-line overrides applied.

        Raises:
            ConfigError: If an override is out of range.
        """
        update: dict[str, Any] = {}
        if seed is not None:
            update["seed"] = seed
        if workers is not None:
            update["workers"] = workers
        if out is not None:
            update["output"] = self.output.model_copy(update={"directory": out})
        if mode is not None:
            update["params"] = self.params.model_copy(update={"mode": mode})
        try:
            return self.model_validate(self.model_copy(update=update).model_dump())
        except ValidationError as error:
            raise ConfigError(_explain_validation(error, "", "overrides")) from error


def read_config(path: Path) -> tuple[ExperimentConfig, str]:
    """Read a configuration file.

    Returns:
        The configuration and the file text, whose hash identifies the run.

    Raises:
        ConfigError: If the file is missing or invalid.
    """
    try:
        text = path.read_text()
    except OSError as error:
        raise ConfigError(f"Cannot read '{path}': {error.strerror}.") from error
    return ExperimentConfig.from_toml(text, origin=str(path)), text


# Diagnostics ====


_HEADER = re.compile(r"^\s*\[+\s*([^\]]+?)\s*\]+")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-\"']+)\s*=")


def _explain_validation(error: ValidationError, text: str, origin: str) -> str:
    messages = fmap(
        error.errors(),
        lambda item: _explain_item(item["loc"], item["msg"], text, origin),
    )
    return f"{len(messages)} problem(s) in the configuration:\n" + "\n".join(
        messages
    )


def _explain_item(
    loc: Sequence[int | str], message: str, text: str, origin: str
) -> str:
    path = ".".join(fmap(loc, str))
    line = locate_line(text, fmap(loc, str))
    where = f"{origin}:{line}" if line is not None else origin
    return f"  {where}: {path}: {message}"


def locate_line(text: str, loc: Sequence[str]) -> int | None:
    """The 1-based line defining the key at `loc`, or its table header.

    Examples:
        ```{python}
        import multisource_extractors as msx

        msx.locate_line("seed = 1\\n[params]\\nk = 0\\n", ["params", "k"])
        ```
    """
    table: tuple[str, ...] = ()
    header_line: int | None = None
    header_depth = 0
    for number, line in enumerate(text.splitlines(), start=1):
        header = _HEADER.match(line)
        if header:
            table = tuple(part.strip().strip("\"'") for part in header[1].split("."))
            matches = table == tuple(loc[: len(table)])
            if matches and header_depth <= len(table) <= len(loc):
                header_line, header_depth = number, len(table)
            continue
        key = _KEY.match(line)
        if key and key[1].strip("\"'") == loc[-1] and tuple(loc[:-1]) == table:
            return number
    return header_line
