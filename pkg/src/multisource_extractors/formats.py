"""Reading and writing source files, lookup tables, SR matrices and traces.

Source descriptions and lookup tables are TOML files with bit strings as
`0x<hex>/<length>` literals. SR matrices, traces and the reproducibility
manifest are plain text.
"""

import hashlib
import platform
import tomllib
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

import numpy as np
import tomli_w
from rich.text import Text
from seedcase_soil import fmap

from multisource_extractors.bits import BitString, concat
from multisource_extractors.errors import ConfigError, DomainError
from multisource_extractors.extractors import LookupExtractor
from multisource_extractors.params import ConstraintReport, ParamSet, explain
from multisource_extractors.pipeline import PipelineTrace
from multisource_extractors.sources import DiscreteSource, FlatSource
from multisource_extractors.srgen import SRMatrix


def read_toml(path: Path) -> dict[str, Any]:
    """Read a TOML file, turning every failure into a `ConfigError`.

    Raises:
        ConfigError: If the file is missing or is not valid TOML; the message
            names the path and, for syntax errors, the line.
    """
    try:
        return tomllib.loads(path.read_text())
    except OSError as error:
        raise ConfigError(f"Cannot read '{path}': {error.strerror}.") from error
    except tomllib.TOMLDecodeError as error:
        raise ConfigError(f"'{path}' is not valid TOML: {error}.") from error


def _field(data: dict[str, Any], key: str, path: Path) -> Any:
    if key not in data:
        raise ConfigError(f"'{path}' has no `{key}` entry.")
    return data[key]


def _literals(values: list[str], path: Path) -> list[BitString]:
    try:
        return fmap(values, BitString.from_literal)
    except DomainError as error:
        raise ConfigError(f"'{path}': {error}") from error


# Sources ====


def source_to_toml(source: DiscreteSource) -> str:
    """The TOML text of an exact source; flat sources omit probabilities."""
    data: dict[str, Any] = {
        "n": source.n,
        "values": fmap(source.support, lambda value: value.to_literal()),
    }
    if not isinstance(source, FlatSource):
        data["probabilities"] = list(source.probabilities)
    return tomli_w.dumps(data)


def write_source(path: Path, source: DiscreteSource) -> Path:
    """Write an exact source to a TOML file."""
    path.write_text(source_to_toml(source))
    return path


def read_source(path: Path) -> DiscreteSource:
    """Read a source written by `write_source`.

    Without `probabilities` the source is flat over `values`.

    Raises:
        ConfigError: If the file is missing or malformed.
    """
    data = read_toml(path)
    n = _field(data, "n", path)
    values = _literals(_field(data, "values", path), path)
    try:
        if "probabilities" not in data:
            return FlatSource.of(n, values)
        return DiscreteSource.from_table(n, dict(zip(values, data["probabilities"])))
    except DomainError as error:
        raise ConfigError(f"'{path}': {error}") from error


# Lookup tables ====


def lookup_to_toml(ext: LookupExtractor) -> str:
    """The TOML text of a lookup table.

    Row `x` holds the outputs for every seed, seed 0 first, concatenated
    into one `2**d * m`-bit literal.
    """
    header: dict[str, Any] = {"n": ext.n, "d": ext.d, "m": ext.m}
    if ext.claimed_k is not None:
        header["k"] = ext.claimed_k
    if ext.measured_eps is not None:
        header["measured_eps"] = ext.measured_eps
    header["rows"] = [
        concat(BitString(ext.m, int(value)) for value in row).to_literal()
        for row in ext.values
    ]
    return tomli_w.dumps(header)


def write_lookup_table(path: Path, ext: LookupExtractor) -> Path:
    """Write a lookup table with its measured error in the header."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(lookup_to_toml(ext))
    return path


def read_lookup_table(path: Path) -> LookupExtractor:
    """Read a lookup table written by `write_lookup_table`.

    Raises:
        ConfigError: If the file is missing or the rows do not fit the header.
    """
    data = read_toml(path)
    n, d, m = (_field(data, key, path) for key in ("n", "d", "m"))
    rows = _literals(_field(data, "rows", path), path)
    width = 2**d * m
    if len(rows) != 2**n or any(len(row) != width for row in rows):
        raise ConfigError(
            f"'{path}' needs {2**n} rows of {width} bits for n={n}, d={d}, m={m}."
        )
    values = np.array(
        [[row[s * m : (s + 1) * m].value for s in range(2**d)] for row in rows],
        dtype=np.int64,
    ).reshape(2**n, 2**d)
    return LookupExtractor(
        n, d, m, values, claimed_k=data.get("k"), measured_eps=data.get("measured_eps")
    )


# SR matrices ====


def dump_sr_matrix(matrix: SRMatrix) -> str:
    """The header `N` and `row_len` followed by one hexadecimal row per line."""
    width = max(1, -(-matrix.row_len // 4))
    lines = [f"N = {matrix.rows}", f"row_len = {matrix.row_len}"]
    lines += [f"{row.value:0{width}x}" for row in matrix.values]
    return "\n".join(lines) + "\n"


def parse_sr_matrix(text: str) -> SRMatrix:
    """Parse the output of `dump_sr_matrix`.

    Raises:
        ConfigError: If the header or a row is malformed.
    """
    lines = [line.strip() for line in text.strip().splitlines()]
    try:
        rows = int(lines[0].removeprefix("N =").strip())
        row_len = int(lines[1].removeprefix("row_len =").strip())
        values = tuple(BitString(row_len, int(line, 16)) for line in lines[2:])
    except (IndexError, ValueError) as error:
        raise ConfigError(f"Malformed SR matrix dump: {error}.") from error
    if len(values) != rows:
        raise ConfigError(f"The dump declares {rows} rows but has {len(values)}.")
    return SRMatrix(row_len, values)


# Traces ====


def constraints_text(report: ConstraintReport) -> str:
    """The constraint explanation without colour markup."""
    return Text.from_markup(explain(report)).plain


def dump_trace(
    trace: PipelineTrace,
    params: ParamSet | None = None,
    report: ConstraintReport | None = None,
) -> str:
    """The trace as text with one section per stage.

    Each section gives the shape, the named details and one
    `0x<hex>/<length>` row per line. The parameters and the plain-text
    constraint explanation follow when given.
    """
    sections = []
    if params is not None:
        fields = params.model_dump(exclude={"constants", "error_budget"})
        lines = [f"{key} = {value}" for key, value in fields.items()]
        sections.append("[params]\n" + "\n".join(lines))
    for stage in trace.stages:
        lines = [
            f"[stage {stage.name}]",
            f"rows = {len(stage.rows)}",
            f"row_len = {stage.row_len}",
        ]
        lines += [f"{key} = {value}" for key, value in stage.details]
        lines += fmap(stage.rows, lambda row: row.to_literal())
        sections.append("\n".join(lines))
    if report is not None:
        sections.append("[constraints]\n" + constraints_text(report))
    return "\n\n".join(sections) + "\n"


# Manifest ====


def config_digest(config_text: str) -> str:
    """The SHA-256 hex digest of the configuration text."""
    return hashlib.sha256(config_text.encode()).hexdigest()


def _version(package: str) -> str:
    try:
        return version(package)
    except PackageNotFoundError:
        return "unknown"


def manifest_text(config_text: str, seed: int) -> str:
    """The reproducibility manifest: config hash, seed and versions."""
    lines = [
        f"config_sha256 = {config_digest(config_text)}",
        f"seed = {seed}",
        f"python = {platform.python_version()}",
        f"numpy = {np.__version__}",
        f"multisource-extractors = {_version('multisource-extractors')}",
    ]
    return "\n".join(lines) + "\n"


def write_manifest(out_dir: Path, config_text: str, seed: int) -> Path:
    """Write `manifest.txt` into `out_dir`."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.txt"
    path.write_text(manifest_text(config_text, seed))
    return path
