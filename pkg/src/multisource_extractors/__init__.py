"""Multi-source randomness extractors and the tools to check them at desk scale."""

from rich import print as pretty_print

from .alternating import (
    AltExtConfig,
    alternating_extraction,
    la_ext,
    laext_lookahead_test,
)
from .bits import BitString, BlockIndex, decompose_index, gf2_rank, toeplitz_apply
from .config import ExperimentConfig, locate_line, read_config
from .errors import (
    ConfigError,
    DomainError,
    ExtractorError,
    GuardError,
    InsufficientBlocksError,
    SearchFailure,
    UnsupportedModeError,
)
from .evaluation import (
    JointTable,
    conditional_analysis,
    distance_from_uniform,
    hwise_report,
    mc_distance_upper,
    min_entropy_loss_check,
    push_forward,
    statistical_distance,
    strong_distance,
)
from .examples import (
    example_config_toml,
    toy_basicext,
    toy_extractor,
    toy_params,
    toy_suite,
)
from .experiment import run_experiment
from .extractors import (
    FoldSRExtractor,
    HashedExtractor,
    LookupExtractor,
    LookupSRExtractor,
    StrongSeededExtractor,
    basicext_substitute,
    measure_worst_flat_error,
    search_ideal_extractor,
    toeplitz_extractor,
    verify_bad_set_bound,
)
from .lightest_bin import bin_count_from_params, lightest_bin
from .metrics import Metric
from .params import (
    ConstraintError,
    ConstraintReport,
    ParamConstants,
    ParamSet,
    derive_block_params,
    derive_params,
    explain,
    proof_inequalities,
    solve_c0,
)
from .pipeline import ExtractorSuite, bext, iext, three_source_iext
from .sources import (
    BlockSource,
    DiscreteSource,
    FlatSource,
    adversarial_flat_battery,
    min_entropy,
    point_mass,
    uniform_source,
)
from .srgen import SRMatrix, SSRConfig, row_goodness_test, sr, ssr, sr_quality_test
from .suites import run_suites

__all__ = [
    "AltExtConfig",
    "BitString",
    "BlockIndex",
    "BlockSource",
    "ConfigError",
    "ConstraintError",
    "ConstraintReport",
    "DiscreteSource",
    "DomainError",
    "ExperimentConfig",
    "ExtractorError",
    "ExtractorSuite",
    "FlatSource",
    "FoldSRExtractor",
    "GuardError",
    "HashedExtractor",
    "InsufficientBlocksError",
    "JointTable",
    "LookupExtractor",
    "LookupSRExtractor",
    "Metric",
    "ParamConstants",
    "ParamSet",
    "SRMatrix",
    "SSRConfig",
    "SearchFailure",
    "StrongSeededExtractor",
    "UnsupportedModeError",
    "adversarial_flat_battery",
    "alternating_extraction",
    "basicext_substitute",
    "bext",
    "bin_count_from_params",
    "conditional_analysis",
    "decompose_index",
    "derive_block_params",
    "derive_params",
    "distance_from_uniform",
    "example_config_toml",
    "explain",
    "gf2_rank",
    "hwise_report",
    "iext",
    "la_ext",
    "laext_lookahead_test",
    "lightest_bin",
    "locate_line",
    "mc_distance_upper",
    "measure_worst_flat_error",
    "min_entropy",
    "min_entropy_loss_check",
    "point_mass",
    "pretty_print",
    "proof_inequalities",
    "push_forward",
    "read_config",
    "row_goodness_test",
    "run_experiment",
    "run_suites",
    "search_ideal_extractor",
    "solve_c0",
    "sr",
    "sr_quality_test",
    "ssr",
    "statistical_distance",
    "strong_distance",
    "three_source_iext",
    "toeplitz_apply",
    "toeplitz_extractor",
    "toy_basicext",
    "toy_extractor",
    "toy_params",
    "toy_suite",
    "uniform_source",
    "verify_bad_set_bound",
]
