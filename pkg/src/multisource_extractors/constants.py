from importlib.resources import files

# Largest bit string the library handles.
MAX_BITS = 2**24

# Longest value that fits an int64 array.
MAX_ARRAY_BITS = 63

# Default number of weighted evaluations an exact enumeration may perform.
ENUMERATION_BUDGET = 2**24

# Absolute tolerance on the total probability of an exact distribution.
NORMALIZATION_TOLERANCE = 2.0**-40

# Slack added to float comparisons against error thresholds.
FLOAT_SLACK = 1e-12

# The plug-in distance estimator is only used up to this output length.
MC_MAX_OUTPUT_BITS = 20

# Bootstrap resamples behind a Monte Carlo interval.
BOOTSTRAP_RESAMPLES = 400

DEBUG_ENV = "MSX_DEBUG"

CONFIG_NAME = ".msx.toml"

METRICS_SCHEMA_PATH = files("multisource_extractors").joinpath(
    "schemas", "metrics.json"
)

# Column order of `metrics.csv`.
METRIC_COLUMNS = ["metric", "fixture", "measured", "threshold", "pass"]

# CLI exit codes.
EXIT_OK = 0
EXIT_CONSTRAINT = 2
EXIT_GUARD = 3
EXIT_IO = 4
