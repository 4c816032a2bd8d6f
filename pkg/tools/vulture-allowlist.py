# ruff: noqa
# mypy: ignore-errors
_check_kind  # unused method (src/multisource_extractors/config.py:113)
_check_h  # unused method (src/multisource_extractors/params.py:75)
model_config  # unused variable (src/multisource_extractors/config.py:47)
params_cmd  # unused function (src/multisource_extractors/cli.py:77)
run_cmd  # unused function (src/multisource_extractors/cli.py:107)
search_cmd  # unused function (src/multisource_extractors/cli.py:154)
eval_cmd  # unused function (src/multisource_extractors/cli.py:184)
pytest_report_teststatus  # unused function (tests/conftest.py:7)
reset_excepthook  # unused function (tests/test_traceback_suppression.py:19)
