import os

from multisource_extractors.constants import DEBUG_ENV


# Can get debug output by using `MSX_DEBUG=true uv run pytest -sv`
def pytest_report_teststatus(report):
    if os.getenv(DEBUG_ENV):
        if report.when == "call":
            # Separate the debug output of consecutive tests
            category = report.outcome
            shortletter = "\n\n"
            verbose = "\n\n"

            return category, shortletter, verbose

    return None
