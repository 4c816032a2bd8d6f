"""Errors raised by the extractors and the hook that hides their tracebacks."""

import sys
from types import TracebackType
from typing import Any, Callable, Optional

from rich import print as rprint

# Type alias for Python exception hook
PythonExceptionHook = Callable[
    [type[BaseException], BaseException, Optional[TracebackType]],
    None,
]

# Type alias for IPython custom exception handler (includes self and tb_offset)
IPythonExceptionHandler = Callable[
    [Any, type[BaseException], BaseException, Optional[TracebackType], None],
    Optional[list[str]],
]


class ExtractorError(Exception):
    """Base class of every error raised by `multisource_extractors`."""


class DomainError(ExtractorError, ValueError):
    """An argument is outside the domain of an operation.

    Raised for out-of-range indices, length mismatches between bit strings
    and the shape an extractor or matrix declares, and malformed literals.
    """


class GuardError(ExtractorError):
    """An enumeration or search would exceed its work budget.

    Attributes:
        budget: The name of the budget that was exceeded.
        required: The amount of work the request needs.
        limit: The configured limit.
    """

    def __init__(self, budget: str, required: int, limit: int, hint: str = "") -> None:
        """Create the error naming the exceeded budget."""
        self.budget = budget
        self.required = required
        self.limit = limit
        message = (
            f"The {budget} budget is exceeded: {required:,} is needed"
            f" but the limit is {limit:,}."
        )
        super().__init__(f"{message} {hint}".strip())


class SearchFailure(ExtractorError):
    """No candidate met the target error within the allowed trials."""

    def __init__(self, target_eps: float, best_eps: float, trials: int) -> None:
        """Create the error carrying the best error that was found."""
        self.target_eps = target_eps
        self.best_eps = best_eps
        self.trials = trials
        super().__init__(
            f"No table reached the target error {target_eps:.6g} in {trials} trials;"
            f" the best table found has error {best_eps:.6g}."
        )


class InsufficientBlocksError(ExtractorError):
    """A block-source loop ran out of fresh blocks."""

    def __init__(self, round_index: int, source: str, available: int) -> None:
        """Create the error naming the round and the exhausted source."""
        self.round_index = round_index
        self.source = source
        self.available = available
        super().__init__(
            f"Round {round_index} needs a fresh {source} block, but all"
            f" {available} supplied {source} blocks are used up."
        )


class UnsupportedModeError(ExtractorError):
    """An exact-only operation was given a sampling-mode source."""


class ConfigError(ExtractorError):
    """A configuration or data file could not be parsed or validated."""


def _pretty_print_exception(
    exc_type: type[BaseException],
    exc_value: BaseException,
) -> None:
    rprint(f"\n[red]{exc_type.__name__}[/red]: {exc_value}")


def _create_suppressed_traceback_hook(
    exception_types: tuple[type[BaseException], ...],
    old_hook: PythonExceptionHook,
) -> PythonExceptionHook:
    """Create a Python exception hook that suppresses tracebacks.

    Args:
        exception_types: Exception types to suppress tracebacks for.
        old_hook: The previous exception hook to delegate unregistered exceptions to.

    Returns:
        A composable exception hook function.
    """

    def hook(
        exc_type: type[BaseException],
        exc_value: BaseException,
        exc_traceback: Optional[TracebackType],
    ) -> None:
        if issubclass(exc_type, exception_types):
            _pretty_print_exception(exc_type, exc_value)
        else:
            old_hook(exc_type, exc_value, exc_traceback)

    return hook


def _create_suppressed_traceback_ipython_hook(
    exception_types: tuple[type[BaseException], ...],
    old_custom_tb: Optional[IPythonExceptionHandler],
) -> IPythonExceptionHandler:
    """Create an IPython exception hook that suppresses tracebacks.

    Args:
        exception_types: Exception types to suppress tracebacks for.
        old_custom_tb: The previous IPython custom exception handler, if any.

    Returns:
        A composable IPython exception hook function.
    """

    def hook(
        self: Any,
        exc_type: type[BaseException],
        exc_value: BaseException,
        exc_traceback: Optional[TracebackType],
        tb_offset: None = None,
    ) -> Optional[list[str]]:
        if issubclass(exc_type, exception_types):
            _pretty_print_exception(exc_type, exc_value)
            return []
        if old_custom_tb is not None:
            return old_custom_tb(self, exc_type, exc_value, exc_traceback, tb_offset)
        return None

    return hook


def _is_running_from_ipython() -> bool:
    """Checks whether running in IPython interactive console or not."""
    try:
        from IPython import get_ipython  # type: ignore[attr-defined]
    except ImportError:
        return False
    else:
        return get_ipython() is not None  # type: ignore[no-untyped-call]


def _setup_suppressed_tracebacks(
    *exception_types: type[BaseException],
) -> None:
    """Set up exception hooks to hide tracebacks for specified exceptions.

    Multiple calls add to the existing hook rather than replacing it.

    Args:
        *exception_types: Exception types to hide tracebacks for.

    Raises:
        TypeError: If any exception_type is not an exception class.
    """
    for exc_type in exception_types:
        if not (isinstance(exc_type, type) and issubclass(exc_type, BaseException)):
            raise TypeError(f"{exc_type!r} is not an exception class")

    sys.excepthook = _create_suppressed_traceback_hook(exception_types, sys.excepthook)

    if _is_running_from_ipython():
        ip = get_ipython()  # type: ignore  # noqa: F821
        old_custom_tb: Optional[IPythonExceptionHandler] = getattr(ip, "CustomTB", None)
        ip.set_custom_exc(
            (Exception,),
            _create_suppressed_traceback_ipython_hook(exception_types, old_custom_tb),
        )


_setup_suppressed_tracebacks(ExtractorError)
