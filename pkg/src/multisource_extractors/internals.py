import math
import os
import re
from typing import Annotated, Any

import numpy as np
from pydantic import AfterValidator
from rich import print as rprint

from multisource_extractors.constants import DEBUG_ENV
from multisource_extractors.errors import DomainError, GuardError

_LITERAL_PATTERN = re.compile(r"^0x([0-9a-fA-F]*)/([0-9]+)$")


def _split_literal(literal: str) -> tuple[int, int]:
    """Split a `0x<hex>/<length>` literal into its value and length."""
    match = _LITERAL_PATTERN.match(literal.strip())
    if match is None:
        raise DomainError(
            f"'{literal}' is not a bit-string literal; expected the form"
            " `0x<hex>/<length>`, e.g. `0x6/4` for 0110."
        )
    digits, length = match.groups()
    value = int(digits, 16) if digits else 0
    if value >= 2 ** int(length):
        raise DomainError(f"The value of '{literal}' does not fit in {length} bits.")
    return value, int(length)


def _is_bit_literal(value: str) -> str:
    try:
        _split_literal(value)
    except DomainError as error:
        raise ValueError(str(error)) from error
    return value


type BitLiteral = Annotated[str, AfterValidator(_is_bit_literal)]


def make_rng(seed: int) -> np.random.Generator:
    """Create the pinned counter-based generator for a 64-bit seed.

    All randomness in the library comes from NumPy's Philox bit generator, so
    the same seed produces the same stream on every platform.

    Args:
        seed: A non-negative integer below 2**64.

    Returns:
        A seeded NumPy generator.
    """
    if not 0 <= seed < 2**64:
        raise DomainError(f"The seed {seed} is not an unsigned 64-bit integer.")
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(rng: np.random.Generator) -> int:
    """Draw a fresh 64-bit seed from a generator."""
    return int(rng.integers(0, 2**63, dtype=np.int64))


def check_budget(budget: str, required: int, limit: int, hint: str = "") -> None:
    """Raise a `GuardError` when `required` work exceeds `limit`."""
    if required > limit:
        raise GuardError(budget, required, limit, hint)


def is_power_of_two(value: int) -> bool:
    """Whether `value` is a positive power of two."""
    return value >= 1 and value & (value - 1) == 0


def ceil_log2(value: float) -> int:
    """The smallest integer `e` with `2**e >= value` (0 for values up to 1)."""
    if value <= 1:
        return 0
    exponent = math.ceil(math.log2(value))
    # Guard against rounding in log2 for exact powers of two.
    while 2 ** (exponent - 1) >= value:
        exponent -= 1
    while 2**exponent < value:
        exponent += 1
    return exponent


def debug_print(*objects: Any) -> None:
    """Print objects with rich when `MSX_DEBUG` is set."""
    # Use by doing `MSX_DEBUG=true uv run ...`
    if os.getenv(DEBUG_ENV):
        rprint(*objects)
