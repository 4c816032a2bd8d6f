"""Parameter derivation and the constraint checklist of the two extractors.

`derive_params` turns `(n, k)` and the exponents into every integer the
pipeline consumes and checks them against the inequalities the analysis
needs. `derive_block_params` does the same for the block-source extractor,
where the exponents follow from `eta`.
"""

import math
import os
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal, Self

from pydantic import BaseModel, Field, model_validator
from rich import print as rprint
from seedcase_soil import fmap, keep

from multisource_extractors.constants import DEBUG_ENV
from multisource_extractors.errors import DomainError, ExtractorError
from multisource_extractors.internals import ceil_log2, is_power_of_two
from multisource_extractors.lightest_bin import bin_count_from_params

Mode = Literal["strict", "relaxed"]
type Relation = Literal[">=", ">"]

# Relative tolerance for comparisons of real-valued powers.
_RELATIVE_TOLERANCE = 1e-12


class ParamConstants(BaseModel, frozen=True):
    """The constants the analysis leaves open, and toy-scale overrides.

    Attributes:
        C: The constant of the row-width condition `ell >= C h log n`.
        C1: The smallest allowed `h` in the lightest-bin analysis.
        bin_constant: The constant `c` of the bin count
            `gamma^2 / (c h) N^(1 - 2/sqrt(h))`.
        stop_constant: The constant `c` of the block-loop stop threshold
            `c h^3 / gamma^2`.
        slack: The additive term of the slice widths `(h + slack) ell` and
            `(h^2 + slack) ell`.
        lookahead_constant: The constant of the look-ahead bound `c t eps`.
        sr_constant: The constant of the independence bound `c b h^2 eps`.
        output_factor: `m_out = ceil(output_factor * k)`, below 1.
        seed_factor: `d = ceil(seed_factor * log2 n)`.
        h: Overrides the derived `h`.
        ell: Overrides the derived `ell`.
        d: Overrides the derived `d`.
        m2: Overrides `ceil(sqrt(k))`.
        m3: Overrides `ceil(1.9 k)`.
        m_out: Overrides `ceil(output_factor * k)`.
        log_inv_eps_prime: `log2(1 / eps')` of the lightest-bin error,
            `6 h d + 1` by default.
    """

    C: float = Field(default=8.0, gt=0)
    C1: int = Field(default=2, ge=1)
    bin_constant: float = Field(default=16.0, gt=0)
    stop_constant: float = Field(default=16.0, gt=0)
    slack: int = Field(default=12, ge=0)
    lookahead_constant: float = Field(default=4.0, gt=0)
    sr_constant: float = Field(default=4.0, gt=0)
    output_factor: float = Field(default=0.9, gt=0, lt=1)
    seed_factor: float = Field(default=1.0, gt=0)
    h: int | None = None
    ell: int | None = Field(default=None, ge=1)
    d: int | None = Field(default=None, ge=1)
    m2: int | None = Field(default=None, ge=1)
    m3: int | None = Field(default=None, ge=1)
    m_out: int | None = Field(default=None, ge=1)
    log_inv_eps_prime: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_h(self) -> Self:
        if self.h is not None and (self.h < 2 or not is_power_of_two(self.h)):
            raise ValueError(f"h must be a power of two at least 2, not {self.h}.")
        return self


class ErrorBudget(BaseModel, frozen=True):
    """Claimed and measured errors of the pipeline stages, by stage name."""

    claimed: dict[str, float] = {}
    measured: dict[str, float] = {}


class ParamSet(BaseModel, frozen=True):
    """Every scalar parameter of the three-source and block-source extractors.

    Attributes:
        n: The source length.
        k: The min-entropy.
        alpha: `k^alpha <= h < 2 k^alpha`.
        beta: `ell = ceil(k^beta)`.
        gamma: The lightest-bin error exponent.
        eta: The block-source entropy exponent, if derived from it.
        mu: `0.95 eta`, if derived from `eta`.
        h: The independence parameter.
        ell: The width of exchanged strings and SR rows.
        l: `log2(h)`.
        b: `ceil(d / l)`, the rounds of the h-wise independence step.
        d: The number of seed bits, so `N = 2^d` rows.
        N: The number of rows of the first SR matrix.
        r: The number of bins for `N` rows.
        t: The number of blocks per source the extractor consumes.
        m2: The row length after extracting from the second block.
        m3: The row length fed to the final SR extractor.
        m_out: The output length.
        first_slice_len: `(h + slack) ell`.
        bridge_len: `(h^2 + slack) ell`.
        stop_rows: `stop_constant h^3 / gamma^2`.
        log_inv_eps_prime: `log2(1 / eps')`.
        constants: The constants used.
        mode: `strict` refuses violated constraints, `relaxed` records them.
        error_budget: Claimed and measured stage errors.
    """

    n: int
    k: int
    alpha: float
    beta: float
    gamma: float
    eta: float | None = None
    mu: float | None = None
    h: int
    ell: int
    l: int  # noqa: E741
    b: int
    d: int
    N: int
    r: int
    t: int
    m2: int
    m3: int
    m_out: int
    first_slice_len: int
    bridge_len: int
    stop_rows: float
    log_inv_eps_prime: float
    constants: ParamConstants
    mode: Mode
    error_budget: ErrorBudget = ErrorBudget()


# Constraint checks ====


@dataclass(order=True, frozen=True)
class ConstraintCheck:
    """One evaluated inequality of the checklist.

    Attributes:
        name: The short name of the constraint.
        formula: The inequality in words.
        lhs: The evaluated left-hand side.
        rhs: The evaluated right-hand side.
        relation: `>=` or `>`.
        passed: Whether the inequality holds.
        margin: `log2(lhs / rhs)`; positive when there is room to spare.
        advisory: Advisory checks never fail strict mode.
    """

    name: str
    formula: str
    lhs: float
    rhs: float
    relation: Relation
    passed: bool
    margin: float
    advisory: bool = False


def check_constraint(
    name: str,
    formula: str,
    lhs: float,
    rhs: float,
    relation: Relation = ">=",
    advisory: bool = False,
) -> ConstraintCheck:
    """Evaluate `lhs relation rhs` into a `ConstraintCheck`."""
    tolerance = _RELATIVE_TOLERANCE * max(abs(lhs), abs(rhs))
    passed = lhs >= rhs - tolerance if relation == ">=" else lhs > rhs + tolerance
    if lhs > 0 and rhs > 0:
        margin = math.log2(lhs / rhs)
    else:
        margin = math.inf if lhs > rhs else -math.inf
    return ConstraintCheck(
        name=name,
        formula=formula,
        lhs=lhs,
        rhs=rhs,
        relation=relation,
        passed=passed,
        margin=margin,
        advisory=advisory,
    )


@dataclass(frozen=True)
class ConstraintReport:
    """The evaluated checklist."""

    checks: tuple[ConstraintCheck, ...]

    @property
    def violations(self) -> list[ConstraintCheck]:
        """The failed checks that are not advisory."""
        return keep(self.checks, _is_violation)

    @property
    def passed(self) -> bool:
        """Whether every non-advisory check holds."""
        return not self.violations

    def names(self) -> list[str]:
        """The names of every check, in order."""
        return fmap(self.checks, lambda check: check.name)


def _is_violation(check: ConstraintCheck) -> bool:
    return not check.passed and not check.advisory


class ConstraintError(ExtractorError):
    """Strict-mode parameters that violate the checklist."""

    def __init__(self, report: ConstraintReport) -> None:
        """Create the error from the report it carries."""
        self.report = report
        super().__init__(explain(report))


def explain(report: ConstraintReport) -> str:
    """Explain a constraint report in a human-readable format.

    Every check is listed with its evaluated sides and margin. The text
    contains rich markup; print it with `pretty_print()` to see the colours.

    Args:
        report: The report to explain.

    Returns:
        The explanation.

    Examples:
        ```{python}
        import multisource_extractors as msx

        params, report = msx.derive_params(256, 16, mode="relaxed")
        msx.pretty_print(msx.explain(report))
        ```
    """
    count = len(report.violations)
    singular_or_plural = " is" if count == 1 else "s are"
    header = (
        f"{count} constraint{singular_or_plural} violated:\n"
        if count
        else "All constraints hold:\n"
    )
    return header + "\n".join(fmap(report.checks, _explain_check))


def _explain_check(check: ConstraintCheck) -> str:
    if check.passed:
        status = "[green]pass[/green]"
    elif check.advisory:
        status = "[yellow]advisory[/yellow]"
    else:
        status = "[red]FAIL[/red]"
    return (
        f"{status} [bold]{check.name}[/bold]: {check.formula}\n"
        f"    {check.lhs:.6g} {check.relation} {check.rhs:.6g}"
        f" (margin {check.margin:+.3f} bits)"
    )


def constraint_checklist(params: ParamSet) -> ConstraintReport:
    """Evaluate the checklist of the three-source extractor for `params`."""
    p = params
    log_n = math.log2(p.n)
    eps_bits = p.log_inv_eps_prime
    slack = p.constants.slack
    return ConstraintReport(
        checks=(
            check_constraint(
                "ssr-entropy",
                "k >= 2(bh + 2)(h^2 + slack) ell",
                p.k,
                2 * (p.b * p.h + 2) * (p.h**2 + slack) * p.ell,
            ),
            check_constraint(
                "row-width", "ell >= C h log n", p.ell, p.constants.C * p.h * log_n
            ),
            check_constraint(
                "sr-entropy", "k >= (h + 1) ell", p.k, (p.h + 1) * p.ell
            ),
            check_constraint(
                "bin-error", "log(1/eps') > 6 h d", eps_bits, 6 * p.h * p.d, ">"
            ),
            check_constraint(
                "bin-entropy",
                "k > 20 h (log n + log(1/eps'))",
                p.k,
                20 * p.h * (log_n + eps_bits),
                ">",
            ),
            check_constraint(
                "bin-output",
                "ell > 10 (log n + log(1/eps'))",
                p.ell,
                10 * (log_n + eps_bits),
                ">",
            ),
            check_constraint("bin-h", "h >= C1", p.h, p.constants.C1),
            check_constraint(
                "h-window", "h < 2 k^alpha", 2 * p.k**p.alpha, p.h, ">", advisory=True
            ),
            check_constraint(
                "lookahead-entropy",
                "k > h t ell + 10 ell + 2 log(1/eps')",
                p.k,
                p.h * p.h * p.ell + 10 * p.ell + 2 * eps_bits,
                ">",
                advisory=True,
            ),
        )
    )


def _derive(
    n: int,
    k: int,
    alpha: float,
    beta: float,
    gamma: float,
    mode: Mode,
    constants: ParamConstants,
    t: int,
    eta: float | None = None,
    mu: float | None = None,
) -> ParamSet:
    if n < 2 or k < 1:
        raise DomainError(f"Need n >= 2 and k >= 1, got n={n} and k={k}.")
    if not 0 < alpha < beta < 1:
        raise DomainError(f"Need 0 < alpha < beta < 1, got {alpha} and {beta}.")
    if not 0 < gamma < 1:
        raise DomainError(f"gamma must be in (0, 1), not {gamma}.")
    c = constants
    h = c.h or max(2, 1 << ceil_log2(k**alpha))
    ell = c.ell or math.ceil(k**beta)
    d = c.d or max(1, math.ceil(c.seed_factor * math.log2(n)))
    l = ceil_log2(h)  # noqa: E741
    N = 2**d
    return ParamSet(
        n=n,
        k=k,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        eta=eta,
        mu=mu,
        h=h,
        ell=ell,
        l=l,
        b=math.ceil(d / l),
        d=d,
        N=N,
        r=bin_count_from_params(N, h, gamma, c.bin_constant),
        t=t,
        m2=c.m2 or math.ceil(math.sqrt(k)),
        m3=c.m3 or math.ceil(1.9 * k),
        m_out=c.m_out or math.ceil(c.output_factor * k),
        first_slice_len=(h + c.slack) * ell,
        bridge_len=(h**2 + c.slack) * ell,
        stop_rows=c.stop_constant * h**3 / gamma**2,
        log_inv_eps_prime=c.log_inv_eps_prime or 6 * h * d + 1,
        constants=c,
        mode=mode,
    )


def _finish(
    params: ParamSet, report: ConstraintReport
) -> tuple[ParamSet, ConstraintReport]:
    # Use by doing `MSX_DEBUG=true uv run ...`
    if os.getenv(DEBUG_ENV):
        rprint(params)
        rprint(explain(report))
    if params.mode == "strict" and not report.passed:
        raise ConstraintError(report)
    return params, report


def derive_params(
    n: int,
    k: int,
    alpha: float = 1 / 6,
    beta: float = 1 / 3,
    gamma: float = 1 / 4,
    mode: Mode = "strict",
    constants: ParamConstants = ParamConstants(),
) -> tuple[ParamSet, ConstraintReport]:
    """Derive the parameters of the three-source extractor.

    `h` is the smallest power of two at least `k^alpha` (and at least 2),
    `ell = ceil(k^beta)`, `d = ceil(log2 n)` and the bin count follows from
    `N = 2^d`. Any of these can be overridden through `constants`.

    Args:
        n: The source length.
        k: The min-entropy of each source.
        alpha: The exponent of `h`.
        beta: The exponent of `ell`.
        gamma: The lightest-bin error exponent.
        mode: `strict` raises on a violated constraint; `relaxed` returns the
            violations in the report.
        constants: The open constants and overrides.

    Returns:
        The parameters and the evaluated checklist.

    Raises:
        ConstraintError: In strict mode, if a constraint is violated.
        DomainError: If an exponent is out of range.

    Examples:
        ```{python}
        import multisource_extractors as msx

        params, report = msx.derive_params(256, 16, mode="relaxed")
        params.h, params.ell, report.passed
        ```
    """
    params = _derive(n, k, alpha, beta, gamma, mode, constants, t=2)
    return _finish(params, constraint_checklist(params))


def derive_block_params(
    n: int,
    k: int,
    eta: float,
    mode: Mode = "strict",
    constants: ParamConstants = ParamConstants(),
) -> tuple[ParamSet, ConstraintReport]:
    """Derive the parameters of the block-source extractor from `eta`.

    With `mu = 0.95 eta` the exponents are `alpha = mu / (6(2 + mu))`,
    `beta = (6 + 2 mu) / (6(2 + mu))` and `gamma = eta / 70`, and each
    source must supply `ceil(7 / eta) + 1` blocks. The checklist gains the
    loop condition `k >= 2 h ell`.

    Raises:
        ConstraintError: In strict mode, if a constraint is violated.
        DomainError: If `eta` is not positive.
    """
    if eta <= 0:
        raise DomainError(f"eta must be positive, not {eta}.")
    mu = 0.95 * eta
    params = _derive(
        n,
        k,
        alpha=mu / (6 * (2 + mu)),
        beta=(6 + 2 * mu) / (6 * (2 + mu)),
        gamma=eta / 70,
        mode=mode,
        constants=constants,
        t=math.ceil(7 / eta) + 1,
        eta=eta,
        mu=mu,
    )
    checklist = constraint_checklist(params)
    loop = check_constraint(
        "block-loop-entropy", "k >= 2 h ell", params.k, 2 * params.h * params.ell
    )
    return _finish(params, ConstraintReport(checks=checklist.checks + (loop,)))


# The asymptotic threshold ====


def proof_inequalities(
    n: int, k: float, alpha: float, beta: float, C: float = 8.0
) -> tuple[ConstraintCheck, ConstraintCheck]:
    """The two inequalities the three-source theorem reduces to.

    They are `k >= 24 k^(3 alpha + beta) log n` and
    `k^beta >= C k^alpha log n`, with exact real powers.
    """
    log_n = math.log2(n)
    return (
        check_constraint(
            "entropy-vs-rows",
            "k >= 24 k^(3 alpha + beta) log n",
            k,
            24 * k ** (3 * alpha + beta) * log_n,
        ),
        check_constraint(
            "width-vs-h", "k^beta >= C k^alpha log n", k**beta, C * k**alpha * log_n
        ),
    )


@dataclass(frozen=True)
class C0Report:
    """Where the proof inequalities start holding along a grid of `log2 n`.

    Attributes:
        grid: The tested values of `log2 n`.
        holds: Whether both inequalities hold at each grid point.
        log2_c0: The smallest grid point from which both hold at every larger
            grid point, or `None` if they fail at the last one.
    """

    grid: tuple[int, ...]
    holds: tuple[bool, ...]
    log2_c0: int | None

    @property
    def c0(self) -> int | None:
        """The threshold on `n` itself."""
        return None if self.log2_c0 is None else 2**self.log2_c0


def solve_c0(
    alpha: float = 1 / 6,
    beta: float = 1 / 3,
    C: float = 8.0,
    exponent: float = 12,
    grid: Sequence[int] = range(2, 129),
) -> C0Report:
    """Find where the proof inequalities hold for `k = log^exponent n`.

    Args:
        alpha: The exponent of `h`.
        beta: The exponent of `ell`.
        C: The constant of the row-width condition.
        exponent: The entropy is `k = (log2 n)^exponent`.
        grid: The values of `log2 n` to scan, increasing.

    Returns:
        The per-point results and the threshold.

    Examples:
        ```{python}
        import multisource_extractors as msx

        msx.solve_c0().log2_c0
        ```
    """
    points = tuple(grid)
    holds = tuple(
        all(
            check.passed
            for check in proof_inequalities(2**log_n, log_n**exponent, alpha, beta, C)
        )
        for log_n in points
    )
    log2_c0 = None
    for log_n, ok in zip(reversed(points), reversed(holds)):
        if not ok:
            break
        log2_c0 = log_n
    return C0Report(grid=points, holds=holds, log2_c0=log2_c0)
