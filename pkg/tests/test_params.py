import math

from pydantic import ValidationError
from pytest import mark, raises

from multisource_extractors.errors import DomainError
from multisource_extractors.examples import TOY_CONSTANTS, toy_params
from multisource_extractors.params import (
    ConstraintError,
    ConstraintReport,
    ParamConstants,
    check_constraint,
    derive_block_params,
    derive_params,
    explain,
    proof_inequalities,
    solve_c0,
)

CHECKLIST = [
    "ssr-entropy",
    "row-width",
    "sr-entropy",
    "bin-error",
    "bin-entropy",
    "bin-output",
    "bin-h",
    "h-window",
    "lookahead-entropy",
]


def test_toy_params():
    params = toy_params()

    assert (params.h, params.ell, params.d, params.l, params.b) == (2, 2, 2, 1, 2)
    assert (params.N, params.r, params.stop_rows) == (4, 2, 1.0)
    assert (params.first_slice_len, params.bridge_len) == (4, 8)
    assert (params.m2, params.m3, params.m_out) == (2, 2, 2)


def test_strict_mode_refuses_toy_params():
    with raises(ConstraintError) as error:
        derive_params(4, 2, gamma=0.5, constants=TOY_CONSTANTS)

    assert not error.value.report.passed
    assert "ssr-entropy" in str(error.value)


def test_relaxed_mode_returns_the_violations():
    _, report = derive_params(4, 2, gamma=0.5, mode="relaxed", constants=TOY_CONSTANTS)

    assert report.names() == CHECKLIST
    assert not report.passed
    assert all(not check.advisory for check in report.violations)


def test_default_derivation():
    params, _ = derive_params(256, 16, mode="relaxed")

    assert params.h == 2
    assert params.ell == 3
    assert (params.d, params.N, params.l, params.b) == (8, 256, 1, 8)
    assert params.m_out == math.ceil(0.9 * 16)
    assert params.log_inv_eps_prime == 6 * 2 * 8 + 1


def test_overrides_replace_derived_values():
    params, _ = derive_params(
        256, 16, mode="relaxed", constants=ParamConstants(h=4, ell=5, d=3)
    )

    assert (params.h, params.ell, params.d, params.N) == (4, 5, 3, 8)


def test_constants_need_a_power_of_two_h():
    with raises(ValidationError):
        ParamConstants(h=3)


@mark.parametrize(
    "kwargs",
    [
        {"n": 1, "k": 2},
        {"n": 16, "k": 0},
        {"n": 16, "k": 4, "alpha": 0.5, "beta": 0.4},
        {"n": 16, "k": 4, "gamma": 1.0},
    ],
)
def test_derivation_rejects_out_of_range_inputs(kwargs):
    with raises(DomainError):
        derive_params(mode="relaxed", **kwargs)


# Block-source parameters ====


def test_block_params_follow_eta():
    params, report = derive_block_params(256, 16, eta=0.5, mode="relaxed")
    mu = 0.95 * 0.5

    assert params.t == 15
    assert params.mu == mu
    assert params.alpha == mu / (6 * (2 + mu))
    assert params.gamma == 0.5 / 70
    assert report.names() == [*CHECKLIST, "block-loop-entropy"]


def test_block_params_need_a_positive_eta():
    with raises(DomainError):
        derive_block_params(256, 16, eta=0.0, mode="relaxed")


# Checks ====


def test_check_margin_is_in_bits():
    check = check_constraint("double", "4 >= 2", 4, 2)

    assert check.passed
    assert check.margin == 1.0


def test_strict_relation_fails_on_equality():
    assert check_constraint("equal", "2 >= 2", 2, 2).passed
    assert not check_constraint("equal", "2 > 2", 2, 2, ">").passed


def test_advisory_checks_never_fail_a_report():
    report = ConstraintReport(
        checks=(check_constraint("soft", "1 >= 2", 1, 2, advisory=True),)
    )

    assert report.passed
    assert report.violations == []


def test_explain_counts_violations():
    report = ConstraintReport(
        checks=(
            check_constraint("ok", "2 >= 1", 2, 1),
            check_constraint("bad", "1 >= 2", 1, 2),
        )
    )

    text = explain(report)

    assert text.startswith("1 constraint is violated:")
    assert "[red]FAIL[/red] [bold]bad[/bold]" in text
    assert "[green]pass[/green] [bold]ok[/bold]" in text


# The asymptotic threshold ====


def test_proof_inequalities_at_the_threshold():
    """With `k = log^12 n` both hold from `log n = 24` on."""
    assert all(
        check.passed for check in proof_inequalities(2**24, 24.0**12, 1 / 6, 1 / 3)
    )
    assert not all(
        check.passed for check in proof_inequalities(2**23, 23.0**12, 1 / 6, 1 / 3)
    )


def test_solve_c0():
    report = solve_c0()

    assert report.log2_c0 == 24
    assert report.c0 == 2**24
    assert report.holds[report.grid.index(24) :] == (True,) * (128 - 24 + 1)


def test_solve_c0_without_a_threshold():
    report = solve_c0(C=1e9, grid=range(2, 10))

    assert report.log2_c0 is None
    assert report.c0 is None
