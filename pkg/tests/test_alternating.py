from pytest import raises

from multisource_extractors.alternating import (
    AltExtConfig,
    alternating_extraction,
    la_ext,
    laext_lookahead_test,
)
from multisource_extractors.bits import BitString
from multisource_extractors.errors import DomainError
from multisource_extractors.extractors import LookupExtractor
from multisource_extractors.sources import point_mass, uniform_source


def bits(text: str) -> BitString:
    return BitString.from_str(text)


def xor_extractor() -> LookupExtractor:
    return LookupExtractor.from_function(2, 2, 2, lambda x, s: x ^ s)


def xor_config(t: int) -> AltExtConfig:
    return AltExtConfig(xor_extractor(), xor_extractor(), ell=2, t=t)


def test_alternating_extraction_transcript():
    """With XOR extractors every message is the XOR of the two others."""
    transcript = alternating_extraction(
        xor_config(3), bits("10"), bits("01"), bits("11")
    )

    assert transcript.s == (bits("11"), bits("00"), bits("11"))
    assert transcript.r == (bits("01"), bits("10"), bits("01"))


def test_la_ext_reads_the_first_message_from_y():
    assert la_ext(xor_config(2), bits("10"), bits("01")) == (bits("11"), bits("00"))


def test_la_ext_pads_short_q_sides():
    ext_q = LookupExtractor.from_function(4, 2, 2, lambda q, r: q[2:4] ^ r)
    cfg = AltExtConfig(ext_q, xor_extractor(), ell=2, t=2)

    assert la_ext(cfg, bits("10"), bits("01")) == (bits("11"), bits("01"))


def test_la_ext_rejects_bad_lengths():
    cfg = xor_config(2)

    with raises(DomainError):
        la_ext(cfg, bits("10"), bits("0"))
    with raises(DomainError):
        la_ext(cfg, bits("10"), bits("011"))
    with raises(DomainError):
        alternating_extraction(cfg, bits("10"), bits("01"), bits("1"))


def test_config_needs_matching_widths():
    wide = LookupExtractor.from_function(2, 2, 1, lambda x, s: x[0:1])

    with raises(DomainError):
        AltExtConfig(wide, xor_extractor(), ell=2, t=1)
    with raises(DomainError):
        AltExtConfig(xor_extractor(), xor_extractor(), ell=2, t=0)


def test_uniform_x_makes_the_first_round_uniform():
    report = laext_lookahead_test(
        xor_config(2), uniform_source(2), uniform_source(2), [lambda y: y], 0, 0.0
    )

    assert report.distance == 0.0
    assert report.passed


def test_fixed_x_reveals_the_first_round():
    """With `x` fixed the first output is `y` itself."""
    report = laext_lookahead_test(
        xor_config(1), point_mass(bits("00")), uniform_source(2), [lambda y: y], 0, 0.1
    )

    assert report.distance == 0.75
    assert report.bound == 0.4
    assert not report.passed


def test_lookahead_rejects_bad_rounds_and_families():
    cfg = xor_config(2)

    with raises(DomainError):
        laext_lookahead_test(cfg, uniform_source(2), uniform_source(2), [], 0, 0.1)
    with raises(DomainError):
        laext_lookahead_test(
            cfg, uniform_source(2), uniform_source(2), [lambda y: y], 2, 0.1
        )
