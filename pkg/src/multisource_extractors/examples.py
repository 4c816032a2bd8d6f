"""Pinned toy-scale extractors and parameters for demonstrations and replay.

The toy pipelines use `h = 2`, `ell = 2`, `d = 2` and small hand-written
extractors whose outputs can be followed on paper. They are XOR maps, so
much cancels: the bridge hands `x` back as the next seed, and every row of
the toy `sr` matrix is a function of `y1` alone. On uniform sources the
`iext` output is uniform and independent of `x`, yet fixed once `y` is
fixed.
"""

from collections.abc import Callable
from typing import Literal

from multisource_extractors.bits import BitString
from multisource_extractors.errors import DomainError
from multisource_extractors.extractors import FoldSRExtractor, LookupExtractor
from multisource_extractors.params import ParamConstants, ParamSet, derive_params
from multisource_extractors.pipeline import ExtractorSuite

type ToyPipeline = Literal["iext", "bext"]
type BitFunction = Callable[[BitString, BitString], BitString]


def _xor(x: BitString, s: BitString) -> BitString:
    return x ^ s


def _head_xor(x: BitString, s: BitString) -> BitString:
    return x[:2] ^ s


def _tail_xor(x: BitString, s: BitString) -> BitString:
    return x[2:4] ^ s


def _q_side(q: BitString, r: BitString) -> BitString:
    return q[2:4] ^ r


def _bridge(y: BitString, r: BitString) -> BitString:
    return (y ^ (r + r)) + y


def _doubled_xor(y: BitString, w: BitString) -> BitString:
    return y ^ (w + w)


def _swapped_xor(b: BitString, s: BitString) -> BitString:
    return (s[1:2] + s[0:1]) ^ b[:2]


# Role name -> (n, d, m, function) for each toy pipeline. The two pipelines
# differ only in the length of the X-side values.
_TOY_ROLES: dict[ToyPipeline, dict[str, tuple[int, int, int, BitFunction]]] = {
    "iext": {
        "ext_q": (8, 2, 2, _q_side),
        "ext_w": (2, 2, 2, _xor),
        "ext_bridge": (4, 2, 8, _bridge),
        "ext1": (4, 2, 2, _head_xor),
        "ext2": (2, 2, 2, _xor),
        "ext3": (4, 2, 4, _doubled_xor),
        "ext_y2": (4, 2, 2, _head_xor),
        "ext_x": (2, 2, 2, _xor),
    },
    "bext": {
        "ext_q": (8, 2, 2, _q_side),
        "ext_w": (4, 2, 2, _head_xor),
        "ext_bridge": (4, 2, 8, _bridge),
        "ext1": (4, 2, 2, _head_xor),
        "ext2": (4, 2, 2, _head_xor),
        "ext3": (4, 2, 4, _doubled_xor),
        "ext_loop": (4, 2, 2, _swapped_xor),
        "ext_final": (4, 2, 2, _head_xor),
    },
}


def toy_roles(pipeline: ToyPipeline) -> list[str]:
    """The extractor roles a toy pipeline fills."""
    return list(_TOY_ROLES[pipeline])


def toy_extractor(role: str, pipeline: ToyPipeline = "iext") -> LookupExtractor:
    """The tabulated toy extractor for one role.

    Raises:
        DomainError: If the pipeline has no such role.
    """
    if role not in _TOY_ROLES[pipeline]:
        raise DomainError(f"The toy {pipeline} pipeline has no role '{role}'.")
    n, d, m, function = _TOY_ROLES[pipeline][role]
    return LookupExtractor.from_function(n, d, m, function)


def toy_suite(pipeline: ToyPipeline = "iext") -> ExtractorSuite:
    """Every toy extractor of a pipeline in one suite.

    Examples:
        ```{python}
        import multisource_extractors as msx

        suite = msx.toy_suite("iext")
        suite.ext1.evaluate(msx.BitString.from_str("0110"), msx.BitString.zeros(2))
        ```
    """
    return ExtractorSuite(
        **{role: toy_extractor(role, pipeline) for role in toy_roles(pipeline)}
    )


def toy_basicext(pipeline: ToyPipeline = "iext") -> FoldSRExtractor:
    """XOR of `y[2:4] ^ row` over the rows; two rows for `iext`, one for `bext`."""
    inner = LookupExtractor.from_function(4, 2, 2, _tail_xor)
    return FoldSRExtractor(inner, rows=2 if pipeline == "iext" else 1)


TOY_CONSTANTS = ParamConstants(
    h=2,
    ell=2,
    d=2,
    slack=0,
    bin_constant=1 / 16,
    stop_constant=1 / 32,
    m2=2,
    m3=2,
    m_out=2,
)


def toy_params() -> ParamSet:
    """Toy parameters: two bins for up to four rows and a stop at one row.

    The parameters are far outside the range where the constraints hold, so
    they are derived in relaxed mode.
    """
    params, _ = derive_params(
        4, 2, gamma=0.5, mode="relaxed", constants=TOY_CONSTANTS
    )
    return params


def example_config_toml(pipeline: ToyPipeline = "iext", seed: int = 1) -> str:
    """A complete experiment configuration for a toy run.

    The `iext` sources are uniform. The `bext` sources are fixed blocks, since
    a block-source run over every input would meet realisations that never
    shrink the matrix and run out of blocks.

    Examples:
        ```{python}
        import multisource_extractors as msx

        print(msx.example_config_toml("iext"))
        ```
    """
    roles = "\n".join(
        f'[extractors.{role}]\nkind = "preset"\n' for role in toy_roles(pipeline)
    )
    if pipeline == "iext":
        sources = (
            '[sources.x]\nkind = "uniform"\nn = 2\n\n'
            '[sources.y1]\nkind = "uniform"\nn = 4\n\n'
            '[sources.y2]\nkind = "uniform"\nn = 4\n'
        )
    else:
        sources = (
            '[sources.x]\nkind = "point"\nvalue = "0x8/4"\nblocks = 2\n\n'
            '[sources.y]\nkind = "point"\nvalue = "0x6/4"\nblocks = 2\n'
        )
    return (
        f"seed = {seed}\n"
        "workers = 1\n\n"
        "[params]\n"
        f'pipeline = "{pipeline}"\n'
        "n = 4\nk = 2\ngamma = 0.5\n"
        'mode = "relaxed"\n'
        "h = 2\nell = 2\nd = 2\nslack = 0\n"
        "bin_constant = 0.0625\nstop_constant = 0.03125\n"
        "m2 = 2\nm3 = 2\nm_out = 2\n\n"
        f"{roles}\n"
        '[basicext]\nkind = "preset"\n\n'
        f"{sources}\n"
        "[eval]\nv_threshold = 0.2\nstrong_threshold = 0.25\n\n"
        '[output]\ndirectory = "msx-out"\n'
    )
