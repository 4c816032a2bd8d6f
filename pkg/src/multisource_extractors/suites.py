"""Named evaluation suites run by `msx eval`.

Each suite measures one property of the components at desk scale and
returns metric rows. The thresholds are the ones the properties promise,
computed from measured extractor errors where a bound depends on them.
"""

import os
from collections.abc import Callable, Sequence
from functools import cached_property

import numpy as np
from rich import print as rprint
from seedcase_soil import flat_fmap, fmap

from multisource_extractors.alternating import AltExtConfig, laext_lookahead_test
from multisource_extractors.bits import BitString
from multisource_extractors.config import SUITE_NAMES, SuiteName
from multisource_extractors.constants import DEBUG_ENV, ENUMERATION_BUDGET
from multisource_extractors.errors import DomainError
from multisource_extractors.evaluation import (
    distance_from_uniform,
    mc_distance_upper,
    push_forward,
    strong_distance,
)
from multisource_extractors.extractors import (
    HashedExtractor,
    LookupExtractor,
    measure_worst_flat_error,
    search_ideal_extractor,
    toeplitz_extractor,
    verify_bad_set_bound,
)
from multisource_extractors.internals import derive_seed, make_rng
from multisource_extractors.metrics import Metric
from multisource_extractors.params import solve_c0
from multisource_extractors.sources import (
    adversarial_flat_battery,
    min_entropy,
    random_flat_source,
    uniform_source,
)
from multisource_extractors.srgen import row_goodness_test

# Shapes of the suites.
LHL_SHAPE = (12, 6, 2)
LHL_SOURCES = 200
SEARCH_SHAPE = (4, 2, 1, 2)
SEARCH_TARGET = 0.25
MC_SAMPLES = 20_000
MC_MISS_RATE = 0.1


class SuiteRunner:
    """Runs suites with shared settings and shared intermediate results.

    The searched `(4, 2, 1, 2)` table is computed once and used by both the
    `ideal-search` and the `bad-set` suites.

    Args:
        seed: The seed of every random choice.
        fixtures: The number of random fixtures in the `mc-agreement` suite.
        budget: The enumeration budget.
        workers: Processes for searches and flat-source enumerations.
        trials: Candidate tables per search.
    """

    def __init__(
        self,
        seed: int,
        fixtures: int = 20,
        budget: int = ENUMERATION_BUDGET,
        workers: int = 1,
        trials: int = 500,
    ) -> None:
        """Store the settings."""
        self.seed = seed
        self.fixtures = fixtures
        self.budget = budget
        self.workers = workers
        self.trials = trials

    def _rng(self, suite: SuiteName) -> np.random.Generator:
        # Each suite gets its own stream so suites can run in any order.
        return make_rng((self.seed + SUITE_NAMES.index(suite)) % 2**64)

    def run(self, suites: Sequence[SuiteName]) -> list[Metric]:
        """Run the named suites in order.

        Raises:
            DomainError: If a suite name is unknown.
        """
        unknown = [name for name in suites if name not in SUITE_NAMES]
        if unknown:
            raise DomainError(
                f"Unknown suites {unknown}; the suites are {', '.join(SUITE_NAMES)}."
            )
        return flat_fmap(suites, self.run_one)

    def run_one(self, suite: SuiteName) -> list[Metric]:
        """Run one suite."""
        runners: dict[SuiteName, Callable[[], list[Metric]]] = {
            "toeplitz-lhl": self.toeplitz_lhl,
            "ideal-search": self.ideal_search,
            "bad-set": self.bad_set,
            "row-goodness": self.row_goodness,
            "lookahead": self.lookahead,
            "mc-agreement": self.mc_agreement,
            "param-scan": self.param_scan,
        }
        metrics = runners[suite]()
        # Use by doing `MSX_DEBUG=true uv run ...`
        if os.getenv(DEBUG_ENV):
            rprint(suite, metrics)
        return metrics

    def toeplitz_lhl(self) -> list[Metric]:
        """Toeplitz hashing against the leftover hash lemma bound.

        Every source of an adversarial flat battery must give a strong
        distance of at most `2**(-(k - m) / 2)`.
        """
        n, k, m = LHL_SHAPE
        ext = toeplitz_extractor(n, m)
        battery = adversarial_flat_battery(n, k, LHL_SOURCES, self._rng("toeplitz-lhl"))
        distances = fmap(battery, lambda source: strong_distance(ext, source))
        return [
            Metric.of(
                "toeplitz-lhl",
                f"n{n}-k{k}-m{m}",
                max(distances),
                ext.claimed_error(k),
                sources=len(battery),
                distances=distances,
            )
        ]

    @cached_property
    def searched_table(self) -> LookupExtractor:
        """The ideal `(n, d, m) = (4, 2, 1)` table for `k = 2`."""
        n, d, m, k = SEARCH_SHAPE
        return search_ideal_extractor(
            n,
            d,
            m,
            k,
            SEARCH_TARGET,
            self.trials,
            self._rng("ideal-search"),
            workers=self.workers,
            budget=self.budget,
        )

    def ideal_search(self) -> list[Metric]:
        """Re-verify the searched table against every flat source."""
        table = self.searched_table
        report = measure_worst_flat_error(
            table, SEARCH_SHAPE[3], self.budget, self.workers
        )
        return [
            Metric.of(
                "ideal-search",
                "n4-d2-m1-k2",
                report.worst,
                SEARCH_TARGET,
                sources=report.sources,
                claimed=table.measured_eps,
            )
        ]

    def bad_set(self) -> list[Metric]:
        """No output set is over-hit by more than `2**k` inputs."""
        table = self.searched_table
        k = SEARCH_SHAPE[3]
        report = verify_bad_set_bound(table, k, table.measured_eps or 0.0, self.budget)
        return [
            Metric.of(
                "bad-set",
                "n4-d2-m1-k2",
                report.max_count,
                2**k,
                worst_set=list(report.worst_set),
                counts=list(report.counts),
            )
        ]

    def row_goodness(self) -> list[Metric]:
        """The mass of `y` fixings with too many far rows.

        `ext1` is the searched `(4, 2, 1)` table with worst flat error
        `eps1` at `k1 = 2` and `Y` is uniform on 4 bits, so at most
        `2**(k1 - 4)` of the mass may fail. `ext2` returns `x` on seed 1
        and zero on seed 0, so every row seeded by a zero output is far.
        """
        ext1 = self.searched_table
        k1 = SEARCH_SHAPE[3]
        ext2 = LookupExtractor(2, 1, 2, np.outer(np.arange(4), [0, 1]))
        source_x = uniform_source(2)
        source_y = uniform_source(4)
        eps1 = ext1.measured_eps or 0.0
        eps2 = strong_distance(ext2, source_x, self.budget)
        report = row_goodness_test(
            ext1, ext2, source_x, source_y, eps1, eps2, self.budget
        )
        return [
            Metric.of(
                "row-goodness",
                "y4-k1-2",
                1 - report.passing_mass,
                2 ** (k1 - min_entropy(source_y)),
                eps1=eps1,
                eps2=eps2,
            )
        ]

    def lookahead(self) -> list[Metric]:
        """The look-ahead distance of every round for two correlated parties.

        Both one-bit extractors are searched at `(3, 1, 1)` for `k = 2`. The
        per-round bound is `4 t eps` with `eps` the larger measured error. A
        one-bit seed cannot get the error below `1/4` when `k < n`, so that
        bound is at least 2 here; the `lookahead-first-round` row holds the
        first round to the error of `ext_w` alone, which is below 1.
        """
        rng = self._rng("lookahead")
        ext_q, ext_w = (
            search_ideal_extractor(
                3,
                1,
                1,
                2,
                SEARCH_TARGET,
                self.trials,
                rng,
                workers=self.workers,
                budget=self.budget,
            )
            for _ in range(2)
        )
        cfg = AltExtConfig(ext_q, ext_w, ell=1, t=2)
        eps = max(ext_q.measured_eps or 0.0, ext_w.measured_eps or 0.0)
        shift = BitString(3, 0b101)
        family: list[Callable[[BitString], BitString]] = [
            lambda sigma: sigma,
            lambda sigma: sigma ^ shift,
        ]
        reports = [
            laext_lookahead_test(
                cfg, uniform_source(3), uniform_source(3), family, j, eps
            )
            for j in range(cfg.t)
        ]
        rounds = fmap(
            reports,
            lambda report: Metric.of(
                "lookahead", f"round-{report.j}", report.distance, report.bound
            ),
        )
        first = Metric.of(
            "lookahead-first-round",
            "round-0",
            reports[0].distance,
            ext_w.measured_eps or 0.0,
            eps_q=ext_q.measured_eps,
            eps_w=ext_w.measured_eps,
        )
        return [*rounds, first]

    def mc_agreement(self) -> list[Metric]:
        """Monte Carlo estimates against exact distances on random fixtures.

        Each fixture is a hashed `(6, 2, 3)` extractor on a random flat
        `(6, 3)` source. At most a tenth of the estimates may miss the exact
        value by more than their interval half-width.
        """
        rng = self._rng("mc-agreement")
        metrics = []
        for index in range(self.fixtures):
            ext = HashedExtractor(6, 2, 3, key=derive_seed(rng))
            sources = [random_flat_source(6, 3, rng), uniform_source(2)]
            exact = distance_from_uniform(push_forward(ext.evaluate, sources))
            estimate = mc_distance_upper(ext.evaluate, sources, MC_SAMPLES, rng)
            metrics.append(
                Metric(
                    metric="mc-agreement",
                    fixture=f"fixture-{index}",
                    measured=abs(estimate.estimate - exact),
                    threshold=estimate.half_width,
                    passed=abs(estimate.estimate - exact) <= estimate.half_width,
                    biased_up=True,
                    detail={"exact": exact, "estimate": estimate.estimate},
                )
            )
        misses = sum(not metric.passed for metric in metrics)
        metrics.append(
            Metric.of(
                "mc-agreement-misses", "all", misses / self.fixtures, MC_MISS_RATE
            )
        )
        return metrics

    def param_scan(self) -> list[Metric]:
        """The proof inequalities hold at every scanned `n` from the threshold on."""
        report = solve_c0()
        log2_c0 = report.log2_c0
        failures = [
            log_n
            for log_n, holds in zip(report.grid, report.holds)
            if log2_c0 is not None and log_n >= log2_c0 and not holds
        ]
        violations = sum(not holds for holds in report.holds)
        return [
            Metric(
                metric="param-scan",
                fixture="alpha1/6-beta1/3",
                measured=len(failures),
                threshold=0,
                passed=log2_c0 is not None and not failures,
                detail={
                    "log2_c0": log2_c0,
                    "violations": violations,
                    "grid_max": max(report.grid),
                },
            )
        ]


def run_suites(
    suites: Sequence[SuiteName],
    seed: int,
    fixtures: int = 20,
    budget: int = ENUMERATION_BUDGET,
    workers: int = 1,
) -> list[Metric]:
    """Run the named suites and collect their metrics.

    Examples:
        ```{python}
        import multisource_extractors as msx

        msx.run_suites(["param-scan"], seed=1)
        ```
    """
    return SuiteRunner(seed, fixtures, budget, workers).run(suites)

