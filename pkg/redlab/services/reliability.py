"""Closed-form, enumerated and Monte Carlo reliability of NMR and MMR systems.

R is the probability that one function unit works; units fail independently
and the voter is fault-free. A reliability polynomial with coefficients
``c_0..c_U`` evaluates to ``sum(c_f * R**(U - f) * (1 - R)**f)``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from math import comb, sqrt
from time import perf_counter
from typing import TypeAlias

import numpy as np

from redlab.core.config import settings
from redlab.core.errors import InvalidParameterError
from redlab.core.logging import get_logger
from redlab.core.metrics import record_monte_carlo_trials
from redlab.core.parallel import chunk_ranges, parallel_map
from redlab.services.fault_injection import FaultModel, masked_counts_by_cardinality, masked_rows
from redlab.services.voters import MAJORITY_CLUSTER_SIZE, RedundancyScheme

logger = get_logger(__name__)

Probability: TypeAlias = float | np.ndarray

# 2-of-3 majority cluster by fault count: no fault, one of three, never two or three.
_MAJORITY_CLUSTER_COEFFICIENTS = (1, 3, 0, 0)


@dataclass(frozen=True)
class ReliabilityPolynomial:
    unit_count: int
    coefficients: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", tuple(int(c) for c in self.coefficients))
        if len(self.coefficients) != self.unit_count + 1:
            raise InvalidParameterError(
                f"expected {self.unit_count + 1} coefficients, got {len(self.coefficients)}",
                details={"units": self.unit_count},
            )
        if self.coefficients[0] != 1:
            raise InvalidParameterError("the fault-free coefficient must be 1")
        for f, c in enumerate(self.coefficients):
            if not 0 <= c <= comb(self.unit_count, f):
                raise InvalidParameterError(
                    f"coefficient c_{f}={c} outside 0..C({self.unit_count},{f})", details={"f": f, "c": c}
                )

    def evaluate(self, r: Probability) -> Probability:
        r = _check_probability(r)
        u = self.unit_count
        total = sum(c * r ** (u - f) * (1 - r) ** f for f, c in enumerate(self.coefficients) if c)
        return float(total) if np.ndim(total) == 0 else total


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    trials: int
    std_error: float
    seed: int


@dataclass(frozen=True)
class PairDelta:
    nmr: RedundancyScheme
    mmr: RedundancyScheme
    mean_percent: float
    series: tuple[float, ...]


@dataclass(frozen=True)
class DeltaSweep:
    grid: tuple[float, ...]
    pairs: tuple[PairDelta, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class SweepPoint:
    scheme: RedundancyScheme
    r: float
    analytic: float
    monte_carlo: MonteCarloEstimate | None = None


def _check_probability(r: Probability) -> Probability:
    values = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(values)) or np.any(values < 0.0) or np.any(values > 1.0):
        raise InvalidParameterError("reliability must lie in [0, 1]", details={"r": values.tolist()})
    return float(values) if values.ndim == 0 else values


def nmr_reliability(n: int, r: Probability) -> Probability:
    """At least (n + 1) / 2 of n units working."""
    RedundancyScheme.nmr(n)
    r = _check_probability(r)
    total = sum(comb(n, i) * r**i * (1 - r) ** (n - i) for i in range((n + 1) // 2, n + 1))
    return float(total) if np.ndim(total) == 0 else total


def mmr_reliability(k: int, r: Probability, *, allow_small: bool = False) -> Probability:
    """Two of the three majority units and at least one of the k - 3 minority units working."""
    RedundancyScheme.mmr(k, allow_small=allow_small)
    r = _check_probability(r)
    majority = 3 * r**2 * (1 - r) + r**3
    minority = 1 - (1 - r) ** (k - MAJORITY_CLUSTER_SIZE)
    total = majority * minority
    return float(total) if np.ndim(total) == 0 else total


def closed_form_reliability(scheme: RedundancyScheme, r: Probability) -> Probability:
    if scheme.is_mmr:
        return mmr_reliability(scheme.units, r, allow_small=scheme.allow_small)
    return nmr_reliability(scheme.units, r)


def _convolve(left: Sequence[int], right: Sequence[int]) -> list[int]:
    product = [0] * (len(left) + len(right) - 1)
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            product[i + j] += a * b
    return product


def closed_form_coefficients(scheme: RedundancyScheme) -> list[int]:
    """Masked-pattern counts implied by the closed forms, as exact integers."""
    u = scheme.units
    if not scheme.is_mmr:
        return [comb(u, f) if f <= (u - 1) // 2 else 0 for f in range(u + 1)]
    m = u - MAJORITY_CLUSTER_SIZE
    minority = [comb(m, f) for f in range(m)] + [0]
    return _convolve(_MAJORITY_CLUSTER_COEFFICIENTS, minority)


def scheme_polynomial(
    scheme: RedundancyScheme,
    *,
    cap: int | None = None,
    threads: int | None = None,
) -> ReliabilityPolynomial:
    """Polynomial whose coefficients come from exhaustive fault enumeration under inversion."""
    counts = masked_counts_by_cardinality(scheme, FaultModel.INVERSION, cap=cap, threads=threads)
    return ReliabilityPolynomial(scheme.unit_count, tuple(counts))


def monte_carlo_reliability(
    scheme: RedundancyScheme,
    r: float,
    trials: int,
    seed: int,
    *,
    threads: int | None = None,
    stream: Sequence[int] = (),
) -> MonteCarloEstimate:
    """Fraction of random fault draws that the scheme masks.

    Trials are split into fixed-size chunks; chunk ``i`` draws from a Philox
    generator seeded with ``SeedSequence(seed, spawn_key=(*stream, i))``, so the
    estimate depends only on ``seed``, ``stream`` and ``trials``.
    """
    r = float(_check_probability(r))
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1", details={"trials": trials})
    if seed < 0:
        raise InvalidParameterError("seed must be a non-negative integer", details={"seed": seed})

    started = perf_counter()
    failure = 1.0 - r
    units = scheme.unit_count
    chunks = chunk_ranges(trials, settings.mc_chunk_trials)

    def run(indexed: tuple[int, tuple[int, int]]) -> int:
        index, (start, stop) = indexed
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(*stream, index))))
        faulty = rng.random((stop - start, units)) < failure
        return int(masked_rows(scheme, FaultModel.INVERSION, faulty).sum())

    masked = sum(parallel_map(run, list(enumerate(chunks)), threads=threads))
    estimate = masked / trials
    std_error = sqrt(estimate * (1.0 - estimate) / trials)

    record_monte_carlo_trials(scheme=str(scheme), count=trials)
    logger.info(
        "reliability.monte_carlo.completed",
        extra={
            "scheme": str(scheme),
            "r": r,
            "trials": trials,
            "seed": seed,
            "estimate": estimate,
            "duration_ms": round((perf_counter() - started) * 1000, 3),
        },
    )
    return MonteCarloEstimate(estimate=estimate, trials=trials, std_error=std_error, seed=seed)


def r_grid(r_min: float, r_max: float, steps: int) -> np.ndarray:
    if not 0.0 <= r_min <= r_max <= 1.0:
        raise InvalidParameterError(
            f"need 0 <= r_min <= r_max <= 1, got {r_min}..{r_max}", details={"r_min": r_min, "r_max": r_max}
        )
    if steps < 2:
        raise InvalidParameterError("steps must be >= 2", details={"steps": steps})
    return np.linspace(r_min, r_max, steps)


def paired_schemes(schemes: Sequence[RedundancyScheme]) -> list[tuple[RedundancyScheme, RedundancyScheme]]:
    """(NMR, MMR) pairs among ``schemes`` with equal best-placement tolerance, in MMR order."""
    present = {str(scheme) for scheme in schemes}
    pairs = []
    for scheme in schemes:
        if scheme.is_mmr and str(scheme.counterpart()) in present:
            pairs.append((scheme.counterpart(), scheme))
    return pairs


def percent_delta(nmr: np.ndarray, mmr: np.ndarray) -> np.ndarray:
    nmr = np.asarray(nmr, dtype=float)
    mmr = np.asarray(mmr, dtype=float)
    safe = np.where(nmr > 0, nmr, 1.0)
    return np.where(nmr > 0, 100.0 * (nmr - mmr) / safe, 0.0)


def reliability_delta_sweep(
    pairs: Sequence[tuple[RedundancyScheme, RedundancyScheme]],
    r_min: float,
    r_max: float,
    steps: int,
) -> DeltaSweep:
    """Mean of ``100 * (R_NMR - R_MMR) / R_NMR`` over a uniform R grid, per pair."""
    grid = r_grid(r_min, r_max, steps)
    results = []
    for nmr, mmr in pairs:
        if nmr.is_mmr or not mmr.is_mmr:
            raise InvalidParameterError(f"pair ({nmr}, {mmr}) must be (NMR, MMR)")
        series = percent_delta(closed_form_reliability(nmr, grid), closed_form_reliability(mmr, grid))
        results.append(
            PairDelta(nmr=nmr, mmr=mmr, mean_percent=float(series.mean()), series=tuple(float(x) for x in series))
        )
    return DeltaSweep(grid=tuple(float(r) for r in grid), pairs=tuple(results))


def sweep_rows(
    schemes: Sequence[RedundancyScheme],
    grid: Sequence[float],
    *,
    trials: int = 0,
    seed: int = 0,
    threads: int | None = None,
) -> list[SweepPoint]:
    """Analytic reliability per scheme and grid point, plus a Monte Carlo estimate when ``trials`` > 0."""
    points = []
    for scheme_index, scheme in enumerate(schemes):
        analytic = np.atleast_1d(closed_form_reliability(scheme, np.asarray(grid, dtype=float)))
        for point_index, r in enumerate(grid):
            estimate = None
            if trials > 0:
                estimate = monte_carlo_reliability(
                    scheme, float(r), trials, seed, threads=threads, stream=(scheme_index, point_index)
                )
            points.append(
                SweepPoint(scheme=scheme, r=float(r), analytic=float(analytic[point_index]), monte_carlo=estimate)
            )
    return points
