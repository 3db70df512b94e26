"""Function-unit fault injection and fault-masking analysis.

A fault pattern names the faulty unit copies (1-based). A faulty copy has its
whole output word corrupted by the fault model before voting. Pattern indices
used by the enumeration engines set bit ``i - 1`` when unit ``i`` is faulty.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
from math import comb
from time import perf_counter

import numpy as np

from redlab.core.config import settings
from redlab.core.errors import InvalidPatternError, TooLargeError
from redlab.core.logging import get_logger
from redlab.core.metrics import record_fault_patterns, record_vectors_simulated
from redlab.core.parallel import chunk_ranges, parallel_map
from redlab.services.netlist import (
    Netlist,
    NetOverride,
    evaluate_batch,
    input_vectors,
    sampled_vector_indices,
    vector_from_index,
    vectors_from_indices,
)
from redlab.services.voters import (
    RedundancyScheme,
    build_redundant_system,
    system_namespace,
    unit_output_tap,
    vote,
    vote_array,
)

logger = get_logger(__name__)


class FaultModel(StrEnum):
    INVERSION = "inversion"
    STUCK_AT_0 = "sa0"
    STUCK_AT_1 = "sa1"

    def apply_word(self, word: int, width: int) -> int:
        full = (1 << width) - 1
        if self is FaultModel.INVERSION:
            return (word ^ full) & full
        if self is FaultModel.STUCK_AT_0:
            return 0
        return full

    def corrupt_array(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=bool)
        if self is FaultModel.INVERSION:
            return ~values
        if self is FaultModel.STUCK_AT_0:
            return np.zeros_like(values)
        return np.ones_like(values)


@dataclass(frozen=True)
class FaultPattern:
    faulty: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "faulty", frozenset(self.faulty))
        if any(index < 1 for index in self.faulty):
            raise InvalidPatternError(
                f"unit indices are 1-based, got {sorted(self.faulty)}", details={"faulty": sorted(self.faulty)}
            )

    @classmethod
    def of(cls, *indices: int) -> FaultPattern:
        return cls(frozenset(indices))

    @classmethod
    def parse(cls, text: str | None) -> FaultPattern:
        """Parse ``"1,4"``; an empty string is the fault-free pattern."""
        tokens = [token.strip() for token in (text or "").split(",") if token.strip()]
        indices: list[int] = []
        for token in tokens:
            if not token.isdigit():
                raise InvalidPatternError(f"invalid unit index {token!r} in fault pattern", details={"pattern": text})
            indices.append(int(token))
        if len(set(indices)) != len(indices):
            raise InvalidPatternError(f"fault pattern {text!r} repeats a unit", details={"pattern": text})
        return cls(frozenset(indices))

    @classmethod
    def from_mask(cls, mask: int) -> FaultPattern:
        return cls(frozenset(bit + 1 for bit in range(mask.bit_length()) if (mask >> bit) & 1))

    @property
    def cardinality(self) -> int:
        return len(self.faulty)

    @property
    def mask(self) -> int:
        return sum(1 << (index - 1) for index in self.faulty)

    def validate_for(self, unit_count: int) -> FaultPattern:
        out_of_range = sorted(index for index in self.faulty if index > unit_count)
        if out_of_range:
            raise InvalidPatternError(
                f"fault pattern names units {out_of_range} but the scheme has {unit_count}",
                details={"out_of_range": out_of_range, "units": unit_count},
            )
        return self

    def __str__(self) -> str:
        return ",".join(str(index) for index in sorted(self.faulty))


@dataclass(frozen=True)
class ToleranceReport:
    scheme: str
    model: FaultModel
    max_tolerable: int
    guaranteed: int
    claimed: int


@dataclass(frozen=True)
class MaskingCheckResult:
    masked: bool
    failing_vector: tuple[int, ...] | None
    vectors_checked: int
    sampled: bool = False


def apply_faults(
    correct_outputs: Sequence[int],
    pattern: FaultPattern,
    model: FaultModel,
    *,
    width: int = 1,
) -> list[int]:
    pattern.validate_for(len(correct_outputs))
    return [
        model.apply_word(word, width) if index in pattern.faulty else word
        for index, word in enumerate(correct_outputs, start=1)
    ]


def is_masked(scheme: RedundancyScheme, pattern: FaultPattern, model: FaultModel = FaultModel.INVERSION) -> bool:
    """Behavioral check: the vote recovers both logic values despite ``pattern``."""
    pattern.validate_for(scheme.unit_count)
    return all(
        vote(scheme, apply_faults([value] * scheme.unit_count, pattern, model)) == value for value in (0, 1)
    )


def faulty_matrix(unit_count: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the pattern enumeration as a ``patterns x units`` bool array."""
    indices = np.arange(start, stop, dtype=np.int64)
    return ((indices[:, None] >> np.arange(unit_count, dtype=np.int64)) & 1).astype(bool)


def masked_rows(scheme: RedundancyScheme, model: FaultModel, faulty: np.ndarray) -> np.ndarray:
    """Vectorized :func:`is_masked` over the rows of a ``patterns x units`` fault matrix."""
    faulty = np.asarray(faulty, dtype=bool)
    masked = np.ones(faulty.shape[0], dtype=bool)
    for value in (False, True):
        correct = np.full(faulty.shape, value)
        outputs = np.where(faulty, model.corrupt_array(correct), correct)
        masked &= vote_array(scheme, outputs) == value
    return masked


def _check_unit_cap(scheme: RedundancyScheme, cap: int | None) -> None:
    cap = settings.enumeration_unit_cap if cap is None else cap
    if scheme.unit_count > cap:
        raise TooLargeError(
            f"{scheme.label} has {scheme.unit_count} units, above the enumeration cap of {cap}; "
            "use Monte Carlo sampling instead",
            size=scheme.unit_count,
            cap=cap,
        )


def masking_table(
    scheme: RedundancyScheme,
    model: FaultModel = FaultModel.INVERSION,
    *,
    cap: int | None = None,
    threads: int | None = None,
) -> np.ndarray:
    """``table[mask]`` is whether the pattern encoded by ``mask`` is masked, for all 2^U masks."""
    _check_unit_cap(scheme, cap)
    total = 1 << scheme.unit_count

    def chunk(bounds: tuple[int, int]) -> np.ndarray:
        return masked_rows(scheme, model, faulty_matrix(scheme.unit_count, *bounds))

    parts = parallel_map(chunk, chunk_ranges(total, settings.pattern_chunk_size), threads=threads)
    record_fault_patterns(scheme=str(scheme), model=model.value, count=total)
    return np.concatenate(parts)


def masked_counts_by_cardinality(
    scheme: RedundancyScheme,
    model: FaultModel = FaultModel.INVERSION,
    *,
    cap: int | None = None,
    threads: int | None = None,
) -> list[int]:
    started = perf_counter()
    table = masking_table(scheme, model, cap=cap, threads=threads)
    cardinality = np.bitwise_count(np.arange(table.size, dtype=np.uint64))
    counts = np.bincount(cardinality[table], minlength=scheme.unit_count + 1)

    logger.info(
        "fault_injection.counts.completed",
        extra={
            "scheme": str(scheme),
            "model": model.value,
            "patterns": int(table.size),
            "masked": int(table.sum()),
            "duration_ms": round((perf_counter() - started) * 1000, 3),
        },
    )
    return [int(count) for count in counts]


def max_tolerable_from_counts(counts: Sequence[int]) -> int:
    return max(f for f, count in enumerate(counts) if count > 0)


def guaranteed_from_counts(counts: Sequence[int]) -> int:
    unit_count = len(counts) - 1
    tolerance = -1
    for f, count in enumerate(counts):
        if count != comb(unit_count, f):
            break
        tolerance = f
    return tolerance


def max_tolerable_faults(
    scheme: RedundancyScheme, model: FaultModel = FaultModel.INVERSION, **kwargs: int | None
) -> int:
    """Best-placement maximum: the largest fault count some pattern of which is masked."""
    return max_tolerable_from_counts(masked_counts_by_cardinality(scheme, model, **kwargs))


def guaranteed_tolerance(
    scheme: RedundancyScheme, model: FaultModel = FaultModel.INVERSION, **kwargs: int | None
) -> int:
    """Any-placement guarantee: every pattern up to this many faults is masked."""
    return guaranteed_from_counts(masked_counts_by_cardinality(scheme, model, **kwargs))


def tolerance_report(
    scheme: RedundancyScheme,
    model: FaultModel = FaultModel.INVERSION,
    *,
    cap: int | None = None,
    threads: int | None = None,
) -> ToleranceReport:
    counts = masked_counts_by_cardinality(scheme, model, cap=cap, threads=threads)
    return ToleranceReport(
        scheme=str(scheme),
        model=model,
        max_tolerable=max_tolerable_from_counts(counts),
        guaranteed=guaranteed_from_counts(counts),
        claimed=scheme.claimed_tolerance,
    )


def fault_overrides(unit: Netlist, pattern: FaultPattern, model: FaultModel) -> dict[str, NetOverride]:
    namespace = system_namespace(unit)
    return {
        unit_output_tap(index, bit, namespace=namespace): model.corrupt_array
        for index in sorted(pattern.faulty)
        for bit in range(unit.output_count)
    }


def gate_level_masking_check(
    unit: Netlist,
    scheme: RedundancyScheme,
    pattern: FaultPattern,
    model: FaultModel = FaultModel.INVERSION,
    *,
    cap: int | None = None,
    sample_size: int | None = None,
    seed: int | None = None,
    threads: int | None = None,
) -> MaskingCheckResult:
    """Simulate the redundant system with ``pattern`` injected against the fault-free unit.

    Every input vector is checked unless the unit exceeds the input cap, in which
    case a seeded sample of ``sample_size`` distinct vectors is used.
    """
    pattern.validate_for(scheme.unit_count)
    cap = settings.exhaustive_input_cap if cap is None else cap
    n = unit.input_count
    started = perf_counter()

    sampled = n > cap
    indices: np.ndarray | None = None
    if sampled:
        if sample_size is None or seed is None:
            raise TooLargeError(
                f"{n} unit inputs exceed the exhaustive cap of {cap}; pass a sample size and seed",
                size=n,
                cap=cap,
            )
        indices = sampled_vector_indices(n, sample_size, seed)

    system = build_redundant_system(unit, scheme)
    overrides = fault_overrides(unit, pattern, model)
    total = (1 << n) if indices is None else int(indices.size)

    def check(bounds: tuple[int, int]) -> int | None:
        start, stop = bounds
        chosen = np.arange(start, stop, dtype=np.int64) if indices is None else indices[start:stop]
        vectors = input_vectors(n, start, stop) if indices is None else vectors_from_indices(n, chosen)
        expected = evaluate_batch(unit, vectors)
        actual = evaluate_batch(system, vectors, overrides)
        failing = np.flatnonzero((expected != actual).any(axis=1))
        return int(chosen[failing[0]]) if failing.size else None

    failures = [
        index
        for index in parallel_map(check, chunk_ranges(total, settings.equivalence_chunk_vectors), threads=threads)
        if index is not None
    ]
    failing_vector = vector_from_index(n, min(failures)) if failures else None

    record_vectors_simulated(circuit="system", count=total)
    logger.info(
        "fault_injection.gate_level.completed",
        extra={
            "scheme": str(scheme),
            "pattern": str(pattern),
            "model": model.value,
            "vectors": total,
            "sampled": sampled,
            "masked": failing_vector is None,
            "duration_ms": round((perf_counter() - started) * 1000, 3),
        },
    )
    return MaskingCheckResult(
        masked=failing_vector is None,
        failing_vector=failing_vector,
        vectors_checked=total,
        sampled=sampled,
    )
