"""Benchmark function units: ripple-carry adders and array multipliers.

Bit index 0 is the least significant bit of every bus. The RCA takes
``a[0..w-1], b[0..w-1], cin`` and produces ``w`` sums followed by the carry out;
the BAM takes ``a[0..n-1], b[0..m-1]`` and produces ``n + m`` product bits.
"""

from __future__ import annotations

import re
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from time import perf_counter

import numpy as np

from redlab.core.config import settings
from redlab.core.errors import InvalidParameterError, TooLargeError
from redlab.core.logging import get_logger
from redlab.core.metrics import record_vectors_simulated
from redlab.core.parallel import chunk_ranges, parallel_map
from redlab.services.netlist import (
    Netlist,
    NetlistBuilder,
    evaluate_batch,
    input_vectors,
    sampled_vector_indices,
    vector_from_index,
    vectors_from_indices,
)

logger = get_logger(__name__)

Oracle = Callable[[Sequence[int]], Sequence[int]]

_RCA_SPEC = re.compile(r"^rca:(\d+)$")
_BAM_SPEC = re.compile(r"^bam:(\d+)x(\d+)$")


class FunctionUnitKind(StrEnum):
    RCA = "rca"
    BAM = "bam"


@dataclass(frozen=True)
class FunctionUnitSpec:
    kind: FunctionUnitKind
    width: int = 0
    rows: int = 0
    cols: int = 0

    def __post_init__(self) -> None:
        if self.kind == FunctionUnitKind.RCA and self.width < 1:
            raise InvalidParameterError(f"rca width must be >= 1, got {self.width}", details={"width": self.width})
        if self.kind == FunctionUnitKind.BAM and (self.rows < 1 or self.cols < 1):
            raise InvalidParameterError(
                f"bam dimensions must be >= 1, got {self.rows}x{self.cols}",
                details={"rows": self.rows, "cols": self.cols},
            )

    @classmethod
    def rca(cls, width: int) -> FunctionUnitSpec:
        return cls(FunctionUnitKind.RCA, width=width)

    @classmethod
    def bam(cls, rows: int, cols: int) -> FunctionUnitSpec:
        return cls(FunctionUnitKind.BAM, rows=rows, cols=cols)

    @classmethod
    def parse(cls, text: str) -> FunctionUnitSpec:
        value = (text or "").strip().lower()
        if match := _RCA_SPEC.match(value):
            return cls.rca(int(match.group(1)))
        if match := _BAM_SPEC.match(value):
            return cls.bam(int(match.group(1)), int(match.group(2)))
        raise InvalidParameterError(
            f"invalid unit specifier {text!r}; expected 'rca:<w>' or 'bam:<n>x<m>'", details={"unit": text}
        )

    @property
    def input_bits(self) -> int:
        if self.kind == FunctionUnitKind.RCA:
            return 2 * self.width + 1
        return self.rows + self.cols

    @property
    def output_bits(self) -> int:
        if self.kind == FunctionUnitKind.RCA:
            return self.width + 1
        return self.rows + self.cols

    def build(self) -> Netlist:
        if self.kind == FunctionUnitKind.RCA:
            return build_rca(self.width)
        return build_bam(self.rows, self.cols)

    def oracle(self) -> Oracle:
        if self.kind == FunctionUnitKind.RCA:
            return rca_oracle(self.width)
        return bam_oracle(self.rows, self.cols)

    def __str__(self) -> str:
        if self.kind == FunctionUnitKind.RCA:
            return f"rca:{self.width}"
        return f"bam:{self.rows}x{self.cols}"


@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    counterexample: tuple[int, ...] | None
    vectors_checked: int
    sampled: bool = False


def bits_to_int(bits: Sequence[int]) -> int:
    return sum(int(bit) << index for index, bit in enumerate(bits))


def int_to_bits(value: int, width: int) -> tuple[int, ...]:
    return tuple((value >> index) & 1 for index in range(width))


def build_rca(width: int) -> Netlist:
    FunctionUnitSpec.rca(width)

    builder = NetlistBuilder()
    a = builder.input_bus("a", width)
    b = builder.input_bus("b", width)
    carry = builder.input("cin")

    sums = []
    for index in range(width):
        total, carry = builder.full_adder(a[index], b[index], carry, stem=f"fa{index}")
        sums.append(total)

    for net in sums:
        builder.output(net)
    builder.output(carry)
    return builder.build()


def build_bam(n: int, m: int) -> Netlist:
    """Carry-save array multiplier for an ``n``-bit ``a`` and ``m``-bit ``b``.

    After row ``i`` the running sum bit ``j`` weighs ``i + j`` and carry ``j`` weighs
    ``i + j + 1``; the last row is resolved by a ripple-carry stage.
    """
    FunctionUnitSpec.bam(n, m)

    builder = NetlistBuilder()
    a = builder.input_bus("a", n)
    b = builder.input_bus("b", m)

    def compress(terms: list[str], stem: str) -> tuple[str, str | None]:
        if len(terms) == 3:
            return builder.full_adder(*terms, stem=stem)
        if len(terms) == 2:
            return builder.half_adder(*terms, stem=stem)
        return terms[0], None

    product: list[str] = []
    sums = [builder.and2(a[j], b[0], name=f"pp0_{j}") for j in range(n)]
    carries: list[str | None] = [None] * n
    product.append(sums[0])

    for i in range(1, m):
        next_sums: list[str] = []
        next_carries: list[str | None] = []
        for j in range(n):
            terms = [builder.and2(a[j], b[i], name=f"pp{i}_{j}")]
            if j + 1 < n:
                terms.append(sums[j + 1])
            if carries[j] is not None:
                terms.append(carries[j])
            total, carry = compress(terms, f"r{i}c{j}")
            next_sums.append(total)
            next_carries.append(carry)
        sums, carries = next_sums, next_carries
        product.append(sums[0])

    ripple: str | None = None
    for t in range(n):
        upper = sums[t + 1] if t + 1 < n else None
        terms = [net for net in (upper, carries[t], ripple) if net is not None]
        if t == n - 1:
            # top column: at most two terms and never a carry out
            if not terms:
                product.append(builder.zero())
            elif len(terms) == 1:
                product.append(terms[0])
            else:
                product.append(builder.xor2(terms[0], terms[1], name=f"fin{t}.s"))
        else:
            total, ripple = compress(terms, f"fin{t}")
            product.append(total)

    for net in product:
        builder.output(net)
    return builder.build()


def rca_oracle(width: int) -> Oracle:
    def oracle(bits: Sequence[int]) -> tuple[int, ...]:
        a = bits_to_int(bits[:width])
        b = bits_to_int(bits[width : 2 * width])
        return int_to_bits(a + b + int(bits[2 * width]), width + 1)

    return oracle


def bam_oracle(n: int, m: int) -> Oracle:
    def oracle(bits: Sequence[int]) -> tuple[int, ...]:
        return int_to_bits(bits_to_int(bits[:n]) * bits_to_int(bits[n : n + m]), n + m)

    return oracle


def _first_mismatch(netlist: Netlist, oracle: Oracle, vectors: np.ndarray) -> int | None:
    actual = evaluate_batch(netlist, vectors)
    expected = np.array([oracle(row) for row in vectors.astype(np.uint8).tolist()], dtype=bool)
    if expected.shape != actual.shape:
        raise InvalidParameterError(
            f"oracle returned {expected.shape[-1] if expected.ndim == 2 else 0} bits, "
            f"netlist has {netlist.output_count} outputs"
        )
    mismatched = np.flatnonzero((actual != expected).any(axis=1))
    return int(mismatched[0]) if mismatched.size else None


def exhaustive_equivalence(
    netlist: Netlist,
    oracle: Oracle,
    *,
    cap: int | None = None,
    sample_size: int | None = None,
    seed: int | None = None,
    threads: int | None = None,
    circuit: str = "unit",
) -> EquivalenceResult:
    """Compare ``netlist`` against ``oracle`` on every input vector.

    Above the input cap only a seeded sample is checked, and only when
    ``sample_size`` and ``seed`` are given. The counterexample is always the
    lexicographically smallest failing vector among those checked.
    """
    cap = settings.exhaustive_input_cap if cap is None else cap
    n = netlist.input_count
    started = perf_counter()

    sampled = n > cap
    if sampled:
        if sample_size is None or seed is None:
            raise TooLargeError(
                f"{n} inputs exceed the exhaustive cap of {cap}; pass a sample size and seed for sampled checking",
                size=n,
                cap=cap,
            )
        indices = sampled_vector_indices(n, sample_size, seed)
    else:
        indices = None

    total = (1 << n) if indices is None else int(indices.size)
    chunk = settings.equivalence_chunk_vectors

    def check(bounds: tuple[int, int]) -> int | None:
        start, stop = bounds
        if indices is None:
            vectors = input_vectors(n, start, stop)
            offset = _first_mismatch(netlist, oracle, vectors)
            return None if offset is None else start + offset
        chosen = indices[start:stop]
        offset = _first_mismatch(netlist, oracle, vectors_from_indices(n, chosen))
        return None if offset is None else int(chosen[offset])

    failing = [index for index in parallel_map(check, chunk_ranges(total, chunk), threads=threads) if index is not None]
    counterexample = vector_from_index(n, min(failing)) if failing else None

    record_vectors_simulated(circuit=circuit, count=total)
    logger.info(
        "function_units.equivalence.completed",
        extra={
            "circuit": circuit,
            "inputs": n,
            "vectors": total,
            "sampled": sampled,
            "equivalent": counterexample is None,
            "duration_ms": round((perf_counter() - started) * 1000, 3),
        },
    )
    return EquivalenceResult(
        equivalent=counterexample is None,
        counterexample=counterexample,
        vectors_checked=total,
        sampled=sampled,
    )
