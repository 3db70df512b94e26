"""NMR majority voters, the majority/minority (MMR) voter, and redundant systems.

MMR units 1..3 form the majority cluster, units 4..k the minority cluster.
The MMR voter computes::

    Maj = MAJ3(F1, F2, F3)
    P   = AND(F4..Fk)      Q = OR(F4..Fk)
    Min = MUX(select=Maj, in0=P, in1=Q)
    MO  = Maj AND Min

Net names in built systems: ``u<i>/`` prefixes the internal nets of unit copy
``i`` (1-based), ``u<i>.out[<j>]`` is that copy's tapped output bit ``j`` and
``v<j>/`` prefixes the voter of output bit ``j``. Unit nets only ever appear
behind a copy prefix; ``system_namespace`` keeps shared inputs clear of the
generated names.
"""

from __future__ import annotations

import re
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from redlab.core.errors import InvalidArityError, InvalidParameterError
from redlab.services.netlist import Netlist, NetlistBuilder

MAJORITY_CLUSTER_SIZE = 3
MMR_MIN_UNITS = 5
MMR_OVERRIDE_MIN_UNITS = 4
NMR_MIN_UNITS = 3

_SCHEME_SPEC = re.compile(r"^(nmr|mmr):(\d+)$")


class SchemeKind(StrEnum):
    NMR = "nmr"
    MMR = "mmr"


@dataclass(frozen=True)
class RedundancyScheme:
    kind: SchemeKind
    units: int
    allow_small: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.kind == SchemeKind.NMR:
            _check_nmr_arity(self.units)
        else:
            _check_mmr_arity(self.units, allow_small=self.allow_small)

    @classmethod
    def nmr(cls, n: int) -> RedundancyScheme:
        return cls(SchemeKind.NMR, n)

    @classmethod
    def mmr(cls, k: int, *, allow_small: bool = False) -> RedundancyScheme:
        return cls(SchemeKind.MMR, k, allow_small=allow_small)

    @classmethod
    def parse(cls, text: str, *, allow_small: bool = False) -> RedundancyScheme:
        match = _SCHEME_SPEC.match((text or "").strip().lower())
        if not match:
            raise InvalidParameterError(
                f"invalid scheme specifier {text!r}; expected 'nmr:<n>' or 'mmr:<k>'", details={"scheme": text}
            )
        return cls(SchemeKind(match.group(1)), int(match.group(2)), allow_small=allow_small)

    @property
    def unit_count(self) -> int:
        return self.units

    @property
    def is_mmr(self) -> bool:
        return self.kind == SchemeKind.MMR

    @property
    def majority_cluster(self) -> tuple[int, ...]:
        if self.is_mmr:
            return tuple(range(1, MAJORITY_CLUSTER_SIZE + 1))
        return tuple(range(1, self.units + 1))

    @property
    def minority_cluster(self) -> tuple[int, ...]:
        if self.is_mmr:
            return tuple(range(MAJORITY_CLUSTER_SIZE + 1, self.units + 1))
        return ()

    @property
    def label(self) -> str:
        return f"{self.units}-MMR" if self.is_mmr else f"{self.units}MR"

    @property
    def claimed_tolerance(self) -> int:
        """Fault count the architecture is designed for: K-3 for MMR, (N-1)/2 for NMR."""
        return self.units - MAJORITY_CLUSTER_SIZE if self.is_mmr else (self.units - 1) // 2

    def counterpart(self) -> RedundancyScheme:
        """The other architecture with the same designed fault tolerance."""
        if self.is_mmr:
            return RedundancyScheme.nmr(2 * self.claimed_tolerance + 1)
        return RedundancyScheme.mmr(self.claimed_tolerance + MAJORITY_CLUSTER_SIZE, allow_small=True)

    def __str__(self) -> str:
        return f"{self.kind.value}:{self.units}"


@dataclass(frozen=True)
class MmrVoterTrace:
    maj: int
    p: int
    q: int
    min_out: int
    mo: int


def units_for_tolerance(kind: SchemeKind, tolerance: int) -> int:
    if tolerance < 1:
        raise InvalidParameterError("tolerance must be >= 1", details={"tolerance": tolerance})
    if SchemeKind(kind) == SchemeKind.NMR:
        return 2 * tolerance + 1
    return tolerance + MAJORITY_CLUSTER_SIZE


def _check_nmr_arity(n: int) -> None:
    if n < NMR_MIN_UNITS or n % 2 == 0:
        raise InvalidArityError(f"NMR needs an odd unit count >= {NMR_MIN_UNITS}, got {n}", details={"units": n})


def _check_mmr_arity(k: int, *, allow_small: bool = False) -> None:
    floor = MMR_OVERRIDE_MIN_UNITS if allow_small else MMR_MIN_UNITS
    if k < floor:
        raise InvalidArityError(f"MMR needs at least {floor} units, got {k}", details={"units": k, "floor": floor})


def _check_bits(bits: Sequence[int]) -> list[int]:
    values = [int(bit) for bit in bits]
    if any(bit not in (0, 1) for bit in values):
        raise InvalidParameterError("voter inputs must be 0 or 1")
    return values


def vote_nmr(bits: Sequence[int]) -> int:
    values = _check_bits(bits)
    _check_nmr_arity(len(values))
    return int(sum(values) >= (len(values) + 1) // 2)


def vote_mmr(bits: Sequence[int], *, allow_small: bool = False) -> MmrVoterTrace:
    values = _check_bits(bits)
    _check_mmr_arity(len(values), allow_small=allow_small)

    majority, minority = values[:MAJORITY_CLUSTER_SIZE], values[MAJORITY_CLUSTER_SIZE:]
    maj = int(sum(majority) >= 2)
    p = int(all(minority))
    q = int(any(minority))
    min_out = q if maj else p
    return MmrVoterTrace(maj=maj, p=p, q=q, min_out=min_out, mo=maj & min_out)


def vote(scheme: RedundancyScheme, bits: Sequence[int]) -> int:
    if len(bits) != scheme.unit_count:
        raise InvalidArityError(
            f"{scheme.label} votes over {scheme.unit_count} bits, got {len(bits)}",
            details={"units": scheme.unit_count},
        )
    if scheme.is_mmr:
        return vote_mmr(bits, allow_small=scheme.allow_small).mo
    return vote_nmr(bits)


def vote_nmr_array(bits: np.ndarray) -> np.ndarray:
    """Row-wise NMR vote over a ``rows x n`` bool array."""
    bits = np.asarray(bits, dtype=bool)
    _check_nmr_arity(bits.shape[1])
    return bits.sum(axis=1) >= (bits.shape[1] + 1) // 2


def vote_mmr_array(bits: np.ndarray, *, allow_small: bool = False) -> np.ndarray:
    """Row-wise MMR output (MO) over a ``rows x k`` bool array."""
    bits = np.asarray(bits, dtype=bool)
    _check_mmr_arity(bits.shape[1], allow_small=allow_small)
    maj = bits[:, :MAJORITY_CLUSTER_SIZE].sum(axis=1) >= 2
    minority = bits[:, MAJORITY_CLUSTER_SIZE:]
    min_out = np.where(maj, minority.any(axis=1), minority.all(axis=1))
    return maj & min_out


def vote_array(scheme: RedundancyScheme, bits: np.ndarray) -> np.ndarray:
    if scheme.is_mmr:
        return vote_mmr_array(bits, allow_small=scheme.allow_small)
    return vote_nmr_array(bits)


def _emit_maj3(builder: NetlistBuilder, f1: str, f2: str, f3: str, *, name: str | None = None) -> str:
    """AO222 composite ``F1F2 + F2F3 + F1F3``: three AND2 into a two-level OR tree."""
    terms = [builder.and2(f1, f2, name="ab"), builder.and2(f2, f3, name="bc"), builder.and2(f1, f3, name="ac")]
    return builder.or_tree(terms, name=name)


def _emit_popcount(builder: NetlistBuilder, nets: Sequence[str]) -> list[str]:
    """Column compression with full/half adders; returns the count bits, LSB first."""
    columns: list[list[str]] = [list(nets)]
    weight = 0
    while weight < len(columns):
        column = columns[weight]
        while len(column) > 1:
            if weight + 1 == len(columns):
                columns.append([])
            stem = builder.fresh(f"w{weight}")
            if len(column) >= 3:
                total, carry = builder.full_adder(column.pop(0), column.pop(0), column.pop(0), stem=stem)
            else:
                total, carry = builder.half_adder(column.pop(0), column.pop(0), stem=stem)
            column.append(total)
            columns[weight + 1].append(carry)
        weight += 1
    return [column[0] for column in columns if column]


def _emit_greater_than(builder: NetlistBuilder, bits: Sequence[str], constant: int, *, name: str) -> str:
    """``value(bits) > constant`` for LSB-first ``bits``, folding the constant into the gates."""
    result: str | None = None
    for index, bit in enumerate(bits):
        last = index == len(bits) - 1
        if (constant >> index) & 1:
            result = None if result is None else builder.and2(bit, result, name=name if last else None)
        else:
            result = bit if result is None else builder.or2(bit, result, name=name if last else None)
    if result is None:
        raise InvalidParameterError("threshold is not reachable with the available count bits")
    return result


def build_nmr_voter(n: int) -> Netlist:
    """Majority voter over ``f[1]..f[n]`` with a single output.

    n = 3 is the AO222 composite; larger n count the ones with a full-adder tree
    and compare the count against (n + 1) / 2.
    """
    _check_nmr_arity(n)
    builder = NetlistBuilder()
    inputs = [builder.input(f"f[{index}]") for index in range(1, n + 1)]

    if n == 3:
        builder.output(_emit_maj3(builder, *inputs, name="vote"))
        return builder.build()

    count = _emit_popcount(builder, inputs)
    builder.output(_emit_greater_than(builder, count, (n - 1) // 2, name="vote"))
    return builder.build()


def build_mmr_voter(k: int, *, allow_small: bool = False) -> Netlist:
    """MMR voter over ``f[1]..f[k]``; outputs ``mo`` (primary) then ``min``."""
    _check_mmr_arity(k, allow_small=allow_small)
    builder = NetlistBuilder()
    inputs = [builder.input(f"f[{index}]") for index in range(1, k + 1)]

    maj = _emit_maj3(builder, *inputs[:MAJORITY_CLUSTER_SIZE], name="maj")
    minority = inputs[MAJORITY_CLUSTER_SIZE:]
    p = builder.and_tree(minority, name="p")
    q = builder.or_tree(minority, name="q")
    min_out = builder.mux2(maj, p, q, name="min")
    mo = builder.and2(maj, min_out, name="mo")

    builder.output(mo)
    builder.output(min_out)
    return builder.build()


def build_voter(scheme: RedundancyScheme) -> Netlist:
    if scheme.is_mmr:
        return build_mmr_voter(scheme.units, allow_small=scheme.allow_small)
    return build_nmr_voter(scheme.units)


def system_namespace(unit: Netlist) -> str:
    """Root prepended to every net ``build_redundant_system`` generates.

    Empty unless a unit input already looks like a copy or voter net, in which
    case underscores are added until no shared input can clash.
    """
    root = ""
    while any(re.match(rf"{re.escape(root)}[uv]\d", net) for net in unit.primary_inputs):
        root += "_"
    return root


def unit_output_tap(unit_index: int, bit: int, *, namespace: str = "") -> str:
    return f"{namespace}u{unit_index}.out[{bit}]"


def build_redundant_system(unit: Netlist, scheme: RedundancyScheme) -> Netlist:
    """U copies of ``unit`` on shared inputs, one voter per output bit.

    Each copy's output bit passes through a BUF tap so a fault can replace the
    whole output word of that copy without touching its internals.
    """
    namespace = system_namespace(unit)
    builder = NetlistBuilder()
    for net in unit.primary_inputs:
        builder.input(net)
    shared = {net: net for net in unit.primary_inputs}

    taps: list[list[str]] = []
    for unit_index in range(1, scheme.unit_count + 1):
        outputs = builder.instantiate(unit, prefix=f"{namespace}u{unit_index}/", bindings=shared)
        taps.append(
            [
                builder.buf(net, name=unit_output_tap(unit_index, bit, namespace=namespace))
                for bit, net in enumerate(outputs)
            ]
        )

    voter = build_voter(scheme)
    for bit in range(unit.output_count):
        bindings = {f"f[{unit_index}]": taps[unit_index - 1][bit] for unit_index in range(1, scheme.unit_count + 1)}
        voted = builder.instantiate(voter, prefix=f"{namespace}v{bit}/", bindings=bindings)
        builder.output(voted[0])
    return builder.build()
