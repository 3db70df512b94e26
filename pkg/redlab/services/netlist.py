"""Gate-level combinational netlists.

A :class:`Netlist` is immutable once built. Evaluation, depth and census are
pure functions of it, so a single netlist can be shared by any number of
worker threads. Logic values are plain 0/1; there is no X or Z state.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property

import networkx as nx
import numpy as np
from pydantic import ValidationError

from redlab.core.errors import (
    CyclicNetlistError,
    InputArityError,
    InvalidParameterError,
    NetlistValidationError,
)
from redlab.core.logging import get_logger
from redlab.schemas.netlist import GateDocument, NetlistDocument

logger = get_logger(__name__)

NetOverride = Callable[[np.ndarray], np.ndarray]


class GateKind(StrEnum):
    AND2 = "AND2"
    OR2 = "OR2"
    NOT = "NOT"
    XOR2 = "XOR2"
    MUX2 = "MUX2"
    BUF = "BUF"

    @property
    def arity(self) -> int:
        return GATE_ARITY[self]


GATE_ARITY: dict[GateKind, int] = {
    GateKind.AND2: 2,
    GateKind.OR2: 2,
    GateKind.NOT: 1,
    GateKind.XOR2: 2,
    GateKind.MUX2: 3,
    GateKind.BUF: 1,
}

# MUX2 inputs are (select, in0, in1).
_GATE_OPS: dict[GateKind, Callable[..., np.ndarray]] = {
    GateKind.AND2: np.logical_and,
    GateKind.OR2: np.logical_or,
    GateKind.NOT: np.logical_not,
    GateKind.XOR2: np.logical_xor,
    GateKind.MUX2: lambda select, in0, in1: np.where(select, in1, in0),
    GateKind.BUF: lambda value: value,
}


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    inputs: tuple[str, ...]
    output: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if len(self.inputs) != self.kind.arity:
            raise NetlistValidationError(
                f"{self.kind} gate driving {self.output!r} takes {self.kind.arity} inputs, "
                f"got {len(self.inputs)}",
                details={"net": self.output, "kind": str(self.kind)},
            )


@dataclass(frozen=True)
class Netlist:
    primary_inputs: tuple[str, ...]
    gates: tuple[Gate, ...]
    primary_outputs: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "primary_inputs", tuple(self.primary_inputs))
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "primary_outputs", tuple(self.primary_outputs))
        self._validate()

    def _validate(self) -> None:
        defined: set[str] = set()
        for net in (*self.primary_inputs, *(gate.output for gate in self.gates)):
            if net in defined:
                raise NetlistValidationError(f"net {net!r} is defined more than once", details={"net": net})
            defined.add(net)

        for gate in self.gates:
            for net in gate.inputs:
                if net not in defined:
                    raise NetlistValidationError(
                        f"gate driving {gate.output!r} reads undefined net {net!r}", details={"net": net}
                    )

        for net in self.primary_outputs:
            if net not in defined:
                raise NetlistValidationError(f"primary output {net!r} is not a defined net", details={"net": net})

    @property
    def input_count(self) -> int:
        return len(self.primary_inputs)

    @property
    def output_count(self) -> int:
        return len(self.primary_outputs)

    @cached_property
    def evaluation_order(self) -> tuple[Gate, ...]:
        return _sort_gates(self.gates)


@dataclass(frozen=True)
class GateCensus:
    counts: dict[GateKind, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __getitem__(self, kind: GateKind) -> int:
        return self.counts.get(kind, 0)

    def as_dict(self) -> dict[str, int]:
        census = {kind.value: self.counts.get(kind, 0) for kind in GateKind}
        census["total"] = self.total
        return census


def _sort_gates(gates: tuple[Gate, ...]) -> tuple[Gate, ...]:
    producers = {gate.output: index for index, gate in enumerate(gates)}

    graph = nx.DiGraph()
    graph.add_nodes_from(range(len(gates)))
    for index, gate in enumerate(gates):
        for net in gate.inputs:
            source = producers.get(net)
            if source is not None:
                graph.add_edge(source, index)

    try:
        # ties resolve by definition index, so equal netlists sort identically
        order = list(nx.lexicographical_topological_sort(graph))
    except nx.NetworkXUnfeasible:
        cycle = nx.find_cycle(graph)
        net = gates[cycle[0][0]].output
        logger.warning("netlist.topological_order.cycle", extra={"net": net, "cycle_length": len(cycle)})
        raise CyclicNetlistError(net) from None

    return tuple(gates[index] for index in order)


def topological_order(netlist: Netlist) -> tuple[Gate, ...]:
    return netlist.evaluation_order


def input_vectors(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows ``start..stop-1`` of the exhaustive enumeration over ``n`` inputs.

    Row ``v`` assigns primary input ``j`` the bit ``(v >> (n - 1 - j)) & 1``, so row
    order is lexicographic order of the input tuples.
    """
    if stop is None:
        stop = 1 << n
    return vectors_from_indices(n, np.arange(start, stop, dtype=np.int64))


def vectors_from_indices(n: int, indices: np.ndarray) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((indices[:, None] >> shifts) & 1).astype(bool)


def vector_from_index(n: int, index: int) -> tuple[int, ...]:
    return tuple((index >> (n - 1 - j)) & 1 for j in range(n))


MAX_SAMPLED_INPUTS = 62


def sampled_vector_indices(n: int, sample_size: int, seed: int) -> np.ndarray:
    """Distinct, ascending enumeration indices drawn from a Philox stream keyed by ``seed``."""
    if sample_size < 1:
        raise InvalidParameterError("sample size must be positive", details={"sample_size": sample_size})
    if n > MAX_SAMPLED_INPUTS:
        raise InvalidParameterError(
            f"sampling supports at most {MAX_SAMPLED_INPUTS} inputs, got {n}", details={"inputs": n}
        )

    population = 1 << n
    if sample_size >= population:
        return np.arange(population, dtype=np.int64)

    rng = np.random.Generator(np.random.Philox(seed))
    picked = np.unique(rng.integers(0, population, size=sample_size, dtype=np.int64))
    while picked.size < sample_size:
        extra = rng.integers(0, population, size=sample_size - picked.size, dtype=np.int64)
        picked = np.union1d(picked, extra)
    return picked


def evaluate_batch(
    netlist: Netlist,
    vectors: np.ndarray,
    overrides: Mapping[str, NetOverride] | None = None,
) -> np.ndarray:
    """Evaluate every row of ``vectors`` at once; returns a ``rows x outputs`` bool array.

    ``overrides`` maps a net to a callable applied to that net's values right after
    they are computed; downstream gates see the replaced values.
    """
    vectors = np.asarray(vectors, dtype=bool)
    if vectors.ndim != 2 or vectors.shape[1] != netlist.input_count:
        raise InputArityError(
            f"expected vectors with {netlist.input_count} columns, got shape {vectors.shape}",
            details={"expected": netlist.input_count},
        )
    overrides = overrides or {}

    values: dict[str, np.ndarray] = {}
    for column, net in enumerate(netlist.primary_inputs):
        value = vectors[:, column]
        hook = overrides.get(net)
        values[net] = hook(value) if hook else value

    for gate in topological_order(netlist):
        value = _GATE_OPS[gate.kind](*(values[net] for net in gate.inputs))
        hook = overrides.get(gate.output)
        values[gate.output] = hook(value) if hook else value

    if not netlist.primary_outputs:
        return np.zeros((vectors.shape[0], 0), dtype=bool)
    return np.column_stack([values[net] for net in netlist.primary_outputs])


def evaluate(netlist: Netlist, inputs: Mapping[str, int]) -> dict[str, int]:
    expected = set(netlist.primary_inputs)
    provided = set(inputs)
    if provided != expected:
        missing = sorted(expected - provided)
        extra = sorted(provided - expected)
        raise InputArityError(
            f"input assignment mismatch (missing={missing}, extra={extra})",
            details={"missing": missing, "extra": extra},
        )

    row = []
    for net in netlist.primary_inputs:
        bit = inputs[net]
        if bit not in (0, 1):
            raise InputArityError(f"input {net!r} must be 0 or 1, got {bit!r}", details={"net": net})
        row.append(bool(bit))

    outputs = evaluate_batch(netlist, np.array([row], dtype=bool).reshape(1, len(row)))[0]
    return {net: int(bit) for net, bit in zip(netlist.primary_outputs, outputs, strict=True)}


def evaluate_bits(netlist: Netlist, bits: Sequence[int]) -> tuple[int, ...]:
    """Positional variant of :func:`evaluate` (inputs and outputs in declaration order)."""
    if len(bits) != netlist.input_count:
        raise InputArityError(
            f"expected {netlist.input_count} input bits, got {len(bits)}",
            details={"expected": netlist.input_count},
        )
    row = np.array([bits], dtype=bool).reshape(1, len(bits))
    return tuple(int(bit) for bit in evaluate_batch(netlist, row)[0])


def logic_depth(netlist: Netlist) -> int:
    depth = {net: 0 for net in netlist.primary_inputs}
    for gate in topological_order(netlist):
        depth[gate.output] = 1 + max(depth[net] for net in gate.inputs)
    return max((depth[net] for net in netlist.primary_outputs), default=0)


def gate_count(netlist: Netlist) -> GateCensus:
    return GateCensus(counts=dict(Counter(gate.kind for gate in netlist.gates)))


def netlist_to_document(netlist: Netlist) -> NetlistDocument:
    return NetlistDocument(
        inputs=list(netlist.primary_inputs),
        gates=[
            GateDocument(kind=gate.kind.value, inputs=list(gate.inputs), out=gate.output)
            for gate in netlist.gates
        ],
        outputs=list(netlist.primary_outputs),
    )


def netlist_from_document(document: NetlistDocument) -> Netlist:
    return Netlist(
        primary_inputs=tuple(document.inputs),
        gates=tuple(Gate(GateKind(gate.kind), tuple(gate.inputs), gate.out) for gate in document.gates),
        primary_outputs=tuple(document.outputs),
    )


def netlist_to_json(netlist: Netlist) -> str:
    return netlist_to_document(netlist).model_dump_json(by_alias=True, indent=2)


def netlist_from_json(text: str) -> Netlist:
    try:
        document = NetlistDocument.model_validate_json(text)
    except ValidationError as exc:
        raise NetlistValidationError(
            "netlist document does not match the expected schema",
            details={"errors": exc.errors(include_url=False)},
        ) from exc
    return netlist_from_document(document)


class NetlistBuilder:
    """Accumulates gates with unique net names and freezes them into a :class:`Netlist`."""

    def __init__(self) -> None:
        self._inputs: list[str] = []
        self._gates: list[Gate] = []
        self._outputs: list[str] = []
        self._names: set[str] = set()
        self._stems: Counter[str] = Counter()
        self._zero: str | None = None

    def _claim(self, name: str) -> str:
        if name in self._names:
            raise NetlistValidationError(f"net {name!r} is defined more than once", details={"net": name})
        self._names.add(name)
        return name

    def fresh(self, stem: str) -> str:
        while True:
            candidate = f"{stem}_{self._stems[stem]}"
            self._stems[stem] += 1
            if candidate not in self._names:
                return candidate

    def input(self, name: str) -> str:
        self._inputs.append(self._claim(name))
        return name

    def input_bus(self, stem: str, width: int) -> list[str]:
        return [self.input(f"{stem}[{index}]") for index in range(width)]

    def output(self, net: str) -> None:
        if net not in self._names:
            raise NetlistValidationError(f"primary output {net!r} is not a defined net", details={"net": net})
        self._outputs.append(net)

    def gate(self, kind: GateKind, *inputs: str, name: str | None = None) -> str:
        output = self._claim(name if name is not None else self.fresh(kind.value.lower()))
        self._gates.append(Gate(kind, tuple(inputs), output))
        return output

    def and2(self, a: str, b: str, *, name: str | None = None) -> str:
        return self.gate(GateKind.AND2, a, b, name=name)

    def or2(self, a: str, b: str, *, name: str | None = None) -> str:
        return self.gate(GateKind.OR2, a, b, name=name)

    def xor2(self, a: str, b: str, *, name: str | None = None) -> str:
        return self.gate(GateKind.XOR2, a, b, name=name)

    def not1(self, a: str, *, name: str | None = None) -> str:
        return self.gate(GateKind.NOT, a, name=name)

    def buf(self, a: str, *, name: str | None = None) -> str:
        return self.gate(GateKind.BUF, a, name=name)

    def mux2(self, select: str, in0: str, in1: str, *, name: str | None = None) -> str:
        return self.gate(GateKind.MUX2, select, in0, in1, name=name)

    def tree(self, kind: GateKind, nets: Iterable[str], *, name: str | None = None) -> str:
        """Balanced binary reduction; depth is ``ceil(log2(len(nets)))``."""
        level = list(nets)
        if not level:
            raise NetlistValidationError(f"{kind} tree needs at least one input")
        while len(level) > 1:
            last_level = len(level) <= 2
            reduced = [
                self.gate(kind, level[i], level[i + 1], name=name if last_level else None)
                for i in range(0, len(level) - 1, 2)
            ]
            if len(level) % 2:
                reduced.append(level[-1])
            level = reduced
        return level[0]

    def and_tree(self, nets: Iterable[str], *, name: str | None = None) -> str:
        return self.tree(GateKind.AND2, nets, name=name)

    def or_tree(self, nets: Iterable[str], *, name: str | None = None) -> str:
        return self.tree(GateKind.OR2, nets, name=name)

    def half_adder(self, a: str, b: str, *, stem: str) -> tuple[str, str]:
        total = self.xor2(a, b, name=f"{stem}.s")
        carry = self.and2(a, b, name=f"{stem}.c")
        return total, carry

    def full_adder(self, a: str, b: str, cin: str, *, stem: str) -> tuple[str, str]:
        """Sum is ``a ^ b ^ cin``; carry is the AND/OR majority ``ab + cin(a ^ b)``."""
        propagate = self.xor2(a, b, name=f"{stem}.p")
        total = self.xor2(propagate, cin, name=f"{stem}.s")
        generate = self.and2(a, b, name=f"{stem}.g")
        chained = self.and2(propagate, cin, name=f"{stem}.t")
        carry = self.or2(generate, chained, name=f"{stem}.c")
        return total, carry

    def zero(self) -> str:
        if self._zero is None:
            if not self._inputs:
                raise NetlistValidationError("a constant needs at least one primary input")
            self._zero = self.xor2(self._inputs[0], self._inputs[0], name="const0")
        return self._zero

    def instantiate(self, sub: Netlist, *, prefix: str, bindings: Mapping[str, str]) -> list[str]:
        """Copy ``sub`` in, renaming its internal nets with ``prefix``; returns its output nets."""
        unbound = [net for net in sub.primary_inputs if net not in bindings]
        if unbound:
            raise NetlistValidationError(
                f"instance {prefix!r} leaves inputs unbound: {unbound}", details={"unbound": unbound}
            )

        sub_inputs = set(sub.primary_inputs)

        def rename(net: str) -> str:
            return bindings[net] if net in sub_inputs else f"{prefix}{net}"

        for gate in topological_order(sub):
            self.gate(gate.kind, *(rename(net) for net in gate.inputs), name=rename(gate.output))
        return [rename(net) for net in sub.primary_outputs]

    def build(self) -> Netlist:
        return Netlist(
            primary_inputs=tuple(self._inputs),
            gates=tuple(self._gates),
            primary_outputs=tuple(self._outputs),
        )
