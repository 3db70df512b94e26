from __future__ import annotations

import itertools
import logging
import random

import numpy as np
import pytest

from redlab.core.errors import CyclicNetlistError, InputArityError, NetlistValidationError
from redlab.services.netlist import (
    Gate,
    GateKind,
    Netlist,
    NetlistBuilder,
    evaluate,
    evaluate_batch,
    evaluate_bits,
    gate_count,
    input_vectors,
    logic_depth,
    netlist_from_json,
    netlist_to_json,
    sampled_vector_indices,
    topological_order,
    vector_from_index,
)


def _single(kind: GateKind, *inputs: str) -> Netlist:
    return Netlist(primary_inputs=inputs, gates=(Gate(kind, inputs, "y"),), primary_outputs=("y",))


def test_and2_truth_table():
    netlist = _single(GateKind.AND2, "a", "b")

    assert evaluate(netlist, {"a": 1, "b": 1}) == {"y": 1}
    assert evaluate(netlist, {"a": 1, "b": 0}) == {"y": 0}


def test_mux2_selects_in0_when_select_is_low():
    netlist = _single(GateKind.MUX2, "s", "d0", "d1")

    assert evaluate(netlist, {"s": 0, "d0": 1, "d1": 0}) == {"y": 1}
    assert evaluate(netlist, {"s": 1, "d0": 1, "d1": 0}) == {"y": 0}


def test_evaluate_rejects_missing_and_extra_inputs():
    netlist = _single(GateKind.AND2, "a", "b")

    with pytest.raises(InputArityError):
        evaluate(netlist, {"a": 1})
    with pytest.raises(InputArityError):
        evaluate(netlist, {"a": 1, "b": 0, "c": 1})
    with pytest.raises(InputArityError):
        evaluate(netlist, {"a": 1, "b": 2})
    with pytest.raises(InputArityError):
        evaluate_bits(netlist, (1,))


def test_gate_arity_is_enforced():
    with pytest.raises(NetlistValidationError):
        Gate(GateKind.NOT, ("a", "b"), "y")
    with pytest.raises(NetlistValidationError):
        Gate(GateKind.MUX2, ("s", "a"), "y")


def test_netlist_rejects_duplicate_and_undefined_nets():
    with pytest.raises(NetlistValidationError):
        Netlist(("a", "a"), (), ())
    with pytest.raises(NetlistValidationError):
        Netlist(("a",), (Gate(GateKind.NOT, ("b",), "y"),), ("y",))
    with pytest.raises(NetlistValidationError):
        Netlist(("a",), (), ("missing",))


def test_topological_order_of_empty_netlist_is_empty():
    assert topological_order(Netlist((), (), ())) == ()


def test_topological_order_follows_a_chain_stored_backwards():
    first = Gate(GateKind.NOT, ("a",), "n1")
    second = Gate(GateKind.NOT, ("n1",), "n2")
    netlist = Netlist(("a",), (second, first), ("n2",))

    assert topological_order(netlist) == (first, second)
    assert evaluate(netlist, {"a": 1}) == {"n2": 1}


def test_self_loop_raises_cyclic_netlist_error_naming_the_net(caplog):
    netlist = Netlist(("a",), (Gate(GateKind.AND2, ("a", "y"), "y"),), ("y",))

    with caplog.at_level(logging.WARNING, logger="redlab.services.netlist"):
        with pytest.raises(CyclicNetlistError) as exc_info:
            topological_order(netlist)

    assert exc_info.value.net == "y"
    warning = next(record for record in caplog.records if record.message == "netlist.topological_order.cycle")
    assert warning.net == "y"

    with pytest.raises(CyclicNetlistError):
        logic_depth(netlist)


def test_logic_depth_examples():
    assert logic_depth(_single(GateKind.BUF, "a")) == 1

    chain = Netlist(("a",), (Gate(GateKind.NOT, ("a",), "n1"), Gate(GateKind.NOT, ("n1",), "n2")), ("n2",))
    assert logic_depth(chain) == 2

    builder = NetlistBuilder()
    nets = [builder.input(f"x{i}") for i in range(8)]
    builder.output(builder.and_tree(nets, name="all"))
    tree = builder.build()
    assert logic_depth(tree) == 3
    assert gate_count(tree).total == 7


@pytest.mark.parametrize("width", [2, 3, 5, 8, 9, 16])
def test_balanced_trees_have_ceil_log2_depth(width):
    builder = NetlistBuilder()
    nets = builder.input_bus("x", width)
    builder.output(builder.or_tree(nets, name="any"))
    netlist = builder.build()

    assert logic_depth(netlist) == int(np.ceil(np.log2(width)))
    assert "any" in netlist.primary_outputs


def test_gate_count_census():
    assert gate_count(Netlist((), (), ())).total == 0

    census = gate_count(_single(GateKind.NOT, "a"))
    assert census[GateKind.NOT] == 1
    assert census[GateKind.AND2] == 0
    assert census.total == 1
    assert census.as_dict()["total"] == 1
    assert census.as_dict()["NOT"] == 1


def test_evaluation_ignores_stored_gate_order(rca4):
    shuffled = list(rca4.gates)
    random.Random(7).shuffle(shuffled)
    permuted = Netlist(rca4.primary_inputs, tuple(shuffled), rca4.primary_outputs)
    vectors = input_vectors(rca4.input_count)

    np.testing.assert_array_equal(evaluate_batch(rca4, vectors), evaluate_batch(permuted, vectors))
    assert topological_order(permuted) == topological_order(
        Netlist(rca4.primary_inputs, tuple(shuffled), rca4.primary_outputs)
    )


def test_appending_a_gate_on_an_output_path_never_lowers_depth(rca4):
    last = rca4.primary_outputs[-1]
    extended = Netlist(
        rca4.primary_inputs,
        (*rca4.gates, Gate(GateKind.NOT, (last,), "inv_cout")),
        (*rca4.primary_outputs[:-1], "inv_cout"),
    )

    assert logic_depth(extended) >= logic_depth(rca4)


def test_input_vectors_are_lexicographic():
    rows = input_vectors(3).astype(int).tolist()

    assert rows == [list(bits) for bits in itertools.product((0, 1), repeat=3)]
    assert vector_from_index(3, 6) == (1, 1, 0)
    assert input_vectors(4, 5, 7).astype(int).tolist() == [[0, 1, 0, 1], [0, 1, 1, 0]]


def test_evaluate_batch_applies_overrides_downstream():
    builder = NetlistBuilder()
    a = builder.input("a")
    tap = builder.buf(a, name="tap")
    builder.output(builder.not1(tap, name="y"))
    netlist = builder.build()
    vectors = input_vectors(1)

    plain = evaluate_batch(netlist, vectors)
    forced = evaluate_batch(netlist, vectors, {"tap": np.logical_not})

    assert plain[:, 0].tolist() == [True, False]
    assert forced[:, 0].tolist() == [False, True]


def test_evaluate_batch_rejects_wrong_width():
    with pytest.raises(InputArityError):
        evaluate_batch(_single(GateKind.AND2, "a", "b"), np.zeros((4, 3), dtype=bool))


def test_sampled_indices_are_distinct_sorted_and_reproducible():
    first = sampled_vector_indices(30, 500, seed=11)
    second = sampled_vector_indices(30, 500, seed=11)

    assert first.size == 500
    assert np.all(np.diff(first) > 0)
    np.testing.assert_array_equal(first, second)
    assert sampled_vector_indices(3, 100, seed=1).tolist() == list(range(8))


def test_builder_rejects_reused_names_and_unbound_instances():
    builder = NetlistBuilder()
    a = builder.input("a")
    builder.not1(a, name="y")
    with pytest.raises(NetlistValidationError):
        builder.buf(a, name="y")

    sub = _single(GateKind.AND2, "p", "q")
    with pytest.raises(NetlistValidationError):
        builder.instantiate(sub, prefix="s/", bindings={"p": a})


def test_instantiate_prefixes_internal_nets():
    sub = _single(GateKind.XOR2, "p", "q")
    builder = NetlistBuilder()
    a, b = builder.input("a"), builder.input("b")
    outputs = builder.instantiate(sub, prefix="x1/", bindings={"p": a, "q": b})
    builder.output(outputs[0])
    netlist = builder.build()

    assert outputs == ["x1/y"]
    assert [evaluate_bits(netlist, bits) for bits in ((0, 0), (0, 1), (1, 1))] == [(0,), (1,), (0,)]


def test_json_round_trip_preserves_function_and_census(bam4x4):
    text = netlist_to_json(bam4x4)
    restored = netlist_from_json(text)
    vectors = input_vectors(bam4x4.input_count)

    assert '"in"' in text
    assert gate_count(restored).as_dict() == gate_count(bam4x4).as_dict()
    np.testing.assert_array_equal(evaluate_batch(restored, vectors), evaluate_batch(bam4x4, vectors))


def test_netlist_from_json_rejects_bad_documents():
    with pytest.raises(NetlistValidationError):
        netlist_from_json(
            '{"inputs": ["a"], "gates": [{"kind": "NAND2", "in": ["a", "a"], "out": "y"}], "outputs": ["y"]}'
        )
    with pytest.raises(NetlistValidationError):
        netlist_from_json('{"inputs": ["a"], "gates": [], "outputs": ["nope"]}')
