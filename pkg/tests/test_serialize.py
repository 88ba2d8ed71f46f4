import json

import numpy as np
import pytest

from qconsensus import qstate
from qconsensus.digraph import scc
from qconsensus.graphs import operator_space_graph, state_space_graph
from qconsensus.perm import PermSet, cycle, identity
from qconsensus.serialize import (
    atomic_write,
    components_to_json,
    digraph_to_dot,
    digraph_to_json,
    dumps,
    format_csv,
    matrix_from_json,
    matrix_to_json,
    perm_lines,
    perms_from_lines,
    reduced_to_json,
)


def test_matrix_round_trip(rng):
    a = np.asarray(qstate.random_density(2, rng))
    assert np.array_equal(matrix_from_json(json.loads(json.dumps(matrix_to_json(a)))), a)
    assert matrix_to_json(np.array([[1, 2j], [0, 0]]))[0][1] == [0.0, 2.0]


def test_matrix_from_json_errors():
    assert np.array_equal(matrix_from_json([[1, 0], [0, 0]]), np.diag([1, 0]))
    with pytest.raises(ValueError):
        matrix_from_json([[[1, 2, 3]]])
    with pytest.raises(ValueError):
        matrix_from_json([[1, 0], [0]])


def test_reduced_json():
    r = qstate.partial_trace_to_qubit(qstate.make_state("0+"), 2)
    d = reduced_to_json(r)
    assert d["qubit"] == 2
    assert d["bloch"] == pytest.approx([1, 0, 0])


def test_perm_lines():
    s = PermSet([cycle(3), identity(3)])
    assert perm_lines(s) == ["1 2 3", "2 3 1"]
    assert perms_from_lines(perm_lines(s)) == s


def test_dot_exports():
    s = PermSet([cycle(3)])
    dot = digraph_to_dot(state_space_graph(s), "state")
    assert dot.startswith("digraph state {")
    assert dot.count("->") == 6
    op = digraph_to_dot(operator_space_graph(s), "op", n=3)
    assert '"|100><000|" -> "|001><000|";' in op
    empty = digraph_to_dot(state_space_graph(PermSet([identity(2)])))
    assert "->" not in empty


def test_graph_json():
    g = state_space_graph(PermSet([cycle(3)]))
    d = digraph_to_json(g)
    assert len(d["nodes"]) == 8 and len(d["arcs"]) == 6
    rep = components_to_json(scc(g))
    assert rep["count"] == 4
    assert rep["size_histogram"] == {"1": 2, "3": 2}


def test_dumps_rejects_nan():
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


def test_csv_format():
    text = format_csv(["a", "b"], [[0.1, 1 / 3]])
    assert text == "a,b\n0.1,0.333333333333\n"


def test_atomic_write(tmp_path):
    target = tmp_path / "sub" / "f.txt"
    atomic_write(target, "hello\n")
    atomic_write(target, "again\n")
    assert target.read_text() == "again\n"
    assert [p.name for p in target.parent.iterdir()] == ["f.txt"]
