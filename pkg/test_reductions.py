import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from calculi import CDC_NAMES, IA_NAMES, get_calculus
from dp_solver import CertificateSolver
from instance_model import Instance, make_disjunction, primal_graph
from oracle import brute_solve
from reductions import (
    CDC_TO_IA,
    ColouringInstance,
    cdc_to_ia,
    coloring_to_cdc,
    expected_constraint_count,
    is_k_colourable,
    read_edge_list,
    treewidth_bound,
    write_edge_list,
)
from tree_decomposition import decompose, width
from utils import random_graph, random_instance


def test_triangle_colouring():
    triangle = nx.complete_graph(3)
    solver = CertificateSolver(witness=False)
    print("Test Case 1: A triangle is 3-colourable")
    assert solver.solve(coloring_to_cdc(triangle, 3)).satisfiable, "Test Case 1 Failed: K3 with 3 colours"

    print("Test Case 2: A triangle is not 2-colourable")
    assert not solver.solve(coloring_to_cdc(triangle, 2)).satisfiable, "Test Case 2 Failed: K3 with 2 colours"

    print("Test Case 3: An odd cycle is not 2-colourable, a path is")
    assert not solver.solve(coloring_to_cdc(nx.cycle_graph(5), 2)).satisfiable, "Test Case 3 Failed: C5"
    assert solver.solve(coloring_to_cdc(nx.path_graph(4), 2)).satisfiable, "Test Case 3 Failed: P4"


def test_colouring_instance_shape():
    graph = nx.cycle_graph(5)
    instance = coloring_to_cdc(graph, 3)
    print("Test Case 1: Constraint and variable counts")
    assert len(instance.constraints) == expected_constraint_count(graph, 3), "Test Case 1 Failed: constraint count"
    assert len(instance.variables) == 3 + 2 + 5, "Test Case 1 Failed: k colours, k-1 helpers, one point per vertex"

    print("Test Case 2: The width stays within tw(G) + 2k - 1")
    for k in (2, 3):
        nice = CertificateSolver(decomposition="exact").decompose(coloring_to_cdc(graph, k))
        assert width(nice) <= treewidth_bound(graph, k), f"Test Case 2 Failed: width above the bound for k={k}"

    print("Test Case 3: Fewer than two colours are rejected")
    with pytest.raises(ValueError):
        coloring_to_cdc(graph, 1)
    with pytest.raises(ValueError):
        ColouringInstance(nx.Graph([(1, 1)]), 2)


def test_cdc_to_ia_mapping():
    cdc = get_calculus("cdc")
    source = Instance.build("cdc", ["a", "b", "c"], [
        make_disjunction(cdc, (0, 1), ["N"]),
        make_disjunction(cdc, (1, 2), ["SW", "NE"]),
    ])
    target = cdc_to_ia(source)
    print("Test Case 1: N becomes si")
    assert [IA_NAMES[t[0].relation] for t in target.constraints[0].dnf] == ["si"], "Test Case 1 Failed"

    print("Test Case 2: SW or NE becomes the six relations without overlap in time")
    names = {IA_NAMES[t[0].relation] for t in target.constraints[1].dnf}
    assert names == {"p", "m", "o", "oi", "mi", "pi"}, f"Test Case 2 Failed: got {names}"

    print("Test Case 3: Variables and primal graph are unchanged")
    assert target.calculus == "ia" and target.variables == source.variables, "Test Case 3 Failed: variables"
    assert nx.utils.graphs_equal(primal_graph(source), primal_graph(target)), "Test Case 3 Failed: primal graph"

    print("Test Case 4: Only cdc instances translate")
    with pytest.raises(ValueError):
        cdc_to_ia(Instance.build("pa", ["x"]))


@given(seed=st.integers(min_value=0, max_value=10_000))
def test_cdc_to_ia_preserves_verdict(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    source = random_instance("cdc", n, int(rng.integers(1, 2 * n + 1)), rng)
    assert brute_solve(source) == brute_solve(cdc_to_ia(source)), "translation changed the verdict"


def test_every_direction_translates():
    ia = get_calculus("ia")
    print("Test Case 1: The translation covers all 13 Allen relations exactly once")
    assert set(CDC_TO_IA) == set(CDC_NAMES), "Test Case 1 Failed: a direction is missing"
    targets = [name for names in CDC_TO_IA.values() for name in names]
    assert sorted(targets) == sorted(IA_NAMES) and all(ia.has_relation(n) for n in targets), "Test Case 1 Failed"


def test_edge_lists():
    print("Test Case 1: Comments, isolated vertices and edges")
    graph = read_edge_list("# demo\na b\nb c  # second edge\nd\n")
    assert set(graph.nodes) == {"a", "b", "c", "d"} and graph.number_of_edges() == 2, "Test Case 1 Failed"

    print("Test Case 2: Written edge lists read back")
    assert nx.utils.graphs_equal(read_edge_list(write_edge_list(graph)), graph), "Test Case 2 Failed"

    print("Test Case 3: Malformed lines are reported")
    with pytest.raises(ValueError, match="line 2"):
        read_edge_list("a b\nc c\n")
    with pytest.raises(ValueError, match="line 1"):
        read_edge_list("a b c\n")


def test_colourability_checks():
    print("Test Case 1: Brute-force colouring")
    assert not is_k_colourable(nx.complete_graph(4), 3) and is_k_colourable(nx.complete_graph(4), 4), "Test Case 1 Failed: K4"
    assert not is_k_colourable(nx.cycle_graph(5), 2) and is_k_colourable(nx.cycle_graph(5), 3), "Test Case 1 Failed: C5"
    assert is_k_colourable(nx.Graph(), 1), "Test Case 1 Failed: empty graph"

    print("Test Case 2: Width bound")
    assert treewidth_bound(nx.cycle_graph(5), 3) == 2 + 5, "Test Case 2 Failed: tw(C5) = 2"


@given(seed=st.integers(min_value=0, max_value=10_000))
def test_treewidth_bounds_colours(seed):
    rng = np.random.default_rng(seed)
    graph = random_graph(int(rng.integers(1, 8)), float(rng.uniform(0.2, 0.8)), rng)
    colours = max(width(decompose(graph, "exact")), 0) + 1
    assert is_k_colourable(graph, colours), f"a graph of treewidth {colours - 1} must be {colours}-colourable"


if __name__ == "__main__":
    test_triangle_colouring()
    test_colouring_instance_shape()
    test_cdc_to_ia_mapping()
    test_cdc_to_ia_preserves_verdict()
    test_every_direction_translates()
    test_edge_lists()
    test_colourability_checks()
    test_treewidth_bounds_colours()
