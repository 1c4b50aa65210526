import os

import numpy as np
import pandas as pd
import pytest
import yaml
from hypothesis import given, strategies as st

from calculi import LT, PointModel, get_calculus
from calculus_core import EMPTY_NETWORK, implies
from dp_solver import (
    STATS_COLUMNS,
    CertificateSolver,
    describe_model,
    extract_certificate,
    forget_step,
    introduce_step,
    join_step,
    leaf_step,
    solve,
)
from instance_model import Instance, load_instance, make_disjunction, primal_graph, subinstance
from oracle import brute_certificates, brute_solve, certificate_projections, count_complete_satisfiable, realize_and_verify
from phylogeny import model_from_nested
from tree_decomposition import (
    DecompositionError,
    TreeDecomposition,
    decompose,
    make_nice,
    random_decomposition,
)
from utils import ktree_instance, random_instance

INSTANCES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "instances")

# Largest random instance per calculus that brute force still handles quickly.
SMALL = {"pa": 5, "ia": 3, "cdc": 3, "ba2": 2, "rcc5": 4, "rcc8": 3, "phylo": 4}


def nice_of(instance, mode="heuristic"):
    return make_nice(decompose(primal_graph(instance), mode))


def test_betweenness_certificate():
    instance = load_instance(os.path.join(INSTANCES, "betweenness.yml"))
    result = CertificateSolver().solve(instance)
    print("Test Case 1: Betweenness chain is satisfiable")
    assert result.verdict == "SAT" and result.satisfiable, "Test Case 1 Failed: expected SAT"

    print("Test Case 2: The extracted certificate is one of the two global certificates")
    certificates = set(brute_certificates(instance))
    assert len(certificates) == 2, f"Test Case 2 Failed: expected 2 certificates, got {len(certificates)}"
    assert result.certificate in certificates, "Test Case 2 Failed: extracted certificate is not a certificate"


def test_unsat_and_empty_instances():
    print("Test Case 1: Halves that agree on their overlap can still clash")
    instance = load_instance(os.path.join(INSTANCES, "patchwork_union.yml"))
    result = CertificateSolver().solve(instance)
    assert result.verdict == "UNSAT" and result.certificate is None, "Test Case 1 Failed: expected UNSAT"

    print("Test Case 2: An instance without variables is satisfiable")
    empty = Instance.build("pa", [])
    result = CertificateSolver().solve(empty)
    assert result.satisfiable and result.certificate == EMPTY_NETWORK, "Test Case 2 Failed: expected the empty certificate"
    assert result.width == -1, "Test Case 2 Failed: empty primal graph has width -1"

    print("Test Case 3: Variables without constraints are satisfiable")
    result = CertificateSolver().solve(Instance.build("ia", ["a", "b", "c"]))
    assert result.satisfiable and result.certificate.is_complete(get_calculus("ia")), "Test Case 3 Failed"


def test_dp_steps():
    pa = get_calculus("pa")
    free = Instance.build("pa", ["x", "y"])
    ordered = Instance.build("pa", ["x", "y"], [make_disjunction(pa, (0, 1), ["<"])])
    clash = Instance.build("pa", ["x", "y"], [make_disjunction(pa, (0, 1), ["<"]), make_disjunction(pa, (0, 1), [">"])])

    print("Test Case 1: A leaf holds only the empty network")
    leaf = leaf_step(0)
    assert len(leaf) == 1 and EMPTY_NETWORK in leaf, "Test Case 1 Failed: leaf record"

    print("Test Case 2: Introduce keeps the bag certificates extending the child")
    single = introduce_step(leaf, free, (0,), (), node_id=1)
    assert len(single) == 1, "Test Case 2 Failed: one variable has one network"
    assert len(introduce_step(single, free, (0, 1), (0,), node_id=2)) == 3, "Test Case 2 Failed: x, y unconstrained"
    narrowed = introduce_step(single, ordered, (0, 1), (0,), node_id=2)
    assert len(narrowed) == 1, "Test Case 2 Failed: x < y leaves one network"
    assert narrowed.networks().pop().relation((0, 1)) == LT, "Test Case 2 Failed: the network must say x < y"
    assert len(introduce_step(single, clash, (0, 1), (0,), node_id=2)) == 0, "Test Case 2 Failed: clash must be empty"
    with pytest.raises(DecompositionError):
        introduce_step(leaf, free, (0, 1), (), node_id=3)

    print("Test Case 3: Forget projects and merges")
    pair = introduce_step(single, free, (0, 1), (0,), node_id=2)
    forgotten = forget_step(pair, 1, node_id=3)
    assert forgotten.bag == (0,) and len(forgotten) == 1, "Test Case 3 Failed: three networks project to one"
    with pytest.raises(DecompositionError):
        forget_step(pair, 5)

    print("Test Case 4: Join intersects")
    joined = join_step(pair, narrowed, node_id=4)
    assert joined.networks() == narrowed.networks(), "Test Case 4 Failed: join should keep x < y only"
    with pytest.raises(DecompositionError):
        join_step(pair, forgotten)


def test_invalid_decomposition_rejected():
    instance = load_instance(os.path.join(INSTANCES, "betweenness.yml"))
    broken = TreeDecomposition({0: frozenset({0, 1}), 1: frozenset({2, 3})}, {0: 1, 1: None}, 1)
    print("Test Case 1: Decompositions missing a constraint edge are refused")
    with pytest.raises(DecompositionError, match="invalid decomposition"):
        solve(instance, make_nice(broken))


@given(seed=st.integers(min_value=0, max_value=10_000), calculus=st.sampled_from(sorted(SMALL)))
def test_records_are_projected_certificates(seed, calculus):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, SMALL[calculus] + 1))
    instance = random_instance(calculus, n, int(rng.integers(1, 2 * n + 1)), rng)
    nice = nice_of(instance)
    result = solve(instance, nice, witness=False, record_trace=True)
    calc = get_calculus(calculus)
    bounds = {}
    for node_id, record in result.records.items():
        sub = subinstance(instance, nice.subtree_variables(node_id))
        expected = certificate_projections(sub, record.bag)
        assert record.networks() == expected, f"record of node {node_id} differs from projected certificates"
        if len(record.bag) not in bounds:
            bounds[len(record.bag)] = count_complete_satisfiable(calc, len(record.bag))
        assert len(record) <= bounds[len(record.bag)], f"record of node {node_id} too large"
    assert result.verdict == brute_solve(instance), "verdict disagrees with brute force"


@given(seed=st.integers(min_value=0, max_value=10_000), calculus=st.sampled_from(["pa", "ia", "rcc8", "phylo"]))
def test_verdict_ignores_decomposition(seed, calculus):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, SMALL[calculus] + 1))
    instance = random_instance(calculus, n, int(rng.integers(1, 2 * n + 1)), rng)
    graph = primal_graph(instance)
    verdicts = {
        solve(instance, make_nice(td), witness=False).verdict
        for td in (decompose(graph), decompose(graph, "exact"), random_decomposition(graph, rng))
    }
    assert verdicts == {brute_solve(instance)}, f"verdicts {verdicts} depend on the decomposition"


@given(seed=st.integers(min_value=0, max_value=10_000))
def test_parallel_matches_sequential(seed):
    rng = np.random.default_rng(seed)
    instance = ktree_instance("pa", 40, 2, rng, planted=bool(rng.integers(2)))
    nice = nice_of(instance)
    sequential = solve(instance, nice, witness=False)
    parallel = solve(instance, nice, witness=False, parallel=True, max_workers=3)
    assert sequential.verdict == parallel.verdict, "parallel mode changed the verdict"
    if sequential.satisfiable:
        sizes = [stat.record_size for stat in sequential.stats]
        assert sizes == [stat.record_size for stat in parallel.stats], "parallel mode changed record sizes"


@pytest.mark.parametrize("calculus", ["pa", "ia", "cdc", "rcc5", "phylo"])
def test_planted_instances_extract_verified_certificates(calculus):
    rng = np.random.default_rng(11)
    instance = ktree_instance(calculus, 25, 2, rng)
    print(f"Test Case {calculus}: planted w-tree instance yields a verified certificate and model")
    result = CertificateSolver().solve(instance, model=True)
    assert result.satisfiable, f"Test Case {calculus} Failed: planted instance must be SAT"
    calc = get_calculus(calculus)
    assert result.certificate.is_complete(calc), f"Test Case {calculus} Failed: certificate is not complete"
    assert all(implies(result.certificate, c) for c in instance.constraints), f"Test Case {calculus} Failed: constraint not implied"
    model, violated = realize_and_verify(instance, result.certificate)
    assert model is not None and violated is None, f"Test Case {calculus} Failed: model violates {violated}"
    assert result.model is not None, f"Test Case {calculus} Failed: model was requested"


@given(seed=st.integers(min_value=0, max_value=10_000))
def test_block_algebra_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    instance = random_instance("ba2", 4, int(rng.integers(3, 7)), rng, planted=bool(rng.integers(2)))
    result = CertificateSolver().solve(instance)
    assert result.verdict == brute_solve(instance), "ba2 verdict disagrees with brute force"
    if result.satisfiable:
        model, violated = realize_and_verify(instance, result.certificate)
        assert model is not None and violated is None, f"ba2 certificate model violates {violated}"


def test_describe_model():
    names = ("x", "y")
    print("Test Case 1: Point models list one value per variable")
    lines = describe_model(get_calculus("pa"), PointModel({0: 3, 1: 1}), names)
    assert lines == ["x = 3", "y = 1"], f"Test Case 1 Failed: {lines}"

    print("Test Case 2: Tree models list leaves and inner nodes")
    lines = describe_model(get_calculus("phylo"), model_from_nested((0, 1), {0: 0, 1: 1}), names)
    assert lines == ["x -> leaf 1", "y -> leaf 2", "node 0: children (1, 2)"], f"Test Case 2 Failed: {lines}"


def test_rcc8_certificate_without_realizer():
    instance = load_instance(os.path.join(INSTANCES, "regions.yml"))
    print("Test Case 1: RCC8 certificates are completed by search")
    result = CertificateSolver().solve(instance, model=True)
    assert result.satisfiable and result.model is None, "Test Case 1 Failed: expected SAT without a model"
    assert result.certificate.is_complete(instance.calc), "Test Case 1 Failed: certificate incomplete"


def test_solver_configuration(tmp_path):
    print("Test Case 1: Defaults come from the bundled YAML")
    solver = CertificateSolver()
    assert solver.config["witness"] is True and solver.config["decomposition"] == "heuristic", "Test Case 1 Failed"

    print("Test Case 2: Overrides win, None overrides are ignored")
    solver = CertificateSolver(witness=False, parallel=None)
    assert solver.config["witness"] is False and solver.config["parallel"] is False, "Test Case 2 Failed"

    print("Test Case 3: A custom configuration file is read")
    path = tmp_path / "solver.yml"
    path.write_text(yaml.safe_dump({"decomposition": "exact", "witness": False}))
    solver = CertificateSolver(str(path))
    instance = load_instance(os.path.join(INSTANCES, "meetings.yml"))
    result = solver.solve(instance)
    assert result.satisfiable and result.certificate is None and result.records is None, "Test Case 3 Failed: witness off"


def test_stats_csv(tmp_path):
    instance = load_instance(os.path.join(INSTANCES, "meetings.yml"))
    result = CertificateSolver().solve(instance)
    path = tmp_path / "nested" / "stats.csv"
    result.write_stats(str(path))
    print("Test Case 1: One row per node with the fixed columns")
    frame = pd.read_csv(path)
    assert list(frame.columns) == STATS_COLUMNS, f"Test Case 1 Failed: columns {list(frame.columns)}"
    assert len(frame) == result.node_count, "Test Case 1 Failed: expected one row per node"
    assert frame["record_size"].max() == result.peak_record, "Test Case 1 Failed: peak record mismatch"
    assert set(frame["kind"]) <= {"leaf", "introduce", "forget", "join"}, "Test Case 1 Failed: unknown node kind"


def test_extraction_needs_provenance():
    instance = load_instance(os.path.join(INSTANCES, "betweenness.yml"))
    nice = nice_of(instance)
    print("Test Case 1: Records without back-pointers cannot be stitched")
    result = solve(instance, nice, witness=False, record_trace=True)
    with pytest.raises(ValueError, match="provenance"):
        extract_certificate(instance, nice, result.records)

    print("Test Case 2: UNSAT records have nothing to extract")
    clash = load_instance(os.path.join(INSTANCES, "patchwork_union.yml"))
    clash_nice = nice_of(clash)
    result = solve(clash, clash_nice)
    with pytest.raises(ValueError):
        extract_certificate(clash, clash_nice, result.records)


if __name__ == "__main__":
    test_betweenness_certificate()
    test_unsat_and_empty_instances()
    test_dp_steps()
    test_invalid_decomposition_rejected()
    test_records_are_projected_certificates()
    test_verdict_ignores_decomposition()
    test_parallel_matches_sequential()
    for name in ("pa", "ia", "cdc", "rcc5", "phylo"):
        test_planted_instances_extract_verified_certificates(name)
    test_block_algebra_matches_brute_force()
    test_describe_model()
    test_rcc8_certificate_without_realizer()
    test_extraction_needs_provenance()
