import numpy as np
from hypothesis import given, strategies as st

from calculi import get_calculus
from calculus_core import AtomicNetwork, all_tuples, generic_enumerate
from instance_model import Instance, parse_instance
from phylogeny import (
    R1,
    R3,
    R4,
    build_tree,
    model_from_nested,
    phylo_certificates_from_trees,
    phylo_decide,
    phylo_relation_of,
)
from utils import random_model


def test_network_counts():
    calc = get_calculus("phylo")
    print("Test Case 1: Complete phylogeny networks on 1 to 4 variables")
    for m, expected in zip(range(1, 5), (1, 2, 7, 41)):
        count = sum(1 for _ in calc.enumerator(tuple(range(m)), {}))
        assert count == expected, f"Test Case 1 Failed: {m} variables gave {count}, expected {expected}"


def test_relation_of_tree():
    model = model_from_nested(((0, 1), 2), {0: 0, 1: 1, 2: 2})
    print("Test Case 1: The cherry (0, 1) puts 2 outside")
    assert model.is_binary(), "Test Case 1 Failed: tree should be binary"
    assert phylo_relation_of(model, (0, 1, 2)) == R3, "Test Case 1 Failed: expected 2|01"
    assert phylo_relation_of(model, (2, 0, 1)) == R1, "Test Case 1 Failed: expected 2|01 read as R1"
    assert phylo_relation_of(model, (0, 0, 0)) == R4, "Test Case 1 Failed: one leaf is R4"


def test_build_conflicts():
    print("Test Case 1: Incompatible rooted triples have no tree")
    network = AtomicNetwork.build([0, 1, 2], {(0, 1, 2): R1, (1, 0, 2): R1})
    assert phylo_decide(network) is None, "Test Case 1 Failed: 0|12 and 1|02 conflict"

    print("Test Case 2: BUILD joins compatible triples")
    tree = build_tree([0, 1, 2, 3], [(3, 0, 1), (2, 0, 1)])
    assert tree is not None, "Test Case 2 Failed: triples are compatible"


def test_repeated_variables():
    print("Test Case 1: (x, x, y) can say x and y share a leaf")
    assert phylo_decide(AtomicNetwork.build([0, 1], {(0, 0, 1): R4})) is not None, "Test Case 1 Failed: R4 allowed"

    print("Test Case 2: (x, x, y) can say x and y are different leaves")
    assert phylo_decide(AtomicNetwork.build([0, 1], {(0, 0, 1): R3})) is not None, "Test Case 2 Failed: R3 allowed"

    print("Test Case 3: (x, x, y) cannot separate x from itself")
    assert phylo_decide(AtomicNetwork.build([0, 1], {(0, 0, 1): R1})) is None, "Test Case 3 Failed: R1 forbidden"


def test_generic_enumerator_agrees():
    calc = get_calculus("phylo")
    print("Test Case 1: Tree insertion and the generic filter give the same networks")
    trees = list(calc.enumerator((0, 1, 2), {}))
    assert set(trees) == set(generic_enumerate(calc, (0, 1, 2))), "Test Case 1 Failed: enumerators disagree"
    assert len(trees) == len(set(trees)), "Test Case 1 Failed: duplicate networks"


def test_certificates_from_trees():
    print("Test Case 1: One taxon has one certificate")
    assert len(list(phylo_certificates_from_trees(Instance.build("phylo", ["x"]), (0,)))) == 1, "Test Case 1 Failed"

    print("Test Case 2: Three free taxa give the three cherries, full equality and the partial equalities")
    found = list(phylo_certificates_from_trees(Instance.build("phylo", ["x", "y", "z"]), (0, 1, 2)))
    assert len(found) == 7, f"Test Case 2 Failed: expected 7, got {len(found)}"

    print("Test Case 3: A rooted triple over distinct taxa fixes the network")
    instance = parse_instance(
        "calculus: phylo\n"
        "variables: [x, y, z]\n"
        "constraints:\n"
        "  - {scope: [x, y, z], relations: [R1]}\n"
        "  - {neq: [x, y]}\n"
        "  - {neq: [y, z]}\n"
        "  - {neq: [x, z]}\n"
    )
    found = list(phylo_certificates_from_trees(instance, (0, 1, 2)))
    assert len(found) == 1 and found[0].relation((0, 1, 2)) == R1, "Test Case 3 Failed: expected a single tree"


@given(seed=st.integers(min_value=0, max_value=10_000))
def test_random_trees_read_back(seed):
    rng = np.random.default_rng(seed)
    calc = get_calculus("phylo")
    variables = list(range(4))
    model = random_model("phylo", variables, rng)
    network = AtomicNetwork.build(variables, {tup: phylo_relation_of(model, tup) for tup in all_tuples(variables, (3,))})
    witness = phylo_decide(network)
    assert witness is not None, "a network read off a tree must be satisfiable"
    for tup in all_tuples(variables, (3,)):
        assert phylo_relation_of(witness, tup) == network.relation(tup), f"witness tree disagrees at {tup}"
    assert network in set(calc.enumerator(tuple(variables), {})), "enumerator misses a tree network"


if __name__ == "__main__":
    test_network_counts()
    test_relation_of_tree()
    test_build_conflicts()
    test_repeated_variables()
    test_generic_enumerator_agrees()
    test_certificates_from_trees()
    test_random_trees_read_back()
