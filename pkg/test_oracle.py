import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from calculi import PointModel, get_calculus
from calculus_core import UnsupportedRealizer
from instance_model import Instance, load_instance, make_disjunction
from oracle import (
    OracleGuardError,
    brute_certificates,
    brute_solve,
    count_complete_satisfiable,
    patchwork_holds,
    patchwork_pairs,
    realize_and_verify,
    verify_model,
)

INSTANCES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "instances")


def test_brute_solve_examples():
    print("Test Case 1: Shipped examples")
    for name, verdict in (
        ("betweenness.yml", "SAT"),
        ("patchwork_union.yml", "UNSAT"),
        ("meetings.yml", "SAT"),
        ("species.yml", "SAT"),
        ("regions.yml", "SAT"),
    ):
        assert brute_solve(load_instance(os.path.join(INSTANCES, name))) == verdict, f"Test Case 1 Failed: {name}"

    print("Test Case 2: A strict cycle is unsatisfiable")
    pa = get_calculus("pa")
    cycle = Instance.build("pa", ["a", "b", "c"], [
        make_disjunction(pa, (0, 1), ["<"]),
        make_disjunction(pa, (1, 2), ["<"]),
        make_disjunction(pa, (2, 0), ["<", "="]),
    ])
    assert brute_solve(cycle) == "UNSAT", "Test Case 2 Failed: a < b < c <= a"


def test_certificates_and_counts():
    print("Test Case 1: Betweenness has two certificates")
    certificates = list(brute_certificates(load_instance(os.path.join(INSTANCES, "betweenness.yml"))))
    assert len(certificates) == 2, f"Test Case 1 Failed: got {len(certificates)}"

    print("Test Case 2: Counts of complete satisfiable networks")
    for calculus, m, expected in (("pa", 4, 75), ("ia", 2, 13), ("cdc", 2, 9), ("rcc8", 2, 8), ("rcc5", 2, 5), ("phylo", 4, 41)):
        assert count_complete_satisfiable(calculus, m) == expected, f"Test Case 2 Failed: {calculus} on {m}"

    print("Test Case 3: Counting can be restricted by an instance")
    pa = get_calculus("pa")
    restriction = Instance.build("pa", ["x", "y", "z"], [make_disjunction(pa, (0, 1), ["<"])])
    assert count_complete_satisfiable(pa, 3, restriction) == 5, "Test Case 3 Failed: 5 orders keep x < y"


def test_guards():
    print("Test Case 1: Binary calculi stop at 8 variables by default")
    with pytest.raises(OracleGuardError):
        brute_solve(Instance.build("pa", [f"v{i}" for i in range(9)]))

    print("Test Case 2: Ternary calculi stop at 5 variables by default")
    with pytest.raises(OracleGuardError):
        count_complete_satisfiable("phylo", 6)

    print("Test Case 3: Guards can be raised")
    assert brute_solve(Instance.build("pa", [f"v{i}" for i in range(9)]), {"max_binary_variables": 9}) == "SAT", "Test Case 3 Failed"


def test_verify_model():
    pa = get_calculus("pa")
    instance = Instance.build("pa", ["x", "y"], [make_disjunction(pa, (0, 1), ["<", "="])])
    print("Test Case 1: A satisfying model has no violation")
    assert verify_model(instance, PointModel({0: 1, 1: 1})) is None, "Test Case 1 Failed"

    print("Test Case 2: The violated constraint is returned")
    assert verify_model(instance, PointModel({0: 2, 1: 1})) == instance.constraints[0], "Test Case 2 Failed"

    print("Test Case 3: Certificates realize to verified models")
    betweenness = load_instance(os.path.join(INSTANCES, "betweenness.yml"))
    for certificate in brute_certificates(betweenness):
        model, violated = realize_and_verify(betweenness, certificate)
        assert model is not None and violated is None, "Test Case 3 Failed: certificate model violates a constraint"

    print("Test Case 4: RCC8 has no realizer")
    regions = load_instance(os.path.join(INSTANCES, "regions.yml"))
    with pytest.raises(UnsupportedRealizer):
        realize_and_verify(regions, next(brute_certificates(regions)))


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    calculus=st.sampled_from(["pa", "ia", "cdc", "ba2", "rcc5", "rcc8", "phylo"]),
)
def test_patchwork_pairs_combine(seed, calculus):
    rng = np.random.default_rng(seed)
    calc = get_calculus(calculus)
    limit = 4 if calculus in ("phylo", "ba2") else 5
    for first, second in patchwork_pairs(calc, rng, limit, count=3):
        assert calc.decide(first) is not None and calc.decide(second) is not None, "pair members must be satisfiable"
        assert patchwork_holds(calc, first, second), f"{calculus} union of agreeing networks is unsatisfiable"


if __name__ == "__main__":
    test_brute_solve_examples()
    test_certificates_and_counts()
    test_guards()
    test_verify_model()
    test_patchwork_pairs_combine()
