"""
Brute-force ground truth for the certificate solver: global certificate search,
semantic verification of concrete models and counting of complete networks.
"""

from typing import Iterator, Optional, Union

import numpy as np

from calculi import get_calculus
from calculus_core import (
    AtomicNetwork,
    Calculus,
    UnsupportedRealizer,
    enumerate_certificates,
    project,
    union,
)
from instance_model import Constraint, Instance
from utils import random_completion

DEFAULT_GUARDS = {"max_binary_variables": 8, "max_ternary_variables": 5}


class OracleGuardError(ValueError):
    """Raised instead of running an oracle on an instance too large for brute force."""


def _calc(calculus: Union[str, Calculus]) -> Calculus:
    return get_calculus(calculus) if isinstance(calculus, str) else calculus


def check_guard(calc: Calculus, n: int, guards: Optional[dict] = None) -> None:
    guards = {**DEFAULT_GUARDS, **(guards or {})}
    ternary = max(calc.arity_set) >= 3
    limit = guards["max_ternary_variables"] if ternary else guards["max_binary_variables"]
    if n > limit:
        kind = "ternary" if ternary else "binary"
        raise OracleGuardError(f"{n} variables exceed the oracle limit of {limit} for {kind} calculus '{calc.name}'")


# ---------------------------------------------------------------------------------

#                              SATISFIABILITY

# ---------------------------------------------------------------------------------

def brute_certificates(instance: Instance, guards: Optional[dict] = None) -> Iterator[AtomicNetwork]:
    """
    Every certificate of the instance: complete satisfiable networks on all of V
    that imply each constraint.
    """
    calc = instance.calc
    check_guard(calc, len(instance.variables), guards)
    return enumerate_certificates(calc, instance, instance.variables)


def brute_solve(instance: Instance, guards: Optional[dict] = None) -> str:
    """
    Decides the instance by picking one DNF term per constraint and asking the
    decider whether the atoms picked so far are jointly satisfiable.

    A satisfiable choice extends to a complete network implying every constraint,
    and every certificate contains some choice, so this agrees with certificate search.
    Args:
        instance (Instance): The instance to decide.
        guards (dict): Overrides for max_binary_variables / max_ternary_variables.
    Returns:
        str: "SAT" or "UNSAT".
    """
    calc = instance.calc
    check_guard(calc, len(instance.variables), guards)
    constraints = sorted(instance.constraints, key=lambda c: len(c.dnf))
    dead = set()

    def search(index: int, chosen: dict) -> bool:
        if index == len(constraints):
            return True
        for term in constraints[index].dnf:
            grown = dict(chosen)
            if any(grown.setdefault(atom.args, atom.relation) != atom.relation for atom in term):
                continue
            network = AtomicNetwork.build(instance.variables, grown)
            if (index, network) in dead:
                continue
            if calc.decide(network) is not None and search(index + 1, grown):
                return True
            dead.add((index, network))
        return False

    return "SAT" if search(0, {}) else "UNSAT"


def verify_model(instance: Instance, model, calc: Optional[Calculus] = None) -> Optional[Constraint]:
    """
    Evaluates every constraint directly on a concrete model.
    Returns:
        Constraint or None: The first violated constraint, or None when all hold.
    """
    calc = calc or instance.calc
    for constraint in instance.constraints:
        if not any(all(calc.evaluate(model, atom.relation, atom.args) for atom in term) for term in constraint.dnf):
            return constraint
    return None


def realize_and_verify(instance: Instance, certificate: AtomicNetwork):
    """
    Builds a concrete model from a certificate and checks the instance against it.
    Returns:
        (model, violated): the model (None if the certificate is unsatisfiable) and the first violated constraint.
    """
    calc = instance.calc
    if calc.realizer is None:
        raise UnsupportedRealizer(f"calculus '{calc.name}' has no model realizer")
    model = calc.realizer(certificate)
    if model is None:
        return None, None
    return model, verify_model(instance, model, calc)


# ---------------------------------------------------------------------------------

#                              COUNTING AND PATCHWORK

# ---------------------------------------------------------------------------------

def count_complete_satisfiable(
    calculus: Union[str, Calculus],
    m: int,
    instance: Optional[Instance] = None,
    guards: Optional[dict] = None,
) -> int:
    """
    Number of complete satisfiable networks on m variables, optionally restricted to
    those implying the constraints of an instance over variables 0..m-1.
    """
    calc = _calc(calculus)
    check_guard(calc, m, guards)
    if instance is None:
        instance = Instance.build(calc.name, [f"v{i}" for i in range(m)])
    return sum(1 for _ in enumerate_certificates(calc, instance, range(m)))


def patchwork_holds(calc: Calculus, first: AtomicNetwork, second: AtomicNetwork) -> bool:
    return calc.decide(union(first, second)) is not None


def patchwork_pairs(
    calculus: Union[str, Calculus],
    rng: np.random.Generator,
    max_vars: int,
    count: int = 1,
) -> Iterator[tuple[AtomicNetwork, AtomicNetwork]]:
    """
    Samples pairs of complete satisfiable networks that agree on their shared variables.

    The first network is a random completion on V1; the second is a random completion
    on V2 of the first one's projection onto V1 ∩ V2.
    """
    calc = _calc(calculus)
    for _ in range(count):
        n = int(rng.integers(2, max_vars + 1))
        variables = list(range(n))
        overlap_size = int(rng.integers(0, n))
        shuffled = [int(v) for v in rng.permutation(variables)]
        overlap = shuffled[:overlap_size]
        rest = shuffled[overlap_size:]
        split = int(rng.integers(0, len(rest) + 1))
        first_vars = sorted(overlap + rest[:split])
        second_vars = sorted(overlap + rest[split:])
        first = random_completion(calc, first_vars, rng)
        shared = project(first, overlap)
        second = random_completion(calc, second_vars, rng, base=shared)
        yield first, second


def certificate_projections(instance: Instance, variables, guards: Optional[dict] = None) -> set[AtomicNetwork]:
    """
    {C[X] : C a certificate of the instance} for a variable set X.
    """
    return {project(certificate, variables) for certificate in brute_certificates(instance, guards)}

