import argparse
import itertools
import os

import networkx as nx
import numpy as np

from calculi import get_calculus
from dp_solver import DEFAULT_CONFIG, CertificateSolver
from instance_model import primal_graph
from oracle import brute_solve, patchwork_holds, patchwork_pairs
from reductions import cdc_to_ia, coloring_to_cdc, is_k_colourable
from utils import random_graph, random_instance

print("Script has started executing.")

# Largest instance the oracle check draws per calculus.
ORACLE_LIMITS = {"pa": 6, "ia": 6, "cdc": 6, "rcc5": 6, "rcc8": 6, "ba2": 4, "phylo": 4}
PATCHWORK_LIMITS = {"pa": 6, "ia": 6, "cdc": 6, "rcc5": 6, "rcc8": 5, "ba1": 5, "ba2": 4, "ba3": 3, "phylo": 5}


def oracle_agreement(solver: CertificateSolver, calculus: str, count: int, max_vars: int, rng, log_every: int = 100) -> int:
    """
    Solves random instances with the solver and the brute-force oracle.
    Returns:
        int: Number of disagreements.
    """
    disagreements = 0
    for index in range(1, count + 1):
        n = int(rng.integers(1, max_vars + 1))
        m = int(rng.integers(1, 2 * n + 1))
        instance = random_instance(calculus, n, m, rng)
        if solver.solve(instance).verdict != brute_solve(instance):
            disagreements += 1
            print(f"  disagreement on {calculus} instance {index}")
        if index % log_every == 0:
            print(f"{calculus}: {index}/{count} instances, {disagreements} disagreements")
    return disagreements


def patchwork_failures(calculus: str, count: int, max_vars: int, rng) -> int:
    failures = 0
    for first, second in patchwork_pairs(calculus, rng, max_vars, count):
        if not patchwork_holds(get_calculus(calculus), first, second):
            failures += 1
    print(f"{calculus}: {failures} patchwork failures in {count} pairs")
    return failures


def reduction_mismatches(solver: CertificateSolver, graphs: int, translations: int, rng) -> tuple[int, int, int]:
    """
    Colouring reduction against brute-force colouring, then CDC-to-IA translation
    against the untranslated verdict (solver and oracle) and primal graph.
    """
    colouring = 0
    for _ in range(graphs):
        graph = random_graph(int(rng.integers(1, 7)), float(rng.uniform(0.2, 0.8)), rng)
        for k in (2, 3, 4):
            if solver.solve(coloring_to_cdc(graph, k)).satisfiable != is_k_colourable(graph, k):
                colouring += 1
    print(f"colouring: {colouring} mismatches over {graphs} graphs and k in (2, 3, 4)")

    verdicts, structure = 0, 0
    for _ in range(translations):
        n = int(rng.integers(1, 7))
        source = random_instance("cdc", n, int(rng.integers(1, 2 * n + 1)), rng)
        target = cdc_to_ia(source)
        if solver.solve(source).verdict != solver.solve(target).verdict or brute_solve(source) != brute_solve(target):
            verdicts += 1
        if not nx.utils.graphs_equal(primal_graph(source), primal_graph(target)):
            structure += 1
    print(f"cdc-to-ia: {verdicts} verdict changes, {structure} primal graph changes over {translations} instances")
    return colouring, verdicts, structure


def evaluate(
    instances: int = 500,
    pairs: int = 1000,
    graphs: int = 200,
    translations: int = 200,
    seed: int = 0,
    config_path: str = DEFAULT_CONFIG,
    save_folder: str = "results/oracle",
):
    rng = np.random.default_rng(seed)
    solver = CertificateSolver(config_path, witness=False)
    os.makedirs(save_folder, exist_ok=True)

    agreement = {calculus: oracle_agreement(solver, calculus, instances, limit, rng) for calculus, limit in ORACLE_LIMITS.items()}
    patchwork = {calculus: patchwork_failures(calculus, pairs, limit, rng) for calculus, limit in PATCHWORK_LIMITS.items()}
    reductions = reduction_mismatches(solver, graphs, translations, rng)

    np.save(f"{save_folder}/oracle_disagreements.npy", np.array(list(agreement.values())))
    np.save(f"{save_folder}/patchwork_failures.npy", np.array(list(patchwork.values())))
    np.save(f"{save_folder}/reduction_mismatches.npy", np.array(reductions))
    total = sum(agreement.values()) + sum(patchwork.values()) + sum(reductions)
    print(f"Evaluation finished with {total} problems in total.")
    for calculus, problems in itertools.chain(agreement.items(), patchwork.items()):
        if problems:
            print(f"  {calculus}: {problems}")
    return total


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Cross-check the solver against brute force at full scale")
    parser.add_argument("--instances", type=int, default=500, help="Random instances per calculus")
    parser.add_argument("--pairs", type=int, default=1000, help="Patchwork pairs per calculus")
    parser.add_argument("--graphs", type=int, default=200, help="Random graphs for the colouring reduction")
    parser.add_argument("--translations", type=int, default=200, help="Random CDC instances for the IA translation")
    parser.add_argument("--seed", type=int, default=0, help="Random seed")
    parser.add_argument("--config", type=str, default=DEFAULT_CONFIG, help="Solver configuration YAML file")
    parser.add_argument("--save_folder", type=str, default="results/oracle", help="Folder for saved counts")
    args = parser.parse_args()

    evaluate(
        instances=args.instances,
        pairs=args.pairs,
        graphs=args.graphs,
        translations=args.translations,
        seed=args.seed,
        config_path=args.config,
        save_folder=args.save_folder,
    )
