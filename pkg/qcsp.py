import argparse
import sys

import numpy as np
import yaml
from colorama import Fore, Style, deinit, init

from calculi import available_calculi, get_calculus
from calculus_core import UnsupportedRealizer
from dp_solver import DEFAULT_CONFIG, CertificateSolver
from instance_model import load_instance, primal_graph, serialize_instance
from oracle import brute_solve, count_complete_satisfiable, verify_model
from reductions import cdc_to_ia, coloring_to_cdc, read_edge_list
from tree_decomposition import decompose, width, write_decomposition
from utils import format_error, format_verdict, ktree_instance, random_instance

EXIT_SAT, EXIT_UNSAT, EXIT_ERROR = 0, 1, 2


def _emit(text: str, output: str = None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    with open(output, "w", encoding="utf-8") as file:
        file.write(text)
    print(f"Wrote {output}")


def _oracle_guards(config_path: str) -> dict:
    with open(config_path, "r") as file:
        return (yaml.safe_load(file) or {}).get("oracle", {})


# ---------------------------------------------------------------------------------

#                              COMMANDS

# ---------------------------------------------------------------------------------

def cmd_solve(args) -> int:
    """
    Solves an instance file and prints the verdict, certificate and model.
    Returns:
        int: 0 for SAT, 1 for UNSAT.
    """
    instance = load_instance(args.input)
    solver = CertificateSolver(
        args.config,
        decomposition=args.td,
        witness=args.witness,
        parallel=True if args.parallel else None,
        verbose=True if args.verbose else None,
    )
    nice = solver.decompose(instance, args.decomposition)
    wants_model = args.model and instance.calc.realizer is not None
    result = solver.solve(instance, nice, model=wants_model)
    solver.render(result, instance)
    if args.model and not wants_model:
        print(Fore.YELLOW + f"note: calculus '{instance.calculus}' has no model realizer" + Style.RESET_ALL)
    if result.model is not None:
        violated = verify_model(instance, result.model)
        if violated is not None:
            print(format_error(f"model violates the constraint on {violated.scope}"), file=sys.stderr)
            return EXIT_ERROR
    if args.stats:
        result.write_stats(args.stats)
        print(f"Stats written to {args.stats}")
    return EXIT_SAT if result.satisfiable else EXIT_UNSAT


def cmd_gen(args) -> int:
    if args.kind == "coloring-cdc":
        with open(args.graph, "r", encoding="utf-8") as file:
            graph = read_edge_list(file.read())
        instance = coloring_to_cdc(graph, args.k)
    elif args.kind == "cdc-to-ia":
        instance = cdc_to_ia(load_instance(args.input))
    elif args.kind == "random":
        rng = np.random.default_rng(args.seed)
        instance = random_instance(
            args.calculus, args.variables, args.constraints, rng,
            max_relations=args.max_relations, planted=args.planted,
        )
    else:
        rng = np.random.default_rng(args.seed)
        instance = ktree_instance(args.calculus, args.n, args.w, rng, max_relations=args.max_relations)
    _emit(serialize_instance(instance), args.output)
    return EXIT_SAT


def cmd_decompose(args) -> int:
    instance = load_instance(args.input)
    td = decompose(primal_graph(instance), args.mode)
    _emit(write_decomposition(td, instance.names), args.output)
    if args.output is not None:
        print(f"width {max(width(td), 0)}, {len(td.bags)} nodes")
    return EXIT_SAT


def cmd_count(args) -> int:
    restriction = None
    if args.input is not None:
        restriction = load_instance(args.input)
        if restriction.calculus != args.calculus:
            raise ValueError(f"instance is over '{restriction.calculus}', not '{args.calculus}'")
    count = count_complete_satisfiable(get_calculus(args.calculus), args.m, restriction, _oracle_guards(args.config))
    print(count)
    return EXIT_SAT


def cmd_oracle(args) -> int:
    guards = _oracle_guards(args.config)
    if args.oracle_command == "count":
        print(count_complete_satisfiable(args.calculus, args.m, guards=guards))
        return EXIT_SAT
    verdict = brute_solve(load_instance(args.input), guards)
    print(format_verdict(verdict))
    return EXIT_SAT if verdict == "SAT" else EXIT_UNSAT


# ---------------------------------------------------------------------------------

#                              ARGUMENTS

# ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Treewidth-based solver for qualitative constraint satisfaction problems")
    parser.add_argument("--config", type=str, default=DEFAULT_CONFIG, help="Solver configuration YAML file")
    parser.add_argument("--quiet", action="store_true", help="Disable coloured output")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="Decide an instance file")
    solve.add_argument("--input", required=True, help="Instance YAML file")
    source = solve.add_mutually_exclusive_group()
    source.add_argument("--decomposition", default=None, help="Tree decomposition text file to use")
    source.add_argument("--td", choices=["heuristic", "exact"], default=None, help="How to compute the decomposition")
    solve.add_argument("--witness", action=argparse.BooleanOptionalAction, default=None, help="Extract and print a certificate")
    solve.add_argument("--model", action="store_true", help="Also realize and print a concrete model")
    solve.add_argument("--stats", default=None, help="Write per-node statistics to this CSV file")
    solve.add_argument("--parallel", action="store_true", help="Evaluate independent subtrees in parallel")
    solve.add_argument("--verbose", action="store_true", help="Print progress while solving")
    solve.set_defaults(handler=cmd_solve)

    gen = commands.add_parser("gen", help="Generate instances")
    kinds = gen.add_subparsers(dest="kind", required=True)
    colouring = kinds.add_parser("coloring-cdc", help="k-colourability as a CDC instance")
    colouring.add_argument("--graph", required=True, help="Edge list file")
    colouring.add_argument("-k", type=int, required=True, help="Number of colours")
    translate = kinds.add_parser("cdc-to-ia", help="Translate a CDC instance into IA")
    translate.add_argument("--input", required=True, help="CDC instance YAML file")
    random_kind = kinds.add_parser("random", help="Random instance")
    random_kind.add_argument("--calculus", choices=available_calculi(), required=True)
    random_kind.add_argument("--variables", type=int, required=True, help="Number of variables")
    random_kind.add_argument("--constraints", type=int, required=True, help="Number of constraints")
    random_kind.add_argument("--planted", action="store_true", help="Guarantee satisfiability with a hidden model")
    ktree = kinds.add_parser("ktree", help="Planted instance on a random w-tree")
    ktree.add_argument("--calculus", choices=available_calculi(), required=True)
    ktree.add_argument("-n", type=int, required=True, help="Number of variables")
    ktree.add_argument("-w", type=int, required=True, help="Treewidth of the primal graph")
    for sub in (random_kind, ktree):
        sub.add_argument("--seed", type=int, default=0, help="Random seed")
        sub.add_argument("--max-relations", type=int, default=3, help="Largest disjunction per constraint")
    for sub in (colouring, translate, random_kind, ktree):
        sub.add_argument("--output", default=None, help="Write here instead of stdout")
    gen.set_defaults(handler=cmd_gen)

    decompose_cmd = commands.add_parser("decompose", help="Tree decomposition of an instance's primal graph")
    decompose_cmd.add_argument("--input", required=True, help="Instance YAML file")
    decompose_cmd.add_argument("--mode", choices=["heuristic", "exact"], default="heuristic")
    decompose_cmd.add_argument("--output", default=None, help="Write here instead of stdout")
    decompose_cmd.set_defaults(handler=cmd_decompose)

    count = commands.add_parser("count", help="Count complete satisfiable networks")
    count.add_argument("--calculus", choices=available_calculi(), required=True)
    count.add_argument("-m", type=int, required=True, help="Number of variables")
    count.add_argument("--input", default=None, help="Only count networks implying this instance's constraints")
    count.set_defaults(handler=cmd_count)

    oracle = commands.add_parser("oracle", help="Brute-force reference answers")
    oracle_commands = oracle.add_subparsers(dest="oracle_command", required=True)
    oracle_solve = oracle_commands.add_parser("solve", help="Brute-force satisfiability")
    oracle_solve.add_argument("--input", required=True, help="Instance YAML file")
    oracle_count = oracle_commands.add_parser("count", help="Brute-force network count")
    oracle_count.add_argument("--calculus", choices=available_calculi(), required=True)
    oracle_count.add_argument("-m", type=int, required=True, help="Number of variables")
    oracle.set_defaults(handler=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    init(strip=True if args.quiet else None)
    try:
        return args.handler(args)
    except (ValueError, OSError, yaml.YAMLError, UnsupportedRealizer) as error:
        print(format_error(str(error), colour=not args.quiet), file=sys.stderr)
        return EXIT_ERROR
    finally:
        deinit()


if __name__ == "__main__":
    sys.exit(main())
