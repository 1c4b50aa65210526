from typing import Optional

import networkx as nx
import numpy as np
from colorama import Fore, Style

from calculi import BoxModel, IntervalModel, PlaneModel, PointModel, get_calculus
from calculus_core import AtomicNetwork, Calculus, UnsupportedRealizer, all_tuples
from instance_model import Atom, Constraint, Instance
from phylogeny import model_from_nested
from rcc import Rcc5SetModel


# ---------------------------------------------------------------------------------

#                              RANDOM MODELS

# ---------------------------------------------------------------------------------

def _random_interval(rng: np.random.Generator, span: int) -> tuple[int, int]:
    start, end = sorted(int(x) for x in rng.choice(span, size=2, replace=False))
    return start, end


def _random_nested(labels: list[int], rng: np.random.Generator):
    if len(labels) == 1:
        return labels[0]
    shuffled = [int(x) for x in rng.permutation(labels)]
    cut = int(rng.integers(1, len(shuffled)))
    return (_random_nested(shuffled[:cut], rng), _random_nested(shuffled[cut:], rng))


def random_model(calculus: str, variables, rng: np.random.Generator):
    """
    Draws a concrete model over small integer coordinates, so ties (and therefore
    equalities and touching relations) show up often.
    Args:
        calculus (str): Registry name of the calculus.
        variables (Iterable[int]): Variables to place.
        rng (np.random.Generator): Random source.
    Returns:
        A model the calculus' relation_of can read.
    """
    variables = list(variables)
    span = max(len(variables), 2)
    if calculus == "pa":
        return PointModel({v: int(rng.integers(span)) for v in variables})
    if calculus == "ia":
        return IntervalModel({v: _random_interval(rng, 2 * span) for v in variables})
    if calculus == "cdc":
        return PlaneModel({v: (int(rng.integers(span)), int(rng.integers(span))) for v in variables})
    if calculus.startswith("ba"):
        d = int(calculus[2:])
        return BoxModel({v: tuple(_random_interval(rng, 2 * span) for _ in range(d)) for v in variables})
    if calculus == "rcc5":
        universe = [f"u{i}" for i in range(4)]
        regions = {}
        for v in variables:
            picked = [point for point in universe if rng.random() < 0.5] or [universe[int(rng.integers(4))]]
            regions[v] = frozenset(picked)
        return Rcc5SetModel(regions)
    if calculus == "phylo":
        count = int(rng.integers(1, len(variables) + 1)) if variables else 1
        tree = _random_nested(list(range(count)), rng)
        return model_from_nested(tree, {v: int(rng.integers(count)) for v in variables})
    raise UnsupportedRealizer(f"no random models for calculus '{calculus}'")


def random_completion(
    calc: Calculus,
    variables,
    rng: np.random.Generator,
    base: Optional[AtomicNetwork] = None,
) -> Optional[AtomicNetwork]:
    """
    A random complete satisfiable network containing `base`: depth-first search over
    the tuples with shuffled relation order and decider pruning. None if `base` is unsatisfiable.
    """
    fixed = dict(base.entries) if base is not None else {}
    variables = tuple(sorted(set(variables) | set(base.variables if base is not None else ())))
    if base is not None and calc.decide(base) is None:
        return None
    tuples = sorted(all_tuples(variables, calc.arity_set), key=lambda tup: (max(tup), tup))
    assigned = dict(fixed)

    def extend(index: int) -> Optional[AtomicNetwork]:
        if index == len(tuples):
            return AtomicNetwork.build(variables, assigned)
        tup = tuples[index]
        if tup in fixed:
            return extend(index + 1)
        diagonal = calc.diagonal(len(tup))
        if diagonal is not None and len(set(tup)) == 1:
            options = [diagonal.id]
        else:
            options = [int(r) for r in rng.permutation([r.id for r in calc.relations_of_arity(len(tup))])]
        for relation in options:
            assigned[tup] = relation
            if calc.decide(AtomicNetwork.build(variables, assigned)) is not None:
                found = extend(index + 1)
                if found is not None:
                    return found
        del assigned[tup]
        return None

    return extend(0)


# ---------------------------------------------------------------------------------

#                              RANDOM INSTANCES

# ---------------------------------------------------------------------------------

def _variable_names(n: int) -> list[str]:
    return [f"v{i}" for i in range(n)]


def _random_relations(calc: Calculus, arity: int, rng: np.random.Generator, max_relations: int) -> list[int]:
    options = [r.id for r in calc.relations_of_arity(arity)]
    size = int(rng.integers(1, min(max_relations, len(options)) + 1))
    return sorted(int(r) for r in rng.choice(options, size=size, replace=False))


def _random_scope(n: int, arity: int, rng: np.random.Generator) -> tuple[int, ...]:
    return tuple(int(v) for v in rng.choice(n, size=arity, replace=n < arity))


def _random_constraint(calc: Calculus, scope: tuple[int, ...], rng, max_relations: int, model=None, dnf_rate: float = 0.0) -> Constraint:
    arity = len(scope)
    if rng.random() < dnf_rate:
        terms = []
        for index in range(2):
            atoms = {}
            for _ in range(int(rng.integers(1, 3))):
                args = tuple(int(v) for v in rng.permutation(scope))
                if model is not None and index == 0:
                    relation = calc.relation_of(model, args)
                else:
                    relation = int(rng.choice([r.id for r in calc.relations_of_arity(arity)]))
                atoms.setdefault(args, relation)
            terms.append(tuple(Atom(relation, args) for args, relation in sorted(atoms.items())))
        return Constraint.make(scope, terms)
    relations = set(_random_relations(calc, arity, rng, max_relations))
    if model is not None:
        relations.add(calc.relation_of(model, scope))
    return Constraint.make(scope, [(Atom(r, scope),) for r in sorted(relations)])


def random_instance(
    calculus: str,
    n: int,
    m: int,
    rng: np.random.Generator,
    max_relations: int = 3,
    planted: bool = False,
    dnf_rate: float = 0.2,
) -> Instance:
    """
    Draws m random constraints over n variables.
    Args:
        calculus (str): Registry name of the calculus.
        n (int): Number of variables.
        m (int): Number of constraints.
        rng (np.random.Generator): Random source.
        max_relations (int): Largest disjunction drawn per constraint.
        planted (bool): Make every constraint hold in a hidden random model (the instance is then SAT).
        dnf_rate (float): Share of constraints drawn as two-term DNFs instead of disjunctions.
    Returns:
        Instance: The generated instance with variables named v0..v{n-1}.
    """
    calc = get_calculus(calculus)
    model = random_model(calculus, range(n), rng) if planted else None
    constraints = []
    for _ in range(m):
        arity = int(rng.choice(sorted(calc.arity_set)))
        scope = _random_scope(n, arity, rng)
        constraints.append(_random_constraint(calc, scope, rng, max_relations, model, dnf_rate))
    return Instance.build(calculus, _variable_names(n), constraints)


def ktree_graph(n: int, w: int, rng: np.random.Generator) -> nx.Graph:
    """
    A random w-tree on n vertices: a (w+1)-clique grown by attaching each new
    vertex to a random w-subset of an existing (w+1)-clique.
    """
    graph = nx.Graph()
    first = tuple(range(min(n, w + 1)))
    graph.add_nodes_from(first)
    graph.add_edges_from((u, v) for i, u in enumerate(first) for v in first[i + 1:])
    cliques = [first]
    for v in range(len(first), n):
        base = cliques[int(rng.integers(len(cliques)))]
        dropped = int(rng.integers(len(base)))
        attach = base[:dropped] + base[dropped + 1:]
        graph.add_edges_from((u, v) for u in attach)
        cliques.append(tuple(sorted(attach + (v,))))
    return graph


def ktree_instance(
    calculus: str,
    n: int,
    w: int,
    rng: np.random.Generator,
    max_relations: int = 3,
    planted: bool = True,
) -> Instance:
    """
    An instance whose primal graph is a random w-tree, so its treewidth is at most w.
    Binary calculi get one constraint per edge; ternary ones one per triangle at each
    attached vertex.
    """
    calc = get_calculus(calculus)
    graph = ktree_graph(n, w, rng)
    model = random_model(calculus, range(n), rng) if planted else None
    constraints = []
    if 2 in calc.arity_set:
        for u, v in sorted(tuple(sorted(edge)) for edge in graph.edges):
            constraints.append(_random_constraint(calc, (u, v), rng, max_relations, model))
    else:
        for v in range(n):
            earlier = sorted(u for u in graph.neighbors(v) if u < v)
            for i, a in enumerate(earlier):
                for b in earlier[i + 1:]:
                    constraints.append(_random_constraint(calc, (a, b, v), rng, max_relations, model))
    return Instance.build(calculus, _variable_names(n), constraints)


def random_graph(n: int, p: float, rng: np.random.Generator) -> nx.Graph:
    return nx.gnp_random_graph(n, p, seed=int(rng.integers(2**31 - 1)))


# ---------------------------------------------------------------------------------

#                              TERMINAL OUTPUT

# ---------------------------------------------------------------------------------

def format_verdict(verdict: str, colour: bool = True) -> str:
    if not colour:
        return verdict
    shade = Fore.GREEN if verdict == "SAT" else Fore.RED
    return shade + verdict + Style.RESET_ALL


def format_error(message: str, colour: bool = True) -> str:
    if not colour:
        return f"error: {message}"
    return Fore.YELLOW + f"error: {message}" + Style.RESET_ALL
