import itertools
from dataclasses import dataclass

import networkx as nx

from calculi import CDC_NAMES, get_calculus
from instance_model import Atom, Constraint, Instance, make_disjunction
from tree_decomposition import decompose, width

# Row-by-row translation of cardinal directions into Allen relations.
CDC_TO_IA = {
    "=": ("e",),
    "N": ("si",),
    "E": ("f",),
    "S": ("s",),
    "W": ("fi",),
    "NE": ("oi", "mi", "pi"),
    "SE": ("d",),
    "SW": ("p", "m", "o"),
    "NW": ("di",),
}


@dataclass
class ColouringInstance:
    graph: nx.Graph
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if nx.number_of_selfloops(self.graph):
            raise ValueError("colouring graphs must not have self-loops")


# ---------------------------------------------------------------------------------

#                              EDGE LISTS

# ---------------------------------------------------------------------------------

def read_edge_list(text: str) -> nx.Graph:
    """
    Reads `u v` lines into an undirected graph. A single token declares an isolated
    vertex and `#` starts a comment.
    """
    graph = nx.Graph()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) == 1:
            graph.add_node(tokens[0])
        elif len(tokens) == 2:
            u, v = tokens
            if u == v:
                raise ValueError(f"line {number}: self-loop on '{u}'")
            graph.add_edge(u, v)
        else:
            raise ValueError(f"line {number}: expected 'u v', got '{line}'")
    return graph


def write_edge_list(graph: nx.Graph) -> str:
    lines = [f"# {graph.number_of_nodes()} vertices, {graph.number_of_edges()} edges"]
    isolated = sorted(str(v) for v in graph.nodes if graph.degree(v) == 0)
    lines.extend(isolated)
    lines.extend(f"{u} {v}" for u, v in sorted(tuple(sorted((str(a), str(b)))) for a, b in graph.edges))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------------

#                              COLOURING TO CARDINAL DIRECTIONS

# ---------------------------------------------------------------------------------

def coloring_to_cdc(graph: nx.Graph, k: int) -> Instance:
    """
    Encodes k-colourability of a graph as a CDC instance.

    Colour points c_1..c_k run diagonally south-west to north-east with helper points
    h_j fencing the gaps between consecutive colours; every vertex point z_v must sit
    on one colour point, and adjacent vertices must differ.
    Args:
        graph (nx.Graph): The graph to colour.
        k (int): Number of colours, at least 2.
    Returns:
        Instance: A CDC instance that is satisfiable iff the graph is k-colourable.
    """
    if k < 2:
        raise ValueError(f"the colouring reduction needs k >= 2, got {k}")
    graph = ColouringInstance(graph, k).graph
    calc = get_calculus("cdc")
    vertices = sorted(graph.nodes, key=str)
    names = [f"c{i}" for i in range(1, k + 1)] + [f"h{j}" for j in range(1, k)] + [f"z{v}" for v in vertices]
    index = {name: position for position, name in enumerate(names)}
    if len(index) != len(names):
        raise ValueError("vertex names collide with colour variables")

    def c(i):
        return index[f"c{i}"]

    def h(j):
        return index[f"h{j}"]

    def z(v):
        return index[f"z{v}"]

    constraints = []
    for i in range(1, k):
        constraints.append(make_disjunction(calc, (c(i), c(i + 1)), ["SW"]))
        constraints.append(make_disjunction(calc, (h(i), c(i)), ["N"]))
        constraints.append(make_disjunction(calc, (h(i), c(i + 1)), ["W"]))
    for v in vertices:
        constraints.append(make_disjunction(calc, (z(v), c(1)), ["=", "NE"]))
        constraints.append(make_disjunction(calc, (z(v), c(k)), ["=", "SW"]))
        for i in range(2, k):
            constraints.append(make_disjunction(calc, (z(v), c(i)), ["SW", "=", "NE"]))
        for j in range(1, k):
            constraints.append(make_disjunction(calc, (z(v), h(j)), [name for name in CDC_NAMES if name != "SE"]))
    for u, v in sorted((tuple(sorted((a, b), key=str)) for a, b in graph.edges), key=lambda e: (str(e[0]), str(e[1]))):
        constraints.append(make_disjunction(calc, (z(u), z(v)), ["SW", "NE"]))
    return Instance.build("cdc", names, constraints)


def expected_constraint_count(graph: nx.Graph, k: int) -> int:
    n, m = graph.number_of_nodes(), graph.number_of_edges()
    return 3 * (k - 1) + 2 * n + (k - 2) * n + (k - 1) * n + m


# ---------------------------------------------------------------------------------

#                              CARDINAL DIRECTIONS TO INTERVALS

# ---------------------------------------------------------------------------------

def cdc_to_ia(instance: Instance) -> Instance:
    """
    Rewrites a CDC instance over the Interval Algebra atom by atom; an atom whose
    direction maps to several Allen relations splits its term. Variables and primal
    graph are unchanged.
    """
    if instance.calculus != "cdc":
        raise ValueError(f"cdc_to_ia expects a cdc instance, got '{instance.calculus}'")
    ia = get_calculus("ia")
    translated = []
    for constraint in instance.constraints:
        terms = []
        for term in constraint.dnf:
            options = [
                [Atom(ia.relation(name).id, atom.args) for name in CDC_TO_IA[CDC_NAMES[atom.relation]]]
                for atom in term
            ]
            for choice in itertools.product(*options):
                if choice not in terms:
                    terms.append(choice)
        translated.append(Constraint.make(constraint.scope, terms))
    return Instance("ia", instance.names, instance.variables, tuple(translated))


# ---------------------------------------------------------------------------------

#                              CHECKS

# ---------------------------------------------------------------------------------

def is_k_colourable(graph: nx.Graph, k: int) -> bool:
    """
    Backtracking colouring check, highest degree first.
    """
    order = sorted(graph.nodes, key=lambda v: (-graph.degree(v), str(v)))
    colour = {}

    def place(index: int) -> bool:
        if index == len(order):
            return True
        vertex = order[index]
        taken = {colour[u] for u in graph.neighbors(vertex) if u in colour}
        # at most one fresh colour per step
        limit = min(k, max(colour.values(), default=-1) + 2)
        for candidate in range(limit):
            if candidate not in taken:
                colour[vertex] = candidate
                if place(index + 1):
                    return True
                del colour[vertex]
        return False

    return place(0)


def treewidth_bound(graph: nx.Graph, k: int) -> int:
    """
    Width bound for coloring_to_cdc(graph, k): tw(G) + 2k - 1, with tw(G) computed exactly.
    """
    return max(width(decompose(graph, "exact")), 0) + 2 * k - 1
