import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import networkx as nx
import numpy as np


class DecompositionError(ValueError):
    """Raised for invalid decompositions and malformed decomposition files."""


@dataclass
class TreeDecomposition:
    bags: dict[int, frozenset]
    parent: dict[int, Optional[int]]
    root: int

    def children(self) -> dict[int, list[int]]:
        kids = {node: [] for node in self.bags}
        for node, parent in self.parent.items():
            if parent is not None:
                kids[parent].append(node)
        for node in kids:
            kids[node].sort()
        return kids

    def postorder(self) -> list[int]:
        kids = self.children()
        order, stack = [], [(self.root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            stack.append((node, True))
            for kid in reversed(kids[node]):
                stack.append((kid, False))
        return order


@dataclass(frozen=True)
class NiceNode:
    id: int
    kind: str
    bag: tuple[int, ...]
    vertex: Optional[int] = None
    children: tuple[int, ...] = ()


NODE_KINDS = ("leaf", "introduce", "forget", "join")


@dataclass
class NiceDecomposition:
    """
    Nice tree decomposition; node ids grow from leaves to the root, so sorted ids
    are a valid bottom-up order.
    """

    nodes: dict[int, NiceNode]
    root: int
    _parents: dict = field(default=None, repr=False, compare=False)

    def postorder(self) -> list[int]:
        return sorted(self.nodes)

    def parent_of(self, node_id: int) -> Optional[int]:
        if self._parents is None:
            self._parents = {self.root: None}
            for node in self.nodes.values():
                for kid in node.children:
                    self._parents[kid] = node.id
        return self._parents.get(node_id)

    def as_tree_decomposition(self) -> TreeDecomposition:
        return TreeDecomposition(
            {node.id: frozenset(node.bag) for node in self.nodes.values()},
            {node.id: self.parent_of(node.id) for node in self.nodes.values()},
            self.root,
        )

    def subtree_variables(self, node_id: int) -> set:
        variables, stack = set(), [node_id]
        while stack:
            node = self.nodes[stack.pop()]
            variables.update(node.bag)
            stack.extend(node.children)
        return variables


# ---------------------------------------------------------------------------------

#                              ELIMINATION ORDERINGS

# ---------------------------------------------------------------------------------

def _fill_in(adjacency: dict, vertex) -> int:
    neighbors = sorted(adjacency[vertex])
    return sum(1 for a, b in itertools.combinations(neighbors, 2) if b not in adjacency[a])


def _eliminate(adjacency: dict, vertex) -> None:
    neighbors = adjacency.pop(vertex)
    for a in neighbors:
        adjacency[a].discard(vertex)
    for a, b in itertools.combinations(neighbors, 2):
        adjacency[a].add(b)
        adjacency[b].add(a)


def min_fill_ordering(graph: nx.Graph) -> list:
    """
    Greedy min-fill elimination ordering, ties broken by the smaller vertex.
    Fill values are refreshed only around the eliminated vertex.
    """
    adjacency = {v: set(graph[v]) for v in graph.nodes}
    current = {v: _fill_in(adjacency, v) for v in adjacency}
    heap = [(fill, v) for v, fill in current.items()]
    heapq.heapify(heap)
    order = []
    while heap:
        fill, vertex = heapq.heappop(heap)
        if vertex not in adjacency or current[vertex] != fill:
            continue
        neighbors = set(adjacency[vertex])
        _eliminate(adjacency, vertex)
        order.append(vertex)
        affected = set(neighbors)
        for a in neighbors:
            affected.update(adjacency[a])
        for a in affected:
            current[a] = _fill_in(adjacency, a)
            heapq.heappush(heap, (current[a], a))
    return order


def ordering_width(graph: nx.Graph, order: Iterable) -> int:
    adjacency = {v: set(graph[v]) for v in graph.nodes}
    width = -1
    for vertex in order:
        width = max(width, len(adjacency[vertex]))
        _eliminate(adjacency, vertex)
    return width


def exact_ordering(graph: nx.Graph) -> list:
    """
    Branch and bound over elimination orderings.

    Starts from the min-fill bound, prunes with the minimum degree of the remaining
    graph, eliminates simplicial vertices without branching and skips eliminated
    sets already reached with a width no larger. Meant for small graphs (about 20
    vertices).
    """
    best_order = min_fill_ordering(graph)
    best = [ordering_width(graph, best_order), best_order]
    seen: dict[frozenset, int] = {}

    def simplicial(adjacency, vertex) -> bool:
        return all(b in adjacency[a] for a, b in itertools.combinations(adjacency[vertex], 2))

    def search(adjacency: dict, eliminated: list, width: int) -> None:
        remaining = len(adjacency)
        if remaining - 1 <= width:
            if width < best[0]:
                best[0], best[1] = width, eliminated + sorted(adjacency)
            return
        if max(width, min(len(n) for n in adjacency.values())) >= best[0]:
            return
        key = frozenset(eliminated)
        if seen.get(key, remaining * remaining) <= width:
            return
        seen[key] = width

        candidates = sorted(adjacency, key=lambda v: (len(adjacency[v]), v))
        for vertex in candidates:
            if simplicial(adjacency, vertex):
                candidates = [vertex]
                break
        for vertex in candidates:
            grown = max(width, len(adjacency[vertex]))
            if grown >= best[0]:
                continue
            reduced = {v: set(n) for v, n in adjacency.items()}
            _eliminate(reduced, vertex)
            search(reduced, eliminated + [vertex], grown)

    if graph.number_of_nodes():
        search({v: set(graph[v]) for v in graph.nodes}, [], -1)
    return best[1]


def elimination_ordering(graph: nx.Graph, mode: str = "heuristic") -> list:
    if mode == "heuristic":
        return min_fill_ordering(graph)
    if mode == "exact":
        return exact_ordering(graph)
    raise ValueError(f"unknown decomposition mode '{mode}', expected 'heuristic' or 'exact'")


# ---------------------------------------------------------------------------------

#                              DECOMPOSITIONS

# ---------------------------------------------------------------------------------

def decomposition_from_ordering(graph: nx.Graph, order: Iterable) -> TreeDecomposition:
    """
    Bag of each vertex = the vertex plus its neighbours at elimination time; its parent
    is the bag of the first of those neighbours to be eliminated. Components are
    hung under the last bag.
    """
    order = list(order)
    if not order:
        return TreeDecomposition({0: frozenset()}, {0: None}, 0)
    position = {v: index for index, v in enumerate(order)}
    adjacency = {v: set(graph[v]) for v in graph.nodes}
    bags, parent = {}, {}
    for index, vertex in enumerate(order):
        neighbors = adjacency[vertex]
        bags[index] = frozenset(neighbors | {vertex})
        parent[index] = min((position[u] for u in neighbors), default=None)
        _eliminate(adjacency, vertex)
    root = len(order) - 1
    for index in range(root):
        if parent[index] is None:
            parent[index] = root
    return TreeDecomposition(bags, parent, root)


def decompose(graph: nx.Graph, mode: str = "heuristic") -> TreeDecomposition:
    return decomposition_from_ordering(graph, elimination_ordering(graph, mode))


def random_decomposition(graph: nx.Graph, rng: np.random.Generator) -> TreeDecomposition:
    """
    A valid decomposition from a random elimination ordering; usually far from optimal.
    """
    nodes = sorted(graph.nodes)
    order = [nodes[i] for i in rng.permutation(len(nodes))]
    return decomposition_from_ordering(graph, order)


def width(td: Union[TreeDecomposition, NiceDecomposition]) -> int:
    """
    Largest bag size minus one; -1 when every bag is empty.
    """
    if isinstance(td, NiceDecomposition):
        sizes = [len(node.bag) for node in td.nodes.values()]
    else:
        sizes = [len(bag) for bag in td.bags.values()]
    return max(sizes, default=0) - 1


def make_nice(td: TreeDecomposition) -> NiceDecomposition:
    """
    Converts a decomposition to nice form of the same width.

    Leaves start from an empty bag and introduce their variables; every edge to a
    child becomes a chain of forgets then introduces; several children are joined
    left-deep; the root forgets everything. Chains follow vertex order.
    """
    nodes: dict[int, NiceNode] = {}

    def add(kind: str, bag: Iterable, vertex=None, children: tuple = ()) -> int:
        node_id = len(nodes)
        nodes[node_id] = NiceNode(node_id, kind, tuple(sorted(bag)), vertex, children)
        return node_id

    def walk(start: int, start_bag: set, target: frozenset) -> int:
        current, bag = start, set(start_bag)
        for vertex in sorted(bag - target):
            bag.discard(vertex)
            current = add("forget", bag, vertex, (current,))
        for vertex in sorted(target - bag):
            bag.add(vertex)
            current = add("introduce", bag, vertex, (current,))
        return current

    kids = td.children()
    top: dict[int, int] = {}
    for node in td.postorder():
        bag = td.bags[node]
        branches = [walk(top[kid], td.bags[kid], bag) for kid in kids[node]]
        if not branches:
            branches = [walk(add("leaf", ()), set(), bag)]
        current = branches[0]
        for branch in branches[1:]:
            current = add("join", bag, None, (current, branch))
        top[node] = current
    root = walk(top[td.root], td.bags[td.root], frozenset())
    return NiceDecomposition(nodes, root)


# ---------------------------------------------------------------------------------

#                              VALIDATION

# ---------------------------------------------------------------------------------

@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "ok" if self.ok else "; ".join(self.problems)


def _check_tree(td: TreeDecomposition, report: ValidationReport) -> None:
    if td.root not in td.bags or td.parent.get(td.root) is not None:
        report.problems.append(f"node {td.root} is not a valid root")
        return
    tree = nx.Graph()
    tree.add_nodes_from(td.bags)
    for node, parent in td.parent.items():
        if parent is None:
            if node != td.root:
                report.problems.append(f"node {node} has no parent but is not the root")
        elif parent not in td.bags:
            report.problems.append(f"node {node} has unknown parent {parent}")
        else:
            tree.add_edge(node, parent)
    if not report.problems and not nx.is_tree(tree):
        report.problems.append("the decomposition nodes do not form a tree")


def _check_nice(nice: NiceDecomposition, report: ValidationReport) -> None:
    for node in nice.nodes.values():
        kids = [nice.nodes[k] for k in node.children]
        bag = set(node.bag)
        if node.kind == "leaf":
            if kids or bag:
                report.problems.append(f"leaf {node.id} must have an empty bag and no children")
        elif node.kind == "introduce":
            if len(kids) != 1 or set(kids[0].bag) | {node.vertex} != bag or node.vertex in kids[0].bag:
                report.problems.append(f"introduce node {node.id} must add exactly vertex {node.vertex}")
        elif node.kind == "forget":
            if len(kids) != 1 or bag | {node.vertex} != set(kids[0].bag) or node.vertex in bag:
                report.problems.append(f"forget node {node.id} must remove exactly vertex {node.vertex}")
        elif node.kind == "join":
            if len(kids) != 2 or any(set(kid.bag) != bag for kid in kids):
                report.problems.append(f"join node {node.id} needs two children with its own bag")
        else:
            report.problems.append(f"node {node.id} has unknown kind '{node.kind}'")
    if nice.nodes[nice.root].bag:
        report.problems.append(f"root {nice.root} must have an empty bag")


def validate(td: Union[TreeDecomposition, NiceDecomposition], graph: nx.Graph) -> ValidationReport:
    """
    Checks the tree decomposition properties (and the nice-form rules for nice input).
    Returns:
        ValidationReport: Truthy when valid; otherwise names the failing edge, vertex or node.
    """
    report = ValidationReport()
    nice = td if isinstance(td, NiceDecomposition) else None
    if nice is not None:
        td = nice.as_tree_decomposition()

    _check_tree(td, report)
    if report.problems:
        return report

    covered = set().union(*td.bags.values()) if td.bags else set()
    for vertex in sorted(set(graph.nodes) - covered):
        report.problems.append(f"vertex {vertex} appears in no bag")
    for vertex in sorted(covered - set(graph.nodes)):
        report.problems.append(f"bags mention vertex {vertex} which is not in the graph")
    holders: dict = {}
    for node, bag in td.bags.items():
        for vertex in bag:
            holders.setdefault(vertex, set()).add(node)
    for u, v in sorted(tuple(sorted(edge)) for edge in graph.edges):
        if not holders.get(u, set()) & holders.get(v, set()):
            report.problems.append(f"edge ({u}, {v}) is not covered by any bag")
    for vertex in sorted(covered & set(graph.nodes)):
        links = sum(1 for node in holders[vertex] if td.parent[node] in holders[vertex])
        if links != len(holders[vertex]) - 1:
            report.problems.append(f"vertex {vertex} occurs in a disconnected set of bags")

    if nice is not None:
        _check_nice(nice, report)
    return report


# ---------------------------------------------------------------------------------

#                              TEXT FORMAT

# ---------------------------------------------------------------------------------

def write_decomposition(td: TreeDecomposition, names: Optional[tuple[str, ...]] = None) -> str:
    """
    One line per node: `id parent members...`, with `-` as the root's parent.
    """
    label = (lambda v: names[v]) if names is not None else str
    lines = [f"# {len(td.bags)} nodes, width {max(width(td), 0)}"]
    for node in sorted(td.bags):
        parent = td.parent[node]
        members = " ".join(label(v) for v in sorted(td.bags[node]))
        lines.append(f"{node} {'-' if parent is None else parent} {members}".rstrip())
    return "\n".join(lines) + "\n"


def read_decomposition(text: str, names: tuple[str, ...]) -> TreeDecomposition:
    index = {name: position for position, name in enumerate(names)}
    bags, parent = {}, {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < 2:
            raise DecompositionError(f"line {number}: expected 'id parent members...'")
        try:
            node = int(fields[0])
            up = None if fields[1] == "-" else int(fields[1])
        except ValueError:
            raise DecompositionError(f"line {number}: node ids must be integers") from None
        if node in bags:
            raise DecompositionError(f"line {number}: duplicate node id {node}")
        unknown = [name for name in fields[2:] if name not in index]
        if unknown:
            raise DecompositionError(f"line {number}: unknown variable '{unknown[0]}'")
        bags[node] = frozenset(index[name] for name in fields[2:])
        parent[node] = up
    roots = [node for node, up in parent.items() if up is None]
    if len(roots) != 1:
        raise DecompositionError(f"expected exactly one root, found {len(roots)}")
    missing = [up for up in parent.values() if up is not None and up not in bags]
    if missing:
        raise DecompositionError(f"parent {missing[0]} is not a node")
    return TreeDecomposition(bags, parent, roots[0])
