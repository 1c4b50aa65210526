from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Optional, Union

import networkx as nx

from calculus_core import AtomicNetwork, BasicRelation, Calculus, all_tuples, enumerate_certificates
from calculi import get_calculus

PHYLO_NAMES = ("R1", "R2", "R3", "R4")
R1, R2, R3, R4 = range(4)

# Nested binary trees: a leaf is an int label, an inner node a (left, right) pair.
NestedTree = Union[int, tuple]


@dataclass
class PhyloTreeModel:
    """
    A rooted binary tree plus a map from variables to leaves.

    children maps every node to its (zero or two) children. Several variables may
    share a leaf.
    """

    children: dict[int, tuple[int, ...]]
    root: int
    leaf_of: dict[int, int]

    @cached_property
    def parent(self) -> dict[int, Optional[int]]:
        parents = {self.root: None}
        for node, kids in self.children.items():
            for kid in kids:
                parents[kid] = node
        return parents

    @cached_property
    def depth(self) -> dict[int, int]:
        depths = {self.root: 0}
        stack = [self.root]
        while stack:
            node = stack.pop()
            for kid in self.children.get(node, ()):
                depths[kid] = depths[node] + 1
                stack.append(kid)
        return depths

    def leaves(self) -> list[int]:
        return [node for node, kids in self.children.items() if not kids]

    def lca(self, a: int, b: int) -> int:
        while self.depth[a] > self.depth[b]:
            a = self.parent[a]
        while self.depth[b] > self.depth[a]:
            b = self.parent[b]
        while a != b:
            a, b = self.parent[a], self.parent[b]
        return a

    def is_binary(self) -> bool:
        root_kids = len(self.children.get(self.root, ()))
        if root_kids not in (0, 2):
            return False
        return all(len(kids) in (0, 2) for kids in self.children.values())


def phylo_relation_of(model: PhyloTreeModel, args: tuple[int, int, int]) -> int:
    """
    Reads R1 (x|yz), R2 (y|xz), R3 (z|xy) or R4 (x = y = z) off the tree.
    """
    x, y, z = (model.leaf_of[v] for v in args)
    depth = model.depth
    xy, yz, xz = depth[model.lca(x, y)], depth[model.lca(y, z)], depth[model.lca(x, z)]
    top = min(xy, yz, xz)
    if yz > top:
        return R1
    if xz > top:
        return R2
    if xy > top:
        return R3
    return R4


def model_from_nested(tree: Optional[NestedTree], leaf_label: dict[int, int]) -> PhyloTreeModel:
    """
    Numbers the nodes of a nested tree and maps each variable to the leaf of its label.
    """
    children: dict[int, tuple[int, ...]] = {}
    node_of_label: dict[int, int] = {}
    if tree is None:
        return PhyloTreeModel({0: ()}, 0, {})

    counter = 0
    stack = [(tree, None)]
    root = None
    while stack:
        subtree, parent = stack.pop()
        node = counter
        counter += 1
        if parent is None:
            root = node
        else:
            children[parent] = children[parent] + (node,)
        if isinstance(subtree, tuple):
            children[node] = ()
            for kid in reversed(subtree):
                stack.append((kid, node))
        else:
            children[node] = ()
            node_of_label[subtree] = node
    return PhyloTreeModel(children, root, {v: node_of_label[label] for v, label in leaf_label.items()})


# ---------------------------------------------------------------------------------

#                              BUILD

# ---------------------------------------------------------------------------------

def _rooted_triple(tup: tuple[int, int, int], relation: int) -> tuple[int, int, int]:
    """
    (outgroup, first, second) for the triple outgroup|first second named by the entry.
    """
    x, y, z = tup
    if relation == R1:
        return x, y, z
    if relation == R2:
        return y, x, z
    return z, x, y


def build_tree(labels: list[int], triples: list[tuple[int, int, int]]) -> Optional[NestedTree]:
    """
    Aho-style BUILD: split the labels into connected components of the graph joining
    the two ingroup members of every triple, recurse, and hang the parts left-deep.
    Returns None when some level does not split.
    """
    if len(labels) == 1:
        return labels[0]
    graph = nx.Graph()
    graph.add_nodes_from(labels)
    for _, first, second in triples:
        if first != second:
            graph.add_edge(first, second)
    components = sorted(sorted(component) for component in nx.connected_components(graph))
    if len(components) == 1:
        return None

    subtrees = []
    for component in components:
        members = set(component)
        inner = [triple for triple in triples if members.issuperset(triple)]
        subtree = build_tree(component, inner)
        if subtree is None:
            return None
        subtrees.append(subtree)
    tree = subtrees[0]
    for subtree in subtrees[1:]:
        tree = (tree, subtree)
    return tree


def phylo_decide(network: AtomicNetwork) -> Optional[PhyloTreeModel]:
    classes = nx.utils.UnionFind(network.variables)
    for (x, y, z), relation in network.entries:
        if relation == R4:
            classes.union(x, y, z)

    triples = []
    for tup, relation in network.entries:
        if relation == R4:
            continue
        outgroup, first, second = (classes[v] for v in _rooted_triple(tup, relation))
        if outgroup == first or outgroup == second:
            return None
        triples.append((outgroup, first, second))

    labels = sorted({classes[v] for v in network.variables})
    if not labels:
        return model_from_nested(None, {})
    tree = build_tree(labels, triples)
    if tree is None:
        return None
    return model_from_nested(tree, {v: classes[v] for v in network.variables})


# ---------------------------------------------------------------------------------

#                              ENUMERATION

# ---------------------------------------------------------------------------------

def _insertions(tree: NestedTree, label: int) -> Iterator[NestedTree]:
    """
    Every way to hang a new leaf on an edge of the tree, including above the root.
    """
    yield (tree, label)
    if isinstance(tree, tuple):
        left, right = tree
        for variant in _insertions(left, label):
            yield (variant, right)
        for variant in _insertions(right, label):
            yield (left, variant)


def phylo_enumerate(variables: tuple[int, ...], restrictions: dict) -> Iterator[AtomicNetwork]:
    """
    Complete phylogeny networks from equality classes times leaf-labelled binary trees.

    Variables are placed one at a time, joining an existing class or hanging a new
    leaf anywhere in the tree; triples among placed variables never change later.
    """
    triples = all_tuples(variables, (3,))
    seen = set()

    def accepted(model: PhyloTreeModel, placed: set, newest: int) -> bool:
        for tup, allowed in restrictions.items():
            if newest in tup and placed.issuperset(tup) and phylo_relation_of(model, tup) not in allowed:
                return False
        return True

    def extend(index: int, labels: dict, tree: Optional[NestedTree], count: int) -> Iterator[AtomicNetwork]:
        if index == len(variables):
            model = model_from_nested(tree, labels)
            network = AtomicNetwork(variables, tuple((tup, phylo_relation_of(model, tup)) for tup in triples))
            if network not in seen:
                seen.add(network)
                yield network
            return
        variable = variables[index]
        placed = set(variables[: index + 1])
        for label in range(count):
            grown = {**labels, variable: label}
            if accepted(model_from_nested(tree, grown), placed, variable):
                yield from extend(index + 1, grown, tree, count)
        grown = {**labels, variable: count}
        options = [count] if tree is None else _insertions(tree, count)
        for candidate in options:
            if accepted(model_from_nested(candidate, grown), placed, variable):
                yield from extend(index + 1, grown, candidate, count + 1)

    yield from extend(0, {}, None, 0)


def phylo_certificates_from_trees(instance, variables) -> Iterator[AtomicNetwork]:
    return enumerate_certificates(get_calculus("phylo"), instance, variables)


def build_phylogeny() -> Calculus:
    relations = [BasicRelation(index, name, 3, name == "R4") for index, name in enumerate(PHYLO_NAMES)]
    return Calculus(
        "phylo",
        relations,
        decider=phylo_decide,
        enumerator=phylo_enumerate,
        realizer=phylo_decide,
        relation_of=phylo_relation_of,
    )
