"""
Region Connection Calculi (RCC5 and RCC8).

Atomic networks are decided by algebraic closure over the composition tables
shipped in tables/*.yml. Relation sets are bitmasks over relation ids.
"""

import os
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional

import networkx as nx
import yaml

from calculus_core import AtomicNetwork, BasicRelation, Calculus, all_tuples

TABLES_ENV = "QCSP_TABLES_PATH"
RCC_VARIANTS = ("rcc5", "rcc8")

_BUNDLED_TABLES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "tables")


def table_search_path() -> list[str]:
    """
    Directories searched for composition tables: QCSP_TABLES_PATH first, then the bundled tables/.
    """
    configured = os.environ.get(TABLES_ENV, "")
    return [folder for folder in configured.split(os.pathsep) if folder] + [_BUNDLED_TABLES]


def find_table(variant: str) -> str:
    for folder in table_search_path():
        path = os.path.join(folder, f"{variant}.yml")
        if os.path.isfile(path):
            return path
    raise FileNotFoundError(f"No composition table '{variant}.yml' in {table_search_path()}")


class CompositionTable:
    def __init__(self, data: dict):
        """
        Validates a composition table document and compiles it into bitmasks.
        Args:
            data (dict): Parsed YAML with relations, diagonal, converse and composition keys.
        Returns: None
        """
        self.name = data.get("name", "rcc")
        self.names = tuple(data["relations"])
        index = {name: position for position, name in enumerate(self.names)}
        if len(index) != len(self.names):
            raise ValueError(f"Table '{self.name}' repeats a relation name")

        def lookup(name):
            if name not in index:
                raise ValueError(f"Table '{self.name}' mentions unknown relation '{name}'")
            return index[name]

        self.diagonal = lookup(data["diagonal"])
        self.universal = (1 << len(self.names)) - 1
        self.converse = tuple(lookup(data["converse"][name]) for name in self.names)

        composition = data["composition"]
        self.table = [[0] * len(self.names) for _ in self.names]
        for first in self.names:
            row = composition.get(first)
            if row is None:
                raise ValueError(f"Table '{self.name}' has no composition row for '{first}'")
            for second in self.names:
                if second not in row:
                    raise ValueError(f"Table '{self.name}' misses the entry {first} o {second}")
                mask = 0
                for name in row[second]:
                    mask |= 1 << lookup(name)
                self.table[lookup(first)][lookup(second)] = mask
        self._compose_cache: dict[tuple[int, int], int] = {}

    @classmethod
    def load(cls, path: str) -> "CompositionTable":
        with open(path, "r") as file:
            return cls(yaml.safe_load(file))

    def members(self, mask: int) -> list[int]:
        return [relation for relation in range(len(self.names)) if mask >> relation & 1]

    def converse_mask(self, mask: int) -> int:
        result = 0
        for relation in self.members(mask):
            result |= 1 << self.converse[relation]
        return result

    def compose(self, first: int, second: int) -> int:
        key = (first, second)
        cached = self._compose_cache.get(key)
        if cached is not None:
            return cached
        result = 0
        for r1 in self.members(first):
            for r2 in self.members(second):
                result |= self.table[r1][r2]
                if result == self.universal:
                    break
        self._compose_cache[key] = result
        return result

    def close(self, matrix: list[list[int]]) -> Optional[list[list[int]]]:
        """
        Algebraic closure: refines R(i,k) by R(i,j) o R(j,k) until nothing changes.
        Returns a refined copy, or None when some entry becomes empty.
        """
        matrix = [row[:] for row in matrix]
        size = len(matrix)
        queue = deque((i, j) for i in range(size) for j in range(size) if i != j)
        queued = set(queue)

        def refine(a, b, mask) -> bool:
            refined = matrix[a][b] & mask
            if refined == matrix[a][b]:
                return True
            if not refined:
                return False
            matrix[a][b] = refined
            matrix[b][a] = self.converse_mask(refined)
            for pair in ((a, b), (b, a)):
                if pair not in queued:
                    queued.add(pair)
                    queue.append(pair)
            return True

        while queue:
            i, j = queue.popleft()
            queued.discard((i, j))
            for k in range(size):
                if k == i or k == j:
                    continue
                if not refine(i, k, self.compose(matrix[i][j], matrix[j][k])):
                    return None
                if not refine(k, j, self.compose(matrix[k][i], matrix[i][j])):
                    return None
        return matrix


@lru_cache(maxsize=None)
def load_table(variant: str) -> CompositionTable:
    if variant not in RCC_VARIANTS:
        raise ValueError(f"unknown RCC variant '{variant}'")
    return CompositionTable.load(find_table(variant))


# ---------------------------------------------------------------------------------

#                              DECISION AND ENUMERATION

# ---------------------------------------------------------------------------------

@dataclass
class RccClosure:
    variables: tuple[int, ...]
    matrix: list[list[int]]


def _initial_matrix(table: CompositionTable, variables: tuple[int, ...], constraints) -> Optional[list[list[int]]]:
    position = {v: index for index, v in enumerate(variables)}
    size = len(variables)
    matrix = [[table.universal] * size for _ in range(size)]
    for i in range(size):
        matrix[i][i] = 1 << table.diagonal
    for (x, y), mask in constraints:
        i, j = position[x], position[y]
        matrix[i][j] &= mask
        matrix[j][i] &= table.converse_mask(mask)
        if not matrix[i][j] or not matrix[j][i]:
            return None
    return matrix


def rcc_decide(network: AtomicNetwork, variant: str) -> Optional[RccClosure]:
    table = load_table(variant)
    matrix = _initial_matrix(table, network.variables, ((tup, 1 << r) for tup, r in network.entries))
    if matrix is None:
        return None
    closed = table.close(matrix)
    if closed is None:
        return None
    return RccClosure(network.variables, closed)


def _network_from_matrix(table: CompositionTable, variables: tuple[int, ...], matrix) -> AtomicNetwork:
    entries = []
    for x, y in all_tuples(variables, (2,)):
        mask = matrix[variables.index(x)][variables.index(y)]
        entries.append(((x, y), mask.bit_length() - 1))
    return AtomicNetwork(variables, tuple(entries))


def rcc_scenarios(variables: tuple[int, ...], restrictions: dict, variant: str) -> Iterator[AtomicNetwork]:
    """
    Complete RCC networks respecting the restrictions, fixing one pair at a time and
    pruning every choice with algebraic closure.
    """
    table = load_table(variant)
    masks = []
    for tup, allowed in restrictions.items():
        mask = 0
        for relation in allowed:
            mask |= 1 << relation
        masks.append((tup, mask))
    matrix = _initial_matrix(table, variables, masks)
    if matrix is None:
        return
    matrix = table.close(matrix)
    if matrix is None:
        return
    pairs = [(i, j) for i in range(len(variables)) for j in range(i + 1, len(variables))]

    def extend(current, index) -> Iterator[AtomicNetwork]:
        if index == len(pairs):
            yield _network_from_matrix(table, variables, current)
            return
        i, j = pairs[index]
        for relation in table.members(current[i][j]):
            trial = [row[:] for row in current]
            trial[i][j] = 1 << relation
            trial[j][i] = 1 << table.converse[relation]
            closed = table.close(trial)
            if closed is not None:
                yield from extend(closed, index + 1)

    yield from extend(matrix, 0)


# ---------------------------------------------------------------------------------

#                              RCC5 SET MODELS

# ---------------------------------------------------------------------------------

@dataclass
class Rcc5SetModel:
    regions: dict[int, frozenset[str]]


def _rcc5_ids() -> dict[str, int]:
    return {name: index for index, name in enumerate(load_table("rcc5").names)}


def rcc5_drpo_model(network: AtomicNetwork) -> Rcc5SetModel:
    """
    Set model for networks whose off-diagonal entries are all DR or PO: every variable
    owns a private region X_v and every PO pair shares a region Y_u_v.
    """
    ids = _rcc5_ids()
    regions = {v: {f"X{v}"} for v in network.variables}
    for (x, y), relation in network.entries:
        if x == y:
            continue
        if relation not in (ids["DR"], ids["PO"]):
            raise ValueError(f"entry ({x}, {y}) is not DR or PO")
        if relation == ids["PO"] and x < y:
            regions[x].add(f"Y{x}_{y}")
            regions[y].add(f"Y{x}_{y}")
    return Rcc5SetModel({v: frozenset(members) for v, members in regions.items()})


def rcc5_set_model(network: AtomicNetwork) -> Rcc5SetModel:
    """
    Set model for a complete, algebraically closed RCC5 network.

    EQ classes are merged first. Region X_i belongs to k when i is a part of or equal
    to k; the shared region Y_i_j of a PO pair belongs to k when i or j is.
    """
    ids = _rcc5_ids()
    inside = (ids["PP"], ids["EQ"])
    classes = nx.utils.UnionFind(network.variables)
    for (x, y), relation in network.entries:
        if relation == ids["EQ"]:
            classes.union(x, y)
    representatives = sorted({min(group) for group in classes.to_sets()})

    def below(i, k) -> bool:
        return network.relation((i, k)) in inside

    regions = {}
    for k in network.variables:
        members = {f"X{i}" for i in representatives if below(i, k)}
        for i in representatives:
            for j in representatives:
                if i < j and network.relation((i, j)) == ids["PO"] and (below(i, k) or below(j, k)):
                    members.add(f"Y{i}_{j}")
        regions[k] = frozenset(members)
    return Rcc5SetModel(regions)


def rcc5_relation_of(model: Rcc5SetModel, args: tuple[int, int]) -> int:
    ids = _rcc5_ids()
    first, second = model.regions[args[0]], model.regions[args[1]]
    if first == second:
        return ids["EQ"]
    if not first & second:
        return ids["DR"]
    if first < second:
        return ids["PP"]
    if first > second:
        return ids["PPi"]
    return ids["PO"]


def rcc5_realize(network: AtomicNetwork) -> Optional[Rcc5SetModel]:
    fixed = {tup: frozenset([relation]) for tup, relation in network.entries}
    complete = next(rcc_scenarios(network.variables, fixed, "rcc5"), None)
    if complete is None:
        return None
    return rcc5_set_model(complete)


def _relations(variant: str) -> list[BasicRelation]:
    table = load_table(variant)
    return [BasicRelation(index, name, 2, index == table.diagonal) for index, name in enumerate(table.names)]


def build_rcc5() -> Calculus:
    return Calculus(
        "rcc5",
        _relations("rcc5"),
        decider=lambda network: rcc_decide(network, "rcc5"),
        enumerator=lambda variables, restrictions: rcc_scenarios(variables, restrictions, "rcc5"),
        realizer=rcc5_realize,
        relation_of=rcc5_relation_of,
    )


def build_rcc8() -> Calculus:
    return Calculus(
        "rcc8",
        _relations("rcc8"),
        decider=lambda network: rcc_decide(network, "rcc8"),
        enumerator=lambda variables, restrictions: rcc_scenarios(variables, restrictions, "rcc8"),
    )
