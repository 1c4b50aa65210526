import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache, partial
from typing import Callable, Hashable, Iterable, Iterator, Optional

import networkx as nx

from calculus_core import (
    AtomicNetwork,
    BasicRelation,
    Calculus,
    all_tuples,
    enumerate_certificates,
)

# Point comparisons double as the point algebra relation ids.
LT, EQ, GT = 0, 1, 2

PA_NAMES = ("<", "=", ">")

IA_NAMES = ("p", "pi", "m", "mi", "o", "oi", "d", "di", "s", "si", "f", "fi", "e")

# (x- vs y-, x- vs y+, x+ vs y-, x+ vs y+) for x R y
IA_ENDPOINTS = {
    "p": (LT, LT, LT, LT),
    "pi": (GT, GT, GT, GT),
    "m": (LT, LT, EQ, LT),
    "mi": (GT, EQ, GT, GT),
    "o": (LT, LT, GT, LT),
    "oi": (GT, LT, GT, GT),
    "d": (GT, LT, GT, LT),
    "di": (LT, LT, GT, GT),
    "s": (EQ, LT, GT, LT),
    "si": (EQ, LT, GT, GT),
    "f": (GT, LT, GT, EQ),
    "fi": (LT, LT, GT, EQ),
    "e": (EQ, LT, GT, EQ),
}

CDC_NAMES = ("=", "N", "E", "S", "W", "NE", "SE", "SW", "NW")

# (horizontal, vertical) comparison of x against y for x R y
CDC_COMPONENTS = {
    "=": (EQ, EQ),
    "N": (EQ, GT),
    "E": (GT, EQ),
    "S": (EQ, LT),
    "W": (LT, EQ),
    "NE": (GT, GT),
    "SE": (GT, LT),
    "SW": (LT, LT),
    "NW": (LT, GT),
}

BLOCK_DIMENSIONS = (1, 2, 3)

_IA_BY_SIGNATURE = {signature: IA_NAMES.index(name) for name, signature in IA_ENDPOINTS.items()}


def compare(a, b) -> int:
    if a < b:
        return LT
    if a == b:
        return EQ
    return GT


# ---------------------------------------------------------------------------------

#                              MODELS

# ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class OrderedPartition:
    blocks: tuple[tuple, ...]

    @cached_property
    def rank(self) -> dict:
        return {element: index for index, block in enumerate(self.blocks) for element in block}

    @classmethod
    def from_ranks(cls, ranks: dict) -> "OrderedPartition":
        blocks: dict[int, list] = {}
        for element, position in ranks.items():
            blocks.setdefault(position, []).append(element)
        return cls(tuple(tuple(sorted(blocks[position])) for position in sorted(blocks)))

    @property
    def ground(self) -> set:
        return set(self.rank)


@dataclass
class PointModel:
    values: dict[int, int]


@dataclass
class IntervalModel:
    intervals: dict[int, tuple[int, int]]


@dataclass
class PlaneModel:
    points: dict[int, tuple[int, int]]


@dataclass
class BoxModel:
    boxes: dict[int, tuple[tuple[int, int], ...]]


def interval_relation(first: tuple[int, int], second: tuple[int, int]) -> int:
    signature = (
        compare(first[0], second[0]),
        compare(first[0], second[1]),
        compare(first[1], second[0]),
        compare(first[1], second[1]),
    )
    return _IA_BY_SIGNATURE[signature]


# ---------------------------------------------------------------------------------

#                              ORDER SOLVING

# ---------------------------------------------------------------------------------

def solve_order(points: Iterable[Hashable], equalities: Iterable[tuple], strict: Iterable[tuple]) -> Optional[dict]:
    """
    Ranks points so every equality shares a rank and every strict pair increases.
    Args:
        points (Iterable): The points to rank.
        equalities (Iterable[tuple]): Pairs that must receive the same rank.
        strict (Iterable[tuple]): Pairs (a, b) with rank(a) < rank(b).
    Returns:
        dict or None: point -> rank in 0..r-1, or None when the constraints are cyclic.
    """
    points = list(points)
    classes = nx.utils.UnionFind(points)
    for a, b in equalities:
        classes.union(a, b)

    order = nx.DiGraph()
    order.add_nodes_from(classes[p] for p in points)
    for a, b in strict:
        low, high = classes[a], classes[b]
        if low == high:
            return None
        order.add_edge(low, high)
    if not nx.is_directed_acyclic_graph(order):
        return None

    ranks = {node: position for position, node in enumerate(nx.lexicographical_topological_sort(order))}
    return {p: ranks[classes[p]] for p in points}


def _add_comparison(equalities: list, strict: list, a, b, relation: int) -> None:
    if relation == LT:
        strict.append((a, b))
    elif relation == GT:
        strict.append((b, a))
    else:
        equalities.append((a, b))


# ---------------------------------------------------------------------------------

#                              DECIDERS

# ---------------------------------------------------------------------------------

def pa_decide(network: AtomicNetwork) -> Optional[OrderedPartition]:
    equalities, strict = [], []
    for (x, y), relation in network.entries:
        _add_comparison(equalities, strict, x, y, relation)
    ranks = solve_order(network.variables, equalities, strict)
    if ranks is None:
        return None
    return OrderedPartition.from_ranks(ranks)


def ia_decide(network: AtomicNetwork) -> Optional[IntervalModel]:
    equalities, strict = [], []
    points = []
    for v in network.variables:
        points.extend([(v, 0), (v, 1)])
        strict.append(((v, 0), (v, 1)))
    for (x, y), relation in network.entries:
        signature = IA_ENDPOINTS[IA_NAMES[relation]]
        for (i, j), comparison in zip(((0, 0), (0, 1), (1, 0), (1, 1)), signature):
            _add_comparison(equalities, strict, (x, i), (y, j), comparison)
    ranks = solve_order(points, equalities, strict)
    if ranks is None:
        return None
    return IntervalModel({v: (ranks[(v, 0)], ranks[(v, 1)]) for v in network.variables})


def _coordinate_decide(network: AtomicNetwork, components: list, coordinate_decide: Callable) -> Optional[list]:
    """
    Splits a product-calculus network into one network per coordinate and decides each.
    """
    dimensions = len(components[0]) if components else 0
    models = []
    for axis in range(dimensions):
        projected = AtomicNetwork(
            network.variables,
            tuple((tup, components[relation][axis]) for tup, relation in network.entries),
        )
        model = coordinate_decide(projected)
        if model is None:
            return None
        models.append(model)
    return models


_CDC_TABLE = [CDC_COMPONENTS[name] for name in CDC_NAMES]


def cdc_decide(network: AtomicNetwork) -> Optional[PlaneModel]:
    models = _coordinate_decide(network, _CDC_TABLE, pa_decide)
    if models is None:
        return None
    horizontal, vertical = (model.rank for model in models)
    return PlaneModel({v: (horizontal[v], vertical[v]) for v in network.variables})


@lru_cache(maxsize=None)
def block_components(d: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.product(range(len(IA_NAMES)), repeat=d))


def ba_decide(network: AtomicNetwork, d: int) -> Optional[BoxModel]:
    models = _coordinate_decide(network, list(block_components(d)), ia_decide)
    if models is None:
        return None
    return BoxModel({v: tuple(model.intervals[v] for model in models) for v in network.variables})


# ---------------------------------------------------------------------------------

#                              MODEL READERS

# ---------------------------------------------------------------------------------

def pa_realize(network: AtomicNetwork) -> Optional[PointModel]:
    partition = pa_decide(network)
    if partition is None:
        return None
    return PointModel(dict(partition.rank))


def pa_relation_of(model: PointModel, args: tuple[int, int]) -> int:
    x, y = args
    return compare(model.values[x], model.values[y])


def ia_relation_of(model: IntervalModel, args: tuple[int, int]) -> int:
    x, y = args
    return interval_relation(model.intervals[x], model.intervals[y])


_CDC_BY_COMPONENTS = {components: index for index, components in enumerate(_CDC_TABLE)}


def cdc_relation_of(model: PlaneModel, args: tuple[int, int]) -> int:
    x, y = args
    (x1, x2), (y1, y2) = model.points[x], model.points[y]
    return _CDC_BY_COMPONENTS[(compare(x1, y1), compare(x2, y2))]


def ba_relation_of(model: BoxModel, args: tuple[int, int], d: int) -> int:
    x, y = args
    components = tuple(interval_relation(a, b) for a, b in zip(model.boxes[x], model.boxes[y]))
    return block_index(d)[components]


@lru_cache(maxsize=None)
def block_index(d: int) -> dict:
    return {components: index for index, components in enumerate(block_components(d))}


# ---------------------------------------------------------------------------------

#                              ORDERED PARTITIONS

# ---------------------------------------------------------------------------------

def enumerate_ordered_partitions(ground: Iterable, accept: Optional[Callable] = None) -> Iterator[OrderedPartition]:
    """
    Yields every ordered partition of the ground set exactly once.

    Elements are inserted one at a time, either into an existing block or as a new
    block at any position; removing the last element recovers a unique parent, so
    nothing repeats. accept(blocks, element) may reject a partial partition after
    an insertion. Relative order of already placed elements never changes, so a
    rejected prefix has no accepted extension.
    """
    elements = list(ground) if not isinstance(ground, (set, frozenset)) else sorted(ground)

    def extend(blocks: tuple, index: int) -> Iterator[OrderedPartition]:
        if index == len(elements):
            yield OrderedPartition(blocks)
            return
        element = elements[index]
        for position in range(len(blocks)):
            candidate = blocks[:position] + (blocks[position] + (element,),) + blocks[position + 1:]
            if accept is None or accept(candidate, element):
                yield from extend(candidate, index + 1)
        for position in range(len(blocks) + 1):
            candidate = blocks[:position] + ((element,),) + blocks[position:]
            if accept is None or accept(candidate, element):
                yield from extend(candidate, index + 1)

    yield from extend((), 0)


def _ranks(blocks: tuple) -> dict:
    return {element: index for index, block in enumerate(blocks) for element in block}


def _allowed(restrictions: dict, tup: tuple, relation: int) -> bool:
    allowed = restrictions.get(tup)
    return allowed is None or relation in allowed


def pa_enumerate(variables: tuple[int, ...], restrictions: dict) -> Iterator[AtomicNetwork]:
    def accept(blocks, element):
        ranks = _ranks(blocks)
        for other, position in ranks.items():
            if not _allowed(restrictions, (element, other), compare(ranks[element], position)):
                return False
            if not _allowed(restrictions, (other, element), compare(position, ranks[element])):
                return False
        return True

    pairs = all_tuples(variables, (2,))
    for partition in enumerate_ordered_partitions(variables, accept):
        ranks = partition.rank
        yield AtomicNetwork(variables, tuple(((x, y), compare(ranks[x], ranks[y])) for x, y in pairs))


def ia_enumerate(variables: tuple[int, ...], restrictions: dict) -> Iterator[AtomicNetwork]:
    """
    Interval networks from ordered partitions of the endpoints, cutting any partial
    partition where an interval does not start before it ends.
    """
    endpoints = [(v, side) for v in variables for side in (0, 1)]

    def accept(blocks, element):
        variable, side = element
        if side == 0:
            return True
        ranks = _ranks(blocks)
        if ranks[(variable, 0)] >= ranks[(variable, 1)]:
            return False
        mine = (ranks[(variable, 0)], ranks[(variable, 1)])
        for other in variables:
            if (other, 1) not in ranks:
                break
            theirs = (ranks[(other, 0)], ranks[(other, 1)])
            if not _allowed(restrictions, (variable, other), interval_relation(mine, theirs)):
                return False
            if not _allowed(restrictions, (other, variable), interval_relation(theirs, mine)):
                return False
        return True

    pairs = all_tuples(variables, (2,))
    for partition in enumerate_ordered_partitions(endpoints, accept):
        ranks = partition.rank
        intervals = {v: (ranks[(v, 0)], ranks[(v, 1)]) for v in variables}
        yield AtomicNetwork(
            variables,
            tuple(((x, y), interval_relation(intervals[x], intervals[y])) for x, y in pairs),
        )


def _coordinate_product(
    variables: tuple[int, ...],
    restrictions: dict,
    components: list,
    coordinate_enumerate: Callable,
) -> Iterator[AtomicNetwork]:
    """
    Product-calculus networks as tuples of coordinate networks. Restrictions are
    narrowed per coordinate given the coordinates already chosen, so every output
    respects them exactly.
    """
    dimensions = len(components[0])
    index = {value: relation for relation, value in enumerate(components)}

    def extend(chosen: list) -> Iterator[AtomicNetwork]:
        axis = len(chosen)
        if axis == dimensions:
            first = chosen[0]
            yield AtomicNetwork(
                variables,
                tuple(
                    (tup, index[tuple(network.relation(tup) for network in chosen)])
                    for tup, _ in first.entries
                ),
            )
            return
        narrowed = {}
        for tup, allowed in restrictions.items():
            prefix = tuple(network.relation(tup) for network in chosen)
            narrowed[tup] = frozenset(
                components[relation][axis] for relation in allowed
                if components[relation][:axis] == prefix
            )
            if not narrowed[tup]:
                return
        for network in coordinate_enumerate(variables, narrowed):
            yield from extend(chosen + [network])

    yield from extend([])


def cdc_enumerate(variables: tuple[int, ...], restrictions: dict) -> Iterator[AtomicNetwork]:
    return _coordinate_product(variables, restrictions, _CDC_TABLE, pa_enumerate)


def ba_enumerate(variables: tuple[int, ...], restrictions: dict, d: int) -> Iterator[AtomicNetwork]:
    return _coordinate_product(variables, restrictions, list(block_components(d)), ia_enumerate)


def pa_certificates_from_partitions(instance, variables) -> Iterator[AtomicNetwork]:
    return enumerate_certificates(get_calculus("pa"), instance, variables)


def ia_certificates_from_partitions(instance, variables) -> Iterator[AtomicNetwork]:
    return enumerate_certificates(get_calculus("ia"), instance, variables)


def cdc_certificates_from_partitions(instance, variables) -> Iterator[AtomicNetwork]:
    return enumerate_certificates(get_calculus("cdc"), instance, variables)


def ba_certificates_from_partitions(instance, variables, d: int) -> Iterator[AtomicNetwork]:
    return enumerate_certificates(get_calculus(f"ba{d}"), instance, variables)


# ---------------------------------------------------------------------------------

#                              REGISTRY

# ---------------------------------------------------------------------------------

def _binary_relations(names: Iterable[str], diagonal: str) -> list[BasicRelation]:
    return [BasicRelation(index, name, 2, name == diagonal) for index, name in enumerate(names)]


def build_point_algebra() -> Calculus:
    return Calculus(
        "pa",
        _binary_relations(PA_NAMES, "="),
        decider=pa_decide,
        enumerator=pa_enumerate,
        realizer=pa_realize,
        relation_of=pa_relation_of,
    )


def build_interval_algebra() -> Calculus:
    return Calculus(
        "ia",
        _binary_relations(IA_NAMES, "e"),
        decider=ia_decide,
        enumerator=ia_enumerate,
        realizer=ia_decide,
        relation_of=ia_relation_of,
    )


def build_cardinal_directions() -> Calculus:
    return Calculus(
        "cdc",
        _binary_relations(CDC_NAMES, "="),
        decider=cdc_decide,
        enumerator=cdc_enumerate,
        realizer=cdc_decide,
        relation_of=cdc_relation_of,
    )


def block_name(components: tuple[int, ...]) -> str:
    if len(components) == 1:
        return IA_NAMES[components[0]]
    return "(" + ",".join(IA_NAMES[c] for c in components) + ")"


def build_block_algebra(d: int) -> Calculus:
    if d not in BLOCK_DIMENSIONS:
        raise ValueError(f"Block Algebra is available for d in {BLOCK_DIMENSIONS}, got {d}")
    diagonal = (IA_NAMES.index("e"),) * d
    relations = [
        BasicRelation(index, block_name(components), 2, components == diagonal)
        for index, components in enumerate(block_components(d))
    ]
    return Calculus(
        f"ba{d}",
        relations,
        decider=partial(ba_decide, d=d),
        enumerator=partial(ba_enumerate, d=d),
        realizer=partial(ba_decide, d=d),
        relation_of=partial(ba_relation_of, d=d),
    )


def _builders() -> dict[str, Callable[[], Calculus]]:
    import phylogeny
    import rcc

    builders = {
        "pa": build_point_algebra,
        "ia": build_interval_algebra,
        "cdc": build_cardinal_directions,
        "rcc5": rcc.build_rcc5,
        "rcc8": rcc.build_rcc8,
        "phylo": phylogeny.build_phylogeny,
    }
    for d in BLOCK_DIMENSIONS:
        builders[f"ba{d}"] = partial(build_block_algebra, d)
    return builders


CALCULUS_NAMES = ("pa", "ia", "cdc", "ba1", "ba2", "ba3", "rcc5", "rcc8", "phylo")


def available_calculi() -> tuple[str, ...]:
    return CALCULUS_NAMES


@lru_cache(maxsize=None)
def get_calculus(name: str) -> Calculus:
    builders = _builders()
    if name not in builders:
        raise ValueError(f"unknown calculus '{name}', expected one of {', '.join(CALCULUS_NAMES)}")
    return builders[name]()
