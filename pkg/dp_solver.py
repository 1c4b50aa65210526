import os
import threading
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import pandas as pd
import yaml
from colorama import Fore, Style

from calculus_core import (
    EMPTY_NETWORK,
    AtomicNetwork,
    Calculus,
    completion,
    enumerate_certificates,
    implies,
    project,
    union,
)
from instance_model import Instance, primal_graph
from tree_decomposition import (
    DecompositionError,
    NiceDecomposition,
    decompose,
    make_nice,
    read_decomposition,
    validate,
    width,
)

DEFAULT_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config", "solver_default.yml")

STATS_COLUMNS = ["node_id", "kind", "bag_size", "record_size", "micros"]


class ExtractionError(RuntimeError):
    """Raised when a stitched certificate fails its own verification."""


# ---------------------------------------------------------------------------------

#                              RECORDS

# ---------------------------------------------------------------------------------

@dataclass
class Record:
    """
    R(t): certificates of the subtree instance projected onto the bag X(t).

    Members are stored over local variables 0..|bag|-1 (position in the sorted bag);
    each maps to the child members it came from, or () without provenance.
    """

    node_id: int
    bag: tuple[int, ...]
    members: dict[AtomicNetwork, tuple] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, network: AtomicNetwork) -> bool:
        return network in self.members

    def __iter__(self):
        return iter(self.members)

    def networks(self) -> set[AtomicNetwork]:
        """
        Members over the bag's real variable ids.
        """
        return {network.relabel(self.bag) for network in self.members}


def localize(network: AtomicNetwork, bag: tuple[int, ...]) -> AtomicNetwork:
    position = {v: index for index, v in enumerate(bag)}
    return network.relabel(position)


def drop_variable(network: AtomicNetwork, position: int) -> AtomicNetwork:
    """
    Projects a local network away from one position and closes the gap.
    """
    kept = [v for v in network.variables if v != position]
    return project(network, kept).relabel({v: v if v < position else v - 1 for v in kept})


class BagEnumerator:
    def __init__(self, instance: Instance, calc: Optional[Calculus] = None, use_cache: bool = True):
        """
        Enumerates bag certificates for one instance, with constraints indexed by the
        largest variable of their scope and results cached per local constraint set.
        Args:
            instance (Instance): The instance being solved.
            calc (Calculus): Calculus override, defaults to the instance's calculus.
            use_cache (bool): Reuse enumerations for bags with identical local constraints.
        Returns: None
        """
        self.instance = instance
        self.calc = calc or instance.calc
        self.use_cache = use_cache
        self.by_max_variable = defaultdict(list)
        for constraint in instance.constraints:
            self.by_max_variable[max(constraint.scope)].append(constraint)
        self._certificates: dict = {}
        self._extensions: dict = {}
        self._dropped: dict = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def local_constraints(self, bag: tuple[int, ...]) -> frozenset:
        inside = set(bag)
        position = {v: index for index, v in enumerate(bag)}
        return frozenset(
            constraint.relabel(position)
            for v in bag
            for constraint in self.by_max_variable.get(v, ())
            if inside.issuperset(constraint.scope)
        )

    def certificates(self, bag: tuple[int, ...]) -> list[AtomicNetwork]:
        key = (len(bag), self.local_constraints(bag))
        if self.use_cache and key in self._certificates:
            self.hits += 1
            return self._certificates[key]
        self.misses += 1
        local = Instance.build(self.instance.calculus, [str(i) for i in range(len(bag))], key[1])
        found = list(enumerate_certificates(self.calc, local, range(len(bag))))
        if self.use_cache:
            with self._lock:
                found = self._certificates.setdefault(key, found)
        return found

    def extensions(self, bag: tuple[int, ...], position: int) -> dict:
        """
        Bag certificates grouped by their projection onto the bag without `position`.
        """
        key = (len(bag), self.local_constraints(bag), position)
        cached = self._extensions.get(key) if self.use_cache else None
        if cached is not None:
            return cached
        grouped: dict[AtomicNetwork, list] = {}
        for network in self.certificates(bag):
            grouped.setdefault(self.drop(network, position), []).append(network)
        if self.use_cache:
            with self._lock:
                grouped = self._extensions.setdefault(key, grouped)
        return grouped

    def drop(self, network: AtomicNetwork, position: int) -> AtomicNetwork:
        key = (network, position)
        dropped = self._dropped.get(key)
        if dropped is None:
            dropped = drop_variable(network, position)
            self._dropped[key] = dropped
        return dropped


# ---------------------------------------------------------------------------------

#                              DP STEPS

# ---------------------------------------------------------------------------------

def leaf_step(node_id: int = 0) -> Record:
    return Record(node_id, (), {EMPTY_NETWORK: ()})


def introduce_step(
    child: Record,
    instance: Instance,
    bag: tuple[int, ...],
    child_bag: tuple[int, ...],
    enumerator: Optional[BagEnumerator] = None,
    provenance: bool = True,
    node_id: Optional[int] = None,
) -> Record:
    """
    Keeps every certificate of I[X(t)] whose projection onto the child bag is in R(t').
    """
    bag, child_bag = tuple(sorted(bag)), tuple(sorted(child_bag))
    added = set(bag) - set(child_bag)
    if len(added) != 1 or not set(child_bag) < set(bag):
        raise DecompositionError(f"introduce node {node_id} must add exactly one variable to {child_bag}")
    position = bag.index(added.pop())
    enumerator = enumerator or BagEnumerator(instance)
    table = enumerator.extensions(bag, position)
    members = {}
    for below in child.members:
        for network in table.get(below, ()):
            members[network] = (below,) if provenance else ()
    return Record(child.node_id if node_id is None else node_id, bag, members)


def forget_step(
    child: Record,
    vertex: int,
    enumerator: Optional[BagEnumerator] = None,
    provenance: bool = True,
    node_id: Optional[int] = None,
) -> Record:
    if vertex not in child.bag:
        raise DecompositionError(f"forget node {node_id} removes {vertex} which is not in its child bag")
    position = child.bag.index(vertex)
    drop = enumerator.drop if enumerator is not None else drop_variable
    members = {}
    for below in child.members:
        members.setdefault(drop(below, position), (below,) if provenance else ())
    bag = tuple(v for v in child.bag if v != vertex)
    return Record(child.node_id if node_id is None else node_id, bag, members)


def join_step(first: Record, second: Record, provenance: bool = True, node_id: Optional[int] = None) -> Record:
    if first.bag != second.bag:
        raise DecompositionError(f"join node {node_id} has children with different bags")
    smaller, larger = (first, second) if len(first) <= len(second) else (second, first)
    members = {network: (network, network) if provenance else () for network in smaller.members if network in larger.members}
    return Record(first.node_id if node_id is None else node_id, first.bag, members)


# ---------------------------------------------------------------------------------

#                              SOLVING

# ---------------------------------------------------------------------------------

@dataclass
class NodeStat:
    node_id: int
    kind: str
    bag_size: int
    record_size: int
    micros: int


@dataclass
class SolveResult:
    verdict: str
    stats: list[NodeStat]
    peak_record: int
    wall_time: float
    width: int
    node_count: int
    records: Optional[dict[int, Record]] = None
    certificate: Optional[AtomicNetwork] = None
    model: object = None

    @property
    def satisfiable(self) -> bool:
        return self.verdict == "SAT"

    def stats_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(stat) for stat in self.stats], columns=STATS_COLUMNS)

    def write_stats(self, path: str) -> None:
        folder = os.path.dirname(path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        self.stats_frame().to_csv(path, index=False)


def _levels(nice: NiceDecomposition) -> list[list[int]]:
    height = {}
    for node_id in nice.postorder():
        kids = nice.nodes[node_id].children
        height[node_id] = 1 + max((height[k] for k in kids), default=-1)
    levels = defaultdict(list)
    for node_id, level in height.items():
        levels[level].append(node_id)
    return [sorted(levels[level]) for level in sorted(levels)]


def solve(
    instance: Instance,
    nice: NiceDecomposition,
    calc: Optional[Calculus] = None,
    witness: bool = True,
    parallel: bool = False,
    max_workers: int = 4,
    cache: bool = True,
    record_trace: bool = False,
    verbose: bool = False,
    log_every: int = 1000,
) -> SolveResult:
    """
    Runs the certificate-record dynamic program bottom-up over a nice decomposition.
    Args:
        instance (Instance): The instance to decide.
        nice (NiceDecomposition): A nice decomposition of the instance's primal graph.
        calc (Calculus): Calculus override, defaults to the instance's calculus.
        witness (bool): Keep back-pointers (and all records) for certificate extraction.
        parallel (bool): Evaluate independent subtrees on a thread pool.
        max_workers (int): Pool size for the parallel mode.
        cache (bool): Reuse bag enumerations with identical local constraints.
        record_trace (bool): Keep every record in the result.
        verbose (bool): Print progress every log_every nodes.
        log_every (int): Progress interval in nodes.
    Returns:
        SolveResult: The verdict with per-node statistics.
    """
    report = validate(nice, primal_graph(instance))
    if not report:
        raise DecompositionError(f"invalid decomposition: {report}")

    start = time.perf_counter()
    enumerator = BagEnumerator(instance, calc, use_cache=cache)
    retain = witness or record_trace
    records: dict[int, Record] = {}
    stats: dict[int, NodeStat] = {}

    def evaluate(node_id: int) -> Record:
        node = nice.nodes[node_id]
        began = time.perf_counter_ns()
        if node.kind == "leaf":
            record = leaf_step(node_id)
        elif node.kind == "introduce":
            child = records[node.children[0]]
            record = introduce_step(child, instance, node.bag, child.bag, enumerator, witness, node_id)
        elif node.kind == "forget":
            record = forget_step(records[node.children[0]], node.vertex, enumerator, witness, node_id)
        else:
            first, second = (records[k] for k in node.children)
            record = join_step(first, second, witness, node_id)
        stats[node_id] = NodeStat(node_id, node.kind, len(node.bag), len(record), (time.perf_counter_ns() - began) // 1000)
        return record

    def store(node_id: int, record: Record) -> None:
        records[node_id] = record
        if not retain:
            for kid in nice.nodes[node_id].children:
                records.pop(kid, None)

    empty_at = None
    done = 0
    if parallel:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            for level in _levels(nice):
                for node_id, record in zip(level, pool.map(evaluate, level)):
                    store(node_id, record)
                    if not record and empty_at is None:
                        empty_at = node_id
                done += len(level)
                if verbose:
                    print(f"Level done: {done}/{len(nice.nodes)} nodes, peak record {max(s.record_size for s in stats.values())}")
                if empty_at is not None:
                    break
    else:
        for node_id in nice.postorder():
            record = evaluate(node_id)
            store(node_id, record)
            done += 1
            if verbose and done % log_every == 0:
                print(f"Processed {done}/{len(nice.nodes)} nodes, record size {len(record)} at node {node_id}")
            if not record:
                # an empty record empties every ancestor
                empty_at = node_id
                break

    satisfiable = empty_at is None and len(records.get(nice.root, ())) > 0
    ordered = [stats[node_id] for node_id in sorted(stats)]
    result = SolveResult(
        verdict="SAT" if satisfiable else "UNSAT",
        stats=ordered,
        peak_record=max((s.record_size for s in ordered), default=0),
        wall_time=time.perf_counter() - start,
        width=width(nice),
        node_count=len(nice.nodes),
        records=records if retain else None,
    )
    if verbose:
        print(f"{result.verdict} after {done} nodes in {result.wall_time:.3f}s, peak record {result.peak_record}")
    return result


def extract_certificate(
    instance: Instance,
    nice: NiceDecomposition,
    records: dict[int, Record],
    calc: Optional[Calculus] = None,
) -> AtomicNetwork:
    """
    Stitches one compatible certificate per node, top-down along the back-pointers,
    completes the union and checks it against the decider and every constraint.
    """
    calc = calc or instance.calc
    root = records.get(nice.root)
    if not root:
        raise ValueError("no certificate to extract: the root record is empty or missing")

    chosen = {nice.root: min(root.members, key=lambda network: network.entries)}
    stitched = EMPTY_NETWORK
    for node_id in sorted(nice.nodes, reverse=True):
        if node_id not in chosen:
            continue
        record = records[node_id]
        network = chosen[node_id]
        stitched = union(stitched, network.relabel(record.bag))
        pointers = record.members[network]
        kids = nice.nodes[node_id].children
        if kids and len(pointers) != len(kids):
            raise ValueError("records were computed without provenance; solve with witness enabled")
        for kid, below in zip(kids, pointers):
            chosen[kid] = below

    padded = AtomicNetwork.build(set(stitched.variables) | set(instance.variables), dict(stitched.entries))
    certificate = completion(calc, padded)
    if certificate is None or calc.decide(certificate) is None:
        raise ExtractionError("stitched certificate is not satisfiable")
    for constraint in instance.constraints:
        if not implies(certificate, constraint):
            raise ExtractionError(f"stitched certificate does not imply the constraint on {constraint.scope}")
    return certificate


# ---------------------------------------------------------------------------------

#                              SOLVER FRONT END

# ---------------------------------------------------------------------------------

class CertificateSolver:
    def __init__(self, config_path: str = DEFAULT_CONFIG, **overrides):
        """
        Initializes the solver from a YAML configuration.
        Args:
            config_path (str): Path to the solver configuration YAML file.
            overrides: Configuration keys to override (None values are ignored).
        Returns: None
        """
        self.config = self.load_config(config_path)
        self.config.update({key: value for key, value in overrides.items() if value is not None})

    def load_config(self, config_path: str) -> dict:
        """
        Loads the solver configuration from a YAML file.
        """
        with open(config_path, "r") as file:
            return yaml.safe_load(file) or {}

    def decompose(self, instance: Instance, decomposition_path: Optional[str] = None) -> NiceDecomposition:
        if decomposition_path is not None:
            with open(decomposition_path, "r") as file:
                td = read_decomposition(file.read(), instance.names)
        else:
            td = decompose(primal_graph(instance), self.config.get("decomposition", "heuristic"))
        return make_nice(td)

    def solve(
        self,
        instance: Instance,
        nice: Optional[NiceDecomposition] = None,
        model: bool = False,
    ) -> SolveResult:
        """
        Decides the instance and, when witness tracking is on and it is satisfiable,
        attaches a verified certificate (and a concrete model if asked and possible).
        """
        nice = nice or self.decompose(instance)
        witness = self.config.get("witness", True)
        result = solve(
            instance,
            nice,
            witness=witness,
            parallel=self.config.get("parallel", False),
            max_workers=self.config.get("max_workers", 4),
            cache=self.config.get("cache_enumerations", True),
            verbose=self.config.get("verbose", False),
            log_every=self.config.get("log_every", 1000),
        )
        if result.satisfiable and witness:
            result.certificate = extract_certificate(instance, nice, result.records)
            calc = instance.calc
            if model and calc.realizer is not None:
                result.model = calc.realizer(result.certificate)
        return result

    def render(self, result: SolveResult, instance: Instance) -> None:
        """
        Prints the verdict and, when present, the certificate and model.
        """
        colour = Fore.GREEN if result.satisfiable else Fore.RED
        print(colour + result.verdict + Style.RESET_ALL)
        shown_width = max(result.width, 0)
        note = " (empty primal graph)" if result.width < 0 else ""
        print(f"width {shown_width}{note}, {result.node_count} nodes, peak record {result.peak_record}, {result.wall_time:.3f}s")
        if result.certificate is not None:
            print("certificate:")
            for line in result.certificate.describe(instance.calc, instance.names):
                print("  " + line)
        if result.model is not None:
            print("model:")
            for line in describe_model(instance.calc, result.model, instance.names):
                print("  " + line)


def describe_model(calc: Calculus, model, names: tuple[str, ...]) -> list[str]:
    if calc.name == "pa":
        entries = model.values
    elif calc.name == "ia":
        entries = model.intervals
    elif calc.name == "cdc":
        entries = model.points
    elif calc.name.startswith("ba"):
        entries = model.boxes
    elif calc.name == "rcc5":
        entries = {v: sorted(region) for v, region in model.regions.items()}
    elif calc.name == "phylo":
        return [f"{names[v]} -> leaf {leaf}" for v, leaf in sorted(model.leaf_of.items())] + [
            f"node {node}: children {kids}" for node, kids in sorted(model.children.items()) if kids
        ]
    else:
        return [repr(model)]
    return [f"{names[v]} = {value}" for v, value in sorted(entries.items())]
