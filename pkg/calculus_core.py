import itertools
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable, Iterator, Optional


class ContractViolation(ValueError):
    """Raised when an operation is called on variables the network does not cover."""


class NetworkConflict(ValueError):
    """Raised by union() when two networks disagree on a shared tuple."""


class UnsupportedRealizer(NotImplementedError):
    """Raised when a calculus cannot build concrete models."""


# ---------------------------------------------------------------------------------

#                              RELATIONS AND CALCULI

# ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class BasicRelation:
    id: int
    name: str
    arity: int
    is_diagonal: bool = False


class Calculus:
    def __init__(
        self,
        name: str,
        relations: list[BasicRelation],
        decider: Callable,
        enumerator: Optional[Callable] = None,
        realizer: Optional[Callable] = None,
        relation_of: Optional[Callable] = None,
    ):
        """
        Bundles a JEPD set of basic relations with its reasoning hooks.
        Args:
            name (str): Registry name of the calculus (e.g. "ia").
            relations (list[BasicRelation]): Relations with dense ids 0..|A|-1.
            decider (Callable): network -> witness or None, decides atomic networks.
            enumerator (Callable): (variables, restrictions) -> complete networks, optional.
            realizer (Callable): network -> concrete model or None, optional.
            relation_of (Callable): (model, tuple) -> relation id, required with a realizer.
        Returns: None
        """
        ids = [relation.id for relation in relations]
        if ids != list(range(len(relations))):
            raise ValueError(f"Relation ids of '{name}' must be dense and ordered, got {ids}")
        names = [relation.name for relation in relations]
        if len(set(names)) != len(names):
            raise ValueError(f"Relation names of '{name}' are not unique")
        for arity in {relation.arity for relation in relations}:
            diagonals = [r for r in relations if r.arity == arity and r.is_diagonal]
            if len(diagonals) > 1:
                raise ValueError(f"Calculus '{name}' has {len(diagonals)} diagonal relations of arity {arity}")
        if realizer is not None and relation_of is None:
            raise ValueError(f"Calculus '{name}' has a realizer but no relation_of reader")

        self.name = name
        self.relations = tuple(relations)
        self.decider = decider
        self.enumerator = enumerator
        self.realizer = realizer
        self.relation_of = relation_of
        self.arity_set = frozenset(relation.arity for relation in relations)
        self._by_name = {relation.name: relation for relation in relations}

    def __repr__(self) -> str:
        return f"Calculus({self.name!r}, {len(self.relations)} relations)"

    def relation(self, name: str) -> BasicRelation:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown relation '{name}' for calculus '{self.name}'") from None

    def has_relation(self, name: str) -> bool:
        return name in self._by_name

    def relations_of_arity(self, arity: int) -> tuple[BasicRelation, ...]:
        return tuple(relation for relation in self.relations if relation.arity == arity)

    def diagonal(self, arity: int) -> Optional[BasicRelation]:
        for relation in self.relations_of_arity(arity):
            if relation.is_diagonal:
                return relation
        return None

    def decide(self, network: "AtomicNetwork"):
        return self.decider(network)

    def evaluate(self, model, relation: int, args: tuple[int, ...]) -> bool:
        """
        Checks a single atom directly against a concrete model.
        """
        if self.relation_of is None:
            raise UnsupportedRealizer(f"calculus '{self.name}' cannot evaluate concrete models")
        return self.relation_of(model, args) == relation


# ---------------------------------------------------------------------------------

#                              ATOMIC NETWORKS

# ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomicNetwork:
    """
    An atomic instance of CSP(A): one basic relation per ordered variable tuple.

    Entries are kept sorted by tuple so equal networks compare and hash equal.
    """

    variables: tuple[int, ...]
    entries: tuple[tuple[tuple[int, ...], int], ...] = field(default=())

    @classmethod
    def build(cls, variables: Iterable[int], mapping: dict) -> "AtomicNetwork":
        variables = tuple(sorted(set(variables)))
        return cls(variables, tuple(sorted(mapping.items())))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[tuple[int, ...], int]], variables: Iterable[int] = ()) -> "AtomicNetwork":
        mapping = {}
        seen = set(variables)
        for tup, relation in pairs:
            if mapping.get(tup, relation) != relation:
                raise NetworkConflict(f"tuple {tup} given two relations")
            mapping[tup] = relation
            seen.update(tup)
        return cls.build(seen, mapping)

    @cached_property
    def table(self) -> dict[tuple[int, ...], int]:
        return dict(self.entries)

    def relation(self, tup: tuple[int, ...]) -> Optional[int]:
        return self.table.get(tup)

    def __len__(self) -> int:
        return len(self.entries)

    def relabel(self, mapping) -> "AtomicNetwork":
        """
        Renames variables through mapping[v]; the mapping must be injective.
        """
        renamed = {tuple(mapping[v] for v in tup): relation for tup, relation in self.entries}
        return AtomicNetwork.build((mapping[v] for v in self.variables), renamed)

    def is_complete(self, calc: Calculus) -> bool:
        return all(tup in self.table for tup in all_tuples(self.variables, calc.arity_set))

    def describe(self, calc: Calculus, names=None) -> list[str]:
        label = (lambda v: names[v]) if names is not None else str
        return [
            f"{calc.relations[relation].name}({', '.join(label(v) for v in tup)})"
            for tup, relation in self.entries
        ]


EMPTY_NETWORK = AtomicNetwork(())


def all_tuples(variables: Iterable[int], arities: Iterable[int]) -> list[tuple[int, ...]]:
    """
    Every ordered tuple (with repetition) over the variables for each arity, sorted.
    """
    variables = sorted(set(variables))
    tuples = []
    for arity in sorted(set(arities)):
        tuples.extend(itertools.product(variables, repeat=arity))
    tuples.sort()
    return tuples


# ---------------------------------------------------------------------------------

#                              CERTIFICATE OPERATIONS

# ---------------------------------------------------------------------------------

def implies(network: AtomicNetwork, constraint) -> bool:
    """
    True iff some DNF term of the constraint has all of its atoms in the network.
    """
    covered = set(network.variables)
    missing = [v for v in constraint.scope if v not in covered]
    if missing:
        raise ContractViolation(f"constraint scope variables {missing} are not in the network")
    table = network.table
    return any(
        all(table.get(atom.args) == atom.relation for atom in term)
        for term in constraint.dnf
    )


def project(network: AtomicNetwork, variables: Iterable[int]) -> AtomicNetwork:
    keep = set(variables)
    outside = keep.difference(network.variables)
    if outside:
        raise ContractViolation(f"cannot project onto variables {sorted(outside)} outside the network")
    entries = tuple(
        (tup, relation) for tup, relation in network.entries
        if all(v in keep for v in tup)
    )
    return AtomicNetwork(tuple(sorted(keep)), entries)


def union(n1: AtomicNetwork, n2: AtomicNetwork) -> AtomicNetwork:
    mapping = dict(n1.entries)
    for tup, relation in n2.entries:
        current = mapping.setdefault(tup, relation)
        if current != relation:
            raise NetworkConflict(f"networks disagree on tuple {tup}: {current} vs {relation}")
    return AtomicNetwork.build(set(n1.variables) | set(n2.variables), mapping)


def complete_network(calc: Calculus, network: AtomicNetwork) -> Optional[AtomicNetwork]:
    """
    Extends a network to a complete one by realizing a model and reading every tuple off it.
    Args:
        calc (Calculus): The calculus the network belongs to.
        network (AtomicNetwork): A (possibly partial) atomic network.
    Returns:
        AtomicNetwork or None: The completion, or None when the network is unsatisfiable.
    """
    if calc.realizer is None:
        raise UnsupportedRealizer(f"calculus '{calc.name}' has no model realizer")
    model = calc.realizer(network)
    if model is None:
        return None
    mapping = {tup: calc.relation_of(model, tup) for tup in all_tuples(network.variables, calc.arity_set)}
    return AtomicNetwork.build(network.variables, mapping)


def extend_by_search(calc: Calculus, network: AtomicNetwork) -> Optional[AtomicNetwork]:
    """
    Completes a network using only the decider: the first complete extension in enumeration order.
    """
    return next(generic_enumerate(calc, network.variables, base=network), None)


def completion(calc: Calculus, network: AtomicNetwork) -> Optional[AtomicNetwork]:
    if calc.realizer is not None:
        return complete_network(calc, network)
    return extend_by_search(calc, network)


# ---------------------------------------------------------------------------------

#                              ENUMERATION

# ---------------------------------------------------------------------------------

def generic_enumerate(
    calc: Calculus,
    variables: Iterable[int],
    restrictions: Optional[dict] = None,
    base: Optional[AtomicNetwork] = None,
) -> Iterator[AtomicNetwork]:
    """
    Filter enumerator: tries relation ids in order for every tuple and cuts any
    partial assignment the decider rejects.
    Args:
        calc (Calculus): The calculus.
        variables (Iterable[int]): Variables of the networks to produce.
        restrictions (dict): Optional map tuple -> allowed relation ids.
        base (AtomicNetwork): Optional fixed entries every output must contain.
    Returns:
        Iterator[AtomicNetwork]: Complete satisfiable networks, without duplicates.
    """
    variables = tuple(sorted(set(variables)))
    restrictions = restrictions or {}
    fixed = dict(base.entries) if base is not None else {}
    if base is not None and calc.decide(base) is None:
        return
    tuples = sorted(all_tuples(variables, calc.arity_set), key=lambda tup: (max(tup), tup))

    choices = []
    for tup in tuples:
        options = [relation.id for relation in calc.relations_of_arity(len(tup))]
        diagonal = calc.diagonal(len(tup))
        if diagonal is not None and len(set(tup)) == 1:
            options = [diagonal.id]
        if tup in restrictions:
            options = [r for r in options if r in restrictions[tup]]
        if tup in fixed:
            options = [r for r in options if r == fixed[tup]]
        if not options:
            return
        choices.append(options)

    assigned = dict(fixed)

    def extend(index: int) -> Iterator[AtomicNetwork]:
        if index == len(tuples):
            yield AtomicNetwork.build(variables, {tup: assigned[tup] for tup in tuples})
            return
        tup = tuples[index]
        for relation in choices[index]:
            assigned[tup] = relation
            if calc.decide(AtomicNetwork.build(variables, assigned)) is not None:
                yield from extend(index + 1)
        if tup in fixed:
            assigned[tup] = fixed[tup]
        else:
            del assigned[tup]

    yield from extend(0)


def derive_restrictions(constraints: Iterable) -> Optional[dict]:
    """
    Per-tuple allowed relation sets implied by single-tuple disjunctions and single-term constraints.
    Returns None when two constraints already contradict each other.
    """
    restrictions: dict[tuple[int, ...], frozenset] = {}

    def narrow(tup, allowed):
        restrictions[tup] = restrictions.get(tup, allowed) & allowed

    for constraint in constraints:
        if all(len(term) == 1 for term in constraint.dnf) and len({term[0].args for term in constraint.dnf}) == 1:
            narrow(constraint.dnf[0][0].args, frozenset(term[0].relation for term in constraint.dnf))
        elif len(constraint.dnf) == 1:
            for atom in constraint.dnf[0]:
                narrow(atom.args, frozenset([atom.relation]))
    if any(not allowed for allowed in restrictions.values()):
        return None
    return restrictions


def enumerate_certificates(calc: Calculus, instance, variables: Iterable[int]) -> Iterator[AtomicNetwork]:
    """
    Streams the complete satisfiable networks on the variables that imply every
    constraint of the sub-instance they induce.
    """
    scope = set(variables)
    constraints = [c for c in instance.constraints if scope.issuperset(c.scope)]
    restrictions = derive_restrictions(constraints)
    if restrictions is None:
        return
    ordered = tuple(sorted(scope))
    if calc.enumerator is not None:
        source = calc.enumerator(ordered, restrictions)
    else:
        source = generic_enumerate(calc, ordered, restrictions)
    for network in source:
        if all(implies(network, constraint) for constraint in constraints):
            yield network


# ---------------------------------------------------------------------------------

#                              NEGATION NORMALISATION

# ---------------------------------------------------------------------------------

def normalize_negations(calc: Calculus, terms: Iterable[Iterable]) -> tuple:
    """
    Rewrites a DNF so no atom is negated: ¬R(x) becomes the disjunction of the other
    relations of R's arity, distributed over the term. Terms that put two relations
    on the same tuple are dropped, as are duplicates.
    """
    normalized = []
    seen = set()
    for term in terms:
        options = []
        for atom in term:
            if atom.negated:
                others = [r.id for r in calc.relations_of_arity(len(atom.args)) if r.id != atom.relation]
                options.append([replace(atom, relation=r, negated=False) for r in others])
            else:
                options.append([atom])
        for choice in itertools.product(*options):
            atoms = []
            placed = {}
            consistent = True
            for atom in choice:
                if placed.setdefault(atom.args, atom.relation) != atom.relation:
                    consistent = False
                    break
                if atom not in atoms:
                    atoms.append(atom)
            key = frozenset(atoms)
            if consistent and key not in seen:
                seen.add(key)
                normalized.append(tuple(atoms))
    return tuple(normalized)
