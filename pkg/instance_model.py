import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

import networkx as nx
import yaml

from calculi import get_calculus
from calculus_core import Calculus, normalize_negations


class InstanceFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)

    @classmethod
    def at(cls, node, message: str) -> "InstanceFormatError":
        return cls(message, node.start_mark.line + 1, node.start_mark.column + 1)


# ---------------------------------------------------------------------------------

#                              CONSTRAINTS AND INSTANCES

# ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    relation: int
    args: tuple[int, ...]
    negated: bool = False

    def relabel(self, mapping) -> "Atom":
        return Atom(self.relation, tuple(mapping[v] for v in self.args), self.negated)


@dataclass(frozen=True)
class Constraint:
    """
    A DNF over basic atoms applied to a scope.

    is_disjunction marks the common case where every term is a single atom on the
    whole scope, i.e. a plain disjunction of basic relations.
    """

    scope: tuple[int, ...]
    dnf: tuple[tuple[Atom, ...], ...]
    is_disjunction: bool = field(default=False, compare=False)

    @classmethod
    def make(cls, scope: Iterable[int], dnf: Iterable[Iterable[Atom]]) -> "Constraint":
        scope = tuple(scope)
        dnf = tuple(tuple(term) for term in dnf)
        if not dnf or any(not term for term in dnf):
            raise ValueError("a constraint needs at least one non-empty term")
        for term in dnf:
            for atom in term:
                if atom.negated:
                    raise ValueError("negated atoms must be normalized away first")
        flag = all(len(term) == 1 and term[0].args == scope for term in dnf)
        return cls(scope, dnf, flag)

    def relabel(self, mapping) -> "Constraint":
        return Constraint(
            tuple(mapping[v] for v in self.scope),
            tuple(tuple(atom.relabel(mapping) for atom in term) for term in self.dnf),
            self.is_disjunction,
        )

    def relations(self) -> frozenset[int]:
        return frozenset(atom.relation for term in self.dnf for atom in term)


def make_disjunction(calc: Calculus, scope: Iterable[int], relation_names: Iterable[str]) -> Constraint:
    scope = tuple(scope)
    return Constraint.make(scope, [(Atom(calc.relation(name).id, scope),) for name in relation_names])


@dataclass(frozen=True)
class Instance:
    calculus: str
    names: tuple[str, ...]
    variables: tuple[int, ...]
    constraints: tuple[Constraint, ...]

    @classmethod
    def build(cls, calculus: str, names: Iterable[str], constraints: Iterable[Constraint] = ()) -> "Instance":
        names = tuple(names)
        return cls(calculus, names, tuple(range(len(names))), tuple(constraints))

    @property
    def calc(self) -> Calculus:
        return get_calculus(self.calculus)

    def variable_index(self, name: str) -> int:
        return self.names.index(name)

    def restrict(self, variables: Iterable[int]) -> "Instance":
        return subinstance(self, variables)

    def with_constraints(self, constraints: Iterable[Constraint]) -> "Instance":
        return Instance(self.calculus, self.names, self.variables, tuple(constraints))


def subinstance(instance: Instance, variables: Iterable[int]) -> Instance:
    keep = set(variables)
    missing = keep.difference(instance.variables)
    if missing:
        raise ValueError(f"variables {sorted(missing)} are not part of the instance")
    constraints = tuple(c for c in instance.constraints if keep.issuperset(c.scope))
    return Instance(instance.calculus, instance.names, tuple(sorted(keep)), constraints)


def primal_graph(instance: Instance) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(instance.variables)
    for constraint in instance.constraints:
        for u, v in itertools.combinations(sorted(set(constraint.scope)), 2):
            graph.add_edge(u, v)
    return graph


# ---------------------------------------------------------------------------------

#                              PARSING

# ---------------------------------------------------------------------------------

def _mapping(node, what: str, allowed: Iterable[str]) -> dict:
    if not isinstance(node, yaml.MappingNode):
        raise InstanceFormatError.at(node, f"{what} must be a mapping")
    allowed = set(allowed)
    result = {}
    for key_node, value_node in node.value:
        key = key_node.value
        if key not in allowed:
            raise InstanceFormatError.at(key_node, f"unknown key '{key}' in {what}")
        if key in result:
            raise InstanceFormatError.at(key_node, f"duplicate key '{key}' in {what}")
        result[key] = value_node
    return result


def _sequence(node, what: str) -> list:
    if not isinstance(node, yaml.SequenceNode):
        raise InstanceFormatError.at(node, f"{what} must be a list")
    return list(node.value)


def _scalar(node, what: str) -> str:
    if not isinstance(node, yaml.ScalarNode):
        raise InstanceFormatError.at(node, f"{what} must be a single value")
    return str(node.value)


def _required(fields: dict, key: str, parent, what: str):
    if key not in fields:
        raise InstanceFormatError.at(parent, f"{what} is missing '{key}'")
    return fields[key]


def _flag(node) -> bool:
    value = _scalar(node, "'neg'").lower()
    if value in ("true", "yes", "on"):
        return True
    if value in ("false", "no", "off"):
        return False
    raise InstanceFormatError.at(node, f"'neg' must be true or false, got '{value}'")


class _ConstraintReader:
    def __init__(self, calc: Calculus, index: dict[str, int]):
        self.calc = calc
        self.index = index

    def variable(self, node) -> int:
        name = _scalar(node, "a variable")
        if name not in self.index:
            raise InstanceFormatError.at(node, f"unknown variable '{name}'")
        return self.index[name]

    def relation(self, node, arity: int) -> int:
        name = _scalar(node, "a relation")
        if not self.calc.has_relation(name):
            raise InstanceFormatError.at(node, f"unknown relation '{name}' for calculus '{self.calc.name}'")
        relation = self.calc.relation(name)
        if relation.arity != arity:
            raise InstanceFormatError.at(
                node, f"arity mismatch: relation '{name}' has arity {relation.arity} but is applied to {arity} variables"
            )
        return relation.id

    def read(self, node) -> Constraint:
        fields = _mapping(node, "a constraint", ("scope", "relations", "dnf", "neq"))
        if "neq" in fields:
            if len(fields) > 1:
                raise InstanceFormatError.at(node, "'neq' cannot be combined with other keys")
            return self.read_neq(fields["neq"])
        scope_node = _required(fields, "scope", node, "constraint")
        scope = tuple(self.variable(item) for item in _sequence(scope_node, "'scope'"))
        if not scope:
            raise InstanceFormatError.at(scope_node, "'scope' must not be empty")
        if ("relations" in fields) == ("dnf" in fields):
            raise InstanceFormatError.at(node, "a constraint needs exactly one of 'relations' or 'dnf'")
        if "relations" in fields:
            terms = self.read_relations(fields["relations"], scope)
        else:
            terms = self.read_dnf(fields["dnf"], scope)
        return self.finish(node, scope, terms)

    def read_relations(self, node, scope: tuple[int, ...]) -> list:
        if isinstance(node, yaml.ScalarNode) and node.value == "all":
            if len(scope) not in self.calc.arity_set:
                raise InstanceFormatError.at(node, f"calculus '{self.calc.name}' has no relations of arity {len(scope)}")
            return [(Atom(r.id, scope),) for r in self.calc.relations_of_arity(len(scope))]
        items = _sequence(node, "'relations'")
        if not items:
            raise InstanceFormatError.at(node, "'relations' must not be empty")
        return [(Atom(self.relation(item, len(scope)), scope),) for item in items]

    def read_dnf(self, node, scope: tuple[int, ...]) -> list:
        terms = []
        for term_node in _sequence(node, "'dnf'"):
            atoms = []
            for atom_node in _sequence(term_node, "a dnf term"):
                fields = _mapping(atom_node, "an atom", ("rel", "args", "neg"))
                if "args" in fields:
                    args = tuple(self.variable(item) for item in _sequence(fields["args"], "'args'"))
                else:
                    args = scope
                for position, v in enumerate(args):
                    if v not in scope:
                        raise InstanceFormatError.at(fields["args"].value[position], "atom argument is not in the constraint scope")
                relation = self.relation(_required(fields, "rel", atom_node, "atom"), len(args))
                negated = _flag(fields["neg"]) if "neg" in fields else False
                atoms.append(Atom(relation, args, negated))
            if not atoms:
                raise InstanceFormatError.at(term_node, "a dnf term must not be empty")
            terms.append(tuple(atoms))
        if not terms:
            raise InstanceFormatError.at(node, "'dnf' must not be empty")
        return terms

    def read_neq(self, node) -> Constraint:
        items = _sequence(node, "'neq'")
        if len(items) != 2:
            raise InstanceFormatError.at(node, "'neq' takes exactly two variables")
        x, y = (self.variable(item) for item in items)
        arity = min(self.calc.arity_set)
        diagonal = self.calc.diagonal(arity)
        if diagonal is None:
            raise InstanceFormatError.at(node, f"calculus '{self.calc.name}' cannot express 'neq'")
        args = (x,) * (arity - 1) + (y,)
        return self.finish(node, args, [(Atom(diagonal.id, args, negated=True),)])

    def finish(self, node, scope: tuple[int, ...], terms: list) -> Constraint:
        dnf = normalize_negations(self.calc, terms)
        if not dnf:
            raise InstanceFormatError.at(node, "constraint has no consistent term once negations are removed")
        return Constraint.make(scope, dnf)


def parse_instance(text: str) -> Instance:
    """
    Reads an instance document, reporting problems with 1-based line and column.
    Args:
        text (str): YAML text with calculus, variables and constraints.
    Returns:
        Instance: The validated instance with negations normalized away.
    """
    try:
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as error:
        mark = error.problem_mark
        raise InstanceFormatError(
            f"malformed YAML: {error.problem}",
            mark.line + 1 if mark else None,
            mark.column + 1 if mark else None,
        ) from None
    if root is None:
        raise InstanceFormatError("empty instance document")

    fields = _mapping(root, "the instance", ("calculus", "variables", "constraints"))
    calculus_node = _required(fields, "calculus", root, "instance")
    calculus = _scalar(calculus_node, "'calculus'")
    try:
        calc = get_calculus(calculus)
    except ValueError:
        raise InstanceFormatError.at(calculus_node, f"unknown calculus '{calculus}'") from None

    names = []
    for item in _sequence(_required(fields, "variables", root, "instance"), "'variables'"):
        name = _scalar(item, "a variable name")
        if name in names:
            raise InstanceFormatError.at(item, f"duplicate variable '{name}'")
        names.append(name)

    reader = _ConstraintReader(calc, {name: index for index, name in enumerate(names)})
    constraints = []
    if "constraints" in fields and not (isinstance(fields["constraints"], yaml.ScalarNode) and fields["constraints"].value in ("", "null", "~")):
        constraints = [reader.read(item) for item in _sequence(fields["constraints"], "'constraints'")]
    return Instance.build(calculus, names, constraints)


def _constraint_document(calc: Calculus, constraint: Constraint, names: tuple[str, ...]) -> dict:
    scope = [names[v] for v in constraint.scope]
    if constraint.is_disjunction:
        return {"scope": scope, "relations": [calc.relations[term[0].relation].name for term in constraint.dnf]}
    return {
        "scope": scope,
        "dnf": [
            [{"rel": calc.relations[atom.relation].name, "args": [names[v] for v in atom.args]} for atom in term]
            for term in constraint.dnf
        ],
    }


def serialize_instance(instance: Instance) -> str:
    calc = instance.calc
    document = {
        "calculus": instance.calculus,
        "variables": [instance.names[v] for v in instance.variables],
        "constraints": [_constraint_document(calc, c, instance.names) for c in instance.constraints],
    }
    return yaml.safe_dump(document, sort_keys=False, default_flow_style=None)


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as file:
        return parse_instance(file.read())


def save_instance(instance: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as file:
        file.write(serialize_instance(instance))
