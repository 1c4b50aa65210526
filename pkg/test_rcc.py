import itertools
import os

import pytest
import yaml

from calculi import get_calculus
from calculus_core import AtomicNetwork, all_tuples
from rcc import (
    TABLES_ENV,
    CompositionTable,
    find_table,
    load_table,
    rcc5_drpo_model,
    rcc5_relation_of,
    rcc5_set_model,
)


@pytest.mark.parametrize("variant", ["rcc5", "rcc8"])
def test_composition_table_laws(variant):
    table = load_table(variant)
    relations = range(len(table.names))

    print(f"Test Case 1: {variant} converse is an involution")
    assert all(table.converse[table.converse[r]] == r for r in relations), "Test Case 1 Failed: converse is not an involution"

    print(f"Test Case 2: {variant} diagonal is the identity of composition")
    for r in relations:
        assert table.table[table.diagonal][r] == 1 << r, f"Test Case 2 Failed: EQ o {table.names[r]}"
        assert table.table[r][table.diagonal] == 1 << r, f"Test Case 2 Failed: {table.names[r]} o EQ"

    print(f"Test Case 3: {variant} composition respects converses")
    for r1, r2 in itertools.product(relations, repeat=2):
        left = table.converse_mask(table.table[r1][r2])
        right = table.table[table.converse[r2]][table.converse[r1]]
        assert left == right, f"Test Case 3 Failed: converse of {table.names[r1]} o {table.names[r2]}"


def test_scenario_counts():
    print("Test Case 1: Two regions stand in exactly one basic relation")
    assert sum(1 for _ in get_calculus("rcc8").enumerator((0, 1), {})) == 8, "Test Case 1 Failed: rcc8 should give 8"
    assert sum(1 for _ in get_calculus("rcc5").enumerator((0, 1), {})) == 5, "Test Case 1 Failed: rcc5 should give 5"

    print("Test Case 2: DR and PO combine freely on four regions")
    rcc5 = get_calculus("rcc5")
    drpo = frozenset([rcc5.relation("DR").id, rcc5.relation("PO").id])
    restrictions = {(x, y): drpo for x, y in itertools.permutations(range(4), 2)}
    assert sum(1 for _ in rcc5.enumerator((0, 1, 2, 3), restrictions)) == 64, "Test Case 2 Failed: expected 2^6 scenarios"


def test_rcc5_set_models():
    rcc5 = get_calculus("rcc5")
    print("Test Case 1: Every three-region scenario reads back from its set model")
    for network in rcc5.enumerator((0, 1, 2), {}):
        model = rcc5_set_model(network)
        for tup in all_tuples(network.variables, (2,)):
            assert rcc5_relation_of(model, tup) == network.relation(tup), f"Test Case 1 Failed: {network} at {tup}"

    print("Test Case 2: DR/PO networks get the private-region model")
    dr, po, pp = (rcc5.relation(name).id for name in ("DR", "PO", "PP"))
    network = AtomicNetwork.build([0, 1, 2], {(0, 1): po, (1, 0): po, (0, 2): dr, (2, 0): dr, (1, 2): po, (2, 1): po})
    model = rcc5_drpo_model(network)
    assert rcc5_relation_of(model, (0, 2)) == dr and rcc5_relation_of(model, (1, 2)) == po, "Test Case 2 Failed: wrong regions"
    with pytest.raises(ValueError):
        rcc5_drpo_model(AtomicNetwork.build([0, 1], {(0, 1): pp}))

    print("Test Case 3: Every DR/PO scenario on four regions reads back from its private-region model")
    drpo = frozenset([dr, po])
    restrictions = {(x, y): drpo for x, y in itertools.permutations(range(4), 2)}
    for network in rcc5.enumerator((0, 1, 2, 3), restrictions):
        model = rcc5_drpo_model(network)
        for tup in all_tuples(network.variables, (2,)):
            assert rcc5_relation_of(model, tup) == network.relation(tup), f"Test Case 3 Failed: {network} at {tup}"


def test_rcc8_closure():
    rcc8 = get_calculus("rcc8")
    ntpp, dc = rcc8.relation("NTPP").id, rcc8.relation("DC").id
    print("Test Case 1: Nested proper parts cannot be disconnected")
    network = AtomicNetwork.build([0, 1, 2], {(0, 1): ntpp, (1, 2): ntpp, (0, 2): dc})
    assert rcc8.decide(network) is None, "Test Case 1 Failed: NTPP o NTPP excludes DC"

    print("Test Case 2: Dropping the conflicting entry makes it satisfiable")
    assert rcc8.decide(AtomicNetwork.build([0, 1, 2], {(0, 1): ntpp, (1, 2): ntpp})) is not None, "Test Case 2 Failed"


def test_table_search_path(tmp_path, monkeypatch):
    with open(find_table("rcc5"), "r") as file:
        document = yaml.safe_load(file)
    custom = tmp_path / "rcc5.yml"
    custom.write_text(yaml.safe_dump(document))

    print("Test Case 1: QCSP_TABLES_PATH is searched before the bundled tables")
    monkeypatch.setenv(TABLES_ENV, str(tmp_path))
    assert os.path.samefile(find_table("rcc5"), custom), "Test Case 1 Failed: custom table not found first"

    print("Test Case 2: Broken tables are rejected")
    broken = dict(document, converse={**document["converse"], "PO": "XX"})
    with pytest.raises(ValueError):
        CompositionTable(broken)
    missing = dict(document, composition={k: v for k, v in document["composition"].items() if k != "PP"})
    with pytest.raises(ValueError):
        CompositionTable(missing)

    print("Test Case 3: Unknown variants are rejected")
    with pytest.raises(FileNotFoundError):
        find_table("rcc3")


if __name__ == "__main__":
    for variant in ("rcc5", "rcc8"):
        test_composition_table_laws(variant)
    test_scenario_counts()
    test_rcc5_set_models()
    test_rcc8_closure()
