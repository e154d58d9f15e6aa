import pytest
from hypothesis import given, strategies as st

from casattack.errors import MixedUnitsError, NotInCatalogError
from casattack.metrics import (INFINITE, UNDEFINED, AttackClassification, AttackOutcome, catalog,
                               classify, resilience, score_json, vulnerability)


def wins(*costs, unit="actions"):
    return [AttackOutcome(c, unit=unit) for c in costs]


def test_reference_values():
    assert vulnerability(wins(3)) == pytest.approx(1 / 3)
    assert round(vulnerability(wins(3)), 2) == 0.33
    assert vulnerability(wins(1)) == 1.0
    assert vulnerability(wins(12)) == pytest.approx(0.083, abs=5e-4)
    assert resilience(wins(4)) == 4 and vulnerability(wins(4)) == 0.25
    assert resilience(wins(5, 3, 9)) == 3


def test_no_success_markers():
    failed = [AttackOutcome(2, success=False)]
    assert resilience(failed) is INFINITE
    assert vulnerability(failed) is UNDEFINED
    assert vulnerability([]) is UNDEFINED and vulnerability([]) != 0
    assert score_json(UNDEFINED) == "undefined" and score_json(0.5) == 0.5


def test_failed_outcomes_are_ignored():
    assert resilience([AttackOutcome(1, success=False), AttackOutcome(6)]) == 6


def test_cost_floor_and_units():
    with pytest.raises(ValueError):
        AttackOutcome(0.5)
    with pytest.raises(MixedUnitsError):
        resilience(wins(2) + wins(3, unit="nodes removed"))


@given(st.lists(st.floats(1, 1e6), min_size=1, max_size=20), st.floats(1, 1e6))
def test_reciprocal_and_antitone(costs, extra):
    outs = wins(*costs)
    assert vulnerability(outs) * resilience(outs) == pytest.approx(1.0)
    assert vulnerability(outs + wins(extra)) >= vulnerability(outs)


TABLE = [
    ("Traffic Analysis, Topology Inference", "NetworkStructure", "C", "IS", "Passive", "NA"),
    ("Topological Disruption", "NetworkStructure", "A", "IS", "Active", "State"),
    ("Cascade Induction", "NetworkStructure", "IA", "IS SC", "Active", "Dynamics"),
    ("Sniffing", "CooperationProtocols", "C", "IS", "Passive", "NA"),
    ("Sybil", "CooperationProtocols", "IA", "IS SC S", "Active", "StateAndDynamics"),
    ("Information Manipulation", "CooperationProtocols", "IA", "SC AN", "Active", "Dynamics"),
    ("Parameter/Dynamics Inference", "ActuationFunctions", "C", "IS SC", "Passive", "NA"),
    ("Competitive Intelligence", "ActuationFunctions", "C", "IS SC AN", "Passive", "NA"),
    ("Adversarial Examples", "ActuationFunctions", "IA", "S AN SC", "Active", "State"),
    ("Spoofing", "ActuationFunctions", "IA", "S AN SC", "Active", "StateAndDynamics"),
    ("Induction of Terminal States", "ActuationFunctions", "IA", "S AN SC", "Active", "State"),
]


@pytest.mark.parametrize("row", TABLE, ids=[r[0] for r in TABLE])
def test_catalog_rows(row):
    name, surface, cia, dddas, kind, mode = row
    got = classify(name)
    assert got == AttackClassification(name, surface, frozenset(cia), frozenset(dddas.split()),
                                       kind, mode)


def test_catalog_is_complete_and_consistent():
    version, rows, _ = catalog()
    assert version >= 1 and len(rows) == 11
    assert all(r.mode == "NA" for r in rows if r.type == "Passive")


def test_lookup_is_forgiving_about_case_and_spacing():
    assert classify("  sybil ") == classify("Sybil")
    assert classify("adversarial   EXAMPLES").name == "Adversarial Examples"
    assert classify("Topology Inference").name == "Traffic Analysis, Topology Inference"
    with pytest.raises(NotInCatalogError):
        classify("Stuxnet")


def test_passive_needs_na():
    with pytest.raises(ValueError):
        AttackClassification("x", "NetworkStructure", frozenset("C"), frozenset({"IS"}), "Passive",
                             "State")
    assert classify("Sybil").to_dict() == {"name": "Sybil", "surface": "CooperationProtocols",
                                           "cia": ["I", "A"], "dddas": ["S", "IS", "SC"],
                                           "type": "Active", "mode": "StateAndDynamics"}
