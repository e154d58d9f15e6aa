import random

import pytest
from hypothesis import given, settings, strategies as st

from casattack.errors import InvalidActionError
from casattack.grid import (Bus, Line, PowerGrid, failed_line_count, grid_from_csv,
                            is_collapsed, load_grid, load_rts79, trip_line)


def chain(loads=(9.0, 9.0, 9.0), caps=(10.0, 10.0, 10.0)) -> PowerGrid:
    buses = tuple(Bus(i, "junction", 0.0, 0.0) for i in range(4))
    lines = tuple(Line(k + 1, k, k + 1, c, l) for k, (c, l) in enumerate(zip(caps, loads)))
    return PowerGrid(buses, lines)


def test_rts79_shape():
    g = load_rts79()
    assert len(g.buses) == 24
    assert len(g.lines) == 38
    assert len(g.load_buses) == 17
    assert g.total_generation == pytest.approx(3405.0)
    assert g.total_demand == pytest.approx(2850.0)
    assert len(g.generator_buses) == 10
    assert all(ln.load == pytest.approx(0.75 * ln.capacity) for ln in g.lines)
    assert failed_line_count(g) == 0 and not is_collapsed(g)


def test_loading_factor_applies():
    g = load_rts79(0.5)
    assert all(ln.load == pytest.approx(0.5 * ln.capacity) for ln in g.lines)


def test_three_line_chain():
    after, res = trip_line(chain(), 2)
    assert res.direct == [2]
    assert res.cascaded == [1, 3]
    assert res.cascade_rounds == [[1, 3]]
    assert failed_line_count(after) == 3
    assert res.rounds == 2
    # lines 1 and 3 each got 4.5 (13.5 >= 10); their loads then have nowhere to go
    assert after.shed_mw == pytest.approx(27.0)


def test_zero_load_trip_is_contained():
    after, res = trip_line(chain(loads=(0.0, 0.0, 0.0)), 2)
    assert (failed_line_count(after), res.cascaded, res.rounds) == (1, [], 1)


def test_isolated_line_sheds():
    g = PowerGrid((Bus(0, "load", 0, 5), Bus(1, "generator", 5, 0)), (Line(7, 0, 1, 10.0, 5.0),))
    after, res = trip_line(g, 7)
    assert failed_line_count(after) == 1 and res.rounds == 1
    assert res.shed_mw == pytest.approx(5.0)
    assert res.surviving_load_fraction == 0.0


def test_equality_fails():
    # 5 + 5 = 10 reaches capacity exactly, which counts as a failure
    after, res = trip_line(chain(loads=(5.0, 10.0, 0.0), caps=(10.0, 20.0, 100.0)), 2)
    assert 1 in res.cascaded


def test_invalid_trips():
    g = chain()
    after, _ = trip_line(g, 1)
    with pytest.raises(InvalidActionError):
        trip_line(after, 1)
    with pytest.raises(InvalidActionError):
        trip_line(g, 99)


def test_threshold():
    g = load_rts79()
    for ln in g.alive_ids:
        if failed_line_count(g) >= 8:
            break
        g, _ = trip_line(g, ln)
    assert is_collapsed(g, 8) == (failed_line_count(g) >= 8)
    assert is_collapsed(chain(), 0)


def replay_rounds(grid: PowerGrid, line_id: int):
    """Re-derive per-round load totals from the cascade log with an independent loop."""
    lines = {ln.id: ln for ln in grid.lines}
    load = {k: ln.load for k, ln in lines.items()}
    alive = {k for k, ln in lines.items() if ln.alive}
    totals = [sum(load[k] for k in alive)]
    shed_total = 0.0
    failing = [line_id]
    while failing:
        alive -= set(failing)
        for k in failing:
            ln = lines[k]
            nb = [m for m in alive if {lines[m].from_bus, lines[m].to_bus} & {ln.from_bus, ln.to_bus}]
            if nb:
                for m in nb:
                    load[m] += load[k] / len(nb)
            else:
                shed_total += load[k]
            load[k] = 0.0
        totals.append(sum(load[k] for k in alive) + shed_total)
        failing = [k for k in alive if load[k] >= lines[k].capacity]
    return totals


@settings(max_examples=60, deadline=None)
@given(rho=st.floats(0.3, 0.99), first=st.integers(1, 38), seed=st.integers(0, 10 ** 6))
def test_cascade_properties_on_rts79(rho, first, seed):
    g = load_rts79(rho)
    rng = random.Random(seed)
    failed_before = set()
    for line in [first] + rng.sample(range(1, 39), 3):
        if line not in g.alive_ids:
            continue
        totals = replay_rounds(g, line)
        assert all(abs(t - totals[0]) <= 1e-9 for t in totals)
        before_total = g.total_load
        after, res = trip_line(g, line)
        assert after.total_load + res.shed_mw == pytest.approx(before_total, abs=1e-9)
        failed = set(after.failed_ids)
        assert failed_before <= failed
        assert set(res.direct).isdisjoint(res.cascaded)
        assert failed - failed_before == set(res.direct) | set(res.cascaded)
        assert res.rounds <= 38
        again, res2 = trip_line(g, line)
        assert res2.to_json() == res.to_json() and again == after
        g, failed_before = after, failed


def test_zero_loading_single_failures():
    g = load_rts79(0.0)
    for ln in g.alive_ids:
        after, res = trip_line(g, ln)
        assert failed_line_count(after) == 1 and not res.cascaded


def test_custom_grid_files(tmp_path):
    (tmp_path / "bus.csv").write_text("id,type,gen_mw,demand_mw\n1,generator,10,0\n2,load,0,8\n")
    (tmp_path / "line.csv").write_text("id,from,to,capacity_mw\n1,1,2,20\n")
    g = load_grid(tmp_path / "bus.csv", tmp_path / "line.csv", 0.5)
    assert g.lines[0].load == 10.0
    with pytest.raises(ValueError):
        grid_from_csv("id,type,gen_mw,demand_mw\n1,load,0,1\n", "id,from,to,capacity_mw\n1,1,9,5\n")
