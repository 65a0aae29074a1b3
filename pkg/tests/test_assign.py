import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_makespan, group_loads
from wnocmac import Assignment, Protocol, SimConfig
from wnocmac.assign import greedy_balanced, groups_of, plan_for, random_channel, uniform_static
from wnocmac.rng import SplitMix64


def test_uniform_static_blocks():
    m = uniform_static(16, 4)
    assert groups_of(m, 4) == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11], [12, 13, 14, 15]]
    assert m[5] == 1
    assert uniform_static(4, 4) == [0, 1, 2, 3]
    assert [len(g) for g in groups_of(uniform_static(10, 4), 4)] == [3, 3, 2, 2]
    assert uniform_static(7, 1) == [0] * 7


def test_greedy_worked_example():
    loads = np.array([5, 4, 3, 2, 1, 1]) / 16
    m = greedy_balanced(loads, 2)
    sums = group_loads(m, loads, 2)
    assert np.allclose(sums, [0.5, 0.5])
    assert brute_force_makespan(loads, 2) == pytest.approx(0.5)
    # heaviest item lands in group 0, the tie at 8/16 each is reached by LPT
    assert groups_of(m, 2) == [[0, 3, 4], [1, 2, 5]]


def test_greedy_equal_loads_and_single_group():
    assert [len(g) for g in groups_of(greedy_balanced([1.0] * 16, 2), 2)] == [8, 8]
    assert greedy_balanced([0.3, 0.2, 0.5], 1) == [0, 0, 0]


def test_greedy_zero_loads_fall_back_to_uniform():
    assert greedy_balanced([0.0] * 10, 4) == uniform_static(10, 4)


def test_greedy_rejects_negative():
    with pytest.raises(ValueError):
        greedy_balanced([0.1, -0.1], 2)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=9), st.integers(1, 3))
def test_greedy_within_lpt_bound(loads, nc):
    if sum(loads) == 0:
        return
    m = greedy_balanced(loads, nc)
    got = group_loads(m, loads, nc).max()
    opt = brute_force_makespan(loads, nc)
    assert got <= (4 / 3 - 1 / (3 * nc)) * opt + 1e-12


@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=4, max_size=40), st.integers(1, 4))
def test_greedy_never_leaves_group_empty(loads, nc):
    m = greedy_balanced(loads, nc)
    assert sorted(set(m)) == list(range(nc))


def test_random_channel():
    class NoDraw:
        def below(self, n):
            raise AssertionError("should not draw for one channel")

    assert random_channel(NoDraw(), 1) == 0
    g = SplitMix64(42)
    draws = np.array([random_channel(g, 4) for _ in range(200_000)])
    freq = np.bincount(draws, minlength=4) / draws.size
    assert np.all(np.abs(freq - 0.25) < 0.005)
    g1, g2 = SplitMix64(7), SplitMix64(7)
    assert [random_channel(g1, 4) for _ in range(50)] == [random_channel(g2, 4) for _ in range(50)]


@pytest.mark.parametrize("protocol,assignment,dynamic", [
    (Protocol.BRS, Assignment.AS1, True),
    (Protocol.BRS, Assignment.AS2, False),
    (Protocol.BRS, Assignment.AS3, False),
    (Protocol.TOKEN, Assignment.AS1, False),
    (Protocol.TOKEN, Assignment.AS2, True),
    (Protocol.TOKEN, Assignment.AS3, False),
])
def test_plan_for_table(protocol, assignment, dynamic):
    cfg = SimConfig(n_nodes=16, protocol=protocol, assignment=assignment).replace()
    loads = np.linspace(1, 2, 16) / np.linspace(1, 2, 16).sum()
    plan = plan_for(cfg, loads)
    assert plan.dynamic is dynamic
    if assignment is Assignment.AS3:
        assert list(plan.channel_of) == greedy_balanced(loads, 4)
    elif not dynamic:
        assert list(plan.channel_of) == uniform_static(16, 4)
    text = plan.dump()
    assert text.count("\n") == 18


def test_groups_of_dynamic_plan_is_single_group():
    cfg = SimConfig(n_nodes=8, protocol="token", assignment="AS2").replace()
    assert plan_for(cfg, [1 / 8] * 8).groups() == [list(range(8))]
