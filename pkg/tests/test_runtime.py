import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcsim.runtime import (GIB, MIB, CollectorCostModel, GcMode, HeapModel,
                           ManagedRuntime, PauseEstimator, TicketState)
from gcsim.simcore import Simulation


def make_runtime(sim=None, live=100, trigger=200, hard=1000, low_water=100,
                 pause_per_gib=25_000, overhead=0, mode=GcMode.BLADE,
                 default_pause=10_000):
    sim = sim or Simulation()
    heap = HeapModel(live_bytes=live, trigger_bytes=trigger,
                     hard_limit_bytes=hard, low_water_bytes=low_water)
    cost = CollectorCostModel(pause_per_gib_us=pause_per_gib, fixed_overhead_us=overhead)
    rt = ManagedRuntime(sim, "n", heap, cost,
                        PauseEstimator(default_pause_us=default_pause), mode=mode)
    return sim, rt


# -- upcall registration -------------------------------------------------------


def test_unregistered_trigger_collects_immediately():
    sim, rt = make_runtime(mode=GcMode.ON)
    rt.allocate(150)
    assert rt.collection_count() == 1
    assert rt.heap.allocated_bytes == rt.heap.live_bytes


def test_registered_handler_gets_first_upcall_with_id_1():
    sim, rt = make_runtime()
    calls = []
    rt.reg_gc_hand(lambda t: calls.append((t.id, t.allocated_bytes, t.estimated_pause_us)) or True)
    rt.allocate(150)
    assert calls == [(1, 250, 10_000)]  # no history yet: default estimate


def test_reregistration_replaces_previous_handler():
    sim, rt = make_runtime()
    first, second = [], []
    rt.reg_gc_hand(lambda t: first.append(t.id) or True)
    rt.reg_gc_hand(lambda t: second.append(t.id) or True)
    rt.allocate(150)
    assert first == [] and second == [1]


# -- collect / defer decisions ------------------------------------------------


def test_handler_true_runs_collection_now_for_cost_model_duration():
    sim, rt = make_runtime(live=512 * MIB, trigger=1024 * MIB, hard=4 * GIB,
                           low_water=0, overhead=1_000)
    rt.reg_gc_hand(lambda t: True)
    sim.schedule_at(50, lambda _: rt.allocate(600 * MIB))
    sim.run_until(50)
    expected = 1_000 + round(25_000 * (512 * MIB) / GIB)
    assert rt.pauses[0].start_us == 50
    assert rt.pauses[0].end_us == 50 + expected
    assert rt.tickets[1].state is TicketState.COMPLETED


def test_handler_false_defers_until_start_gc():
    sim, rt = make_runtime()
    rt.reg_gc_hand(lambda t: False)
    sim.schedule_at(10, lambda _: rt.allocate(150))
    sim.schedule_at(500, lambda _: rt.start_gc(1))
    sim.run_until(1_000)
    assert rt.tickets[1].state is TicketState.COMPLETED
    assert rt.pauses[0].start_us == 500


def test_exhaustion_forces_collection_and_start_gc_noops():
    sim, rt = make_runtime(live=100, trigger=200, hard=400, low_water=100)
    rt.reg_gc_hand(lambda t: False)
    rt.allocate(150)  # crosses trigger, deferred
    assert rt.tickets[1].state is TicketState.DEFERRED
    rt.allocate(200)  # 450 >= hard: forced at the crossing allocation
    assert rt.tickets[1].state is TicketState.FORCED_COMPLETED
    assert rt.forced_collections == 1
    assert rt.heap.allocated_bytes == rt.heap.live_bytes
    pauses_before = rt.collection_count()
    rt.start_gc(1)  # late start is ignored
    assert rt.collection_count() == pauses_before


def test_allocated_never_exceeds_hard_limit():
    sim, rt = make_runtime(live=100, trigger=200, hard=400, low_water=100)
    rt.reg_gc_hand(lambda t: False)
    rt.allocate(10_000)
    assert rt.peak_allocated_bytes <= rt.heap.hard_limit_bytes


def test_start_gc_is_idempotent_and_safe_on_unknown_ids():
    sim, rt = make_runtime()
    rt.reg_gc_hand(lambda t: False)
    rt.allocate(150)
    rt.start_gc(1)
    rt.start_gc(1)
    rt.start_gc(99)
    assert rt.collection_count() == 1


def test_allocate_zero_changes_nothing():
    sim, rt = make_runtime()
    before = rt.heap.allocated_bytes
    rt.allocate(0)
    assert rt.heap.allocated_bytes == before
    assert rt.collection_count() == 0


def test_one_upcall_per_cycle_at_threshold_crossing():
    # crossing 799 -> 801 MB of an 800 MB trigger upcalls exactly once
    sim, rt = make_runtime(live=400 * MIB, trigger=800 * MIB, hard=2 * GIB,
                           low_water=100 * MIB)
    calls = []
    rt.reg_gc_hand(lambda t: calls.append(t.allocated_bytes) or False)
    rt.allocate(399 * MIB)  # 799 MB
    assert calls == []
    rt.allocate(2 * MIB)    # 801 MB, one upcall
    rt.allocate(5 * MIB)    # still the same cycle
    assert calls == [801 * MIB]


@given(st.lists(st.integers(min_value=0, max_value=50), min_size=1, max_size=60))
def test_threshold_crossing_oracle(allocs):
    # oracle over the scalar sequence: first prefix sum reaching the trigger
    sim, rt = make_runtime(live=0, trigger=100, hard=10_000, low_water=0)
    calls = []
    rt.reg_gc_hand(lambda t: calls.append(t.allocated_bytes) or False)
    total, expected = 0, None
    for n in allocs:
        total += n
        if expected is None and total >= 100:
            expected = total
    for n in allocs:
        rt.allocate(n)
    assert calls == ([expected] if expected is not None else [])


# -- ticket id sequence ----------------------------------------------------------


def test_ticket_ids_are_sequential_without_gaps():
    sim, rt = make_runtime(mode=GcMode.ON)
    for _ in range(5):
        rt.allocate(150)  # every crossing collects and resets occupancy
    assert sorted(rt.tickets) == [1, 2, 3, 4, 5]
    assert [p.ticket_id for p in rt.pauses] == [1, 2, 3, 4, 5]


# -- start_gc idempotence under duplication (property) ----------------------------


@settings(max_examples=60)
@given(st.lists(st.one_of(st.tuples(st.just("alloc"), st.integers(1, 120)),
                          st.tuples(st.just("start"), st.integers(1, 6))),
                max_size=40),
       st.integers(2, 4))
def test_duplicated_start_calls_change_nothing(ops, copies):
    # idempotence as f;f = f: repeating any start call in place (any number
    # of times) leaves the state trace identical to the single-call sequence
    def run(op_list):
        _, rt = make_runtime(live=0, trigger=100, hard=400, low_water=0)
        rt.reg_gc_hand(lambda t: False)
        for op, val in op_list:
            if op == "alloc":
                rt.allocate(val)
            else:
                rt.start_gc(val)
        return ([(p.start_us, p.end_us, p.ticket_id, p.forced) for p in rt.pauses],
                {i: t.state for i, t in rt.tickets.items()},
                rt.heap.allocated_bytes)

    doubled = []
    for op, val in ops:
        doubled.extend([(op, val)] * (copies if op == "start" else 1))
    assert run(ops) == run(doubled)


# -- pause estimator ----------------------------------------------------------------


def test_estimator_default_without_history():
    est = PauseEstimator(default_pause_us=7_000)
    assert est.estimate_us(5 * GIB) == 7_000
    est.observe(GIB, 25_000)
    assert est.estimate_us(5 * GIB) == 7_000  # one point is still not a line


def test_estimator_two_point_line():
    # {(1 GB, 25 ms), (2 GB, 50 ms)} extrapolates to 75 ms at 3 GB
    est = PauseEstimator()
    est.observe(1 * GIB, 25_000)
    est.observe(2 * GIB, 50_000)
    assert est.estimate_us(3 * GIB) == 75_000


def test_estimator_degenerate_history_returns_mean():
    est = PauseEstimator()
    est.observe(GIB, 20_000)
    est.observe(GIB, 30_000)
    est.observe(GIB, 40_000)
    assert est.estimate_us(2 * GIB) == 30_000


def test_estimator_clamps_to_zero():
    est = PauseEstimator()
    est.observe(1 * GIB, 10_000)
    est.observe(2 * GIB, 20_000)
    assert est.estimate_us(0) == 0


@settings(max_examples=60)
@given(slope=st.integers(1, 50_000), intercept=st.integers(0, 50_000),
       xs=st.lists(st.integers(1, 64), min_size=2, max_size=12, unique=True),
       query=st.integers(0, 128))
def test_estimator_reproduces_exact_linear_history(slope, intercept, xs, query):
    # oracle: numpy least squares on the same points
    est = PauseEstimator()
    for x in xs:
        est.observe(x * MIB, intercept + slope * x)
    got = est.estimate_us(query * MIB)
    coef = np.polyfit([x * MIB for x in xs], [intercept + slope * x for x in xs], 1)
    expected = max(0.0, float(np.polyval(coef, query * MIB)))
    assert abs(got - expected) <= 1  # integer rounding only
    assert got == max(0, intercept + slope * query)


# -- collector cost model --------------------------------------------------------------


def test_pause_cost_matches_observed_average_scale():
    # 150 MiB live at 25 ms/GiB plus the calibrated overhead lands on 12.423 ms
    cost = CollectorCostModel(pause_per_gib_us=25_000, fixed_overhead_us=8_761)
    assert cost.pause_us(150 * MIB) == 12_423


def test_zero_live_zero_overhead_pause_is_zero():
    cost = CollectorCostModel(pause_per_gib_us=25_000, fixed_overhead_us=0)
    assert cost.pause_us(0) == 0


def test_repeated_collections_with_constant_live_set_pause_equally():
    sim, rt = make_runtime(live=100 * MIB, trigger=200 * MIB, hard=GIB,
                           low_water=0, overhead=500, mode=GcMode.ON)
    rt.allocate(150 * MIB)
    rt.allocate(150 * MIB)
    durations = {p.end_us - p.start_us for p in rt.pauses}
    assert len(rt.pauses) == 2 and len(durations) == 1


def test_cost_model_strictly_increasing_in_live_bytes():
    cost = CollectorCostModel(pause_per_gib_us=25_000, fixed_overhead_us=100)
    pauses = [cost.pause_us(n * GIB) for n in range(1, 6)]
    assert pauses == sorted(pauses) and len(set(pauses)) == len(pauses)


# -- heap model validation ----------------------------------------------------------------


def test_heap_rejects_trigger_plus_low_water_beyond_hard_limit():
    with pytest.raises(ValueError):
        HeapModel(live_bytes=10, trigger_bytes=900, hard_limit_bytes=1000,
                  low_water_bytes=200)


def test_heap_rejects_trigger_at_or_below_live():
    with pytest.raises(ValueError):
        HeapModel(live_bytes=100, trigger_bytes=100, hard_limit_bytes=1000,
                  low_water_bytes=0)


def test_gc_off_mode_never_collects_and_tracks_peak():
    sim, rt = make_runtime(mode=GcMode.OFF, live=100, trigger=200, hard=400,
                           low_water=100)
    rt.allocate(10_000)
    assert rt.collection_count() == 0
    assert rt.peak_allocated_bytes == 10_100
