import math

import pytest
from hypothesis import given, strategies as st

from gcsim.metrics import (OverlapStat, WorkloadConfig, generate_workload,
                           overlap_count, percentiles, render_cdf,
                           render_summary_table, summarize_run)
from gcsim.runtime import PauseInterval


# -- workload ------------------------------------------------------------------


def test_uniform_arrivals_are_exactly_periodic():
    stream = list(generate_workload(WorkloadConfig(rate_rps=100, duration_s=10)))
    assert len(stream) == 1000
    assert [t for t, _, _ in stream] == [10_000 * (i + 1) for i in range(1000)]


def test_mix_pattern_repeats_three_gets_one_set():
    stream = list(generate_workload(WorkloadConfig(rate_rps=8, duration_s=1)))
    assert [k for _, _, k in stream] == ["get", "get", "get", "set"] * 2


def test_http_workload_is_all_http_kind():
    stream = list(generate_workload(WorkloadConfig(rate_rps=10, duration_s=1, kind="http")))
    assert {k for _, _, k in stream} == {"http"}


def test_poisson_arrivals_reproducible_per_seed():
    cfg = WorkloadConfig(rate_rps=500, duration_s=2, arrivals="poisson", seed=11)
    a = list(generate_workload(cfg))
    b = list(generate_workload(cfg))
    assert a == b
    c = list(generate_workload(WorkloadConfig(rate_rps=500, duration_s=2,
                                              arrivals="poisson", seed=12)))
    assert a != c


def test_workload_rejects_bad_rate():
    with pytest.raises(ValueError):
        next(generate_workload(WorkloadConfig(rate_rps=0, duration_s=1)))


# -- percentiles ----------------------------------------------------------------


def test_single_sample_statistics():
    r = percentiles([5_000])
    assert r.mean_us == 5_000 and r.median_us == 5_000 and r.stddev_us == 0
    assert r.max_us == 5_000
    assert all(v == 5_000 for v in r.quantiles_us.values())


def test_nearest_rank_on_one_to_hundred():
    r = percentiles(range(1_000, 101_000, 1_000))  # 1..100 ms
    assert r.quantiles_us[99.0] == 99_000
    assert r.median_us == 50_000
    assert r.max_us == 100_000


def test_empty_sample_set_rejected():
    with pytest.raises(ValueError):
        percentiles([])


def _oracle_nearest_rank(values, level):
    # independent re-derivation: smallest v with count(<= v) >= ceil(level% * n)
    need = math.ceil(level / 100 * len(values))
    for v in sorted(set(values)):
        if sum(1 for x in values if x <= v) >= need:
            return v
    return max(values)


@given(st.lists(st.integers(0, 10_000), min_size=1, max_size=400))
def test_quantiles_match_counting_oracle(values):
    r = percentiles(values)
    for level in (50.0, 95.0, 99.0, 99.9):
        assert _oracle_nearest_rank(values, level) == (
            r.median_us if level == 50.0 else r.quantiles_us.get(level, r.median_us))
    assert r.max_us == max(values)
    assert r.mean_us == pytest.approx(sum(values) / len(values))


@given(st.lists(st.integers(0, 10_000), min_size=1, max_size=400))
def test_quantiles_non_decreasing_in_rank(values):
    r = percentiles(values)
    ordered = [r.quantiles_us[q] for q in sorted(r.quantiles_us)]
    assert ordered == sorted(ordered)
    assert r.median_us <= r.quantiles_us[95.0]


# -- overlap accounting ------------------------------------------------------------


def _pause(node, start, end):
    return PauseInterval(node, start, end, ticket_id=1, forced=False)


def test_disjoint_intervals_do_not_overlap():
    stat = overlap_count([_pause("a", 0, 10), _pause("b", 20, 30), _pause("c", 40, 50)])
    assert stat == OverlapStat(total_collections=3, overlapping_collections=0)
    assert stat.fraction == 0.0


def test_identical_intervals_on_three_nodes_all_overlap():
    stat = overlap_count([_pause(n, 100, 200) for n in "abc"])
    assert stat.overlapping_collections == 3 and stat.total_collections == 3


def test_touching_intervals_are_not_overlapping():
    stat = overlap_count([_pause("a", 0, 10), _pause("b", 10, 20)])
    assert stat.overlapping_collections == 0


def test_same_node_intervals_never_count():
    stat = overlap_count([_pause("a", 0, 10), _pause("a", 5, 15)])
    assert stat.overlapping_collections == 0


@given(st.lists(st.tuples(st.sampled_from("abc"), st.integers(0, 100), st.integers(1, 50)),
                max_size=30))
def test_overlap_matches_pairwise_intersection_oracle(raw):
    pauses = [_pause(n, s, s + d) for n, s, d in raw]
    stat = overlap_count(pauses)
    expected = sum(
        1 for a in pauses
        if any(a.node != b.node and a.start_us < b.end_us and b.start_us < a.end_us
               for b in pauses))
    assert stat.overlapping_collections == expected


# -- report rendering -----------------------------------------------------------------


def test_cdf_is_monotone_in_both_columns():
    text = render_cdf([5_000, 1_000, 3_000, 3_000])
    rows = [line.split("\t") for line in text.splitlines() if not line.startswith("#")]
    lats = [float(r[0]) for r in rows]
    fracs = [float(r[1]) for r in rows]
    assert lats == sorted(lats)
    assert fracs == sorted(fracs)
    assert fracs[-1] == 1.0


def test_summary_table_has_row_per_run_and_ms_precision():
    runs = [summarize_run("blade", [2_048] * 10, 0, []),
            summarize_run("gc-on", [2_048] * 9 + [14_471], 1,
                          [_pause("b0", 0, 12_423)])]
    text = render_summary_table(runs)
    lines = text.splitlines()
    assert len([l for l in lines if not l.startswith("#")]) == 3  # header + 2 rows
    assert "blade\t10\t0\t2.048\t2.048" in text
    assert "12.423" in text  # pause duration in ms columns
