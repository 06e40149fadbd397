"""Scenario assembly: turn a :class:`ScenarioConfig` into a wired simulation.

``run_scenario`` builds either cluster flavour, drives the configured
workload through it, and returns a :class:`RunResult` with every completed
sample, the pause intervals of every node, and (for the replicated cluster)
the safety-checker trace.  ``run_compare`` replays the identical workload
and seed under all three collector modes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .config import ScenarioConfig
from .httpcluster import Backend, LoadBalancer
from .metrics import (LatencySample, RunSummary, WorkloadConfig,
                      generate_workload, summarize_run)
from .raft import RaftClient, RaftNode, RaftTrace
from .runtime import (CollectorCostModel, GcMode, HeapModel, ManagedRuntime,
                      PauseEstimator, PauseInterval)
from .simcore import NetworkModel, Simulation, SimStats

MODE_LABELS = {"off": "gc-off", "blade": "blade", "on": "gc-on"}
COMPARE_ORDER = ("off", "blade", "on")


@dataclass
class RunResult:
    config: ScenarioConfig
    mode: str
    samples: list[tuple[int, int, int, str, str]]  # (rid, issued, completed, server, kind)
    issued: int
    pauses: list[PauseInterval]
    stats: SimStats
    trace: Optional[RaftTrace] = None
    retries: int = 0
    peak_allocated: dict[str, int] = field(default_factory=dict)

    @property
    def label(self) -> str:
        return MODE_LABELS[self.mode]

    @property
    def in_flight(self) -> int:
        return self.issued - len(self.samples)

    def latencies_us(self) -> list[int]:
        return [s[2] - s[1] for s in self.samples]

    def latency_by_rid(self) -> dict[int, int]:
        return {s[0]: s[2] - s[1] for s in self.samples}

    def latency_samples(self) -> list[LatencySample]:
        return [LatencySample(request_id=rid, issued_at=iss, completed_at=done,
                              server=server, kind=kind)
                for rid, iss, done, server, kind in self.samples]

    def summary(self) -> RunSummary:
        return summarize_run(self.label, self.latencies_us(), self.in_flight, self.pauses)


class _WorkloadDriver:
    """Feeds a workload stream into the simulation one arrival at a time.

    Scheduling each arrival from its predecessor keeps the event queue small
    and guarantees arrival events always carry an earlier insertion sequence
    than any protocol event scheduled for the same tick.
    """

    def __init__(self, sim: Simulation, stream: Iterator[tuple[int, int, str]],
                 dispatch: Callable[[int, str], None]):
        self.sim = sim
        self.stream = stream
        self.dispatch = dispatch
        self.issued = 0
        self._prime()

    def _prime(self) -> None:
        item = next(self.stream, None)
        if item is not None:
            t, rid, kind = item
            self.sim.schedule_at(t, self._fire, (rid, kind))

    def _fire(self, arg: tuple) -> None:
        rid, kind = arg
        self.issued += 1
        self.dispatch(rid, kind)
        self._prime()


class _BackgroundAllocator:
    """Constant-rate allocation ticks, suspended while the node is paused."""

    def __init__(self, sim: Simulation, runtime: ManagedRuntime,
                 bytes_per_s: int, interval_us: int):
        self.sim = sim
        self.runtime = runtime
        self.interval_us = interval_us
        self.bytes_per_tick = round(bytes_per_s * interval_us / 1_000_000)
        sim.schedule_at(interval_us, self._tick)

    def _tick(self, _arg=None) -> None:
        if self.runtime.is_paused:
            self.sim.schedule_at(self.runtime.paused_until, self._tick)
            return
        self.runtime.allocate(self.bytes_per_tick)
        self.sim.schedule_after(self.interval_us, self._tick)


def _make_runtime(sim: Simulation, node_id: str, cfg: ScenarioConfig,
                  mode: GcMode) -> ManagedRuntime:
    heap = HeapModel(
        live_bytes=cfg.live_bytes,
        trigger_bytes=cfg.effective_trigger_bytes(),
        hard_limit_bytes=cfg.hard_limit_bytes,
        low_water_bytes=cfg.effective_low_water_bytes(),
    )
    cost = CollectorCostModel(pause_per_gib_us=cfg.pause_per_gib_us,
                              fixed_overhead_us=cfg.pause_overhead_us)
    est = PauseEstimator(default_pause_us=cfg.default_pause_estimate_us)
    return ManagedRuntime(sim, node_id, heap, cost, est, mode=mode)


def _apply_overrides(cfg: ScenarioConfig, mode: Optional[str], seed: Optional[int],
                     duration_s: Optional[int]) -> ScenarioConfig:
    changes = {}
    if mode is not None:
        changes["gc_mode"] = mode
    if seed is not None:
        changes["seed"] = seed
    if duration_s is not None:
        changes["duration_s"] = duration_s
    return dataclasses.replace(cfg, **changes) if changes else cfg


def run_scenario(cfg: ScenarioConfig, mode: Optional[str] = None,
                 seed: Optional[int] = None,
                 duration_s: Optional[int] = None) -> RunResult:
    cfg = _apply_overrides(cfg, mode, seed, duration_s)
    if cfg.system == "http":
        return _run_http(cfg)
    return _run_raft(cfg)


# -- HTTP cluster ----------------------------------------------------------------


def _run_http(cfg: ScenarioConfig) -> RunResult:
    sim = Simulation(seed=cfg.seed,
                     network=NetworkModel.from_rtt(cfg.rtt_us, cfg.jitter_us))
    mode = GcMode(cfg.gc_mode)
    service_us = cfg.service_time_us
    if mode is GcMode.OFF and cfg.gcoff_slowdown > 1.0:
        service_us = round(service_us * cfg.gcoff_slowdown)

    backend_ids = [f"b{i}" for i in range(cfg.nodes)]
    lb = LoadBalancer(sim, "lb", backend_ids, max_concurrent=cfg.max_concurrent)
    backends = []
    for bid in backend_ids:
        runtime = _make_runtime(sim, bid, cfg, mode)
        backends.append(Backend(
            sim, bid, "lb", runtime,
            service_time_us=service_us,
            parallelism=cfg.parallelism,
            bytes_per_request=cfg.bytes_per_request,
            defer_threshold_us=cfg.defer_threshold_us,
            coordinated=mode is GcMode.BLADE,
        ))
        if cfg.background_alloc_bytes_per_s:
            _BackgroundAllocator(sim, runtime, cfg.background_alloc_bytes_per_s,
                                 cfg.background_alloc_interval_us)

    stream = generate_workload(WorkloadConfig(
        rate_rps=cfg.rate_rps, duration_s=cfg.duration_s, arrivals=cfg.arrivals,
        seed=cfg.seed, kind="http"))
    driver = _WorkloadDriver(sim, stream, lambda rid, kind: lb.on_request(rid))

    stats = sim.run_until(cfg.duration_us())

    pauses = [p for b in backends for p in b.runtime.pauses]
    return RunResult(
        config=cfg, mode=cfg.gc_mode,
        samples=[(rid, issued, done, server, "http")
                 for rid, issued, done, server in lb.samples],
        issued=driver.issued, pauses=pauses, stats=stats,
        peak_allocated={b.id: b.runtime.peak_allocated_bytes for b in backends},
    )


# -- replicated key-value cluster ---------------------------------------------------


def _run_raft(cfg: ScenarioConfig) -> RunResult:
    sim = Simulation(seed=cfg.seed,
                     network=NetworkModel.from_rtt(cfg.rtt_us, cfg.jitter_us))
    mode = GcMode(cfg.gc_mode)
    trace = RaftTrace()

    node_ids = [f"n{i}" for i in range(cfg.nodes)]
    client_ids = [f"c{i}" for i in range(cfg.clients)]
    nodes: list[RaftNode] = []
    for i, nid in enumerate(node_ids):
        node_mode = mode
        if cfg.gc_nodes == "followers" and i == 0:
            node_mode = GcMode.OFF  # keep the bootstrap leader collection-free
        runtime = _make_runtime(sim, nid, cfg, node_mode)
        nodes.append(RaftNode(
            sim, nid, node_ids, runtime, trace,
            heartbeat_us=cfg.heartbeat_ms * 1_000,
            election_timeout_us=(cfg.election_timeout_min_ms * 1_000,
                                 cfg.election_timeout_max_ms * 1_000),
            service_time_us=cfg.service_time_us,
            bytes_per_request=cfg.bytes_per_request,
            defer_threshold_us=cfg.defer_threshold_us,
            proxy_mode=cfg.proxy_mode == "proxy",
            collection_timeout_factor=cfg.collection_timeout_factor,
            client_ids=client_ids,
            timer_seed=cfg.seed * 1_000 + i,
        ))
        if cfg.background_alloc_bytes_per_s:
            _BackgroundAllocator(sim, nodes[-1].runtime,
                                 cfg.background_alloc_bytes_per_s,
                                 cfg.background_alloc_interval_us)

    bootstrap = nodes[0]
    bootstrap.term = 1
    bootstrap.voted_for = bootstrap.id
    bootstrap._become_leader()

    samples: list[tuple[int, int, int, str, str]] = []
    clients = [RaftClient(sim, cid, bootstrap.id, cfg.client_timeout_us,
                          lambda rid, iss, done, server, kind:
                          samples.append((rid, iss, done, server, kind)))
               for cid in client_ids]

    def dispatch(rid: int, kind: str) -> None:
        key = f"k{rid % 997}"
        op = ("get", key) if kind == "get" else ("set", key, rid)
        clients[rid % len(clients)].submit(rid, op)

    stream = generate_workload(WorkloadConfig(
        rate_rps=cfg.rate_rps, duration_s=cfg.duration_s,
        mix_get=cfg.mix_get, mix_set=cfg.mix_set,
        arrivals=cfg.arrivals, seed=cfg.seed, kind="rw"))
    driver = _WorkloadDriver(sim, stream, dispatch)

    stats = sim.run_until(cfg.duration_us())

    for node in nodes:
        trace.final_logs[node.id] = list(node.log)
    pauses = [p for n in nodes for p in n.runtime.pauses]
    return RunResult(
        config=cfg, mode=cfg.gc_mode,
        samples=samples, issued=driver.issued, pauses=pauses, stats=stats,
        trace=trace, retries=sum(c.retries for c in clients),
        peak_allocated={n.id: n.runtime.peak_allocated_bytes for n in nodes},
    )


def run_compare(cfg: ScenarioConfig, seed: Optional[int] = None,
                duration_s: Optional[int] = None) -> list[RunResult]:
    """Run the identical seed and workload under all three collector modes."""
    return [run_scenario(cfg, mode=m, seed=seed, duration_s=duration_s)
            for m in COMPARE_ORDER]
