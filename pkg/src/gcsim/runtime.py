"""Mock managed runtime with a cooperative collection-scheduling API.

Each simulated node owns a :class:`ManagedRuntime`: a heap that grows as the
node allocates, a stop-the-world collector whose pause cost scales with the
live set, and a three-call coordination surface:

* ``reg_gc_hand(handler)`` registers an upcall target.  Without a handler the
  runtime collects immediately whenever the occupancy trigger is crossed
  (legacy behaviour).
* The upcall hands the handler a :class:`CollectionTicket` carrying a
  monotonically increasing id, the current occupancy, and an estimated pause.
  Returning ``True`` collects on the spot; returning ``False`` defers the
  collection until ``start_gc``.
* ``start_gc(id)`` is idempotent and safe to call at any time: it starts a
  deferred collection, and silently ignores ids that are unknown, already
  collected, or force-collected.

If allocation exhausts the hard heap limit while a collection is deferred,
the collector runs immediately and the ticket is marked force-completed so a
late ``start_gc`` stays a no-op.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

from .simcore import SimTime, Simulation

KIB = 1024
MIB = 1024 * 1024
GIB = 1024 * 1024 * 1024


class GcMode(str, enum.Enum):
    ON = "on"          # collect immediately at the trigger, no coordination
    OFF = "off"        # never collect; memory is never reclaimed
    BLADE = "blade"    # upcall-coordinated collection

    def __str__(self) -> str:  # so configs/reports print the bare token
        return self.value


class TicketState(enum.Enum):
    OFFERED = "offered"
    DEFERRED = "deferred"
    RUNNING = "running"
    COMPLETED = "completed"
    FORCED_COMPLETED = "forced_completed"


@dataclass
class CollectionTicket:
    """One collection cycle: offered to the handler, then run exactly once."""

    id: int
    allocated_bytes: int
    estimated_pause_us: int
    state: TicketState = TicketState.OFFERED


@dataclass
class CollectorCostModel:
    """Stop-the-world pause cost, linear in the live set.

    ``pause_us(live) = fixed_overhead_us + pause_per_gib_us * live/GiB``,
    strictly increasing in live bytes for any positive per-GiB rate.
    """

    pause_per_gib_us: int = 25_000
    fixed_overhead_us: int = 0

    def pause_us(self, live_bytes: int) -> int:
        return self.fixed_overhead_us + round(self.pause_per_gib_us * live_bytes / GIB)


class PauseEstimator:
    """Predicts the next pause by a least-squares line over past collections.

    With fewer than two observations the configured default is returned; if
    every observation sits at the same heap size the slope is undefined and
    the mean observed pause is used instead.
    """

    def __init__(self, default_pause_us: int = 10_000):
        self.default_pause_us = default_pause_us
        self.history: list[tuple[int, int]] = []  # (live_bytes, observed_pause_us)

    def observe(self, live_bytes: int, pause_us: int) -> None:
        self.history.append((live_bytes, pause_us))

    def estimate_us(self, live_bytes: int) -> int:
        n = len(self.history)
        if n < 2:
            return self.default_pause_us
        xs = [h[0] for h in self.history]
        ys = [h[1] for h in self.history]
        x_mean = sum(xs) / n
        y_mean = sum(ys) / n
        var = sum((x - x_mean) ** 2 for x in xs)
        if var == 0.0:
            return max(0, round(y_mean))
        cov = sum((x - x_mean) * (y - y_mean) for x, y in zip(xs, ys))
        slope = cov / var
        value = y_mean + slope * (live_bytes - x_mean)
        return max(0, round(value))


@dataclass
class HeapModel:
    """Per-node heap state driving trigger and exhaustion behaviour.

    ``trigger_bytes`` is the occupancy at which a collection cycle opens;
    ``low_water_bytes`` is the headroom that must remain between the trigger
    and the hard limit so a deferred collection has room to wait.
    """

    live_bytes: int
    trigger_bytes: int
    hard_limit_bytes: int
    low_water_bytes: int
    allocated_bytes: int = field(default=0)

    def __post_init__(self) -> None:
        if self.allocated_bytes == 0:
            self.allocated_bytes = self.live_bytes
        if not (0 <= self.live_bytes <= self.allocated_bytes <= self.hard_limit_bytes):
            raise ValueError("heap must satisfy 0 <= live <= allocated <= hard limit")
        if self.trigger_bytes + self.low_water_bytes > self.hard_limit_bytes:
            raise ValueError(
                f"trigger ({self.trigger_bytes}) + low water ({self.low_water_bytes}) "
                f"must not exceed the hard limit ({self.hard_limit_bytes})")
        if self.trigger_bytes <= self.live_bytes:
            raise ValueError("trigger must exceed the live set or no garbage ever accrues")


@dataclass
class PauseInterval:
    node: str
    start_us: int
    end_us: int
    ticket_id: int
    forced: bool


UpcallHandler = Callable[[CollectionTicket], bool]
PauseCallback = Callable[[int, int], None]  # (pause_start_us, pause_end_us)


class ManagedRuntime:
    """Allocation, trigger, and collection state for one simulated node.

    Upcall handlers run synchronously inside whatever event performed the
    crossing allocation, so they must not block; deferral is expressed by
    returning ``False``.  The owning node learns about stop-the-world pauses
    through ``on_pause`` and must process no work before ``paused_until``.
    """

    def __init__(self, sim: Simulation, node_id: str, heap: HeapModel,
                 cost: CollectorCostModel, estimator: Optional[PauseEstimator] = None,
                 mode: GcMode = GcMode.ON):
        self.sim = sim
        self.node_id = node_id
        self.heap = heap
        self.cost = cost
        self.estimator = estimator or PauseEstimator()
        self.mode = mode
        self.handler: Optional[UpcallHandler] = None
        self.on_pause: Optional[PauseCallback] = None
        self.tickets: dict[int, CollectionTicket] = {}
        self.active_ticket: Optional[CollectionTicket] = None
        self._next_id = 1
        self.paused_until: int = 0
        self.pauses: list[PauseInterval] = []
        self.forced_collections = 0
        self.peak_allocated_bytes = heap.allocated_bytes

    # -- coordination API ---------------------------------------------------

    def reg_gc_hand(self, handler: Optional[UpcallHandler]) -> None:
        """Set (or replace) the function upcalled at the start of a collection."""
        self.handler = handler

    def start_gc(self, ticket_id: int) -> None:
        """Start a deferred collection; all other calls are silent no-ops."""
        ticket = self.tickets.get(ticket_id)
        if ticket is not None and ticket.state is TicketState.DEFERRED:
            self._collect(ticket)

    # -- allocation and triggers ---------------------------------------------

    def allocate(self, n_bytes: int) -> None:
        """Grow the heap by ``n_bytes``, upcalling or collecting at crossings.

        A trigger crossing opens at most one cycle (one upcall) until that
        cycle's collection completes.  Crossing the hard limit while a cycle
        is deferred forces an immediate collection at this very allocation.
        """
        if n_bytes < 0:
            raise ValueError("allocation size must be non-negative")
        heap = self.heap
        if self.mode is GcMode.OFF:
            heap.allocated_bytes += n_bytes
            if heap.allocated_bytes > self.peak_allocated_bytes:
                self.peak_allocated_bytes = heap.allocated_bytes
            return
        heap.allocated_bytes = min(heap.allocated_bytes + n_bytes, heap.hard_limit_bytes)
        if heap.allocated_bytes > self.peak_allocated_bytes:
            self.peak_allocated_bytes = heap.allocated_bytes
        if self.active_ticket is None and heap.allocated_bytes >= heap.trigger_bytes:
            self._open_cycle()
        if (self.active_ticket is not None
                and self.active_ticket.state is TicketState.DEFERRED
                and heap.allocated_bytes >= heap.hard_limit_bytes):
            self._collect(self.active_ticket, forced=True)

    def _open_cycle(self) -> None:
        ticket = CollectionTicket(
            id=self._next_id,
            allocated_bytes=self.heap.allocated_bytes,
            estimated_pause_us=self.estimator.estimate_us(self.heap.live_bytes),
        )
        self._next_id += 1
        self.tickets[ticket.id] = ticket
        self.active_ticket = ticket
        if self.handler is None:
            self._collect(ticket)
            return
        if self.handler(ticket):
            self._collect(ticket)
        else:
            ticket.state = TicketState.DEFERRED

    # -- collection ----------------------------------------------------------

    def _collect(self, ticket: CollectionTicket, forced: bool = False) -> int:
        """Run the stop-the-world collection now; returns the observed pause."""
        heap = self.heap
        pause = self.cost.pause_us(heap.live_bytes)
        start = self.sim.now
        end = start + pause
        if forced:
            ticket.state = TicketState.FORCED_COMPLETED
            self.forced_collections += 1
        else:
            ticket.state = TicketState.RUNNING
        self.estimator.observe(heap.live_bytes, pause)
        heap.allocated_bytes = heap.live_bytes
        self.paused_until = end
        self.pauses.append(PauseInterval(self.node_id, start, end, ticket.id, forced))
        self.active_ticket = None
        if not forced:
            ticket.state = TicketState.COMPLETED
        if self.on_pause is not None:
            self.on_pause(start, end)
        return pause

    # -- introspection ---------------------------------------------------------

    @property
    def is_paused(self) -> bool:
        return self.sim.now < self.paused_until

    def collection_count(self) -> int:
        return len(self.pauses)
