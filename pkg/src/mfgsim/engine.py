"""Deterministic discrete-event kernel.

Integer-microsecond clock, a future-event list ordered by (time, priority,
insertion sequence), named counter-based random streams derived from the run
seed, capacity resources with FIFO queues, and exact integer time-weighted
statistics. Two engines built from the same seed replay identically.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ActionPanic, EngineFinished, ScheduleInPast

_MASK = (1 << 64) - 1


class Stream:
    """splitmix64 sequence keyed by (seed, stream name) via SHA-256."""

    def __init__(self, seed: int, name: str):
        key = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
        self._state = int.from_bytes(key[:8], "big")

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def random(self) -> float:
        return (self.next_u64() >> 11) / float(1 << 53)

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        return self.next_u64() % n

    def exponential_us(self, mean_us: int) -> int:
        u = self.random()
        return max(1, round(-mean_us * math.log1p(-u)))


class _TimeWeighted:
    """Exact integral of an integer level over time."""

    def __init__(self, start_us: int = 0, value: int = 0):
        self.value = value
        self.last_us = start_us
        self.integral = 0  # level * microseconds

    def set(self, now_us: int, value: int) -> None:
        self.integral += self.value * (now_us - self.last_us)
        self.last_us = now_us
        self.value = value

    def finalize(self, horizon_us: int) -> int:
        self.set(horizon_us, self.value)
        return self.integral


class Resource:
    """Capacity-limited resource with a FIFO wait queue. Grants happen
    synchronously inside the event that freed the capacity."""

    def __init__(self, engine: "Engine", name: str, capacity: int):
        if capacity < 1:
            raise ValueError("resource capacity must be >= 1")
        self.engine = engine
        self.name = name
        self.capacity = capacity
        self.holders: list[str] = []
        self.queue: list[tuple[str, object]] = []
        self.acquisitions = 0
        self.releases = 0
        self._busy = _TimeWeighted(engine.now)
        self._qlen = _TimeWeighted(engine.now)

    def acquire(self, who: str, on_grant) -> None:
        if len(self.holders) < self.capacity:
            self._grant(who, on_grant)
        else:
            self.queue.append((who, on_grant))
            self._qlen.set(self.engine.now, len(self.queue))

    def _grant(self, who: str, on_grant) -> None:
        self.holders.append(who)
        self.acquisitions += 1
        self._busy.set(self.engine.now, len(self.holders))
        on_grant()

    def release(self, who: str) -> None:
        self.holders.remove(who)
        self.releases += 1
        self._busy.set(self.engine.now, len(self.holders))
        if self.queue:
            nxt_who, nxt_grant = self.queue.pop(0)
            self._qlen.set(self.engine.now, len(self.queue))
            self._grant(nxt_who, nxt_grant)


@dataclass
class ResourceStats:
    name: str
    capacity: int
    busy_time_us: int
    queue_time_us: int
    acquisitions: int
    releases: int
    holders_at_end: int
    waiting_at_end: int
    utilization: Fraction
    mean_queue_length: Fraction


@dataclass
class RunStats:
    horizon_us: int
    event_count: int
    resources: dict[str, ResourceStats] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)
    series: dict[str, list[tuple[int, int]]] = field(default_factory=dict)


class Engine:
    def __init__(self, seed: int):
        self.seed = seed
        self.now = 0
        self._fel: list[tuple[int, int, int, object]] = []
        self._seq = 0
        self._streams: dict[str, Stream] = {}
        self._resources: dict[str, Resource] = {}
        self.trace: list[dict] = []
        self.counters: dict[str, int] = {}
        self.series: dict[str, list[tuple[int, int]]] = {}
        self.event_count = 0
        self.finished = False

    def stream(self, name: str) -> Stream:
        if name not in self._streams:
            self._streams[name] = Stream(self.seed, name)
        return self._streams[name]

    def resource(self, name: str, capacity: int) -> Resource:
        if name in self._resources:
            return self._resources[name]
        res = Resource(self, name, capacity)
        self._resources[name] = res
        return res

    def schedule(self, at_us: int, priority: int, action, tag: str = "") -> int:
        if at_us < self.now:
            raise ScheduleInPast(
                f"cannot schedule at {at_us} us; clock is at {self.now} us"
            )
        self._seq += 1
        heapq.heappush(self._fel, (at_us, priority, self._seq, (action, tag)))
        return self._seq

    def schedule_in(self, delay_us: int, priority: int, action, tag: str = "") -> int:
        return self.schedule(self.now + delay_us, priority, action, tag)

    def trace_event(self, ev: str, who: str = "", res: str = "") -> None:
        self.trace.append({"t_us": self.now, "ev": ev, "who": who, "res": res})

    def count(self, name: str, delta: int = 1) -> int:
        self.counters[name] = self.counters.get(name, 0) + delta
        return self.counters[name]

    def record(self, series: str, value: int) -> None:
        self.series.setdefault(series, []).append((self.now, value))

    def run_until(self, horizon_us: int) -> RunStats:
        """Pop and execute events in (time, priority, seq) order until the
        list drains or the next event lies beyond the horizon. Statistics
        are finalized at the horizon."""
        if self.finished:
            raise EngineFinished("engine already ran; build a fresh one per run")
        while self._fel and self._fel[0][0] <= horizon_us:
            at_us, _prio, _seq, (action, tag) = heapq.heappop(self._fel)
            self.now = at_us
            self.event_count += 1
            try:
                action()
            except Exception as exc:
                raise ActionPanic(
                    f"scheduled action {tag or action!r} raised at t={self.now} us: {exc}",
                    clock_us=self.now, tag=tag,
                ) from exc
        self.now = horizon_us
        self.finished = True
        stats = RunStats(horizon_us, self.event_count,
                         counters=dict(self.counters),
                         series={k: list(v) for k, v in self.series.items()})
        for name, res in self._resources.items():
            busy = res._busy.finalize(horizon_us)
            queued = res._qlen.finalize(horizon_us)
            denom = res.capacity * horizon_us
            stats.resources[name] = ResourceStats(
                name=name,
                capacity=res.capacity,
                busy_time_us=busy,
                queue_time_us=queued,
                acquisitions=res.acquisitions,
                releases=res.releases,
                holders_at_end=len(res.holders),
                waiting_at_end=len(res.queue),
                utilization=Fraction(busy, denom) if denom else Fraction(0),
                mean_queue_length=Fraction(queued, horizon_us) if horizon_us else Fraction(0),
            )
        return stats

    def idle_resources_with_waiters(self) -> list[Resource]:
        return [r for r in self._resources.values() if r.queue]


def new_engine(seed: int) -> Engine:
    return Engine(seed)
