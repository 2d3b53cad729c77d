"""Latency and CPU measurement.

Latency is decomposed without cross-host clock math: RTT is measured on the
client's monotonic clock, server processing on the server's clock, and the
two are related through the known injected network delay. CPU utilization is
read from OS process accounting (/proc) as percent of one core, so a two-core
saturating process reads up to 200.
"""

from __future__ import annotations

import math
import os
import threading
import time
from dataclasses import dataclass

SC_CLK_TCK = os.sysconf("SC_CLK_TCK")

DEFAULT_CPU_INTERVAL_S = 1.0


class MetricsError(Exception):
    pass


class ClockViolation(MetricsError):
    """received < sent on what should be one monotonic clock."""


class EmptyInput(MetricsError):
    """Summaries need at least one sample."""


class NoSuchProcess(MetricsError):
    pass


@dataclass(frozen=True)
class LatencySample:
    """One round trip. Timestamps are client-side monotonic nanoseconds;
    processing_ns was measured on the server's clock."""

    sent_at_ns: int
    received_at_ns: int
    processing_ns: int = 0
    injected_ns: int = 0

    def __post_init__(self) -> None:
        if self.received_at_ns < self.sent_at_ns:
            raise ClockViolation(
                f"received {self.received_at_ns} earlier than sent {self.sent_at_ns}"
            )

    @property
    def rtt_ns(self) -> int:
        return self.received_at_ns - self.sent_at_ns

    @property
    def overhead_ns(self) -> int:
        """Framework overhead: what the round trip cost beyond the injected delay."""
        return self.rtt_ns - self.injected_ns


@dataclass(frozen=True)
class CpuSample:
    timestamp: float
    pid: int
    percent: float  # 100 = one full core

    def __post_init__(self) -> None:
        if self.percent < 0:
            raise MetricsError(f"negative utilization {self.percent}")


@dataclass(frozen=True)
class Summary:
    count: int
    mean: float
    p50: float
    p95: float
    max: float

    def to_wire(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "p50": self.p50,
            "p95": self.p95,
            "max": self.max,
        }


def percentile(sorted_values: list, q: float) -> float:
    """Nearest-rank percentile over an already-sorted list."""
    if not sorted_values:
        raise EmptyInput("no samples")
    rank = math.ceil(q / 100.0 * len(sorted_values))
    return float(sorted_values[max(rank, 1) - 1])


def summarize(values: "list[float] | list[int]") -> Summary:
    if not values:
        raise EmptyInput("no samples")
    ordered = sorted(float(v) for v in values)
    return Summary(
        count=len(ordered),
        mean=sum(ordered) / len(ordered),
        p50=percentile(ordered, 50),
        p95=percentile(ordered, 95),
        max=ordered[-1],
    )


class LatencyRecorder:
    """Append-only, thread-safe sink of latency samples."""

    def __init__(self) -> None:
        self._samples: list[LatencySample] = []
        self._lock = threading.Lock()

    def record_rtt(
        self,
        sent_at_ns: int,
        received_at_ns: int,
        processing_ns: int = 0,
        injected_ns: int = 0,
    ) -> LatencySample:
        sample = LatencySample(sent_at_ns, received_at_ns, processing_ns, injected_ns)
        with self._lock:
            self._samples.append(sample)
        return sample

    def samples(self) -> list[LatencySample]:
        with self._lock:
            return list(self._samples)

    def __len__(self) -> int:
        with self._lock:
            return len(self._samples)

    def rtt_summary_ms(self) -> Summary:
        return summarize([s.rtt_ns / 1e6 for s in self.samples()])

    def processing_summary_ms(self) -> Summary:
        return summarize([s.processing_ns / 1e6 for s in self.samples()])

    def overhead_summary_ms(self) -> Summary:
        return summarize([s.overhead_ns / 1e6 for s in self.samples()])


def core_count() -> int:
    return os.cpu_count() or 1


def _stat_cpu_ticks(stat: str) -> int:
    """utime+stime clock ticks out of a /proc/<pid>/stat line."""
    # comm may contain spaces and parens; fields resume after the last ')'
    _, _, rest = stat.rpartition(")")
    fields = rest.split()
    return int(fields[11]) + int(fields[12])


def _cpu_seconds(pid: int) -> float:
    """Cumulative user+system CPU seconds of a process from /proc/<pid>/stat."""
    try:
        with open(f"/proc/{pid}/stat", "r", encoding="ascii") as fh:
            stat = fh.read()
    except (FileNotFoundError, ProcessLookupError) as exc:
        raise NoSuchProcess(f"pid {pid}") from exc
    return _stat_cpu_ticks(stat) / SC_CLK_TCK


def cpu_sample(pid: int, interval_s: float = DEFAULT_CPU_INTERVAL_S) -> CpuSample:
    """Blocking one-shot measurement over interval_s."""
    before = _cpu_seconds(pid)
    t0 = time.monotonic()
    time.sleep(interval_s)
    after = _cpu_seconds(pid)
    elapsed = time.monotonic() - t0
    percent = max(0.0, (after - before) / elapsed * 100.0)
    percent = min(percent, 100.0 * core_count())
    return CpuSample(timestamp=time.time(), pid=pid, percent=percent)


class CpuWatcher:
    """Samples a process at a fixed interval on a background thread."""

    def __init__(self, pid: int, interval_s: float = DEFAULT_CPU_INTERVAL_S) -> None:
        self.pid = pid
        self.interval_s = interval_s
        self._samples: list[CpuSample] = []
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._error: Exception | None = None

    def start(self) -> "CpuWatcher":
        self._thread = threading.Thread(target=self._run, name=f"cpuwatch-{self.pid}", daemon=True)
        self._thread.start()
        return self

    def _run(self) -> None:
        try:
            last_cpu = _cpu_seconds(self.pid)
            last_t = time.monotonic()
            while not self._stop.wait(self.interval_s):
                cpu = _cpu_seconds(self.pid)
                now = time.monotonic()
                percent = max(0.0, (cpu - last_cpu) / (now - last_t) * 100.0)
                percent = min(percent, 100.0 * core_count())
                last_cpu, last_t = cpu, now
                with self._lock:
                    self._samples.append(CpuSample(time.time(), self.pid, percent))
        except NoSuchProcess as exc:
            self._error = exc

    def stop(self) -> list[CpuSample]:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        return self.samples()

    def samples(self) -> list[CpuSample]:
        with self._lock:
            return list(self._samples)

    def summary(self) -> Summary:
        return summarize([s.percent for s in self.samples()])
