"""Workload and adversarial trace generation.

Three families: the idle (refresh-only) trace, open-loop round-robin
hammering with a configurable stride, and the closed-loop multi-round
wave attack that evenly hammers a shrinking row pool, dropping every row
the defense has already refreshed.

The wave attack cannot be a static trace: which rows die each round
depends on the defense's queue state, so the driver reacts to the
engine's event log between activations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Set, Tuple

from .counters import victim_set
from .dram import DeviceGeometry
from .engine import BankEngine, TraceEvent

VICTIM_BASED = "VictimBased"
AGGRESSOR_BASED = "AggressorBased"

ROUND_ROBIN_POOLS = (8, 32, 128, 512, 1024, 4096, 8192)
VICTIM_LAYOUT_STRIDE = 5  # leaves one untouched row between victim groups


@dataclass(frozen=True)
class RoundRobinSpec:
    n: int
    stride: int = 1
    base_row: int = 0
    duration_ps: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("pool size must be >= 1")
        if not 1 <= self.stride <= 5:
            raise ValueError("stride must be in 1..5")
        if self.base_row < 0:
            raise ValueError("base_row must be >= 0")

    def rows(self) -> List[int]:
        return [self.base_row + i * self.stride for i in range(self.n)]

    def check_fits(self, geometry: DeviceGeometry) -> None:
        top = self.base_row + (self.n - 1) * self.stride
        if top >= geometry.rows_per_bank:
            raise ValueError(
                f"pool spans rows up to {top}, outside a "
                f"{geometry.rows_per_bank}-row bank")


def gen_idle(duration_ps: int) -> List[TraceEvent]:
    """No demand at all; the engine still refreshes on schedule."""
    if duration_ps < 0:
        raise ValueError("duration must be >= 0")
    return []


def gen_round_robin(spec: RoundRobinSpec,
                    geometry: Optional[DeviceGeometry] = None
                    ) -> Iterator[TraceEvent]:
    """Endless ASAP activations cycling the pool; the engine's duration
    cut-off terminates consumption."""
    if geometry is not None:
        spec.check_fits(geometry)
    rows = spec.rows()
    i = 0
    while True:
        yield TraceEvent("act", row=rows[i])
        i = (i + 1) % len(rows)


def gen_benign(geometry: DeviceGeometry, seed: int, act_gap_ps: int,
               count: int) -> List[TraceEvent]:
    """Uniform-random row stream at a fixed request rate (smoke tests)."""
    if act_gap_ps < 1 or count < 0:
        raise ValueError("act_gap_ps must be >= 1 and count >= 0")
    rng = random.Random(seed)
    events = []
    t = act_gap_ps
    for _ in range(count):
        events.append(TraceEvent(
            "act", row=rng.randrange(geometry.rows_per_bank), time_ps=t))
        t += act_gap_ps
    return events


class DamageObserver:
    """Defense-independent disturbance ledger.

    Every physical activation of a row restores that row (damage back to
    zero) and disturbs its in-subarray neighbors within the blast radius.
    The per-row high-water mark is the ground-truth hammered count the
    analytical bounds are checked against.
    """

    def __init__(self, geometry: DeviceGeometry) -> None:
        self.geometry = geometry
        n = geometry.rows_per_bank
        self.damage = [0] * n
        self.peak = [0] * n
        self._dsa = geometry.rows_per_dsa
        self._br = geometry.blast_radius

    def on_activation(self, row: int) -> None:
        damage = self.damage
        peak = self.peak
        damage[row] = 0
        lo = (row // self._dsa) * self._dsa
        hi = lo + self._dsa
        for d in range(1, self._br + 1):
            for n in (row - d, row + d):
                if lo <= n < hi:
                    v = damage[n] + 1
                    damage[n] = v
                    if v > peak[n]:
                        peak[n] = v

    def max_peak(self) -> int:
        return max(self.peak)

    def argmax_peak(self) -> int:
        return self.peak.index(self.max_peak())


@dataclass(frozen=True)
class FeintingSpec:
    discipline: str
    r1: int
    n_bo: int
    n_mit: int = 1
    base_row: int = 8

    def __post_init__(self) -> None:
        if self.discipline not in (VICTIM_BASED, AGGRESSOR_BASED):
            raise ValueError(f"unknown discipline {self.discipline!r}")
        if self.discipline == VICTIM_BASED and self.r1 < 4:
            raise ValueError("victim-based waves need a pool of >= 4")
        if self.discipline == AGGRESSOR_BASED and self.r1 < 1:
            raise ValueError("aggressor-based waves need a pool of >= 1")
        if self.n_bo < 2:
            raise ValueError("n_bo must be >= 2")
        if self.n_mit not in (1, 2, 4):
            raise ValueError("n_mit must be 1, 2, or 4")

    @property
    def layout_stride(self) -> int:
        return VICTIM_LAYOUT_STRIDE if self.discipline == VICTIM_BASED else 1


@dataclass
class FeintingResult:
    observed_hc: int
    hottest_row: int
    acts_issued: int
    alerts: int
    rounds: int
    setup_acts: int
    pool_sizes: List[int] = field(default_factory=list)


def _victim_groups(spec: FeintingSpec, geometry: DeviceGeometry
                   ) -> List[Tuple[int, List[int]]]:
    """(aggressor, its victims) pairs for the prepared victim pool."""
    groups: List[Tuple[int, List[int]]] = []
    victims_needed = spec.r1
    a = spec.base_row
    while victims_needed > 0:
        if a >= geometry.rows_per_bank:
            raise ValueError("victim pool does not fit in the bank")
        vs = victim_set(a, geometry)
        take = vs[:victims_needed] if victims_needed < len(vs) else vs
        groups.append((a, take))
        victims_needed -= len(take)
        a += VICTIM_LAYOUT_STRIDE
    return groups


def run_feinting(engine: BankEngine, spec: FeintingSpec, *,
                 stop_at_ps: Optional[int] = None) -> FeintingResult:
    """Drive the multi-round wave attack closed-loop against `engine`.

    Setup charges n_bo - 1 activations per prepared aggressor; online
    rounds activate every surviving pool row once, and rows the defense
    refreshed (read back from the event log) leave the pool.  The final
    survivor is squeezed with the extra activations the alert window and
    the post-mitigation hold still admit.
    """
    geometry = engine.geometry
    observer = DamageObserver(geometry)
    engine.attach_observer(observer)
    if stop_at_ps is None:
        stop_at_ps = engine.refresh.window_ps

    log_cursor = len(engine.log)
    mitigated: Set[int] = set()

    def harvest() -> None:
        nonlocal log_cursor
        for entry in engine.log[log_cursor:]:
            if entry[2] in ("RFM", "PROACT") and entry[3] >= 0:
                mitigated.add(entry[3])
        log_cursor = len(engine.log)

    result = FeintingResult(0, -1, 0, 0, 0, 0)

    def act(row: int) -> bool:
        if engine.now >= stop_at_ps:
            return False
        engine.issue_act(row)
        result.acts_issued += 1
        return True

    if spec.discipline == VICTIM_BASED:
        groups = _victim_groups(spec, geometry)
        # Setup: bring every prepared victim to n_bo - 1 without alerting.
        for aggressor, _victims in groups:
            for _ in range(spec.n_bo - 1):
                if not act(aggressor):
                    break
        result.setup_acts = result.acts_issued
        pool: Set[int] = set()
        for _aggressor, victims in groups:
            pool.update(victims)
        while len(pool) > 1 and engine.now < stop_at_ps:
            result.rounds += 1
            result.pool_sizes.append(len(pool))
            for aggressor, victims in groups:
                if any(v in pool for v in victims):
                    if not act(aggressor):
                        break
            harvest()
            pool -= mitigated
        # Tail: the window and hold still let a few activations through.
        tail = engine.abo.abo_act + engine.abo.resolved_delay(
            engine.scheme.config.n_mit)
        survivors = [g for g in groups if any(v in pool for v in g[1])]
        if survivors:
            for _ in range(tail):
                if not act(survivors[0][0]):
                    break
    else:
        pool_rows = [spec.base_row + i for i in range(spec.r1)]
        if pool_rows[-1] >= geometry.rows_per_bank:
            raise ValueError("aggressor pool does not fit in the bank")
        for row in pool_rows:
            for _ in range(spec.n_bo - 1):
                if not act(row):
                    break
        result.setup_acts = result.acts_issued
        pool = set(pool_rows)
        floor = 2 * geometry.blast_radius
        while len(pool) > floor and engine.now < stop_at_ps:
            result.rounds += 1
            result.pool_sizes.append(len(pool))
            for row in pool_rows:
                if row in pool:
                    if not act(row):
                        break
            harvest()
            pool -= mitigated
        tail = engine.abo.abo_act + engine.abo.resolved_delay(
            engine.scheme.config.n_mit)
        survivors = [r for r in pool_rows if r in pool]
        for i in range(tail):
            if not survivors or not act(survivors[i % len(survivors)]):
                break

    harvest()
    result.alerts = engine.metrics.alerts_raised
    result.observed_hc = observer.max_peak()
    result.hottest_row = observer.argmax_peak()
    return result


def trace_to_lines(events: Sequence[TraceEvent], bank: int = 0) -> List[str]:
    """Line format: `<ns|ASAP>,<bank>,ACT,<row>`."""
    out = []
    for ev in events:
        if ev.kind != "act":
            continue
        stamp = "ASAP" if ev.time_ps is None else str(ev.time_ps // 1000)
        out.append(f"{stamp},{bank},ACT,{ev.row}")
    return out


def lines_to_trace(lines: Sequence[str]) -> List[TraceEvent]:
    events = []
    for ln in lines:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        stamp, _bank, kind, row = ln.split(",")
        if kind != "ACT":
            raise ValueError(f"unknown trace line kind {kind!r}")
        t = None if stamp == "ASAP" else int(stamp) * 1000
        events.append(TraceEvent("act", row=int(row), time_ps=t))
    return events
