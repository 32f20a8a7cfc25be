"""The five mitigation schemes as event-driven state machines.

Each scheme owns a per-bank counter store and a fixed-depth priority queue
of the hottest rows.  The engine feeds it activations, refreshes, and RFM
grants; the scheme answers with alert requests and row-refresh actions.

Alert deferral: while the controller is inside the post-mitigation hold
window it calls these hooks with ``alert_allowed=False``.  A threshold
crossing then parks in ``pending_alert`` instead of being dropped, and the
engine collects it once the hold expires — deferral, never suppression.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

from .counters import (NO_COUNT, VICTIM_COUNT, CounterBank, semantics_code,
                       victim_set)
from .dram import DeviceGeometry, TimingSet, builtin_timing_set
from .kernel import TopQueue

SCHEMES = ("PRAC", "PVAC", "Chronus", "QPRAC", "MOAT")

RFM_ROWS_PER_PVAC_BURST = 4
DEFAULT_QUEUE_DEPTH = 20
CHRONUS_RFM_SAFETY_FACTOR = 16


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str
    n_bo: int
    n_mit: int = 1
    proactive_threshold: Optional[int] = None
    proactive_period: Optional[int] = None
    timing: str = "Default"
    tRFC_ns: float = 295.0
    counter_semantics: str = "AggressorCount"
    queue_depth: int = DEFAULT_QUEUE_DEPTH

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.n_bo < 1:
            raise ValueError("n_bo must be >= 1")
        if self.n_mit not in (1, 2, 4):
            raise ValueError("n_mit must be 1, 2, or 4")
        if self.queue_depth < 1:
            raise ValueError("queue_depth must be >= 1")
        if self.proactive_period is not None and self.proactive_period < 1:
            raise ValueError("proactive_period must be >= 1 when set")
        if self.proactive_threshold is not None and self.proactive_threshold < 1:
            raise ValueError("proactive_threshold must be >= 1 when set")
        if self.tRFC_ns <= 0:
            raise ValueError("tRFC_ns must be positive")
        if self.scheme == "PVAC":
            if self.counter_semantics != "VictimCount":
                raise ValueError("PVAC requires VictimCount")
            if self.timing != "Default":
                raise ValueError("PVAC runs on Default timing")
        elif self.scheme in ("PRAC", "QPRAC", "MOAT"):
            if self.counter_semantics != "AggressorCount":
                raise ValueError(f"{self.scheme} requires AggressorCount")
            if self.timing != "PRAC":
                raise ValueError(f"{self.scheme} runs on PRAC timing")
        else:  # Chronus
            if self.counter_semantics != "AggressorCount":
                raise ValueError("Chronus requires AggressorCount")
            if self.timing != "Default":
                raise ValueError("Chronus runs on Default timing")
        if self.scheme == "MOAT":
            if self.n_mit != 1:
                raise ValueError("MOAT performs a single mitigation per alert")
            if self.tRFC_ns != 410.0:
                raise ValueError("MOAT uses a 410 ns refresh slot")

    @property
    def adaptive_rfm(self) -> bool:
        return self.scheme == "Chronus"

    def timing_set(self) -> TimingSet:
        return builtin_timing_set(self.timing)


def preset(scheme: str, n_bo: int, n_mit: int = 1, *,
           queue_depth: int = DEFAULT_QUEUE_DEPTH) -> SchemeConfig:
    """Named stock configuration for each scheme at a given threshold."""
    common = dict(n_bo=n_bo, queue_depth=queue_depth)
    if scheme == "PRAC":
        return SchemeConfig(scheme="PRAC", n_mit=n_mit, timing="PRAC",
                            counter_semantics="AggressorCount", **common)
    if scheme == "QPRAC":
        return SchemeConfig(scheme="QPRAC", n_mit=n_mit, timing="PRAC",
                            counter_semantics="AggressorCount",
                            proactive_threshold=max(1, n_bo // 2),
                            proactive_period=1, **common)
    if scheme == "MOAT":
        return SchemeConfig(scheme="MOAT", n_mit=1, timing="PRAC",
                            counter_semantics="AggressorCount",
                            proactive_threshold=max(1, n_bo // 2),
                            proactive_period=4, tRFC_ns=410.0, **common)
    if scheme == "Chronus":
        return SchemeConfig(scheme="Chronus", n_mit=n_mit, timing="Default",
                            counter_semantics="AggressorCount",
                            proactive_period=2, **common)
    if scheme == "PVAC":
        return SchemeConfig(scheme="PVAC", n_mit=n_mit, timing="Default",
                            counter_semantics="VictimCount",
                            proactive_threshold=max(1, n_bo // 2),
                            proactive_period=1, **common)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass
class MitigationAction:
    kind: str  # Alert | RfmRefresh | ProactiveRefresh
    rows: List[int] = field(default_factory=list)


class SchemeState:
    """One bank's worth of mitigation state for a single scheme."""

    def __init__(self, config: SchemeConfig, geometry: DeviceGeometry,
                 bank: Optional[CounterBank] = None) -> None:
        if config.n_bo > geometry.counter_cap:
            raise ValueError(
                f"n_bo={config.n_bo} exceeds the {geometry.counter_bits}-bit "
                f"counter range (cap {geometry.counter_cap}); widen "
                "counter_bits for this experiment")
        self.config = config
        self.geometry = geometry
        # Called with each physically activated row during mitigation work
        # (victim refreshes, RFM-induced activations); the engine wires a
        # damage observer here for ground-truth disturbance accounting.
        self.activation_observer = None
        self.bank = bank or CounterBank(geometry)
        self.queue = TopQueue(config.queue_depth)
        self.pending_alert = False
        self._sem = semantics_code(config.counter_semantics)
        self._refs_seen = 0
        self.stat_alerts = 0
        self.stat_rfm_rows = 0
        self.stat_proactive = 0

    # -- internal plumbing ------------------------------------------------

    def _absorb(self, changed: Sequence[Tuple[int, int]]) -> List[int]:
        """Feed counter changes to the queue; return rows now >= n_bo."""
        hot = []
        for row, count in changed:
            if count == 0:
                self.queue.remove(row)
            else:
                self.queue.update(row, count)
            if count >= self.config.n_bo:
                hot.append(row)
        return hot

    def _raise_or_park(self, rows: List[int],
                       alert_allowed: bool) -> Optional[MitigationAction]:
        if alert_allowed:
            self.stat_alerts += 1
            return MitigationAction("Alert", rows)
        self.pending_alert = True
        return None

    def take_pending_alert(self) -> Optional[MitigationAction]:
        """Fire a deferred alert — if its condition still holds.

        The alert line is level-sensitive: a crossing parked during the
        hold-off only matters if some counter still sits at or above n_bo
        once the hold expires.  Rows mitigated in the meantime de-assert.
        """
        if not self.pending_alert:
            return None
        self.pending_alert = False
        hot = [row for row, count in self.queue.items()
               if count >= self.config.n_bo]
        if not hot and self.config.adaptive_rfm:
            row = self.bank.core.argmax()
            if self.bank.get(row) >= self.config.n_bo:
                hot = [row]
        if not hot:
            return None
        self.stat_alerts += 1
        return MitigationAction("Alert", hot)

    def _count_as(self, row: int, sem: int) -> List[Tuple[int, int]]:
        return self.bank.apply_activation(row, sem)

    def _mitigate_one_aggressor(self, row: int) -> List[Tuple[int, str]]:
        """Reset `row`, then activate its victims (counted activations)."""
        applied: List[Tuple[int, str]] = [(row, "reset")]
        self.bank.core.reset(row)
        self.queue.remove(row)
        hot: List[int] = []
        victims = set(victim_set(row, self.geometry))
        # Nearest victims first on each side, the order the refresh burst
        # walks the blast radius in.
        for d in range(1, self.geometry.blast_radius + 1):
            for victim in (row - d, row + d):
                if victim in victims:
                    if self.activation_observer is not None:
                        self.activation_observer(victim)
                    hot += self._absorb(self._count_as(victim, self._sem))
                    applied.append((victim, "act"))
        if hot:
            self._raise_or_park(sorted(set(hot)), alert_allowed=False)
        return applied

    def _mitigate_one_victim(self, row: int) -> List[Tuple[int, str]]:
        """Refresh `row` as a victim-counted activation (reset + bumps)."""
        self.queue.remove(row)
        if self.activation_observer is not None:
            self.activation_observer(row)
        hot = self._absorb(self._count_as(row, VICTIM_COUNT))
        if hot:
            self._raise_or_park(hot, alert_allowed=False)
        return [(row, "refresh")]

    def _one_mitigation_unit(self, require_hot: bool = False
                             ) -> List[Tuple[int, str]]:
        """One RFM's worth of work: 4 victims (PVAC) or 1 aggressor.

        With require_hot (adaptive alert servicing) the target must hold a
        count >= n_bo; if the queue's top does not, the bank is scanned so
        a displaced hot row cannot be missed.
        """
        applied: List[Tuple[int, str]] = []
        if self.config.scheme == "PVAC":
            for _ in range(RFM_ROWS_PER_PVAC_BURST):
                top = self.queue.pop_max()
                if top is None:
                    break
                applied += self._mitigate_one_victim(top[0])
        else:
            target: Optional[int] = None
            top = self.queue.pop_max()
            if top is not None and not (require_hot
                                        and top[1] < self.config.n_bo):
                target = top[0]
            else:
                if top is not None:
                    self.queue.update(top[0], top[1])
                if require_hot:
                    row = self.bank.core.argmax()
                    if self.bank.get(row) >= self.config.n_bo:
                        self.queue.remove(row)
                        target = row
            if target is not None:
                applied += self._mitigate_one_aggressor(target)
        self.stat_rfm_rows += len([a for a in applied if a[1] != "reset"])
        return applied

    # -- engine-facing hooks ----------------------------------------------

    def on_act(self, row: int, *, alert_allowed: bool = True
               ) -> Optional[MitigationAction]:
        """Count one demand activation; maybe ask for an alert."""
        hot = self._absorb(self._count_as(row, self._sem))
        if hot:
            return self._raise_or_park(sorted(hot), alert_allowed)
        return None

    def on_refresh(self, rows: Sequence[int], *, alert_allowed: bool = True
                   ) -> Optional[MitigationAction]:
        """Count a REF's row group, then run the proactive hook if due."""
        self._refs_seen += 1
        sem = NO_COUNT if self.config.scheme == "Chronus" else self._sem
        hot: List[int] = []
        for row in rows:
            hot += self._absorb(self._count_as(row, sem))
        proactive = self._proactive_if_due()
        if hot:
            alert = self._raise_or_park(sorted(set(hot)),
                                        alert_allowed and proactive is None)
            if proactive is None:
                return alert
        return proactive

    def _proactive_if_due(self) -> Optional[MitigationAction]:
        period = self.config.proactive_period
        if period is None or self._refs_seen % period != 0:
            return None
        threshold = self.config.proactive_threshold
        if threshold is not None and self.queue.peek_max_count() < threshold:
            return None
        if len(self.queue) == 0:
            return None
        applied = self._one_mitigation_unit()
        if not applied:
            return None
        self.stat_proactive += 1
        return MitigationAction("ProactiveRefresh",
                                [r for r, what in applied if what != "act"])

    def on_rfm(self) -> List[Tuple[int, str]]:
        """Service one RFM command; returns the applied per-row updates."""
        return self._one_mitigation_unit(require_hot=self.config.adaptive_rfm)

    def rfm_pending_more(self) -> bool:
        """Adaptive schemes keep issuing RFMs while a counter is still hot."""
        if not self.config.adaptive_rfm:
            return False
        return self.bank.core.max_count() >= self.config.n_bo

    def alert_burst_length(self) -> int:
        """RFMs the controller should issue for one alert."""
        if self.config.adaptive_rfm:
            # Variable; the engine loops on rfm_pending_more with this cap.
            return CHRONUS_RFM_SAFETY_FACTOR * self.config.queue_depth
        return self.config.n_mit


def with_queue_depth(config: SchemeConfig, depth: int) -> SchemeConfig:
    return replace(config, queue_depth=depth)
