"""Single-bank command-level simulator on an integer-picosecond timeline.

The engine owns the memory-controller half of the alert protocol:

* demand ACTs are admitted no closer than tRC (per the scheme's timing set);
* a REF is scheduled every tREFI on an absolute grid, blocks the bank for
  tRFC, refreshes a sequential group of rows, and runs the scheme hook;
* an alert opens a window in which up to ``abo_act`` more ACTs may issue
  (only while demand is actually waiting — an idle controller proceeds
  straight to mitigation), then the RFM burst runs back-to-back, then the
  next alert is deferred until ``abo_delay`` further ACT opportunities pass.

"Opportunity" is the operative word for both the window and the hold: when
the controller has nothing queued, the opportunities lapse instantly; when
demand is waiting, they are consumed by real activations.  Bandwidth
accounting charges REF and RFM blocks only — admitted ACTs are useful work.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .dram import (DeviceGeometry, RefreshConfig, TimingSet,
                   rows_per_refresh)
from .schemes import MitigationAction, SchemeConfig, SchemeState
from .units import ns

_IDLE = 0
_WINDOW = 1
_HOLD = 2


@dataclass(frozen=True)
class AboConfig:
    """Controller-side alert protocol constants."""

    tABO_ACT: int = ns(180)
    tABO_recovery_per_rfm: int = ns(350)
    abo_act: int = 3
    abo_delay: Optional[int] = None  # None -> follow n_mit

    def __post_init__(self) -> None:
        if self.tABO_ACT <= 0 or self.tABO_recovery_per_rfm <= 0:
            raise ValueError("ABO durations must be positive")
        if self.abo_act < 0:
            raise ValueError("abo_act must be >= 0")
        if self.abo_delay is not None and self.abo_delay < 0:
            raise ValueError("abo_delay must be >= 0 when set")

    def resolved_delay(self, n_mit: int) -> int:
        return self.abo_delay if self.abo_delay is not None else n_mit


@dataclass(frozen=True)
class TraceEvent:
    kind: str  # "act" | "idle" | "end"
    row: int = -1
    time_ps: Optional[int] = None  # None = as soon as possible
    duration_ps: int = 0


@dataclass
class WindowStats:
    index: int
    bandwidth: float = 1.0
    rfm_count: int = 0
    alert_count: int = 0
    blocked_ps: int = 0


@dataclass
class EngineMetrics:
    acts_issued: int = 0
    refs_issued: int = 0
    rfms_issued: int = 0
    alerts_raised: int = 0
    proactive_count: int = 0
    act_blocked_ps: int = 0
    end_time_ps: int = 0
    windows: List[WindowStats] = field(default_factory=list)


class BankEngine:
    """Deterministic closed-loop engine for one bank."""

    def __init__(self, scheme: SchemeConfig, geometry: DeviceGeometry,
                 refresh: Optional[RefreshConfig] = None,
                 abo: Optional[AboConfig] = None, *, bank_id: int = 0,
                 collect_log: bool = True) -> None:
        self.geometry = geometry
        self.refresh = refresh or RefreshConfig(
            tRFC=ns(scheme.tRFC_ns))
        self.abo = abo or AboConfig()
        self.scheme = SchemeState(scheme, geometry)
        self.timing: TimingSet = scheme.timing_set()
        self.bank_id = bank_id
        self.collect_log = collect_log
        self.log: List[Tuple[int, int, str, int, int]] = []

        self._tRC = self.timing.tRC
        self._tRFC = self.refresh.tRFC
        self._tRFM = self.abo.tABO_recovery_per_rfm
        self._delay = self.abo.resolved_delay(scheme.n_mit)
        self._rpr = rows_per_refresh(geometry, self.refresh)

        self._t_free = 0          # bank busy until this instant
        self._ref_k = 0           # index of the next scheduled REF
        self._state = _IDLE
        self._win_deadline = 0
        self._win_acts_left = 0
        self._hold_left = 0

        self.metrics = EngineMetrics()
        self._win_len = self.refresh.window_ps
        self._blocked: dict[int, int] = {}
        self._win_rfms: dict[int, int] = {}
        self._win_alerts: dict[int, int] = {}
        self._observer = None

    @property
    def now(self) -> int:
        """The instant the bank next becomes free."""
        return self._t_free

    def attach_observer(self, observer) -> None:
        """Register a ground-truth disturbance observer.

        `observer.on_activation(row)` fires for every physical row
        activation — demand ACTs, per-row refreshes within REF, and the
        activations mitigation work performs."""
        self._observer = observer
        self.scheme.activation_observer = observer.on_activation

    # -- bookkeeping -------------------------------------------------------

    def _log(self, t: int, kind: str, row: int, counter: int) -> None:
        if self.collect_log:
            self.log.append((t, self.bank_id, kind, row, counter))

    def _charge_block(self, t: int, dur: int) -> None:
        w = t // self._win_len
        self._blocked[w] = self._blocked.get(w, 0) + dur
        self.metrics.act_blocked_ps += dur

    # -- primitive command issue --------------------------------------------

    def _ref_due(self) -> int:
        return self._ref_k * self.refresh.tREFI

    def _issue_ref(self) -> None:
        due = self._ref_due()
        t = max(due, self._t_free)
        start_row = (self._ref_k * self._rpr) % self.geometry.rows_per_bank
        rows = [(start_row + i) % self.geometry.rows_per_bank
                for i in range(self._rpr)]
        self._ref_k += 1
        self._t_free = t + self._tRFC
        self._charge_block(t, self._tRFC)
        self.metrics.refs_issued += 1
        self._log(t, "REF", rows[0], self.scheme.bank.get(rows[0]))
        if self._observer is not None:
            for r in rows:
                self._observer.on_activation(r)
        action = self.scheme.on_refresh(rows,
                                        alert_allowed=(self._state == _IDLE))
        if action is not None and action.kind == "ProactiveRefresh":
            # Runs inside the tRFC block; no extra time.
            self.metrics.proactive_count += 1
            for r in action.rows:
                self._log(t, "PROACT", r, self.scheme.bank.get(r))
            action = (self.scheme.take_pending_alert()
                      if self._state == _IDLE else None)
        if (action is not None and action.kind == "Alert"
                and self._state == _IDLE):
            self._assert_alert(self._t_free, action)

    def _assert_alert(self, t: int, action: MitigationAction) -> None:
        self.metrics.alerts_raised += 1
        w = t // self._win_len
        self._win_alerts[w] = self._win_alerts.get(w, 0) + 1
        row = min(action.rows) if action.rows else -1
        self._log(t, "ALERT", row,
                  self.scheme.bank.get(row) if row >= 0 else 0)
        self._state = _WINDOW
        self._win_deadline = t + self.abo.tABO_ACT
        self._win_acts_left = self.abo.abo_act

    def _run_burst(self, start: int) -> None:
        """Execute the RFM burst for the current alert, REFs interleaved."""
        cur = max(start, self._t_free)
        budget = self.scheme.alert_burst_length()
        issued = 0
        while issued < budget:
            while self._ref_due() <= cur:
                self._issue_ref()
                cur = max(cur, self._t_free)
            t = max(cur, self._t_free)
            applied = self.scheme.on_rfm()
            self._t_free = t + self._tRFM
            self._charge_block(t, self._tRFM)
            self.metrics.rfms_issued += 1
            w = t // self._win_len
            self._win_rfms[w] = self._win_rfms.get(w, 0) + 1
            if applied:
                for row, what in applied:
                    if what != "act":
                        self._log(t, "RFM", row, self.scheme.bank.get(row))
            else:
                self._log(t, "RFM", -1, 0)
            issued += 1
            cur = self._t_free
            if self.scheme.config.adaptive_rfm:
                if not self.scheme.rfm_pending_more():
                    break
            # Fixed-count schemes always issue all n_mit RFMs.
        self._state = _HOLD
        self._hold_left = self._delay

    def _collapse_idle(self, until: Optional[int]) -> None:
        """Let opportunity states lapse across a demand-free gap.

        `until` is the next instant demand exists (None = never).  While the
        gap is open the controller moves straight through window, burst,
        hold, and any deferred alert chain, interleaving scheduled REFs.
        """
        while True:
            if self._state == _WINDOW:
                idle_from = max(self._t_free, 0)
                if until is not None and until <= idle_from:
                    return  # demand is already waiting; window stays open
                self._run_burst(idle_from)
                continue
            if self._state == _HOLD:
                idle_from = self._t_free
                if until is not None and until <= idle_from:
                    return  # demand will consume the hold with real ACTs
                self._hold_left = 0
                self._state = _IDLE
                continue
            # IDLE: surface any alert deferred during the mitigation.
            pending = self.scheme.take_pending_alert()
            if pending is not None:
                self._assert_alert(self._t_free, pending)
                continue
            return

    # -- public API ----------------------------------------------------------

    def issue_act(self, row: int, not_before: int = 0) -> int:
        """Admit one demand ACT; returns its issue time (ps)."""
        while True:
            t = max(not_before, self._t_free)
            if self._ref_due() <= t:
                self._issue_ref()
                continue
            if self._state == _WINDOW:
                avail = self._t_free
                if not_before > avail:
                    # The controller sat idle with the window open.
                    self._collapse_idle(not_before)
                    continue
                if self._win_acts_left > 0 and t <= self._win_deadline:
                    issue = t
                    self._win_acts_left -= 1
                    burst_after = self._win_acts_left == 0
                    self._admit(issue, row)
                    if burst_after:
                        self._run_burst(self._t_free)
                    return issue
                self._run_burst(max(self._t_free, not_before))
                continue
            if self._state == _HOLD:
                if not_before > self._t_free:
                    self._collapse_idle(not_before)
                    continue
                issue = t
                self._admit(issue, row)
                self._hold_left -= 1
                if self._hold_left == 0:
                    self._state = _IDLE
                    pending = self.scheme.take_pending_alert()
                    if pending is not None:
                        self._assert_alert(self._t_free, pending)
                return issue
            # IDLE
            pending = self.scheme.take_pending_alert()
            if pending is not None:
                self._assert_alert(max(self._t_free, 0), pending)
                continue
            issue = t
            action = self._admit(issue, row)
            if action is not None and action.kind == "Alert":
                self._assert_alert(issue, action)
            return issue

    def _admit(self, t: int, row: int) -> Optional[MitigationAction]:
        self.metrics.acts_issued += 1
        self._t_free = t + self._tRC
        if self._observer is not None:
            self._observer.on_activation(row)
        action = self.scheme.on_act(row,
                                    alert_allowed=(self._state == _IDLE))
        self._log(t, "ACT", row, self.scheme.bank.get(row))
        return action

    def advance_to(self, t: int) -> None:
        """Run all scheduled work (REFs, deferred mitigation) up to t."""
        while True:
            self._collapse_idle(None)
            if self._ref_due() < t:
                self._issue_ref()
                continue
            return

    def run_trace(self, events: Iterable[TraceEvent],
                  duration_ps: int) -> EngineMetrics:
        cursor = 0
        for ev in events:
            if ev.kind == "end":
                break
            if ev.kind == "idle":
                cursor = max(cursor, self._t_free) + ev.duration_ps
                continue
            if ev.kind != "act":
                raise ValueError(f"unknown trace event kind {ev.kind!r}")
            if not 0 <= ev.row < self.geometry.rows_per_bank:
                raise ValueError(f"row {ev.row} outside bank")
            not_before = cursor if ev.time_ps is None \
                else max(cursor, ev.time_ps)
            issued = self.issue_act(ev.row, not_before)
            if issued >= duration_ps:
                break
            cursor = issued
        self.advance_to(duration_ps)
        return self.finalize(duration_ps)

    def finalize(self, duration_ps: int) -> EngineMetrics:
        m = self.metrics
        m.end_time_ps = duration_ps
        n_windows = duration_ps // self._win_len
        m.windows = []
        for w in range(n_windows):
            blocked = self._blocked.get(w, 0)
            m.windows.append(WindowStats(
                index=w,
                bandwidth=1.0 - blocked / self._win_len,
                rfm_count=self._win_rfms.get(w, 0),
                alert_count=self._win_alerts.get(w, 0),
                blocked_ps=blocked,
            ))
        return m


def saturation_act_stream(rows: Sequence[int] | int,
                          count: int) -> List[TraceEvent]:
    """ASAP activations round-robin over `rows`, `count` events long."""
    if isinstance(rows, int):
        rows = [rows]
    if not rows:
        raise ValueError("need at least one row")
    return [TraceEvent("act", row=rows[i % len(rows)])
            for i in range(count)]


def log_to_csv_lines(log: Sequence[Tuple[int, int, str, int, int]]
                     ) -> List[str]:
    lines = ["time_ns,bank,event,row,counter_after"]
    for t, bank, kind, row, counter in log:
        if t % 1000 == 0:
            stamp = str(t // 1000)
        else:
            stamp = f"{t / 1000:.3f}"
        lines.append(f"{stamp},{bank},{kind},{row},{counter}")
    return lines


def audit_log(log: Sequence[Tuple[int, int, str, int, int]],
              scheme: SchemeConfig, abo: AboConfig,
              refresh: RefreshConfig) -> List[str]:
    """Independent legality pass over an emitted event log.

    Checks tRC spacing between ACTs, non-overlap with REF/RFM blocking
    intervals, the per-alert ACT budget and window bound, and that every
    alert is followed by at least one RFM before the next alert.
    """
    problems: List[str] = []
    timing = scheme.timing_set()
    tRC = timing.tRC
    tRFC = refresh.tRFC
    tRFM = abo.tABO_recovery_per_rfm

    last_act: Optional[int] = None
    blocks: List[Tuple[int, int, str]] = []
    alert_t: Optional[int] = None
    acts_in_window = 0
    rfms_since_alert = 0

    for t, _bank, kind, row, _counter in log:
        if kind == "ACT":
            if last_act is not None and t - last_act < tRC:
                problems.append(f"ACT at {t} ps violates tRC after {last_act}")
            last_act = t
            for s, e, what in blocks[-4:]:
                if s <= t < e:
                    problems.append(f"ACT at {t} ps inside {what} block")
            if alert_t is not None and rfms_since_alert == 0:
                acts_in_window += 1
                if acts_in_window > abo.abo_act:
                    problems.append(
                        f"more than {abo.abo_act} ACTs in window of alert "
                        f"at {alert_t} ps")
                if t > alert_t + abo.tABO_ACT:
                    problems.append(
                        f"ACT at {t} ps past the window of alert at "
                        f"{alert_t} ps")
        elif kind == "REF":
            blocks.append((t, t + tRFC, "REF"))
        elif kind == "RFM":
            if blocks and blocks[-1][2] == "RFM" and blocks[-1][0] == t:
                pass  # several rows logged for one RFM command
            else:
                blocks.append((t, t + tRFM, "RFM"))
                if alert_t is not None:
                    rfms_since_alert += 1
        elif kind == "ALERT":
            if alert_t is not None and rfms_since_alert == 0:
                problems.append(
                    f"alert at {t} ps follows alert at {alert_t} ps with "
                    "no RFM between")
            alert_t = t
            acts_in_window = 0
            rfms_since_alert = 0
    return problems
