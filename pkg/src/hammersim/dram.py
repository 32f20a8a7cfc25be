"""Device geometry, timing sets, and refresh parameters.

Everything here is a plain value type plus a few derived quantities
(rows refreshed per REF command, idle-bank bandwidth).  Durations are
integer picoseconds throughout; see `units`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .units import ns, us, ms


@dataclass(frozen=True)
class DeviceGeometry:
    rows_per_bank: int = 65536
    banks: int = 32
    rows_per_dsa: int = 512
    counter_bits: int = 8
    blast_radius: int = 2

    def __post_init__(self) -> None:
        if self.rows_per_bank % self.rows_per_dsa != 0:
            raise ValueError(
                "rows_per_bank must be a multiple of rows_per_dsa "
                f"({self.rows_per_bank} vs {self.rows_per_dsa})"
            )
        if self.blast_radius < 1:
            raise ValueError("blast_radius must be >= 1")
        if self.counter_bits < 1:
            raise ValueError("counter_bits must be >= 1")

    @property
    def counter_cap(self) -> int:
        return (1 << self.counter_bits) - 1


@dataclass(frozen=True)
class TimingSet:
    """Named DRAM timing parameters, picoseconds."""

    label: str
    tRAS: int
    tRP: int
    tRC: int
    tRTP: int
    tWR: int
    tRCD: int

    def __post_init__(self) -> None:
        for name in ("tRAS", "tRP", "tRC", "tRTP", "tWR", "tRCD"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        # The accelerated-precharge sets break tRC >= tRAS + tRP on purpose,
        # but tRC below either component would be nonsense.
        if self.tRC < max(self.tRAS, self.tRP):
            raise ValueError("tRC must be >= max(tRAS, tRP)")


_BUILTIN_TIMINGS = {
    "Default": TimingSet(
        label="Default",
        tRAS=ns(32), tRP=ns(16), tRC=ns(48),
        tRTP=ns(7.5), tWR=ns(30), tRCD=ns(16),
    ),
    "PRAC": TimingSet(
        label="PRAC",
        tRAS=ns(16), tRP=ns(36), tRC=ns(52),
        tRTP=ns(5), tWR=ns(10), tRCD=ns(16),
    ),
    # Counter-subarray timings: short-row subarray, hence the much smaller
    # tRCD/tRAS/tRP/tWR.  tRC here is derived as tRAS + tRP.
    "CSA": TimingSet(
        label="CSA",
        tRAS=ns(16.7), tRP=ns(4.1), tRC=ns(20.8),
        tRTP=ns(7.5), tWR=ns(19.2), tRCD=ns(7.6),
    ),
}


def builtin_timing_set(label: str) -> TimingSet:
    """Return one of the named built-in timing sets (Default, PRAC, CSA)."""
    try:
        return _BUILTIN_TIMINGS[label]
    except KeyError:
        raise KeyError(
            f"unknown timing set {label!r}; expected one of "
            f"{sorted(_BUILTIN_TIMINGS)}"
        ) from None


@dataclass(frozen=True)
class RefreshConfig:
    tREFW: int = ms(32)
    tREFI: int = us(3.9)
    tRFC: int = ns(295)
    mode: str = "AllBankNormal"

    def __post_init__(self) -> None:
        if not self.tREFI < self.tREFW:
            raise ValueError("tREFI must be < tREFW")
        if not self.tRFC < self.tREFI:
            raise ValueError("tRFC must be < tREFI")
        if self.mode not in ("AllBankNormal", "AllBankFine", "SameBankFine"):
            raise ValueError(f"unknown refresh mode {self.mode!r}")

    @property
    def refs_per_window(self) -> int:
        """REF commands per refresh window.

        Refresh cadences come in power-of-two chunks, so this is the
        largest power of two whose REFs fit inside tREFW (8192 at the
        default 32 ms / 3.9 us).  Keeping the count a power of two also
        keeps every bank sweep aligned to the same window boundary.
        """
        n = self.tREFW // self.tREFI
        return 1 << (n.bit_length() - 1)

    @property
    def window_ps(self) -> int:
        """Length of one full refresh pass (refs_per_window * tREFI).

        With the default 32 ms / 3.9 us parameters this is 31.9488 ms; the
        per-window metrics in the engine use this boundary so each window
        holds exactly one refresh sweep of the bank.
        """
        return self.refs_per_window * self.tREFI


def rows_per_refresh(geometry: DeviceGeometry, refresh: RefreshConfig) -> int:
    """Rows covered by a single REF so the bank finishes in one window."""
    return math.ceil(geometry.rows_per_bank / refresh.refs_per_window)


def idle_bandwidth(refresh: RefreshConfig) -> float:
    """Fraction of time a bank can accept ACTs with refresh as the only
    interruption."""
    return 1.0 - refresh.tRFC / refresh.tREFI
