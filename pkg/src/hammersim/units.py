"""Time units.

All schedule math inside the simulator runs on integer picoseconds so that
event ordering is bit-exact across platforms.  Config files and CSV outputs
speak nanoseconds; these helpers are the only sanctioned conversion points.
"""

from __future__ import annotations

PS_PER_NS = 1000


def ns(value: float) -> int:
    """Convert nanoseconds to integer picoseconds (round to nearest)."""
    return round(value * PS_PER_NS)


def us(value: float) -> int:
    return round(value * 1000 * PS_PER_NS)


def ms(value: float) -> int:
    return round(value * 1000 * 1000 * PS_PER_NS)


def to_ns(ps: int) -> float:
    """Picoseconds back to (possibly fractional) nanoseconds."""
    return ps / PS_PER_NS
