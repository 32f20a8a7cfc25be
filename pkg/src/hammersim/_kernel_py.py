"""Pure-Python build of the hot kernels.

Same classes and behavior as the compiled build in `_kernel.pyx`; the
selector in `kernel` picks whichever is importable.  Kept free of any
package-internal imports so it can be exercised standalone in tests.
"""

from __future__ import annotations

from array import array
from typing import List, Optional, Tuple

KERNEL_BUILD = "python"

AGGRESSOR = 0
VICTIM = 1
NONE = 2


class CounterCore:
    """Saturating per-row activation counters for one bank.

    Rows are grouped into subarrays of `dsa_rows`; victim-side updates
    never cross a subarray edge.
    """

    __slots__ = ("n_rows", "dsa_rows", "br", "cap", "_c")

    def __init__(self, n_rows: int, dsa_rows: int, br: int, cap: int) -> None:
        if n_rows <= 0 or dsa_rows <= 0 or n_rows % dsa_rows != 0:
            raise ValueError("n_rows must be a positive multiple of dsa_rows")
        if br < 1 or cap < 1:
            raise ValueError("br and cap must be >= 1")
        self.n_rows = n_rows
        self.dsa_rows = dsa_rows
        self.br = br
        self.cap = cap
        self._c = array("L", [0]) * n_rows

    def act(self, row: int, sem: int) -> List[Tuple[int, int]]:
        """Apply one activation of `row`; return rows whose count changed."""
        c = self._c
        changed: List[Tuple[int, int]] = []
        if sem == NONE:
            return changed
        if sem == AGGRESSOR:
            v = c[row]
            if v < self.cap:
                c[row] = v + 1
                changed.append((row, v + 1))
            return changed
        # VICTIM: reset self, bump in-subarray neighbors.
        if c[row] != 0:
            c[row] = 0
            changed.append((row, 0))
        lo = (row // self.dsa_rows) * self.dsa_rows
        hi = lo + self.dsa_rows
        for d in range(1, self.br + 1):
            for n in (row - d, row + d):
                if lo <= n < hi:
                    v = c[n]
                    if v < self.cap:
                        c[n] = v + 1
                        changed.append((n, v + 1))
        changed.sort()
        return changed

    def get(self, row: int) -> int:
        return self._c[row]

    def reset(self, row: int) -> int:
        old = self._c[row]
        self._c[row] = 0
        return old

    def fill(self, value: int) -> None:
        if not 0 <= value <= self.cap:
            raise ValueError("fill value outside [0, cap]")
        for i in range(self.n_rows):
            self._c[i] = value

    def load(self, values) -> None:
        if len(values) != self.n_rows:
            raise ValueError("length mismatch")
        for i, v in enumerate(values):
            if not 0 <= v <= self.cap:
                raise ValueError("value outside [0, cap]")
            self._c[i] = v

    def snapshot(self) -> List[int]:
        return list(self._c)

    def max_count(self) -> int:
        return max(self._c)

    def argmax(self) -> int:
        """Lowest row index holding the maximum count."""
        c = self._c
        best = 0
        for i in range(1, self.n_rows):
            if c[i] > c[best]:
                best = i
        return best

    def count_at_least(self, threshold: int) -> int:
        return sum(1 for v in self._c if v >= threshold)


class TopQueue:
    """Fixed-depth queue of the highest-count rows seen so far.

    Insert-or-update: a row already present just has its count rewritten.
    A new row lands in a free slot, or, when full, displaces the current
    minimum only if its count is strictly larger; among equal minima the
    higher-numbered row is displaced first (the lower row is retained).
    `pop_max` yields count-descending, row-ascending.
    """

    __slots__ = ("depth", "_rows", "_counts")

    def __init__(self, depth: int) -> None:
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.depth = depth
        self._rows: List[int] = []
        self._counts: List[int] = []

    def __len__(self) -> int:
        return len(self._rows)

    def update(self, row: int, count: int) -> int:
        """Returns the evicted row, -1 if none, -2 if rejected."""
        rows = self._rows
        counts = self._counts
        for i, r in enumerate(rows):
            if r == row:
                counts[i] = count
                return -1
        if len(rows) < self.depth:
            rows.append(row)
            counts.append(count)
            return -1
        mi = 0
        for i in range(1, len(rows)):
            if counts[i] < counts[mi] or (counts[i] == counts[mi]
                                          and rows[i] > rows[mi]):
                mi = i
        if count <= counts[mi]:
            return -2
        evicted = rows[mi]
        rows[mi] = row
        counts[mi] = count
        return evicted

    def remove(self, row: int) -> bool:
        for i, r in enumerate(self._rows):
            if r == row:
                self._rows.pop(i)
                self._counts.pop(i)
                return True
        return False

    def pop_max(self) -> Optional[Tuple[int, int]]:
        if not self._rows:
            return None
        rows = self._rows
        counts = self._counts
        mi = 0
        for i in range(1, len(rows)):
            if counts[i] > counts[mi] or (counts[i] == counts[mi]
                                          and rows[i] < rows[mi]):
                mi = i
        return rows.pop(mi), counts.pop(mi)

    def peek_max_count(self) -> int:
        return max(self._counts) if self._counts else -1

    def min_count(self) -> int:
        return min(self._counts) if self._counts else -1

    def items(self) -> List[Tuple[int, int]]:
        pairs = sorted(zip(self._rows, self._counts),
                       key=lambda rc: (-rc[1], rc[0]))
        return pairs

    def clear(self) -> None:
        self._rows.clear()
        self._counts.clear()
