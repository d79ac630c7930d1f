"""Erasure-qubit placement strategies for a hybrid-erasure architecture.

An architecture is ``(d, f_e, P)``: code distance, erasure-fraction budget
and the subset ``P`` of data qubits realized as dual-rail erasure qubits.
Ancillas are always standard qubits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from erasim.lattice import Coord

_LINE_KINDS = (
    "rows",
    "cols",
    "diagonals",
    "cross",
    "alternating_lines",
    "consecutive_lines",
)


@dataclass(frozen=True)
class ArchitectureSpec:
    """A concrete hybrid-erasure architecture ``(d, f_e, P)``."""

    d: int
    f_e: float
    placement: frozenset[Coord]
    strategy_tag: str = "custom"

    def __post_init__(self):
        for r, c in self.placement:
            if not (0 <= r < self.d and 0 <= c < self.d):
                raise ValueError(f"erasure site ({r},{c}) outside grid")

    @property
    def n_erasure(self) -> int:
        return len(self.placement)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "f_e": self.f_e,
            "strategy": self.strategy_tag,
            "erasures": sorted([r, c] for r, c in self.placement),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ArchitectureSpec":
        return cls(
            d=int(obj["d"]),
            f_e=float(obj["f_e"]),
            placement=frozenset((int(r), int(c)) for r, c in obj["erasures"]),
            strategy_tag=str(obj.get("strategy", "custom")),
        )


@dataclass(frozen=True)
class LinePattern:
    """Structured line configuration of erasure qubits."""

    kind: str
    count: int

    def __post_init__(self):
        if self.kind not in _LINE_KINDS:
            raise ValueError(f"unknown pattern kind {self.kind!r}")
        if self.count < 0:
            raise ValueError("count must be nonnegative")


def erasure_budget(d: int, f_e: float) -> int:
    """Number of erasure qubits allocated: ``floor(f_e * d^2)``."""
    if not 0.0 <= f_e <= 1.0:
        raise ValueError("f_e must lie in [0, 1]")
    # Guard against floating point representation of exact fractions,
    # e.g. 0.57 * 49 = 27.93 must floor to 27, but 1.0 * 25 must give 25.
    return math.floor(f_e * d * d + 1e-9)


def max_full_lines(d: int, budget: int) -> int:
    """Largest ``k`` with ``2kd - k^2 <= budget``.

    ``k`` full rows plus ``k`` full columns overlap in ``k^2`` sites and
    therefore cost ``2kd - k^2`` qubits.
    """
    if not 0 <= budget <= d * d:
        raise ValueError("budget must lie in [0, d^2]")
    k = 0
    while k + 1 <= d and 2 * (k + 1) * d - (k + 1) ** 2 <= budget:
        k += 1
    return k


def _center_out_indices(d: int, k: int) -> list[int]:
    """``k`` line indices chosen consecutively outward from the center row.

    Ties between the two sides are resolved toward the lower index.
    """
    center = (d - 1) // 2
    order = [center]
    step = 1
    while len(order) < d:
        if center - step >= 0:
            order.append(center - step)
        if center + step < d:
            order.append(center + step)
        step += 1
    return sorted(order[:k])


def optimized_placement(d: int, f_e: float) -> ArchitectureSpec:
    """Placement heuristic: ``k`` full center rows+columns, greedy remainder.

    ``k`` is the largest number of full rows *and* columns fitting in the
    budget; remaining qubits are placed on unoccupied sites by ascending
    Manhattan distance to the grid center, ties broken lexicographically.
    """
    budget = erasure_budget(d, f_e)
    k = max_full_lines(d, budget)
    lines = _center_out_indices(d, k)
    placed: set[Coord] = set()
    for i in lines:
        placed.update((i, c) for c in range(d))
        placed.update((r, i) for r in range(d))
    center = (d - 1) // 2
    remaining = budget - len(placed)
    if remaining > 0:
        free = [q for q in ((r, c) for r in range(d) for c in range(d)) if q not in placed]
        free.sort(key=lambda q: (abs(q[0] - center) + abs(q[1] - center), q))
        placed.update(free[:remaining])
    return ArchitectureSpec(d, f_e, frozenset(placed), "optimized")


def random_placement(d: int, f_e: float, seed: int) -> ArchitectureSpec:
    """Uniformly random budget-sized subset of data qubits."""
    budget = erasure_budget(d, f_e)
    rng = np.random.Generator(np.random.Philox(key=seed))
    idx = rng.choice(d * d, size=budget, replace=False)
    placed = frozenset((int(i) // d, int(i) % d) for i in idx)
    return ArchitectureSpec(d, f_e, placed, "random")


def _diagonal_sites(d: int, offset: int) -> set[Coord]:
    """Full anti-diagonal ``r + c = (d - 1) + offset`` clipped to the grid."""
    return {
        (r, c)
        for r in range(d)
        for c in range(d)
        if r + c == (d - 1) + offset
    }


def pattern_placement(d: int, pattern: LinePattern) -> ArchitectureSpec:
    """Structured placements: line orientations and centrality variants.

    * ``rows`` / ``cols``: ``count`` full lines, centered, consecutive.
    * ``consecutive_lines``: alias of ``rows`` (centered consecutive rows).
    * ``alternating_lines``: ``count`` rows spaced two apart, anchored so
      the block stays centered (``count = (d+1)/2`` gives rows 0,2,..,d-1).
    * ``diagonals``: ``count`` centered anti-diagonals.
    * ``cross``: one full center row plus one full center column.
    """
    k = pattern.count
    if pattern.kind in ("rows", "cols", "diagonals", "consecutive_lines") and k > d:
        raise ValueError(f"count {k} exceeds grid size {d}")
    placed: set[Coord] = set()
    if pattern.kind in ("rows", "consecutive_lines"):
        for i in _center_out_indices(d, k):
            placed.update((i, c) for c in range(d))
    elif pattern.kind == "cols":
        for i in _center_out_indices(d, k):
            placed.update((r, i) for r in range(d))
    elif pattern.kind == "alternating_lines":
        if k > (d + 1) // 2:
            raise ValueError(f"at most (d+1)/2 = {(d + 1) // 2} alternating lines fit")
        center = (d - 1) // 2
        # Rows spaced two apart; use the parity class containing the center
        # row when it is large enough, otherwise the even class (which has
        # (d+1)/2 members, e.g. rows 0,2,..,d-1 when all lines are used).
        cls = list(range(center % 2, d, 2))
        if k > len(cls):
            cls = list(range(0, d, 2))
        cls.sort(key=lambda r: (abs(r - center), r))
        for i in sorted(cls[:k]):
            placed.update((i, c) for c in range(d))
    elif pattern.kind == "diagonals":
        offsets = sorted(range(-(d - 1), d), key=lambda o: (abs(o), o))
        for off in offsets[:k]:
            placed.update(_diagonal_sites(d, off))
    elif pattern.kind == "cross":
        # count center rows plus count center columns: equal minimum
        # erasures per traversing path in both orientations.
        if k > d:
            raise ValueError(f"count {k} exceeds grid size {d}")
        for i in _center_out_indices(d, max(k, 1)):
            placed.update((i, c) for c in range(d))
            placed.update((r, i) for r in range(d))
    f_e = len(placed) / (d * d)
    return ArchitectureSpec(d, f_e, frozenset(placed), pattern.kind)


def min_erasures_per_path(spec: ArchitectureSpec, orientation: str) -> int:
    """Minimum erasure count over all minimum-length traversing paths.

    ``orientation`` names the logical observable: chains flipping
    ``z_logical`` cross all columns (one qubit per column, transverse row
    index changing by at most one per step); ``x_logical`` chains cross
    all rows.
    """
    d = spec.d
    is_erasure = np.zeros((d, d), dtype=np.int64)
    for r, c in spec.placement:
        is_erasure[r, c] = 1
    if orientation == "z_logical":
        cost = is_erasure.T  # cost[line, transverse] with lines = columns
    elif orientation == "x_logical":
        cost = is_erasure
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    best = cost[0].copy()
    for line in range(1, d):
        prev = best
        shifted = np.stack(
            [
                np.concatenate(([prev[0]], prev[:-1])),
                prev,
                np.concatenate((prev[1:], [prev[-1]])),
            ]
        )
        best = cost[line] + shifted.min(axis=0)
    return int(best.min())
