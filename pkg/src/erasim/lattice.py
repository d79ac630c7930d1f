"""Rotated surface code geometry, stabilizers, logicals and CNOT schedule.

Conventions (fixed so placement-orientation results are interpretable):

* Data qubits sit on an integer ``d x d`` grid, ``Coord = (row, col)``,
  indexed row-major.
* Plaquettes are identified by their "corner" position ``(pr, pc)`` with
  ``0 <= pr, pc <= d``; the plaquette covers the up-to-four data qubits
  ``(pr-1, pc-1), (pr-1, pc), (pr, pc-1), (pr, pc)`` that fall on the grid.
* Plaquette type alternates checkerboard-style: Z if ``pr + pc`` is even,
  X otherwise.  Weight-2 plaquettes are kept only on the top/bottom
  boundaries for Z type and left/right boundaries for X type.
* The logical Z operator runs along column 0, the logical X operator along
  row 0.  Consequently an error chain that flips the logical Z observable
  (an X-type chain) traverses the grid horizontally, crossing every
  column, and a chain flipping logical X traverses vertically, crossing
  every row.
* CNOT schedule: four time steps; Z plaquettes interact with their data
  qubits in "Z" order (NW, NE, SW, SE) and X plaquettes in "N" order
  (NW, SW, NE, SE).  This is the standard hook-error-avoiding pairing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

Coord = tuple[int, int]

# Corner offsets in schedule-role order.
_ROLES = ("NW", "NE", "SW", "SE")
_ROLE_OFFSET = {"NW": (-1, -1), "NE": (-1, 0), "SW": (0, -1), "SE": (0, 0)}
_Z_ORDER = ("NW", "NE", "SW", "SE")
_N_ORDER = ("NW", "SW", "NE", "SE")


@dataclass(frozen=True)
class Stabilizer:
    """One X- or Z-type parity check of the rotated code."""

    kind: str  # 'X' or 'Z'
    corner: Coord  # plaquette corner position (pr, pc)
    ancilla: int  # global qubit index of the measurement ancilla
    support: tuple[Coord, ...]  # data qubits, ordered by schedule step
    steps: tuple[int, ...]  # time step (0..3) of the CNOT touching support[i]


@dataclass(frozen=True)
class SurfaceCodeLayout:
    """Immutable description of a distance-``d`` rotated surface code."""

    d: int
    data_qubits: tuple[Coord, ...]
    x_stabilizers: tuple[Stabilizer, ...]
    z_stabilizers: tuple[Stabilizer, ...]
    logical_x_support: frozenset[Coord]
    logical_z_support: frozenset[Coord]

    @property
    def n_data(self) -> int:
        return self.d * self.d

    @property
    def n_qubits(self) -> int:
        """Data qubits plus one ancilla per stabilizer."""
        return 2 * self.d * self.d - 1

    def data_index(self, coord: Coord) -> int:
        r, c = coord
        if not (0 <= r < self.d and 0 <= c < self.d):
            raise ValueError(f"coordinate {coord} outside {self.d}x{self.d} grid")
        return r * self.d + c

    @property
    def stabilizers(self) -> tuple[Stabilizer, ...]:
        return self.x_stabilizers + self.z_stabilizers

    def neighbors(self, kind: str, coord: Coord) -> list[Stabilizer]:
        """Stabilizers of ``kind`` whose support contains ``coord``."""
        stabs = self.x_stabilizers if kind == "X" else self.z_stabilizers
        return [s for s in stabs if coord in s.support]

    def to_dict(self) -> dict:
        """JSON-compatible dump of the layout."""

        def stab_dict(s: Stabilizer) -> dict:
            return {
                "kind": s.kind,
                "corner": list(s.corner),
                "ancilla": s.ancilla,
                "support": [list(c) for c in s.support],
                "steps": list(s.steps),
            }

        return {
            "d": self.d,
            "data_qubits": [list(c) for c in self.data_qubits],
            "x_stabilizers": [stab_dict(s) for s in self.x_stabilizers],
            "z_stabilizers": [stab_dict(s) for s in self.z_stabilizers],
            "logical_x": sorted(list(c) for c in self.logical_x_support),
            "logical_z": sorted(list(c) for c in self.logical_z_support),
            "schedule": {"z_order": list(_Z_ORDER), "x_order": list(_N_ORDER)},
        }


def _plaquette_type(pr: int, pc: int) -> str:
    return "Z" if (pr + pc) % 2 == 0 else "X"


def build_layout(d: int) -> SurfaceCodeLayout:
    """Construct the rotated surface code of odd distance ``d``.

    Raises ``ValueError`` for even ``d`` or ``d`` outside ``[3, 15]``.
    """
    if d % 2 == 0 or not (3 <= d <= 15):
        raise ValueError(f"distance must be odd and in [3, 15], got {d}")

    data_qubits = tuple((r, c) for r in range(d) for c in range(d))

    x_stabs: list[Stabilizer] = []
    z_stabs: list[Stabilizer] = []
    next_ancilla = d * d
    for pr in range(d + 1):
        for pc in range(d + 1):
            support_by_role = {}
            for role in _ROLES:
                dr, dc = _ROLE_OFFSET[role]
                q = (pr + dr, pc + dc)
                if 0 <= q[0] < d and 0 <= q[1] < d:
                    support_by_role[role] = q
            if len(support_by_role) < 2:
                continue  # corner fragments
            kind = _plaquette_type(pr, pc)
            if len(support_by_role) == 2:
                # Weight-2 boundary plaquettes: Z on top/bottom, X on left/right.
                on_top_bottom = pr in (0, d)
                if kind == "Z" and not on_top_bottom:
                    continue
                if kind == "X" and on_top_bottom:
                    continue
            order = _Z_ORDER if kind == "Z" else _N_ORDER
            support = []
            steps = []
            for step, role in enumerate(order):
                if role in support_by_role:
                    support.append(support_by_role[role])
                    steps.append(step)
            stab = Stabilizer(
                kind=kind,
                corner=(pr, pc),
                ancilla=next_ancilla,
                support=tuple(support),
                steps=tuple(steps),
            )
            next_ancilla += 1
            (x_stabs if kind == "X" else z_stabs).append(stab)

    layout = SurfaceCodeLayout(
        d=d,
        data_qubits=data_qubits,
        x_stabilizers=tuple(x_stabs),
        z_stabilizers=tuple(z_stabs),
        logical_x_support=frozenset((0, c) for c in range(d)),
        logical_z_support=frozenset((r, 0) for r in range(d)),
    )
    _validate(layout)
    return layout


def _validate(layout: SurfaceCodeLayout) -> None:
    d = layout.d
    if len(layout.x_stabilizers) + len(layout.z_stabilizers) != d * d - 1:
        raise AssertionError("stabilizer count is not d^2 - 1")
    # Even overlap between every X and Z plaquette pair.
    for sx in layout.x_stabilizers:
        for sz in layout.z_stabilizers:
            if len(set(sx.support) & set(sz.support)) % 2:
                raise AssertionError(f"anticommuting pair {sx.corner}, {sz.corner}")
    # Logicals commute with all stabilizers of opposite type and
    # anticommute with each other.
    for sx in layout.x_stabilizers:
        if len(set(sx.support) & layout.logical_z_support) % 2:
            raise AssertionError("logical Z anticommutes with an X stabilizer")
    for sz in layout.z_stabilizers:
        if len(set(sz.support) & layout.logical_x_support) % 2:
            raise AssertionError("logical X anticommutes with a Z stabilizer")
    if len(layout.logical_x_support & layout.logical_z_support) % 2 == 0:
        raise AssertionError("logicals do not anticommute")
    # Within each time step every qubit participates in at most one gate.
    for step in range(4):
        busy: set = set()
        for s in layout.stabilizers:
            for q, st in zip(s.support, s.steps):
                if st != step:
                    continue
                if q in busy:
                    raise AssertionError(f"schedule collision at step {step} on {q}")
                busy.add(q)


def traversing_support(layout: SurfaceCodeLayout, orientation: str) -> str:
    """Axis a chain flipping the given logical observable must traverse.

    ``"z_logical"``: X-type chains terminate on the left/right boundaries,
    so the chain crosses every *column*.  ``"x_logical"``: Z-type chains
    terminate on top/bottom and cross every *row*.
    """
    if orientation == "z_logical":
        return "cols"
    if orientation == "x_logical":
        return "rows"
    raise ValueError(f"unknown orientation {orientation!r}")
