import numpy as np
import pytest

from erasim.lattice import build_layout, traversing_support


@pytest.mark.parametrize("d", [3, 5, 7, 9])
def test_counts(d):
    lay = build_layout(d)
    assert lay.n_data == d * d
    assert lay.n_qubits == 2 * d * d - 1
    assert len(lay.x_stabilizers) == (d * d - 1) // 2
    assert len(lay.z_stabilizers) == (d * d - 1) // 2


def test_invalid_distance():
    for d in (2, 4, 1, 17):
        with pytest.raises(ValueError):
            build_layout(d)


@pytest.mark.parametrize("d", [3, 5, 7])
def test_stabilizer_supports(d):
    lay = build_layout(d)
    for s in lay.stabilizers:
        assert len(s.support) in (2, 4)
        for (r, c) in s.support:
            assert 0 <= r < d and 0 <= c < d
    # Weight-2 Z plaquettes sit on the top/bottom boundary, X on left/right.
    for s in lay.stabilizers:
        if len(s.support) == 2:
            pr, pc = s.corner
            if s.kind == "Z":
                assert pr in (0, d)
            else:
                assert pc in (0, d)


@pytest.mark.parametrize("d", [3, 5, 7])
def test_commutation(d):
    lay = build_layout(d)
    for sx in lay.x_stabilizers:
        for sz in lay.z_stabilizers:
            assert len(set(sx.support) & set(sz.support)) % 2 == 0


@pytest.mark.parametrize("d", [3, 5])
def test_logicals(d):
    lay = build_layout(d)
    assert lay.logical_z_support == {(r, 0) for r in range(d)}
    assert lay.logical_x_support == {(0, c) for c in range(d)}
    # Logical Z commutes with every Z stabilizer and every X stabilizer.
    for s in lay.x_stabilizers:
        assert len(set(s.support) & lay.logical_z_support) % 2 == 0
    for s in lay.z_stabilizers:
        assert len(set(s.support) & lay.logical_x_support) % 2 == 0
    # The two logicals anticommute (odd overlap).
    assert len(lay.logical_z_support & lay.logical_x_support) % 2 == 1


@pytest.mark.parametrize("d", [3, 5, 7])
def test_schedule_collision_free(d):
    lay = build_layout(d)
    for step in range(4):
        busy = set()
        for s in lay.stabilizers:
            for q, st in zip(s.support, s.steps):
                if st == step:
                    assert q not in busy, "data qubit touched twice in one step"
                    busy.add(q)


def test_schedule_covers_all_support():
    lay = build_layout(5)
    for s in lay.stabilizers:
        assert sorted(s.steps) == sorted(set(s.steps))
        assert len(s.steps) == len(s.support)
        assert set(s.steps) <= {0, 1, 2, 3}


def test_data_index_row_major():
    lay = build_layout(3)
    assert lay.data_index((0, 0)) == 0
    assert lay.data_index((0, 2)) == 2
    assert lay.data_index((2, 2)) == 8


def test_ancilla_ids_disjoint_from_data():
    lay = build_layout(5)
    anc = {s.ancilla for s in lay.stabilizers}
    assert len(anc) == len(lay.stabilizers)
    assert min(anc) >= lay.n_data


def test_traversing_support():
    lay = build_layout(3)
    assert traversing_support(lay, "z_logical") == "cols"
    assert traversing_support(lay, "x_logical") == "rows"
    with pytest.raises(ValueError):
        traversing_support(lay, "y_logical")


def test_to_dict_roundtrip_shape():
    lay = build_layout(3)
    d = lay.to_dict()
    assert d["d"] == 3
    assert len(d["x_stabilizers"]) == 4
    assert len(d["z_stabilizers"]) == 4
