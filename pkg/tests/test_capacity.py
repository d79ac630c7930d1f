import itertools
import math

import numpy as np
import pytest

from erasim.capacity import (
    ImportanceMap,
    RepCodeSpec,
    capacity_sample,
    deff_lower_bound,
    importance_map,
    king_path_count,
    rep_exact_pl,
    rep_exact_pl_verbatim,
    rep_formula_discrepancies,
    rep_leading_pl,
    rep_oracle_pl,
    surface_union_bound_pl,
)
from erasim.lattice import build_layout
from erasim.placement import optimized_placement


def exhaustive_rep_pl(d, k, p):
    """Enumerate every joint outcome of the hybrid repetition code.

    The first k qubits are erasure qubits (erased with probability p,
    then flipped with probability 1/2, known to the decoder); the rest
    flip with probability p. The maximum-likelihood decoder compares the
    error pattern with its complement (the other syndrome-consistent
    explanation); a clean erasure qubit cannot be flipped, so any
    explanation needing that has likelihood zero. Ties fail with
    probability 1/2.
    """
    std = d - k
    total = 0.0
    for erased in itertools.product((0, 1), repeat=k):
        pe = math.prod(p if e else 1 - p for e in erased)
        for eflip in itertools.product((0, 1), repeat=k):
            if any(f and not e for f, e in zip(eflip, erased)):
                continue
            pf = 0.5 ** sum(erased)
            for sflip in itertools.product((0, 1), repeat=std):
                ps = math.prod(p if f else 1 - p for f in sflip)
                prob = pe * pf * ps
                # Likelihood of the actual pattern vs its complement.
                def likelihood(ef, sf):
                    like = 1.0
                    for f, e in zip(ef, erased):
                        if f and not e:
                            return 0.0
                        if e:
                            like *= 0.5
                    for f in sf:
                        like *= p if f else 1 - p
                    return like

                l_true = likelihood(eflip, sflip)
                l_comp = likelihood(
                    tuple(1 - f for f in eflip), tuple(1 - f for f in sflip)
                )
                if l_comp > l_true:
                    total += prob
                elif l_comp == l_true:
                    total += prob / 2
    return total


@pytest.mark.parametrize("d,k", [(1, 0), (2, 1), (3, 0), (3, 2), (4, 2), (5, 1), (5, 5), (6, 3)])
@pytest.mark.parametrize("p", [0.05, 0.2])
def test_rep_exact_matches_exhaustive_enumeration(d, k, p):
    spec = RepCodeSpec(d, k, p)
    assert rep_exact_pl(spec) == pytest.approx(exhaustive_rep_pl(d, k, p), abs=1e-12)


def test_rep_exact_matches_oracle_grid():
    for d in range(1, 9):
        for k in range(d + 1):
            for p in (0.01, 0.1, 0.2):
                spec = RepCodeSpec(d, k, p)
                assert rep_exact_pl(spec) == pytest.approx(rep_oracle_pl(spec), abs=1e-10)


def test_rep_exact_all_erased():
    # All-erasure code: fails only when every qubit is erased, then
    # the two explanations tie, failing half the time.
    spec = RepCodeSpec(3, 3, 0.1)
    assert rep_exact_pl(spec) == pytest.approx(0.5 * 0.1**3, abs=1e-15)


def test_rep_verbatim_form_disagrees():
    rows = rep_formula_discrepancies(d_max=12)
    assert len(rows) > 0  # the printed form is not self-consistent
    for d, k, p, verbatim, oracle in rows:
        assert abs(verbatim - oracle) > 1e-9


def test_rep_leading_order_slope():
    for d in (3, 5, 7, 9):
        for k in range(d + 1):
            expected = (d + k + 1) // 2
            p1, p2 = 0.005, 0.02
            r1 = rep_exact_pl(RepCodeSpec(d, k, p1))
            r2 = rep_exact_pl(RepCodeSpec(d, k, p2))
            slope = math.log(r2 / r1) / math.log(p2 / p1)
            assert slope == pytest.approx(expected, abs=0.3)


def king_paths_dfs(m, n):
    """Brute-force count of length-m sequences over {0..n-1} with steps in {-1,0,1}."""

    def walk(r, steps_left):
        if steps_left == 0:
            return 1
        total = 0
        for dr in (-1, 0, 1):
            nr = r + dr
            if 0 <= nr < n:
                total += walk(nr, steps_left - 1)
        return total

    return sum(walk(r, m - 1) for r in range(n))


def test_king_path_count_vs_dfs():
    for m in range(1, 7):
        for n in range(1, 7):
            assert king_path_count(m, n) == king_paths_dfs(m, n)


def test_king_path_examples():
    assert king_path_count(1, 5) == 5  # every start cell is a length-1 path
    assert king_path_count(2, 2) == 4
    assert king_path_count(3, 3) == 17




def enumerate_paths(d):
    """All column-traversing king paths as site lists."""
    paths = []

    def walk(r, c, acc):
        acc.append((r, c))
        if c == d - 1:
            paths.append(list(acc))
        else:
            for dr in (-1, 0, 1):
                nr = r + dr
                if 0 <= nr < d:
                    walk(nr, c + 1, acc)
        acc.pop()

    for r in range(d):
        walk(r, 0, [])
    return paths


@pytest.mark.parametrize("d", [3, 5])
def test_importance_map_matches_path_enumeration(d):
    imp = importance_map(d)
    paths = enumerate_paths(d)
    K = len(paths)
    assert imp.total_paths == K
    through = np.zeros((d, d), dtype=np.int64)
    for path in paths:
        for (r, c) in path:
            through[r, c] += 1
    # Horizontal paths through (r, c) = vertical paths through (c, r).
    assert np.array_equal(imp.vertical_counts, through.T)
    assert np.array_equal(imp.horizontal_counts, through)
    expected = (through.T + through) / (2.0 * K)
    assert np.allclose(imp.values, expected)


def test_importance_center_vs_corner_ratio():
    imp = importance_map(7)
    center = imp.values[3, 3]
    corner = imp.values[0, 0]
    ratio = center / corner
    assert 2.0 <= ratio <= 4.5  # strong center bias


def test_importance_normalization():
    imp = importance_map(5)
    K = king_path_count(5, 5)
    assert imp.vertical_counts.sum() == 5 * K
    assert imp.horizontal_counts.sum() == 5 * K


def test_surface_union_bound():
    exact, leading = surface_union_bound_pl(7, 3, 0.05)
    assert 0 <= leading <= exact <= 1
    # Leading-order term is 2^d * p^floor((d+k+1)/2)
    assert leading == pytest.approx(min(1.0, 2**7 * 0.05 ** ((7 + 3 + 1) // 2)))


def test_deff_lower_bound_examples():
    b0, c0 = deff_lower_bound(7, 0.0, 1e-3)
    b1, c1 = deff_lower_bound(7, 0.57, 1e-3)
    assert b0 == pytest.approx(3.3, abs=0.05)
    assert b1 == pytest.approx(4.3, abs=0.05)
    assert b0 == pytest.approx(c0, abs=1e-12)
    assert b1 == pytest.approx(c1, abs=1e-12)


def test_deff_lower_bound_monotone_in_fe():
    vals = [deff_lower_bound(9, fe, 1e-3)[0] for fe in (0.0, 0.25, 0.5, 0.75, 1.0)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_capacity_sample_zero_noise():
    lay = build_layout(3)
    spec = optimized_placement(3, 0.5)
    fx, fz, fr = capacity_sample(lay, spec, 0.0, 1000, 1)
    assert (fx, fz, fr) == (0, 0, 0.0)


def test_capacity_sample_flag_rate():
    lay = build_layout(5)
    spec = optimized_placement(5, 0.5)
    fx, fz, fr = capacity_sample(lay, spec, 0.1, 30000, 7)
    assert fr == pytest.approx(0.1, abs=0.01)


def test_capacity_sample_deterministic():
    lay = build_layout(3)
    spec = optimized_placement(3, 0.5)
    a = capacity_sample(lay, spec, 0.08, 20000, 3)
    b = capacity_sample(lay, spec, 0.08, 20000, 3)
    assert a == b


def test_capacity_distance_suppression():
    # Below threshold, larger distance must fail less.
    p = 0.03
    res = {}
    for d in (3, 5):
        lay = build_layout(d)
        spec = optimized_placement(d, 0.0)
        fx, fz, _ = capacity_sample(lay, spec, p, 60000, 17)
        res[d] = fx + fz
    assert res[5] < res[3]


def test_rep_spec_validation():
    with pytest.raises(ValueError):
        RepCodeSpec(3, 4, 0.1)
    with pytest.raises(ValueError):
        RepCodeSpec(3, 0, 0.6)
