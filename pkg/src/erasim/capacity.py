"""Analytic code-capacity model and perfect-syndrome Monte Carlo.

Covers the repetition-code logical error rate (exact sum, leading order
and an independent enumeration oracle), traversing-path counting and
importance maps, the union bound for the surface code, the effective
distance lower bound, and a one-round Monte Carlo sampler with perfect
syndrome extraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from erasim.lattice import SurfaceCodeLayout
from erasim.placement import ArchitectureSpec, erasure_budget, max_full_lines


@dataclass(frozen=True)
class RepCodeSpec:
    """Repetition code with ``d`` data qubits, ``k`` of them erasures."""

    d: int
    k: int
    p: float

    def __post_init__(self):
        if not (1 <= self.d and 0 <= self.k <= self.d):
            raise ValueError(f"need 0 <= k <= d, got d={self.d}, k={self.k}")
        if not 0.0 <= self.p < 0.5:
            raise ValueError(f"need p in [0, 0.5), got {self.p}")


def rep_exact_pl(spec: RepCodeSpec) -> float:
    """Exact repetition-code logical bit-flip rate under ML decoding.

    A logical error requires every erasure qubit to be erased (otherwise
    a clean erasure qubit rules out the wrong explanation), so the
    double sum over data-flip and erased-flip counts carries a ``p^k``
    prefactor; the decoder fails when the actual data-flip count exceeds
    half the standard qubits, with likelihood ties failing half the time.
    """
    d, k, p = spec.d, spec.k, spec.p
    n_std = d - k
    total = 0.0
    for l_d in range(n_std + 1):
        weight_d = math.comb(n_std, l_d) * p**l_d * (1 - p) ** (n_std - l_d)
        if 2 * l_d > n_std:
            fail = 1.0
        elif 2 * l_d == n_std:
            fail = 0.5
        else:
            fail = 0.0
        if fail == 0.0:
            continue
        for l_e in range(k + 1):
            total += weight_d * math.comb(k, l_e) * 0.5**k * fail
    return p**k * total


def rep_exact_pl_verbatim(spec: RepCodeSpec) -> float:
    """The exact sum in its original printed form, kept for comparison.

    As printed the indicator reads ``2 l_d < d - k`` and no ``p^k``
    occurrence factor appears; see :func:`rep_formula_discrepancies` for
    where this diverges from the enumeration oracle.
    """
    d, k, p = spec.d, spec.k, spec.p
    n_std = d - k
    total = 0.0
    for l_d in range(n_std + 1):
        for l_e in range(k + 1):
            if not 2 * l_d < n_std:
                continue
            total += (
                math.comb(n_std, l_d)
                * math.comb(k, l_e)
                * p**l_d
                * (1 - p) ** (n_std - l_d)
                * 0.5**k
            )
    return total


def rep_oracle_pl(spec: RepCodeSpec) -> float:
    """Independent enumeration oracle for the repetition-code failure rate.

    Enumerates every joint outcome class: each erasure qubit is erased
    with probability ``p`` (erased qubits flip with probability 1/2 and
    are known to the decoder); each standard qubit flips with probability
    ``p``.  The syndrome admits exactly two explanations, the actual flip
    set and its complement; the decoder compares their exact likelihoods
    (clean erasure qubits forbid an explanation, erased ones weigh 1/2
    either way) and likelihood ties fail with probability 1/2.
    """
    d, k, p = spec.d, spec.k, spec.p
    if d > 20:
        raise ValueError("oracle enumeration limited to d <= 20")
    n_std = d - k
    total = 0.0
    for s in range(k + 1):  # number of erased erasure qubits
        p_s = math.comb(k, s) * p**s * (1 - p) ** (k - s)
        clean = k - s
        for t in range(n_std + 1):  # data flips
            p_t = math.comb(n_std, t) * p**t * (1 - p) ** (n_std - t)
            for u in range(s + 1):  # flips among erased qubits
                p_u = math.comb(s, u) * 0.5**s
                # Actual flip set F: t data flips, u erased flips.
                # Complement F^c: (n_std - t) data, (s - u) erased, plus
                # all clean erasure qubits.
                like_f = p**t * (1 - p) ** (n_std - t) * 0.5**s
                if clean > 0:
                    like_fc = 0.0
                else:
                    like_fc = p ** (n_std - t) * (1 - p) ** t * 0.5**s
                if like_f > like_fc:
                    fail = 0.0
                elif like_f < like_fc:
                    fail = 1.0
                else:
                    fail = 0.5
                total += p_s * p_t * p_u * fail
    return total


def rep_formula_discrepancies(d_max: int = 12, ps=(0.01, 0.05, 0.1, 0.2), tol: float = 1e-9):
    """Compare the printed exact sum against the oracle across a grid.

    Returns rows ``(d, k, p, verbatim, oracle)`` where they differ by
    more than ``tol``.
    """
    rows = []
    for d in range(1, d_max + 1):
        for k in range(d + 1):
            for p in ps:
                spec = RepCodeSpec(d, k, p)
                v = rep_exact_pl_verbatim(spec)
                o = rep_oracle_pl(spec)
                if abs(v - o) > tol:
                    rows.append((d, k, p, v, o))
    return rows


def rep_leading_pl(spec: RepCodeSpec) -> float:
    """Leading-order logical error rate ``p^floor((d+k+1)/2)``."""
    return spec.p ** ((spec.d + spec.k + 1) // 2)


def king_path_count(m: int, n: int) -> int:
    """Number of traversing paths across ``m`` lines of ``n`` sites each.

    Counts the length-``m`` sequences over ``{0..n-1}`` whose successive
    transverse steps lie in ``{-1, 0, +1}`` (a king crossing an ``m x n``
    board), via the tridiagonal transfer recursion.
    """
    if not (1 <= m <= 15 and 1 <= n <= 15):
        raise ValueError("m, n must lie in [1, 15]")
    counts = [1] * n
    for _ in range(m - 1):
        nxt = [0] * n
        for c in range(n):
            nxt[c] = sum(counts[max(0, c - 1) : min(n, c + 2)])
        counts = nxt
    return sum(counts)


def _paths_through(d: int) -> np.ndarray:
    """Per-site count of vertical traversing paths containing the site."""
    A = np.zeros((d, d), dtype=np.int64)  # paths from top reaching (r, c)
    B = np.zeros((d, d), dtype=np.int64)  # paths from (r, c) to bottom
    A[0] = 1
    for r in range(1, d):
        for c in range(d):
            A[r, c] = A[r - 1, max(0, c - 1) : min(d, c + 2)].sum()
    B[d - 1] = 1
    for r in range(d - 2, -1, -1):
        for c in range(d):
            B[r, c] = B[r + 1, max(0, c - 1) : min(d, c + 2)].sum()
    return A * B


@dataclass(frozen=True)
class ImportanceMap:
    """Fraction of pooled minimum-length traversing paths per data qubit."""

    d: int
    values: np.ndarray  # (d, d) floats in [0, 1]
    vertical_counts: np.ndarray  # paths crossing rows through each site
    horizontal_counts: np.ndarray
    total_paths: int  # per orientation


def importance_map(d: int) -> ImportanceMap:
    """Containment fraction of each qubit over both path orientations."""
    if d > 11:
        raise ValueError("importance map limited to d <= 11")
    vert = _paths_through(d)
    horiz = vert.T.copy()
    total = king_path_count(d, d)
    values = (vert + horiz) / (2.0 * total)
    return ImportanceMap(
        d=d,
        values=values,
        vertical_counts=vert,
        horizontal_counts=horiz,
        total_paths=total,
    )


def surface_union_bound_pl(d: int, k: int, p: float) -> tuple[float, float]:
    """Union bound over traversing paths, plus the cruder closed form.

    Returns ``(N_paths * rep_exact_pl, 2^d * p^floor((d+k+1)/2))``, both
    capped at 1.
    """
    spec = RepCodeSpec(d, k, p)
    path_bound = min(1.0, king_path_count(d, d) * rep_exact_pl(spec))
    crude = min(1.0, 2.0**d * rep_leading_pl(spec))
    return path_bound, crude


def deff_lower_bound(d: int, f_e: float, p: float) -> tuple[float, float]:
    """Effective-distance lower bound for the optimized placement.

    Returns ``(bound, closed_form)`` where ``bound`` uses the actual
    ``k`` from the line budget, ``floor((d+k+1)/2) + d*log_p 2``, and
    ``closed_form`` substitutes ``k ~ d(1 - sqrt(1 - f_e))``.  The
    correction ``d*log_p 2`` is negative for ``p < 1``.
    """
    if not 0.0 < p < 0.5:
        raise ValueError("need 0 < p < 0.5")
    k = max_full_lines(d, erasure_budget(d, f_e))
    correction = d * math.log(2) / math.log(p)
    bound = (d + k + 1) // 2 + correction
    closed = math.floor((d * (2 - math.sqrt(1 - f_e)) + 1) / 2) + correction
    return bound, closed


def capacity_graphs(layout: SurfaceCodeLayout, spec: ArchitectureSpec, p: float):
    """Code-capacity decoding graphs for one perfect syndrome round.

    Each data qubit becomes one edge per basis between its adjacent
    stabilizers (or the boundary).  Standard qubits carry the
    depolarizing marginal ``2p/3``; erasure qubits carry ``p/2`` and a
    flag whose id is the qubit's data index.
    """
    from erasim import decoder as dec

    raws = {"Z": [], "X": []}
    for basis, stabs in (("Z", layout.z_stabilizers), ("X", layout.x_stabilizers)):
        stab_index = {s.corner: i for i, s in enumerate(stabs)}
        boundary = len(stabs)
        logical = layout.logical_z_support if basis == "Z" else layout.logical_x_support
        for q in layout.data_qubits:
            neigh = [stab_index[s.corner] for s in stabs if q in s.support]
            if len(neigh) == 1:
                u, v = neigh[0], boundary
            else:
                u, v = neigh
            mask = 1 if q in logical else 0
            qid = layout.data_index(q)
            if q in spec.placement:
                raws[basis].append((u, v, p / 2.0, mask, [qid]))
            else:
                raws[basis].append((u, v, 2.0 * p / 3.0, mask, []))
    gz = dec.build_graph(len(layout.z_stabilizers), raws["Z"])
    gx = dec.build_graph(len(layout.x_stabilizers), raws["X"])
    # An erasure, once heralded, is equally likely to have an X or Z
    # component: its error set holds one edge per basis at p/2, so the
    # erased-edge weight comes out 0 while clean edges are removed.
    site_probs: dict = {}
    for basis, g in (("Z", gz), ("X", gx)):
        pos: dict = {}
        for eid in range(g.n_edges):
            for f in g.edge_flags[eid]:
                pos.setdefault(f, eid)
        for qid, eid in pos.items():
            site_probs.setdefault(qid, []).append((basis, eid, p / 2.0))
    flag_index = dec.attach_flag_sets(
        gz, gx, site_probs, totals={qid: p for qid in site_probs}
    )
    return gz, gx, flag_index


def capacity_sample(
    layout: SurfaceCodeLayout,
    spec: ArchitectureSpec,
    p: float,
    shots: int,
    seed: int,
    block: int = 1 << 14,
    block_offset: int = 0,
    decoders=None,
):
    """Monte Carlo with one perfect syndrome round.

    Standard data qubits suffer depolarizing error rate ``p``; erasure
    qubits are erased with rate ``p`` (uniform Pauli, location known to
    the decoder: its edges get weight 0 when erased, removed when clean).
    Returns ``(failures_x_logical, failures_z_logical, flag_rate)``
    counting wrong predictions of each observable; ``flag_rate`` is the
    mean erasure-flag value.  Randomness is keyed per fixed-size block
    by ``(seed, block_offset + block index)`` so chunked calls with
    matching offsets reproduce a single long call.  Pass prebuilt
    ``decoders`` to amortize graph construction across chunks.
    """
    from erasim import decoder as dec

    if p == 0.0:
        return 0, 0, 0.0
    if decoders is None:
        gz, gx, _ = capacity_graphs(layout, spec, p)
        decoders = {"Z": dec.BatchDecoder(gz), "X": dec.BatchDecoder(gx)}
    d = layout.d
    n = d * d
    erasure_ids = np.array(sorted(layout.data_index(q) for q in spec.placement), dtype=np.int64)
    std_ids = np.array(
        [i for i in range(n) if i not in set(map(int, erasure_ids))], dtype=np.int64
    )
    # Incidence of data qubits on each basis graph's detectors.
    inc = {}
    for basis, stabs in (("Z", layout.z_stabilizers), ("X", layout.x_stabilizers)):
        mat = np.zeros((n, len(stabs)), dtype=np.uint8)
        for si, s in enumerate(stabs):
            for q in s.support:
                mat[layout.data_index(q), si] = 1
        inc[basis] = mat
    logical = {
        "Z": np.array([1 if (i // d, i % d) in layout.logical_z_support else 0 for i in range(n)], dtype=np.uint8),
        "X": np.array([1 if (i // d, i % d) in layout.logical_x_support else 0 for i in range(n)], dtype=np.uint8),
    }

    fail_z = 0
    fail_x = 0
    flag_bits = 0
    done = 0
    block_idx = 0
    while done < shots:
        bs = min(block, shots - done)
        rng = np.random.Generator(
            np.random.Philox(key=[seed, block_offset + block_idx])
        )
        xerr = np.zeros((bs, n), dtype=np.uint8)
        zerr = np.zeros((bs, n), dtype=np.uint8)
        if len(std_ids):
            r = rng.random((bs, len(std_ids)))
            pick = rng.integers(0, 3, size=(bs, len(std_ids)))
            hit = r < p
            xerr[:, std_ids] = (hit & (pick <= 1)).astype(np.uint8)
            zerr[:, std_ids] = (hit & (pick >= 1)).astype(np.uint8)
        erased = np.zeros((bs, len(erasure_ids)), dtype=np.uint8)
        if len(erasure_ids):
            erased = (rng.random((bs, len(erasure_ids))) < p).astype(np.uint8)
            pick = rng.integers(0, 4, size=(bs, len(erasure_ids)))
            xerr[:, erasure_ids] = erased & ((pick == 1) | (pick == 2))
            zerr[:, erasure_ids] = erased & ((pick == 2) | (pick == 3))
        for basis, err in (("Z", xerr), ("X", zerr)):
            dets = (err @ inc[basis]) % 2
            obs = (err @ logical[basis]) % 2
            bd = decoders[basis]
            for s in range(bs):
                raised = [int(erasure_ids[i]) for i in np.nonzero(erased[s])[0]]
                pred = bd.decode_shot(dets[s], raised)
                if pred != int(obs[s]):
                    if basis == "Z":
                        fail_z += 1
                    else:
                        fail_x += 1
        flag_bits += int(erased.sum())
        done += bs
        block_idx += 1
    flag_rate = flag_bits / (shots * len(erasure_ids)) if len(erasure_ids) else 0.0
    return fail_x, fail_z, flag_rate
