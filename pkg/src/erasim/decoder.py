"""Erasure-aware minimum-weight perfect matching decoding.

A :class:`DecodingGraph` holds one basis worth of detectors plus a virtual
boundary node; each edge carries a probability, a log-likelihood weight,
the logical-observable mask and the heralded-flag ids correlated with it.
Before each shot is decoded the graph is specialized to the shot's flag
outcomes: edges whose flags all read 0 drop their heralded components —
leaving the weight of any unflagged components sharing the edge, or a
removal weight of ``+WEIGHT_CLAMP`` (matching stays feasible) for purely
heralded edges — while edges with a raised flag are reweighted with
``log[(sum_{e' in E} p_e' - p_e) / p_e]`` over the flag's full error set
``E``.

Two decode paths are provided: a readable reference implementation
(scipy shortest paths + networkx blossom matching) and a numba-compiled
fast path used for Monte Carlo volume.  Tests assert they agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _dijkstra

# |log 1e12|: weight used for "removed" edges and the clamp for reweighting.
WEIGHT_CLAMP = 27.6


def edge_weight(prob: float) -> float:
    """Log-likelihood weight of an edge with error probability ``prob``."""
    if not 0.0 < prob <= 0.5:
        raise ValueError(f"edge probability must lie in (0, 0.5], got {prob}")
    return min(math.log((1.0 - prob) / prob), WEIGHT_CLAMP)


def erasure_reweight(e_probs, e_index: int) -> float:
    """Weight of edge ``e_index`` given its flag's full error set probabilities.

    Clamped to ``[-WEIGHT_CLAMP, +WEIGHT_CLAMP]``; a singleton set clamps
    to the floor.
    """
    probs = list(e_probs)
    if not probs:
        raise ValueError("empty error set")
    p_e = probs[e_index]
    if p_e <= 0.0:
        raise ValueError("probabilities must be positive")
    rest = sum(probs) - p_e
    if rest <= 0.0:
        return -WEIGHT_CLAMP
    return float(np.clip(math.log(rest / p_e), -WEIGHT_CLAMP, WEIGHT_CLAMP))


@dataclass
class DecodingGraph:
    """Detector graph of one basis: detectors 0..n_det-1 plus boundary node.

    Edge endpoint ``n_det`` denotes the virtual boundary.  ``edge_flags``
    lists the heralded-flag ids correlated with each edge; ``flag_sets``
    maps a flag id to ``(edge_ids, site_probs)`` where ``site_probs`` are
    the per-edge probabilities of that flag's error components in this
    graph (used by the reweighting formula together with the flag's
    components in the opposite graph, see ``flag_total``).
    """

    n_det: int
    eu: np.ndarray
    ev: np.ndarray
    eprob: np.ndarray
    eweight: np.ndarray
    emask: np.ndarray
    edge_flags: list
    eweight_noflag: np.ndarray | None = None  # weight when all edge flags read 0
    flag_sets: dict = field(default_factory=dict)
    flag_total: dict = field(default_factory=dict)  # flag id -> sum over E (both graphs)
    det_ids: np.ndarray | None = None  # columns of the circuit's detector matrix

    @property
    def boundary(self) -> int:
        return self.n_det

    @property
    def n_edges(self) -> int:
        return len(self.eu)

    def flagged_edge_ids(self) -> np.ndarray:
        return np.array([i for i, f in enumerate(self.edge_flags) if f], dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "n_detectors": int(self.n_det),
            "edges": [
                {
                    "u": int(self.eu[i]),
                    "v": int(self.ev[i]),
                    "probability": float(self.eprob[i]),
                    "weight": float(self.eweight[i]),
                    "observable": int(self.emask[i]),
                    "flags": list(map(int, self.edge_flags[i])),
                }
                for i in range(self.n_edges)
            ],
        }


def build_graph(n_det: int, raw_edges) -> DecodingGraph:
    """Assemble a graph from raw ``(u, v, prob, mask, flag_ids)`` tuples.

    Parallel edges with identical endpoints *and* identical observable
    mask are merged with ``p = p1(1-p2) + p2(1-p1)``, their flag ids
    unioned.  Edges with differing masks are kept separate.
    """
    merged: dict = {}
    for u, v, prob, mask, flags in raw_edges:
        a, b = (u, v) if u <= v else (v, u)
        key = (a, b, int(mask))
        p_old, pu_old, f_old = merged.get(key, (0.0, 0.0, set()))
        p_new = p_old * (1 - prob) + prob * (1 - p_old)
        pu_new = pu_old
        if not flags:
            pu_new = pu_old * (1 - prob) + prob * (1 - pu_old)
        merged[key] = (p_new, pu_new, f_old | set(flags))
    keys = sorted(merged)
    eu = np.array([k[0] for k in keys], dtype=np.int64)
    ev = np.array([k[1] for k in keys], dtype=np.int64)
    eprob = np.array([merged[k][0] for k in keys], dtype=np.float64)
    emask = np.array([k[2] for k in keys], dtype=np.uint8)
    eweight = np.array([edge_weight(p) for p in eprob], dtype=np.float64)
    edge_flags = [sorted(merged[k][2]) for k in keys]
    # Weight an edge takes when all of its flags read 0: only the
    # unflagged (standard-noise) components remain; a purely heralded
    # edge is removed outright.
    eweight_noflag = np.array(
        [
            eweight[i]
            if not edge_flags[i]
            else (edge_weight(merged[k][1]) if merged[k][1] > 0 else WEIGHT_CLAMP)
            for i, k in enumerate(keys)
        ],
        dtype=np.float64,
    )
    g = DecodingGraph(
        n_det=n_det,
        eu=eu,
        ev=ev,
        eprob=eprob,
        eweight=eweight,
        emask=emask,
        edge_flags=edge_flags,
        eweight_noflag=eweight_noflag,
    )
    return g


def attach_flag_sets(
    graph_z: DecodingGraph, graph_x: DecodingGraph, site_probs, totals=None
) -> dict:
    """Record each flag's error set across both graphs.

    ``site_probs`` maps flag id -> list of ("Z"/"X", edge_id, p_e) with
    ``p_e`` the probability of the individual error component (before any
    parallel-edge merging).  ``totals`` maps flag id -> the flag's full
    firing probability, the normalizer of the conditional reweighting
    formula.  It must include outcomes with no graph footprint (identity
    replacement, errors invisible at the circuit's time boundaries), so
    it is generally larger than the sum of the visible components;
    omitting it falls back to that sum.  Returns the flag index
    ``{flag: {"Z": ids, "X": ids}}``.
    """
    index: dict = {}
    for fid, comps in site_probs.items():
        # Fallback normalizer only; it double-counts components visible
        # in both graphs (Y-type), so an explicit channel rate wins.
        total = sum(p for _, _, p in comps)
        if totals is not None and fid in totals:
            total = totals[fid]
        per_basis: dict = {"Z": [], "X": []}
        for basis, eid, p in comps:
            per_basis[basis].append((eid, p))
        for basis, g in (("Z", graph_z), ("X", graph_x)):
            if per_basis[basis]:
                ids = np.array([e for e, _ in per_basis[basis]], dtype=np.int64)
                ps = np.array([p for _, p in per_basis[basis]], dtype=np.float64)
                g.flag_sets[fid] = (ids, ps)
                g.flag_total[fid] = total
        index[fid] = {
            "Z": [e for e, _ in per_basis["Z"]],
            "X": [e for e, _ in per_basis["X"]],
        }
    return index


@dataclass
class ShotView:
    """Per-shot specialization of a decoding graph.

    ``weights`` is the full per-edge weight vector after applying the
    shot's flag information; only flagged edges ever differ from the base
    weights.
    """

    graph: DecodingGraph
    weights: np.ndarray


def apply_erasure_info(graph: DecodingGraph, shot_flags, flag_index=None) -> ShotView:
    """Specialize ``graph`` to one shot's flag outcomes.

    Flags reading 0 drop their heralded components, leaving the edge at
    its unflagged-residual weight (full removal when purely heralded);
    raised flags reweight their edges.  An edge carrying several flags
    keeps its residual weight only if all of them read 0; with several
    raised flags the minimum reweighted value wins.
    """
    shot_flags = np.asarray(shot_flags)
    w = graph.eweight.copy()
    overrides: dict = {}
    for fid, (eids, probs) in graph.flag_sets.items():
        if fid >= len(shot_flags) or not shot_flags[fid]:
            continue
        total = graph.flag_total[fid]
        for eid, p_e in zip(eids, probs):
            rest = total - p_e
            if rest <= 0.0:
                wv = -WEIGHT_CLAMP
            else:
                wv = float(np.clip(math.log(rest / p_e), -WEIGHT_CLAMP, WEIGHT_CLAMP))
            eid = int(eid)
            overrides[eid] = wv if eid not in overrides else min(overrides[eid], wv)
    noflag = graph.eweight_noflag
    for eid, flags in enumerate(graph.edge_flags):
        if flags and eid not in overrides:
            # All associated flags read 0: only unflagged components
            # remain (removed entirely if the edge is purely heralded).
            w[eid] = WEIGHT_CLAMP if noflag is None else noflag[eid]
    for eid, wv in overrides.items():
        w[eid] = wv
    return ShotView(graph=graph, weights=w)


def _preflip(view: ShotView, detector_bits):
    """Resolve negative-weight edges exactly by complementing their usage.

    A negative edge is always profitable, so toggle its endpoints in the
    syndrome, fold its observable mask into the baseline prediction and
    keep the absolute weight.  Returns (weights, defect_bits, baseline).
    """
    g = view.graph
    w = view.weights
    defects = np.zeros(g.n_det + 1, dtype=np.uint8)
    bits = np.asarray(detector_bits).astype(np.uint8)
    defects[: g.n_det] = bits
    baseline = 0
    neg = np.nonzero(w < 0)[0]
    if len(neg):
        w = w.copy()
        for eid in neg:
            u, v = g.eu[eid], g.ev[eid]
            if u != g.boundary:
                defects[u] ^= 1
            if v != g.boundary:
                defects[v] ^= 1
            baseline ^= int(g.emask[eid])
            w[eid] = -w[eid]
    defects[g.boundary] = 0
    return w, defects, baseline


def decode(view: ShotView, detector_bits) -> int:
    """Reference decode: shortest paths + exact blossom matching.

    Returns the predicted logical-observable flip bit.
    """
    import networkx as nx

    g = view.graph
    w, defects, baseline = _preflip(view, detector_bits)
    defect_nodes = np.nonzero(defects)[0]
    m = len(defect_nodes)
    if m == 0:
        return baseline

    n = g.n_det + 1
    dist, parity = _all_pairs(g, w, sources=defect_nodes)
    b = g.boundary

    if m == 1:
        return baseline ^ int(parity[0, b])
    if m == 2:
        u, v = defect_nodes
        via_pair = dist[0, v]
        via_boundary = dist[0, b] + dist[1, b]
        if via_pair <= via_boundary:
            return baseline ^ int(parity[0, v])
        return baseline ^ int(parity[0, b]) ^ int(parity[1, b])

    G = nx.Graph()
    for i in range(m):
        G.add_edge(("d", i), ("b", i), weight=float(dist[i, b]))
        for j in range(i + 1, m):
            G.add_edge(("d", i), ("d", j), weight=float(dist[i, defect_nodes[j]]))
            G.add_edge(("b", i), ("b", j), weight=0.0)
    matching = nx.min_weight_matching(G)
    pred = baseline
    for a, bnode in matching:
        if a[0] == "b" and bnode[0] == "b":
            continue
        if a[0] == "b":
            a, bnode = bnode, a
        i = a[1]
        if bnode[0] == "b":
            pred ^= int(parity[i, b])
        else:
            pred ^= int(parity[i, defect_nodes[bnode[1]]])
    return pred


def matching_cost(view: ShotView, detector_bits) -> float:
    """Total weight of the reference matching (for optimality tests)."""
    import networkx as nx

    g = view.graph
    w, defects, _ = _preflip(view, detector_bits)
    defect_nodes = np.nonzero(defects)[0]
    m = len(defect_nodes)
    if m == 0:
        return 0.0
    dist, _ = _all_pairs(g, w, sources=defect_nodes)
    b = g.boundary
    G = nx.Graph()
    for i in range(m):
        G.add_edge(("d", i), ("b", i), weight=float(dist[i, b]))
        for j in range(i + 1, m):
            G.add_edge(("d", i), ("d", j), weight=float(dist[i, defect_nodes[j]]))
            G.add_edge(("b", i), ("b", j), weight=0.0)
    matching = nx.min_weight_matching(G)
    return sum(G[a][bn]["weight"] for a, bn in matching)


def _all_pairs(g: DecodingGraph, w: np.ndarray, sources):
    """Dijkstra distances and path observable-parities from ``sources``."""
    n = g.n_det + 1
    # Parallel edges: keep the lighter one per endpoint pair.
    best: dict = {}
    for eid in range(g.n_edges):
        key = (int(g.eu[eid]), int(g.ev[eid]))
        if key not in best or w[eid] < w[best[key]]:
            best[key] = eid
    rows, cols, vals = [], [], []
    mask_of: dict = {}
    for (u, v), eid in best.items():
        rows.append(u)
        cols.append(v)
        vals.append(w[eid])
        mask_of[(u, v)] = int(g.emask[eid])
        mask_of[(v, u)] = int(g.emask[eid])
    mat = csr_matrix((vals, (rows, cols)), shape=(n, n))
    dist, pred = _dijkstra(
        mat, directed=False, indices=np.asarray(sources), return_predecessors=True
    )
    # Accumulate parities along each predecessor chain.  Walking nodes in
    # distance order is unsafe here: zero-weight (erased) edges create
    # exact ties, so a predecessor may sort after its successor.
    parity = np.zeros_like(dist, dtype=np.uint8)
    done = np.zeros(dist.shape, dtype=bool)
    for si, src in enumerate(np.asarray(sources)):
        done[si, src] = True
        for v0 in range(n):
            chain = []
            v = v0
            while not done[si, v]:
                chain.append(v)
                p = pred[si, v]
                if p < 0:
                    break  # unreachable; parity stays 0
                v = p
            acc = parity[si, v] if done[si, v] else 0
            for u in reversed(chain):
                acc ^= mask_of.get((int(pred[si, u]), int(u)), 0)
                parity[si, u] = acc
                done[si, u] = True
    return dist, parity


class BatchDecoder:
    """Precomputed fast decode path for one decoding graph.

    Base all-pairs distances are taken on the "all flags read 0" graph
    (heralded edges at their unflagged-residual weight); per shot only
    raised-flag edges get cheaper, which a small exact relaxation handles.
    """

    def __init__(self, graph: DecodingGraph):
        self.graph = graph
        base_w = graph.eweight.copy()
        flagged = graph.flagged_edge_ids()
        if len(flagged):
            base_w[flagged] = (
                WEIGHT_CLAMP
                if graph.eweight_noflag is None
                else graph.eweight_noflag[flagged]
            )
        n = graph.n_det + 1
        dist, parity = _all_pairs(graph, base_w, sources=np.arange(n))
        self.D0 = np.ascontiguousarray(dist)
        self.M0 = np.ascontiguousarray(parity)
        # Per-flag overlay: edge endpoints, reweighted values, masks.
        self.flag_u: dict = {}
        self.flag_v: dict = {}
        self.flag_w: dict = {}
        self.flag_m: dict = {}
        for fid, (eids, probs) in graph.flag_sets.items():
            total = graph.flag_total[fid]
            wv = np.empty(len(eids), dtype=np.float64)
            for i, p_e in enumerate(probs):
                rest = total - p_e
                if rest <= 0.0:
                    wv[i] = -WEIGHT_CLAMP
                else:
                    wv[i] = float(np.clip(math.log(rest / p_e), -WEIGHT_CLAMP, WEIGHT_CLAMP))
            self.flag_u[fid] = graph.eu[eids]
            self.flag_v[fid] = graph.ev[eids]
            self.flag_w[fid] = wv
            self.flag_m[fid] = graph.emask[eids]
        self._empty_i = np.empty(0, dtype=np.int64)
        self._empty_w = np.empty(0, dtype=np.float64)
        self._empty_m = np.empty(0, dtype=np.uint8)

    def decode_shot(self, det_bits, raised_flags) -> int:
        """Decode one shot; ``det_bits`` indexes this graph's detectors."""
        from erasim._fastdecode import decode_one

        defects = np.nonzero(det_bits)[0].astype(np.int64)
        mine = [f for f in raised_flags if f in self.flag_u]
        if mine:
            ch_u = np.concatenate([self.flag_u[f] for f in mine])
            ch_v = np.concatenate([self.flag_v[f] for f in mine])
            ch_w = np.concatenate([self.flag_w[f] for f in mine])
            ch_m = np.concatenate([self.flag_m[f] for f in mine])
            if len(mine) > 1:
                # Overlapping raised flags on one edge: minimum weight wins.
                order = np.argsort(ch_w, kind="stable")
                seen: set = set()
                keep = []
                for i in order:
                    key = (int(ch_u[i]), int(ch_v[i]))
                    if key not in seen:
                        seen.add(key)
                        keep.append(i)
                keep = np.array(keep, dtype=np.int64)
                ch_u, ch_v, ch_w, ch_m = ch_u[keep], ch_v[keep], ch_w[keep], ch_m[keep]
        else:
            ch_u, ch_v = self._empty_i, self._empty_i
            ch_w, ch_m = self._empty_w, self._empty_m
        pred = decode_one(
            self.D0, self.M0, self.graph.boundary, defects,
            ch_u.astype(np.int64), ch_v.astype(np.int64),
            ch_w.astype(np.float64), ch_m.astype(np.uint8),
        )
        if pred >= 0:
            return int(pred)
        # Too many defects for the DP: fall back to blossom.
        flags_vec = np.zeros(_max_flag(self.graph) + 1, dtype=np.uint8)
        for f in raised_flags:
            flags_vec[f] = 1
        view = apply_erasure_info(self.graph, flags_vec)
        return decode(view, det_bits)


def _max_flag(graph: DecodingGraph) -> int:
    m = 0
    for flags in graph.edge_flags:
        for f in flags:
            m = max(m, f)
    return m


def decode_batch(graphs, batch):
    """Decode every shot of ``batch`` in both bases.

    ``graphs`` is ``(graph_Z, graph_X)`` as built by
    :func:`erasim.circuit.build_decoding_graphs`.  Returns a dict with
    per-basis failure counts and per-shot failure bits; failure means the
    predicted observable flip differs from the true one (only the basis
    whose observable the circuit measures can fail).
    """
    graph_z, graph_x = graphs[0], graphs[1]
    shots = batch.shots
    fail = {
        "Z": np.zeros(shots, dtype=np.uint8),
        "X": np.zeros(shots, dtype=np.uint8),
    }
    decoders = {"Z": BatchDecoder(graph_z), "X": BatchDecoder(graph_x)}
    for basis in ("Z", "X"):
        dec = decoders[basis]
        g = dec.graph
        if not g.emask.any() and basis != batch.basis:
            continue  # no observable support: prediction is constantly 0
        det_cols = batch.detectors[:, g.det_ids] if g.det_ids is not None else batch.detectors
        for s in range(shots):
            raised = np.nonzero(batch.flags[s])[0] if batch.flags.shape[1] else ()
            pred = dec.decode_shot(det_cols[s], list(map(int, raised)))
            truth = int(batch.observable_flips[s]) if basis == batch.basis else 0
            fail[basis][s] = 1 if pred != truth else 0
    return {
        "failures_z": int(fail["Z"].sum()),
        "failures_x": int(fail["X"].sum()),
        "fail_bits_z": fail["Z"],
        "fail_bits_x": fail["X"],
    }
