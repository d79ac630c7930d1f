"""Noisy syndrome-extraction circuits and Pauli-frame sampling.

A memory experiment is compiled to a flat instruction list over
``2d^2 - 1`` qubits (data first, then one ancilla per stabilizer).  Gate
layers per round: ancilla reset, H on X-ancillas, the four CNOT steps of
the layout schedule, H again, ancilla readout.  Noise follows the
single-parameter model: standard-qubit faults are unheralded Paulis,
erasure-qubit gate faults are heralded (flag bit plus uniform
``{I,X,Y,Z}`` replacement), and an erasure check runs on every erasure
qubit after every gate layer, itself injecting heralded erasure at its
own rate.

Sampling is a vectorized Pauli-frame simulation over shot blocks with
counter-based (Philox) randomness, so results are reproducible for a
fixed seed independent of how many blocks or workers execute.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix

from erasim.lattice import SurfaceCodeLayout
from erasim.placement import ArchitectureSpec

SAMPLE_BLOCK = 1 << 14  # fixed block size; part of the determinism contract


@dataclass(frozen=True)
class NoiseModel:
    """Per-operation error rates, all derived from a single parameter p."""

    p: float
    std_init: float
    std_readout: float
    std_1q: float
    std_2q: float
    er_init: float
    er_readout: float
    er_1q: float
    er_2q: float
    er_check: float

    @classmethod
    def from_p(cls, p: float) -> "NoiseModel":
        if not 0.0 <= p <= 0.5:
            raise ValueError("p must lie in [0, 0.5]")
        return cls(
            p=p,
            std_init=p,
            std_readout=p,
            std_1q=p / 10.0,
            std_2q=p,
            er_init=2.0 * p,
            er_readout=2.0 * p,
            er_1q=p,
            er_2q=p,
            er_check=p,
        )


@dataclass(frozen=True)
class FlagSite:
    """One heralded noise location (erasure gate fault or erasure check)."""

    flag_id: int
    time_step: int
    qubits: tuple
    channel: str  # erasure_1q | erasure_2q | erasure_check


@dataclass
class NoisyCircuit:
    """Compiled memory experiment: gates, noise sites, detectors, observable."""

    layout: SurfaceCodeLayout
    spec: ArchitectureSpec
    noise: NoiseModel
    rounds: int
    basis: str
    n_qubits: int
    instructions: list
    n_meas: int
    detectors: list  # list of (type, [measurement ids], meta)
    observable_meas: list
    flag_sites: list

    @property
    def n_detectors(self) -> int:
        return len(self.detectors)

    @property
    def n_flags(self) -> int:
        return len(self.flag_sites)

    @property
    def det_types(self) -> np.ndarray:
        return np.array([d[0] for d in self.detectors])

    def detector_matrix(self) -> csr_matrix:
        """Sparse (n_meas x n_detectors) incidence of measurements."""
        rows, cols = [], []
        for j, (_, mids, _) in enumerate(self.detectors):
            for m in mids:
                rows.append(m)
                cols.append(j)
        data = np.ones(len(rows), dtype=np.uint8)
        return csr_matrix((data, (rows, cols)), shape=(self.n_meas, self.n_detectors))

    def observable_vector(self) -> np.ndarray:
        v = np.zeros(self.n_meas, dtype=np.uint8)
        for m in self.observable_meas:
            v[m] = 1
        return v

    def dump(self) -> str:
        """Line-oriented text dump for debugging and cross-tool comparison."""
        lines = []
        for t, ins in enumerate(self.instructions):
            kind = ins[0]
            if kind in ("R", "H", "M"):
                lines.append(f"{kind} {t} " + " ".join(map(str, ins[1])))
            elif kind == "CX":
                pairs = " ".join(f"{c},{g}" for c, g in zip(ins[1], ins[2]))
                lines.append(f"CX {t} {pairs}")
            elif kind in ("XERR", "DEP1"):
                lines.append(f"{kind} {t} rate={ins[2]} " + " ".join(map(str, ins[1])))
            elif kind == "DEP2":
                pairs = " ".join(f"{c},{g}" for c, g in zip(ins[1], ins[2]))
                lines.append(f"DEP2 {t} rate={ins[3]} {pairs}")
            elif kind == "HER1":
                sites = " ".join(f"{q}#{f}" for q, f in zip(ins[1], ins[3]))
                lines.append(f"FLAGERR1 {t} rate={ins[2]} {sites}")
            elif kind == "HER2":
                sites = " ".join(f"{c},{g}#{f}" for c, g, f in zip(ins[1], ins[2], ins[4]))
                lines.append(f"FLAGERR2 {t} rate={ins[3]} {sites}")
        for kind, mids, _ in self.detectors:
            lines.append(f"DETECTOR {kind} " + " ".join(map(str, mids)))
        lines.append("OBSERVABLE " + " ".join(map(str, self.observable_meas)))
        return "\n".join(lines)


@dataclass
class ShotBatch:
    """Sampled detector bits, erasure-flag bits and true observable flips."""

    shots: int
    detectors: np.ndarray  # (shots, D) uint8
    flags: np.ndarray  # (shots, F) uint8
    observable_flips: np.ndarray  # (shots,) uint8
    basis: str


class _Builder:
    def __init__(self, n_qubits: int):
        self.instructions: list = []
        self.n_meas = 0
        self.flag_sites: list = []

    def emit(self, ins):
        self.instructions.append(ins)
        return len(self.instructions) - 1

    def measure(self, qubits) -> np.ndarray:
        ids = np.arange(self.n_meas, self.n_meas + len(qubits))
        self.n_meas += len(qubits)
        self.emit(("M", np.asarray(qubits, dtype=np.int64)))
        return ids

    def heralded(self, qubits, rate: float, channel: str, pairs=None):
        """HER1/HER2 with freshly allocated flag ids."""
        t = len(self.instructions)
        base = len(self.flag_sites)
        if pairs is None:
            qubits = np.asarray(qubits, dtype=np.int64)
            fids = np.arange(base, base + len(qubits))
            for q, f in zip(qubits, fids):
                self.flag_sites.append(FlagSite(int(f), t, (int(q),), channel))
            if rate > 0 or True:
                self.emit(("HER1", qubits, rate, fids))
        else:
            a, b = pairs
            a = np.asarray(a, dtype=np.int64)
            b = np.asarray(b, dtype=np.int64)
            fids = np.arange(base, base + len(a))
            for qa, qb, f in zip(a, b, fids):
                self.flag_sites.append(FlagSite(int(f), t, (int(qa), int(qb)), channel))
            self.emit(("HER2", a, b, rate, fids))


def build_memory_circuit(
    layout: SurfaceCodeLayout,
    spec: ArchitectureSpec,
    noise: NoiseModel,
    rounds: int,
    basis: str = "Z",
) -> NoisyCircuit:
    """Compile a ``rounds``-round memory experiment in ``basis``."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if basis not in ("Z", "X"):
        raise ValueError("basis must be 'Z' or 'X'")
    if spec.d != layout.d:
        raise ValueError("architecture and layout distances differ")

    d = layout.d
    data = np.arange(d * d, dtype=np.int64)
    er_data = np.array(
        sorted(layout.data_index(q) for q in spec.placement), dtype=np.int64
    )
    er_set = set(map(int, er_data))
    std_data = np.array([q for q in data if int(q) not in er_set], dtype=np.int64)
    stabs = layout.stabilizers
    x_anc = np.array([s.ancilla for s in layout.x_stabilizers], dtype=np.int64)
    all_anc = np.array([s.ancilla for s in stabs], dtype=np.int64)

    b = _Builder(layout.n_qubits)

    def noisy_1q_layer(qubits_std, qubits_er, std_rate, er_channel, er_rate):
        if len(qubits_std):
            b.emit(("DEP1", qubits_std, std_rate))
        if len(qubits_er):
            b.heralded(qubits_er, er_rate, er_channel)

    def erasure_check():
        if len(er_data):
            b.heralded(er_data, noise.er_check, "erasure_check")

    # Data initialization.  Standard-qubit init faults are unheralded
    # flips; erasure-qubit init faults are relaxation events the erasure
    # checks catch, so they are heralded like gate faults.
    b.emit(("R", data))
    if len(std_data):
        b.emit(("XERR", std_data, noise.std_init))
    if len(er_data):
        b.heralded(er_data, noise.er_init, "erasure_init")
    if basis == "X":
        b.emit(("H", data))
        noisy_1q_layer(std_data, er_data, noise.std_1q, "erasure_1q", noise.er_1q)

    anc_meas = np.zeros((rounds + 1, len(stabs)), dtype=np.int64)  # 1-based rounds
    for r in range(1, rounds + 1):
        b.emit(("R", all_anc))
        b.emit(("XERR", all_anc, noise.std_init))
        b.emit(("H", x_anc))
        b.emit(("DEP1", x_anc, noise.std_1q))
        erasure_check()
        for step in range(4):
            ctrls, tgts = [], []
            for s in stabs:
                for q, st in zip(s.support, s.steps):
                    if st != step:
                        continue
                    qid = layout.data_index(q)
                    if s.kind == "X":
                        ctrls.append(s.ancilla)
                        tgts.append(qid)
                    else:
                        ctrls.append(qid)
                        tgts.append(s.ancilla)
            ctrls = np.array(ctrls, dtype=np.int64)
            tgts = np.array(tgts, dtype=np.int64)
            b.emit(("CX", ctrls, tgts))
            data_side = np.where(ctrls < d * d, ctrls, tgts)
            is_er = np.isin(data_side, er_data)
            if (~is_er).any():
                b.emit(("DEP2", ctrls[~is_er], tgts[~is_er], noise.std_2q))
            if is_er.any():
                b.heralded(None, noise.er_2q, "erasure_2q", pairs=(ctrls[is_er], tgts[is_er]))
            erasure_check()
        b.emit(("H", x_anc))
        b.emit(("DEP1", x_anc, noise.std_1q))
        erasure_check()
        b.emit(("XERR", all_anc, noise.std_readout))
        anc_meas[r] = b.measure(all_anc)

    # Final transversal data measurement.
    if basis == "X":
        b.emit(("H", data))
        noisy_1q_layer(std_data, er_data, noise.std_1q, "erasure_1q", noise.er_1q)
    if len(std_data):
        b.emit(("XERR", std_data, noise.std_readout))
    if len(er_data):
        b.heralded(er_data, noise.er_readout, "erasure_readout")
    data_meas = b.measure(data)

    # Detectors: first-round and final detectors exist only for the basis
    # type; consecutive-round comparisons for every stabilizer.
    stab_pos = {s.ancilla: i for i, s in enumerate(stabs)}
    detectors = []
    for i, s in enumerate(stabs):
        if s.kind == basis:
            detectors.append((s.kind, [int(anc_meas[1, i])], (s.corner, 1)))
    for r in range(2, rounds + 1):
        for i, s in enumerate(stabs):
            detectors.append(
                (s.kind, [int(anc_meas[r - 1, i]), int(anc_meas[r, i])], (s.corner, r))
            )
    for i, s in enumerate(stabs):
        if s.kind == basis:
            mids = [int(anc_meas[rounds, i])]
            mids += [int(data_meas[layout.data_index(q)]) for q in s.support]
            detectors.append((s.kind, mids, (s.corner, rounds + 1)))

    logical = layout.logical_z_support if basis == "Z" else layout.logical_x_support
    observable = [int(data_meas[layout.data_index(q)]) for q in sorted(logical)]

    return NoisyCircuit(
        layout=layout,
        spec=spec,
        noise=noise,
        rounds=rounds,
        basis=basis,
        n_qubits=layout.n_qubits,
        instructions=b.instructions,
        n_meas=b.n_meas,
        detectors=detectors,
        observable_meas=observable,
        flag_sites=b.flag_sites,
    )


def _run_block(circuit: NoisyCircuit, bs: int, rng, injections=None):
    """Simulate one block of shots; returns (meas, flags) bit matrices.

    ``injections`` maps instruction index -> list of (row, x_qubits,
    z_qubits); when given, all random noise is disabled.
    """
    n = circuit.n_qubits
    x = np.zeros((bs, n), dtype=bool)
    z = np.zeros((bs, n), dtype=bool)
    meas = np.zeros((bs, circuit.n_meas), dtype=bool)
    flags = np.zeros((bs, circuit.n_flags), dtype=bool)
    ptr = 0
    noiseless = injections is not None
    for idx, ins in enumerate(circuit.instructions):
        kind = ins[0]
        if kind == "R":
            q = ins[1]
            x[:, q] = False
            z[:, q] = False
        elif kind == "H":
            q = ins[1]
            tmp = x[:, q].copy()
            x[:, q] = z[:, q]
            z[:, q] = tmp
        elif kind == "CX":
            c, t = ins[1], ins[2]
            if len(c):
                x[:, t] ^= x[:, c]
                z[:, c] ^= z[:, t]
        elif kind == "M":
            q = ins[1]
            meas[:, ptr : ptr + len(q)] = x[:, q]
            ptr += len(q)
        elif noiseless:
            pass
        elif kind == "XERR":
            q, rate = ins[1], ins[2]
            x[:, q] ^= rng.random((bs, len(q))) < rate
        elif kind == "DEP1":
            q, rate = ins[1], ins[2]
            hit = rng.random((bs, len(q))) < rate
            pick = rng.integers(0, 3, size=(bs, len(q)))
            x[:, q] ^= hit & (pick <= 1)
            z[:, q] ^= hit & (pick >= 1)
        elif kind == "DEP2":
            c, t, rate = ins[1], ins[2], ins[3]
            if len(c) == 0:
                continue
            hit = rng.random((bs, len(c))) < rate
            pick = rng.integers(1, 16, size=(bs, len(c)))
            pa, pb = pick // 4, pick % 4
            x[:, c] ^= hit & ((pa == 1) | (pa == 2))
            z[:, c] ^= hit & ((pa == 2) | (pa == 3))
            x[:, t] ^= hit & ((pb == 1) | (pb == 2))
            z[:, t] ^= hit & ((pb == 2) | (pb == 3))
        elif kind == "HER1":
            q, rate, fids = ins[1], ins[2], ins[3]
            occ = rng.random((bs, len(q))) < rate
            flags[:, fids] = occ
            pick = rng.integers(0, 4, size=(bs, len(q)))
            x[:, q] ^= occ & ((pick == 1) | (pick == 2))
            z[:, q] ^= occ & ((pick == 2) | (pick == 3))
        elif kind == "HER2":
            a, bq, rate, fids = ins[1], ins[2], ins[3], ins[4]
            occ = rng.random((bs, len(a))) < rate
            flags[:, fids] = occ
            pa = rng.integers(0, 4, size=(bs, len(a)))
            pb = rng.integers(0, 4, size=(bs, len(a)))
            x[:, a] ^= occ & ((pa == 1) | (pa == 2))
            z[:, a] ^= occ & ((pa == 2) | (pa == 3))
            x[:, bq] ^= occ & ((pb == 1) | (pb == 2))
            z[:, bq] ^= occ & ((pb == 2) | (pb == 3))
        if injections is not None and idx in injections:
            for row, xqs, zqs in injections[idx]:
                for q in xqs:
                    x[row, q] ^= True
                for q in zqs:
                    z[row, q] ^= True
    return meas, flags


def sample_shots(
    circuit: NoisyCircuit, shots: int, seed: int, block_offset: int = 0
) -> ShotBatch:
    """Sample detector bits, flags and observable flips for ``shots`` shots.

    Randomness is keyed per fixed-size block by ``(seed, block_offset +
    block index)``, so sampling N blocks in one call equals sampling
    them across several calls with matching offsets.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    dmat = circuit.detector_matrix()
    ovec = circuit.observable_vector()
    det_out = np.empty((shots, circuit.n_detectors), dtype=np.uint8)
    flag_out = np.empty((shots, circuit.n_flags), dtype=np.uint8)
    obs_out = np.empty(shots, dtype=np.uint8)
    done = 0
    block_idx = 0
    while done < shots:
        bs = min(SAMPLE_BLOCK, shots - done)
        rng = np.random.Generator(
            np.random.Philox(key=[seed, block_offset + block_idx])
        )
        meas, flags = _run_block(circuit, bs, rng)
        mu = meas.astype(np.uint8)
        det_out[done : done + bs] = (mu @ dmat) % 2
        flag_out[done : done + bs] = flags
        obs_out[done : done + bs] = (mu @ ovec) % 2
        done += bs
        block_idx += 1
    return ShotBatch(
        shots=shots,
        detectors=det_out,
        flags=flag_out,
        observable_flips=obs_out,
        basis=circuit.basis,
    )


def propagate_faults(circuit: NoisyCircuit, faults):
    """Noiselessly propagate deterministic Pauli injections (test hook).

    ``faults`` is a list of ``(instruction_index, x_qubits, z_qubits)``;
    each entry runs in its own shot.  Returns (detector bits, observable
    flips).
    """
    dmat = circuit.detector_matrix()
    ovec = circuit.observable_vector()
    nf = len(faults)
    det = np.empty((nf, circuit.n_detectors), dtype=np.uint8)
    obs = np.empty(nf, dtype=np.uint8)
    block = 1 << 12
    for start in range(0, nf, block):
        chunk = faults[start : start + block]
        injections: dict = {}
        for row, (idx, xqs, zqs) in enumerate(chunk):
            injections.setdefault(idx, []).append((row, xqs, zqs))
        meas, _ = _run_block(circuit, len(chunk), None, injections=injections)
        mu = meas.astype(np.uint8)
        det[start : start + len(chunk)] = (mu @ dmat) % 2
        obs[start : start + len(chunk)] = (mu @ ovec) % 2
    return det, obs


def _site_components(circuit: NoisyCircuit):
    """Enumerate elementary fault components of every noise site.

    Yields ``(site_key, flag_id or -1, prob, x_qubits, z_qubits)`` where
    ``site_key = (instr_idx, site qubits)`` identifies the physical noise
    location so that mutually-exclusive components of one site can be
    summed while independent sites merge with the XOR rule.
    """
    for idx, ins in enumerate(circuit.instructions):
        kind = ins[0]
        if kind == "XERR":
            q, rate = ins[1], ins[2]
            if rate <= 0:
                continue
            for qi in q:
                yield (idx, (int(qi),)), -1, rate, (int(qi),), ()
        elif kind == "DEP1":
            q, rate = ins[1], ins[2]
            if rate <= 0:
                continue
            for qi in q:
                qi = int(qi)
                site = (idx, (qi,))
                yield site, -1, rate / 3.0, (qi,), ()
                yield site, -1, rate / 3.0, (qi,), (qi,)
                yield site, -1, rate / 3.0, (), (qi,)
        elif kind == "DEP2":
            c, t, rate = ins[1], ins[2], ins[3]
            if rate <= 0:
                continue
            for ci, ti in zip(c, t):
                ci, ti = int(ci), int(ti)
                site = (idx, (ci, ti))
                for pick in range(1, 16):
                    pa, pb = pick // 4, pick % 4
                    xq = tuple(
                        q for q, pp in ((ci, pa), (ti, pb)) if pp in (1, 2)
                    )
                    zq = tuple(
                        q for q, pp in ((ci, pa), (ti, pb)) if pp in (2, 3)
                    )
                    yield site, -1, rate / 15.0, xq, zq
        elif kind == "HER1":
            q, rate, fids = ins[1], ins[2], ins[3]
            if rate <= 0:
                continue
            for qi, f in zip(q, fids):
                qi = int(qi)
                site = (idx, (qi,))
                for pick in range(1, 4):
                    xq = (qi,) if pick in (1, 2) else ()
                    zq = (qi,) if pick in (2, 3) else ()
                    yield site, int(f), rate / 4.0, xq, zq
        elif kind == "HER2":
            a, bq, rate, fids = ins[1], ins[2], ins[3], ins[4]
            if rate <= 0:
                continue
            for ai, bi, f in zip(a, bq, fids):
                ai, bi = int(ai), int(bi)
                site = (idx, (ai, bi))
                for pick in range(1, 16):
                    pa, pb = pick // 4, pick % 4
                    xq = tuple(q for q, pp in ((ai, pa), (bi, pb)) if pp in (1, 2))
                    zq = tuple(q for q, pp in ((ai, pa), (bi, pb)) if pp in (2, 3))
                    yield site, int(f), rate / 16.0, xq, zq


def build_decoding_graphs(circuit: NoisyCircuit):
    """Derive the per-basis decoding graphs by fault enumeration.

    Every elementary fault component is propagated noiselessly; its
    detector footprint is split by detector type into the Z and X graphs.
    Components of one site sharing a footprint add their probabilities;
    independent sites merge with the XOR rule.  Raises if any component
    touches more than two detectors of one type (non-graphlike circuit).
    """
    from erasim import decoder as dec

    comps = list(_site_components(circuit))
    det, obs = propagate_faults(
        circuit, [(site[0], xq, zq) for site, _, _, xq, zq in comps]
    )
    det_types = circuit.det_types
    cols = {b: np.nonzero(det_types == b)[0] for b in ("Z", "X")}
    local = {
        b: {int(g): i for i, g in enumerate(cols[b])} for b in ("Z", "X")
    }
    n_det = {b: len(cols[b]) for b in ("Z", "X")}

    # Group per (site, basis, footprint).  A site is one (instr, flag,
    # qubits) noise location; unflagged components group by their
    # enumeration origin (instr, qubits) to sum mutually-exclusive cases.
    site_groups: dict = {}
    for ci, (site, fid, prob, xq, zq) in enumerate(comps):
        hits = np.nonzero(det[ci])[0]
        for basis in ("Z", "X"):
            mine = [local[basis][int(h)] for h in hits if det_types[h] == basis]
            ob = int(obs[ci]) if basis == circuit.basis else 0
            if not mine and not ob:
                continue
            if len(mine) > 2:
                raise ValueError(
                    f"fault at instruction {site[0]} ({xq}, {zq}) touches "
                    f"{len(mine)} {basis} detectors: circuit is not graphlike"
                )
            if not mine and ob:
                raise ValueError(
                    f"undetectable logical fault at instruction {site[0]}"
                )
            key = (basis, site, fid, tuple(sorted(mine)), ob)
            site_groups[key] = site_groups.get(key, 0.0) + prob

    raw = {"Z": [], "X": []}
    flag_comp: dict = {}
    for (basis, site, fid, mine, ob), prob in sorted(site_groups.items()):
        if len(mine) == 1:
            u, v = mine[0], n_det[basis]
        else:
            u, v = mine
        raw[basis].append((u, v, prob, ob, [fid] if fid >= 0 else []))
        if fid >= 0:
            flag_comp.setdefault(fid, []).append(
                (basis, (min(u, v), max(u, v), ob), prob)
            )

    gz = dec.build_graph(n_det["Z"], raw["Z"])
    gx = dec.build_graph(n_det["X"], raw["X"])
    gz.det_ids = cols["Z"]
    gx.det_ids = cols["X"]

    # Map flag components to final merged edge ids via (u, v, mask).
    eid_of = {}
    for basis, g in (("Z", gz), ("X", gx)):
        eid_of[basis] = {
            (int(min(g.eu[i], g.ev[i])), int(max(g.eu[i], g.ev[i])), int(g.emask[i])): i
            for i in range(g.n_edges)
        }
    site_probs = {
        fid: [(basis, eid_of[basis][key], prob) for basis, key, prob in comps_]
        for fid, comps_ in flag_comp.items()
    }
    # The reweighting normalizer is each flag's full firing rate, which
    # exceeds the visible-component sum (identity replacement; errors
    # invisible near the time boundaries).
    totals = {}
    for ins in circuit.instructions:
        if ins[0] == "HER1":
            for f in ins[3]:
                totals[int(f)] = ins[2]
        elif ins[0] == "HER2":
            for f in ins[4]:
                totals[int(f)] = ins[3]
    flag_index = dec.attach_flag_sets(gz, gx, site_probs, totals=totals)
    return gz, gx, flag_index
