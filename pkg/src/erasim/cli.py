"""Command-line experiment orchestration.

Subcommands wrap the library modules: ``place`` and ``paths`` for
architecture geometry, ``capacity`` for analytic bounds, ``sample`` for
one Monte Carlo cell, ``run`` for config-driven Cartesian sweeps with
resume support, ``fit`` for effective-distance/threshold extraction,
``correlate`` for random-placement correlation maps, and ``cost`` for
transmon cost, yield and scaling projections.

Sweeps write a single flat CSV with header::

    model,d,f_e,strategy,seed,p,rounds,shots,failures_x,failures_z,failures_combined,flag_rate_mean

Rows are keyed by (model, d, f_e, strategy, seed, p, rounds); rerunning
appends only missing cells and canonicalizes row order, so an
interrupted sweep resumes to the same final file.  Per cell, sampling
stops early once at least 400 failures are seen in every measured basis
(relative error near 5%) or the shot budget is exhausted.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
Environment variables ``ERASIM_SEED`` and ``ERASIM_OUTPUT_PATH``
override the corresponding config fields; nothing else is overridable
from the environment.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import zlib
from dataclasses import dataclass, field

import numpy as np

from erasim import analysis, capacity, circuit, decoder
from erasim.lattice import build_layout
from erasim.placement import (
    ArchitectureSpec,
    LinePattern,
    erasure_budget,
    max_full_lines,
    optimized_placement,
    pattern_placement,
    random_placement,
)

CSV_HEADER = [
    "model",
    "d",
    "f_e",
    "strategy",
    "seed",
    "p",
    "rounds",
    "shots",
    "failures_x",
    "failures_z",
    "failures_combined",
    "flag_rate_mean",
]
KEY_COLS = ("model", "d", "f_e", "strategy", "seed", "p", "rounds")
EARLY_STOP_FAILURES = 400
CHUNK = circuit.SAMPLE_BLOCK

LINE_STRATEGIES = (
    "rows",
    "cols",
    "diagonals",
    "cross",
    "alternating_lines",
    "consecutive_lines",
)
STRATEGIES = ("optimized", "random") + LINE_STRATEGIES


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Flat sweep description parsed from ``key = value`` text."""

    distances: list
    erasure_fractions: list
    strategies: list
    physical_error_rates: list
    shots: int
    rounds: object = "auto"  # int or "auto" (= d)
    model: str = "circuit"
    basis: str = "both"
    seed: int = 0
    defect_rate: float = 0.0
    output_path: str = "results.csv"

    def validate(self):
        def check(cond, path, msg):
            if not cond:
                raise ConfigError(f"{path}: {msg}")

        check(len(self.distances) > 0, "distances", "must be non-empty")
        check(
            all(isinstance(d, int) and d % 2 == 1 and 3 <= d <= 15 for d in self.distances),
            "distances",
            "entries must be odd integers in [3, 15]",
        )
        check(len(self.erasure_fractions) > 0, "erasure_fractions", "must be non-empty")
        check(
            all(0.0 <= f <= 1.0 for f in self.erasure_fractions),
            "erasure_fractions",
            "entries must lie in [0, 1]",
        )
        check(len(self.strategies) > 0, "strategies", "must be non-empty")
        for s in self.strategies:
            check(s in STRATEGIES, "strategies", f"unknown strategy {s!r}")
        check(
            len(self.physical_error_rates) > 0,
            "physical_error_rates",
            "must be non-empty",
        )
        check(
            all(0.0 <= p <= 0.5 for p in self.physical_error_rates),
            "physical_error_rates",
            "entries must lie in [0, 0.5]",
        )
        check(self.shots >= 1, "shots", "must be >= 1")
        check(
            self.rounds == "auto" or (isinstance(self.rounds, int) and self.rounds >= 1),
            "rounds",
            'must be "auto" or a positive integer',
        )
        check(self.model in ("circuit", "capacity"), "model", "must be circuit or capacity")
        check(self.basis in ("Z", "X", "both"), "basis", "must be Z, X or both")
        check(0.0 <= self.defect_rate < 1.0, "defect_rate", "must lie in [0, 1)")
        return self


def parse_config(path: str) -> ExperimentConfig:
    """Read a flat ``key = value`` config file (lists comma-separated)."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    raw = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected key = value")
            k, v = (part.strip() for part in line.split("=", 1))
            raw[k] = v
    known = set(ExperimentConfig.__dataclass_fields__)
    for k in raw:
        if k not in known:
            raise ConfigError(f"{k}: unknown config field")

    def ints(v):
        return [int(x) for x in v.split(",") if x.strip()]

    def floats(v):
        return [float(x) for x in v.split(",") if x.strip()]

    try:
        cfg = ExperimentConfig(
            distances=ints(raw.get("distances", "")),
            erasure_fractions=floats(raw.get("erasure_fractions", "")),
            strategies=[s.strip() for s in raw.get("strategies", "").split(",") if s.strip()],
            physical_error_rates=floats(raw.get("physical_error_rates", "")),
            shots=int(raw.get("shots", "0")),
            rounds=(
                "auto"
                if raw.get("rounds", "auto").strip() == "auto"
                else int(raw["rounds"])
            ),
            model=raw.get("model", "circuit"),
            basis=raw.get("basis", "both"),
            seed=int(raw.get("seed", "0")),
            defect_rate=float(raw.get("defect_rate", "0")),
            output_path=raw.get("output_path", "results.csv"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if "ERASIM_SEED" in os.environ:
        cfg.seed = int(os.environ["ERASIM_SEED"])
    if "ERASIM_OUTPUT_PATH" in os.environ:
        cfg.output_path = os.environ["ERASIM_OUTPUT_PATH"]
    return cfg.validate()


def make_placement(d: int, f_e: float, strategy: str, seed: int) -> ArchitectureSpec:
    """Build the placement for one sweep cell."""
    if strategy == "optimized":
        return optimized_placement(d, f_e)
    if strategy == "random":
        return random_placement(d, f_e, seed)
    budget = erasure_budget(d, f_e)
    # One full line costs d qubits; a cross of c rows plus c cols costs
    # 2cd - c^2 (the overlap is shared).
    count = max_full_lines(d, budget) if strategy == "cross" else budget // d
    if count < 1:
        raise ConfigError(
            f"strategies: {strategy} needs f_e budget for at least one full line"
        )
    return pattern_placement(d, LinePattern(strategy, count))


def cell_seed(base_seed: int, key: tuple) -> int:
    """Deterministic per-cell seed decorrelating sweep cells."""
    tag = zlib.crc32("|".join(map(str, key)).encode())
    return (base_seed * 1000003 + tag) % (2**31 - 1)


def run_cell(model, d, f_e, strategy, p, rounds, basis, shots, seed,
             spec=None, progress=None):
    """Run one sweep cell with early stopping; returns a CSV row dict."""
    sd = cell_seed(seed, (model, d, f_e, strategy, p, rounds))
    layout = build_layout(d)
    if spec is None:
        spec = make_placement(d, f_e, strategy, sd)
    r = d if rounds == "auto" else rounds
    bases = ["Z", "X"] if basis == "both" else [basis]

    fails = {"Z": 0, "X": 0}
    done = 0
    flag_sum = 0.0
    flag_shots = 0
    if model == "capacity":
        decoders = None
        if p > 0:
            gz, gx, _ = capacity.capacity_graphs(layout, spec, p)
            decoders = {"Z": decoder.BatchDecoder(gz), "X": decoder.BatchDecoder(gx)}
        offset = 0
        while done < shots:
            bs = min(CHUNK, shots - done)
            fx, fz, fr = capacity.capacity_sample(
                layout, spec, p, bs, sd, block_offset=offset, decoders=decoders
            )
            fails["X"] += fx
            fails["Z"] += fz
            flag_sum += fr * bs
            flag_shots += bs
            done += bs
            offset += 1
            if progress:
                progress(done, fails)
            if all(fails[b] >= EARLY_STOP_FAILURES for b in bases):
                break
        shots_used = {b: done for b in bases}
    else:
        shots_used = {}
        for b in bases:
            circ = circuit.build_memory_circuit(
                layout, spec, circuit.NoiseModel.from_p(p), r, b
            )
            graphs = circuit.build_decoding_graphs(circ)[:2]
            done = 0
            offset = 0
            while done < shots:
                bs = min(CHUNK, shots - done)
                batch = circuit.sample_shots(circ, bs, sd, block_offset=offset)
                res = decoder.decode_batch(graphs, batch)
                fails[b] += res["failures_z"] if b == "Z" else res["failures_x"]
                if circ.n_flags:
                    flag_sum += batch.flags.mean() * bs
                    flag_shots += bs
                done += bs
                offset += 1
                if progress:
                    progress(done, fails)
                if fails[b] >= EARLY_STOP_FAILURES:
                    break
            shots_used[b] = done

    n = min(shots_used.values())
    rates = {b: fails[b] / shots_used[b] for b in bases}
    if basis == "both":
        comb_rate = 1.0 - (1.0 - rates["Z"]) * (1.0 - rates["X"])
    else:
        comb_rate = rates[bases[0]]
    return {
        "model": model,
        "d": d,
        "f_e": f_e,
        "strategy": strategy,
        "seed": seed,
        "p": p,
        "rounds": r if model == "circuit" else 1,
        "shots": n,
        "failures_x": fails["X"] if "X" in bases else 0,
        "failures_z": fails["Z"] if "Z" in bases else 0,
        "failures_combined": int(round(comb_rate * n)),
        "flag_rate_mean": flag_sum / flag_shots if flag_shots else 0.0,
    }


def _row_key(row: dict) -> tuple:
    return tuple(str(row[k]) for k in KEY_COLS)


def read_rows(path: str):
    if not os.path.exists(path):
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_rows(path: str, rows):
    rows = sorted(rows, key=_row_key)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        w.writeheader()
        for row in rows:
            w.writerow({k: row[k] for k in CSV_HEADER})
    os.replace(tmp, path)


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    rows = read_rows(cfg.output_path)
    have = {_row_key(r) for r in rows}
    cells = [
        (cfg.model, d, f_e, strat, p, cfg.rounds)
        for d in cfg.distances
        for f_e in cfg.erasure_fractions
        for strat in cfg.strategies
        for p in cfg.physical_error_rates
    ]
    for model, d, f_e, strat, p, rounds in cells:
        r = d if rounds == "auto" else rounds
        probe = {
            "model": model,
            "d": d,
            "f_e": f_e,
            "strategy": strat,
            "seed": cfg.seed,
            "p": p,
            "rounds": r if model == "circuit" else 1,
        }
        if _row_key(probe) in have:
            print(f"skip {probe!r} (already present)", file=sys.stderr)
            continue
        row = run_cell(model, d, f_e, strat, p, rounds, cfg.basis, cfg.shots, cfg.seed)
        lo, hi = analysis.wilson_interval(row["failures_combined"], row["shots"])
        print(
            f"cell model={model} d={d} f_e={f_e} strategy={strat} p={p}: "
            f"{row['failures_combined']}/{row['shots']} failures, "
            f"95% CI [{lo:.3g}, {hi:.3g}]",
            file=sys.stderr,
        )
        rows.append(row)
        have.add(_row_key(row))
        write_rows(cfg.output_path, rows)
    print(f"wrote {cfg.output_path} ({len(rows)} rows)")
    return 0


def cmd_place(args) -> int:
    spec = make_placement(args.d, args.fe, args.strategy, args.seed)
    out = json.dumps(spec.to_dict(), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out)
    return 0


def cmd_paths(args) -> int:
    imp = capacity.importance_map(args.d)
    lines = ["row,col,importance,vertical_paths_through,horizontal_paths_through"]
    for r in range(args.d):
        for c in range(args.d):
            lines.append(
                f"{r},{c},{imp.values[r, c]:.10g},"
                f"{imp.vertical_counts[r, c]},{imp.horizontal_counts[r, c]}"
            )
    text = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_capacity(args) -> int:
    k = max_full_lines(args.d, erasure_budget(args.d, args.fe))
    exact, leading = capacity.surface_union_bound_pl(args.d, k, args.p)
    bound, closed = capacity.deff_lower_bound(args.d, args.fe, args.p)
    out = {
        "d": args.d,
        "f_e": args.fe,
        "p": args.p,
        "full_lines": k,
        "union_bound_exact": exact,
        "union_bound_leading": leading,
        "deff_lower_bound": bound,
        "deff_lower_bound_closed_form": closed,
    }
    print(json.dumps(out, indent=2))
    return 0


def cmd_sample(args) -> int:
    row = run_cell(
        args.model,
        args.d,
        args.fe,
        args.strategy,
        args.p,
        "auto" if args.rounds == "auto" else int(args.rounds),
        args.basis,
        args.shots,
        args.seed,
    )
    if args.out:
        rows = read_rows(args.out)
        have = {_row_key(r) for r in rows}
        if _row_key(row) not in have:
            rows.append(row)
        write_rows(args.out, rows)
        print(f"wrote {args.out}")
    else:
        print(",".join(CSV_HEADER))
        print(",".join(str(row[k]) for k in CSV_HEADER))
    return 0


def _rows_to_points(rows, model):
    pts = []
    for r in rows:
        if r["model"] != model:
            continue
        pts.append(
            analysis.DataPoint(
                d=int(r["d"]),
                f_e=float(r["f_e"]),
                strategy_tag=r["strategy"],
                p=float(r["p"]),
                shots=int(r["shots"]),
                failures_x=int(r["failures_x"]),
                failures_z=int(r["failures_z"]),
                failures_combined=int(r["failures_combined"]),
            )
        )
    return pts


def cmd_fit(args) -> int:
    if not os.path.exists(args.infile):
        print(f"input not found: {args.infile}", file=sys.stderr)
        return 3
    rows = read_rows(args.infile)
    pts = _rows_to_points(rows, args.model)
    if not pts:
        print("no data rows for model " + args.model, file=sys.stderr)
        return 3
    groups: dict = {}
    for pt in pts:
        groups.setdefault((pt.f_e, pt.strategy_tag), {}).setdefault(pt.d, []).append(pt)
    results = []
    for (f_e, strat), by_d in sorted(groups.items()):
        p_th_coarse = analysis.coarse_threshold(by_d, args.basis)
        fits = {}
        for d, ptlist in sorted(by_d.items()):
            usable = analysis.below_threshold_points(ptlist, p_th_coarse)
            if len([pt for pt in usable if pt.rate(args.basis) > 0]) < 3:
                usable = ptlist  # fall back to the full sweep
            try:
                fits[d] = analysis.fit_deff(usable, args.basis)
            except ValueError as exc:
                print(f"fit d={d} f_e={f_e} {strat}: {exc}", file=sys.stderr)
        p_th = None
        if len(fits) >= 2:
            try:
                p_th = analysis.estimate_threshold(fits.values())
            except ValueError as exc:
                print(f"threshold f_e={f_e} {strat}: {exc}", file=sys.stderr)
        for d, fit in fits.items():
            results.append(
                {
                    "d": d,
                    "f_e": f_e,
                    "strategy": strat,
                    "basis": args.basis,
                    "d_eff": fit.d_eff,
                    "intercept": fit.intercept,
                    "residual": fit.residual,
                    "points_used": fit.points_used,
                    "p_th": p_th,
                }
            )
    out = json.dumps(results, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
        print(f"wrote {args.out}")
    else:
        print(out)
    return 0


def cmd_correlate(args) -> int:
    ensemble = []
    for i in range(args.placements):
        sd = cell_seed(args.seed, ("correlate", args.d, args.fe, args.p, i))
        spec = random_placement(args.d, args.fe, sd)
        row = run_cell(
            args.model, args.d, args.fe, "random", args.p, "auto", "both",
            args.shots, sd, spec=spec,
        )
        rates = {
            "Z": row["failures_z"] / row["shots"],
            "X": row["failures_x"] / row["shots"],
            "combined": row["failures_combined"] / row["shots"],
        }
        ensemble.append((spec, rates))
        print(f"placement {i + 1}/{args.placements} done", file=sys.stderr)
    cmap = analysis.placement_correlation(ensemble)
    out = {
        "d": cmap.d,
        "f_e": args.fe,
        "p": args.p,
        "placements": args.placements,
        "correlation": {b: np.nan_to_num(v, nan=0.0).tolist() for b, v in cmap.values.items()},
        "degenerate_sites": cmap.degenerate.tolist(),
        "placements_list": [sorted(map(list, spec.placement)) for spec, _ in ensemble],
        "rates": [r for _, r in ensemble],
    }
    text = json.dumps(out)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_cost(args) -> int:
    fes = [float(x) for x in args.fe.split(",")]
    ds = [int(x) for x in args.d.split(",")]
    lines = ["d,f_e,n_erasure,transmons,yield"]
    for d in ds:
        for f_e in fes:
            n = analysis.transmon_cost(d, f_e)
            y = analysis.chip_yield(n, args.defect_rate)
            lines.append(f"{d},{f_e},{erasure_budget(d, f_e)},{n},{y:.10g}")
    if args.p is not None and args.p_th is not None:
        pts, _, _ = analysis.scaling_projection(args.p, args.p_th, ds, fes)
        lines.append("")
        lines.append("d,f_e,transmons,p_l_upper_estimate,p_l_lower_estimate")
        for pt in pts:
            lines.append(
                f"{pt.d},{pt.f_e},{pt.cost},"
                f"{pt.p_l_upper_estimate:.10g},{pt.p_l_lower_estimate:.10g}"
            )
    text = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="erasim",
        description="Surface-code memory simulations on hybrid erasure architectures",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a config-driven sweep")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("place", help="emit a placement as JSON")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--fe", type=float, required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="optimized")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_place)

    p = sub.add_parser("paths", help="emit the path-importance map as CSV")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_paths)

    p = sub.add_parser("capacity", help="analytic capacity-model bounds")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--fe", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(fn=cmd_capacity)

    p = sub.add_parser("sample", help="run one Monte Carlo cell")
    p.add_argument("--model", choices=("circuit", "capacity"), default="circuit")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--fe", type=float, required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="optimized")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--rounds", default="auto")
    p.add_argument("--basis", choices=("Z", "X", "both"), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("fit", help="fit effective distances and thresholds")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--model", choices=("circuit", "capacity"), default="circuit")
    p.add_argument("--basis", choices=("Z", "X", "combined"), default="combined")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("correlate", help="random-placement correlation map")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--fe", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--placements", type=int, default=200)
    p.add_argument("--shots", type=int, default=100000)
    p.add_argument("--model", choices=("circuit", "capacity"), default="circuit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_correlate)

    p = sub.add_parser("cost", help="transmon cost, yield and projections")
    p.add_argument("--d", required=True, help="comma-separated distances")
    p.add_argument("--fe", required=True, help="comma-separated erasure fractions")
    p.add_argument("--defect-rate", type=float, default=0.0)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--p-th", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_cost)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
