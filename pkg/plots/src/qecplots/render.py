"""Render simulation sweep outputs (CSV/JSON) into static figures.

Rendering is a pure function of the input files and the PlotSpec: the
style is fixed, no timestamps or randomness enter the image, so the same
inputs always produce byte-identical PNGs.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("curves", "deff", "frontier", "scaling", "heatmap", "placement")

_STYLE = {
    "figure.figsize": (7.0, 5.0),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


class SchemaError(ValueError):
    """Input file does not match the expected schema."""


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: input path, figure kind, output image path."""

    kind: str
    infile: str
    out: str
    basis: str = "combined"
    defect_rate: float = 1e-3
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown plot kind {self.kind!r}; choose from {KINDS}")
        if self.basis not in ("Z", "X", "combined"):
            raise SchemaError(f"unknown basis {self.basis!r}")


def wilson_interval(failures: int, shots: int, z: float = 1.96):
    """95% Wilson score interval for a binomial rate."""
    if shots <= 0:
        return 0.0, 1.0
    ph = failures / shots
    den = 1 + z * z / shots
    center = (ph + z * z / (2 * shots)) / den
    half = z * math.sqrt(ph * (1 - ph) / shots + z * z / (4 * shots * shots)) / den
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# Input readers
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("d", "f_e", "strategy", "p", "shots",
                 "failures_x", "failures_z", "failures_combined")


def read_sweep_csv(path: str):
    """Read a sweep CSV into typed row dicts; validates required columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        for col in SWEEP_COLUMNS:
            if col not in names:
                raise SchemaError(f"missing column {col!r} in {path}")
        rows = []
        for raw in reader:
            rows.append(
                {
                    "d": int(raw["d"]),
                    "f_e": float(raw["f_e"]),
                    "strategy": raw["strategy"],
                    "p": float(raw["p"]),
                    "shots": int(raw["shots"]),
                    "failures_x": int(raw["failures_x"]),
                    "failures_z": int(raw["failures_z"]),
                    "failures_combined": int(raw["failures_combined"]),
                }
            )
    if not rows:
        raise SchemaError(f"no data rows in {path}")
    return rows


def read_fit_json(path: str):
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not data:
        raise SchemaError(f"no data in {path} (expected a non-empty fit list)")
    for key in ("d", "f_e", "strategy", "d_eff"):
        if key not in data[0]:
            raise SchemaError(f"missing column {key!r} in {path}")
    return data


def read_correlation_json(path: str):
    with open(path) as fh:
        data = json.load(fh)
    for key in ("d", "correlation", "degenerate_sites"):
        if key not in data:
            raise SchemaError(f"missing column {key!r} in {path}")
    if not data["correlation"]:
        raise SchemaError(f"no data in {path} (empty correlation maps)")
    return data


def read_cost_csv(path: str):
    """Read the cost CSV; returns (cost_rows, projection_rows).

    The file holds one or two CSV sections separated by a blank line:
    ``d,f_e,n_erasure,transmons,yield`` and, optionally,
    ``d,f_e,transmons,p_l_upper_estimate,p_l_lower_estimate``.
    """
    with open(path) as fh:
        sections = [s for s in fh.read().split("\n\n") if s.strip()]
    if not sections:
        raise SchemaError(f"no data rows in {path}")

    def parse(text, required):
        reader = csv.DictReader(text.strip().splitlines())
        names = reader.fieldnames or []
        for col in required:
            if col not in names:
                raise SchemaError(f"missing column {col!r} in {path}")
        return [
            {k: (row[k] if k == "strategy" else float(row[k])) for k in names}
            for row in reader
        ]

    cost = parse(sections[0], ("d", "f_e", "transmons", "yield"))
    proj = []
    if len(sections) > 1:
        proj = parse(
            sections[1],
            ("d", "f_e", "transmons", "p_l_upper_estimate", "p_l_lower_estimate"),
        )
    if not cost:
        raise SchemaError(f"no data rows in {path}")
    return cost, proj


# ---------------------------------------------------------------------------
# Renderers (one per kind)
# ---------------------------------------------------------------------------


def _groups(rows, keys):
    out = {}
    for row in rows:
        out.setdefault(tuple(row[k] for k in keys), []).append(row)
    return dict(sorted(out.items()))


def _rate_with_bars(rows, basis):
    col = {"Z": "failures_z", "X": "failures_x", "combined": "failures_combined"}[basis]
    p = np.array([r["p"] for r in rows])
    order = np.argsort(p)
    rows = [rows[i] for i in order]
    p = p[order]
    rate = np.array([r[col] / r["shots"] for r in rows])
    los, his = zip(*(wilson_interval(r[col], r["shots"]) for r in rows))
    return p, rate, np.array(los), np.array(his)


def _plot_curves(rows, basis, ax):
    for (d, f_e, strat), grp in _groups(rows, ("d", "f_e", "strategy")).items():
        p, rate, lo, hi = _rate_with_bars(grp, basis)
        keep = rate > 0
        ax.errorbar(
            p[keep],
            rate[keep],
            yerr=np.vstack([(rate - lo)[keep], (hi - rate)[keep]]),
            marker="o",
            capsize=3,
            label=f"d={d}, $f_e$={f_e:g}, {strat}",
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("physical error rate p")
    ax.set_ylabel(f"logical error rate ({basis})")
    ax.legend(fontsize=8)


def render_curves(spec: PlotSpec, fig):
    rows = read_sweep_csv(spec.infile)
    ax = fig.subplots()
    _plot_curves(rows, spec.basis, ax)
    ax.set_title("Logical error rate vs physical error rate")


def render_placement(spec: PlotSpec, fig):
    """Same curves, grouped per placement strategy for direct comparison."""
    rows = read_sweep_csv(spec.infile)
    ax = fig.subplots()
    for (strat, d, f_e), grp in _groups(rows, ("strategy", "d", "f_e")).items():
        p, rate, lo, hi = _rate_with_bars(grp, spec.basis)
        keep = rate > 0
        ax.errorbar(
            p[keep],
            rate[keep],
            yerr=np.vstack([(rate - lo)[keep], (hi - rate)[keep]]),
            marker="s",
            capsize=3,
            label=f"{strat} (d={d}, $f_e$={f_e:g})",
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("physical error rate p")
    ax.set_ylabel(f"logical error rate ({spec.basis})")
    ax.set_title("Placement strategy comparison")
    ax.legend(fontsize=8)


def render_deff(spec: PlotSpec, fig):
    """Effective distance and threshold vs erasure fraction."""
    fits = read_fit_json(spec.infile)
    ax1, ax2 = fig.subplots(1, 2)
    by_d = _groups(fits, ("d",))
    for (d,), grp in by_d.items():
        grp = sorted(grp, key=lambda r: r["f_e"])
        ax1.plot([r["f_e"] for r in grp], [r["d_eff"] for r in grp],
                 marker="o", label=f"d={int(d)}")
    ax1.set_xlabel("erasure fraction $f_e$")
    ax1.set_ylabel("effective distance $d_{eff}$")
    ax1.legend(fontsize=8)

    th = sorted(
        {
            (r["f_e"], r["p_th"])
            for r in fits
            if r.get("p_th") is not None and math.isfinite(r["p_th"])
        }
    )
    if th:
        ax2.plot([t[0] for t in th], [t[1] for t in th], marker="D", color="tab:red")
    ax2.set_xlabel("erasure fraction $f_e$")
    ax2.set_ylabel("threshold $p_{th}$")
    fig.suptitle("Effective distance and threshold vs erasure fraction")


def render_frontier(spec: PlotSpec, fig):
    """Transmon cost vs projected logical rate over a yield gradient."""
    cost, proj = read_cost_csv(spec.infile)
    if not proj:
        raise SchemaError(
            f"no data in {spec.infile}: frontier needs the projection section"
        )
    ax = fig.subplots()
    ns = [r["transmons"] for r in proj]
    uppers = [r["p_l_upper_estimate"] for r in proj]
    lowers = [r["p_l_lower_estimate"] for r in proj]
    ymin = max(1e-16, 0.3 * min(min(uppers), min(lowers)))
    n_lo, n_hi = 0.9 * min(ns), 1.1 * max(ns)

    # Yield gradient background: chip yield falls with transmon count.
    grid = np.linspace(n_lo, n_hi, 256)
    gradient = (1.0 - spec.defect_rate) ** grid
    ax.imshow(
        gradient[np.newaxis, :],
        extent=(n_lo, n_hi, ymin, 2.0),
        aspect="auto",
        cmap="YlGn",
        vmin=0.0,
        vmax=1.0,
        alpha=0.5,
        zorder=0,
    )
    for (f_e,), grp in _groups(proj, ("f_e",)).items():
        grp = sorted(grp, key=lambda r: r["transmons"])
        n = [r["transmons"] for r in grp]
        ax.plot(n, [r["p_l_upper_estimate"] for r in grp], marker="o",
                zorder=2, label=f"$f_e$={f_e:g} (line-count exponent)")
        ax.plot(n, [r["p_l_lower_estimate"] for r in grp], marker="^",
                linestyle="--", zorder=2, label=f"$f_e$={f_e:g} (bound exponent)")
    ax.set_yscale("log")
    ax.set_ylim(ymin, 2.0)
    ax.set_xlim(n_lo, n_hi)
    ax.set_xlabel(f"transmon count (yield gradient at defect rate "
                  f"{spec.defect_rate:g})")
    ax.set_ylabel("projected logical error rate")
    ax.set_title("Cost vs projected performance")
    ax.legend(fontsize=7)


def render_scaling(spec: PlotSpec, fig):
    """Projected p_L envelopes vs distance per erasure fraction."""
    _, proj = read_cost_csv(spec.infile)
    if not proj:
        raise SchemaError(
            f"no data in {spec.infile}: scaling needs the projection section"
        )
    ax = fig.subplots()
    for (f_e,), grp in _groups(proj, ("f_e",)).items():
        grp = sorted(grp, key=lambda r: r["d"])
        d = [r["d"] for r in grp]
        up = [r["p_l_upper_estimate"] for r in grp]
        lo = [r["p_l_lower_estimate"] for r in grp]
        (line,) = ax.plot(d, up, marker="o", label=f"$f_e$={f_e:g}")
        ax.plot(d, lo, marker="^", linestyle="--", color=line.get_color())
        ax.fill_between(d, lo, up, color=line.get_color(), alpha=0.15)
    ax.set_yscale("log")
    ax.set_xlabel("code distance d")
    ax.set_ylabel("projected logical error rate envelope")
    ax.set_title("Scaling projections")
    ax.legend(fontsize=8)


def render_heatmap(spec: PlotSpec, fig):
    """Three per-site correlation heatmaps (Z, X, combined)."""
    data = read_correlation_json(spec.infile)
    d = int(data["d"])
    degenerate = np.array(data["degenerate_sites"], dtype=bool)
    axes = fig.subplots(1, 3)
    for ax, basis in zip(axes, ("Z", "X", "combined")):
        if basis not in data["correlation"]:
            raise SchemaError(f"missing column {basis!r} in {spec.infile}")
        vals = np.array(data["correlation"][basis], dtype=float)
        if vals.shape != (d, d):
            raise SchemaError(
                f"correlation map {basis!r} has shape {vals.shape}, want ({d}, {d})"
            )
        im = ax.imshow(vals, cmap="coolwarm", vmin=-1, vmax=1)
        for r in range(d):
            for c in range(d):
                if degenerate[r, c]:
                    ax.text(c, r, "x", ha="center", va="center", fontsize=7)
        ax.set_title(basis)
        ax.set_xticks(range(d))
        ax.set_yticks(range(d))
        ax.grid(False)
    fig.colorbar(im, ax=list(axes), shrink=0.7,
                 label="corr(erasure present, $p_L$)")
    fig.suptitle(
        f"Site-wise erasure/failure correlation (d={d}, "
        f"{data.get('placements', '?')} placements)"
    )


_RENDERERS = {
    "curves": render_curves,
    "deff": render_deff,
    "frontier": render_frontier,
    "scaling": render_scaling,
    "heatmap": render_heatmap,
    "placement": render_placement,
}


def render(spec: PlotSpec) -> str:
    """Render one figure; returns the written image path."""
    if not os.path.exists(spec.infile):
        raise FileNotFoundError(f"input not found: {spec.infile}")
    with plt.rc_context(_STYLE):
        fig = plt.figure()
        try:
            _RENDERERS[spec.kind](spec, fig)
            fig.savefig(spec.out, metadata={"Software": "qecplots"})
        finally:
            plt.close(fig)
    return spec.out
