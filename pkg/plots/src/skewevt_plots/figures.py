"""Render CDF overlays, log-log decay plots, and density profiles."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURE_KINDS = ("cdf-overlay", "loglog-decay", "density-profile")

# fixed canvas and fonts: byte-stable output on one platform
matplotlib.rcParams.update({
    "figure.figsize": (6.4, 4.4),
    "figure.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "svg.hashsalt": "skewevt-plots",
})


class MissingColumnError(KeyError):
    def __init__(self, column, path):
        self.column = column
        super().__init__(f"column {column!r} missing from {path}")


class EmptyInputError(ValueError):
    def __init__(self, path):
        super().__init__(f"no data rows in {path}")


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: input CSV(s), figure kind, output path, label overrides."""

    inputs: Tuple[str, ...]
    kind: str
    output: str
    title: Optional[str] = None
    xlabel: Optional[str] = None
    ylabel: Optional[str] = None
    summary: Optional[str] = None  # experiment JSON; supplies fitted slopes

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {FIGURE_KINDS}")
        if not self.inputs:
            raise ValueError("need at least one input CSV")


@dataclass
class FigureResult:
    """Where the figure went and what was annotated on it."""

    path: str
    annotations: Dict[str, object] = field(default_factory=dict)


def read_table(path, required: Sequence[str]) -> Dict[str, np.ndarray]:
    """Load named CSV columns as float arrays; strict about the contract."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        for col in required:
            if col not in names:
                raise MissingColumnError(col, path)
        rows = list(reader)
    if not rows:
        raise EmptyInputError(path)
    out = {}
    for col in names:
        out[col] = np.array([float(r[col]) for r in rows])
    return out


def render(spec: FigureSpec) -> FigureResult:
    if spec.kind == "cdf-overlay":
        return _render_cdf_overlay(spec)
    if spec.kind == "loglog-decay":
        return _render_loglog_decay(spec)
    return _render_density_profile(spec)


def _save(fig, spec: FigureSpec) -> None:
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    kwargs = {}
    if out.suffix.lower() == ".svg":
        kwargs["metadata"] = {"Date": None}  # drop the embedded timestamp
    fig.savefig(out, **kwargs)
    plt.close(fig)


def _render_cdf_overlay(spec: FigureSpec) -> FigureResult:
    t = read_table(spec.inputs[0],
                   ["v", "empirical_cdf", "theoretical_cdf", "abs_diff"])
    ks = float(np.max(t["abs_diff"]))
    at = int(np.argmax(t["abs_diff"]))
    fig, ax = plt.subplots()
    ax.plot(t["v"], t["empirical_cdf"], "o-", label="empirical", color="#1f77b4")
    ax.plot(t["v"], t["theoretical_cdf"], "s--", label="limit law",
            color="#d62728")
    ax.vlines(t["v"][at], min(t["empirical_cdf"][at], t["theoretical_cdf"][at]),
              max(t["empirical_cdf"][at], t["theoretical_cdf"][at]),
              color="#2ca02c", lw=2, label="KS gap")
    annotation = f"KS = {ks:.3f}"
    ax.annotate(annotation, xy=(0.02, 0.95), xycoords="axes fraction",
                va="top")
    ax.set_xlabel(spec.xlabel or "v")
    ax.set_ylabel(spec.ylabel or "P(Z_n < u_n(v))")
    ax.set_title(spec.title or "block-maximum law vs Type I limit")
    ax.legend(loc="lower right")
    ax.set_ylim(-0.05, 1.05)
    _save(fig, spec)
    return FigureResult(str(spec.output),
                        {"ks": ks, "annotation": annotation, "v_at_gap": float(t["v"][at])})


def _summary_slope(spec: FigureSpec) -> Optional[float]:
    if spec.summary is None:
        return None
    blob = json.loads(Path(spec.summary).read_text())
    outputs = blob.get("outputs", {})
    for key in ("alpha_hat_fitted", "beta_hat"):
        if outputs.get(key) is not None:
            return -float(outputs[key])  # decay exponent -> log-log slope
    return None


def _render_loglog_decay(spec: FigureSpec) -> FigureResult:
    t = read_table(spec.inputs[0], [])
    xcol = "j" if "j" in t else "n"
    if xcol not in t:
        raise MissingColumnError("j (or n)", spec.inputs[0])
    for col in ("value", "stderr"):
        if col not in t:
            raise MissingColumnError(col, spec.inputs[0])
    x, y, err = t[xcol], t["value"], t["stderr"]
    pos = y > 0
    fig, ax = plt.subplots()
    ax.errorbar(x, y, yerr=err, fmt="o", capsize=3, color="#1f77b4",
                label="estimates")
    ax.set_xscale("log")
    ax.set_yscale("log")

    annotations: Dict[str, object] = {"mode": "polynomial"}
    slope = _summary_slope(spec)
    slope_source = "results"
    if slope is None and pos.sum() >= 2:
        lx, ly = np.log(x[pos]), np.log(y[pos])
        slope = float(np.polyfit(lx, ly, 1)[0])
        slope_source = "guide"
    if pos.sum() >= 3:
        # exponential decay shows as curvature on log-log axes; compare the
        # straight-line fits in (log x, log y) vs (x, log y)
        lx, ly = np.log(x[pos]), np.log(y[pos])
        r2_poly = _r2(lx, ly)
        r2_exp = _r2(x[pos], ly)
        if r2_exp > r2_poly + 0.05:
            per_doubling = float(np.polyfit(x[pos], np.log2(y[pos]), 1)[0])
            annotations["mode"] = "super-polynomial"
            annotations["per_doubling"] = per_doubling
            label = (f"super-polynomial: {per_doubling:+.2f} per unit step "
                     "on the log2 axis")
            grid = np.linspace(float(x[pos].min()), float(x[pos].max()), 64)
            c = float(np.polyfit(x[pos], np.log2(y[pos]), 1)[1])
            ax.plot(grid, 2.0 ** (c + per_doubling * grid), "-",
                    color="#d62728", label=label)
            annotations["annotation"] = label
    if annotations["mode"] == "polynomial" and slope is not None:
        annotations["slope"] = slope
        label = f"slope {slope:+.2f} ({slope_source})"
        annotations["annotation"] = label
        grid = np.geomspace(float(x[pos].min()), float(x[pos].max()), 64)
        anchor = float(np.exp(np.log(y[pos]).mean() - slope * np.log(x[pos]).mean()))
        ax.plot(grid, anchor * grid ** slope, "-", color="#d62728", label=label)

    ax.set_xlabel(spec.xlabel or xcol)
    ax.set_ylabel(spec.ylabel or "magnitude")
    ax.set_title(spec.title or "decay with fitted guide")
    ax.legend(loc="upper right")
    _save(fig, spec)
    return FigureResult(str(spec.output), annotations)


def _r2(x: np.ndarray, y: np.ndarray) -> float:
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def _render_density_profile(spec: FigureSpec) -> FigureResult:
    t = read_table(spec.inputs[0], ["radius", "h_hat", "stderr"])
    fig, ax = plt.subplots()
    groups = t.get("target_index")
    if groups is None:
        groups = np.zeros(t["radius"].size)
    n_groups = 0
    for gid in np.unique(groups):
        sel = groups == gid
        label = f"target {int(gid)}" if np.unique(groups).size > 1 else "estimates"
        ax.errorbar(t["radius"][sel], t["h_hat"][sel], yerr=t["stderr"][sel],
                    fmt="o-", capsize=3, label=label)
        n_groups += 1
    ax.set_xscale("log")
    ax.set_xlabel(spec.xlabel or "ball radius")
    ax.set_ylabel(spec.ylabel or "local density (r^D normalization)")
    ax.set_title(spec.title or "local density vs radius")
    ax.legend(loc="best")
    _save(fig, spec)
    return FigureResult(str(spec.output), {"targets": n_groups})
