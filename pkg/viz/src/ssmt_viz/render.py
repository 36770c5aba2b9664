"""Deterministic figure rendering from exported files.

Figures are pure views: every plotted array is read from the input files,
never recomputed, and the sha256 of each plotted array is returned so
callers can assert provenance.  Identical inputs produce identical image
bytes (fixed styles, deterministic layout, no timestamps in the output).
"""
from __future__ import annotations

import hashlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .layout import segment_geometry
from .spec import (
    FigureSpec,
    SchemaError,
    load_convergence,
    load_overlay,
    load_report,
    load_spine_csv,
    load_tree,
)

_RC = {
    "figure.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.25,
    "svg.hashsalt": "ssmt-viz",
}


def _checksum(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(np.asarray(a, dtype=float)).tobytes())
    return h.hexdigest()


def _save(fig, out_path: str):
    # a None Software entry strips the only non-deterministic PNG chunk
    fig.savefig(out_path, metadata={"Software": None})
    plt.close(fig)


def render(spec: FigureSpec, out_path: str) -> dict:
    """Render one figure; returns the output path and the checksums of
    the arrays that were drawn."""
    with plt.rc_context(_RC):
        if spec.kind == "tree3d":
            return _render_tree3d(spec, out_path)
        if spec.kind == "level_overlay":
            return _render_level_overlay(spec, out_path)
        if spec.kind == "spine":
            return _render_spine(spec, out_path)
        if spec.kind == "convergence":
            return _render_convergence(spec, out_path)
        if spec.kind == "report_table":
            return _render_report_table(spec, out_path)
    raise SchemaError(f"unknown figure kind {spec.kind!r}")


def _polyline_arrays(tree):
    arrays = {}
    for node in tree["nodes"]:
        arrays[tuple(node["label"])] = np.asarray(node["polyline"], dtype=float)
    return arrays


def _render_tree3d(spec, out_path):
    tree = load_tree(spec.inputs)
    geometry, _, _ = segment_geometry(tree["nodes"])
    fig = plt.figure(figsize=(6, 5))
    ax = fig.add_subplot(projection="3d")
    for lbl in sorted(geometry):
        seg = geometry[lbl]
        ax.plot(seg[:, 0], seg[:, 1], seg[:, 2],
                color="tab:blue" if lbl else "tab:red",
                lw=1.4 if not lbl else 0.9)
    ax.set_zlabel("decoration")
    ax.set_title("decorated tree, planar embedding with size as height")
    ax.view_init(elev=spec.style.get("elev", 25), azim=spec.style.get("azim", -60))
    _save(fig, out_path)
    polys = _polyline_arrays(tree)
    return {"path": out_path,
            "checksums": {"tree": _checksum(*(polys[k] for k in sorted(polys)))}}


def _render_level_overlay(spec, out_path):
    tree = load_tree(spec.inputs)
    overlay = load_overlay(spec.inputs)
    geometry, radii, sectors = segment_geometry(tree["nodes"])
    polys = _polyline_arrays(tree)
    fig, ax = plt.subplots(figsize=(6, 5))
    spine_chain = set()
    if overlay.get("spine"):
        spine_chain = {tuple(lbl) for lbl in overlay["spine"]["chain"]}
    for lbl in sorted(geometry):
        seg = geometry[lbl]
        on_spine = lbl in spine_chain
        ax.plot(seg[:, 0], seg[:, 1],
                color="tab:orange" if on_spine else "0.6",
                lw=1.8 if on_spine else 0.8, zorder=2 if on_spine else 1)
    pts = []
    for pt in overlay["points"]:
        lbl = tuple(pt["label"])
        node = next(n for n in tree["nodes"] if tuple(n["label"]) == lbl)
        frac = pt["age"] / max(node["lifetime"], 1e-12)
        r0, r1 = radii[lbl]
        angle, _ = sectors[lbl]
        r = r0 + (r1 - r0) * min(frac, 1.0)
        pts.append([r * np.cos(angle), r * np.sin(angle)])
    if pts:
        pts = np.asarray(pts)
        ax.scatter(pts[:, 0], pts[:, 1], color="red", s=22, zorder=3,
                   label=f"first hits of level {overlay.get('level')}")
        ax.legend(loc="upper right")
    ax.set_aspect("equal")
    ax.set_title("level set and first hitting line")
    _save(fig, out_path)
    hit_arr = np.asarray([[pt["age"]] for pt in overlay["points"]], dtype=float)
    return {"path": out_path,
            "checksums": {
                "tree": _checksum(*(polys[k] for k in sorted(polys))),
                "overlay": _checksum(hit_arr if hit_arr.size else np.zeros(0)),
            }}


def _render_spine(spec, out_path):
    data = load_spine_csv(spec.inputs)
    fig, ax = plt.subplots(figsize=(6, 3.4))
    ax.plot(data[:, 0], data[:, 1], color="tab:orange", lw=1.4)
    ax.axhline(data[-1, 1], color="red", lw=0.7, ls="--")
    ax.set_xlabel("distance from the root")
    ax.set_ylabel("decoration")
    ax.set_title("decoration along the spine to the marked point")
    _save(fig, out_path)
    return {"path": out_path, "checksums": {"spine": _checksum(data)}}


def _render_convergence(spec, out_path):
    diag = load_convergence(spec.inputs)
    x = np.asarray(diag["x"], dtype=float)
    n_dev = np.asarray(diag["n_dev"], dtype=float)
    l_dev = np.asarray(diag["l_dev"], dtype=float)
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.loglog(x, n_dev, "o-", label="hit-count deviation")
    ax.loglog(x, l_dev, "s-", label="local-time deviation")
    ax.invert_xaxis()
    ax.set_xlabel("level x")
    ax.set_ylabel("mean |normalized mass - proxy|")
    ax.set_title("approach to the harmonic measure")
    ax.legend()
    _save(fig, out_path)
    return {"path": out_path,
            "checksums": {"report": _checksum(x, n_dev, l_dev)}}


def _render_report_table(spec, out_path):
    report = load_report(spec.inputs)
    rows = []
    for c in report["checks"]:
        value = c.get("value")
        if isinstance(value, list):
            value = ", ".join(f"{v:.3g}" for v in value)
        elif isinstance(value, float):
            value = f"{value:.6g}"
        target = c.get("target")
        target = "" if target is None else f"{target:.6g}"
        rows.append([c["name"], str(value), target,
                     "PASS" if c["pass"] else "FAIL"])
    fig, ax = plt.subplots(figsize=(8.2, 0.28 * len(rows) + 1.2))
    ax.axis("off")
    table = ax.table(cellText=rows,
                     colLabels=["check", "value", "target", "status"],
                     loc="center", cellLoc="left", colLoc="left")
    table.auto_set_font_size(False)
    table.set_fontsize(7.5)
    table.auto_set_column_width([0, 1, 2, 3])
    for i, row in enumerate(rows):
        color = "#d8f2d8" if row[3] == "PASS" else "#f6cdcd"
        table[i + 1, 3].set_facecolor(color)
    ax.set_title("verification report", pad=10)
    _save(fig, out_path)
    passes = np.asarray([1.0 if c["pass"] else 0.0 for c in report["checks"]])
    return {"path": out_path, "checksums": {"report": _checksum(passes)}}
