"""Deterministic planar layout of decorated trees keyed by Ulam labels.

Each node gets an angular sector split among its children by label order;
a segment runs radially outward from its attach radius.  No randomness:
the same export always lands on the same coordinates.
"""
from __future__ import annotations

import numpy as np


def assign_sectors(nodes: list) -> dict:
    """label tuple -> (angle, sector half-width), root pointing up."""
    by_label = {tuple(n["label"]): n for n in nodes}
    children: dict = {lbl: [] for lbl in by_label}
    for lbl, node in by_label.items():
        parent = node["parent"]
        if parent is not None:
            children[tuple(parent)].append(lbl)
    for kids in children.values():
        kids.sort()
    sectors = {(): (0.5 * np.pi, np.pi)}
    stack = [()]
    while stack:
        lbl = stack.pop()
        angle, width = sectors[lbl]
        kids = children[lbl]
        if not kids:
            continue
        step = width / len(kids)
        for i, kid in enumerate(kids):
            sectors[kid] = (angle - width / 2 + (i + 0.5) * step, 0.8 * step)
            stack.append(kid)
    return sectors


def segment_geometry(nodes: list):
    """Per node: (x, y, z) polyline of the decorated segment embedded in
    the plane with the decoration value as height."""
    sectors = assign_sectors(nodes)
    by_label = {tuple(n["label"]): n for n in nodes}
    radii: dict = {}
    out = {}
    for lbl in sorted(by_label, key=len):
        node = by_label[lbl]
        poly = np.asarray(node["polyline"], dtype=float)
        parent = node["parent"]
        if parent is None:
            r0, base = 0.0, np.zeros(2)
        else:
            pr = radii[tuple(parent)]
            frac = node["attach_age"] / max(by_label[tuple(parent)]["lifetime"], 1e-12)
            r0 = pr[0] + (pr[1] - pr[0]) * min(frac, 1.0)
            pa, _ = sectors[tuple(parent)]
            base = r0 * np.array([np.cos(pa), np.sin(pa)])
        angle, _ = sectors[lbl]
        length = max(poly[-1, 0], 1e-12)
        r1 = r0 + length
        radii[lbl] = (r0, r1)
        direction = np.array([np.cos(angle), np.sin(angle)])
        ts = poly[:, 0] / length
        xy = base[None, :] + (ts * length)[:, None] * direction[None, :]
        out[lbl] = np.column_stack([xy, poly[:, 1]])
    return out, radii, sectors
