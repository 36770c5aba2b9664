"""Local-time measures on decoration level sets, hitting lines, mean
formulas, harmonic-measure proxies and convergence diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constants
from .builder import CharacteristicQuadruplet, CumulantAnalysis, DecoratedTree, \
    spine_reference_characteristics
from .errors import InvalidShift, LevelTooLow, OutOfGrid
from .lamperti import time_change, transfer_local_time
from .levy import (
    BV,
    DIFFUSION,
    EXACT,
    FOURIER,
    LocalTimeProfile,
    PotentialTable,
    local_time,
    local_time_total,
    potential_density,
)


def _check_level(tree: DecoratedTree, x: float):
    if x < constants.TRUNCATION_MARGIN * tree.x_min:
        raise LevelTooLow(
            f"level {x} below the safety margin "
            f"{constants.TRUNCATION_MARGIN} * x_min = {constants.TRUNCATION_MARGIN * tree.x_min}"
        )


def _children_index(tree: DecoratedTree) -> dict:
    idx: dict = {label: [] for label in tree.nodes}
    for node in tree.nodes.values():
        if node.parent is not None:
            idx[node.parent].append(node)
    for lst in idx.values():
        lst.sort(key=lambda n: n.label)
    return idx


@dataclass(frozen=True)
class TreeLevelMeasure:
    level: float
    profiles: dict  # label -> LocalTimeProfile in pssMp time
    total: float

    def node_total(self, label) -> float:
        prof = self.profiles.get(label)
        return prof.total if prof is not None else 0.0


def level_local_time(tree: DecoratedTree, x: float,
                     eps: float = constants.EPS_PROFILE) -> TreeLevelMeasure:
    """L(x, dt): per-segment local time at xi-level log(x / chi(u)),
    transferred to pssMp time and summed over the finitely many segments
    that reach the level."""
    _check_level(tree, x)
    profiles = {}
    total = 0.0
    for label, node in tree.nodes.items():
        y = float(np.log(x / node.birth_size))
        prof = local_time(node.skeleton, y, EXACT if tree.mode == BV else eps)
        if prof.total > 0:
            profiles[label] = transfer_local_time(prof, node.decoration)
            total += prof.total
    return TreeLevelMeasure(level=x, profiles=profiles, total=float(total))


def level_total(tree: DecoratedTree, x: float,
                eps: float = constants.EPS_TOTAL) -> float:
    """L(x, T) without building per-node profiles."""
    _check_level(tree, x)
    out = 0.0
    for node in tree.nodes.values():
        y = float(np.log(x / node.birth_size))
        out += local_time_total(node.skeleton, y,
                                EXACT if tree.mode == BV else eps)
    return float(out)


def subtree_totals(tree: DecoratedTree, x: float,
                   eps: float = constants.EPS_TOTAL) -> dict:
    """L(x, T_u) for the root's first-generation subtrees, keyed by the
    child label; the root segment itself is keyed by ()."""
    _check_level(tree, x)
    out: dict = {}
    for node in tree.nodes.values():
        y = float(np.log(x / node.birth_size))
        mass = local_time_total(tree.nodes[node.label].skeleton, y,
                                EXACT if tree.mode == BV else eps)
        top = node.label[:1] if node.label else ()
        out[top] = out.get(top, 0.0) + mass
    return out


def _first_hit_age(node, y: float):
    """Age (pssMp time) of the first continuous passage of the xi path at y,
    or None.  Grid paths use sign changes with linear interpolation."""
    skel = node.skeleton
    if skel.mode == BV:
        ages = skel.crossings(y)
        if ages.size == 0:
            return None
        return float(time_change(node.decoration, float(ages[0])))
    s = skel.values - y
    if s[0] == 0.0:
        return 0.0
    change = np.nonzero(np.signbit(s[:-1]) != np.signbit(s[1:]))[0]
    if change.size == 0:
        return None
    k = int(change[0])
    denom = s[k + 1] - s[k]
    frac = float(-s[k] / denom) if denom != 0 else 0.5
    return float(time_change(node.decoration, (k + frac) * skel.dt))


@dataclass(frozen=True)
class HittingLine:
    level: float
    points: tuple  # (label, age in pssMp time)

    @property
    def count(self) -> int:
        return len(self.points)


def hitting_line(tree: DecoratedTree, x: float) -> HittingLine:
    """First hitting line: a segment's first passage at x is recorded iff
    no ancestor point (earlier ages included) attained x."""
    _check_level(tree, x)
    kids = _children_index(tree)
    points = []

    def visit(node):
        y = float(np.log(x / node.birth_size))
        hit_age = _first_hit_age(node, y)
        if hit_age is not None:
            points.append((node.label, hit_age))
        for child in kids[node.label]:
            if hit_age is None or child.attach_age < hit_age:
                visit(child)

    visit(tree.root())
    return HittingLine(level=x, points=tuple(points))


def potential_w(quad: CharacteristicQuadruplet, analysis: CumulantAnalysis,
                gamma: float, grid: np.ndarray,
                delta: float | None = None) -> PotentialTable:
    """Potential density w^(gamma) of the shifted cumulant.

    For kappa(gamma) < 0 this is the Fourier inversion of -1/kappa^(gamma);
    at gamma = omega (no killing) it is recovered from a small extra shift
    delta via w^(omega)(y) = e^{-delta y} w^(omega+delta)(y).
    """
    from .builder import cumulant

    grid = np.asarray(grid, dtype=float)
    kg = float(np.real(cumulant(quad, gamma)))
    if kg < -1e-12:
        chars = spine_reference_characteristics(quad, gamma)
        return potential_density(chars, grid, method=FOURIER)
    if abs(kg) > 1e-9:
        raise InvalidShift(f"kappa({gamma}) = {kg} > 0")
    if analysis.omega is None:
        raise InvalidShift("no Cramer root omega available")
    if delta is None:
        delta = 0.5 * (analysis.gamma0 - gamma)
    shifted = potential_w(quad, analysis, gamma + delta, grid)
    vals = np.exp(-delta * grid) * shifted.values
    return PotentialTable(y=grid, values=vals, method=FOURIER)


_W_GRID = np.linspace(-14.0, 14.0, 7001)


def mean_local_time_formula(quad: CharacteristicQuadruplet,
                            analysis: CumulantAnalysis, x: float,
                            gamma: float | None = None,
                            table: PotentialTable | None = None) -> float:
    """E(L(x, T)) = x^{-gamma0} w^(gamma0)(log x); independent of the
    admissible gamma0 used."""
    g = analysis.gamma0 if gamma is None else gamma
    if table is None:
        table = potential_w(quad, analysis, g, _W_GRID)
    logx = float(np.log(x))
    if logx < table.y[0] or logx > table.y[-1]:
        raise OutOfGrid(f"log x = {logx} outside the w grid")
    return x ** (-g) * table(logx)


def mean_hitting_count_formula(quad, analysis, x,
                               table: PotentialTable | None = None) -> float:
    """E(N(x, T)) = x^{-omega} w^(omega)(log x) / w^(omega)(0)."""
    if analysis.omega is None:
        raise InvalidShift("no Cramer root omega available")
    if table is None:
        table = potential_w(quad, analysis, analysis.omega, _W_GRID)
    logx = float(np.log(x))
    return x ** (-analysis.omega) * table(logx) / table(0.0)


# ---------------------------------------------------------------------------
# harmonic-measure proxies
# ---------------------------------------------------------------------------

def _first_entry(node, y_cut: float):
    """Age (pssMp) and xi value at the first entrance of xi into
    (-inf, y_cut], whether by drift crossing, diffusion or a jump."""
    skel = node.skeleton
    if skel.mode == DIFFUSION:
        below = np.nonzero(skel.values <= y_cut)[0]
        if below.size == 0:
            return None
        k = int(below[0])
        return float(time_change(node.decoration, k * skel.dt)), float(skel.values[k])
    t, v = 0.0, skel.start
    for d, m, j in skel.segments:
        if v <= y_cut:
            return float(time_change(node.decoration, t)), float(v)
        if m != 0.0:
            s = (y_cut - v) / m
            if 0.0 <= s <= d:
                return float(time_change(node.decoration, t + s)), float(y_cut)
        t += d
        v += m * d + (j if j is not None else 0.0)
    if v <= y_cut:
        return float(time_change(node.decoration, t)), float(v)
    return None


def harmonic_germs(tree: DecoratedTree, x_cut: float):
    """Germ values at the first entrances of the decoration to (0, x_cut]
    along ancestral lines, with the first-generation subtree holding each
    germ ((), for the root segment itself)."""
    _check_level(tree, x_cut)
    kids = _children_index(tree)
    germs = []

    # Children born at exactly the entry age stay: when the entry happens
    # by the parent jump of a branch event, the children attach at a point
    # whose strict ancestors are all above the cut, so their subtrees
    # dangle separately and carry their own germs.
    work = [((), ())]
    while work:
        label, top = work.pop()
        node = tree.nodes[label]
        if node.birth_size <= x_cut:
            germs.append((node.birth_size, top))
            continue
        y_cut = float(np.log(x_cut / node.birth_size))
        entry = _first_entry(node, y_cut)
        entry_age = entry[0] if entry is not None else None
        if entry is not None:
            germs.append((node.birth_size * float(np.exp(entry[1])), top))
        for age, size in node.atoms:
            if entry_age is not None and age > entry_age:
                continue
            if size < tree.x_min:
                # discarded at birth; still a germ, by construction
                # size < x_min <= x_cut
                germs.append((size, top))
        for child in kids[label]:
            if entry_age is None or child.attach_age <= entry_age:
                sub_top = child.label[:1] if top == () else top
                work.append((child.label, sub_top))
    return germs


def harmonic_mass_proxy(tree: DecoratedTree, analysis: CumulantAnalysis,
                        x_cut: float) -> float:
    """sum_i germ_i^omega, the total-mass proxy for the harmonic measure."""
    if analysis.omega is None:
        raise InvalidShift("no Cramer root omega available")
    return float(sum(g**analysis.omega for g, _ in harmonic_germs(tree, x_cut)))


def harmonic_subtree_proxy(tree, analysis, x_cut) -> dict:
    """Proxy mass split over the root's first-generation subtrees."""
    out: dict = {}
    for g, top in harmonic_germs(tree, x_cut):
        out[top] = out.get(top, 0.0) + g**analysis.omega
    return out


# ---------------------------------------------------------------------------
# convergence diagnostics
# ---------------------------------------------------------------------------

def convergence_diagnostics(quad: CharacteristicQuadruplet,
                            analysis: CumulantAnalysis,
                            x_list, n_trees: int, seed: int,
                            mode: str = DIFFUSION,
                            dt: float = constants.DT,
                            x_min: float = constants.X_MIN,
                            start: float = 1.0) -> dict:
    """Deviation diagnostics for the local-time and hitting-count
    approximations of the harmonic measure.

    For each x: (a) |x^omega N(x,T) * (-kappa'(omega) w(0)) - proxy| and
    (b) |L(x,T)/E L(x,T) - proxy| averaged over replicas; at the smallest
    x, the correlation between first-generation subtree mass ratios and
    subtree proxies.
    """
    from .builder import build_tree

    x_list = sorted(x_list, reverse=True)
    x_cut = min(x_list)
    w_omega = potential_w(quad, analysis, analysis.omega, _W_GRID)
    w0 = w_omega(0.0)
    scale_n = -analysis.kappa_prime_omega * w0
    m_l = {x: mean_local_time_formula(quad, analysis, x) for x in x_list}
    n_dev = {x: [] for x in x_list}
    l_dev = {x: [] for x in x_list}
    n_scaled = {x: [] for x in x_list}
    sub_ratio, sub_proxy = [], []
    x_small = x_list[-1]
    seeds = np.random.SeedSequence(seed).generate_state(n_trees)
    for s in seeds:
        tree = build_tree(quad, start, x_min, mode, dt, int(s))
        proxy = harmonic_subtree_proxy(tree, analysis, x_cut)
        proxy_total = sum(proxy.values())
        for x in x_list:
            n_x = hitting_line(tree, x).count
            l_x = level_total(tree, x)
            scaled = x**analysis.omega * n_x * scale_n
            n_scaled[x].append(x**analysis.omega * n_x)
            n_dev[x].append(abs(scaled - proxy_total))
            l_dev[x].append(abs(l_x / m_l[x] - proxy_total))
        subs = subtree_totals(tree, x_small)
        for top in set(subs) | set(proxy):
            sub_ratio.append(subs.get(top, 0.0) / m_l[x_small])
            sub_proxy.append(proxy.get(top, 0.0))
    corr = float(np.corrcoef(sub_ratio, sub_proxy)[0, 1]) if len(sub_ratio) > 1 else float("nan")
    return {
        "x": list(x_list),
        "n_dev": [float(np.mean(n_dev[x])) for x in x_list],
        "l_dev": [float(np.mean(l_dev[x])) for x in x_list],
        "subtree_corr": corr,
        "n_scaled_mean": {float(x): float(np.mean(n_scaled[x])) for x in x_list},
        "scale_n": float(scale_n),
    }
