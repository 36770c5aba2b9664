"""Marked points on decoration level sets and the law of the spine.

A point is marked proportionally to the local-time measure L(x, dt); the
tree law is thereby size-biased, which the harness realizes by importance
weighting replicas with L(x,T)/E(L(x,T)).  The reference law Q_{1,x} is a
conditioned Levy path (shifted cumulant exponent) pushed through the
Lamperti transform.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constants
from .builder import CharacteristicQuadruplet, CumulantAnalysis, DecoratedTree, \
    build_tree, spine_reference_characteristics
from .errors import EmptyMeasure
from .lamperti import to_pssmp
from .levels import TreeLevelMeasure, level_local_time
from .levy import DIFFUSION, LevyCharacteristics, sample_conditioned
from .stats import ks_two_sample, weighted_ks_two_sample


@dataclass(frozen=True)
class SpineSample:
    """The decoration along the segment from the root to a marked point,
    viewed as a process indexed by the distance from the root."""

    marked_label: tuple[int, ...]
    marked_age: float
    z_prime: float
    maximum: float
    minimum: float
    midpoint: float


def spine_polyline(tree: DecoratedTree, label, age: float,
                   resolution: int = 256) -> np.ndarray:
    """(arclength, decoration) samples along the segment from the root to
    the marked point, for CSV export and figures."""
    chain = []
    cur = label
    while cur is not None:
        chain.append(tree.nodes[cur])
        cur = tree.nodes[cur].parent
    chain.reverse()
    windows = [(node, nxt.attach_age) for node, nxt in zip(chain, chain[1:])]
    windows.append((chain[-1], age))
    total = sum(w for _, w in windows)
    ts = np.linspace(0.0, total, resolution)
    out = np.empty((resolution, 2))
    for i, t in enumerate(ts):
        acc = 0.0
        val = None
        for node, w in windows:
            if t <= acc + w or (node, w) == windows[-1]:
                val = node.decoration.value_at(min(t - acc, w))
                break
            acc += w
        out[i] = (t, val)
    return out


def sample_marked_point(tree: DecoratedTree, measure: TreeLevelMeasure,
                        rng: np.random.Generator):
    """Draw (node, age) proportionally to the level measure atoms (BV) or
    cumulative profiles (DIFFUSION)."""
    if measure.total <= 0:
        raise EmptyMeasure("level measure has no mass")
    labels = list(measure.profiles)
    masses = np.array([measure.profiles[l].total for l in labels])
    label = labels[rng.choice(len(labels), p=masses / masses.sum())]
    prof = measure.profiles[label]
    if prof.atom_times is not None:
        k = rng.choice(len(prof.atom_times), p=prof.atom_masses / prof.atom_masses.sum())
        return label, float(prof.atom_times[k])
    u = rng.uniform(0.0, prof.cum_values[-1])
    k = int(np.searchsorted(prof.cum_values, u, side="left"))
    k = min(max(k, 1), len(prof.cum_times) - 1)
    return label, float(prof.cum_times[k])


def extract_spine(tree: DecoratedTree, label, age: float) -> SpineSample:
    """Deterministic spine functionals for a marked (node, age).

    The spine concatenates ancestor decorations up to the attach ages of
    the chain, then the marked segment up to the marked age; its length is
    the tree distance from the root to the marked point.
    """
    chain = []
    cur = label
    while cur is not None:
        chain.append(tree.nodes[cur])
        cur = tree.nodes[cur].parent
    chain.reverse()
    windows = []
    for node, nxt in zip(chain, chain[1:]):
        windows.append((node, nxt.attach_age))
    windows.append((chain[-1], age))
    z_prime = float(sum(w for _, w in windows))
    lo, hi = np.inf, -np.inf
    for node, w in windows:
        a, b = node.decoration.extrema(t_max=w)
        lo, hi = min(lo, a), max(hi, b)
    half = z_prime / 2.0
    acc = 0.0
    midpoint = None
    for node, w in windows:
        if acc + w >= half:
            midpoint = node.decoration.value_at(half - acc)
            break
        acc += w
    return SpineSample(marked_label=label, marked_age=age, z_prime=z_prime,
                       maximum=float(hi), minimum=float(lo),
                       midpoint=float(midpoint))


def min_resolution_clip(level: float) -> float:
    """Spine minima are coarsened at level * e^{-2 eps}: the marked
    endpoint scatters over the marking window level * e^{+-eps} while the
    conditioned reference terminal sits within the (tighter) hit
    tolerance, so the raw minima of the two samplers differ at pure
    window resolution near the level.  Below the clip both endpoint
    conventions are invisible and only genuine excursions under the
    window distinguish the laws."""
    return level * float(np.exp(-2.0 * constants.EPS_PROFILE))


def _functional_arrays(samples, level: float | None = None):
    mins = np.array([s.minimum for s in samples])
    if level is not None:
        mins = np.minimum(mins, min_resolution_clip(level))
    return {
        "length": np.array([s.z_prime for s in samples]),
        "max": np.array([s.maximum for s in samples]),
        "min": mins,
        "midpoint": np.array([s.midpoint for s in samples]),
    }


def collect_marked_spines(quad, x: float, n: int, seed: int,
                          mode: str = DIFFUSION, dt: float = constants.DT,
                          x_min: float = constants.X_MIN, start: float = 1.0,
                          eps: float = constants.EPS_PROFILE):
    """Build n trees, mark one point each from L(x, dt) and return the
    spine samples with their importance weights L(x, T).

    Trees that never reach the level carry weight zero and drop out of
    every weighted average; ``n_total`` preserves them for the
    self-normalization check.
    """
    samples, weights = [], []
    seeds = np.random.SeedSequence(seed).generate_state(n)
    for s in seeds:
        tree = build_tree(quad, start, x_min, mode, dt, int(s))
        measure = level_local_time(tree, x, eps=eps)
        if measure.total <= 0:
            continue
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(s), spawn_key=(11,)))
        label, age = sample_marked_point(tree, measure, rng)
        samples.append(extract_spine(tree, label, age))
        weights.append(measure.total)
    return samples, np.array(weights), n


def reference_spine_sampler(quad: CharacteristicQuadruplet,
                            analysis: CumulantAnalysis, x: float,
                            rng: np.random.Generator,
                            gamma: float | None = None,
                            mode: str = DIFFUSION, dt: float = constants.DT):
    """One spine under the reference law Q_{1,x}: a Levy path with the
    shifted-cumulant exponent conditioned to terminate at log x, then
    Lamperti-transformed with start 1."""
    g = analysis.gamma0 if gamma is None else gamma
    chars = spine_reference_characteristics(quad, g)
    path = sample_conditioned(chars, 0.0, float(np.log(x)), rng, mode=mode, dt=dt)
    xp = to_pssmp(path, quad.alpha, 1.0)
    lo, hi = xp.extrema()
    return SpineSample(marked_label=(), marked_age=xp.z, z_prime=xp.z,
                       maximum=hi, minimum=lo, midpoint=xp.value_at(xp.z / 2.0))


def collect_reference_spines(quad, analysis, x, n, seed, gamma=None,
                             mode: str = DIFFUSION, dt: float = constants.DT):
    rng = np.random.default_rng(seed)
    return [reference_spine_sampler(quad, analysis, x, rng, gamma=gamma,
                                    mode=mode, dt=dt) for _ in range(n)]


def spine_law_test(quad, analysis, x: float, n: int, seed: int,
                   mode: str = DIFFUSION, dt: float = constants.DT,
                   x_min: float = constants.X_MIN,
                   marked=None, weights=None, reference=None) -> list[dict]:
    """Weighted two-sample KS on four spine functionals between marked
    ssMt spines and the reference sampler."""
    if marked is None:
        marked, weights, _ = collect_marked_spines(quad, x, n, seed, mode=mode,
                                                   dt=dt, x_min=x_min)
    if reference is None:
        reference = collect_reference_spines(quad, analysis, x, len(marked), seed + 1,
                                             mode=mode, dt=dt)
    fa = _functional_arrays(marked, level=x)
    fb = _functional_arrays(reference, level=x)
    report = []
    for name in fa:
        d, p, n_eff = weighted_ks_two_sample(fa[name], weights, fb[name])
        report.append({"functional": name, "ks_stat": d, "p": p, "n_eff": n_eff})
    return report


def reversal_test(marked, weights, x: float, dual_reference=None) -> list[dict]:
    """max Y against x / min Y (same marked sample, both weighted), plus a
    comparison of the reversed-spine functionals against a dual sampler
    when one is supplied."""
    fa = _functional_arrays(marked, level=x)
    # min is coarsened at the resolution clip, so x/min caps at
    # x / clip; cap the maxima there too to compare like with like
    cap = x / min_resolution_clip(x)
    max_cl = np.maximum(fa["max"], cap)
    ratio_cl = np.maximum(x / fa["min"], cap)
    d, p, n_eff = weighted_ks_two_sample(max_cl, weights, ratio_cl, weights)
    report = [{"functional": "max_vs_x_over_min", "ks_stat": d, "p": p, "n_eff": n_eff}]
    if dual_reference is not None:
        fb = _functional_arrays(dual_reference, level=x)
        for name in ("length", "max", "min", "midpoint"):
            d, p, n_eff = weighted_ks_two_sample(fa[name], weights, fb[name])
            report.append({"functional": f"dual_{name}", "ks_stat": d, "p": p,
                           "n_eff": n_eff})
    return report


def dual_reference_spines(quad, analysis, x: float, n: int, seed: int,
                          gamma: float | None = None,
                          mode: str = DIFFUSION, dt: float = constants.DT):
    """Samples of the dual conditioned pssMp started at x with terminal 1:
    the time reversal of Q_{1,x} spines.  The reversed spine has the same
    (length, max, min, midpoint) functionals, so the dual comparison tests
    the duality corollary directly on those."""
    g = analysis.gamma0 if gamma is None else gamma
    chars = spine_reference_characteristics(quad, g)
    dual = LevyCharacteristics(sigma2=chars.sigma2, drift=-chars.drift,
                               jump_atoms=tuple((-y, r) for y, r in chars.jump_atoms),
                               kill_rate=chars.kill_rate)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        path = sample_conditioned(dual, float(np.log(x)), 0.0, rng, mode=mode, dt=dt)
        xp = to_pssmp(path, quad.alpha, 1.0)
        lo, hi = xp.extrema()
        out.append(SpineSample(marked_label=(), marked_age=xp.z, z_prime=xp.z,
                               maximum=hi, minimum=lo,
                               midpoint=xp.value_at(xp.z / 2.0)))
    return out


def self_normalization_check(weights, n_total: int, formula_mean: float) -> dict:
    """Importance weights divided by the formula mean must average to one
    within Monte Carlo error; zero-weight replicas count."""
    w = np.zeros(n_total)
    w[: len(weights)] = np.asarray(weights, dtype=float) / formula_mean
    return {"mean": float(w.mean()), "se": float(w.std(ddof=1) / np.sqrt(n_total)),
            "n": n_total}
