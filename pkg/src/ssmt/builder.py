"""Characteristic quadruplets, cumulant analysis, and construction of
decorated trees generation by generation.

A quadruplet is (sigma^2, a, finite branching events; alpha): the base
characteristics hold the plain part of the first projection, each branch
event contributes its parent jump (or a killing, for death events) to the
first projection and its children offsets to the second.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import constants
from .errors import BudgetExhausted, InvalidShift, SubcriticalityViolated
from .lamperti import PssmpPath, time_change, to_pssmp
from .levy import (
    BV,
    DIFFUSION,
    LevyCharacteristics,
    PathSkeleton,
    _poisson_times,
    esscher_tilt,
    evaluate_exponent,
)

DEATH = "death"


@dataclass(frozen=True)
class BranchEvent:
    rate: float
    parent_jump: float | None  # None encodes a death event (jump to -inf)
    children: tuple[float, ...]  # non-increasing log displacements

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("event rate must be positive")
        if any(a < b for a, b in zip(self.children, self.children[1:])):
            raise ValueError("children offsets must be non-increasing")


@dataclass(frozen=True)
class CharacteristicQuadruplet:
    base: LevyCharacteristics
    events: tuple[BranchEvent, ...]
    alpha: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def projection(self) -> LevyCharacteristics:
        """Full first projection: plain atoms, parent jumps, death mass."""
        atoms = list(self.base.jump_atoms)
        kill = self.base.kill_rate
        for ev in self.events:
            if ev.parent_jump is None:
                kill += ev.rate
            else:
                atoms.append((ev.parent_jump, ev.rate))
        return LevyCharacteristics(sigma2=self.base.sigma2, drift=self.base.drift,
                                   jump_atoms=tuple(atoms), kill_rate=kill)

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json(),
            "events": [
                {"rate": ev.rate,
                 "parent_jump": DEATH if ev.parent_jump is None else ev.parent_jump,
                 "children": list(ev.children)}
                for ev in self.events
            ],
            "alpha": self.alpha,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CharacteristicQuadruplet":
        events = []
        for ev in obj.get("events", []):
            pj = ev["parent_jump"]
            events.append(BranchEvent(
                rate=float(ev["rate"]),
                parent_jump=None if pj == DEATH else float(pj),
                children=tuple(float(c) for c in ev["children"]),
            ))
        return cls(base=LevyCharacteristics.from_json(obj["base"]),
                   events=tuple(events), alpha=float(obj["alpha"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, s: str) -> "CharacteristicQuadruplet":
        return cls.from_json(json.loads(s))


def cumulant(quad: CharacteristicQuadruplet, gamma) -> complex | float:
    """kappa(gamma) = psi_{Lambda_0}(gamma) + sum_events rate * sum_i e^{gamma y_i}."""
    out = evaluate_exponent(quad.projection, gamma)
    for ev in quad.events:
        gs = np.multiply(gamma, np.asarray(ev.children))
        out += ev.rate * np.sum(np.exp(gs))
    return out


@dataclass(frozen=True)
class CumulantAnalysis:
    gamma0: float
    kappa_gamma0: float
    omega: float | None = None
    kappa_prime_omega: float | None = None
    p_moment_ok: bool = True


def analyze_cumulant(quad: CharacteristicQuadruplet, search_max: float = 4.0,
                     grid_size: int = 4001) -> CumulantAnalysis:
    """Locate gamma0 (grid argmin of kappa, which must be negative there)
    and the Cramer root omega of kappa on (0, gamma0], if any."""
    from scipy.optimize import brentq

    if search_max <= 0:
        raise ValueError("search_max must be positive")
    grid = np.linspace(1e-9, search_max, grid_size)
    vals = np.array([float(np.real(cumulant(quad, g))) for g in grid])
    k = int(np.argmin(vals))
    gamma0, kmin = float(grid[k]), float(vals[k])
    if kmin >= 0:
        raise SubcriticalityViolated(f"min kappa = {kmin:.4g} >= 0 on (0, {search_max}]")
    omega = None
    kprime = None
    kappa0 = float(np.real(cumulant(quad, 0.0)))
    if kappa0 > 0:
        f = lambda g: float(np.real(cumulant(quad, g)))
        omega = float(brentq(f, 1e-12, gamma0, xtol=1e-15, rtol=1e-15))
        h = 1e-6
        kprime = (f(omega + h) - f(omega - h)) / (2 * h)
    return CumulantAnalysis(gamma0=gamma0, kappa_gamma0=kmin, omega=omega,
                            kappa_prime_omega=kprime, p_moment_ok=True)


def spine_reference_characteristics(quad: CharacteristicQuadruplet,
                                    gamma: float) -> LevyCharacteristics:
    """Characteristics whose exponent is kappa(gamma + .).

    Esscher-tilt the first projection by gamma, add one atom per
    (event, child) at size y_i with rate rate*e^{gamma y_i} (compensating
    the drift for |y_i| <= 1), and set the killing to -kappa(gamma).
    """
    kg = float(np.real(cumulant(quad, gamma)))
    if kg > 1e-12:
        raise InvalidShift(f"kappa({gamma}) = {kg} > 0")
    tilted = esscher_tilt(quad.projection, gamma)
    atoms = list(tilted.jump_atoms)
    drift = tilted.drift
    for ev in quad.events:
        for y in ev.children:
            r = ev.rate * float(np.exp(gamma * y))
            atoms.append((y, r))
            if abs(y) <= 1.0:
                drift += r * y
    out = LevyCharacteristics(sigma2=tilted.sigma2, drift=float(drift),
                              jump_atoms=tuple(atoms), kill_rate=max(0.0, -kg))
    chk = float(np.real(evaluate_exponent(out, 0.0)))
    assert abs(chk - kg) < 1e-9, "exponent(0) must equal kappa(gamma)"
    return out


# ---------------------------------------------------------------------------
# decorated trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeNode:
    label: tuple[int, ...]
    parent: tuple[int, ...] | None
    attach_age: float            # position on the parent segment, pssMp time
    birth_size: float            # chi(u)
    lifetime: float              # z_u
    decoration: PssmpPath
    skeleton: PathSkeleton       # driving xi path, started at 0
    # reproduction atoms (age in pssMp time, child birth size), all births
    atoms: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class DecoratedTree:
    quad: CharacteristicQuadruplet
    start: float
    x_min: float
    mode: str
    dt: float
    seed: int
    nodes: dict[tuple[int, ...], TreeNode] = field(default_factory=dict)

    @property
    def alpha(self) -> float:
        return self.quad.alpha

    def children_of(self, label) -> list[TreeNode]:
        out = [n for n in self.nodes.values() if n.parent == label]
        out.sort(key=lambda n: n.label)
        return out

    def root(self) -> TreeNode:
        return self.nodes[()]

    def export_json(self, resolution: int = 64) -> dict:
        items = []
        for node in self.nodes.values():
            items.append({
                "label": list(node.label),
                "parent": None if node.parent is None else list(node.parent),
                "attach_age": node.attach_age,
                "birth_size": node.birth_size,
                "lifetime": node.lifetime,
                "atoms": [[a, s] for a, s in node.atoms],
                "polyline": node.decoration.sample_polyline(resolution).tolist(),
            })
        return {"alpha": self.alpha, "start": self.start, "x_min": self.x_min,
                "mode": self.mode, "dt": self.dt, "seed": self.seed, "nodes": items}


def _node_rng(seed: int, label: tuple[int, ...]) -> np.random.Generator:
    # per-node stream keyed by the Ulam label: construction order, parallel
    # scheduling and the truncation threshold cannot change a node's draw
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(7,) + label))


def _sample_decoration_reproduction(quad, mode, dt, rng):
    """The xi skeleton of one individual plus its branch marks.

    Returns (skeleton, marks) with marks = (levy age, xi left limit,
    children offsets) sorted by age.
    """
    base = quad.base
    proj = quad.projection
    b = proj.effective_drift
    q_plain = base.kill_rate
    marks = []
    if mode == BV:
        if proj.sigma2 != 0.0:
            raise ValueError("BV mode requires sigma2 = 0")
        streams = [(y, r, None) for y, r in base.jump_atoms]
        streams += [(ev.parent_jump, ev.rate, ev) for ev in quad.events]
        rates = np.array([r for _, r, _ in streams]) if streams else np.empty(0)
        total = rates.sum() if streams else 0.0
        t_kill = rng.exponential(1.0 / q_plain) if q_plain > 0 else np.inf
        t, v = 0.0, 0.0
        segs = []
        killed = True
        while True:
            wait = rng.exponential(1.0 / total) if total > 0 else np.inf
            if t + wait >= t_kill:
                segs.append((t_kill - t, b, None))
                zeta = t_kill
                break
            k = rng.choice(len(streams), p=rates / total)
            y, _, ev = streams[k]
            t += wait
            v_pre = v + b * wait
            if ev is not None:
                marks.append((t, v_pre, ev.children))
                if ev.parent_jump is None:
                    segs.append((wait, b, None))
                    zeta = t
                    break
            segs.append((wait, b, y))
            v = v_pre + y
        skel = PathSkeleton(start=0.0, mode=BV, zeta=float(zeta), killed=True,
                            segments=tuple(segs))
        return skel, sorted(marks)

    # DIFFUSION: exponential lifetime from plain kill and first death event
    t_kill = rng.exponential(1.0 / q_plain) if q_plain > 0 else np.inf
    death_ev = None
    for ev in quad.events:
        if ev.parent_jump is None:
            td = rng.exponential(1.0 / ev.rate)
            if td < t_kill:
                t_kill, death_ev = td, ev
    zeta = t_kill
    if not np.isfinite(zeta):
        raise ValueError("individual lifetime must be finite (add killing)")
    n = max(1, int(zeta / dt))
    incr = b * dt + np.sqrt(proj.sigma2 * dt) * rng.standard_normal(n)
    deltas = np.zeros(n)
    for y, rate in base.jump_atoms:
        for tj in _poisson_times(rate, n * dt, rng):
            deltas[min(int(tj / dt), n - 1)] += y
    pending = []
    for ev in quad.events:
        if ev.parent_jump is None:
            continue
        for tj in _poisson_times(ev.rate, n * dt, rng):
            k = min(int(tj / dt), n - 1)
            deltas[k] += ev.parent_jump
            pending.append((k, ev.children))
    vals = np.empty(n + 1)
    vals[0] = 0.0
    np.cumsum(incr + deltas, out=vals[1:])
    for k, children in sorted(pending):
        marks.append(((k + 1) * dt, float(vals[k]), children))
    if death_ev is not None:
        marks.append((n * dt, float(vals[n]), death_ev.children))
    skel = PathSkeleton(start=0.0, mode=DIFFUSION, zeta=float(zeta), killed=True,
                        dt=dt, values=vals)
    return skel, sorted(marks)


def build_tree(
    quad: CharacteristicQuadruplet,
    start: float,
    x_min: float,
    mode: str,
    dt: float,
    seed: int,
    node_cap: int = constants.NODE_CAP,
) -> DecoratedTree:
    """Breadth-first construction; children whose birth size falls below
    x_min are discarded together with their descent.  Requires a
    subcritical quadruplet (analyze_cumulant succeeded)."""
    if x_min <= 0 or start <= 0:
        raise ValueError("start and x_min must be positive")
    nodes: dict[tuple[int, ...], TreeNode] = {}
    queue = deque([((), None, 0.0, float(start))])
    while queue:
        label, parent, attach, chi = queue.popleft()
        if len(nodes) >= node_cap:
            raise BudgetExhausted(f"node cap {node_cap} reached; raise x_min")
        rng = _node_rng(seed, label)
        skel, marks = _sample_decoration_reproduction(quad, mode, dt, rng)
        xp = to_pssmp(skel, quad.alpha, chi)
        atoms = []
        j = 0
        for s_age, xi_pre, children in marks:
            t_age = float(time_change(xp, s_age))
            for y in children:
                size = chi * float(np.exp(xi_pre + y))
                atoms.append((t_age, size))
                if size >= x_min:
                    j += 1
                    queue.append((label + (j,), label, t_age, size))
        nodes[label] = TreeNode(label=label, parent=parent, attach_age=attach,
                                birth_size=chi, lifetime=xp.z, decoration=xp,
                                skeleton=skel, atoms=tuple(atoms))
    return DecoratedTree(quad=quad, start=start, x_min=x_min, mode=mode, dt=dt,
                         seed=seed, nodes=nodes)


def _segment_exp_integral(skel: PathSkeleton, gamma: float) -> float:
    """int_0^zeta e^{gamma xi_s} ds, exact per BV segment, midpoint on grids."""
    if skel.mode == BV:
        out = 0.0
        v = skel.start
        for d, m, j in skel.segments:
            gm = gamma * m
            if gm == 0.0 or d == 0.0:
                out += np.exp(gamma * v) * d
            else:
                out += np.exp(gamma * v) * np.expm1(gm * d) / gm
            v += m * d + (j if j is not None else 0.0)
        return float(out)
    xi = skel.values
    mid = np.exp(gamma * 0.5 * (xi[:-1] + xi[1:]))
    return float(mid.sum() * skel.dt)


def weighted_length(tree: DecoratedTree, gamma: float) -> float:
    """sum_u int_0^{z_u} f_u(t)^{gamma - alpha} dt; gamma = alpha gives the
    total length of the tree."""
    out = 0.0
    for node in tree.nodes.values():
        out += node.birth_size**gamma * _segment_exp_integral(node.skeleton, gamma)
    return float(out)


def chi_power_sum(tree: DecoratedTree, gamma: float, include_discarded: bool = True) -> float:
    """sum over individuals of chi(u)^gamma; discarded births (below x_min)
    are observed at their birth on the parent and can be included."""
    out = sum(n.birth_size**gamma for n in tree.nodes.values())
    if include_discarded:
        for node in tree.nodes.values():
            for _, size in node.atoms:
                if size < tree.x_min:
                    out += size**gamma
    return float(out)
