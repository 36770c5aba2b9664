"""Killed real Levy processes with finitely many jump atoms.

Exponent evaluation, path sampling in an exact piecewise-linear mode (BV)
and an Euler-grid mode (DIFFUSION), local times, potential densities via
Fourier inversion or Monte Carlo, conditioning on the terminal value,
Esscher tilting, duality and Cramer analysis.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from . import constants
from .errors import (
    BudgetExhausted,
    ExactUnavailable,
    FourierUnavailable,
    InvalidTilt,
    NoRoot,
    NonTerminating,
    OutOfGrid,
)

BV = "bv"
DIFFUSION = "diffusion"

EXACT = "exact"


# ---------------------------------------------------------------------------
# characteristics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevyCharacteristics:
    """Triplet (sigma^2, a, finite jump atoms) plus killing rate.

    The exponent follows the compensated Levy-Khintchine convention: atoms
    with |y| <= 1 contribute e^{gy} - 1 - g*y, larger ones e^{gy} - 1.
    """

    sigma2: float
    drift: float
    jump_atoms: tuple[tuple[float, float], ...] = ()
    kill_rate: float = 0.0

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if self.kill_rate < 0:
            raise ValueError("kill_rate must be nonnegative")
        for y, rate in self.jump_atoms:
            if rate <= 0:
                raise ValueError("jump rates must be positive")
            if not np.isfinite(y):
                raise ValueError("jump sizes must be finite")

    @property
    def total_jump_rate(self) -> float:
        return float(sum(r for _, r in self.jump_atoms))

    @property
    def effective_drift(self) -> float:
        """Slope of the path between jumps (compensation removed)."""
        comp = sum(r * y for y, r in self.jump_atoms if abs(y) <= 1.0)
        return self.drift - comp

    @property
    def mean(self) -> float:
        """psi'(0), the mean displacement per unit time before killing."""
        big = sum(r * y for y, r in self.jump_atoms if abs(y) > 1.0)
        return self.drift + big

    def exponent(self, gamma: complex) -> complex:
        return evaluate_exponent(self, gamma)

    def to_json(self) -> dict:
        return {
            "sigma2": self.sigma2,
            "drift": self.drift,
            "jumps": [{"y": y, "rate": r} for y, r in self.jump_atoms],
            "kill": self.kill_rate,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LevyCharacteristics":
        return cls(
            sigma2=float(obj["sigma2"]),
            drift=float(obj["drift"]),
            jump_atoms=tuple((float(j["y"]), float(j["rate"])) for j in obj.get("jumps", [])),
            kill_rate=float(obj.get("kill", 0.0)),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, s: str) -> "LevyCharacteristics":
        return cls.from_json(json.loads(s))


def evaluate_exponent(chars: LevyCharacteristics, gamma: complex) -> complex:
    """Levy exponent psi(gamma); real input gives a real output."""
    g = complex(gamma)
    out = 0.5 * chars.sigma2 * g * g + chars.drift * g - chars.kill_rate
    for y, rate in chars.jump_atoms:
        term = np.exp(g * y) - 1.0
        if abs(y) <= 1.0:
            term -= g * y
        out += rate * term
    if g.imag == 0.0 and isinstance(gamma, (int, float)):
        return out.real
    return out


def exponent_on_imaginary(chars: LevyCharacteristics, theta: np.ndarray) -> np.ndarray:
    """Vectorized psi(i*theta) for a real frequency array."""
    it = 1j * theta
    out = -0.5 * chars.sigma2 * theta**2 + chars.drift * it - chars.kill_rate
    for y, rate in chars.jump_atoms:
        term = np.exp(it * y) - 1.0
        if abs(y) <= 1.0:
            term -= it * y
        out = out + rate * term
    return out


def esscher_tilt(chars: LevyCharacteristics, beta: float) -> LevyCharacteristics:
    """Characteristics of the beta-tilted process, exponent psi(beta + .).

    Requires psi(beta) <= 0; the tilted killing rate is -psi(beta), which
    vanishes exactly in the Cramer case psi(beta) = 0.
    """
    psi_beta = float(np.real(evaluate_exponent(chars, beta)))
    if psi_beta > 1e-12:
        raise InvalidTilt(f"psi({beta}) = {psi_beta} > 0")
    drift = chars.drift + chars.sigma2 * beta
    drift += sum(r * y * (np.exp(beta * y) - 1.0) for y, r in chars.jump_atoms if abs(y) <= 1.0)
    atoms = tuple((y, r * float(np.exp(beta * y))) for y, r in chars.jump_atoms)
    return LevyCharacteristics(
        sigma2=chars.sigma2,
        drift=float(drift),
        jump_atoms=atoms,
        kill_rate=max(0.0, -psi_beta),
    )


def cramer_root(chars: LevyCharacteristics, search_min: float = -60.0) -> tuple[float, float]:
    """Negative root rho of psi with |psi(rho)| < 1e-12, plus psi'(rho).

    psi(0) = -kill < 0 is required; the bracket is expanded to the left
    until psi changes sign.
    """
    from scipy.optimize import brentq

    psi = lambda g: float(np.real(evaluate_exponent(chars, g)))
    if psi(0.0) >= 0:
        raise NoRoot("psi(0) >= 0: no killing, nothing to balance")
    lo = -0.5
    while psi(lo) <= 0:
        lo *= 2.0
        if lo < search_min:
            raise NoRoot(f"psi < 0 on [{search_min}, 0]")
    rho = float(brentq(psi, lo, 0.0, xtol=1e-15, rtol=1e-15))
    h = 1e-6
    psi_prime = (psi(rho + h) - psi(rho - h)) / (2 * h)
    if psi_prime >= 0:
        raise NoRoot("found a root with nonnegative slope; not the Cramer root")
    return rho, psi_prime


# ---------------------------------------------------------------------------
# path skeletons
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathSkeleton:
    """One sampled killed Levy path.

    BV mode stores exact piecewise-linear segments (duration, slope,
    jump-at-end or None); DIFFUSION mode stores an Euler grid.  ``zeta`` is
    the lifetime, infinite for unkilled paths truncated at a floor.
    """

    start: float
    mode: str
    zeta: float
    killed: bool
    segments: tuple[tuple[float, float, float | None], ...] | None = None
    dt: float | None = None
    values: np.ndarray | None = None

    @property
    def horizon(self) -> float:
        """Extent of recorded data; equals zeta for killed paths."""
        if self.mode == BV:
            return float(sum(d for d, _, _ in self.segments))
        return (len(self.values) - 1) * self.dt

    @property
    def terminal(self) -> float:
        """Value just before death, xi_{zeta-}."""
        if self.mode == BV:
            v = self.start
            for d, m, j in self.segments:
                v += m * d
                if j is not None:
                    v += j
            # a trailing jump is never stored on the final segment
            return v
        return float(self.values[-1])

    def segment_table(self):
        """(start ages, start values, slopes, durations) for BV paths."""
        ages = []
        vals = []
        slopes = []
        durs = []
        t, v = 0.0, self.start
        for d, m, j in self.segments:
            ages.append(t)
            vals.append(v)
            slopes.append(m)
            durs.append(d)
            t += d
            v += m * d
            if j is not None:
                v += j
        return (np.array(ages), np.array(vals), np.array(slopes), np.array(durs))

    def value_at(self, t: float) -> float:
        if self.mode == DIFFUSION:
            k = min(int(t / self.dt), len(self.values) - 1)
            return float(self.values[k])
        ages, vals, slopes, durs = self.segment_table()
        k = int(np.searchsorted(ages + durs, t, side="left"))
        k = min(k, len(ages) - 1)
        return float(vals[k] + slopes[k] * (t - ages[k]))

    def dense(self, points_per_segment: int = 64):
        """(times, values) suitable for quadrature and plotting."""
        if self.mode == DIFFUSION:
            return np.arange(len(self.values)) * self.dt, self.values
        ts, vs = [], []
        t, v = 0.0, self.start
        for d, m, j in self.segments:
            tt = np.linspace(t, t + d, points_per_segment)
            ts.append(tt)
            vs.append(v + m * (tt - t))
            t += d
            v += m * d
            if j is not None:
                v += j
        return np.concatenate(ts), np.concatenate(vs)

    def crossings(self, y: float) -> np.ndarray:
        """Ages of continuous passages at level y (BV mode, exact).

        A path starting exactly at y counts as a passage at age 0; jumps
        over the level contribute nothing.
        """
        if self.mode != BV:
            raise ExactUnavailable("exact crossings need a BV path")
        out = []
        t, v = 0.0, self.start
        for d, m, j in self.segments:
            if v == y:
                out.append(t)
            elif m != 0.0:
                s = (y - v) / m
                if 0.0 < s < d or (s == d and j is None):
                    out.append(t + s)
            t += d
            v += m * d
            if j is not None:
                v += j
        return np.asarray(out)


def _poisson_times(rate: float, horizon: float, rng: np.random.Generator) -> np.ndarray:
    n = rng.poisson(rate * horizon)
    return np.sort(rng.uniform(0.0, horizon, size=n))


def _check_terminating(chars: LevyCharacteristics, floor):
    if chars.kill_rate > 0:
        return
    if chars.mean < 0 and floor is not None:
        return
    raise NonTerminating(
        "kill_rate = 0 and mean >= 0 (or no floor given): unbounded simulation"
    )


def sample_path(
    chars: LevyCharacteristics,
    start: float,
    mode: str,
    dt: float,
    rng: np.random.Generator,
    floor: float | None = None,
) -> PathSkeleton:
    """Sample one killed path started from ``start``.

    With kill_rate > 0 the lifetime is exact exponential.  Without killing
    the process must drift to -infinity and ``floor`` must be given: the
    skeleton is truncated at the first time the path is <= floor and
    ``zeta`` is recorded as +inf.
    """
    _check_terminating(chars, floor)
    if mode == BV:
        if chars.sigma2 != 0.0:
            raise ValueError("BV mode requires sigma2 = 0")
        return _sample_bv(chars, start, rng, floor)
    if mode == DIFFUSION:
        if dt is None or dt <= 0:
            raise ValueError("DIFFUSION mode requires dt > 0")
        return _sample_diffusion(chars, start, dt, rng, floor)
    raise ValueError(f"unknown mode {mode!r}")


def _draw_jump(chars, rng):
    atoms = chars.jump_atoms
    rates = np.array([r for _, r in atoms])
    k = rng.choice(len(atoms), p=rates / rates.sum())
    return atoms[k][0]


def _sample_bv(chars, start, rng, floor):
    b = chars.effective_drift
    R = chars.total_jump_rate
    q = chars.kill_rate
    segments = []
    v = start
    if q > 0:
        zeta = rng.exponential(1.0 / q)
        times = _poisson_times(R, zeta, rng) if R > 0 else np.array([])
        prev = 0.0
        for t in times:
            y = _draw_jump(chars, rng)
            segments.append((t - prev, b, y))
            v += b * (t - prev) + y
            prev = t
        segments.append((zeta - prev, b, None))
        return PathSkeleton(start=start, mode=BV, zeta=float(zeta), killed=True,
                            segments=tuple(segments))
    # unkilled, drifting down: extend until the path falls to the floor
    t = 0.0
    while True:
        wait = rng.exponential(1.0 / R) if R > 0 else np.inf
        if b < 0 and v + b * wait <= floor:
            d = (floor - v) / b
            segments.append((d, b, None))
            break
        if not np.isfinite(wait):
            raise NonTerminating("driftless jump-free path cannot reach the floor")
        y = _draw_jump(chars, rng)
        segments.append((wait, b, y))
        v += b * wait + y
        t += wait
        if v <= floor:
            # close with a zero-length tail so the jump stays interior
            segments.append((0.0, b, None))
            break
    return PathSkeleton(start=start, mode=BV, zeta=np.inf, killed=False,
                        segments=tuple(segments))


def _sample_diffusion(chars, start, dt, rng, floor):
    b = chars.effective_drift
    sig = np.sqrt(chars.sigma2)
    R = chars.total_jump_rate
    q = chars.kill_rate

    def build(n_steps, v0, horizon):
        incr = b * dt + sig * np.sqrt(dt) * rng.standard_normal(n_steps)
        deltas = np.zeros(n_steps)
        if R > 0:
            for y, rate in chars.jump_atoms:
                for tj in _poisson_times(rate, horizon, rng):
                    k = min(int(tj / dt), n_steps - 1)
                    deltas[k] += y
        vals = np.empty(n_steps + 1)
        vals[0] = v0
        np.cumsum(incr + deltas, out=vals[1:])
        vals[1:] += v0
        return vals

    if q > 0:
        zeta = rng.exponential(1.0 / q)
        n = max(1, int(zeta / dt))
        vals = build(n, start, n * dt)
        return PathSkeleton(start=start, mode=DIFFUSION, zeta=float(zeta),
                            killed=True, dt=dt, values=vals)
    chunks = [np.array([start])]
    v0 = start
    while True:
        n = 4096
        vals = build(n, v0, n * dt)
        below = np.nonzero(vals[1:] <= floor)[0]
        if below.size:
            chunks.append(vals[1:below[0] + 2])
            break
        chunks.append(vals[1:])
        v0 = vals[-1]
    values = np.concatenate(chunks)
    return PathSkeleton(start=start, mode=DIFFUSION, zeta=np.inf, killed=False,
                        dt=dt, values=values)


def hit_tolerance(chars: LevyCharacteristics, dt: float) -> float:
    """Default window for declaring that a grid path hits a level."""
    return constants.HIT_TOL_FACTOR * dt * (abs(chars.effective_drift) + np.sqrt(chars.sigma2))


def grid_hit_indices(values: np.ndarray, y: float, delta: float) -> np.ndarray:
    """Grid indices where the path is within delta of y or straddles it.

    Straddle detection catches crossings that jump over the window between
    consecutive grid points; a pure window rule undercounts fast passages.
    """
    s = values - y
    inside = np.abs(s) <= delta
    straddle = np.zeros_like(inside)
    sign_change = np.signbit(s[:-1]) != np.signbit(s[1:])
    straddle[:-1] |= sign_change
    return np.nonzero(inside | straddle)[0]


# ---------------------------------------------------------------------------
# local times
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalTimeProfile:
    """Occupation density of one path at one level.

    BV/EXACT: atoms of mass 1/|slope| at passage ages.  Windowed: the
    nondecreasing cumulative function (1/2eps) * time in (y-eps, y+eps).
    """

    level: float
    mode: str
    total: float
    atom_times: np.ndarray | None = None
    atom_masses: np.ndarray | None = None
    cum_times: np.ndarray | None = None
    cum_values: np.ndarray | None = None
    path_id: int = 0

    def cumulative_at(self, t: float) -> float:
        if self.atom_times is not None:
            return float(self.atom_masses[self.atom_times <= t].sum())
        k = np.searchsorted(self.cum_times, t, side="right") - 1
        return float(self.cum_values[max(k, 0)])


def local_time(path: PathSkeleton, y: float, eps) -> LocalTimeProfile:
    """Local time of ``path`` at level ``y``.

    ``eps`` is either the window half-width or EXACT (BV mode with nonzero
    drift only): one atom of mass 1/|slope| per continuous passage.
    """
    if eps == EXACT:
        if path.mode != BV:
            raise ExactUnavailable("EXACT local times only exist in BV mode")
        slope = path.segments[0][1] if path.segments else 0.0
        if slope == 0.0:
            raise ExactUnavailable("EXACT local times need nonzero drift")
        times = path.crossings(y)
        masses = np.full(times.shape, 1.0 / abs(slope))
        return LocalTimeProfile(level=y, mode=path.mode, total=float(masses.sum()),
                                atom_times=times, atom_masses=masses, path_id=id(path))
    eps = float(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if path.mode == DIFFUSION:
        ind = np.abs(path.values - y) < eps
        cum = np.concatenate([[0.0], np.cumsum(ind[:-1]) * path.dt / (2 * eps)])
        times = np.arange(len(path.values)) * path.dt
        return LocalTimeProfile(level=y, mode=path.mode, total=float(cum[-1]),
                                cum_times=times, cum_values=cum, path_id=id(path))
    # BV windowed occupation, exact on each linear piece
    times = [0.0]
    cum = [0.0]
    acc = 0.0
    t, v = 0.0, path.start
    for d, m, j in path.segments:
        v1 = v + m * d
        lo, hi = y - eps, y + eps
        if m == 0.0:
            dur = d if lo < v < hi else 0.0
        else:
            s0 = (lo - v) / m
            s1 = (hi - v) / m
            a, b_ = min(s0, s1), max(s0, s1)
            dur = max(0.0, min(b_, d) - max(a, 0.0))
        acc += dur / (2 * eps)
        t += d
        v = v1 + (j if j is not None else 0.0)
        times.append(t)
        cum.append(acc)
    return LocalTimeProfile(level=y, mode=path.mode, total=acc,
                            cum_times=np.array(times), cum_values=np.array(cum),
                            path_id=id(path))


def local_time_total(path: PathSkeleton, y: float, eps) -> float:
    """Total mass of the local time at y, skipping profile construction."""
    if eps == EXACT:
        slope = path.segments[0][1] if path.segments else 0.0
        if path.mode != BV or slope == 0.0:
            raise ExactUnavailable("EXACT totals need a BV path with drift")
        return len(path.crossings(y)) / abs(slope)
    if path.mode == DIFFUSION:
        return float(np.count_nonzero(np.abs(path.values[:-1] - y) < eps)) * path.dt / (2 * eps)
    return local_time(path, y, eps).total


def occupation_check(path: PathSkeleton, f, eps, level_grid: np.ndarray):
    """Both sides of the occupation density formula.

    lhs integrates f along the path in time; rhs integrates f against
    local-time totals over ``level_grid``.  The caller owns the tolerance,
    which depends on eps and the grid step.
    """
    if path.mode == DIFFUSION:
        lhs = float(np.sum(f(path.values[:-1])) * path.dt)
    else:
        t, v = path.dense(points_per_segment=512)
        lhs = float(np.trapezoid(f(v), t))
    totals = np.array([local_time_total(path, y, eps) for y in level_grid])
    rhs = float(np.trapezoid(f(level_grid) * totals, level_grid))
    return lhs, rhs


def occupation_check_band(path: PathSkeleton, lo: float, hi: float):
    """Occupation identity for a level band indicator on a BV path, both
    sides in closed form: time spent in (lo, hi) against the level
    integral of the exact local-time density, each an exact interval sum."""
    if path.mode != BV:
        raise ExactUnavailable("closed forms need a BV path")
    lhs = 0.0
    rhs = 0.0
    v = path.start
    for d, m, j in path.segments:
        v1 = v + m * d
        if m != 0.0:
            # lhs: clip the time interval during which the value is in band
            s_a = (lo - v) / m
            s_b = (hi - v) / m
            s_lo, s_hi = (s_a, s_b) if s_a <= s_b else (s_b, s_a)
            lhs += max(0.0, min(s_hi, d) - max(s_lo, 0.0))
            # rhs: clip the value range against the band
            a, b = (v, v1) if v <= v1 else (v1, v)
            rhs += max(0.0, min(b, hi) - max(a, lo)) / abs(m)
        elif lo < v < hi:
            lhs += d
        v = v1 + (j if j is not None else 0.0)
    return lhs, rhs


def reverse_path(path: PathSkeleton) -> PathSkeleton:
    """Time reversal t -> xi_{(zeta - t)-} as a new right-continuous skeleton."""
    if not path.killed or not np.isfinite(path.zeta):
        raise ValueError("reversal needs a killed path with finite lifetime")
    if path.mode == DIFFUSION:
        return replace(path, start=float(path.values[-1]), values=path.values[::-1].copy())
    segs = list(path.segments)
    rev = []
    for i in range(len(segs) - 1, -1, -1):
        d, m, _ = segs[i]
        prev_jump = segs[i - 1][2] if i > 0 else None
        rev.append((d, -m, -prev_jump if prev_jump is not None else None))
    return PathSkeleton(start=path.terminal, mode=BV, zeta=path.zeta, killed=True,
                        segments=tuple(rev))


# ---------------------------------------------------------------------------
# potential densities
# ---------------------------------------------------------------------------

FOURIER = "fourier"
MONTE_CARLO = "monte_carlo"
CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class PotentialTable:
    """Potential density v on a uniform grid of levels."""

    y: np.ndarray
    values: np.ndarray
    method: str

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.y[0]) or np.any(x > self.y[-1]):
            raise OutOfGrid(f"level outside [{self.y[0]}, {self.y[-1]}]")
        out = np.interp(x, self.y, self.values)
        return float(out) if out.ndim == 0 else out

    @property
    def v0(self) -> float:
        return self(0.0)

    def to_csv(self, fp):
        fp.write("y,v\n")
        for yy, vv in zip(self.y, self.values):
            fp.write(f"{yy:.12g},{vv:.12g}\n")


def _closed_form_potential(chars: LevyCharacteristics, grid: np.ndarray) -> np.ndarray:
    if chars.jump_atoms:
        raise ValueError("closed form only covers jump-free models")
    q = chars.kill_rate
    if q <= 0:
        raise FourierUnavailable("closed form needs killing")
    b = chars.effective_drift
    s2 = chars.sigma2
    if s2 > 0:
        root = np.sqrt(b * b + 2 * s2 * q)
        c_up = (-b + root) / s2    # decay rate above 0
        c_down = (b + root) / s2   # decay rate below 0
        c = 1.0 / root
        return np.where(grid >= 0, c * np.exp(-c_up * grid), c * np.exp(c_down * grid))
    if b == 0:
        raise ValueError("sigma2 = 0 and drift = 0 has no potential density")
    if b < 0:
        return np.where(grid <= 0, np.exp((q / abs(b)) * grid) / abs(b), 0.0)
    return np.where(grid >= 0, np.exp(-(q / b) * grid) / b, 0.0)


def _reference(chars: LevyCharacteristics):
    """Reference triplet with closed-form potential; the residual transform
    decays like theta^-4 (diffusion) or theta^-2 (BV)."""
    q_ref = chars.kill_rate + chars.total_jump_rate
    ref = LevyCharacteristics(sigma2=chars.sigma2, drift=chars.effective_drift,
                              jump_atoms=(), kill_rate=q_ref)
    return ref


def potential_density(
    chars: LevyCharacteristics,
    grid: np.ndarray,
    method: str = FOURIER,
    n_paths: int = constants.N_PATHS,
    dt: float = constants.DT,
    eps: float = constants.EPS_TOTAL,
    rng: np.random.Generator | None = None,
    fourier_n: int | None = None,
    theta_max: float | None = None,
) -> PotentialTable:
    """Potential density v(y) = E(local time at y, whole life) on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if method == CLOSED_FORM:
        return PotentialTable(y=grid, values=_closed_form_potential(chars, grid), method=method)
    if method == FOURIER:
        if chars.kill_rate <= 0:
            raise FourierUnavailable(
                "kill_rate = 0 puts a pole at theta = 0; tilt first (Esscher/Cramer)"
            )
        return _fourier_potential(chars, grid, fourier_n, theta_max)
    if method == MONTE_CARLO:
        return _monte_carlo_potential(chars, grid, n_paths, dt, rng)
    raise ValueError(f"unknown method {method!r}")


def _fourier_potential(chars, grid, fourier_n, theta_max):
    n = fourier_n or constants.FOURIER_N
    if theta_max is None:
        theta_max = (constants.FOURIER_THETA_MAX if chars.sigma2 > 0
                     else constants.FOURIER_THETA_MAX_BV)
    ref = _reference(chars)
    d_theta = 2.0 * theta_max / n
    k = np.arange(n)
    theta = (k - n // 2) * d_theta
    g_full = -1.0 / exponent_on_imaginary(chars, theta)
    g_ref = -1.0 / exponent_on_imaginary(ref, theta)
    resid = g_full - g_ref
    # v_res(y_j) = (dtheta/2pi) * sum_k exp(-i theta_k y_j) resid_k, with
    # y_j = (j - n/2) * dy and dy * dtheta = 2 pi / n: an FFT up to phases.
    phased = resid * np.where(k % 2 == 0, 1.0, -1.0)
    spec = np.fft.fft(phased)
    sign_j = np.where(k % 2 == 0, 1.0, -1.0)
    center = 1.0 if (n // 2) % 2 == 0 else -1.0
    v_res = (d_theta / (2 * np.pi)) * center * sign_j * spec
    dy = np.pi / theta_max
    y_fft = (k - n // 2) * dy
    v_ref = _closed_form_potential(ref, grid)
    keep = np.abs(y_fft) <= max(np.abs(grid).max() + 1.0, 2.0)
    vals = v_ref + np.interp(grid, y_fft[keep], np.real(v_res[keep]))
    return PotentialTable(y=grid, values=np.maximum(vals, 0.0), method=FOURIER)


def _monte_carlo_potential(chars, grid, n_paths, dt, rng):
    """Occupation histogram over sampled paths: density of time spent per bin."""
    if rng is None:
        rng = np.random.default_rng(0)
    if chars.kill_rate <= 0:
        raise NonTerminating("Monte Carlo potential needs a terminating process")
    step = grid[1] - grid[0]
    edges = np.concatenate([grid - step / 2, [grid[-1] + step / 2]])
    hist = np.zeros(len(grid))
    batch = 2000
    done = 0
    while done < n_paths:
        m = min(batch, n_paths - done)
        zetas = rng.exponential(1.0 / chars.kill_rate, size=m)
        for zeta in zetas:
            nsteps = max(1, int(zeta / dt))
            incr = (chars.effective_drift * dt
                    + np.sqrt(chars.sigma2 * dt) * rng.standard_normal(nsteps))
            if chars.total_jump_rate > 0:
                deltas = np.zeros(nsteps)
                for y, rate in chars.jump_atoms:
                    for tj in _poisson_times(rate, nsteps * dt, rng):
                        deltas[min(int(tj / dt), nsteps - 1)] += y
                incr = incr + deltas
            vals = np.concatenate([[0.0], np.cumsum(incr)])
            hist += np.histogram(vals[:-1], bins=edges)[0] * dt
        done += m
    return PotentialTable(y=grid, values=hist / (n_paths * step), method=MONTE_CARLO)


def hitting_probability(
    chars: LevyCharacteristics,
    x: float,
    y: float,
    table: PotentialTable | None = None,
) -> float:
    """P_x(hit y before death) = v(y - x) / v(0)."""
    if table is None:
        span = max(abs(y - x) + 2.0, 4.0)
        grid = np.linspace(-span, span, 2049)
        table = potential_density(chars, grid, method=FOURIER)
    return table(y - x) / table(0.0)


# ---------------------------------------------------------------------------
# conditioning on the terminal value
# ---------------------------------------------------------------------------

def _truncate_bv(path: PathSkeleton, age: float) -> PathSkeleton:
    segs = []
    t = 0.0
    for d, m, j in path.segments:
        if t + d < age:
            segs.append((d, m, j))
            t += d
        else:
            segs.append((age - t, m, None))
            break
    return PathSkeleton(start=path.start, mode=BV, zeta=age, killed=True,
                        segments=tuple(segs))


def kill_at_last_passage(path: PathSkeleton, y: float, delta: float | None = None) -> PathSkeleton | None:
    """Path killed at its last passage at y, or None if y is never hit."""
    if path.mode == BV:
        ages = path.crossings(y)
        if ages.size == 0:
            return None
        return _truncate_bv(path, float(ages[-1]))
    idx = grid_hit_indices(path.values, y, delta)
    if idx.size == 0:
        return None
    k = int(idx[-1])
    if abs(path.values[k] - y) > delta:
        # bare straddle between k and k+1: the true path equals y in
        # between; record the crossing in the next grid slot so the
        # terminal value is exact
        k += 1
        vals = path.values[:k + 1].copy()
        vals[k] = y
    else:
        vals = path.values[:k + 1].copy()
    return PathSkeleton(start=path.start, mode=DIFFUSION, zeta=k * path.dt,
                        killed=True, dt=path.dt, values=vals)


def sample_conditioned(
    chars: LevyCharacteristics,
    x: float,
    y: float,
    rng: np.random.Generator,
    mode: str = DIFFUSION,
    dt: float = constants.DT,
    budget: int = constants.REJECTION_BUDGET,
    floor: float | None = None,
) -> PathSkeleton:
    """One path with law P_{x,y}: rejection until y is hit, killed at the
    last passage.  For unkilled (Cramer-tilted) characteristics a floor
    below y is used to decide that no further return will happen."""
    delta = hit_tolerance(chars, dt) if mode == DIFFUSION else None
    if chars.kill_rate <= 0 and floor is None:
        floor = y - 15.0
    for _ in range(budget):
        path = sample_path(chars, x, mode, dt, rng, floor=floor)
        killed = kill_at_last_passage(path, y, delta)
        if killed is not None:
            return killed
    raise BudgetExhausted(f"no hit of {y} from {x} in {budget} attempts")
