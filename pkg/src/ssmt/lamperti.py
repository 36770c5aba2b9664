"""Lamperti time change between killed Levy paths and positive
self-similar Markov paths (pssMp), with local-time transfer.

Conventions: a pssMp started from x is the x-rescaling of the unit-start
law, so X_t = start * exp(xi_s) under t = start^alpha * int_0^s
exp(alpha xi_r) dr.  BV segments use the closed-form time change; grids
use the exponential-of-midpoint rule (O(dt^2) local error), whose inverse
recovers the source grid exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePath, MismatchedPath
from .levy import BV, DIFFUSION, LocalTimeProfile, PathSkeleton


@dataclass(frozen=True)
class PssmpPath:
    """One pssMp path in its own time scale.

    BV: per-segment rows (t0, t_dur, x0, xi_slope, xi_jump_after) with
    X(t) = x0 * (1 + alpha*m*(t - t0) / x0^alpha)^(1/alpha) on a segment of
    slope m (and x0 * exp(m*s) when alpha*m degenerates).  DIFFUSION: the
    nonuniform time grid paired with X values.
    """

    alpha: float
    start: float
    z: float
    killed: bool
    mode: str
    seg_t0: np.ndarray | None = None
    seg_dur: np.ndarray | None = None
    seg_x0: np.ndarray | None = None
    seg_slope: np.ndarray | None = None
    seg_jump: np.ndarray | None = None
    t_grid: np.ndarray | None = None
    x_values: np.ndarray | None = None
    source: PathSkeleton | None = None

    @property
    def horizon(self) -> float:
        if self.mode == BV:
            return float(self.seg_t0[-1] + self.seg_dur[-1])
        return float(self.t_grid[-1])

    def value_at(self, t: float) -> float:
        if self.mode == DIFFUSION:
            k = int(np.searchsorted(self.t_grid, t, side="right")) - 1
            k = min(max(k, 0), len(self.x_values) - 1)
            return float(self.x_values[k])
        k = int(np.searchsorted(self.seg_t0 + self.seg_dur, t, side="left"))
        k = min(k, len(self.seg_t0) - 1)
        return self._eval_segment(k, t)

    def _eval_segment(self, k: int, t: float) -> float:
        x0 = self.seg_x0[k]
        m = self.seg_slope[k]
        dt_loc = t - self.seg_t0[k]
        am = self.alpha * m
        if m == 0.0:
            return float(x0)
        inner = 1.0 + am * dt_loc / x0**self.alpha
        return float(x0 * inner ** (1.0 / self.alpha))

    def extrema(self, t_max: float | None = None) -> tuple[float, float]:
        """(min, max) of X over [0, t_max]; segments are monotone so only
        endpoints matter in BV mode."""
        if self.mode == DIFFUSION:
            if t_max is None:
                vals = self.x_values
            else:
                n = int(np.searchsorted(self.t_grid, t_max, side="right"))
                vals = self.x_values[:max(n, 1)]
            return float(vals.min()), float(vals.max())
        lo, hi = self.start, self.start
        for k in range(len(self.seg_t0)):
            t0, d = self.seg_t0[k], self.seg_dur[k]
            if t_max is not None and t0 >= t_max:
                break
            t_end = t0 + d if t_max is None else min(t0 + d, t_max)
            v = self._eval_segment(k, t_end)
            v0 = self.seg_x0[k]
            lo = min(lo, v, v0)
            hi = max(hi, v, v0)
        return float(lo), float(hi)

    def sample_polyline(self, resolution: int = 256) -> np.ndarray:
        """(t, X) polyline for exports and figures."""
        if self.mode == DIFFUSION:
            idx = np.unique(np.linspace(0, len(self.t_grid) - 1, resolution).astype(int))
            return np.column_stack([self.t_grid[idx], self.x_values[idx]])
        ts = np.linspace(0.0, self.horizon, resolution)
        return np.column_stack([ts, [self.value_at(t) for t in ts]])

    def to_csv(self, fp, resolution: int = 256):
        fp.write("t,x\n")
        for t, x in self.sample_polyline(resolution):
            fp.write(f"{t:.12g},{x:.12g}\n")


def _segment_duration(x0: float, m: float, d_s: float, alpha: float) -> float:
    """Time-change length of one linear xi-segment, exact."""
    am = alpha * m
    if m == 0.0 or d_s == 0.0:
        return x0**alpha * d_s
    return x0**alpha * (np.expm1(am * d_s)) / am


def to_pssmp(path: PathSkeleton, alpha: float, start: float) -> PssmpPath:
    """Lamperti transform of a Levy path; X = start*exp(xi), exact per
    segment in BV mode, midpoint rule on grids."""
    if alpha <= 0 or start <= 0:
        raise ValueError("alpha and start must be positive")
    if path.mode == BV:
        t0s, durs, x0s, slopes, jumps = [], [], [], [], []
        t, v = 0.0, path.start
        for d, m, j in path.segments:
            x0 = start * np.exp(v)
            t0s.append(t)
            x0s.append(x0)
            slopes.append(m)
            dur = _segment_duration(x0, m, d, alpha)
            durs.append(dur)
            jumps.append(j if j is not None else np.nan)
            t += dur
            v += m * d + (j if j is not None else 0.0)
        return PssmpPath(alpha=alpha, start=start, z=t, killed=path.killed, mode=BV,
                         seg_t0=np.array(t0s), seg_dur=np.array(durs),
                         seg_x0=np.array(x0s), seg_slope=np.array(slopes),
                         seg_jump=np.array(jumps), source=path)
    xi = path.values
    mid = np.exp(alpha * 0.5 * (xi[:-1] + xi[1:]))
    t_grid = np.concatenate([[0.0], np.cumsum(start**alpha * mid * path.dt)])
    return PssmpPath(alpha=alpha, start=start, z=float(t_grid[-1]), killed=path.killed,
                     mode=DIFFUSION, t_grid=t_grid, x_values=start * np.exp(xi),
                     source=path)


def from_pssmp(x_path: PssmpPath) -> PathSkeleton:
    """Inverse transform, reconstructed from the pssMp data alone."""
    a = x_path.alpha
    start = x_path.start
    if x_path.mode == BV:
        if np.any(x_path.seg_x0 <= 0):
            raise DegeneratePath("pssMp value hit zero before lifetime")
        segs = []
        n = len(x_path.seg_t0)
        for k in range(n):
            x0, m, dur = x_path.seg_x0[k], x_path.seg_slope[k], x_path.seg_dur[k]
            am = a * m
            if m == 0.0:
                d_s = dur / x0**a
            else:
                d_s = np.log1p(am * dur / x0**a) / am
            j = x_path.seg_jump[k]
            segs.append((float(d_s), float(m), None if np.isnan(j) else float(j)))
        zeta = sum(d for d, _, _ in segs) if x_path.killed else np.inf
        return PathSkeleton(start=float(np.log(x_path.seg_x0[0] / start)), mode=BV,
                            zeta=zeta if x_path.killed else np.inf,
                            killed=x_path.killed, segments=tuple(segs))
    if np.any(x_path.x_values <= 0):
        raise DegeneratePath("pssMp value hit zero before lifetime")
    xi = np.log(x_path.x_values / start)
    mid = np.exp(a * 0.5 * (xi[:-1] + xi[1:]))
    ds = np.diff(x_path.t_grid) / (start**a * mid)
    dt = float(np.median(ds)) if len(ds) else 1.0
    zeta = (len(xi) - 1) * dt if x_path.killed else np.inf
    return PathSkeleton(start=float(xi[0]), mode=DIFFUSION, zeta=zeta,
                        killed=x_path.killed, dt=dt, values=xi)


def time_change(x_path: PssmpPath, s) -> np.ndarray | float:
    """Map Levy time s to pssMp time t, exact in BV mode."""
    scalar = np.isscalar(s)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if x_path.mode == DIFFUSION:
        src = x_path.source
        pos = s / src.dt
        k = np.clip(pos.astype(int), 0, len(x_path.t_grid) - 1)
        frac = np.clip(pos - k, 0.0, 1.0)
        k2 = np.minimum(k + 1, len(x_path.t_grid) - 1)
        out = x_path.t_grid[k] * (1 - frac) + x_path.t_grid[k2] * frac
    else:
        src = x_path.source
        ages, _, _, durs = src.segment_table()
        ends = ages + durs
        idx = np.clip(np.searchsorted(ends, s, side="left"), 0, len(ages) - 1)
        out = np.empty_like(s)
        for i, (si, k) in enumerate(zip(s, idx)):
            x0 = x_path.seg_x0[k]
            m = x_path.seg_slope[k]
            out[i] = x_path.seg_t0[k] + _segment_duration(x0, m, si - ages[k], x_path.alpha)
    return float(out[0]) if scalar else out


def transfer_local_time(profile: LocalTimeProfile, x_path: PssmpPath) -> LocalTimeProfile:
    """Push the Levy local time at level y through the time change: the
    repartition satisfies L(x, t) = ell(y, s), so atom positions move and
    masses are preserved; the new level is x = start * e^y."""
    if x_path.source is None or profile.path_id != id(x_path.source):
        raise MismatchedPath("profile was not computed from this path's source")
    new_level = x_path.start * float(np.exp(profile.level))
    if profile.atom_times is not None:
        times = time_change(x_path, profile.atom_times) if profile.atom_times.size else profile.atom_times
        return LocalTimeProfile(level=new_level, mode=profile.mode, total=profile.total,
                                atom_times=np.atleast_1d(times), atom_masses=profile.atom_masses,
                                path_id=id(x_path))
    times = time_change(x_path, profile.cum_times) if profile.cum_times.size else profile.cum_times
    return LocalTimeProfile(level=new_level, mode=profile.mode, total=profile.total,
                            cum_times=np.atleast_1d(times), cum_values=profile.cum_values,
                            path_id=id(x_path))
