import numpy as np
import pytest

from ssmt.errors import DegeneratePath, MismatchedPath
from ssmt.lamperti import PssmpPath, from_pssmp, time_change, to_pssmp, transfer_local_time
from ssmt.levy import (
    BV,
    DIFFUSION,
    EXACT,
    FOURIER,
    LevyCharacteristics,
    PathSkeleton,
    local_time,
    local_time_total,
    potential_density,
    sample_path,
)

BV_JUMPS = LevyCharacteristics(sigma2=0.0, drift=-1.0, jump_atoms=((0.8, 0.7),),
                               kill_rate=0.4)
BM_KILLED = LevyCharacteristics(sigma2=1.0, drift=0.0, jump_atoms=(), kill_rate=0.5)


def pure_drift_path(zeta=50.0, slope=-1.0):
    return PathSkeleton(start=0.0, mode=BV, zeta=zeta, killed=True,
                        segments=((zeta, slope, None),))


def test_constant_path():
    p = PathSkeleton(start=0.0, mode=BV, zeta=3.0, killed=True,
                     segments=((3.0, 0.0, None),))
    xp = to_pssmp(p, 1.0, 1.0)
    assert xp.value_at(1.5) == 1.0
    assert xp.z == pytest.approx(3.0)


def test_pure_drift_is_linear():
    # xi_s = -s, alpha = 1, start 1: X_t = 1 - t with lifetime 1
    xp = to_pssmp(pure_drift_path(), 1.0, 1.0)
    assert xp.z == pytest.approx(1.0, rel=1e-12)
    for t in (0.0, 0.25, 0.5, 0.9):
        assert xp.value_at(t) == pytest.approx(1.0 - t, rel=1e-12)


def test_inverse_of_linear():
    xp = to_pssmp(pure_drift_path(zeta=5.0), 1.0, 1.0)
    back = from_pssmp(xp)
    assert back.start == pytest.approx(0.0)
    assert back.segments[0][1] == -1.0
    assert back.segments[0][0] == pytest.approx(5.0)


def test_constant_x_gives_log_ratio():
    xp = to_pssmp(PathSkeleton(start=np.log(2.0), mode=BV, zeta=2.0, killed=True,
                               segments=((2.0, 0.0, None),)), 1.0, 1.5)
    assert xp.value_at(1.0) == pytest.approx(3.0)
    back = from_pssmp(xp)
    assert back.value_at(1.0) == pytest.approx(np.log(2.0))


@pytest.mark.parametrize("seed", range(100))
def test_round_trip_bv(seed):
    p = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(seed))
    back = from_pssmp(to_pssmp(p, 1.3, 2.0))
    assert back.start == pytest.approx(p.start, abs=1e-12)
    assert len(back.segments) == len(p.segments)
    for (d1, m1, j1), (d2, m2, j2) in zip(p.segments, back.segments):
        # expm1/log1p round off at deep negative exponents: relative only
        assert d2 == pytest.approx(d1, rel=1e-9)
        assert m1 == m2
        assert (j1 is None) == (j2 is None)
        if j1 is not None:
            assert j2 == pytest.approx(j1, abs=1e-12)


def test_round_trip_diffusion():
    p = sample_path(BM_KILLED, 0.0, DIFFUSION, 1e-3, np.random.default_rng(5))
    back = from_pssmp(to_pssmp(p, 0.7, 1.5))
    assert np.max(np.abs(back.values - p.values)) < 1e-12
    assert back.dt == pytest.approx(p.dt)


def test_degenerate_path_rejected():
    xp = PssmpPath(alpha=1.0, start=1.0, z=1.0, killed=True, mode=DIFFUSION,
                   t_grid=np.array([0.0, 0.5, 1.0]),
                   x_values=np.array([1.0, 0.0, 0.5]))
    with pytest.raises(DegeneratePath):
        from_pssmp(xp)


def test_time_change_strictly_increasing():
    p = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(3))
    xp = to_pssmp(p, 1.2, 1.0)
    s = np.linspace(0.0, p.zeta, 64)
    t = time_change(xp, s)
    assert np.all(np.diff(t) > 0)
    assert t[0] == 0.0
    assert t[-1] == pytest.approx(xp.z, rel=1e-9)


def test_scaling_property():
    # with the same source path, X started from c is c * X_1(c^-alpha t)
    c, alpha = 2.0, 1.3
    p = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(3))
    x1 = to_pssmp(p, alpha, 1.0)
    xc = to_pssmp(p, alpha, c)
    assert xc.z == pytest.approx(c**alpha * x1.z, rel=1e-12)
    for t in np.linspace(0.0, x1.z * 0.999, 25):
        assert xc.value_at(c**alpha * t) == pytest.approx(c * x1.value_at(t),
                                                          rel=1e-10)


class TestTransfer:
    def test_empty_profile(self):
        p = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(1))
        xp = to_pssmp(p, 1.0, 1.0)
        prof = local_time(p, 99.0, EXACT)
        out = transfer_local_time(prof, xp)
        assert out.total == 0.0

    def test_total_mass_preserved(self):
        p = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(2))
        xp = to_pssmp(p, 1.4, 2.0)
        y = p.terminal / 2
        prof = local_time(p, y, EXACT)
        out = transfer_local_time(prof, xp)
        assert out.total == prof.total
        assert out.level == pytest.approx(2.0 * np.exp(y))
        assert np.all(np.diff(out.atom_times) >= 0)

    def test_mismatched_path(self):
        p1 = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(1))
        p2 = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(2))
        prof = local_time(p1, -0.5, EXACT)
        with pytest.raises(MismatchedPath):
            transfer_local_time(prof, to_pssmp(p2, 1.0, 1.0))

    def test_mean_total_matches_potential(self):
        # E(L(x, z) | X_0 = x') = v(log(x / x'))
        x, x_start = 0.6, 1.0
        y = float(np.log(x / x_start))
        rng = np.random.default_rng(7)
        tot = [local_time_total(sample_path(BM_KILLED, 0.0, DIFFUSION, 1e-3, rng),
                                y, 0.05) for _ in range(20_000)]
        tab = potential_density(BM_KILLED, np.linspace(-3, 3, 601), method=FOURIER)
        assert np.mean(tot) == pytest.approx(tab(y), rel=0.03)


def test_occupation_identity_pssmp():
    # int f(X) dr = int f(x) L(x, t) x^{alpha-1} dx for a step f, exact BV
    alpha = 1.5
    p = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(11))
    xp = to_pssmp(p, alpha, 1.0)
    lo, hi = 0.3, 0.9  # band in pssMp space
    # lhs: time X spends in (lo, hi), via the xi band (log lo, log hi)
    lhs = 0.0
    v = p.start
    for d, m, j in p.segments:
        v1 = v + m * d
        if m != 0.0:
            s_a, s_b = sorted(((np.log(lo) - v) / m, (np.log(hi) - v) / m))
            a, b = max(s_a, 0.0), min(s_b, d)
            if b > a:
                # pssMp time spent = int_a^b e^{alpha xi_s} ds on the segment
                am = alpha * m
                lhs += np.exp(alpha * v) * (np.exp(am * b) - np.exp(am * a)) / am
        v = v1 + (j if j is not None else 0.0)
    # rhs: int_lo^hi L(x) x^{alpha-1} dx with exact per-level atoms
    xs = np.linspace(lo, hi, 20_001)
    slope = p.segments[0][1]
    totals = np.array([len(p.crossings(np.log(x))) / abs(slope) for x in xs])
    rhs = float(np.trapezoid(totals * xs ** (alpha - 1.0), xs))
    assert rhs == pytest.approx(lhs, rel=2e-4)


def test_csv_export(tmp_path):
    xp = to_pssmp(pure_drift_path(), 1.0, 1.0)
    path = tmp_path / "x.csv"
    with open(path, "w") as fp:
        xp.to_csv(fp, resolution=16)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x"
    assert len(lines) == 17
