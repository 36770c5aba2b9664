import numpy as np
import pytest

from ssmt import constants
from ssmt.errors import (
    BudgetExhausted,
    ExactUnavailable,
    FourierUnavailable,
    InvalidTilt,
    NoRoot,
    NonTerminating,
    OutOfGrid,
)
from ssmt.levy import (
    BV,
    CLOSED_FORM,
    DIFFUSION,
    EXACT,
    FOURIER,
    MONTE_CARLO,
    LevyCharacteristics,
    PathSkeleton,
    cramer_root,
    esscher_tilt,
    evaluate_exponent,
    grid_hit_indices,
    hit_tolerance,
    hitting_probability,
    local_time,
    local_time_total,
    occupation_check,
    occupation_check_band,
    potential_density,
    reverse_path,
    sample_conditioned,
    sample_path,
)
from ssmt.stats import ks_exponential, ks_two_sample

BM_KILLED = LevyCharacteristics(sigma2=1.0, drift=0.0, jump_atoms=(), kill_rate=0.5)
DRIFT_ONLY = LevyCharacteristics(sigma2=0.0, drift=-1.0, jump_atoms=(), kill_rate=0.2)
BV_JUMPS = LevyCharacteristics(sigma2=0.0, drift=-1.0, jump_atoms=((0.8, 0.7),),
                               kill_rate=0.4)


class TestExponent:
    def test_kill_only_at_zero(self):
        assert evaluate_exponent(BM_KILLED, 0.0) == -0.5

    def test_pure_gaussian(self):
        c = LevyCharacteristics(1.0, 0.0, (), 0.0)
        assert evaluate_exponent(c, 2.0) == 2.0

    def test_compensated_atom(self):
        # drift -1, atom ln 2 at rate 1: -1 + (2 - 1 - ln 2) = -ln 2
        c = LevyCharacteristics(0.0, -1.0, ((np.log(2.0), 1.0),), 0.0)
        assert evaluate_exponent(c, 1.0) == pytest.approx(-0.6931471805599453, abs=1e-14)

    def test_large_atom_uncompensated(self):
        c = LevyCharacteristics(0.0, 0.0, ((1.5, 2.0),), 0.0)
        expect = 2.0 * (np.exp(1.5) - 1.0)
        assert evaluate_exponent(c, 1.0) == pytest.approx(expect, rel=1e-14)

    def test_complex_argument(self):
        val = evaluate_exponent(BM_KILLED, 1j)
        assert val == pytest.approx(-0.5 - 0.5)

    def test_invariants_rejected(self):
        with pytest.raises(ValueError):
            LevyCharacteristics(-1.0, 0.0, (), 0.0)
        with pytest.raises(ValueError):
            LevyCharacteristics(0.0, 0.0, ((1.0, -2.0),), 0.0)

    def test_json_round_trip(self):
        c = BV_JUMPS
        assert LevyCharacteristics.loads(c.dumps()) == c


class TestSampling:
    def test_drift_only_single_segment(self):
        p = sample_path(DRIFT_ONLY, 0.0, BV, None, np.random.default_rng(0))
        assert len(p.segments) == 1
        d, slope, jump = p.segments[0]
        assert slope == -1.0 and jump is None
        assert p.zeta == pytest.approx(d)

    def test_determinism(self):
        p1 = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(7))
        p2 = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(7))
        assert p1 == p2
        p3 = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(8))
        assert p1 != p3

    def test_lifetime_exponential(self):
        rng = np.random.default_rng(1)
        zetas = [sample_path(BM_KILLED, 0.0, DIFFUSION, 1e-3, rng).zeta
                 for _ in range(20_000)]
        assert np.mean(zetas) == pytest.approx(2.0, rel=0.02)

    def test_diffusion_grid_length(self):
        p = sample_path(BM_KILLED, 0.0, DIFFUSION, 1e-3, np.random.default_rng(5))
        assert len(p.values) == int(p.zeta / 1e-3) + 1

    def test_nonterminating_guard(self):
        c = LevyCharacteristics(1.0, 0.5, (), 0.0)
        with pytest.raises(NonTerminating):
            sample_path(c, 0.0, DIFFUSION, 1e-3, np.random.default_rng(0))

    def test_floor_truncation(self):
        c = LevyCharacteristics(1.0, -1.0, (), 0.0)
        p = sample_path(c, 0.0, DIFFUSION, 1e-3, np.random.default_rng(0), floor=-5.0)
        assert not p.killed and np.isinf(p.zeta)
        assert p.values[-1] <= -5.0

    def test_bv_requires_no_gaussian(self):
        with pytest.raises(ValueError):
            sample_path(BM_KILLED, 0.0, BV, None, np.random.default_rng(0))


class TestLocalTime:
    def test_no_visits(self):
        p = sample_path(DRIFT_ONLY, 0.0, BV, None, np.random.default_rng(0))
        prof = local_time(p, 1.0 + p.zeta, 0.5)  # level above the whole path
        assert prof.total == 0.0

    def test_unit_slope_crossing(self):
        p = PathSkeleton(start=0.0, mode=BV, zeta=2.0, killed=True,
                         segments=((2.0, -1.0, None),))
        prof = local_time(p, -1.0, EXACT)
        assert prof.total == 1.0
        assert prof.atom_times.tolist() == [1.0]

    def test_window_matches_exact_on_linear(self):
        p = PathSkeleton(start=0.0, mode=BV, zeta=2.0, killed=True,
                         segments=((2.0, -1.0, None),))
        for eps in (0.5, 0.1, 0.01):
            assert local_time(p, -1.0, eps).total == pytest.approx(1.0)

    def test_jump_over_level_contributes_nothing(self):
        p = PathSkeleton(start=0.0, mode=BV, zeta=2.0, killed=True,
                         segments=((1.0, 0.5, -2.0), (1.0, 0.5, None)))
        # path: 0 -> 0.5, jump to -1.5, -> -1.0; level -0.5 only jumped over
        assert local_time(p, -0.5, EXACT).total == 0.0

    def test_start_at_level_counts(self):
        p = PathSkeleton(start=0.0, mode=BV, zeta=1.0, killed=True,
                         segments=((1.0, -2.0, None),))
        prof = local_time(p, 0.0, EXACT)
        assert prof.total == pytest.approx(0.5)
        assert prof.atom_times.tolist() == [0.0]

    def test_exact_unavailable_on_grid(self):
        p = sample_path(BM_KILLED, 0.0, DIFFUSION, 1e-3, np.random.default_rng(0))
        with pytest.raises(ExactUnavailable):
            local_time(p, 0.0, EXACT)

    def test_cumulative_nondecreasing(self):
        p = sample_path(BM_KILLED, 0.0, DIFFUSION, 1e-3, np.random.default_rng(3))
        prof = local_time(p, 0.2, 0.05)
        assert prof.cum_values[0] == 0.0
        assert np.all(np.diff(prof.cum_values) >= 0)
        assert prof.total == pytest.approx(prof.cum_values[-1])
        assert prof.total == pytest.approx(local_time_total(p, 0.2, 0.05))


class TestOccupation:
    def test_zero_function(self):
        p = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(2))
        lhs, rhs = occupation_check(p, lambda v: 0.0 * v, EXACT,
                                    np.linspace(-5, 3, 401))
        assert lhs == 0.0 and rhs == 0.0

    @pytest.mark.parametrize("seed", range(10))
    def test_band_closed_form_exact(self, seed):
        p = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(seed))
        lo = p.terminal / 2 - 0.3
        lhs, rhs = occupation_check_band(p, lo, lo + 0.6)
        assert abs(lhs - rhs) < 1e-9

    def test_diffusion_windowed(self):
        p = sample_path(BM_KILLED, 0.0, DIFFUSION, 1e-3, np.random.default_rng(11))
        f = lambda v: np.exp(-(v - 0.2) ** 2)
        lhs, rhs = occupation_check(p, f, 1e-2, np.linspace(-6, 4, 1001))
        assert abs(lhs - rhs) / max(lhs, 1e-12) < 0.05


class TestPotential:
    def test_closed_form_is_exponential(self):
        grid = np.linspace(-5, 5, 801)
        tab = potential_density(BM_KILLED, grid, method=CLOSED_FORM)
        assert np.max(np.abs(tab.values - np.exp(-np.abs(grid)))) < 1e-12

    def test_fourier_matches_closed_form(self):
        grid = np.linspace(-5, 5, 2001)
        tab = potential_density(BM_KILLED, grid, method=FOURIER)
        assert np.max(np.abs(tab.values - np.exp(-np.abs(grid)))) < 1e-6

    def test_fourier_with_jumps_vs_monte_carlo(self):
        chars = LevyCharacteristics(1.0, -0.5, ((np.log(0.5), 1.0),), 0.25)
        grid = np.linspace(-4, 4, 161)
        four = potential_density(chars, grid, method=FOURIER)
        mc = potential_density(chars, grid, method=MONTE_CARLO, n_paths=30_000,
                               dt=1e-3, rng=np.random.default_rng(6))
        for y in (-1.0, 0.0, 0.5):
            assert mc(y) == pytest.approx(four(y), rel=0.03)

    def test_maximum_at_zero(self):
        chars = LevyCharacteristics(1.0, -0.8, ((0.4, 0.5),), 0.3)
        grid = np.linspace(-6, 6, 2401)
        tab = potential_density(chars, grid, method=FOURIER)
        assert np.all(tab.values <= tab(0.0) + 1e-9)

    def test_fourier_needs_killing(self):
        c = LevyCharacteristics(1.0, -1.0, (), 0.0)
        with pytest.raises(FourierUnavailable):
            potential_density(c, np.linspace(-2, 2, 41), method=FOURIER)

    def test_out_of_grid(self):
        tab = potential_density(BM_KILLED, np.linspace(-2, 2, 41), method=CLOSED_FORM)
        with pytest.raises(OutOfGrid):
            tab(5.0)

    def test_csv_export(self, tmp_path):
        tab = potential_density(BM_KILLED, np.linspace(-1, 1, 11), method=CLOSED_FORM)
        path = tmp_path / "v.csv"
        with open(path, "w") as fp:
            tab.to_csv(fp)
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "y,v"
        assert len(rows) == 12


class TestHitting:
    def test_x_equals_y(self):
        assert hitting_probability(BM_KILLED, 0.3, 0.3) == pytest.approx(1.0)

    def test_closed_form_value(self):
        assert hitting_probability(BM_KILLED, 0.0, 1.0) == pytest.approx(
            np.exp(-1.0), rel=1e-5)

    def test_empirical_frequency(self):
        rng = np.random.default_rng(21)
        delta = hit_tolerance(BM_KILLED, 1e-3)
        hits = 0
        n = 20_000
        for _ in range(n):
            p = sample_path(BM_KILLED, 0.0, DIFFUSION, 1e-3, rng)
            if grid_hit_indices(p.values, 1.0, delta).size:
                hits += 1
        assert hits / n == pytest.approx(np.exp(-1.0), rel=0.02)


class TestEsscher:
    def test_zero_tilt_is_identity(self):
        assert esscher_tilt(BV_JUMPS, 0.0) == BV_JUMPS

    def test_exponent_shift_identity(self):
        chars = LevyCharacteristics(1.0, -0.5, ((np.log(0.5), 1.0),), 0.25)
        beta = 0.5
        tilted = esscher_tilt(chars, beta)
        for g in np.linspace(-1.0, 2.0, 20):
            lhs = evaluate_exponent(tilted, g)
            rhs = evaluate_exponent(chars, beta + g)
            assert abs(lhs - rhs) < 1e-10

    def test_tilted_potential_identity(self):
        chars = LevyCharacteristics(1.0, -0.5, ((np.log(0.5), 1.0),), 0.25)
        beta = 0.5
        grid = np.linspace(-8, 8, 3201)
        tab = potential_density(chars, grid, method=FOURIER)
        tab_b = potential_density(esscher_tilt(chars, beta), grid, method=FOURIER)
        win = np.abs(grid) <= 5
        target = np.exp(beta * grid[win]) * tab.values[win]
        assert np.max(np.abs(tab_b.values[win] - target) / target) < 0.01

    def test_invalid_tilt(self):
        with pytest.raises(InvalidTilt):
            esscher_tilt(BM_KILLED, 2.0)  # psi(2) = 1.5 > 0


class TestConditioned:
    def test_terminal_value_bv(self):
        rng = np.random.default_rng(4)
        p = sample_conditioned(BV_JUMPS, 0.0, -1.3, rng, mode=BV)
        assert p.terminal == pytest.approx(-1.3, abs=1e-12)
        assert p.killed and np.isfinite(p.zeta)

    def test_terminal_value_diffusion(self):
        rng = np.random.default_rng(4)
        delta = hit_tolerance(BM_KILLED, 1e-3)
        for _ in range(20):
            p = sample_conditioned(BM_KILLED, 0.0, 0.8, rng, mode=DIFFUSION, dt=1e-3)
            assert abs(p.terminal - 0.8) <= delta + 1e-12

    def test_budget_exhausted(self):
        rng = np.random.default_rng(4)
        with pytest.raises(BudgetExhausted):
            sample_conditioned(BM_KILLED, 0.0, 30.0, rng, mode=DIFFUSION,
                               dt=1e-3, budget=5)

    def test_x_equals_y_never_rejects(self):
        # a regular origin is hit instantly: the first path is accepted
        rng = np.random.default_rng(4)
        p = sample_conditioned(BM_KILLED, 0.3, 0.3, rng, mode=DIFFUSION,
                               dt=1e-3, budget=1)
        assert p.killed and abs(p.terminal - 0.3) <= hit_tolerance(BM_KILLED, 1e-3)

    def test_local_time_exponential_given_hit(self):
        # ell(y, infinity) ~ Exp(v(0)) conditionally on hitting y;
        # condition on a window visit: grid paths that only straddle the
        # level between samples carry no measurable occupation at all
        rng = np.random.default_rng(44)
        y = 0.5
        totals = []
        while len(totals) < 3000:
            p = sample_path(BM_KILLED, 0.0, DIFFUSION, 1e-3, rng)
            t = local_time_total(p, y, constants.EPS_TOTAL)
            if t > 0:
                totals.append(t)
        _, pval = ks_exponential(totals, 1.0)
        assert pval > constants.KS_ALPHA

    def test_biased_identity_predictable(self):
        # E_{x,y}(A_zeta) = E_x(int A dl(y,.)) / v(y-x) for A_t = min(t, c)
        rng = np.random.default_rng(99)
        x, y, c = 0.0, 0.7, 1.5
        vyx = float(np.exp(-abs(y - x)))
        lhs, rhs = [], []
        for _ in range(3000):
            p = sample_conditioned(BM_KILLED, x, y, rng, mode=DIFFUSION, dt=1e-3)
            lhs.append(min(p.zeta, c))
        for _ in range(3000):
            p = sample_path(BM_KILLED, x, DIFFUSION, 1e-3, rng)
            prof = local_time(p, y, constants.EPS_TOTAL)
            inc = np.diff(prof.cum_values)
            rhs.append(float(np.sum(np.minimum(prof.cum_times[1:], c) * inc)))
        se = np.sqrt(np.var(lhs) / len(lhs) + np.var(np.array(rhs) / vyx) / len(rhs))
        assert abs(np.mean(lhs) - np.mean(rhs) / vyx) <= 3 * se


class TestCramer:
    def test_brownian_root(self):
        rho, psi_prime = cramer_root(BM_KILLED)
        assert rho == pytest.approx(-1.0, abs=1e-12)
        assert psi_prime == pytest.approx(-1.0, rel=1e-6)

    def test_tilt_by_root_kills_nothing(self):
        rho, _ = cramer_root(BM_KILLED)
        assert esscher_tilt(BM_KILLED, rho).kill_rate == pytest.approx(0.0, abs=1e-12)

    def test_potential_asymptote(self):
        rho, psi_prime = cramer_root(BM_KILLED)
        tab = potential_density(BM_KILLED, np.linspace(-10, 10, 4001), method=FOURIER)
        assert np.exp(rho * -8.0) * tab(-8.0) == pytest.approx(-1.0 / psi_prime,
                                                               abs=1e-3)

    def test_no_root_without_killing(self):
        with pytest.raises(NoRoot):
            cramer_root(LevyCharacteristics(1.0, -1.0, (), 0.0))

    def test_conditioned_law_converges(self):
        # P_{x,y} for y = -8 against P^(rho), via the rho-tilt representation
        rho, _ = cramer_root(BM_KILLED)
        tilted = esscher_tilt(BM_KILLED, rho)
        rng = np.random.default_rng(123)
        k = int(1.0 / 1e-3)
        cond = []
        for _ in range(2000):
            p = sample_conditioned(tilted, 0.0, -8.0, rng, mode=DIFFUSION, dt=1e-3)
            if p.zeta > 1.0:
                cond.append(p.values[k])
        free = [sample_path(tilted, 0.0, DIFFUSION, 1e-3, rng,
                            floor=-12.0).values[k] for _ in range(2000)]
        _, pval = ks_two_sample(cond, free)
        assert pval > constants.KS_ALPHA


class TestReverse:
    def test_involution(self):
        p = sample_path(BV_JUMPS, 0.0, BV, None, np.random.default_rng(9))
        back = reverse_path(reverse_path(p))
        assert back.start == pytest.approx(p.start)
        for (d1, m1, j1), (d2, m2, j2) in zip(p.segments, back.segments):
            assert d1 == pytest.approx(d2) and m1 == m2
            assert (j1 is None) == (j2 is None)
            if j1 is not None:
                assert j1 == pytest.approx(j2)

    def test_reversed_slope(self):
        p = sample_path(DRIFT_ONLY, 0.0, BV, None, np.random.default_rng(9))
        assert reverse_path(p).segments[0][1] == 1.0

    def test_diffusion_reversal(self):
        p = sample_path(BM_KILLED, 0.0, DIFFUSION, 1e-3, np.random.default_rng(9))
        r = reverse_path(p)
        assert r.values[0] == p.values[-1]
        assert np.array_equal(reverse_path(r).values, p.values)

    def test_reversed_conditioned_matches_dual(self):
        # functionals of reversed P_{x,y} samples against the dual process
        # conditioned from y to x (here the model is symmetric, so the dual
        # equals the original; lifetimes must agree in law)
        rng = np.random.default_rng(31)
        x, y = 0.0, 0.6
        fwd, dual = [], []
        for _ in range(2000):
            p = sample_conditioned(BM_KILLED, x, y, rng, mode=DIFFUSION, dt=1e-3)
            fwd.append(reverse_path(p).zeta)
        for _ in range(2000):
            p = sample_conditioned(BM_KILLED, y, x, rng, mode=DIFFUSION, dt=1e-3)
            dual.append(p.zeta)
        _, pval = ks_two_sample(fwd, dual)
        assert pval > constants.KS_ALPHA
