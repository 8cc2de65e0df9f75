import math

import numpy as np
import pytest

from respondyn import (
    AffineTent,
    CircleMap,
    Family,
    LogisticMap,
    TentMap,
    VectorField,
    critical_orbit,
    eval_deriv,
    eval_map,
    inverse_branches,
    orbit_stats,
)
from respondyn.errors import ArgumentError, DomainError, PreconditionError
from respondyn.maps import detect_markov

SQRT2 = math.sqrt(2.0)


class TestEvalMap:
    def test_full_tent_peak(self, full_tent):
        assert eval_map(full_tent, 0.0) == 1.0

    def test_doubling(self):
        assert eval_map(CircleMap(degree=2), 0.75) == 0.5

    def test_logistic_top(self, top_logistic):
        assert eval_map(top_logistic, 0.5) == 1.0

    def test_tent_endpoints_exact(self):
        tm = TentMap(a=0.73, t=0.11)
        assert eval_map(tm, -1.0) == -1.0
        assert eval_map(tm, 1.0) == -1.0

    def test_domain_error(self, full_tent, top_logistic):
        with pytest.raises(DomainError):
            eval_map(full_tent, 1.5)
        with pytest.raises(DomainError):
            eval_map(top_logistic, -0.1)

    def test_circle_wraps(self):
        mp = CircleMap(degree=2, sin_amps=(0.05,))
        assert 0.0 <= eval_map(mp, 3.7) < 1.0
        assert eval_map(mp, 3.7) == pytest.approx(eval_map(mp, 0.7), abs=1e-12)


class TestEvalDeriv:
    def test_tent_right_slope(self, full_tent):
        assert eval_deriv(full_tent, 0.3) == -2.0

    def test_tent_kink_left_slope_flagged(self, full_tent):
        val, kink = eval_deriv(full_tent, 0.0, with_kink=True)
        assert val == 2.0 and bool(kink)
        _, off = eval_deriv(full_tent, 0.25, with_kink=True)
        assert not bool(off)

    def test_logistic_critical(self, top_logistic):
        assert eval_deriv(top_logistic, 0.5) == 0.0

    def test_doubling_second_deriv(self):
        assert eval_deriv(CircleMap(degree=2), 0.123, order=2) == 0.0

    def test_order_error(self, full_tent):
        with pytest.raises(ArgumentError):
            eval_deriv(full_tent, 0.3, order=3)


class TestInverseBranches:
    def test_doubling(self):
        got = dict(inverse_branches(CircleMap(degree=2), 0.5))
        assert got[0] == pytest.approx(0.25, abs=1e-14)
        assert got[1] == pytest.approx(0.75, abs=1e-14)

    def test_full_tent_symmetric(self, full_tent):
        got = [x for _, x in inverse_branches(full_tent, 0.0)]
        assert got == [-0.5, 0.5]

    def test_logistic_merged_at_peak(self, top_logistic):
        assert inverse_branches(top_logistic, 1.0) == [(0, 0.5)]

    def test_empty_above_peak(self, markov_tent):
        assert inverse_branches(markov_tent, 0.9) == []

    @pytest.mark.parametrize("mp", [
        TentMap(a=SQRT2 - 1.0),
        LogisticMap(t=3.9),
        CircleMap(degree=2, sin_amps=(0.05,)),
        CircleMap(degree=3, cos_amps=(0.04,)),
    ], ids=["tent", "logistic", "circle2", "circle3"])
    def test_preimage_residual_property(self, mp):
        rng = np.random.default_rng(42)
        if isinstance(mp, (TentMap, LogisticMap)):
            lo, hi = mp.domain
            ys = rng.uniform(lo, hi, 1000)
        else:
            ys = rng.uniform(0.0, 1.0, 1000)
        worst = 0.0
        for y in ys:
            for _, x in inverse_branches(mp, y):
                worst = max(worst, abs(float(np.asarray(mp(x))) - y))
        assert worst <= 1e-12


class TestConstruction:
    def test_expansion_certificate_rejects(self):
        with pytest.raises(PreconditionError):
            CircleMap(degree=2, sin_amps=(0.2,))  # inf f' = 2 - 0.4*pi < 1

    def test_expansion_floor_respected(self):
        CircleMap(degree=2, sin_amps=(0.05,), expansion_floor=1.5)
        with pytest.raises(PreconditionError):
            CircleMap(degree=2, sin_amps=(0.05,), expansion_floor=1.9)

    def test_lift_consistency(self):
        mp = CircleMap(degree=3, sin_amps=(0.03,), cos_amps=(0.01,))
        xs = np.linspace(0, 1, 37)
        assert np.abs(mp.lift(xs + 1.0) - mp.lift(xs) - 3.0).max() < 1e-12

    def test_tent_parameter_checks(self):
        with pytest.raises(PreconditionError):
            TentMap(a=0.0)
        with pytest.raises(PreconditionError):
            TentMap(a=0.5, t=-0.5)  # slope 1
        with pytest.raises(PreconditionError):
            TentMap(a=0.9, t=0.2)  # peak above 1

    def test_logistic_range(self):
        with pytest.raises(PreconditionError):
            LogisticMap(t=2.0)
        with pytest.raises(PreconditionError):
            LogisticMap(t=4.1)


class TestCriticalOrbit:
    def test_top_logistic(self, top_logistic):
        assert critical_orbit(top_logistic, 3).tolist() == [1.0, 0.0, 0.0]

    def test_full_tent(self, full_tent):
        assert critical_orbit(full_tent, 3).tolist() == [1.0, -1.0, -1.0]

    def test_fixed_critical_value(self):
        orb = critical_orbit(LogisticMap(t=2.0000000001), 2)
        assert orb[0] == pytest.approx(0.5, abs=1e-10)
        assert orb[1] == pytest.approx(orb[0], abs=1e-9)

    def test_prefix_agrees_bitwise(self, markov_tent, top_logistic):
        for mp in (markov_tent, top_logistic, LogisticMap(t=3.83)):
            short = critical_orbit(mp, 150)
            longer = critical_orbit(mp, 260)
            assert np.array_equal(short, longer[:150])


class TestOrbitStats:
    def test_full_tent_lyapunov_exact(self, full_tent):
        st = orbit_stats(full_tent, depth=16, seed=5)
        assert st.lyapunov == math.log(2.0)

    def test_top_logistic(self, top_logistic):
        st = orbit_stats(top_logistic, depth=32, seed=5)
        assert st.lyapunov == pytest.approx(math.log(2.0), abs=2e-3)
        assert st.markov is not None
        assert (st.markov.preperiod, st.markov.period) == (2, 1)
        assert st.markov.multiplier == pytest.approx(4.0, abs=1e-12)
        assert st.ce_growth[-1][1] == pytest.approx(4.0, rel=1e-6)

    def test_markov_tent(self, markov_tent):
        st = orbit_stats(markov_tent, depth=48, seed=9)
        assert (st.markov.preperiod, st.markov.period) == (3, 1)
        assert st.markov.multiplier == pytest.approx(SQRT2, abs=1e-9)

    def test_markov_stable_under_tolerance_halving(self, markov_tent, top_logistic):
        for mp in (markov_tent, top_logistic):
            full = detect_markov(mp, tol=1e-9)
            half = detect_markov(mp, tol=5e-10)
            assert (full.preperiod, full.period) == (half.preperiod, half.period)

    def test_non_markov_is_none(self):
        assert detect_markov(TentMap(a=0.77)) is None

    def test_depth_precondition(self, full_tent):
        with pytest.raises(PreconditionError):
            orbit_stats(full_tent, depth=5)


class TestFamily:
    def test_at_zero_is_base(self, markov_tent):
        fam = Family(markov_tent, VectorField.poly((1.0,)))
        assert fam.at(0.0) is markov_tent

    def test_velocity_matches_field_composition(self):
        base = CircleMap(degree=2, sin_amps=(0.02,))
        field = VectorField.trig(sin_amps=(0.5,), cos_amps=(0.1,))
        fam = Family(base, field)
        xs = np.linspace(0, 1, 11, endpoint=False)
        h = 1e-6
        fd = (np.asarray(fam.at(h).lift(xs)) - np.asarray(fam.at(-h).lift(xs))) / (2 * h)
        assert np.abs(fd - field(base.lift(xs))).max() < 1e-8

    def test_tent_family_reproduces_offset_parameterization(self):
        a = SQRT2 - 1.0
        fam = Family(TentMap(a=a), VectorField.poly((1.0 / (a + 1), 1.0 / (a + 1))))
        for s in (0.01, -0.02, 0.05):
            member = fam.at(s)
            ref = TentMap(a=a, t=s)
            assert member.height == pytest.approx(ref.height, abs=1e-15)
            assert member.slope == pytest.approx(ref.slope, abs=1e-15)

    def test_rejects_quadratic_tent_field(self, markov_tent):
        with pytest.raises(ArgumentError):
            Family(markov_tent, VectorField.poly((0.0, 0.0, 1.0)))

    def test_safe_radius_and_expansion_recheck(self):
        base = CircleMap(degree=2, sin_amps=(0.05,))
        fam = Family(base, VectorField.trig(sin_amps=(1.0,)))
        r = fam.safe_radius()
        assert 0.0 < r < 1.0
        fam.at(0.5 * r)
        with pytest.raises(PreconditionError):
            fam.at(2.5 * r)

    def test_affine_tent_member_valid(self):
        fam = Family(TentMap(a=SQRT2 - 1.0), VectorField.poly((1.0,)))
        member = fam.at(-0.01)
        assert isinstance(member, AffineTent)
        assert member.slope > 1.0
