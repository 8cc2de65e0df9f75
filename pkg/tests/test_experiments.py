import math

import numpy as np
import pytest

from respondyn import CircleMap, Family, TentMap, VectorField
from respondyn.errors import PreconditionError
from respondyn.experiments import (
    birkhoff_estimate,
    holder_scan,
    modulus_scan,
    three_way_report,
)

SQRT2 = math.sqrt(2.0)
X_OBS = VectorField.poly((0.0, 1.0))


def canonical_tent_family(a=SQRT2 - 1.0):
    return Family(TentMap(a=a), VectorField.poly((1.0 / (a + 1), 1.0 / (a + 1))))


class TestBirkhoff:
    def test_arcsine_moments_within_three_sigma(self, top_logistic):
        est, err, lyap = birkhoff_estimate(top_logistic, X_OBS,
                                           orbit_len=10 ** 6, seeds=64, master_seed=3)
        assert abs(est - 0.5) <= 3 * err
        assert lyap == pytest.approx(math.log(2.0), abs=5e-3)
        est2, err2, _ = birkhoff_estimate(top_logistic, VectorField.poly((0.0, 0.0, 1.0)),
                                          orbit_len=10 ** 6, seeds=64, master_seed=3)
        assert abs(est2 - 0.375) <= 3 * err2

    def test_stderr_shrinks_with_budget(self, top_logistic):
        # repeat the estimate over independent master seeds at two budgets:
        # the spread should shrink roughly like the square root of the budget
        small = [birkhoff_estimate(top_logistic, X_OBS, orbit_len=10 ** 4,
                                   seeds=32, master_seed=s)[0] for s in range(8)]
        large = [birkhoff_estimate(top_logistic, X_OBS, orbit_len=16 * 10 ** 4,
                                   seeds=32, master_seed=s)[0] for s in range(8)]
        ratio = np.std(small) / np.std(large)
        assert 2.0 <= ratio <= 8.0  # ideal 4.0 for a 16x budget

    def test_deterministic_given_seed(self, top_logistic):
        a = birkhoff_estimate(top_logistic, X_OBS, orbit_len=10 ** 5, seeds=16,
                              master_seed=11, row_key=2)
        b = birkhoff_estimate(top_logistic, X_OBS, orbit_len=10 ** 5, seeds=16,
                              master_seed=11, row_key=2)
        assert a == b


class TestModulusScan:
    def test_zero_field_degenerate(self, markov_tent):
        rep = modulus_scan(Family(markov_tent, VectorField.zero()),
                           k_range=range(6, 10), cells=2 ** 10)
        assert rep.degenerate
        assert math.isnan(rep.fit_exponent)

    def test_tent_scan_shape(self):
        rep = modulus_scan(canonical_tent_family(), k_range=range(6, 12),
                           cells=2 ** 11)
        seps = [abs(r.t) for r in rep.rows]
        assert seps == sorted(seps)
        assert all(r.resolution == 2 ** 11 for r in rep.rows)
        # the log-corrected law fits with exponent near 1 and tame ratios
        assert rep.grid_meta["log_fit_exponent"] == pytest.approx(1.0, abs=0.1)
        assert rep.grid_meta["ratio_spread"] <= 50.0
        assert 0.75 <= rep.fit_exponent <= 1.0

    def test_distances_stable_under_refinement(self):
        fam = canonical_tent_family()
        r1 = modulus_scan(fam, k_range=range(6, 9), cells=2 ** 11)
        r2 = modulus_scan(fam, k_range=range(6, 9), cells=2 ** 12)
        for a, b in zip(r1.rows, r2.rows):
            assert abs(a.delta - b.delta) <= 3.0 * (2.0 ** 11) ** -1 * 10

    def test_circle_control_linear_response(self):
        fam = Family(CircleMap(degree=2), VectorField.trig(sin_amps=(1.0,)))
        rep = modulus_scan(fam, k_range=range(6, 13), cells=96)
        assert 0.98 <= rep.fit_exponent <= 1.02

    def test_non_markov_base_rejected(self):
        fam = Family(TentMap(a=0.77), VectorField.poly((1.0, 1.0)))
        with pytest.raises(PreconditionError):
            modulus_scan(fam, k_range=range(6, 8), cells=256)

    def test_deterministic(self):
        fam = canonical_tent_family()
        r1 = modulus_scan(fam, k_range=range(6, 9), cells=2 ** 10)
        r2 = modulus_scan(fam, k_range=range(6, 9), cells=2 ** 10)
        assert [(a.t, a.delta) for a in r1.rows] == [(b.t, b.delta) for b in r2.rows]


class TestHolderScan:
    def test_small_scan_reproduces_half_exponent(self):
        rep = holder_scan(t0=4.0, param_count=12, orbit_len=2 * 10 ** 5, seeds=32,
                          master_seed=5)
        assert len(rep.accepted_rows()) >= 10
        assert 0.3 <= rep.fit_exponent <= 0.7
        assert rep.fit_ci[0] < rep.fit_exponent < rep.fit_ci[1]

    def test_rows_sorted_and_metadata(self):
        rep = holder_scan(t0=4.0, param_count=6, orbit_len=10 ** 4, seeds=16,
                          master_seed=5)
        seps = [4.0 - r.t for r in rep.rows]
        assert seps == sorted(seps)
        assert all(r.resolution == 10 ** 4 for r in rep.rows)
        assert rep.grid_meta["accepted"] + len(rep.grid_meta["excluded"]) == 6
        for entry in rep.grid_meta["excluded"]:
            assert math.isfinite(entry["lyapunov"])  # recorded, not silently dropped

    def test_bit_identical_reruns(self):
        r1 = holder_scan(t0=4.0, param_count=5, orbit_len=10 ** 4, seeds=16,
                         master_seed=9)
        r2 = holder_scan(t0=4.0, param_count=5, orbit_len=10 ** 4, seeds=16,
                         master_seed=9)
        assert [(a.t, a.delta, a.stderr) for a in r1.rows] == \
               [(b.t, b.delta, b.stderr) for b in r2.rows]

    def test_requires_preperiodic_base(self):
        with pytest.raises(PreconditionError):
            holder_scan(t0=3.7, param_count=4, orbit_len=10 ** 4, seeds=16)


class TestThreeWay:
    def test_doubling_family_agreement(self):
        fam = Family(CircleMap(degree=2), VectorField.trig(sin_amps=(1.0,)))
        rep = three_way_report(fam, VectorField.trig(cos_amps=(1.0,)),
                               terms=16, modes=64)
        assert rep.resolvent_value == pytest.approx(-np.pi, abs=1e-9)
        assert rep.deltas["fd_vs_resolvent"] <= 1e-6
        assert rep.deltas["series_vs_resolvent"] <= 1e-9
        assert rep.converged

    def test_zero_field_all_zero(self):
        fam = Family(CircleMap(degree=2, sin_amps=(0.05,)), VectorField.zero())
        rep = three_way_report(fam, VectorField.trig(cos_amps=(1.0,)),
                               terms=8, modes=32)
        assert abs(rep.resolvent_value) <= 1e-12
        assert np.abs(rep.ruelle_partials).max() <= 1e-12
        assert all(abs(v) <= 1e-10 for _, v in rep.fd_estimates)
