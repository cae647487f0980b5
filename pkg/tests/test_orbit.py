"""Orbit generation, seeding, and invariant-measure sampling."""

import numpy as np
import pytest
import scipy.stats
import sympy

import skewevt as sk
from skewevt import engine, maps, orbit
from skewevt.errors import OrbitDivergedError


class TestIterate:
    def test_zero_length_stream(self, tripling):
        p0 = sk.make_point([0.37], tripling.geometry)
        pts = list(orbit.iterate(tripling, p0, sk.OrbitConfig(n=0)))
        assert pts == [p0]

    def test_period_two_from_third(self, doubling):
        p0 = sk.make_point([1.0 / 3.0], doubling.geometry)
        pts = list(orbit.iterate(doubling, p0, sk.OrbitConfig(n=3)))
        vals = [maps.point_values(p, doubling.geometry)[0] for p in pts]
        assert vals[0] == pytest.approx(1 / 3, rel=1e-15)
        assert vals[1] == pytest.approx(2 / 3, rel=1e-15)
        assert vals[2] == pytest.approx(1 / 3, rel=1e-15)
        assert vals[3] == pytest.approx(2 / 3, rel=1e-15)

    def test_lsv_first_step_oracle(self):
        sysm = sk.lsv(0.5)
        p0 = sk.make_point([0.25], sysm.geometry)
        pts = list(orbit.iterate(sysm, p0, sk.OrbitConfig(n=1)))
        assert pts[0].base[0] == 0.25
        assert pts[1].base[0] == pytest.approx(0.42677669529663687, rel=1e-12)

    def test_burn_in_shifts_stream(self, tripling):
        p0 = sk.make_point([0.1], tripling.geometry)
        direct = list(orbit.iterate(tripling, p0, sk.OrbitConfig(n=5)))
        shifted = list(orbit.iterate(tripling, p0, sk.OrbitConfig(n=3, burn_in=2)))
        assert [p.raw for p in shifted] == [p.raw for p in direct[2:]]

    def test_diverged_stream_reports_absolute_index(self):
        sysm = sk.viana(alpha=0.0, trap=(-1.5, 1.5))
        p0 = sk.make_point([0.0, 0.0], sysm.geometry)
        with pytest.raises(OrbitDivergedError) as exc:
            list(orbit.iterate(sysm, p0, sk.OrbitConfig(n=10)))
        assert exc.value.step_index == 1

    def test_rejects_outside_point(self, tripling):
        with pytest.raises(ValueError):
            list(orbit.iterate(tripling, maps.ProductPoint((1.5,), ()),
                               sk.OrbitConfig(n=1)))


class TestDeterminism:
    def test_sample_invariant_bit_identical(self, zoo):
        for system in zoo.values():
            ens = sk.Ensemble(count=500, master_seed=321)
            a = orbit.sample_invariant(system, ens, burn_in=50)
            b = orbit.sample_invariant(system, ens, burn_in=50)
            assert np.array_equal(a.iu, b.iu)
            assert np.array_equal(a.fx, b.fx)
            assert np.array_equal(a.status, b.status)

    def test_thread_count_does_not_change_results(self, trig_flagship):
        ens = sk.Ensemble(count=2000, master_seed=77)
        engine.set_threads(1)
        a = orbit.sample_invariant(trig_flagship, ens, burn_in=200)
        engine.set_threads(0)
        b = orbit.sample_invariant(trig_flagship, ens, burn_in=200)
        assert np.array_equal(a.iu, b.iu)
        assert np.array_equal(a.fx, b.fx)

    def test_member_points_are_pure_in_index(self, tripling):
        # the i-th initial point does not depend on the ensemble size
        small = orbit.initial_state(tripling, sk.Ensemble(count=10, master_seed=5))
        large = orbit.initial_state(tripling, sk.Ensemble(count=1000, master_seed=5))
        assert np.array_equal(small.iu, large.iu[:10])


class TestSeedDerivation:
    def test_derived_keys_distinct_for_a_million_indices(self):
        # counter-based splittable derivation: keys never collide
        n = 10**6
        keys = np.empty((n, 2), dtype=np.uint64)
        for i in range(n):
            keys[i] = orbit.derived_key(12345, 0, i)
        view = keys.view([("a", np.uint64), ("b", np.uint64)]).ravel()
        assert np.unique(view).size == n

    def test_key_is_pure_function(self):
        assert np.array_equal(orbit.derived_key(9, 1, 2),
                              orbit.derived_key(9, 1, 2))
        assert not np.array_equal(orbit.derived_key(9, 1, 2),
                                  orbit.derived_key(9, 1, 3))


class TestExactOrbitPeriods:
    def test_linear_orbit_period_exceeds_1e9(self):
        """The period of k -> d*k mod P is the multiplicative order of d mod P.

        The order is computed exactly from the factorization of P - 1; every
        nonzero start shares it, so sampling seeds is unnecessary beyond the
        zero point.
        """
        P = maps.MODULUS
        assert sympy.isprime(P)
        for d in (2, 3, 4, 16):
            order = sympy.n_order(d, P)
            assert order > 10**9


class TestInvariantSampling:
    def test_doubling_matches_uniform(self, tripling):
        ens = sk.Ensemble(count=10**5, master_seed=2024)
        state = orbit.sample_invariant(tripling, ens, burn_in=100)
        xs = state.values()[:, 0]
        stat = scipy.stats.kstest(xs, "uniform").statistic
        assert stat < 0.01

    @pytest.mark.slow
    def test_lsv_histogram_increases_toward_neutral_point(self):
        sysm = sk.lsv(0.3)
        ens = sk.Ensemble(count=10**5, master_seed=2025)
        state = orbit.sample_invariant(sysm, ens, burn_in=10**4)
        xs = state.values()[:, 0]
        hist, _ = np.histogram(xs, bins=np.linspace(0, 1, 11))
        assert hist[0] > hist[1] > hist[3]
        assert hist[0] > 1.5 * hist[-1]

    def test_explicit_mode(self, tripling):
        pts = tuple(sk.make_point([v], tripling.geometry)
                    for v in (0.1, 0.2, 0.3))
        ens = sk.Ensemble(count=3, mode="explicit", points=pts)
        state = orbit.sample_invariant(tripling, ens, burn_in=0)
        got = state.values()[:, 0]
        assert got == pytest.approx([0.1, 0.2, 0.3], rel=1e-12)

    def test_explicit_mode_needs_matching_count(self, tripling):
        with pytest.raises(ValueError):
            sk.Ensemble(count=2, mode="explicit",
                        points=(sk.make_point([0.1], tripling.geometry),))

    def test_resample_cap_raises(self):
        # every start escapes: the redraw budget must eventually give up
        sysm = sk.viana(alpha=5.0)
        ens = sk.Ensemble(count=20, master_seed=6)
        with pytest.raises(OrbitDivergedError):
            orbit.sample_invariant(sysm, ens, burn_in=10)

    def test_viana_boundary_forcing_leaks(self):
        # at a0 = 2 the unforced interval [-2, 2] has no margin, so any
        # positive forcing makes escapes almost sure over a long burn-in
        ens = sk.Ensemble(count=100, master_seed=8)
        with pytest.raises(OrbitDivergedError):
            orbit.sample_invariant(sk.viana(), ens, burn_in=2000)

    def test_viana_margin_variant_survives(self):
        # a0 + alpha <= sqrt(2 a0) gives a forward-invariant fiber interval
        sysm = sk.viana(alpha=0.01, a0=1.8)
        ens = sk.Ensemble(count=10**4, master_seed=8)
        state = orbit.sample_invariant(sysm, ens, burn_in=1000)
        assert state.diverged_count == 0
        orbit.advance_state(state, 5000)
        assert state.diverged_count == 0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            sk.Ensemble(count=0)
        with pytest.raises(ValueError):
            sk.OrbitConfig(n=-1)
        with pytest.raises(ValueError):
            sk.Ensemble(count=1, mode="mystery")
