"""Scalar map operations against analytic and high-precision oracles."""


import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import skewevt as sk
from skewevt import engine, maps, orbit
from skewevt.errors import GeometryMismatchError, OrbitDivergedError

from conftest import rng


# ---------------------------------------------------------------------------
# product metric
# ---------------------------------------------------------------------------

class TestProductMetric:
    def test_identity(self, trig_flagship):
        g = trig_flagship.geometry
        p = sk.make_point([0.3, 0.7], g)
        assert sk.product_metric(p, p, g) == 0.0

    def test_three_four_five(self, trig_flagship):
        g = trig_flagship.geometry
        p = sk.make_point([0.0, 0.0], g)
        q = sk.make_point([0.3, 0.4], g)
        assert sk.product_metric(p, q, g) == pytest.approx(0.5, rel=1e-14)

    def test_wraparound(self, tripling):
        g = tripling.geometry
        p = sk.make_point([0.9], g)
        q = sk.make_point([0.1], g)
        assert sk.product_metric(p, q, g) == pytest.approx(0.2, rel=1e-12)

    def test_mismatched_geometry(self, tripling, trig_flagship):
        p = sk.make_point([0.1], tripling.geometry)
        q = sk.make_point([0.1, 0.2], trig_flagship.geometry)
        with pytest.raises(GeometryMismatchError):
            sk.product_metric(p, q, trig_flagship.geometry)

    def test_metric_axioms_on_samples(self, zoo):
        r = rng(1)
        for system in zoo.values():
            g = system.geometry
            vals = r.random((300, 3, g.dim))
            for i, s in enumerate(g.slots):
                if s.kind == maps.INTERVAL:
                    vals[:, :, i] = s.lo + (s.hi - s.lo) * vals[:, :, i]
            for row in vals:
                p, q, w = (sk.make_point(v, g) for v in row)
                dpq = sk.product_metric(p, q, g)
                dqp = sk.product_metric(q, p, g)
                assert dpq == dqp  # symmetry is exact
                dpw = sk.product_metric(p, w, g)
                dqw = sk.product_metric(q, w, g)
                slack = 4 * np.spacing(max(dpq, dpw + dqw))
                assert dpq <= dpw + dqw + slack
                assert dpq >= 0.0

    def test_zero_iff_equal(self, trig_flagship):
        g = trig_flagship.geometry
        p = sk.make_point([0.25, 0.5], g)
        q = sk.make_point([0.25, 0.5 + 1e-9], g)
        assert sk.product_metric(p, q, g) > 0.0


# ---------------------------------------------------------------------------
# exact circle arithmetic
# ---------------------------------------------------------------------------

class TestExpandingStep:
    def test_point_three_by_four(self):
        k = maps.unit_to_ticks(0.3)
        out = maps.ticks_to_unit(maps.step_base_expanding(k, 4))
        assert out == pytest.approx(0.2, abs=1e-12)

    def test_zero_fixed(self):
        assert maps.step_base_expanding(0, 7) == 0

    def test_third_is_period_two(self):
        k = maps.unit_to_ticks(1.0 / 3.0)
        k1 = maps.step_base_expanding(k, 2)
        k2 = maps.step_base_expanding(k1, 2)
        assert maps.ticks_to_unit(k) == pytest.approx(1.0 / 3.0, rel=1e-15)
        assert maps.ticks_to_unit(k1) == pytest.approx(2.0 / 3.0, rel=1e-15)
        assert maps.ticks_to_unit(k2) == pytest.approx(1.0 / 3.0, rel=1e-15)

    def test_rejects_contracting(self):
        with pytest.raises(ValueError):
            maps.step_base_expanding(1, 1)

    @given(st.integers(min_value=0, max_value=maps.MODULUS - 1),
           st.integers(min_value=2, max_value=2**31 - 1))
    @settings(max_examples=300, deadline=None)
    def test_matches_big_integer_arithmetic(self, k, d):
        assert maps.step_base_expanding(k, d) == (d * k) % maps.MODULUS

    def test_tick_roundtrip_is_exact_rounding(self):
        # conversion uses the exact binary expansion, not double rounding
        for x in [0.1, 0.3, 1 / 3, 0.9999999999999999, 0.0]:
            k = maps.unit_to_ticks(x)
            assert abs(k / maps.MODULUS - (x % 1.0)) <= 0.5 / maps.MODULUS


# ---------------------------------------------------------------------------
# intermittent branch map
# ---------------------------------------------------------------------------

class TestLsvStep:
    def test_neutral_fixed_point(self):
        assert maps.step_lsv(0.0, 0.5) == 0.0

    def test_second_branch(self):
        assert maps.step_lsv(0.75, 0.123) == pytest.approx(0.5, rel=1e-15)

    def test_first_branch_oracle(self):
        # high-precision evaluation of 0.25 * (1 + 2^0.5 * 0.25^0.5)
        assert maps.step_lsv(0.25, 0.5) == pytest.approx(0.42677669529663687,
                                                         rel=1e-12)

    def test_rejects_bad_omega(self):
        for w in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                maps.step_lsv(0.3, w)

    def test_first_branch_monotone_and_above_identity(self):
        xs = np.linspace(0.0, 0.5, 2001, endpoint=False)
        for w in (0.1, 0.3, 0.5, 0.7, 0.9):
            ys = np.array([maps.step_lsv(float(x), w) for x in xs])
            assert np.all(np.diff(ys) > 0)
            assert np.all(ys >= xs)
            assert np.all(ys[1:] > xs[1:])  # strict above identity for x > 0
            assert np.all(ys <= 1.0)


# ---------------------------------------------------------------------------
# circle extension
# ---------------------------------------------------------------------------

class TestCircleExtension:
    def test_zero_driving(self):
        base = sk.linear_expanding(2)
        h = sk.CocycleSpec(form="linear")
        sysm = sk.circle_extension(base, h)
        p = sk.make_point([0.0, 0.25], sysm.geometry)
        out = maps.point_values(sk.step(sysm, p), sysm.geometry)
        assert out[0] == 0.0 and out[1] == pytest.approx(0.25, rel=1e-15)

    def test_prestep_base_drives_fiber(self):
        base = sk.linear_expanding(2)
        sysm = sk.circle_extension(base, sk.CocycleSpec(form="linear"))
        p = sk.make_point([0.5, 0.9], sysm.geometry)
        out = maps.point_values(sk.step(sysm, p), sysm.geometry)
        assert out[0] == pytest.approx(0.0, abs=1e-12)
        assert out[1] == pytest.approx(0.4, rel=1e-12)

    def test_trig_cocycle_oracle(self):
        sysm = sk.circle_extension(sk.linear_expanding(3),
                                   sk.CocycleSpec(form="trig", amplitude=0.5))
        p = sk.make_point([0.25, 0.0], sysm.geometry)
        out = maps.point_values(sk.step(sysm, p), sysm.geometry)
        assert out[0] == pytest.approx(0.75, rel=1e-12)
        assert out[1] == pytest.approx(0.0, abs=1e-12)  # cos(pi/2) = 0

    def test_table_cocycle_interpolates(self):
        h = sk.CocycleSpec(form="table", table=(0.0, 0.5, 0.25, 0.75))
        assert maps.cocycle_value(h, 0.0) == 0.0
        assert maps.cocycle_value(h, 0.25) == 0.5
        assert maps.cocycle_value(h, 0.125) == pytest.approx(0.25, rel=1e-12)
        # wraparound: halfway between the last sample (0.75) and the first (0.0)
        assert maps.cocycle_value(h, 0.875) == pytest.approx(0.375, rel=1e-12)

    def test_base_projection_commutes(self, zoo):
        """Stepping the product then projecting equals stepping the base alone.

        Exact by construction: the base coordinate's update never reads the
        fiber. This is the structural fact that lets base return sets pull
        back to product return sets.
        """
        r = rng(2)
        for name in ("circle-extension", "circle-extension-linear",
                     "circle-extension-lsv"):
            sysm = zoo[name]
            base = maps.base_system(sysm)
            for _ in range(200):
                vals = r.random(2)
                p = sk.make_point(vals, sysm.geometry)
                pb = maps.ProductPoint((p.base[0],), ())
                stepped = sk.step(sysm, p)
                base_stepped = sk.step(base, pb)
                assert stepped.base[0] == base_stepped.base[0]

    def test_rejects_product_base(self, zoo):
        with pytest.raises(ValueError):
            sk.circle_extension(zoo["gouezel"], sk.CocycleSpec(form="linear"))


# ---------------------------------------------------------------------------
# intermittent skew product
# ---------------------------------------------------------------------------

class TestGouezelStep:
    def test_double_fixed_point(self):
        prof = sk.AlphaProfile(0.2, 0.25)
        sysm = sk.gouezel(prof)
        p = sk.make_point([0.0, 0.0], sysm.geometry)
        out = maps.point_values(sk.step(sysm, p), sysm.geometry)
        assert out[0] == 0.0 and out[1] == 0.0

    def test_second_branch_ignores_profile(self):
        for prof in (sk.AlphaProfile(0.2, 0.25), sk.AlphaProfile(0.5, 0.7)):
            sysm = sk.gouezel(prof)
            p = sk.make_point([0.25, 0.75], sysm.geometry)
            out = maps.point_values(sk.step(sysm, p), sysm.geometry)
            assert out[0] == pytest.approx(0.0, abs=1e-12)
            assert out[1] == pytest.approx(0.5, rel=1e-15)

    def test_first_branch_oracle(self):
        prof = sk.AlphaProfile(0.2, 0.25)
        sysm = sk.gouezel(prof)
        p = sk.make_point([0.5, 0.25], sysm.geometry)
        out = maps.point_values(sk.step(sysm, p), sysm.geometry)
        assert out[1] == pytest.approx(0.46022410381342865, rel=1e-12)

    def test_invalid_profile_rejected_at_construction(self):
        with pytest.raises(ValueError):
            sk.AlphaProfile(0.2, 0.35)  # violates alpha_max < 1.5 alpha_min
        with pytest.raises(ValueError):
            sk.AlphaProfile(0.3, 0.2)
        with pytest.raises(ValueError):
            sk.AlphaProfile(0.2, 1.2)
        with pytest.raises(ValueError):
            sk.AlphaProfile(0.2, 0.25, form="mystery")


class TestAlphaProfile:
    def test_minimum_at_zero(self):
        prof = sk.AlphaProfile(0.2, 0.25)
        assert sk.alpha_profile(0.0, prof) == pytest.approx(0.2, rel=1e-15)

    def test_maximum_at_half(self):
        prof = sk.AlphaProfile(0.2, 0.25)
        assert sk.alpha_profile(0.5, prof) == pytest.approx(0.25, rel=1e-15)

    def test_quarter_point(self):
        prof = sk.AlphaProfile(0.2, 0.25)
        assert sk.alpha_profile(0.25, prof) == pytest.approx(0.225, rel=1e-12)

    @given(st.floats(min_value=0.0, max_value=1.0, exclude_max=True))
    @settings(max_examples=200, deadline=None)
    def test_range(self, w):
        prof = sk.AlphaProfile(0.10, 0.14)
        a = sk.alpha_profile(w, prof)
        assert prof.alpha_min <= a <= prof.alpha_max

    def test_unique_minimum(self):
        prof = sk.AlphaProfile(0.10, 0.14)
        ws = np.linspace(0, 1, 10001, endpoint=False)
        vals = np.array([sk.alpha_profile(float(w), prof) for w in ws])
        at_min = ws[vals <= prof.alpha_min + 1e-12]
        assert np.all((at_min < 1e-3) | (at_min > 1 - 1e-3))


# ---------------------------------------------------------------------------
# quadratic skew product
# ---------------------------------------------------------------------------

class TestVianaStep:
    def test_unforced_center(self):
        sysm = sk.viana(alpha=0.37)
        p = sk.make_point([0.0, 0.0], sysm.geometry)
        out = maps.point_values(sk.step(sysm, p), sysm.geometry)
        assert out[0] == 0.0
        assert out[1] == pytest.approx(2.0, rel=1e-15)  # b(0) = 0

    def test_preperiodic_unforced_orbit(self):
        # with alpha = 0 the fiber orbit of 0 under 2 - x^2 is 0, 2, -2, -2, ...
        sysm = sk.viana(alpha=0.0)
        p = sk.make_point([0.0, 0.0], sysm.geometry)
        xs = [p.fiber[0]]
        for _ in range(4):
            p = sk.step(sysm, p)
            xs.append(p.fiber[0])
        assert xs == [0.0, 2.0, -2.0, -2.0, -2.0]

    def test_direct_substitution(self):
        sysm = sk.viana(alpha=0.01)
        p = sk.make_point([0.25, 1.0], sysm.geometry)
        out = maps.point_values(sk.step(sysm, p), sysm.geometry)
        assert out[0] == pytest.approx(0.0, abs=1e-12)
        assert out[1] == pytest.approx(1.01, rel=1e-12)

    def test_escape_raises_with_step_index(self):
        sysm = sk.viana(alpha=0.0, trap=(-1.5, 1.5))
        p = sk.make_point([0.0, 0.0], sysm.geometry)
        with pytest.raises(OrbitDivergedError) as exc:
            sk.step(sysm, p)  # 2.0 leaves (-1.5, 1.5) immediately
        assert exc.value.step_index == 1


# ---------------------------------------------------------------------------
# phase-space closure fuzz
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_every_map_preserves_its_phase_space(zoo):
    """10^6 random points per map: one step stays in range or raises, never silent."""
    count = 10**6
    for name, system in zoo.items():
        packed = engine.pack(system)
        ens = sk.Ensemble(count=count, master_seed=777)
        state = orbit.initial_state(system, ens)
        orbit.advance_state(state, 1)
        vals = state.values()
        alive = state.alive
        for i, s in enumerate(system.geometry.slots):
            col = vals[alive][:, i]
            if s.kind == maps.CIRCLE:
                assert np.all((col >= 0.0) & (col < 1.0)), name
            else:
                assert np.all((col >= s.lo) & (col <= s.hi)), name
        if name != "viana":
            assert state.diverged_count == 0, name


def test_contains_checks_ranges(zoo):
    v = zoo["viana"]
    assert maps.contains(v, sk.make_point([0.1, 1.9], v.geometry))
    assert not maps.contains(v, maps.ProductPoint((0.1,), (2.5,)))
    assert not maps.contains(v, maps.ProductPoint((maps.MODULUS + 5,), (0.0,)))


def test_make_point_validates(zoo):
    v = zoo["viana"]
    with pytest.raises(ValueError):
        sk.make_point([0.1, 3.0], v.geometry)
    with pytest.raises(GeometryMismatchError):
        sk.make_point([0.1], v.geometry)


def test_cocycle_spec_validation():
    with pytest.raises(ValueError):
        sk.CocycleSpec(form="nope")
    with pytest.raises(ValueError):
        sk.CocycleSpec(form="linear", holder_exponent=0.0)
    with pytest.raises(ValueError):
        sk.CocycleSpec(form="table", table=(0.1,))
