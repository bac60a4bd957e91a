import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alhflow import (DomainError, FlowError, HypothesesNotMet, bracket_check,
                     conformal_infinity, geroch_rate, hawking_lower_bound,
                     hawking_mass_from_integrals, holder_bound, imcf_integrate,
                     jump_bound_check, kottler_build, kottler_potential,
                     penrose_rhs, perturbed_kottler_potential,
                     write_trajectory_csv)
from alhflow.flow import TRAJECTORY_COLUMNS

FOUR_PI = 4.0 * math.pi


class TestIntegrate:
    def test_closed_form_radius(self):
        inf = conformal_infinity(2)
        p = kottler_potential(-1, 0.0)
        traj = imcf_integrate(inf, p, 1.0, 2.0)
        assert traj.states[-1].r == pytest.approx(math.e, rel=1e-8)

    def test_area_growth_law(self):
        inf = conformal_infinity(3)
        p = kottler_potential(-1, 0.4)
        traj = imcf_integrate(inf, p, 2.0, 3.0, steps=1024)
        t = traj.column("t")
        area = traj.column("area")
        assert np.max(np.abs(area / (area[0] * np.exp(t)) - 1.0)) <= 1e-8

    def test_equality_case_constant_mass(self):
        inf = conformal_infinity(2)
        space = kottler_build(-1, -0.1)
        traj = imcf_integrate(inf, space.potential, space.horizon_radius, 4.0,
                              steps=512)
        mass = traj.column("hawking_mass")
        assert np.max(np.abs(mass + 0.1)) <= 1e-8
        assert traj.monotone
        assert np.max(np.abs(traj.column("geroch_rate"))) <= 1e-10

    def test_state_fields(self):
        inf = conformal_infinity(2)
        p = kottler_potential(-1, 0.0)
        traj = imcf_integrate(inf, p, 1.5, 1.0, steps=16)
        s = traj.states[5]
        assert s.area == pytest.approx(inf.area * s.r ** 2, rel=1e-14)
        assert s.mean_curvature == pytest.approx(
            2 * math.sqrt(p.phi(s.r)) / s.r, rel=1e-14)
        assert s.traceless_a_norm == 0.0
        assert s.euler_char == inf.euler_char
        assert traj.states[0].t == 0.0
        assert np.all(np.diff(traj.column("t")) > 0)
        assert np.all(np.diff(traj.column("r")) > 0)

    def test_start_inside_horizon_rejected(self):
        inf = conformal_infinity(2)
        p = kottler_potential(-1, 0.5)
        with pytest.raises(FlowError):
            imcf_integrate(inf, p, 0.5 * p.domain_start, 1.0)

    def test_bad_parameters(self):
        inf = conformal_infinity(2)
        p = kottler_potential(-1, 0.0)
        with pytest.raises(DomainError):
            imcf_integrate(inf, p, 2.0, -1.0)
        with pytest.raises(DomainError):
            imcf_integrate(inf, p, 2.0, 1.0, steps=0)
        with pytest.raises(DomainError):
            imcf_integrate(conformal_infinity(0), p, 2.0, 1.0)


class TestGerochRate:
    def test_kottler_rate_vanishes(self):
        inf = conformal_infinity(2)
        p = kottler_potential(-1, 0.3)
        for r in (1.5, 3.0, 10.0):
            assert abs(geroch_rate(inf, p, r)) <= 1e-11

    @pytest.mark.parametrize("genus", [2, 3])
    def test_perturbed_closed_form(self, genus):
        eps = 0.2
        inf = conformal_infinity(genus)
        p = perturbed_kottler_potential(-1, -0.1, eps)
        for r in (2.0, 5.0):
            assert geroch_rate(inf, p, r) == pytest.approx(
                inf.c ** 1.5 * eps / (4 * r), rel=1e-10)

    def test_hyperbolic_rate_vanishes(self):
        inf = conformal_infinity(0)
        p = kottler_potential(1, 0.0)
        assert abs(geroch_rate(inf, p, 5.0)) <= 1e-12

    def test_rate_equals_mass_derivative(self):
        # centered difference of m_H along the flow, O(dt^2)
        inf = conformal_infinity(2)
        p = perturbed_kottler_potential(-1, -0.1, 0.15)
        errs = []
        for steps in (128, 256):
            traj = imcf_integrate(inf, p, 2.0, 1.0, steps=steps)
            t = traj.column("t")
            mass = traj.column("hawking_mass")
            rate = traj.column("geroch_rate")
            dt = t[1] - t[0]
            fd = (mass[2:] - mass[:-2]) / (2 * dt)
            errs.append(np.max(np.abs(fd - rate[1:-1])))
        assert errs[0] <= 1e-6
        assert errs[1] <= errs[0] / 3.0  # second order in dt


class TestMonotonicity:
    @settings(max_examples=20, deadline=None)
    @given(m=st.floats(-0.15, 0.5), eps=st.floats(0.0, 0.3),
           genus=st.integers(2, 3), r_shift=st.floats(0.1, 2.0))
    def test_nondecreasing_when_curvature_bounded(self, m, eps, genus, r_shift):
        # scalar curvature -6 + 2 eps / r^4 >= -6 for eps >= 0
        inf = conformal_infinity(genus)
        p = perturbed_kottler_potential(-1, m, eps)
        r0 = (p.domain_start or 1.0) + r_shift
        traj = imcf_integrate(inf, p, r0, 1.5, steps=256)
        assert traj.monotone
        assert traj.max_violation <= 1e-8

    def test_counterexample_direction(self):
        # eps < 0 puts scalar curvature below -6 and the mass must drop
        inf = conformal_infinity(2)
        p = perturbed_kottler_potential(-1, -0.1, -0.2)
        traj = imcf_integrate(inf, p, 2.0, 2.0, steps=512)
        assert not traj.monotone
        assert traj.max_violation > 1e-4
        mass = traj.column("hawking_mass")
        assert mass[-1] < mass[0]


class TestBracket:
    def test_kottler_inside_barriers(self, submap):
        inf = conformal_infinity(2)
        p = kottler_potential(-1, 0.5)
        sub_map = submap(-1, 0.5)
        traj = imcf_integrate(inf, p, 20.0, 4.0, steps=256)
        assert bracket_check(traj, sub_map) is True

    def test_start_at_time_zero_trivial(self, submap):
        inf = conformal_infinity(2)
        p = kottler_potential(-1, 0.5)
        traj = imcf_integrate(inf, p, 15.0, 1e-6, steps=1)
        assert bracket_check(traj, submap(-1, 0.5)) is True

    def test_hyperbolic_space(self, submap):
        inf = conformal_infinity(0)
        p = kottler_potential(1, 0.0)
        sub_map = submap(1, 0.0, r_start=5.0, r_end=5e4)
        traj = imcf_integrate(inf, p, 10.0, 3.0, steps=128)
        assert bracket_check(traj, sub_map) is True

    def test_small_start_not_applicable(self, submap):
        inf = conformal_infinity(2)
        p = kottler_potential(-1, 0.5)
        traj = imcf_integrate(inf, p, 3.0, 1.0, steps=32)
        with pytest.raises(DomainError, match="not applicable"):
            bracket_check(traj, submap(-1, 0.5))


class TestPenroseRhs:
    def test_values(self):
        assert penrose_rhs(2, FOUR_PI) == pytest.approx(0.0, abs=1e-14)
        assert penrose_rhs(0, 16 * math.pi) == pytest.approx(5.0, rel=1e-14)
        assert penrose_rhs(3, 8 * math.pi) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("genus", [2, 3, 4])
    def test_equality_on_reference_family(self, genus):
        inf = conformal_infinity(genus)
        for m in np.linspace(-0.15, 0.8, 12):
            space = kottler_build(-1, m)
            area = inf.area * space.horizon_radius ** 2
            assert penrose_rhs(genus, area) == pytest.approx(m, abs=1e-10)

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            penrose_rhs(-1, 1.0)
        with pytest.raises(DomainError):
            penrose_rhs(2, -1.0)


class TestHawkingLowerBound:
    def test_genus_four(self):
        bound, area = hawking_lower_bound(4)
        assert bound == pytest.approx(-1.0, rel=1e-14)
        assert area == pytest.approx(FOUR_PI, rel=1e-14)

    def test_torus_limit(self):
        assert hawking_lower_bound(1) == (0.0, 0.0)

    def test_sphere_rejected(self):
        with pytest.raises(DomainError):
            hawking_lower_bound(0)

    def test_scan_and_sign_change(self):
        bound, minimizer = hawking_lower_bound(2)
        grid = np.linspace(0.0, 40 * math.pi, 10001)
        vals = np.sqrt(grid / (16 * math.pi)) * (1 - 2 + grid / FOUR_PI)
        assert vals.min() >= bound - 1e-9
        spacing = grid[1] - grid[0]
        assert abs(grid[np.argmin(vals)] - minimizer) <= spacing
        # derivative changes sign across the minimizer
        h = 1e-6
        f = lambda a: math.sqrt(a / (16 * math.pi)) * (-1 + a / FOUR_PI)
        before = (f(minimizer - 1e-3 + h) - f(minimizer - 1e-3 - h)) / (2 * h)
        after = (f(minimizer + 1e-3 + h) - f(minimizer + 1e-3 - h)) / (2 * h)
        assert before < 0 < after


class TestHolderBound:
    def test_constant_sample(self):
        assert holder_bound([-0.2], conformal_infinity(2)) == pytest.approx(-0.2)

    def test_two_samples(self):
        got = holder_bound([-0.1, -0.3], conformal_infinity(2))
        expect = -(((0.1 ** (2 / 3) + 0.3 ** (2 / 3)) / 2) ** 1.5)
        assert got == pytest.approx(expect, rel=1e-12)
        assert got == pytest.approx(-0.1911, abs=5e-5)

    def test_genus_three_scaling(self):
        m = -0.25
        got = holder_bound([m], conformal_infinity(3))
        assert got == pytest.approx(2 ** 1.5 * m, rel=1e-12)

    def test_positive_sample_rejected(self):
        with pytest.raises(DomainError):
            holder_bound([-0.1, 0.2], conformal_infinity(2))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-2.0, 0.0), min_size=1, max_size=12),
           st.integers(2, 5))
    def test_never_above_sup_bound(self, samples, genus):
        inf = conformal_infinity(genus)
        got = holder_bound(samples, inf)
        assert got <= max(samples) * inf.c ** 1.5 + 1e-12

    def test_weights(self):
        inf = conformal_infinity(2)
        got = holder_bound([-0.1, -0.3], inf, weights=[3.0, 1.0])
        expect = -(((3 * 0.1 ** (2 / 3) + 0.3 ** (2 / 3)) / 4) ** 1.5)
        assert got == pytest.approx(expect, rel=1e-12)
        with pytest.raises(DomainError):
            holder_bound([-0.1, -0.3], inf, weights=[1.0])


def _admissible_jump_tuple(rng, genus):
    floor_area = FOUR_PI * (genus - 1) / 3.0 if genus >= 2 else 0.5
    area_before = floor_area * (1.0 + 9.0 * rng.random())
    area_after = area_before * (1.0 + rng.random())
    if genus >= 2:
        mass_floor = -(((genus - 1) / 3.0) ** 1.5)
    else:
        mass_floor = 0.0
    # choose the H^2 integral so the pre-jump mass sits above the floor
    x_max = 16 * math.pi * (1 - genus) - mass_floor * math.sqrt(
        (16 * math.pi) ** 3 / area_before)
    x = x_max - 20.0 * rng.random()
    h2_before = max(0.0, x + 4 * area_before)
    h2_after = h2_before * rng.random()
    return area_before, area_after, h2_before, h2_after


class TestJumpBound:
    def test_equal_tuple_passes_with_equality(self):
        assert jump_bound_check(10.0, 10.0, 10.0, 10.0, 2)

    def test_worked_example(self):
        assert jump_bound_check(FOUR_PI, 5 * math.pi, 10.0, 9.0, 2)
        before = hawking_mass_from_integrals(2, FOUR_PI, 10.0)
        after = hawking_mass_from_integrals(2, 5 * math.pi, 9.0)
        assert after >= before

    def test_violated_hypotheses_reported(self):
        with pytest.raises(HypothesesNotMet, match="hypotheses not met"):
            jump_bound_check(5.0, 4.0, 12.0, 12.0, 2)  # area shrinks
        with pytest.raises(HypothesesNotMet):
            jump_bound_check(5.0, 5.0, 12.0, 13.0, 2)  # H^2 grows
        with pytest.raises(HypothesesNotMet):
            # area below the stable-minimal-surface floor
            jump_bound_check(0.01, 0.02, 0.04, 0.04, 2)
        with pytest.raises(HypothesesNotMet):
            # genus 0 with negative pre-jump mass
            jump_bound_check(1.0, 2.0, 200.0, 100.0, 0)

    @pytest.mark.parametrize("genus", [0, 1, 2, 3, 4])
    def test_random_admissible_tuples(self, genus):
        rng = np.random.default_rng(20240600 + genus)
        for _ in range(500):
            tup = _admissible_jump_tuple(rng, genus)
            try:
                assert jump_bound_check(*tup, genus)
            except HypothesesNotMet:
                continue  # generator overshoot; skip, never fail


def test_trajectory_csv_contract(tmp_path, submap):
    inf = conformal_infinity(2)
    p = kottler_potential(-1, -0.1)
    sub_map = submap(-1, -0.1, r_start=2.0, r_end=2e4)
    traj = imcf_integrate(inf, p, 2.0, 1.0, steps=8)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, p, sub_map, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    assert len(lines) == 10
    row = [float(v) for v in lines[1].split(",")]
    assert row[0] == 0.0 and row[1] == 2.0
    assert row[5] == pytest.approx(-0.1, abs=1e-14)  # hawking_mass column
    assert row[7] == pytest.approx(-6.0, abs=1e-12)  # scalar_curvature column
