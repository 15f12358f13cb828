import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdhl import geometry
from pdhl.errors import EtaOutOfRange, OffsetOutOfRange, ShapeTooLarge
from pdhl.geometry import (
    EXTERIOR,
    FLUID,
    HOLE,
    ball,
    axis_ellipse,
    build_domain,
    classify_point,
    random_plan,
    square,
    uniform_plan,
)


UNIT_SQUARE = ((0.0, 1.0), (0.0, 1.0))


def quarter_domain(eta=0.125, rho=0.1):
    return build_domain(UNIT_SQUARE, 0.25, eta, uniform_plan(ball(rho)))


class TestBuildDomain:
    def test_quarter_lattice_active_cells(self):
        # eps = 1/4 on the unit square: cells z with eps*(z +- 1/2) inside
        # [0,1] are exactly z in {1,2,3}^2.
        dom = quarter_domain()
        assert set(dom.active) == {(i, j) for i in (1, 2, 3) for j in (1, 2, 3)}
        assert len(dom.cells) == 9

    def test_hole_radius_and_centers(self):
        dom = quarter_domain()
        # hole = eps*z + (eps*eta)*ball(1/10): physical radius 1/320
        r = 0.25 * 0.125 * 0.1
        assert r == pytest.approx(1.0 / 320.0)
        c = dom.hole_center((2, 2))
        assert np.allclose(c, [0.5, 0.5])
        just_inside = c + np.array([r * 0.999, 0.0])
        just_outside = c + np.array([r * 1.001, 0.0])
        assert classify_point(dom, just_inside) == HOLE
        assert classify_point(dom, just_outside) == FLUID

    def test_exact_fit_box(self):
        # box side an integer multiple of eps: boundary-touching cells count
        dom = build_domain(UNIT_SQUARE, 0.5, 0.1, uniform_plan(ball(0.1)))
        assert set(dom.active) == {(1, 1)}

    def test_no_active_cells_when_eps_too_large(self):
        dom = build_domain(UNIT_SQUARE, 2.0, 0.1, uniform_plan(ball(0.1)))
        assert len(dom.cells) == 0

    def test_eta_out_of_range(self):
        with pytest.raises(EtaOutOfRange):
            build_domain(UNIT_SQUARE, 0.25, 0.6, uniform_plan(ball(0.1)))
        with pytest.raises(EtaOutOfRange):
            build_domain(UNIT_SQUARE, 0.25, 0.5, uniform_plan(ball(0.1)))
        with pytest.raises(EtaOutOfRange):
            build_domain(UNIT_SQUARE, 0.25, 0.0, uniform_plan(ball(0.1)))

    def test_offset_out_of_range(self):
        with pytest.raises(OffsetOutOfRange):
            build_domain(
                UNIT_SQUARE, 0.25, 0.125, uniform_plan(ball(0.1), offset=(0.6, 0.0))
            )
        # the cube (-1/4, 1/4)^d is open: 0.25 itself is rejected
        with pytest.raises(OffsetOutOfRange):
            build_domain(
                UNIT_SQUARE, 0.25, 0.125, uniform_plan(ball(0.1), offset=(0.25, 0.0))
            )

    def test_shape_too_large(self):
        with pytest.raises(ShapeTooLarge):
            build_domain(UNIT_SQUARE, 0.25, 0.125, uniform_plan(ball(0.2)))
        # circumradius of a square is sqrt(d) * half-side
        with pytest.raises(ShapeTooLarge):
            build_domain(UNIT_SQUARE, 0.25, 0.125, uniform_plan(square(0.1, dim=2)))

    def test_three_dimensional_lattice(self):
        box = ((0.0, 1.0),) * 3
        dom = build_domain(box, 0.25, 0.125, uniform_plan(ball(0.1)))
        assert len(dom.cells) == 27
        assert classify_point(dom, dom.hole_center((2, 2, 2))) == HOLE


class TestClassifyPoint:
    def test_exterior_outside_and_on_boundary(self):
        dom = quarter_domain()
        assert classify_point(dom, (1.5, 0.5)) == EXTERIOR
        assert classify_point(dom, (-0.1, 0.5)) == EXTERIOR
        # the box is open: its boundary is exterior
        assert classify_point(dom, (0.0, 0.5)) == EXTERIOR
        assert classify_point(dom, (0.5, 1.0)) == EXTERIOR

    def test_fluid_between_holes(self):
        dom = quarter_domain()
        assert classify_point(dom, (0.375, 0.375)) == FLUID

    def test_hole_free_domain_classification_is_box_membership(self):
        dom = build_domain(UNIT_SQUARE, 2.0, 0.1, uniform_plan(ball(0.1)))
        assert classify_point(dom, (0.5, 0.5)) == FLUID
        assert classify_point(dom, (2.5, 0.5)) == EXTERIOR

    def test_offset_moves_hole_not_cell(self):
        off = (0.2, -0.2)
        dom = build_domain(
            UNIT_SQUARE, 0.25, 0.125, uniform_plan(ball(0.1), offset=off)
        )
        c = dom.hole_center((2, 2))
        assert np.allclose(c, [0.5 + 0.25 * 0.2, 0.5 - 0.25 * 0.2])
        assert classify_point(dom, c) == HOLE
        assert classify_point(dom, (0.5, 0.5)) == FLUID

    @settings(max_examples=200, deadline=None)
    @given(
        x=st.tuples(
            st.floats(min_value=0.01, max_value=0.99),
            st.floats(min_value=0.01, max_value=0.99),
        ),
        eta_big=st.floats(min_value=0.05, max_value=0.45),
        shrink=st.floats(min_value=0.1, max_value=0.9),
    )
    def test_holes_shrink_with_eta(self, x, eta_big, shrink):
        # a point covered by the eta' hole is covered by the eta hole
        # whenever eta' < eta and the plan is unchanged
        plan = uniform_plan(ball(0.12))
        big = build_domain(UNIT_SQUARE, 0.25, eta_big, plan)
        small = build_domain(UNIT_SQUARE, 0.25, eta_big * shrink, plan)
        if classify_point(small, x) == HOLE:
            assert classify_point(big, x) == HOLE

    @settings(max_examples=200, deadline=None)
    @given(
        x=st.tuples(
            st.floats(min_value=0.001, max_value=0.999),
            st.floats(min_value=0.001, max_value=0.999),
        ),
        eta=st.floats(min_value=0.01, max_value=0.49),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_every_hole_inside_eighth_ball(self, x, eta, seed):
        # holes stay within eps * B(y_z, 1/8) for any admissible plan
        dom = build_domain(
            UNIT_SQUARE, 0.25, eta, random_plan(ball(0.125), seed=seed)
        )
        if classify_point(dom, x) == HOLE:
            z = tuple(int(round(xi / 0.25)) for xi in x)
            dist = np.linalg.norm(np.asarray(x) - dom.hole_center(z))
            assert dist <= 0.25 * 0.125 + 1e-12


class TestShapes:
    def test_ball_membership_closed(self):
        b = ball(0.1)
        assert b.contains([0.1, 0.0])
        assert not b.contains([0.1001, 0.0])
        assert b.inradius == b.circumradius == 0.1

    def test_ellipse_radii(self):
        e = axis_ellipse((0.1, 0.05))
        assert e.inradius == 0.05
        assert e.circumradius == 0.1
        assert e.contains([0.1, 0.0])
        assert e.contains([0.0, 0.05])
        assert not e.contains([0.08, 0.04])

    def test_square_circumradius(self):
        s2 = square(0.08, dim=2)
        assert s2.circumradius == pytest.approx(0.08 * math.sqrt(2))
        s3 = square(0.05, dim=3)
        assert s3.circumradius == pytest.approx(0.05 * math.sqrt(3))
        assert s2.contains([0.08, -0.08])
        assert not s2.contains([0.09, 0.0])

    def test_degenerate_shapes_rejected(self):
        with pytest.raises(ValueError):
            ball(0.0)
        with pytest.raises(ValueError):
            axis_ellipse((0.1, -0.1))
        with pytest.raises(ValueError):
            square(-1.0, dim=2)


class TestRandomPlan:
    def test_deterministic_in_seed_and_cell(self):
        p1 = random_plan(ball(0.1), seed=7)
        p2 = random_plan(ball(0.1), seed=7)
        assert p1((2, 3))[0] == p2((2, 3))[0]
        assert p1((2, 3))[0] != p1((3, 2))[0]

    def test_negative_cells_distinct(self):
        p = random_plan(ball(0.1), seed=1)
        assert p((1, -1))[0] != p((-1, 1))[0]

    def test_amplitude_respected(self):
        p = random_plan(ball(0.1), seed=3, amplitude=0.2)
        for z in [(0, 0), (5, 9), (-4, 2)]:
            off, _ = p(z)
            assert max(abs(c) for c in off) < 0.2

    def test_amplitude_cap(self):
        with pytest.raises(ValueError):
            random_plan(ball(0.1), seed=0, amplitude=0.3)
