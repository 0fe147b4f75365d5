import itertools
import random

import pytest

from gfdelta.combinat import digit_sum
from gfdelta.field import basis_elements, prime_field
from gfdelta.poly import MultiPoly, all_points, interpolate, parse_poly, random_poly
from gfdelta.reduce_pm import (
    ProjectionContext,
    ReductionError,
    component_degree_bound,
    project_blackbox,
    verify_reduction,
)

from conftest import GF4, GF8, GF9


def wrap(f):
    return lambda point: f.evaluate(point)


# -- the coordinate isomorphism -------------------------------------------------


def test_phi_is_additive_bijection_exhaustive():
    for spec in (GF4, GF9, GF8):
        ctx = ProjectionContext.for_spec(spec)
        seen = set()
        for el in spec.elements():
            coords = ctx.phi(el)
            assert ctx.phi_inv(coords) == el
            seen.add(coords)
        assert len(seen) == spec.order
        for x, y in itertools.product(spec.elements(), repeat=2):
            lhs = ctx.phi(x + y)
            rhs = tuple(
                (a + b) % spec.p for a, b in zip(ctx.phi(x), ctx.phi(y))
            )
            assert lhs == rhs


def test_phi_supports_nonstandard_bases():
    a = GF4.generator
    ctx = ProjectionContext.for_spec(GF4, basis=[GF4.one, a + 1])
    for el in GF4.elements():
        assert ctx.phi_inv(ctx.phi(el)) == el
    with pytest.raises(ReductionError):
        ProjectionContext.for_spec(GF4, basis=[GF4.one, GF4.one])


def test_point_flattening_round_trips():
    ctx = ProjectionContext.for_spec(GF9)
    rng = random.Random(4)
    for _ in range(20):
        point = tuple(GF9.random_element(rng) for _ in range(3))
        flat = ctx.phi_point(point)
        assert len(flat) == 6
        assert ctx.phi_inv_point(flat, 3) == point


# -- component functions ---------------------------------------------------------


def test_projection_of_identity_gives_coordinate_functions():
    ctx = ProjectionContext.for_spec(GF4)
    prime = prime_field(2)
    components = project_blackbox(lambda pt: pt[0], 1, ctx)
    for coords in all_points(prime, 2):
        for j in (0, 1):
            assert components[j](coords) == coords[j]


def test_projection_of_constant():
    ctx = ProjectionContext.for_spec(GF9)
    c = GF9.element((2, 1))
    components = project_blackbox(lambda pt: c, 1, ctx)
    prime = prime_field(3)
    for coords in all_points(prime, 2):
        assert components[0](coords) == prime.element(2)
        assert components[1](coords) == prime.element(1)


def test_projection_of_squaring_over_gf4():
    # oracle: square every element directly and project the table
    ctx = ProjectionContext.for_spec(GF4)
    prime = prime_field(2)
    f = parse_poly("x1^2", GF4)
    components = project_blackbox(wrap(f), 1, ctx)
    for el in GF4.elements():
        coords = tuple(prime.element(c) for c in ctx.phi(el))
        expected = ctx.phi(el * el)
        for j in (0, 1):
            assert int(components[j](coords)) == expected[j]


# -- the reduction theorem --------------------------------------------------------


def test_reduction_base_case_single_step(rng):
    for _ in range(10):
        f = random_poly(GF4, 1, 3, 3, rng=rng)
        ctx = ProjectionContext.for_spec(GF4)
        report = verify_reduction(wrap(f), 1, (1, 0), ctx)
        assert report.ok and report.exhaustive and report.points_checked == 4


def test_reduction_trivial_r_vector(rng):
    f = random_poly(GF9, 1, 8, 4, rng=rng)
    ctx = ProjectionContext.for_spec(GF9)
    report = verify_reduction(wrap(f), 1, (0, 0), ctx)
    assert report.ok


def test_reduction_all_r_vectors_exhaustive(rng):
    for spec in (GF4, GF9):
        ctx = ProjectionContext.for_spec(spec)
        p, m = spec.p, spec.m
        for _ in range(8):
            f = random_poly(spec, 1, spec.order - 1, 4, rng=rng)
            for r in itertools.product(range(p), repeat=m):
                assert verify_reduction(wrap(f), 1, r, ctx).ok


def test_reduction_two_variables_sampled(rng):
    for spec in (GF4, GF9):
        ctx = ProjectionContext.for_spec(spec)
        f = random_poly(spec, 2, spec.order - 1, 5, rng=rng)
        r = tuple(
            rng.randint(0, spec.p - 1) for _ in range(spec.m)
        )
        report = verify_reduction(
            wrap(f), 2, r, ctx, seed=7, samples=200, exhaustive_limit=64
        )
        assert report.ok


def test_reduction_full_blocks_on_witness():
    # the non-collapsing product polynomial stays a nonzero constant on
    # both sides when every block is used p-1 times
    for spec in (GF4, GF9):
        x = MultiPoly.variable(spec, 1, 0)
        f = MultiPoly.constant(spec, 1, 1)
        for el in spec.elements():
            if el:
                f = f * (x - MultiPoly.constant(spec, 1, el))
        ctx = ProjectionContext.for_spec(spec)
        r = (spec.p - 1,) * spec.m
        assert verify_reduction(wrap(f), 1, r, ctx).ok
        from gfdelta.diff import DiffPlan, blackbox_delta

        steps = []
        for b, ri in zip(ctx.basis, r):
            steps.extend([b] * ri)
        plan = DiffPlan.make(spec, {0: len(steps)}, steps)
        value = blackbox_delta(wrap(f), plan, (spec.zero,))
        assert value != spec.zero


def test_reduction_detects_wrong_pairings():
    # swapping the component functions must break the pointwise equality
    ctx = ProjectionContext.for_spec(GF4)
    f = parse_poly("x1^2 + (a)*x1", GF4)
    good = verify_reduction(wrap(f), 1, (1, 0), ctx)
    assert good.ok

    swapped = lambda pt: GF4.element(tuple(reversed(ctx.phi(f.evaluate(pt)))))
    bad = verify_reduction(swapped, 1, (1, 0), ctx)
    # either it still matches (symmetric function) or mismatches are reported
    if not bad.ok:
        assert bad.mismatches


def test_reduction_rejects_bad_r():
    ctx = ProjectionContext.for_spec(GF9)
    with pytest.raises(ReductionError):
        verify_reduction(lambda pt: GF9.zero, 1, (3, 0), ctx)
    with pytest.raises(ReductionError):
        verify_reduction(lambda pt: GF9.zero, 1, (1,), ctx)


# -- degree bounds ----------------------------------------------------------------


def test_component_degree_bound_examples():
    f = parse_poly("x1^5", GF9)
    assert component_degree_bound(f, 0) == 3  # 5 = 12 in base 3
    linear = parse_poly("x1 + (a)*x2", GF9)
    assert component_degree_bound(linear, 0) == 1
    top = MultiPoly.term(GF9, 1, 1, (GF9.order - 1,))
    assert component_degree_bound(top, 0) == GF9.m * (GF9.p - 1)


def test_interpolated_components_respect_digit_sum_bound():
    for spec in (GF9, GF8):
        ctx = ProjectionContext.for_spec(spec)
        prime = prime_field(spec.p)
        for d in range(1, spec.order):
            f = MultiPoly.term(spec, 1, 1, (d,))
            bound = component_degree_bound(f, 0)
            components = project_blackbox(wrap(f), 1, ctx)
            for comp in components:
                symbolic = interpolate(prime, spec.m, lambda pt: comp(pt))
                assert symbolic.degrees().total <= bound
