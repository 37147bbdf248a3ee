"""Derivative stencil construction: basis, moment systems, solving, apply."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcpse import (
    InsufficientSupportError,
    OperatorBuildError,
    OperatorSpec,
    PointCloud,
    apply,
    assemble_moment_system,
    build_index,
    build_operator,
    gradient_operator,
    k_nearest,
    monomial_basis,
    solve_kernel_coefficients,
    verify_moments,
)
from dcpse.operators import kernel_weights, multi_index_order
from conftest import full_poly, jittered_cloud, poly_derivative, poly_eval


class TestMonomialBasis:
    def test_first_derivative_1d(self):
        assert monomial_basis((1,), 2) == [(0,), (1,), (2,)]

    def test_second_derivative_1d_skips_constant(self):
        assert monomial_basis((2,), 2) == [(1,), (2,), (3,)]

    def test_first_partial_2d_graded_order(self):
        assert monomial_basis((1, 0), 2) == [
            (0, 0),
            (1, 0),
            (0, 1),
            (2, 0),
            (1, 1),
            (0, 2),
        ]

    def test_mixed_partial_2d(self):
        basis = monomial_basis((1, 1), 2)
        # even total order: constants excluded, degrees 1..3
        assert (0, 0) not in basis
        assert {sum(b) for b in basis} == {1, 2, 3}

    def test_explicit_dimension_checked(self):
        assert monomial_basis((1, 0, 0), 2, 3) == monomial_basis((1, 0, 0), 2)
        with pytest.raises(ValueError):
            monomial_basis((1, 0), 2, 3)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            monomial_basis((0, 0), 2)
        with pytest.raises(ValueError):
            monomial_basis((1,), 0)
        with pytest.raises(ValueError):
            monomial_basis((-1, 2), 2)


class TestOperatorSpec:
    def test_sign_convention(self):
        assert OperatorSpec(alpha=(1, 0)).sign == 1
        assert OperatorSpec(alpha=(2, 0)).sign == -1
        assert OperatorSpec(alpha=(1, 1)).sign == -1
        assert OperatorSpec(alpha=(1, 1, 1)).sign == 1

    def test_order(self):
        assert OperatorSpec(alpha=(2, 1)).order == 3

    def test_validation(self):
        with pytest.raises(ValueError):
            OperatorSpec(alpha=(1, 0), r=0)
        with pytest.raises(ValueError):
            OperatorSpec(alpha=(1, 0), eps_factor=0.0)
        with pytest.raises(ValueError):
            OperatorSpec(alpha=(1, 0), neighbor_factor=0.5)
        with pytest.raises(ValueError):
            OperatorSpec(alpha=(0, 0))
        # degree cap: |alpha| + r - 1 <= 6
        with pytest.raises(ValueError):
            OperatorSpec(alpha=(4, 0), r=4)

    def test_defaults(self):
        spec = OperatorSpec(alpha=(1,))
        assert spec.r == 2
        assert spec.eps_factor == 1.0
        assert spec.neighbor_factor == 2.0
        assert spec.max_growth_attempts == 5
        assert spec.cond_threshold == 1e12


class TestMomentSystem:
    def _symmetric_pair(self, h=0.1):
        cloud = PointCloud(np.array([[-h], [0.0], [h]]))
        index = build_index(cloud)
        ns = k_nearest(index, 1, 2)
        return cloud, ns

    def test_vandermonde_symmetric_1d(self):
        h = 0.1
        cloud, ns = self._symmetric_pair(h)
        spec = OperatorSpec(alpha=(1,), r=2)
        system = assemble_moment_system(
            cloud, ns, spec, eps=h, allow_underdetermined=True
        )
        # scaled offsets are center minus neighbor over eps: +1 and -1
        rows = {tuple(row) for row in system.V}
        assert rows == {(1.0, 1.0, 1.0), (1.0, -1.0, 1.0)}
        assert system.A.shape == (3, 3)
        assert np.array_equal(system.A, system.A.T)

    def test_window_scaling_with_eps(self):
        h = 0.1
        cloud, ns = self._symmetric_pair(h)
        spec = OperatorSpec(alpha=(1,), r=2)
        eps0 = h
        system = assemble_moment_system(
            cloud, ns, spec, eps=2 * eps0, allow_underdetermined=True
        )
        offsets = cloud.coords[1] - cloud.coords[ns.ids]
        want = np.exp(-np.sum(offsets**2, axis=1) / (8.0 * eps0**2))
        assert np.allclose(system.E, want, rtol=1e-15)

    def test_rhs_signs(self):
        # b is zero except at the derivative's own monomial, where it is
        # (-1)^{|alpha|} times the product of component factorials
        cloud = jittered_cloud(2, 5, seed=0)
        index = build_index(cloud)
        ns = k_nearest(index, 12, 12)
        h = 0.25
        sys1 = assemble_moment_system(
            cloud, ns, OperatorSpec(alpha=(1, 0)), eps=h
        )
        basis1 = monomial_basis((1, 0), 2)
        want1 = np.zeros(len(basis1))
        want1[basis1.index((1, 0))] = -1.0
        assert np.array_equal(sys1.b, want1)

        sys2 = assemble_moment_system(
            cloud, ns, OperatorSpec(alpha=(2, 0)), eps=h
        )
        basis2 = monomial_basis((2, 0), 2)
        want2 = np.zeros(len(basis2))
        want2[basis2.index((2, 0))] = 2.0
        assert np.array_equal(sys2.b, want2)

        sys3 = assemble_moment_system(
            cloud, ns, OperatorSpec(alpha=(1, 1)), eps=h
        )
        basis3 = monomial_basis((1, 1), 2)
        want3 = np.zeros(len(basis3))
        want3[basis3.index((1, 1))] = 1.0
        assert np.array_equal(sys3.b, want3)

    def test_insufficient_support(self):
        cloud, ns = self._symmetric_pair()
        spec = OperatorSpec(alpha=(1,), r=2)
        with pytest.raises(InsufficientSupportError):
            assemble_moment_system(cloud, ns, spec, eps=0.1)

    def test_central_difference_weights(self):
        # the smallest symmetric stencil reproduces classical central
        # differences: d/dx weights -+1/(2h) after scaling
        h = 0.1
        cloud, ns = self._symmetric_pair(h)
        spec = OperatorSpec(alpha=(1,), r=2)
        system = assemble_moment_system(
            cloud, ns, spec, eps=h, allow_underdetermined=True
        )
        coeffs = solve_kernel_coefficients(system)
        w = kernel_weights(system, coeffs, spec.order)
        by_id = dict(zip(ns.ids.tolist(), w))
        assert by_id[0] == pytest.approx(-1.0 / (2 * h), rel=1e-12)
        assert by_id[2] == pytest.approx(+1.0 / (2 * h), rel=1e-12)
        # apply semantics: sum w_q (f_q + f_p) for odd order
        f = cloud.coords[:, 0] ** 2  # f' at 0 is 0
        val = sum(w0 * (f[q] + f[1]) for q, w0 in by_id.items())
        assert val == pytest.approx(0.0, abs=1e-12)
        g = 3.0 * cloud.coords[:, 0]  # g' = 3
        val = sum(w0 * (g[q] + g[1]) for q, w0 in by_id.items())
        assert val == pytest.approx(3.0, rel=1e-12)


def _relative_error(got, want):
    scale = max(float(np.max(np.abs(want))), 1.0)
    return float(np.max(np.abs(got - want))) / scale


def _same_stencils(a, b, weight_factor=1.0):
    """Bitwise stencil comparison; b's weights must equal a's times the
    factor exactly."""
    for ids_a, ids_b in zip(a.neighbor_ids, b.neighbor_ids):
        if not np.array_equal(ids_a, ids_b):
            return False
    for wa, wb in zip(a.weights, b.weights):
        if not np.array_equal(wa * weight_factor, wb):
            return False
    return True


class TestBuildOperator:
    @pytest.mark.parametrize(
        "dim,per_axis,alpha",
        [
            (1, 40, (1,)),
            (1, 40, (2,)),
            (2, 12, (1, 0)),
            (2, 12, (0, 2)),
            (2, 12, (1, 1)),
            (3, 6, (0, 1, 0)),
            (3, 6, (1, 0, 1)),
        ],
    )
    @pytest.mark.parametrize("r", [2, 3])
    def test_polynomial_exactness(self, dim, per_axis, alpha, r):
        cloud = jittered_cloud(dim, per_axis, seed=42)
        index = build_index(cloud)
        spec = OperatorSpec(alpha=alpha, r=r)
        op = build_operator(cloud, index, spec)
        degree = multi_index_order(alpha) + r - 1
        terms = full_poly(dim, degree, seed=3)
        values = poly_eval(cloud.coords, terms)
        want = poly_eval(cloud.coords, poly_derivative(terms, alpha))
        assert _relative_error(op.apply(values), want) < 1e-9

    def test_degree_above_exactness_has_error(self):
        cloud = jittered_cloud(1, 60, seed=2)
        index = build_index(cloud)
        op = build_operator(cloud, index, OperatorSpec(alpha=(1,), r=2))
        x = cloud.coords[:, 0]
        got = op.apply(x**3)
        assert np.max(np.abs(got - 3 * x**2)) > 1e-8

    def test_moment_residuals_small(self, indexed2d):
        cloud, index = indexed2d
        for alpha in [(1, 0), (0, 1), (2, 0), (1, 1)]:
            op = build_operator(cloud, index, OperatorSpec(alpha=alpha))
            assert float(np.max(verify_moments(op, cloud))) < 1e-10

    def test_diagnostics_shapes(self, indexed2d):
        cloud, index = indexed2d
        op = build_operator(cloud, index, OperatorSpec(alpha=(1, 0)))
        assert op.n == cloud.n
        assert op.support_size.shape == (cloud.n,)
        assert op.condition.shape == (cloud.n,)
        assert np.all(op.support_size >= 1)
        assert np.all(op.condition >= 1.0)

    def test_deterministic_rebuild(self, indexed2d):
        cloud, index = indexed2d
        spec = OperatorSpec(alpha=(1, 1))
        a = build_operator(cloud, index, spec)
        b = build_operator(cloud, index, spec)
        assert _same_stencils(a, b)
        assert np.array_equal(a.eps, b.eps)

    def test_thread_count_invariance(self, indexed2d):
        cloud, index = indexed2d
        spec = OperatorSpec(alpha=(0, 1))
        a = build_operator(cloud, index, spec, threads=1)
        b = build_operator(cloud, index, spec, threads=4)
        values = franke_like(cloud)
        assert _same_stencils(a, b)
        assert np.array_equal(a.apply(values), b.apply(values))

    def test_translation_invariance_bitwise(self):
        # binary-exact grid plus integer shift: weights must be identical
        axis = np.arange(9) * 0.125
        xg, yg = np.meshgrid(axis, axis, indexing="ij")
        cloud = PointCloud(np.column_stack([xg.ravel(), yg.ravel()]))
        moved = PointCloud(cloud.coords + np.array([3.0, -8.0]))
        spec = OperatorSpec(alpha=(1, 0))
        a = build_operator(cloud, build_index(cloud), spec)
        b = build_operator(moved, build_index(moved), spec)
        assert _same_stencils(a, b)

    def test_scaling_by_power_of_two_bitwise(self):
        # doubling all coordinates scales first-derivative weights by
        # exactly one half: every intermediate is a power-of-two rescale
        cloud = jittered_cloud(2, 10, seed=8)
        doubled = PointCloud(cloud.coords * 2.0)
        spec = OperatorSpec(alpha=(1, 0))
        a = build_operator(cloud, build_index(cloud), spec)
        b = build_operator(doubled, build_index(doubled), spec)
        assert _same_stencils(a, b, weight_factor=0.5)

    def test_collinear_cloud_fails_with_node_report(self):
        t = np.linspace(0.0, 1.0, 30)
        cloud = PointCloud(np.column_stack([t, 2.0 * t]))
        index = build_index(cloud)
        with pytest.raises(OperatorBuildError) as err:
            build_operator(cloud, index, OperatorSpec(alpha=(0, 1)))
        assert len(err.value.failed_nodes) == cloud.n
        assert "node" in str(err.value)

    def test_tiny_cond_threshold_exhausts_growth(self, indexed2d):
        cloud, index = indexed2d
        spec = OperatorSpec(alpha=(1, 0), cond_threshold=1.5)
        with pytest.raises(OperatorBuildError):
            build_operator(cloud, index, spec)

    def test_single_node_cloud_rejected(self):
        cloud = PointCloud(np.array([[0.0, 0.0]]))
        index = build_index(cloud)
        with pytest.raises(InsufficientSupportError):
            build_operator(cloud, index, OperatorSpec(alpha=(1, 0)))


def franke_like(cloud):
    x = cloud.coords[:, 0]
    y = cloud.coords[:, 1] if cloud.dim > 1 else 0.0 * x
    return np.sin(3 * x) * np.cos(2 * y) + x * y


class TestGradientOperator:
    def test_matches_independent_builds_bitwise(self, indexed2d):
        cloud, index = indexed2d
        ops = gradient_operator(cloud, index, r=2)
        assert len(ops) == 2
        for axis, alpha in enumerate([(1, 0), (0, 1)]):
            single = build_operator(cloud, index, OperatorSpec(alpha=alpha))
            assert _same_stencils(ops[axis], single)
            assert np.array_equal(ops[axis].eps, single.eps)

    def test_alpha_ordering_matches_axes(self, indexed2d):
        cloud, index = indexed2d
        ops = gradient_operator(cloud, index, r=2)
        x = cloud.coords[:, 0]
        y = cloud.coords[:, 1]
        assert _relative_error(ops[0].apply(x), np.ones(cloud.n)) < 1e-10
        assert _relative_error(ops[0].apply(y), np.zeros(cloud.n)) < 1e-10
        assert _relative_error(ops[1].apply(y), np.ones(cloud.n)) < 1e-10


class TestApply:
    def test_module_function_matches_method(self, indexed2d):
        cloud, index = indexed2d
        op = build_operator(cloud, index, OperatorSpec(alpha=(1, 0)))
        values = franke_like(cloud)
        assert np.array_equal(apply(op, values), op.apply(values))

    def test_shape_mismatch(self, indexed2d):
        cloud, index = indexed2d
        op = build_operator(cloud, index, OperatorSpec(alpha=(1, 0)))
        with pytest.raises(ValueError):
            op.apply(np.zeros(cloud.n + 1))

    def test_non_finite_field_rejected(self, indexed2d):
        cloud, index = indexed2d
        op = build_operator(cloud, index, OperatorSpec(alpha=(1, 0)))
        values = np.zeros(cloud.n)
        values[3] = np.nan
        with pytest.raises(ValueError):
            op.apply(values)

    def test_wrong_cloud_for_verify(self, indexed2d):
        cloud, index = indexed2d
        op = build_operator(cloud, index, OperatorSpec(alpha=(1, 0)))
        other = jittered_cloud(2, 4, seed=1)
        with pytest.raises(ValueError):
            verify_moments(op, other)


class TestProperties:
    @given(
        seed=st.integers(0, 2**16),
        alpha=st.sampled_from([(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]),
    )
    @settings(max_examples=15, deadline=None)
    def test_moment_residuals_on_random_clouds(self, seed, alpha):
        cloud = jittered_cloud(2, 9, seed=seed)
        index = build_index(cloud)
        op = build_operator(cloud, index, OperatorSpec(alpha=alpha))
        assert float(np.max(verify_moments(op, cloud))) < 1e-8

    @given(seed=st.integers(0, 2**16))
    @settings(max_examples=10, deadline=None)
    def test_linear_fields_differentiated_exactly(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = rng.uniform(-5, 5, size=3)
        cloud = jittered_cloud(2, 8, seed=seed)
        index = build_index(cloud)
        op = build_operator(cloud, index, OperatorSpec(alpha=(1, 0)))
        values = a * cloud.coords[:, 0] + b * cloud.coords[:, 1] + c
        got = op.apply(values)
        assert np.max(np.abs(got - a)) < 1e-9 * max(1.0, abs(a))
