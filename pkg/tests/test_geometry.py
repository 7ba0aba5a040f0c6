"""Chart, vector-field and frame-model tests."""

import numpy as np
import pytest

from conftest import COORDS, example1_model, phi_profile
from semisub.expr import eval_poly, eval_value, parse
from semisub.geometry import (
    EPSILON,
    Chart,
    FrameModel,
    ModelError,
    VectorField,
    directional_derivative,
    directional_derivative_jet,
    frame_gram,
    lie_bracket,
    metric_at,
)
from semisub.models import random_adapted_frame_model
from semisub.submersion import _frame_polys, _poly_bracket, adaptedness_residuals


def _vf(*texts, consts=()):
    return VectorField(tuple(parse(t, COORDS, consts) for t in texts))


class TestChart:
    def test_interior_grid(self):
        chart = Chart(coords=COORDS, domain=((0.0, 1.0), (0.0, 2.0), (-1.0, 1.0)))
        grid = chart.sample_grid()
        assert grid.shape == (27, 3)
        assert chart.contains(grid, strict=True)
        np.testing.assert_allclose(chart.axis_points(0), [0.25, 0.5, 0.75])

    def test_degenerate_interval_rejected(self):
        with pytest.raises(ModelError):
            Chart(coords=COORDS, domain=((0.0, 0.0), (0.0, 1.0), (0.0, 1.0)))

    def test_duplicate_coordinates_rejected(self):
        with pytest.raises(ModelError):
            Chart(coords=("x", "x", "z"), domain=((0, 1),) * 3)

    def test_require_interior(self):
        chart = Chart(coords=COORDS, domain=((0.0, 1.0),) * 3)
        with pytest.raises(ModelError):
            chart.require_interior([0.0, 0.5, 0.5])


class TestDirectionalDerivative:
    def test_coordinate_direction(self):
        X = _vf("1", "0", "0")
        f = parse("x^2", COORDS)
        assert directional_derivative(X, f, [3.0, 0.0, 0.0]) == pytest.approx(6.0)

    def test_profile_derivative_matches_closed_form(self):
        # e1(k1) for the biharmonic product model at x = 1, c = 1
        e = parse("c*(1+exp(c*x))/(1-exp(c*x))", COORDS, ("c",))
        X = _vf("1", "0", "0", consts=("c",))
        v = directional_derivative(X, e, [1.0, 0.0, 0.0], {"c": 1.0})
        u = np.e
        assert v == pytest.approx(2.0 * u / (1.0 - u) ** 2, rel=1e-12)
        # and against finite differences
        h = 1e-5
        fd = (
            eval_value(e, [1 + h, 0, 0], {"c": 1.0})
            - eval_value(e, [1 - h, 0, 0], {"c": 1.0})
        ) / (2 * h)
        assert abs(v - fd) < 1e-6

    def test_zero_field(self):
        X = _vf("0", "0", "0")
        f = parse("exp(x)*sin(y)", COORDS)
        assert directional_derivative(X, f, [0.3, 0.7, 0.1]) == 0.0

    def test_jet_variant_allows_nesting(self):
        # X(X(f)) for X = d/dx, f = x^3: 6x
        X = _vf("1", "0", "0")
        f = parse("x^3", COORDS)
        p = [2.0, 0.0, 0.0]
        value, grad = directional_derivative_jet(X, f, p)
        assert value == pytest.approx(12.0)
        xv = np.array([1.0, 0.0, 0.0])
        assert xv @ grad == pytest.approx(12.0)  # e1(e1(x^3)) = 6x

    def test_jet_variant_with_varying_field(self):
        # X = x d/dy: X(f) = x * df/dy; gradient picks up both terms
        X = _vf("0", "x", "0")
        f = parse("y^2", COORDS)
        p = [2.0, 3.0, 0.0]
        value, grad = directional_derivative_jet(X, f, p)
        assert value == pytest.approx(12.0)  # 2 * (2*3)
        np.testing.assert_allclose(grad, [6.0, 4.0, 0.0])


class TestLieBracket:
    def test_coordinate_fields_commute(self):
        X = _vf("1", "0", "0")
        Y = _vf("0", "1", "0")
        np.testing.assert_allclose(lie_bracket(X, Y, [0.2, 0.3, 0.4]), 0.0)

    def test_example_model_vertical_bracket(self):
        # [e1, e3] = phi(x) e3, so in coordinates phi(x) * (0, 0, beta(x))
        c = 1.0
        beta = "exp(c*x)/(1 - exp(c*x))^2"
        e1 = _vf("1", "0", "0", consts=("c",))
        e3 = _vf("0", "0", beta, consts=("c",))
        p = [1.0, 0.0, 1.0]
        br = lie_bracket(e1, e3, p, {"c": c})
        phi = phi_profile(1.0, c)
        beta_v = eval_value(parse(beta, COORDS, ("c",)), p, {"c": c})
        np.testing.assert_allclose(br, [0.0, 0.0, phi * beta_v], rtol=1e-12)

    def test_self_bracket_vanishes(self):
        rng = np.random.default_rng(5)
        for seed in range(5):
            X = _vf("x*y", "sin(z)", "x^2 - y")
            p = rng.uniform(-0.9, 0.9, size=3)
            np.testing.assert_allclose(lie_bracket(X, X, p), 0.0, atol=1e-15)

    def test_bilinearity_and_antisymmetry(self):
        fields = [
            _vf("x^2", "y*z", "1"),
            _vf("y", "x - z", "x*y"),
            _vf("z^2", "2", "x"),
        ]
        rng = np.random.default_rng(11)
        pts = rng.uniform(-0.9, 0.9, size=(6, 3))
        X, Y, Z = fields
        for p in pts:
            xy = lie_bracket(X, Y, p)
            yx = lie_bracket(Y, X, p)
            np.testing.assert_allclose(xy, -yx, atol=1e-12)
            # [X + Y, Z] = [X, Z] + [Y, Z] (coefficientwise sums of Exprs)
            XplusY = VectorField(
                tuple(a + b for a, b in zip(X.coeffs, Y.coeffs))
            )
            lhs = lie_bracket(XplusY, Z, p)
            rhs = lie_bracket(X, Z, p) + lie_bracket(Y, Z, p)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_jacobi_identity_on_polynomial_fields(self):
        # nested brackets through the polynomial pipeline: for polynomial
        # coefficients the cyclic sum vanishes to rounding
        X = _vf("x*y", "z", "x^2")
        Y = _vf("y^2", "x", "1")
        Z = _vf("z", "x*z", "y")
        chart = Chart(coords=COORDS, domain=((-1.0, 1.0),) * 3)
        pts = chart.sample_grid()

        def polys(vf, order):
            return [eval_poly(c, pts, {}, order) for c in vf.coeffs]

        def nested(A, B, C):
            # [A, [B, C]] at order 0 via order-2 coefficients
            inner = _poly_bracket([None, polys(B, 2), polys(C, 2)], 1, 2)
            outer = []
            A1 = polys(A, 1)
            for a in range(3):
                acc = None
                for b in range(3):
                    term = A1[b] * inner[a].partial(b) - inner[b].truncate(1) * eval_poly(
                        A.coeffs[a], pts, {}, 2
                    ).partial(b)
                    acc = term if acc is None else acc + term
                outer.append(acc.value)
            return np.stack(outer)

        total = nested(X, Y, Z) + nested(Y, Z, X) + nested(Z, X, Y)
        assert np.max(np.abs(total)) < 1e-9


class TestFrameModel:
    def test_example_metric_values(self):
        m = example1_model(c=1.0)
        p = [1.3, 0.2, -0.4]
        g = metric_at(m, p)
        u = np.exp(1.3)
        beta = u / (1 - u) ** 2
        np.testing.assert_allclose(g, np.diag([1.0, 1.0, -1.0 / beta**2]), rtol=1e-12)

    def test_chart_gram_is_signature(self):
        m = example1_model(c=2.0)
        gram = frame_gram(m, m.chart.sample_grid())
        target = np.zeros_like(gram)
        for i in range(3):
            target[i, i] = EPSILON[i]
        assert np.max(np.abs(gram - target)) < 1e-12

    def test_data_mode_metric_is_abstract_signature(self):
        chart = Chart(coords=COORDS, domain=((-1, 1),) * 3)
        data = {n: parse("0", COORDS) for n in ("f1", "f2", "k1", "k2", "sigma")}
        m = FrameModel(chart=chart, constants={}, data=data)
        np.testing.assert_array_equal(metric_at(m, [0, 0, 0]), np.diag([1.0, 1.0, -1.0]))

    def test_non_orthonormal_frame_rejected(self):
        chart = Chart(coords=COORDS, domain=((-1, 1),) * 3)
        frame = (
            _vf("1", "0", "0"),
            _vf("0", "1", "0"),
            _vf("0", "0", "1"),
        )
        metric = tuple(
            tuple(parse(t, COORDS) for t in row)
            for row in (("1", "0", "0"), ("0", "1", "0"), ("0", "0", "-2"))
        )
        with pytest.raises(ModelError):
            FrameModel(chart=chart, constants={}, frame=frame, metric=metric)

    def test_undeclared_symbol_rejected(self):
        chart = Chart(coords=COORDS, domain=((-1, 1),) * 3)
        data = {n: parse("0", COORDS) for n in ("f1", "f2", "k1", "k2")}
        data["sigma"] = parse("q", COORDS, ("q",))
        with pytest.raises(ModelError):
            FrameModel(chart=chart, constants={}, data=data)

    def test_space_form_data_must_be_fiber_constant(self):
        chart = Chart(coords=COORDS, domain=((-1, 1),) * 3)
        data = {n: parse("0", COORDS) for n in ("f1", "f2", "k1", "k2")}
        data["sigma"] = parse("z", COORDS)
        with pytest.raises(ModelError):
            FrameModel(chart=chart, constants={}, data=data, space_form_c=-1.0)

    def test_constant_override(self):
        m = example1_model(c=1.0)
        m2 = m.with_constants(c=2.0)
        assert m2.constants["c"] == 2.0
        with pytest.raises(ModelError):
            m.with_constants(nope=1.0)


class TestAdaptedShape:
    def test_synthetic_frames_have_vertical_mixed_brackets(self):
        # the components of [e1,e3] and [e2,e3] along e1, e2 vanish for a
        # genuinely adapted frame
        for seed in (0, 1, 2, 3, 4):
            m = random_adapted_frame_model(seed)
            res = adaptedness_residuals(m)
            assert np.max(np.abs(res)) < 1e-9, seed

    def test_metric_from_frame_is_orthonormalizing(self):
        m = random_adapted_frame_model(12)
        gram = frame_gram(m, m.chart.sample_grid())
        target = np.zeros_like(gram)
        for i in range(3):
            target[i, i] = EPSILON[i]
        assert np.max(np.abs(gram - target)) < 1e-12
