"""Extraction, fiber constancy, the frame Jacobi relation, and rotation."""

import numpy as np
import pytest

from conftest import COORDS, example1_model, phi_profile, random_datamode_model
from semisub.expr import parse
from semisub.geometry import Chart, FrameModel, VectorField
from semisub.models import (
    constant_data_chart_model,
    constant_data_model,
    random_adapted_frame_model,
)
from semisub.submersion import (
    NotAdaptedFrame,
    check_vertical_constancy,
    extract_data,
    integrability_jets,
    jacobi_residual,
    rotate_and_reextract,
    rotate_frame,
)


class TestExtraction:
    def test_example_model_data(self):
        m = example1_model(c=1.0)
        data = integrability_jets(m)
        phi = phi_profile(data.points[:, 0], 1.0)
        np.testing.assert_allclose(data.k1.value, phi, rtol=1e-12)
        for name in ("f1", "f2", "k2", "sigma"):
            assert np.max(np.abs(data.datum(name).value)) == 0.0
        assert data.provenance == "extracted"
        assert data.max_bracket_residual() < 1e-15

    def test_flat_product_frame_is_silent(self):
        chart = Chart(coords=COORDS, domain=((-1.0, 1.0),) * 3)
        frame = tuple(
            VectorField(tuple(parse(t, COORDS) for t in row))
            for row in (("1", "0", "0"), ("0", "1", "0"), ("0", "0", "1"))
        )
        metric = tuple(
            tuple(parse(t, COORDS) for t in row)
            for row in (("1", "0", "0"), ("0", "1", "0"), ("0", "0", "-1"))
        )
        m = FrameModel(chart=chart, constants={}, frame=frame, metric=metric)
        data = integrability_jets(m)
        for name in ("f1", "f2", "k1", "k2", "sigma"):
            assert np.max(np.abs(data.datum(name).value)) == 0.0

    def test_perturbed_frame_is_rejected(self):
        # a z-dependent horizontal coefficient makes [e1, e3] non-vertical
        chart = Chart(coords=COORDS, domain=((-1.0, 1.0),) * 3)
        frame = (
            VectorField(tuple(parse(t, COORDS) for t in ("1 + 0.3*z", "0", "0"))),
            VectorField(tuple(parse(t, COORDS) for t in ("0", "1", "0"))),
            VectorField(tuple(parse(t, COORDS) for t in ("0", "0", "1"))),
        )
        m = FrameModel(chart=chart, constants={}, frame=frame)
        with pytest.raises(NotAdaptedFrame):
            integrability_jets(m)

    def test_single_point_wrapper(self):
        m = example1_model(c=0.5)
        d = extract_data(m, [1.0, 0.0, 0.0])
        assert d.nb == 1
        assert d.k1.value[0] == pytest.approx(phi_profile(1.0, 0.5), rel=1e-12)

    def test_declared_data_mode(self):
        m = random_datamode_model(3)
        d = integrability_jets(m)
        assert d.provenance == "declared"
        assert d.bracket_residuals is None


class TestVerticalConstancy:
    def test_example_model_constant_along_fibers(self):
        report = check_vertical_constancy(example1_model(c=1.0))
        assert report.ok
        assert report.max_abs == 0.0

    def test_explicit_fiber_dependence_detected(self):
        chart = Chart(coords=COORDS, domain=((-1.0, 1.0),) * 3)
        data = {n: parse("0", COORDS) for n in ("f1", "f2", "k1", "k2")}
        data["sigma"] = parse("z", COORDS)
        m = FrameModel(chart=chart, constants={}, data=data)
        report = check_vertical_constancy(m)
        assert not report.ok
        i = report.names.index("sigma")
        np.testing.assert_allclose(report.table[i], 1.0)

    def test_constant_data_all_zero(self):
        report = check_vertical_constancy(constant_data_model(0.1, 0.2, 0.3, 0.4, 0.5))
        assert report.max_abs == 0.0


class TestJacobiResidual:
    def test_example_model_vanishes_termwise(self):
        r = jacobi_residual(example1_model(c=1.0))
        assert np.max(np.abs(r)) == 0.0

    def test_chart_extracted_data_satisfy_the_identity(self):
        for seed in range(6):
            m = random_adapted_frame_model(seed)
            r = jacobi_residual(m)
            assert np.max(np.abs(r)) < 1e-7, seed

    def test_non_realizable_constants(self):
        m = constant_data_model(1.0, 0.0, 1.0, 0.0, 0.0)  # k1 f1 = 1
        r = jacobi_residual(m)
        np.testing.assert_allclose(r, 1.0)


class TestRotation:
    def test_constant_three_four_five(self):
        m = constant_data_model(0.0, 0.0, 3.0, 4.0, 0.7, grid=(2, 2, 2))
        rot = rotate_frame(integrability_jets(m))
        assert not rot.degenerate
        np.testing.assert_allclose(rot.data.k1.value, 5.0, rtol=1e-14)
        assert np.max(np.abs(rot.data.k2.value)) < 1e-14
        np.testing.assert_allclose(rot.data.sigma.value, 0.7, rtol=1e-14)

    def test_k2_already_zero_positive_k1_is_identity(self):
        # theta = atan2(0, k1) = 0 wherever k1 > 0
        m = example1_model(c=1.0, side="-")  # the profile is positive here
        data = integrability_jets(m)
        assert np.min(data.k1.value) > 0
        rot = rotate_frame(data)
        assert not rot.degenerate
        np.testing.assert_allclose(rot.data.k1.value, data.k1.value, rtol=1e-14)
        np.testing.assert_allclose(rot.data.f1.value, data.f1.value, atol=1e-14)
        np.testing.assert_allclose(rot.data.f2.value, data.f2.value, atol=1e-14)
        np.testing.assert_allclose(rot.theta, 0.0, atol=1e-15)

    def test_k2_zero_negative_k1_flips_to_positive(self):
        # with k1 < 0 the rotation turns the horizontal legs by pi, so
        # k1' = |k1|; the data otherwise keep their structure
        m = example1_model(c=1.0)
        data = integrability_jets(m)
        assert np.max(data.k1.value) < 0
        rot = rotate_frame(data)
        np.testing.assert_allclose(rot.data.k1.value, -data.k1.value, rtol=1e-14)
        assert np.max(np.abs(rot.data.k2.value)) < 1e-14

    def test_degenerate_rotation_flag(self):
        m = constant_data_model(0.3, 0.1, 0.0, 0.0, 0.5)
        data = integrability_jets(m)
        rot = rotate_frame(data)
        assert rot.degenerate
        assert rot.data is data

    def test_norm_invariance(self):
        for seed in range(5):
            m = random_datamode_model(seed)
            data = integrability_jets(m)
            rho2 = data.k1.value**2 + data.k2.value**2
            if np.min(rho2) < 1e-10:
                continue
            rot = rotate_frame(data)
            rho2p = rot.data.k1.value**2 + rot.data.k2.value**2
            np.testing.assert_allclose(rho2p, rho2, rtol=1e-10)

    def test_sigma_preserved_pointwise(self):
        m = random_datamode_model(17)
        data = integrability_jets(m)
        if np.min(data.k1.value**2 + data.k2.value**2) < 1e-10:
            pytest.skip("degenerate draw")
        rot = rotate_frame(data)
        np.testing.assert_allclose(rot.data.sigma.value, data.sigma.value, atol=1e-12)

    def test_jacobi_survives_rotation(self):
        for seed in (1, 3, 9):
            m = random_adapted_frame_model(seed, z_free_vertical_data=True)
            data = integrability_jets(m)
            if np.min(data.k1.value**2 + data.k2.value**2) < 1e-8:
                continue
            assert np.max(np.abs(jacobi_residual(data))) < 1e-7
            rot = rotate_frame(data)
            assert np.max(np.abs(jacobi_residual(rot.data))) < 1e-7

    def test_analytic_against_reextracted(self):
        hits = 0
        for seed in range(12):
            m = random_adapted_frame_model(seed, z_free_vertical_data=True)
            data = integrability_jets(m)
            if np.min(data.k1.value**2 + data.k2.value**2) < 1e-6:
                continue
            rot = rotate_frame(data)
            ref = rotate_and_reextract(m)
            for name in ("f1", "f2", "k1", "k2", "sigma"):
                a, b = rot.data.datum(name), ref.datum(name)
                assert np.max(np.abs(a.value - b.value)) < 1e-8, (seed, name)
                assert np.max(np.abs(a.d - b.d)) < 1e-7, (seed, name)
            hits += 1
        assert hits >= 6

    def test_roundtrip_constant_chart_realization(self):
        for k1, k2, sigma in ((1.3, -0.8, 0.45), (0.9, 0.0, 0.0), (2.0, 1.5, -0.3)):
            m = constant_data_chart_model(k1, k2, sigma)
            d = integrability_jets(m)
            np.testing.assert_allclose(d.k1.value, k1, atol=1e-9)
            np.testing.assert_allclose(d.k2.value, k2, atol=1e-9)
            np.testing.assert_allclose(d.sigma.value, sigma, atol=1e-9)
            assert np.max(np.abs(d.f1.value)) < 1e-9
            assert np.max(np.abs(d.f2.value)) < 1e-9
