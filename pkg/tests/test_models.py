# Future
from __future__ import division, print_function, unicode_literals

# Third Party
import numpy as np
import pytest
import scipy.linalg

# CuspFunnel
from cuspfunnel.conjugates import assemble_A_halfline
from cuspfunnel.constants import ALPHA, BETA
from cuspfunnel.graphs import FiniteGraphSpec, GeometrySpec, build_from_spec
from cuspfunnel.models import ModelFactory, band_edges, build_model
from cuspfunnel.operators import assemble_halfline_laplacian, assemble_hamiltonian


def _vertex_spectrum(geometry, perturbation=None):
    H = assemble_hamiltonian(build_from_spec(geometry), perturbation)
    frame = H.unit_frame().toarray()
    return scipy.linalg.eigvalsh(0.5 * (frame + frame.conj().T))


def _model_spectrum(model):
    H = model.H.toarray()
    return scipy.linalg.eigvalsh(0.5 * (H + H.conj().T))


class TestBandEdges:
    def test_glued(self, glued_spec):
        assert band_edges(glued_spec) == (pytest.approx(ALPHA), pytest.approx(BETA))

    def test_halfline(self):
        assert band_edges(GeometrySpec("halfline", 10)) == (0.0, 4.0)

    def test_fiber_measure(self):
        fiber = FiniteGraphSpec.single(2.0)
        twisted = GeometrySpec("half_ray_cusp", 10, fiber)
        cartesian = GeometrySpec("half_ray_cusp", 10, fiber, "cartesian")
        assert band_edges(twisted)[0] == pytest.approx(ALPHA / 2)
        assert band_edges(cartesian)[0] == pytest.approx(ALPHA)


class TestBuildModel:
    def test_halfline_matches_shift_model(self):
        model = build_model(GeometrySpec("halfline", 20))
        laplacian = assemble_halfline_laplacian(20).toarray()
        assert np.abs(model.H.toarray() - laplacian).max() < 1e-14
        A = assemble_A_halfline(20).toarray()
        assert np.abs(model.A.toarray() - A).max() < 1e-14

    @pytest.mark.parametrize(
        "geometry",
        [
            GeometrySpec.default_glued(10),
            GeometrySpec("half_ray_cusp", 8, FiniteGraphSpec.cycle(3)),
            GeometrySpec("half_ray_funnel", 8, FiniteGraphSpec.cycle(3)),
            GeometrySpec("z_model", 6),
        ],
    )
    def test_spectrum_matches_vertex_assembly(self, geometry):
        model = build_model(geometry)
        assert model.dropped == 0
        vertex = _vertex_spectrum(geometry)
        unit = _model_spectrum(model)
        assert unit.size == vertex.size
        assert np.abs(unit - vertex).max() < 1e-8 * max(1.0, np.abs(vertex).max())

    def test_perturbed_spectrum(self, decaying_perturbation):
        geometry = GeometrySpec.default_glued(10)
        model = build_model(geometry, decaying_perturbation)
        vertex = _vertex_spectrum(geometry, decaying_perturbation)
        assert np.abs(_model_spectrum(model) - vertex).max() < 1e-8

    def test_hermitian(self, glued_factory):
        model = glued_factory(60)
        assert model.H.is_hermitian()
        assert model.A.is_hermitian()

    def test_high_energy_cutoff(self, triangle):
        model = build_model(GeometrySpec("half_ray_cusp", 30, triangle))
        # 3 e^n stays below the cutoff for n <= 8
        assert model.dropped == 2 * 21
        assert model.dim == 30 + 2 * 9
        assert model.high_energy.sum() == 18

    def test_conjugate_vanishes_on_high_energy(self, cusp_triangle_spec):
        model = build_model(cusp_triangle_spec)
        A = model.A.tocsr()
        assert abs(A[model.high_energy]).max() == 0
        assert abs(A[model.low_energy_mask()]).max() > 0


class TestSpectralModel:
    def test_crop(self, glued_factory):
        large = glued_factory(40)
        small = glued_factory(25)
        cropped = large.crop(25)
        assert cropped.dim == small.dim
        assert cropped.ray_length == 25
        # the finite section keeps the outgoing edge in the last degree
        inner = np.ix_(small.depth < 24, small.depth < 24)
        difference = cropped.H.toarray()[inner] - small.H.toarray()[inner]
        assert np.abs(difference).max() < 1e-14

    def test_restrict(self, cusp_triangle_spec):
        model = build_model(cusp_triangle_spec)
        low = model.restrict(model.low_energy_mask())
        assert low.dim == 30
        assert not low.high_energy.any()

    def test_lambda_weight(self, glued_factory):
        model = glued_factory(20)
        weight = model.lambda_weight(1.0)
        assert weight[model.depth < 0] == pytest.approx(1.0)
        level = np.flatnonzero(model.depth == 3)[0]
        assert weight[level] == pytest.approx(1 / np.sqrt(1 + 3.5**2))

    def test_junction_vector(self, glued_factory):
        model = glued_factory(20)
        vector = model.junction_vector()
        assert vector.sum() == 1.0
        assert model.depth[np.argmax(vector)] == -1

    def test_junction_vector_without_compact(self, funnel_triangle_spec):
        model = build_model(funnel_triangle_spec)
        index = np.argmax(model.junction_vector())
        assert model.depth[index] == 0
        assert model.modes[index] == 0

    def test_factory(self, glued_factory):
        model = glued_factory(30)
        assert model.ray_length == 30
        assert model.geometry.ray_length == 30
        assert isinstance(glued_factory, ModelFactory)
