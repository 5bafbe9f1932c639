# Future
from __future__ import division, print_function, unicode_literals

# Third Party
import numpy as np
import pytest
from scipy import sparse

# CuspFunnel
from cuspfunnel.conjugates import assemble_A_funnel, assemble_A_halfline
from cuspfunnel.constants import ALPHA, BETA
from cuspfunnel.exceptions import ConfigError
from cuspfunnel.graphs import FiniteGraphSpec, GeometrySpec
from cuspfunnel.models import ModelFactory
from cuspfunnel.mourre import (
    commutator,
    cusp_fiber_commutator_max,
    double_commutator,
    double_commutator_study,
    fiber_operator,
    funnel_fiber_commutator,
    halfline_commutator_identity,
    localized_commutator,
    mourre_constant,
    mourre_scan,
    rank_one_operator,
    side_commutator_check,
    w_band,
    w_function,
    weighted_commutator_decay,
)
from cuspfunnel.operators import OperatorMatrix, assemble_halfline_laplacian
from cuspfunnel.perturbations import Alternating, PerturbationSpec, PowerDecay
from cuspfunnel.spectral import SpectralWindow


class TestHalflineIdentity:
    @pytest.mark.parametrize("N1", [6, 50, 500])
    def test_residual_lives_at_the_origin(self, N1):
        report = halfline_commutator_identity(N1)
        assert report.residual_support == [[0, 1], [0, 1]]
        assert report.max_interior_deviation == 0.0
        assert report.hermiticity_defect < 1e-11

    def test_too_short(self):
        with pytest.raises(ConfigError):
            halfline_commutator_identity(5)

    def test_serialized_without_matrices(self):
        data = halfline_commutator_identity(20).to_dict()
        assert "commutator" not in data
        assert "residual" not in data
        assert data["name"] == "halfline"


class TestW:
    def test_roots(self):
        assert w_function(ALPHA) == pytest.approx(0.0, abs=1e-15)
        assert w_function(BETA) == pytest.approx(0.0, abs=1e-15)

    def test_maximum(self):
        assert w_function((ALPHA + BETA) / 2) == pytest.approx(2.0)
        assert w_function((ALPHA + BETA) / 4, m2=2.0) == pytest.approx(1.0)

    def test_value_at_one(self):
        assert w_function(1.0) == pytest.approx(1.21217, abs=1e-5)

    def test_halfline(self):
        x = np.linspace(0, 4, 9)
        assert np.allclose(w_function(x, side="halfline"), 0.5 * x * (4 - x))

    def test_mourre_constant(self):
        window = SpectralWindow(1.0, 3.0)
        expected = w_band(1.0, ALPHA, BETA)
        assert mourre_constant(window, ALPHA, BETA) == pytest.approx(expected)


class TestSideIdentities:
    def test_funnel_fiber_commutator(self, triangle):
        N1 = 30
        X = fiber_operator(N1, triangle, "funnel")
        A = assemble_A_funnel(N1, triangle).A
        computed = commutator(X, A).toarray()
        closed = funnel_fiber_commutator(N1, triangle).toarray()
        assert np.abs(computed - closed).max() < 1e-12

    def test_cusp_fiber_commutator(self, triangle):
        assert cusp_fiber_commutator_max(30, triangle) == 0.0

    def test_cusp_high_energy_block(self, triangle):
        report = side_commutator_check(100, "cusp", triangle)
        assert report.details["he_block_max"] == 0.0
        assert report.residual_support
        assert report.residual_support[0][1] < 5

    def test_funnel_single_vertex_fiber(self, single):
        report = side_commutator_check(40, "funnel", single)
        assert report.residual_support[0][1] <= 2
        assert report.residual_tail_profile[10] < 1e-9

    def test_funnel_triangle_decay(self, triangle):
        report = side_commutator_check(60, "funnel", triangle)
        assert report.residual_tail_profile[0] > 1e-3
        assert report.residual_tail_profile[30] < 1e-8
        assert report.details["compact"]
        assert 0 < report.details["decay_constant"] < np.inf


class TestDoubleCommutator:
    def test_constant_hamiltonian(self):
        H = OperatorMatrix(2.0 * np.eye(10), np.ones(10), True)
        A = assemble_A_halfline(10)
        report = double_commutator(H, A)
        assert report.details["norm"] == 0.0

    def test_halfline_bounded(self):
        small = double_commutator(
            assemble_halfline_laplacian(100), assemble_A_halfline(100)
        )
        assert small.hermiticity_defect < 1e-11

    def test_study(self, glued_factory):
        study = double_commutator_study(glued_factory, (50, 100))
        assert study.bounded
        assert study.norms[0] > 0

    def test_cusp_high_energy(self, cusp_triangle_spec):
        study = double_commutator_study(ModelFactory(cusp_triangle_spec), (10, 20))
        assert study.he_block_max == 0.0


class TestLocalizedCommutator:
    def test_band_function_away_from_junction(self):
        model = ModelFactory(GeometrySpec.default_glued(40))(33)
        section = model.crop(30)
        C = localized_commutator(model, 30).tocsr()
        H = section.H.tocsr()
        lower, upper = section.band
        eye = sparse.identity(H.shape[0], format="csr")
        w = 2.0 / (upper - lower) * ((H - lower * eye) @ (upper * eye - H))
        difference = abs(C - w).toarray()
        far = section.depth >= 3
        assert difference[far].max() < 1e-10
        assert difference[:, far].max() < 1e-10
        assert difference.max() > 1e-3

    def test_cut_leakage_restored(self):
        model = ModelFactory(GeometrySpec.default_glued(40))(33)
        C = localized_commutator(model, 30)
        plain = commutator(model.H, model.A).crop(model.depth < 30)
        last = np.flatnonzero(C.depth == 29)
        change = (C.tocsr() - plain.tocsr()).toarray()
        assert np.allclose(np.diag(change)[last], 0.5)
        assert np.abs(np.delete(change, last, axis=0)).max() == 0.0


class TestMourreScan:
    def test_constant(self, glued_factory):
        result = mourre_scan(glued_factory, [1.0, 3.0], truncations=(30, 40))
        assert result.c_theory == pytest.approx(1.21217, abs=1e-5)
        assert result.c == pytest.approx(0.99 * result.c_theory)
        assert not result.out_of_band
        assert all(count >= 0 for count in result.negative_counts.values())

    def test_monotone_in_c(self, glued_factory):
        strict = mourre_scan(glued_factory, [1.0, 3.0], c=1.2, truncations=(30, 40))
        loose = mourre_scan(glued_factory, [1.0, 3.0], c=0.6, truncations=(30, 40))
        for N1, count in loose.negative_counts.items():
            assert count <= strict.negative_counts[N1]

    def test_out_of_band(self, glued_factory):
        result = mourre_scan(glued_factory, [5.0, 6.0], truncations=(30, 40))
        assert result.out_of_band

    def test_threads(self, glued_factory):
        serial = mourre_scan(glued_factory, [1.0, 3.0], truncations=(30, 40))
        parallel = mourre_scan(
            glued_factory, [1.0, 3.0], truncations=(30, 40), threads=2
        )
        assert serial.negative_counts == parallel.negative_counts


def test_rank_one_operator():
    weights = np.array([1.0, 2.0, 4.0])
    phi = np.array([1.0, 0.0, 0.0])
    psi = np.array([0.0, 1.0, 0.0])
    op = rank_one_operator(phi, psi, weights)
    f = np.array([0.0, 3.0, 0.0])
    assert np.allclose(op @ f, [6.0, 0.0, 0.0])


class TestCommutatorDecay:
    geometry = GeometrySpec("half_ray_funnel", 10, FiniteGraphSpec.single())

    def _study(self, perturbation, eps_exponent=0.5):
        return weighted_commutator_decay(
            ModelFactory(self.geometry),
            ModelFactory(self.geometry, perturbation),
            eps_exponent,
            (50, 100),
            samples=4,
        )

    def test_zero_perturbation(self):
        study = self._study(PerturbationSpec())
        assert study.norms == [0.0, 0.0]
        assert study.bounded

    def test_decaying_potential(self):
        study = self._study(PerturbationSpec(V=PowerDecay(1.0, 1.0)))
        assert study.bounded
        assert all(s <= n * (1 + 1e-12) for s, n in zip(study.sampled, study.norms))

    def test_alternating_measure(self):
        study = self._study(PerturbationSpec(mu=Alternating(0.5, 0.1)))
        assert not study.bounded
        assert study.norms[1] > study.norms[0]
