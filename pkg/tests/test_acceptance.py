# Future
from __future__ import division, print_function, unicode_literals

# Third Party
import numpy as np
import pytest

# CuspFunnel
from cuspfunnel.constants import ALPHA, BETA
from cuspfunnel.graphs import GeometrySpec
from cuspfunnel.lap import LapScanConfig, lap_scan
from cuspfunnel.models import ModelFactory
from cuspfunnel.mourre import (
    halfline_commutator_identity,
    mourre_scan,
    side_commutator_check,
)
from cuspfunnel.spectral import he_spectrum
from cuspfunnel.workbench import Workbench

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("perturbed", [False, True])
def test_cusp_band_edges(triangle, decaying_perturbation, perturbed):
    geometry = GeometrySpec("half_ray_cusp", 2000, triangle)
    workbench = Workbench(geometry, decaying_perturbation if perturbed else None)
    report = workbench.spectrum(block="low_energy")
    band = report.results["band"]
    assert band["minimum"] == pytest.approx(ALPHA, abs=5e-3)
    assert band["maximum"] == pytest.approx(BETA, abs=5e-3)
    assert band["max_gap"] < 1e-2
    if not perturbed:
        assert min(abs(value) for value in band["isolated"]) < 1e-8


def test_halfline_identity_at_depth():
    report = halfline_commutator_identity(2000)
    assert report.residual_support == [[0, 1], [0, 1]]
    assert report.max_interior_deviation == 0.0


def test_cusp_structure(triangle):
    report = side_commutator_check(100, "cusp", triangle)
    assert report.details["he_block_max"] == 0.0
    first, second = he_spectrum(triangle, 150), he_spectrum(triangle, 300)
    assert first.size == 5
    assert np.allclose(first, second, rtol=1e-4, atol=0)
    # every level takes part: the top of the 150-level chains sits near 3 e^149
    whole = he_spectrum(triangle, 150, count=300)
    assert whole.size == 300
    assert whole[-1] > 1e60
    assert not np.allclose(he_spectrum(triangle, 3), first, rtol=1e-4, atol=0)


@pytest.mark.parametrize("perturbed", [False, True])
def test_mourre_counts_settle(decaying_perturbation, perturbed):
    geometry = GeometrySpec.default_glued(200)
    factory = ModelFactory(geometry, decaying_perturbation if perturbed else None)
    result = mourre_scan(factory, [1.0, 3.0], truncations=(100, 150, 200))
    assert result.c_theory == pytest.approx(1.21217, abs=1e-5)
    assert result.stabilized
    assert len(set(result.negative_counts.values())) == 1


def test_propagation_ratio():
    report = Workbench(GeometrySpec.default_glued(400)).evolve([1.0, 3.0])
    assert report.verdicts["ratio_stable"]["passed"]
    assert report.verdicts["unitary"]["passed"]


def test_lap_plateau_and_threshold_growth():
    factory = ModelFactory(GeometrySpec.default_glued(100))
    config = LapScanConfig([2.0, ALPHA], [1e-1, 1e-2, 1e-3, 1e-4])
    result = lap_scan(factory, config)
    assert not result.unresolved
    assert result.at_threshold == [ALPHA]
    assert result.verdicts[2.0] == "plateau"
    assert result.verdicts[ALPHA] == "growth"
    at_alpha = result.norms(ALPHA)
    assert all(b > a for a, b in zip(at_alpha, at_alpha[1:]))
