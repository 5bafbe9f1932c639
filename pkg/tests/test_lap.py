# Future
from __future__ import division, print_function, unicode_literals

# Third Party
import numpy as np
import pytest

# CuspFunnel
from cuspfunnel.constants import ALPHA
from cuspfunnel.exceptions import ConfigError
from cuspfunnel.graphs import GeometrySpec
from cuspfunnel.lap import (
    DEFAULT_TRUNCATIONS,
    LapScanConfig,
    classify_plateau,
    lap_scan,
    near_point_spectrum,
    persistent_eigenvalues,
    propagation_integral,
    propagation_study,
    threshold_study,
)
from cuspfunnel.models import ModelFactory
from cuspfunnel.spectral import weighted_resolvent_norm

SMALL = [20, 40, 80]


class TestLapScanConfig:
    def test_defaults(self):
        config = LapScanConfig([2.0], [0.1])
        assert config.truncations == list(DEFAULT_TRUNCATIONS)
        assert config.truncations[0] == 100
        assert config.truncations[-1] == 102400
        assert config.s == 1.0
        assert config.threshold_s == 0.75

    @pytest.mark.parametrize(
        "kwargs, field",
        [
            ({"lambdas": []}, "lambdas"),
            ({"rhos": [0.1, 0.2]}, "rhos"),
            ({"rhos": [0.1, -0.1]}, "rhos"),
            ({"s": 0.5}, "s"),
            ({"threshold_s": 0.5}, "threshold_s"),
            ({"truncations": [40, 20, 80]}, "truncations"),
            ({"truncations": [20, 40]}, "truncations"),
            ({"convergence_tol": 0.0}, "convergence_tol"),
        ],
    )
    def test_rejects(self, kwargs, field):
        params = {"lambdas": [2.0], "rhos": [0.1], "truncations": SMALL}
        params.update(kwargs)
        with pytest.raises(ConfigError) as exc:
            LapScanConfig(**params)
        assert exc.value.field == field

    def test_from_dict(self):
        config = LapScanConfig.from_dict(
            {"lambdas": [1, 2], "rhos": [0.5, 0.25], "truncations": SMALL}
        )
        assert config.lambdas == [1.0, 2.0]
        assert config.agreement_pairs == 2


class TestClassifyPlateau:
    def test_plateau(self):
        assert classify_plateau([1.0, 1.05, 1.02, 1.0]) == "plateau"

    def test_growth(self):
        assert classify_plateau([1.0, 2.0, 4.0, 8.0]) == "growth"

    def test_unresolved(self):
        assert classify_plateau([1.0, None, 1.0]) == "unresolved"
        assert classify_plateau([1.0, 1.0]) == "unresolved"


class TestLapScan:
    def test_below_the_spectrum(self, glued_factory):
        config = LapScanConfig([-1.0], [0.5, 0.25, 0.125], truncations=SMALL)
        result = lap_scan(glued_factory, config)
        assert not result.unresolved
        assert all(value <= 1.0 for value in result.norms(-1.0))
        assert result.verdicts[-1.0] == "plateau"
        assert result.cells[0]["N1_used"] in SMALL

    def test_threshold_warning(self, glued_factory):
        config = LapScanConfig([ALPHA, 2.0], [0.5, 0.25, 0.125], truncations=SMALL)
        result = lap_scan(glued_factory, config, threads=2)
        assert result.at_threshold == [ALPHA]
        assert [cell["lambda"] for cell in result.cells[:3]] == [ALPHA] * 3
        assert [cell["s"] for cell in result.cells] == [0.75] * 3 + [1.0] * 3

    def test_serializes(self, glued_factory):
        config = LapScanConfig([-1.0], [0.5, 0.25, 0.125], truncations=SMALL)
        data = lap_scan(glued_factory, config).to_dict()
        assert data["verdicts"] == {"-1.0": "plateau"}
        assert len(data["cells"]) == 3

    def test_monotone_in_s(self, glued_factory):
        model = glued_factory(40)
        z = 2.0 + 0.1j
        loose = weighted_resolvent_norm(model.H, model.lambda_weight(0.6), z)
        tight = weighted_resolvent_norm(model.H, model.lambda_weight(1.0), z)
        assert tight <= loose * (1 + 1e-12)


class TestPointSpectrum:
    def test_persistent(self):
        first = [0.0, 1.0, 2.5]
        second = [0.0, 1.2, 2.5 + 1e-12, 3.0]
        kept = persistent_eigenvalues(first, second, 1e-9)
        assert kept.tolist() == [0.0, 2.5 + 1e-12]
        assert persistent_eigenvalues([], second).size == 0

    def test_zero_mode(self, glued_factory):
        hits = near_point_spectrum(glued_factory, [0.0, 2.0], SMALL[:2], 0.05, 0.01)
        assert [hit["lambda"] for hit in hits] == [0.0]
        assert abs(hits[0]["eigenvalue"]) < 1e-8


class TestPropagation:
    def test_unitary_without_weight(self, glued_factory):
        model = glued_factory(20)
        f = model.junction_vector()
        value = propagation_integral(model.H, None, [-1.0, 100.0], f, 1.0, 0.1)
        assert value == pytest.approx(2.0, rel=1e-10)

    def test_empty_window(self, glued_factory):
        model = glued_factory(20)
        f = model.junction_vector()
        assert propagation_integral(model.H, None, [-3.0, -2.0], f, 1.0, 0.1) == 0.0

    def test_zero_vector(self, glued_factory):
        model = glued_factory(20)
        zero = np.zeros(model.dim)
        assert propagation_integral(model.H, None, [1.0, 3.0], zero, 1.0, 0.1) == 0.0

    def test_study(self, glued_factory):
        study = propagation_study(
            glued_factory, [1.0, 3.0], T=5.0, truncations=(20, 40)
        )
        assert len(study.ratios) == 2
        assert all(0 < ratio <= 10.0 for ratio in study.ratios)
        assert study.norms_squared == [1.0, 1.0]


class TestThresholdStudy:
    def test_free_interior(self, glued_factory):
        study = threshold_study(glued_factory, [1.0, 3.0], truncations=SMALL)
        assert study.stabilized
        assert len(study.rows()) == 3
        assert study.rows()[0]["N1"] == 20

    def test_needs_two(self, glued_factory):
        with pytest.raises(ConfigError):
            threshold_study(glued_factory, [1.0, 3.0], truncations=[20])

    def test_halfline_counts(self):
        # eigenvalues 2 - 2cos(pi k / N): halving N keeps the even k
        factory = ModelFactory(GeometrySpec("halfline", 80))
        study = threshold_study(factory, [1.0, 3.0], truncations=SMALL)
        assert study.raw_interior_counts == [7, 13, 27]
        assert study.interior_counts == [7, 7, 13]
        assert study.near_alpha_counts == [2, 3, 6]
        assert study.near_beta_counts == [1, 2, 5]
        assert not study.stabilized
        assert study.rows()[1]["raw_interior_count"] == 13
