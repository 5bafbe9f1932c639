"""
The public interface for running experiments
"""

# Standard Library
import logging

# Third Party
import numpy as np

# Local
from .conjugates import assemble_A_for_spec
from .constants import (
    DENSE_CAP,
    H0_RATIO,
    HERMITIAN_TOL,
    MAX_RAY_LENGTH,
    RESIDUAL_TOL,
    TAU_RELATIVE,
)
from .exceptions import ConfigError, DenseCapExceededError
from .graphs import GeometrySpec, build_from_spec
from .lap import LapScanConfig, lap_scan, propagation_study, threshold_study
from .models import ModelFactory, band_edges
from .mourre import (
    double_commutator_study,
    halfline_commutator_identity,
    mourre_scan,
    side_commutator_check,
    weighted_commutator_decay,
)
from .operators import assemble_hamiltonian, direct_gauge_difference, gauge_difference
from .perturbations import (
    PerturbationSpec,
    check_H0,
    check_H123,
    degree_deviation,
    is_radial,
)
from .reports import ScanReport
from .spectral import (
    SpectralWindow,
    band_statistics,
    eigendecompose,
    evolve,
    he_spectrum,
)
from .toolbox import thread_count

logger = logging.getLogger("cuspfunnel")


class Workbench(object):
    """
    One geometry, an optional perturbation, and a method per command
    """

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        geometry,
        perturbation=None,
        seed=0,
        max_dim=DENSE_CAP,
        threads=None,
        loglevel=None,
    ):
        self.geometry = geometry
        self.perturbation = perturbation or PerturbationSpec()
        self.seed = seed
        self.max_dim = max_dim
        self.threads = threads or thread_count()
        self.config_echo = {}

        if loglevel:  # pragma: no cover
            logging.basicConfig(
                level=loglevel,
                format="%(asctime)s %(levelname)-8s %(name)-25s %(message)s",
            )
        else:
            logger.addHandler(logging.NullHandler())

        pert = None if self.perturbation.is_zero else self.perturbation
        self.factory = ModelFactory(geometry, pert)
        self.free_factory = ModelFactory(geometry)

    def __repr__(self):
        return f"<Workbench: {self}>"  # pragma: no cover

    def __str__(self):
        return f"{self.geometry.kind} workbench, N1={self.geometry.ray_length}"

    @classmethod
    def from_config(cls, config, loglevel=None):
        """Build from a validated config dict"""
        return cls(
            GeometrySpec.from_dict(config["geometry"]),
            PerturbationSpec.from_dict(config.get("perturbation")),
            seed=config.get("seed", 0),
            max_dim=config.get("max_dim", DENSE_CAP),
            loglevel=loglevel,
        )

    def run(self, command, params=None):
        """Dispatch one command by its config name"""
        params = dict(params or {})
        method = getattr(self, command.replace("-", "_"), None)
        if method is None or command.startswith("_"):
            raise ConfigError(f"unknown command {command!r}", field="command")
        self.config_echo = {
            "geometry": self.geometry.to_dict(),
            "perturbation": self.perturbation.to_dict(),
            "command": command,
            "command_params": params,
            "seed": self.seed,
            "max_dim": self.max_dim,
            "threads": self.threads,
        }
        logger.info("Running %s on %s", command, self)
        return method(**params)

    def _report(self, command):
        return ScanReport(command, self.config_echo)

    def _check_dense(self, ray_length):
        dim = self.factory(ray_length).dim
        if dim > self.max_dim:
            raise DenseCapExceededError(
                f"dimension {dim} at N1={ray_length} exceeds the dense cap "
                f"{self.max_dim}",
                field="max_dim",
                hint="lower the truncations or raise --max-dim",
            )

    def build(self, path="vertex"):
        """Assemble the geometry and check the basic invariants"""
        report = self._report("build")
        if path == "model":
            model = self.factory(self.geometry.ray_length)
            defect = model.H.hermiticity_defect()
            report.add_result(
                "model",
                {
                    "dim": model.dim,
                    "dropped_levels": model.dropped,
                    "band": list(model.band),
                    "hermiticity_defect": defect,
                    "conjugate_hermiticity_defect": model.A.hermiticity_defect(),
                },
            )
            report.add_verdict(
                "hermitian", defect <= HERMITIAN_TOL, HERMITIAN_TOL, defect
            )
            return report

        capped = self.geometry.kind != "halfline"
        if capped and self.geometry.ray_length > MAX_RAY_LENGTH:
            raise ConfigError(
                f"the vertex path stops at N1={MAX_RAY_LENGTH}",
                field="ray_length",
                hint='use "path": "model"',
            )
        graph = build_from_spec(self.geometry)
        pert = None if self.perturbation.is_zero else self.perturbation
        H = assemble_hamiltonian(graph, pert)
        A = assemble_A_for_spec(self.geometry).A
        defect = H.hermiticity_defect()
        report.add_result(
            "graph",
            {
                "vertices": graph.dim,
                "edges": graph.edge_count,
                "total_measure": graph.total_measure,
                "blocks": {k: [v.start, v.stop] for k, v in graph.blocks.items()},
                "hermiticity_defect": defect,
                "conjugate_hermiticity_defect": A.hermiticity_defect(),
            },
        )
        report.add_verdict("symmetric", graph.is_symmetric(), 0.0)
        report.add_verdict("hermitian", defect <= HERMITIAN_TOL, HERMITIAN_TOL, defect)
        if pert is not None:
            closed = gauge_difference(graph, pert)
            direct = direct_gauge_difference(graph, pert)
            gap = abs(closed.tocsr() - direct.tocsr()).max()
            scale = max(abs(direct.tocsr()).max(), 1.0)
            report.add_verdict(
                "gauge_difference", gap <= RESIDUAL_TOL * scale, RESIDUAL_TOL, float(
                    gap
                )
            )
        return report

    # pylint: disable=too-many-locals
    def spectrum(
        self,
        block="full",
        band_tol=5.0e-3,
        gap_tol=1.0e-2,
        he_truncations=None,
        he_count=5,
    ):
        """Truncated spectrum, band fill statistics and the high energy cusp spectrum"""
        report = self._report("spectrum")
        N1 = self.geometry.ray_length
        model = self.factory(N1)
        if block == "low_energy":
            model = model.restrict(model.low_energy_mask())
        if model.dim > self.max_dim:
            raise DenseCapExceededError(
                f"dimension {model.dim} exceeds the dense cap {self.max_dim}",
                field="max_dim",
                hint='restrict to "block": "low_energy" or lower ray_length',
            )
        values = eigendecompose(model.H, self.max_dim).eigenvalues
        lower, upper = band_edges(self.geometry)
        stats = band_statistics(values, lower, upper, band_tol)
        report.add_result("band", stats)
        report.add_series("eigenvalues.csv", ["index", "eigenvalue"], enumerate(values))
        report.add_series(
            "spectrum_bands.csv",
            ["lower", "upper", "count", "minimum", "maximum", "max_gap", "hausdorff"],
            [stats.to_dict()],
        )
        for name, edge, value in (
            ("band_lower", lower, stats.minimum),
            ("band_upper", upper, stats.maximum),
        ):
            report.add_verdict(name, abs(value - edge) <= band_tol, band_tol, value)
        report.add_verdict("band_gap", stats.max_gap < gap_tol, gap_tol, stats.max_gap)

        if he_truncations and "cusp" in self.geometry.sides:
            fiber = self.geometry.fiber
            found = [he_spectrum(fiber, n, he_count) for n in he_truncations]
            report.add_result(
                "high_energy", {str(n): v for n, v in zip(he_truncations, found)}
            )
            first, last = found[-2], found[-1]
            stable = first.size == last.size and np.allclose(
                first, last, rtol=1.0e-4, atol=0
            )
            report.add_verdict("high_energy_stable", stable, 1.0e-4)
        return report

    def commutator_check(
        self, identity="halfline", tol=1.0e-12, side_tol=1.0e-9, truncations=None
    ):
        """One of the commutator identities, or the double commutator study"""
        report = self._report("commutator-check")
        N1 = self.geometry.ray_length
        if identity == "halfline":
            result = halfline_commutator_identity(N1)
            relative = result.details["relative_deviation"]
            report.add_result("identity", result)
            report.add_result("max_interior_deviation", relative)
            report.add_verdict("interior_identity", relative < tol, tol, relative)
            return report
        if identity in ("funnel", "cusp"):
            result = side_commutator_check(N1, identity, self.geometry.fiber)
            report.add_result("identity", result)
            scale = result.details["norm"]
            if identity == "cusp":
                he_max = result.details["he_block_max"]
                report.add_verdict("he_block_zero", he_max == 0.0, 0.0, he_max)
            else:
                report.add_verdict(
                    "residual_compact", result.details["compact"], side_tol
                )
            deviation = result.max_interior_deviation
            report.add_verdict(
                "interior_identity", deviation <= side_tol * scale, side_tol, deviation
            )
            return report
        if identity == "double":
            study = double_commutator_study(self.factory, truncations or [100, 200])
            report.add_result("double_commutator", study)
            report.add_verdict("bounded", study.bounded, 0.1, study.variation)
            return report
        raise ConfigError(f"unknown identity {identity!r}", field="identity")

    def mourre_scan(
        self, window, c=None, truncations=(100, 150, 200), tau_rel=TAU_RELATIVE
    ):
        report = self._report("mourre-scan")
        self._check_dense(max(truncations))
        result = mourre_scan(
            self.factory,
            SpectralWindow.from_value(window),
            c,
            list(truncations),
            tau_rel,
            self.threads,
        )
        report.add_result("mourre", result)
        report.add_series(
            "mourre_counts.csv",
            ["N1", "window_rank", "negative_count", "lowest", "tau"],
            [
                [N1, result.window_ranks[N1], count, result.lowest[N1], result.tau[N1]]
                for N1, count in result.negative_counts.items()
            ],
        )
        report.add_verdict("in_band", not result.out_of_band, 0.0, result.window)
        report.add_verdict(
            "counts_stable", result.stabilized, tau_rel, result.negative_counts
        )
        return report

    def lap_scan(self, lambdas, rhos, expected=None, **options):
        report = self._report("lap-scan")
        config = LapScanConfig(lambdas, rhos, **options)
        result = lap_scan(self.factory, config, self.threads)
        report.add_result("lap", result)
        report.add_series(
            "lap_norms.csv",
            ["lambda", "rho", "s", "N1_used", "norm", "verdict"],
            [
                dict(cell, verdict=result.verdicts[cell["lambda"]])
                for cell in result.cells
            ],
        )
        unresolved = len(result.unresolved)
        report.add_verdict(
            "resolved", unresolved == 0, config.convergence_tol, unresolved
        )
        for key, verdict in (expected or {}).items():
            lam = float(key)
            if lam not in result.verdicts:
                raise ConfigError(
                    f"expected verdict for {lam}, not on the grid", field="expected"
                )
            found = result.verdicts[lam]
            report.add_verdict(f"lambda_{key}", found == verdict, 0.2, found)
        return report

    # pylint: disable=too-many-arguments
    def evolve(
        self, window, s=1.0, horizon=50.0, dt=0.05, truncations=(200, 400), steps=11
    ):
        """Propagation study plus a unitarity check of e^{-itH}"""
        report = self._report("evolve")
        self._check_dense(max(truncations))
        study = propagation_study(
            self.factory, window, s, horizon, dt, list(truncations)
        )
        report.add_result("propagation", study)
        report.add_series(
            "propagation.csv",
            ["N1", "integral", "norm_squared", "ratio"],
            zip(study.truncations, study.integrals, study.norms_squared, study.ratios),
        )
        report.add_verdict("ratio_stable", study.stable, 0.15, study.variation)

        model = self.factory(max(truncations))
        f = model.junction_vector()
        times = np.linspace(0.0, horizon, steps)
        states = evolve(model.H, f, times)
        norms = np.sqrt((np.abs(states) ** 2 * model.H.weights[None, :]).sum(axis=1))
        drift = float(np.abs(norms - np.sqrt(np.sum(model.H.weights * f**2))).max())
        report.add_verdict("unitary", drift <= 1.0e-10, 1.0e-10, drift)
        return report

    def threshold_study(self, window, band_margin=0.05, truncations=(100, 200, 400)):
        report = self._report("threshold-study")
        self._check_dense(max(truncations))
        study = threshold_study(self.factory, window, band_margin, list(truncations))
        report.add_result("thresholds", study)
        report.add_series(
            "counts.csv",
            [
                "N1",
                "raw_interior_count",
                "interior_count",
                "near_alpha_count",
                "near_beta_count",
            ],
            study.rows(),
        )
        report.add_verdict(
            "interior_stable", study.stabilized, band_margin, study.interior_counts
        )
        return report

    def conditions_check(
        self, eps_exponent=None, h0_ratio=H0_RATIO, commutator_truncations=None
    ):
        """Decay conditions on the perturbation, radiality and commutator decay"""
        report = self._report("conditions-check")
        pert = self.perturbation
        eps_exponent = eps_exponent or pert.declared_eps_exponent
        rows = []
        checks = (
            check_H0(pert, self.geometry, h0_ratio),
            check_H123(pert, self.geometry, eps_exponent),
        )
        for check in checks:
            report.add_result(
                check.name, {"sides": check.sides, "tolerance": check.tolerance}
            )
            report.add_verdict(check.name, check.passed, check.tolerance)
            for name, profile in check.profiles.items():
                rows.extend(
                    [check.name, name, level, value]
                    for level, value in enumerate(profile)
                )
        if self.geometry.ray_length <= MAX_RAY_LENGTH:
            for side, profile in degree_deviation(pert, self.geometry).items():
                rows.extend(
                    ["degree", side, level, value]
                    for level, value in enumerate(profile)
                )
        report.add_series("profiles.csv", ["check", "profile", "level", "value"], rows)

        if pert.radial_on_cusp and "cusp" in self.geometry.sides:
            radial = is_radial(pert, self.geometry, sides=["cusp"])
            report.add_verdict("radial_on_cusp", radial, 0.0)
        if commutator_truncations:
            self._check_dense(max(commutator_truncations))
            study = weighted_commutator_decay(
                self.free_factory,
                self.factory,
                eps_exponent,
                commutator_truncations,
                seed=self.seed,
            )
            report.add_result("commutator_decay", study)
            report.add_verdict("commutator_decay", study.bounded, 0.1, study.variation)
        return report

