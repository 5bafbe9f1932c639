"""
Limiting absorption scans, propagation integrals and threshold counts on finite
sections
"""

# Standard Library
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

# Third Party
import numpy as np
from scipy.integrate import trapezoid

# Local
from .base import BaseResult
from .constants import (
    LAP_CONVERGENCE_TOL,
    PERSIST_TOL,
    PLATEAU_TOL,
    PROPAGATION_VARIATION,
)
from .exceptions import ConfigError
from .models import band_edges
from .spectral import (
    ResolventSolver,
    SpectralWindow,
    eigendecompose,
    spectral_norm,
    weighted_resolvent_norm,
)
from .toolbox import relative_variation

logger = logging.getLogger("cuspfunnel")

DEFAULT_TRUNCATIONS = tuple(100 * 2**k for k in range(11))

# rows of e^{-itH} f evaluated at once in the propagation integral
TIME_CHUNK = 256


@dataclass
class LapScanConfig:
    """Grid and convergence protocol for a limiting absorption scan

    A cell (lambda, rho) is resolved once `agreement_pairs` consecutive pairs
    of truncations agree within `convergence_tol`. Grid points within
    `threshold_margin` of a threshold are weighted with `threshold_s`: at s = 1
    the weighted resolvent stays bounded at a threshold without a resonance.
    """

    lambdas: list
    rhos: list
    s: float = 1.0
    threshold_s: float = 0.75
    truncations: list = field(default_factory=lambda: list(DEFAULT_TRUNCATIONS))
    convergence_tol: float = LAP_CONVERGENCE_TOL
    agreement_pairs: int = 2
    threshold_margin: float = 1.0e-3
    point_margin: float = None

    def __post_init__(self):
        self.lambdas = [float(x) for x in self.lambdas]
        self.rhos = [float(x) for x in self.rhos]
        self.truncations = [int(n) for n in self.truncations]
        if not self.lambdas:
            raise ConfigError("the lambda grid is empty", field="lambdas")
        if not self.rhos or min(self.rhos) <= 0:
            raise ConfigError("rhos must be positive", field="rhos")
        if any(b >= a for a, b in zip(self.rhos, self.rhos[1:])):
            raise ConfigError("rhos must be strictly decreasing", field="rhos")
        if not self.s > 0.5:
            raise ConfigError(f"s = {self.s} must exceed 1/2", field="s")
        if not self.threshold_s > 0.5:
            raise ConfigError(
                f"threshold_s = {self.threshold_s} must exceed 1/2", field="threshold_s"
            )
        if any(b <= a for a, b in zip(self.truncations, self.truncations[1:])):
            raise ConfigError("truncations must be increasing", field="truncations")
        if len(self.truncations) < self.agreement_pairs + 1:
            raise ConfigError(
                f"need at least {self.agreement_pairs + 1} truncations",
                field="truncations",
            )
        if self.convergence_tol <= 0:
            raise ConfigError(
                "convergence_tol must be positive", field="convergence_tol"
            )

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(repr=False)
class LapScanResult(BaseResult):
    """Converged weighted resolvent norms per (lambda, rho) and per-lambda verdicts"""

    s: float
    convergence_tol: float
    cells: list
    verdicts: dict
    near_point: list
    at_threshold: list

    @property
    def unresolved(self):
        return [cell for cell in self.cells if cell["status"] != "converged"]

    def norms(self, lam):
        return [cell["norm"] for cell in self.cells if cell["lambda"] == lam]


def classify_plateau(norms, tol=PLATEAU_TOL):
    """'plateau' when the three smallest-rho norms stay within tol of the median

    `norms` are ordered by decreasing rho; None marks an unresolved cell.
    """
    if any(value is None for value in norms) or len(norms) < 3:
        return "unresolved"
    norms = np.asarray(norms, dtype=float)
    median = np.median(norms)
    worst = np.abs(norms[-3:] - median).max()
    return "plateau" if worst <= tol * median else "growth"


def _cell(factory, lam, rho, config, start, s):
    """Walk the truncations until the weighted norm settles"""
    z = complex(lam, rho)
    history = []
    agreed = 0
    for index in range(start, len(config.truncations)):
        N1 = config.truncations[index]
        model = factory(N1)
        value = weighted_resolvent_norm(
            model.H, model.lambda_weight(s), z, ResolventSolver(model.H, z)
        )
        history.append(value)
        logger.debug("LAP cell lambda=%g rho=%g N1=%d: %.8g", lam, rho, N1, value)
        if len(history) > 1:
            close = relative_variation(history[-2], value) <= config.convergence_tol
            agreed = agreed + 1 if close else 0
            if agreed >= config.agreement_pairs:
                return {
                    "lambda": lam,
                    "rho": rho,
                    "s": s,
                    "N1_used": N1,
                    "norm": value,
                    "status": "converged",
                }, index
    logger.warning("LAP cell lambda=%g rho=%g did not converge in N1", lam, rho)
    return {
        "lambda": lam,
        "rho": rho,
        "s": s,
        "N1_used": config.truncations[-1],
        "norm": None,
        "status": "unresolved",
    }, len(config.truncations) - 1


def _row(factory, lam, config, s):
    cells = []
    start = 0
    for rho in config.rhos:
        cell, index = _cell(factory, lam, rho, config, start, s)
        cells.append(cell)
        # smaller rho never needs a smaller truncation
        start = max(0, index - config.agreement_pairs)
    verdict = classify_plateau([cell["norm"] for cell in cells])
    logger.info("LAP row lambda=%g: %s", lam, verdict)
    return cells, verdict


def lap_scan(factory, config, threads=1):
    """||<Lambda>^-s (H - lambda - i rho)^-1 <Lambda>^-s|| over the grid

    Each row of the grid is independent; rows run on a thread pool and are
    collected in grid order.
    """
    geometry = factory.geometry
    lower, upper = band_edges(geometry)
    at_threshold = [
        lam
        for lam in config.lambdas
        if min(abs(lam - lower), abs(lam - upper)) < config.threshold_margin
    ]
    for lam in at_threshold:
        logger.warning(
            "LAP grid point %g sits on a threshold, weighted with s=%g",
            lam,
            config.threshold_s,
        )
    near = near_point_spectrum(
        factory,
        config.lambdas,
        config.truncations[:2],
        config.convergence_tol,
        config.point_margin,
    )

    def row(lam):
        s = config.threshold_s if lam in at_threshold else config.s
        return _row(factory, lam, config, s)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        rows = list(executor.map(row, config.lambdas))

    cells = [cell for row_cells, _ in rows for cell in row_cells]
    verdicts = {lam: verdict for lam, (_, verdict) in zip(config.lambdas, rows)}
    return LapScanResult(
        config.s, config.convergence_tol, cells, verdicts, near, at_threshold
    )


def persistent_eigenvalues(first, second, tol=PERSIST_TOL):
    """Eigenvalues of `second` matched by an eigenvalue of `first` within tol"""
    first = np.sort(np.asarray(first, dtype=float))
    second = np.asarray(second, dtype=float)
    if first.size == 0 or second.size == 0:
        return np.array([])
    position = np.searchsorted(first, second)
    below = first[np.clip(position - 1, 0, first.size - 1)]
    above = first[np.clip(position, 0, first.size - 1)]
    nearest = np.minimum(np.abs(second - below), np.abs(second - above))
    return np.sort(second[nearest <= tol])


def near_point_spectrum(
    factory, lambdas, truncations, convergence_tol, point_margin=None
):
    """Grid points close to an eigenvalue that persists across two truncations

    The default margin is 10 * convergence_tol * ||H||. Hits are diagnostics
    only.
    """
    small, large = sorted(truncations)[-2:]
    model = factory(large)
    norm = spectral_norm(model.H)
    first = eigendecompose(factory(small).H).eigenvalues
    second = eigendecompose(model.H).eigenvalues
    persistent = persistent_eigenvalues(first, second, PERSIST_TOL * norm)
    margin = point_margin if point_margin is not None else 10.0 * convergence_tol * norm
    hits = []
    for lam in lambdas:
        if persistent.size == 0:
            break
        distance = np.abs(persistent - lam)
        closest = int(np.argmin(distance))
        if distance[closest] < margin:
            logger.warning(
                "Grid point %g is within %.3g of the eigenvalue %.8g",
                lam,
                distance[closest],
                persistent[closest],
            )
            hits.append(
                {
                    "lambda": lam,
                    "eigenvalue": float(persistent[closest]),
                    "distance": float(distance[closest]),
                }
            )
    return hits


# pylint: disable=too-many-arguments
def propagation_integral(model, weight, window, f, T, dt):
    """Trapezoid rule for the integral over [-T, T] of ||<Lambda>^-s e^{-itH} E_I f||^2

    `model` is an operator or its EigenDecomposition; `weight` is the diagonal
    of <Lambda>^-s, or None for s = 0.
    """
    eig = model if hasattr(model, "eigenvalues") else eigendecompose(model)
    if not isinstance(window, SpectralWindow):
        window = SpectralWindow.from_value(window)
    f = np.asarray(f, dtype=complex)
    steps = int(round(2.0 * T / dt))
    times = np.linspace(-T, T, steps + 1)
    selected = window.contains(eig.eigenvalues)
    values = np.zeros(times.size)
    if selected.any():
        vectors = eig.eigenvectors[:, selected]
        energies = eig.eigenvalues[selected]
        coefficients = vectors.conj().T @ (eig.weights * f)
        weighted = vectors * (1.0 if weight is None else np.asarray(weight))[:, None]
        for start in range(0, times.size, TIME_CHUNK):
            chunk = times[start : start + TIME_CHUNK]
            phases = np.exp(-1j * np.outer(chunk, energies)) * coefficients[None, :]
            states = phases @ weighted.T
            values[start : start + TIME_CHUNK] = (
                np.abs(states) ** 2 * eig.weights[None, :]
            ).sum(axis=1)
    return float(trapezoid(values, times))


@dataclass(repr=False)
class PropagationStudy(BaseResult):
    window: list
    s: float
    horizon: float
    truncations: list
    integrals: list
    norms_squared: list
    ratios: list
    stable: bool
    variation: float


# pylint: disable=too-many-arguments
def propagation_study(
    factory, window, s=1.0, T=50.0, dt=0.05, truncations=(200, 400), f=None
):
    """Propagation integral over ||f||^2 as the truncation doubles, T fixed

    `f` defaults to the junction vector of each model.
    """
    if not isinstance(window, SpectralWindow):
        window = SpectralWindow.from_value(window)
    integrals, norms, ratios = [], [], []
    for N1 in truncations:
        model = factory(N1)
        vector = model.junction_vector() if f is None else f(model)
        value = propagation_integral(
            model.H, model.lambda_weight(s), window, vector, T, dt
        )
        norm_sq = float(np.sum(model.H.weights * np.abs(vector) ** 2))
        integrals.append(value)
        norms.append(norm_sq)
        ratios.append(value / norm_sq)
        logger.info("Propagation at N1=%d: ratio %.6g", N1, ratios[-1])
    variation = relative_variation(ratios[-2], ratios[-1]) if len(ratios) > 1 else 0.0
    return PropagationStudy(
        window.to_list(),
        float(s),
        float(T),
        list(truncations),
        integrals,
        norms,
        ratios,
        variation <= PROPAGATION_VARIATION,
        variation,
    )


@dataclass(repr=False)
class ThresholdStudy(BaseResult):
    """Eigenvalue counts in a window and near each threshold across truncations

    Raw interior counts take every eigenvalue in the window; interior counts
    keep only those that persist into the neighbouring truncation. Threshold
    counts are raw.
    """

    window: list
    band_margin: float
    truncations: list
    raw_interior_counts: list
    interior_counts: list
    near_alpha_counts: list
    near_beta_counts: list
    persistent: list
    stabilized: bool

    def rows(self):
        return [
            {
                "N1": N1,
                "raw_interior_count": raw,
                "interior_count": interior,
                "near_alpha_count": alpha,
                "near_beta_count": beta,
            }
            for N1, raw, interior, alpha, beta in zip(
                self.truncations,
                self.raw_interior_counts,
                self.interior_counts,
                self.near_alpha_counts,
                self.near_beta_counts,
            )
        ]


def threshold_study(factory, window, band_margin=0.05, truncations=(100, 200, 400)):
    if len(truncations) < 2:
        raise ConfigError(
            "a threshold study needs two truncations", field="truncations"
        )
    if not isinstance(window, SpectralWindow):
        window = SpectralWindow.from_value(window)
    lower, upper = band_edges(factory.geometry)
    spectra, norms = [], []
    for N1 in truncations:
        model = factory(N1)
        spectra.append(eigendecompose(model.H).eigenvalues)
        norms.append(spectral_norm(model.H))

    raw, interior, near_alpha, near_beta, kept = [], [], [], [], []
    for k, values in enumerate(spectra):
        neighbour = spectra[k - 1] if k else spectra[1]
        persistent = persistent_eigenvalues(neighbour, values, PERSIST_TOL * norms[k])
        inside = persistent[window.contains(persistent)]
        raw.append(int(np.sum(window.contains(values))))
        interior.append(int(inside.size))
        near_alpha.append(int(np.sum(np.abs(values - lower) <= band_margin)))
        near_beta.append(int(np.sum(np.abs(values - upper) <= band_margin)))
        kept = inside.tolist()
        logger.info(
            "Threshold study N1=%d: %d interior (%d raw), %d near alpha, %d near beta",
            truncations[k],
            interior[-1],
            raw[-1],
            near_alpha[-1],
            near_beta[-1],
        )
    return ThresholdStudy(
        window.to_list(),
        float(band_margin),
        list(truncations),
        raw,
        interior,
        near_alpha,
        near_beta,
        kept,
        interior[-1] == interior[-2],
    )
