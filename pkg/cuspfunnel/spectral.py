"""
Numerical linear algebra: eigendecompositions on the weighted space, spectral
projections and functions of an operator, resolvents, time evolution and the
compactness witness
"""

# Standard Library
import logging
from dataclasses import dataclass, field

# Third Party
import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, splu, svds

# Local
from .base import BaseResult
from .constants import (
    COMPACT_DECAY_RATIO,
    COMPACT_SINGULAR_COUNT,
    COMPACT_TAIL_TOL,
    DENSE_CAP,
    DENSE_RESOLVENT_DIM,
    EDGE_BAND,
    HE_BISECTION_TOL,
    RESIDUAL_TOL,
)
from .exceptions import ConfigError, DenseCapExceededError, NotHermitianError
from .graphs import GeometrySpec
from .models import build_model
from .operators import OperatorMatrix

logger = logging.getLogger("cuspfunnel")


@dataclass(frozen=True)
class SpectralWindow:
    """The closed interval [a, b]"""

    a: float
    b: float

    def __post_init__(self):
        if not self.a <= self.b:
            raise ConfigError(f"window [{self.a}, {self.b}] is empty", field="window")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    def __str__(self):
        return f"[{self.a:g}, {self.b:g}]"

    @classmethod
    def from_value(cls, value):
        a, b = value
        return cls(a, b)

    def contains(self, values):
        values = np.asarray(values)
        return (values >= self.a) & (values <= self.b)

    def inside(self, lower, upper):
        """True when the window sits strictly between two thresholds"""
        return lower < self.a and self.b < upper

    def to_list(self):
        return [self.a, self.b]


@dataclass(repr=False)
class EigenDecomposition(BaseResult):
    """Eigenpairs of an operator; columns are orthonormal in the weighted product"""

    _skip = ("eigenvectors", "weights")

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    weights: np.ndarray
    source_dim: int
    residual_norm: float

    def unit_vectors(self):
        """Eigenvectors in the unit frame, orthonormal in the standard product"""
        return self.eigenvectors * np.sqrt(self.weights)[:, None]


def symmetrize(H):
    """D^1/2 H D^-1/2 for an operator flagged Hermitian in its weighted product"""
    if not H.hermitian:
        raise NotHermitianError(f"{H.name} is not flagged Hermitian")
    frame = H.unit_frame()
    return 0.5 * (frame + frame.conj().T)


def _dense(matrix):
    return matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)


def eigendecompose(H, max_dim=DENSE_CAP):
    if H.dim > max_dim:
        raise DenseCapExceededError(
            f"dimension {H.dim} exceeds the dense cap {max_dim}",
            field="max_dim",
            hint="reduce ray_length, restrict to a block, or raise --max-dim",
        )
    S = _dense(symmetrize(H))
    if np.iscomplexobj(S) and not np.any(S.imag):
        S = S.real
    values, vectors = scipy.linalg.eigh(S)
    residual = np.abs(S @ vectors - vectors * values[None, :])
    residual_norm = 0.0
    if values.size:
        residual_norm = float(np.linalg.norm(residual, axis=0).max())
    logger.debug("Eigendecomposition of %s, residual %.3g", H.name, residual_norm)
    root = np.sqrt(H.weights)
    return EigenDecomposition(
        values, vectors / root[:, None], H.weights, H.dim, residual_norm
    )


def _from_spectrum(eig, coefficients, name):
    vectors = eig.eigenvectors
    adjoint = vectors.conj().T * eig.weights[None, :]
    entries = (vectors * coefficients[None, :]) @ adjoint
    return OperatorMatrix(
        entries, eig.weights, bool(np.all(np.isreal(coefficients))), name=name
    )


def spectral_projection(eig, window):
    """E_I(H) for the closed window I; an empty window gives the zero projection"""
    selected = window.contains(eig.eigenvalues).astype(float)
    return _from_spectrum(eig, selected, f"E_{window}")


def apply_function(eig, function):
    """f(H) by spectral calculus"""
    return _from_spectrum(eig, np.asarray(function(eig.eigenvalues)), "f(H)")


def _check_z(z):
    if np.imag(z) == 0:
        raise ConfigError(f"z = {z} must have nonzero imaginary part", field="z")


class ResolventSolver(object):
    """Factored H - z in the unit frame, solving in l2(V, m)"""

    def __init__(self, H, z):
        _check_z(z)
        self.z = complex(z)
        self.root = np.sqrt(H.weights)
        frame = symmetrize(H)
        if sparse.issparse(frame):
            shifted = (frame - self.z * sparse.identity(H.dim)).tocsc().astype(complex)
            self._lu = splu(shifted)
            self._dense = None
        else:
            self._lu = None
            self._dense = scipy.linalg.lu_factor(frame - self.z * np.eye(H.dim))
        self.frame = frame
        logger.debug("Factored %s at z=%s", H.name, self.z)

    def solve_unit(self, vector, adjoint=False):
        """Solve in the unit frame; with `adjoint` solve (S - z)^* instead"""
        if self._lu is not None:
            return self._lu.solve(
                np.asarray(vector, dtype=complex), trans="H" if adjoint else "N"
            )
        return scipy.linalg.lu_solve(self._dense, vector, trans=2 if adjoint else 0)

    def solve(self, f):
        return self.solve_unit(self.root * np.asarray(f, dtype=complex)) / self.root


def resolvent_apply(H, z, f):
    """g = (H - z)^-1 f"""
    solver = ResolventSolver(H, z)
    g = solver.solve(f)
    f = np.asarray(f, dtype=complex)
    residual = np.linalg.norm(solver.root * ((H @ g) - z * g - f))
    scale = np.linalg.norm(solver.root * f)
    if residual > RESIDUAL_TOL * max(scale, 1.0):
        raise ConfigError(
            f"resolvent solve at z={z} is singular, residual {residual:.3g}",
            field="z",
        )
    return g


def weighted_resolvent_norm(H, weight, z, solver=None):
    """||<Lambda>^-s (H - z)^-1 <Lambda>^-s|| in l2(V, m)

    `weight` is the diagonal of <Lambda>^-s, or None for s = 0. The weights are
    diagonal, so the norm is taken in the unit frame.
    """
    weight = np.ones(H.dim) if weight is None else np.asarray(weight, dtype=float)
    solver = solver or ResolventSolver(H, z)
    if H.dim <= DENSE_RESOLVENT_DIM:
        frame = _dense(solver.frame)
        inverse = np.linalg.inv(frame - solver.z * np.eye(H.dim))
        return float(np.linalg.norm(weight[:, None] * inverse * weight[None, :], 2))

    def matvec(x):
        return weight * solver.solve_unit(weight * np.ravel(x))

    def rmatvec(x):
        return weight * solver.solve_unit(weight * np.ravel(x), adjoint=True)

    operator = LinearOperator(
        (H.dim, H.dim), matvec=matvec, rmatvec=rmatvec, dtype=complex
    )
    value = svds(operator, k=1, return_singular_vectors=False)
    return float(np.max(value))


def evolve(H, f, times):
    """e^{-itH} f for every t, one row per time"""
    eig = H if isinstance(H, EigenDecomposition) else eigendecompose(H)
    f = np.asarray(f, dtype=complex)
    coefficients = eig.eigenvectors.conj().T @ (eig.weights * f)
    phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), eig.eigenvalues))
    return (phases * coefficients[None, :]) @ eig.eigenvectors.T


def spectral_norm(op):
    """2-norm of an operator, taken in the unit frame"""
    frame = op.unit_frame() if isinstance(op, OperatorMatrix) else op
    if min(frame.shape) == 0:
        return 0.0
    if sparse.issparse(frame):
        if frame.shape[0] > DENSE_RESOLVENT_DIM:
            if frame.nnz == 0:
                return 0.0
            top = svds(frame.astype(complex), k=1, return_singular_vectors=False)
            return float(np.max(top))
        frame = frame.toarray()
    return float(np.linalg.norm(frame, 2))


@dataclass(repr=False)
class CompactnessReport(BaseResult):
    """Tail norms past each level and the leading singular values"""

    levels: list
    tail_norms: list
    singular_values: list
    first_level_below: int
    compact: bool
    tolerance: float


def compactness_witness(
    K,
    tail_levels=EDGE_BAND,
    tol=COMPACT_TAIL_TOL,
    singular_count=COMPACT_SINGULAR_COUNT,
):
    """Numeric stand-in for compactness of an operator on a ray product

    Tail norm at level n is ||K restricted to columns at levels >= n||, with the
    last `tail_levels` levels left out. K is witnessed compact when a tail norm
    drops below `tol` before half the truncation and the leading singular
    values decay by COMPACT_DECAY_RATIO.
    """
    if K.depth is None:
        raise ConfigError(f"{K.name} carries no level tags", field="depth")
    if K.dim > DENSE_CAP:
        raise DenseCapExceededError(
            f"dimension {K.dim} exceeds the dense cap {DENSE_CAP}",
            hint="witness a cropped section instead",
        )
    frame = _dense(K.unit_frame())
    depth = K.depth
    top = int(depth.max()) + 1 - tail_levels
    columns = depth < top
    levels = list(range(max(top, 0)))
    tail_norms = []
    for level in levels:
        selected = (depth >= level) & columns
        block = frame[:, selected]
        tail_norms.append(float(np.linalg.norm(block, 2)) if block.size else 0.0)
    below = [n for n, value in zip(levels, tail_norms) if value < tol]
    first = below[0] if below else -1
    values = scipy.linalg.svdvals(frame[:, columns])[:singular_count]
    decays = bool(values.size) and (
        values[0] == 0 or values[-1] <= COMPACT_DECAY_RATIO * values[0]
    )
    compact = bool(below) and first < (top + tail_levels) / 2 and decays
    return CompactnessReport(levels, tail_norms, values.tolist(), first, compact, tol)


@dataclass(repr=False)
class BandStatistics(BaseResult):
    """How a set of eigenvalues fills the band [lower, upper]"""

    lower: float
    upper: float
    count: int
    minimum: float
    maximum: float
    max_gap: float
    hausdorff: float
    isolated: list = field(default_factory=list)


def band_statistics(eigenvalues, lower, upper, tol):
    """Band fill over eigenvalues in [lower - tol, upper + tol]

    Eigenvalues outside that interval are reported as isolated.
    """
    eigenvalues = np.sort(np.asarray(eigenvalues, dtype=float))
    inside = (eigenvalues >= lower - tol) & (eigenvalues <= upper + tol)
    band = eigenvalues[inside]
    if band.size == 0:
        width = upper - lower
        return BandStatistics(
            lower, upper, 0, np.nan, np.nan, width, width, eigenvalues.tolist()
        )
    max_gap = float(np.diff(band).max()) if band.size > 1 else 0.0
    hausdorff = max(abs(band[0] - lower), abs(upper - band[-1]), max_gap / 2.0)
    return BandStatistics(
        lower,
        upper,
        int(band.size),
        float(band[0]),
        float(band[-1]),
        max_gap,
        float(hausdorff),
        eigenvalues[~inside].tolist(),
    )


def he_spectrum(fiber, N1, count=5, he_cutoff=None):
    """Lowest eigenvalues of the high energy cusp block

    Each high energy mode is its own tridiagonal chain on all N1 levels, with
    a diagonal growing like e^n. Bisection runs to the absolute tolerance
    HE_BISECTION_TOL, so the low eigenvalues are resolved next to diagonal
    entries of any size. `he_cutoff` drops levels as build_model does.
    """
    cutoff = np.inf if he_cutoff is None else he_cutoff
    model = build_model(GeometrySpec("half_ray_cusp", N1, fiber), he_cutoff=cutoff)
    entries = model.H.tocsr()
    found = []
    for mode in np.unique(model.modes[model.high_energy]):
        index = np.flatnonzero(model.high_energy & (model.modes == mode))
        index = index[np.argsort(model.depth[index])]
        diagonal = entries.diagonal()[index]
        off = np.asarray(entries[index[:-1], index[1:]]).ravel()
        top = min(count, index.size) - 1
        values = scipy.linalg.eigh_tridiagonal(
            diagonal,
            off,
            eigvals_only=True,
            select="i",
            select_range=(0, top),
            lapack_driver="stebz",
            tol=HE_BISECTION_TOL,
        )
        found.extend(values.tolist())
    return np.sort(found)[:count]
