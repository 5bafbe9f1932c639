"""
Operators on l2(V, m): Laplacians, multiplication and shift operators, the
gauge transform between weighted spaces and the perturbed Laplacian
"""

# Standard Library
import logging
from dataclasses import dataclass

# Third Party
import numpy as np
import scipy.linalg
from scipy import sparse

# Local
from .constants import ALPHA, HERMITIAN_TOL, WEIGHT_RTOL
from .exceptions import GraphValidationError, WeightMismatchError
from .graphs import build_unit_ray
from .toolbox import one_minus_sqrt

logger = logging.getLogger("cuspfunnel")


class OperatorMatrix(object):
    """A finite operator on l2(V, m), stored with its weight vector

    `entries` may be sparse or dense. `depth` carries the ray level of each
    index (-1 off the rays) and `edge_mask` tags indices next to the
    truncation end.
    """

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        entries,
        weights,
        hermitian=False,
        depth=None,
        edge_mask=None,
        name="operator",
    ):
        if sparse.issparse(entries):
            self.entries = entries.tocsr()
        else:
            self.entries = np.asarray(entries)
        self.weights = np.asarray(weights, dtype=float)
        size = self.weights.size
        if self.entries.shape != (size, size):
            raise WeightMismatchError(
                f"entries of shape {self.entries.shape} on {size} weights"
            )
        self.hermitian = bool(hermitian)
        self.depth = None if depth is None else np.asarray(depth)
        self.edge_mask = (
            np.zeros(size, dtype=bool) if edge_mask is None else np.asarray(edge_mask)
        )
        self.name = name

    def __repr__(self):
        return f"<OperatorMatrix: {self}>"  # pragma: no cover

    def __str__(self):
        flag = "hermitian" if self.hermitian else "general"
        return f"{self.name} ({self.dim}x{self.dim}, {flag})"

    @property
    def hermitian_in_weighted_product(self):
        return self.hermitian

    @property
    def dim(self):
        return self.weights.size

    @property
    def is_sparse(self):
        return sparse.issparse(self.entries)

    @property
    def interior(self):
        return ~self.edge_mask

    def toarray(self):
        if self.is_sparse:
            return self.entries.toarray()
        return np.array(self.entries)

    def tocsr(self):
        return sparse.csr_matrix(self.entries)

    def like(self, entries, hermitian=None, name=None):
        """A new operator on the same weighted space"""
        return OperatorMatrix(
            entries,
            self.weights,
            self.hermitian if hermitian is None else hermitian,
            self.depth,
            self.edge_mask,
            name or self.name,
        )

    def check_compatible(self, other):
        if self.dim != other.dim or not np.allclose(
            self.weights, other.weights, rtol=WEIGHT_RTOL, atol=0
        ):
            raise WeightMismatchError(
                f"{self.name} and {other.name} live on different weighted spaces"
            )

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self.check_compatible(other)
            return self.like(self.entries @ other.entries, hermitian=False)
        return self.entries @ other

    def __add__(self, other):
        self.check_compatible(other)
        return self.like(
            self.entries + other.entries, hermitian=self.hermitian and other.hermitian
        )

    def __sub__(self, other):
        self.check_compatible(other)
        return self.like(
            self.entries - other.entries, hermitian=self.hermitian and other.hermitian
        )

    def __mul__(self, scalar):
        return self.like(
            self.entries * scalar, hermitian=self.hermitian and np.isreal(scalar)
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def adjoint(self):
        """Adjoint in the weighted product, D^-1 H^* D"""
        D = sparse.diags(self.weights)
        D_inv = sparse.diags(1.0 / self.weights)
        if self.is_sparse:
            entries = D_inv @ self.entries.conj().T @ D
        else:
            entries = self.entries.conj().T * self.weights[None, :]
            entries = entries / self.weights[:, None]
        return self.like(entries, hermitian=self.hermitian)

    def unit_frame(self):
        """The similar matrix D^1/2 H D^-1/2, Hermitian in the standard product"""
        root = np.sqrt(self.weights)
        if self.is_sparse:
            frame = sparse.diags(root) @ self.entries @ sparse.diags(1.0 / root)
            return frame.tocsr()
        return self.entries * root[:, None] / root[None, :]

    def hermiticity_defect(self):
        """max |S - S^*| / max |S| for the unit-frame matrix S"""
        frame = self.unit_frame()
        if sparse.issparse(frame):
            difference = abs(frame - frame.conj().T)
            scale = abs(frame).max() if frame.nnz else 0.0
            defect = difference.max() if difference.nnz else 0.0
        else:
            scale = np.abs(frame).max() if frame.size else 0.0
            defect = np.abs(frame - frame.conj().T).max() if frame.size else 0.0
        if scale == 0:
            return 0.0
        return float(defect / scale)

    def is_hermitian(self, tol=HERMITIAN_TOL):
        return self.hermiticity_defect() <= tol

    def crop(self, keep):
        """Restriction to the indices selected by a boolean mask"""
        keep = np.asarray(keep, dtype=bool)
        index = np.flatnonzero(keep)
        if self.is_sparse:
            entries = self.entries[index][:, index]
        else:
            entries = self.entries[np.ix_(index, index)]
        return OperatorMatrix(
            entries,
            self.weights[index],
            self.hermitian,
            None if self.depth is None else self.depth[index],
            self.edge_mask[index],
            self.name,
        )

    def norm(self):
        """Operator norm in the weighted product"""
        frame = self.unit_frame()
        frame = frame.toarray() if sparse.issparse(frame) else frame
        if frame.size == 0:
            return 0.0
        return float(np.linalg.norm(frame, 2))


def laplacian_entries(m, E):
    """(1/m(x)) sum_y E(x, y) (f(x) - f(y)) as a sparse matrix"""
    E = sparse.csr_matrix(E)
    degree = np.asarray(E.sum(axis=1)).ravel() / m
    return (sparse.diags(degree) - sparse.diags(1.0 / m) @ E).tocsr()


def assemble_laplacian(g):
    return OperatorMatrix(
        laplacian_entries(g.m, g.E),
        g.m,
        hermitian=True,
        depth=g.depth,
        edge_mask=g.edge_mask(),
        name=f"laplacian of {g.name}",
    )


def assemble_halfline_laplacian(N1):
    """Delta_N = 2 - (U + U*) - 1_{0} on the unit-weight path"""
    return assemble_laplacian(build_unit_ray(N1))


def multiplication_operator(values, weights, depth=None, edge_mask=None):
    values = np.asarray(values)
    return OperatorMatrix(
        sparse.diags(values).tocsr(),
        weights,
        hermitian=bool(np.all(np.isreal(values))),
        depth=depth,
        edge_mask=edge_mask,
        name="multiplication",
    )


def shift_operators(N1):
    """U f(n) = f(n - 1) with U f(0) = 0, its adjoint, and Q f(n) = n f(n)"""
    graph = build_unit_ray(N1)
    ones = np.ones(N1)
    edge = graph.edge_mask()
    U = sparse.eye(N1, k=-1, format="csr")
    Q = sparse.diags(np.arange(N1, dtype=float)).tocsr()
    return (
        OperatorMatrix(U, ones, False, graph.depth, edge, "U"),
        OperatorMatrix(U.T.tocsr(), ones, False, graph.depth, edge, "U*"),
        OperatorMatrix(Q, ones, True, graph.depth, edge, "Q"),
    )


@dataclass(frozen=True)
class GaugePair:
    """The unitary T = sqrt(m/m') from l2(m) to l2(m'), with E~ and W"""

    t_diagonal: np.ndarray
    w_potential: np.ndarray
    tilde_E: sparse.csr_matrix
    m_from: np.ndarray
    m_to: np.ndarray

    def apply(self, f):
        return self.t_diagonal * f

    def inverse(self, g):
        return g / self.t_diagonal

    def conjugate(self, operator):
        """T H T^-1, moving an operator on l2(m) to l2(m')"""
        t = self.t_diagonal
        if operator.is_sparse:
            entries = sparse.diags(t) @ operator.entries @ sparse.diags(1.0 / t)
        else:
            entries = operator.entries * t[:, None] / t[None, :]
        return OperatorMatrix(
            entries,
            self.m_to,
            operator.hermitian,
            operator.depth,
            operator.edge_mask,
            operator.name,
        )

    def pull_back(self, operator):
        """T^-1 H T, moving an operator on l2(m') to l2(m)"""
        t = self.t_diagonal
        if operator.is_sparse:
            entries = sparse.diags(1.0 / t) @ operator.entries @ sparse.diags(t)
        else:
            entries = operator.entries * t[None, :] / t[:, None]
        return OperatorMatrix(
            entries,
            self.m_from,
            operator.hermitian,
            operator.depth,
            operator.edge_mask,
            operator.name,
        )

    def tilde_laplacian(self):
        """Laplacian of G~ = (E~, V, m) on l2(m)"""
        return OperatorMatrix(
            laplacian_entries(self.m_from, self.tilde_E), self.m_from, True
        )

    def conjugated_laplacian(self, depth=None, edge_mask=None):
        """T (Delta_G~ - W) T^-1, equal to the Laplacian of G' = (E', V, m')"""
        inner = laplacian_entries(self.m_from, self.tilde_E)
        inner = inner - sparse.diags(self.w_potential)
        operator = OperatorMatrix(
            inner, self.m_from, True, depth, edge_mask, "gauge conjugated laplacian"
        )
        return self.conjugate(operator)


def gauge_transform(m_from, m_to, E):
    """Gauge data for moving the graph G' = (E, V, m_to) onto l2(m_from)"""
    m = np.asarray(m_from, dtype=float)
    m_prime = np.asarray(m_to, dtype=float)
    if m.shape != m_prime.shape:
        raise WeightMismatchError("gauge weights differ in length")
    if np.any(m <= 0) or np.any(m_prime <= 0):
        raise GraphValidationError(
            "gauge weights must be strictly positive", field="weights"
        )
    E = sparse.coo_matrix(E)
    rows, cols = E.row, E.col
    tilde = E.data * np.sqrt(m[rows] * m[cols] / (m_prime[rows] * m_prime[cols]))
    ratio = m[rows] * m_prime[cols] / (m[cols] * m_prime[rows])
    W = np.bincount(rows, weights=tilde * one_minus_sqrt(ratio), minlength=m.size) / m
    tilde_E = sparse.coo_matrix((tilde, (rows, cols)), shape=E.shape).tocsr()
    return GaugePair(np.sqrt(m / m_prime), W, tilde_E, m, m_prime)


def ray_gauge_shift(side):
    """Boundary coefficient b in T Delta T^-1 = Delta_N + alpha + b 1_{0}"""
    degree = {"cusp": np.exp(-0.5), "funnel": np.exp(0.5), "halfline": 1.0}[side]
    if side == "halfline":
        return 0.0
    return degree - 1.0 - ALPHA


def unit_frame_laplacian(g):
    """T Delta T^-1 on unit weights, through the gauge with G~ = G

    Choosing E' = E / sqrt(m(x) m(y)) makes E~ = E, so the gauge identity reads
    T Delta_G T^-1 = Delta_{G'} + W.
    """
    ones = np.ones(g.dim)
    root = np.sqrt(g.m)
    scale = sparse.diags(1.0 / root)
    E_unit = scale @ sparse.csr_matrix(g.E) @ scale
    pair = gauge_transform(g.m, ones, E_unit)
    entries = laplacian_entries(ones, E_unit) + sparse.diags(pair.w_potential)
    return OperatorMatrix(
        entries,
        np.ones(g.dim),
        hermitian=True,
        depth=g.depth,
        edge_mask=g.edge_mask(),
        name=f"unit frame laplacian of {g.name}",
    )


def assemble_perturbed_laplacian(g, pert):
    """Laplacian of G_{eps,mu} = ((1 + eps) E, V, (1 + mu) m) on l2(m_mu)"""
    m_mu, E_eps = pert.perturbed_weights(g)
    return OperatorMatrix(
        laplacian_entries(m_mu, E_eps),
        m_mu,
        hermitian=True,
        depth=g.depth,
        edge_mask=g.edge_mask(),
        name=f"perturbed laplacian of {g.name}",
    )


def assemble_hamiltonian(g, pert=None):
    """Delta_{G_{eps,mu}} + V on l2(m_mu)"""
    if pert is None:
        return assemble_laplacian(g)
    laplacian = assemble_perturbed_laplacian(g, pert)
    _, V = pert.vertex_values(g)
    return laplacian.like(
        laplacian.entries + sparse.diags(V), name=f"hamiltonian of {g.name}"
    )


def perturbation_gauge(g, pert):
    """Gauge pair T_{m_mu -> m}"""
    m_mu, E_eps = pert.perturbed_weights(g)
    return gauge_transform(m_mu, g.m, E_eps)


def gauge_difference(g, pert):
    """T Delta_{G_{eps,mu}} T^-1 - Delta_G on l2(m), in closed form

    With s = sqrt((1 + mu(x))(1 + mu(y))) the off-diagonal entries are
    -(E/m(x)) c(x, y), c = (eps - (mu(x) + mu(y) + mu(x) mu(y)) / (1 + s)) / s,
    and the diagonal adds the matching row sum plus the potential term
    (1/m) sum E (1 + eps)(mu(y) - mu(x)) / ((1 + mu(x)) r(y) (r(y) + r(x)))
    with r = sqrt(1 + mu).
    """
    mu, _ = pert.vertex_values(g)
    rows, cols, weights, eps = pert.edge_values(g)
    x = np.concatenate([rows, cols])
    y = np.concatenate([cols, rows])
    E = np.concatenate([weights, weights])
    eps = np.concatenate([eps, eps])

    root_x, root_y = np.sqrt(1.0 + mu[x]), np.sqrt(1.0 + mu[y])
    s = root_x * root_y
    c = (eps - (mu[x] + mu[y] + mu[x] * mu[y]) / (1.0 + s)) / s
    potential = E * (1.0 + eps) * (mu[y] - mu[x]) / (
        (1.0 + mu[x]) * root_y * (root_y + root_x)
    )
    diagonal = (
        np.bincount(x, weights=E * c, minlength=g.dim)
        + np.bincount(x, weights=potential, minlength=g.dim)
    ) / g.m
    off_diagonal = sparse.coo_matrix((-E * c / g.m[x], (x, y)), shape=(g.dim, g.dim))
    return OperatorMatrix(
        (off_diagonal + sparse.diags(diagonal)).tocsr(),
        g.m,
        hermitian=True,
        depth=g.depth,
        edge_mask=g.edge_mask(),
        name="gauge difference",
    )


def direct_gauge_difference(g, pert):
    """Same operator as gauge_difference, by explicit conjugation"""
    perturbed = assemble_perturbed_laplacian(g, pert)
    moved = perturbation_gauge(g, pert).conjugate(perturbed)
    return moved - assemble_laplacian(g)


@dataclass(frozen=True)
class FiberModes:
    """Orthonormal eigenbasis of the fiber Laplacian, kernel block first

    Kernel vectors are normalized component indicators, so kernel eigenvalues
    are exact zeros.
    """

    values: np.ndarray
    vectors: np.ndarray
    kernel_dim: int

    @property
    def p(self):
        return self.values.size


def fiber_modes(fiber):
    count, labels = fiber.components()
    kernel = np.zeros((fiber.p, count))
    for component in range(count):
        members = labels == component
        kernel[members, component] = 1.0 / np.sqrt(members.sum())
    if count == fiber.p:
        return FiberModes(np.zeros(fiber.p), kernel, count)
    values, vectors = scipy.linalg.eigh(fiber.laplacian())
    high = vectors[:, count:]
    high = high - kernel @ (kernel.T @ high)
    high /= np.linalg.norm(high, axis=0)
    return FiberModes(
        np.concatenate([np.zeros(count), values[count:]]),
        np.hstack([kernel, high]),
        count,
    )
