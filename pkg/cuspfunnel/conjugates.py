"""
Conjugate operators: the half-line dilation A_N, its funnel and cusp
versions, the glued operator, the low-energy projection and the weights
<Lambda>^-s
"""

# Standard Library
import logging
from dataclasses import dataclass
from typing import Optional

# Third Party
import numpy as np
from scipy import sparse

# Local
from .base import BaseResult
from .graphs import (
    FiniteGraphSpec,
    GeometrySpec,
    RayBlock,
    build_from_spec,
    build_ray,
    glued_layout,
)
from .operators import (
    OperatorMatrix,
    gauge_transform,
    perturbation_gauge,
    shift_operators,
)
from .toolbox import bracket

logger = logging.getLogger("cuspfunnel")

RAY_BLOCKS = {
    "halfline": RayBlock("halfline", 0),
    "funnel": RayBlock("funnel", 1),
    "cusp": RayBlock("cusp", -1),
}


def assemble_A_halfline(N1):
    """A_N = -(i/2)((U* + U)/2 + Q(U* - U)) on the unit-weight path"""
    U, U_star, Q = shift_operators(N1)
    average = 0.5 * (U_star.entries + U.entries)
    entries = -0.5j * (average + Q.entries @ (U_star.entries - U.entries))
    return OperatorMatrix(
        entries.tocsr(), U.weights, True, U.depth, U.edge_mask, "A_N"
    )


def symmetrized_dilation(N1):
    """(SQ + QS)/2 with S = (U* - U)/2i, assembled from the shift operators"""
    U, U_star, Q = shift_operators(N1)
    S = (U_star.entries - U.entries) / 2j
    entries = 0.5 * (S @ Q.entries + Q.entries @ S)
    return OperatorMatrix(
        entries.tocsr(), U.weights, True, U.depth, U.edge_mask, "(SQ+QS)/2"
    )


def _level_ratio(block):
    """sqrt(m(n-1)/m(n)) along a ray"""
    return np.exp(-0.5 * block.sign)


def ray_conjugate_closed_form(N1, side):
    """T A_N T^-1 written out: entries (i/2) q (n - 1/2) at (n, n-1) and
    -(i/2) (n + 1/2) / q at (n, n+1), with q = sqrt(m(n-1)/m(n))
    """
    block = RAY_BLOCKS[side]
    ray = build_ray(N1, block)
    q = _level_ratio(block)
    n = np.arange(N1, dtype=float)
    lower = 0.5j * q * (n[1:] - 0.5)
    upper = -0.5j * (n[:-1] + 0.5) / q
    entries = sparse.diags([lower, upper], [-1, 1], shape=(N1, N1), format="csr")
    return OperatorMatrix(
        entries, ray.m, True, ray.depth, ray.edge_mask(), f"A on the {side} ray"
    )


def ray_conjugate_by_gauge(N1, side):
    """T_{1->m} A_N T_{1->m}^-1 by explicit conjugation"""
    ray = build_ray(N1, RAY_BLOCKS[side])
    pair = gauge_transform(np.ones(N1), ray.m, ray.E)
    return pair.conjugate(assemble_A_halfline(N1))


def assemble_P_le(fiber):
    """Orthogonal projection onto ker(Delta_2), from component indicators"""
    _, labels = fiber.components()
    sizes = np.bincount(labels)
    same = labels[:, None] == labels[None, :]
    return same / sizes[labels][:, None]


def assemble_P_he(fiber):
    return np.eye(fiber.p) - assemble_P_le(fiber)


@dataclass(frozen=True)
class ConjugateBundle:
    """A conjugate operator with its projection and level weights"""

    A: OperatorMatrix
    P_le: Optional[np.ndarray]
    lambda_weight: np.ndarray
    side_tag: str

    def weight(self, s):
        """Diagonal of <Lambda>^-s"""
        return bracket(self.lambda_weight) ** (-s)


def _lambda_values(depth):
    depth = np.asarray(depth)
    return np.where(depth >= 0, depth + 0.5, 0.0)


def _side_block(N1, fiber, side, path):
    if path == "explicit":
        ray = ray_conjugate_closed_form(N1, side)
    else:
        ray = ray_conjugate_by_gauge(N1, side)
    factor = assemble_P_le(fiber) if side == "cusp" else np.eye(fiber.p)
    entries = sparse.kron(ray.entries, sparse.csr_matrix(factor)).tocsr()
    weights = np.kron(ray.weights, np.full(fiber.p, fiber.m2))
    depth = np.repeat(ray.depth, fiber.p)
    return OperatorMatrix(
        entries,
        weights,
        True,
        depth,
        np.repeat(ray.edge_mask, fiber.p),
        f"A on the {side} product",
    )


def assemble_A_funnel(N1, fiber, path="explicit"):
    """T A_N T^-1 x 1 on the funnel product"""
    A = _side_block(N1, fiber, "funnel", path)
    return ConjugateBundle(A, None, _lambda_values(A.depth), "funnel")


def assemble_A_cusp(N1, fiber, path="explicit"):
    """T A_N T^-1 x P_le on the cusp product, zero on high energy modes"""
    A = _side_block(N1, fiber, "cusp", path)
    return ConjugateBundle(A, assemble_P_le(fiber), _lambda_values(A.depth), "cusp")


def assemble_A_glued(spec):
    """A_funnel + 0 + A_cusp, block diagonal in the glued ordering"""
    graph = build_from_spec(spec)
    layout = glued_layout(spec)
    blocks = []
    for block in layout.blocks:
        if isinstance(block, RayBlock):
            side = _side_block(spec.ray_length, spec.fiber, block.side, "explicit")
            blocks.append(side.entries)
        else:
            blocks.append(sparse.csr_matrix((block.p, block.p)))
    A = OperatorMatrix(
        sparse.block_diag(blocks, format="csr"),
        graph.m,
        True,
        graph.depth,
        graph.edge_mask(),
        f"A on {spec.kind}",
    )
    P_le = assemble_P_le(spec.fiber) if "cusp" in spec.sides else None
    return ConjugateBundle(A, P_le, _lambda_values(graph.depth), "glued")


def assemble_A_for_spec(spec):
    if spec.kind == "halfline":
        ray = assemble_A_halfline(spec.ray_length)
        p = spec.fiber.p
        A = OperatorMatrix(
            sparse.kron(ray.entries, sparse.identity(p)).tocsr(),
            np.full(spec.ray_length * p, spec.fiber.m2),
            True,
            np.repeat(ray.depth, p),
            np.repeat(ray.edge_mask, p),
            "A_N x 1",
        )
        return ConjugateBundle(A, None, _lambda_values(A.depth), "halfline")
    if spec.kind == "half_ray_funnel":
        return assemble_A_funnel(spec.ray_length, spec.fiber)
    if spec.kind == "half_ray_cusp":
        return assemble_A_cusp(spec.ray_length, spec.fiber)
    return assemble_A_glued(spec)


def lambda_weight_for_graph(graph, s):
    values = bracket(_lambda_values(graph.depth)) ** (-s)
    return OperatorMatrix(
        sparse.diags(values).tocsr(),
        graph.m,
        True,
        graph.depth,
        graph.edge_mask(),
        f"<Lambda>^-{s}",
    )


def assemble_lambda_weight(N1, fiber, side, s):
    """Diagonal <n + 1/2>^-s per ray level, 1 on a compact part"""
    kinds = {
        "halfline": "halfline",
        "funnel": "half_ray_funnel",
        "cusp": "half_ray_cusp",
    }
    if side == "glued":
        spec = GeometrySpec.default_glued(N1, fiber)
    else:
        spec = GeometrySpec(kinds[side], N1, fiber or FiniteGraphSpec.single())
    return lambda_weight_for_graph(build_from_spec(spec), s)


def assemble_A_perturbed(A, graph, pert):
    """T^-1 A T on l2(m_mu), with T = T_{m_mu -> m}"""
    return perturbation_gauge(graph, pert).pull_back(A)


@dataclass(repr=False)
class SquaredConjugateReport(BaseResult):
    """A^2 against its five-band closed form"""

    side: str
    ray_length: int
    max_interior_deviation: float
    weighted_norm: float
    diagonal: list


def five_band_square(N1, side):
    """Closed form of A^2 away from row 0 and the truncation row"""
    q2 = _level_ratio(RAY_BLOCKS[side]) ** 2
    n = np.arange(N1, dtype=float)
    diagonal = 0.25 * (2.0 * n**2 + 0.5)
    lower = -0.25 * q2 * (n[2:] - 0.5) * (n[2:] - 1.5)
    upper = -0.25 / q2 * (n[:-2] + 0.5) * (n[:-2] + 1.5)
    return sparse.diags([lower, diagonal, upper], [-2, 0, 2], shape=(N1, N1)).toarray()


def conjugate_squared_check(N1, side="cusp"):
    """Compare A^2 with its closed form and measure ||<Lambda>^-2 A^2||

    The default side reproduces the displayed coefficients e at distance -2
    and e^-1 at distance +2.
    """
    A = ray_conjugate_closed_form(N1, side)
    square = (A @ A).toarray()
    closed = five_band_square(N1, side)
    rows = slice(1, N1 - 1)
    deviation = float(np.abs(square[rows] - closed[rows]).max())
    weight = bracket(np.arange(N1) + 0.5) ** (-2.0)
    weighted = OperatorMatrix(weight[:, None] * square, A.weights)
    return SquaredConjugateReport(
        side, N1, deviation, weighted.norm(), np.real(np.diag(square)).tolist()
    )


@dataclass(repr=False)
class DominationReport(BaseResult):
    """||A f|| <= C ||Lambda f|| on one truncation"""

    side: str
    ray_length: int
    exact_constant: float
    sampled_constant: float


def domain_domination(N1, side="funnel", samples=64, seed=0):
    A = ray_conjugate_closed_form(N1, side)
    levels = np.arange(N1) + 0.5
    exact = OperatorMatrix(A.toarray() / levels[None, :], A.weights).norm()
    rng = np.random.default_rng(seed)
    root = np.sqrt(A.weights)
    best = 0.0
    for _ in range(samples):
        f = (rng.standard_normal(N1) + 1j * rng.standard_normal(N1)) / root
        ratio = np.linalg.norm(root * (A @ f)) / np.linalg.norm(root * levels * f)
        best = max(best, float(ratio))
    return DominationReport(side, N1, exact, best)
