"""
Commutators i[H, A], the model identities they satisfy, double commutators,
the Mourre scan and the weighted commutator decay check
"""

# Standard Library
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

# Third Party
import numpy as np
from scipy import sparse

# Local
from .base import BaseResult
from .conjugates import (
    RAY_BLOCKS,
    assemble_A_cusp,
    assemble_A_funnel,
    assemble_A_halfline,
    ray_conjugate_closed_form,
)
from .constants import (
    ALPHA,
    BETA,
    BOUNDED_VARIATION,
    EDGE_BAND,
    SECTION_PAD,
    TAU_RELATIVE,
)
from .exceptions import ConfigError
from .graphs import GeometrySpec, build_from_spec, build_ray
from .models import band_edges
from .operators import (
    OperatorMatrix,
    assemble_halfline_laplacian,
    assemble_laplacian,
)
from .spectral import (
    SpectralWindow,
    apply_function,
    compactness_witness,
    eigendecompose,
    spectral_norm,
)
from .toolbox import bracket, relative_variation

logger = logging.getLogger("cuspfunnel")

# columns whose decay envelope e^-n (n + 1) is below this are left out of fits
DECAY_FIT_FLOOR = 1.0e-8


@dataclass(repr=False)
class CommutatorReport(BaseResult):
    """A commutator, its residual against a model, and where the residual lives"""

    _skip = ("commutator", "residual")

    name: str
    commutator: OperatorMatrix
    residual: Optional[OperatorMatrix]
    residual_support: list
    residual_tail_profile: list
    max_interior_deviation: float
    hermiticity_defect: float
    details: dict = field(default_factory=dict)


@dataclass(repr=False)
class MourreScanResult(BaseResult):
    """Negative directions of E_I([H, iA] - c) E_I across truncations"""

    window: list
    c_theory: float
    c: float
    negative_counts: dict
    window_ranks: dict
    lowest: dict
    tau: dict
    stabilized: bool
    out_of_band: bool


@dataclass(repr=False)
class DoubleCommutatorStudy(BaseResult):
    truncations: list
    norms: list
    bounded: bool
    variation: float
    he_block_max: float


@dataclass(repr=False)
class DecayStudy(BaseResult):
    """||<Lambda>^eps [H_pert - H_free, iA]|| across truncations"""

    eps_exponent: float
    truncations: list
    norms: list
    sampled: list
    bounded: bool
    variation: float


def commutator(H, A):
    """i(HA - AH)"""
    H.check_compatible(A)
    entries = 1j * (H.entries @ A.entries - A.entries @ H.entries)
    return H.like(entries, hermitian=True, name=f"i[{H.name}, {A.name}]")


def rank_one_operator(phi, psi, weights):
    """|phi><psi| on l2(V, m): f -> phi <psi, f>_m"""
    phi = np.asarray(phi, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    weights = np.asarray(weights, dtype=float)
    return OperatorMatrix(np.outer(phi, psi.conj() * weights), weights, name="rank one")


def _section(op, ray_length):
    """Crop an operator on an extended truncation back to `ray_length` levels"""
    keep = op.depth < ray_length
    cropped = op.crop(keep)
    cropped.edge_mask = (cropped.depth >= ray_length - EDGE_BAND) & (cropped.depth >= 0)
    return cropped


def _support(matrix, depth, interior, tol):
    """Level box [[r0, r1], [c0, c1]] of entries above tol between interior indices"""
    matrix = sparse.coo_matrix(matrix)
    keep = (np.abs(matrix.data) > tol) & interior[matrix.row] & interior[matrix.col]
    if not keep.any():
        return []
    r, c = depth[matrix.row[keep]], depth[matrix.col[keep]]
    return [[int(r.min()), int(r.max())], [int(c.min()), int(c.max())]]


def _level_profile(matrix, depth):
    """Column norm of each ray level block"""
    matrix = sparse.csc_matrix(matrix)
    squares = np.asarray(abs(matrix).power(2).sum(axis=0)).ravel()
    levels = int(depth.max()) + 1 if depth.size else 0
    profile = np.zeros(max(levels, 0))
    on_ray = depth >= 0
    np.add.at(profile, depth[on_ray], squares[on_ray])
    return np.sqrt(profile).tolist()


def _max_outside(matrix, depth, interior, box=2):
    """Largest entry between interior indices outside levels [0, box] x [0, box]"""
    matrix = sparse.coo_matrix(matrix)
    keep = interior[matrix.row] & interior[matrix.col]
    keep &= ~((depth[matrix.row] <= box) & (depth[matrix.col] <= box))
    values = np.abs(matrix.data[keep])
    return float(values.max()) if values.size else 0.0


def halfline_commutator_identity(N1):
    """[Delta_N, iA_N] against 1/2 Delta_N (4 - Delta_N)

    The operators have exact binary entries, so the residual is exactly zero
    away from the origin and the truncation band.
    """
    if N1 < 6:
        raise ConfigError("the half-line identity needs N1 >= 6", field="ray_length")
    laplacian = assemble_halfline_laplacian(N1)
    A = assemble_A_halfline(N1)
    C = commutator(laplacian, A)
    model = 2.0 * laplacian.entries - 0.5 * (laplacian.entries @ laplacian.entries)
    residual = C.like(C.entries - model, name="half-line residual")
    interior = laplacian.interior
    norm = spectral_norm(laplacian)
    deviation = _max_outside(residual.entries, laplacian.depth, interior)
    return CommutatorReport(
        "halfline",
        C,
        residual,
        _support(residual.entries, laplacian.depth, interior, 0.0),
        _level_profile(residual.entries, laplacian.depth),
        deviation,
        C.hermiticity_defect(),
        {"norm": norm, "relative_deviation": deviation / norm},
    )


def w_band(x, lower, upper):
    """The quadratic vanishing at both thresholds with maximum (upper - lower)/2"""
    x = np.asarray(x, dtype=float)
    return 2.0 / (upper - lower) * (x - lower) * (upper - x)


def w_function(x, m2=1.0, side="funnel"):
    """w(x) = (m2/2)(x - alpha/m2)(beta/m2 - x)

    On the half-line alpha = 0 and beta = 4.
    """
    lower, upper = (0.0, 4.0) if side == "halfline" else (ALPHA, BETA)
    return w_band(x, lower / m2, upper / m2)


def mourre_constant(window, lower, upper):
    """min of w over the window; w is concave so the minimum sits at an endpoint"""
    return float(min(w_band(window.a, lower, upper), w_band(window.b, lower, upper)))


def funnel_fiber_commutator(N1, fiber):
    """i[(1/m1) x Delta_2, A] on the funnel product, in closed form

    Ray factor entries are sinh(1/2) e^-n (n - 1/2) at (n, n-1) and
    sinh(1/2) e^-n (n + 1/2) at (n, n+1).
    """
    n = np.arange(N1, dtype=float)
    scale = np.sinh(0.5) * np.exp(-n)
    lower = scale[1:] * (n[1:] - 0.5)
    upper = scale[:-1] * (n[:-1] + 0.5)
    ray = sparse.diags([lower, upper], [-1, 1], shape=(N1, N1))
    graph = build_from_spec(GeometrySpec("half_ray_funnel", N1, fiber))
    entries = sparse.kron(ray, sparse.csr_matrix(fiber.laplacian())).tocsr()
    name = "funnel fiber commutator"
    return OperatorMatrix(
        entries, graph.m, True, graph.depth, graph.edge_mask(), name
    )


def fiber_operator(N1, fiber, side):
    """(1/m1) x Delta_2 on a side product"""
    kind = {"funnel": "half_ray_funnel", "cusp": "half_ray_cusp"}[side]
    graph = build_from_spec(GeometrySpec(kind, N1, fiber))
    ray = sparse.diags(fiber.m2 / graph.m[:: fiber.p])
    entries = sparse.kron(ray, sparse.csr_matrix(fiber.laplacian())).tocsr()
    return OperatorMatrix(
        entries, graph.m, True, graph.depth, graph.edge_mask(), "fiber part"
    )


def _difference_basis(fiber):
    """Integer vectors e_k - e_l within each component, spanning ker(Delta_2)^perp"""
    _, labels = fiber.components()
    columns = []
    for component in np.unique(labels):
        members = np.flatnonzero(labels == component)
        for first, second in zip(members[:-1], members[1:]):
            column = np.zeros(fiber.p)
            column[first], column[second] = 1.0, -1.0
            columns.append(column)
    return np.array(columns).T.reshape(fiber.p, len(columns))


def _ray_part(levels, side, m2):
    """Delta_ray / m2 and A on one ray

    On functions constant along the fiber the twisted product reduces to this
    pair, so the low energy block is read off the ray without the e^n fiber
    degrees that swamp it at vertex level.
    """
    ray = build_ray(levels, RAY_BLOCKS[side])
    return assemble_laplacian(ray) * (1.0 / m2), ray_conjugate_closed_form(levels, side)


def _funnel_closed_form(C, fiber, levels):
    """C - i[(1/m1) x Delta_2, A] - w(Delta_ray / m2 x 1), all on the full truncation"""
    laplacian, _ = _ray_part(levels, "funnel", fiber.m2)
    Y = sparse.kron(laplacian.entries, sparse.identity(fiber.p)).tocsr()
    identity = sparse.identity(Y.shape[0], format="csr")
    lower, upper = ALPHA / fiber.m2, BETA / fiber.m2
    w_ray = 0.5 * fiber.m2 * ((Y - lower * identity) @ (upper * identity - Y))
    closed = funnel_fiber_commutator(levels, fiber).entries + w_ray
    return C.like(C.entries - closed, name="funnel closed form residual")


def side_commutator_identity(H, bundle, fiber, section=None, tol=1.0e-9):
    """[H, iA] on a free twisted side product against w(H)

    Funnel and half-line: the residual [H, iA] - w(H), its compactness witness
    and the fitted constant C in |level n column| <= C e^-n (n + 1). On the
    funnel the interior deviation is taken after removing the closed form
    fiber commutator. Cusp: the high energy block of [H, iA], assembled so
    that it is exactly zero, and the low energy residual. With `section`, H
    and A live on an extended truncation and results are cropped back to
    `section` levels.
    """
    C_full = commutator(H, bundle.A)
    levels = int(H.depth.max()) + 1
    ray_length = section or levels
    C = _section(C_full, ray_length) if section is not None else C_full
    if section is not None:
        H = _section(H, section)
    if bundle.side_tag == "cusp":
        return _cusp_identity(C, H, bundle, fiber, levels, ray_length, tol)

    eig = eigendecompose(H)
    W = apply_function(eig, lambda x: w_function(x, fiber.m2, bundle.side_tag))
    residual = C - W
    frame = residual.unit_frame()
    interior = H.interior
    scale = spectral_norm(C)
    profile = _level_profile(frame, H.depth)
    envelope = np.exp(-np.arange(len(profile))) * (np.arange(len(profile)) + 1.0)
    fit = [
        value / bound
        for level, (value, bound) in enumerate(zip(profile, envelope))
        if 1 <= level < ray_length - EDGE_BAND and bound >= DECAY_FIT_FLOOR
    ]
    if bundle.side_tag == "funnel":
        closed = _section(_funnel_closed_form(C_full, fiber, levels), ray_length)
        deviation = _max_outside(closed.unit_frame(), H.depth, interior)
    else:
        deviation = _max_outside(frame, H.depth, interior)
    witness = compactness_witness(residual)
    return CommutatorReport(
        bundle.side_tag,
        C,
        residual,
        _support(frame, H.depth, interior, tol * scale),
        profile,
        deviation,
        C.hermiticity_defect(),
        {
            "norm": scale,
            "decay_constant": float(max(fit)) if fit else 0.0,
            "compact": witness.compact,
            "first_level_below": witness.first_level_below,
        },
    )


# pylint: disable=too-many-arguments,too-many-locals
def _cusp_identity(C, H, bundle, fiber, levels, ray_length, tol):
    A = bundle.A if bundle.A.dim == H.dim else _section(bundle.A, ray_length)
    B = sparse.kron(
        sparse.identity(ray_length), sparse.csr_matrix(_difference_basis(fiber))
    ).tocsr()
    D = sparse.diags(H.weights)
    AB = A.entries @ B
    BDA = B.T @ D @ A.entries
    he_block = 1j * (B.T @ D @ (H.entries @ AB) - BDA @ (H.entries @ B))
    he_max = float(abs(he_block).max()) if he_block.nnz else 0.0

    laplacian, A_ray = _ray_part(levels, "cusp", fiber.m2)
    C_le = commutator(laplacian, A_ray)
    if levels != ray_length:
        C_le, laplacian = _section(C_le, ray_length), _section(laplacian, ray_length)
    eig = eigendecompose(laplacian)
    W = apply_function(eig, lambda x: w_function(x, fiber.m2, "cusp"))
    residual = C_le - W
    frame = residual.unit_frame()
    interior = laplacian.interior
    scale = spectral_norm(C_le)
    return CommutatorReport(
        "cusp",
        C,
        residual,
        _support(frame, laplacian.depth, interior, tol * scale),
        _level_profile(frame, laplacian.depth),
        _max_outside(frame, laplacian.depth, interior),
        C_le.hermiticity_defect(),
        {"norm": scale, "he_block_max": he_max},
    )


def side_commutator_check(N1, side, fiber, pad=SECTION_PAD):
    """side_commutator_identity on a vertex-level side product, as a finite section"""
    kind = {"funnel": "half_ray_funnel", "cusp": "half_ray_cusp"}[side]
    graph = build_from_spec(GeometrySpec(kind, N1 + pad, fiber))
    assemble = assemble_A_funnel if side == "funnel" else assemble_A_cusp
    bundle = assemble(N1 + pad, fiber)
    return side_commutator_identity(
        assemble_laplacian(graph), bundle, fiber, section=N1
    )


def cusp_fiber_commutator_max(N1, fiber):
    """max |[(1/m1) x Delta_2, A_cusp]|, zero because A carries P_le"""
    X = fiber_operator(N1, fiber, "cusp")
    A = assemble_A_cusp(N1, fiber).A
    difference = X.entries @ A.entries - A.entries @ X.entries
    return float(abs(difference).max()) if difference.nnz else 0.0


def double_commutator(H, A):
    """[[H, iA], iA]"""
    C2 = commutator(commutator(H, A), A)
    return CommutatorReport(
        "double",
        C2,
        None,
        [],
        [],
        0.0,
        C2.hermiticity_defect(),
        {"norm": spectral_norm(C2)},
    )


def double_commutator_study(factory, truncations, pad=SECTION_PAD):
    """Norm of the finite section of [[H, iA], iA] across truncations"""
    norms, he_max = [], 0.0
    for N1 in truncations:
        model = factory(N1 + pad)
        C2 = commutator(commutator(model.H, model.A), model.A)
        keep = model.depth < N1
        cropped = _section(C2, N1)
        high = model.high_energy[keep]
        if high.any():
            block = cropped.tocsr()[high][:, high]
            he_max = max(he_max, float(abs(block).max()) if block.nnz else 0.0)
        norms.append(spectral_norm(cropped))
        logger.info("Double commutator at N1=%d: norm %.6g", N1, norms[-1])
    variation = relative_variation(norms[-2], norms[-1]) if len(norms) > 1 else 0.0
    return DoubleCommutatorStudy(
        list(truncations), norms, variation < BOUNDED_VARIATION, variation, he_max
    )


def localized_commutator(model, N1):
    """Finite section of i[H, A] with the cut leakage k P H (1 - P) H P put back

    Cropping i[H, A] loses a term -k (H_{N1 - 1, N1})^2 at the last kept level,
    k = 2 / (upper - lower). It is restored on low energy indices, where the
    section then agrees with w(H_N1) away from the junction.
    """
    C = _section(commutator(model.H, model.A), N1)
    lower, upper = model.band
    keep = model.depth < N1
    H = sparse.csr_matrix(model.H.entries)
    leak = H[keep][:, ~keep] @ H[~keep][:, keep]
    low = sparse.diags(model.low_energy_mask()[keep].astype(float))
    leak = 2.0 / (upper - lower) * (low @ leak @ low)
    return C.like(C.tocsr() + leak)


def _mourre_point(factory, window, c, tau_rel, N1):
    model = factory(N1 + SECTION_PAD)
    C = localized_commutator(model, N1)
    H = model.crop(N1).H
    eig = eigendecompose(H)
    vectors = eig.unit_vectors()[:, window.contains(eig.eigenvalues)]
    norm = spectral_norm(C)
    tau = tau_rel * norm
    if vectors.shape[1] == 0:
        return 0, 0, np.inf, tau
    frame = C.unit_frame()
    compressed = vectors.conj().T @ (frame @ vectors)
    compressed = 0.5 * (compressed + compressed.conj().T) - c * np.eye(vectors.shape[1])
    values = np.linalg.eigvalsh(compressed)
    count = int(np.sum(values < -tau))
    logger.info(
        "Mourre scan N1=%d: rank %d, %d negative, lowest %.6g",
        N1,
        vectors.shape[1],
        count,
        values[0],
    )
    return count, vectors.shape[1], float(values[0]), tau


def mourre_scan(
    factory,
    window,
    c=None,
    truncations=(100, 150, 200),
    tau_rel=TAU_RELATIVE,
    threads=1,
):
    """Count eigenvalues of E_I([H, iA] - c)E_I below -tau on each truncation

    Commutators are finite sections: built on N1 + SECTION_PAD levels, cropped,
    with the leakage across the cut restored. Eigenvalues between -tau and 0
    are below the resolution of a section and are not counted; tau is
    tau_rel times ||[H, iA]||. `c` defaults to 0.99 times the minimum of w over
    the window.
    """
    if not isinstance(window, SpectralWindow):
        window = SpectralWindow.from_value(window)
    lower, upper = band_edges(factory.geometry)
    out_of_band = not window.inside(lower, upper)
    if out_of_band:
        logger.warning("Window %s leaves the band [%g, %g]", window, lower, upper)
    c_theory = mourre_constant(window, lower, upper)
    if c is None:
        c = 0.99 * c_theory

    def point(N1):
        return _mourre_point(factory, window, c, tau_rel, N1)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        points = list(executor.map(point, truncations))

    counts = {int(N1): result[0] for N1, result in zip(truncations, points)}
    stabilized = len(points) > 1 and points[-1][0] == points[-2][0]
    return MourreScanResult(
        window.to_list(),
        c_theory,
        float(c),
        counts,
        {int(N1): result[1] for N1, result in zip(truncations, points)},
        {int(N1): result[2] for N1, result in zip(truncations, points)},
        {int(N1): result[3] for N1, result in zip(truncations, points)},
        bool(stabilized),
        out_of_band,
    )


def _aligned(first, second):
    """Masks selecting the (side, level, mode) indices two models share"""
    first_keys = list(zip(first.sides, first.depth, first.modes))
    second_keys = list(zip(second.sides, second.depth, second.modes))
    common = set(first_keys) & set(second_keys)
    return (
        np.array([k in common for k in first_keys]),
        np.array([k in common for k in second_keys]),
    )


def weighted_commutator_decay(
    free_factory, perturbed_factory, eps_exponent, truncations, samples=32, seed=0
):
    """||<Lambda>^eps [H_pert - H_free, iA]|| on finite sections, plus a sampled sup"""
    rng = np.random.default_rng(seed)
    norms, sampled = [], []
    for N1 in truncations:
        free = free_factory(N1 + SECTION_PAD)
        perturbed = perturbed_factory(N1 + SECTION_PAD)
        if free.dim != perturbed.dim:
            keep_free, keep_pert = _aligned(free, perturbed)
            free, perturbed = free.restrict(keep_free), perturbed.restrict(keep_pert)
        difference = perturbed.H.like(perturbed.H.entries - free.H.entries)
        X = _section(commutator(difference, free.A), N1)
        weight = np.where(X.depth >= 0, X.depth + 0.5, 0.0)
        weight = bracket(weight) ** eps_exponent
        weighted = X.like(sparse.diags(weight) @ X.entries)
        norms.append(spectral_norm(weighted))
        best = 0.0
        for _ in range(samples):
            f = rng.standard_normal(X.dim) + 1j * rng.standard_normal(X.dim)
            f /= np.linalg.norm(f)
            best = max(best, float(np.linalg.norm(weighted @ f)))
        sampled.append(best)
        logger.info("Commutator decay at N1=%d: norm %.6g", N1, norms[-1])
    variation = relative_variation(norms[-2], norms[-1]) if len(norms) > 1 else 0.0
    return DecayStudy(
        float(eps_exponent),
        list(truncations),
        norms,
        sampled,
        variation < BOUNDED_VARIATION,
        variation,
    )
