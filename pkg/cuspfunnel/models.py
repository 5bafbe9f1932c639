"""
Unit-frame models: every ray side written as one tridiagonal chain per fiber
mode, assembled from log-weights so truncations are not limited by the range
of exp(+-n)
"""

# Standard Library
import logging

# Third Party
import numpy as np
from scipy import sparse

# Local
from .constants import ALPHA, BETA, EDGE_BAND, HE_CUTOFF
from .graphs import RayBlock, glued_layout
from .operators import OperatorMatrix, fiber_modes
from .perturbations import PerturbationSpec
from .toolbox import bracket

logger = logging.getLogger("cuspfunnel")


def band_edges(geometry):
    """Thresholds of the essential spectrum for a geometry"""
    scale = 1.0 / geometry.fiber.m2 if geometry.product == "twisted" else 1.0
    if geometry.kind == "halfline":
        return 0.0, 4.0 * scale
    return ALPHA * scale, BETA * scale


class SpectralModel(object):
    """Hamiltonian and conjugate operator on unit weights, with index tags

    `depth` is the ray level (-1 on the compact part), `modes` the fiber mode
    (-1 on the compact part) and `high_energy` flags cusp modes outside
    ker(Delta_2), on which the conjugate operator vanishes.
    """

    # pylint: disable=too-many-arguments
    def __init__(self, H, A, sides, depth, modes, high_energy, geometry, dropped=0):
        self.H = H
        self.A = A
        self.sides = np.asarray(sides)
        self.depth = np.asarray(depth)
        self.modes = np.asarray(modes)
        self.high_energy = np.asarray(high_energy, dtype=bool)
        self.geometry = geometry
        self.dropped = dropped

    def __repr__(self):
        return f"<SpectralModel: {self}>"  # pragma: no cover

    def __str__(self):
        return f"{self.geometry.kind} model, N1={self.ray_length}, dim={self.dim}"

    @property
    def dim(self):
        return self.depth.size

    @property
    def ray_length(self):
        return self.geometry.ray_length

    @property
    def band(self):
        return band_edges(self.geometry)

    def _operators(self, index, ray_length):
        edge = (self.depth[index] >= ray_length - EDGE_BAND) & (self.depth[index] >= 0)
        ops = []
        for op in (self.H, self.A):
            ops.append(
                OperatorMatrix(
                    op.entries[index][:, index],
                    op.weights[index],
                    op.hermitian,
                    self.depth[index],
                    edge,
                    op.name,
                )
            )
        return ops

    def restrict(self, mask):
        """The model on the indices selected by a boolean mask"""
        index = np.flatnonzero(np.asarray(mask, dtype=bool))
        H, A = self._operators(index, self.ray_length)
        return SpectralModel(
            H,
            A,
            self.sides[index],
            self.depth[index],
            self.modes[index],
            self.high_energy[index],
            self.geometry,
            self.dropped,
        )

    def crop(self, ray_length):
        """Finite section onto the first `ray_length` levels of every ray"""
        index = np.flatnonzero(self.depth < ray_length)
        H, A = self._operators(index, ray_length)
        return SpectralModel(
            H,
            A,
            self.sides[index],
            self.depth[index],
            self.modes[index],
            self.high_energy[index],
            self.geometry.with_ray_length(ray_length),
            self.dropped,
        )

    def low_energy_mask(self):
        return ~self.high_energy

    def lambda_weight(self, s):
        """<Lambda>^-s per index: <n + 1/2>^-s on rays, 1 on the compact part"""
        levels = np.where(self.depth >= 0, self.depth + 0.5, 0.0)
        return bracket(levels) ** (-s)

    def junction_vector(self):
        """Unit vector at the first compact vertex, or at level 0 of the first ray"""
        vector = np.zeros(self.dim)
        compact = np.flatnonzero(self.depth < 0)
        if compact.size:
            vector[compact[0]] = 1.0
        else:
            vector[np.flatnonzero((self.depth == 0) & (self.modes == 0))[0]] = 1.0
        return vector


class ModelFactory(object):
    """Builds the model of one geometry at any truncation"""

    def __init__(self, geometry, perturbation=None, he_cutoff=HE_CUTOFF):
        self.geometry = geometry
        self.perturbation = perturbation
        self.he_cutoff = he_cutoff

    def __repr__(self):
        return f"<ModelFactory: {self.geometry.kind}>"  # pragma: no cover

    def __call__(self, ray_length):
        return build_model(
            self.geometry.with_ray_length(ray_length), self.perturbation, self.he_cutoff
        )


class _Triplets(object):
    """COO accumulator"""

    def __init__(self):
        self.rows, self.cols, self.values = [], [], []

    def add(self, rows, cols, values):
        rows, cols = np.asarray(rows), np.asarray(cols)
        values = np.broadcast_to(values, rows.shape)
        keep = (rows >= 0) & (cols >= 0)
        self.rows.append(rows[keep])
        self.cols.append(cols[keep])
        self.values.append(values[keep])

    def add_symmetric(self, rows, cols, values):
        self.add(rows, cols, values)
        self.add(cols, rows, np.conj(values))

    def matrix(self, size, dtype=float):
        if not self.rows:
            return sparse.csr_matrix((size, size), dtype=dtype)
        return sparse.coo_matrix(
            (
                np.concatenate(self.values).astype(dtype),
                (np.concatenate(self.rows), np.concatenate(self.cols)),
            ),
            shape=(size, size),
        ).tocsr()


def _ray_chain(block, values, ray_length, twisted, m2):
    """Radial chain data of one side: off-diagonals, diagonal and log fiber scale"""
    n = np.arange(ray_length)
    log_m = block.log_m(n)
    log_E = block.log_E(n[:-1])
    c_ray = 1.0 / m2 if twisted else 1.0
    one_mu = 1.0 + values["mu"]
    one_eps = 1.0 + values["eps_ray"]
    off = (
        np.exp(log_E - 0.5 * (log_m[:-1] + log_m[1:]))
        * c_ray
        * one_eps
        / np.sqrt(one_mu[:-1] * one_mu[1:])
    )
    degree = np.zeros(ray_length)
    degree[:-1] += np.exp(log_E - log_m[:-1]) * one_eps
    degree[1:] += np.exp(log_E - log_m[1:]) * one_eps
    degree *= c_ray / one_mu
    log_fiber = np.log1p(values["eps_fiber"]) - np.log1p(values["mu"])
    if twisted:
        log_fiber = log_fiber - log_m
    return off, degree + values["V"], log_fiber, log_m


# pylint: disable=too-many-locals,too-many-statements
def build_model(geometry, perturbation=None, he_cutoff=HE_CUTOFF):
    """Assemble the unit-frame model of a geometry

    Perturbations must be radial on every ray side. Cusp levels whose fiber
    energy exceeds `he_cutoff` are dropped for high energy modes.
    """
    pert = perturbation or PerturbationSpec()
    layout = glued_layout(geometry)
    modes = fiber_modes(geometry.fiber)
    p, N1 = modes.p, geometry.ray_length
    twisted = geometry.product == "twisted"
    m2 = geometry.fiber.m2
    log_cutoff = np.log(he_cutoff)

    # index bookkeeping, blocks in layout order
    offset = 0
    index_maps, tags = {}, []
    chains = {}
    for block in layout.blocks:
        if isinstance(block, RayBlock):
            values = pert.radial_values(geometry, block.side)
            off, diagonal, log_fiber, log_m = _ray_chain(block, values, N1, twisted, m2)
            keep = np.ones((N1, p), dtype=bool)
            if block.side == "cusp":
                for j in range(modes.kernel_dim, p):
                    keep[:, j] = np.log(modes.values[j]) + log_fiber <= log_cutoff
            index = np.full((N1, p), -1)
            index[keep] = offset + np.arange(keep.sum())
            offset += int(keep.sum())
            index_maps[block.side] = index
            chains[block.side] = (off, diagonal, log_fiber, log_m, values, keep)
            depth, mode = np.nonzero(keep)
            high = np.zeros(depth.size, dtype=bool)
            if block.side == "cusp":
                high = mode >= modes.kernel_dim
            tags.append((np.full(depth.size, block.side), depth, mode, high))
        else:
            index_maps["compact"] = offset + np.arange(block.p)
            offset += block.p
            tags.append(
                (
                    np.full(block.p, "compact"),
                    np.full(block.p, -1),
                    np.full(block.p, -1),
                    np.zeros(block.p, dtype=bool),
                )
            )
    size = offset

    H, A = _Triplets(), _Triplets()
    dropped = 0
    n = np.arange(N1)
    for side, (off, diagonal, log_fiber, log_m, values, keep) in chains.items():
        index = index_maps[side]
        dropped += int((~keep).sum())
        for j in range(p):
            column = index[:, j]
            fiber_term = np.zeros(N1)
            if j >= modes.kernel_dim:
                inside = column >= 0
                fiber_term[inside] = modes.values[j] * np.exp(log_fiber[inside])
            H.add(column, column, diagonal + fiber_term)
            H.add_symmetric(column[:-1], column[1:], -off)
            if side == "cusp" and j >= modes.kernel_dim:
                continue
            # A_N: (n, n+1) entry -(i/2)(n + 1/2), (n+1, n) entry (i/2)(n + 1/2)
            A.add_symmetric(column[:-1], column[1:], -0.5j * (n[:-1] + 0.5))
    if dropped:
        logger.debug("Dropped %d high energy cusp levels above %g", dropped, he_cutoff)

    compact = layout.compact
    if compact is not None:
        cvalues = pert.compact_values(geometry)
        m_c = compact.m2 * (1.0 + cvalues["mu"])
        cindex = index_maps["compact"]
        H.add(cindex, cindex, cvalues["V"])
        for (i, j, weight), eps in zip(compact.edges, cvalues["eps_edges"]):
            weight = weight * (1.0 + eps)
            pair = [cindex[i], cindex[j]]
            H.add(pair, pair, [weight / m_c[i], weight / m_c[j]])
            H.add_symmetric(
                [cindex[i]], [cindex[j]], -weight / np.sqrt(m_c[i] * m_c[j])
            )
        for edge, eps in zip(layout.gluing, cvalues["eps_gluing"]):
            weight = edge.weight * (1.0 + eps)
            _, _, _, log_m, values, keep = chains[edge.side]
            m_0 = np.exp(log_m[0]) * m2 * (1.0 + values["mu"][0])
            phi = modes.vectors[edge.fiber]
            level0 = index_maps[edge.side][0]
            c = cindex[edge.compact]
            H.add([c], [c], weight / m_c[edge.compact])
            block = weight / m_0 * np.outer(phi, phi)
            rows, cols = np.meshgrid(level0, level0, indexing="ij")
            H.add(rows.ravel(), cols.ravel(), block.ravel())
            H.add_symmetric(
                level0, np.full(p, c), -weight / np.sqrt(m_c[edge.compact] * m_0) * phi
            )

    sides = np.concatenate([t[0] for t in tags])
    depth = np.concatenate([t[1] for t in tags])
    mode = np.concatenate([t[2] for t in tags])
    high = np.concatenate([t[3] for t in tags])
    ones = np.ones(size)
    edge = (depth >= N1 - EDGE_BAND) & (depth >= 0)
    H_op = OperatorMatrix(
        H.matrix(size), ones, True, depth, edge, f"H on {geometry.kind}"
    )
    A_op = OperatorMatrix(
        A.matrix(size, complex), ones, True, depth, edge, f"A on {geometry.kind}"
    )
    logger.debug("Built %s model with N1=%d, dimension %d", geometry.kind, N1, size)
    return SpectralModel(H_op, A_op, sides, depth, mode, high, geometry, dropped)
