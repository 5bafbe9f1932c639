"""
Weighted graphs: exponential rays, finite fibers, their products and the
glued cusp/funnel models
"""

# Standard Library
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

# Third Party
import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

# Local
from .constants import EDGE_BAND, KINDS, MAX_RAY_LENGTH, PRODUCTS
from .exceptions import GraphValidationError, WeightRangeError

logger = logging.getLogger("cuspfunnel")


@dataclass(frozen=True)
class FiniteGraphSpec:
    """A finite fiber graph with constant vertex measure m2"""

    p: int
    edges: tuple = ()
    m2: float = 1.0

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise GraphValidationError("a fiber needs at least one vertex", field="p")
        if not (np.isfinite(self.m2) and self.m2 > 0):
            raise GraphValidationError("m2 must be a positive constant", field="m2")
        edges = []
        seen = set()
        for edge in self.edges:
            try:
                i, j, weight = edge
            except (TypeError, ValueError) as exc:
                raise GraphValidationError(
                    f"edge {edge!r} is not (i, j, weight)", field="edges"
                ) from exc
            i, j, weight = int(i), int(j), float(weight)
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise GraphValidationError(
                    f"edge ({i}, {j}) leaves the vertex range 0..{self.p - 1}",
                    field="edges",
                )
            if i == j:
                raise GraphValidationError(f"self loop at {i}", field="edges")
            if not (np.isfinite(weight) and weight > 0):
                raise GraphValidationError(
                    f"edge ({i}, {j}) has nonpositive weight {weight}", field="edges"
                )
            key = (min(i, j), max(i, j))
            if key in seen:
                raise GraphValidationError(f"duplicate edge {key}", field="edges")
            seen.add(key)
            edges.append((i, j, weight))
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "m2", float(self.m2))
        object.__setattr__(self, "edges", tuple(edges))

    @classmethod
    def single(cls, m2=1.0):
        return cls(1, (), m2)

    @classmethod
    def path(cls, p, weight=1.0, m2=1.0):
        return cls(p, tuple((k, k + 1, weight) for k in range(p - 1)), m2)

    @classmethod
    def cycle(cls, p, weight=1.0, m2=1.0):
        if p < 3:
            raise GraphValidationError("a cycle needs at least three vertices")
        return cls(p, tuple((k, (k + 1) % p, weight) for k in range(p)), m2)

    @classmethod
    def edgeless(cls, p, m2=1.0):
        return cls(p, (), m2)

    @classmethod
    def from_dict(cls, data):
        """Build from a config entry, either explicit or a named preset"""
        preset = data.get("preset")
        m2 = data.get("m2", 1.0)
        if preset is None:
            return cls(data["p"], tuple(tuple(e) for e in data.get("edges", ())), m2)
        size = data.get("size")
        presets = {
            "single": lambda: cls.single(m2),
            "triangle": lambda: cls.cycle(3, m2=m2),
            "cycle": lambda: cls.cycle(size or 3, m2=m2),
            "path": lambda: cls.path(size or 2, m2=m2),
            "edgeless": lambda: cls.edgeless(size or 2, m2=m2),
        }
        if preset not in presets:
            raise GraphValidationError(
                f"unknown fiber preset {preset!r}", field="preset"
            )
        return presets[preset]()

    def to_dict(self):
        return {"p": self.p, "edges": [list(e) for e in self.edges], "m2": self.m2}

    def adjacency(self):
        """Symmetric edge weight matrix E2"""
        if not self.edges:
            return sparse.csr_matrix((self.p, self.p))
        rows, cols, weights = (np.array(c) for c in zip(*self.edges))
        matrix = sparse.coo_matrix(
            (
                np.concatenate([weights, weights]),
                (np.concatenate([rows, cols]), np.concatenate([cols, rows])),
            ),
            shape=(self.p, self.p),
        )
        return matrix.tocsr()

    def laplacian(self):
        """Dense fiber Laplacian (deg - E2) / m2"""
        adjacency = self.adjacency().toarray()
        return (np.diag(adjacency.sum(axis=1)) - adjacency) / self.m2

    def components(self):
        return connected_components(self.adjacency(), directed=False)

    @property
    def kernel_dimension(self):
        return self.components()[0]

    @property
    def is_connected(self):
        return self.kernel_dimension == 1


@dataclass(frozen=True)
class GluingEdge:
    """An edge between a level-0 ray vertex and a compact-part vertex"""

    side: str
    fiber: int
    compact: int
    weight: float = 1.0
    level: int = 0

    def __post_init__(self):
        if self.side not in ("funnel", "cusp"):
            raise GraphValidationError(
                f"gluing side must be funnel or cusp, not {self.side!r}", field="gluing"
            )
        if self.level != 0:
            raise GraphValidationError(
                f"gluing edge reaches ray level {self.level}; "
                "only level 0 may be glued",
                field="gluing",
            )
        if not (np.isfinite(self.weight) and self.weight > 0):
            raise GraphValidationError("gluing weight must be positive", field="gluing")

    @classmethod
    def from_dict(cls, data):
        return cls(
            data["side"],
            int(data["fiber"]),
            int(data["compact"]),
            float(data.get("weight", 1.0)),
            int(data.get("level", 0)),
        )

    def to_dict(self):
        return {
            "side": self.side,
            "fiber": self.fiber,
            "compact": self.compact,
            "weight": self.weight,
            "level": self.level,
        }


@dataclass(frozen=True)
class GeometrySpec:
    """Declarative description of a truncated model"""

    kind: str
    ray_length: int
    fiber: FiniteGraphSpec = field(default_factory=FiniteGraphSpec.single)
    product: str = "twisted"
    compact_part: Optional[FiniteGraphSpec] = None
    gluing: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GraphValidationError(
                f"unknown geometry kind {self.kind!r}", field="kind"
            )
        if self.product not in PRODUCTS:
            raise GraphValidationError(
                f"unknown product {self.product!r}", field="product"
            )
        if int(self.ray_length) != self.ray_length or self.ray_length < 2:
            raise GraphValidationError(
                "ray_length must be at least 2", field="ray_length"
            )
        object.__setattr__(self, "ray_length", int(self.ray_length))
        object.__setattr__(self, "gluing", tuple(self.gluing))
        if self.kind != "glued" and (self.compact_part is not None or self.gluing):
            raise GraphValidationError(
                "only glued geometries take a compact part", field="compact_part"
            )
        if self.gluing and self.compact_part is None:
            raise GraphValidationError(
                "gluing edges need a compact part", field="gluing"
            )
        for edge in self.gluing:
            if not 0 <= edge.fiber < self.fiber.p:
                raise GraphValidationError(
                    f"gluing fiber index {edge.fiber} out of range", field="gluing"
                )
            if not 0 <= edge.compact < self.compact_part.p:
                raise GraphValidationError(
                    f"gluing compact index {edge.compact} out of range", field="gluing"
                )

    @classmethod
    def default_glued(cls, ray_length, fiber=None, product="twisted"):
        """One compact vertex joined with weight 1 to both level-0 fibers"""
        fiber = fiber or FiniteGraphSpec.single()
        gluing = tuple(
            GluingEdge(side, k, 0, 1.0)
            for side in ("funnel", "cusp")
            for k in range(fiber.p)
        )
        return cls(
            "glued", ray_length, fiber, product, FiniteGraphSpec.single(1.0), gluing
        )

    @classmethod
    def from_dict(cls, data):
        kind = data["kind"]
        fiber = FiniteGraphSpec.from_dict(data.get("fiber", {"preset": "single"}))
        product = data.get("product", "twisted")
        if kind == "glued" and "compact_part" not in data:
            return cls.default_glued(data["ray_length"], fiber, product)
        compact = data.get("compact_part")
        return cls(
            kind,
            data["ray_length"],
            fiber,
            product,
            FiniteGraphSpec.from_dict(compact) if compact else None,
            tuple(GluingEdge.from_dict(e) for e in data.get("gluing", ())),
        )

    def to_dict(self):
        data = {
            "kind": self.kind,
            "ray_length": self.ray_length,
            "fiber": self.fiber.to_dict(),
            "product": self.product,
        }
        if self.kind == "glued":
            data["compact_part"] = (
                self.compact_part.to_dict() if self.compact_part else None
            )
            data["gluing"] = [e.to_dict() for e in self.gluing]
        return data

    def with_ray_length(self, ray_length):
        return replace(self, ray_length=ray_length)

    @property
    def sides(self):
        return {
            "halfline": ("halfline",),
            "half_ray_cusp": ("cusp",),
            "half_ray_funnel": ("funnel",),
            "glued": ("funnel", "cusp"),
            "z_model": ("funnel", "cusp"),
        }[self.kind]


@dataclass(frozen=True)
class RayBlock:
    """One truncated exponential ray: log m(j) = sign * j + log_scale at depth j"""

    side: str
    sign: int
    log_scale: float = 0.0
    radius_offset: int = 0
    label_sign: int = 1

    def log_m(self, depth):
        return self.sign * np.asarray(depth, dtype=float) + self.log_scale

    def log_E(self, depth):
        """Log weight of the edge between depth j and j + 1"""
        middle = (2.0 * np.asarray(depth, dtype=float) + 1.0) / 2.0
        return self.sign * middle + self.log_scale

    def labels(self, depth):
        return self.label_sign * (np.asarray(depth) + self.radius_offset)


@dataclass(frozen=True)
class GluedLayout:
    """Ordered blocks of a model plus its junction edges

    Both the vertex assembly and the unit-frame model read their structure
    from here, so the two can never disagree about scales or gluing.
    """

    blocks: tuple
    compact: Optional[FiniteGraphSpec]
    gluing: tuple
    fiber: FiniteGraphSpec
    product: str

    @property
    def rays(self):
        return tuple(b for b in self.blocks if isinstance(b, RayBlock))

    def ray(self, side):
        for block in self.rays:
            if block.side == side:
                return block
        return None


def glued_layout(spec):
    """Resolve a geometry into ray blocks, compact part and gluing"""
    fiber = spec.fiber
    if spec.kind == "halfline":
        blocks = (RayBlock("halfline", 0),)
        return GluedLayout(blocks, None, (), fiber, spec.product)
    if spec.kind == "half_ray_cusp":
        return GluedLayout((RayBlock("cusp", -1),), None, (), fiber, spec.product)
    if spec.kind == "half_ray_funnel":
        return GluedLayout((RayBlock("funnel", 1),), None, (), fiber, spec.product)
    if spec.kind == "glued":
        funnel, cusp = RayBlock("funnel", 1), RayBlock("cusp", -1)
        if spec.compact_part is None:
            return GluedLayout((funnel, cusp), None, (), fiber, spec.product)
        return GluedLayout(
            (funnel, spec.compact_part, cusp),
            spec.compact_part,
            spec.gluing,
            fiber,
            spec.product,
        )
    # the two-sided model: level 0 is the compact part, the sides are rescaled
    # rays so that m(n) = exp(-n) holds for every signed level n
    funnel = RayBlock("funnel", 1, 1.0, radius_offset=1, label_sign=-1)
    cusp = RayBlock("cusp", -1, -1.0, radius_offset=1)
    ray_factor = fiber.m2 if spec.product == "cartesian" else 1.0
    gluing = tuple(
        GluingEdge(side, k, k, np.exp(sign * 0.5) * ray_factor)
        for side, sign in (("funnel", 1), ("cusp", -1))
        for k in range(fiber.p)
    )
    return GluedLayout((funnel, fiber, cusp), fiber, gluing, fiber, spec.product)


class WeightedGraph(object):
    """A finite weighted graph (E, V, m) with optional product bookkeeping"""

    # pylint: disable=too-many-instance-attributes,too-many-arguments
    def __init__(
        self,
        m,
        E,
        labels=None,
        depth=None,
        sides=None,
        fiber=None,
        ray_length=None,
        blocks=None,
        name="graph",
    ):
        m = np.array(m, dtype=float)
        E = sparse.csr_matrix(E, dtype=float)
        if m.ndim != 1 or E.shape != (m.size, m.size):
            raise GraphValidationError(
                "vertex measure and edge weights disagree in size"
            )
        if not np.all(np.isfinite(m)) or np.any(m <= 0):
            raise GraphValidationError("vertex measure must be positive", field="m")
        E.eliminate_zeros()
        if np.any(E.diagonal() != 0):
            raise GraphValidationError(
                "edge weights must vanish on the diagonal", field="E"
            )
        if E.nnz and (np.any(E.data < 0) or not np.all(np.isfinite(E.data))):
            raise GraphValidationError("edge weights must be nonnegative", field="E")
        if E.nnz and (E != E.T).nnz:
            raise GraphValidationError("edge weights must be symmetric", field="E")

        size = m.size
        if labels is None:
            labels = np.column_stack([np.arange(size), np.zeros(size, dtype=int)])
        labels = np.asarray(labels, dtype=int)
        depth = labels[:, 0].copy() if depth is None else np.asarray(depth, dtype=int)
        sides = np.full(size, "ray") if sides is None else np.asarray(sides)

        for array in (m, labels, depth, sides):
            array.setflags(write=False)
        self.m = m
        self.E = E
        self.labels = labels
        self.depth = depth
        self.sides = sides
        self.fiber = fiber
        self.ray_length = ray_length
        self.blocks = dict(blocks or {})
        self.name = name

    def __repr__(self):
        return f"<WeightedGraph: {self.name} ({self.dim} vertices)>"  # pragma: no cover

    def __str__(self):
        return f"{self.name}: {self.dim} vertices, {self.edge_count} edges"

    @property
    def dim(self):
        return self.m.size

    @property
    def edge_count(self):
        return self.E.nnz // 2

    @property
    def total_measure(self):
        return float(self.m.sum())

    @property
    def radius(self):
        """The |x1| coordinate perturbations are evaluated at"""
        return np.abs(self.labels[:, 0])

    @property
    def fiber_index(self):
        return self.labels[:, 1]

    def degree(self):
        return np.asarray(self.E.sum(axis=1)).ravel() / self.m

    def is_symmetric(self):
        return (self.E != self.E.T).nnz == 0

    def edge_mask(self, band=EDGE_BAND):
        """Vertices within `band` levels of the truncation end"""
        if self.ray_length is None:
            return np.zeros(self.dim, dtype=bool)
        return (self.depth >= self.ray_length - band) & (self.depth >= 0)

    def block(self, name):
        return self.blocks[name]

    def induced(self, name):
        """The subgraph over one block, as a stand-alone graph"""
        index = self.blocks[name]
        return WeightedGraph(
            self.m[index],
            self.E[index, index],
            labels=self.labels[index],
            depth=self.depth[index],
            sides=self.sides[index],
            fiber=self.fiber,
            ray_length=self.ray_length if name != "compact" else None,
            blocks={name: slice(0, index.stop - index.start)},
            name=f"{self.name}[{name}]",
        )


def check_ray_length(N1, exponential=True):
    if int(N1) != N1 or N1 < 2:
        raise GraphValidationError(
            "a ray needs at least two levels", field="ray_length"
        )
    if exponential and N1 > MAX_RAY_LENGTH:
        raise WeightRangeError(
            f"ray length {N1} exceeds {MAX_RAY_LENGTH}",
            field="ray_length",
            hint="exp(+-n) leaves double range; use the unit-frame model instead",
        )


def _ray_factors(block, N1):
    check_ray_length(N1, exponential=block.sign != 0)
    depth = np.arange(N1)
    m1 = np.exp(block.log_m(depth))
    weights = np.exp(block.log_E(depth[:-1]))
    E1 = sparse.diags([weights, weights], [1, -1], shape=(N1, N1), format="csr")
    return m1, E1


def build_ray(N1, block):
    m1, E1 = _ray_factors(block, N1)
    depth = np.arange(N1)
    labels = np.column_stack([block.labels(depth), np.zeros(N1, dtype=int)])
    return WeightedGraph(
        m1,
        E1,
        labels=labels,
        depth=depth,
        sides=np.full(N1, block.side),
        ray_length=N1,
        blocks={block.side: slice(0, N1)},
        name=f"{block.side} ray",
    )


def build_cusp_ray(N1):
    """m(n) = exp(-n), E(n, n+1) = exp(-(2n+1)/2)"""
    return build_ray(N1, RayBlock("cusp", -1))


def build_funnel_ray(N1):
    """m(n) = exp(n), E(n, n+1) = exp((2n+1)/2)"""
    return build_ray(N1, RayBlock("funnel", 1))


def build_unit_ray(N1):
    return build_ray(N1, RayBlock("halfline", 0))


def _product(g1, g2, twisted):
    p = g2.p
    identity = sparse.identity(p, format="csr")
    E2 = g2.adjacency()
    if twisted:
        E = sparse.kron(g1.E, identity) + sparse.kron(sparse.identity(g1.dim), E2)
    else:
        E = g2.m2 * sparse.kron(g1.E, identity) + sparse.kron(sparse.diags(g1.m), E2)
    m = np.kron(g1.m, np.full(p, g2.m2))
    labels = np.column_stack(
        [np.repeat(g1.labels[:, 0], p), np.tile(np.arange(p), g1.dim)]
    )
    blocks = {
        name: slice(index.start * p, index.stop * p)
        for name, index in g1.blocks.items()
    }
    return WeightedGraph(
        m,
        E.tocsr(),
        labels=labels,
        depth=np.repeat(g1.depth, p),
        sides=np.repeat(g1.sides, p),
        fiber=g2,
        ray_length=g1.ray_length,
        blocks=blocks,
        name=f"{g1.name} x {p}-fiber",
    )


def twisted_product(g1, g2):
    """m = m1 m2, E = E1 x delta + delta x E2"""
    return _product(g1, g2, twisted=True)


def cartesian_product(g1, g2):
    """m = m1 m2, E = E1 m2 x delta + m1 delta x E2"""
    return _product(g1, g2, twisted=False)


def _compact_graph(compact):
    size = compact.p
    return WeightedGraph(
        np.full(size, compact.m2),
        compact.adjacency(),
        labels=np.column_stack([np.zeros(size, dtype=int), np.arange(size)]),
        depth=np.full(size, -1),
        sides=np.full(size, "compact"),
        blocks={"compact": slice(0, size)},
        name="compact part",
    )


def _assemble(spec):
    layout = glued_layout(spec)
    product = twisted_product if spec.product == "twisted" else cartesian_product
    parts = []
    for block in layout.blocks:
        if isinstance(block, RayBlock):
            parts.append(product(build_ray(spec.ray_length, block), spec.fiber))
        else:
            parts.append(_compact_graph(block))

    offsets = np.cumsum([0] + [g.dim for g in parts])
    blocks = {}
    for part, offset in zip(parts, offsets):
        for name, index in part.blocks.items():
            blocks[name] = slice(index.start + offset, index.stop + offset)

    E = sparse.block_diag([g.E for g in parts], format="lil")
    for edge in layout.gluing:
        ray = blocks[edge.side].start + edge.fiber
        compact = blocks["compact"].start + edge.compact
        E[ray, compact] += edge.weight
        E[compact, ray] += edge.weight

    graph = WeightedGraph(
        np.concatenate([g.m for g in parts]),
        E.tocsr(),
        labels=np.concatenate([g.labels for g in parts]),
        depth=np.concatenate([g.depth for g in parts]),
        sides=np.concatenate([g.sides for g in parts]),
        fiber=spec.fiber,
        ray_length=spec.ray_length,
        blocks=blocks,
        name=spec.kind,
    )
    logger.debug(
        "Assembled %s with %d vertices and %d edges",
        spec.kind,
        graph.dim,
        graph.edge_count,
    )
    return graph


def build_glued_model(spec):
    """Funnel product, compact part and cusp product joined at level 0"""
    if spec.kind != "glued":
        raise GraphValidationError(f"expected a glued geometry, got {spec.kind}")
    return _assemble(spec)


def build_z_model(spec):
    """Two-sided model with m(n) = exp(-n) for n in [-N1, N1]"""
    if spec.kind != "z_model":
        raise GraphValidationError(f"expected a z_model geometry, got {spec.kind}")
    return _assemble(spec)


def build_from_spec(spec):
    return _assemble(spec)
