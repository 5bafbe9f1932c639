"""
Perturbations (mu, eps, V) of a model, their decay families and the decay
and radiality checks run before any perturbed computation
"""

# Standard Library
import logging
from dataclasses import dataclass, field

# Third Party
import numpy as np
from scipy import sparse

# Local
from .base import BaseResult
from .constants import H0_RATIO
from .exceptions import NonRadialPerturbationError, PerturbationError
from .graphs import RayBlock, build_from_spec, glued_layout
from .toolbox import bracket

logger = logging.getLogger("cuspfunnel")


class Profile(object):
    """A real function of (radius, fiber index, side), evaluated elementwise"""

    family = None
    radial = True

    def __init__(self, **params):
        self.params = params

    def __repr__(self):
        return f"<{self.__class__.__name__}: {self.params}>"  # pragma: no cover

    def __str__(self):
        return f"{self.family}({', '.join(f'{k}={v}' for k, v in self.params.items())})"

    def __call__(self, radius, fiber=None, side=None):
        radius = np.asarray(radius)
        if fiber is None:
            fiber = np.zeros(radius.shape, dtype=int)
        fiber = np.asarray(fiber)
        if side is None:
            side = np.full(radius.shape, "ray")
        side = np.broadcast_to(np.asarray(side), radius.shape)
        values = self.evaluate(radius, fiber, side)
        return np.broadcast_to(np.asarray(values, dtype=float), radius.shape).copy()

    def evaluate(self, radius, fiber, side):
        raise NotImplementedError

    def to_dict(self):
        return {"family": self.family, **self.params}

    def lower_bound(self):
        """A lower bound on the values, when the family has a closed form one"""
        return None


class Zero(Profile):
    family = "zero"

    def evaluate(self, radius, fiber, side):
        return 0.0


class Constant(Profile):
    family = "constant"

    def __init__(self, value=0.0):
        super().__init__(value=float(value))

    def evaluate(self, radius, fiber, side):
        return self.params["value"]

    def lower_bound(self):
        return self.params["value"]


class PowerDecay(Profile):
    """amplitude / <n>^exponent"""

    family = "power_decay"

    def __init__(self, amplitude=0.0, exponent=1.0):
        super().__init__(amplitude=float(amplitude), exponent=float(exponent))

    def evaluate(self, radius, fiber, side):
        return self.params["amplitude"] / bracket(radius) ** self.params["exponent"]

    def lower_bound(self):
        return min(self.params["amplitude"], 0.0)


class Alternating(Profile):
    """amplitude (-1)^n / <n>^exponent"""

    family = "alternating"

    def __init__(self, amplitude=0.0, exponent=1.0):
        super().__init__(amplitude=float(amplitude), exponent=float(exponent))

    def evaluate(self, radius, fiber, side):
        sign = np.where(np.asarray(radius) % 2 == 0, 1.0, -1.0)
        decay = bracket(radius) ** self.params["exponent"]
        return sign * self.params["amplitude"] / decay

    def lower_bound(self):
        return -abs(self.params["amplitude"])


class ExponentialDecay(Profile):
    """amplitude exp(-rate n)"""

    family = "exponential"

    def __init__(self, amplitude=0.0, rate=1.0):
        super().__init__(amplitude=float(amplitude), rate=float(rate))

    def evaluate(self, radius, fiber, side):
        return self.params["amplitude"] * np.exp(
            -self.params["rate"] * np.asarray(radius)
        )

    def lower_bound(self):
        return min(self.params["amplitude"], 0.0)


class FiberRamp(Profile):
    """amplitude k, deliberately not radial"""

    family = "fiber_ramp"
    radial = False

    def __init__(self, amplitude=1.0):
        super().__init__(amplitude=float(amplitude))

    def evaluate(self, radius, fiber, side):
        return self.params["amplitude"] * np.asarray(fiber, dtype=float)


class Table(Profile):
    """Inline values per level, optionally per side, with per-vertex overrides

    Levels past the end of a table read as 0.
    """

    family = "table"

    def __init__(self, levels=None, sides=None, entries=None):
        levels = [float(v) for v in (levels or [])]
        sides = {k: [float(v) for v in vals] for k, vals in (sides or {}).items()}
        entries = [dict(e) for e in (entries or [])]
        super().__init__(levels=levels, sides=sides, entries=entries)
        self.radial = not entries

    @staticmethod
    def _lookup(table, radius):
        values = np.zeros(radius.shape)
        if table:
            table = np.asarray(table)
            inside = radius < table.size
            values[inside] = table[radius[inside]]
        return values

    def evaluate(self, radius, fiber, side):
        radius = np.asarray(radius, dtype=int)
        values = self._lookup(self.params["levels"], radius)
        for name, table in self.params["sides"].items():
            mask = side == name
            values[mask] = self._lookup(table, radius[mask])
        for entry in self.params["entries"]:
            mask = (radius == entry["level"]) & (fiber == entry["fiber"])
            if "side" in entry:
                mask &= side == entry["side"]
            values[mask] = entry["value"]
        return values


FAMILIES = {
    cls.family: cls
    for cls in (
        Zero,
        Constant,
        PowerDecay,
        Alternating,
        ExponentialDecay,
        FiberRamp,
        Table,
    )
}


def profile_from_dict(data, kind=None):
    if data is None:
        return Zero()
    params = dict(data)
    family = params.pop("family", None)
    if family not in FAMILIES:
        raise PerturbationError(f"unknown perturbation family {family!r}", field=kind)
    try:
        return FAMILIES[family](**params)
    except TypeError as exc:
        raise PerturbationError(
            f"bad parameters for {family}: {exc}", field=kind
        ) from exc


def make_power_decay(kind, amplitude, exponent):
    """Radial map n -> amplitude / <n>^exponent"""
    if kind not in ("mu", "eps", "V"):
        raise PerturbationError(f"unknown perturbation kind {kind!r}")
    if kind in ("mu", "eps") and amplitude <= -1:
        raise PerturbationError(
            f"{kind} amplitude {amplitude} would make a weight nonpositive", field=kind
        )
    return PowerDecay(amplitude, exponent)


@dataclass(frozen=True)
class PerturbationSpec:
    """The triple (mu, eps, V) with its declared decay exponent"""

    mu: Profile = field(default_factory=Zero)
    eps: Profile = field(default_factory=Zero)
    V: Profile = field(default_factory=Zero)
    declared_eps_exponent: float = 0.5
    radial_on_cusp: bool = True

    def __post_init__(self):
        if not self.declared_eps_exponent > 0:
            raise PerturbationError(
                "the declared decay exponent must be positive",
                field="declared_eps_exponent",
            )
        for kind in ("mu", "eps"):
            bound = getattr(self, kind).lower_bound()
            if bound is not None and bound <= -1:
                raise PerturbationError(
                    f"{kind} reaches {bound}, weights would be nonpositive", field=kind
                )

    @classmethod
    def from_dict(cls, data):
        data = data or {}
        return cls(
            profile_from_dict(data.get("mu"), "mu"),
            profile_from_dict(data.get("eps"), "eps"),
            profile_from_dict(data.get("V"), "V"),
            float(data.get("declared_eps_exponent", 0.5)),
            bool(data.get("radial_on_cusp", True)),
        )

    def to_dict(self):
        return {
            "mu": self.mu.to_dict(),
            "eps": self.eps.to_dict(),
            "V": self.V.to_dict(),
            "declared_eps_exponent": self.declared_eps_exponent,
            "radial_on_cusp": self.radial_on_cusp,
        }

    @property
    def is_zero(self):
        return all(isinstance(p, Zero) for p in (self.mu, self.eps, self.V))

    def vertex_values(self, graph):
        """mu and V at every vertex of an assembled graph"""
        mu = self.mu(graph.radius, graph.fiber_index, graph.sides)
        if np.any(mu <= -1):
            bad = int(np.argmax(mu <= -1))
            raise PerturbationError(f"mu = {mu[bad]} at vertex {bad}", field="mu")
        V = self.V(graph.radius, graph.fiber_index, graph.sides)
        return mu, V

    def edge_values(self, graph):
        """eps on the stored edges of a graph, one value per undirected edge

        Returns (rows, cols, weights, eps) over the upper triangle of E.
        """
        upper = sparse.triu(graph.E, k=1).tocoo()
        rows, cols = upper.row, upper.col
        side = np.where(
            graph.sides[rows] == "compact", graph.sides[cols], graph.sides[rows]
        )
        eps = self.eps(
            np.minimum(graph.radius[rows], graph.radius[cols]),
            np.minimum(graph.fiber_index[rows], graph.fiber_index[cols]),
            side,
        )
        if np.any(eps <= -1):
            bad = int(np.argmax(eps <= -1))
            raise PerturbationError(
                f"eps = {eps[bad]} on edge ({rows[bad]}, {cols[bad]})", field="eps"
            )
        return rows, cols, upper.data, eps

    def perturbed_weights(self, graph):
        """(m_mu, E_eps) of the perturbed graph"""
        mu, _ = self.vertex_values(graph)
        rows, cols, weights, eps = self.edge_values(graph)
        weights = weights * (1.0 + eps)
        E_eps = sparse.coo_matrix(
            (
                np.concatenate([weights, weights]),
                (np.concatenate([rows, cols]), np.concatenate([cols, rows])),
            ),
            shape=graph.E.shape,
        ).tocsr()
        return graph.m * (1.0 + mu), E_eps

    def side_values(self, geometry, side):
        """Values on the level grid of one ray side

        Returns radius (N1,), mu and V (N1, p), eps on ray edges (N1 - 1, p) read
        at the lower level, and eps on fiber edges (N1, #fiber edges).
        """
        layout = glued_layout(geometry)
        block = layout.ray(side)
        if block is None:
            raise PerturbationError(f"geometry {geometry.kind} has no {side} side")
        N1, p = geometry.ray_length, geometry.fiber.p
        radius = block.labels(np.arange(N1))
        radius = np.abs(radius)
        grid_r = np.repeat(radius[:, None], p, axis=1)
        grid_k = np.repeat(np.arange(p)[None, :], N1, axis=0)
        values = {
            "radius": radius,
            "mu": self.mu(grid_r, grid_k, side),
            "V": self.V(grid_r, grid_k, side),
            "eps_ray": self.eps(grid_r[:-1], grid_k[:-1], side),
        }
        fiber_edges = geometry.fiber.edges
        if fiber_edges:
            low = np.array([min(i, j) for i, j, _ in fiber_edges])
            values["eps_fiber"] = self.eps(
                np.repeat(radius[:, None], low.size, axis=1),
                np.repeat(low[None, :], N1, axis=0),
                side,
            )
        else:
            values["eps_fiber"] = np.zeros((N1, 0))
        for kind in ("mu", "eps_ray", "eps_fiber"):
            if np.any(values[kind] <= -1):
                raise PerturbationError(
                    f"{kind} drops to -1 or below on the {side} side", field=kind
                )
        return values

    def radial_values(self, geometry, side):
        """Per-level values on a side, refusing data that varies along fibers"""
        values = self.side_values(geometry, side)
        radial = {"radius": values["radius"]}
        for kind in ("mu", "V", "eps_ray", "eps_fiber"):
            array = values[kind]
            if array.shape[1] == 0:
                radial[kind] = np.zeros(array.shape[0])
                continue
            if np.any(array != array[:, :1]):
                raise NonRadialPerturbationError(
                    f"{kind} varies along the fibers of the {side} side",
                    hint="fiber-average it with radialize()",
                )
            radial[kind] = array[:, 0].copy()
        return radial

    def compact_values(self, geometry):
        """mu, V on compact vertices and eps on compact and gluing edges"""
        layout = glued_layout(geometry)
        compact = layout.compact
        if compact is None:
            return None
        index = np.arange(compact.p)
        zeros = np.zeros(compact.p, dtype=int)
        mu = self.mu(zeros, index, "compact")
        V = self.V(zeros, index, "compact")
        eps_edges = np.array(
            [
                float(self.eps(np.array(0), np.array(min(i, j)), "compact"))
                for i, j, _ in compact.edges
            ]
        )
        eps_gluing = np.array(
            [
                float(
                    self.eps(
                        np.array(0), np.array(min(e.compact, e.fiber)), e.side
                    )
                )
                for e in layout.gluing
            ]
        )
        if np.any(mu <= -1) or np.any(eps_edges <= -1) or np.any(eps_gluing <= -1):
            raise PerturbationError("perturbation drops to -1 on the compact part")
        return {"mu": mu, "V": V, "eps_edges": eps_edges, "eps_gluing": eps_gluing}


@dataclass(repr=False)
class ConditionReport(BaseResult):
    """Outcome of one decay or radiality check"""

    name: str
    passed: bool
    sides: dict
    profiles: dict = field(default_factory=dict)
    tolerance: float = 0.0


def _tail_start(length):
    return length - max(1, length // 4)


def _ray_sides(geometry):
    return [b.side for b in glued_layout(geometry).blocks if isinstance(b, RayBlock)]


def _fiber_max(array):
    if array.shape[1] == 0:
        return np.zeros(array.shape[0])
    return np.max(np.abs(array), axis=1)


def check_H0(pert, geometry, ratio=H0_RATIO):
    """Fiber-max profiles of |V|, |mu| and |eps| must fall off over the last quarter

    Each profile passes when its sup over the last quarter of levels is at most
    `ratio` times its overall sup; identically zero profiles pass.
    """
    sides, profiles, passed = {}, {}, True
    for side in _ray_sides(geometry):
        values = pert.side_values(geometry, side)
        eps = _fiber_max(values["eps_fiber"])
        eps[:-1] = np.maximum(eps[:-1], _fiber_max(values["eps_ray"]))
        side_result = {}
        for kind, profile in (
            ("V", _fiber_max(values["V"])),
            ("mu", _fiber_max(values["mu"])),
            ("eps", eps),
        ):
            sup = float(profile.max())
            tail_sup = float(profile[_tail_start(profile.size) :].max())
            ok = tail_sup <= ratio * sup
            passed &= ok
            side_result[kind] = {"sup": sup, "tail_sup": tail_sup, "passed": ok}
            profiles[f"{side}_{kind}"] = profile
        sides[side] = side_result
    return ConditionReport("H0", bool(passed), sides, profiles, ratio)


def check_H123(pert, geometry, eps_exponent):
    """Weighted first differences <n>^(1+eps) |f(n) - f(n-1)| for V, mu and eps

    A profile passes when its finite-grid sup is attained before the last
    quarter of levels.
    """
    if not eps_exponent > 0:
        raise PerturbationError("eps_exponent must be positive", field="eps_exponent")
    sides, profiles, passed = {}, {}, True
    for side in _ray_sides(geometry):
        values = pert.side_values(geometry, side)
        radius = values["radius"]
        side_result = {}
        differences = {
            "V": (_fiber_max(np.diff(values["V"], axis=0)), radius[1:]),
            "mu": (_fiber_max(np.diff(values["mu"], axis=0)), radius[1:]),
            "eps": (_fiber_max(np.diff(values["eps_ray"], axis=0)), radius[1:-1]),
        }
        for kind, (difference, levels) in differences.items():
            profile = bracket(levels) ** (1.0 + eps_exponent) * difference
            if profile.size == 0 or profile.max() == 0:
                ok, where = True, 0
            else:
                where = int(np.argmax(profile))
                ok = where < _tail_start(profile.size)
            passed &= ok
            side_result[kind] = {
                "sup": float(profile.max()) if profile.size else 0.0,
                "argmax": where,
                "passed": ok,
            }
            profiles[f"{side}_{kind}"] = profile
        sides[side] = side_result
    return ConditionReport("H123", bool(passed), sides, profiles, eps_exponent)


def is_radial(pert, geometry, sides=None):
    """True iff mu, V and eps agree exactly along every fiber of the given sides"""
    for side in sides or _ray_sides(geometry):
        try:
            pert.radial_values(geometry, side)
        except NonRadialPerturbationError:
            return False
    return True


def require_radial_on_cusp(pert, geometry):
    if "cusp" not in _ray_sides(geometry):
        return
    pert.radial_values(geometry, "cusp")


def radialize(pert, geometry):
    """Replace every profile by its fiber average on each ray side

    Ray edges and fiber edges at a level share one averaged eps value; the
    compact part keeps its values as overrides.
    """
    tables = {"mu": {}, "V": {}, "eps": {}}
    for side in _ray_sides(geometry):
        values = pert.side_values(geometry, side)
        offset = int(values["radius"].min())
        pad = [0.0] * offset
        tables["mu"][side] = pad + values["mu"].mean(axis=1).tolist()
        tables["V"][side] = pad + values["V"].mean(axis=1).tolist()
        eps_sum = values["eps_fiber"].sum(axis=1)
        eps_count = np.full(eps_sum.size, values["eps_fiber"].shape[1], dtype=float)
        eps_sum[:-1] += values["eps_ray"].sum(axis=1)
        eps_count[:-1] += values["eps_ray"].shape[1]
        tables["eps"][side] = pad + (eps_sum / np.maximum(eps_count, 1)).tolist()

    overrides = {"mu": [], "V": [], "eps": []}
    compact = pert.compact_values(geometry)
    if compact is not None:
        for k, (mu, V) in enumerate(zip(compact["mu"], compact["V"])):
            overrides["mu"].append(
                {"side": "compact", "level": 0, "fiber": k, "value": mu}
            )
            overrides["V"].append(
                {"side": "compact", "level": 0, "fiber": k, "value": V}
            )
        constant_eps = compact["eps_edges"]
        if constant_eps.size:
            logger.info("Compact edge eps averaged to %g", constant_eps.mean())
            tables["eps"]["compact"] = [float(constant_eps.mean())]
    return PerturbationSpec(
        Table(sides=tables["mu"], entries=overrides["mu"]),
        Table(sides=tables["eps"]),
        Table(sides=tables["V"], entries=overrides["V"]),
        pert.declared_eps_exponent,
        True,
    )


def degree_deviation(pert, geometry):
    """Per-level fiber max of |deg of the perturbed graph - deg|, by ray side"""
    graph = build_from_spec(geometry)
    m_mu, E_eps = pert.perturbed_weights(graph)
    perturbed = np.asarray(E_eps.sum(axis=1)).ravel() / m_mu
    deviation = np.abs(perturbed - graph.degree())
    profiles = {}
    for side in _ray_sides(geometry):
        on_side = graph.sides == side
        profile = np.zeros(geometry.ray_length)
        np.maximum.at(profile, graph.depth[on_side], deviation[on_side])
        profiles[side] = profile
    return profiles
