# Future
from __future__ import division, print_function, unicode_literals

# Third Party
import numpy as np
import pytest

# CuspFunnel
from cuspfunnel.constants import EDGE_BAND
from cuspfunnel.exceptions import GraphValidationError, WeightRangeError
from cuspfunnel.graphs import (
    FiniteGraphSpec,
    GeometrySpec,
    GluingEdge,
    build_cusp_ray,
    build_from_spec,
    build_funnel_ray,
    build_unit_ray,
    glued_layout,
    twisted_product,
)


class TestFiniteGraphSpec:
    def test_triangle_laplacian(self, triangle):
        values = np.linalg.eigvalsh(triangle.laplacian())
        assert np.allclose(values, [0, 3, 3])

    def test_m2_scales_laplacian(self):
        fiber = FiniteGraphSpec.cycle(3, m2=2.0)
        assert np.allclose(np.linalg.eigvalsh(fiber.laplacian()), [0, 1.5, 1.5])

    def test_kernel_dimension(self, triangle):
        assert triangle.kernel_dimension == 1
        assert triangle.is_connected
        assert FiniteGraphSpec.edgeless(3).kernel_dimension == 3

    @pytest.mark.parametrize(
        "edges",
        [
            ((0, 0, 1.0),),
            ((0, 3, 1.0),),
            ((0, 1, 0.0),),
            ((0, 1, 1.0), (1, 0, 2.0)),
            ((0, 1),),
        ],
    )
    def test_bad_edges(self, edges):
        with pytest.raises(GraphValidationError):
            FiniteGraphSpec(3, edges)

    def test_bad_m2(self):
        with pytest.raises(GraphValidationError):
            FiniteGraphSpec(2, (), -1.0)

    def test_presets(self):
        triangle = FiniteGraphSpec.from_dict({"preset": "triangle"})
        assert triangle == FiniteGraphSpec.cycle(3)
        assert FiniteGraphSpec.from_dict({"preset": "path", "size": 4}).p == 4
        with pytest.raises(GraphValidationError):
            FiniteGraphSpec.from_dict({"preset": "hexagon"})

    def test_round_trip(self, triangle):
        assert FiniteGraphSpec.from_dict(triangle.to_dict()) == triangle


class TestRays:
    def test_cusp_weights(self):
        ray = build_cusp_ray(6)
        n = np.arange(6)
        assert np.allclose(ray.m, np.exp(-n))
        assert np.allclose(ray.E.diagonal(1), np.exp(-(2 * n[:-1] + 1) / 2))

    def test_funnel_weights(self):
        ray = build_funnel_ray(6)
        n = np.arange(6)
        assert np.allclose(ray.m, np.exp(n))
        assert np.allclose(ray.E.diagonal(1), np.exp((2 * n[:-1] + 1) / 2))

    def test_range_limit(self):
        with pytest.raises(WeightRangeError):
            build_cusp_ray(701)

    def test_unit_ray_has_no_limit(self):
        ray = build_unit_ray(2000)
        assert ray.dim == 2000
        assert np.all(ray.m == 1)

    def test_edge_mask(self):
        ray = build_unit_ray(10)
        edge = np.flatnonzero(ray.edge_mask())
        assert edge.tolist() == list(range(10 - EDGE_BAND, 10))

    def test_degree(self):
        ray = build_cusp_ray(4)
        # deg(0) = E(0, 1) / m(0)
        assert ray.degree()[0] == pytest.approx(np.exp(-0.5))


class TestProducts:
    def test_twisted_weights(self, triangle):
        graph = twisted_product(build_cusp_ray(5), triangle)
        assert graph.dim == 15
        assert np.allclose(graph.m, np.repeat(np.exp(-np.arange(5)), 3))
        # fiber edges carry the fiber weight at every level
        assert graph.E[12, 13] == 1.0
        assert graph.E[0, 3] == pytest.approx(np.exp(-0.5))
        assert graph.is_symmetric()

    def test_cartesian_scales_fiber_edges(self, triangle):
        spec = GeometrySpec("half_ray_cusp", 5, triangle, product="cartesian")
        graph = build_from_spec(spec)
        assert graph.E[12, 13] == pytest.approx(np.exp(-4))

    def test_labels(self, triangle):
        graph = build_from_spec(GeometrySpec("half_ray_funnel", 4, triangle))
        assert graph.labels[5].tolist() == [1, 2]
        assert graph.depth[5] == 1


class TestGlued:
    def test_default_layout(self, glued_graph, glued_spec):
        assert glued_graph.dim == 2 * glued_spec.ray_length + 1
        compact = glued_graph.blocks["compact"]
        assert compact == slice(40, 41)
        assert glued_graph.depth[40] == -1
        assert glued_graph.sides[40] == "compact"
        # compact vertex joined to both level-0 vertices
        assert glued_graph.E[0, 40] == 1.0
        assert glued_graph.E[41, 40] == 1.0
        assert glued_graph.edge_count == 2 * 39 + 2

    def test_induced_block(self, glued_graph):
        funnel = glued_graph.induced("funnel")
        assert funnel.dim == 40
        assert np.allclose(funnel.m, np.exp(np.arange(40)))

    def test_z_model_weights(self, triangle):
        graph = build_from_spec(GeometrySpec("z_model", 8, triangle))
        signed = graph.labels[:, 0]
        assert np.allclose(graph.m, np.exp(-signed))
        assert sorted(set(signed.tolist())) == list(range(-8, 9))

    def test_z_model_junction_weights(self):
        graph = build_from_spec(GeometrySpec("z_model", 4))
        signed = graph.labels[:, 0]
        zero = int(np.flatnonzero(signed == 0)[0])
        minus = int(np.flatnonzero(signed == -1)[0])
        plus = int(np.flatnonzero(signed == 1)[0])
        # E(n, n+1) = exp(-(2n + 1)/2) across level 0
        assert graph.E[minus, zero] == pytest.approx(np.exp(0.5))
        assert graph.E[zero, plus] == pytest.approx(np.exp(-0.5))

    def test_layout_shared(self, glued_spec):
        layout = glued_layout(glued_spec)
        assert [r.side for r in layout.rays] == ["funnel", "cusp"]
        assert layout.ray("halfline") is None

    def test_compact_part_needs_glued(self, triangle):
        with pytest.raises(GraphValidationError):
            GeometrySpec(
                "half_ray_cusp", 5, triangle, compact_part=FiniteGraphSpec.single()
            )

    def test_gluing_level(self):
        with pytest.raises(GraphValidationError):
            GluingEdge("cusp", 0, 0, 1.0, level=2)

    def test_unknown_kind(self):
        with pytest.raises(GraphValidationError):
            GeometrySpec("torus", 5)

    def test_from_dict(self):
        spec = GeometrySpec.from_dict(
            {"kind": "glued", "ray_length": 12, "fiber": {"preset": "triangle"}}
        )
        assert spec == GeometrySpec.default_glued(12, FiniteGraphSpec.cycle(3))
        assert GeometrySpec.from_dict(spec.to_dict()) == spec
