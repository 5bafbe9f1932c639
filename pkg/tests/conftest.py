# Future
from __future__ import division, print_function, unicode_literals

# Third Party
import pytest

# CuspFunnel
from cuspfunnel.graphs import FiniteGraphSpec, GeometrySpec, build_from_spec
from cuspfunnel.models import ModelFactory
from cuspfunnel.perturbations import PerturbationSpec, make_power_decay

# pylint: disable=redefined-outer-name


@pytest.fixture(scope="session")
def single():
    return FiniteGraphSpec.single()


@pytest.fixture(scope="session")
def triangle():
    return FiniteGraphSpec.cycle(3)


@pytest.fixture(scope="session")
def glued_spec():
    return GeometrySpec.default_glued(40)


@pytest.fixture(scope="session")
def glued_graph(glued_spec):
    return build_from_spec(glued_spec)


@pytest.fixture(scope="session")
def cusp_triangle_spec(triangle):
    return GeometrySpec("half_ray_cusp", 30, triangle)


@pytest.fixture(scope="session")
def funnel_triangle_spec(triangle):
    return GeometrySpec("half_ray_funnel", 30, triangle)


@pytest.fixture(scope="session")
def decaying_perturbation():
    """mu = 0.5/<n>, eps = 0.3/<n>, V = 0.3/<n>, all radial"""
    return PerturbationSpec(
        make_power_decay("mu", 0.5, 1.0),
        make_power_decay("eps", 0.3, 1.0),
        make_power_decay("V", 0.3, 1.0),
    )


@pytest.fixture(scope="session")
def glued_factory():
    return ModelFactory(GeometrySpec.default_glued(100))


@pytest.fixture(scope="session")
def model_factory():
    """Build models of any geometry, cached for the session"""
    cache = {}

    def make_model(geometry, perturbation=None, ray_length=None):
        key = (geometry, perturbation, ray_length)
        if key not in cache:
            factory = ModelFactory(geometry, perturbation)
            cache[key] = factory(ray_length or geometry.ray_length)
        return cache[key]

    return make_model
