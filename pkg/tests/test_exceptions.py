# Future
from __future__ import division, print_function, unicode_literals

# Standard Library
from dataclasses import dataclass

# Third Party
import numpy as np

# CuspFunnel
from cuspfunnel.base import BaseResult
from cuspfunnel.exceptions import (
    CuspFunnelError,
    DenseCapExceededError,
    NonRadialPerturbationError,
    PerturbationError,
)


@dataclass(repr=False)
class Sample(BaseResult):
    _skip = ("matrix",)

    name: str
    value: float
    matrix: np.ndarray


class TestErrors:
    def test_field_and_hint(self):
        error = DenseCapExceededError("too big", field="max_dim", hint="lower N1")
        assert str(error) == "max_dim: too big (lower N1)"
        assert error.field == "max_dim"
        assert error.hint == "lower N1"

    def test_plain(self):
        assert str(CuspFunnelError("plain")) == "plain"

    def test_hierarchy(self):
        assert issubclass(NonRadialPerturbationError, PerturbationError)
        assert issubclass(PerturbationError, CuspFunnelError)


class TestBaseResult:
    def test_to_dict_skips(self):
        sample = Sample("sample", np.float64(1.5), np.eye(2))
        assert sample.to_dict() == {"name": "sample", "value": 1.5}

    def test_str(self):
        assert str(Sample("sample", 1.5, np.eye(2))) == "name=sample, value=1.5"
