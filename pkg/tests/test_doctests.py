import doctest
import importlib

import pytest

MODULES = ["stream", "multivariate", "oracles", "ramping", "minibatch", "nuisance",
           "inference", "simgen", "batched", "cli"]


@pytest.mark.parametrize("name", MODULES)
def test_module_doctests(name):
    mod = importlib.import_module(f"laserlrv.{name}")
    result = doctest.testmod(mod)
    assert result.failed == 0
