import numpy as np
import pytest

import noether_lcs as nl


@pytest.fixture
def line_space():
    return nl.make_space(1, [1.0], 1)


@pytest.fixture
def sup_space3():
    return nl.make_space(3, [1.0, 1.0, 1.0], 3)


@pytest.fixture
def free_particle():
    return nl.compile_field("v1^2/2", 1)


@pytest.fixture
def oscillator():
    return nl.compile_field("(v1^2 - x1^2)/2", 1)


def curve_of(space, grid, f):
    return nl.Curve.from_function(space, grid, f)
