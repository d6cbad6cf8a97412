import math

import numpy as np
import pytest

from nbody_majorants.errors import InvalidParametersError
from nbody_majorants.tableau import MAX_STAGES, RKTableau, gauss_tableau, midpoint_tableau


def test_midpoint():
    tab = gauss_tableau(1)
    assert np.array_equal(tab.A, [[0.5]])
    assert np.array_equal(tab.b, [1.0])
    assert tab.order == 2
    assert tab.name == "midpoint"
    assert np.array_equal(midpoint_tableau().A, tab.A)


def test_two_stage_nodes():
    tab = gauss_tableau(2)
    assert tab.order == 4
    assert np.allclose(tab.c, [0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6], atol=1e-16)
    assert np.allclose(tab.A, [[1 / 4, 1 / 4 - math.sqrt(3) / 6], [1 / 4 + math.sqrt(3) / 6, 1 / 4]], atol=1e-16)


@pytest.mark.parametrize("s", range(1, MAX_STAGES + 1))
def test_consistency(s):
    tab = gauss_tableau(s)
    assert tab.stages == s and tab.order == 2 * s
    assert np.allclose(tab.A.sum(axis=1), tab.c, atol=1e-14)
    assert tab.b.sum() == pytest.approx(1.0, abs=1e-14)
    assert tab.symplecticity_defect() < 1e-14
    assert np.all(tab.b > 0)
    assert tab.normb1 == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_quadrature_order(s):
    # b integrates polynomials up to degree 2s - 1 exactly
    tab = gauss_tableau(s)
    for k in range(2 * s):
        assert tab.b @ tab.c**k == pytest.approx(1 / (k + 1), abs=1e-14)


def test_collocation_conditions():
    tab = gauss_tableau(3)
    for k in range(1, 4):
        assert np.allclose(tab.A @ tab.c ** (k - 1), tab.c**k / k, atol=1e-14)


def test_invalid_stage_counts():
    with pytest.raises(InvalidParametersError):
        gauss_tableau(0)
    with pytest.raises(InvalidParametersError):
        gauss_tableau(MAX_STAGES + 1)


def test_shape_validation():
    with pytest.raises(InvalidParametersError):
        RKTableau(A=np.eye(2), b=[1.0], c=[0.5], order=2)
