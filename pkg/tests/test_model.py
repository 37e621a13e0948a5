import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from risklqr import (CostSpec, DimensionError, Gaussian, GaussianMixture, InvalidInput,
                     SystemModel, spectral_radius, validate)
from risklqr.experiments import double_integrator
from risklqr.model import psd_sqrt


def scalar(a, b, q=1.0, r=1.0):
    return SystemModel([[a]], [[b]], [0.0], 5), CostSpec([[q]], [[r]])


def test_scalar_with_input_is_stabilizable_and_detectable():
    rep = validate(*scalar(2.0, 1.0))
    assert rep.stabilizable and rep.detectable and rep.psd_ok and rep.ok


def test_unstable_mode_without_input_is_not_stabilizable():
    rep = validate(*scalar(2.0, 0.0))
    assert not rep.stabilizable
    assert any("stabilizable" in m for m in rep.messages)


def test_stable_mode_without_input_is_stabilizable():
    assert validate(*scalar(0.5, 0.0)).stabilizable


def test_undetectable_unstable_mode():
    rep = validate(*scalar(2.0, 1.0, q=0.0))
    assert rep.stabilizable and not rep.detectable


def test_double_integrator_assumptions_hold():
    A, B = double_integrator(0.5)
    rep = validate(SystemModel(A, B, np.zeros(4), 10),
                   CostSpec(np.diag([1, 0.1, 2, 0.1]), np.eye(2)))
    assert rep.stabilizable and rep.detectable and rep.psd_ok


def test_psd_flags():
    model, _ = scalar(0.5, 1.0)
    assert not validate(model, CostSpec([[-1.0]], [[1.0]])).psd_ok
    assert not validate(model, CostSpec([[1.0]], [[0.0]])).psd_ok
    # tiny but positive input penalty is admissible
    assert validate(model, CostSpec([[1.0]], [[1e-8]])).psd_ok


def test_validate_is_deterministic():
    A, B = double_integrator(0.5)
    args = (SystemModel(A, B, np.zeros(4)), CostSpec(np.diag([1, 0.1, 2, 0.1]), np.eye(2)))
    assert validate(*args) == validate(*args)


def test_dimension_and_finiteness_errors():
    with pytest.raises(DimensionError):
        SystemModel([[1, 0]], [[1]], [0])
    with pytest.raises(DimensionError):
        SystemModel(np.eye(2), [[1]], [0, 0])
    with pytest.raises(DimensionError):
        SystemModel(np.eye(2), [[1], [0]], [0])
    with pytest.raises(InvalidInput):
        SystemModel([[np.nan]], [[1]], [0])
    with pytest.raises(InvalidInput):
        SystemModel([[1]], [[1]], [0], N=0)
    model = SystemModel(np.eye(2), [[1], [0]], [0, 0])
    with pytest.raises(DimensionError):
        validate(model, CostSpec(np.eye(3), [[1]]))
    with pytest.raises(DimensionError):
        validate(model, CostSpec(np.eye(2), np.eye(2)))


def test_cost_defaults_and_symmetry():
    cost = CostSpec([[2.0, 1.0], [1.0, 3.0]], [[1.0]])
    assert np.array_equal(cost.Qc, cost.Q)
    with pytest.raises(InvalidInput):
        CostSpec([[1.0, 2.0], [0.0, 1.0]], [[1.0]])
    with pytest.raises(InvalidInput):
        CostSpec([[1.0]], [[1.0]], epsilon=-1.0)


def test_noise_spec_invariants():
    with pytest.raises(InvalidInput):
        Gaussian([0.0], [[-1.0]])
    with pytest.raises(InvalidInput):
        GaussianMixture([0.5, 0.6], [Gaussian([0], [[1]]), Gaussian([1], [[1]])])


def test_psd_sqrt_clamps_roundoff_and_rejects_indefinite():
    M = np.array([[1.0, 1.0], [1.0, 1.0]]) - 1e-12 * np.eye(2)
    R = psd_sqrt(M)
    np.testing.assert_allclose(R @ R, M, atol=1e-6)
    with pytest.raises(InvalidInput):
        psd_sqrt(np.diag([1.0, -1e-6]))


@pytest.mark.parametrize("M, expected", [
    (np.eye(3), 1.0),
    ([[0.0, 1.0], [0.0, 0.0]], 0.0),
    ([[0.5, 0.2], [0.0, 0.9]], 0.9),
])
def test_spectral_radius_examples(M, expected):
    assert spectral_radius(M) == pytest.approx(expected, abs=1e-12)


def test_spectral_radius_rejects_non_square():
    with pytest.raises(DimensionError):
        spectral_radius(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 3), elements=st.floats(-10, 10)),
       st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_spectral_radius_scales_with_abs(M, c):
    assert spectral_radius(c * M) == pytest.approx(abs(c) * spectral_radius(M),
                                                   rel=1e-9, abs=1e-9)
