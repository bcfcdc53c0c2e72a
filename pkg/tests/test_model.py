import numpy as np
import pytest

from thermoplate import (ModelParams, coefficient_matrices, physical_from_state,
                         state_from_physical, symbol_matrix)


def test_coefficient_matrices_exact_entries():
    lap, damp = coefficient_matrices()
    expected_lap = 0.5 * np.array([[0, -2, -2], [2, 0, -2], [1, 1, 2.0]])
    expected_damp = 0.5 * np.array([[1, 1, 0], [1, 1, 0], [0, 0, 0.0]])
    np.testing.assert_array_equal(lap, expected_lap)
    np.testing.assert_array_equal(damp, expected_damp)
    assert lap[2, 2] == 1.0
    assert damp[0, 0] == 0.5
    assert np.trace(lap) == 1.0
    assert np.trace(damp) == 1.0
    assert np.linalg.matrix_rank(damp) == 1


def test_coefficient_matrices_return_copies():
    lap, _ = coefficient_matrices()
    lap[0, 0] = 99.0
    assert coefficient_matrices()[0][0, 0] == 0.0


def test_symbol_matrix_zero_radius():
    assert np.all(symbol_matrix(0.0, ModelParams(0.5)) == 0.0)
    # friction survives at the zero mode: r^0 = 1 convention
    _, damp = coefficient_matrices()
    np.testing.assert_array_equal(symbol_matrix(0.0, ModelParams(0.0)), damp)


def test_symbol_matrix_balanced_case():
    expected = 0.5 * np.array([[1, -1, -2], [3, 1, -2], [1, 1, 2.0]])
    np.testing.assert_allclose(symbol_matrix(1.0, ModelParams(1.0)), expected,
                               rtol=0, atol=0)


def test_symbol_matrix_is_sum_of_scaled_blocks():
    lap, damp = coefficient_matrices()
    for sigma in (0.0, 0.3, 1.0, 1.7, 2.0):
        for r in (0.05, 1.0, 7.5):
            A = symbol_matrix(r, ModelParams(sigma))
            np.testing.assert_allclose(A, r * r * lap + r ** (2 * sigma) * damp,
                                       rtol=1e-15)


def test_symbol_matrix_homogeneity():
    lap, damp = coefficient_matrices()
    rng = np.random.default_rng(11)
    for _ in range(50):
        r = float(rng.uniform(0.01, 5.0))
        c = float(rng.uniform(0.1, 10.0))
        sigma = float(rng.uniform(0.0, 2.0))
        A = symbol_matrix(c * r, ModelParams(sigma))
        expected = (c * r) ** 2 * lap + (c * r) ** (2 * sigma) * damp
        np.testing.assert_allclose(A, expected, rtol=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(sigma=-0.1)
    with pytest.raises(ValueError):
        ModelParams(sigma=2.5)
    with pytest.raises(ValueError):
        ModelParams(sigma=1.0, dim=0)


def test_state_from_physical_examples():
    np.testing.assert_array_equal(
        state_from_physical(np.array([1.0, 0.0, 0.0]), 1.0), [1.0, -1.0, 0.0])
    np.testing.assert_array_equal(
        state_from_physical(np.array([0.0, 1.0, 2.0]), 3.7), [1.0, 1.0, 2.0])
    np.testing.assert_array_equal(
        state_from_physical(np.array([2.0, 3.0, -1.0]), 2.0), [11.0, -5.0, -1.0])


def test_physical_from_state_examples():
    np.testing.assert_array_equal(
        physical_from_state(np.array([1.0, -1.0, 0.0]), 1.0), [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(
        physical_from_state(np.array([1.0, 1.0, 2.0]), 5.0), [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(
        physical_from_state(np.array([11.0, -5.0, -1.0]), 2.0), [2.0, 3.0, -1.0])


def test_physical_from_state_rejects_zero_mode():
    with pytest.raises(ValueError):
        physical_from_state(np.array([1.0, 1.0, 1.0]), 0.0)


def test_round_trip_random():
    rng = np.random.default_rng(5)
    for _ in range(200):
        phys = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        r = float(np.exp(rng.uniform(np.log(1e-3), np.log(1e3))))
        back = physical_from_state(state_from_physical(phys, r), r)
        np.testing.assert_allclose(back, phys, rtol=1e-12, atol=1e-12)


def test_transforms_broadcast_over_grids():
    rng = np.random.default_rng(6)
    phys = rng.standard_normal((3, 4, 4)) + 1j * rng.standard_normal((3, 4, 4))
    r = rng.uniform(0.1, 2.0, (4, 4))
    w = state_from_physical(phys, r)
    assert w.shape == (3, 4, 4)
    np.testing.assert_allclose(physical_from_state(w, r), phys, rtol=1e-12)
