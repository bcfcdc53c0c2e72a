import numpy as np
import pytest

from thermoplate import (CubicCoeffs, ModelParams, branch_constants,
                         branch_sweep, char_poly, eigen_decomp, eigenvalues,
                         eigenvalues_grid, smoothing_exponent, solve_cubic,
                         solve_cubic_many, spectral_gap_scan, symbol_matrix)

# real roots of the two universal cubics, frozen from a bisection oracle
OFFSET_REAL_ROOT = 0.56984029099805333
CRITICAL_REAL_ROOT = 0.43015970900194689


def test_char_poly_balanced():
    c = char_poly(1.0, ModelParams(1.0))
    assert (c.c2, c.c1, c.c0) == (-2.0, 3.0, -1.0)


def test_char_poly_degenerate_origin():
    c = char_poly(0.0, ModelParams(0.5))
    assert (c.c2, c.c1, c.c0) == (0.0, 0.0, 0.0)


def test_char_poly_friction_at_two():
    c = char_poly(2.0, ModelParams(0.0))
    assert (c.c2, c.c1, c.c0) == (-5.0, 36.0, -64.0)


def test_solve_cubic_factored():
    roots = np.sort(solve_cubic(CubicCoeffs(-6.0, 11.0, -6.0)).values.real)
    np.testing.assert_allclose(roots, [1.0, 2.0, 3.0], rtol=1e-12)


def test_solve_cubic_triple_zero():
    roots = solve_cubic(CubicCoeffs(0.0, 0.0, 0.0)).values
    np.testing.assert_allclose(roots, 0.0, atol=1e-14)


def test_solve_cubic_matches_critical_constants():
    roots = solve_cubic(CubicCoeffs(-2.0, 3.0, -1.0)).values
    expected = branch_constants("critical").values
    for e in expected:
        assert np.min(np.abs(roots - e)) < 1e-12


def test_solve_cubic_recovers_random_roots():
    rng = np.random.default_rng(17)
    for trial in range(1000):
        if trial % 2 == 0:
            roots = rng.uniform(-10, 10, 3).astype(complex)
        else:
            a = rng.uniform(-10, 10)
            b = complex(rng.uniform(-10, 10), rng.uniform(0.1, 10))
            roots = np.array([a, b, np.conj(b)])
        c2 = -np.sum(roots).real
        c1 = (roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2]).real
        c0 = -(roots[0] * roots[1] * roots[2]).real
        got = solve_cubic_many(np.array(c2), np.array(c1), np.array(c0))
        scale = 1.0 + np.max(np.abs(roots))
        for e in roots:
            assert np.min(np.abs(got - e)) <= 1e-10 * scale


def test_conjugate_pairing_is_exact():
    got = solve_cubic(CubicCoeffs(-2.0, 3.0, -1.0)).values
    ims = np.sort(got.imag)
    assert ims[0] == -ims[2]
    assert np.sum(np.abs(got.imag) < 1e-12) == 1


def test_vieta_identities_random():
    rng = np.random.default_rng(23)
    r = np.exp(rng.uniform(np.log(0.01), np.log(100.0), 1000))
    sig = rng.uniform(0.0, 2.0, 1000)
    for ri, si in zip(r, sig):
        lam = eigenvalues_grid(np.array([ri]), ModelParams(float(si)))[0]
        rd = ri ** (2 * si)
        tr, pair, det = rd + ri ** 2, 2 * ri ** 4 + ri ** 2 * rd, ri ** 6
        assert abs(np.sum(lam) - tr) <= 1e-10 * abs(tr)
        psum = lam[0] * lam[1] + lam[0] * lam[2] + lam[1] * lam[2]
        assert abs(psum - pair) <= 1e-10 * abs(pair)
        assert abs(np.prod(lam) - det) <= 1e-10 * abs(det)


def test_abscissa_positive_for_positive_radius():
    rng = np.random.default_rng(29)
    for _ in range(300):
        r = float(np.exp(rng.uniform(np.log(1e-2), np.log(1e2))))
        sigma = float(rng.uniform(0.0, 2.0))
        lam = eigenvalues_grid(np.array([r]), ModelParams(sigma))[0]
        assert np.min(lam.real) > 0.0


@pytest.mark.parametrize("kind,real_root", [("offset", OFFSET_REAL_ROOT),
                                            ("critical", CRITICAL_REAL_ROOT)])
def test_branch_constants(kind, real_root):
    vals = branch_constants(kind).values
    coeffs = {"offset": (-1.0, 2.0, -1.0), "critical": (-2.0, 3.0, -1.0)}[kind]
    for v in vals:
        res = v ** 3 + coeffs[0] * v ** 2 + coeffs[1] * v + coeffs[2]
        assert abs(res) <= 1e-12
        assert v.real > 0.0
    assert len({np.round(v, 12) for v in vals}) == 3
    real = [v for v in vals if abs(v.imag) < 1e-12]
    assert len(real) == 1
    assert abs(real[0].real - real_root) < 1e-13
    pair = sorted((v for v in vals if abs(v.imag) >= 1e-12), key=lambda z: z.imag)
    assert pair[0] == np.conj(pair[1])


def test_branch_constants_unknown_kind():
    with pytest.raises(ValueError):
        branch_constants("bogus")


def test_eigenvalues_balanced_scaling_law():
    ys = branch_constants("critical").values
    for r in (0.01, 1.0, 100.0):
        lam = eigenvalues(r, ModelParams(1.0)).values
        np.testing.assert_allclose(lam, ys * r * r, rtol=1e-10)


def test_eigenvalues_at_origin():
    lam = eigenvalues(0.0, ModelParams(1.3)).values
    np.testing.assert_allclose(lam, 0.0, atol=1e-14)
    lam0 = np.sort(eigenvalues(0.0, ModelParams(0.0)).values.real)
    np.testing.assert_allclose(lam0, [0.0, 0.0, 1.0], atol=1e-14)


def test_branch_labels_by_zone():
    assert eigenvalues(0.01, ModelParams(0.5)).branch_labels == ("plate", "heat", "damping")
    assert eigenvalues(100.0, ModelParams(0.5)).branch_labels == ("offset_1", "offset_2", "offset_3")
    assert eigenvalues(0.01, ModelParams(1.5)).branch_labels == ("offset_1", "offset_2", "offset_3")
    assert eigenvalues(100.0, ModelParams(1.5)).branch_labels == ("plate", "heat", "damping")
    assert eigenvalues(2.0, ModelParams(1.0)).branch_labels[0] == "critical_1"


def test_bounded_zone_continuity_tracking():
    # walking into the bounded zone must agree with the sweep ordering
    params = ModelParams(0.3)
    grid = np.geomspace(0.1, 5.0, 120)
    sweep = branch_sweep(params, grid)
    lam = eigenvalues(5.0, params).values
    np.testing.assert_allclose(lam, sweep[:, -1], rtol=1e-9, atol=1e-12)


def test_branch_sweep_is_continuous():
    for sigma in (0.0, 0.5, 1.5, 2.0):
        grid = np.geomspace(0.02, 50.0, 400)
        sweep = branch_sweep(ModelParams(sigma), grid)
        jumps = np.abs(np.diff(sweep, axis=1))
        scale = 1.0 + np.abs(sweep[:, :-1])
        # local Lipschitz bound estimated from the grid resolution
        assert np.all(jumps <= 0.5 * scale)


def test_spectral_gap_scan_positive():
    for sigma in (0.0, 0.5, 1.5, 2.0):
        gap = spectral_gap_scan(ModelParams(sigma), 0.1, 10.0, 200)
        assert gap > 0.0


def test_spectral_gap_scan_single_point():
    got = spectral_gap_scan(ModelParams(1.0), 1.0, 1.0, 1)
    expected = np.min(branch_constants("critical").values.real)
    assert abs(got - expected) < 1e-12


def test_spectral_gap_scan_validation():
    with pytest.raises(ValueError):
        spectral_gap_scan(ModelParams(0.5), 0.1, 10.0, 1)
    with pytest.raises(ValueError):
        spectral_gap_scan(ModelParams(0.5), 10.0, 0.1, 100)


@pytest.mark.parametrize("sigma,expected", [(0.0, 2.0), (0.5, 2.0), (1.0, 2.0),
                                            (1.5, 1.0), (2.0, 0.0)])
def test_smoothing_exponent(sigma, expected):
    slope = smoothing_exponent(ModelParams(sigma), 10.0, 1000.0)
    assert abs(slope - expected) <= 0.1


def test_smoothing_exponent_range_check():
    with pytest.raises(ValueError):
        smoothing_exponent(ModelParams(1.0), 0.5, 10.0)


def test_eigen_decomp_invariants():
    rng = np.random.default_rng(31)
    for _ in range(100):
        r = float(np.exp(rng.uniform(np.log(0.05), np.log(20.0))))
        sigma = float(rng.uniform(0.0, 2.0))
        params = ModelParams(sigma)
        dec = eigen_decomp(r, params)
        if dec.degenerate:
            continue
        A = symbol_matrix(r, params).astype(complex)
        lam = dec.lambdas.values
        res = np.linalg.norm(A @ dec.V - dec.V * lam[None, :])
        assert res <= 1e-9 * max(np.linalg.norm(A), 1e-30)
        assert np.linalg.norm(dec.V @ dec.V_inv - np.eye(3)) <= 1e-9


def test_eigen_decomp_flags_degenerate_origin():
    assert eigen_decomp(0.0, ModelParams(1.5)).degenerate
