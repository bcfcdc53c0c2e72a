import numpy as np
import pytest

from thermoplate import (Grid, GridPropagator, ModelParams, PropagatorOptions,
                         complex_heat_kernel, evolve_grid, expm_oracle,
                         gaussian_heat_evolution, physical_from_state,
                         propagate_mode, propagator_matrix, scalar_route,
                         sigma1_gaussian_state, state_from_physical,
                         symbol_matrix, trustworthy_horizon)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(dim=4, points_per_axis=16, box_length=1.0)
    with pytest.raises(ValueError):
        Grid(dim=1, points_per_axis=12, box_length=1.0)
    with pytest.raises(ValueError):
        Grid(dim=1, points_per_axis=4, box_length=1.0)
    with pytest.raises(ValueError):
        Grid(dim=1, points_per_axis=16, box_length=-1.0)


def test_grid_lattice():
    g = Grid(dim=1, points_per_axis=16, box_length=8.0)
    assert g.nyquist_radius == np.pi * 16 / 8.0
    assert g.min_radius == 2 * np.pi / 8.0
    r = g.radii()
    assert r.shape == (16,)
    assert r[0] == 0.0
    assert np.max(r) == pytest.approx(g.nyquist_radius)


def test_propagate_identity_at_time_zero():
    w0 = np.array([1.0 + 2.0j, -0.5, 0.25j])
    out = propagate_mode(w0, 3.0, ModelParams(1.2), 0.0)
    np.testing.assert_array_equal(out, w0)


def test_propagate_zero_mode():
    w0 = np.array([0.3, 0.4, 0.5], dtype=complex)
    out = propagate_mode(w0, 0.0, ModelParams(1.3), 2.0)
    np.testing.assert_allclose(out, w0, atol=1e-14)
    # friction: the (1,1,0) direction decays like e^-t, theta is untouched
    out = propagate_mode(np.array([1.0, 1.0, 0.0]), 0.0, ModelParams(0.0), 0.5)
    np.testing.assert_allclose(out, np.exp(-0.5) * np.array([1.0, 1.0, 0.0]),
                               rtol=1e-12)


def test_expm_oracle_trivial_cases():
    np.testing.assert_allclose(expm_oracle(np.zeros((3, 3)), 1.7), np.eye(3),
                               atol=1e-15)
    D = np.diag([0.5, -0.25, 2.0])
    np.testing.assert_allclose(expm_oracle(D, 0.9),
                               np.diag(np.exp(-0.9 * np.diag(D))), rtol=1e-14)


def test_eigen_route_matches_oracle():
    rng = np.random.default_rng(41)
    checked = 0
    while checked < 150:
        r = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
        sigma = float(rng.uniform(0.0, 2.0))
        t = float(rng.uniform(0.0, 2.0))
        params = ModelParams(sigma)
        try:
            P = propagator_matrix(r, params, t,
                                  PropagatorOptions(method="eigen"))
        except ArithmeticError:
            continue
        Q = expm_oracle(symbol_matrix(r, params), t)
        assert np.max(np.abs(P - Q)) <= 1e-10
        checked += 1


def test_semigroup_property():
    rng = np.random.default_rng(43)
    for _ in range(100):
        r = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
        sigma = float(rng.uniform(0.0, 2.0))
        t1, t2 = rng.uniform(0.0, 1.5, 2)
        params = ModelParams(sigma)
        w0 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        once = propagate_mode(w0, r, params, float(t1 + t2))
        twice = propagate_mode(propagate_mode(w0, r, params, float(t1)),
                               r, params, float(t2))
        assert np.max(np.abs(once - twice)) <= 1e-9 * (1 + np.max(np.abs(w0)))


def test_series_route_agrees_with_eigen():
    params = ModelParams(0.6)
    for r in (0.3, 2.0):
        P = propagator_matrix(r, params, 1.1, PropagatorOptions(method="eigen"))
        Q = propagator_matrix(r, params, 1.1, PropagatorOptions(method="series"))
        assert np.max(np.abs(P - Q)) <= 1e-11


def test_evolve_grid_zero_data():
    g = Grid(1, 64, 10.0)
    z = np.zeros(g.shape)
    for f in evolve_grid((z, z, z), g, ModelParams(1.0), 3.0):
        np.testing.assert_array_equal(f, 0.0)


def test_evolve_grid_single_mode_oracle():
    g = Grid(1, 64, 10.0)
    x = g.axis_coords()
    u0 = np.cos(2 * np.pi * x / g.box_length)
    z = np.zeros_like(x)
    params = ModelParams(0.5)
    u, ut, th = evolve_grid((u0, z, z), g, params, 0.7)
    r1 = g.min_radius
    w0 = state_from_physical(np.array([0.5 + 0j, 0.0, 0.0]), r1)
    wt = propagate_mode(w0, r1, params, 0.7)
    phys = physical_from_state(wt, r1)
    u_pred = 2 * np.real(phys[0] * np.exp(2j * np.pi * x / g.box_length))
    ut_pred = 2 * np.real(phys[1] * np.exp(2j * np.pi * x / g.box_length))
    np.testing.assert_allclose(u, u_pred, atol=1e-13)
    np.testing.assert_allclose(ut, ut_pred, atol=1e-13)


def test_evolve_grid_realness_and_conjugate_symmetry():
    g = Grid(1, 128, 20.0)
    rng = np.random.default_rng(47)
    x = g.axis_coords()
    env = np.exp(-(x - 10.0) ** 2)
    fields = tuple(env * rng.standard_normal(g.shape) for _ in range(3))
    params = ModelParams(0.8)
    hats = np.stack([g.forward_fft(f) for f in fields])
    w0 = state_from_physical(hats, g.radii())
    wt = GridPropagator(g, params).propagate_hat(w0, 0.9)
    flipped = wt[:, (-np.arange(g.points_per_axis)) % g.points_per_axis]
    np.testing.assert_allclose(flipped, np.conj(wt), atol=1e-12)
    for f in evolve_grid(fields, g, params, 0.9):
        assert np.isrealobj(f)


def test_evolve_grid_2d():
    g = Grid(2, 16, 12.0)
    ax = g.axis_coords()
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    u1 = np.exp(-((X - 6) ** 2 + (Y - 6) ** 2) / 2)
    z = np.zeros(g.shape)
    u, ut, th = evolve_grid((z, u1, z), g, ModelParams(1.0), 0.5)
    assert u.shape == g.shape
    assert np.all(np.isfinite(u))
    # means of the state components are conserved for sigma > 0
    assert abs(np.mean(ut) - np.mean(u1)) < 1e-13


def test_zero_mode_means():
    g = Grid(1, 256, 40.0)
    x = g.axis_coords()
    gau = np.exp(-(x - 20.0) ** 2 / 2)
    fields = (0.2 * gau, 0.7 * gau, -0.4 * gau)
    t = 1.0
    for sigma in (0.4, 1.0, 2.0):
        u, ut, th = evolve_grid(fields, g, ModelParams(sigma), t)
        assert abs(np.mean(ut) - np.mean(fields[1])) <= 1e-12
        assert abs(np.mean(th) - np.mean(fields[2])) <= 1e-12
    u, ut, th = evolve_grid(fields, g, ModelParams(0.0), t)
    assert abs(np.mean(th) - np.mean(fields[2])) <= 1e-12
    expected = np.exp(-t) * np.mean(fields[1])
    assert abs(np.mean(ut) - expected) <= 1e-8 * abs(expected)


def test_complex_heat_kernel_values():
    val = complex_heat_kernel(0.7, 1.3, 0.0, dim=1)
    assert val == pytest.approx((4 * np.pi * 0.7 * 1.3) ** -0.5)
    from thermoplate import branch_constants
    y4 = [v for v in branch_constants("critical").values if abs(v.imag) < 1e-12][0]
    k = complex_heat_kernel(y4, 1.0, np.linspace(0, 3, 7), dim=1)
    assert np.all(np.abs(k.imag) < 1e-15)
    assert np.all(k.real > 0)
    with pytest.raises(ValueError):
        complex_heat_kernel(-0.1 + 1j, 1.0, 0.0)
    with pytest.raises(ValueError):
        complex_heat_kernel(1.0, 0.0, 0.0)


def test_complex_heat_kernel_mass():
    x = np.linspace(-60, 60, 4001)
    k = complex_heat_kernel(1.3, 2.0, x, dim=1)
    mass = np.trapz(k.real, x)
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_gaussian_heat_evolution_matches_fft():
    g = Grid(1, 512, 100.0)
    x = g.axis_coords()
    width, y, t = 1.5, 0.4 + 1.1j, 2.0
    f0 = np.exp(-(x - 50.0) ** 2 / (2 * width ** 2))
    fh = g.forward_fft(f0) * np.exp(-y * g.radii() ** 2 * t)
    via_fft = g.inverse_fft(fh)
    closed = gaussian_heat_evolution(1.0, width, y, t, np.abs(x - 50.0), dim=1)
    np.testing.assert_allclose(via_fft, closed, atol=1e-12)


def test_sigma1_state_oracle_matches_fft_evolution():
    g = Grid(1, 1024, 200.0)
    x = g.axis_coords()
    gau = np.exp(-(x - 100.0) ** 2 / 2)
    z = np.zeros_like(x)
    params = ModelParams(1.0)
    for t in (1.0, 5.0):
        u, ut, th = evolve_grid((z, gau, 0.5 * gau), g, params, t)
        r2 = g.radii() ** 2
        lap_u = np.real(g.inverse_fft(r2 * g.forward_fft(u)))
        state = np.stack([ut + lap_u, ut - lap_u, th])
        oracle = sigma1_gaussian_state(g, (1.0, 1.0, 0.5), 1.0, t)
        rel = np.sqrt(np.sum((state - oracle) ** 2) / np.sum(oracle ** 2))
        assert rel <= 1e-6


def test_scalar_route_initial_value():
    params = ModelParams(0.8)
    u0h = 0.3 + 0.1j
    out = scalar_route(u0h, -0.2 + 0.4j, 0.5 - 0.3j, 1.7, params, 0.0)
    assert abs(out - u0h) <= 1e-12
    assert scalar_route(0.0, 0.0, 0.0, 1.0, params, 2.0) == 0.0


def test_scalar_route_matches_matrix_route():
    rng = np.random.default_rng(53)
    for _ in range(60):
        r = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
        sigma = float(rng.uniform(0.0, 2.0))
        t = float(rng.uniform(0.0, 3.0))
        params = ModelParams(sigma)
        vals = rng.standard_normal(6)
        u0h, u1h, th0h = (complex(vals[0], vals[1]), complex(vals[2], vals[3]),
                          complex(vals[4], vals[5]))
        try:
            us = scalar_route(u0h, u1h, th0h, r, params, t)
        except ArithmeticError:
            continue
        w0 = state_from_physical(np.array([u0h, u1h, th0h]), r)
        wt = propagate_mode(w0, r, params, t)
        um = complex(physical_from_state(wt, r)[0])
        assert abs(us - um) <= 1e-8 * (1 + abs(um))


def test_scalar_route_degenerate_detection():
    with pytest.raises(ArithmeticError, match="degenerate"):
        scalar_route(1.0, 0.0, 0.0, 1.0, ModelParams(1.0), 1.0,
                     degeneracy_tol=10.0)
    with pytest.raises(ValueError):
        scalar_route(1.0, 0.0, 0.0, 0.0, ModelParams(1.0), 1.0)


def test_trustworthy_horizon():
    g = Grid(1, 256, 200.0)
    h1 = trustworthy_horizon(g, ModelParams(1.0))
    assert h1 > 0
    g2 = Grid(1, 256, 400.0)
    assert trustworthy_horizon(g2, ModelParams(1.0)) > h1
