import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pitepde.grid import (GridError, GridSpec, SpectralDiagonal, advection_diagonal,
                          advection_total, assemble_dense_hamiltonian, dense_fourier_matrix,
                          grid_points, hamiltonian, kinetic_diagonal, make_potential,
                          potential_diagonal, shifted_dft_matrix)


def test_gridspec_rejects_bad_values():
    for bad in [(0, 3, 1.0), (1, 0, 1.0), (1, 3, -1.0), (1, 3, float("nan"))]:
        with pytest.raises(GridError):
            GridSpec(*bad)


def test_grid_points_row_major():
    pts = grid_points(GridSpec(2, 1, 1.0))
    assert pts.tolist() == [[0, 0], [0, 0.5], [0.5, 0], [0.5, 0.5]]


def test_kinetic_small_cases():
    # N=4, L=1, a=1: k-N/2 = -2..1
    vals = kinetic_diagonal(GridSpec(1, 2, 1.0), 1.0).values
    np.testing.assert_allclose(vals, 4 * np.pi ** 2 * np.array([4, 1, 0, 1]))
    vals = kinetic_diagonal(GridSpec(1, 1, 2 * np.pi), 1.0).values
    np.testing.assert_allclose(vals, [1, 0])


def test_kinetic_per_axis_coefficients():
    spec = GridSpec(2, 2, 2 * np.pi)
    vals = kinetic_diagonal(spec, [1.0, 3.0]).values.reshape(4, 4)
    k = np.arange(4) - 2
    np.testing.assert_allclose(vals, k[:, None] ** 2 + 3 * k[None, :] ** 2)


def test_kinetic_reflection_symmetry():
    vals = kinetic_diagonal(GridSpec(1, 4, 1.0), 0.7).values
    for k in range(1, 16):
        assert vals[k] == pytest.approx(vals[16 - k])


def test_kinetic_rejects_nonpositive():
    with pytest.raises(GridError):
        kinetic_diagonal(GridSpec(1, 2, 1.0), 0.0)


def test_advection_small_cases():
    np.testing.assert_allclose(advection_diagonal(GridSpec(1, 2, 1.0), 5.0, 0).values,
                               [-20 * np.pi, -10 * np.pi, 0, 10 * np.pi])
    np.testing.assert_allclose(advection_diagonal(GridSpec(1, 1, 2 * np.pi), 1.0, 0).values, [-1, 0])
    assert not advection_diagonal(GridSpec(1, 3, 1.0), 0.0, 0).values.any()
    with pytest.raises(GridError):
        advection_diagonal(GridSpec(1, 3, 1.0), 1.0, 1)


def test_advection_total_sums_axes():
    spec = GridSpec(2, 2, 2 * np.pi)
    tot = advection_total(spec, [2.0, -1.0]).values.reshape(4, 4)
    k = np.arange(4) - 2
    np.testing.assert_allclose(tot, 2 * k[:, None] - k[None, :])


def test_box_potential_1d():
    pot = potential_diagonal(GridSpec(1, 3, 1.0),
                             make_potential(GridSpec(1, 3, 1.0), "box1d", height=10.0))
    np.testing.assert_array_equal(pot.samples, [0, 0, 10, 10, 10, 10, 10, 0])
    assert (pot.V0, pot.V1) == (0.0, 10.0)


def test_box_potential_2d_quarter():
    spec = GridSpec(2, 2, 2 * np.pi)
    pot = potential_diagonal(spec, make_potential(spec, "box2d", height=10.0))
    grid = pot.samples.reshape(4, 4)
    # points 0, pi/2, pi, 3pi/2: the box |x - pi| <= pi/2 covers indices 1..3
    expect = np.zeros((4, 4))
    expect[1:, 1:] = 10
    np.testing.assert_array_equal(grid, expect)


def test_potential_shift_exact():
    rng = np.random.default_rng(0)
    samples = rng.normal(size=16)
    pot = potential_diagonal(GridSpec(1, 4, 1.0), samples)
    assert pot.shifted.values.min() == 0.0
    np.testing.assert_array_equal(pot.samples, samples)
    # (x - m) + m can differ from x in the last bit
    np.testing.assert_allclose(pot.shifted.values + pot.V0, samples, rtol=0, atol=1e-15)


def test_potential_rejects_nonfinite_and_wrong_length():
    with pytest.raises(GridError):
        potential_diagonal(GridSpec(1, 2, 1.0), [0, 1, np.inf, 0])
    with pytest.raises(GridError):
        potential_diagonal(GridSpec(1, 2, 1.0), [0, 1, 2])


def test_spectral_diagonal_validates():
    with pytest.raises(GridError):
        SpectralDiagonal(np.array([1.0, np.nan]), "position")
    with pytest.raises(GridError):
        SpectralDiagonal(np.zeros(2), "momentum")


def test_shifted_dft_two_point():
    F = shifted_dft_matrix(2)
    np.testing.assert_allclose(F, np.array([[1, 1], [-1, 1]]) / np.sqrt(2), atol=1e-15)


def test_dense_hamiltonian_two_point():
    # only k = -1 carries energy 1; its grid vector is (1, -1)/sqrt(2)
    H = assemble_dense_hamiltonian(hamiltonian(GridSpec(1, 1, 2 * np.pi), 1.0, 0.0))
    np.testing.assert_allclose(H, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)


def test_dense_hamiltonian_hermitian_without_advection():
    spec = GridSpec(2, 2, 2 * np.pi)
    V = np.random.default_rng(1).uniform(0, 3, spec.size)
    H = assemble_dense_hamiltonian(hamiltonian(spec, 0.5, [0, 0], V))
    assert np.abs(H - H.conj().T).max() < 1e-12


def test_dense_hamiltonian_eigenvalues_without_potential():
    spec = GridSpec(1, 2, 1.0)
    p = hamiltonian(spec, 0.3, 2.0)
    ev = np.linalg.eigvals(assemble_dense_hamiltonian(p))
    expect = p.kinetic.values + 1j * p.advection.values
    np.testing.assert_allclose(np.sort_complex(ev), np.sort_complex(expect), atol=1e-10)


def test_dense_hamiltonian_generates_derivative():
    # F (i D1) F^dagger acting on sin(2 pi x) gives v * 2 pi cos(2 pi x)
    spec = GridSpec(1, 4, 1.0)
    p = hamiltonian(spec, 1e-9, 3.0)
    x = grid_points(spec)[:, 0]
    u = np.sin(2 * np.pi * x)
    F = dense_fourier_matrix(spec)
    D1 = (F * (1j * p.advection.values)[None, :]) @ F.conj().T
    np.testing.assert_allclose(D1 @ u, 3.0 * 2 * np.pi * np.cos(2 * np.pi * x), atol=1e-10)


def test_dense_size_guard():
    with pytest.raises(GridError):
        assemble_dense_hamiltonian(hamiltonian(GridSpec(3, 5, 1.0), 1.0, [0, 0, 0]))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 5), a=st.floats(0.01, 5.0), L=st.floats(0.5, 10.0))
def test_kinetic_spectrum_matches_dense(n, a, L):
    spec = GridSpec(1, n, L)
    kin = kinetic_diagonal(spec, a).values
    F = dense_fourier_matrix(spec)
    ev = np.linalg.eigvalsh((F * kin[None, :]) @ F.conj().T)
    np.testing.assert_allclose(np.sort(ev), np.sort(kin), atol=1e-10 * max(1.0, kin.max()))
