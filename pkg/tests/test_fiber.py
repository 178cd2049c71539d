import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strip_bloch.dynamics import Box, build_hamiltonian
from strip_bloch.errors import ConfigurationError
from strip_bloch.fiber import (
    FiberState,
    StripPotential,
    apply_fiber_hamiltonian,
    delta_k_eigenbasis,
    delta_k_matrix,
    fiber_hamiltonian_matrix,
    floquet_forward,
    floquet_grid,
    floquet_inverse,
    mode_energies,
    mode_energy,
)


def test_potential_shape_and_support():
    V = StripPotential(np.arange(10.0).reshape(5, 2))
    assert (V.L, V.R) == (2, 2)
    assert np.array_equal(V.column(3), [0.0, 0.0])
    assert np.array_equal(V.column(-2), [0.0, 1.0])
    assert V.sup_norm == 9.0
    with pytest.raises(ValueError):
        V.values[0, 0] = 1.0


@pytest.mark.parametrize("bad", [np.zeros((2, 1)), np.zeros(3), np.array([[np.nan]])])
def test_potential_rejects_bad_arrays(bad):
    with pytest.raises(ConfigurationError):
        StripPotential(bad)


def test_from_dict_names_the_bad_row():
    with pytest.raises(ConfigurationError, match="row 1"):
        StripPotential.from_dict({"L": 2, "R": 1, "rows": [[0, 1], [2], [3, 4]]})
    with pytest.raises(ConfigurationError, match="3 rows"):
        StripPotential.from_dict({"L": 1, "R": 1, "rows": [[0]]})


def test_json_round_trip(tmp_path, random_potential):
    path = tmp_path / "v.json"
    path.write_text(json.dumps(random_potential.to_dict()))
    back = StripPotential.from_json(path)
    assert np.array_equal(back.values, random_potential.values)


@given(L=st.integers(1, 6), k=st.floats(-4, 4))
def test_delta_k_eigenbasis(L, k):
    D = delta_k_matrix(L, k)
    assert np.allclose(D, D.conj().T)
    for v, lam in delta_k_eigenbasis(L, k):
        assert np.allclose(D @ v, lam * v, atol=1e-12)
        assert abs(np.linalg.norm(v) - 1) < 1e-12


def test_delta_k_example_L1():
    # L=1: both hops land on the same site, Δ^k = 2cos k
    assert np.isclose(delta_k_matrix(1, 0.3)[0, 0], 2 * np.cos(0.3))


def test_mode_energy():
    assert np.isclose(mode_energy(1.0, 0.2, 1, 3), 1.0 - 2 * np.cos(0.2 + 2 * np.pi / 3))
    e = mode_energies(np.array([0.0, 1.0]), 0.2, 3)
    assert e.shape == (2, 3)
    with pytest.raises(ConfigurationError):
        mode_energy(0.0, 0.0, 3, 3)


def test_fiber_hamiltonian_matches_dense(rng, random_potential):
    V = random_potential
    k = 0.4
    N = 6
    psi = rng.normal(size=(2 * N + 1, V.L)) + 1j * rng.normal(size=(2 * N + 1, V.L))
    state = FiberState(k, psi, -N)
    out = apply_fiber_hamiltonian(state, V)
    H = fiber_hamiltonian_matrix(V, k, N + 1)
    padded = np.zeros((2 * N + 3, V.L), dtype=complex)
    padded[1:-1] = psi
    ref = (H @ padded.reshape(-1)).reshape(-1, V.L)
    assert out.x_min == -N - 1
    assert np.allclose(out.amplitudes, ref, atol=1e-12)


def test_fiber_hamiltonian_is_hermitian(random_potential):
    H = fiber_hamiltonian_matrix(random_potential, 1.1, 5)
    assert np.allclose(H, H.conj().T)


def _direct_forward(psi, L, k):
    nx, ny = psi.shape
    out = np.zeros((nx, L), dtype=complex)
    for j in range(L):
        for c in range(ny // L):
            y = j + c * L
            out[:, j] += psi[:, y] * np.exp(-1j * k * y)
    return out


def test_floquet_forward_matches_direct_sum(rng):
    L, M = 3, 5
    psi = rng.normal(size=(4, L * M)) + 1j * rng.normal(size=(4, L * M))
    fibers = floquet_forward(psi, L, x_min=-2)
    assert np.allclose([f.k for f in fibers], floquet_grid(L, M))
    for f in fibers:
        assert f.x_min == -2
        assert np.allclose(f.amplitudes, _direct_forward(psi, L, f.k))


@settings(deadline=None, max_examples=25)
@given(L=st.integers(1, 4), M=st.integers(1, 6), seed=st.integers(0, 2**31))
def test_floquet_round_trip_and_parseval(L, M, seed):
    r = np.random.default_rng(seed)
    psi = r.normal(size=(3, L * M)) + 1j * r.normal(size=(3, L * M))
    fibers = floquet_forward(psi, L)
    assert np.allclose(floquet_inverse(fibers), psi)
    # the inverse carries 1/M, so the forward map is sqrt(M) times unitary
    total = sum(f.norm() ** 2 for f in fibers) / M
    assert np.isclose(total, np.linalg.norm(psi) ** 2)


def test_floquet_rejects_bad_shapes():
    with pytest.raises(ConfigurationError):
        floquet_forward(np.zeros((2, 5)), 2)
    fibers = floquet_forward(np.ones((2, 4)), 2)
    fibers[1] = FiberState(0.1, fibers[1].amplitudes)
    with pytest.raises(ConfigurationError):
        floquet_inverse(fibers)


def test_lattice_operator_decomposes_into_fibers(rng, random_potential):
    # U H U^{-1} acts fiberwise as H(k_m) on a periodic ring of L*M sites
    V = random_potential
    M = 4
    box = Box(6, V.L * M, "periodic", 0)
    H = build_hamiltonian(V, box)
    psi = np.zeros(box.shape, dtype=complex)
    psi[2:-2] = rng.normal(size=(box.shape[0] - 4, box.Ny))
    lhs = floquet_forward(H.apply(psi), V.L, -box.Nx)
    for f_in, f_out in zip(floquet_forward(psi, V.L, -box.Nx), lhs):
        ref = apply_fiber_hamiltonian(f_in, V).amplitudes[1:-1]
        assert np.allclose(f_out.amplitudes, ref, atol=1e-10)
