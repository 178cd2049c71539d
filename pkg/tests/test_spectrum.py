import numpy as np
import pytest
from scipy.linalg import eigh

from strip_bloch.errors import ConfigurationError, InsufficientSamples
from strip_bloch.fiber import StripPotential, apply_fiber_hamiltonian, fiber_hamiltonian_matrix
from strip_bloch.spectrum import (
    EigenCurve,
    SingularPoint,
    check_weight_support,
    classify_embedded,
    compute_bands,
    group_velocity,
    hellmann_feynman_slope,
    k_grid,
    nonconstancy_check,
    predict_transport,
    refine_eigenvalue,
    scan_fiber_eigenvalues,
    trace_band,
)


def defect_energy(lam, k):
    return 2 * np.cos(k) - np.sign(lam) * np.sqrt(lam**2 + 4)


@pytest.mark.parametrize("lam", [0.5, 1.5, 3.0, -1.5])
def test_single_defect_scan(lam):
    V = StripPotential.single_defect(-lam)
    for k in (-2.0, 0.1, np.pi / 2):
        pairs = scan_fiber_eigenvalues(k, V)
        assert len(pairs) == 1
        p = pairs[0]
        assert abs(p.E - defect_energy(lam, k)) < 1e-10
        assert not p.embedded and p.multiplicity == 1
        assert p.residual < 1e-10


def test_single_defect_profile_ratio(defect):
    k = np.pi / 2
    p = scan_fiber_eigenvalues(k, defect)[0]
    # E = -2.5 at k = π/2, so e = -2.5 and μ+ = -1/2
    assert abs(p.E + 2.5) < 1e-12
    psi = p.profile.amplitudes[:, 0]
    x0 = -p.profile.x_min
    for x in range(0, 20):
        assert abs(psi[x0 + x + 1] / psi[x0 + x] + 0.5) < 1e-8
        assert abs(psi[x0 - x - 1] / psi[x0 - x] + 0.5) < 1e-8
    assert np.isclose(p.decay_rate, 0.5)


def test_free_operator_has_no_eigenvalues():
    assert scan_fiber_eigenvalues(0.3, StripPotential.zero(2, 1)) == []


def test_scan_matches_dense_diagonalization(random_potential):
    V = random_potential
    N = 120
    for k in (-0.8, 0.2, 0.9):
        pairs = [p for p in scan_fiber_eigenvalues(k, V) if not p.embedded]
        found = [p.E for p in pairs]
        w, vecs = eigh(fiber_hamiltonian_matrix(V, k, N))
        e = 2 * np.cos(k + 2 * np.pi * np.arange(V.L) / V.L)
        outside = (w < e.min() - 2 - 1e-6) | (w > e.max() + 2 + 1e-6)
        mass = (np.abs(vecs.reshape(2 * N + 1, V.L, -1)) ** 2)[20:-20].sum(axis=(0, 1))
        dense = w[outside & (mass > 1 - 1e-10)]
        for E in dense:
            assert np.min(np.abs(np.array(found) - E)) < 1e-8
        # states decaying fast enough to fit the truncation appear in the dense spectrum
        for p in pairs:
            if p.decay_rate ** (2 * (N - 20 - V.R)) < 1e-10:
                assert np.min(np.abs(w - p.E)) < 1e-8


def test_embedded_eigenvalue_certificate():
    # y-independent potential: modes decouple, so mode 0 binds at e_0 = -2.5
    # while mode 1 stays oscillatory
    V = StripPotential(np.array([[-1.5, -1.5]]))
    k = 0.3
    pairs = scan_fiber_eigenvalues(k, V)
    target = 2 * np.cos(k) - 2.5
    emb = [p for p in pairs if abs(p.E - target) < 1e-9]
    assert len(emb) == 1
    p = emb[0]
    assert p.embedded and classify_embedded(p.E, k, 2)
    assert p.residual < 1e-7
    psi = p.profile
    H_psi = apply_fiber_hamiltonian(psi, V).amplitudes[1:-1]
    inner = slice(5, -5)
    assert np.linalg.norm((H_psi - p.E * psi.amplitudes)[inner]) < 1e-9
    X = -psi.x_min
    tail = np.sum(np.abs(psi.amplitudes[np.abs(psi.xs) > X // 2]) ** 2)
    assert tail < 1e-10


def test_refine_rejects_non_eigenvalue(defect):
    assert refine_eigenvalue(0.3, defect, -3.5, -3.4) is None


def test_hellmann_feynman_slope(defect):
    for k in (-1.0, 0.4, 2.0):
        p = scan_fiber_eigenvalues(k, defect)[0]
        assert abs(hellmann_feynman_slope(p) + 2 * np.sin(k)) < 1e-9


def test_compute_bands_single_defect(defect):
    grid = k_grid(1, 96)
    curves = compute_bands(defect, grid)
    assert len(curves) == 1
    c = curves[0]
    assert len(c) == 96 and c.singular_points == []
    assert np.max(np.abs(c.energies - defect_energy(1.5, grid))) < 1e-10
    dk = grid[1] - grid[0]
    assert np.max(np.abs(c.derivative + 2 * np.sin(grid))) < 2 * dk**2


def test_trace_band_stops_at_threshold():
    # weakly bound state of a two-site potential dissolves into the continuum
    V = StripPotential(np.array([[-0.6], [0.0], [0.9]]))
    grid = k_grid(1, 64)
    seed = scan_fiber_eigenvalues(grid[32], V)[0]
    curve = trace_band(V, grid, seed)
    assert len(curve) >= 2
    for p in curve.samples:
        assert p.residual < 1e-7


def test_crossings_are_recorded():
    V = StripPotential(np.array([[-1.5, -1.5]]))
    curves = compute_bands(V, k_grid(2, 64))
    reasons = {p.reason for c in curves for p in c.singular_points}
    assert "crossing" in reasons
    for c in curves:
        assert all(s.residual < 1e-7 for s in c.samples)


def test_nonconstancy(defect):
    c = compute_bands(defect, k_grid(1, 32))[0]
    rep = nonconstancy_check(c)
    assert not rep["is_constant"] and rep["total_variation"] > 1.0
    with pytest.raises(InsufficientSamples):
        nonconstancy_check(EigenCurve(c.samples[:1], c.indices[:1], c.dk))
    with pytest.raises(InsufficientSamples):
        group_velocity(EigenCurve(c.samples[:2], c.indices[:2], c.dk))


def test_group_velocity_one_sided_on_partial_curve(defect):
    grid = k_grid(1, 64)
    c = compute_bands(defect, grid)[0]
    part = EigenCurve(c.samples[10:30], c.indices[10:30], c.dk)
    d = group_velocity(part).derivative
    assert np.max(np.abs(d + 2 * np.sin(grid[10:30]))) < 5 * c.dk**2


def test_predict_transport_normalization(defect):
    grid = k_grid(1, 64)
    c = compute_bands(defect, grid)[0]
    a = np.zeros(64)
    a[16] = 3.0  # k = -π/2
    pred = predict_transport(c, a, grid)
    dk = grid[1] - grid[0]
    assert np.isclose(pred["mean_velocity"], 2.0, atol=dk**2)
    assert np.isclose(pred["velocity_norm_sq"], 4.0, atol=4 * dk**2)
    with pytest.raises(ConfigurationError):
        predict_transport(c, np.zeros(64), grid)


def test_weights_near_singular_points_rejected(defect):
    grid = k_grid(1, 32)
    c = compute_bands(defect, grid)[0]
    c.singular_points = [SingularPoint(float(grid[10]), "threshold")]
    a = np.zeros(32)
    a[11] = 1.0
    with pytest.raises(ConfigurationError):
        check_weight_support(c, a, grid)
    a[:] = 0
    a[20] = 1.0
    check_weight_support(c, a, grid)
