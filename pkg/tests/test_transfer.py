import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from strip_bloch.errors import ConfigurationError, EmptyMinusSubspace, ThresholdProximity
from strip_bloch.fiber import StripPotential, delta_k_matrix
from strip_bloch.transfer import (
    ModeKind,
    build_context,
    build_t0,
    build_tv,
    classify_modes,
    decaying_subspaces,
    joukowsky_inverse,
    sigma_min_at,
    sigma_min_profile,
)


def test_joukowsky_examples():
    mp, mm = joukowsky_inverse(2.5)
    assert np.isclose(mp, 0.5) and np.isclose(mm, 2.0)
    mp, mm = joukowsky_inverse(-2.5)
    assert np.isclose(mp, -0.5) and np.isclose(mm, -2.0)
    with pytest.raises(ThresholdProximity):
        joukowsky_inverse(2.0 + 1e-10)
    with pytest.raises(ThresholdProximity):
        joukowsky_inverse(0.3)


@given(w=st.floats(2.0 + 1e-6, 1e3) | st.floats(-1e3, -2.0 - 1e-6))
def test_joukowsky_branch_identities(w):
    mp, mm = joukowsky_inverse(w)
    assert abs(mp) < 1 < abs(mm)
    assert abs(mp * mm - 1) < 1e-12
    assert abs(mp + mm - w) < 1e-12 * max(1.0, abs(w))


@given(re=st.floats(-5, 5), im=st.floats(0.01, 3) | st.floats(-3, -0.01))
def test_joukowsky_complex(re, im):
    w = complex(re, im)
    mp, mm = joukowsky_inverse(w)
    assert abs(mp) < 1 < abs(mm)
    assert abs(mp + 1 / mp - w) < 1e-10


def test_classify_modes():
    cls = classify_modes(3.0, np.pi / 2, 2)  # e = 3 for both modes
    assert cls.kinds == (ModeKind.HYPERBOLIC, ModeKind.HYPERBOLIC)
    assert np.isclose(cls.decay_rate, (3 - np.sqrt(5)) / 2)
    cls = classify_modes(0.0, 0.3, 1)
    assert cls.kinds == (ModeKind.ELLIPTIC,) and cls.decay_rate == 0.0
    cls = classify_modes(4.0, 0.0, 1)
    assert cls.has_threshold
    with pytest.raises(ConfigurationError):
        classify_modes(0.0, 0.0, 1, eps_thr=0.0)


@settings(max_examples=200)
@given(E=st.floats(-6, 6), k=st.floats(-np.pi, np.pi), L=st.integers(1, 4))
def test_t0_spectrum_and_determinant(E, k, L):
    T0 = build_t0(E, k, L)
    assert abs(np.linalg.det(T0) - 1) < 1e-9
    e = E - 2 * np.cos(k + 2 * np.pi * np.arange(L) / L)
    # each mode contributes the two roots of z² - e z + 1
    expected = np.concatenate([np.roots([1.0, -ej, 1.0]) for ej in e])
    got = np.linalg.eigvals(T0)
    assume(np.min(np.abs(np.abs(e) - 2)) > 1e-4)  # avoid the Jordan blocks at thresholds
    for z in expected:
        assert np.min(np.abs(got - z)) < 1e-9


@settings(max_examples=100)
@given(E=st.floats(-7, 7), k=st.floats(-np.pi, np.pi), L=st.integers(1, 4))
def test_decaying_subspaces_are_invariant_and_orthonormal(E, k, L):
    try:
        cls = classify_modes(E, k, L)
        plus, minus = decaying_subspaces(cls)
    except ThresholdProximity:
        assume(False)
    T0 = build_t0(E, k, L)
    d = cls.n_hyperbolic
    assert plus.shape == minus.shape == (2 * L, d)
    for B, mu in ((plus, cls.mu_plus), (minus, cls.mu_minus)):
        assert np.allclose(B.conj().T @ B, np.eye(d), atol=1e-10)
        h = np.flatnonzero(cls.hyperbolic)
        assert np.allclose(T0 @ B, B * mu[h], atol=1e-9 * max(1, np.max(np.abs(mu[h]), initial=1)))


def test_tv_applies_leftmost_slice_first(rng):
    V = StripPotential.random(2, 2, 1.0, rng)
    E, k = 0.7, 0.3
    # propagate a solution by the three-term recursion and compare
    L = V.L
    D = delta_k_matrix(L, k)
    prev, cur = rng.normal(size=L), rng.normal(size=L)  # ψ_{-R-1}, ψ_{-R}
    start = np.concatenate([cur, prev])
    for x in range(-V.R, V.R + 1):
        prev, cur = cur, (E * np.eye(L) - D - np.diag(V.column(x))) @ cur - prev
    assert np.allclose(build_tv(E, k, V) @ start, np.concatenate([cur, prev]))


def test_free_potential_has_no_kernel():
    V = StripPotential.zero(2, 1)
    ctx = build_context(5.0, 0.2, V)
    # T_V = T0 maps the growing subspace to itself, far from the decaying one
    assert ctx.sigma_min > 0.1


def test_single_defect_kernel_at_exact_eigenvalue(defect):
    k = 0.4
    E = 2 * np.cos(k) - np.sqrt(1.5**2 + 4)
    ctx = build_context(E, k, defect)
    assert ctx.sigma_min < 1e-13
    assert ctx.kernel_vectors(1e-9).shape == (1, 1)
    assert ctx.log_F < -50
    assert build_context(E + 0.1, k, defect).sigma_min > 1e-3


def test_empty_minus_subspace(defect):
    with pytest.raises(EmptyMinusSubspace):
        build_context(0.0, 0.3, defect)


def test_sigma_min_paths_agree(random_potential):
    V = random_potential
    k = 0.5
    Es = np.linspace(-8, 8, 301)
    prof = sigma_min_profile(Es, k, V)
    scalar = np.array([sigma_min_at(E, k, V) for E in Es])
    assert np.array_equal(np.isnan(prof), np.isnan(scalar))
    ok = ~np.isnan(prof)
    assert np.allclose(prof[ok], scalar[ok], rtol=1e-10, atol=1e-13)
    for E in Es[ok][::37]:
        assert np.isclose(build_context(E, k, V).sigma_min, sigma_min_at(E, k, V), rtol=1e-10, atol=1e-13)
