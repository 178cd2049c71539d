"""Transfer matrices, decaying subspaces and the connection matrix A(E, k).

Writing ``Ψ_x = ψ_x ⊕ ψ_{x-1}``, the eigenvalue equation ``H(k)ψ = Eψ`` becomes
``Ψ_{x+1} = B_x Ψ_x`` with the symplectic block::

    B_x = [[E - Δ^k - V_x, -I],
           [I,              0]]

Outside the support ``B_x = T0``. In the Δ^k eigenbasis ``T0`` splits into
2x2 blocks ``[[e_j, -1], [1, 0]]`` whose eigenvalues are the two Joukowsky
preimages ``μ±(e_j)`` with eigenvectors ``(μ± v_j) ⊕ v_j``. ``E`` is an
eigenvalue of ``H(k)`` iff ``A = (I - Π+) T_V B-`` has a nontrivial kernel,
where ``B-`` spans the solutions decaying at -inf and ``Π+`` projects onto
the ones decaying at +inf.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EmptyMinusSubspace, ThresholdProximity
from .fiber import StripPotential, delta_k_matrix, mode_basis, mode_energies

__all__ = [
    "DEFAULT_EPS_THR",
    "ModeKind",
    "ModeClassification",
    "TransferContext",
    "joukowsky_inverse",
    "classify_modes",
    "build_t0",
    "transfer_block",
    "decaying_subspaces",
    "build_tv",
    "build_context",
    "sigma_min_profile",
    "sigma_min_at",
]

DEFAULT_EPS_THR = 1e-8


class ModeKind(enum.Enum):
    HYPERBOLIC = "hyperbolic"
    ELLIPTIC = "elliptic"
    THRESHOLD = "threshold"


def _mu_real(w):
    """Vectorized μ± for real ``|w| > 2`` with the sign-matched square root."""
    w = np.asarray(w, dtype=float)
    s = np.sign(w) * np.sqrt(w * w - 4.0)
    mu_minus = 0.5 * (w + s)
    return 1.0 / mu_minus, mu_minus


def joukowsky_inverse(w, eps_thr: float = DEFAULT_EPS_THR) -> tuple[complex, complex]:
    """Preimages of ``w`` under ``J(z) = z + 1/z`` split as ``|μ+| < 1 < |μ-|``.

    Real ``w`` uses the root with ``sign(sqrt(w²-4)) = sign(w)`` so the
    branches are continuous along real scans; complex ``w`` uses the
    principal root followed by a swap if needed.

    Raises
    ------
    ThresholdProximity
        If ``w`` lies within ``eps_thr`` of the cut ``[-2, 2]``.
    """
    w = complex(w)
    dist = abs(w.imag) if abs(w.real) <= 2.0 else abs(w - np.sign(w.real) * 2.0)
    if dist <= eps_thr:
        raise ThresholdProximity(f"w={w} is within {eps_thr:g} of the cut [-2, 2]")
    if w.imag == 0.0:
        mu_plus, mu_minus = _mu_real(w.real)
        return complex(mu_plus), complex(mu_minus)
    root = np.sqrt(w * w - 4.0)
    a, b = 0.5 * (w - root), 0.5 * (w + root)
    if abs(a) > abs(b):
        a, b = b, a
    # recompute the small root from the product to avoid cancellation
    return complex(1.0 / b), complex(b)


@dataclass(frozen=True)
class ModeClassification:
    """Per-mode energies, kinds and (for hyperbolic modes) Joukowsky branches."""

    E: float
    k: float
    e: np.ndarray
    kinds: tuple[ModeKind, ...]
    mu_plus: np.ndarray
    mu_minus: np.ndarray

    @property
    def L(self) -> int:
        return len(self.e)

    @property
    def hyperbolic(self) -> np.ndarray:
        return np.array([kd is ModeKind.HYPERBOLIC for kd in self.kinds])

    @property
    def has_threshold(self) -> bool:
        return any(kd is ModeKind.THRESHOLD for kd in self.kinds)

    @property
    def n_hyperbolic(self) -> int:
        return int(self.hyperbolic.sum())

    @property
    def decay_rate(self) -> float:
        """``max |μ+|`` over hyperbolic modes (0 if there are none)."""
        h = self.hyperbolic
        return float(np.max(np.abs(self.mu_plus[h]))) if h.any() else 0.0


def classify_modes(E: float, k: float, L: int, eps_thr: float = DEFAULT_EPS_THR) -> ModeClassification:
    """Split the modes at ``(E, k)`` into hyperbolic, elliptic and threshold."""
    if eps_thr <= 0:
        raise ConfigurationError("eps_thr must be positive")
    e = mode_energies(E, k, L)
    gap = np.abs(e) - 2.0
    kinds = []
    mu_p = np.full(L, np.nan, dtype=complex)
    mu_m = np.full(L, np.nan, dtype=complex)
    for j in range(L):
        if abs(gap[j]) <= eps_thr:
            kinds.append(ModeKind.THRESHOLD)
        elif gap[j] < 0:
            kinds.append(ModeKind.ELLIPTIC)
        else:
            kinds.append(ModeKind.HYPERBOLIC)
            mu_p[j], mu_m[j] = joukowsky_inverse(e[j], eps_thr)
    return ModeClassification(float(E), float(k), e, tuple(kinds), mu_p, mu_m)


def transfer_block(E: float, k: float, column) -> np.ndarray:
    """One-step transfer matrix for a potential slice ``column`` (length L)."""
    column = np.asarray(column, dtype=float)
    L = column.size
    T = np.zeros((2 * L, 2 * L), dtype=complex)
    T[:L, :L] = E * np.eye(L) - delta_k_matrix(L, k) - np.diag(column)
    T[:L, L:] = -np.eye(L)
    T[L:, :L] = np.eye(L)
    return T


def build_t0(E: float, k: float, L: int) -> np.ndarray:
    """Free transfer matrix ``[[E - Δ^k, -I], [I, 0]]``."""
    return transfer_block(E, k, np.zeros(L))


def build_tv(E: float, k: float, V: StripPotential) -> np.ndarray:
    """Product ``B_R B_{R-1} ... B_{-R}`` carrying ``Ψ_{-R}`` to ``Ψ_{R+1}``."""
    T = np.eye(2 * V.L, dtype=complex)
    for x in range(-V.R, V.R + 1):
        T = transfer_block(E, k, V.column(x)) @ T
    return T


def _basis_columns(mu: np.ndarray, modes: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Normalized columns ``(μ_j v_j ⊕ v_j) / sqrt(|μ_j|² + 1)``.

    Works on stacks: ``mu`` has shape ``(..., d)``; ``vecs`` holds the Δ^k
    eigenvectors as columns. Columns for distinct modes are orthogonal
    because the ``v_j`` are.
    """
    v = vecs[:, modes]  # (L, d)
    scale = 1.0 / np.sqrt(np.abs(mu) ** 2 + 1.0)
    top = mu[..., None, :] * scale[..., None, :] * v
    bottom = scale[..., None, :] * v
    return np.concatenate([top, bottom], axis=-2)


def decaying_subspaces(cls: ModeClassification, L: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of the subspaces decaying at +inf and at -inf.

    Returns ``(basis_plus, basis_minus)``, each of shape ``(2L, d)`` where
    ``d`` is the number of hyperbolic modes.
    """
    L = cls.L if L is None else L
    if L != cls.L:
        raise ConfigurationError(f"classification has L={cls.L}, expected {L}")
    if cls.has_threshold:
        raise ThresholdProximity(f"threshold mode at (E, k) = ({cls.E}, {cls.k})")
    modes = np.flatnonzero(cls.hyperbolic)
    vecs = mode_basis(L)
    plus = _basis_columns(cls.mu_plus[modes], modes, vecs)
    minus = _basis_columns(cls.mu_minus[modes], modes, vecs)
    return plus, minus


@dataclass(frozen=True)
class TransferContext:
    """Everything derived from one ``(E, k)`` point for a given potential."""

    E: float
    k: float
    potential: StripPotential
    classification: ModeClassification
    T0: np.ndarray
    basis_plus: np.ndarray
    basis_minus: np.ndarray
    TV: np.ndarray
    A: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    @property
    def sigma_min(self) -> float:
        return float(self.singular_values[-1])

    @property
    def log_F(self) -> float:
        """``log det(A* A) = 2 Σ log σ_i`` (``-inf`` on an exact kernel)."""
        with np.errstate(divide="ignore"):
            return float(2.0 * np.sum(np.log(self.singular_values)))

    def kernel_vectors(self, accept_tol: float) -> np.ndarray:
        """Right singular vectors whose singular values are ``<= accept_tol``."""
        mask = self.singular_values <= accept_tol
        return self.right_vectors[:, mask]


def build_context(E: float, k: float, V: StripPotential, eps_thr: float = DEFAULT_EPS_THR) -> TransferContext:
    """Assemble ``T0``, the decaying bases, ``T_V`` and ``A`` at ``(E, k)``.

    Raises
    ------
    ThresholdProximity
        Some mode energy is within ``eps_thr`` of ``±2``.
    EmptyMinusSubspace
        No hyperbolic modes, so no ℓ² candidates exist at this point.
    """
    cls = classify_modes(E, k, V.L, eps_thr)
    plus, minus = decaying_subspaces(cls)
    if minus.shape[1] == 0:
        raise EmptyMinusSubspace(f"no hyperbolic modes at (E, k) = ({E}, {k})")
    TV = build_tv(E, k, V)
    image = TV @ minus
    A = image - plus @ (plus.conj().T @ image)
    _, s, vh = np.linalg.svd(A)
    return TransferContext(
        E=float(E),
        k=float(k),
        potential=V,
        classification=cls,
        T0=build_t0(E, k, V.L),
        basis_plus=plus,
        basis_minus=minus,
        TV=TV,
        A=A,
        singular_values=s,
        right_vectors=vh.conj().T,
    )


def _batched_tv(Es: np.ndarray, k: float, V: StripPotential) -> np.ndarray:
    L = V.L
    n = Es.size
    D = delta_k_matrix(L, k)
    block = np.zeros((n, 2 * L, 2 * L), dtype=complex)
    block[:, :L, L:] = -np.eye(L)
    block[:, L:, :L] = np.eye(L)
    base = Es[:, None, None] * np.eye(L) - D
    T = np.broadcast_to(np.eye(2 * L, dtype=complex), (n, 2 * L, 2 * L)).copy()
    for x in range(-V.R, V.R + 1):
        block[:, :L, :L] = base - np.diag(V.column(x))
        T = block @ T
    return T


def sigma_min_profile(Es, k: float, V: StripPotential, eps_thr: float = DEFAULT_EPS_THR) -> np.ndarray:
    """``σ_min(A(E, k))`` for an array of energies.

    Points inside a threshold band or without hyperbolic modes give ``nan``.
    The hyperbolic-mode set is piecewise constant in ``E``, so the work is
    batched per set.
    """
    Es = np.atleast_1d(np.asarray(Es, dtype=float))
    L = V.L
    e = mode_energies(Es, k, L)
    gap = np.abs(e) - 2.0
    excluded = np.any(np.abs(gap) <= eps_thr, axis=1)
    hyper = gap > eps_thr
    out = np.full(Es.size, np.nan)
    vecs = mode_basis(L)
    patterns, inverse = np.unique(hyper, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    for p, pattern in enumerate(patterns):
        rows = np.flatnonzero((inverse == p) & ~excluded)
        modes = np.flatnonzero(pattern)
        if rows.size == 0 or modes.size == 0:
            continue
        mu_p, mu_m = _mu_real(e[np.ix_(rows, modes)])
        plus = _basis_columns(mu_p, modes, vecs)
        minus = _basis_columns(mu_m, modes, vecs)
        TV = _batched_tv(Es[rows], k, V)
        image = TV @ minus
        A = image - plus @ (np.swapaxes(plus.conj(), -1, -2) @ image)
        out[rows] = np.linalg.svd(A, compute_uv=False)[:, -1]
    return out


def sigma_min_at(E: float, k: float, V: StripPotential, eps_thr: float = DEFAULT_EPS_THR) -> float:
    """Scalar fast path of :func:`sigma_min_profile` (``nan`` when excluded)."""
    L = V.L
    e = E - 2.0 * np.cos(k + 2.0 * np.pi * np.arange(L) / L)
    gap = np.abs(e) - 2.0
    if np.any(np.abs(gap) <= eps_thr):
        return float("nan")
    modes = np.flatnonzero(gap > eps_thr)
    if modes.size == 0:
        return float("nan")
    vecs = mode_basis(L)
    mu_p, mu_m = _mu_real(e[modes])
    plus = _basis_columns(mu_p, modes, vecs)
    image = _basis_columns(mu_m, modes, vecs)
    D = delta_k_matrix(L, k)
    top = E * np.eye(L) - D
    for x in range(-V.R, V.R + 1):
        upper = (top - np.diag(V.column(x))) @ image[:L] - image[L:]
        image = np.concatenate([upper, image[:L]])
    A = image - plus @ (plus.conj().T @ image)
    return float(np.linalg.svd(A, compute_uv=False)[-1])
