"""Strip-periodic potentials, the partial Floquet transform and fiber operators.

The lattice operator is ``H = Δx + Δy + V`` on Z² with hopping 1 and a real
potential ``V(x, y)`` that is L-periodic in ``y`` and vanishes for ``|x| > R``.
The transform ``U`` splits it into fiber operators ``H(k)`` on ℓ²(Z; C^L)::

    (H(k) ψ)_x = ψ_{x+1} + ψ_{x-1} + Δ^k ψ_x + V_x ψ_x
    (Δ^k φ)(j) = e^{ik} φ(j+1) + e^{-ik} φ(j-1)      (j mod L)

On a finite y-ring of ``L*M`` sites the transform is sampled on the grid
``k_m = 2πm/(LM)``; the inverse carries the ``1/M`` normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "StripPotential",
    "FiberState",
    "delta_k_matrix",
    "delta_k_eigenbasis",
    "mode_energy",
    "mode_energies",
    "apply_fiber_hamiltonian",
    "fiber_hamiltonian_matrix",
    "floquet_grid",
    "floquet_forward",
    "floquet_inverse",
]


@dataclass(frozen=True)
class StripPotential:
    """Real potential ``V(x, j)`` for ``x in [-R, R]`` and ``j in [0, L)``.

    ``values[x + R, j]`` holds ``V(x, j)``; everything outside ``|x| <= R``
    is zero.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] % 2 != 1 or values.shape[1] < 1:
            raise ConfigurationError(
                f"potential must have shape (2R+1, L), got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("potential values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def L(self) -> int:
        return self.values.shape[1]

    @property
    def R(self) -> int:
        return (self.values.shape[0] - 1) // 2

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def column(self, x: int) -> np.ndarray:
        """Potential slice ``V(x, ·)`` (zeros outside the support)."""
        if abs(x) > self.R:
            return np.zeros(self.L)
        return self.values[x + self.R]

    @classmethod
    def zero(cls, L: int = 1, R: int = 0) -> StripPotential:
        return cls(np.zeros((2 * R + 1, L)))

    @classmethod
    def single_defect(cls, strength: float) -> StripPotential:
        """``L = 1, R = 0`` line defect with ``V(0, y) = strength``."""
        return cls(np.array([[float(strength)]]))

    @classmethod
    def random(cls, L: int, R: int, amplitude: float, rng) -> StripPotential:
        """Uniform random potential with ``sup |V| <= amplitude``."""
        rng = np.random.default_rng(rng)
        return cls(rng.uniform(-amplitude, amplitude, size=(2 * R + 1, L)))

    @classmethod
    def from_dict(cls, data: dict) -> StripPotential:
        try:
            L = int(data["L"])
            R = int(data["R"])
            rows = data["rows"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"potential needs integer L, R and rows: {exc}")
        if L < 1 or R < 0:
            raise ConfigurationError(f"need L >= 1 and R >= 0, got L={L}, R={R}")
        if not isinstance(rows, list) or len(rows) != 2 * R + 1:
            raise ConfigurationError(
                f"potential rows: expected {2 * R + 1} rows for R={R}, "
                f"got {len(rows) if isinstance(rows, list) else type(rows).__name__}"
            )
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != L:
                raise ConfigurationError(
                    f"potential row {i} (x={i - R}) must have exactly L={L} entries"
                )
        return cls(np.array(rows, dtype=float))

    @classmethod
    def from_json(cls, path) -> StripPotential:
        with open(Path(path), encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {"L": self.L, "R": self.R, "rows": self.values.tolist()}


@dataclass
class FiberState:
    """Element of ℓ²(Z; C^L) at quasimomentum ``k``, stored on ``[x_min, x_max]``."""

    k: float
    amplitudes: np.ndarray
    x_min: int = 0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != 2 or self.amplitudes.shape[0] < 1:
            raise ConfigurationError("fiber amplitudes must be a 2D (x, j) array")

    @property
    def L(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def x_max(self) -> int:
        return self.x_min + self.amplitudes.shape[0] - 1

    @property
    def xs(self) -> np.ndarray:
        return np.arange(self.x_min, self.x_max + 1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def slice(self, x: int) -> np.ndarray:
        if x < self.x_min or x > self.x_max:
            return np.zeros(self.L, dtype=complex)
        return self.amplitudes[x - self.x_min]


def delta_k_matrix(L: int, k: float) -> np.ndarray:
    """Dense ``L x L`` matrix of the twisted cyclic Laplacian Δ^k."""
    D = np.zeros((L, L), dtype=complex)
    for j in range(L):
        D[j, (j + 1) % L] += np.exp(1j * k)
        D[j, (j - 1) % L] += np.exp(-1j * k)
    return D


def delta_k_eigenbasis(L: int, k: float) -> list[tuple[np.ndarray, float]]:
    """Orthonormal eigenpairs ``(v_n, 2cos(k + 2πn/L))`` of Δ^k, ``n = 0..L-1``.

    ``v_n(j) = ζ^{jn} / sqrt(L)`` with ``ζ = exp(2πi/L)``.
    """
    if L < 1:
        raise ConfigurationError(f"L must be positive, got {L}")
    j = np.arange(L)
    return [
        (np.exp(2j * np.pi * j * n / L) / np.sqrt(L), 2.0 * np.cos(k + 2.0 * np.pi * n / L))
        for n in range(L)
    ]


def mode_basis(L: int) -> np.ndarray:
    """Columns are the Δ^k eigenvectors ``v_n`` (independent of k)."""
    j = np.arange(L)
    return np.exp(2j * np.pi * np.outer(j, j) / L) / np.sqrt(L)


def mode_energy(E: float, k: float, j: int, L: int) -> float:
    """``e_j = E - 2cos(k + 2πj/L)``."""
    if not 0 <= j < L:
        raise ConfigurationError(f"mode index {j} outside [0, {L})")
    return E - 2.0 * np.cos(k + 2.0 * np.pi * j / L)


def mode_energies(E, k: float, L: int) -> np.ndarray:
    """All mode energies; broadcasts over an array of ``E`` (last axis = j)."""
    E = np.asarray(E, dtype=float)
    return E[..., None] - 2.0 * np.cos(k + 2.0 * np.pi * np.arange(L) / L)


def apply_fiber_hamiltonian(state: FiberState, V: StripPotential) -> FiberState:
    """Apply ``H(k)`` to a windowed fiber state.

    Slices outside the stored window count as zero, so the result lives on
    the window widened by one site on each side.
    """
    if state.L != V.L:
        raise ConfigurationError(f"state has L={state.L} but potential has L={V.L}")
    psi = np.pad(state.amplitudes, ((1, 1), (0, 0)))
    x_min = state.x_min - 1
    xs = np.arange(x_min, x_min + psi.shape[0])
    out = np.zeros_like(psi)
    out[1:] += psi[:-1]
    out[:-1] += psi[1:]
    k = state.k
    out += np.exp(1j * k) * np.roll(psi, -1, axis=1) + np.exp(-1j * k) * np.roll(psi, 1, axis=1)
    pot = np.array([V.column(int(x)) for x in xs])
    out += pot * psi
    return FiberState(k, out, x_min)


def fiber_hamiltonian_matrix(V: StripPotential, k: float, N: int) -> np.ndarray:
    """Dense Hermitian matrix of ``H(k)`` restricted to ``x in [-N, N]`` (Dirichlet).

    Index ordering is ``(x + N) * L + j``.
    """
    L = V.L
    n = 2 * N + 1
    D = delta_k_matrix(L, k)
    H = np.kron(np.eye(n), D).astype(complex)
    H += np.kron(np.eye(n, k=1) + np.eye(n, k=-1), np.eye(L))
    diag = np.concatenate([V.column(x) for x in range(-N, N + 1)])
    H[np.diag_indices_from(H)] += diag
    return H


def floquet_grid(L: int, M: int) -> np.ndarray:
    """Synthesis grid ``k_m = 2πm/(LM)``, ``m = 0..M-1``."""
    return 2.0 * np.pi * np.arange(M) / (L * M)


def _forward_array(psi: np.ndarray, L: int) -> np.ndarray:
    nx, ny = psi.shape
    M = ny // L
    ks = floquet_grid(L, M)
    cells = psi.reshape(nx, M, L)
    # sum over cells c of exp(-2πi m c / M) is an FFT over the cell axis
    summed = np.fft.fft(cells, axis=1)
    phase = np.exp(-1j * np.outer(ks, np.arange(L)))
    return np.transpose(summed, (1, 0, 2)) * phase[:, None, :]


def floquet_forward(psi: np.ndarray, L: int, x_min: int = 0) -> list[FiberState]:
    """Partial Floquet transform of ``psi[x, y]`` on a y-ring of ``L*M`` sites.

    Returns one :class:`FiberState` per ``k_m = 2πm/(LM)`` with
    ``ψ_x(j) = Σ_c ψ(x, j + cL) exp(-i k_m (j + cL))``.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 2:
        raise ConfigurationError("psi must be a 2D (x, y) array")
    if L < 1 or psi.shape[1] % L != 0 or psi.shape[1] == 0:
        raise ConfigurationError(
            f"y-extent {psi.shape[1]} is not a positive multiple of L={L}"
        )
    fibers = _forward_array(psi, L)
    ks = floquet_grid(L, psi.shape[1] // L)
    return [FiberState(float(k), f, x_min) for k, f in zip(ks, fibers)]


def floquet_inverse(fibers: list[FiberState]) -> np.ndarray:
    """Inverse transform: ``ψ(x, j + cL) = (1/M) Σ_m exp(i k_m (j + cL)) ψ_{k_m, x}(j)``."""
    if not fibers:
        raise ConfigurationError("need at least one fiber")
    M = len(fibers)
    L = fibers[0].L
    ks = np.array([f.k for f in fibers])
    if not np.allclose(ks, floquet_grid(L, M), rtol=0.0, atol=1e-12):
        raise ConfigurationError("fibers must sit on the uniform grid k_m = 2πm/(LM)")
    shape = fibers[0].amplitudes.shape
    if any(f.amplitudes.shape != shape or f.x_min != fibers[0].x_min for f in fibers):
        raise ConfigurationError("all fibers must share the same x-window and L")
    data = np.stack([f.amplitudes for f in fibers])
    data = data * np.exp(1j * np.outer(ks, np.arange(L)))[:, None, :]
    cells = np.fft.ifft(data, axis=0)  # (M, nx, L), includes the 1/M
    return np.transpose(cells, (1, 0, 2)).reshape(shape[0], M * L)
