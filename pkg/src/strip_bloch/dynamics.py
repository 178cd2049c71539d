"""Lattice time evolution and transport diagnostics on a finite box of Z².

The box is ``x in [-Nx, Nx]`` (Dirichlet) times ``Ny`` sites in ``y``
starting at ``y_min`` (periodic or Dirichlet). ``e^{-itH}`` is applied with
a Chebyshev expansion whose coefficients are Bessel functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from .errors import BoundaryContamination, ConfigurationError
from .fiber import FiberState, StripPotential, floquet_grid, floquet_inverse
from .spectrum import EigenCurve, FiberEigenpair, check_weight_support, reconstruct_eigenvector
from .transfer import build_context

__all__ = [
    "Box",
    "LatticeState",
    "LatticeHamiltonian",
    "TimeSeries",
    "build_hamiltonian",
    "chebyshev_coefficients",
    "evolve",
    "position_moments",
    "chi_vt_mass",
    "run_time_series",
    "transport_slopes",
    "cosine_taper",
    "synthesize_surface_state",
    "surface_box",
    "delta_state",
]

PERIODIC = "periodic"
DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class Box:
    Nx: int
    Ny: int
    y_boundary: str = PERIODIC
    y_min: int = 0

    def __post_init__(self):
        if self.Nx < 0 or self.Ny < 1:
            raise ConfigurationError(f"invalid box Nx={self.Nx}, Ny={self.Ny}")
        if self.y_boundary not in (PERIODIC, DIRICHLET):
            raise ConfigurationError(f"y_boundary must be periodic or dirichlet, got {self.y_boundary!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return 2 * self.Nx + 1, self.Ny

    @property
    def xs(self) -> np.ndarray:
        return np.arange(-self.Nx, self.Nx + 1)

    @property
    def ys(self) -> np.ndarray:
        return np.arange(self.y_min, self.y_min + self.Ny)

    def index(self, x: int, y: int) -> tuple[int, int]:
        return x + self.Nx, y - self.y_min


@dataclass
class LatticeState:
    box: Box
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != self.box.shape:
            raise ConfigurationError(f"amplitudes {self.amplitudes.shape} do not fit box {self.box.shape}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> LatticeState:
        return LatticeState(self.box, self.amplitudes / self.norm())

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def boundary_mass(self, width: int = 3) -> float:
        """Squared norm within ``width`` sites of any Dirichlet edge."""
        rho = self.density()
        mask = np.zeros(rho.shape, dtype=bool)
        mask[:width] = True
        mask[-width:] = True
        if self.box.y_boundary == DIRICHLET:
            mask[:, :width] = True
            mask[:, -width:] = True
        return float(rho[mask].sum())

    def vdot(self, other: LatticeState) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def delta_state(box: Box, x: int = 0, y: int | None = None) -> LatticeState:
    y = box.y_min if y is None else y
    psi = np.zeros(box.shape, dtype=complex)
    psi[box.index(x, y)] = 1.0
    return LatticeState(box, psi)


@dataclass
class LatticeHamiltonian:
    """Sparse ``H = Δx + Δy + V`` on a box plus the bound ``||H|| <= 4 + ||V||∞``."""

    matrix: sp.csr_matrix
    box: Box
    norm_bound: float

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return (self.matrix @ psi.reshape(-1)).reshape(self.box.shape)

    def expectation(self, state: LatticeState) -> float:
        v = state.amplitudes.reshape(-1)
        return float(np.real(np.vdot(v, self.matrix @ v)))


def _chain(n: int, periodic: bool) -> sp.csr_matrix:
    off = np.ones(n - 1)
    A = sp.diags([off, off], [-1, 1], shape=(n, n), format="lil")
    if periodic and n > 2:
        A[0, n - 1] = 1.0
        A[n - 1, 0] = 1.0
    elif periodic and n == 2:
        A[0, 1] = A[1, 0] = 2.0
    elif periodic and n == 1:
        A[0, 0] = 2.0
    return A.tocsr()


def build_hamiltonian(V: StripPotential, box: Box) -> LatticeHamiltonian:
    """Assemble the lattice operator with ``V`` tiled L-periodically in ``y``.

    Raises
    ------
    ConfigurationError
        A periodic ``y`` ring whose length is not a multiple of ``L``.
    """
    periodic = box.y_boundary == PERIODIC
    if periodic and box.Ny % V.L != 0:
        raise ConfigurationError(f"periodic Ny={box.Ny} is not a multiple of L={V.L}")
    nx, ny = box.shape
    Dx = _chain(nx, False)
    Dy = _chain(ny, periodic)
    H = sp.kron(Dx, sp.identity(ny), format="csr") + sp.kron(sp.identity(nx), Dy, format="csr")
    pot = np.zeros(box.shape)
    ys_mod = np.mod(box.ys, V.L)
    for x in range(max(-V.R, -box.Nx), min(V.R, box.Nx) + 1):
        pot[x + box.Nx] = V.column(x)[ys_mod]
    H = (H + sp.diags(pot.reshape(-1))).tocsr()
    return LatticeHamiltonian(H, box, 4.0 + V.sup_norm)


def chebyshev_coefficients(z: float, tol: float = 1e-12) -> np.ndarray:
    """Coefficients ``c_n = (2 - δ_n0) (-i)^n J_n(z)`` of ``e^{-i z x}`` on ``[-1, 1]``.

    Truncated once ``|J_n(z)|`` stays below ``tol`` past ``n > |z|``.
    """
    n_max = int(abs(z) + 20 + 10 * abs(z) ** (1.0 / 3.0))
    while True:
        n = np.arange(n_max + 1)
        J = jv(n, z)
        tail = np.abs(J[int(abs(z)) + 1:])
        if tail.size and tail[-1] < tol * 1e-3:
            break
        n_max *= 2
    keep = np.flatnonzero(np.abs(J) >= tol)
    last = max(int(keep[-1]) if keep.size else 0, int(abs(z))) + 2
    c = 2.0 * ((-1j) ** n[: last + 1]) * J[: last + 1]
    c[0] = J[0]
    return c


def evolve(state: LatticeState, H: LatticeHamiltonian, t: float, tol: float = 1e-12) -> LatticeState:
    """``e^{-itH} ψ`` via the Chebyshev recursion on ``H / norm_bound``."""
    if t == 0:
        return LatticeState(state.box, state.amplitudes.copy())
    if state.box != H.box:
        raise ConfigurationError("state and Hamiltonian live on different boxes")
    b = H.norm_bound
    c = chebyshev_coefficients(b * t, tol)
    M = H.matrix
    v0 = state.amplitudes.reshape(-1)
    v1 = (M @ v0) / b
    out = c[0] * v0 + c[1] * v1
    for cn in c[2:]:
        v0, v1 = v1, 2.0 * (M @ v1) / b - v0
        out += cn * v1
    return LatticeState(state.box, out.reshape(state.box.shape))


def _wrapped_y(box: Box, reference: float) -> np.ndarray:
    ys = box.ys.astype(float)
    return reference + np.mod(ys - reference + box.Ny / 2.0, box.Ny) - box.Ny / 2.0


def position_moments(state: LatticeState, y_reference: float | None = None) -> dict:
    """First and second moments of ``|ψ|²``.

    On a periodic ``y`` ring, ``y`` is unwrapped to the window of length
    ``Ny`` centered on ``y_reference`` (the circular mean if omitted).
    """
    rho = state.density()
    total = rho.sum()
    if total == 0:
        raise ConfigurationError("moments of the zero state are undefined")
    px = rho.sum(axis=1) / total
    py = rho.sum(axis=0) / total
    xs = state.box.xs.astype(float)
    ys = state.box.ys.astype(float)
    if state.box.y_boundary == PERIODIC:
        if y_reference is None:
            phase = np.angle(np.sum(py * np.exp(2j * np.pi * (ys - state.box.y_min) / state.box.Ny)))
            y_reference = state.box.y_min + phase * state.box.Ny / (2 * np.pi)
        ys = _wrapped_y(state.box, y_reference)
    mx = float(px @ xs)
    my = float(py @ ys)
    return {
        "mean_X": mx,
        "mean_Y": my,
        "var_X": float(px @ (xs - mx) ** 2),
        "var_Y": float(py @ (ys - my) ** 2),
    }


def chi_vt_mass(state: LatticeState, v: float, t: float) -> float:
    """``||χ_{|x| > vt} ψ||``: the norm of the part of ψ farther than ``vt`` from the strip."""
    if v <= 0 or t < 0:
        raise ConfigurationError("need v > 0 and t >= 0")
    outside = np.abs(state.box.xs) > v * t
    return float(np.sqrt(state.density()[outside].sum()))


@dataclass
class TimeSeries:
    times: list[float] = field(default_factory=list)
    mean_X: list[float] = field(default_factory=list)
    mean_Y: list[float] = field(default_factory=list)
    var_X: list[float] = field(default_factory=list)
    var_Y: list[float] = field(default_factory=list)
    norm: list[float] = field(default_factory=list)
    boundary_mass: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    chi: dict[float, list[float]] = field(default_factory=dict)

    def append(
        self, t: float, state: LatticeState, H: LatticeHamiltonian, velocities, width: int,
        y_reference: float | None = None,
    ) -> None:
        ref = self.mean_Y[-1] if self.mean_Y else y_reference
        m = position_moments(state, ref)
        self.times.append(float(t))
        for key in ("mean_X", "mean_Y", "var_X", "var_Y"):
            getattr(self, key).append(m[key])
        self.norm.append(state.norm())
        self.boundary_mass.append(state.boundary_mass(width))
        self.energy.append(H.expectation(state) / state.norm() ** 2)
        for v in velocities:
            self.chi.setdefault(float(v), []).append(chi_vt_mass(state, v, t))

    def rows(self) -> list[list[float]]:
        keys = sorted(self.chi)
        return [
            [self.times[i], self.mean_X[i], self.mean_Y[i], self.var_X[i], self.var_Y[i],
             self.norm[i], self.boundary_mass[i]] + [self.chi[v][i] for v in keys]
            for i in range(len(self.times))
        ]

    def header(self) -> list[str]:
        return ["t", "mean_X", "mean_Y", "var_X", "var_Y", "norm", "boundary_mass"] + [
            f"chi_mass_v{v:g}" for v in sorted(self.chi)
        ]


def run_time_series(
    state: LatticeState,
    H: LatticeHamiltonian,
    T: float,
    n_steps: int,
    velocities=(0.5, 1.0),
    boundary_width: int = 3,
    y_reference: float | None = None,
    tol: float = 1e-12,
) -> tuple[TimeSeries, LatticeState]:
    """Evolve to ``T`` in ``n_steps`` equal steps, recording diagnostics at every step.

    ``y_reference`` anchors the unwrapping of ``mean_Y`` at ``t = 0``.
    """
    series = TimeSeries()
    series.append(0.0, state, H, velocities, boundary_width, y_reference)
    dt = T / n_steps
    psi = state
    for step in range(1, n_steps + 1):
        psi = evolve(psi, H, dt, tol)
        series.append(step * dt, psi, H, velocities, boundary_width)
    return series, psi


def _fit(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


def transport_slopes(series: TimeSeries, window: tuple[float, float], boundary_tol: float = 1e-6) -> dict:
    """Least-squares velocities of ``mean_X`` and ``mean_Y`` over a time window.

    Raises
    ------
    BoundaryContamination
        If the boundary mass exceeds ``boundary_tol`` anywhere in the window.
    """
    t = np.asarray(series.times)
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if sel.sum() < 10:
        raise ConfigurationError(f"need at least 10 samples in window {window}, got {int(sel.sum())}")
    bm = np.asarray(series.boundary_mass)[sel]
    if np.any(bm > boundary_tol):
        raise BoundaryContamination(
            f"boundary mass {bm.max():.3g} exceeds {boundary_tol:g} in window {window}"
        )
    vx, r2x = _fit(t[sel], np.asarray(series.mean_X)[sel])
    vy, r2y = _fit(t[sel], np.asarray(series.mean_Y)[sel])
    return {"vel_X": vx, "vel_Y": vy, "r_squared_X": r2x, "r_squared_Y": r2y}


def cosine_taper(ks, center: float, half_width: float, period: float | None = None) -> np.ndarray:
    """``cos²(π (k - center) / (2 half_width))`` on ``|k - center| < half_width``, else 0."""
    ks = np.asarray(ks, dtype=float)
    d = ks - center
    if period is not None:
        d = np.mod(d + period / 2.0, period) - period / 2.0
    return np.where(np.abs(d) < half_width, np.cos(0.5 * np.pi * d / half_width) ** 2, 0.0)


def _gauge_fix(profile: np.ndarray) -> np.ndarray:
    col = int(np.argmax(np.sum(np.abs(profile) ** 2, axis=1)))
    j = int(np.argmax(np.abs(profile[col])))
    z = profile[col, j]
    return profile * (abs(z) / z) if z != 0 else profile


def _profile_on(sample: FiberEigenpair, V: StripPotential, Nx: int, eps_thr: float) -> np.ndarray:
    ctx = build_context(sample.E, sample.k, V, eps_thr)
    return reconstruct_eigenvector(ctx, sample.kernel_vectors[:, -1], Nx).amplitudes


def synthesize_surface_state(
    curve: EigenCurve,
    weights,
    V: StripPotential,
    Nx: int,
    center_y: int = 0,
    normalize: bool = True,
    eps_thr: float = 1e-8,
) -> LatticeState:
    """Superpose fiber eigenvectors into a lattice wavepacket on a periodic ring.

    ``weights`` are ``a(k)`` on the curve's full grid ``k_grid(L, M)``; the
    ring has ``Ny = L*M`` sites. Each eigenvector is gauge-fixed (largest
    entry on its heaviest column real positive, then aligned with its
    predecessor if the overlap phase jumps by more than π/2) and the inverse
    Floquet transform assembles::

        ψ(x, y) = (1/M) Σ_m a(k_m) e^{i k_m y} φ_{k_m}(x, y mod L)

    Raises
    ------
    ConfigurationError
        Weights are nonzero where the curve has no sample, or within two
        grid cells of a singular point.
    """
    a = np.asarray(weights, dtype=complex)
    M = a.size
    L = V.L
    if M * abs(curve.dk) * L - 2 * np.pi > 1e-9 * M:
        raise ConfigurationError("weights must cover the full k-grid of the curve")
    if M % 2:
        raise ConfigurationError("M must be even so the grid sits on the ring lattice")
    grid = -np.pi / L + curve.dk * np.arange(M)
    check_weight_support(curve, a, grid)
    have = np.zeros(M, dtype=bool)
    have[curve.indices] = True
    if np.any((np.abs(a) > 0) & ~have):
        raise ConfigurationError("weights are nonzero where the curve has no samples")
    nx = 2 * Nx + 1
    ring_k = floquet_grid(L, M)
    fibers = [np.zeros((nx, L), dtype=complex) for _ in range(M)]
    prev = None
    j = np.arange(L)
    for idx, sample in zip(curve.indices, curve.samples):
        if a[idx] == 0:
            prev = None
            continue
        phi = _gauge_fix(_profile_on(sample, V, Nx, eps_thr))
        if prev is not None:
            ov = np.vdot(prev, phi)
            if ov != 0 and abs(np.angle(ov)) > np.pi / 2:
                phi = phi * (abs(ov) / ov)
        prev = phi
        k = grid[idx]
        m = int(round(np.mod(k, 2 * np.pi / L) / (2 * np.pi / (L * M)))) % M
        shift = np.exp(1j * (k - ring_k[m]) * j)  # e^{-2πij/L} when k was folded
        fibers[m] = a[idx] * phi * shift
    states = [FiberState(float(k), f, -Nx) for k, f in zip(ring_k, fibers)]
    psi = floquet_inverse(states)
    psi = np.roll(psi, center_y, axis=1)
    box = Box(Nx, L * M, PERIODIC, 0)
    out = LatticeState(box, psi)
    return out.normalized() if normalize else out


def surface_box(R: int, decay_rate: float, T: float, v_guard: float = 2.0, floor: float = 1e-12) -> int:
    """``Nx`` from the sizing rule ``R + log(floor)/log(ρ) + 2 T v_guard``."""
    margin = 0 if decay_rate <= 0 else math.ceil(math.log(floor) / math.log(decay_rate))
    return int(R + margin + math.ceil(2.0 * T * v_guard))
