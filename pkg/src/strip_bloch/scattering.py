"""Band-limited scattering states, free evolution and finite-time wave operators.

A D_a state is a product ``ψ(x, y) = f(x) g(y)`` whose x-factor has discrete
Fourier support inside ``{|sin k| > a}``: every free component moves away
from the strip with speed at least ``2a``, so ``V e^{-itH0} ψ`` decays
faster than any power of ``t``. ``Ω(T) = e^{iTH} e^{-iTH0}`` approximates
the wave operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DIRICHLET, Box, LatticeHamiltonian, LatticeState, build_hamiltonian, evolve
from .errors import BoundaryContamination, ConfigurationError
from .fiber import StripPotential

__all__ = [
    "DaState",
    "bump",
    "min_abs_sin",
    "make_da_state",
    "free_evolve",
    "cook_integrand",
    "cook_integral",
    "momentum",
    "position",
    "wave_operator_apply",
    "scattering_velocity_check",
    "scattering_box",
]


def bump(k, center: float, half_width: float, kind: str = "smooth", sharpness: float = 30.0) -> np.ndarray:
    """Compactly supported window on ``|k - center| < half_width`` (k taken mod 2π).

    ``kind="smooth"`` is the C^∞ bump ``exp(β (1 - 1/(1 - s²)))``;
    ``kind="cosine"`` is ``cos²(π s / 2)``. Both equal 1 at the center.
    """
    k = np.asarray(k, dtype=float)
    s = (np.mod(k - center + np.pi, 2 * np.pi) - np.pi) / half_width
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    if kind == "smooth":
        out[inside] = np.exp(sharpness * (1.0 - 1.0 / (1.0 - s[inside] ** 2)))
    elif kind == "cosine":
        out[inside] = np.cos(0.5 * np.pi * s[inside]) ** 2
    else:
        raise ConfigurationError(f"unknown window kind {kind!r}")
    return out


def min_abs_sin(lo: float, hi: float) -> float:
    """Minimum of ``|sin k|`` over ``[lo, hi]``."""
    if math.floor(hi / math.pi) >= math.ceil(lo / math.pi):
        return 0.0
    return min(abs(math.sin(lo)), abs(math.sin(hi)))


@dataclass
class DaState:
    """Product state ``psi_x(x) psi_y(y)`` on ``box`` with x-band-limit ``a``."""

    a: float
    center_k: float
    width: float
    box: Box
    psi_x: np.ndarray
    psi_y: np.ndarray
    fourier_support_margin: float

    def to_lattice(self) -> LatticeState:
        return LatticeState(self.box, np.outer(self.psi_x, self.psi_y))

    def fourier_mass_outside(self) -> float:
        """Spectral weight of ``psi_x`` on ``|sin k| <= a`` (box DFT)."""
        n = self.psi_x.size
        k = 2 * np.pi * np.fft.fftfreq(n)
        # shift so the DFT phases refer to x, not the array index
        phase = np.exp(-1j * k * self.box.xs[0])
        coeffs = np.fft.fft(self.psi_x) * phase
        bad = np.abs(np.sin(k)) <= self.a
        return float(np.sqrt(np.sum(np.abs(coeffs[bad]) ** 2) / n))


def make_da_state(
    a: float,
    center_k: float,
    width: float,
    box: Box,
    sigma_y: float = 4.0,
    k_y: float = np.pi / 2,
    y0: float = 0.0,
    kind: str = "smooth",
    sharpness: float = 30.0,
) -> DaState:
    """Build a D_a state: Fourier window in x, Gaussian envelope with carrier ``k_y`` in y.

    The x-factor is the inverse DFT, on the ``2 Nx + 1`` sites of the box,
    of a window supported in ``[center_k - width, center_k + width]``, so
    its discrete spectrum vanishes identically outside the window.

    Raises
    ------
    ConfigurationError
        If ``|sin k| <= a`` somewhere in the window.
    """
    if a <= 0 or width <= 0:
        raise ConfigurationError("need a > 0 and width > 0")
    margin = min_abs_sin(center_k - width, center_k + width) - a
    if margin <= 0:
        raise ConfigurationError(
            f"window [{center_k - width:.4g}, {center_k + width:.4g}] violates |sin k| > {a:g}"
        )
    xs = box.xs
    n = xs.size
    k = 2 * np.pi * np.fft.fftfreq(n)
    spectrum = bump(k, center_k, width, kind, sharpness)
    psi_x = np.exp(1j * np.outer(xs, k)) @ spectrum
    psi_x /= np.linalg.norm(psi_x)
    ys = box.ys.astype(float)
    psi_y = np.exp(-((ys - y0) ** 2) / (4.0 * sigma_y**2) + 1j * k_y * ys)
    psi_y /= np.linalg.norm(psi_y)
    return DaState(a, center_k, width, box, psi_x, psi_y, margin)


def _free_factor(f: np.ndarray, t: float) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(f.size)
    return np.fft.ifft(np.fft.fft(f) * np.exp(-2j * t * np.cos(k)))


def free_evolve(state: LatticeState, t: float) -> LatticeState:
    """``e^{-itH0}`` by diagonalization on the box taken periodic in both axes."""
    nx, ny = state.box.shape
    k1 = 2 * np.pi * np.fft.fftfreq(nx)
    k2 = 2 * np.pi * np.fft.fftfreq(ny)
    symbol = np.exp(-2j * t * (np.cos(k1)[:, None] + np.cos(k2)[None, :]))
    return LatticeState(state.box, np.fft.ifft2(np.fft.fft2(state.amplitudes) * symbol))


def cook_integrand(psi: DaState, V: StripPotential, t: float) -> float:
    """``(1 + t) ||V e^{-itH0} ψ||_S`` with ``||f||_S² = ||f||² + ||Q_x f||²``."""
    if t < 0:
        raise ConfigurationError("t must be nonnegative")
    if V.is_zero:
        return 0.0
    fx = _free_factor(psi.psi_x, t)
    fy2 = np.abs(_free_factor(psi.psi_y, t)) ** 2
    ys_mod = np.mod(psi.box.ys, V.L)
    total = 0.0
    for x in range(-V.R, V.R + 1):
        i = x + psi.box.Nx
        if not 0 <= i < fx.size:
            continue
        col = np.sum(V.column(x)[ys_mod] ** 2 * fy2) * abs(fx[i]) ** 2
        total += (1.0 + x * x) * col
    return float((1.0 + t) * math.sqrt(total))


def cook_integral(psi: DaState, V: StripPotential, T: float, n: int = 2001) -> float:
    """Trapezoid integral of :func:`cook_integrand` over ``[0, T]``."""
    ts = np.linspace(0.0, T, n)
    vals = np.array([cook_integrand(psi, V, t) for t in ts])
    return float(np.trapezoid(vals, ts))


def position(state: LatticeState, axis: str) -> np.ndarray:
    """Multiply by the ``x`` or ``y`` coordinate."""
    if axis == "x":
        return state.box.xs[:, None] * state.amplitudes
    if axis == "y":
        return state.box.ys[None, :] * state.amplitudes
    raise ConfigurationError(f"axis must be 'x' or 'y', got {axis!r}")


def momentum(state: LatticeState, axis: str) -> LatticeState:
    """Discrete momentum ``(P f)(n) = -i (f(n + e) - f(n - e))`` with zero outside the box."""
    f = state.amplitudes
    ax = {"x": 0, "y": 1}.get(axis)
    if ax is None:
        raise ConfigurationError(f"axis must be 'x' or 'y', got {axis!r}")
    pad = [(0, 0), (0, 0)]
    pad[ax] = (1, 1)
    g = np.pad(f, pad)
    if ax == 0:
        out = -1j * (g[2:, :] - g[:-2, :])
    else:
        out = -1j * (g[:, 2:] - g[:, :-2])
    return LatticeState(state.box, out)


def _evolve_checked(state, H, t, chunks, boundary_tol, width=3):
    worst = state.boundary_mass(width)
    for _ in range(chunks):
        state = evolve(state, H, t / chunks)
        worst = max(worst, state.boundary_mass(width))
    if worst > boundary_tol:
        raise BoundaryContamination(f"boundary mass {worst:.3g} exceeds {boundary_tol:g}")
    return state, worst


def wave_operator_apply(
    psi: DaState | LatticeState,
    V: StripPotential,
    T: float,
    H: LatticeHamiltonian | None = None,
    cauchy_tol: float = 1e-5,
    boundary_tol: float = 1e-8,
    chunks: int = 4,
    certify: bool = True,
) -> tuple[LatticeState, dict]:
    """``Ω(T) ψ = e^{iTH} e^{-iTH0} ψ`` with a Cauchy certificate against ``Ω(T/2) ψ``.

    Raises
    ------
    BoundaryContamination
        If the boundary mass exceeds ``boundary_tol`` at any checkpoint.
    """
    state = psi.to_lattice() if isinstance(psi, DaState) else psi
    H = build_hamiltonian(V, state.box) if H is None else H

    def omega(t):
        free = free_evolve(state, t)
        if free.boundary_mass() > boundary_tol:
            raise BoundaryContamination(f"free evolution reached the box edge by t={t:g}")
        return _evolve_checked(free, H, -t, chunks, boundary_tol)

    out, worst = omega(T)
    report = {"T": T, "boundary_mass_max": worst, "norm_drift": abs(out.norm() - state.norm())}
    if certify:
        half, _ = omega(T / 2)
        gap = float(np.linalg.norm(out.amplitudes - half.amplitudes))
        report.update(cauchy_gap=gap, converged=gap <= cauchy_tol)
    return out, report


def scattering_velocity_check(
    psi: DaState,
    V: StripPotential,
    T_list,
    axes=("x", "y"),
    H: LatticeHamiltonian | None = None,
    boundary_tol: float = 1e-8,
) -> dict:
    """Compare ``(Q_j / T) e^{-iTH} Ωψ`` with ``e^{-iTH} Ω v_j ψ`` for each ``T``.

    ``Ω`` is ``Ω(T_max)`` and ``v_j = i[H0, Q_j] = -P_j`` is the free
    velocity operator for hopping ``+1``, where
    ``(P_j f)(n) = -i (f(n + e_j) - f(n - e_j))``. Per axis the report holds

    ``r(T) = ||(Q_j / T) e^{-iTH} Ωψ - e^{-iTH} Ω v_j ψ|| / ||P_j ψ||``

    and ``r_plus_P``, the same distance with ``+P_j`` in place of ``v_j``.
    """
    T_list = sorted(float(t) for t in T_list)
    if not T_list or T_list[0] <= 0:
        raise ConfigurationError("T_list must contain positive times")
    T_max = T_list[-1]
    state = psi.to_lattice()
    H = build_hamiltonian(V, state.box) if H is None else H
    omega_psi, rep = wave_operator_apply(state, V, T_max, H, boundary_tol=boundary_tol, certify=False)
    report = {
        "T_list": T_list,
        "omega_norm_drift": rep["norm_drift"],
        "boundary_mass_max": rep["boundary_mass_max"],
        "r": {},
        "r_plus_P": {},
    }

    def forward(s):
        out, prev = [], 0.0
        for T in T_list:
            s, worst = _evolve_checked(s, H, T - prev, 1, boundary_tol)
            report["boundary_mass_max"] = max(report["boundary_mass_max"], worst)
            prev = T
            out.append(s)
        return out

    u_list = forward(omega_psi)
    for axis in axes:
        p_state = momentum(state, axis)
        p_norm = p_state.norm()
        omega_p, _ = wave_operator_apply(p_state, V, T_max, H, boundary_tol=boundary_tol, certify=False)
        w_list = forward(omega_p)
        qu = [position(u, axis) / T for T, u in zip(T_list, u_list)]
        report["r"][axis] = [float(np.linalg.norm(q + w.amplitudes) / p_norm) for q, w in zip(qu, w_list)]
        report["r_plus_P"][axis] = [float(np.linalg.norm(q - w.amplitudes) / p_norm) for q, w in zip(qu, w_list)]
    return report


def scattering_box(T_max: float, margin: int = 60, sigma_y: float = 4.0, k_y: float = np.pi / 2) -> Box:
    """Box holding a D_a packet launched from the origin for times up to ``T_max``.

    ``x`` spans ``±(2 T_max + margin)``. The free y-velocity is ``-2 sin k_y``,
    so ``y`` extends ``|2 sin k_y| T_max + margin`` in that direction and
    ``margin`` in the other, with Dirichlet ends.
    """
    Nx = int(math.ceil(2.0 * T_max + margin))
    v_y = -2.0 * math.sin(k_y)
    near = int(math.ceil(margin + 3 * sigma_y))
    far = int(math.ceil(abs(v_y) * T_max)) + near
    y_lo, y_hi = (-far, near) if v_y < 0 else (-near, far)
    return Box(Nx, y_hi - y_lo + 1, DIRICHLET, y_lo)
