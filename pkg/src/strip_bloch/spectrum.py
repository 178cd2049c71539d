"""Fiber eigenvalues, eigenvectors and eigenvalue curves ``E_n(k)``.

Eigenvalues are located as zeros of ``σ_min(A(E, k))``: a coarse E-grid
finds sharp local minima, golden-section search refines them, and a
candidate is accepted only if ``σ_min`` is tiny *and* the reconstructed
eigenvector has a small residual. ``σ_min`` rather than ``det(A*A)`` is
used because the determinant touches zero quadratically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, EmptyMinusSubspace, InsufficientSamples, ThresholdProximity
from .fiber import FiberState, StripPotential, apply_fiber_hamiltonian, mode_basis, mode_energies
from .transfer import (
    DEFAULT_EPS_THR,
    TransferContext,
    build_context,
    sigma_min_at,
    sigma_min_profile,
    transfer_block,
)

__all__ = [
    "FiberEigenpair",
    "EigenCurve",
    "SingularPoint",
    "classify_embedded",
    "reconstruct_eigenvector",
    "eigenpair_residual",
    "scan_fiber_eigenvalues",
    "refine_eigenvalue",
    "trace_band",
    "hellmann_feynman_slope",
    "compute_bands",
    "group_velocity",
    "nonconstancy_check",
    "predict_transport",
    "check_weight_support",
    "k_grid",
    "default_window",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class FiberEigenpair:
    """One eigenvalue of ``H(k)`` with its certificate data."""

    k: float
    E: float
    multiplicity: int
    kernel_vectors: np.ndarray
    profile: FiberState
    residual: float
    embedded: bool
    sigma_min: float
    decay_rate: float


@dataclass(frozen=True)
class SingularPoint:
    k: float
    reason: str  # "threshold", "lost" or "crossing"


@dataclass
class EigenCurve:
    """A traced eigenvalue branch on a uniform k-grid.

    ``indices`` are positions in the grid; consecutive samples are adjacent
    grid points.
    """

    samples: list[FiberEigenpair]
    indices: list[int]
    dk: float
    band_index: int = 0
    derivative: np.ndarray | None = None
    singular_points: list[SingularPoint] = field(default_factory=list)

    @property
    def ks(self) -> np.ndarray:
        return np.array([s.k for s in self.samples])

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.E for s in self.samples])

    def __len__(self) -> int:
        return len(self.samples)


def k_grid(L: int, M: int) -> np.ndarray:
    """``M`` uniform points on the fundamental domain ``[-π/L, π/L)``."""
    return -np.pi / L + 2.0 * np.pi * np.arange(M) / (L * M)


def default_window(V: StripPotential, pad: float = 0.05) -> tuple[float, float]:
    """Energy window covering the whole spectrum, ``±(4 + ||V||∞ + pad)``."""
    top = 4.0 + V.sup_norm + pad
    return -top, top


def classify_embedded(E: float, k: float, L: int) -> bool:
    """True iff ``E`` lies in ``σ(H0(k))``, i.e. some ``|e_j| <= 2``."""
    return bool(np.any(np.abs(mode_energies(E, k, L)) <= 2.0))


def _auto_xmax(R: int, rho: float, floor: float = 1e-14, cap: int = 4000) -> int:
    if rho <= 0.0:
        return R + 2
    if rho >= 1.0:
        return cap
    return int(min(cap, max(R + 2, R + 1 + math.ceil(math.log(floor) / math.log(rho)))))


def _profile_array(ctx: TransferContext, kernel_vector: np.ndarray, x_lo: int, x_hi: int) -> np.ndarray:
    """Eigenfunction values ``ψ_x`` for ``x in [x_lo, x_hi]`` (unnormalized)."""
    V = ctx.potential
    L, R = V.L, V.R
    cls = ctx.classification
    modes = np.flatnonzero(cls.hyperbolic)
    mu_m = cls.mu_minus[modes]
    mu_p = cls.mu_plus[modes]
    vecs = mode_basis(L)[:, modes]
    c = np.asarray(kernel_vector, dtype=complex).reshape(-1)
    Psi = ctx.basis_minus @ c
    inner = {-R - 1: Psi[L:], -R: Psi[:L]}
    for x in range(-R, R + 1):
        Psi = transfer_block(ctx.E, ctx.k, V.column(x)) @ Psi
        inner[x + 1] = Psi[:L]
    d = ctx.basis_plus.conj().T @ Psi
    scale_m = 1.0 / np.sqrt(np.abs(mu_m) ** 2 + 1.0)
    scale_p = 1.0 / np.sqrt(np.abs(mu_p) ** 2 + 1.0)
    out = np.zeros((x_hi - x_lo + 1, L), dtype=complex)
    for x in range(x_lo, x_hi + 1):
        if -R - 1 <= x <= R:
            val = inner[x]
        elif x < -R - 1:
            n = -R - 1 - x
            val = vecs @ (c * scale_m * mu_m ** (-n))
        else:
            n = x - R - 1
            val = vecs @ (d * scale_p * mu_p ** (n + 1))
        out[x - x_lo] = val
    return out


def reconstruct_eigenvector(ctx: TransferContext, kernel_vector, X_max: int | None = None) -> FiberState:
    """Build the normalized eigenfunction on ``[-X_max, X_max]`` from a kernel vector of A.

    Inside the support the transfer blocks are applied step by step; outside
    the solution is expanded in the Joukowsky eigenbasis, decaying like
    powers of ``1/μ-`` to the left and ``μ+`` to the right.
    """
    cls = ctx.classification
    if cls.has_threshold:
        raise ThresholdProximity("cannot expand tails at a threshold point")
    R = ctx.potential.R
    if X_max is None:
        X_max = _auto_xmax(R, cls.decay_rate)
    if X_max <= R:
        raise ConfigurationError(f"X_max={X_max} must exceed R={R}")
    psi = _profile_array(ctx, kernel_vector, -X_max, X_max)
    psi /= np.linalg.norm(psi)
    return FiberState(ctx.k, psi, -X_max)


def eigenpair_residual(ctx: TransferContext, kernel_vector, X_max: int) -> float:
    """``||(H(k) - E) ψ|| / ||ψ||`` on ``[-X_max, X_max]`` using the exact tails as neighbors."""
    padded = _profile_array(ctx, kernel_vector, -X_max - 1, X_max + 1)
    state = FiberState(ctx.k, padded, -X_max - 1)
    Hpsi = apply_fiber_hamiltonian(state, ctx.potential).amplitudes[2:-2]
    core = padded[1:-1]
    return float(np.linalg.norm(Hpsi - ctx.E * core) / np.linalg.norm(core))


def _golden_min(f, a: float, b: float, tol: float) -> tuple[float, float]:
    """Golden-section search with an absolute tolerance on the abscissa.

    ``scipy.optimize.minimize_scalar(method="bounded")`` floors its step at
    ``sqrt(eps) * |x|``, too coarse for 1e-12 in E.
    """
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    floor = 4.0 * np.finfo(float).eps * max(1.0, abs(a), abs(b))
    while b - a > max(tol, floor):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _sigma(E: float, k: float, V: StripPotential, eps_thr: float) -> float:
    val = sigma_min_at(E, k, V, eps_thr)
    return math.inf if np.isnan(val) else float(val)


def refine_eigenvalue(
    k: float,
    V: StripPotential,
    lo: float,
    hi: float,
    tol: float = 1e-12,
    accept_tol: float = 1e-9,
    residual_tol: float = 1e-7,
    eps_thr: float = DEFAULT_EPS_THR,
    X_max: int | None = None,
) -> FiberEigenpair | None:
    """Minimize ``σ_min`` on ``[lo, hi]`` and certify the result.

    Returns ``None`` unless both ``σ_min <= accept_tol`` and the
    reconstructed residual ``<= residual_tol``.
    """
    # keep iterating past tol: on steep A the tolerance in E is not the limiting factor
    E, s = _golden_min(lambda e: _sigma(e, k, V, eps_thr), lo, hi, min(tol, 1e-13))
    if not s <= accept_tol:
        return None
    try:
        ctx = build_context(E, k, V, eps_thr)
    except (ThresholdProximity, EmptyMinusSubspace):
        return None
    kernel = ctx.kernel_vectors(accept_tol)
    if kernel.shape[1] == 0:
        return None
    xmax = X_max if X_max is not None else _auto_xmax(V.R, ctx.classification.decay_rate)
    residual = max(eigenpair_residual(ctx, kernel[:, i], xmax) for i in range(kernel.shape[1]))
    if not residual <= residual_tol:
        return None
    return FiberEigenpair(
        k=float(k),
        E=float(E),
        multiplicity=kernel.shape[1],
        kernel_vectors=kernel,
        profile=reconstruct_eigenvector(ctx, kernel[:, -1], xmax),
        residual=residual,
        embedded=classify_embedded(E, k, V.L),
        sigma_min=ctx.sigma_min,
        decay_rate=ctx.classification.decay_rate,
    )


def _sharp_minima(sig: np.ndarray, sharpness: float) -> list[int]:
    """Indices of V-shaped local minima.

    Near a simple zero ``σ ≈ s|E - E0|``, so the grid minimum is at most a
    third of its larger neighbour; smooth non-zero minima sit near 1.
    """
    s = np.where(np.isnan(sig), np.inf, sig)
    out = []
    for i in range(1, s.size - 1):
        if not np.isfinite(s[i]):
            continue
        left, right = s[i - 1], s[i + 1]
        if s[i] <= left and s[i] <= right and (s[i] <= sharpness * max(left, right) or s[i] == 0.0):
            out.append(i)
    return out


def scan_fiber_eigenvalues(
    k: float,
    V: StripPotential,
    window: tuple[float, float] | None = None,
    grid_step: float = 1e-3,
    tol: float = 1e-12,
    accept_tol: float = 1e-9,
    residual_tol: float = 1e-7,
    eps_thr: float = DEFAULT_EPS_THR,
    X_max: int | None = None,
    sharpness: float = 0.5,
) -> list[FiberEigenpair]:
    """All certified eigenvalues of ``H(k)`` inside ``window``, sorted by energy."""
    lo, hi = default_window(V) if window is None else window
    if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
        raise ConfigurationError(f"invalid energy window {window}")
    if grid_step <= 0:
        raise ConfigurationError("grid_step must be positive")
    n = max(3, int(math.ceil((hi - lo) / grid_step)) + 1)
    Es = np.linspace(lo, hi, n)
    sig = sigma_min_profile(Es, k, V, eps_thr)
    if np.all(np.isnan(sig)):
        warnings.warn(f"no admissible energies in window {window} at k={k}", stacklevel=2)
        return []
    found: list[FiberEigenpair] = []
    for i in _sharp_minima(sig, sharpness):
        pair = refine_eigenvalue(k, V, Es[i - 1], Es[i + 1], tol, accept_tol, residual_tol, eps_thr, X_max)
        if pair is None:
            continue
        if any(abs(pair.E - q.E) <= 1e-9 for q in found):
            continue
        found.append(pair)
    return sorted(found, key=lambda p: p.E)


def _nearest_index(grid: np.ndarray, k: float) -> int:
    i = int(np.argmin(np.abs(grid - k)))
    if abs(grid[i] - k) > 1e-9:
        raise ConfigurationError(f"k={k} is not a grid point")
    return i


def _threshold_gap(E: float, k: float, L: int) -> float:
    return float(np.min(np.abs(np.abs(mode_energies(E, k, L)) - 2.0)))


def hellmann_feynman_slope(pair: FiberEigenpair) -> float:
    """``dE/dk = <ψ, (∂_k Δ^k) ψ>`` for a normalized eigenfunction."""
    psi = pair.profile.amplitudes
    k = pair.k
    dpsi = 1j * np.exp(1j * k) * np.roll(psi, -1, axis=1) - 1j * np.exp(-1j * k) * np.roll(psi, 1, axis=1)
    return float(np.real(np.vdot(psi, dpsi)) / np.real(np.vdot(psi, psi)))


def _continue(
    V, grid, seed: FiberEigenpair, start: int, step: int, opts: dict
) -> tuple[list[tuple[int, FiberEigenpair]], SingularPoint | None]:
    """March from ``start`` in direction ``step`` until the grid ends or lock is lost."""
    dk = grid[1] - grid[0]
    out: list[tuple[int, FiberEigenpair]] = []
    prev = seed
    slope = hellmann_feynman_slope(seed)
    curvature = 2.0
    i = start + step
    while 0 <= i < grid.size:
        k = grid[i]
        pred = prev.E + slope * step * dk
        width = max(opts["min_bracket"], 2.0 * dk * dk * (1.0 + abs(curvature)))
        pair = None
        for grow in (1.0, 4.0):
            w = width * grow
            pair = refine_eigenvalue(k, V, pred - w, pred + w, **opts["refine"])
            if pair is not None:
                break
        if pair is None:
            reason = "threshold" if _threshold_gap(pred, k, V.L) <= opts["threshold_margin"] else "lost"
            return out, SingularPoint(float(k), reason)
        new_slope = hellmann_feynman_slope(pair)
        curvature = (new_slope - slope) / (step * dk)
        slope = new_slope
        prev = pair
        out.append((i, pair))
        i += step
    return out, None


def trace_band(
    V: StripPotential,
    grid: np.ndarray,
    seed: FiberEigenpair,
    window: tuple[float, float] | None = None,
    tol: float = 1e-12,
    accept_tol: float = 1e-9,
    residual_tol: float = 1e-7,
    eps_thr: float = DEFAULT_EPS_THR,
    min_bracket: float = 2e-4,
    threshold_margin: float = 1e-3,
) -> EigenCurve:
    """Continue ``seed`` across a uniform k-grid in both directions.

    Each step refines ``σ_min`` around the linear prediction from the last
    two samples. A branch that fails certification is terminated and its
    end recorded as a singular point (``threshold`` if it ran into a
    threshold curve, ``lost`` otherwise). Samples outside ``window`` also
    terminate the branch.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        raise ConfigurationError("k-grid needs at least two points")
    opts = {
        "min_bracket": min_bracket,
        "threshold_margin": threshold_margin,
        "refine": dict(tol=tol, accept_tol=accept_tol, residual_tol=residual_tol, eps_thr=eps_thr),
    }
    i0 = _nearest_index(grid, seed.k)
    fwd, end_f = _continue(V, grid, seed, i0, +1, opts)
    bwd, end_b = _continue(V, grid, seed, i0, -1, opts)
    pairs = bwd[::-1] + [(i0, seed)] + fwd
    singular = [p for p in (end_b, end_f) if p is not None]
    if window is not None:
        lo, hi = window
        inside = [lo <= p.E <= hi for _, p in pairs]
        keep = _longest_run_containing(inside, len(bwd))
        if keep != (0, len(pairs)):
            a, b = keep
            if a > 0:
                singular.append(SingularPoint(float(pairs[a - 1][1].k), "lost"))
            if b < len(pairs):
                singular.append(SingularPoint(float(pairs[b][1].k), "lost"))
            pairs = pairs[a:b]
    return EigenCurve(
        samples=[p for _, p in pairs],
        indices=[i for i, _ in pairs],
        dk=float(grid[1] - grid[0]),
        singular_points=singular,
    )


def _longest_run_containing(flags: list[bool], pos: int) -> tuple[int, int]:
    a = pos
    while a > 0 and flags[a - 1]:
        a -= 1
    b = pos
    while b < len(flags) and flags[b]:
        b += 1
    return a, b


def _claimed(curves: list[EigenCurve], index: int, E: float, tol: float) -> bool:
    for c in curves:
        for i, s in zip(c.indices, c.samples):
            if i == index and abs(s.E - E) <= tol:
                return True
    return False


def _drop_contained(curves: list[EigenCurve], tol: float) -> list[EigenCurve]:
    """Remove curves whose every sample already lies on a longer curve.

    A seed sitting on a crossing can start a short trace that dies at once
    while another seed later traces straight through the same point.
    """
    keep = []
    for a, ca in enumerate(curves):
        contained = False
        for b, cb in enumerate(curves):
            if b == a or (len(cb), -b) <= (len(ca), -a):
                continue
            eb = dict(zip(cb.indices, cb.energies))
            if all(i in eb and abs(s.E - eb[i]) <= tol for i, s in zip(ca.indices, ca.samples)):
                contained = True
                break
        if not contained:
            keep.append(ca)
    return keep


def _mark_crossings(curves: list[EigenCurve], crossing_tol: float) -> None:
    for a in range(len(curves)):
        for b in range(a + 1, len(curves)):
            ca, cb = curves[a], curves[b]
            eb = dict(zip(cb.indices, cb.energies))
            hits = [
                (i, s.k) for i, s in zip(ca.indices, ca.samples)
                if i in eb and abs(s.E - eb[i]) <= crossing_tol
            ]
            for _, k in hits:
                ca.singular_points.append(SingularPoint(float(k), "crossing"))
                cb.singular_points.append(SingularPoint(float(k), "crossing"))


def compute_bands(
    V: StripPotential,
    grid: np.ndarray,
    window: tuple[float, float] | None = None,
    seed_stride: int = 16,
    grid_step: float = 1e-3,
    tol: float = 1e-12,
    accept_tol: float = 1e-9,
    residual_tol: float = 1e-7,
    eps_thr: float = DEFAULT_EPS_THR,
    crossing_tol: float = 1e-6,
    mapper=map,
) -> list[EigenCurve]:
    """Scan seed fibers, trace every unclaimed eigenvalue and label the curves.

    ``mapper`` may be a parallel ``map`` for the per-k seed scans.
    Curves get ``band_index`` in order of their mean energy and carry group
    velocities.
    """
    grid = np.asarray(grid, dtype=float)
    window = default_window(V) if window is None else tuple(window)
    seed_idx = list(range(0, grid.size, max(1, seed_stride)))
    scans = list(
        mapper(
            lambda i: scan_fiber_eigenvalues(
                grid[i], V, window, grid_step, tol, accept_tol, residual_tol, eps_thr
            ),
            seed_idx,
        )
    )
    curves: list[EigenCurve] = []
    for i, pairs in zip(seed_idx, scans):
        for pair in pairs:
            if _claimed(curves, i, pair.E, 1e-7):
                continue
            curves.append(
                trace_band(V, grid, pair, window, tol, accept_tol, residual_tol, eps_thr)
            )
    curves = _drop_contained(curves, crossing_tol)
    _mark_crossings(curves, crossing_tol)
    curves.sort(key=lambda c: (float(np.mean(c.energies)), c.indices[0]))
    out = []
    for n, c in enumerate(curves):
        c.band_index = n
        c.singular_points = sorted(set(c.singular_points), key=lambda p: (p.k, p.reason))
        out.append(group_velocity(c) if len(c) >= 3 else c)
    return out


def _pieces(curve: EigenCurve) -> list[tuple[int, int]]:
    """Split sample positions at interior crossings into contiguous pieces."""
    ks = curve.ks
    cuts = sorted({int(np.argmin(np.abs(ks - p.k))) for p in curve.singular_points
                   if p.reason == "crossing" and ks[0] < p.k < ks[-1]})
    bounds, start = [], 0
    for c in cuts:
        bounds.append((start, c + 1))
        start = c + 1
    bounds.append((start, len(ks)))
    return [b for b in bounds if b[1] > b[0]]


def group_velocity(curve: EigenCurve) -> EigenCurve:
    """Fill ``curve.derivative`` with ``dE/dk``.

    Second-order central differences inside, second-order one-sided at the
    ends; stencils never reach across a recorded crossing. A crossing-free
    curve that covers the whole dual torus and closes up continuously is
    differenced periodically.
    """
    if len(curve) < 3:
        raise InsufficientSamples(f"need at least 3 samples, got {len(curve)}")
    E = curve.energies
    L = curve.samples[0].profile.L
    full = abs(len(curve) * curve.dk * L - 2 * np.pi) < 1e-9
    crossings = any(p.reason == "crossing" for p in curve.singular_points)
    if full and not crossings and abs(E[0] - E[-1]) <= 2 * np.max(np.abs(np.diff(E))) + 1e-12:
        deriv = (np.roll(E, -1) - np.roll(E, 1)) / (2 * curve.dk)
        return replace(curve, derivative=deriv)
    deriv = np.full(E.size, np.nan)
    for a, b in _pieces(curve):
        seg = E[a:b]
        if seg.size >= 3:
            deriv[a:b] = np.gradient(seg, curve.dk, edge_order=2)
        elif seg.size == 2:
            deriv[a:b] = (seg[1] - seg[0]) / curve.dk
    return replace(curve, derivative=deriv)


def nonconstancy_check(curve: EigenCurve) -> dict:
    """Report whether a curve is flat (a red flag for a nonzero potential)."""
    if len(curve) < 2:
        raise InsufficientSamples("need at least 2 samples")
    E = curve.energies
    return {
        "is_constant": bool(E.max() - E.min() <= 1e-10),
        "total_variation": float(np.sum(np.abs(np.diff(E)))),
    }


def predict_transport(curve: EigenCurve, weights, grid: np.ndarray | None = None) -> dict:
    """Spectral prediction of the packet velocity along y.

    ``weights`` are samples ``a(k)`` on the full k-grid of ``M`` points (or
    on the curve's samples when ``grid`` is omitted). They are normalized
    so that ``(1/M) Σ |a|² = 1``; then::

        mean_velocity     = (1/M) Σ E'(k) |a(k)|²
        velocity_norm_sq  = (1/M) Σ E'(k)² |a(k)|²
    """
    if curve.derivative is None:
        curve = group_velocity(curve)
    a = np.asarray(weights, dtype=complex)
    if grid is None:
        if a.size != len(curve):
            raise ConfigurationError("weights must match the curve samples")
        idx = np.arange(len(curve))
        full = a
    else:
        grid = np.asarray(grid, dtype=float)
        if a.size != grid.size:
            raise ConfigurationError("weights must match the k-grid")
        idx = np.asarray(curve.indices)
        full = a
        outside = np.ones(grid.size, dtype=bool)
        outside[idx] = False
        if np.any(np.abs(full[outside]) > 0):
            raise ConfigurationError("weights are nonzero where the curve has no samples")
    check_weight_support(curve, full, grid)
    M = full.size
    w2 = np.abs(full) ** 2
    total = w2.sum() / M
    if total <= 0:
        raise ConfigurationError("weights vanish identically")
    w2 = w2 / total
    on_curve = w2[idx] if grid is not None else w2
    if np.any(np.isnan(curve.derivative[on_curve > 0])):
        raise ConfigurationError("weights touch samples without a derivative")
    d = np.nan_to_num(curve.derivative)
    return {
        "mean_velocity": float(np.sum(d * on_curve) / M),
        "velocity_norm_sq": float(np.sum(d**2 * on_curve) / M),
    }


def check_weight_support(curve: EigenCurve, weights: np.ndarray, grid) -> None:
    """Reject weights whose support comes within two grid cells of a singular point."""
    if not curve.singular_points:
        return
    ks = curve.ks if grid is None else np.asarray(grid)
    dk = curve.dk
    period = abs(dk) * ks.size if grid is not None else None
    support = ks[np.abs(weights) > 0]
    for p in curve.singular_points:
        dist = np.abs(support - p.k)
        if period:
            dist = np.minimum(dist, period - dist)
        if np.any(dist <= 2.0 * abs(dk) + 1e-12):
            raise ConfigurationError(
                f"weight support reaches the singular point k={p.k:.6g} ({p.reason})"
            )
