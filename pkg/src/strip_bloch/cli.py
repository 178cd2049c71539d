"""Command line driver: ``strip-bloch <job> --config run.json [--out DIR] [--threads N]``.

A config is a JSON object::

    {
      "potential": {"L": 1, "R": 0, "rows": [[-1.5]]}   # or a path to such a file
      "seed": 0,
      "output_dir": "out",                              # --out wins
      "params": {...},                                  # job-specific, see JOB_PARAMS
      "tolerances": {...}                               # optional overrides
    }

Physical parameters (grids, times, packet centers) must be given; only
numerical tolerances have defaults. Every job writes ``manifest.json`` next
to its outputs. Exit codes: 0 success, 1 I/O error, 2 invalid config,
3 numerical contract violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import __version__
from .dynamics import (
    Box,
    LatticeState,
    build_hamiltonian,
    cosine_taper,
    run_time_series,
    surface_box,
    synthesize_surface_state,
    transport_slopes,
)
from .errors import ConfigurationError, StripBlochError
from .fiber import StripPotential
from .scattering import (
    cook_integral,
    cook_integrand,
    make_da_state,
    scattering_box,
    scattering_velocity_check,
    wave_operator_apply,
)
from .spectrum import compute_bands, k_grid, predict_transport, scan_fiber_eigenvalues
from .transfer import DEFAULT_EPS_THR
from .validation import run_validation

log = logging.getLogger("strip_bloch")

JOBS = ("bands", "eigenmodes", "evolve", "scatter", "validate")

# required / optional keys of "params" per job
JOB_PARAMS = {
    "bands": ({"M"}, {"window", "seed_stride"}),
    "eigenmodes": ({"k_values"}, {"window", "X_max"}),
    "evolve": (
        {"packet", "T", "n_steps"},
        {"M", "k0", "half_width", "band_index", "Nx", "Ny", "sigma", "velocities", "window_fraction"},
    ),
    "scatter": (
        {"a", "center_k", "width", "T_list"},
        {"axes", "sharpness", "sigma_y", "k_y", "margin", "cook_times"},
    ),
    "validate": (set(), {"n_transfer", "n_k", "M"}),
}

DEFAULT_TOLERANCES = {
    "tol": 1e-12,
    "accept_tol": 1e-9,
    "residual_tol": 1e-7,
    "eps_thr": DEFAULT_EPS_THR,
    "crossing_tol": 1e-6,
    "grid_step": 1e-3,
    "boundary_tol": 1e-6,
    "scatter_boundary_tol": 1e-8,
    "cauchy_tol": 1e-5,
}

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


class RunContext:
    """Collects timings, derived choices, warnings and output digests."""

    def __init__(self, out_dir: Path, threads: int):
        self.out_dir = out_dir
        self.threads = threads
        self.timings: dict[str, float] = {}
        self.derived: dict = {}
        self.warnings: list[str] = []
        self.outputs: dict[str, str] = {}
        self._pool: ThreadPoolExecutor | None = None

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - t0, 6)

    def warn(self, msg: str) -> None:
        log.warning(msg)
        self.warnings.append(msg)

    def mapper(self):
        if self.threads <= 1:
            return map
        if self._pool is None:
            self._pool = ThreadPoolExecutor(self.threads)
        return self._pool.map

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text, encoding="utf-8")
        self.outputs[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return path

    def write_json(self, name: str, data) -> Path:
        return self.write_text(name, json.dumps(data, indent=2, sort_keys=True) + "\n")

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        return self.write_text(name, "\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------- config


def load_config(path: Path) -> dict:
    """Read and structurally validate a config file (I/O errors propagate)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError("config must be a JSON object")
    cfg.setdefault("params", {})
    cfg.setdefault("tolerances", {})
    cfg["_base"] = str(Path(path).resolve().parent)
    return cfg


def resolve_potential(cfg: dict) -> StripPotential:
    spec = cfg.get("potential")
    if spec is None:
        raise ConfigurationError("config needs a 'potential' (inline object or file path)")
    if isinstance(spec, str):
        p = Path(spec)
        if not p.is_absolute():
            p = Path(cfg["_base"]) / p
        if not p.is_file():
            raise ConfigurationError(f"potential file {p} does not exist")
        try:
            return StripPotential.from_json(p)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"potential file {p} is not valid JSON: {exc}") from exc
    if isinstance(spec, dict):
        return StripPotential.from_dict(spec)
    raise ConfigurationError("'potential' must be an object or a path")


def check_params(job: str, params: dict) -> None:
    required, optional = JOB_PARAMS[job]
    missing = sorted(required - params.keys())
    if missing:
        raise ConfigurationError(f"job '{job}' needs params {missing}")
    unknown = sorted(params.keys() - required - optional)
    if unknown:
        raise ConfigurationError(f"job '{job}' does not accept params {unknown}")


def resolve_tolerances(cfg: dict) -> dict:
    tols = dict(DEFAULT_TOLERANCES)
    for key, val in cfg["tolerances"].items():
        if key not in tols:
            raise ConfigurationError(f"unknown tolerance '{key}'")
        if not isinstance(val, (int, float)) or not val > 0:
            raise ConfigurationError(f"tolerance '{key}' must be positive, got {val!r}")
        tols[key] = float(val)
    return tols


def _positive_int(params: dict, key: str) -> int:
    v = params[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ConfigurationError(f"param '{key}' must be a positive integer, got {v!r}")
    return v


def _positive(params: dict, key: str) -> float:
    v = params[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
        raise ConfigurationError(f"param '{key}' must be positive, got {v!r}")
    return float(v)


def _window(params: dict):
    w = params.get("window")
    if w is None:
        return None
    if not (isinstance(w, list) and len(w) == 2 and w[0] < w[1]):
        raise ConfigurationError(f"window must be [lo, hi] with lo < hi, got {w!r}")
    return (float(w[0]), float(w[1]))


# ---------------------------------------------------------------- jobs


def _band_rows(curves):
    rows, singular = [], []
    for c in curves:
        d = c.derivative if c.derivative is not None else np.full(len(c), np.nan)
        for s, dE in zip(c.samples, d):
            rows.append([s.k, c.band_index, s.E, float(dE), s.embedded, s.sigma_min, s.residual, s.multiplicity])
        for p in c.singular_points:
            singular.append([p.k, c.band_index, p.reason])
    return rows, singular


BAND_HEADER = ["k", "band_index", "E", "dE_dk", "embedded", "sigma_min", "residual", "multiplicity"]


def job_bands(V, params, tols, ctx: RunContext) -> int:
    M = _positive_int(params, "M")
    grid = k_grid(V.L, M)
    with ctx.stage("compute_bands"):
        curves = compute_bands(
            V, grid, _window(params), params.get("seed_stride", 16), tols["grid_step"], tols["tol"],
            tols["accept_tol"], tols["residual_tol"], tols["eps_thr"], tols["crossing_tol"], ctx.mapper(),
        )
    rows, singular = _band_rows(curves)
    ctx.derived.update(k_grid_size=M, dk=float(grid[1] - grid[0]) if M > 1 else None, n_curves=len(curves))
    for c in curves:
        if len(c) < 3:
            ctx.warn(f"band {c.band_index} has only {len(c)} samples; no group velocity")
    ctx.write_csv("bands.csv", BAND_HEADER, rows)
    ctx.write_csv("singular_points.csv", ["k", "band_index", "reason"], singular)
    emit_plot_data(ctx.out_dir, ctx)
    return EXIT_OK


def job_eigenmodes(V, params, tols, ctx: RunContext) -> int:
    ks = params["k_values"]
    if not isinstance(ks, list) or not ks:
        raise ConfigurationError("k_values must be a nonempty list")
    X_max = params.get("X_max")
    rows, profiles = [], []
    with ctx.stage("scan"):
        for k in ks:
            pairs = scan_fiber_eigenvalues(
                float(k), V, _window(params), tols["grid_step"], tols["tol"], tols["accept_tol"],
                tols["residual_tol"], tols["eps_thr"], X_max,
            )
            for n, p in enumerate(pairs):
                rows.append([p.k, n, p.E, p.multiplicity, p.embedded, p.sigma_min, p.residual, p.decay_rate])
                mass = np.sum(np.abs(p.profile.amplitudes) ** 2, axis=1)
                profiles.append({
                    "k": p.k, "E": p.E, "x_min": p.profile.x_min,
                    "column_mass": [float(m) for m in mass / mass.sum()],
                })
    ctx.derived["n_eigenpairs"] = len(rows)
    ctx.write_csv(
        "eigenmodes.csv",
        ["k", "index", "E", "multiplicity", "embedded", "sigma_min", "residual", "decay_rate"],
        rows,
    )
    ctx.write_json("eigenmodes.json", profiles)
    return EXIT_OK


def _surface_packet(V, params, tols, ctx):
    for key in ("M", "k0", "half_width"):
        if key not in params:
            raise ConfigurationError(f"surface packet needs param '{key}'")
    M = _positive_int(params, "M")
    half_width = _positive(params, "half_width")
    T = _positive(params, "T")
    grid = k_grid(V.L, M)
    with ctx.stage("compute_bands"):
        curves = compute_bands(
            V, grid, None, 16, tols["grid_step"], tols["tol"], tols["accept_tol"], tols["residual_tol"],
            tols["eps_thr"], tols["crossing_tol"], ctx.mapper(),
        )
    band = params.get("band_index", 0)
    matches = [c for c in curves if c.band_index == band]
    if not matches:
        raise ConfigurationError(f"no band with index {band} (found {len(curves)})")
    curve = matches[0]
    weights = cosine_taper(grid, float(params["k0"]), half_width, 2 * np.pi / V.L)
    pred = predict_transport(curve, weights, grid)
    used = [s.decay_rate for s, i in zip(curve.samples, curve.indices) if weights[i] > 0]
    rho = max(used) if used else 0.0
    Nx = params.get("Nx") or surface_box(V.R, rho, T)
    with ctx.stage("synthesize"):
        state = synthesize_surface_state(curve, weights, V, Nx, center_y=V.L * M // 2, eps_thr=tols["eps_thr"])
    ctx.derived.update(Nx=Nx, Ny=V.L * M, y_boundary="periodic", band_index=band, decay_rate=rho)
    return state, {"mean_velocity_Y": pred["mean_velocity"], "velocity_norm_sq": pred["velocity_norm_sq"]}


def _gaussian_packet(V, params, ctx):
    for key in ("k0", "sigma", "Nx", "Ny"):
        if key not in params:
            raise ConfigurationError(f"gaussian packet needs param '{key}'")
    kx, ky = (float(v) for v in params["k0"])
    sigma = _positive(params, "sigma")
    Nx, Ny = _positive_int(params, "Nx"), _positive_int(params, "Ny")
    if Ny % V.L:
        raise ConfigurationError(f"Ny={Ny} must be a multiple of L={V.L}")
    box = Box(Nx, Ny, "periodic", -(Ny // 2))
    x = box.xs[:, None].astype(float)
    y = box.ys[None, :].astype(float)
    amp = np.exp(-(x**2 + y**2) / (4 * sigma**2) + 1j * (kx * x + ky * y))
    ctx.derived.update(Nx=Nx, Ny=Ny, y_boundary="periodic")
    pred = {"mean_velocity_X": -2 * np.sin(kx), "mean_velocity_Y": -2 * np.sin(ky)}
    return LatticeState(box, amp).normalized(), pred


def job_evolve(V, params, tols, ctx: RunContext) -> int:
    T = _positive(params, "T")
    n_steps = _positive_int(params, "n_steps")
    kind = params["packet"]
    if kind == "surface":
        state, pred = _surface_packet(V, params, tols, ctx)
    elif kind == "gaussian":
        state, pred = _gaussian_packet(V, params, ctx)
    else:
        raise ConfigurationError(f"packet must be 'surface' or 'gaussian', got {kind!r}")
    velocities = tuple(float(v) for v in params.get("velocities", (0.5, 1.0)))
    frac = params.get("window_fraction", [0.5, 1.0])
    window = (frac[0] * T, frac[1] * T)
    H = build_hamiltonian(V, state.box)
    with ctx.stage("evolve"):
        series, _ = run_time_series(state, H, T, n_steps, velocities, tol=tols["tol"])
    ctx.write_csv("transport.csv", series.header(), series.rows())
    emit_plot_data(ctx.out_dir, ctx)
    norm_drift = float(np.max(np.abs(np.asarray(series.norm) - series.norm[0])))
    energy_drift = float(np.max(np.abs(np.asarray(series.energy) - series.energy[0])))
    bm = float(np.max(series.boundary_mass))
    if bm > tols["boundary_tol"]:
        ctx.warn(f"boundary mass reached {bm:.3g}")
    slopes = transport_slopes(series, window, tols["boundary_tol"])
    report = {
        "measured": slopes,
        "prediction": pred,
        "window": list(window),
        "box": {"Nx": state.box.Nx, "Ny": state.box.Ny, "y_boundary": state.box.y_boundary},
        "norm_drift": norm_drift,
        "energy_drift": energy_drift,
        "boundary_mass_max": bm,
        "final_chi_mass": {f"{v:g}": series.chi[v][-1] for v in sorted(series.chi)},
    }
    if "mean_velocity_Y" in pred and pred["mean_velocity_Y"] != 0:
        report["relative_error_Y"] = abs(slopes["vel_Y"] / pred["mean_velocity_Y"] - 1)
    ctx.write_json("slopes.json", report)
    return EXIT_OK


def job_scatter(V, params, tols, ctx: RunContext) -> int:
    T_list = sorted(float(t) for t in params["T_list"])
    if not T_list or T_list[0] <= 0:
        raise ConfigurationError("T_list must hold positive times")
    a, center, width = _positive(params, "a"), float(params["center_k"]), _positive(params, "width")
    sigma_y = float(params.get("sigma_y", 4.0))
    k_y = float(params.get("k_y", np.pi / 2))
    box = scattering_box(T_list[-1], params.get("margin", 60), sigma_y, k_y)
    da = make_da_state(a, center, width, box, sigma_y, k_y, sharpness=params.get("sharpness", 30.0))
    ctx.derived.update(Nx=box.Nx, Ny=box.Ny, y_min=box.y_min, y_boundary=box.y_boundary,
                       fourier_support_margin=da.fourier_support_margin)
    H = build_hamiltonian(V, box)
    btol = tols["scatter_boundary_tol"]
    with ctx.stage("velocity_check"):
        vel = scattering_velocity_check(da, V, T_list, tuple(params.get("axes", ("x", "y"))), H, btol)
    gaps = {}
    with ctx.stage("cauchy"):
        for T in T_list:
            _, rep = wave_operator_apply(da, V, T, H, tols["cauchy_tol"], btol)
            gaps[f"{T:g}"] = {"gap": rep["cauchy_gap"], "converged": rep["converged"], "norm_drift": rep["norm_drift"]}
            if not rep["converged"]:
                ctx.warn(f"Cauchy gap {rep['cauchy_gap']:.3g} at T={T:g} exceeds {tols['cauchy_tol']:g}")
    cook_times = params.get("cook_times", [0.0, 10.0, 20.0, 40.0])
    with ctx.stage("cook"):
        cook = {
            "integrand": {f"{t:g}": cook_integrand(da, V, float(t)) for t in cook_times},
            "integral": {f"{T:g}": cook_integral(da, V, T) for T in (T_list[-1], 2 * T_list[-1])},
        }
    report = {
        "a": a, "center_k": center, "width": width, "T_list": T_list,
        "r": vel["r"], "r_plus_P": vel["r_plus_P"],
        "omega_norm_drift": vel["omega_norm_drift"], "boundary_mass_max": vel["boundary_mass_max"],
        "cauchy": gaps, "cook": cook,
    }
    ctx.write_json("scattering_report.json", report)
    return EXIT_OK


def job_validate(V, params, tols, ctx: RunContext, seed: int) -> int:
    with ctx.stage("validate"):
        checks = run_validation(V, seed, params.get("n_transfer", 1000), params.get("n_k", 4), params.get("M", 64))
    ctx.write_json("validation.json", {"seed": seed, "checks": checks})
    failed = [c["name"] for c in checks if not c["passed"]]
    for c in checks:
        log.info("%-28s %s", c["name"], "PASS" if c["passed"] else "FAIL")
    if failed:
        ctx.warn(f"failed checks: {failed}")
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------- plot data


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def emit_plot_data(out_dir: Path, ctx: RunContext | None = None) -> list[Path]:
    """Mirror ``bands.csv`` and ``transport.csv`` as whitespace tables for gnuplot.

    ``bands.dat`` holds one block per band separated by a blank line.

    Raises
    ------
    FileNotFoundError
        If neither table exists in ``out_dir``.
    """
    out_dir = Path(out_dir)
    written = []
    bands, transport = out_dir / "bands.csv", out_dir / "transport.csv"
    if not bands.exists() and not transport.exists():
        raise FileNotFoundError(f"no bands.csv or transport.csv in {out_dir}")
    if bands.exists():
        header, rows = _read_csv(bands)
        blocks: dict[str, list[list[str]]] = {}
        for r in rows:
            blocks.setdefault(r[1], []).append(r)
        text = "# " + " ".join(header) + "\n"
        text += "\n\n".join("\n".join(" ".join(r) for r in blk) for _, blk in sorted(blocks.items(), key=lambda kv: int(kv[0])))
        if rows:
            text += "\n"
        else:
            msg = "band set is empty; bands.dat has no data"
            ctx.warn(msg) if ctx else log.warning(msg)
        written.append(_write_plot(out_dir / "bands.dat", text, ctx))
    if transport.exists():
        header, rows = _read_csv(transport)
        text = "# " + " ".join(header) + "\n" + "".join(" ".join(r) + "\n" for r in rows)
        written.append(_write_plot(out_dir / "transport.dat", text, ctx))
    return written


def _write_plot(path: Path, text: str, ctx: RunContext | None) -> Path:
    if ctx is not None:
        return ctx.write_text(path.name, text)
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------- driver


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("STRIP_BLOCH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"STRIP_BLOCH_THREADS must be an integer, got {env!r}")
    return 1


def run(job: str, config_path: Path, out: Path | None = None, threads: int | None = None) -> int:
    """Execute one job; returns the process exit code."""
    t0 = time.perf_counter()
    try:
        cfg = load_config(config_path)
    except ConfigurationError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    try:
        n_threads = _threads(threads)
        if cfg.get("job", job) != job:
            raise ConfigurationError(f"config is for job '{cfg['job']}', not '{job}'")
        V = resolve_potential(cfg)
        params = cfg["params"]
        check_params(job, params)
        tols = resolve_tolerances(cfg)
        seed = cfg.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigurationError(f"seed must be an integer, got {seed!r}")
        out_dir = Path(out or cfg.get("output_dir") or "strip_bloch_out")
    except ConfigurationError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory: %s", exc)
        return EXIT_IO
    ctx = RunContext(out_dir, n_threads)
    code = EXIT_OK
    error = None
    try:
        with threadpool_limits(n_threads):
            if job == "bands":
                code = job_bands(V, params, tols, ctx)
            elif job == "eigenmodes":
                code = job_eigenmodes(V, params, tols, ctx)
            elif job == "evolve":
                code = job_evolve(V, params, tols, ctx)
            elif job == "scatter":
                code = job_scatter(V, params, tols, ctx)
            else:
                code = job_validate(V, params, tols, ctx, seed)
    except ConfigurationError as exc:
        error, code = f"invalid config: {exc}", EXIT_CONFIG
    except StripBlochError as exc:
        error, code = f"{type(exc).__name__}: {exc}", EXIT_NUMERICAL
    except OSError as exc:
        error, code = f"I/O error: {exc}", EXIT_IO
    finally:
        ctx.close()
    if error:
        log.error(error)
    manifest = {
        "job": job,
        "config": {k: v for k, v in cfg.items() if k != "_base"},
        "potential": V.to_dict(),
        "tolerances": tols,
        "seed": seed,
        "version": __version__,
        "environment": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__},
        "threads": n_threads,
        "wall_time_s": round(time.perf_counter() - t0, 6),
        "timings": ctx.timings,
        "derived": ctx.derived,
        "warnings": ctx.warnings,
        "error": error,
        "exit_code": code,
        "outputs": ctx.outputs,
    }
    try:
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    except OSError as exc:
        log.error("cannot write manifest: %s", exc)
        return EXIT_IO
    return code


JOB_HELP = {
    "bands": "trace eigenvalue curves E_n(k) over the dual torus",
    "eigenmodes": "fiber eigenvalues and eigenvectors at given k",
    "evolve": "time-evolve a surface or Gaussian packet and fit transport",
    "scatter": "wave-operator and asymptotic-velocity checks for a D_a state",
    "validate": "run the built-in oracle suite",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strip-bloch", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="job", required=True)
    for job in JOBS:
        p = sub.add_parser(job, help=JOB_HELP[job])
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    p = sub.add_parser("plot-data", help="regenerate .dat tables from existing CSV outputs")
    p.add_argument("--out", type=Path, required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    if args.job == "plot-data":
        try:
            emit_plot_data(args.out)
        except OSError as exc:
            log.error("%s", exc)
            return EXIT_IO
        return EXIT_OK
    if args.threads is not None and args.threads < 1:
        log.error("--threads must be positive")
        return EXIT_CONFIG
    return run(args.job, args.config, args.out, args.threads)


if __name__ == "__main__":
    sys.exit(main())
