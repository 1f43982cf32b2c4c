"""Command-line front end: phantom, simulate, invert, landscape, validate.

Every run is driven by one JSON config; missing keys fall back to the
stock Austria benchmark setup, and the fully materialized config is copied
next to the outputs so a run can be reproduced from its output directory
alone.  Exit codes: 0 success, 2 config error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analysis, csi_core, fdfd, geometry, mie, scenario
from .csi_core import Variant
from .errors import ConfigurationError, NumericalError

__all__ = [
    "RunConfig",
    "load_run_config",
    "cmd_phantom",
    "cmd_simulate",
    "cmd_invert",
    "cmd_landscape",
    "cmd_validate",
    "main",
]


@dataclass(frozen=True)
class RunConfig:
    """One run's worth of knobs, all materialized.

    ``snr_db`` of infinity means noise-free and serializes as null.  The
    phantom case is either the stock two-disk-and-ring layout scaled by the
    two offset amplitudes, or "none" for empty space.
    """

    measurement: scenario.MeasurementConfig
    snr_db: float = math.inf
    seed: int = 0
    variant: Variant = Variant.CC
    max_iterations: int = 2048
    synthesis_dx_m: float = 0.03
    inversion_dx_m: float = 0.06
    grid_halfwidth_m: float = 3.15
    imaging_halfwidth_m: float = 1.2
    phantom_case: str = "austria"
    phantom_d_eps: float = 2.0
    phantom_d_sigma: float = 0.005
    threads: int = 1

    def to_json(self) -> str:
        doc = {
            "source_angles_deg": self.measurement.source_angles_deg.tolist(),
            "receiver_relative_angles_deg":
                self.measurement.receiver_relative_angles_deg.tolist(),
            "radius_m": self.measurement.radius_m,
            "frequencies_hz": self.measurement.frequencies_hz.tolist(),
            "snr_db": None if math.isinf(self.snr_db) else self.snr_db,
            "seed": self.seed,
            "variant": self.variant.value,
            "max_iterations": self.max_iterations,
            "synthesis_dx_m": self.synthesis_dx_m,
            "inversion_dx_m": self.inversion_dx_m,
            "grid_halfwidth_m": self.grid_halfwidth_m,
            "imaging_halfwidth_m": self.imaging_halfwidth_m,
            "phantom": {"case": self.phantom_case,
                        "d_eps": self.phantom_d_eps,
                        "d_sigma": self.phantom_d_sigma},
            "threads": self.threads,
        }
        return json.dumps(doc, indent=2) + "\n"


_KNOWN_KEYS = {
    "source_angles_deg", "receiver_relative_angles_deg", "radius_m",
    "frequencies_hz", "snr_db", "seed", "variant", "max_iterations",
    "synthesis_dx_m", "inversion_dx_m", "grid_halfwidth_m",
    "imaging_halfwidth_m", "phantom", "threads",
}


def run_config_from_json(text: str) -> RunConfig:
    """Parse a config document, collecting every problem into one report."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("config document must be a JSON object")

    problems = []
    defaults = scenario.default_config()

    unknown = sorted(set(doc) - _KNOWN_KEYS)
    if unknown:
        problems.append(f"unknown keys: {', '.join(unknown)}")

    measurement = defaults
    try:
        measurement = scenario.MeasurementConfig(
            source_angles_deg=doc.get("source_angles_deg",
                                      defaults.source_angles_deg),
            receiver_relative_angles_deg=doc.get(
                "receiver_relative_angles_deg",
                defaults.receiver_relative_angles_deg),
            radius_m=doc.get("radius_m", defaults.radius_m),
            frequencies_hz=doc.get("frequencies_hz", defaults.frequencies_hz))
    except (ConfigurationError, TypeError, ValueError) as exc:
        problems.append(f"measurement geometry: {exc}")

    def number(key, default, cond, desc):
        raw = doc.get(key, default)
        try:
            value = float(raw)
        except (TypeError, ValueError):
            problems.append(f"{key} must be a number")
            return default
        if not cond(value):
            problems.append(f"{key} must be {desc}")
            return default
        return value

    snr_raw = doc.get("snr_db", None)
    snr_db = math.inf
    if snr_raw is not None:
        try:
            snr_db = float(snr_raw)
            if not (math.isfinite(snr_db) or snr_db == math.inf):
                problems.append("snr_db must be finite, positive infinity or null")
        except (TypeError, ValueError):
            problems.append("snr_db must be a number or null")

    try:
        seed = int(doc.get("seed", 0))
    except (TypeError, ValueError):
        problems.append("seed must be an integer")
        seed = 0

    variant = Variant.CC
    try:
        variant = Variant.from_name(doc.get("variant", "cc"))
    except ConfigurationError as exc:
        problems.append(str(exc))

    try:
        max_iterations = int(doc.get("max_iterations", 2048))
        if max_iterations < 0:
            problems.append("max_iterations must be non-negative")
    except (TypeError, ValueError):
        problems.append("max_iterations must be an integer")
        max_iterations = 2048

    synthesis_dx = number("synthesis_dx_m", 0.03, lambda v: v > 0, "positive")
    inversion_dx = number("inversion_dx_m", 0.06, lambda v: v > 0, "positive")
    if synthesis_dx >= inversion_dx:
        problems.append("synthesis_dx_m must be strictly finer than inversion_dx_m")
    grid_hw = number("grid_halfwidth_m", 3.15, lambda v: v > 0, "positive")
    imaging_hw = number("imaging_halfwidth_m", 1.2, lambda v: v > 0, "positive")
    if imaging_hw >= grid_hw:
        problems.append("imaging_halfwidth_m must be smaller than grid_halfwidth_m")

    phantom = doc.get("phantom", {})
    if not isinstance(phantom, dict):
        problems.append("phantom must be an object")
        phantom = {}
    case = phantom.get("case", "austria")
    if case not in ("austria", "none"):
        problems.append(f"phantom case {case!r} not recognized (austria or none)")
    unknown = sorted(set(phantom) - {"case", "d_eps", "d_sigma"})
    if unknown:
        problems.append(f"unknown phantom keys: {', '.join(unknown)}")

    def phantom_number(key, default):
        raw = phantom.get(key, default)
        try:
            value = float(raw)
        except (TypeError, ValueError):
            problems.append(f"phantom {key} must be a number")
            return default
        if value < 0:
            problems.append(f"phantom {key} must be non-negative")
            return default
        return value

    d_eps = phantom_number("d_eps", 2.0)
    d_sigma = phantom_number("d_sigma", 0.005)

    try:
        threads = int(doc.get("threads", 1))
        if threads < 1:
            problems.append("threads must be at least 1")
    except (TypeError, ValueError):
        problems.append("threads must be an integer")
        threads = 1

    if problems:
        raise ConfigurationError("invalid config:\n  " + "\n  ".join(problems))

    return RunConfig(measurement=measurement, snr_db=snr_db, seed=seed,
                     variant=variant, max_iterations=max_iterations,
                     synthesis_dx_m=synthesis_dx, inversion_dx_m=inversion_dx,
                     grid_halfwidth_m=grid_hw, imaging_halfwidth_m=imaging_hw,
                     phantom_case=case, phantom_d_eps=d_eps,
                     phantom_d_sigma=d_sigma, threads=threads)


def load_run_config(path, overrides) -> RunConfig:
    """Config from a JSON file (or all defaults), with CLI overrides applied."""
    if path is not None:
        rc = run_config_from_json(Path(path).read_text(encoding="utf-8"))
    else:
        rc = RunConfig(measurement=scenario.default_config())
    if getattr(overrides, "variant", None):
        rc = replace(rc, variant=Variant.from_name(overrides.variant))
    if getattr(overrides, "iterations", None) is not None:
        if overrides.iterations < 0:
            raise ConfigurationError("--iterations must be non-negative")
        rc = replace(rc, max_iterations=overrides.iterations)
    if getattr(overrides, "snr_db", None) is not None:
        rc = replace(rc, snr_db=overrides.snr_db)
    if getattr(overrides, "seed", None) is not None:
        rc = replace(rc, seed=overrides.seed)
    if getattr(overrides, "threads", None) is not None:
        if overrides.threads < 1:
            raise ConfigurationError("--threads must be at least 1")
        rc = replace(rc, threads=overrides.threads)
    return rc


def synthesis_grid(rc: RunConfig) -> geometry.Cartesian2DGrid:
    hw = rc.grid_halfwidth_m
    return geometry.Cartesian2DGrid.covering(-hw, hw, -hw, hw, rc.synthesis_dx_m)


def inversion_grid(rc: RunConfig) -> geometry.Cartesian2DGrid:
    hw = rc.grid_halfwidth_m
    return geometry.Cartesian2DGrid.covering(-hw, hw, -hw, hw, rc.inversion_dx_m)


def imaging_subdomain(rc: RunConfig, grid) -> geometry.SubdomainIndexSet:
    hw = rc.imaging_halfwidth_m
    return geometry.subdomain_indices(grid, -hw, hw, -hw, hw)


def phantom_map(rc: RunConfig, grid,
                subdomain=None) -> geometry.ContrastMap:
    if rc.phantom_case == "none":
        m = grid.n if subdomain is None else subdomain.m
        return geometry.ContrastMap(np.zeros(m), np.zeros(m))
    return geometry.make_austria_phantom(grid, rc.phantom_d_eps,
                                         rc.phantom_d_sigma,
                                         subdomain=subdomain)


def _prepare_out(out, names, overwrite: bool) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    clashes = [str(out / n) for n in names if (out / n).exists()]
    if clashes and not overwrite:
        raise FileExistsError(
            "refusing to overwrite existing files (pass --overwrite): "
            + ", ".join(clashes))
    return out


def _write_config(out: Path, rc: RunConfig) -> None:
    (out / "config.json").write_text(rc.to_json(), encoding="utf-8")


def save_state_npz(path, state: csi_core.InversionState, variant: Variant) -> None:
    np.savez_compressed(
        path, j=state.j, e_tot=state.e_tot, chi=state.chi,
        d_eps=state.master.d_eps, d_sigma=state.master.d_sigma,
        rho=state.rho, gamma=state.gamma, xi=state.xi,
        eta_s=state.eta_s, eta_d=state.eta_d,
        iteration=np.int64(state.iteration), variant=np.str_(variant.value))


def load_solution_point(path) -> analysis.SolutionPoint:
    with np.load(path) as archive:
        return analysis.SolutionPoint(chi=archive["chi"], e_tot=archive["e_tot"])


def cmd_phantom(rc: RunConfig, out, overwrite=False) -> int:
    grid = synthesis_grid(rc)
    contrast = phantom_map(rc, grid)
    names = ["config.json"] + [f"phantom_{part}{ext}" for part in ("eps", "sigma")
                               for ext in (".csv", ".pgm", ".pgm.minmax")]
    out = _prepare_out(out, names, overwrite)
    _write_config(out, rc)
    files = analysis.export_map(out / "phantom", grid, contrast)
    print(f"phantom maps written under {out} "
          f"({grid.nx}x{grid.ny} cells at {rc.synthesis_dx_m} m)")
    for f in files:
        print(f"  {f}")
    return 0


def cmd_simulate(rc: RunConfig, out, overwrite=False) -> int:
    grid = synthesis_grid(rc)
    contrast = phantom_map(rc, grid)
    inv_grid = inversion_grid(rc)
    ms = scenario.synthesize(rc.measurement, contrast, grid,
                             inversion_grid=inv_grid, threads=rc.threads)
    ms = scenario.add_noise(ms, rc.snr_db, rc.seed)
    out = _prepare_out(out, ["config.json", "measurements.csv"], overwrite)
    _write_config(out, rc)
    scenario.save_measurements_csv(out / "measurements.csv", ms)
    level = "noise-free" if math.isinf(rc.snr_db) else f"{rc.snr_db:g} dB SNR"
    print(f"synthesized {ms.scattered.shape} scattered samples ({level}, "
          f"seed {rc.seed}) -> {out / 'measurements.csv'}")
    return 0


def cmd_invert(rc: RunConfig, data_path, out, overwrite=False) -> int:
    ms = scenario.load_measurements_csv(data_path, rc.measurement)
    grid = inversion_grid(rc)
    sub = imaging_subdomain(rc, grid)
    model, data, e_inc = csi_core.prepare_inversion(rc.measurement, ms, grid, sub)
    truth = None
    if rc.phantom_case != "none":
        truth = phantom_map(rc, grid, subdomain=sub)
    master, records, state = csi_core.run(
        model, data, e_inc, rc.variant, max_iterations=rc.max_iterations,
        truth=truth, seed=rc.seed)
    names = ["config.json", "log.csv", "state.npz"] + \
        [f"contrast_{part}{ext}" for part in ("eps", "sigma")
         for ext in (".csv", ".pgm", ".pgm.minmax")]
    out = _prepare_out(out, names, overwrite)
    _write_config(out, rc)
    analysis.export_curves(out / "log.csv", records)
    analysis.export_map(out / "contrast", grid, master, sub)
    save_state_npz(out / "state.npz", state, rc.variant)
    if records:
        last = records[-1]
        err_text = "n/a" if math.isnan(last.err) else f"{last.err:.4f}"
        print(f"{rc.variant.value} inversion, {len(records)} iterations: "
              f"cost_half {last.cost_half:.6g}, err {err_text}")
    print(f"results under {out}")
    return 0


def cmd_landscape(rc: RunConfig, data_path, cc_path, mr_path, out,
                  act_path=None, samples=61, overwrite=False) -> int:
    if samples < 2:
        raise ConfigurationError("--samples must be at least 2")
    ms = scenario.load_measurements_csv(data_path, rc.measurement)
    if ms.incident is None:
        raise ConfigurationError("landscape needs incident-field data")
    grid = inversion_grid(rc)
    sub = imaging_subdomain(rc, grid)
    model, data, e_inc = csi_core.prepare_inversion(rc.measurement, ms, grid, sub)
    x_cc = load_solution_point(cc_path)
    x_mr = load_solution_point(mr_path)
    if act_path is not None:
        x_act = load_solution_point(act_path)
    else:
        if rc.phantom_case == "none":
            raise ConfigurationError(
                "no actual solution available: give --act or a phantom case")
        truth = phantom_map(rc, grid, subdomain=sub)
        e_inc_full = csi_core.calibrated_incident_stack(rc.measurement, grid,
                                                        ms.incident)
        x_act = analysis.actual_solution_point(model, truth, e_inc_full)
    betas = np.linspace(-1.5, 1.5, samples)
    costfn = analysis.make_costfn(model, data, e_inc)
    matrix = analysis.landscape(costfn, x_cc, x_mr, x_act,
                                beta1_values=betas, beta2_values=betas)
    out = _prepare_out(out, ["config.json", "landscape.csv"], overwrite)
    _write_config(out, rc)
    analysis.landscape_to_csv(out / "landscape.csv", matrix, betas, betas)
    where = f"{out / 'landscape.csv'}"
    if np.all(np.isnan(matrix)):
        print(f"landscape {samples}x{samples} written to {where}; "
              "every sample failed to evaluate")
    else:
        a, b = np.unravel_index(np.nanargmin(matrix), matrix.shape)
        print(f"landscape {samples}x{samples} written to {where}; minimum "
              f"{matrix[a, b]:.3f} at beta1={betas[a]:.3g}, beta2={betas[b]:.3g}")
    return 0


def _validate_mie() -> tuple:
    eps_r, radius, freq = 3.0, 0.2, 0.3e9
    lam_inside = fdfd.C0 / freq / math.sqrt(eps_r)
    grid = geometry.Cartesian2DGrid.covering(-3.15, 3.15, -3.15, 3.15,
                                             lam_inside / 30.0)
    config = scenario.MeasurementConfig(
        source_angles_deg=[0.0],
        receiver_relative_angles_deg=np.arange(60.0, 301.0, 15.0),
        radius_m=3.0, frequencies_hz=[freq])
    d_eps = (eps_r - 1.0) * geometry.disk_cell_fractions(grid, 0.0, 0.0, radius)
    ms = scenario.synthesize(config, geometry.ContrastMap(d_eps, np.zeros(grid.n)),
                             grid)
    src = config.source_positions()[0]
    ix, iy = grid.cell_of(src[0], src[1])
    snapped = (grid.x0 + ix * grid.dx, grid.y0 + iy * grid.dy)
    oracle = mie.cylinder_scattered_field(
        2 * math.pi * freq, eps_r, radius, snapped, config.receiver_positions(0))
    err = (np.linalg.norm(ms.scattered[0, 0] - oracle)
           / np.linalg.norm(oracle))
    return float(err), 0.02


def _validate_adjoints() -> tuple:
    grid = geometry.Cartesian2DGrid.covering(-1.0, 1.0, -1.0, 1.0, 0.1)
    sub = geometry.subdomain_indices(grid, -0.41, 0.41, -0.41, 0.41)
    op = fdfd.assemble_tm(grid, 2 * math.pi * 0.2e9)
    angles = np.arange(0.0, 360.0, 45.0)
    rx = fdfd.receiver_operator(
        grid, 0.8 * np.stack([np.cos(np.deg2rad(angles)),
                              np.sin(np.deg2rad(angles))], axis=1))
    rng = np.random.default_rng(2026)
    worst = 0.0
    for _ in range(50):
        svec = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        v = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        lhs = np.vdot(v, fdfd.solve(op, svec))
        rhs = np.vdot(fdfd.solve_adjoint(op, v), svec)
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
        x = rng.standard_normal(sub.m) + 1j * rng.standard_normal(sub.m)
        y = rng.standard_normal(angles.size) + 1j * rng.standard_normal(angles.size)
        lhs = np.vdot(y, fdfd.measure(op, rx, sub, x))
        rhs = np.vdot(fdfd.measure_adjoint(op, rx, sub, y), x)
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    return float(worst), 1e-10


def _validate_gradients() -> tuple:
    grid = geometry.Cartesian2DGrid.covering(-0.9, 0.9, -0.9, 0.9, 0.1, pml_cells=6)
    sub = geometry.subdomain_indices(grid, -0.36, 0.36, -0.36, 0.36)
    config = scenario.MeasurementConfig(
        source_angles_deg=[0.0, 180.0],
        receiver_relative_angles_deg=[90.0, 180.0, 270.0],
        radius_m=0.7, frequencies_hz=[0.2e9, 0.3e9])
    model = csi_core.build_model(config, grid, sub)
    omegas = config.omegas()
    m = sub.m
    e_inc = np.zeros((2, 2, m), dtype=np.complex128)
    for i, omega in enumerate(omegas):
        e_inc[:, i, :] = scenario.incident_fields(config, grid, omega)[:, sub.indices]
    rng = np.random.default_rng(7)
    j = rng.standard_normal((2, 2, m)) + 1j * rng.standard_normal((2, 2, m))
    master = geometry.ContrastMap(rng.uniform(0.05, 0.4, m),
                                  rng.uniform(0.0, 0.2, m) * omegas[0])
    chi = np.stack([geometry.chi_at_frequency(master, w) for w in omegas])
    data = np.zeros((2, 2, 3), dtype=np.complex128)
    for i in range(2):
        for p in range(2):
            data[p, i] = model.sample(p, i, rng.standard_normal(m)
                                      + 1j * rng.standard_normal(m))
    eta_s, eta_d = csi_core.compute_eta(model, data, e_inc, chi)
    rho, gamma, xi = csi_core.residuals(model, data, e_inc, j, chi)
    e_tot = np.zeros_like(j)
    for i in range(2):
        for p in range(2):
            e_tot[p, i] = e_inc[p, i] + model.field(i, j[p, i])
    state = csi_core.InversionState(
        j=j, e_tot=e_tot, master=master, chi=chi, rho=rho, gamma=gamma, xi=xi,
        eta_s=eta_s, eta_d=eta_d, g_prev=np.zeros_like(j),
        nu_prev=np.zeros_like(j), g_chi_prev=np.zeros(m, dtype=np.complex128),
        nu_chi_prev=np.zeros(m, dtype=np.complex128))

    def cost_of(j_arr):
        r, g_, x_ = csi_core.residuals(model, data, e_inc, j_arr, chi)
        probe = csi_core.InversionState(
            j=j_arr, e_tot=e_tot, master=master, chi=chi, rho=r, gamma=g_, xi=x_,
            eta_s=eta_s, eta_d=eta_d, g_prev=np.zeros_like(j),
            nu_prev=np.zeros_like(j), g_chi_prev=np.zeros(m, dtype=np.complex128),
            nu_chi_prev=np.zeros(m, dtype=np.complex128))
        return csi_core.cost_half(probe, Variant.CC)

    worst = 0.0
    for _ in range(5):
        p, i = int(rng.integers(2)), int(rng.integers(2))
        g = csi_core.grad_j(model, state, p, i, Variant.CC)
        delta = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        delta /= np.linalg.norm(delta)
        eps = 1e-6 * (1.0 + np.linalg.norm(j[p, i]))
        jp = j.copy()
        jp[p, i] += eps * delta
        jm = j.copy()
        jm[p, i] -= eps * delta
        fd = (cost_of(jp) - cost_of(jm)) / (2 * eps)
        analytic = float(np.real(np.vdot(delta, g)))
        worst = max(worst, abs(fd - analytic) / max(abs(analytic), 1e-30))

    gc = csi_core.grad_chi(model, state, Variant.CC)

    def cost_chi(d_eps, d_sigma):
        probe_master = geometry.ContrastMap(d_eps, d_sigma)
        probe_chi = np.stack([geometry.chi_at_frequency(probe_master, w)
                              for w in omegas])
        gam = np.zeros_like(gamma)
        xi2 = np.zeros_like(xi)
        for ii in range(2):
            for pp in range(2):
                est = probe_chi[ii] * e_tot[pp, ii]
                gam[pp, ii] = est - j[pp, ii]
                xi2[pp, ii] = data[pp, ii] - model.sample(pp, ii, est)
        probe = csi_core.InversionState(
            j=j, e_tot=e_tot, master=probe_master, chi=probe_chi, rho=rho,
            gamma=gam, xi=xi2, eta_s=eta_s, eta_d=eta_d,
            g_prev=np.zeros_like(j), nu_prev=np.zeros_like(j),
            g_chi_prev=np.zeros(m, dtype=np.complex128),
            nu_chi_prev=np.zeros(m, dtype=np.complex128))
        return csi_core.cost_half(probe, Variant.CC)

    for cell in rng.choice(m, 3, replace=False):
        h = 1e-6 * (1.0 + abs(master.d_eps[cell]))
        up = master.d_eps.copy()
        up[cell] += h
        dn = master.d_eps.copy()
        dn[cell] -= h
        fd = (cost_chi(up, master.d_sigma) - cost_chi(dn, master.d_sigma)) / (2 * h)
        worst = max(worst, abs(fd - gc.slope_re[cell])
                    / max(abs(gc.slope_re[cell]), 1e-30))
    return float(worst), 1e-5


def cmd_validate() -> int:
    checks = (("mie scattering relative rms", _validate_mie),
              ("adjoint pairing relative error", _validate_adjoints),
              ("gradient relative error", _validate_gradients))
    failed = False
    for name, fn in checks:
        value, tol = fn()
        ok = value < tol
        failed |= not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} (tolerance {tol:g})")
    if failed:
        print("validation FAILED", file=sys.stderr)
        return 3
    print("all validation checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cstomo",
        description="Multi-frequency contrast-source inversion workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", help="JSON run configuration")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument("--overwrite", action="store_true",
                           help="replace existing output files")

    p = sub.add_parser("phantom", help="write the phantom contrast maps")
    common(p)

    p = sub.add_parser("simulate", help="synthesize measurement data")
    common(p)
    p.add_argument("--snr-db", type=float, dest="snr_db",
                   help="override the config noise level")
    p.add_argument("--seed", type=int, help="override the noise seed")
    p.add_argument("--threads", type=int, help="worker cap for the synthesis")

    p = sub.add_parser("invert", help="reconstruct a contrast from data")
    common(p)
    p.add_argument("--data", required=True, help="measurements CSV")
    p.add_argument("--variant", choices=("cc", "plain"),
                   help="override the config variant")
    p.add_argument("--iterations", type=int,
                   help="override the config iteration budget")
    p.add_argument("--seed", type=int,
                   help="recorded seed override (bookkeeping only)")

    p = sub.add_parser("landscape", help="sample the solution-space cost map")
    common(p)
    p.add_argument("--data", required=True, help="measurements CSV")
    p.add_argument("--cc", required=True, help="cross-correlated state .npz")
    p.add_argument("--mr", required=True, help="plain-variant state .npz")
    p.add_argument("--act", help="actual-solution state .npz (else computed "
                                 "from the phantom)")
    p.add_argument("--samples", type=int, default=61,
                   help="samples per landscape axis")

    sub.add_parser("validate", help="run the fast oracle suite")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate()
        rc = load_run_config(args.config, args)
        if args.command == "phantom":
            return cmd_phantom(rc, args.out, overwrite=args.overwrite)
        if args.command == "simulate":
            return cmd_simulate(rc, args.out, overwrite=args.overwrite)
        if args.command == "invert":
            return cmd_invert(rc, args.data, args.out, overwrite=args.overwrite)
        if args.command == "landscape":
            return cmd_landscape(rc, args.data, args.cc, args.mr, args.out,
                                 act_path=args.act, samples=args.samples,
                                 overwrite=args.overwrite)
        raise ConfigurationError(f"unhandled command {args.command}")
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
