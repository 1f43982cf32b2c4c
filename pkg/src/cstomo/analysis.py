"""Cost-landscape sampling and export of curves and maps.

A solution here is a pair of per-frequency contrasts and total fields; three
such anchor points (the cross-correlated reconstruction, the plain
reconstruction and the actual solution) span a two-parameter family, and the
half-step cost sampled over that family exposes the local minima each
algorithm can fall into.  Exports are plain CSV plus 16-bit binary PGM with
a min/max sidecar, all byte-stable for fixed inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import csi_core
from .errors import ConfigurationError, NumericalError
from .fdfd import assemble_tm, solve
from .geometry import Cartesian2DGrid, ContrastMap, SubdomainIndexSet, chi_at_frequency

__all__ = [
    "SolutionPoint",
    "solution_point_from_state",
    "actual_solution_point",
    "point_sources",
    "point_cost",
    "make_costfn",
    "sample_solution_space",
    "landscape",
    "export_curves",
    "export_map",
    "landscape_to_csv",
]

CURVE_COLUMNS = ("iteration", "cost_half", "cost_full", "err", "alpha_mean", "beta")


@dataclass(frozen=True)
class SolutionPoint:
    """Per-frequency contrasts chi (I, m) and total fields e_tot (P, I, m)."""

    chi: np.ndarray
    e_tot: np.ndarray

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=np.complex128)
        e_tot = np.asarray(self.e_tot, dtype=np.complex128)
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "e_tot", e_tot)
        if chi.ndim != 2 or e_tot.ndim != 3:
            raise ValueError("solution point needs chi (I, m) and e_tot (P, I, m)")
        if e_tot.shape[1:] != chi.shape:
            raise ValueError(f"field stack {e_tot.shape} inconsistent with "
                             f"contrast stack {chi.shape}")


def solution_point_from_state(state: csi_core.InversionState) -> SolutionPoint:
    return SolutionPoint(chi=state.chi.copy(), e_tot=state.e_tot.copy())


def actual_solution_point(model: csi_core.ScatteringModel, contrast: ContrastMap,
                          e_inc_full: np.ndarray) -> SolutionPoint:
    """Solution point of the true contrast on the inversion grid.

    The total field solves the contrasted system against the background
    operator applied to the (full-grid) incident field, which is exactly the
    discrete scattering fixed point: the resulting pair satisfies the state
    equation to solver precision, so its state and cross residuals vanish.
    """
    if contrast.m != model.m:
        raise ConfigurationError("contrast must live on the imaging subdomain")
    omegas = model.omegas()
    np_src, ni = model.num_sources, model.num_frequencies
    if e_inc_full.shape != (np_src, ni, model.grid.n):
        raise ConfigurationError("incident stack must cover the full grid")
    chi = np.stack([chi_at_frequency(contrast, w) for w in omegas])
    e_tot = np.zeros((np_src, ni, model.m), dtype=np.complex128)
    for i in range(ni):
        chi_full = model.subdomain.extend(chi[i], model.grid.n)
        contrasted = assemble_tm(model.grid, omegas[i], chi=chi_full)
        background = model.operators[i].matrix
        for p in range(np_src):
            z = solve(contrasted, background @ e_inc_full[p, i])
            e_tot[p, i] = model.subdomain.restrict(z)
    return SolutionPoint(chi=chi, e_tot=e_tot)


def point_sources(point: SolutionPoint) -> np.ndarray:
    """Contrast sources implied by a solution point, cell-wise chi times field."""
    return point.chi[None, :, :] * point.e_tot


def point_cost(model: csi_core.ScatteringModel, point: SolutionPoint,
               data: np.ndarray, e_inc: np.ndarray,
               variant: csi_core.Variant = csi_core.Variant.CC) -> float:
    """Half-step cost of a solution point with the point's own weights."""
    j = point_sources(point)
    eta_s, eta_d = csi_core.compute_eta(model, data, e_inc, point.chi)
    rho, gamma, xi = csi_core.residuals(model, data, e_inc, j, point.chi)
    state = csi_core.InversionState(
        j=j, e_tot=point.e_tot, master=ContrastMap(np.zeros(model.m), np.zeros(model.m)),
        chi=point.chi, rho=rho, gamma=gamma, xi=xi, eta_s=eta_s, eta_d=eta_d,
        g_prev=np.zeros_like(j), nu_prev=np.zeros_like(j),
        g_chi_prev=np.zeros(model.m, dtype=np.complex128),
        nu_chi_prev=np.zeros(model.m, dtype=np.complex128))
    return csi_core.cost_half(state, variant)


def make_costfn(model: csi_core.ScatteringModel, data: np.ndarray,
                e_inc: np.ndarray,
                variant: csi_core.Variant = csi_core.Variant.CC):
    """Bind model and data into a callable suitable for ``landscape``."""
    def costfn(point: SolutionPoint) -> float:
        return point_cost(model, point, data, e_inc, variant)
    return costfn


def sample_solution_space(x_cc: SolutionPoint, x_mr: SolutionPoint,
                          x_act: SolutionPoint, beta1: float,
                          beta2: float) -> SolutionPoint:
    """Two-parameter affine combination of the three anchor solutions.

    (-1, 1) gives the actual solution, (0, 1) the cross-correlated
    reconstruction and (1, 0) the plain reconstruction, exactly.
    """
    if x_cc.chi.shape != x_mr.chi.shape or x_cc.chi.shape != x_act.chi.shape \
            or x_cc.e_tot.shape != x_mr.e_tot.shape \
            or x_cc.e_tot.shape != x_act.e_tot.shape:
        raise ValueError("anchor solution points differ in shape")

    def combine(cc, mr, act):
        return beta2 * ((beta1 + 1.0) * cc - beta1 * act) - (beta2 - 1.0) * beta1 * mr

    return SolutionPoint(chi=combine(x_cc.chi, x_mr.chi, x_act.chi),
                         e_tot=combine(x_cc.e_tot, x_mr.e_tot, x_act.e_tot))


def landscape(costfn, x_cc: SolutionPoint, x_mr: SolutionPoint,
              x_act: SolutionPoint, beta1_values=None, beta2_values=None):
    """Log-cost matrix over the sampled solution family.

    Rows follow beta1, columns beta2.  A failed or non-positive cost
    evaluation leaves a NaN cell and the scan continues; the all-zero point
    of the family is one such cell, since its contrast is identically zero.
    """
    if beta1_values is None:
        beta1_values = np.linspace(-1.5, 1.5, 61)
    if beta2_values is None:
        beta2_values = np.linspace(-1.5, 1.5, 61)
    beta1_values = np.atleast_1d(np.asarray(beta1_values, dtype=float))
    beta2_values = np.atleast_1d(np.asarray(beta2_values, dtype=float))
    out = np.full((beta1_values.size, beta2_values.size), np.nan)
    for a, b1 in enumerate(beta1_values):
        for b, b2 in enumerate(beta2_values):
            point = sample_solution_space(x_cc, x_mr, x_act, float(b1), float(b2))
            try:
                value = costfn(point)
            except (NumericalError, FloatingPointError):
                continue
            if value > 0 and math.isfinite(value):
                out[a, b] = math.log10(value)
    return out


def landscape_to_csv(path, matrix, beta1_values, beta2_values) -> None:
    """Write a landscape matrix with beta1 labeling rows, beta2 the header."""
    matrix = np.asarray(matrix)
    beta1_values = np.asarray(beta1_values, dtype=float)
    beta2_values = np.asarray(beta2_values, dtype=float)
    if matrix.shape != (beta1_values.size, beta2_values.size):
        raise ConfigurationError("landscape matrix does not match the axis values")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("beta1," + ",".join(f"{b:.17g}" for b in beta2_values) + "\n")
        for b1, row in zip(beta1_values, matrix):
            fh.write(f"{b1:.17g}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def export_curves(path, records) -> None:
    """Per-iteration log as CSV; an empty log still writes the header."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(CURVE_COLUMNS) + "\n")
        for r in records:
            fh.write(f"{r.iteration:d},{r.cost_half:.17g},{r.cost_full:.17g},"
                     f"{r.err:.17g},{r.alpha_mean:.17g},{r.beta:.17g}\n")


def _write_pgm(path, grid: Cartesian2DGrid, values: np.ndarray) -> None:
    lo = float(values.min())
    hi = float(values.max())
    span = hi - lo
    if span > 0:
        scaled = np.rint((values - lo) / span * 65535.0).astype(np.uint16)
    else:
        scaled = np.zeros(values.shape, dtype=np.uint16)
    image = scaled.reshape(grid.ny, grid.nx)[::-1, :]  # top row = largest y
    with open(path, "wb") as fh:
        fh.write(f"P5\n{grid.nx} {grid.ny}\n65535\n".encode("ascii"))
        fh.write(image.astype(">u2").tobytes())
    with open(f"{path}.minmax", "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{lo:.17g} {hi:.17g}\n")


def export_map(base_path, grid: Cartesian2DGrid, data,
               subdomain: SubdomainIndexSet | None = None) -> list:
    """Write a per-cell map as CSV plus 16-bit PGM with a min/max sidecar.

    ``data`` is either a real full-grid array, a subdomain array (then
    ``subdomain`` is required), or a ContrastMap, which writes separate
    permittivity and conductivity maps suffixed _eps and _sigma.  Returns
    the list of files written.
    """
    base_path = str(base_path)
    if isinstance(data, ContrastMap):
        written = []
        written += export_map(f"{base_path}_eps", grid, data.d_eps, subdomain)
        written += export_map(f"{base_path}_sigma", grid, data.d_sigma, subdomain)
        return written
    values = np.asarray(data, dtype=float)
    if values.shape == (grid.n,):
        full = values
    elif subdomain is not None and values.shape == (subdomain.m,):
        full = np.real(subdomain.extend(values, grid.n))
    else:
        raise ConfigurationError(
            f"map of {values.shape} fits neither the grid ({grid.n} cells) "
            "nor the given subdomain")
    csv_path = f"{base_path}.csv"
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("nx,ny,dx,dy,x0,y0\n")
        fh.write(f"{grid.nx:d},{grid.ny:d},{grid.dx:.17g},{grid.dy:.17g},"
                 f"{grid.x0:.17g},{grid.y0:.17g}\n")
        rows = full.reshape(grid.ny, grid.nx)
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    pgm_path = f"{base_path}.pgm"
    _write_pgm(pgm_path, grid, full)
    return [csv_path, pgm_path, f"{pgm_path}.minmax"]
