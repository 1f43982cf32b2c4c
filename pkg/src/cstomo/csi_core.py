"""Multi-frequency contrast-source inversion with cross-correlated residuals.

Two cost functionals drive the iteration.  The half-step cost weighs data,
state and cross-correlated residual powers and is exactly quadratic in the
contrast sources, so every source update takes a closed-form step along its
conjugate direction.  The full cost re-normalizes the state term by the
current contrast and is minimized along the contrast direction by a scalar
bracketed Brent search.  The plain variant drops every cross-correlated
term from costs, gradients and step sizes; both variants share all other
code, and the cross residual is maintained either way so the structural
identity checks apply to both.

Array layout: stacked slices indexed [source, frequency, ...]; subdomain
vectors have length m, receiver vectors length q.  All reductions run in a
fixed index order, so identical inputs give bit-identical trajectories.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .brent import bracket_minimum, minimize_brent
from .errors import (
    ConfigurationError,
    DegenerateDataError,
    DegenerateStateError,
    NumericalError,
)
from .fdfd import (
    assemble_tm,
    measure,
    measure_adjoint,
    receiver_operator,
    solve,
    solve_adjoint,
)
from .geometry import (
    Cartesian2DGrid,
    ContrastMap,
    SubdomainIndexSet,
    chi_at_frequency,
    clip_nonnegative,
    master_from_parts,
)
from .scenario import MeasurementConfig, MeasurementSet, calibrate_incident, incident_fields

__all__ = [
    "Variant",
    "ScatteringModel",
    "InversionState",
    "ContrastGradient",
    "BetaObjective",
    "IterationRecord",
    "build_model",
    "calibrated_incident_stack",
    "prepare_inversion",
    "compute_eta",
    "residuals",
    "cost_half",
    "cost_full",
    "grad_j",
    "pr_direction",
    "step_alpha",
    "update_sources_and_fields",
    "grad_chi",
    "step_beta",
    "update_contrast",
    "init_backpropagation",
    "init_fields_and_contrast",
    "fit_contrast",
    "run",
    "reconstruction_error",
    "verify_state",
]

# below this squared-norm the previous gradient is treated as vanished and
# the conjugate recursion restarts from steepest descent
PR_RESTART = 1e-30


class Variant(enum.Enum):
    """CC keeps the cross-correlated residual terms; PLAIN drops them."""

    CC = "cc"
    PLAIN = "plain"

    @property
    def xi_weight(self) -> float:
        return 1.0 if self is Variant.CC else 0.0

    @classmethod
    def from_name(cls, name: str) -> "Variant":
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ConfigurationError(f"unknown variant {name!r}; use cc or plain") from None


@dataclass(frozen=True)
class ScatteringModel:
    """Background operators and sampling geometry for the inversion grid.

    One factorized background system per frequency plus one receiver
    operator per source; the contrast never enters these matrices, it only
    multiplies fields on the subdomain.
    """

    grid: Cartesian2DGrid
    subdomain: SubdomainIndexSet
    config: MeasurementConfig
    operators: tuple
    receivers: tuple

    @property
    def num_sources(self) -> int:
        return self.config.num_sources

    @property
    def num_frequencies(self) -> int:
        return self.config.num_frequencies

    @property
    def num_receivers(self) -> int:
        return self.config.num_receivers

    @property
    def m(self) -> int:
        return self.subdomain.m

    def omegas(self) -> np.ndarray:
        return self.config.omegas()

    def source_images(self, p: int, i: int, v: np.ndarray):
        """Receiver samples and subdomain field of one source vector.

        Shares the single forward solve between the two images.
        """
        op = self.operators[i]
        z = solve(op, op.k0sq * self.subdomain.extend(v, self.grid.n))
        return self.receivers[p].weights @ z, self.subdomain.restrict(z)

    def sample(self, p: int, i: int, v: np.ndarray) -> np.ndarray:
        return measure(self.operators[i], self.receivers[p], self.subdomain, v)

    def sample_adjoint(self, p: int, i: int, w: np.ndarray) -> np.ndarray:
        return measure_adjoint(self.operators[i], self.receivers[p], self.subdomain, w)

    def field(self, i: int, v: np.ndarray) -> np.ndarray:
        op = self.operators[i]
        z = solve(op, op.k0sq * self.subdomain.extend(v, self.grid.n))
        return self.subdomain.restrict(z)

    def field_adjoint(self, i: int, w: np.ndarray) -> np.ndarray:
        op = self.operators[i]
        z = solve_adjoint(op, self.subdomain.extend(w, self.grid.n))
        return op.k0sq * self.subdomain.restrict(z)


def build_model(config: MeasurementConfig, grid: Cartesian2DGrid,
                subdomain: SubdomainIndexSet) -> ScatteringModel:
    """Assemble and factorize the per-frequency background systems."""
    ops = tuple(assemble_tm(grid, omega) for omega in config.omegas())
    rx = tuple(receiver_operator(grid, config.receiver_positions(p))
               for p in range(config.num_sources))
    return ScatteringModel(grid=grid, subdomain=subdomain, config=config,
                           operators=ops, receivers=rx)


def calibrated_incident_stack(config: MeasurementConfig, grid: Cartesian2DGrid,
                              incident_measured: np.ndarray) -> np.ndarray:
    """Full-grid incident fields scaled to the measured incident data.

    Calibration factors come from the diametrically opposite receiver per
    source and frequency.  Returns (P, I, n).
    """
    omegas = config.omegas()
    out = np.zeros((config.num_sources, config.num_frequencies, grid.n),
                   dtype=np.complex128)
    for i, omega in enumerate(omegas):
        factors = calibrate_incident(config, incident_measured[:, i, :], omega)
        out[:, i, :] = incident_fields(config, grid, omega, factors=factors)
    return out


def prepare_inversion(config: MeasurementConfig, ms: MeasurementSet,
                      grid: Cartesian2DGrid, subdomain: SubdomainIndexSet):
    """Model plus calibrated inputs from a measurement set.

    The incident fields handed to the inversion are the analytic line-source
    fields scaled by the per-source calibration factors and restricted to
    the imaging subdomain.

    Returns (model, scattered_data, e_inc) with data (P, I, Q) and
    e_inc (P, I, m).
    """
    if ms.incident is None:
        raise ConfigurationError("inversion needs incident-field data for calibration")
    model = build_model(config, grid, subdomain)
    full = calibrated_incident_stack(config, grid, ms.incident)
    return model, ms.scattered.copy(), full[:, :, subdomain.indices]


@dataclass
class InversionState:
    """Everything the iteration mutates.

    Residuals follow the sources and contrast incrementally; ``verify_state``
    measures how far they have drifted from scratch recomputation.
    """

    j: np.ndarray            # contrast sources (P, I, m)
    e_tot: np.ndarray        # total fields on the subdomain (P, I, m)
    master: ContrastMap      # frequency-independent contrast parameters
    chi: np.ndarray          # cached per-frequency contrast (I, m)
    rho: np.ndarray          # data residuals (P, I, Q)
    gamma: np.ndarray        # state residuals (P, I, m)
    xi: np.ndarray           # cross-correlated residuals (P, I, Q)
    eta_s: np.ndarray        # data-term weights (I,)
    eta_d: np.ndarray        # state-term weights (I,)
    g_prev: np.ndarray       # previous source gradients (P, I, m)
    nu_prev: np.ndarray      # previous source directions (P, I, m)
    g_chi_prev: np.ndarray   # previous contrast gradient (m,)
    nu_chi_prev: np.ndarray  # previous contrast direction (m,)
    iteration: int = 0


def _chi_stack(master: ContrastMap, omegas: np.ndarray) -> np.ndarray:
    return np.stack([chi_at_frequency(master, w) for w in omegas])


def compute_eta(model: ScatteringModel, data: np.ndarray, e_inc: np.ndarray,
                chi: np.ndarray):
    """Reciprocal residual-power weights per frequency.

    eta_s inverts the summed data power, eta_d the summed power of the
    contrast-weighted incident fields; with these, the data term of the
    half-step cost at zero sources is exactly the frequency count.
    """
    ni = model.num_frequencies
    eta_s = np.zeros(ni)
    eta_d = np.zeros(ni)
    for i in range(ni):
        d = np.sum(np.abs(data[:, i, :]) ** 2)
        if d <= 0:
            raise DegenerateDataError(f"no data power at frequency index {i}")
        s = np.sum(np.abs(chi[i] * e_inc[:, i, :]) ** 2)
        if s <= 0:
            raise DegenerateStateError(
                f"contrast-weighted incident power vanished at frequency index {i}")
        eta_s[i] = 1.0 / d
        eta_d[i] = 1.0 / s
    return eta_s, eta_d


def residuals(model: ScatteringModel, data: np.ndarray, e_inc: np.ndarray,
              j: np.ndarray, chi: np.ndarray):
    """Recompute all three residual stacks from scratch (two solves per slice)."""
    np_src, ni = model.num_sources, model.num_frequencies
    rho = np.zeros_like(data)
    xi = np.zeros_like(data)
    gamma = np.zeros_like(j)
    for i in range(ni):
        for p in range(np_src):
            samples, fld = model.source_images(p, i, j[p, i])
            rho[p, i] = data[p, i] - samples
            estimate = chi[i] * (e_inc[p, i] + fld)
            gamma[p, i] = estimate - j[p, i]
            xi[p, i] = data[p, i] - model.sample(p, i, estimate)
    return rho, gamma, xi


def cost_half(state: InversionState, variant: Variant = Variant.CC) -> float:
    """Weighted residual power driving the source updates."""
    xiw = variant.xi_weight
    total = 0.0
    for i in range(state.eta_s.size):
        total += state.eta_s[i] * np.sum(np.abs(state.rho[:, i, :]) ** 2)
        total += state.eta_d[i] * np.sum(np.abs(state.gamma[:, i, :]) ** 2)
        total += xiw * state.eta_s[i] * np.sum(np.abs(state.xi[:, i, :]) ** 2)
    return float(total)


def cost_full(state: InversionState, variant: Variant = Variant.CC) -> float:
    """State and cross terms only; logged alongside, never stepped on."""
    xiw = variant.xi_weight
    total = 0.0
    for i in range(state.eta_s.size):
        total += state.eta_d[i] * np.sum(np.abs(state.gamma[:, i, :]) ** 2)
        total += xiw * state.eta_s[i] * np.sum(np.abs(state.xi[:, i, :]) ** 2)
    return float(total)


def grad_j(model: ScatteringModel, state: InversionState, p: int, i: int,
           variant: Variant = Variant.CC) -> np.ndarray:
    """Gradient of the half-step cost with respect to one source slice.

    Three adjoint solves (two for the plain variant): the data and cross
    residual back-projections, then one combined field-adjoint of their
    contrast-weighted sum with the state residual.
    """
    xiw = variant.xi_weight
    eta_s = state.eta_s[i]
    eta_d = state.eta_d[i]
    chi_bar = np.conj(state.chi[i])
    back_rho = model.sample_adjoint(p, i, state.rho[p, i])
    inner = 2.0 * eta_d * state.gamma[p, i]
    if xiw != 0.0:
        back_xi = model.sample_adjoint(p, i, state.xi[p, i])
        inner = inner - 2.0 * eta_s * xiw * back_xi
    lifted = model.field_adjoint(i, chi_bar * inner)
    return -2.0 * eta_s * back_rho + lifted - 2.0 * eta_d * state.gamma[p, i]


def pr_direction(g_now: np.ndarray, g_prev: np.ndarray, nu_prev: np.ndarray,
                 iteration: int) -> np.ndarray:
    """Conjugate direction with the Polak-Ribiere momentum coefficient.

    Sums run over every axis of the arrays passed in, so stacking the
    per-source gradients of one frequency yields the shared coefficient
    for that frequency.  Iteration 0 returns the zero direction; a vanished
    previous gradient restarts from steepest descent.
    """
    if iteration == 0:
        return np.zeros_like(g_now)
    denom = float(np.sum(np.abs(g_prev) ** 2))
    if denom < PR_RESTART:
        return g_now.copy()
    coeff = float(np.real(np.vdot(g_now - g_prev, g_now))) / denom
    return g_now + coeff * nu_prev


def step_alpha(model: ScatteringModel, state: InversionState, nu: np.ndarray,
               g: np.ndarray, p: int, i: int, variant: Variant = Variant.CC):
    """Closed-form step length along one source direction.

    The half-step cost is an exact quadratic in the step, so the minimizer
    is the negative slope over twice the curvature.  Returns the step plus
    the direction's receiver/field/cross images for the incremental state
    update.  A zero-curvature direction is skipped with a warning.
    """
    xiw = variant.xi_weight
    eta_s = state.eta_s[i]
    eta_d = state.eta_d[i]
    nu_samples, nu_field = model.source_images(p, i, nu)
    scattered_dir = state.chi[i] * nu_field
    cross_samples = model.sample(p, i, scattered_dir)
    curvature = (eta_s * np.sum(np.abs(nu_samples) ** 2)
                 + eta_d * np.sum(np.abs(nu - scattered_dir) ** 2)
                 + xiw * eta_s * np.sum(np.abs(cross_samples) ** 2))
    if curvature <= 0.0:
        warnings.warn(f"zero curvature along the direction for source {p}, "
                      f"frequency {i}; step skipped", RuntimeWarning)
        return 0.0, (nu_samples, nu_field, cross_samples)
    slope = float(np.real(np.vdot(nu, g)))
    alpha = -slope / (2.0 * curvature)
    return alpha, (nu_samples, nu_field, cross_samples)


def update_sources_and_fields(state: InversionState, alpha: float, nu: np.ndarray,
                              images, p: int, i: int) -> None:
    """Apply one source step and move every dependent quantity with it.

    All refreshes are exact algebra on the direction images, so no solves
    happen here; drift is only float accumulation.
    """
    if alpha == 0.0:
        return
    nu_samples, nu_field, cross_samples = images
    state.j[p, i] += alpha * nu
    state.e_tot[p, i] += alpha * nu_field
    state.rho[p, i] -= alpha * nu_samples
    state.gamma[p, i] += alpha * (state.chi[i] * nu_field - nu)
    state.xi[p, i] -= alpha * cross_samples


@dataclass(frozen=True)
class ContrastGradient:
    """Preconditioned contrast gradient with its assembly pieces.

    slope_re / slope_im are the derivatives of the half-step cost with
    respect to the real part and the (first-frequency) imaginary part of
    the contrast; weight_re / weight_im are the cell-wise field-power
    denominators; preconditioned combines them, zeroing cells whose
    denominator vanished (counted in zero_cells).
    """

    preconditioned: np.ndarray
    slope_re: np.ndarray
    slope_im: np.ndarray
    weight_re: np.ndarray
    weight_im: np.ndarray
    zero_cells: int


def grad_chi(model: ScatteringModel, state: InversionState,
             variant: Variant = Variant.CC) -> ContrastGradient:
    """Cell-wise preconditioned gradient with respect to the contrast.

    Per frequency the unscaled gradient couples the conjugated total fields
    with the state residual and (CC only) the back-projected cross residual;
    frequency sums then split into a real part and a frequency-weighted
    imaginary part, each divided by its own field-power denominator.
    """
    np_src, ni, m = state.j.shape
    omegas = model.omegas()
    ratio = omegas[0] / omegas
    sum_plain = np.zeros(m, dtype=np.complex128)
    sum_weighted = np.zeros(m, dtype=np.complex128)
    weight_re = np.zeros(m)
    weight_im = np.zeros(m)
    xiw = variant.xi_weight
    for i in range(ni):
        per_freq = np.zeros(m, dtype=np.complex128)
        power = np.zeros(m)
        for p in range(np_src):
            conj_field = np.conj(state.e_tot[p, i])
            per_freq += state.eta_d[i] * conj_field * state.gamma[p, i]
            if xiw != 0.0:
                back_xi = model.sample_adjoint(p, i, state.xi[p, i])
                per_freq -= xiw * state.eta_s[i] * conj_field * back_xi
            power += np.abs(state.e_tot[p, i]) ** 2
        sum_plain += per_freq
        sum_weighted += ratio[i] * per_freq
        weight_re += power
        weight_im += ratio[i] ** 2 * power
    slope_re = 2.0 * np.real(sum_plain)
    slope_im = 2.0 * np.imag(sum_weighted)
    ok_re = weight_re > 0
    ok_im = weight_im > 0
    pre = np.zeros(m, dtype=np.complex128)
    pre[ok_re] += slope_re[ok_re] / weight_re[ok_re]
    pre[ok_im] += 1j * slope_im[ok_im] / weight_im[ok_im]
    zero_cells = int(np.sum(~ok_re) + np.sum(~ok_im))
    return ContrastGradient(preconditioned=pre, slope_re=slope_re,
                            slope_im=slope_im, weight_re=weight_re,
                            weight_im=weight_im, zero_cells=zero_cells)


@dataclass(frozen=True)
class BetaObjective:
    """Full-cost profile along a contrast direction.

    Every constituent is quadratic in the step: state_num and state_den are
    (I, 3) coefficient rows of the per-frequency fit-residual power and its
    normalizing incident power, cross is the (I, 3) cross-residual power.
    The value is the sum of the per-frequency quotients plus the weighted
    cross terms; a non-positive denominator poisons the point with +inf.
    """

    state_num: np.ndarray
    state_den: np.ndarray
    cross: np.ndarray
    eta_s: np.ndarray
    xi_weight: float

    def value(self, beta: float) -> float:
        powers = np.array([1.0, beta, beta * beta])
        num = self.state_num @ powers
        den = self.state_den @ powers
        if np.any(den <= 0.0) or not np.all(np.isfinite(den)):
            return math.inf
        total = float(np.sum(num / den))
        if self.xi_weight != 0.0:
            total += self.xi_weight * float(np.sum(self.eta_s * (self.cross @ powers)))
        return total if math.isfinite(total) else math.inf

    def __call__(self, beta: float) -> float:
        return self.value(beta)


def _quad_coeffs(base: np.ndarray, direction: np.ndarray) -> tuple:
    c0 = float(np.sum(np.abs(base) ** 2))
    c1 = 2.0 * float(np.real(np.vdot(direction, base)))
    c2 = float(np.sum(np.abs(direction) ** 2))
    return c0, c1, c2


def step_beta(model: ScatteringModel, state: InversionState, nu_chi: np.ndarray,
              e_inc: np.ndarray, variant: Variant = Variant.CC):
    """Scalar step along the contrast direction by bracketed Brent search.

    Builds the exact quadratic coefficients of every term (one solve per
    slice for the receiver image of the direction-weighted fields), then
    minimizes the rational profile.  No bracket within the expansion budget
    means no step, with a warning.

    Returns (beta, objective, direction_samples) where direction_samples
    holds the per-slice receiver images reused by the residual refresh.
    """
    np_src, ni, m = state.j.shape
    omegas = model.omegas()
    ratio = omegas[0] / omegas
    state_num = np.zeros((ni, 3))
    state_den = np.zeros((ni, 3))
    cross = np.zeros((ni, 3))
    d_samples = np.zeros_like(state.xi)
    for i in range(ni):
        nu_chi_i = np.real(nu_chi) + 1j * ratio[i] * np.imag(nu_chi)
        for p in range(np_src):
            fit_dir = nu_chi_i * state.e_tot[p, i]
            d_samples[p, i] = model.sample(p, i, fit_dir)
            n0, n1, n2 = _quad_coeffs(state.gamma[p, i], fit_dir)
            state_num[i] += (n0, n1, n2)
            d0, d1c, d2 = _quad_coeffs(state.chi[i] * e_inc[p, i],
                                       nu_chi_i * e_inc[p, i])
            state_den[i] += (d0, d1c, d2)
            x0, x1, x2 = _quad_coeffs(state.xi[p, i], -d_samples[p, i])
            cross[i] += (x0, x1, x2)
    objective = BetaObjective(state_num=state_num, state_den=state_den,
                              cross=cross, eta_s=state.eta_s.copy(),
                              xi_weight=variant.xi_weight)
    bracket = bracket_minimum(objective)
    if bracket is None:
        warnings.warn("no bracket for the contrast step within the expansion "
                      "budget; taking no step", RuntimeWarning)
        return 0.0, objective, d_samples
    beta, _ = minimize_brent(objective, bracket[0], fvals=bracket[1])
    return float(beta), objective, d_samples


def update_contrast(model: ScatteringModel, state: InversionState, beta: float,
                    nu_chi: np.ndarray, data: np.ndarray, e_inc: np.ndarray,
                    direction_samples: np.ndarray | None = None) -> None:
    """Step the contrast, project it, and refresh everything downstream.

    The master parameters move along the direction, negatives are clamped
    to zero, per-frequency contrasts are regenerated, and the state-term
    weights are recomputed from the projected contrast.  State residuals
    are exact elementwise algebra; cross residuals reuse the direction's
    receiver images when the projection did not fire, otherwise they are
    recomputed with one solve per slice.
    """
    omegas = model.omegas()
    chi1 = chi_at_frequency(state.master, omegas[0]) + beta * nu_chi
    stepped = master_from_parts(np.real(chi1), np.imag(chi1), omegas[0])
    projected = clip_nonnegative(stepped)
    clipped = not (np.array_equal(projected.d_eps, stepped.d_eps)
                   and np.array_equal(projected.d_sigma, stepped.d_sigma))
    state.master = projected
    state.chi = _chi_stack(projected, omegas)

    np_src, ni, _ = state.j.shape
    for i in range(ni):
        for p in range(np_src):
            state.gamma[p, i] = state.chi[i] * state.e_tot[p, i] - state.j[p, i]
            if clipped or direction_samples is None:
                state.xi[p, i] = data[p, i] - model.sample(
                    p, i, state.gamma[p, i] + state.j[p, i])
            else:
                state.xi[p, i] -= beta * direction_samples[p, i]

    for i in range(ni):
        power = np.sum(np.abs(state.chi[i] * e_inc[:, i, :]) ** 2)
        if power <= 0:
            raise DegenerateStateError(
                f"contrast vanished everywhere at frequency index {i} after projection")
        state.eta_d[i] = 1.0 / power


def init_backpropagation(model: ScatteringModel, data: np.ndarray) -> np.ndarray:
    """Back-projected data with the least-squares optimal scalar amplitude.

    Per slice, the scalar minimizing the data misfit of a scaled
    back-projection; zero data gives a zero slice.
    """
    np_src, ni = model.num_sources, model.num_frequencies
    j0 = np.zeros((np_src, ni, model.m), dtype=np.complex128)
    for i in range(ni):
        for p in range(np_src):
            back = model.sample_adjoint(p, i, data[p, i])
            norm_back = np.sum(np.abs(back) ** 2)
            if norm_back == 0.0:
                continue
            resampled = model.sample(p, i, back)
            norm_resampled = np.sum(np.abs(resampled) ** 2)
            if norm_resampled == 0.0:
                raise DegenerateDataError(
                    f"back-projection of source {p}, frequency {i} radiates nothing")
            j0[p, i] = (norm_back / norm_resampled) * back
    return j0


def fit_contrast(j: np.ndarray, e_tot: np.ndarray, omegas: np.ndarray) -> ContrastMap:
    """Cell-wise least-squares contrast from source/field pairs.

    Solves the per-cell normal equations of fitting the sources as contrast
    times total field across all slices, with the imaginary part carrying
    the frequency weighting of the shared-parameter representation.  Cells
    with no field power stay zero.  The positivity projection is applied.
    """
    ratio = omegas[0] / omegas
    num = np.einsum("pim,pim->m", j, np.conj(e_tot))
    num_w = np.einsum("i,pim,pim->m", ratio, j, np.conj(e_tot))
    den_re = np.einsum("pim->m", np.abs(e_tot) ** 2)
    den_im = np.einsum("i,pim->m", ratio ** 2, np.abs(e_tot) ** 2)
    re = np.zeros(j.shape[2])
    im = np.zeros(j.shape[2])
    ok = den_re > 0
    re[ok] = np.real(num[ok]) / den_re[ok]
    ok = den_im > 0
    im[ok] = np.imag(num_w[ok]) / den_im[ok]
    return clip_nonnegative(master_from_parts(re, im, omegas[0]))


def init_fields_and_contrast(model: ScatteringModel, j0: np.ndarray,
                             e_inc: np.ndarray):
    """Total fields for the initial sources and the fitted starting contrast."""
    e_tot = np.zeros_like(j0)
    for i in range(model.num_frequencies):
        for p in range(model.num_sources):
            e_tot[p, i] = e_inc[p, i] + model.field(i, j0[p, i])
    master = fit_contrast(j0, e_tot, model.omegas())
    return e_tot, master


def reconstruction_error(estimate: ContrastMap, truth: ContrastMap,
                         omega_max: float) -> float:
    """Relative contrast mismatch at the highest frequency."""
    chi_hat = chi_at_frequency(estimate, omega_max)
    chi_true = chi_at_frequency(truth, omega_max)
    denom = np.linalg.norm(chi_true)
    if denom == 0.0:
        raise ValueError("reconstruction error undefined for a zero truth contrast")
    return float(np.linalg.norm(chi_hat - chi_true) / denom)


@dataclass(frozen=True)
class IterationRecord:
    """One per-iteration log row."""

    iteration: int
    cost_half: float
    cost_full: float
    err: float
    alpha_mean: float
    beta: float


def _initial_state(model: ScatteringModel, data: np.ndarray,
                   e_inc: np.ndarray) -> InversionState:
    omegas = model.omegas()
    j0 = init_backpropagation(model, data)
    e_tot, master = init_fields_and_contrast(model, j0, e_inc)
    chi = _chi_stack(master, omegas)
    eta_s, eta_d = compute_eta(model, data, e_inc, chi)
    rho, gamma, xi = residuals(model, data, e_inc, j0, chi)
    return InversionState(
        j=j0, e_tot=e_tot, master=master, chi=chi,
        rho=rho, gamma=gamma, xi=xi, eta_s=eta_s, eta_d=eta_d,
        g_prev=np.zeros_like(j0), nu_prev=np.zeros_like(j0),
        g_chi_prev=np.zeros(model.m, dtype=np.complex128),
        nu_chi_prev=np.zeros(model.m, dtype=np.complex128))


def run(model: ScatteringModel, data: np.ndarray, e_inc: np.ndarray,
        variant: Variant = Variant.CC, max_iterations: int = 2048,
        truth: ContrastMap | None = None, seed: int = 0):
    """Full inversion loop: initialize, then iterate source and contrast steps.

    Each iteration updates every (source, frequency) slice along its
    conjugate direction with the closed-form step, then takes one projected
    contrast step with the Brent-searched scalar.  The log records the two
    costs, the reconstruction error against ``truth`` when given (NaN
    otherwise), the mean source step and the contrast step.

    The loop uses no randomness; ``seed`` exists so callers can thread the
    noise seed of the input data through one signature, and is ignored here.

    Returns (master, records, state): the reconstructed contrast, the list
    of IterationRecord rows, and the final InversionState.
    """
    del seed
    if max_iterations < 0:
        raise ConfigurationError("max_iterations must be non-negative")
    expected = (model.num_sources, model.num_frequencies, model.num_receivers)
    if data.shape != expected:
        raise ConfigurationError(f"data shape {data.shape} does not match the "
                                 f"model layout {expected}")
    if e_inc.shape != (expected[0], expected[1], model.m):
        raise ConfigurationError("incident-field stack does not match the model layout")
    err_of = (lambda master: reconstruction_error(master, truth, model.omegas()[-1])) \
        if truth is not None else (lambda master: math.nan)

    if float(np.sum(np.abs(data) ** 2)) == 0.0:
        # nothing to invert: every update direction vanishes, so the state
        # never leaves the all-zero initialization; the residual-power
        # weights are set to an inert 1 to keep the costs defined
        zero = ContrastMap(np.zeros(model.m), np.zeros(model.m))
        records = [IterationRecord(it, 0.0, 0.0, err_of(zero), 0.0, 0.0)
                   for it in range(1, max_iterations + 1)]
        j0 = np.zeros((model.num_sources, model.num_frequencies, model.m),
                      dtype=np.complex128)
        state = InversionState(
            j=j0, e_tot=e_inc.copy(), master=zero,
            chi=np.zeros((model.num_frequencies, model.m), dtype=np.complex128),
            rho=np.zeros_like(data), gamma=np.zeros_like(j0),
            xi=np.zeros_like(data),
            eta_s=np.ones(model.num_frequencies),
            eta_d=np.ones(model.num_frequencies),
            g_prev=np.zeros_like(j0), nu_prev=np.zeros_like(j0),
            g_chi_prev=np.zeros(model.m, dtype=np.complex128),
            nu_chi_prev=np.zeros(model.m, dtype=np.complex128),
            iteration=max_iterations)
        return zero, records, state

    state = _initial_state(model, data, e_inc)
    np_src, ni = model.num_sources, model.num_frequencies
    records: list[IterationRecord] = []
    for it in range(1, max_iterations + 1):
        state.iteration = it
        try:
            alphas = np.zeros((np_src, ni))
            for i in range(ni):
                g_i = np.stack([grad_j(model, state, p, i, variant)
                                for p in range(np_src)])
                nu_i = pr_direction(g_i, state.g_prev[:, i], state.nu_prev[:, i], it)
                for p in range(np_src):
                    alpha, images = step_alpha(model, state, nu_i[p], g_i[p],
                                               p, i, variant)
                    update_sources_and_fields(state, alpha, nu_i[p], images, p, i)
                    alphas[p, i] = alpha
                state.g_prev[:, i] = g_i
                state.nu_prev[:, i] = nu_i

            gchi = grad_chi(model, state, variant)
            nu_chi = pr_direction(gchi.preconditioned, state.g_chi_prev,
                                  state.nu_chi_prev, it)
            beta, _, d_samples = step_beta(model, state, nu_chi, e_inc, variant)
            update_contrast(model, state, beta, nu_chi, data, e_inc,
                            direction_samples=d_samples)
            state.g_chi_prev = gchi.preconditioned
            state.nu_chi_prev = nu_chi
        except NumericalError as exc:
            raise NumericalError(f"iteration {it}: {exc}") from exc

        records.append(IterationRecord(
            iteration=it,
            cost_half=cost_half(state, variant),
            cost_full=cost_full(state, variant),
            err=err_of(state.master),
            alpha_mean=float(np.mean(alphas)),
            beta=beta))
    return state.master, records, state


def verify_state(model: ScatteringModel, state: InversionState, data: np.ndarray,
                 e_inc: np.ndarray) -> dict:
    """Measure how well the state honors its structural invariants.

    Returns relative drifts: total fields against fresh solves, the cross
    residual against data minus the sampled source estimate, and the
    residual identity linking all three stacks.
    """
    np_src, ni = model.num_sources, model.num_frequencies
    field_drift = 0.0
    identity_drift = 0.0
    for i in range(ni):
        for p in range(np_src):
            fresh = e_inc[p, i] + model.field(i, state.j[p, i])
            scale = np.linalg.norm(fresh)
            if scale > 0:
                field_drift = max(field_drift,
                                  np.linalg.norm(state.e_tot[p, i] - fresh) / scale)
            sampled_gamma = model.sample(p, i, state.gamma[p, i])
            combo = state.rho[p, i] - sampled_gamma
            scale = max(np.linalg.norm(state.xi[p, i]), np.linalg.norm(combo))
            if scale > 0:
                identity_drift = max(identity_drift,
                                     np.linalg.norm(state.xi[p, i] - combo) / scale)
    return {
        "field_drift": field_drift,
        "cross_identity_drift": identity_drift,
        "weights_positive": bool(np.all(state.eta_s > 0) and np.all(state.eta_d > 0)),
        "projection_ok": bool(np.all(state.master.d_eps >= 0)
                              and np.all(state.master.d_sigma >= 0)),
    }
