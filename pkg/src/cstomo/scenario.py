"""Measurement geometry, synthetic data, noise injection and calibration.

Sources and receivers sit on one circle around the origin.  Source azimuths
are absolute; receiver azimuths are relative to the active source, so the
receiver arc rotates with it.  Angles are degrees, positions meters.

Synthetic data comes from two forward solves per source and frequency, one
without and one with the object, sampled at the receivers; the scattered
field is their difference.  Sources are snapped to the nearest cell center
of the synthesis grid, which is what the downstream calibration step is for.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import hankel2

from .errors import ConfigurationError, NumericalError
from .fdfd import C0, assemble_tm, incident_field_line_source, receiver_operator, solve
from .geometry import Cartesian2DGrid, ContrastMap, chi_at_frequency

__all__ = [
    "MeasurementConfig",
    "MeasurementSet",
    "default_config",
    "synthesize",
    "add_noise",
    "calibrate_incident",
    "incident_fields",
    "save_measurements_csv",
    "load_measurements_csv",
    "config_to_json",
    "config_from_json",
]

CSV_COLUMNS = ("freq_hz", "src_index", "rx_index", "re_scattered", "im_scattered",
               "re_incident", "im_incident", "re_total", "im_total")


@dataclass(frozen=True)
class MeasurementConfig:
    """Circular multi-static, multi-frequency acquisition geometry.

    Parameters
    ----------
    source_angles_deg : array_like
        Absolute source azimuths.
    receiver_relative_angles_deg : array_like
        Receiver azimuths measured from the active source azimuth.
    radius_m : float
        Common source/receiver circle radius.
    frequencies_hz : array_like
        Operating frequencies, strictly increasing.
    """

    source_angles_deg: np.ndarray
    receiver_relative_angles_deg: np.ndarray
    radius_m: float
    frequencies_hz: np.ndarray

    def __post_init__(self):
        src = np.atleast_1d(np.asarray(self.source_angles_deg, dtype=np.float64))
        rel = np.atleast_1d(np.asarray(self.receiver_relative_angles_deg, dtype=np.float64))
        frq = np.atleast_1d(np.asarray(self.frequencies_hz, dtype=np.float64))
        object.__setattr__(self, "source_angles_deg", src)
        object.__setattr__(self, "receiver_relative_angles_deg", rel)
        object.__setattr__(self, "frequencies_hz", frq)
        if src.size == 0 or rel.size == 0:
            raise ConfigurationError("angle lists must be non-empty")
        if not self.radius_m > 0:
            raise ConfigurationError("radius must be positive")
        if frq.size == 0 or np.any(frq <= 0) or np.any(np.diff(frq) <= 0):
            raise ConfigurationError("frequencies must be positive and strictly increasing")

    @property
    def num_sources(self) -> int:
        return int(self.source_angles_deg.size)

    @property
    def num_receivers(self) -> int:
        return int(self.receiver_relative_angles_deg.size)

    @property
    def num_frequencies(self) -> int:
        return int(self.frequencies_hz.size)

    def omegas(self) -> np.ndarray:
        return 2.0 * math.pi * self.frequencies_hz

    def source_positions(self) -> np.ndarray:
        """(P, 2) source coordinates."""
        a = np.deg2rad(self.source_angles_deg)
        return self.radius_m * np.stack([np.cos(a), np.sin(a)], axis=1)

    def receiver_positions(self, p: int) -> np.ndarray:
        """(Q, 2) receiver coordinates for source index p."""
        a = np.deg2rad(self.source_angles_deg[p] + self.receiver_relative_angles_deg)
        return self.radius_m * np.stack([np.cos(a), np.sin(a)], axis=1)


def default_config() -> MeasurementConfig:
    """Twelve sources every 30 degrees, receivers 60..300 every 5 degrees
    relative, 3 m circle, 0.1 to 0.5 GHz in five steps."""
    return MeasurementConfig(
        source_angles_deg=np.arange(0.0, 360.0, 30.0),
        receiver_relative_angles_deg=np.arange(60.0, 300.0 + 2.5, 5.0),
        radius_m=3.0,
        frequencies_hz=np.arange(1, 6) * 0.1e9,
    )


@dataclass(frozen=True)
class MeasurementSet:
    """Receiver samples, shape (P, I, Q), plus provenance.

    ``incident`` and ``total`` may be absent for data that only carries the
    scattered field; when all three are present they must satisfy
    scattered = total - incident to near machine precision.
    """

    config: MeasurementConfig
    scattered: np.ndarray
    incident: np.ndarray | None = None
    total: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.config.num_sources, self.config.num_frequencies,
                 self.config.num_receivers)
        for name in ("scattered", "incident", "total"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=np.complex128)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            object.__setattr__(self, name, arr)
        if self.incident is not None and self.total is not None:
            resid = self.total - self.incident - self.scattered
            scale = np.linalg.norm(self.scattered) + np.linalg.norm(self.total)
            if scale > 0 and np.linalg.norm(resid) > 1e-12 * scale:
                raise ValueError("total - incident does not reproduce scattered")


def _delta_rhs(grid: Cartesian2DGrid, x: float, y: float) -> np.ndarray:
    ix, iy = grid.cell_of(x, y)
    rhs = np.zeros(grid.n, dtype=np.complex128)
    rhs[grid.flat_index(ix, iy)] = 1.0 / grid.cell_area
    return rhs


def synthesize(config: MeasurementConfig, contrast: ContrastMap,
               grid: Cartesian2DGrid, inversion_grid: Cartesian2DGrid | None = None,
               threads: int = 1) -> MeasurementSet:
    """Forward-model receiver data for a contrast on the synthesis grid.

    Per source and frequency the background system and the object system are
    solved with the same point-source right-hand side; receiver samples of
    the two solutions give incident and total fields and their difference is
    the scattered field.  Frequencies are independent, so they can be worked
    by a small thread pool; output slots are indexed, never appended, which
    keeps results identical for any worker count.

    Parameters
    ----------
    config : MeasurementConfig
    contrast : ContrastMap
        Full-grid contrast (one value per synthesis-grid cell).
    grid : Cartesian2DGrid
        Synthesis grid; must contain circle and object.
    inversion_grid : Cartesian2DGrid, optional
        When given, enforce that the synthesis grid is strictly finer, so
        inverted data never comes from the same discretization.
    threads : int
        Worker threads across frequencies.

    Raises
    ------
    ConfigurationError
        Contrast/grid size mismatch, coarse synthesis grid, or circle
        positions outside the usable grid interior.
    NumericalError
        A forward solve failed; message carries (source, frequency) context.
    """
    if contrast.m != grid.n:
        raise ConfigurationError("contrast must cover the full synthesis grid")
    if inversion_grid is not None and not (grid.dx < inversion_grid.dx
                                           and grid.dy < inversion_grid.dy):
        raise ConfigurationError("synthesis grid must be strictly finer than "
                                 "the inversion grid")
    if threads < 1:
        raise ConfigurationError("threads must be at least 1")

    np_src, ni, nq = config.num_sources, config.num_frequencies, config.num_receivers
    src_pos = config.source_positions()
    try:
        rx_ops = [receiver_operator(grid, config.receiver_positions(p))
                  for p in range(np_src)]
        rhs_all = [_delta_rhs(grid, *src_pos[p]) for p in range(np_src)]
    except ValueError as exc:
        raise ConfigurationError(f"source position off the synthesis grid: {exc}") from exc

    incident = np.zeros((np_src, ni, nq), dtype=np.complex128)
    total = np.zeros((np_src, ni, nq), dtype=np.complex128)

    def run_frequency(i: int) -> None:
        omega = 2.0 * math.pi * config.frequencies_hz[i]
        op_bg = assemble_tm(grid, omega)
        op_obj = assemble_tm(grid, omega, chi=chi_at_frequency(contrast, omega))
        for p in range(np_src):
            try:
                e_bg = solve(op_bg, rhs_all[p])
                e_obj = solve(op_obj, rhs_all[p])
            except NumericalError as exc:
                raise NumericalError(
                    f"forward solve failed for source {p}, frequency index {i} "
                    f"({config.frequencies_hz[i]:.6g} Hz)") from exc
            incident[p, i] = rx_ops[p].weights @ e_bg
            total[p, i] = rx_ops[p].weights @ e_obj

    if threads == 1 or ni == 1:
        for i in range(ni):
            run_frequency(i)
    else:
        with ThreadPoolExecutor(max_workers=min(threads, ni)) as pool:
            for fut in [pool.submit(run_frequency, i) for i in range(ni)]:
                fut.result()

    return MeasurementSet(config=config, scattered=total - incident,
                          incident=incident, total=total,
                          meta={"synthesis_dx": grid.dx, "synthesis_dy": grid.dy})


def add_noise(ms: MeasurementSet, snr_db: float, seed: int) -> MeasurementSet:
    """Add circular complex Gaussian noise to the scattered field.

    The same draw n is split across the constituents: scattered + n,
    total + n/2, incident - n/2, so subtracting the noisy incident from the
    noisy total reproduces the noisy scattered field (to float rounding;
    the n/2 halves recombine exactly, the array sums each round once).
    n is scaled per frequency so the realized power ratio over all sources
    and receivers hits 10^(snr_db/10).  An infinite snr_db returns the
    input untouched.
    """
    if ms.incident is None or ms.total is None:
        raise ValueError("noise injection needs incident and total fields")
    if math.isinf(snr_db) and snr_db > 0:
        return ms
    rng = np.random.default_rng(seed)
    target = 10.0 ** (snr_db / 10.0)
    noise = np.zeros_like(ms.scattered)
    for i in range(ms.config.num_frequencies):
        y = ms.scattered[:, i, :]
        raw = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        signal = np.sum(np.abs(y) ** 2)
        scale = math.sqrt(signal / (target * np.sum(np.abs(raw) ** 2)))
        noise[:, i, :] = scale * raw
    return MeasurementSet(config=ms.config,
                          scattered=ms.scattered + noise,
                          incident=ms.incident - 0.5 * noise,
                          total=ms.total + 0.5 * noise,
                          meta={**ms.meta, "snr_db": snr_db, "seed": seed})


def calibrate_incident(config: MeasurementConfig, measured_incident: np.ndarray,
                       omega: float) -> np.ndarray:
    """Per-source calibration factors at one frequency.

    Uses only the receiver diametrically opposite each source: the factor is
    the measured incident sample there divided by the analytic line-source
    field a diameter away.  Multiplying the analytic incident field by the
    factor reproduces the measurement chain's amplitude and phase.

    Parameters
    ----------
    config : MeasurementConfig
    measured_incident : (P, Q) complex array
        Incident-field receiver samples at this frequency.
    omega : float
        Angular frequency.

    Returns
    -------
    (P,) complex array of calibration factors.
    """
    measured = np.asarray(measured_incident, dtype=np.complex128)
    if measured.shape != (config.num_sources, config.num_receivers):
        raise ValueError("measured_incident must be (P, Q) for one frequency")
    opposite = np.flatnonzero(
        np.abs(config.receiver_relative_angles_deg - 180.0) < 1e-9)
    if opposite.size == 0:
        raise ConfigurationError("calibration needs a receiver at 180 degrees "
                                 "relative to the source")
    q = int(opposite[0])
    k0 = omega / C0
    reference = -0.25j * hankel2(0, k0 * 2.0 * config.radius_m)
    if reference == 0:
        raise NumericalError("analytic reference field vanished")
    return measured[:, q] / reference


def incident_fields(config: MeasurementConfig, grid: Cartesian2DGrid, omega: float,
                    factors: np.ndarray | None = None) -> np.ndarray:
    """(P, n) analytic line-source fields on a grid, optionally calibrated."""
    out = np.stack([incident_field_line_source(grid, omega, tuple(pos))
                    for pos in config.source_positions()])
    if factors is not None:
        out = out * np.asarray(factors, dtype=np.complex128)[:, None]
    return out


def save_measurements_csv(path, ms: MeasurementSet) -> None:
    """Write one row per (frequency, source, receiver) sample.

    All three constituents are stored; %.17g keeps float64 exact.
    """
    if ms.incident is None or ms.total is None:
        raise ValueError("CSV serialization stores incident and total fields too")
    cfg = ms.config
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(cfg.num_frequencies):
            f_hz = cfg.frequencies_hz[i]
            for p in range(cfg.num_sources):
                for q in range(cfg.num_receivers):
                    s = ms.scattered[p, i, q]
                    e = ms.incident[p, i, q]
                    t = ms.total[p, i, q]
                    fh.write(f"{f_hz:.17g},{p},{q},"
                             f"{s.real:.17g},{s.imag:.17g},"
                             f"{e.real:.17g},{e.imag:.17g},"
                             f"{t.real:.17g},{t.imag:.17g}\n")


def load_measurements_csv(path, config: MeasurementConfig) -> MeasurementSet:
    """Read samples back against a known config; every slot must be filled."""
    shape = (config.num_sources, config.num_frequencies, config.num_receivers)
    scattered = np.full(shape, np.nan, dtype=np.complex128)
    incident = np.full(shape, np.nan, dtype=np.complex128)
    total = np.full(shape, np.nan, dtype=np.complex128)
    freqs = config.frequencies_hz
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise ConfigurationError(f"unexpected CSV header in {path}")
        for row in reader:
            if not row:
                continue
            f_hz = float(row[0])
            hits = np.flatnonzero(np.abs(freqs - f_hz) <= 1e-9 * np.abs(freqs))
            if hits.size != 1:
                raise ConfigurationError(f"frequency {f_hz} not in config")
            i = int(hits[0])
            p, q = int(row[1]), int(row[2])
            if not (0 <= p < shape[0] and 0 <= q < shape[2]):
                raise ConfigurationError(f"sample index ({p}, {q}) out of range")
            scattered[p, i, q] = float(row[3]) + 1j * float(row[4])
            incident[p, i, q] = float(row[5]) + 1j * float(row[6])
            total[p, i, q] = float(row[7]) + 1j * float(row[8])
    for name, arr in (("scattered", scattered), ("incident", incident), ("total", total)):
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError(f"CSV is missing {name} samples")
    return MeasurementSet(config=config, scattered=scattered,
                          incident=incident, total=total)


def config_to_json(config: MeasurementConfig, snr_db: float = math.inf,
                   seed: int = 0) -> str:
    """Serialize config plus run parameters; infinite SNR becomes null."""
    doc = {
        "source_angles_deg": config.source_angles_deg.tolist(),
        "receiver_relative_angles_deg": config.receiver_relative_angles_deg.tolist(),
        "radius_m": config.radius_m,
        "frequencies_hz": config.frequencies_hz.tolist(),
        "snr_db": None if math.isinf(snr_db) else snr_db,
        "seed": seed,
    }
    return json.dumps(doc, indent=2) + "\n"


def config_from_json(text: str) -> tuple[MeasurementConfig, float, int]:
    """Parse a config document; missing run parameters fall back to
    noise-free and seed 0.  Returns (config, snr_db, seed)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    missing = [k for k in ("source_angles_deg", "receiver_relative_angles_deg",
                           "radius_m", "frequencies_hz") if k not in doc]
    if missing:
        raise ConfigurationError(f"config JSON lacks keys: {', '.join(missing)}")
    config = MeasurementConfig(
        source_angles_deg=doc["source_angles_deg"],
        receiver_relative_angles_deg=doc["receiver_relative_angles_deg"],
        radius_m=doc["radius_m"],
        frequencies_hz=doc["frequencies_hz"])
    snr_db = doc.get("snr_db")
    snr_db = math.inf if snr_db is None else float(snr_db)
    seed = int(doc.get("seed") or 0)
    return config, snr_db, seed
