"""Photon-pair Monte Carlo, coincidence statistics and calibration helpers.

Time-tagged click streams are produced by a Poisson pair source whose
signal photon passes a conversion channel and both arms suffer detector
thinning, with independent Poisson background merged into each arm.
``g2_estimate`` normalizes the coincidence count at delay ``tau`` by the
mean count in far-delay windows, where only accidental coincidences occur.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .beams import check_oam, lg_mode
from .constants import COINCIDENCE_WINDOW, H_PLANCK, K_BOLTZMANN
from .conversion import ConversionChannel
from .errors import (
    CalibrationError,
    DegenerateChainError,
    EventBudgetError,
    InsufficientDataError,
)
from .rng import STREAM_PAIRS, philox

__all__ = [
    "SourceModel",
    "ClickRecord",
    "G2Estimate",
    "CoincidenceHistogram",
    "LossChain",
    "ApdCalibration",
    "simulate_pairs",
    "g2_estimate",
    "coincidence_histogram",
    "analytic_g2",
    "pair_rate_for_g2",
    "signal_noise_for_g2",
    "nonclassical_witness",
    "smf_coupling",
    "smf_coupling_scan",
    "g2_vs_position",
    "signal_noise_for_peak_g2",
    "loss_chain_internal_efficiency",
    "apd_calibrate",
    "anti_stokes_ratio",
    "effective_noise_rate",
    "input_source",
    "post_conversion_source",
    "DEFAULT_LOSS_CHAIN",
    "MAX_EVENTS",
]

MAX_EVENTS = 100_000_000
SLICE_DURATION = 0.05
FAR_OFFSET_WINDOWS = 100
N_FAR_WINDOWS = 50


@dataclass(frozen=True)
class SourceModel:
    """Heralded pair source plus detection.

    Noise rates are pre-detector background rates per arm (counts/s); they
    are thinned by the same detector efficiency as true photons.
    """

    pair_rate: float
    rng_seed: int
    duration: float = 1.0
    signal_noise_rate: float = 0.0
    idler_noise_rate: float = 0.0
    signal_det_eff: float = 1.0
    idler_det_eff: float = 1.0
    coincidence_window: float = COINCIDENCE_WINDOW

    def __post_init__(self):
        for name in ("pair_rate", "signal_noise_rate", "idler_noise_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("signal_det_eff", "idler_det_eff"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in [0, 1]")
        if not self.coincidence_window > 0:
            raise ValueError("coincidence_window must be > 0")
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if self.rng_seed is None:
            raise ValueError("rng_seed is mandatory")

    def expected_events(self) -> float:
        return self.duration * (2 * self.pair_rate + self.signal_noise_rate + self.idler_noise_rate)


@dataclass(frozen=True, eq=False)
class ClickRecord:
    """Sorted detection times (s) per arm."""

    signal: np.ndarray
    idler: np.ndarray
    duration: float

    def to_csv(self, path, comments=()):
        """Write ``timestamp_s,arm`` rows in time order (atomic rename).

        ``comments`` become leading ``# `` lines, skipped by :meth:`from_csv`.
        """
        times = np.concatenate([self.signal, self.idler])
        arms = np.array(["signal"] * self.signal.size + ["idler"] * self.idler.size)
        order = np.argsort(times, kind="stable")
        tmp = f"{path}.tmp{os.getpid()}"
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["timestamp_s", "arm"])
            for t, a in zip(times[order], arms[order]):
                w.writerow([repr(float(t)), a])
        os.replace(tmp, path)

    @classmethod
    def from_csv(cls, path, duration=None):
        sig, idl = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(line for line in fh if not line.startswith("#")):
                (sig if row["arm"] == "signal" else idl).append(float(row["timestamp_s"]))
        sig, idl = np.array(sig), np.array(idl)
        if duration is None:
            duration = float(max(sig.max(initial=0), idl.max(initial=0)))
        return cls(sig, idl, duration)


def _channel_efficiency(channel) -> float:
    if channel is None:
        return 1.0
    if isinstance(channel, ConversionChannel):
        return channel.efficiency
    eta = float(channel)
    if not 0 <= eta <= 1:
        raise ValueError("channel efficiency must be in [0, 1]")
    return eta


def simulate_pairs(src: SourceModel, channel=None, stream: int = 0) -> ClickRecord:
    """Generate time-tagged clicks for both arms.

    ``channel`` is a :class:`~oamqi.conversion.ConversionChannel`, a fixed
    efficiency in [0, 1], or None (lossless). The run is cut into slices of
    50 ms, each drawn from its own stream keyed by ``(seed, stream, slice)``.
    """
    if src.expected_events() > MAX_EVENTS:
        raise EventBudgetError(f"expected {src.expected_events():.3g} events exceeds budget {MAX_EVENTS:.0e}")
    eta = _channel_efficiency(channel)
    p_sig = eta * src.signal_det_eff
    p_idl = src.idler_det_eff
    n_slices = max(1, math.ceil(src.duration / SLICE_DURATION - 1e-12))
    sig_parts, idl_parts = [], []
    for k in range(n_slices):
        t0 = k * SLICE_DURATION
        dt = min(SLICE_DURATION, src.duration - t0)
        rng = philox(src.rng_seed, STREAM_PAIRS, int(stream), k)
        n = rng.poisson(src.pair_rate * dt)
        t_pair = t0 + dt * rng.random(n)
        keep_s = rng.random(n) < p_sig
        keep_i = rng.random(n) < p_idl
        ns = rng.poisson(src.signal_noise_rate * src.signal_det_eff * dt)
        ni = rng.poisson(src.idler_noise_rate * src.idler_det_eff * dt)
        s = np.concatenate([t_pair[keep_s], t0 + dt * rng.random(ns)])
        i = np.concatenate([t_pair[keep_i], t0 + dt * rng.random(ni)])
        s.sort()
        i.sort()
        sig_parts.append(s)
        idl_parts.append(i)
    return ClickRecord(np.concatenate(sig_parts), np.concatenate(idl_parts), src.duration)


class G2Estimate(NamedTuple):
    g2: float
    stat_error: float
    coincidences: int
    accidentals: float
    singles_signal: int
    singles_idler: int


def _far_offsets(tau, window, n_far=N_FAR_WINDOWS, offset=FAR_OFFSET_WINDOWS):
    half = n_far // 2
    steps = np.arange(offset, offset + half, dtype=float)
    return tau + window * np.concatenate([-steps[::-1], steps])


def g2_estimate(signal, idler, window: float = COINCIDENCE_WINDOW, tau: float = 0.0,
                n_far: int = N_FAR_WINDOWS) -> G2Estimate:
    """Normalized cross-correlation g2(tau) from two sorted click streams.

    The numerator counts idler clicks within ``[tau - w/2, tau + w/2)`` of a
    signal click; the denominator is the mean of the same count in
    ``n_far`` windows 100 or more windows away. The error follows from
    counting statistics of both.
    """
    signal = np.asarray(signal, dtype=np.float64)
    idler = np.asarray(idler, dtype=np.float64)
    if signal.size == 0 or idler.size == 0:
        raise InsufficientDataError("empty click stream")
    centers = np.concatenate([[tau], _far_offsets(tau, window, n_far)])
    counts = _kernels.count_coincidences_many(signal, idler, centers - 0.5 * window, centers + 0.5 * window)
    c = int(counts[0])
    far = counts[1:]
    total_far = int(far.sum())
    if total_far == 0:
        raise InsufficientDataError("no accidental coincidences in the normalization windows")
    acc = total_far / far.size
    g2 = c / acc
    err = g2 * math.sqrt(1.0 / max(c, 1) + 1.0 / total_far)
    return G2Estimate(g2, err, c, acc, int(signal.size), int(idler.size))


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    bin_width: float
    delays: np.ndarray
    counts: np.ndarray
    singles_signal: int
    singles_idler: int

    def __post_init__(self):
        if np.any(np.asarray(self.counts) < 0):
            raise ValueError("negative counts")


def coincidence_histogram(signal, idler, bin_width: float = COINCIDENCE_WINDOW, max_delay: float = 50e-9) -> CoincidenceHistogram:
    """Coincidence counts versus delay ``t_idler - t_signal`` in bins centred on multiples of ``bin_width``."""
    n = int(math.floor(max_delay / bin_width))
    delays = bin_width * np.arange(-n, n + 1)
    counts = _kernels.count_coincidences_many(signal, idler, delays - 0.5 * bin_width, delays + 0.5 * bin_width)
    return CoincidenceHistogram(bin_width, delays, counts, int(np.size(signal)), int(np.size(idler)))


def analytic_g2(src: SourceModel, channel=None) -> float:
    """Expected g2(0) for a square window: 1 + true rate / accidental rate."""
    eta = _channel_efficiency(channel)
    p_s = eta * src.signal_det_eff
    p_i = src.idler_det_eff
    s_rate = src.pair_rate * p_s + src.signal_noise_rate * src.signal_det_eff
    i_rate = src.pair_rate * p_i + src.idler_noise_rate * src.idler_det_eff
    if s_rate == 0 or i_rate == 0:
        raise InsufficientDataError("a detector sees no clicks")
    return 1.0 + src.pair_rate * p_s * p_i / (s_rate * i_rate * src.coincidence_window)


def pair_rate_for_g2(target: float, window: float = COINCIDENCE_WINDOW) -> float:
    """Pair rate giving ``target`` for a noiseless, lossless source: R T_w = 1/(g2 - 1)."""
    if target <= 1:
        raise CalibrationError("target g2 must exceed 1")
    return 1.0 / ((target - 1.0) * window)


def signal_noise_for_g2(src: SourceModel, target: float, channel=None) -> float:
    """Signal-arm background rate that brings :func:`analytic_g2` to ``target``."""
    eta = _channel_efficiency(channel)
    p_s = eta * src.signal_det_eff
    p_i = src.idler_det_eff
    i_rate = src.pair_rate * p_i + src.idler_noise_rate * src.idler_det_eff
    if target <= 1 or p_s == 0 or src.signal_det_eff == 0:
        raise CalibrationError("cannot reach target g2 with this source")
    s_rate = src.pair_rate * p_s * p_i / ((target - 1.0) * i_rate * src.coincidence_window)
    noise = (s_rate - src.pair_rate * p_s) / src.signal_det_eff
    if noise < 0:
        raise CalibrationError(f"target g2 {target} exceeds the noiseless value {analytic_g2(src, eta):.4g}")
    return noise


def nonclassical_witness(g2_si: float) -> bool:
    """Cross-correlation above 2 (given auto-correlations in [1, 2])."""
    if g2_si < 0:
        raise ValueError("g2 must be >= 0")
    return g2_si > 2.0


def _gl_box(half_width, n_panels=16, n_nodes=24):
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    edges = np.linspace(-half_width, half_width, n_panels + 1)
    h = 0.5 * np.diff(edges)
    m = 0.5 * (edges[:-1] + edges[1:])
    return (m[:, None] + h[:, None] * x).ravel(), (h[:, None] * w).ravel()


def smf_coupling(l: int, displacement: float, mode_waist: float, fiber_waist: float) -> float:
    """Power coupling of an LG_l mode displaced along x into a centred Gaussian fibre mode.

    ``|<G|LG_l(r - d)>|^2 / (<LG|LG><G|G>)`` by tensor Gauss-Legendre
    quadrature on a box symmetric about the fibre axis.
    """
    l = check_oam(l)
    if not (mode_waist > 0 and fiber_waist > 0):
        raise ValueError("waists must be > 0")
    half = 8.0 * max(mode_waist, fiber_waist) + abs(displacement)
    x, wx = _gl_box(half)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = wx[:, None] * wx[None, :]
    mode = lg_mode(X - displacement, Y, l, mode_waist)
    fib = lg_mode(X, Y, 0, fiber_waist)
    overlap = np.sum(W * np.conj(fib) * mode)
    n_mode = np.sum(W * np.abs(mode) ** 2)
    n_fib = np.sum(W * np.abs(fib) ** 2)
    return float(abs(overlap) ** 2 / (n_mode * n_fib))


def smf_coupling_scan(l: int, displacements: Sequence[float], mode_waist: float, fiber_waist: float):
    """List of ``(d, efficiency)``."""
    return [(float(d), smf_coupling(l, d, mode_waist, fiber_waist)) for d in displacements]


def g2_vs_position(l: int, displacements: Sequence[float], src: SourceModel, channel=None,
                   mode_waist: float = 1.0, fiber_waist: float = 1.0, impurity: float = 0.0):
    """g2 at each fibre position with the signal arm scaled by SMF coupling.

    ``src.signal_noise_rate`` acts as a position-independent noise floor.
    ``impurity`` mixes in a fraction of Gaussian-mode power, which fills the
    central coupling null. Returns a list of ``(d, G2Estimate)``; positions
    with no signal clicks raise :class:`~oamqi.errors.InsufficientDataError`.
    """
    if not 0 <= impurity <= 1:
        raise ValueError("impurity must be in [0, 1]")
    eta = _channel_efficiency(channel)
    out = []
    for k, d in enumerate(displacements):
        c = (1 - impurity) * smf_coupling(l, d, mode_waist, fiber_waist)
        if impurity:
            c += impurity * smf_coupling(0, d, mode_waist, fiber_waist)
        clicks = simulate_pairs(src, eta * c, stream=k + 1)
        out.append((float(d), g2_estimate(clicks.signal, clicks.idler, src.coincidence_window)))
    return out


def signal_noise_for_peak_g2(l: int, displacements, src: SourceModel, target: float, channel=None,
                             mode_waist: float = 1.0, fiber_waist: float = 1.0, impurity: float = 0.0) -> float:
    """Noise floor that puts the largest expected g2 over the scan at ``target``."""
    eta = _channel_efficiency(channel)
    best = 0.0
    for d in displacements:
        c = (1 - impurity) * smf_coupling(l, d, mode_waist, fiber_waist)
        if impurity:
            c += impurity * smf_coupling(0, d, mode_waist, fiber_waist)
        best = max(best, c)
    return signal_noise_for_g2(src, target, eta * best)


@dataclass(frozen=True)
class LossChain:
    """Ordered ``(label, transmission)`` stages."""

    stages: tuple

    def __post_init__(self):
        if not self.stages:
            raise ValueError("loss chain must not be empty")
        for label, t in self.stages:
            if not 0 < t <= 1:
                raise ValueError(f"transmission of {label!r} must be in (0, 1]")

    @property
    def transmission(self) -> float:
        return math.prod(t for _, t in self.stages)


#: Signal-path losses between the pair source and the detector behind the up-converter.
DEFAULT_LOSS_CHAIN = LossChain((
    ("FC1 fibre coupling", 0.25),
    ("transmission to SFG crystal", 0.80),
    ("filtering of up-converted photons", 0.80),
    ("FC3 fibre coupling", 0.50),
    ("bandwidth mismatch (1 nm / 2.44 nm)", 0.41),
    ("APD2 detection efficiency", 0.50),
))


def loss_chain_internal_efficiency(herald_rate: float, chain: LossChain = DEFAULT_LOSS_CHAIN) -> float:
    """Internal conversion efficiency: herald rate divided by the chain transmission."""
    if not 0 < herald_rate <= 1:
        raise ValueError("herald_rate must be in (0, 1]")
    t = chain.transmission
    if t < 1e-12:
        raise DegenerateChainError(f"chain transmission {t:g} underflows")
    return herald_rate / t


@dataclass(frozen=True)
class ApdCalibration:
    trigger_rate: float = 30e6
    gate_window: float = 1e-9
    det_eff_per_gate: float = 0.15
    optics_transmission: float = 1.0

    def __post_init__(self):
        duty = self.trigger_rate * self.gate_window
        if not 0 < duty <= 1:
            raise ValueError(f"duty cycle {duty:g} outside (0, 1]")
        if not 0 <= self.det_eff_per_gate <= 1 or not 0 <= self.optics_transmission <= 1:
            raise ValueError("efficiencies must be in [0, 1]")

    @property
    def duty(self) -> float:
        return self.trigger_rate * self.gate_window


def apd_calibrate(count_rate: float, cal: ApdCalibration) -> float:
    """Photon rate at the crystal face from a gated APD count rate.

    ``count_rate / (duty * det_eff) * optics_transmission``.
    """
    if count_rate < 0:
        raise ValueError("count_rate must be >= 0")
    denom = cal.duty * cal.det_eff_per_gate
    if denom == 0:
        raise CalibrationError("duty * detection efficiency is zero")
    return count_rate / denom * cal.optics_transmission


def anti_stokes_ratio(shift_hz: float, temperature: float) -> float:
    """Anti-Stokes/Stokes Raman intensity ratio exp(-h dnu / k T)."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    return math.exp(-H_PLANCK * abs(shift_hz) / (K_BOLTZMANN * temperature))


def effective_noise_rate(spdc_floor: float, srs_stokes: float, anti_stokes: bool = False,
                         boltzmann_ratio: float = 1.0, filter_factor: float = 1.0) -> float:
    """Background rate reaching the converter.

    SRS on the anti-Stokes side is weighted by ``boltzmann_ratio``; the
    spectral filter enters as a single multiplier.
    """
    srs = srs_stokes * (boltzmann_ratio if anti_stokes else 1.0)
    return filter_factor * (spdc_floor + srs)


def input_source(seed: int, duration: float = 0.1, target_g2: float = 162.0,
                 window: float = COINCIDENCE_WINDOW) -> SourceModel:
    """Noiseless lossless pair source calibrated to ``target_g2``."""
    return SourceModel(pair_rate_for_g2(target_g2, window), seed, duration, coincidence_window=window)


def post_conversion_source(seed: int, duration: float = 1.0, target_g2: float = 25.0, internal_efficiency: float = 0.061,
                           chain: LossChain = DEFAULT_LOSS_CHAIN, idler_det_eff: float = 0.2,
                           window: float = COINCIDENCE_WINDOW, input_g2: float = 162.0):
    """Source and channel for the up-converted signal versus idler.

    The signal arm sees ``internal_efficiency`` times the chain
    transmission; signal background is calibrated so the expected g2 equals
    ``target_g2``. Returns ``(SourceModel, channel_efficiency)``.
    """
    base = SourceModel(pair_rate_for_g2(input_g2, window), seed, duration, signal_det_eff=chain.transmission,
                       idler_det_eff=idler_det_eff, coincidence_window=window)
    noise = signal_noise_for_g2(base, target_g2, internal_efficiency)
    return replace(base, signal_noise_rate=noise), internal_efficiency
