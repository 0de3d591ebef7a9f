"""Conversion-efficiency and cavity-design calculators.

Closed forms used here (Gaussian pump, LG_l signal, phase matched,
undepleted pump)::

    P_sfg = 16 pi^2 d^2 P_p P_s L 2^|l| h(|l|, xi) / (eps0 c n_s n_sfg lam_sfg^2 lam_p)
    P_max = eps0 c n_s n_sfg lam_p lam_s lam_sfg / (16 pi^2 d^2 L h(0, xi))
    eta   = sin^2((pi/2) sqrt(P / P_max))

The ``2^|l|`` factor and the single power of ``L`` in ``P_sfg`` were fixed
against :func:`oamqi.overlap.direct_sfg_oracle`; see ``docs/physics.md``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .beams import Beam, check_oam
from .constants import (
    C,
    CRYSTAL_LENGTH,
    D_EFF,
    EPSILON_0,
    LAMBDA_PUMP,
    LAMBDA_SFG,
    LAMBDA_SIGNAL,
    MAX_OAM,
    N_PUMP,
    N_SFG,
    N_SIGNAL,
    SFG_POLING_PERIOD,
)
from .errors import ContractViolation, EfficiencyDiscrepancyWarning, OverRotationWarning
from .overlap import FocusGeometry, h_integral, sfg_wavelength

__all__ = [
    "CrystalParams",
    "ConversionChannel",
    "EfficiencyReport",
    "QuantumEfficiencyCheck",
    "heisenberg_evolve",
    "pump_to_efficiency",
    "p_max",
    "sfg_power",
    "power_to_quantum_efficiency",
    "check_reported_quantum_efficiency",
    "normalized_efficiency_curve",
    "beams_for_geometry",
    "efficiency_report",
]


@dataclass(frozen=True)
class CrystalParams:
    """Nonlinear crystal. ``poling_period`` is provenance only (phase matching is assumed)."""

    length: float = CRYSTAL_LENGTH
    d_eff: float = D_EFF
    poling_period: float = SFG_POLING_PERIOD
    n_pump: float = N_PUMP
    n_signal: float = N_SIGNAL
    n_sfg: float = N_SFG

    def __post_init__(self):
        for name in ("length", "d_eff", "poling_period", "n_pump", "n_signal", "n_sfg"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def scaled(self, **changes) -> "CrystalParams":
        fields = dict(self.__dict__)
        fields.update(changes)
        return CrystalParams(**fields)


@dataclass(frozen=True)
class ConversionChannel:
    """Beam-splitter-like conversion channel with strength kappa*L (rad)."""

    kappa_L: float

    def __post_init__(self):
        if not self.kappa_L >= 0:
            raise ValueError("kappa_L must be >= 0")

    @property
    def efficiency(self) -> float:
        return _mixing(self.kappa_L)[1]

    @classmethod
    def from_efficiency(cls, eta: float) -> "ConversionChannel":
        if not 0 <= eta <= 1:
            raise ValueError("efficiency must be in [0, 1]")
        return cls(math.asin(math.sqrt(eta)))


@dataclass(frozen=True)
class EfficiencyReport:
    """Pump-power operating point.

    ``eta_power`` is the SFG/signal power ratio and may exceed 1 (the pump
    supplies energy); ``eta_quantum`` is bounded by 1.
    """

    eta_power: float
    eta_quantum: float
    p_max: float
    circulating_pump: float
    over_rotated: bool = False

    def __post_init__(self):
        if not 0 <= self.eta_quantum <= 1:
            raise ContractViolation("eta_quantum outside [0, 1]")


def _mixing(kl: float):
    """``(cos^2, sin^2)`` of ``kl``, exact at floating multiples of pi/2."""
    r = math.remainder(kl, math.pi / 2)
    if r == 0.0:
        odd = round(kl / (math.pi / 2)) % 2 == 1
        return (0.0, 1.0) if odd else (1.0, 0.0)
    c2 = math.cos(kl) ** 2
    return c2, 1.0 - c2


def heisenberg_evolve(channel: ConversionChannel, n_signal_in, n_sfg_in):
    """Mean photon numbers after the conversion channel.

    With vacuum-uncorrelated inputs the operator solution maps means as a
    beam splitter of transmissivity cos^2(kappa L). Array inputs broadcast.
    """
    ns = np.asarray(n_signal_in, dtype=float)
    nf = np.asarray(n_sfg_in, dtype=float)
    if np.any(ns < 0) or np.any(nf < 0):
        raise ValueError("photon numbers must be >= 0")
    c2, s2 = _mixing(channel.kappa_L)
    out_s = c2 * ns + s2 * nf
    out_f = s2 * ns + c2 * nf
    if out_s.ndim == 0:
        return float(out_s), float(out_f)
    return out_s, out_f


def pump_to_efficiency(circulating_pump: float, p_max: float) -> float:
    """Quantum conversion efficiency sin^2((pi/2) sqrt(P/P_max)).

    Powers above ``p_max`` return the literal (over-rotated) value and emit
    :class:`~oamqi.errors.OverRotationWarning`.
    """
    if circulating_pump < 0 or p_max <= 0:
        raise ValueError("need circulating_pump >= 0 and p_max > 0")
    if circulating_pump > p_max:
        warnings.warn(
            f"pump {circulating_pump:g} W exceeds P_max {p_max:g} W; efficiency is over-rotated",
            OverRotationWarning,
            stacklevel=2,
        )
    return math.sin(0.5 * math.pi * math.sqrt(circulating_pump / p_max)) ** 2


def p_max(crystal: CrystalParams, wavelengths=(LAMBDA_PUMP, LAMBDA_SIGNAL, LAMBDA_SFG), geom: FocusGeometry | None = None, h0: float | None = None, tol: float = 1e-8) -> float:
    """Circulating pump power for unit quantum efficiency (W).

    ``wavelengths`` is ``(pump, signal, sfg)``. ``h0`` short-circuits the
    quadrature when a value of h(0, xi) is already known.
    """
    lp, ls, lsfg = wavelengths
    if h0 is None:
        if geom is None:
            raise ValueError("need geom or h0")
        h0 = h_integral(0, geom, tol=tol).value
    num = EPSILON_0 * C * crystal.n_signal * crystal.n_sfg * lp * ls * lsfg
    return num / (16 * math.pi**2 * crystal.d_eff**2 * crystal.length * h0)


def _check_indices(pump: Beam, signal: Beam, crystal: CrystalParams):
    if not math.isclose(pump.refractive_index, crystal.n_pump, rel_tol=1e-12):
        raise ValueError("pump.refractive_index differs from crystal.n_pump")
    if not math.isclose(signal.refractive_index, crystal.n_signal, rel_tol=1e-12):
        raise ValueError("signal.refractive_index differs from crystal.n_signal")


def sfg_power(pump: Beam, signal: Beam, crystal: CrystalParams, geom: FocusGeometry | None = None, tol: float = 1e-9) -> float:
    """Closed-form SFG power (W) for a Gaussian pump and an LG signal.

    ``geom`` defaults to the geometry implied by the beams; if given it must
    agree with them.
    """
    if pump.oam_l != 0:
        raise ValueError("pump must be Gaussian (oam_l = 0)")
    _check_indices(pump, signal, crystal)
    implied = FocusGeometry.from_beams(pump, signal, crystal.length)
    if geom is None:
        geom = implied
    elif not (math.isclose(geom.xi, implied.xi, rel_tol=1e-9) and math.isclose(geom.alpha, implied.alpha, rel_tol=1e-9)
              and math.isclose(geom.beta, implied.beta, rel_tol=1e-9)):
        raise ValueError("geometry does not match the beams and crystal")
    if pump.power == 0 or signal.power == 0:
        return 0.0
    l = abs(signal.oam_l)
    h = h_integral(l, geom, tol=tol).value
    lam_sfg = sfg_wavelength(pump.wavelength, signal.wavelength)
    num = 16 * math.pi**2 * crystal.d_eff**2 * pump.power * signal.power * crystal.length * 2**l * h
    den = EPSILON_0 * C * crystal.n_signal * crystal.n_sfg * lam_sfg**2 * pump.wavelength
    return num / den


def beams_for_geometry(geom: FocusGeometry, crystal: CrystalParams, pump_power: float = 1.0, signal_power: float = 1.0, l: int = 0):
    """Pump and signal beams realizing ``geom`` in ``crystal``."""
    pump = Beam(geom.pump_wavelength, geom.pump_waist(crystal.length), crystal.n_pump, pump_power, 0)
    signal = Beam(geom.signal_wavelength, geom.signal_waist(crystal.length), crystal.n_signal, signal_power, l)
    return pump, signal


def power_to_quantum_efficiency(eta_power: float, lambda_signal: float, lambda_sfg: float) -> float:
    """Photon-number efficiency from a power ratio: eta_power * lambda_sfg / lambda_signal."""
    if not 0 <= eta_power <= 1:
        raise ValueError("eta_power must be in [0, 1]")
    q = eta_power * lambda_sfg / lambda_signal
    if q > 1:
        raise ContractViolation(f"quantum efficiency {q:g} > 1")
    return q


@dataclass(frozen=True)
class QuantumEfficiencyCheck:
    computed: float
    reported: float
    relative_discrepancy: float
    flagged: bool
    accepted: bool


def check_reported_quantum_efficiency(eta_power: float, reported: float, lambda_signal: float = LAMBDA_SIGNAL,
                                      lambda_sfg: float = LAMBDA_SFG, flag_rtol: float = 0.02,
                                      accept_rtol: float = 0.05) -> QuantumEfficiencyCheck:
    """Compare a reported quantum efficiency with the wavelength-corrected power efficiency.

    Discrepancies above ``flag_rtol`` emit
    :class:`~oamqi.errors.EfficiencyDiscrepancyWarning`; ``accepted`` tells
    whether they stay within ``accept_rtol``.
    """
    q = power_to_quantum_efficiency(eta_power, lambda_signal, lambda_sfg)
    rel = abs(q - reported) / abs(reported)
    flagged = rel > flag_rtol
    if flagged:
        warnings.warn(
            f"reported quantum efficiency {reported:g} differs from {eta_power:g} * "
            f"{lambda_sfg:g}/{lambda_signal:g} = {q:.4g} by {100 * rel:.1f}%",
            EfficiencyDiscrepancyWarning,
            stacklevel=2,
        )
    return QuantumEfficiencyCheck(q, reported, rel, flagged, rel <= accept_rtol)


def normalized_efficiency_curve(l_max: int, geom: FocusGeometry, crystal: CrystalParams | None = None, tol: float = 1e-9):
    """List of ``(l, eta(l)/eta(0))`` for ``l = 0..l_max`` at fixed powers."""
    l_max = check_oam(l_max)
    if l_max < 0 or l_max > MAX_OAM:
        raise ValueError("l_max must be in [0, MAX_OAM]")
    crystal = crystal or CrystalParams(n_pump=geom.n_pump, n_signal=geom.n_signal)
    powers = []
    for l in range(l_max + 1):
        pump, signal = beams_for_geometry(geom, crystal, l=l)
        powers.append(sfg_power(pump, signal, crystal, geom, tol=tol))
    return [(l, 1.0 if l == 0 else p / powers[0]) for l, p in enumerate(powers)]


def efficiency_report(circulating_pump: float, crystal: CrystalParams, geom: FocusGeometry,
                      wavelengths=(LAMBDA_PUMP, LAMBDA_SIGNAL, LAMBDA_SFG)) -> EfficiencyReport:
    pm = p_max(crystal, wavelengths, geom)
    over = circulating_pump > pm
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OverRotationWarning)
        q = pump_to_efficiency(circulating_pump, pm)
    if over:
        warnings.warn("circulating pump exceeds P_max", OverRotationWarning, stacklevel=2)
    lp, ls, lsfg = wavelengths
    return EfficiencyReport(q * ls / lsfg, q, pm, circulating_pump, over)
