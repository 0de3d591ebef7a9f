"""OAM x polarization state algebra for the Sagnac superposition experiment.

Sign convention: up-conversion keeps the V component of the HWP output,
giving ``(|l> - e^{i theta}|-l>)/sqrt(2) |V>``. Substituting
``theta -> theta + pi`` recovers the plus-sign form; fringe formulas below
take the plus-sign form with that substitution absorbed into ``theta``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .beams import check_oam
from .constants import FACTORIALS
from .errors import (
    DegenerateStateError,
    NullProjectionError,
    UndefinedVisibilityError,
    UnsupportedStateError,
)
from .rng import STREAM_FRINGE, philox

H, V = "H", "V"
_POLS = (H, V)

__all__ = [
    "H",
    "V",
    "OamPolState",
    "ProjectionOp",
    "FringeFit",
    "prepare_sagnac",
    "hwp_transform",
    "upconvert_vertical_projection",
    "projection_probability",
    "coincidence_curve",
    "intensity_pattern",
    "visibility",
    "fidelity_from_visibility",
    "fit_fringe",
    "simulate_fringe_scan",
    "theta_from_hwp_angle",
]


@dataclass(frozen=True)
class OamPolState:
    """Superposition over ``(oam_l, polarization)`` kets.

    ``terms`` is a tuple of ``((l, pol), amplitude)`` sorted by key; keys are
    unique. Zero amplitudes are dropped.
    """

    terms: tuple

    def __post_init__(self):
        keys = [k for k, _ in self.terms]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate basis keys")
        for (l, pol), _ in self.terms:
            check_oam(l)
            if pol not in _POLS:
                raise ValueError(f"polarization must be 'H' or 'V', got {pol!r}")

    @classmethod
    def from_dict(cls, amps: Mapping) -> "OamPolState":
        items = sorted((((int(l), p), complex(a)) for (l, p), a in amps.items() if a != 0))
        return cls(tuple(items))

    @classmethod
    def ket(cls, l: int, pol: str = H) -> "OamPolState":
        return cls.from_dict({(l, pol): 1.0})

    def as_dict(self) -> dict:
        return dict(self.terms)

    def amplitude(self, l: int, pol: str) -> complex:
        return self.as_dict().get((l, pol), 0j)

    @property
    def norm2(self) -> float:
        return math.fsum(abs(a) ** 2 for _, a in self.terms)

    def inner(self, other: "OamPolState") -> complex:
        """<self|other>."""
        mine = self.as_dict()
        return sum((mine.get(k, 0j).conjugate() * a for k, a in other.terms), 0j)

    def normalized(self) -> "OamPolState":
        n = math.sqrt(self.norm2)
        if n == 0:
            raise NullProjectionError("cannot normalize the zero vector")
        return OamPolState(tuple((k, a / n) for k, a in self.terms))

    def polarization_component(self, pol: str) -> dict:
        """``{l: amplitude}`` restricted to one polarization."""
        return {l: a for (l, p), a in self.terms if p == pol}

    def oam_values(self) -> set:
        return {l for (l, _), _ in self.terms}


def prepare_sagnac(l: int, theta: float) -> OamPolState:
    """(|H>|l> + e^{i theta}|V>|-l>)/sqrt(2)."""
    l = check_oam(l)
    if l < 1:
        raise DegenerateStateError("Sagnac superposition needs l >= 1")
    s = 1 / math.sqrt(2)
    return OamPolState.from_dict({(l, H): s, (-l, V): s * cmath.exp(1j * theta)})


def hwp_transform(state: OamPolState) -> OamPolState:
    """Half-wave plate at 22.5 deg: H -> (H+V)/sqrt2, V -> (H-V)/sqrt2."""
    s = 1 / math.sqrt(2)
    out: dict = {}
    for (l, pol), a in state.terms:
        out[(l, H)] = out.get((l, H), 0j) + s * a
        out[(l, V)] = out.get((l, V), 0j) + (s * a if pol == H else -s * a)
    return OamPolState.from_dict(out)


def upconvert_vertical_projection(state: OamPolState):
    """Keep the phase-matched V component.

    Returns ``(normalized state, success probability)``.
    """
    kept = {k: a for k, a in state.terms if k[1] == V}
    p = math.fsum(abs(a) ** 2 for a in kept.values())
    if p == 0:
        raise NullProjectionError("state has no V component")
    return OamPolState.from_dict(kept).normalized(), p


@dataclass(frozen=True)
class ProjectionOp:
    """|Pi><Pi| with |Pi> = (|l> + e^{i phi}|-l>)/sqrt(2) in one polarization."""

    l: int
    pinhole_phase_phi: float
    polarization: str = V

    @property
    def bra(self) -> OamPolState:
        s = 1 / math.sqrt(2)
        return OamPolState.from_dict(
            {(self.l, self.polarization): s, (-self.l, self.polarization): s * cmath.exp(1j * self.pinhole_phase_phi)}
        )


def projection_probability(state: OamPolState, op: ProjectionOp) -> float:
    """<state| P |state> = |<Pi|state>|^2."""
    return abs(op.bra.inner(state)) ** 2


def coincidence_curve(theta, pinhole_phi):
    """Relative coincidence rate cos^2((theta - phi)/2), peak 1."""
    return np.cos(0.5 * (np.asarray(theta) - np.asarray(pinhole_phi))) ** 2


def theta_from_hwp_angle(angle: float) -> float:
    """Assumed map from Sagnac-input HWP axis angle (rad) to theta: theta = 4 * angle."""
    return 4.0 * angle


def intensity_pattern(state: OamPolState, waist: float) -> Callable:
    """Transverse intensity I(r, phi) at focus, in units of 1/m^2.

    Each polarization adds incoherently: I = sum_pol |sum_l a_l u_l|^2 with
    unit-power LG modes u_l, so a normalized state integrates to 1. The
    state may only contain one |l| value (a single l or a +/- pair).
    """
    if not state.terms:
        raise UnsupportedStateError("empty state")
    mags = {abs(l) for l in state.oam_values()}
    if len(mags) != 1:
        raise UnsupportedStateError(f"state mixes |l| values {sorted(mags)}")
    la = mags.pop()
    comps = [state.polarization_component(p) for p in _POLS]
    comps = [c for c in comps if c]
    norm = math.sqrt(2.0 / (math.pi * FACTORIALS[la])) / waist ** (la + 1)

    def intensity(r, phi):
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        radial = norm * (math.sqrt(2.0) * r) ** la * np.exp(-(r**2) / waist**2)
        total = 0.0
        for comp in comps:
            field = sum(a * np.exp(1j * l * phi) for l, a in comp.items())
            total = total + np.abs(radial * field) ** 2
        return total

    intensity.oam = la
    return intensity


def visibility(max_count: float, min_count: float) -> float:
    """(max - min)/(max + min)."""
    if not max_count >= min_count >= 0:
        raise ValueError("need max_count >= min_count >= 0")
    if max_count + min_count == 0:
        raise UndefinedVisibilityError("visibility undefined for zero counts")
    return (max_count - min_count) / (max_count + min_count)


def fidelity_from_visibility(v: float) -> float:
    """F = (1 + V)/2 for the depolarized output rho = V|Phi><Phi| + (1 - V) I/2."""
    if not 0 <= v <= 1:
        raise ValueError("visibility must be in [0, 1]")
    return 0.5 * (1.0 + v)


@dataclass(frozen=True)
class FringeFit:
    amplitude: float
    offset: float
    phase: float
    visibility: float
    fidelity: float
    visibility_error: float


def fit_fringe(theta: Iterable[float], counts: Iterable[float], sigma: Iterable[float] | None = None) -> FringeFit:
    """Least-squares fit of ``A cos^2((theta - phi0)/2) + B``.

    Solved linearly as ``c0 + c1 cos(theta) + c2 sin(theta)``; the
    visibility is ``A/(A + 2B)`` and its error is propagated from the
    parameter covariance (Poisson weights when ``sigma`` is None).
    """
    theta = np.asarray(theta, dtype=float)
    y = np.asarray(counts, dtype=float)
    if theta.size < 3:
        raise ValueError("need at least 3 phase samples")
    design = np.column_stack([np.ones_like(theta), np.cos(theta), np.sin(theta)])
    if sigma is None:
        sigma = np.sqrt(np.maximum(y, 1.0))
    w = 1.0 / np.asarray(sigma, dtype=float)
    coef, *_ = np.linalg.lstsq(design * w[:, None], y * w, rcond=None)
    c0, c1, c2 = coef
    amp = 2.0 * math.hypot(c1, c2)
    offset = c0 - 0.5 * amp
    phase = math.atan2(c2, c1)
    vis = amp / (amp + 2.0 * offset) if amp + 2.0 * offset != 0 else float("nan")

    # V = rho / c0 with rho = sqrt(c1^2 + c2^2)
    cov = np.linalg.pinv((design * w[:, None]).T @ (design * w[:, None]))
    rho = math.hypot(c1, c2)
    if rho > 0 and c0 != 0:
        grad = np.array([-rho / c0**2, c1 / (rho * c0), c2 / (rho * c0)])
        verr = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    else:
        verr = float("nan")
    fid = 0.5 * (1.0 + min(max(vis, 0.0), 1.0)) if math.isfinite(vis) else float("nan")
    return FringeFit(float(amp), float(offset), float(phase), float(vis), float(fid), verr)


def simulate_fringe_scan(phases, visibility: float = 1.0, peak_counts: float = 1e4, pinhole_phi: float = 0.0,
                         seed: int | None = None, stream: int = 0):
    """Coincidence counts versus theta for the depolarized output state.

    Expected counts are ``peak_counts * (V cos^2((theta - phi)/2) + (1 - V)/2)``.
    With ``seed=None`` the expectation is returned without shot noise;
    otherwise counts are Poisson draws from a Philox stream keyed by
    ``(seed, stream)``.
    """
    phases = np.asarray(phases, dtype=float)
    if not 0 <= visibility <= 1:
        raise ValueError("visibility must be in [0, 1]")
    mean = peak_counts * (visibility * coincidence_curve(phases, pinhole_phi) + 0.5 * (1.0 - visibility))
    if seed is None:
        return mean
    rng = philox(seed, STREAM_FRINGE, stream)
    return rng.poisson(mean).astype(float)
