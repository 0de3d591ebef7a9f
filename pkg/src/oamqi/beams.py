r"""Gaussian and single-ring Laguerre-Gaussian field amplitudes.

Fields are slowly varying envelopes :math:`E(r, z)` of a wave written as
:math:`E e^{i(kz-\omega t)} + c.c.`, normalized so that

.. math:: P = 2 \epsilon_0 n c \iint |E|^2 \, dA.

The LG amplitude for OAM index ``l`` (radial index p = 0) is

.. math::
    E_l = \sqrt{\frac{P}{\pi |l|! \epsilon_0 n c}}
          \frac{(\sqrt{2} r)^{|l|}}{[w_0 q]^{|l|+1}}
          \exp\left(-\frac{r^2}{w_0^2 q}\right) e^{i l \varphi},
    \qquad q = 1 + i z / Z_0,

which reduces to the fundamental Gaussian for ``l = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import C, EPSILON_0, FACTORIALS, MAX_OAM
from .errors import OamRangeError

__all__ = [
    "Beam",
    "FieldSample",
    "gaussian_field",
    "lg_field",
    "lg_mode",
    "check_oam",
    "radial_cutoff",
]


def check_oam(l: int) -> int:
    """Validate an OAM index and return it as ``int``."""
    if int(l) != l:
        raise OamRangeError(f"OAM index must be an integer, got {l!r}")
    l = int(l)
    if abs(l) > MAX_OAM:
        raise OamRangeError(f"|l| = {abs(l)} exceeds supported range |l| <= {MAX_OAM}")
    return l


@dataclass(frozen=True)
class Beam:
    """One optical field inside the crystal.

    Parameters
    ----------
    wavelength : float
        Vacuum wavelength (m).
    waist_w0 : float
        1/e field radius at focus (m).
    refractive_index : float
        Index inside the medium.
    power : float
        Power (W).
    oam_l : int
        Topological charge.
    """

    wavelength: float
    waist_w0: float
    refractive_index: float = 1.0
    power: float = 1.0
    oam_l: int = 0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be > 0")
        if not self.waist_w0 > 0:
            raise ValueError("waist_w0 must be > 0")
        if not self.refractive_index >= 1:
            raise ValueError("refractive_index must be >= 1")
        if not self.power >= 0:
            raise ValueError("power must be >= 0")
        object.__setattr__(self, "oam_l", check_oam(self.oam_l))

    @property
    def rayleigh_range(self) -> float:
        return np.pi * self.refractive_index * self.waist_w0**2 / self.wavelength

    @property
    def amplitude_scale(self) -> float:
        """sqrt(P / (pi |l|! eps0 n c))."""
        return np.sqrt(
            self.power / (np.pi * FACTORIALS[abs(self.oam_l)] * EPSILON_0 * self.refractive_index * C)
        )

    def with_power(self, power: float) -> "Beam":
        return Beam(self.wavelength, self.waist_w0, self.refractive_index, power, self.oam_l)

    def with_oam(self, l: int) -> "Beam":
        return Beam(self.wavelength, self.waist_w0, self.refractive_index, self.power, l)


@dataclass(frozen=True)
class FieldSample:
    amplitude: complex
    r: float
    phi: float
    z: float

    def __post_init__(self):
        if not np.isfinite(self.amplitude):
            raise ValueError("non-finite field amplitude")


def _envelope(beam: Beam, l_abs: int, r, z):
    q = 1.0 + 1j * np.asarray(z, dtype=float) / beam.rayleigh_range
    r = np.asarray(r, dtype=float)
    wq = beam.waist_w0 * q
    radial = (np.sqrt(2.0) * r) ** l_abs if l_abs else 1.0
    return beam.amplitude_scale * radial / wq ** (l_abs + 1) * np.exp(-(r**2) / (beam.waist_w0**2 * q))


def gaussian_field(beam: Beam, r, z):
    """Complex envelope of a fundamental Gaussian beam (``beam.oam_l`` must be 0)."""
    if beam.oam_l != 0:
        raise ValueError(f"gaussian_field needs oam_l = 0, got {beam.oam_l}; use lg_field")
    return _envelope(beam, 0, r, z)


def lg_field(beam: Beam, r, phi, z):
    """Complex envelope of the LG mode with index ``beam.oam_l`` (p = 0).

    Accepts scalars or broadcastable arrays for ``r``, ``phi`` and ``z``.
    """
    l = beam.oam_l
    env = _envelope(beam, abs(l), r, z)
    if l == 0:
        return env * np.ones_like(np.asarray(phi, dtype=float))
    return env * np.exp(1j * l * np.asarray(phi, dtype=float))


def lg_mode(x, y, l: int, waist: float):
    """Unit-power LG_l profile at focus on Cartesian coordinates.

    Normalized so that ``sum |u|^2 dA = 1`` (no eps0 n c factor).
    """
    l = check_oam(l)
    r2 = np.asarray(x) ** 2 + np.asarray(y) ** 2
    la = abs(l)
    norm = np.sqrt(2.0 / (np.pi * FACTORIALS[la])) / waist ** (la + 1)
    # (x + i sgn(l) y)^|l| = r^|l| e^{i l phi}
    if la:
        phase_radial = (np.sqrt(2.0) * (np.asarray(x) + 1j * np.sign(l) * np.asarray(y))) ** la
    else:
        phase_radial = 1.0
    return norm * phase_radial * np.exp(-r2 / waist**2)


def radial_cutoff(beam: Beam, z: float = 0.0) -> float:
    """Truncation radius for radial integrals: 8 w0 |1 + i z/Z0|."""
    return 8.0 * beam.waist_w0 * abs(1.0 + 1j * z / beam.rayleigh_range)
