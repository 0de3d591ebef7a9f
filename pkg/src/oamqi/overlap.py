r"""Focusing/overlap factor h(l, xi) for SFG of a Gaussian pump and an LG signal.

.. math::
    h(l, \xi) = \frac{1}{\xi}\int_{-\xi}^{\xi}\!\int_{-\xi}^{\xi}
    \frac{(1+ix)^l (1-iy)^l\, dx\, dy}
    {\{(1+ix)(1-iy)[2 + i(x-y)/\beta]
       + \alpha(1+ix/\beta)(1-iy/\beta)[2+i(x-y)]\}^{l+1}}

with :math:`\xi = L/2Z_{0p}`, :math:`\alpha = w_{0s}^2/w_{0p}^2` and
:math:`\beta = Z_{0s}/Z_{0p}`. The integrand maps to its conjugate under
``x <-> y``, so the integral over the square is real.

:func:`direct_sfg_oracle` computes the same SFG power without h: it
integrates the undepleted-pump coupled-wave equation along the crystal and
the resulting SFG intensity over the output plane, numerically.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .beams import Beam, check_oam, lg_field, radial_cutoff
from .constants import C, EPSILON_0, LAMBDA_PUMP, LAMBDA_SIGNAL, N_PUMP, N_SIGNAL
from .errors import QuadratureError, RefinementNeededError
from .quadrature import QuadratureResult, adaptive_cubature

__all__ = [
    "FocusGeometry",
    "QuadratureResult",
    "OracleGrid",
    "XiOptimum",
    "h_integral",
    "direct_sfg_oracle",
    "optimize_xi",
    "sfg_wavelength",
]


def sfg_wavelength(pump_wavelength: float, signal_wavelength: float) -> float:
    """Vacuum wavelength of the sum frequency (energy conservation)."""
    return 1.0 / (1.0 / pump_wavelength + 1.0 / signal_wavelength)


@dataclass(frozen=True)
class FocusGeometry:
    """Dimensionless focusing geometry.

    ``beta`` is derived from ``alpha``, the wavelengths and the indices and
    cannot be set directly.
    """

    xi: float
    alpha: float = 1.0
    pump_wavelength: float = LAMBDA_PUMP
    signal_wavelength: float = LAMBDA_SIGNAL
    n_pump: float = N_PUMP
    n_signal: float = N_SIGNAL

    def __post_init__(self):
        for name in ("xi", "alpha", "pump_wavelength", "signal_wavelength", "n_pump", "n_signal"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def beta(self) -> float:
        return self.n_signal * self.pump_wavelength * self.alpha / (self.n_pump * self.signal_wavelength)

    @classmethod
    def from_beams(cls, pump: Beam, signal: Beam, crystal_length: float) -> "FocusGeometry":
        return cls(
            xi=crystal_length / (2.0 * pump.rayleigh_range),
            alpha=signal.waist_w0**2 / pump.waist_w0**2,
            pump_wavelength=pump.wavelength,
            signal_wavelength=signal.wavelength,
            n_pump=pump.refractive_index,
            n_signal=signal.refractive_index,
        )

    def with_xi(self, xi: float) -> "FocusGeometry":
        return FocusGeometry(xi, self.alpha, self.pump_wavelength, self.signal_wavelength, self.n_pump, self.n_signal)

    def pump_waist(self, crystal_length: float) -> float:
        """Pump waist giving this xi for a crystal of the given length."""
        z0 = crystal_length / (2.0 * self.xi)
        return np.sqrt(z0 * self.pump_wavelength / (np.pi * self.n_pump))

    def signal_waist(self, crystal_length: float) -> float:
        return np.sqrt(self.alpha) * self.pump_waist(crystal_length)


def h_integral(l: int, geom: FocusGeometry, tol: float = 1e-8, max_evals: int = 4_000_000) -> QuadratureResult:
    """Evaluate h(|l|, xi) by adaptive cubature.

    Negative ``l`` is mapped to ``|l|``. ``tol`` is relative to the running
    estimate and must lie in ``[1e-10, 1e-3]``. Raises
    :class:`~oamqi.errors.QuadratureError` (with ``.partial``) if the budget
    runs out.
    """
    l = abs(check_oam(l))
    if not 1e-10 <= tol <= 1e-3:
        raise ValueError(f"tol must be in [1e-10, 1e-3], got {tol}")
    xi, alpha, beta = geom.xi, geom.alpha, geom.beta
    panel = _kernels.h_panel

    def rule(x0, x1, y0, y1):
        return panel(l, alpha, beta, x0, x1, y0, y1)

    cub = adaptive_cubature(rule, -xi, xi, -xi, xi, rtol=tol, max_evals=max_evals)
    raw = cub.value / xi
    err = cub.abs_error_estimate / xi + abs(raw.imag)
    result = QuadratureResult(float(raw.real), float(err), cub.evaluations)
    if not cub.converged:
        raise QuadratureError(
            f"h({l}, xi={xi}) did not reach tol={tol} within {max_evals} evaluations", partial=result
        )
    return result


@dataclass(frozen=True)
class OracleGrid:
    """Resolution of the direct coupled-wave oracle.

    ``n_r`` radial Gauss-Legendre nodes (in panels of 32), ``n_z`` nodes
    along the crystal and ``n_phi`` equispaced azimuth samples.
    """

    n_r: int = 128
    n_z: int = 64
    n_phi: int = 8


def _gauss_legendre(a, b, n, panels=1):
    x, w = np.polynomial.legendre.leggauss(n)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _oracle_power(pump, signal, crystal, n_r, n_z, n_phi):
    L = crystal.length
    z, wz = _gauss_legendre(-L / 2, L / 2, n_z)
    rmax = max(radial_cutoff(pump, L / 2), radial_cutoff(signal, L / 2))
    panels = max(1, n_r // 32)
    r, wr = _gauss_legendre(0.0, rmax, n_r // panels, panels)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi

    lam_sfg = sfg_wavelength(pump.wavelength, signal.wavelength)
    omega_sfg = 2 * np.pi * C / lam_sfg
    coupling = 2.0 * crystal.d_eff * omega_sfg / (crystal.n_sfg * C)

    ep = lg_field(pump, r[:, None, None], 0.0, z[None, None, :])
    es = lg_field(signal, r[:, None, None], phi[None, :, None], z[None, None, :])
    e_sfg = -1j * coupling * np.sum(ep * es * wz, axis=-1)  # (n_r, n_phi)
    intensity = np.abs(e_sfg) ** 2
    area = np.sum(intensity * (2 * np.pi / n_phi), axis=1) @ (r * wr)
    return 2.0 * EPSILON_0 * C * crystal.n_sfg * area


def direct_sfg_oracle(pump: Beam, signal: Beam, crystal, grid: OracleGrid = OracleGrid(), rel_tol: float = 1e-3) -> float:
    """SFG power (W) from direct quadrature of the field equations.

    The SFG envelope at the exit face is the z-integral of the product of
    pump and signal envelopes (phase matched, undepleted pump); the power
    follows from integrating its intensity over a polar grid. The grid is
    checked against a doubled grid; a relative change above ``rel_tol``
    raises :class:`~oamqi.errors.RefinementNeededError`.
    """
    if pump.oam_l != 0:
        raise ValueError("pump must be Gaussian (oam_l = 0)")
    if signal.power == 0 or pump.power == 0:
        return 0.0
    coarse = _oracle_power(pump, signal, crystal, grid.n_r, grid.n_z, grid.n_phi)
    fine = _oracle_power(pump, signal, crystal, 2 * grid.n_r, 2 * grid.n_z, grid.n_phi)
    change = abs(fine - coarse) / abs(fine)
    if change > rel_tol:
        raise RefinementNeededError(
            f"oracle grid {grid} changes by {change:.2e} on refinement", estimate=fine, rel_change=change
        )
    return float(fine)


class XiOptimum(NamedTuple):
    xi: float
    h: float
    at_boundary: bool


_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, a, b, rtol):
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rtol * max(abs(c), abs(d)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize_xi(l: int, alpha: float = 1.0, xi_range=(0.05, 10.0), n_scan: int = 40, rtol: float = 1e-4, tol: float = 1e-9, **geometry) -> XiOptimum:
    """Maximize h(l, xi) over ``xi_range`` by pre-scan plus golden section.

    Extra keyword arguments (wavelengths, indices) go to
    :class:`FocusGeometry`. A maximum sitting on an end of the range is
    reported through ``at_boundary`` rather than raised.
    """
    lo, hi = map(float, xi_range)
    if not (0 < lo <= hi <= 10):
        raise ValueError(f"xi_range must lie within (0, 10], got {xi_range}")
    template = FocusGeometry(xi=lo, alpha=alpha, **geometry)

    def h(x):
        return h_integral(l, template.with_xi(x), tol=tol).value

    if hi == lo:
        return XiOptimum(lo, h(lo), True)

    grid = np.linspace(lo, hi, n_scan)
    values = [h(x) for x in grid]
    i = int(np.argmax(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n_scan - 1)]
    x_best, h_best = _golden_max(h, a, b, rtol)
    # the ends are candidates too: golden section never evaluates them
    for edge, h_edge in ((lo, values[0]), (hi, values[-1])):
        if h_edge > h_best:
            x_best, h_best = edge, h_edge
    at_boundary = bool(np.isclose(x_best, lo, rtol=rtol, atol=0) or np.isclose(x_best, hi, rtol=rtol, atol=0))
    return XiOptimum(float(x_best), float(h_best), at_boundary)
