"""Globally adaptive tensor-product Gauss-Kronrod cubature on rectangles.

Each panel is integrated with a 15x15 Kronrod rule; the embedded 7x7 Gauss
rule supplies the error estimate ``|K - G|``. The panel with the largest
estimate is split into four until the summed estimate falls below the
requested tolerance. The procedure is fully deterministic.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

from .errors import QuadratureError

PANEL_EVALS = 225
RESYNC_EVERY = 64

PanelRule = Callable[[float, float, float, float], tuple]


@dataclass(frozen=True)
class QuadratureResult:
    """Real-valued integral estimate.

    ``abs_error_estimate`` includes the magnitude of any imaginary residue
    when the integrand is complex but the integral is known to be real.
    """

    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise ValueError("abs_error_estimate must be >= 0")
        if not math.isfinite(self.value):
            raise ValueError("non-finite quadrature value")


@dataclass(frozen=True)
class ComplexCubature:
    value: complex
    abs_error_estimate: float
    evaluations: int
    panels: int
    converged: bool


def _fsum_complex(values):
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


def adaptive_cubature(
    rule: PanelRule,
    x0: float,
    x1: float,
    y0: float,
    y1: float,
    rtol: float,
    atol: float = 0.0,
    max_evals: int = 4_000_000,
) -> ComplexCubature:
    """Integrate over ``[x0, x1] x [y0, y1]`` with panel rule ``rule``.

    ``rule(x0, x1, y0, y1)`` must return ``(kronrod, gauss)`` estimates.
    Returns a :class:`ComplexCubature`; ``converged`` is False when the
    evaluation budget ran out (callers decide whether that is fatal).
    """
    k, g = rule(x0, x1, y0, y1)
    evals = PANEL_EVALS
    # heap entries: (-err, seq, bounds, kronrod)
    heap = [(-abs(k - g), 0, (x0, x1, y0, y1), k)]
    seq = 1
    total = k
    total_err = abs(k - g)
    min_width = 1e-12 * max(x1 - x0, y1 - y0)
    frozen = []

    splits = 0
    while total_err > max(rtol * abs(total), atol):
        if not heap:
            break
        if splits % RESYNC_EVERY == 0 or evals + 4 * PANEL_EVALS > max_evals:
            # running sums drift once panel errors span many decades
            total, total_err = _exact_totals(heap, frozen)
            if total_err <= max(rtol * abs(total), atol):
                break
        if evals + 4 * PANEL_EVALS > max_evals:
            return _finish(heap, frozen, evals, converged=False)
        splits += 1
        neg_err, _, (a0, a1, b0, b1), kk = heapq.heappop(heap)
        if (a1 - a0) < min_width or (b1 - b0) < min_width:
            frozen.append((neg_err, kk))
            continue
        am = 0.5 * (a0 + a1)
        bm = 0.5 * (b0 + b1)
        total -= kk
        total_err += neg_err
        for bounds in ((a0, am, b0, bm), (am, a1, b0, bm), (a0, am, bm, b1), (am, a1, bm, b1)):
            kq, gq = rule(*bounds)
            e = abs(kq - gq)
            heapq.heappush(heap, (-e, seq, bounds, kq))
            seq += 1
            total += kq
            total_err += e
        evals += 4 * PANEL_EVALS

    return _finish(heap, frozen, evals, converged=True)


def _exact_totals(heap, frozen):
    value = _fsum_complex([kk for _, _, _, kk in heap] + [kk for _, kk in frozen])
    err = math.fsum([-ne for ne, _, _, _ in heap] + [-ne for ne, _ in frozen])
    return value, err


def _finish(heap, frozen, evals, converged):
    # Re-sum in a canonical order so the result does not carry the rounding
    # history of the running totals.
    items = sorted(((b, kk, -ne) for ne, _, b, kk in heap))
    value = _fsum_complex([kk for _, kk, _ in items] + [kk for _, kk in frozen])
    err = math.fsum([e for _, _, e in items] + [-ne for ne, _ in frozen])
    return ComplexCubature(value, err, evals, len(items) + len(frozen), converged)
