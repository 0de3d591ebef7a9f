"""Simulation toolkit for OAM single-photon up-conversion.

Submodules: :mod:`~oamqi.beams`, :mod:`~oamqi.overlap`,
:mod:`~oamqi.conversion`, :mod:`~oamqi.states`, :mod:`~oamqi.imaging`,
:mod:`~oamqi.statistics`, :mod:`~oamqi.config` and :mod:`~oamqi.cli`.
"""
__version__ = "0.1.0"

from ._kernels import BACKEND
from .beams import Beam, lg_field, lg_mode
from .conversion import ConversionChannel, CrystalParams, heisenberg_evolve, p_max, sfg_power
from .overlap import FocusGeometry, direct_sfg_oracle, h_integral, optimize_xi

__all__ = [
    "__version__",
    "BACKEND",
    "Beam",
    "lg_field",
    "lg_mode",
    "ConversionChannel",
    "CrystalParams",
    "heisenberg_evolve",
    "p_max",
    "sfg_power",
    "FocusGeometry",
    "direct_sfg_oracle",
    "h_integral",
    "optimize_xi",
]
