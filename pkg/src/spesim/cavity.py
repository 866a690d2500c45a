"""Phenomenological plasmonic tip-cavity coupling model.

The tip cavity is reduced to two offset Lorentzian enhancement spectra:
one for the optical pumping rate (evaluated at the laser energy) and one
for the Purcell factor (evaluated at the emitter ZPL).  Both roll off
exponentially with tip-sample distance; the pumping enhancement also
carries the polarization anisotropy of the tip near field.  No field
solver is involved: peak amplitudes, widths and offsets are calibration
parameters of a given tip.
"""

import enum
import math
from dataclasses import dataclass, replace

from .emitter import LevelSystem

__all__ = [
    "Regime",
    "PlasmonMode",
    "CouplingContext",
    "EnhancementResult",
    "lorentzian",
    "distance_decay",
    "polarization_factor",
    "enhancement_at",
    "couple",
]


class Regime(enum.Enum):
    EMISSION_DOMINATED = "EmissionDominated"
    BALANCED = "Balanced"
    EXCITATION_DOMINATED = "ExcitationDominated"


@dataclass(frozen=True)
class PlasmonMode:
    """Calibrated enhancement spectra of one tip.

    Parameters
    ----------
    E_p : float
        Plasmon peak energy in eV, within the tunable 1.5-2.5 eV range.
    Gamma_p : float
        Full width of the plasmon resonance in eV.
    xi_max : float
        Peak excitation-rate enhancement (>= 1).
    F_max : float
        Peak Purcell factor (>= 1).
    delta_em : float
        Offset in eV between the excitation-enhancement spectrum peak
        (at E_p + delta_em) and the Purcell spectrum peak (at E_p).
    d0 : float
        Near-field exponential decay length in nm.
    pol_contrast : float
        p- to s-polarized field-intensity enhancement ratio (>= 1).
    """

    E_p: float
    Gamma_p: float
    xi_max: float
    F_max: float
    delta_em: float = 0.0
    d0: float = 5.0
    pol_contrast: float = 10.0

    def __post_init__(self):
        if not 1.5 <= self.E_p <= 2.5:
            raise ValueError(f"E_p outside tunable range [1.5, 2.5] eV: {self.E_p}")
        if self.Gamma_p <= 0:
            raise ValueError("Gamma_p must be > 0")
        if self.xi_max < 1 or self.F_max < 1:
            raise ValueError("xi_max and F_max must be >= 1")
        if self.d0 <= 0:
            raise ValueError("d0 must be > 0")
        if self.pol_contrast < 1:
            raise ValueError("pol_contrast must be >= 1")

    def with_peak(self, E_p):
        """Copy of this mode retuned to plasmon energy E_p (eV)."""
        return replace(self, E_p=float(E_p))


@dataclass(frozen=True)
class CouplingContext:
    """Geometric and spectral state of one emitter under one tip.

    theta = 0 deg is excitation polarization parallel to the tip axis.
    The laser sits above the ZPL (non-resonant excitation).
    """

    d: float  # tip-sample distance, nm
    theta: float = 0.0  # excitation polarization angle, deg
    E_zpl: float = 1.91  # emitter ZPL energy, eV
    E_laser: float = 2.09  # excitation energy, eV

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("distance must be >= 0")
        if not 0 <= self.theta <= 90:
            raise ValueError("theta must be in [0, 90] deg")
        if self.E_laser <= self.E_zpl:
            raise ValueError("E_laser must exceed E_zpl (above-ZPL excitation)")


@dataclass(frozen=True)
class EnhancementResult:
    xi_exc: float  # pumping-rate enhancement, >= 0
    F_P: float  # Purcell factor, >= 0
    regime: Regime


def lorentzian(E, E0, Gamma):
    """Peak-normalized Lorentzian (Gamma/2)^2 / ((E-E0)^2 + (Gamma/2)^2)."""
    if Gamma <= 0:
        raise ValueError("Gamma must be > 0")
    half = 0.5 * Gamma
    return half * half / ((E - E0) ** 2 + half * half)


def distance_decay(d, d0):
    """Near-field fall-off exp(-d/d0); 1 at contact, strictly decreasing."""
    if d < 0:
        raise ValueError("distance must be >= 0")
    if d0 <= 0:
        raise ValueError("d0 must be > 0")
    return math.exp(-d / d0)


def polarization_factor(theta, pol_contrast):
    """Excitation anisotropy cos^2(theta) + sin^2(theta)/pol_contrast.

    Normalized to 1 at theta = 0 (parallel to the tip axis); drops to
    1/pol_contrast at 90 deg.
    """
    if not 0 <= theta <= 90:
        raise ValueError("theta must be in [0, 90] deg")
    if pol_contrast < 1:
        raise ValueError("pol_contrast must be >= 1")
    t = math.radians(theta)
    return math.cos(t) ** 2 + math.sin(t) ** 2 / pol_contrast


def enhancement_at(mode: PlasmonMode, ctx: CouplingContext,
                   balanced_band=0.10) -> EnhancementResult:
    """Excitation and emission enhancement for a mode/context pair.

    Both factors approach 1 as d -> infinity.  The regime classifies the
    sign of F_P - xi_exc; differences within `balanced_band` (fraction of
    the larger factor) count as Balanced.
    """
    decay = distance_decay(ctx.d, mode.d0)
    pol = polarization_factor(ctx.theta, mode.pol_contrast)
    xi = 1.0 + (mode.xi_max - 1.0) * lorentzian(
        ctx.E_laser, mode.E_p + mode.delta_em, mode.Gamma_p) * decay * pol
    fp = 1.0 + (mode.F_max - 1.0) * lorentzian(
        ctx.E_zpl, mode.E_p, mode.Gamma_p) * decay
    gap = fp - xi
    if abs(gap) <= balanced_band * max(fp, xi):
        regime = Regime.BALANCED
    elif gap > 0:
        regime = Regime.EMISSION_DOMINATED
    else:
        regime = Regime.EXCITATION_DOMINATED
    return EnhancementResult(xi_exc=xi, F_P=fp, regime=regime)


def couple(sys: LevelSystem, enh: EnhancementResult,
           quench_rate=0.0) -> LevelSystem:
    """Apply cavity enhancement to an uncoupled emitter.

    Purcell enhancement acts on the radiative channel only
    (gamma_r -> F_P * gamma_r) and near-field pumping on the excitation
    rate (k_pump -> xi_exc * k_pump); shelving and deshelving are
    untouched.  `quench_rate` (Hz) is an optional nonradiative addend for
    lossy tips, off by default.
    """
    if quench_rate < 0:
        raise ValueError("quench_rate must be >= 0")
    return replace(
        sys,
        k_pump=enh.xi_exc * sys.k_pump,
        gamma_r=enh.F_P * sys.gamma_r,
        gamma_nr=sys.gamma_nr + quench_rate,
    )
