"""Spin-resolved photophysics and ODMR magnetometry figures of merit.

The emitter's three photophysical levels are duplicated over two
effective spin manifolds, bright and dark, distinguished only by their
intersystem-crossing rates.  Metastable decay branches back into the two
ground spin states with a fixed probability, and a microwave drive mixes
the ground states incoherently with a Lorentzian frequency profile.
Solving the resulting 6-level linear steady state gives photoluminescence
rates with and without the drive, hence ODMR spectra and contrast, which
feed the shot-noise-limited DC magnetic-field sensitivity

    eta = A * (h / (g mu_B)) * delta_nu / (C sqrt(R)).
"""

import math
from dataclasses import dataclass

import numpy as np

from .cavity import lorentzian
from .emitter import AbsorbingStateError, LevelSystem
from .simulate import DetectorModel

__all__ = [
    "SpinLevelSystem",
    "OdmrSpectrum",
    "SensitivityInputs",
    "PLANCK_H",
    "BOHR_MAGNETON",
    "LORENTZIAN_LINESHAPE_FACTOR",
    "GAUSSIAN_LINESHAPE_FACTOR",
    "spin_rate_matrix",
    "spin_steady_state",
    "odmr_steady_rates",
    "odmr_contrast",
    "odmr_spectrum",
    "sensitivity",
    "sensitivity_report",
    "spectrum_to_csv",
    "spectrum_from_csv",
]

PLANCK_H = 6.62607015e-34  # J s (exact SI)
BOHR_MAGNETON = 9.2740100783e-24  # J/T

# lineshape factor A: 4/(3 sqrt(3)) for a Lorentzian resonance profile,
# ~0.700 for a Gaussian one
LORENTZIAN_LINESHAPE_FACTOR = 4.0 / (3.0 * math.sqrt(3.0))
GAUSSIAN_LINESHAPE_FACTOR = 0.700

# state order of the 6-level system
_G_B, _E_B, _S_B, _G_D, _E_D, _S_D = range(6)


@dataclass(frozen=True)
class SpinLevelSystem:
    """Three-level photophysics split over bright/dark spin manifolds.

    base supplies the pumping, radiative/nonradiative decay and
    deshelving rates (its own k_isc is superseded by the spin-resolved
    shelving rates below).  The dark manifold shelves at least as fast as
    the bright one; metastable decay returns to the bright ground state
    with probability branch_to_bright.  k_mw is the on-resonance
    microwave ground-state mixing rate; nu0/delta_nu (MHz) define its
    Lorentzian frequency profile.
    """

    base: LevelSystem
    k_isc_bright: float
    k_isc_dark: float
    branch_to_bright: float = 0.5
    nu0: float = 1400.0
    delta_nu: float = 110.0
    k_mw: float = 1e7

    def __post_init__(self):
        if not 0 <= self.k_isc_bright <= self.k_isc_dark:
            raise ValueError("need k_isc_dark >= k_isc_bright >= 0")
        if not 0 <= self.branch_to_bright <= 1:
            raise ValueError("branch_to_bright must be in [0, 1]")
        if self.delta_nu <= 0 or self.nu0 <= 0:
            raise ValueError("nu0 and delta_nu must be > 0")
        if self.k_mw < 0:
            raise ValueError("k_mw must be >= 0")

    def with_purcell(self, F_P):
        """Copy with the radiative rate scaled by a Purcell factor."""
        base = LevelSystem(
            k_pump=self.base.k_pump,
            gamma_r=F_P * self.base.gamma_r,
            gamma_nr=self.base.gamma_nr,
            k_isc=self.base.k_isc,
            k_d=self.base.k_d,
        )
        return SpinLevelSystem(
            base=base,
            k_isc_bright=self.k_isc_bright,
            k_isc_dark=self.k_isc_dark,
            branch_to_bright=self.branch_to_bright,
            nu0=self.nu0,
            delta_nu=self.delta_nu,
            k_mw=self.k_mw,
        )


@dataclass(frozen=True)
class OdmrSpectrum:
    """Detected rate versus microwave frequency, with the model contrast."""

    frequencies: np.ndarray  # MHz
    rates: np.ndarray  # cts/s
    contrast: float

    def __post_init__(self):
        object.__setattr__(self, "frequencies",
                           np.asarray(self.frequencies, dtype=float))
        object.__setattr__(self, "rates", np.asarray(self.rates, dtype=float))
        if np.any(self.rates < 0):
            raise ValueError("rates must be >= 0")


@dataclass(frozen=True)
class SensitivityInputs:
    """Ingredients of the shot-noise sensitivity formula.

    delta_nu is in Hz here (not MHz), R in detected counts/s.
    """

    C: float
    R: float
    delta_nu: float
    A: float = LORENTZIAN_LINESHAPE_FACTOR
    g_factor: float = 2.0

    def __post_init__(self):
        if not 0 < self.C < 1:
            raise ValueError("contrast must be in (0, 1)")
        for name in ("R", "delta_nu", "A", "g_factor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


def spin_rate_matrix(sys: SpinLevelSystem, mw_rate=0.0) -> np.ndarray:
    """6x6 generator, state order (gB, eB, sB, gD, eD, sD).

    mw_rate is the ground-state mixing rate actually applied (already
    scaled by the lineshape); columns sum to zero.
    """
    b = sys.base
    k21 = b.gamma_r + b.gamma_nr
    beta = sys.branch_to_bright
    M = np.zeros((6, 6))
    for g, e, s, k_isc in ((_G_B, _E_B, _S_B, sys.k_isc_bright),
                           (_G_D, _E_D, _S_D, sys.k_isc_dark)):
        M[e, g] += b.k_pump
        M[g, e] += k21
        M[s, e] += k_isc
        M[_G_B, s] += beta * b.k_d
        M[_G_D, s] += (1 - beta) * b.k_d
    M[_G_D, _G_B] += mw_rate
    M[_G_B, _G_D] += mw_rate
    np.fill_diagonal(M, 0.0)
    np.fill_diagonal(M, -M.sum(axis=0))
    return M


def spin_steady_state(sys: SpinLevelSystem, mw_rate=0.0) -> np.ndarray:
    """Stationary populations of the 6-level system (sum to one)."""
    b = sys.base
    if b.k_pump > 0 and b.k_d == 0 and (sys.k_isc_bright > 0 or sys.k_isc_dark > 0):
        raise AbsorbingStateError(
            "metastable state is absorbing (shelving without deshelving)"
        )
    M = spin_rate_matrix(sys, mw_rate)
    A = np.vstack([M[:-1], np.ones(6)])
    rhs = np.zeros(6)
    rhs[-1] = 1.0
    try:
        p = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as err:
        raise AbsorbingStateError(f"degenerate spin system: {err}") from err
    if not np.all(np.isfinite(p)):
        raise AbsorbingStateError("degenerate spin system (singular solve)")
    return p


def odmr_steady_rates(sys: SpinLevelSystem, mw_on: bool) -> float:
    """Emitted photon rate gamma_r * (p_e_bright + p_e_dark) in photons/s."""
    mw_rate = sys.k_mw if mw_on else 0.0
    p = spin_steady_state(sys, mw_rate)
    return sys.base.gamma_r * (p[_E_B] + p[_E_D])


def odmr_contrast(sys: SpinLevelSystem) -> float:
    """Fractional photoluminescence dip (R_off - R_on) / R_off."""
    r_off = odmr_steady_rates(sys, mw_on=False)
    if r_off <= 0:
        raise ValueError("no photoluminescence without microwaves (R_off = 0)")
    r_on = odmr_steady_rates(sys, mw_on=True)
    return (r_off - r_on) / r_off


def odmr_spectrum(sys: SpinLevelSystem, frequencies, det: DetectorModel = None,
                  dwell_s=None, seed=None) -> OdmrSpectrum:
    """Detected rate at each microwave frequency (MHz grid).

    The drive rate follows the Lorentzian profile
    k_mw(nu) = k_mw * L(nu; nu0, delta_nu).  With a detector model the
    rate is efficiency * emitted + dark + background; giving dwell_s (and
    a seed) additionally applies Poisson shot-noise sampling per point.
    """
    freqs = np.asarray(frequencies, dtype=float)
    if freqs.size == 0:
        raise ValueError("frequency grid is empty")
    rates = np.empty(freqs.shape)
    for i, nu in enumerate(freqs):
        mw = sys.k_mw * lorentzian(nu, sys.nu0, sys.delta_nu)
        p = spin_steady_state(sys, mw)
        rates[i] = sys.base.gamma_r * (p[_E_B] + p[_E_D])
    contrast = odmr_contrast(sys)
    if det is not None:
        extra = det.dark_rate + det.background_rate
        rates = det.efficiency * rates + extra
        r_off = det.efficiency * odmr_steady_rates(sys, False) + extra
        r_on = det.efficiency * odmr_steady_rates(sys, True) + extra
        contrast = (r_off - r_on) / r_off if r_off > 0 else 0.0
    if dwell_s is not None:
        if dwell_s <= 0:
            raise ValueError("dwell_s must be > 0")
        rng = np.random.default_rng(seed)
        rates = rng.poisson(np.maximum(rates, 0.0) * dwell_s) / dwell_s
    return OdmrSpectrum(frequencies=freqs, rates=rates, contrast=contrast)


def sensitivity(inputs: SensitivityInputs) -> float:
    """Shot-noise-limited DC magnetic-field sensitivity in T/sqrt(Hz)."""
    field_per_hz = PLANCK_H / (inputs.g_factor * BOHR_MAGNETON)
    return inputs.A * field_per_hz * inputs.delta_nu / (inputs.C * math.sqrt(inputs.R))


def sensitivity_report(inputs: SensitivityInputs) -> dict:
    """Sensitivity with all inputs and intermediate factors, for auditing."""
    eta = sensitivity(inputs)
    return {
        "A": inputs.A,
        "g_factor": inputs.g_factor,
        "contrast": inputs.C,
        "rate_cts_s": inputs.R,
        "delta_nu_hz": inputs.delta_nu,
        "planck_h_j_s": PLANCK_H,
        "bohr_magneton_j_per_t": BOHR_MAGNETON,
        "field_per_hz_t": PLANCK_H / (inputs.g_factor * BOHR_MAGNETON),
        "eta_t_per_sqrt_hz": eta,
        "eta_ut_per_sqrt_hz": eta * 1e6,
    }


def spectrum_to_csv(spectrum: OdmrSpectrum, path):
    with open(path, "w") as f:
        f.write("nu_mhz,rate_cts_s\n")
        for nu, r in zip(spectrum.frequencies, spectrum.rates):
            f.write(f"{nu:.6f},{r:.6f}\n")


def spectrum_from_csv(path, contrast=0.0) -> OdmrSpectrum:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return OdmrSpectrum(frequencies=data[:, 0], rates=data[:, 1],
                        contrast=contrast)
