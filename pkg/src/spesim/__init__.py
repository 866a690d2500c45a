"""Simulation and analysis toolkit for cavity-coupled single-photon emitters.

Subsystems
----------
emitter    closed-form three-level photophysics (steady states, g2,
           saturation)
cavity     phenomenological plasmonic tip-cavity enhancement model
simulate   stochastic exact-jump photon-stream generation with a
           detector model
correlate  coincidence histograms: g2(tau) and TCSPC decay folding
fitting    Levenberg-Marquardt fits for lifetime, saturation, g2 and
           ODMR models
odmr       six-level spin-resolved rates, ODMR spectra and magnetic
           sensitivity
scenario   configuration-driven pipeline runs (also behind the `spesim`
           command-line tool)
"""

from .cavity import (
    CouplingContext,
    EnhancementResult,
    PlasmonMode,
    Regime,
    couple,
    distance_decay,
    enhancement_at,
    lorentzian,
    polarization_factor,
)
from .correlate import (
    DecayHistogram,
    G2Curve,
    cross_correlate,
    decay_histogram,
)
from .emitter import (
    AbsorbingStateError,
    G2Params,
    LevelSystem,
    Populations,
    SaturationModel,
    emission_rate_vs_pump,
    g2_analytical,
    rate_matrix,
    saturation_curve,
    steady_state,
)
from .fitting import (
    FitResult,
    IrfModel,
    fit_g2,
    fit_lifetime,
    fit_odmr,
    fit_saturation,
)
from .odmr import (
    OdmrSpectrum,
    SensitivityInputs,
    SpinLevelSystem,
    odmr_contrast,
    odmr_spectrum,
    odmr_steady_rates,
    sensitivity,
)
from .simulate import (
    DetectorModel,
    PulseTrain,
    RngSeed,
    simulate_cw,
    simulate_pulsed,
    simulate_trajectory,
)
from .streams import PhotonStream, read_ptsm, write_ptsm

__version__ = "0.1.0"
