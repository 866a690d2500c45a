"""Closed-form three-level emitter photophysics.

The emitter is modeled as ground |g>, excited |e> and metastable shelf |s|
with incoherent rates: optical pumping g->e, radiative and nonradiative
decay e->g, intersystem crossing e->s and deshelving s->g.  Everything in
this module is analytic (steady states, g2(tau), saturation) and serves as
the ground-truth oracle for the stochastic simulator.

Rates are in Hz, times in seconds unless noted otherwise.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "LevelSystem",
    "Populations",
    "G2Params",
    "SaturationModel",
    "AbsorbingStateError",
    "rate_matrix",
    "steady_state",
    "g2_analytical",
    "saturation_curve",
    "emission_rate_vs_pump",
]


class AbsorbingStateError(ValueError):
    """Raised when the level system traps all population in the shelf.

    With k_isc > 0 and k_d = 0 the metastable state is absorbing, the
    emissive steady state is identically zero and g2 normalization is
    undefined, so this is an error rather than a silent zero.
    """


@dataclass(frozen=True)
class LevelSystem:
    """Intrinsic rates of a three-level emitter.

    Parameters
    ----------
    k_pump : float
        Optical pumping rate g->e in Hz, proportional to excitation
        intensity.
    gamma_r : float
        Radiative decay rate e->g in Hz.  Must be > 0.
    gamma_nr : float
        Nonradiative decay rate e->g in Hz.
    k_isc : float
        Intersystem-crossing (shelving) rate e->s in Hz.
    k_d : float
        Deshelving rate s->g in Hz.
    """

    k_pump: float
    gamma_r: float
    gamma_nr: float = 0.0
    k_isc: float = 0.0
    k_d: float = 0.0

    def __post_init__(self):
        for name in ("k_pump", "gamma_r", "gamma_nr", "k_isc", "k_d"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        if self.gamma_r <= 0:
            raise ValueError("gamma_r must be > 0")

    @property
    def gamma_tot(self):
        """Total excited-state depopulation rate gamma_r+gamma_nr+k_isc."""
        return self.gamma_r + self.gamma_nr + self.k_isc

    @property
    def lifetime(self):
        """Excited-state lifetime 1/(gamma_r+gamma_nr+k_isc) in seconds."""
        return 1.0 / self.gamma_tot

    @property
    def quantum_efficiency(self):
        """Radiative branching ratio gamma_r / gamma_tot, in (0, 1]."""
        return self.gamma_r / self.gamma_tot

    def with_pump(self, k_pump):
        """Copy of this system with a different pumping rate."""
        return replace(self, k_pump=float(k_pump))


@dataclass(frozen=True)
class Populations:
    """Occupation probabilities of (g, e, s); they sum to one."""

    p_g: float
    p_e: float
    p_s: float

    def __post_init__(self):
        total = self.p_g + self.p_e + self.p_s
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"populations must sum to 1, got {total!r}")
        for name in ("p_g", "p_e", "p_s"):
            v = getattr(self, name)
            if v < -1e-15 or v > 1 + 1e-15:
                raise ValueError(f"{name} out of [0, 1]: {v!r}")

    def as_array(self):
        return np.array([self.p_g, self.p_e, self.p_s])


@dataclass(frozen=True)
class G2Params:
    """Parameters of the two-exponential second-order correlation.

        g2(tau) = 1 - (1 + a) exp(-lambda_1 tau) + a exp(-lambda_2 tau)

    lambda_1 is the fast (antibunching) eigenrate, lambda_2 the slow
    (bunching) one, a the bunching amplitude.  In the metastable regime
    (deshelving slower than pumping + excited-state decay) a >= 0.
    """

    lambda_1: float
    lambda_2: float
    a: float

    def value(self, tau):
        """Evaluate g2 at delay tau (seconds, scalar or array, tau >= 0)."""
        tau = np.asarray(tau, dtype=float)
        return (
            1.0
            - (1.0 + self.a) * np.exp(-self.lambda_1 * tau)
            + self.a * np.exp(-self.lambda_2 * tau)
        )

    __call__ = value


@dataclass(frozen=True)
class SaturationModel:
    """First-order saturation: I(P) = I_inf * P / (P + P_sat)."""

    I_inf: float  # asymptotic count rate, cts/s
    P_sat: float  # saturation power, mW

    def __post_init__(self):
        if self.I_inf <= 0 or self.P_sat <= 0:
            raise ValueError("I_inf and P_sat must be > 0")


def rate_matrix(sys: LevelSystem) -> np.ndarray:
    """Generator matrix M of the three-level system, state order (g, e, s).

    M[i, j] is the rate from state j into state i; diagonal entries make
    every column sum to zero so that d/dt p = M p conserves probability.
    """
    k21 = sys.gamma_r + sys.gamma_nr
    return np.array(
        [
            [-sys.k_pump, k21, sys.k_d],
            [sys.k_pump, -(k21 + sys.k_isc), 0.0],
            [0.0, sys.k_isc, -sys.k_d],
        ]
    )


def steady_state(sys: LevelSystem) -> Populations:
    """Stationary populations of the rate system.

    Closed form from the flux balances k_pump*p_g = gamma_tot*p_e and
    k_isc*p_e = k_d*p_s.

    Raises
    ------
    AbsorbingStateError
        If the shelf is populated but never emptied (k_isc > 0, k_d = 0),
        which leaves no emissive steady state.
    """
    if sys.k_pump == 0:
        return Populations(1.0, 0.0, 0.0)
    if sys.k_isc > 0 and sys.k_d == 0:
        raise AbsorbingStateError(
            "metastable state is absorbing (k_isc > 0 with k_d = 0)"
        )
    w_e = sys.k_pump / sys.gamma_tot
    w_s = w_e * (sys.k_isc / sys.k_d) if sys.k_isc > 0 else 0.0
    norm = 1.0 + w_e + w_s
    return Populations(1.0 / norm, w_e / norm, w_s / norm)


def g2_analytical(sys: LevelSystem) -> G2Params:
    """Closed-form g2(tau) of the three-level system.

    g2(tau) = p_e(tau | p(0) = (1,0,0)) / p_e(inf).  Eliminating p_g via
    probability conservation leaves a 2x2 linear system whose quadratic
    characteristic polynomial gives the two eigenrates; the bunching
    amplitude follows from the initial slope dp_e/dt(0) = k_pump.

    Raises
    ------
    ValueError
        If k_pump = 0 (emitter never re-excited) or the eigenrates are
        complex (cyclic regime outside the validity of the
        two-exponential form).
    AbsorbingStateError
        Propagated from :func:`steady_state`.
    """
    if sys.k_pump <= 0:
        raise ValueError("g2 requires a re-excitable emitter (k_pump > 0)")
    steady_state(sys)  # absorbing-state check

    fast = sys.k_pump + sys.gamma_tot  # pump + total excited-state decay
    s = fast + sys.k_d
    p = fast * sys.k_d + sys.k_pump * sys.k_isc
    disc = (fast - sys.k_d) ** 2 - 4.0 * sys.k_pump * sys.k_isc
    if disc < 0:
        raise ValueError(
            "complex population eigenvalues; g2 is not a sum of two "
            "real exponentials for these rates"
        )
    root = math.sqrt(disc)
    lam1 = 0.5 * (s + root)
    lam2 = 0.5 * (s - root)
    if sys.k_isc == 0 or sys.k_d == 0:
        # two-level limit: lambda_2 decouples and the bunching term vanishes
        a = 0.0
    else:
        a = lam1 * (lam2 - sys.k_d) / (sys.k_d * (lam1 - lam2))
    return G2Params(lambda_1=lam1, lambda_2=lam2, a=a)


def saturation_curve(model: SaturationModel, P):
    """Count rate of the first-order saturation model at power P (mW)."""
    P = np.asarray(P, dtype=float)
    if np.any(P < 0):
        raise ValueError("excitation power must be >= 0")
    return model.I_inf * P / (P + model.P_sat)


def emission_rate_vs_pump(sys: LevelSystem, k_pump_values):
    """Radiative emission rate gamma_r * p_e^ss over a pump-rate sweep.

    Parameters
    ----------
    sys : LevelSystem
        Template system; its own k_pump is ignored.
    k_pump_values : array_like
        Pump rates in Hz, all >= 0.

    Returns
    -------
    ndarray
        Emitted photon rate in photons/s for each pump value.
    """
    pumps = np.asarray(k_pump_values, dtype=float)
    if np.any(pumps < 0):
        raise ValueError("pump rates must be >= 0")
    flat = [sys.gamma_r * steady_state(sys.with_pump(k)).p_e for k in pumps.ravel()]
    return np.array(flat).reshape(pumps.shape)
