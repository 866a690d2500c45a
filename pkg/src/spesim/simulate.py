"""Stochastic photon-stream generation for the three-level emitter.

The emitter trajectory is sampled as an exact jump process (exponential
waiting time from the total out-rate of the current state, then a
categorical transition draw), never by fixed-step discretization, so
g2(tau) carries no time-step bias at short delays.  The jump chain of the
three-level scheme always returns to the ground state, which lets whole
excitation cycles (g-wait, e-wait, optional shelf-wait) be drawn as
vectorized blocks.

A detector model turns emitted photons into recorded timestamps:
efficiency thinning, Gaussian timing jitter, superposed dark/background
Poisson events and dead-time removal.  All outputs are integer-picosecond
:class:`~spesim.streams.PhotonStream` values and are bit-reproducible for
a fixed seed.
"""

import math
from dataclasses import dataclass

import numpy as np

from .emitter import AbsorbingStateError, LevelSystem
from .streams import PhotonStream

__all__ = [
    "DetectorModel",
    "PulseTrain",
    "RngSeed",
    "simulate_cw",
    "simulate_pulsed",
    "simulate_trajectory",
    "apply_detector",
]

_MAX_DURATION_PS = 2**62  # headroom below int64 for jitter arithmetic

# ground / excited / shelf state codes used by simulate_trajectory
STATE_G, STATE_E, STATE_S = 0, 1, 2


@dataclass(frozen=True)
class DetectorModel:
    """Detection chain parameters.

    efficiency is the photon detection probability; dark_rate and
    background_rate (Hz) are as-detected Poisson event rates (dark counts
    arise in the detector, background is uncorrelated signal-like light);
    irf_sigma (ps) is the Gaussian timing-jitter std; dead_time (ps)
    removes events closer than this to the previous recorded one.
    """

    efficiency: float = 1.0
    dark_rate: float = 0.0
    dead_time: int = 0
    irf_sigma: float = 0.0
    background_rate: float = 0.0

    def __post_init__(self):
        if not 0 <= self.efficiency <= 1:
            raise ValueError("efficiency must be in [0, 1]")
        for name in ("dark_rate", "dead_time", "irf_sigma", "background_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class PulseTrain:
    """Periodic excitation: `pulses` pulses every `period` ps.

    pulse_width = 0 is a delta pulse; otherwise the excitation instant is
    drawn uniformly inside the width.
    """

    period: int
    pulses: int
    pulse_width: int = 0

    def __post_init__(self):
        if self.period <= 0 or self.pulses < 0:
            raise ValueError("period must be > 0 and pulses >= 0")
        if not 0 <= self.pulse_width < self.period:
            raise ValueError("need period > pulse_width >= 0")

    @property
    def duration(self):
        return int(self.period) * int(self.pulses)


@dataclass(frozen=True)
class RngSeed:
    """Seed wrapper; simulation output is a pure function of (inputs, seed)."""

    seed: int

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def generator(self):
        return np.random.default_rng(self.seed)


def _as_seed(seed):
    return seed if isinstance(seed, RngSeed) else RngSeed(int(seed))


def _check_cw_inputs(sys, duration):
    if duration <= 0:
        raise ValueError("duration must be > 0 ps")
    if duration > _MAX_DURATION_PS:
        raise ValueError(f"duration overflows the ps clock (max {_MAX_DURATION_PS})")
    if sys.k_pump > 0 and sys.k_isc > 0 and sys.k_d == 0:
        raise AbsorbingStateError(
            "metastable state is absorbing (k_isc > 0 with k_d = 0)"
        )


def _draw_cycles(sys, rng, n):
    """Draw n excitation cycles: waits in g, e, s plus the e-exit branch.

    branch codes: 0 radiative, 1 nonradiative, 2 shelved.  The shelf wait
    is drawn for every cycle (used only when shelved) to keep the draw
    layout deterministic.
    """
    t_g = rng.exponential(1.0 / sys.k_pump, n)
    t_e = rng.exponential(1.0 / sys.gamma_tot, n)
    u = rng.random(n)
    p_rad = sys.gamma_r / sys.gamma_tot
    p_decay = (sys.gamma_r + sys.gamma_nr) / sys.gamma_tot
    branch = np.where(u < p_rad, 0, np.where(u < p_decay, 1, 2))
    if sys.k_isc > 0:
        t_s = rng.exponential(1.0 / sys.k_d, n)
    else:
        t_s = np.zeros(n)
    t_s = np.where(branch == 2, t_s, 0.0)
    return t_g, t_e, branch, t_s


def _emission_times(sys, duration_ps, rng):
    """Radiative emission times (float seconds) of one CW trajectory."""
    if sys.k_pump == 0:
        return np.empty(0)
    target = duration_ps * 1e-12
    mean_cycle = 1.0 / sys.k_pump + 1.0 / sys.gamma_tot
    if sys.k_isc > 0:
        mean_cycle += (sys.k_isc / sys.gamma_tot) / sys.k_d
    emissions = []
    t0 = 0.0
    while t0 < target:
        n = int(1.2 * (target - t0) / mean_cycle) + 64
        n = min(max(n, 1024), 4_000_000)
        t_g, t_e, branch, t_s = _draw_cycles(sys, rng, n)
        ends = t0 + np.cumsum(t_g + t_e + t_s)
        emit = ends - t_s  # e->g/s jump instant of each cycle
        emissions.append(emit[branch == 0])
        t0 = ends[-1]
    times = np.concatenate(emissions) if emissions else np.empty(0)
    return times[times < target]


def apply_detector(times_s, det: DetectorModel, duration_ps, rng):
    """Detection chain: thin, jitter, add dark/background, dead-time filter.

    times_s are emission instants in seconds; returns sorted, strictly
    increasing int64 ps timestamps within [0, duration_ps).
    """
    times_s = np.asarray(times_s, dtype=float)
    if det.efficiency < 1.0:
        times_s = times_s[rng.random(times_s.size) < det.efficiency]
    ts = times_s * 1e12
    if det.irf_sigma > 0 and ts.size:
        ts = ts + rng.normal(0.0, det.irf_sigma, ts.size)
    extra_rate = det.dark_rate + det.background_rate
    if extra_rate > 0:
        n_extra = rng.poisson(extra_rate * duration_ps * 1e-12)
        ts = np.concatenate([ts, rng.random(n_extra) * duration_ps])
    ts = np.rint(ts).astype(np.int64)
    ts = ts[(ts >= 0) & (ts < duration_ps)]
    ts.sort(kind="stable")
    if det.dead_time > 0:
        ts = _dead_time_filter(ts, int(det.dead_time))
    else:
        ts = _dedupe(ts)
    return ts


def _dead_time_filter(ts, dead_time):
    """Keep events at least dead_time ps after the previous kept event."""
    if ts.size == 0:
        return ts
    keep = np.empty(ts.size, dtype=bool)
    last = -(1 << 62)
    for i, t in enumerate(ts):
        ok = t - last >= dead_time
        keep[i] = ok
        if ok:
            last = t
    return ts[keep]


def _dedupe(ts):
    """Drop repeated integer timestamps (keeps streams strictly increasing)."""
    if ts.size < 2:
        return ts
    keep = np.empty(ts.size, dtype=bool)
    keep[0] = True
    np.greater(ts[1:], ts[:-1], out=keep[1:])
    return ts[keep]


def simulate_cw(sys: LevelSystem, duration, det: DetectorModel, seed,
                splitter=0.5):
    """Continuous-wave run through a Hanbury Brown-Twiss beamsplitter.

    Each radiative emission is routed to channel 0 with probability
    `splitter`, else to channel 1; both channels then pass independently
    through the detector model.

    Parameters
    ----------
    sys : LevelSystem
    duration : int
        Acquisition span in ps.
    det : DetectorModel
        Applied identically to both channels.
    seed : int or RngSeed
    splitter : float
        Beamsplitter transmission into channel 0, in (0, 1).

    Returns
    -------
    (PhotonStream, PhotonStream)
        Channel 0 and channel 1 streams.
    """
    duration = int(duration)
    _check_cw_inputs(sys, duration)
    if not 0 < splitter < 1:
        raise ValueError("splitter must be in (0, 1)")
    rng = _as_seed(seed).generator()
    emitted = _emission_times(sys, duration, rng)
    to_a = rng.random(emitted.size) < splitter
    ts_a = apply_detector(emitted[to_a], det, duration, rng)
    ts_b = apply_detector(emitted[~to_a], det, duration, rng)
    return (
        PhotonStream(channel=0, timestamps=ts_a, duration=duration),
        PhotonStream(channel=1, timestamps=ts_b, duration=duration),
    )


def simulate_pulsed(sys: LevelSystem, train: PulseTrain, det: DetectorModel,
                    seed, p_exc=1.0):
    """Pulsed-excitation (TCSPC) run.

    Each pulse promotes the emitter g->e with probability p_exc, provided
    it has relaxed back to the ground state; photon delays then follow the
    exponential first-jump law of the total excited-state out-rate.
    Shelved population blocks later pulses until it deshelves.

    Returns a single-channel PhotonStream spanning pulses * period ps.
    """
    if not 0 <= p_exc <= 1:
        raise ValueError("p_exc must be in [0, 1]")
    duration = train.duration
    if duration <= 0:
        raise ValueError("pulse train is empty")
    _check_cw_inputs(sys, duration)
    rng = _as_seed(seed).generator()

    n = train.pulses
    excite = rng.random(n) < p_exc
    if train.pulse_width > 0:
        offsets = rng.random(n) * train.pulse_width
    else:
        offsets = np.zeros(n)
    t_e = rng.exponential(1.0 / sys.gamma_tot, n) * 1e12
    u = rng.random(n)
    p_rad = sys.gamma_r / sys.gamma_tot
    p_decay = (sys.gamma_r + sys.gamma_nr) / sys.gamma_tot
    if sys.k_isc > 0:
        t_s = rng.exponential(1.0 / sys.k_d, n) * 1e12
    else:
        t_s = np.zeros(n)

    period = float(train.period)
    photons = []
    busy_until = -1.0
    for i in range(n):
        onset = i * period + offsets[i]
        if onset < busy_until or not excite[i]:
            continue
        decay_at = onset + t_e[i]
        if u[i] < p_rad:
            photons.append(decay_at)
            busy_until = decay_at
        elif u[i] < p_decay:
            busy_until = decay_at
        else:
            busy_until = decay_at + t_s[i]
    emitted = np.array(photons) * 1e-12
    ts = apply_detector(emitted, det, duration, rng)
    return PhotonStream(channel=0, timestamps=ts, duration=duration)


def simulate_trajectory(sys: LevelSystem, duration, seed):
    """Raw jump trajectory (no detector), for validation and diagnostics.

    Returns
    -------
    (times, states)
        times: float64 jump instants in seconds, strictly increasing;
        states: int8 state codes after each jump (STATE_G/E/S).  The
        trajectory starts in the ground state at t = 0 and is truncated
        at duration ps.
    """
    duration = int(duration)
    _check_cw_inputs(sys, duration)
    if sys.k_pump == 0:
        return np.empty(0), np.empty(0, dtype=np.int8)
    rng = _as_seed(seed).generator()
    target = duration * 1e-12
    times, states = [], []
    t0 = 0.0
    mean_cycle = 1.0 / sys.k_pump + 1.0 / sys.gamma_tot
    if sys.k_isc > 0:
        mean_cycle += (sys.k_isc / sys.gamma_tot) / sys.k_d
    while t0 < target:
        n = min(max(int(1.2 * (target - t0) / mean_cycle) + 64, 1024), 4_000_000)
        t_g, t_e, branch, t_s = _draw_cycles(sys, rng, n)
        ends = t0 + np.cumsum(t_g + t_e + t_s)
        starts = ends - (t_g + t_e + t_s)
        up = starts + t_g  # g -> e
        down = up + t_e  # e -> g or e -> s
        shelved = branch == 2
        times.append(up)
        states.append(np.full(n, STATE_E, dtype=np.int8))
        times.append(down)
        states.append(np.where(shelved, STATE_S, STATE_G).astype(np.int8))
        times.append(ends[shelved])  # s -> g
        states.append(np.full(int(shelved.sum()), STATE_G, dtype=np.int8))
        t0 = ends[-1]
    times = np.concatenate(times)
    states = np.concatenate(states)
    order = np.argsort(times, kind="stable")
    times, states = times[order], states[order]
    cut = np.searchsorted(times, target)
    return times[:cut], states[:cut]
