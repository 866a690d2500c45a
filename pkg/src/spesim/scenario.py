"""Configuration-driven simulation and analysis pipelines.

A scenario is a TOML file (nested key-value tables) describing one
emitter, an optional tip cavity, a detector and an acquisition; running
it executes simulate -> correlate/histogram -> fit as requested by the
products list and records a JSON manifest with the fully resolved
configuration, the seed and checksums of every written product, so a run
can be reproduced byte-for-byte from its manifest.

Named presets calibrated to the reference measurements ship with the
package (fig2e, fig2f, fig3c, fig3d, fig3b_sweep, fig4f) and are loadable
by name wherever a scenario path is accepted.
"""

import copy
import hashlib
import json
import math
import sys as _sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

if _sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from . import __version__, cavity, correlate, emitter, fitting, odmr
from . import simulate as sim
from . import streams

__all__ = [
    "Scenario",
    "ScenarioError",
    "available_presets",
    "load_plasmon_preset",
    "run_scenario",
    "sweep_scenario",
    "resolve_path",
    "SWEEP_COLUMNS",
]

_PRESET_DIR = Path(__file__).parent / "presets"

_MODES = ("cw", "pulsed", "odmr")
_PRODUCTS = {
    "cw": ("streams", "g2", "g2_fit", "saturation", "saturation_fit"),
    "pulsed": ("streams", "decay", "lifetime_fit"),
    "odmr": ("spectrum", "odmr_fit", "sensitivity"),
}

SWEEP_COLUMNS = (
    "value", "xi_exc", "F_P", "regime", "rate_cts_s",
    "g2_0", "g2_max", "contrast", "eta_t_sqrt_hz",
)


class ScenarioError(ValueError):
    """Invalid scenario configuration; .errors names each offending key."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n" + "\n".join(self.errors))


def available_presets():
    return sorted(p.stem for p in _PRESET_DIR.glob("*.toml") if p.stem != "modes")


def resolve_path(name_or_path):
    """Interpret a CLI argument as a scenario file or packaged preset name."""
    p = Path(name_or_path)
    if p.exists():
        return p
    candidate = _PRESET_DIR / f"{name_or_path}.toml"
    if candidate.exists():
        return candidate
    raise ScenarioError(
        [f"scenario: no file {name_or_path!r} and no preset of that name "
         f"(available: {', '.join(available_presets())})"]
    )


def load_plasmon_preset(name) -> cavity.PlasmonMode:
    """Load a named PlasmonMode from the packaged modes.toml."""
    with open(_PRESET_DIR / "modes.toml", "rb") as f:
        table = _toml.load(f)
    if name not in table:
        raise ScenarioError(
            [f"cavity.mode_preset: unknown plasmon preset {name!r} "
             f"(available: {', '.join(sorted(table))})"]
        )
    return cavity.PlasmonMode(**table[name])


class Scenario:
    """Validated scenario configuration.

    The resolved dict (all defaults applied, presets expanded) is
    available as .config and is itself a valid scenario, which is what
    the manifest embeds.
    """

    def __init__(self, config):
        self.config = config

    # -- construction ------------------------------------------------------

    @classmethod
    def load(cls, path):
        with open(path, "rb") as f:
            try:
                raw = _toml.load(f)
            except _toml.TOMLDecodeError as err:
                raise ScenarioError([f"config: TOML parse error: {err}"]) from err
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw):
        errors = []
        cfg = copy.deepcopy(raw)

        def bad(key, message):
            errors.append(f"{key}: {message}")

        def num(table, tkey, key, default=None, lo=None, hi=None, required=False):
            if key not in table:
                if required:
                    bad(f"{tkey}.{key}", "missing required value")
                    return default
                table[key] = default
                return default
            v = table[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                bad(f"{tkey}.{key}", f"expected a number, got {v!r}")
                return default
            if lo is not None and v < lo:
                bad(f"{tkey}.{key}", f"must be >= {lo}, got {v}")
            if hi is not None and v > hi:
                bad(f"{tkey}.{key}", f"must be <= {hi}, got {v}")
            return v

        em = cfg.setdefault("emitter", {})
        if not isinstance(em, dict):
            bad("emitter", "must be a table")
            em = {}
        num(em, "emitter", "k_pump", default=0.0, lo=0.0)
        gr = num(em, "emitter", "gamma_r", required=True, lo=0.0)
        if isinstance(gr, (int, float)) and not isinstance(gr, bool) and gr == 0:
            bad("emitter.gamma_r", "must be > 0")
        num(em, "emitter", "gamma_nr", default=0.0, lo=0.0)
        num(em, "emitter", "k_isc", default=0.0, lo=0.0)
        num(em, "emitter", "k_d", default=0.0, lo=0.0)

        cav = cfg.get("cavity")
        if cav is not None:
            if not isinstance(cav, dict):
                bad("cavity", "must be a table")
            else:
                cav.setdefault("also_uncoupled", True)
                cav.setdefault("scale_background", False)
                if "mode_preset" in cav:
                    try:
                        mode = load_plasmon_preset(cav.pop("mode_preset"))
                        cav["mode"] = {
                            "E_p": mode.E_p, "Gamma_p": mode.Gamma_p,
                            "xi_max": mode.xi_max, "F_max": mode.F_max,
                            "delta_em": mode.delta_em, "d0": mode.d0,
                            "pol_contrast": mode.pol_contrast,
                        }
                    except ScenarioError as err:
                        errors.extend(err.errors)
                md = cav.setdefault("mode", {})
                num(md, "cavity.mode", "E_p", required=True, lo=1.5, hi=2.5)
                num(md, "cavity.mode", "Gamma_p", required=True, lo=1e-6)
                num(md, "cavity.mode", "xi_max", default=1.0, lo=1.0)
                num(md, "cavity.mode", "F_max", default=1.0, lo=1.0)
                num(md, "cavity.mode", "delta_em", default=0.0)
                num(md, "cavity.mode", "d0", default=5.0, lo=1e-9)
                num(md, "cavity.mode", "pol_contrast", default=10.0, lo=1.0)
                ctx = cav.setdefault("context", {})
                num(ctx, "cavity.context", "d", default=0.0, lo=0.0)
                num(ctx, "cavity.context", "theta", default=0.0, lo=0.0, hi=90.0)
                num(ctx, "cavity.context", "E_zpl", default=1.91)
                num(ctx, "cavity.context", "E_laser", default=2.09)
                num(cav, "cavity", "quench_rate", default=0.0, lo=0.0)

        det = cfg.setdefault("detector", {})
        num(det, "detector", "efficiency", default=1.0, lo=0.0, hi=1.0)
        num(det, "detector", "dark_rate", default=0.0, lo=0.0)
        num(det, "detector", "dead_time", default=0, lo=0)
        num(det, "detector", "irf_sigma", default=0.0, lo=0.0)
        num(det, "detector", "background_rate", default=0.0, lo=0.0)

        acq = cfg.setdefault("acquisition", {})
        mode_name = acq.setdefault("mode", "cw")
        if mode_name not in _MODES:
            bad("acquisition.mode", f"must be one of {_MODES}, got {mode_name!r}")
            mode_name = "cw"
        if "seed" not in acq:
            bad("acquisition.seed", "missing (a seed is mandatory for "
                "reproducible stochastic runs)")
        else:
            num(acq, "acquisition", "seed", lo=0, required=True)
        if mode_name == "cw":
            num(acq, "acquisition", "duration", required=True, lo=1)
            num(acq, "acquisition", "splitter", default=0.5, lo=1e-9, hi=1 - 1e-9)
        elif mode_name == "pulsed":
            num(acq, "acquisition", "period", required=True, lo=1)
            num(acq, "acquisition", "pulses", required=True, lo=0)
            num(acq, "acquisition", "pulse_width", default=0, lo=0)
            num(acq, "acquisition", "p_exc", default=1.0, lo=0.0, hi=1.0)
        else:
            num(acq, "acquisition", "freq_start", required=True, lo=0.0)
            num(acq, "acquisition", "freq_stop", required=True, lo=0.0)
            num(acq, "acquisition", "freq_points", default=101, lo=2)
            if "dwell_s" in acq:
                num(acq, "acquisition", "dwell_s", lo=1e-12)
            spin = cfg.setdefault("spin", {})
            num(spin, "spin", "k_isc_bright", required=True, lo=0.0)
            num(spin, "spin", "k_isc_dark", required=True, lo=0.0)
            num(spin, "spin", "branch_to_bright", default=0.5, lo=0.0, hi=1.0)
            num(spin, "spin", "nu0", required=True, lo=1e-9)
            num(spin, "spin", "delta_nu", required=True, lo=1e-9)
            num(spin, "spin", "k_mw", required=True, lo=0.0)
            sens = cfg.setdefault("sensitivity", {})
            lineshape = sens.setdefault("lineshape", "lorentzian")
            if lineshape not in ("lorentzian", "gaussian"):
                bad("sensitivity.lineshape", "must be 'lorentzian' or 'gaussian'")
            num(sens, "sensitivity", "g_factor", default=2.0, lo=1e-6)

        if mode_name == "cw":
            cor = cfg.setdefault("correlation", {})
            num(cor, "correlation", "window", default=1_000_000, lo=2)
            if "log_bins" in cor:
                num(cor, "correlation", "log_bins", lo=1)
            else:
                num(cor, "correlation", "bin_width", default=1000, lo=1)
                if not cor.get("log_bins") and cor.get("bin_width", 0) >= cor.get("window", 0):
                    bad("correlation.bin_width", "must be smaller than correlation.window")
            satcfg = cfg.setdefault("saturation", {})
            num(satcfg, "saturation", "p_max_mw", default=30.0, lo=1e-9)
            num(satcfg, "saturation", "points", default=30, lo=3)
            num(satcfg, "saturation", "pump_rate_per_mw", default=1e8, lo=1e-9)
        if mode_name == "pulsed":
            lf = cfg.setdefault("lifetime_fit", {})
            num(lf, "lifetime_fit", "bin_width", default=10, lo=1)
            if "fit_max_delay" in lf:
                num(lf, "lifetime_fit", "fit_max_delay", lo=1)

        out = cfg.setdefault("outputs", {})
        products = out.setdefault("products", [])
        if not isinstance(products, list):
            bad("outputs.products", "must be a list")
            products = []
        allowed = _PRODUCTS[mode_name]
        for p in products:
            if p not in allowed:
                bad("outputs.products",
                    f"{p!r} not available in {mode_name} mode (allowed: {allowed})")

        if errors:
            raise ScenarioError(errors)
        return cls(cfg)

    # -- model objects -----------------------------------------------------

    @property
    def mode_name(self):
        return self.config["acquisition"]["mode"]

    @property
    def seed(self):
        return int(self.config["acquisition"]["seed"])

    def emitter(self) -> emitter.LevelSystem:
        e = self.config["emitter"]
        return emitter.LevelSystem(
            k_pump=e["k_pump"], gamma_r=e["gamma_r"], gamma_nr=e["gamma_nr"],
            k_isc=e["k_isc"], k_d=e["k_d"],
        )

    def detector(self) -> sim.DetectorModel:
        d = self.config["detector"]
        return sim.DetectorModel(
            efficiency=d["efficiency"], dark_rate=d["dark_rate"],
            dead_time=int(d["dead_time"]), irf_sigma=d["irf_sigma"],
            background_rate=d["background_rate"],
        )

    def plasmon_mode(self) -> cavity.PlasmonMode:
        m = self.config["cavity"]["mode"]
        return cavity.PlasmonMode(**m)

    def coupling_context(self) -> cavity.CouplingContext:
        c = self.config["cavity"]["context"]
        return cavity.CouplingContext(**c)

    def enhancement(self) -> cavity.EnhancementResult:
        return cavity.enhancement_at(self.plasmon_mode(), self.coupling_context())

    def spin_system(self, base=None) -> odmr.SpinLevelSystem:
        s = self.config["spin"]
        return odmr.SpinLevelSystem(
            base=base if base is not None else self.emitter(),
            k_isc_bright=s["k_isc_bright"], k_isc_dark=s["k_isc_dark"],
            branch_to_bright=s["branch_to_bright"], nu0=s["nu0"],
            delta_nu=s["delta_nu"], k_mw=s["k_mw"],
        )

    def pulse_train(self) -> sim.PulseTrain:
        a = self.config["acquisition"]
        return sim.PulseTrain(period=int(a["period"]), pulses=int(a["pulses"]),
                              pulse_width=int(a["pulse_width"]))

    def variants(self):
        """(name, LevelSystem, DetectorModel, EnhancementResult|None) runs."""
        base = self.emitter()
        det = self.detector()
        cav = self.config.get("cavity")
        if cav is None:
            return [("uncoupled", base, det, None)]
        enh = self.enhancement()
        coupled = cavity.couple(base, enh, quench_rate=cav["quench_rate"])
        det_c = det
        if cav["scale_background"]:
            det_c = sim.DetectorModel(
                efficiency=det.efficiency, dark_rate=det.dark_rate,
                dead_time=det.dead_time, irf_sigma=det.irf_sigma,
                background_rate=det.background_rate * enh.xi_exc,
            )
        out = []
        if cav["also_uncoupled"]:
            out.append(("uncoupled", base, det, None))
        out.append(("coupled", coupled, det_c, enh))
        return out


# ---------------------------------------------------------------------------
# running


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class _Bundle:
    """Collects written products and failures for the manifest."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.products = []
        self.errors = []

    def add(self, name, filename, writer):
        path = self.out_dir / filename
        try:
            writer(path)
        except Exception as err:  # partial-failure policy: keep going
            self.errors.append(f"{name}: {err}")
            return
        self.products.append({
            "name": name,
            "path": filename,
            "sha256": _sha256(path),
            "bytes": path.stat().st_size,
        })


def run_scenario(scn: Scenario, out_dir, fmt="csv", seed=None) -> dict:
    """Execute a scenario and write its products plus manifest.json.

    fmt selects the curve/table format (csv or json); fit results and the
    manifest are always JSON.  Returns the manifest dict.
    """
    if fmt not in ("csv", "json"):
        raise ScenarioError([f"format: must be csv or json, got {fmt!r}"])
    cfg = copy.deepcopy(scn.config)
    if seed is not None:
        cfg["acquisition"]["seed"] = int(seed)
    scn = Scenario(cfg)
    bundle = _Bundle(out_dir)
    products = list(cfg["outputs"]["products"])
    if products:
        if scn.mode_name == "cw":
            _run_cw(scn, products, fmt, bundle)
        elif scn.mode_name == "pulsed":
            _run_pulsed(scn, products, fmt, bundle)
        else:
            _run_odmr(scn, products, fmt, bundle)
    manifest = {
        "spesim_version": __version__,
        "seed": scn.seed,
        "scenario": cfg,
        "format": fmt,
        "status": "incomplete" if bundle.errors else "complete",
        "errors": bundle.errors,
        "products": bundle.products,
    }
    with open(bundle.out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    return manifest


def _curve_writer(curve, fmt):
    if fmt == "csv":
        return lambda path: correlate.g2_to_csv(curve, path)
    return lambda path: correlate.g2_to_json(curve, path)


def _run_cw(scn, products, fmt, bundle):
    acq = scn.config["acquisition"]
    cor = scn.config["correlation"]
    for name, sys_, det, _enh in scn.variants():
        want_streams = "streams" in products
        want_g2 = "g2" in products or "g2_fit" in products
        a = b = None
        if want_streams or want_g2:
            a, b = sim.simulate_cw(
                sys_, int(acq["duration"]), det, scn.seed,
                splitter=acq["splitter"],
            )
        if want_streams:
            bundle.add(f"streams_{name}_ch0", f"{name}_ch0.ptsm",
                       lambda p, s=a: streams.write_ptsm(s, p))
            bundle.add(f"streams_{name}_ch1", f"{name}_ch1.ptsm",
                       lambda p, s=b: streams.write_ptsm(s, p))
        curve = None
        if want_g2:
            kwargs = ({"log_bins": int(cor["log_bins"])} if "log_bins" in cor
                      else {"bin_width": int(cor["bin_width"])})
            curve = correlate.cross_correlate(a, b, int(cor["window"]), **kwargs)
        if "g2" in products:
            bundle.add(f"g2_{name}", f"g2_{name}.{fmt}", _curve_writer(curve, fmt))
        if "g2_fit" in products:
            def write_fit(path, c=curve):
                fitting.fit_g2(c).to_json(path)
            bundle.add(f"g2_fit_{name}", f"g2_fit_{name}.json", write_fit)
        if "saturation" in products or "saturation_fit" in products:
            _saturation_products(scn, name, sys_, det, _enh, fmt, bundle, products)


def _saturation_products(scn, name, sys_, det, enh, fmt, bundle, products):
    satcfg = scn.config["saturation"]
    powers = np.linspace(0.0, satcfg["p_max_mw"], int(satcfg["points"]))
    pump_scale = enh.xi_exc if enh is not None else 1.0
    pumps = powers * satcfg["pump_rate_per_mw"] * pump_scale
    rates = emitter.emission_rate_vs_pump(sys_, pumps)
    detected = det.efficiency * rates + det.dark_rate + det.background_rate
    pts = np.column_stack([powers, detected])

    def write_curve(path):
        if fmt == "csv":
            with open(path, "w") as f:
                f.write("power_mw,rate_cts_s\n")
                for p, r in pts:
                    f.write(f"{p:.8g},{r:.8g}\n")
        else:
            with open(path, "w") as f:
                json.dump({"kind": "saturation", "power_mw": powers.tolist(),
                           "rate_cts_s": detected.tolist()}, f, indent=1)
                f.write("\n")

    if "saturation" in products:
        bundle.add(f"saturation_{name}", f"saturation_{name}.{fmt}", write_curve)
    if "saturation_fit" in products:
        def write_fit(path):
            fitting.fit_saturation(pts[pts[:, 0] > 0]).to_json(path)
        bundle.add(f"saturation_fit_{name}", f"saturation_fit_{name}.json",
                   write_fit)


def _run_pulsed(scn, products, fmt, bundle):
    acq = scn.config["acquisition"]
    lf = scn.config["lifetime_fit"]
    train = scn.pulse_train()
    for name, sys_, det, _enh in scn.variants():
        s = sim.simulate_pulsed(sys_, train, det, scn.seed, p_exc=acq["p_exc"])
        if "streams" in products:
            bundle.add(f"streams_{name}", f"{name}.ptsm",
                       lambda p, ss=s: streams.write_ptsm(ss, p))
        hist = correlate.decay_histogram(s, train.period, int(lf["bin_width"]),
                                         n_pulses=train.pulses)
        if "fit_max_delay" in lf:
            hist = _truncate_hist(hist, lf["fit_max_delay"])
        if "decay" in products:
            def write_decay(path, h=hist):
                if fmt == "csv":
                    correlate.decay_to_csv(h, path)
                else:
                    with open(path, "w") as f:
                        json.dump({"kind": "decay",
                                   "bin_edges_ps": h.bin_edges.tolist(),
                                   "counts": h.counts.tolist(),
                                   "n_pulses": h.n_pulses}, f, indent=1)
                        f.write("\n")
            bundle.add(f"decay_{name}", f"decay_{name}.{fmt}", write_decay)
        if "lifetime_fit" in products:
            irf = fitting.IrfModel(sigma=det.irf_sigma, t0=0.0)
            def write_fit(path, h=hist, i=irf):
                fitting.fit_lifetime(h, i).to_json(path)
            bundle.add(f"lifetime_fit_{name}", f"lifetime_fit_{name}.json",
                       write_fit)


def _truncate_hist(hist, max_delay):
    keep = hist.bin_edges[1:] <= max_delay
    return correlate.DecayHistogram(
        bin_edges=hist.bin_edges[: int(keep.sum()) + 1],
        counts=hist.counts[keep],
        n_pulses=hist.n_pulses,
    )


def _run_odmr(scn, products, fmt, bundle):
    acq = scn.config["acquisition"]
    sens_cfg = scn.config["sensitivity"]
    freqs = np.linspace(acq["freq_start"], acq["freq_stop"],
                        int(acq["freq_points"]))
    for name, sys_, det, _enh in scn.variants():
        spin = scn.spin_system(base=sys_)
        spectrum = odmr.odmr_spectrum(
            spin, freqs, det,
            dwell_s=acq.get("dwell_s"), seed=scn.seed,
        )
        if "spectrum" in products:
            def write_spec(path, sp=spectrum):
                if fmt == "csv":
                    odmr.spectrum_to_csv(sp, path)
                else:
                    with open(path, "w") as f:
                        json.dump({"kind": "odmr_spectrum",
                                   "nu_mhz": sp.frequencies.tolist(),
                                   "rate_cts_s": sp.rates.tolist(),
                                   "contrast": sp.contrast}, f, indent=1)
                        f.write("\n")
            bundle.add(f"spectrum_{name}", f"odmr_spectrum_{name}.{fmt}",
                       write_spec)
        fit = None
        if "odmr_fit" in products or "sensitivity" in products:
            fit = fitting.fit_odmr(spectrum)
        if "odmr_fit" in products:
            bundle.add(f"odmr_fit_{name}", f"odmr_fit_{name}.json",
                       lambda p, f_=fit: f_.to_json(p))
        if "sensitivity" in products:
            A = (odmr.LORENTZIAN_LINESHAPE_FACTOR
                 if sens_cfg["lineshape"] == "lorentzian"
                 else odmr.GAUSSIAN_LINESHAPE_FACTOR)
            def write_sens(path, f_=fit):
                inputs = odmr.SensitivityInputs(
                    C=f_.params["contrast"],
                    R=f_.params["baseline_rate"],
                    delta_nu=f_.params["delta_nu"] * 1e6,
                    A=A, g_factor=sens_cfg["g_factor"],
                )
                with open(path, "w") as fh:
                    json.dump(odmr.sensitivity_report(inputs), fh, indent=1)
                    fh.write("\n")
            bundle.add(f"sensitivity_{name}", f"sensitivity_{name}.json",
                       write_sens)


# ---------------------------------------------------------------------------
# sweeps


def _set_by_path(cfg, dotted, value):
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ScenarioError([f"sweep.param: path {dotted!r} does not resolve"])
        node = node[k]
    leaf = keys[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ScenarioError([f"sweep.param: path {dotted!r} does not resolve"])
    if isinstance(node[leaf], bool) or not isinstance(node[leaf], (int, float)):
        raise ScenarioError(
            [f"sweep.param: {dotted!r} is not a numeric field"]
        )
    node[leaf] = value


def _sweep_point(scn_cfg, dotted, value):
    cfg = copy.deepcopy(scn_cfg)
    _set_by_path(cfg, dotted, value)
    scn = Scenario.from_dict(cfg)
    row = {k: float("nan") for k in SWEEP_COLUMNS}
    row["value"] = value
    row["regime"] = ""
    name, sys_, det, enh = scn.variants()[-1]  # coupled when a cavity exists
    if enh is not None:
        row["xi_exc"] = enh.xi_exc
        row["F_P"] = enh.F_P
        row["regime"] = enh.regime.value
    if scn.mode_name == "odmr":
        spin = scn.spin_system(base=sys_)
        emitted = odmr.odmr_steady_rates(spin, mw_on=False)
        extra = det.dark_rate + det.background_rate
        r_det = det.efficiency * emitted + extra
        r_on = det.efficiency * odmr.odmr_steady_rates(spin, True) + extra
        contrast = (r_det - r_on) / r_det if r_det > 0 else float("nan")
        row["rate_cts_s"] = r_det
        row["contrast"] = contrast
        if 0 < contrast < 1 and r_det > 0:
            inputs = odmr.SensitivityInputs(
                C=contrast, R=r_det,
                delta_nu=scn.config["spin"]["delta_nu"] * 1e6,
            )
            row["eta_t_sqrt_hz"] = odmr.sensitivity(inputs)
        return row
    # cw / pulsed: closed-form photophysics summary
    signal = det.efficiency * sys_.gamma_r * emitter.steady_state(sys_).p_e
    total = signal + det.dark_rate + det.background_rate
    row["rate_cts_s"] = total
    if sys_.k_pump > 0 and total > 0:
        rho = signal / total
        try:
            g2p = emitter.g2_analytical(sys_)
        except ValueError:
            return row
        row["g2_0"] = 1.0 - rho**2
        tau = np.geomspace(1e-12, 50.0 / max(g2p.lambda_2, 1e-3), 600)
        g2_meas = 1.0 + rho**2 * (g2p.value(tau) - 1.0)
        row["g2_max"] = float(g2_meas.max())
    return row


def sweep_scenario(scn: Scenario, param, values, jobs=1):
    """Analytic summary table of a scenario over a numeric parameter sweep.

    Each value is run in isolation (closed-form rates, enhancement and
    photon statistics; no stochastic sampling); rows come back in input
    order.
    """
    values = list(values)
    if not values:
        return []
    _set_by_path(copy.deepcopy(scn.config), param, values[0])  # path check
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            rows = list(pool.map(
                lambda v: _sweep_point(scn.config, param, v), values))
    else:
        rows = [_sweep_point(scn.config, param, v) for v in values]
    return rows


def sweep_to_csv(rows, path):
    with open(path, "w") as f:
        f.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            cells = []
            for col in SWEEP_COLUMNS:
                v = row[col]
                cells.append(v if isinstance(v, str) else f"{v:.10g}")
            f.write(",".join(cells) + "\n")
