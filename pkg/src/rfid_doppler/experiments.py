"""Monte Carlo harness, figure datasets, and CSV emission.

Everything here is deterministic for a given (config, seed): per-trial seeds
are derived from the master seed with an iterated SplitMix64 mix,

    trial_seed = derive_seed(master_seed, grid_index, trial_index)
    bits RNG key  = derive_seed(trial_seed, 0)
    noise seed    = derive_seed(trial_seed, 1)

(the detection experiment additionally uses subindices 2/3 for its moving
frame), and all generators are counter-based Philox, so results do not depend
on execution order and re-runs produce byte-identical CSV.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import baseband, bounds, estimator, protocol
from .configfile import parse_bool, read_key_values


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


class CheckFailure(Exception):
    """An acceptance-style --check comparison failed."""


_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *indices: int) -> int:
    """64-bit seed derivation: SplitMix64 folded over the index path."""
    h = _splitmix64(master & _MASK64)
    for ix in indices:
        h = _splitmix64(h ^ (ix & _MASK64))
    return h


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

# The paper-style defaults: European band, 0.1% error target, Mode 290, and
# the weakest reliably received tag signal (52.8 dB-Hz) unless a link is given.
REFERENCE_PS_N0_DBHZ = 52.8


@dataclass
class ExperimentConfig:
    mode_label: Optional[str] = "Mode 290"
    blf_hz: Optional[float] = None
    encoding: Optional[str] = None
    trext: bool = True
    epc_bits: int = 96
    f_c_hz: float = 868e6
    p_err: float = 1e-3
    ps_n0_dbhz: Optional[float] = None
    p_s_dbm: Optional[float] = None
    n0_dbm_hz: Optional[float] = None
    nf_db: Optional[float] = None
    v: float = 1.0
    v_grid: Optional[list[float]] = None
    trials: int = 1000
    seed: int = 0
    waveform_model: str = "gen2"
    modulation: str = "ask"
    parts: str = "both"
    sample_rate_hz: Optional[float] = None
    ask_zeroing: bool = True
    search_halfwidth_hz: float = 200.0
    estimator_model: str = "gaussian"
    sigma_sq_hz2: Optional[float] = None
    sweep_param: Optional[str] = None       # 'ps_n0_dbhz' or 't0_s'
    sweep_values: Optional[list[float]] = None

    def validate(self) -> None:
        if self.mode_label is None and self.blf_hz is None:
            raise ConfigError("mode_label: give a catalog label or explicit blf_hz/encoding")
        if (self.blf_hz is None) != (self.encoding is None):
            raise ConfigError("blf_hz: blf_hz and encoding must be given together")
        if self.epc_bits not in (96, 128, 256):
            raise ConfigError(f"epc_bits: must be 96, 128 or 256, got {self.epc_bits}")
        if self.f_c_hz <= 0:
            raise ConfigError(f"f_c_hz: must be positive, got {self.f_c_hz}")
        if not 0.0 < self.p_err < 0.5:
            raise ConfigError(f"p_err: must lie in (0, 0.5), got {self.p_err}")
        if self.v < 0:
            raise ConfigError(f"v: must be >= 0, got {self.v}")
        if self.trials < 1:
            raise ConfigError(f"trials: must be >= 1, got {self.trials}")
        if self.modulation not in baseband.MODULATIONS:
            raise ConfigError(f"modulation: must be one of {baseband.MODULATIONS}")
        if self.waveform_model not in baseband.WAVEFORM_MODELS:
            raise ConfigError(f"waveform_model: must be one of {baseband.WAVEFORM_MODELS}")
        if self.parts not in ("rn16", "epc", "both"):
            raise ConfigError(f"parts: must be rn16, epc or both, got {self.parts!r}")
        if self.estimator_model not in ("gaussian", "baseband"):
            raise ConfigError(f"estimator_model: must be gaussian or baseband")
        if self.search_halfwidth_hz <= 0:
            raise ConfigError(f"search_halfwidth_hz: must be positive")
        if self.sigma_sq_hz2 is not None and self.sigma_sq_hz2 <= 0:
            raise ConfigError(f"sigma_sq_hz2: must be positive, got {self.sigma_sq_hz2}")
        for name in ("v_grid", "sweep_values"):
            grid = getattr(self, name)
            if grid is not None:
                if len(grid) == 0:
                    raise ConfigError(f"{name}: must be non-empty")
                if any(b <= a for a, b in zip(grid, grid[1:])):
                    raise ConfigError(f"{name}: values must be strictly increasing")
        if (self.sweep_param is None) != (self.sweep_values is None):
            raise ConfigError("sweep_param: sweep_param and sweep_values go together")
        if self.sweep_param is not None and self.sweep_param not in ("ps_n0_dbhz", "t0_s"):
            raise ConfigError(f"sweep_param: must be ps_n0_dbhz or t0_s, got {self.sweep_param!r}")
        if self.ps_n0_dbhz is not None and self.p_s_dbm is not None:
            raise ConfigError("ps_n0_dbhz: give either the ratio or p_s_dbm with a noise term")

    # -- parsing -----------------------------------------------------------

    @classmethod
    def from_items(cls, items: Sequence[tuple[str, str]]) -> "ExperimentConfig":
        config = cls()
        for key, value in items:
            config.set_field(key, value)
        return config

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_items(read_key_values(path))

    def set_field(self, key: str, value: str) -> None:
        """Set one field from its textual config form."""
        try:
            fld = _CONFIG_FIELDS[key]
        except KeyError:
            raise ConfigError(f"{key}: unknown config key") from None
        try:
            setattr(self, key, fld(value))
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: {exc}") from None

    def replace(self, **kwargs) -> "ExperimentConfig":
        return dataclasses.replace(self, **kwargs)

    def comment_lines(self) -> list[str]:
        """Config echo for CSV headers, in field order, skipping unset values."""
        out = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, list):
                value = ",".join(format(x, ".12g") for x in value)
            out.append(f"{f.name} = {value}")
        return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _opt_str(text: str):
    return None if text.strip().lower() in ("", "none") else text.strip()


_CONFIG_FIELDS = {
    "mode_label": _opt_str,
    "blf_hz": float,
    "encoding": str,
    "trext": parse_bool,
    "epc_bits": int,
    "f_c_hz": float,
    "p_err": float,
    "ps_n0_dbhz": float,
    "p_s_dbm": float,
    "n0_dbm_hz": float,
    "nf_db": float,
    "v": float,
    "v_grid": _float_list,
    "trials": int,
    "seed": int,
    "waveform_model": str,
    "modulation": str,
    "parts": str,
    "sample_rate_hz": float,
    "ask_zeroing": parse_bool,
    "search_halfwidth_hz": float,
    "estimator_model": str,
    "sigma_sq_hz2": float,
    "sweep_param": _opt_str,
    "sweep_values": _float_list,
}


def resolve_reader_mode(config: ExperimentConfig) -> protocol.ReaderMode:
    """Reader mode from explicit parameters or the catalog label."""
    if config.blf_hz is not None:
        try:
            return protocol.ReaderMode("custom", config.blf_hz,
                                       protocol.encoding_from_name(config.encoding),
                                       trext=config.trext, epc_bits=config.epc_bits)
        except ValueError as exc:
            raise ConfigError(f"blf_hz/encoding: {exc}") from None
    try:
        mode = protocol.find_reader_mode(config.mode_label)
    except KeyError as exc:
        raise ConfigError(f"mode_label: {exc.args[0]}") from None
    return dataclasses.replace(mode, epc_bits=config.epc_bits, trext=config.trext)


def resolve_link_budget(config: ExperimentConfig) -> bounds.LinkBudget:
    """Link budget from the ratio, from power + noise terms, or the default."""
    try:
        if config.ps_n0_dbhz is not None:
            return bounds.LinkBudget.from_ratio(config.ps_n0_dbhz)
        if config.p_s_dbm is not None:
            if config.n0_dbm_hz is None and config.nf_db is None:
                raise ConfigError("p_s_dbm: needs n0_dbm_hz or nf_db alongside")
            return bounds.LinkBudget.from_power(config.p_s_dbm, config.n0_dbm_hz,
                                                config.nf_db)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"link budget: {exc}") from None
    return bounds.LinkBudget.from_ratio(REFERENCE_PS_N0_DBHZ)


# ---------------------------------------------------------------------------
# Monte Carlo runners
# ---------------------------------------------------------------------------

def _random_bits(rng: np.random.Generator, count: int) -> np.ndarray:
    return rng.integers(0, 2, size=count, dtype=np.int8)


def _estimate_trial_error(frame, config: ExperimentConfig, f_d_true: float) -> float:
    wiped = estimator.wipe_modulation(frame, ask_zeroing=config.ask_zeroing)
    report = estimator.estimate_doppler(wiped, search_halfwidth_hz=config.search_halfwidth_hz)
    return report.f_hat_hz - f_d_true


def _reply_trial(config, mode, timing, ratio_dbhz, grid_index, trial, f_d_true) -> float:
    trial_seed = derive_seed(config.seed, grid_index, trial)
    bits_rng = _rng(derive_seed(trial_seed, 0))
    bits_rn16 = bits_epc = None
    if config.waveform_model == "gen2":
        if config.parts in ("rn16", "both"):
            bits_rn16 = _random_bits(bits_rng, protocol.RN16_BITS)
        if config.parts in ("epc", "both"):
            bits_epc = _random_bits(bits_rng, mode.epc_bits + protocol.CRC16_BITS)
    params = baseband.ChannelParams(f_d_hz=f_d_true, ps_n0_dbhz=ratio_dbhz,
                                    sample_rate_hz=config.sample_rate_hz,
                                    seed=derive_seed(trial_seed, 1))
    frame = baseband.synthesize_reply(timing, mode, config.modulation,
                                      config.waveform_model, bits_rn16, bits_epc,
                                      params, parts=config.parts)
    return _estimate_trial_error(frame, config, f_d_true)


def _burst_symbols(t0_s: float, mode: protocol.ReaderMode, waveform_model: str) -> int:
    """Symbol count whose duration best matches the requested t0."""
    tb = float(protocol.symbol_period(mode.blf_hz, mode.encoding))
    n = max(1, round(t0_s / tb))
    if waveform_model == "gen2":
        # need at least one payload bit next to preamble and end symbol
        n = max(n, protocol.preamble_symbols(mode.encoding, mode.trext) + 2)
    return n


def _burst_trial(config, mode, n_symbols, ratio_dbhz, grid_index, trial, f_d_true) -> float:
    trial_seed = derive_seed(config.seed, grid_index, trial)
    enc = mode.encoding
    if config.waveform_model == "rect":
        states = baseband.rect_states(n_symbols, enc.spread_factor)
    else:
        payload = n_symbols - protocol.preamble_symbols(enc, mode.trext) - 1
        bits = _random_bits(_rng(derive_seed(trial_seed, 0)), payload)
        if enc.is_miller:
            states = baseband.encode_miller(bits, enc.spread_factor, mode.trext)
        else:
            states = baseband.encode_fm0(bits, mode.trext)
    params = baseband.ChannelParams(f_d_hz=f_d_true, ps_n0_dbhz=ratio_dbhz,
                                    sample_rate_hz=config.sample_rate_hz,
                                    seed=derive_seed(trial_seed, 1))
    frame = baseband.synthesize_burst(states, mode.blf_hz, config.modulation, params,
                                      waveform_model=config.waveform_model)
    return _estimate_trial_error(frame, config, f_d_true)


def _error_stats(errors: np.ndarray) -> dict:
    n = errors.size
    return {
        "trials": int(n),
        "emp_var_hz2": float(errors.var(ddof=1)) if n > 1 else 0.0,
        "emp_mse_hz2": float(np.mean(errors ** 2)),
        "emp_mean_err_hz": float(errors.mean()),
    }


MCRB_REPLY_FIELDS = ["ps_n0_dbhz", "parts", "modulation", "waveform_model",
                     "t_rn16_s", "t_pause_s", "t_epc_s", "c_t_s3", "f_d_true_hz",
                     "mcrb_var_hz2", "trials", "emp_var_hz2", "emp_mse_hz2",
                     "emp_mean_err_hz"]
MCRB_BURST_FIELDS = ["t0_requested_s", "t0_s", "n_symbols", "ps_n0_dbhz", "modulation",
                     "waveform_model", "c_t_s3", "f_d_true_hz", "mcrb_var_hz2",
                     "trials", "emp_var_hz2", "emp_mse_hz2", "emp_mean_err_hz"]


def run_mcrb_experiment(config: ExperimentConfig):
    """Monte Carlo verification of the estimation-variance bound.

    Returns (comments, fieldnames, rows).  Without a sweep, a single grid
    point at the configured link budget is run; sweep_param selects a sweep
    over the link ratio or (for single bursts) over the signal duration.
    """
    config.validate()
    mode = resolve_reader_mode(config)
    link = resolve_link_budget(config)
    f_d_true = bounds.doppler_shift(config.v, config.f_c_hz)
    comments = ["mcrb monte carlo"] + config.comment_lines()
    rows = []

    if config.sweep_param == "t0_s":
        for gi, t0_req in enumerate(config.sweep_values):
            n_symbols = _burst_symbols(t0_req, mode, config.waveform_model)
            t0 = n_symbols * float(protocol.symbol_period(mode.blf_hz, mode.encoding))
            c_t = bounds.c_t_single(t0)
            mcrb = bounds.mcrb_sigma_sq(c_t, link.ps_n0_linear)
            errors = np.array([_burst_trial(config, mode, n_symbols, link.ps_n0_dbhz,
                                            gi, i, f_d_true)
                               for i in range(config.trials)])
            rows.append({"t0_requested_s": t0_req, "t0_s": t0, "n_symbols": n_symbols,
                         "ps_n0_dbhz": link.ps_n0_dbhz, "modulation": config.modulation,
                         "waveform_model": config.waveform_model, "c_t_s3": c_t,
                         "f_d_true_hz": f_d_true, "mcrb_var_hz2": mcrb,
                         **_error_stats(errors)})
        return comments, MCRB_BURST_FIELDS, rows

    timing = protocol.reply_timing(mode)
    c_t = bounds.timing_factor(timing, config.parts)
    ratios = config.sweep_values if config.sweep_param == "ps_n0_dbhz" \
        else [link.ps_n0_dbhz]
    for gi, ratio in enumerate(ratios):
        mcrb = bounds.mcrb_sigma_sq(c_t, bounds.linear_from_db(ratio))
        errors = np.array([_reply_trial(config, mode, timing, ratio, gi, i, f_d_true)
                           for i in range(config.trials)])
        rows.append({"ps_n0_dbhz": ratio, "parts": config.parts,
                     "modulation": config.modulation,
                     "waveform_model": config.waveform_model,
                     "t_rn16_s": float(timing.t_rn16), "t_pause_s": float(timing.t_pause),
                     "t_epc_s": float(timing.t_epc), "c_t_s3": c_t,
                     "f_d_true_hz": f_d_true, "mcrb_var_hz2": mcrb,
                     **_error_stats(errors)})
    return comments, MCRB_REPLY_FIELDS, rows


DETECT_FIELDS = ["v_m_per_s", "f_d_hz", "threshold_hz", "sigma_sq_hz2",
                 "p_err_predicted", "trials", "errors_static_as_moving",
                 "errors_moving_as_static", "error_rate"]


def run_detection_experiment(config: ExperimentConfig):
    """Static-vs-moving classification error rates against the prediction.

    For every speed grid point, ``trials`` pairs of one static and one moving
    estimate are put through the binary hypothesis test between 0 Hz and the
    (positive) moving-tag Doppler shift: decide moving iff the estimate is at
    or above half that shift.  With the direction under test known, both error
    kinds are single-tail events and share the predicted probability; the
    direction-agnostic magnitude classifier used for lone estimates doubles
    the static false rate instead.  The gaussian estimator model draws
    estimates from the analytic error distribution with variance sigma_sq_hz2
    (default: the largest tolerable variance for the configured p_err); the
    baseband model runs the full frame pipeline at the P_S/N0 whose
    estimation bound equals that variance.
    """
    config.validate()
    f_c = config.f_c_hz
    comments = ["motion detection monte carlo"] + config.comment_lines()
    rows = []
    v_values = config.v_grid if config.v_grid is not None else [config.v]
    for gi, v in enumerate(v_values):
        if v <= 0:
            raise ConfigError(f"v_grid: speeds must be positive, got {v}")
        f_d = bounds.doppler_shift(v, f_c)
        scenario = bounds.MotionScenario(v, f_c, config.p_err)
        sigma_sq = config.sigma_sq_hz2 if config.sigma_sq_hz2 is not None \
            else bounds.sigma_max_sq(scenario)
        p_pred = bounds.p_err_from_sigma(sigma_sq, v, f_c)
        threshold = f_d / 2.0

        if config.estimator_model == "gaussian":
            rng = _rng(derive_seed(config.seed, gi))
            sd = math.sqrt(sigma_sq)
            est_static = sd * rng.standard_normal(config.trials)
            est_moving = f_d + sd * rng.standard_normal(config.trials)
        else:
            est_static = np.empty(config.trials)
            est_moving = np.empty(config.trials)
            mode = resolve_reader_mode(config)
            timing = protocol.reply_timing(mode)
            c_t = bounds.timing_factor(timing, config.parts)
            # link ratio at which the estimation bound equals sigma_sq
            ratio_dbhz = bounds.db_from_linear(
                3.0 / (2.0 * math.pi ** 2 * c_t * sigma_sq))
            for i in range(config.trials):
                trial_seed = derive_seed(config.seed, gi, i)
                for off, (f_true, sink) in enumerate([(0.0, est_static), (f_d, est_moving)]):
                    bits_rng = _rng(derive_seed(trial_seed, 2 * off))
                    bits_rn16 = bits_epc = None
                    if config.waveform_model == "gen2":
                        if config.parts in ("rn16", "both"):
                            bits_rn16 = _random_bits(bits_rng, protocol.RN16_BITS)
                        if config.parts in ("epc", "both"):
                            bits_epc = _random_bits(bits_rng,
                                                    mode.epc_bits + protocol.CRC16_BITS)
                    params = baseband.ChannelParams(
                        f_d_hz=f_true, ps_n0_dbhz=ratio_dbhz,
                        sample_rate_hz=config.sample_rate_hz,
                        seed=derive_seed(trial_seed, 2 * off + 1))
                    frame = baseband.synthesize_reply(timing, mode, config.modulation,
                                                      config.waveform_model, bits_rn16,
                                                      bits_epc, params, parts=config.parts)
                    wiped = estimator.wipe_modulation(frame, ask_zeroing=config.ask_zeroing)
                    sink[i] = estimator.estimate_doppler(
                        wiped, search_halfwidth_hz=config.search_halfwidth_hz).f_hat_hz

        err_static = int(np.count_nonzero(est_static >= threshold))
        err_moving = int(np.count_nonzero(est_moving < threshold))
        rows.append({"v_m_per_s": v, "f_d_hz": f_d, "threshold_hz": threshold,
                     "sigma_sq_hz2": sigma_sq, "p_err_predicted": p_pred,
                     "trials": config.trials,
                     "errors_static_as_moving": err_static,
                     "errors_moving_as_static": err_moving,
                     "error_rate": (err_static + err_moving) / (2.0 * config.trials)})
    return comments, DETECT_FIELDS, rows


# ---------------------------------------------------------------------------
# Figure datasets
# ---------------------------------------------------------------------------

def _geomspace(lo: float, hi: float, n: int) -> list[float]:
    return [float(x) for x in np.geomspace(lo, hi, n)]


def _pop(overrides: dict, key: str, default):
    return overrides.pop(key, default)


_MILLER8_40K = protocol.ReaderMode("Miller-8/40kHz", 40_000.0, protocol.MILLER8)


def figure_dataset(figure_id: int, overrides: Optional[dict] = None,
                   trials: int = 0, seed: int = 0):
    """Analytic dataset behind one of the paper-style figures.

    Returns (comments, fieldnames, rows).  Figures 4, 8, 9, 10 and 11 are
    purely closed-form; figures 5 and 7 optionally add Monte Carlo columns
    when ``trials`` > 0 (figure 7 simulates its marked operating point only).
    """
    builders = {4: _figure4, 5: _figure5, 7: _figure7, 8: _figure8,
                9: _figure9, 10: _figure10, 11: _figure11}
    try:
        builder = builders[int(figure_id)]
    except (KeyError, ValueError):
        raise ConfigError(f"figure_id: unknown figure {figure_id!r}, "
                          f"expected one of {sorted(builders)}") from None
    overrides = dict(overrides or {})
    comments, fieldnames, rows = builder(overrides, trials, seed)
    if overrides:
        raise ConfigError(f"overrides: unused keys {sorted(overrides)}")
    return comments, fieldnames, rows


def _figure4(ov, trials, seed):
    f_c = _pop(ov, "f_c_hz", 868e6)
    v_grid = _pop(ov, "v_grid", _geomspace(0.01, 10.0, 61))
    p_errs = _pop(ov, "p_err_list", [0.05, 0.01, 0.001])
    rows = [{"v_m_per_s": v, "p_err": p,
             "sigma_max_sq_hz2": bounds.sigma_max_sq(bounds.MotionScenario(v, f_c, p))}
            for p in p_errs for v in v_grid]
    comments = [f"tolerable estimation variance over tag speed, f_c = {f_c:.12g} Hz"]
    return comments, ["v_m_per_s", "p_err", "sigma_max_sq_hz2"], rows


def _figure5(ov, trials, seed):
    t0_grid = _pop(ov, "t0_grid_s", _geomspace(1e-4, 1e-1, 61))
    ratios = _pop(ov, "ps_n0_dbhz_list", [30.0, REFERENCE_PS_N0_DBHZ, 80.0])
    blf_hz = _pop(ov, "blf_hz", 640_000.0)
    encoding = _pop(ov, "encoding", "FM0")
    modulation = _pop(ov, "modulation", "ask")
    waveform_model = _pop(ov, "waveform_model", "gen2")
    sample_rate_hz = _pop(ov, "sample_rate_hz", None)
    fieldnames = ["t0_s", "ps_n0_dbhz", "mcrb_var_hz2"]
    rows = []
    sim_config = None
    if trials > 0:
        sim_config = ExperimentConfig(
            mode_label=None, blf_hz=blf_hz, encoding=encoding,
            modulation=modulation, waveform_model=waveform_model,
            sample_rate_hz=sample_rate_hz, trials=trials)
        fieldnames += ["t0_simulated_s", "trials", "emp_var_hz2"]
    for ratio in ratios:
        for t0 in t0_grid:
            row = {"t0_s": t0, "ps_n0_dbhz": ratio,
                   "mcrb_var_hz2": bounds.mcrb_sigma_sq(bounds.c_t_single(t0),
                                                        bounds.linear_from_db(ratio))}
            if sim_config is not None:
                # fresh seed stream per grid point
                cfg = sim_config.replace(ps_n0_dbhz=ratio, sweep_param="t0_s",
                                         sweep_values=[t0],
                                         seed=derive_seed(seed, len(rows)))
                _, _, sim_rows = run_mcrb_experiment(cfg)
                row.update({"t0_simulated_s": sim_rows[0]["t0_s"],
                            "trials": sim_rows[0]["trials"],
                            "emp_var_hz2": sim_rows[0]["emp_var_hz2"]})
            rows.append(row)
    comments = ["estimation variance bound over single-signal duration"]
    return comments, fieldnames, rows


def _figure7(ov, trials, seed):
    ratio = _pop(ov, "ps_n0_dbhz", REFERENCE_PS_N0_DBHZ)
    modulation = _pop(ov, "modulation", "ask")
    pause_grid = _pop(ov, "t_pause_grid_s", _geomspace(1e-4, 1.0, 61))
    timing = protocol.reply_timing(_MILLER8_40K)
    t_rn16, t_epc = float(timing.t_rn16), float(timing.t_epc)
    operating_pause = float(timing.t_pause)
    configs = [("rn16_epc", t_rn16, t_epc), ("epc_epc", t_epc, t_epc)]
    fieldnames = ["config", "t_pause_s", "t1_s", "t2_s", "c_t_s3", "mcrb_var_hz2",
                  "is_operating_point"]
    if trials > 0:
        fieldnames += ["trials", "emp_var_hz2"]
    linear = bounds.linear_from_db(ratio)
    rows = []
    for name, t1, t2 in configs:
        grid = sorted(set(pause_grid) | ({operating_pause} if name == "rn16_epc" else set()))
        for tp in grid:
            marked = name == "rn16_epc" and tp == operating_pause
            c_t = bounds.c_t_dual(t1, t2, tp)
            row = {"config": name, "t_pause_s": tp, "t1_s": t1, "t2_s": t2,
                   "c_t_s3": c_t,
                   "mcrb_var_hz2": bounds.mcrb_sigma_sq(c_t, linear),
                   "is_operating_point": int(marked)}
            if trials > 0:
                if marked:
                    cfg = ExperimentConfig(mode_label=None, blf_hz=40_000.0,
                                           encoding="Miller8", ps_n0_dbhz=ratio,
                                           modulation=modulation,
                                           waveform_model="gen2", parts="both",
                                           trials=trials, seed=seed)
                    _, _, sim_rows = run_mcrb_experiment(cfg)
                    row.update({"trials": sim_rows[0]["trials"],
                                "emp_var_hz2": sim_rows[0]["emp_var_hz2"]})
                else:
                    row.update({"trials": "", "emp_var_hz2": ""})
            rows.append(row)
    comments = [f"two-part estimation variance bound over pause length at "
                f"{ratio:.12g} dB-Hz (Miller-8, 40 kHz reply timings)"]
    return comments, fieldnames, rows


def _figure8(ov, trials, seed):
    f_c = _pop(ov, "f_c_hz", 868e6)
    v_grid = _pop(ov, "v_grid", _geomspace(0.01, 10.0, 61))
    p_errs = _pop(ov, "p_err_list", [0.05, 0.01, 0.001])
    parts_list = _pop(ov, "parts_list", ["rn16", "epc", "both"])
    timing = protocol.reply_timing(_MILLER8_40K)
    rows = []
    for p_err in p_errs:
        for parts in parts_list:
            c_t = bounds.timing_factor(timing, parts)
            for v in v_grid:
                rows.append({"v_m_per_s": v, "p_err": p_err, "parts": parts,
                             "ps_n0_dbhz": bounds.required_ps_n0(v, c_t, f_c, p_err)})
    comments = ["required P_S/N0 over tag speed (Miller-8, 40 kHz)"]
    return comments, ["v_m_per_s", "p_err", "parts", "ps_n0_dbhz"], rows


def _figure9(ov, trials, seed):
    f_c = _pop(ov, "f_c_hz", 868e6)
    p_err = _pop(ov, "p_err", 0.001)
    v_grid = _pop(ov, "v_grid", _geomspace(0.01, 10.0, 61))
    combos = _pop(ov, "combos", [("FM0", 640e3), ("Miller2", 640e3), ("Miller4", 640e3),
                                 ("Miller8", 640e3), ("Miller8", 40e3)])
    rows = []
    for enc_name, blf in combos:
        mode = protocol.ReaderMode("sweep", blf, protocol.encoding_from_name(enc_name))
        c_t = bounds.timing_factor(protocol.reply_timing(mode), "both")
        for v in v_grid:
            rows.append({"v_m_per_s": v, "encoding": mode.encoding.name, "blf_hz": blf,
                         "ps_n0_dbhz": bounds.required_ps_n0(v, c_t, f_c, p_err)})
    comments = [f"required P_S/N0 over tag speed per encoding and BLF, p_err = {p_err:.12g}"]
    return comments, ["v_m_per_s", "encoding", "blf_hz", "ps_n0_dbhz"], rows


def _figure10(ov, trials, seed):
    f_c = _pop(ov, "f_c_hz", 868e6)
    p_err = _pop(ov, "p_err", 0.001)
    v_grid = _pop(ov, "v_grid", _geomspace(0.01, 10.0, 61))
    nf_list = _pop(ov, "nf_db_list", [0.0, 5.0, 10.0, 15.0, 20.0, 25.4])
    mode_label = _pop(ov, "mode_label", "Mode 290")
    mode = protocol.find_reader_mode(mode_label)
    c_t = bounds.timing_factor(protocol.reply_timing(mode), "both")
    rows = [{"v_m_per_s": v, "nf_db": nf,
             "p_s_dbm": bounds.required_ps_dbm(v, c_t, f_c, p_err, nf)}
            for nf in nf_list for v in v_grid]
    comments = [f"required tag power over speed per noise figure "
                f"({mode.label}, p_err = {p_err:.12g})"]
    return comments, ["v_m_per_s", "nf_db", "p_s_dbm"], rows


def _figure11(ov, trials, seed):
    f_c = _pop(ov, "f_c_hz", 868e6)
    p_err = _pop(ov, "p_err", 0.001)
    nf_db = _pop(ov, "nf_db", 25.4)
    v_grid = _pop(ov, "v_grid", _geomspace(0.01, 10.0, 61))
    epc_bits_list = _pop(ov, "epc_bits_list", [96, 128, 256])
    base = protocol.find_reader_mode("Mode 290")
    rows = []
    for epc_bits in epc_bits_list:
        mode = dataclasses.replace(base, epc_bits=epc_bits)
        c_t = bounds.timing_factor(protocol.reply_timing(mode), "both")
        for v in v_grid:
            rows.append({"v_m_per_s": v, "epc_bits": epc_bits,
                         "p_s_dbm": bounds.required_ps_dbm(v, c_t, f_c, p_err, nf_db)})
    comments = [f"required tag power over speed per EPC length (Mode 290, "
                f"NF = {nf_db:.12g} dB)"]
    return comments, ["v_m_per_s", "epc_bits", "p_s_dbm"], rows


# ---------------------------------------------------------------------------
# Noise-figure report and CSV output
# ---------------------------------------------------------------------------

def noise_figure_report(p_s_dbm: float = -95.8, ber: float = 1e-3,
                        blf_hz: float = 160e3, m: int = 8) -> dict:
    """Back-solve the receiver noise density from a sensitivity point."""
    ratio = bounds.ps_n0_from_ber(blf_hz, m, ber)
    n0, nf = bounds.noise_density_from_sensitivity(p_s_dbm, ber, blf_hz, m)
    return {"p_s_dbm": p_s_dbm, "ber": ber, "blf_hz": blf_hz, "m": m,
            "ps_n0_dbhz": ratio, "n0_dbm_hz": n0, "nf_db": nf}


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_csv(out, comments: Sequence[str], fieldnames: Sequence[str],
              rows: Sequence[dict]) -> None:
    """Write rows as CSV with '#' comment lines; floats at 12 significant digits."""
    own = isinstance(out, (str, Path))
    fh = open(out, "w", encoding="utf-8", newline="\n") if own else out
    try:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(row.get(name)) for name in fieldnames) + "\n")
    finally:
        if own:
            fh.close()
