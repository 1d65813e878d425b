"""Command-line interface.

Subcommands: bounds, vmin, figure, simulate-mcrb, simulate-detect,
noise-figure.  Each accepts --config (flat key = value file) with individual
flags overriding file values.  Exit codes: 0 success, 2 configuration error,
3 failed --check comparison.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import bounds, experiments, protocol
from .experiments import CheckFailure, ConfigError, ExperimentConfig

# argparse dest names that map one-to-one onto ExperimentConfig fields
_CONFIG_DESTS = ("mode_label", "blf_hz", "encoding", "trext", "epc_bits", "f_c_hz",
                 "p_err", "ps_n0_dbhz", "p_s_dbm", "n0_dbm_hz", "nf_db", "v", "v_grid",
                 "trials", "seed", "waveform_model", "modulation", "parts",
                 "sample_rate_hz", "ask_zeroing", "search_halfwidth_hz",
                 "estimator_model", "sigma_sq_hz2")


def _float_list(text: str) -> list[float]:
    values = [float(x) for x in text.split(",") if x.strip()]
    if not values:
        raise argparse.ArgumentTypeError("expected a comma-separated number list")
    return values


def _add_output(sp):
    sp.add_argument("--config", metavar="FILE", help="flat key = value config file")
    sp.add_argument("--out", metavar="FILE", help="write output here instead of stdout")


def _add_scenario(sp):
    sp.add_argument("--mode", dest="mode_label", help="reader mode label, e.g. 'Mode 290'")
    sp.add_argument("--blf", dest="blf_hz", type=float, help="explicit BLF in Hz")
    sp.add_argument("--encoding", help="FM0 or Miller-2/4/8 (with --blf)")
    sp.add_argument("--trext", dest="trext", action=argparse.BooleanOptionalAction,
                    default=None, help="pilot tone on/off")
    sp.add_argument("--epc-bits", dest="epc_bits", type=int, choices=(96, 128, 256))
    sp.add_argument("--f-c", dest="f_c_hz", type=float, help="carrier frequency in Hz")
    sp.add_argument("--p-err", dest="p_err", type=float, help="target error probability")
    sp.add_argument("--parts", choices=("rn16", "epc", "both"))


def _add_link(sp):
    sp.add_argument("--ps-n0", dest="ps_n0_dbhz", type=float, help="P_S/N0 in dB-Hz")
    sp.add_argument("--p-s-dbm", dest="p_s_dbm", type=float, help="received tag power")
    sp.add_argument("--n0", dest="n0_dbm_hz", type=float, help="noise density in dBm-Hz")
    sp.add_argument("--nf", dest="nf_db", type=float, help="receiver noise figure in dB")


def _add_simulation(sp):
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--modulation", choices=("ask", "psk"))
    sp.add_argument("--waveform-model", dest="waveform_model", choices=("gen2", "rect"))
    sp.add_argument("--sample-rate", dest="sample_rate_hz", type=float)
    sp.add_argument("--ask-zeroing", dest="ask_zeroing",
                    action=argparse.BooleanOptionalAction, default=None,
                    help="zero absorb intervals before ASK estimation")
    sp.add_argument("--search-halfwidth", dest="search_halfwidth_hz", type=float)
    sp.add_argument("--v", type=float, help="tag speed in m/s")


def _build_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if getattr(args, "config", None) \
        else ExperimentConfig()
    for dest in _CONFIG_DESTS:
        value = getattr(args, dest, None)
        if value is not None:
            setattr(config, dest, value)
    return config


def _print_lines(lines, out_path):
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolved(config):
    config.validate()
    mode = experiments.resolve_reader_mode(config)
    link = experiments.resolve_link_budget(config)
    timing = protocol.reply_timing(mode)
    c_t = bounds.timing_factor(timing, config.parts)
    return mode, link, timing, c_t


def _cmd_bounds(args) -> int:
    config = _build_config(args)
    mode, link, timing, c_t = _resolved(config)
    scenario = bounds.MotionScenario(config.v, config.f_c_hz, config.p_err)
    result = bounds.evaluate_bounds(scenario, c_t, link)
    lines = [
        f"mode = {mode.label}",
        f"blf_hz = {mode.blf_hz:.12g}",
        f"encoding = {mode.encoding.name}",
        f"parts = {config.parts}",
        f"t_rn16_s = {float(timing.t_rn16):.12g}",
        f"t_pause_s = {float(timing.t_pause):.12g}",
        f"t_epc_s = {float(timing.t_epc):.12g}",
        f"c_t_s3 = {c_t:.12g}",
        f"ps_n0_dbhz = {link.ps_n0_dbhz:.12g}",
        f"v_m_per_s = {scenario.v:.12g}",
        f"p_err = {scenario.p_err:.12g}",
        f"f_c_hz = {scenario.f_c_hz:.12g}",
        f"sigma_max_sq_hz2 = {result.sigma_max_sq:.12g}",
        f"mcrb_var_hz2 = {result.sigma_mcrb_sq:.12g}",
        f"v_min_m_per_s = {result.v_min:.12g}",
        f"detectable = {str(result.detectable).lower()}",
    ]
    _print_lines(lines, args.out)
    return 0


def _cmd_vmin(args) -> int:
    config = _build_config(args)
    mode, link, timing, c_t = _resolved(config)
    value = bounds.v_min(c_t, link.ps_n0_linear, config.f_c_hz, config.p_err)
    lines = [
        f"mode = {mode.label}",
        f"parts = {config.parts}",
        f"c_t_s3 = {c_t:.12g}",
        f"ps_n0_dbhz = {link.ps_n0_dbhz:.12g}",
        f"p_err = {config.p_err:.12g}",
        f"f_c_hz = {config.f_c_hz:.12g}",
        f"v_min_m_per_s = {value:.12g}",
    ]
    _print_lines(lines, args.out)
    return 0


def _parse_override_value(key: str, text: str):
    listy = key.endswith("_list") or "grid" in key
    pieces = [p.strip() for p in text.split(",") if p.strip()]
    items = []
    for piece in pieces:
        try:
            items.append(int(piece))
        except ValueError:
            try:
                items.append(float(piece))
            except ValueError:
                # non-numeric override, e.g. parts_list=rn16,epc or mode_label=...
                return pieces if listy else text
    if listy:
        return items if key == "epc_bits_list" else [float(x) for x in items]
    return items[0] if len(items) == 1 else items


def _cmd_figure(args) -> int:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set: expected KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = _parse_override_value(key.strip(), value)
    comments, fieldnames, rows = experiments.figure_dataset(
        args.id, overrides, trials=args.trials or 0, seed=args.seed or 0)
    experiments.write_csv(args.out or sys.stdout, comments, fieldnames, rows)
    return 0


def _check_mcrb_rows(rows, ask_zeroing: bool) -> None:
    lo, hi = (0.9, 1.15) if ask_zeroing else (1.8, 2.2)
    for row in rows:
        ratio = row["emp_var_hz2"] / row["mcrb_var_hz2"]
        if not lo <= ratio <= hi:
            raise CheckFailure(
                f"empirical/bound variance ratio {ratio:.4f} outside [{lo}, {hi}] "
                f"at row {row}")


def _cmd_simulate_mcrb(args) -> int:
    config = _build_config(args)
    if args.sweep:
        if "=" not in args.sweep:
            raise ConfigError("sweep: expected PARAM=V1,V2,... "
                              "(param ps_n0_dbhz or t0_s)")
        param, values = args.sweep.split("=", 1)
        config.sweep_param = param.strip()
        config.sweep_values = _float_list(values)
    comments, fieldnames, rows = experiments.run_mcrb_experiment(config)
    experiments.write_csv(args.out or sys.stdout, comments, fieldnames, rows)
    if args.check:
        _check_mcrb_rows(rows, config.ask_zeroing)
    return 0


def _check_detect_rows(rows) -> None:
    for row in rows:
        p = row["p_err_predicted"]
        n = 2 * row["trials"]
        halfwidth = 2.5758 * math.sqrt(p * (1.0 - p) / n)
        if abs(row["error_rate"] - p) > halfwidth:
            raise CheckFailure(
                f"error rate {row['error_rate']:.6g} outside the 99% interval "
                f"around {p:.6g} (halfwidth {halfwidth:.6g}) at v = {row['v_m_per_s']}")


def _cmd_simulate_detect(args) -> int:
    config = _build_config(args)
    comments, fieldnames, rows = experiments.run_detection_experiment(config)
    experiments.write_csv(args.out or sys.stdout, comments, fieldnames, rows)
    if args.check:
        _check_detect_rows(rows)
    return 0


def _cmd_noise_figure(args) -> int:
    report = experiments.noise_figure_report(
        p_s_dbm=args.p_s_dbm, ber=args.ber, blf_hz=args.blf_hz, m=args.m)
    lines = [f"{key} = {experiments._format_value(value)}"
             for key, value in report.items()]
    _print_lines(lines, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfid-doppler",
        description="Bounds and Monte Carlo verification for Doppler-based "
                    "motion detection in UHF-RFID readers.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("bounds", help="print every bound for one configuration")
    _add_output(sp); _add_scenario(sp); _add_link(sp)
    sp.add_argument("--v", type=float, help="tag speed in m/s")
    sp.set_defaults(func=_cmd_bounds)

    sp = sub.add_parser("vmin", help="print the minimum detectable tag speed")
    _add_output(sp); _add_scenario(sp); _add_link(sp)
    sp.set_defaults(func=_cmd_vmin)

    sp = sub.add_parser("figure", help="emit the dataset behind one figure")
    sp.add_argument("id", type=int, choices=(4, 5, 7, 8, 9, 10, 11))
    _add_output(sp)
    sp.add_argument("--trials", type=int, help="add Monte Carlo columns (figures 5 and 7)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override a dataset parameter (repeatable)")
    sp.set_defaults(func=_cmd_figure)

    sp = sub.add_parser("simulate-mcrb",
                        help="Monte Carlo check of the estimation variance bound")
    _add_output(sp); _add_scenario(sp); _add_link(sp); _add_simulation(sp)
    sp.add_argument("--sweep", metavar="PARAM=V1,V2,...",
                    help="sweep ps_n0_dbhz or t0_s over the given values")
    sp.add_argument("--check", action="store_true",
                    help="exit 3 unless the empirical variance matches the bound")
    sp.set_defaults(func=_cmd_simulate_mcrb)

    sp = sub.add_parser("simulate-detect",
                        help="Monte Carlo check of classification error rates")
    _add_output(sp); _add_scenario(sp); _add_link(sp); _add_simulation(sp)
    sp.add_argument("--v-grid", dest="v_grid", type=_float_list,
                    metavar="V1,V2,...", help="tag speeds to sweep")
    sp.add_argument("--estimator", dest="estimator_model",
                    choices=("gaussian", "baseband"))
    sp.add_argument("--sigma-sq", dest="sigma_sq_hz2", type=float,
                    help="pin the estimator variance in Hz^2")
    sp.add_argument("--check", action="store_true",
                    help="exit 3 unless error rates match the prediction")
    sp.set_defaults(func=_cmd_simulate_detect)

    sp = sub.add_parser("noise-figure",
                        help="back-solve N0 and NF from a sensitivity point")
    sp.add_argument("--p-s-dbm", dest="p_s_dbm", type=float, default=-95.8)
    sp.add_argument("--ber", type=float, default=1e-3)
    sp.add_argument("--blf", dest="blf_hz", type=float, default=160e3)
    sp.add_argument("--m", type=int, default=8)
    sp.add_argument("--out", metavar="FILE")
    sp.set_defaults(func=_cmd_noise_figure)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
