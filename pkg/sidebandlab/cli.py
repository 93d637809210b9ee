"""Command-line front end: tables on standard output, traces as CSV files.

Exit codes: 0 success, 1 config/IO/argument error, 2 infeasible design or
calibration, 3 separable Duan verdict.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import NoReturn

import numpy as np

from .config import DEFAULT_PRESET, RunConfig, load_config, load_preset
from .errors import (
    ConfigError,
    InvalidArgument,
    InvalidSpec,
    NoSolution,
    NotFeasible,
)
from .simulation import cavity as cv
from .simulation import gaussian as gs
from .simulation.chain import (
    TRACE_LABELS,
    TraceSet,
    baseband_traces,
    epr_state,
    epr_traces,
    leakage_report,
    loss_budget,
    total_efficiency,
)
from .simulation.opa import calibrate, pair_count, threshold_pump_power
from .simulation.synth import RecordSpec, noisy_trace, sa_estimate, synth_record

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_SEPARABLE = 3

CSV_HEADER = ["axis_value", *(f"trace_{label}_db" for label in TRACE_LABELS)]
GEOMETRY_HEADER = (
    f"{'cavity':<10} {'FSR [GHz]':>10} {'finesse':>9} {'FWHM [MHz]':>11} {'T(0)':>9}"
)


def _load(args: argparse.Namespace) -> RunConfig:
    if args.preset:
        return load_preset(args.preset)
    if args.config:
        return load_config(args.config)
    return load_preset(DEFAULT_PRESET)


def parse_band(text: str) -> np.ndarray:
    """Parse ``min:max:steps`` (or a single frequency) into a frequency grid."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        low, high, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidArgument(f"Band must read min:max:steps, got {text!r}.") from None
    if steps < 1 or low < 0 or high < low:
        raise InvalidArgument(f"Need 0 <= min <= max and steps >= 1, got {text!r}.")
    if steps == 1:
        return np.array([low])
    return np.linspace(low, high, steps)


def write_trace_csv(path: Path, traces: TraceSet) -> None:
    """Write one trace set; full float precision, one row per axis point."""
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for i, value in enumerate(traces.axis):
            writer.writerow(
                [repr(float(value))]
                + [repr(float(traces.traces[label][i])) for label in TRACE_LABELS]
            )


def _frequency_sweep(
    frequencies: np.ndarray, point: Callable[[float], TraceSet]
) -> TraceSet:
    rows = [point(float(f)) for f in frequencies]
    traces = {
        label: np.array([row.traces[label][0] for row in rows])
        for label in TRACE_LABELS
    }
    return TraceSet("frequency_hz", frequencies, traces, title=rows[0].title)


def _suffixed(out: Path, suffix: str) -> Path:
    return out.with_name(f"{out.stem}_{suffix}{out.suffix or '.csv'}")


def cmd_geometry(args: argparse.Namespace) -> int:
    config = _load(args)
    print(GEOMETRY_HEADER)
    for name, spec in config.cavities().items():
        print(
            f"{name:<10} {cv.fsr(spec) / 1e9:>10.4f} {cv.finesse(spec):>9.2f} "
            f"{cv.linewidth_fwhm(spec) / 1e6:>11.2f} "
            f"{cv.suppression(spec, 0.0):>9.6f}"
        )
    opa = config.opa
    spec = opa.to_spec()
    geometric = opa.geometric_fsr_hz
    print(f"opa comb spacing: {opa.fsr_hz / 1e9:.4f} GHz")
    if geometric is not None:
        print(
            f"opa geometric FSR: {geometric / 1e9:.4f} GHz "
            f"(n = {opa.refractive_index:.3f})"
        )
    print(f"opa linewidth: {spec.linewidth_fwhm_hz / 1e6:.2f} MHz")
    print(f"downconversion pairs: {pair_count(spec)}")
    return EXIT_OK


def cmd_spectra(args: argparse.Namespace) -> int:
    config = _load(args)
    chain = config.to_chain_config()
    if args.band is None:
        frequencies = np.array([config.detection.analysis_frequency_hz])
    else:
        frequencies = parse_band(args.band)
    if args.phase_points < 1:
        raise InvalidArgument("--phase-points must be >= 1.")
    half_pi = math.pi / 2

    if args.phase_points > 1:
        if len(frequencies) != 1:
            raise InvalidArgument("A phase scan needs a single-frequency band.")
        phases = np.linspace(0.0, math.pi, args.phase_points)
        freq = float(frequencies[0])
        baseband = baseband_traces(chain, freq, phases)
        epr = epr_traces(chain, freq, phases) if args.epr else None
        epr_sets = (epr.sum_traces, epr.diff_traces) if epr else None
    else:
        baseband = _frequency_sweep(
            frequencies, lambda f: baseband_traces(chain, f, [0.0])
        )
        epr_sets = None
        if args.epr:
            epr_sets = (
                _frequency_sweep(
                    frequencies, lambda f: epr_traces(chain, f, [0.0]).sum_traces
                ),
                _frequency_sweep(
                    frequencies,
                    lambda f: epr_traces(chain, f, [half_pi]).diff_traces,
                ),
            )

    outputs = [(Path(args.out), baseband)]
    if epr_sets:
        outputs.append((_suffixed(Path(args.out), "epr_sum"), epr_sets[0]))
        outputs.append((_suffixed(Path(args.out), "epr_diff"), epr_sets[1]))
    if args.synth:
        spec = config.synth.record_spec(seed=args.seed)
        outputs = [
            (path, noisy_trace(traces, spec, stream=stream))
            for stream, (path, traces) in enumerate(outputs)
        ]
    for path, traces in outputs:
        write_trace_csv(path, traces)
        print(f"{path}: trace II {traces.traces['II'][0]:.3f} dB")
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = _load(args)
    freq = (
        config.detection.analysis_frequency_hz if args.freq is None else args.freq
    )
    result = calibrate(args.squeezed_db, args.anti_db, freq, config.opa.decay_rate_hz)
    print(
        f"pump_ratio={result.pump_ratio:.6f} efficiency={result.efficiency:.6f} "
        f"residual_db={result.residual_db:.3f}"
    )
    if config.opa.pump_power_w and 0.0 < result.pump_ratio < 1.0:
        threshold = threshold_pump_power(config.opa.pump_power_w, result.pump_ratio)
        print(f"threshold_pump_power_w={threshold:.4f}")
    return EXIT_OK


def cmd_design(args: argparse.Namespace) -> int:
    config = _load(args)
    rfc1 = config.rfc1.to_spec()
    fsr_hz = cv.fsr(rfc1) if args.fsr is None else args.fsr
    offset = config.opa.fsr_hz if args.offset is None else args.offset
    if args.third_mirror is not None:
        third = args.third_mirror
    elif len(rfc1.mirror_transmissivities) > 2:
        third = rfc1.mirror_transmissivities[2]
    else:
        third = 0.0
    coupler = cv.design_coupler(
        fsr_hz, args.min_transmission, args.max_leakage, offset, third
    )
    ring = cv.CavitySpec(
        geometry=cv.Geometry.RING,
        round_trip_length_m=cv.SPEED_OF_LIGHT / fsr_hz,
        mirror_transmissivities=(coupler, coupler, third),
    )
    print(
        f"coupler_t={coupler:.6f} transmission={cv.suppression(ring, 0.0):.6f} "
        f"leakage={cv.suppression(ring, offset):.3e}"
    )
    return EXIT_OK


def cmd_duan(args: argparse.Namespace) -> int:
    config = _load(args)
    chain = config.to_chain_config()
    freq = (
        config.detection.analysis_frequency_hz if args.freq is None else args.freq
    )
    state = epr_state(chain, freq)
    result = gs.duan_sum(state, 0, 1)
    verdict = "inseparable" if result.inseparable else "separable"
    print(
        f"v_sum={result.v_sum:.3f} v_diff={result.v_diff:.3f} "
        f"total={result.total:.3f} bound={result.bound:g} "
        f"log_negativity={gs.log_negativity(state, 0, 1):.3f} {verdict}"
    )
    return EXIT_OK if result.inseparable else EXIT_SEPARABLE


def cmd_response(args: argparse.Namespace) -> int:
    config = _load(args)
    cavities = config.cavities()
    if args.cavity not in cavities:
        raise InvalidArgument(
            f"No cavity {args.cavity!r}; configured: {', '.join(cavities)}."
        )
    spec = cavities[args.cavity]
    span = cv.fsr(spec) if args.span is None else args.span
    if span <= 0:
        raise InvalidArgument("--span must be positive.")
    if args.points < 2:
        raise InvalidArgument("--points must be >= 2.")
    grid = cv.response_grid(spec, np.linspace(-span / 2, span / 2, args.points))
    columns = ["detuning_hz", "transmission", "reflection", "dissipated"]
    out = Path(args.out)
    with out.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in zip(*(grid[c] for c in columns), strict=True):
            writer.writerow([repr(float(v)) for v in row])
    print(f"{out}: {args.points} points over {span / 1e6:.3f} MHz")
    return EXIT_OK


def cmd_budget(args: argparse.Namespace) -> int:
    chain = _load(args).to_chain_config()
    print(f"{'path':<9} {'stage':<12} {'efficiency':>10}")
    rows = loss_budget(chain)
    for i, row in enumerate(rows):
        print(f"{row.path.value:<9} {row.stage:<12} {row.efficiency:>10.6f}")
        if i + 1 == len(rows) or rows[i + 1].path is not row.path:
            total = total_efficiency(chain, row.path)
            print(f"{row.path.value:<9} {'total':<12} {total:>10.6f}")
    return EXIT_OK


def cmd_leakage(args: argparse.Namespace) -> int:
    chain = _load(args).to_chain_config()
    print(f"{'cavity':<10} {'port':<12} {'mode':<8} {'fraction':>10}")
    for row in leakage_report(chain):
        print(f"{row.cavity:<10} {row.port:<12} {row.mode:<8} {row.fraction:>10.3e}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    synth = _load(args).synth
    spec = RecordSpec(
        variance=args.variance,
        n_samples=synth.n_samples if args.n_samples is None else args.n_samples,
        seed=synth.seed if args.seed is None else args.seed,
        rbw_hz=synth.rbw_hz if args.rbw is None else args.rbw,
        vbw_hz=synth.vbw_hz if args.vbw is None else args.vbw,
    )
    estimate = sa_estimate(synth_record(spec), spec.rbw_hz, spec.vbw_hz)
    print(
        f"db={estimate.db:.3f} stderr_db={estimate.stderr_db:.3f} "
        f"n_eff={estimate.n_eff} block_size={estimate.block_size}"
    )
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors share the config exit code."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sidebandlab",
        description="Squeezed baseband and EPR sideband chain simulator.",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity (default: WARNING)",
    )
    source = _Parser(add_help=False)
    group = source.add_mutually_exclusive_group()
    group.add_argument("--config", help="Path to a TOML run configuration")
    group.add_argument("--preset", help="Name of a bundled preset")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("geometry", parents=[source], help="Cavity FSR, finesse, FWHM")
    p.set_defaults(handler=cmd_geometry)

    p = sub.add_parser("spectra", parents=[source], help="Noise traces as CSV")
    p.add_argument("--band", help="min:max:steps in Hz (default: analysis freq)")
    p.add_argument("--phase-points", type=int, default=1)
    p.add_argument("--out", required=True, help="Baseband CSV path")
    p.add_argument("--epr", action="store_true", help="Also write EPR sum/diff CSVs")
    p.add_argument("--synth", action="store_true", help="Finite-statistics traces")
    p.add_argument("--seed", type=int, default=None, help="Seed for --synth")
    p.set_defaults(handler=cmd_spectra)

    p = sub.add_parser("calibrate", parents=[source], help="Fit (x, eta) to dB levels")
    p.add_argument("--squeezed-db", type=float, required=True)
    p.add_argument("--anti-db", type=float, required=True)
    p.add_argument("--freq", type=float, default=None)
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("design", parents=[source], help="Pick an RFC coupler")
    p.add_argument("--fsr", type=float, default=None)
    p.add_argument("--min-transmission", type=float, default=0.999)
    p.add_argument("--max-leakage", type=float, default=0.01)
    p.add_argument("--offset", type=float, default=None)
    p.add_argument("--third-mirror", type=float, default=None)
    p.set_defaults(handler=cmd_design)

    p = sub.add_parser("duan", parents=[source], help="Duan inseparability check")
    p.add_argument("--freq", type=float, default=None)
    p.set_defaults(handler=cmd_duan)

    p = sub.add_parser("response", parents=[source], help="Cavity response CSV")
    p.add_argument("--cavity", default="rfc1")
    p.add_argument("--span", type=float, default=None, help="Detuning span in Hz")
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_response)

    p = sub.add_parser("budget", parents=[source], help="Per-path loss budget")
    p.set_defaults(handler=cmd_budget)

    p = sub.add_parser("leakage", parents=[source], help="Wrong-mode leakage")
    p.set_defaults(handler=cmd_leakage)

    p = sub.add_parser("synth", parents=[source], help="One synthesized estimate")
    p.add_argument("--variance", type=float, default=1.0)
    p.add_argument("--n-samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--rbw", type=float, default=None)
    p.add_argument("--vbw", type=float, default=None)
    p.set_defaults(handler=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except NotFeasible as exc:
        print(
            f"not feasible: {exc} best coupler_t={exc.coupler_t:.6f} "
            f"transmission={exc.best_transmission:.6f} "
            f"leakage={exc.best_leakage:.3e}",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    except NoSolution as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvalidArgument, InvalidSpec) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_CONFIG
