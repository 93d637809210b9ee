"""The full generation chain: OPA -> RFC1 -> RFC2 -> three homodyne detectors.

RFC1 transmits the baseband to the squeezing detector and reflects the first
sideband pair; RFC2, resonant with the upper sideband, transmits it to one
detector and reflects the lower sideband to the other.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np

from ..errors import InvalidSpec, NoSolution
from . import gaussian as gs
from .cavity import CavitySpec, response, suppression
from .opa import (
    OpaSpec,
    Quadrature,
    baseband_state,
    calibrate,
    quadrature_spectrum,
    sideband_pair_state,
)

logger = logging.getLogger(__name__)

TRACE_LABELS = ("I", "II", "III", "IV", "V")


class Path(Enum):
    """Detection paths of the chain."""

    BASEBAND = "baseband"
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class PathEfficiencies:
    """Lumped propagation x visibility^2 x quantum efficiency per path."""

    baseband: float = 1.0
    upper: float = 1.0
    lower: float = 1.0

    def __post_init__(self) -> None:
        for name in ("baseband", "upper", "lower"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidSpec(f"path efficiency {name}={value} outside [0, 1].")

    def of(self, path: Path) -> float:
        return getattr(self, path.value)


@dataclass(frozen=True)
class ChainConfig:
    """Everything the chain evaluation needs.

    ``electronic_noise_db`` is the dark-noise level of each detector relative
    to its SNL; ``None`` switches detector noise off. ``ideal_filters`` turns
    both RFCs into perfect frequency-dependent beam splitters.
    ``track_leakage`` routes every loss stage through an explicit vacuum
    ancilla instead of the lumped loss channel.
    """

    opa: OpaSpec
    rfc1: CavitySpec
    rfc2: CavitySpec
    path_efficiencies: PathEfficiencies = field(default_factory=PathEfficiencies)
    electronic_noise_db: float | None = None
    phase_noise_rms_rad: float = 0.0
    aux_coupler_efficiency: float = 0.99
    lock_tap_efficiency: float = 0.99
    omc_plus: CavitySpec | None = None
    omc_minus: CavitySpec | None = None
    ideal_filters: bool = False
    track_leakage: bool = False

    def __post_init__(self) -> None:
        if self.electronic_noise_db is not None and self.electronic_noise_db >= 0:
            raise InvalidSpec("electronic_noise_db must be negative (below the SNL).")
        if self.phase_noise_rms_rad < 0:
            raise InvalidSpec("phase_noise_rms_rad must be >= 0.")
        for name in ("aux_coupler_efficiency", "lock_tap_efficiency"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidSpec(f"{name} must lie in [0, 1].")

    @property
    def electronic_variance(self) -> float:
        """Detector dark noise as an SNL-normalized variance."""
        if self.electronic_noise_db is None:
            return 0.0
        return 10.0 ** (self.electronic_noise_db / 10.0)


def _json_levels(values: np.ndarray) -> list[float | None]:
    return [float(v) if np.isfinite(v) else None for v in values]


@dataclass(frozen=True)
class TraceSet:
    """Noise traces in dB relative to the SNL over a shared axis."""

    axis_name: str
    axis: np.ndarray
    traces: dict[str, np.ndarray]
    title: str = ""

    def __post_init__(self) -> None:
        for label, values in self.traces.items():
            if len(values) != len(self.axis):
                raise InvalidSpec(f"trace {label} does not match the axis length.")

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready form; a zero-variance level (-inf dB) becomes None."""
        return {
            "title": self.title,
            "axis_name": self.axis_name,
            "axis": self.axis.tolist(),
            "traces": {k: _json_levels(v) for k, v in self.traces.items()},
        }


@dataclass(frozen=True)
class EprTraces:
    """Amplitude-sum and phase-difference trace sets with the Duan figure."""

    sum_traces: TraceSet
    diff_traces: TraceSet
    duan: gs.DuanResult
    state: gs.GaussianState


@dataclass(frozen=True)
class BudgetRow:
    """One stage efficiency along a detection path."""

    path: Path
    stage: str
    efficiency: float

    def to_dict(self) -> dict[str, Any]:
        """Convert the row to a dictionary with the path as its value."""
        return {
            "path": self.path.value,
            "stage": self.stage,
            "efficiency": self.efficiency,
        }


@dataclass(frozen=True)
class LeakageRow:
    """Power fraction of one comb mode leaving one cavity port."""

    cavity: str
    port: str
    mode: str
    fraction: float

    def to_dict(self) -> dict[str, Any]:
        """Convert the row to a dictionary for serialization."""
        return {
            "cavity": self.cavity,
            "port": self.port,
            "mode": self.mode,
            "fraction": self.fraction,
        }


def to_db(variance: float | np.ndarray) -> float | np.ndarray:
    """Convert an SNL-normalized variance to dB."""
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(variance)


def _filter_stages(config: ChainConfig, path: Path) -> list[tuple[str, float]]:
    if config.ideal_filters:
        return [("rfc1", 1.0), ("rfc2", 1.0)]
    wf = config.opa.fsr_hz
    if path is Path.BASEBAND:
        return [("rfc1", response(config.rfc1, 0.0).transmission), ("rfc2", 1.0)]
    sign = 1.0 if path is Path.UPPER else -1.0
    rfc1 = response(config.rfc1, sign * wf).reflection
    if path is Path.UPPER:
        rfc2 = response(config.rfc2, 0.0).transmission
    else:
        rfc2 = response(config.rfc2, -2.0 * wf).reflection
    return [("rfc1", rfc1), ("rfc2", rfc2)]


def _post_opa_stages(config: ChainConfig, path: Path) -> list[tuple[str, float]]:
    return [
        ("aux_coupler", config.aux_coupler_efficiency),
        *_filter_stages(config, path),
        ("lock_tap", config.lock_tap_efficiency),
        ("path", config.path_efficiencies.of(path)),
    ]


def loss_budget(config: ChainConfig) -> list[BudgetRow]:
    """Per-path, per-stage power efficiencies of the chain."""
    rows = []
    for path in Path:
        rows.append(BudgetRow(path, "opa_escape", config.opa.escape_efficiency))
        rows.extend(
            BudgetRow(path, stage, eff)
            for stage, eff in _post_opa_stages(config, path)
        )
    return rows


def total_efficiency(config: ChainConfig, path: Path) -> float:
    """Product of every stage efficiency on a path, OPA escape included."""
    return config.opa.escape_efficiency * math.prod(
        eff for _, eff in _post_opa_stages(config, path)
    )


def _apply_losses(
    config: ChainConfig, state: gs.GaussianState, paths: Sequence[Path]
) -> gs.GaussianState:
    n_signal = state.n_modes
    for mode, path in enumerate(paths):
        for stage, eff in _post_opa_stages(config, path):
            if config.track_leakage:
                state = gs.append_vacuum(state, f"{stage}:{path.value}")
                state = gs.beamsplitter(state, mode, state.n_modes - 1, eff)
            else:
                state = gs.loss_channel(state, mode, eff)
    if config.track_leakage:
        state = gs.reduce(state, range(n_signal))
    return state


def _detect(
    config: ChainConfig, state: gs.GaussianState, modes: Sequence[int]
) -> gs.GaussianState:
    state = gs.phase_jitter(state, modes, config.phase_noise_rms_rad)
    for mode in modes:
        state = gs.additive_noise(state, mode, config.electronic_variance)
    return state


def _constant(value: float, size: int) -> np.ndarray:
    return np.full(size, value, dtype=float)


def baseband_traces(
    config: ChainConfig, analysis_frequency_hz: float, phase_grid: Sequence[float]
) -> TraceSet:
    """Squeezing traces of the baseband detector.

    Args:
        config: Chain description
        analysis_frequency_hz: Frequency read by the spectrum analyzer
        phase_grid: Local oscillator phases of the scanned trace

    Returns:
        Traces I (SNL), II (phase 0), III (scan), IV (phase pi/2), V (dark noise)
    """
    phases = np.asarray(phase_grid, dtype=float)
    state = baseband_state(config.opa, analysis_frequency_hz)
    state = _detect(config, _apply_losses(config, state, [Path.BASEBAND]), [0])
    n = len(phases)
    traces = {
        "I": np.zeros(n),
        "II": _constant(to_db(gs.homodyne_variance(state, 0, 0.0)), n),
        "III": to_db(np.array([gs.homodyne_variance(state, 0, p) for p in phases])),
        "IV": _constant(to_db(gs.homodyne_variance(state, 0, math.pi / 2)), n),
        "V": _constant(to_db(config.electronic_variance), n),
    }
    logger.debug(
        "baseband at %.3g Hz: II=%.3f dB IV=%.3f dB",
        analysis_frequency_hz,
        traces["II"][0] if n else float("nan"),
        traces["IV"][0] if n else float("nan"),
    )
    return TraceSet("phase_rad", phases, traces, title="baseband squeezing")


def epr_state(config: ChainConfig, analysis_frequency_hz: float) -> gs.GaussianState:
    """Detected state of the first sideband pair (mode 0 upper, mode 1 lower)."""
    pair = sideband_pair_state(config.opa, 1, analysis_frequency_hz).state
    state = _apply_losses(config, pair, [Path.UPPER, Path.LOWER])
    return _detect(config, state, [0, 1])


def epr_traces(
    config: ChainConfig, analysis_frequency_hz: float, phase_grid: Sequence[float]
) -> EprTraces:
    """Correlation traces of the sideband pair and its Duan figure.

    The amplitude-sum set locks the upper detector at phase 0 and scans the
    lower one; the phase-difference set does the same around pi/2.
    """
    phases = np.asarray(phase_grid, dtype=float)
    state = epr_state(config, analysis_frequency_hz)
    n = len(phases)
    floor = _constant(to_db(config.electronic_variance), n)
    half_pi = math.pi / 2

    def joint(theta_a: float, theta_b: float, sign: int) -> float:
        return gs.joint_quadrature_variance(state, 0, 1, theta_a, theta_b, sign)

    sum_traces = TraceSet(
        "phase_rad",
        phases,
        {
            "I": np.zeros(n),
            "II": _constant(to_db(joint(0.0, 0.0, +1)), n),
            "III": to_db(np.array([joint(0.0, p, +1) for p in phases])),
            "IV": to_db(np.array([gs.homodyne_variance(state, 0, p) for p in phases])),
            "V": floor,
        },
        title="amplitude sum",
    )
    diff_traces = TraceSet(
        "phase_rad",
        phases,
        {
            "I": np.zeros(n),
            "II": _constant(to_db(joint(half_pi, half_pi, -1)), n),
            "III": to_db(np.array([joint(half_pi, p, -1) for p in phases])),
            "IV": to_db(np.array([gs.homodyne_variance(state, 1, p) for p in phases])),
            "V": floor,
        },
        title="phase difference",
    )
    duan = gs.duan_sum(state, 0, 1)
    logger.debug("epr at %.3g Hz: duan total %.4f", analysis_frequency_hz, duan.total)
    return EprTraces(sum_traces, diff_traces, duan, state)


def leakage_report(config: ChainConfig) -> list[LeakageRow]:
    """Power fraction of each wrong-frequency mode leaving each used port."""
    wf = config.opa.fsr_hz
    rfc1, rfc2 = config.rfc1, config.rfc2
    rows = [
        LeakageRow("rfc1", "transmitted", "n=+1", suppression(rfc1, wf)),
        LeakageRow("rfc1", "transmitted", "n=-1", suppression(rfc1, -wf)),
        LeakageRow(
            "rfc2",
            "transmitted",
            "n=0",
            response(rfc1, 0.0).reflection * suppression(rfc2, -wf),
        ),
        LeakageRow(
            "rfc2",
            "transmitted",
            "n=-1",
            response(rfc1, -wf).reflection * suppression(rfc2, -2 * wf),
        ),
        LeakageRow(
            "rfc2",
            "reflected",
            "n=+1",
            response(rfc1, wf).reflection * response(rfc2, 0.0).reflection,
        ),
    ]
    for name, omc, sign in (
        ("omc_plus", config.omc_plus, 1.0),
        ("omc_minus", config.omc_minus, -1.0),
    ):
        if omc is None:
            continue
        far = "n=-1" if sign > 0 else "n=+1"
        rows.append(
            LeakageRow(name, "transmitted", "carrier", suppression(omc, -sign * wf))
        )
        rows.append(
            LeakageRow(name, "transmitted", far, suppression(omc, -2 * sign * wf))
        )
    return rows


def calibrate_chain(
    config: ChainConfig,
    squeezed_db: float,
    anti_squeezed_db: float,
    epr_db: float,
    analysis_frequency_hz: float,
) -> ChainConfig:
    """Fit pump ratio and path efficiencies to observed noise levels.

    The observed levels include detector dark noise; it is subtracted before
    the OPA model is inverted. The baseband path efficiency absorbs whatever
    the calibrated total efficiency leaves after the fixed stages, and both
    sideband paths are set to a common total efficiency that makes the joint
    variances hit ``epr_db`` below the SNL.

    Raises:
        NoSolution: If a level sits below the dark noise or a path would need
            an efficiency above one
    """
    if config.phase_noise_rms_rad:
        logger.warning("calibrate_chain assumes locked phases; phase noise ignored")
    dark = config.electronic_variance

    def subtract(level_db: float) -> float:
        true_variance = 10.0 ** (level_db / 10.0) - dark
        if true_variance <= 0:
            raise NoSolution(
                f"{level_db} dB lies at or below the detector dark noise."
            )
        return 10.0 * math.log10(true_variance)

    cal = calibrate(
        -subtract(-squeezed_db),
        subtract(anti_squeezed_db),
        analysis_frequency_hz,
        config.opa.decay_rate_hz,
    )
    opa = replace(config.opa, pump_ratio=cal.pump_ratio)
    unit_paths = replace(config, opa=opa, path_efficiencies=PathEfficiencies())

    def path_share(path: Path, post_opa_total: float) -> float:
        fixed = math.prod(eff for _, eff in _post_opa_stages(unit_paths, path))
        if fixed <= 0:
            raise NoSolution(f"{path.value} path has a zero-efficiency stage.")
        share = post_opa_total / fixed
        if not 0.0 <= share <= 1.0:
            raise NoSolution(
                f"{path.value} path would need efficiency {share:.4f} outside [0, 1]."
            )
        return share

    if opa.escape_efficiency <= 0:
        raise NoSolution("OPA escape efficiency is zero.")
    baseband = path_share(Path.BASEBAND, cal.efficiency / opa.escape_efficiency)

    source_sq = quadrature_spectrum(opa, analysis_frequency_hz, Quadrature.SQUEEZED)
    joint_target = 10.0 ** (subtract(-epr_db) / 10.0)
    if source_sq >= 1.0:
        raise NoSolution("The calibrated source carries no squeezing.")
    sideband_total = (1.0 - joint_target) / (1.0 - source_sq)
    upper = path_share(Path.UPPER, sideband_total)
    lower = path_share(Path.LOWER, sideband_total)
    logger.info(
        "calibrated chain: x=%.4f eta=%.4f paths=(%.4f, %.4f, %.4f)",
        cal.pump_ratio,
        cal.efficiency,
        baseband,
        upper,
        lower,
    )
    return replace(
        config,
        opa=opa,
        path_efficiencies=PathEfficiencies(
            baseband=baseband, upper=upper, lower=lower
        ),
    )
