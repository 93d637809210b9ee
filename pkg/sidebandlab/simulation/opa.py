"""Below-threshold OPA: quadrature spectra, mode comb and sideband-pair states."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from scipy.optimize import brentq

from ..errors import InvalidArgument, InvalidSpec, NoSolution
from .gaussian import VACUUM_VARIANCE, GaussianState

logger = logging.getLogger(__name__)

EFFICIENCY_SLACK = 1e-9
# Pure states (eta = 1) give equal squeezing and anti-squeezing in dB.
PURE_STATE_MARGIN_DB = 1e-9


class Quadrature(Enum):
    """Which quadrature of the OPA output is read out."""

    SQUEEZED = "squeezed"
    ANTI_SQUEEZED = "anti_squeezed"


@dataclass(frozen=True)
class OpaSpec:
    """Spectral model parameters of the degenerate OPA.

    ``decay_rate_hz`` is the cavity decay rate gamma: the normalized analysis
    frequency is ``f / decay_rate_hz`` and the FWHM linewidth is gamma / pi.
    ``pump_ratio`` is x = sqrt(P / P_threshold).
    """

    fsr_hz: float
    decay_rate_hz: float
    pump_ratio: float
    escape_efficiency: float = 1.0
    phase_matching_bandwidth_hz: float = 2.0e12

    def __post_init__(self) -> None:
        if not 0.0 <= self.pump_ratio < 1.0:
            raise InvalidSpec(
                f"pump_ratio must lie in [0, 1) below threshold, got {self.pump_ratio}"
            )
        if not 0.0 <= self.escape_efficiency <= 1.0:
            raise InvalidSpec("escape_efficiency must lie in [0, 1].")
        if self.fsr_hz <= 0 or self.decay_rate_hz <= 0:
            raise InvalidSpec("fsr_hz and decay_rate_hz must be positive.")
        if self.phase_matching_bandwidth_hz <= self.fsr_hz:
            raise InvalidSpec("phase_matching_bandwidth_hz must exceed fsr_hz.")

    @property
    def linewidth_fwhm_hz(self) -> float:
        """Full width at half maximum, gamma / pi."""
        return self.decay_rate_hz / math.pi

    def to_dict(self) -> dict[str, Any]:
        """Convert the spec to a dictionary for serialization."""
        return {
            "fsr_hz": self.fsr_hz,
            "decay_rate_hz": self.decay_rate_hz,
            "pump_ratio": self.pump_ratio,
            "escape_efficiency": self.escape_efficiency,
            "phase_matching_bandwidth_hz": self.phase_matching_bandwidth_hz,
        }


@dataclass(frozen=True)
class SidebandPair:
    """Gaussian state of one comb line at a given analysis frequency."""

    comb_index: int
    analysis_frequency_hz: float
    state: GaussianState


@dataclass(frozen=True)
class Calibration:
    """Pump ratio and lumped efficiency reproducing a measured dB pair."""

    pump_ratio: float
    efficiency: float
    residual_db: float = 0.0


def _gain_terms(
    pump_ratio: float, analysis_frequency_hz: float, decay_rate_hz: float
) -> tuple[float, float]:
    w = (analysis_frequency_hz / decay_rate_hz) ** 2
    x = pump_ratio
    return 4.0 * x / ((1.0 + x) ** 2 + w), 4.0 * x / ((1.0 - x) ** 2 + w)


def quadrature_spectrum(
    spec: OpaSpec, analysis_frequency_hz: float, quadrature: Quadrature
) -> float:
    """SNL-normalized noise of the squeezed or anti-squeezed quadrature.

    Args:
        spec: OPA parameters
        analysis_frequency_hz: Sideband frequency within the OPA linewidth
        quadrature: Which quadrature to evaluate

    Returns:
        Variance relative to the shot-noise limit
    """
    if analysis_frequency_hz < 0:
        raise InvalidArgument("analysis_frequency_hz must be >= 0.")
    squeeze, anti = _gain_terms(
        spec.pump_ratio, analysis_frequency_hz, spec.decay_rate_hz
    )
    if Quadrature(quadrature) is Quadrature.SQUEEZED:
        return 1.0 - spec.escape_efficiency * squeeze
    return 1.0 + spec.escape_efficiency * anti


def spectra(spec: OpaSpec, analysis_frequency_hz: float) -> tuple[float, float]:
    """Return (squeezed, anti-squeezed) SNL-normalized variances."""
    return (
        quadrature_spectrum(spec, analysis_frequency_hz, Quadrature.SQUEEZED),
        quadrature_spectrum(spec, analysis_frequency_hz, Quadrature.ANTI_SQUEEZED),
    )


def calibrate(
    squeezed_db: float,
    anti_squeezed_db: float,
    analysis_frequency_hz: float,
    decay_rate_hz: float,
) -> Calibration:
    """Invert the spectrum model for (pump ratio, efficiency).

    Both spectra share the factor eta * 4x, so their ratio fixes x alone;
    x is bracketed on (0, 1) and eta follows from the squeezed equation.

    Args:
        squeezed_db: Squeezing in dB below the SNL (positive number)
        anti_squeezed_db: Anti-squeezing in dB above the SNL
        analysis_frequency_hz: Frequency at which both levels were read
        decay_rate_hz: OPA decay rate gamma

    Returns:
        Calibration with the forward-model residual in dB

    Raises:
        NoSolution: If the pair implies x >= 1 or eta >= 1; a pure state
            (anti-squeezing equal to squeezing in dB) is rejected
    """
    if squeezed_db == 0 and anti_squeezed_db == 0:
        return Calibration(pump_ratio=0.0, efficiency=1.0)
    if squeezed_db <= 0:
        raise NoSolution("Squeezing must be a positive number of dB below the SNL.")
    if anti_squeezed_db - squeezed_db < PURE_STATE_MARGIN_DB:
        raise NoSolution(
            "Anti-squeezing must exceed squeezing for any physical pump and loss."
        )

    s_sq = 10.0 ** (-squeezed_db / 10.0)
    s_anti = 10.0 ** (anti_squeezed_db / 10.0)
    deficit, excess = 1.0 - s_sq, s_anti - 1.0
    w = (analysis_frequency_hz / decay_rate_hz) ** 2

    def balance(x: float) -> float:
        return excess * ((1.0 - x) ** 2 + w) - deficit * ((1.0 + x) ** 2 + w)

    if balance(1.0) >= 0:
        raise NoSolution("The measured pair implies operation at or above threshold.")
    x = brentq(balance, 0.0, 1.0, xtol=1e-15, rtol=1e-15)
    eta = deficit * ((1.0 + x) ** 2 + w) / (4.0 * x)
    logger.debug("calibrate: x=%.6f eta=%.6f (w=%.3e)", x, eta, w)
    if eta > 1.0 + EFFICIENCY_SLACK:
        raise NoSolution(f"The measured pair implies an efficiency of {eta:.4f} > 1.")
    eta = min(eta, 1.0)

    squeeze, anti = _gain_terms(x, analysis_frequency_hz, decay_rate_hz)
    residual = max(
        abs(-10.0 * math.log10(1.0 - eta * squeeze) - squeezed_db),
        abs(10.0 * math.log10(1.0 + eta * anti) - anti_squeezed_db),
    )
    return Calibration(pump_ratio=x, efficiency=eta, residual_db=residual)


def pair_count(spec: OpaSpec) -> int:
    """Number of downconversion pairs inside the phase-matching bandwidth."""
    return math.floor(spec.phase_matching_bandwidth_hz / (2.0 * spec.fsr_hz))


def comb_frequencies(spec: OpaSpec, n_max: int) -> np.ndarray:
    """Offsets n * FSR from the baseband for n = -n_max ... n_max."""
    return spec.fsr_hz * np.arange(-n_max, n_max + 1)


def squeezing_parameter_to_pump(r: float) -> float:
    """Pump ratio whose ideal zero-frequency squeezing equals e^{-2r}."""
    if r < 0:
        raise InvalidArgument("Squeezing parameter must be >= 0.")
    return math.tanh(r / 2.0)


def threshold_pump_power(pump_power_w: float, pump_ratio: float) -> float:
    """Oscillation threshold implied by a pump power and pump ratio."""
    if not 0.0 < pump_ratio < 1.0:
        raise InvalidArgument("pump_ratio must lie in (0, 1).")
    return pump_power_w / pump_ratio**2


def baseband_state(spec: OpaSpec, analysis_frequency_hz: float) -> GaussianState:
    """Single-mode state of the baseband, squeezed along x."""
    s_sq, s_anti = spectra(spec, analysis_frequency_hz)
    cov = VACUUM_VARIANCE * np.diag([s_sq, s_anti])
    return GaussianState(cov, ("w0",))


def sideband_pair_state(
    spec: OpaSpec, comb_index: int, analysis_frequency_hz: float
) -> SidebandPair:
    """Two-mode state of the comb pair (w0 + n wf, w0 - n wf).

    The upper sideband is mode 0 and the lower sideband mode 1. Both marginals
    are thermal-like with equal x/y variance; the sum of amplitudes and the
    difference of phases carry the squeezed spectrum.
    """
    if comb_index < 1:
        raise InvalidArgument(
            "comb_index must be >= 1; use baseband_state for the baseband."
        )
    if not 0.0 <= analysis_frequency_hz < 0.5 * spec.fsr_hz:
        raise InvalidArgument("analysis_frequency_hz must lie in [0, FSR/2).")
    s_sq, s_anti = spectra(spec, analysis_frequency_hz)
    a = (s_sq + s_anti) / 4.0
    c = (s_sq - s_anti) / 4.0
    cov = np.array(
        [
            [a, 0.0, c, 0.0],
            [0.0, a, 0.0, -c],
            [c, 0.0, a, 0.0],
            [0.0, -c, 0.0, a],
        ]
    )
    state = GaussianState(cov, (f"w0+{comb_index}wf", f"w0-{comb_index}wf"))
    state.validate()
    return SidebandPair(
        comb_index=comb_index,
        analysis_frequency_hz=analysis_frequency_hz,
        state=state,
    )
