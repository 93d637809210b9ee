"""Cavity geometry and steady-state Airy response of ring/linear resonators."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.optimize import brentq

from ..errors import InvalidArgument, InvalidSpec, NotFeasible

logger = logging.getLogger(__name__)

MAX_COUPLER_T = 0.5
MIN_COUPLER_T = 1e-9


class Geometry(Enum):
    """Resonator topology."""

    RING = "ring"
    LINEAR = "linear"


@dataclass(frozen=True)
class CavitySpec:
    """Mirror and length description of a two-port resonator.

    The first mirror is the input coupler and the second the output coupler;
    any further mirrors and the excess loss are lumped into one dissipation
    factor per round trip.
    """

    geometry: Geometry
    round_trip_length_m: float
    mirror_transmissivities: tuple[float, ...]
    excess_loss: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        object.__setattr__(
            self, "mirror_transmissivities", tuple(self.mirror_transmissivities)
        )
        if self.round_trip_length_m <= 0:
            raise InvalidSpec(
                f"round_trip_length_m must be > 0, got {self.round_trip_length_m}."
            )
        if not self.mirror_transmissivities:
            raise InvalidSpec("A cavity needs at least one mirror.")
        if any(not 0.0 <= t <= 1.0 for t in self.mirror_transmissivities):
            raise InvalidSpec("Mirror transmissivities must lie in [0, 1].")
        if not 0.0 <= self.excess_loss < 1.0:
            raise InvalidSpec(
                f"excess_loss must lie in [0, 1), got {self.excess_loss}."
            )
        survival = self.round_trip_survival
        if not 0.0 < survival < 1.0:
            raise InvalidSpec(
                f"Round-trip power survival {survival} must lie in (0, 1); "
                "the cavity must be lossy but not opaque."
            )

    @property
    def round_trip_survival(self) -> float:
        """Fraction of circulating power left after one round trip."""
        return math.prod(1.0 - t for t in self.mirror_transmissivities) * (
            1.0 - self.excess_loss
        )

    @property
    def round_trip_gain(self) -> float:
        """Round-trip amplitude factor g."""
        return math.sqrt(self.round_trip_survival)

    @property
    def residual_amplitude(self) -> float:
        """Amplitude factor of everything except the two coupling mirrors."""
        rest = math.prod(1.0 - t for t in self.mirror_transmissivities[2:])
        return math.sqrt(rest * (1.0 - self.excess_loss))

    def to_dict(self) -> dict[str, Any]:
        """Convert the spec to a dictionary for serialization."""
        return {
            "geometry": self.geometry.value,
            "round_trip_length_m": self.round_trip_length_m,
            "mirror_transmissivities": list(self.mirror_transmissivities),
            "excess_loss": self.excess_loss,
        }


@dataclass(frozen=True)
class CavityResponse:
    """Complex field response at one detuning from the nearest resonance."""

    detuning_hz: float
    t_amplitude: complex
    r_amplitude: complex

    @property
    def transmission(self) -> float:
        """Power transmitted through the output coupler."""
        return abs(self.t_amplitude) ** 2

    @property
    def reflection(self) -> float:
        """Power reflected at the input coupler."""
        return abs(self.r_amplitude) ** 2

    @property
    def dissipated(self) -> float:
        """Power lost inside the cavity; zero for lossless mirrors."""
        return 1.0 - self.transmission - self.reflection


def linear_round_trip_length(
    air_gap_m: float, crystal_length_m: float, refractive_index: float
) -> float:
    """Optical round-trip path of a semi-monolithic linear cavity."""
    return 2.0 * (air_gap_m + refractive_index * crystal_length_m)


def fsr(spec: CavitySpec) -> float:
    """Free spectral range in Hz."""
    return SPEED_OF_LIGHT / spec.round_trip_length_m


def finesse(spec: CavitySpec) -> float:
    """Finesse pi sqrt(g) / (1 - g) from the round-trip amplitude gain g.

    Args:
        spec: Cavity description

    Returns:
        Ratio of free spectral range to linewidth

    Raises:
        InvalidSpec: If the round trip is lossless
    """
    g = spec.round_trip_gain
    if g >= 1.0:
        raise InvalidSpec("A lossless cavity has no finite finesse.")
    return math.pi * math.sqrt(g) / (1.0 - g)


def linewidth_fwhm(spec: CavitySpec) -> float:
    """Full width at half maximum of the resonance, in Hz."""
    return fsr(spec) / finesse(spec)


def fold_detuning(detuning_hz: float, fsr_hz: float) -> float:
    """Fold a detuning onto [-FSR/2, FSR/2) around the nearest resonance."""
    return float(np.mod(detuning_hz + 0.5 * fsr_hz, fsr_hz) - 0.5 * fsr_hz)


def _airy(spec: CavitySpec, phase: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t1, t2 = (math.sqrt(t) for t in spec.mirror_transmissivities[:2])
    r1 = math.sqrt(1.0 - spec.mirror_transmissivities[0])
    g = spec.round_trip_gain
    loop = g * np.exp(1j * phase)
    denominator = 1.0 - loop
    t = t1 * t2 * spec.residual_amplitude / denominator
    r = (r1 - loop / r1) / denominator
    return t, r


def _require_two_ports(spec: CavitySpec) -> None:
    if len(spec.mirror_transmissivities) < 2:
        raise InvalidSpec("A through-port response needs at least two mirrors.")


def response(spec: CavitySpec, detuning_hz: float) -> CavityResponse:
    """Complex transmission and input-coupler reflection at a detuning.

    Args:
        spec: Cavity description (at least two mirrors)
        detuning_hz: Offset from a resonance; folded by the FSR first

    Returns:
        Field amplitudes; the dissipated share closes the power balance
    """
    _require_two_ports(spec)
    folded = fold_detuning(detuning_hz, fsr(spec))
    t, r = _airy(spec, np.array(2.0 * math.pi * folded / fsr(spec)))
    return CavityResponse(
        detuning_hz=detuning_hz, t_amplitude=complex(t), r_amplitude=complex(r)
    )


def response_grid(
    spec: CavitySpec, detunings_hz: Sequence[float] | np.ndarray
) -> dict[str, np.ndarray]:
    """Vectorised power response over a detuning grid.

    Returns:
        Arrays keyed ``detuning_hz``, ``transmission``, ``reflection`` and
        ``dissipated``
    """
    _require_two_ports(spec)
    detunings = np.asarray(detunings_hz, dtype=float)
    free_range = fsr(spec)
    folded = np.mod(detunings + 0.5 * free_range, free_range) - 0.5 * free_range
    t, r = _airy(spec, 2.0 * np.pi * folded / free_range)
    transmission = np.abs(t) ** 2
    reflection = np.abs(r) ** 2
    return {
        "detuning_hz": detunings,
        "transmission": transmission,
        "reflection": reflection,
        "dissipated": 1.0 - transmission - reflection,
    }


def suppression(spec: CavitySpec, absolute_detuning_hz: float) -> float:
    """Power transmission of a mode offset by an absolute frequency."""
    return response(spec, absolute_detuning_hz).transmission


def measured_fwhm(spec: CavitySpec) -> float:
    """FWHM of the transmission peak found by root finding on the Airy curve."""
    peak = suppression(spec, 0.0)
    half_range = 0.5 * fsr(spec)
    if suppression(spec, half_range) >= 0.5 * peak:
        raise InvalidSpec("Resonance too broad: no half-maximum inside one FSR.")
    half_width = brentq(
        lambda d: suppression(spec, d) - 0.5 * peak, 0.0, half_range, xtol=1e-6
    )
    return 2.0 * half_width


def ring_from_linewidth(fsr_hz: float, linewidth_hz: float) -> CavitySpec:
    """Lossless symmetric two-mirror ring with the given FSR and linewidth."""
    if fsr_hz <= 0 or linewidth_hz <= 0 or linewidth_hz >= fsr_hz:
        raise InvalidArgument("Need 0 < linewidth < FSR.")
    target = fsr_hz / linewidth_hz
    root_g = (-math.pi + math.sqrt(math.pi**2 + 4.0 * target**2)) / (2.0 * target)
    coupler = 1.0 - root_g**2
    return CavitySpec(
        geometry=Geometry.RING,
        round_trip_length_m=SPEED_OF_LIGHT / fsr_hz,
        mirror_transmissivities=(coupler, coupler),
    )


def _symmetric_ring(fsr_hz: float, coupler_t: float, third_t: float) -> CavitySpec:
    return CavitySpec(
        geometry=Geometry.RING,
        round_trip_length_m=SPEED_OF_LIGHT / fsr_hz,
        mirror_transmissivities=(coupler_t, coupler_t, third_t),
    )


def design_coupler(
    fsr_hz: float,
    target_on_resonance_transmission: float,
    target_max_leakage: float,
    leakage_offset_hz: float,
    fixed_third_mirror_t: float,
) -> float:
    """Largest symmetric coupler transmissivity meeting both filter targets.

    On-resonance transmission and off-resonance leakage both grow with the
    coupler transmissivity, so the leakage bound fixes the upper end of the
    feasible interval and the transmission bound is checked there.

    Args:
        fsr_hz: Free spectral range of the ring
        target_on_resonance_transmission: Minimum |t(0)|^2
        target_max_leakage: Maximum |t|^2 at the leakage offset
        leakage_offset_hz: Offset of the mode that must be rejected
        fixed_third_mirror_t: Transmissivity of the third (loss) mirror

    Returns:
        Coupler power transmissivity in (0, 0.5]

    Raises:
        NotFeasible: If no coupler meets both targets
        InvalidArgument: If a target, the FSR or the offset is out of range
    """
    if fsr_hz <= 0:
        raise InvalidArgument("fsr_hz must be positive.")
    if not 0.0 < target_on_resonance_transmission < 1.0:
        raise InvalidArgument("target_on_resonance_transmission must lie in (0, 1).")
    if not 0.0 < target_max_leakage <= 1.0:
        raise InvalidArgument("target_max_leakage must lie in (0, 1].")
    if abs(fold_detuning(leakage_offset_hz, fsr_hz)) < 1e-9 * fsr_hz:
        raise InvalidArgument("leakage_offset_hz must not be a multiple of the FSR.")

    def transmission(t: float) -> float:
        return suppression(_symmetric_ring(fsr_hz, t, fixed_third_mirror_t), 0.0)

    def leakage(t: float) -> float:
        spec = _symmetric_ring(fsr_hz, t, fixed_third_mirror_t)
        return suppression(spec, leakage_offset_hz)

    if leakage(MAX_COUPLER_T) <= target_max_leakage:
        coupler = MAX_COUPLER_T
    elif leakage(MIN_COUPLER_T) > target_max_leakage:
        raise NotFeasible(
            "Leakage target unreachable even for a vanishing coupler.",
            best_transmission=transmission(MIN_COUPLER_T),
            best_leakage=leakage(MIN_COUPLER_T),
            coupler_t=MIN_COUPLER_T,
        )
    else:
        coupler = brentq(
            lambda t: leakage(t) - target_max_leakage,
            MIN_COUPLER_T,
            MAX_COUPLER_T,
            xtol=1e-12,
        )
        # stay on the feasible side of the bracket
        while leakage(coupler) > target_max_leakage:
            coupler -= 1e-12
    logger.debug(
        "design_coupler: T=%.6f transmission=%.6f leakage=%.3e",
        coupler,
        transmission(coupler),
        leakage(coupler),
    )
    if transmission(coupler) < target_on_resonance_transmission:
        raise NotFeasible(
            "Transmission target unreachable within the leakage bound.",
            best_transmission=transmission(coupler),
            best_leakage=leakage(coupler),
            coupler_t=coupler,
        )
    return coupler
