"""Run configuration: TOML sections validated into the chain's spec objects."""

from __future__ import annotations

import logging
import tomllib
from pathlib import Path
from typing import Annotated, Literal, Self

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import ConfigError, NoSolution
from .simulation.cavity import (
    CavitySpec,
    Geometry,
    linear_round_trip_length,
    ring_from_linewidth,
)
from .simulation.chain import ChainConfig, PathEfficiencies, calibrate_chain
from .simulation.opa import OpaSpec
from .simulation.synth import MAX_SEED, RecordSpec

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).parent / "presets"
DEFAULT_PRESET = "dual_rfc_setup"

Fraction = Annotated[float, Field(ge=0.0, le=1.0)]


class OpaSection(BaseModel):
    """OPA spectral model plus the optional cavity geometry it came from.

    ``fsr_hz`` is the comb spacing used by the chain. The geometry fields only
    feed the geometry report, which recomputes the FSR from the round trip.
    """

    model_config = ConfigDict(extra="forbid")

    fsr_hz: float = Field(
        default=3.328e9, gt=0, description="Comb spacing between sideband pairs"
    )
    decay_rate_hz: float = Field(gt=0, description="Cavity decay rate gamma")
    pump_ratio: float = Field(
        default=0.0, ge=0.0, lt=1.0, description="sqrt(P / P_threshold)"
    )
    escape_efficiency: float = Field(default=1.0, ge=0.0, le=1.0)
    phase_matching_bandwidth_hz: float = Field(default=2.0e12, gt=0)

    # Semi-monolithic geometry, reported only
    air_gap_m: float | None = Field(default=None, gt=0)
    crystal_length_m: float | None = Field(default=None, gt=0)
    refractive_index: float = Field(default=1.830, ge=1.0)
    coupler_transmissivity: float | None = Field(default=None, gt=0.0, lt=1.0)
    pump_power_w: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_geometry(self) -> Self:
        if (self.air_gap_m is None) != (self.crystal_length_m is None):
            raise ValueError("air_gap_m and crystal_length_m must be given together")
        self.to_spec()
        return self

    @property
    def geometric_fsr_hz(self) -> float | None:
        if self.air_gap_m is None or self.crystal_length_m is None:
            return None
        length = linear_round_trip_length(
            self.air_gap_m, self.crystal_length_m, self.refractive_index
        )
        return SPEED_OF_LIGHT / length

    def to_spec(self) -> OpaSpec:
        return OpaSpec(
            fsr_hz=self.fsr_hz,
            decay_rate_hz=self.decay_rate_hz,
            pump_ratio=self.pump_ratio,
            escape_efficiency=self.escape_efficiency,
            phase_matching_bandwidth_hz=self.phase_matching_bandwidth_hz,
        )


class CavitySection(BaseModel):
    """A filter cavity, either from mirrors and length or from FSR and linewidth."""

    model_config = ConfigDict(extra="forbid")

    geometry: Literal["ring", "linear"] = "ring"
    round_trip_length_m: float | None = Field(default=None, gt=0)
    mirror_transmissivities: list[Fraction] | None = None
    excess_loss: float = Field(default=0.0, ge=0.0, lt=1.0)
    fsr_hz: float | None = Field(default=None, gt=0)
    linewidth_hz: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_description(self) -> Self:
        by_mirrors = (
            self.round_trip_length_m is not None
            and self.mirror_transmissivities is not None
        )
        by_linewidth = self.fsr_hz is not None and self.linewidth_hz is not None
        if by_mirrors == by_linewidth:
            raise ValueError(
                "give either round_trip_length_m and mirror_transmissivities, "
                "or fsr_hz and linewidth_hz"
            )
        if by_mirrors and len(self.mirror_transmissivities or ()) < 2:
            raise ValueError("a filter cavity needs at least two mirrors")
        self.to_spec()
        return self

    def to_spec(self) -> CavitySpec:
        if self.fsr_hz is not None and self.linewidth_hz is not None:
            return ring_from_linewidth(self.fsr_hz, self.linewidth_hz)
        return CavitySpec(
            geometry=Geometry(self.geometry),
            round_trip_length_m=self.round_trip_length_m or 0.0,
            mirror_transmissivities=tuple(self.mirror_transmissivities or ()),
            excess_loss=self.excess_loss,
        )


class DetectionSection(BaseModel):
    """Path efficiencies, taps and detector noise of the three homodynes."""

    model_config = ConfigDict(extra="forbid")

    analysis_frequency_hz: float = Field(default=2.0e6, gt=0)
    baseband_efficiency: Fraction = 1.0
    upper_efficiency: Fraction = 1.0
    lower_efficiency: Fraction = 1.0
    electronic_noise_db: float | None = Field(
        default=None, lt=0, description="Dark noise relative to the SNL"
    )
    phase_noise_rms_rad: float = Field(default=0.0, ge=0.0)
    aux_coupler_efficiency: Fraction = 0.99
    lock_tap_efficiency: Fraction = 0.99
    ideal_filters: bool = False
    track_leakage: bool = False


class SynthSection(BaseModel):
    """Record length, seed and analyzer bandwidths for synthesized traces."""

    model_config = ConfigDict(extra="forbid")

    n_samples: int = Field(default=150_000, ge=2)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    rbw_hz: float = Field(default=300e3, gt=0, description="Resolution bandwidth")
    vbw_hz: float = Field(default=200.0, gt=0, description="Video bandwidth")

    @model_validator(mode="after")
    def _check_bandwidths(self) -> Self:
        if self.rbw_hz <= self.vbw_hz:
            raise ValueError("rbw_hz must exceed vbw_hz")
        return self

    def record_spec(
        self, variance: float = 1.0, seed: int | None = None
    ) -> RecordSpec:
        return RecordSpec(
            variance=variance,
            n_samples=self.n_samples,
            seed=self.seed if seed is None else seed,
            rbw_hz=self.rbw_hz,
            vbw_hz=self.vbw_hz,
        )


class CalibrationSection(BaseModel):
    """Observed noise levels the chain is fitted to, in dB magnitudes."""

    model_config = ConfigDict(extra="forbid")

    squeezed_db: float = Field(gt=0, description="Squeezing below the SNL")
    anti_squeezed_db: float = Field(gt=0, description="Anti-squeezing above the SNL")
    epr_db: float = Field(gt=0, description="Joint correlation below the SNL")
    analysis_frequency_hz: float | None = Field(default=None, gt=0)


class RunConfig(BaseModel):
    """A complete, validated run description."""

    model_config = ConfigDict(extra="forbid")

    opa: OpaSection
    rfc1: CavitySection
    rfc2: CavitySection
    omc_plus: CavitySection | None = None
    omc_minus: CavitySection | None = None
    detection: DetectionSection = Field(default_factory=DetectionSection)
    synth: SynthSection = Field(default_factory=SynthSection)
    calibration: CalibrationSection | None = None

    def cavities(self) -> dict[str, CavitySpec]:
        """Every configured filter cavity keyed by section name."""
        named = {
            "rfc1": self.rfc1,
            "rfc2": self.rfc2,
            "omc_plus": self.omc_plus,
            "omc_minus": self.omc_minus,
        }
        return {name: s.to_spec() for name, s in named.items() if s is not None}

    def to_chain_config(self) -> ChainConfig:
        """Build the chain, fitted to ``[calibration]`` when that section exists.

        Raises:
            NoSolution: If the calibration levels have no physical solution
        """
        detection = self.detection
        chain = ChainConfig(
            opa=self.opa.to_spec(),
            rfc1=self.rfc1.to_spec(),
            rfc2=self.rfc2.to_spec(),
            path_efficiencies=PathEfficiencies(
                baseband=detection.baseband_efficiency,
                upper=detection.upper_efficiency,
                lower=detection.lower_efficiency,
            ),
            electronic_noise_db=detection.electronic_noise_db,
            phase_noise_rms_rad=detection.phase_noise_rms_rad,
            aux_coupler_efficiency=detection.aux_coupler_efficiency,
            lock_tap_efficiency=detection.lock_tap_efficiency,
            omc_plus=self.omc_plus.to_spec() if self.omc_plus else None,
            omc_minus=self.omc_minus.to_spec() if self.omc_minus else None,
            ideal_filters=detection.ideal_filters,
            track_leakage=detection.track_leakage,
        )
        if self.calibration is None:
            return chain
        cal = self.calibration
        return calibrate_chain(
            chain,
            cal.squeezed_db,
            cal.anti_squeezed_db,
            cal.epr_db,
            cal.analysis_frequency_hz or detection.analysis_frequency_hz,
        )


def _problems(exc: ValidationError) -> list[str]:
    problems = []
    for error in exc.errors():
        location = ".".join(str(part) for part in error["loc"]) or "<root>"
        problems.append(f"{location}: {error['msg']}")
    return problems


def parse_config(data: dict, source: str = "<config>") -> RunConfig:
    """Validate already-parsed TOML data.

    Raises:
        ConfigError: With every field-qualified problem found
    """
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as exc:
        message = f"Invalid configuration in {source}:"
        raise ConfigError(message, _problems(exc)) from exc
    logger.debug("loaded %s (calibration=%s)", source, config.calibration is not None)
    return config


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a TOML run configuration.

    The chain is built once on load so a ``[calibration]`` section that has
    no physical solution fails here rather than mid-run.

    Raises:
        ConfigError: If the file is missing, not TOML, fails validation, or
            asks for calibration levels that cannot be met
    """
    path = Path(path)
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"Cannot read {path}: {exc.strerror or exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path} is not valid TOML: {exc}") from exc
    config = parse_config(data, source=str(path))
    try:
        config.to_chain_config()
    except NoSolution as exc:
        raise ConfigError(
            f"Invalid configuration in {path}:", [f"calibration: {exc}"]
        ) from exc
    return config


def preset_path(name: str) -> Path:
    """Path of a bundled preset by name (without the .toml suffix)."""
    path = PRESET_DIR / f"{name}.toml"
    if not path.is_file():
        available = ", ".join(preset_names())
        raise ConfigError(f"Unknown preset {name!r}; available: {available}")
    return path


def preset_names() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.toml"))


def load_preset(name: str = DEFAULT_PRESET) -> RunConfig:
    return load_config(preset_path(name))


# Default configuration instance
DEFAULT_CONFIG = load_preset()
