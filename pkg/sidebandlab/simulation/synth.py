"""Finite-statistics homodyne records and a spectrum-analyzer power estimate.

Records are drawn from numpy's PCG64 generator seeded through a
``SeedSequence``; trace points use ``spawn_key=(stream, trace, point)`` so
every point owns an independent, reproducible stream.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from ..errors import InvalidArgument, InvalidSpec
from .chain import TraceSet
from .gaussian import VACUUM_VARIANCE

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "PCG64"
DB_FLOOR = -300.0
MAX_SEED = 2**64 - 1
N_EFF_MODEL = "floor(rbw/vbw)"


@dataclass(frozen=True)
class RecordSpec:
    """Target of one synthesized homodyne record.

    ``variance`` is SNL-normalized; the samples themselves are in quadrature
    units, so a variance of 1.0 draws with the vacuum variance 1/2.
    """

    variance: float
    n_samples: int
    seed: int
    rbw_hz: float = 300e3
    vbw_hz: float = 200.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.variance) or self.variance < 0:
            raise InvalidSpec(
                f"variance must be finite and >= 0, got {self.variance}."
            )
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise InvalidSpec(
                f"n_samples must be an integer >= 2, got {self.n_samples}."
            )
        if int(self.seed) != self.seed or not 0 <= self.seed <= MAX_SEED:
            raise InvalidSpec("seed must be an unsigned 64-bit integer.")
        if not self.rbw_hz > self.vbw_hz > 0:
            raise InvalidSpec("Need rbw_hz > vbw_hz > 0.")

    @property
    def n_eff(self) -> int:
        """Blocks averaged by the analyzer, floor(rbw / vbw)."""
        return averaging_count(self.rbw_hz, self.vbw_hz)


@dataclass(frozen=True)
class SaEstimate:
    """Noise power read off the analyzer, with its statistical uncertainty."""

    db: float
    stderr_db: float
    n_eff: int
    block_size: int
    mean_variance: float

    def to_dict(self) -> dict[str, Any]:
        """Serialize the estimate along with the N_eff model it assumes."""
        return {
            "db": self.db,
            "stderr_db": self.stderr_db,
            "n_eff": self.n_eff,
            "n_eff_model": N_EFF_MODEL,
            "block_size": self.block_size,
            "mean_variance": self.mean_variance,
        }


def averaging_count(rbw_hz: float, vbw_hz: float) -> int:
    """Number of independent power readings averaged by the video filter."""
    if not rbw_hz > vbw_hz > 0:
        raise InvalidArgument("Need rbw_hz > vbw_hz > 0.")
    return max(1, math.floor(rbw_hz / vbw_hz))


def generator(seed: int, spawn_key: Sequence[int] = ()) -> np.random.Generator:
    """PCG64 generator for a seed and an optional per-point spawn key."""
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.PCG64(sequence))


def synth_record(
    spec: RecordSpec, noiseless: bool = False, spawn_key: Sequence[int] = ()
) -> np.ndarray:
    """Draw a zero-mean Gaussian record with the requested variance.

    Args:
        spec: Target variance, length and seed
        noiseless: Return a block-wise constant record instead, so every
            analyzer block reads the target variance exactly
        spawn_key: Stream selector mixed into the seed

    Returns:
        Array of ``spec.n_samples`` quadrature samples
    """
    scale = math.sqrt(spec.variance * VACUUM_VARIANCE)
    if noiseless:
        block_size = spec.n_samples // min(spec.n_eff, spec.n_samples)
        return np.full(spec.n_samples, scale / math.sqrt(block_size))
    if spec.variance == 0:
        return np.zeros(spec.n_samples)
    rng = generator(spec.seed, spawn_key)
    return rng.normal(0.0, scale, spec.n_samples)


def sa_estimate(
    samples: Sequence[float] | np.ndarray,
    rbw_hz: float,
    vbw_hz: float,
    snl_variance: float = VACUUM_VARIANCE,
) -> SaEstimate:
    """Average block power estimates the way a video-filtered analyzer does.

    The record is cut into N_eff = floor(RBW/VBW) equal blocks (at least one
    sample each). Each block stands for one resolution-bandwidth sample and
    gives a single power reading, block_size * mean(block)**2, which is
    unbiased for a white zero-mean record. The N_eff readings are averaged,
    so the relative scatter is sqrt(2/N_eff) however long the record is.
    Samples that do not fill a whole block are dropped.

    Args:
        samples: Quadrature samples
        rbw_hz: Resolution bandwidth
        vbw_hz: Video bandwidth
        snl_variance: Quadrature variance of the shot-noise reference

    Returns:
        Estimate in dB relative to the SNL with its standard error

    Raises:
        InvalidArgument: If the record is empty or the reference is not positive
    """
    record = np.asarray(samples, dtype=float).ravel()
    if record.size == 0:
        raise InvalidArgument("Cannot estimate the power of an empty record.")
    if snl_variance <= 0:
        raise InvalidArgument("snl_variance must be positive.")
    n_eff = min(averaging_count(rbw_hz, vbw_hz), record.size)
    block_size = record.size // n_eff
    blocks = record[: n_eff * block_size].reshape(n_eff, block_size)
    readings = block_size * np.mean(blocks, axis=1) ** 2
    mean_variance = float(np.mean(readings))
    ratio = mean_variance / snl_variance
    db = 10.0 * math.log10(ratio) if ratio > 0 else DB_FLOOR
    stderr_db = 10.0 / math.log(10.0) * math.sqrt(2.0 / n_eff)
    return SaEstimate(
        db=max(db, DB_FLOOR),
        stderr_db=stderr_db,
        n_eff=n_eff,
        block_size=block_size,
        mean_variance=mean_variance,
    )


def noisy_trace(traces: TraceSet, spec: RecordSpec, stream: int = 0) -> TraceSet:
    """Replace every trace value by an analyzer estimate of a synthesized record.

    ``spec.variance`` is ignored; each point uses the variance of its own dB
    value and the spawn key ``(stream, trace index, point index)`` under
    ``spec.seed``. Give separate trace sets separate streams.
    """
    noisy = {}
    for trace_index, (label, values) in enumerate(traces.traces.items()):
        estimates = np.empty(len(values))
        for point_index, level_db in enumerate(np.asarray(values, dtype=float)):
            variance = 10.0 ** (level_db / 10.0) if np.isfinite(level_db) else 0.0
            record = synth_record(
                replace(spec, variance=variance),
                spawn_key=(stream, trace_index, point_index),
            )
            estimates[point_index] = sa_estimate(record, spec.rbw_hz, spec.vbw_hz).db
        noisy[label] = estimates
    logger.debug(
        "noisy_trace: %d traces x %d points, seed=%d n_eff=%d",
        len(noisy),
        len(traces.axis),
        spec.seed,
        spec.n_eff,
    )
    return TraceSet(
        traces.axis_name,
        traces.axis.copy(),
        noisy,
        title=f"{traces.title} (synthesized)".strip(),
    )
