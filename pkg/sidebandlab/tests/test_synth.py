"""Tests for record synthesis and the analyzer power estimate."""

import math

import numpy as np
import pytest

from sidebandlab.errors import InvalidArgument, InvalidSpec
from sidebandlab.simulation import synth
from sidebandlab.simulation.chain import TraceSet

SQUEEZED_VARIANCE = 10**-1.02


def _spec(**kwargs) -> synth.RecordSpec:
    params = {"variance": 1.0, "n_samples": 150_000, "seed": 20240}
    params.update(kwargs)
    return synth.RecordSpec(**params)


class TestRecordSpec:
    """Test cases for RecordSpec validation."""

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"variance": -0.1},
            {"variance": math.inf},
            {"n_samples": 1},
            {"seed": -1},
            {"seed": 2**64},
            {"rbw_hz": 100.0, "vbw_hz": 200.0},
            {"vbw_hz": 0.0},
        ],
    )
    def test_rejects_invalid_specs(self, kwargs):
        """Test variance, length, seed and bandwidth validation."""
        with pytest.raises(InvalidSpec):
            _spec(**kwargs)

    def test_averaging_count(self):
        """Test N_eff = floor(RBW / VBW)."""
        assert _spec().n_eff == 1500
        assert synth.averaging_count(1000.0, 300.0) == 3
        with pytest.raises(InvalidArgument):
            synth.averaging_count(100.0, 100.0)


class TestSynthRecord:
    """Test cases for record synthesis."""

    def test_deterministic_for_seed(self):
        """Test that a seed fully determines the record."""
        first = synth.synth_record(_spec(n_samples=1000))
        second = synth.synth_record(_spec(n_samples=1000))
        np.testing.assert_array_equal(first, second)

    def test_spawn_keys_are_independent(self):
        """Test that different spawn keys give different records."""
        first = synth.synth_record(_spec(n_samples=1000), spawn_key=(0, 0, 0))
        second = synth.synth_record(_spec(n_samples=1000), spawn_key=(0, 0, 1))
        assert not np.array_equal(first, second)

    def test_minimum_length(self):
        """Test that two samples are enough for a record."""
        assert synth.synth_record(_spec(n_samples=2)).shape == (2,)

    def test_zero_variance(self):
        """Test that a zero target yields an all-zero record."""
        record = synth.synth_record(_spec(variance=0.0, n_samples=100))
        np.testing.assert_array_equal(record, 0.0)

    def test_large_record_variance(self):
        """Test the sample variance of a 10^6-sample record."""
        # Arrange
        spec = _spec(n_samples=1_000_000)

        # Act
        record = synth.synth_record(spec)

        # Assert
        assert np.mean(record**2) / 0.5 == pytest.approx(1.0, abs=0.005)

    def test_noiseless_estimate_is_exact(self):
        """Test that a noiseless record reads back its target exactly."""
        # Arrange
        spec = _spec(variance=SQUEEZED_VARIANCE, n_samples=3000)

        # Act
        record = synth.synth_record(spec, noiseless=True)
        estimate = synth.sa_estimate(record, spec.rbw_hz, spec.vbw_hz)

        # Assert
        assert estimate.mean_variance / 0.5 == pytest.approx(
            SQUEEZED_VARIANCE, abs=1e-12
        )
        assert estimate.db == pytest.approx(-10.2, abs=1e-9)


class TestSaEstimate:
    """Test cases for the video-filtered power estimate."""

    def test_squeezed_record(self):
        """Test a 10.2 dB squeezed record at 300 kHz RBW and 200 Hz VBW."""
        # Arrange
        spec = _spec(variance=SQUEEZED_VARIANCE, n_samples=1_500_000)

        # Act
        estimate = synth.sa_estimate(
            synth.synth_record(spec), spec.rbw_hz, spec.vbw_hz
        )

        # Assert
        assert estimate.db == pytest.approx(-10.2, abs=0.5)
        assert estimate.n_eff == 1500
        assert estimate.block_size == 1000
        assert estimate.to_dict()["n_eff_model"] == "floor(rbw/vbw)"

    def test_shot_noise_reads_zero(self):
        """Test that an SNL record reads 0 dB."""
        record = synth.synth_record(_spec())
        assert synth.sa_estimate(record, 300e3, 200.0).db == pytest.approx(
            0.0, abs=0.5
        )

    def test_two_seeds_within_standard_error(self):
        """Test that independent seeds differ but both sit near the target."""
        # Arrange
        records = [
            synth.synth_record(_spec(variance=SQUEEZED_VARIANCE, seed=seed))
            for seed in (1, 2)
        ]

        # Act
        estimates = [synth.sa_estimate(r, 300e3, 200.0) for r in records]

        # Assert
        assert estimates[0].db != estimates[1].db
        for estimate in estimates:
            assert abs(estimate.db + 10.2) < 4 * estimate.stderr_db

    def test_short_record_caps_block_count(self):
        """Test that N_eff never exceeds the number of samples."""
        estimate = synth.sa_estimate(np.ones(10), 300e3, 200.0)
        assert estimate.n_eff == 10
        assert estimate.block_size == 1
        assert estimate.db == pytest.approx(10 * math.log10(2.0))

    def test_zero_record_clamps(self):
        """Test that an all-zero record reads the floor, not -inf."""
        assert synth.sa_estimate(np.zeros(100), 300e3, 200.0).db == synth.DB_FLOOR

    def test_rejects_empty_record(self):
        """Test empty-record validation."""
        with pytest.raises(InvalidArgument):
            synth.sa_estimate(np.array([]), 300e3, 200.0)

    def test_rejects_nonpositive_reference(self):
        """Test reference variance validation."""
        with pytest.raises(InvalidArgument):
            synth.sa_estimate(np.ones(10), 300e3, 200.0, snl_variance=0.0)

    @pytest.mark.parametrize("n_eff", [10, 100, 1000])
    def test_scatter_matches_standard_error(self, n_eff):
        """Test the spread over 200 seeds of a fixed-length record."""
        # Arrange
        rbw = n_eff * 100.0
        specs = [
            _spec(n_samples=10_000, seed=seed, rbw_hz=rbw, vbw_hz=100.0)
            for seed in range(200)
        ]

        # Act
        estimates = [
            synth.sa_estimate(synth.synth_record(spec), rbw, 100.0) for spec in specs
        ]

        # Assert
        relative = [e.mean_variance / 0.5 for e in estimates]
        assert float(np.std(relative, ddof=1)) == pytest.approx(
            math.sqrt(2 / n_eff), rel=0.2
        )
        assert estimates[0].stderr_db == pytest.approx(
            10 / math.log(10) * math.sqrt(2 / n_eff)
        )

    def test_scatter_shrinks_with_averaging(self):
        """Test that the dB spread falls as 1/sqrt(N_eff) on one record length."""
        # Act
        spreads = {}
        for n_eff in (10, 1000):
            rbw = n_eff * 100.0
            readings = []
            for seed in range(200):
                spec = _spec(n_samples=10_000, seed=seed, rbw_hz=rbw, vbw_hz=100.0)
                record = synth.synth_record(spec)
                readings.append(synth.sa_estimate(record, rbw, 100.0).db)
            spreads[n_eff] = float(np.std(readings, ddof=1))

        # Assert
        assert spreads[10] / spreads[1000] == pytest.approx(10.0, rel=0.25)

    def test_preset_standard_error(self):
        """Test the quoted uncertainty at 300 kHz RBW and 200 Hz VBW."""
        estimate = synth.sa_estimate(np.ones(1_500_000), 300e3, 200.0)
        assert estimate.stderr_db == pytest.approx(0.16, abs=0.005)


class TestNoisyTrace:
    """Test cases for synthesizing analyzer traces."""

    @pytest.fixture
    def traces(self) -> TraceSet:
        axis = np.array([0.0, 1.0])
        return TraceSet(
            "phase_rad",
            axis,
            {
                "I": np.zeros(2),
                "II": np.full(2, -10.2),
                "V": np.full(2, -np.inf),
            },
            title="baseband squeezing",
        )

    def test_deterministic(self, traces):
        """Test that a seed reproduces the whole trace set."""
        first = synth.noisy_trace(traces, _spec())
        second = synth.noisy_trace(traces, _spec())
        for label in traces.traces:
            np.testing.assert_array_equal(first.traces[label], second.traces[label])
        assert first.title == "baseband squeezing (synthesized)"

    def test_zero_variance_reads_floor(self, traces):
        """Test that -inf dB levels come back as the floor."""
        noisy = synth.noisy_trace(traces, _spec())
        np.testing.assert_array_equal(noisy.traces["V"], synth.DB_FLOOR)

    def test_shot_noise_trace_is_centred(self, traces):
        """Test that trace I scatters around 0 dB."""
        noisy = synth.noisy_trace(traces, _spec())
        stderr = 10 / math.log(10) * math.sqrt(2 / 1500)
        assert np.all(np.abs(noisy.traces["I"]) < 5 * stderr)

    def test_mean_over_seeds(self, traces):
        """Test that 50 seeds average to the noiseless level."""
        # Act
        values = [
            synth.noisy_trace(traces, _spec(seed=seed)).traces["II"]
            for seed in range(50)
        ]

        # Assert
        assert float(np.mean(values)) == pytest.approx(-10.2, abs=0.05)

    def test_streams_are_independent(self, traces):
        """Test that separate streams give separate noise."""
        first = synth.noisy_trace(traces, _spec(), stream=0)
        second = synth.noisy_trace(traces, _spec(), stream=1)
        assert not np.array_equal(first.traces["II"], second.traces["II"])
