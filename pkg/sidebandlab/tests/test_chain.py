"""Tests for the OPA -> RFC1 -> RFC2 -> homodyne chain."""

import math
from dataclasses import replace

import numpy as np
import pytest

from sidebandlab.config import load_preset
from sidebandlab.errors import InvalidSpec, NoSolution
from sidebandlab.simulation import cavity as cv
from sidebandlab.simulation import chain as ch
from sidebandlab.simulation import gaussian as gs

FREQ = 2e6
ELECTRONIC_OFFSET_DB = 10 * math.log10(1 + 10**-2.52)


@pytest.fixture(scope="module")
def calibrated() -> ch.ChainConfig:
    """Chain fitted to 10.2 / 20.3 / 10.0 dB with a -25.2 dB dark floor."""
    return load_preset("dual_rfc_setup").to_chain_config()


@pytest.fixture
def unity(calibrated) -> ch.ChainConfig:
    """Lossless chain: perfect filters, taps and detectors."""
    return replace(
        calibrated,
        opa=replace(calibrated.opa, escape_efficiency=1.0),
        path_efficiencies=ch.PathEfficiencies(),
        aux_coupler_efficiency=1.0,
        lock_tap_efficiency=1.0,
        ideal_filters=True,
        electronic_noise_db=None,
    )


def _unpumped(config: ch.ChainConfig) -> ch.ChainConfig:
    return replace(config, opa=replace(config.opa, pump_ratio=0.0))


class TestChainConfig:
    """Test cases for ChainConfig and TraceSet validation."""

    def test_rejects_nonnegative_dark_noise(self, calibrated):
        """Test that the electronic floor must lie below the SNL."""
        with pytest.raises(InvalidSpec):
            replace(calibrated, electronic_noise_db=0.0)

    @pytest.mark.parametrize("value", [-0.1, 1.1])
    def test_rejects_path_efficiency(self, value):
        """Test path efficiency bounds."""
        with pytest.raises(InvalidSpec):
            ch.PathEfficiencies(upper=value)

    def test_trace_length_mismatch(self):
        """Test that every trace must match the axis."""
        with pytest.raises(InvalidSpec):
            ch.TraceSet("phase_rad", np.zeros(3), {"I": np.zeros(2)})

    def test_calibrated_paths_are_physical(self, calibrated):
        """Test that the fitted path efficiencies are valid fractions."""
        effs = calibrated.path_efficiencies
        for path in ch.Path:
            assert 0.9 < effs.of(path) <= 1.0


class TestBasebandTraces:
    """Test cases for the squeezing detector traces."""

    def test_reported_levels(self, calibrated):
        """Test traces II, IV and V at the 2 MHz analysis frequency."""
        # Act
        traces = ch.baseband_traces(calibrated, FREQ, [0.0]).traces

        # Assert
        assert traces["I"][0] == 0.0
        assert traces["II"][0] == pytest.approx(-10.2, abs=0.1)
        assert traces["IV"][0] == pytest.approx(20.3, abs=0.1)
        assert traces["V"][0] == pytest.approx(-25.2, abs=1e-12)

    def test_unpumped_reads_dark_noise_offset(self, calibrated):
        """Test that x = 0 leaves only the electronic-noise offset."""
        traces = ch.baseband_traces(_unpumped(calibrated), FREQ, [0.0, 1.0]).traces
        for label in ("II", "III", "IV"):
            np.testing.assert_allclose(traces[label], ELECTRONIC_OFFSET_DB, atol=1e-9)
        assert ELECTRONIC_OFFSET_DB == pytest.approx(0.013, abs=0.001)

    def test_scan_endpoints(self, calibrated):
        """Test that the phase scan hits traces II and IV at 0 and pi/2."""
        traces = ch.baseband_traces(calibrated, FREQ, [0.0, math.pi / 2]).traces
        assert traces["III"][0] == pytest.approx(traces["II"][0], abs=1e-12)
        assert traces["III"][1] == pytest.approx(traces["IV"][0], abs=1e-12)

    def test_dark_noise_hides_part_of_the_squeezing(self, calibrated):
        """Test the gap between observed and noise-free squeezing."""
        # Arrange
        clean = replace(calibrated, electronic_noise_db=None)

        # Act
        observed = ch.baseband_traces(calibrated, FREQ, [0.0]).traces["II"][0]
        true = ch.baseband_traces(clean, FREQ, [0.0]).traces["II"][0]

        # Assert
        assert true <= observed
        assert observed - true == pytest.approx(0.14, abs=0.03)

    def test_phase_noise_mixes_in_anti_squeezing(self, calibrated):
        """Test S(0) cos^2 + S(pi/2) sin^2 for a residual phase jitter."""
        # Arrange
        clean = replace(calibrated, electronic_noise_db=None)
        locked = ch.baseband_traces(clean, FREQ, [0.0]).traces
        sigma = 0.02

        # Act
        jittered = ch.baseband_traces(
            replace(clean, phase_noise_rms_rad=sigma), FREQ, [0.0]
        ).traces

        # Assert
        expected = math.cos(sigma) ** 2 * 10 ** (locked["II"][0] / 10) + math.sin(
            sigma
        ) ** 2 * 10 ** (locked["IV"][0] / 10)
        assert jittered["II"][0] == pytest.approx(
            10 * math.log10(expected), abs=1e-9
        )
        assert jittered["II"][0] > locked["II"][0]

    def test_monotone_degradation(self, calibrated):
        """Test that adding loss never deepens the squeezing."""
        levels = [
            ch.baseband_traces(
                replace(
                    calibrated,
                    path_efficiencies=ch.PathEfficiencies(baseband=eff),
                ),
                FREQ,
                [0.0],
            ).traces["II"][0]
            for eff in (1.0, 0.9, 0.7, 0.4, 0.0)
        ]
        assert all(a <= b + 1e-12 for a, b in zip(levels, levels[1:], strict=False))


class TestEprTraces:
    """Test cases for the sideband correlation traces."""

    def test_reported_correlations(self, calibrated):
        """Test sum/diff correlations and the Duan figure."""
        # Act
        epr = ch.epr_traces(calibrated, FREQ, [0.0, math.pi / 2])

        # Assert
        assert epr.sum_traces.traces["II"][0] == pytest.approx(-10.0, abs=0.1)
        assert epr.diff_traces.traces["II"][0] == pytest.approx(-10.0, abs=0.1)
        assert epr.duan.total == pytest.approx(0.20, abs=0.005)
        assert epr.duan.inseparable

    def test_single_arm_is_flat_and_high(self, calibrated):
        """Test that one sideband alone is phase-insensitive and noisy."""
        phases = np.linspace(0.0, math.pi, 13)
        epr = ch.epr_traces(calibrated, FREQ, phases)
        for traces in (epr.sum_traces, epr.diff_traces):
            single = traces.traces["IV"]
            assert np.ptp(single) < 0.01
            assert single.min() >= 15.0
            assert single[0] == pytest.approx(17.3, abs=0.3)

    def test_unpumped_is_separable(self, calibrated):
        """Test that vacuum input cannot pass the Duan test."""
        epr = ch.epr_traces(_unpumped(calibrated), FREQ, [0.0])
        assert epr.duan.total == pytest.approx(2 * (1 + 10**-2.52), abs=1e-9)
        assert not epr.duan.inseparable

    def test_traces_agree_with_duan_components(self, calibrated):
        """Test that trace II values are the duan_sum components."""
        epr = ch.epr_traces(calibrated, FREQ, [0.0])
        direct = gs.duan_sum(epr.state, 0, 1)
        assert 10 ** (epr.sum_traces.traces["II"][0] / 10) == pytest.approx(
            direct.v_sum, abs=1e-9
        )
        assert 10 ** (epr.diff_traces.traces["II"][0] / 10) == pytest.approx(
            direct.v_diff, abs=1e-9
        )

    def test_trace_one_is_zero(self, calibrated, unity):
        """Test that the SNL trace is identically 0 dB."""
        for config in (calibrated, unity, _unpumped(calibrated)):
            epr = ch.epr_traces(config, FREQ, [0.0, 1.0, 2.0])
            base = ch.baseband_traces(config, FREQ, [0.0, 1.0, 2.0])
            for traces in (epr.sum_traces, epr.diff_traces, base):
                np.testing.assert_array_equal(traces.traces["I"], 0.0)

    def test_duan_degrades_with_loss(self, calibrated):
        """Test that the Duan total never decreases as loss is added."""
        totals = [
            ch.epr_traces(
                replace(
                    calibrated,
                    path_efficiencies=ch.PathEfficiencies(upper=eff, lower=eff),
                ),
                FREQ,
                [0.0],
            ).duan.total
            for eff in (1.0, 0.8, 0.5, 0.2)
        ]
        assert all(a <= b + 1e-12 for a, b in zip(totals, totals[1:], strict=False))

    def test_explicit_leakage_modes_change_nothing(self, calibrated):
        """Test ancilla-tracked losses against lumped loss channels."""
        # Arrange
        rng = np.random.default_rng(2024)

        for _ in range(20):
            config = replace(
                calibrated,
                opa=replace(calibrated.opa, pump_ratio=rng.uniform(0.0, 0.95)),
                path_efficiencies=ch.PathEfficiencies(*rng.uniform(0.3, 1.0, 3)),
                phase_noise_rms_rad=rng.uniform(0.0, 0.05),
            )

            # Act
            lumped = ch.epr_state(config, FREQ)
            tracked = ch.epr_state(replace(config, track_leakage=True), FREQ)
            base_lumped = ch.baseband_traces(config, FREQ, [0.0, 1.0])
            base_tracked = ch.baseband_traces(
                replace(config, track_leakage=True), FREQ, [0.0, 1.0]
            )

            # Assert
            np.testing.assert_allclose(lumped.cov, tracked.cov, atol=1e-12)
            assert tracked.labels == lumped.labels
            for label in ch.TRACE_LABELS:
                np.testing.assert_allclose(
                    base_lumped.traces[label], base_tracked.traces[label], atol=1e-9
                )


class TestLossBudget:
    """Test cases for the per-path loss budget."""

    def test_filter_stages(self, calibrated):
        """Test RFC1 transmission and reflection efficiencies."""
        rows = {(r.path, r.stage): r.efficiency for r in ch.loss_budget(calibrated)}
        assert rows[(ch.Path.BASEBAND, "rfc1")] == pytest.approx(0.9996, abs=2e-4)
        assert rows[(ch.Path.UPPER, "rfc1")] == pytest.approx(0.993, abs=0.002)
        assert rows[(ch.Path.LOWER, "rfc1")] == pytest.approx(0.993, abs=0.002)
        assert rows[(ch.Path.UPPER, "aux_coupler")] == 0.99

    def test_product_equals_total(self, calibrated):
        """Test that the budget rows multiply to the path efficiency."""
        rows = ch.loss_budget(calibrated)
        for path in ch.Path:
            product = math.prod(r.efficiency for r in rows if r.path is path)
            assert product == pytest.approx(
                ch.total_efficiency(calibrated, path), abs=1e-12
            )

    def test_lossless_chain(self, unity):
        """Test that a lossless chain has unit efficiency everywhere."""
        rows = ch.loss_budget(unity)
        assert len(rows) == 18
        assert all(r.efficiency == 1.0 for r in rows)


class TestLeakageReport:
    """Test cases for wrong-frequency leakage."""

    def test_rfc1_first_sidebands(self, calibrated):
        """Test n = +/-1 leakage into the baseband port."""
        rows = {(r.cavity, r.mode): r.fraction for r in ch.leakage_report(calibrated)}
        assert rows[("rfc1", "n=+1")] == pytest.approx(7.0e-3, rel=0.05)
        assert rows[("rfc1", "n=-1")] == pytest.approx(7.0e-3, rel=0.05)

    def test_mode_cleaner_isolation(self, calibrated):
        """Test carrier leakage through both mode cleaners."""
        rows = {(r.cavity, r.mode): r.fraction for r in ch.leakage_report(calibrated)}
        assert rows[("omc_plus", "carrier")] <= 1e-5
        assert rows[("omc_minus", "carrier")] <= 1e-5

    def test_comb_on_rfc_resonance(self, calibrated):
        """Test that a comb spacing of whole RFC FSRs leaks like resonance."""
        # Arrange
        config = replace(
            calibrated,
            opa=replace(calibrated.opa, fsr_hz=2 * cv.fsr(calibrated.rfc1)),
        )

        # Act
        rows = {(r.cavity, r.mode): r.fraction for r in ch.leakage_report(config)}

        # Assert
        assert rows[("rfc1", "n=+1")] == pytest.approx(
            cv.suppression(config.rfc1, 0.0), abs=1e-12
        )

    def test_without_mode_cleaners(self, calibrated):
        """Test that absent OMCs produce no OMC rows."""
        config = replace(calibrated, omc_plus=None, omc_minus=None)
        cavities = {r.cavity for r in ch.leakage_report(config)}
        assert cavities == {"rfc1", "rfc2"}


class TestCalibrateChain:
    """Test cases for fitting the chain to observed levels."""

    def test_unreachable_correlation(self, calibrated):
        """Test that EPR levels beyond the source squeezing have no solution."""
        with pytest.raises(NoSolution):
            ch.calibrate_chain(calibrated, 10.2, 20.3, 14.0, FREQ)

    def test_level_below_dark_noise(self, calibrated):
        """Test that squeezing below the electronic floor has no solution."""
        with pytest.raises(NoSolution):
            ch.calibrate_chain(calibrated, 26.0, 30.0, 10.0, FREQ)

    def test_recalibration_is_stable(self, calibrated):
        """Test that refitting a fitted chain returns the same chain."""
        again = ch.calibrate_chain(calibrated, 10.2, 20.3, 10.0, FREQ)
        assert again.opa.pump_ratio == pytest.approx(calibrated.opa.pump_ratio)
        assert again.path_efficiencies.upper == pytest.approx(
            calibrated.path_efficiencies.upper
        )
