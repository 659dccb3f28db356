import numpy as np
import pytest

from skfeedback.core.analysis import required_snr
from skfeedback.core.montecarlo import (
    BLOCK_TRIALS,
    RngSpec,
    audit_budget,
    audit_power,
    draw_block,
    estimate,
    variance_profile,
    verify_coupling,
)
from skfeedback.core.numerics import from_db, to_db
from skfeedback.core.pam import gamma0, pam_symbol_error_bound, pam_symbol_error_exact
from skfeedback.core.schemes import SchemeFactory
from skfeedback.core.system import SystemConfig, derive_params
from skfeedback.errors import CouplingViolation, UsageError
from skfeedback.utils import load_system_config


class TestRngSpec:
    def test_locate(self):
        rng = RngSpec(1)
        assert rng.locate(0) == (0, 0)
        assert rng.locate(5000) == (1, 5000 - BLOCK_TRIALS)

    def test_invalid_seed(self):
        with pytest.raises(UsageError):
            RngSpec(-1)
        with pytest.raises(UsageError):
            RngSpec(2 ** 64)

    def test_blocks_are_reproducible_and_distinct(self):
        cfg = load_system_config("desk-proposed")
        d = derive_params(cfg).d
        first = draw_block(RngSpec(9), 0, cfg, 16, d)
        again = draw_block(RngSpec(9), 0, cfg, 16, d)
        other = draw_block(RngSpec(9), 1, cfg, 16, d)
        assert np.array_equal(first.noise_fwd, again.noise_fwd)
        assert np.array_equal(first.dither, again.dither)
        assert not np.array_equal(first.noise_fwd, other.noise_fwd)
        assert first.w.shape == (BLOCK_TRIALS,)
        assert first.noise_fwd.shape == (BLOCK_TRIALS, cfg.N)
        assert first.noise_fb.shape == first.dither.shape == (BLOCK_TRIALS, cfg.N - 1)
        assert np.all(np.abs(first.dither) <= 0.5 * d)


class TestEstimate:
    def test_uncoded_symbol_error_rate(self):
        cfg = load_system_config("desk-uncoded")
        result = estimate("uncoded", cfg, 200_000, RngSpec(5))
        expected = pam_symbol_error_exact(cfg.snr, 1)
        assert expected == pytest.approx(0.005, rel=0.01)
        assert abs(result.ser - expected) <= 4.0 * result.ser_se
        assert result.ber == result.ser
        assert result.reliable
        low, high = result.ser_wilson
        assert low < result.ser < high
        assert result.first_aliasing_by_round == []

    def test_uncoded_four_level_rate_lies_between_exact_and_bound(self):
        cfg = SystemConfig.from_db(gamma0(1e-2) + to_db(15.0), None, N=1, rate_bits_per_use=2, pe_target=1e-2)
        result = estimate("uncoded", cfg, 200_000, RngSpec(6))
        bound = pam_symbol_error_bound(cfg.snr, 2)
        assert bound == pytest.approx(1e-2, rel=1e-9)
        se = result.ser_se
        assert 0.75 * bound - 3.0 * se <= result.ser <= bound + 3.0 * se

    def test_partial_block_uses_leading_rows(self):
        cfg = load_system_config("desk-coupling-aggressive")
        rng = RngSpec(17)
        trials = BLOCK_TRIALS + 10
        result = estimate("coupled", cfg, trials, rng)
        params = derive_params(cfg)
        runner = SchemeFactory.create("coupled", cfg=cfg, params=params)
        errors = 0
        for block, size in ((0, BLOCK_TRIALS), (1, 10)):
            draws = draw_block(rng, block, cfg, runner.constellation.levels, params.d)
            record = runner.run(draws.w[:size], draws.noise_fwd[:size], draws.noise_fb[:size])
            errors += int(record.decode_error.sum())
        assert result.trials == trials
        assert result.symbol_errors == errors

    def test_result_does_not_depend_on_workers(self):
        cfg = load_system_config("desk-proposed")
        serial = estimate("proposed", cfg, 3 * BLOCK_TRIALS + 123, RngSpec(23), workers=1)
        parallel = estimate("proposed", cfg, 3 * BLOCK_TRIALS + 123, RngSpec(23), workers=2)
        assert serial.to_dict() == parallel.to_dict()

    def test_seed_changes_the_run(self):
        cfg = load_system_config("desk-coupling-aggressive")
        a = estimate("proposed", cfg, 5000, RngSpec(1))
        b = estimate("proposed", cfg, 5000, RngSpec(2))
        assert a.aliasing_by_round != b.aliasing_by_round

    def test_invalid_requests(self):
        cfg = load_system_config("desk-proposed")
        with pytest.raises(UsageError):
            estimate("proposed", cfg, 0, RngSpec(1))
        with pytest.raises(UsageError):
            estimate("ldpc", cfg, 10, RngSpec(1))
        with pytest.raises(UsageError):
            estimate("sk", cfg, 10, RngSpec(1))
        with pytest.raises(UsageError):
            estimate("proposed", cfg, 10, RngSpec(1), workers=0)
        with pytest.raises(UsageError):
            verify_coupling(load_system_config("desk-coupled"), 10, RngSpec(1), workers=0)

    def test_to_dict(self):
        cfg = load_system_config("desk-proposed")
        data = estimate("proposed", cfg, 1000, RngSpec(4)).to_dict()
        for key in ("scheme", "trials", "ser", "ser_ci", "ber", "ber_ci", "ser_wilson", "reliable",
                    "aliasing_by_round", "first_aliasing_by_round", "mean_power_fwd", "mean_power_fb"):
            assert key in data
        assert len(data["aliasing_by_round"]) == cfg.N - 1
        assert len(data["mean_power_fwd"]) == cfg.N


class TestVarianceLaws:
    def test_noiseless_feedback(self):
        cfg = load_system_config("desk-sk")
        profile = variance_profile("sk", cfg, 100_000, RngSpec(41))
        snr = cfg.snr
        expected = 1.0 / (snr * (1.0 + snr) ** np.arange(cfg.N))
        variance = np.array(profile.variance)
        se = np.array(profile.standard_error)
        assert np.all(np.abs(variance - expected) <= 4.0 * se)

    def test_coupled_recursion(self):
        cfg = load_system_config("desk-coupled")
        profile = variance_profile("coupled", cfg, 100_000, RngSpec(42))
        expected = derive_params(cfg).sigma_n2
        variance = np.array(profile.variance)
        se = np.array(profile.standard_error)
        assert abs(variance[-1] - expected[-1]) <= 3.0 * se[-1]
        assert np.all(np.abs(variance - expected) <= 4.0 * se)

    def test_too_few_trials(self):
        with pytest.raises(UsageError):
            variance_profile("sk", load_system_config("desk-sk"), 3, RngSpec(1))


class TestCoupling:
    def test_no_violations_with_frequent_aliasing(self):
        cfg = load_system_config("desk-coupling-aggressive")
        report = verify_coupling(cfg, 10_000, RngSpec(3))
        assert report.violations == 0
        assert report.diagnostics == []
        assert len(report.first_aliasing_histogram) == cfg.N
        assert sum(report.first_aliasing_histogram) == 10_000
        assert report.first_aliasing_histogram[1] > 1000
        assert report.union_bound_holds
        report.raise_for_violations()

    def test_violation_is_raised_with_diagnostics(self):
        cfg = load_system_config("desk-coupled")
        report = verify_coupling(cfg, 100, RngSpec(3))
        report.violations = 1
        report.diagnostics = [{"trial": 7}]
        with pytest.raises(CouplingViolation) as excinfo:
            report.raise_for_violations()
        assert excinfo.value.diagnostics == [{"trial": 7}]


class TestAudits:
    def test_power_and_aliasing(self):
        cfg = load_system_config("desk-proposed")
        result = estimate("proposed", cfg, 100_000, RngSpec(51))
        audit = audit_power(result, cfg)
        assert all(abs(z) <= 4.0 for z in audit["feedback"])
        for mean, se in zip(result.mean_power_fwd, result.se_power_fwd):
            assert mean <= cfg.P * (1.0 + 1e-3) + 4.0 * se
        p_m = cfg.aliasing_budget
        se = np.sqrt(p_m * (1.0 - p_m) / result.trials)
        assert abs(result.aliasing_rate(1) - p_m) <= 4.0 * se
        assert abs(result.first_aliasing_by_round[0] / result.trials - p_m) <= 4.0 * se
        # one aliasing event disturbs the following rounds, so later rounds may see up to n p_m
        for n in range(2, cfg.N):
            assert result.aliasing_rate(n) <= n * p_m + 4.0 * se

    def test_coupled_aliasing_rate_per_round(self):
        cfg = load_system_config("desk-coupled")
        result = estimate("coupled", cfg, 100_000, RngSpec(52))
        p_m = cfg.aliasing_budget
        se = np.sqrt(p_m * (1.0 - p_m) / result.trials)
        for n in range(1, cfg.N):
            assert abs(result.aliasing_rate(n) - p_m) <= 4.0 * se

    def test_budget(self):
        cfg = load_system_config("desk-proposed")
        result = estimate("proposed", cfg, 100_000, RngSpec(53))
        audit = audit_budget(result, cfg)
        assert audit["within_budget"]
        assert audit["ser"] == result.ser
        assert set(audit) == {"ser", "budget", "ser_se", "within_budget", "reliable"}


def _operating_point(rounds):
    dsnr_db = 10.0
    snr_db = required_snr(1, 1e-2, rounds, from_db(dsnr_db))
    return SystemConfig.from_db(snr_db, dsnr_db, N=rounds, rate_bits_per_use=1, pe_target=1e-2)


@pytest.mark.slow
class TestAcceptanceRuns:
    @pytest.mark.parametrize("rounds", [2, 4, 6])
    def test_error_budget_soundness(self, rounds):
        cfg = _operating_point(rounds)
        result = estimate("proposed", cfg, 1_000_000, RngSpec(2024), workers=4)
        audit = audit_budget(result, cfg)
        assert audit["reliable"]
        assert audit["within_budget"]
        p_m = cfg.aliasing_budget
        se = np.sqrt(p_m * (1.0 - p_m) / result.trials)
        assert abs(result.aliasing_rate(1) - p_m) <= 3.0 * se
        assert all(abs(z) <= 4.0 for z in audit_power(result, cfg)["feedback"])
        for mean, se_fwd in zip(result.mean_power_fwd, result.se_power_fwd):
            assert mean <= cfg.P * (1.0 + 1e-3) + 3.0 * se_fwd

    def test_determinism_across_worker_pools(self):
        cfg = _operating_point(4)
        runs = [estimate("proposed", cfg, 1_000_000, RngSpec(2024), workers=w).to_dict() for w in (1, 4, 8)]
        assert runs[0] == runs[1] == runs[2]
