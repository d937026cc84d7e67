"""Acceptance suite for the end-to-end behaviour of the simulator.

One test per criterion, each asserting its stated tolerance and printing a
single summary line (visible with pytest -s or in the captured output).
Criteria that compare Monte Carlo estimates use 3-sigma binomial margins.
All runs are deterministic under MASTER_SEED.
"""

import time

import numpy as np
import pytest

import gsksim as g
from gsksim.cli import main as cli_main
from gsksim.experiment import derive_trial_seed

MASTER_SEED = 20250808


def note(criterion: str, detail: str) -> None:
    print(f"[PASS] {criterion}: {detail}")


def honest_config(detector="both", **overrides):
    defaults = dict(
        attack=g.AttackSpec(kind="none"),
        detector=detector,
        L_grid=(200,),
        eta_db_grid=(-40.0,),
        n_trials=1,
        master_seed=MASTER_SEED,
    )
    defaults.update(overrides)
    return g.ExperimentConfig(**defaults)


def run_trials(config, L, eta_db, attacked, n):
    eta = g.eta_from_db(eta_db)
    return [
        g.run_trial(config, L, eta, attacked,
                    derive_trial_seed(config.master_seed, L, eta_db, attacked, i))
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# 1. Noiseless protocol consistency
# ---------------------------------------------------------------------------

def test_noiseless_protocol_consistency():
    start = time.perf_counter()
    trace = g.generate_trace(0.98, 1000, seed=MASTER_SEED)
    session = g.run_session(trace, g.HonestStrategy(), g.calibrate_noise(0.0), MASTER_SEED + 1)
    target = trace.h12 * trace.h23
    worst = max(
        float(np.max(np.abs(session.theta_sc_4_1 - target))),
        float(np.max(np.abs(session.theta_sc_4_3 - target))),
        float(np.max(np.abs(session.node2_product - target))),
    )
    elapsed = time.perf_counter() - start
    assert worst <= 1e-12
    assert elapsed < 1.0
    note("noiseless consistency", f"max deviation {worst:.2e} over 1000 rounds in {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# 2. NMSE calibration
# ---------------------------------------------------------------------------

def test_nmse_calibration():
    start = time.perf_counter()
    for eta in (1e-2, 1e-4):
        trace = g.generate_trace(0.98, 100_000, seed=MASTER_SEED + 2)
        session = g.run_session(trace, g.HonestStrategy(), g.calibrate_noise(eta), MASTER_SEED + 3)
        nmse3 = float(np.mean(np.abs(session.theta_3_1 - trace.h12) ** 2)
                      / np.mean(np.abs(trace.h12) ** 2))
        ideal4 = trace.h12 * session.broadcast
        nmse4 = float(np.mean(np.abs(session.theta_4_1 - ideal4) ** 2)
                      / np.mean(np.abs(ideal4) ** 2))
        assert abs(nmse3 - eta) / eta < 0.10, f"phase-3 NMSE {nmse3:g} vs target {eta:g}"
        assert abs(nmse4 - eta) / eta < 0.10, f"phase-4 NMSE {nmse4:g} vs target {eta:g}"

    # the phase-4 variance constant against an independent MC oracle
    rng = np.random.default_rng(MASTER_SEED + 4)
    n = 1_000_000
    h1 = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    h3 = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    constant = float(np.mean(np.abs(h1 * (h1 + h3)) ** 2))
    elapsed = time.perf_counter() - start
    assert abs(constant - 3.0) / 3.0 < 0.02
    assert elapsed < 10.0
    note("NMSE calibration", f"phase-4 constant {constant:.4f} (target 3), done in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 3. Doppler spread of the recovered product
# ---------------------------------------------------------------------------

def test_product_doppler_spread():
    config = honest_config(L_grid=(10_000,))
    trials = run_trials(config, 10_000, -40.0, False, 100)
    mean_f3 = (np.mean([t.F_3_1 for t in trials]), np.mean([t.F_3_3 for t in trials]))
    mean_f4 = (np.mean([t.F_4_1 for t in trials]), np.mean([t.F_4_3 for t in trials]))
    for f3 in mean_f3:
        assert abs(f3 - 0.98) < 0.005, f"phase-3 Doppler mean {f3:.4f}"
    for f4 in mean_f4:
        assert abs(f4 - 0.9604) < 0.01, f"cancelled-sequence Doppler mean {f4:.4f}"
    note("product Doppler spread",
         f"F3 means ({mean_f3[0]:.4f}, {mean_f3[1]:.4f}), F4 means ({mean_f4[0]:.4f}, {mean_f4[1]:.4f})")


# ---------------------------------------------------------------------------
# 4. Low-rate forcing and power-detector blindness
# ---------------------------------------------------------------------------

def test_low_rate_forcing():
    start = time.perf_counter()
    config = g.ExperimentConfig(
        attack=g.AttackSpec(kind="lowrate", target_coeff=0.99),
        detector="power",
        L_grid=(10_000,),
        eta_db_grid=(-40.0,),
        n_trials=1,
        master_seed=MASTER_SEED,
    )
    trials = run_trials(config, 10_000, -40.0, True, 100)
    mean_f4_1 = float(np.mean([t.F_4_1 for t in trials]))
    mean_f4_3 = float(np.mean([t.F_4_3 for t in trials]))
    assert abs(mean_f4_1 - 0.99) < 0.01
    assert abs(mean_f4_3 - 0.99) < 0.01

    more = run_trials(config, 10_000, -40.0, True, 1000)
    pd_power = float(np.mean([t.power_detect for t in more]))
    elapsed = time.perf_counter() - start
    assert pd_power < 0.05, f"power detector PD {pd_power:.4f} against the low-rate attack"
    assert elapsed < 60.0
    note("low-rate forcing",
         f"forced F4 means ({mean_f4_1:.4f}, {mean_f4_3:.4f}), power-detector PD {pd_power:.4f}, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 5. Different-key divergence
# ---------------------------------------------------------------------------

def test_different_key_divergence():
    config = g.ExperimentConfig(
        attack=g.AttackSpec(kind="diffkey"),
        detector="power",
        L_grid=(10_000,),
        eta_db_grid=(-40.0,),
        n_trials=1,
        master_seed=MASTER_SEED,
    )
    attacked = run_trials(config, 10_000, -40.0, True, 1)[0]
    honest = run_trials(config, 10_000, -40.0, False, 1)[0]
    assert 0.45 <= attacked.mismatch_13 <= 0.55, f"attacked mismatch {attacked.mismatch_13:.4f}"
    assert honest.mismatch_13 < 0.05, f"honest mismatch {honest.mismatch_13:.4f}"
    note("different-key divergence",
         f"attacked mismatch {attacked.mismatch_13:.4f}, honest mismatch {honest.mismatch_13:.4f}")


# ---------------------------------------------------------------------------
# 6. Power-detector grid trends (static different-key attack)
# ---------------------------------------------------------------------------

def test_power_detector_trend_grid():
    start = time.perf_counter()
    config = g.ExperimentConfig(
        attack=g.AttackSpec(kind="diffkey"),
        detector="power",
        L_grid=(50, 100, 150, 200),
        eta_db_grid=(-20.0, -30.0, -40.0),
        n_trials=1000,
        master_seed=MASTER_SEED,
    )
    cells = {(c.L, c.eta_db): c for c in g.sweep(config)}
    for eta_db in config.eta_db_grid:
        short, long = cells[(50, eta_db)], cells[(200, eta_db)]
        margin = 3.0 * np.hypot(short.pfa_stderr, long.pfa_stderr)
        assert short.pfa - long.pfa > margin, (
            f"PFA not decreasing with rounds at {eta_db} dB: "
            f"{short.pfa:.3f} vs {long.pfa:.3f} (margin {margin:.3f})"
        )
    missed = [c for c in cells.values() if c.pd + 3.0 * c.pd_stderr < 1.0]
    elapsed = time.perf_counter() - start
    assert missed, "attack was detected in essentially every trial of every cell"
    assert elapsed < 300.0
    pfa_spread = {f"{eta:g}dB": f"{cells[(50, eta)].pfa:.3f}->{cells[(200, eta)].pfa:.3f}"
                  for eta in config.eta_db_grid}
    note("power-detector trends",
         f"PFA L=50 -> L=200 per NMSE {pfa_spread}, {len(missed)}/12 cells with PD short of 1, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 7. Doppler-detector grid trends (low-rate attack)
# ---------------------------------------------------------------------------

def test_doppler_detector_trend_grid():
    start = time.perf_counter()
    config = g.ExperimentConfig(
        attack=g.AttackSpec(kind="lowrate", target_coeff=0.99),
        detector="doppler",
        L_grid=(100, 250, 500),
        eta_db_grid=(-20.0, -30.0, -40.0),
        n_trials=1000,
        master_seed=MASTER_SEED,
    )
    cells = {(c.L, c.eta_db): c for c in g.sweep(config)}
    best = cells[(500, -40.0)]
    worst = cells[(100, -20.0)]
    margin = 3.0 * np.hypot(best.pd_stderr, worst.pd_stderr)
    elapsed = time.perf_counter() - start
    assert best.pd - worst.pd > margin, (
        f"PD at (L=500, -40 dB) {best.pd:.3f} not above PD at (L=100, -20 dB) "
        f"{worst.pd:.3f} by {margin:.3f}"
    )
    assert elapsed < 300.0
    note("Doppler-detector trends",
         f"PD {worst.pd:.3f} at (L=100, -20 dB) vs {best.pd:.3f} at (L=500, -40 dB), {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 8. Preset determinism through the CLI
# ---------------------------------------------------------------------------

def test_preset_rerun_is_byte_identical(tmp_path):
    args = ["run", "--preset", "fig2", "--trials", "3", "--seed", str(MASTER_SEED)]
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli_main(args + ["--out", str(out_a)]) == 0
    assert cli_main(args + ["--out", str(out_b)]) == 0
    bytes_a = (out_a / "results.csv").read_bytes()
    bytes_b = (out_b / "results.csv").read_bytes()
    assert bytes_a == bytes_b
    note("determinism", f"fig2 preset rerun identical ({len(bytes_a)} CSV bytes)")


# ---------------------------------------------------------------------------
# 9. Key-rate arithmetic
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("k,tau,expected_seconds", [(1, 1.0, 128.0), (1, 0.01, 1.28), (2, 0.01, 0.64)])
def test_key_rate_time_to_128_bits(k, tau, expected_seconds):
    rate = g.key_rate(k, tau)
    assert rate.rate == k / tau
    assert rate.seconds_to_accumulate(128) == pytest.approx(expected_seconds, abs=0.0)
    note("key-rate arithmetic", f"k={k}, tau={tau:g}s -> 128-bit key in {expected_seconds}s")
