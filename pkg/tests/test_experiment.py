"""Harness tests: seed derivation, trial determinism, PD/PFA aggregation,
grid sweeps, and worker parallelism."""

import numpy as np
import pytest

import gsksim.experiment as experiment
from gsksim.experiment import (
    AttackSpec,
    ExperimentConfig,
    derive_trial_seed,
    estimate_pd_pfa,
    eta_from_db,
    results_rows,
    run_trial,
    sweep,
    RESULTS_CSV_COLUMNS,
)

MASTER = 20250808


def small_config(**overrides):
    defaults = dict(
        attack=AttackSpec(kind="diffkey"),
        detector="power",
        L_grid=(50,),
        eta_db_grid=(-20.0,),
        n_trials=20,
        master_seed=MASTER,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


# ---------------------------------------------------------------------------
# Seeds and configuration
# ---------------------------------------------------------------------------

def test_eta_conversion_is_power_convention():
    assert eta_from_db(-20.0) == pytest.approx(1e-2)
    assert eta_from_db(-40.0) == pytest.approx(1e-4)
    assert eta_from_db(0.0) == 1.0


def test_trial_seeds_are_stable_and_distinct():
    seed = derive_trial_seed(1, 50, -20.0, True, 0)
    assert seed == derive_trial_seed(1, 50, -20.0, True, 0)
    variants = {
        derive_trial_seed(1, 50, -20.0, True, 0),
        derive_trial_seed(2, 50, -20.0, True, 0),
        derive_trial_seed(1, 100, -20.0, True, 0),
        derive_trial_seed(1, 50, -30.0, True, 0),
        derive_trial_seed(1, 50, -20.0, False, 0),
        derive_trial_seed(1, 50, -20.0, True, 1),
    }
    assert len(variants) == 6


@pytest.mark.parametrize(
    "overrides",
    [
        dict(detector="ml"),
        dict(L_grid=()),
        dict(eta_db_grid=(10.0,)),
        dict(n_trials=0),
        dict(F=1.5),
    ],
)
def test_config_validation(overrides):
    with pytest.raises(ValueError):
        small_config(**overrides)


def test_attack_spec_validation():
    with pytest.raises(ValueError):
        AttackSpec(kind="replay")


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------

def test_trial_is_deterministic():
    config = small_config()
    seed = derive_trial_seed(MASTER, 50, -20.0, True, 3)
    a = run_trial(config, 50, 1e-2, True, seed)
    b = run_trial(config, 50, 1e-2, True, seed)
    assert a == b


def test_honest_noiseless_trial_stays_quiet_at_long_sessions():
    config = small_config(detector="both", eta_db_grid=(0.0,))
    trial = run_trial(config, 200, 0.0, False,
                      derive_trial_seed(MASTER, 200, 0.0, False, 0))
    assert not trial.power_detect
    assert not trial.doppler_detect
    assert 1.0 < trial.ratio_1


def test_power_detector_misses_low_rate_attack():
    config = small_config(attack=AttackSpec(kind="lowrate", target_coeff=0.99))
    trial = run_trial(config, 500, 1e-4, True,
                      derive_trial_seed(MASTER, 500, -40.0, True, 0))
    assert not trial.power_detect


def test_single_round_trial_reports_nan_doppler():
    config = small_config(detector="power", L_grid=(1,))
    trial = run_trial(config, 1, 1e-2, False, derive_trial_seed(MASTER, 1, -20.0, False, 0))
    assert np.isnan(trial.F_3_1)
    assert not trial.doppler_detect


# ---------------------------------------------------------------------------
# PD / PFA aggregation
# ---------------------------------------------------------------------------

def _stub_trial_factory(p: float):
    """Deterministic stand-in for run_trial flagging a fixed fraction p."""

    def stub(config, L, eta, attacked, trial_seed):
        flag = (trial_seed % 10_000) < p * 10_000
        return experiment.TrialResult(
            detect=bool(flag), power_detect=bool(flag), doppler_detect=bool(flag),
            ratio_1=3.0, ratio_3=3.0, F_3_1=0.98, F_3_3=0.98, F_4_1=0.96, F_4_3=0.96,
            mismatch_13=0.0, ones_fraction=0.5, clipped_fraction=0.0,
        )

    return stub


@pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
def test_estimator_converges_on_stubbed_detector(p, monkeypatch):
    monkeypatch.setattr(experiment, "run_trial", _stub_trial_factory(p))
    cell = estimate_pd_pfa(small_config(n_trials=1000), 50, -20.0)
    margin = 3.0 * np.sqrt(p * (1 - p) / 1000) if 0 < p < 1 else 0.0
    assert abs(cell.pd - p) <= margin
    assert abs(cell.pfa - p) <= margin


def test_cell_reports_binomial_stderr():
    cell = estimate_pd_pfa(small_config(n_trials=25), 50, -20.0)
    assert cell.pd_stderr == pytest.approx(np.sqrt(cell.pd * (1 - cell.pd) / 25))
    assert cell.n_trials == 25


def test_detection_improves_with_more_rounds():
    # static different-key attack: accumulating rounds raises PD
    config = small_config(eta_db_grid=(-40.0,), n_trials=300)
    short = estimate_pd_pfa(config, 50, -40.0)
    long = estimate_pd_pfa(config, 200, -40.0)
    assert long.pd > short.pd + 3.0 * np.hypot(short.pd_stderr, long.pd_stderr)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def test_sweep_covers_the_grid_in_order():
    config = small_config(L_grid=(50, 100), eta_db_grid=(-20.0, -30.0), n_trials=2)
    cells = sweep(config)
    assert [(c.L, c.eta_db) for c in cells] == [
        (50, -20.0), (50, -30.0), (100, -20.0), (100, -30.0),
    ]


def test_preset_grids_have_expected_cell_counts():
    fig2 = small_config(L_grid=(50, 100, 150, 200), eta_db_grid=(-20.0, -30.0, -40.0), n_trials=1)
    assert len(sweep(fig2)) == 12
    fig3 = small_config(L_grid=(100, 250, 500), eta_db_grid=(-20.0, -30.0, -40.0), n_trials=1,
                        attack=AttackSpec(kind="lowrate"), detector="doppler")
    assert len(sweep(fig3)) == 9


def test_cells_are_independent_of_grid_shape():
    lone = sweep(small_config(L_grid=(50,), eta_db_grid=(-20.0,)))
    wide = sweep(small_config(L_grid=(50, 100), eta_db_grid=(-20.0, -30.0)))
    assert lone[0] == wide[0]


def test_parallel_sweep_matches_sequential(monkeypatch):
    config = small_config(L_grid=(50, 80), eta_db_grid=(-20.0,), n_trials=10)
    sequential = sweep(config, workers=1)
    parallel = sweep(config, workers=2)
    assert sequential == parallel


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("GSKSIM_THREADS", raising=False)
    assert experiment.worker_count() == 1
    monkeypatch.setenv("GSKSIM_THREADS", "4")
    assert experiment.worker_count() == 4
    monkeypatch.setenv("GSKSIM_THREADS", "soon")
    with pytest.raises(ValueError):
        experiment.worker_count()


def test_results_rows_follow_the_csv_schema():
    config = small_config(n_trials=3)
    rows = results_rows(config, sweep(config))
    assert list(rows[0].keys()) == RESULTS_CSV_COLUMNS
    assert rows[0]["attack"] == "diffkey"
    assert rows[0]["detector"] == "power"
    assert rows[0]["n_trials"] == "3"
