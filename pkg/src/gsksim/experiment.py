"""Monte Carlo harness: PD / PFA estimation over session-length and NMSE grids.

Each grid cell runs n_trials attacked sessions and n_trials honest sessions
with per-trial seeds derived by hashing (master seed, cell coordinates,
attacked flag, trial index), so any cell's result is independent of the rest
of the grid and a sweep is reproducible byte for byte.  Cells are
independent work items; set GSKSIM_THREADS to run them in parallel.
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .attack import HonestStrategy, make_strategy, POWER_CAP_DEFAULT
from .channel import generate_trace
from .detection import DopplerResult, doppler_detect, fuse, power_ratio_detect
from .keybits import POLICY_FIXED, keys_from_session, mismatch_rate, structure_diagnostics
from .protocol import calibrate_noise, run_session

RESULTS_CSV_COLUMNS = [
    "L", "eta_db", "attack", "detector", "n_trials", "pd", "pfa",
    "pd_stderr", "pfa_stderr", "mean_ratio_1", "mean_ratio_3",
    "F_3_1", "F_3_3", "F_4_1", "F_4_3",
    "mismatch_13", "ones_fraction", "clipped_fraction",
]

DETECTORS = ("power", "doppler", "both")

# Doppler stand-in for single-round sessions, where lag statistics are
# undefined: estimates are NaN and flags stay off.
_UNDEFINED_DOPPLER = DopplerResult(
    F_3_1=math.nan, F_3_3=math.nan, F_4_1=math.nan, F_4_3=math.nan,
    flag_node1=False, flag_node3=False, detect=False,
)


@dataclass(frozen=True)
class AttackSpec:
    """Which insider behaviour attacked trials use, with its parameters."""

    kind: str = "diffkey"            # none | diffkey | lowrate
    target_coeff: float = 0.99       # low-rate only: AR coefficient of the injected process
    power_cap: float = POWER_CAP_DEFAULT

    def __post_init__(self):
        if self.kind not in ("none", "diffkey", "lowrate"):
            raise ValueError(f"unknown attack kind: {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one sweep needs; hashable and picklable."""

    F: float = 0.98
    attack: AttackSpec = field(default_factory=AttackSpec)
    detector: str = "power"
    L_grid: tuple[int, ...] = (50, 100, 150, 200)
    eta_db_grid: tuple[float, ...] = (-20.0, -30.0, -40.0)
    n_trials: int = 1000
    master_seed: int = 20250808
    th_lo: float = 0.94
    th_hi: float = 0.96
    quantizer_policy: str = POLICY_FIXED
    quantizer_threshold: float | None = None
    tau: float = 0.01                # seconds per round, for key-rate reporting
    K: int = 128                     # target key length in bits

    def __post_init__(self):
        if not (0.0 <= self.F <= 1.0):
            raise ValueError(f"F must lie in [0, 1], got {self.F}")
        if self.detector not in DETECTORS:
            raise ValueError(f"detector must be one of {DETECTORS}, got {self.detector!r}")
        if len(self.L_grid) == 0 or len(self.eta_db_grid) == 0:
            raise ValueError("L and eta grids must be non-empty")
        if any(L < 1 for L in self.L_grid):
            raise ValueError("session lengths must be >= 1")
        if any(db > 0 for db in self.eta_db_grid):
            raise ValueError("eta_db values must be <= 0 dB")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")


def eta_from_db(eta_db: float) -> float:
    """dB to linear NMSE (power convention)."""
    return 10.0 ** (eta_db / 10.0)


def derive_trial_seed(master_seed: int, L: int, eta_db: float, attacked: bool,
                      trial_index: int) -> int:
    """Stable 64-bit per-trial seed, independent of grid shape and platform."""
    msg = f"{master_seed}:{L}:{eta_db:g}:{int(attacked)}:{trial_index}".encode()
    return int.from_bytes(hashlib.blake2b(msg, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class TrialResult:
    """Flags and summary statistics from one simulated session."""

    detect: bool
    power_detect: bool
    doppler_detect: bool
    ratio_1: float
    ratio_3: float
    F_3_1: float
    F_3_3: float
    F_4_1: float
    F_4_3: float
    mismatch_13: float
    ones_fraction: float
    clipped_fraction: float


def run_trial(config: ExperimentConfig, L: int, eta: float, attacked: bool,
              trial_seed: int) -> TrialResult:
    """Simulate one session and evaluate detectors and keys on it.

    A fresh channel trace, noise stream, and (for attacked trials) attacker
    stream are all spawned from trial_seed, so repeating a trial seed
    reproduces the outcome exactly.
    """
    ss = np.random.SeedSequence(trial_seed)
    trace_ss, noise_ss, attacker_ss = ss.spawn(3)
    trace = generate_trace(config.F, L, trace_ss)
    if attacked:
        strategy = make_strategy(config.attack.kind,
                                 target_coeff=config.attack.target_coeff,
                                 power_cap=config.attack.power_cap,
                                 seed=attacker_ss)
    else:
        strategy = HonestStrategy()
    noise = calibrate_noise(eta)
    session = run_session(trace, strategy, noise, np.random.default_rng(noise_ss))

    power = power_ratio_detect(session)
    if L >= 2:
        doppler = doppler_detect(session, config.th_lo, config.th_hi)
        report = fuse(power, doppler)
    else:
        report = fuse(power, _UNDEFINED_DOPPLER)

    if config.detector == "power":
        detect = report.power_detect
    elif config.detector == "doppler":
        detect = report.doppler_detect
    else:
        detect = report.power_detect or report.doppler_detect

    keys = keys_from_session(session, config.quantizer_policy, config.quantizer_threshold)
    return TrialResult(
        detect=detect,
        power_detect=report.power_detect,
        doppler_detect=report.doppler_detect,
        ratio_1=report.power_ratio_node1,
        ratio_3=report.power_ratio_node3,
        F_3_1=report.F_3_1,
        F_3_3=report.F_3_3,
        F_4_1=report.F_4_1,
        F_4_3=report.F_4_3,
        mismatch_13=mismatch_rate(keys.bits_node1, keys.bits_node3),
        ones_fraction=structure_diagnostics(keys.bits_node1)["ones_fraction"],
        clipped_fraction=float(np.mean(session.clipped)),
    )


@dataclass(frozen=True)
class CellResult:
    """PD / PFA estimates and attack-signature statistics for one grid cell.

    The signature statistics (ratios, Doppler estimates, mismatch, ones
    fraction, clipped fraction) are means over the attacked trials.
    """

    L: int
    eta_db: float
    pd: float
    pfa: float
    pd_stderr: float
    pfa_stderr: float
    mean_ratio_1: float
    mean_ratio_3: float
    mean_F_3_1: float
    mean_F_3_3: float
    mean_F_4_1: float
    mean_F_4_3: float
    mismatch_13: float
    ones_fraction: float
    clipped_fraction: float
    n_trials: int


def _binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def estimate_pd_pfa(config: ExperimentConfig, L: int, eta_db: float) -> CellResult:
    """Run one grid cell: n_trials attacked plus n_trials honest sessions."""
    eta = eta_from_db(eta_db)
    n = config.n_trials

    attacked_results = [
        run_trial(config, L, eta, True,
                  derive_trial_seed(config.master_seed, L, eta_db, True, i))
        for i in range(n)
    ]
    honest_results = [
        run_trial(config, L, eta, False,
                  derive_trial_seed(config.master_seed, L, eta_db, False, i))
        for i in range(n)
    ]

    pd = float(np.mean([t.detect for t in attacked_results]))
    pfa = float(np.mean([t.detect for t in honest_results]))

    def attacked_mean(attr: str) -> float:
        return float(np.mean([getattr(t, attr) for t in attacked_results]))

    return CellResult(
        L=L,
        eta_db=eta_db,
        pd=pd,
        pfa=pfa,
        pd_stderr=_binomial_stderr(pd, n),
        pfa_stderr=_binomial_stderr(pfa, n),
        mean_ratio_1=attacked_mean("ratio_1"),
        mean_ratio_3=attacked_mean("ratio_3"),
        mean_F_3_1=attacked_mean("F_3_1"),
        mean_F_3_3=attacked_mean("F_3_3"),
        mean_F_4_1=attacked_mean("F_4_1"),
        mean_F_4_3=attacked_mean("F_4_3"),
        mismatch_13=attacked_mean("mismatch_13"),
        ones_fraction=attacked_mean("ones_fraction"),
        clipped_fraction=attacked_mean("clipped_fraction"),
        n_trials=n,
    )


def _run_cell(args) -> CellResult:
    config, L, eta_db = args
    return estimate_pd_pfa(config, L, eta_db)


def worker_count() -> int:
    """Worker cap from GSKSIM_THREADS (default: 1, i.e. sequential)."""
    raw = os.environ.get("GSKSIM_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"GSKSIM_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def sweep(config: ExperimentConfig, workers: int | None = None) -> list[CellResult]:
    """Evaluate every (L, eta_db) cell of the grid.

    Results are returned in grid order (L-major) regardless of how many
    workers execute them; per-trial seeding makes the output independent of
    the execution schedule.
    """
    cells = [(config, L, eta_db) for L in config.L_grid for eta_db in config.eta_db_grid]
    n_workers = worker_count() if workers is None else max(1, workers)
    if n_workers == 1 or len(cells) == 1:
        return [_run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=min(n_workers, len(cells))) as pool:
        return list(pool.map(_run_cell, cells))


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.10g}"


def results_rows(config: ExperimentConfig, cells: list[CellResult]) -> list[dict[str, str]]:
    """Flatten sweep results into the stable CSV schema (all values as text)."""
    rows = []
    for c in cells:
        rows.append({
            "L": _fmt(c.L),
            "eta_db": _fmt(c.eta_db),
            "attack": config.attack.kind,
            "detector": config.detector,
            "n_trials": _fmt(c.n_trials),
            "pd": _fmt(c.pd),
            "pfa": _fmt(c.pfa),
            "pd_stderr": _fmt(c.pd_stderr),
            "pfa_stderr": _fmt(c.pfa_stderr),
            "mean_ratio_1": _fmt(c.mean_ratio_1),
            "mean_ratio_3": _fmt(c.mean_ratio_3),
            "F_3_1": _fmt(c.mean_F_3_1),
            "F_3_3": _fmt(c.mean_F_3_3),
            "F_4_1": _fmt(c.mean_F_4_1),
            "F_4_3": _fmt(c.mean_F_4_3),
            "mismatch_13": _fmt(c.mismatch_13),
            "ones_fraction": _fmt(c.ones_fraction),
            "clipped_fraction": _fmt(c.clipped_fraction),
        })
    return rows


def config_snapshot(config: ExperimentConfig) -> dict:
    """JSON-serializable copy of a config, for run manifests."""
    snap = asdict(config)
    snap["L_grid"] = list(config.L_grid)
    snap["eta_db_grid"] = list(config.eta_db_grid)
    return snap
