"""Command-line front end.

Three subcommands:

  run    execute a PD/PFA sweep; writes results.csv, a PD/PFA figure, and a
         manifest.json that records everything needed to reproduce the run
  keys   run one session under the configured attack and export the three
         per-node key bit strings
  plot   re-render the PD/PFA figure from an existing results.csv

Settings come from built-in defaults, then an optional preset, then an
optional INI config file, then command-line flags (later wins).  Exit codes:
0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .attack import HonestStrategy, make_strategy
from .channel import generate_trace
from .experiment import (
    AttackSpec,
    ExperimentConfig,
    RESULTS_CSV_COLUMNS,
    config_snapshot,
    derive_trial_seed,
    eta_from_db,
    results_rows,
    sweep,
)
from .keybits import (
    POLICY_BLOCK_MEDIAN,
    POLICY_FIXED,
    format_key_lines,
    key_rate,
    keys_from_session,
    mismatch_rate,
    structure_diagnostics,
)
from .plotting import plot_pd_pfa
from .protocol import calibrate_noise, run_session


class ConfigError(Exception):
    """Bad configuration input; maps to exit code 2."""


# ---------------------------------------------------------------------------
# Presets and config assembly
# ---------------------------------------------------------------------------

PRESETS: dict[str, dict] = {
    # power-ratio detector against the static different-key attack
    "fig2": {
        "attack": "diffkey",
        "detector": "power",
        "L": (50, 100, 150, 200),
        "eta_db": (-20.0, -30.0, -40.0),
    },
    # Doppler detector against the low-rate attack forcing a 0.99 process
    "fig3": {
        "attack": "lowrate",
        "detector": "doppler",
        "L": (100, 250, 500),
        "eta_db": (-20.0, -30.0, -40.0),
        "target_coeff": 0.99,
    },
}

_DEFAULT_SETTINGS = {
    "F": 0.98,
    "attack": "diffkey",
    "detector": "power",
    "L": (50, 100, 150, 200),
    "eta_db": (-20.0, -30.0, -40.0),
    "trials": 1000,
    "seed": 20250808,
    "tau": 0.01,
    "K": 128,
    "target_coeff": 0.99,
    "power_cap": 1e4,
    "th_lo": 0.94,
    "th_hi": 0.96,
    "policy": POLICY_FIXED,
    "threshold": None,
}

# (section, key) -> settings name and parser
_FILE_SCHEMA = {
    ("experiment", "f"): ("F", float),
    ("experiment", "attack"): ("attack", str),
    ("experiment", "detector"): ("detector", str),
    ("experiment", "l"): ("L", "int_list"),
    ("experiment", "eta_db"): ("eta_db", "float_list"),
    ("experiment", "trials"): ("trials", int),
    ("experiment", "seed"): ("seed", int),
    ("experiment", "tau"): ("tau", float),
    ("experiment", "k"): ("K", int),
    ("attack", "target_coeff"): ("target_coeff", float),
    ("attack", "power_cap"): ("power_cap", float),
    ("detector", "th_lo"): ("th_lo", float),
    ("detector", "th_hi"): ("th_hi", float),
    ("quantizer", "policy"): ("policy", str),
    ("quantizer", "threshold"): ("threshold", float),
}


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def load_config_file(path: str) -> dict:
    """Parse an INI config file into a settings dict.

    Unknown sections/keys or unparsable values raise ConfigError naming the
    offending key.
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}")
    settings: dict = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            schema = _FILE_SCHEMA.get((section.lower(), key.lower()))
            if schema is None:
                raise ConfigError(f"unknown key '{key}' in section [{section}] of {path}")
            name, kind = schema
            try:
                if kind == "int_list":
                    settings[name] = _parse_int_list(raw)
                elif kind == "float_list":
                    settings[name] = _parse_float_list(raw)
                else:
                    settings[name] = kind(raw)
            except ValueError:
                raise ConfigError(f"bad value for '{key}' in section [{section}] of {path}: {raw!r}")
    return settings


def assemble_config(args) -> ExperimentConfig:
    """Merge defaults, preset, config file, and flags into one config."""
    settings = dict(_DEFAULT_SETTINGS)
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset: {args.preset!r} (choose from {sorted(PRESETS)})")
        settings.update(PRESETS[args.preset])
    if args.config:
        settings.update(load_config_file(args.config))

    if args.seed is not None:
        settings["seed"] = args.seed
    if args.trials is not None:
        settings["trials"] = args.trials
    if args.detector is not None:
        settings["detector"] = args.detector
    if args.attack is not None:
        settings["attack"] = args.attack
    if args.eta_db is not None:
        try:
            settings["eta_db"] = _parse_float_list(args.eta_db)
        except ValueError:
            raise ConfigError(f"bad --eta-db list: {args.eta_db!r}")
    if args.L is not None:
        try:
            settings["L"] = _parse_int_list(args.L)
        except ValueError:
            raise ConfigError(f"bad --L list: {args.L!r}")

    if settings["policy"] not in (POLICY_FIXED, POLICY_BLOCK_MEDIAN):
        raise ConfigError(f"unknown quantizer policy: {settings['policy']!r}")
    try:
        return ExperimentConfig(
            F=settings["F"],
            attack=AttackSpec(kind=settings["attack"],
                              target_coeff=settings["target_coeff"],
                              power_cap=settings["power_cap"]),
            detector=settings["detector"],
            L_grid=tuple(settings["L"]),
            eta_db_grid=tuple(settings["eta_db"]),
            n_trials=settings["trials"],
            master_seed=settings["seed"],
            th_lo=settings["th_lo"],
            th_hi=settings["th_hi"],
            quantizer_policy=settings["policy"],
            quantizer_threshold=settings["threshold"],
            tau=settings["tau"],
            K=settings["K"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def write_results_csv(path: str, rows: list[dict[str, str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULTS_CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def write_manifest(path: str, config: ExperimentConfig, started: str,
                   outputs: dict[str, str], command: str) -> None:
    manifest = {
        "tool": "gsksim",
        "version": __version__,
        "command": command,
        "started_utc": started,
        "finished_utc": _utc_now(),
        "master_seed": config.master_seed,
        "config": config_snapshot(config),
        "outputs": outputs,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_results_csv(path: str) -> list[dict[str, str]]:
    if not os.path.exists(path):
        raise ConfigError(f"results file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ConfigError(f"results file is empty: {path}")
        missing = {"L", "eta_db", "pd", "pfa"} - set(reader.fieldnames)
        if missing:
            raise ConfigError(f"results file {path} lacks columns: {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise ConfigError(f"results file has no data rows: {path}")
    return rows


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    started = _utc_now()
    config = assemble_config(args)
    os.makedirs(args.out, exist_ok=True)

    cells = sweep(config)
    rows = results_rows(config, cells)

    csv_path = os.path.join(args.out, "results.csv")
    fig_path = os.path.join(args.out, "pd_pfa.svg")
    manifest_path = os.path.join(args.out, "manifest.json")

    write_results_csv(csv_path, rows)
    n_series = plot_pd_pfa(rows, fig_path,
                           title=f"{config.attack.kind} attack, {config.detector} detector")
    write_manifest(manifest_path, config, started,
                   outputs={"results_csv": csv_path, "figure": fig_path},
                   command=" ".join(sys.argv))

    print(f"{len(cells)} cells, {config.n_trials} trials each "
          f"(attack={config.attack.kind}, detector={config.detector}, seed={config.master_seed})")
    for c in cells:
        print(f"  L={c.L:5d} eta={c.eta_db:+.6g} dB  pd={c.pd:.3f} pfa={c.pfa:.3f}")
    print(f"wrote {csv_path}")
    print(f"wrote {fig_path} ({n_series} series)")
    print(f"wrote {manifest_path}")
    return 0


def cmd_keys(args) -> int:
    started = _utc_now()
    config = assemble_config(args)
    os.makedirs(args.out, exist_ok=True)

    L = config.L_grid[0]
    eta_db = config.eta_db_grid[0]
    trial_seed = derive_trial_seed(config.master_seed, L, eta_db, True, 0)
    ss = np.random.SeedSequence(trial_seed)
    trace_ss, noise_ss, attacker_ss = ss.spawn(3)

    trace = generate_trace(config.F, L, trace_ss)
    if config.attack.kind == "none":
        strategy = HonestStrategy()
    else:
        strategy = make_strategy(config.attack.kind,
                                 target_coeff=config.attack.target_coeff,
                                 power_cap=config.attack.power_cap,
                                 seed=attacker_ss)
    session = run_session(trace, strategy, calibrate_noise(eta_from_db(eta_db)),
                          np.random.default_rng(noise_ss))
    keys = keys_from_session(session, config.quantizer_policy, config.quantizer_threshold)

    keys_path = os.path.join(args.out, "keys.txt")
    with open(keys_path, "w", encoding="utf-8") as fh:
        fh.write(format_key_lines(keys))

    rate = key_rate(1, config.tau)
    print(f"session: L={L}, eta={eta_db:+.6g} dB, attack={config.attack.kind}, seed={config.master_seed}")
    for node in (1, 2, 3):
        diag = structure_diagnostics(keys.bits_for(node))
        print(f"  node{node}: ones_fraction={diag['ones_fraction']:.3f} "
              f"longest_run={diag['longest_run']}")
    print(f"  mismatch_13={mismatch_rate(keys.bits_node1, keys.bits_node3):.4f}  "
          f"mismatch_12={mismatch_rate(keys.bits_node1, keys.bits_node2):.4f}")
    print(f"  key rate: {rate.rate:g} bit/s at tau={config.tau:g} s; "
          f"{config.K}-bit key in {rate.seconds_to_accumulate(config.K):g} s")
    write_manifest(os.path.join(args.out, "manifest.json"), config, started,
                   outputs={"keys": keys_path}, command=" ".join(sys.argv))
    print(f"wrote {keys_path}")
    return 0


def cmd_plot(args) -> int:
    rows = read_results_csv(args.results_csv)
    out_path = args.out or os.path.join(os.path.dirname(args.results_csv) or ".", "pd_pfa.svg")
    try:
        n_series = plot_pd_pfa(rows, out_path)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"cannot plot {args.results_csv}: {exc}")
    print(f"wrote {out_path} ({n_series} series)")
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def _add_common_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI config file")
    sub.add_argument("--preset", choices=sorted(PRESETS), help="built-in experiment preset")
    sub.add_argument("--seed", type=int, help="master seed (64-bit)")
    sub.add_argument("--trials", type=int, help="Monte Carlo trials per cell")
    sub.add_argument("--out", default=".", help="output directory (default: .)")
    sub.add_argument("--detector", choices=("power", "doppler", "both"))
    sub.add_argument("--attack", choices=("none", "diffkey", "lowrate"))
    sub.add_argument("--eta-db", dest="eta_db",
                     help="comma-separated NMSE levels in dB, e.g. --eta-db=-20,-30")
    sub.add_argument("--L", dest="L", help="comma-separated session lengths, e.g. --L=50,100")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsksim",
        description="Simulate 3-node group-key generation, insider attacks, and their detectors.",
    )
    parser.add_argument("--version", action="version", version=f"gsksim {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_p = subparsers.add_parser("run", help="run a PD/PFA sweep and write CSV + figure")
    _add_common_options(run_p)
    run_p.set_defaults(func=cmd_run)

    keys_p = subparsers.add_parser("keys", help="run one session and export the node keys")
    _add_common_options(keys_p)
    keys_p.set_defaults(func=cmd_keys)

    plot_p = subparsers.add_parser("plot", help="plot PD/PFA curves from a results.csv")
    plot_p.add_argument("results_csv", help="CSV produced by the run subcommand")
    plot_p.add_argument("--out", help="output figure path (default: pd_pfa.svg beside the CSV)")
    plot_p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface anything else as a runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
