"""Two-level quantization of observation magnitudes into key bits.

Each node quantizes the magnitude of its recovered common-randomness value
(one bit per round).  Deliberately primitive: the point is to expose what
the attacks do to the keys, not to build a good quantizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .protocol import SessionObservations

POLICY_FIXED = "fixed-nominal"
POLICY_BLOCK_MEDIAN = "block-median"

# Median of |h12 * h23| for independent unit-variance circular complex
# Gaussian links, frozen from a 4e6-draw Monte Carlo run
# (scripts/compute_nominal_threshold.py regenerates and checks it).
NOMINAL_MAGNITUDE_THRESHOLD = 0.6286


def quantize(magnitudes, policy: str = POLICY_FIXED, threshold: float | None = None) -> np.ndarray:
    """Quantize magnitudes to bits: 1 when magnitude >= threshold (ties -> 1).

    fixed-nominal uses the supplied threshold (defaulting to the nominal
    median of the honest link product); block-median uses the empirical
    median of this block.  A fixed threshold is what exposes a slowed-down
    channel as a structured key; a per-block median would hide it.
    """
    mags = np.asarray(magnitudes, dtype=float)
    if mags.size == 0:
        raise ValueError("cannot quantize an empty block")
    if np.any(~np.isfinite(mags)) or np.any(mags < 0):
        raise ValueError("magnitudes must be finite and non-negative")
    if policy == POLICY_FIXED:
        thr = NOMINAL_MAGNITUDE_THRESHOLD if threshold is None else float(threshold)
    elif policy == POLICY_BLOCK_MEDIAN:
        thr = float(np.median(mags))
    else:
        raise ValueError(f"unknown threshold policy: {policy!r}")
    return (mags >= thr).astype(np.uint8)


def mismatch_rate(a, b) -> float:
    """Fraction of positions where two bit vectors disagree."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"bit vectors differ in length: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty bit vectors")
    return float(np.mean(a != b))


@dataclass(frozen=True)
class KeyRate:
    """Key throughput: bits_per_round / round_interval."""

    bits_per_round: int
    round_interval: float
    rate: float

    def seconds_to_accumulate(self, total_bits: int) -> float:
        """Time to gather a key of total_bits bits."""
        return total_bits * self.round_interval / self.bits_per_round


def key_rate(bits_per_round: int, round_interval: float) -> KeyRate:
    if bits_per_round < 1:
        raise ValueError(f"bits_per_round must be >= 1, got {bits_per_round}")
    if not round_interval > 0:
        raise ValueError(f"round_interval must be > 0, got {round_interval}")
    return KeyRate(bits_per_round=bits_per_round, round_interval=round_interval,
                   rate=bits_per_round / round_interval)


def structure_diagnostics(bits) -> dict[str, float]:
    """Ones fraction and the longest constant run (of either value)."""
    bits = np.asarray(bits)
    if bits.size == 0:
        raise ValueError("empty bit vector")
    changes = np.flatnonzero(np.diff(bits) != 0)
    edges = np.concatenate(([-1], changes, [bits.size - 1]))
    longest = int(np.max(np.diff(edges)))
    return {"ones_fraction": float(np.mean(bits)), "longest_run": longest}


@dataclass(frozen=True)
class KeyMaterial:
    """Per-node key bits from one session plus the threshold settings used."""

    bits_node1: np.ndarray
    bits_node2: np.ndarray
    bits_node3: np.ndarray
    threshold_policy: str
    threshold_value: float | None

    def bits_for(self, node: int) -> np.ndarray:
        return {1: self.bits_node1, 2: self.bits_node2, 3: self.bits_node3}[node]


def keys_from_session(session: SessionObservations, policy: str = POLICY_FIXED,
                      threshold: float | None = None) -> KeyMaterial:
    """Quantize each node's magnitude sequence from a finished session.

    Nodes 1 and 3 quantize their cancelled phase-4 observations; the relay
    quantizes the product of its own phase-1/2 estimates.
    """
    if policy == POLICY_FIXED:
        thr_value = NOMINAL_MAGNITUDE_THRESHOLD if threshold is None else float(threshold)
    else:
        thr_value = None
    return KeyMaterial(
        bits_node1=quantize(np.abs(session.theta_sc_4_1), policy, threshold),
        bits_node2=quantize(np.abs(session.node2_product), policy, threshold),
        bits_node3=quantize(np.abs(session.theta_sc_4_3), policy, threshold),
        threshold_policy=policy,
        threshold_value=thr_value,
    )


def format_key_lines(keys: KeyMaterial) -> str:
    """ASCII export, one node per line: ``node<i>: <bits>``."""
    lines = []
    for node in (1, 2, 3):
        bits = "".join(str(int(b)) for b in keys.bits_for(node))
        lines.append(f"node{node}: {bits}")
    return "\n".join(lines) + "\n"
