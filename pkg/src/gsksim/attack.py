"""Relay-side behaviour: the honest relay and the insider attack strategies.

Every strategy yields one action per round: the phase-3 pilot value rho and
the phase-4 broadcast value b.  The insider is assumed able to transmit
above nominal power (up to a configurable cap), to store past channel
realizations, and to know the chain topology.

Strategies:
  honest              rho = 1, b = sum of the relay's two link estimates
  different-key       rho = 1, b frozen at the round-1 channel sum, so the
    (static)          two end nodes quantize uncorrelated observations
  different-key       rho / summands supplied per round by the caller
    (general)
  low-rate            rho chosen so both end nodes recover an attacker-owned
                      slow-fading process instead of the true link product
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelTrace, ar1_sequence

POWER_CAP_DEFAULT = 1e4  # linear, ~40 dB above the nominal unit pilot power
PRODUCT_GUARD = 1e-9     # |h12*h23| below this is treated as singular

# Mean power of the honest phase-4 broadcast, E{|h12 + h23|^2}; the
# broadcast budget is power_cap times this reference.
BROADCAST_REFERENCE_POWER = 2.0


@dataclass(frozen=True)
class AttackAction:
    """One round of relay transmissions: phase-3 pilot and phase-4 value."""

    rho: complex
    broadcast: complex
    clipped: bool = False


def honest_action(theta_1_2: complex, theta_2_2: complex) -> AttackAction:
    """Honest relay: unit pilot, broadcast the sum of its own estimates."""
    return AttackAction(rho=1.0 + 0.0j, broadcast=theta_1_2 + theta_2_2)


def different_key_static_action(l: int, history) -> AttackAction:
    """Static different-key action: replay the round-1 channel sum forever.

    history holds the (h12, h23) pairs the relay has recorded; the first
    entry must be the round-1 pair.
    """
    if len(history) == 0:
        raise ValueError("static different-key action needs at least the round-1 channels in history")
    h12_first, h23_first = history[0]
    return AttackAction(rho=1.0 + 0.0j, broadcast=h12_first + h23_first)


def different_key_general_action(rho_seq, rho1_seq, rho2_seq, l: int) -> AttackAction:
    """General different-key action: per-round values from caller sequences."""
    if not (0 <= l < len(rho_seq) and l < len(rho1_seq) and l < len(rho2_seq)):
        raise IndexError(f"round index {l} out of range for the configured attack sequences")
    return AttackAction(rho=complex(rho_seq[l]), broadcast=complex(rho1_seq[l]) + complex(rho2_seq[l]))


def _low_rate_actions(h12: np.ndarray, h23: np.ndarray, h_prime: np.ndarray,
                      power_cap: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized low-rate action: rho = sqrt(h' / (h12 h23)), b = rho^2 (h12 + h23).

    The pilot is clamped so that |rho|^2 <= power_cap and the implied
    broadcast stays within power_cap times the honest broadcast power.
    Clamping acts on rho (phase kept) rather than on b alone: the relay's two
    transmissions must stay mutually consistent or the end nodes' cancellation
    would leave a large residual and expose the attack.
    """
    link_sum = h12 + h23
    product = h12 * h23
    rho2_max = np.minimum(
        power_cap,
        np.sqrt(BROADCAST_REFERENCE_POWER * power_cap) / np.maximum(np.abs(link_sum), 1e-300),
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.sqrt(h_prime / product)
    singular = np.abs(product) < PRODUCT_GUARD
    rho[singular] = np.sqrt(rho2_max[singular])
    over = np.abs(rho) ** 2 > rho2_max
    rho[over] *= np.sqrt(rho2_max[over]) / np.abs(rho[over])
    return rho, rho ** 2 * link_sum, singular | over


def low_rate_action(h12: complex, h23: complex, h_prime: complex,
                    power_cap: float = POWER_CAP_DEFAULT) -> AttackAction:
    """Low-rate action for one round; see _low_rate_actions for the rule."""
    rho, broadcast, clipped = _low_rate_actions(
        np.array([h12], dtype=complex),
        np.array([h23], dtype=complex),
        np.array([h_prime], dtype=complex),
        power_cap,
    )
    return AttackAction(rho=complex(rho[0]), broadcast=complex(broadcast[0]), clipped=bool(clipped[0]))


class HonestStrategy:
    """No attack: unit pilot, broadcast of the relay's own noisy estimates."""

    kind = "none"

    def plan_session(self, trace: ChannelTrace, theta_1_2: np.ndarray, theta_2_2: np.ndarray):
        L = len(trace)
        return np.ones(L, dtype=complex), theta_1_2 + theta_2_2, np.zeros(L, dtype=bool)


class DifferentKeyStaticStrategy:
    """Replay the first round's channel sum in every phase-4 broadcast.

    The relay records the round-1 true channels into its history buffer and
    keeps transmitting their sum, so the end nodes' cancelled observations
    become functions of their own (mutually independent) links.
    """

    kind = "diffkey"

    def __init__(self, history_capacity: int = 1024):
        self.history_capacity = history_capacity
        self.history: list[tuple[complex, complex]] = []

    def record(self, h12: complex, h23: complex) -> None:
        if len(self.history) < self.history_capacity:
            self.history.append((complex(h12), complex(h23)))

    def plan_session(self, trace: ChannelTrace, theta_1_2: np.ndarray, theta_2_2: np.ndarray):
        L = len(trace)
        self.record(trace.h12[0], trace.h23[0])
        action = different_key_static_action(0, self.history)
        rho = np.ones(L, dtype=complex)
        broadcast = np.full(L, action.broadcast, dtype=complex)
        return rho, broadcast, np.zeros(L, dtype=bool)


class DifferentKeyGeneralStrategy:
    """Per-round pilot and broadcast summands supplied by configuration.

    With rho = 1, rho1 = h12(l), rho2 = h23(l) this reproduces the honest
    strategy; independently drawn sequences decorrelate the two end nodes.
    """

    kind = "diffkey-general"

    def __init__(self, rho_seq, rho1_seq, rho2_seq):
        self.rho_seq = np.asarray(rho_seq, dtype=complex)
        self.rho1_seq = np.asarray(rho1_seq, dtype=complex)
        self.rho2_seq = np.asarray(rho2_seq, dtype=complex)

    def plan_session(self, trace: ChannelTrace, theta_1_2: np.ndarray, theta_2_2: np.ndarray):
        L = len(trace)
        if L > min(self.rho_seq.size, self.rho1_seq.size, self.rho2_seq.size):
            raise IndexError(f"attack sequences shorter than the session ({L} rounds)")
        return (self.rho_seq[:L].copy(),
                self.rho1_seq[:L] + self.rho2_seq[:L],
                np.zeros(L, dtype=bool))


class LowRateStrategy:
    """Force both end nodes onto an attacker-generated slow-fading process.

    The target process is a unit-variance AR(1) stream with coefficient
    target_coeff, generated from the attacker's own seeded stream.  After a
    session the generated process is kept on the instance (h_prime) for
    inspection.  One instance serves one session.
    """

    kind = "lowrate"

    def __init__(self, target_coeff: float = 0.99, power_cap: float = POWER_CAP_DEFAULT, seed=None):
        if not (0.0 <= target_coeff < 1.0):
            raise ValueError(f"target AR coefficient must lie in [0, 1), got {target_coeff}")
        if not (math.isfinite(power_cap) and power_cap > 0):
            raise ValueError(f"power cap must be finite and > 0, got {power_cap}")
        self.target_coeff = target_coeff
        self.power_cap = power_cap
        self._rng = np.random.default_rng(seed)
        self.h_prime: np.ndarray | None = None

    def plan_session(self, trace: ChannelTrace, theta_1_2: np.ndarray, theta_2_2: np.ndarray):
        self.h_prime = ar1_sequence(self.target_coeff, len(trace), self._rng)
        return _low_rate_actions(trace.h12, trace.h23, self.h_prime, self.power_cap)


def make_strategy(kind: str, *, target_coeff: float = 0.99,
                  power_cap: float = POWER_CAP_DEFAULT, seed=None,
                  rho_seq=None, rho1_seq=None, rho2_seq=None):
    """Construct a fresh strategy instance from its configuration name."""
    if kind == "none":
        return HonestStrategy()
    if kind == "diffkey":
        return DifferentKeyStaticStrategy()
    if kind == "diffkey-general":
        if rho_seq is None or rho1_seq is None or rho2_seq is None:
            raise ValueError("diffkey-general needs rho_seq, rho1_seq, rho2_seq")
        return DifferentKeyGeneralStrategy(rho_seq, rho1_seq, rho2_seq)
    if kind == "lowrate":
        return LowRateStrategy(target_coeff=target_coeff, power_cap=power_cap, seed=seed)
    raise ValueError(f"unknown attack kind: {kind!r}")
