"""One round / one session of the 4-phase key-generation protocol.

Phases of round l between nodes 1, 2, 3 (2 is the relay):

  1. node 1 sends a pilot, node 2 estimates the 1-2 link
  2. node 3 sends a pilot, node 2 estimates the 2-3 link
  3. node 2 sends a pilot (value rho, 1 when honest); nodes 1 and 3 estimate
     their links as rho * h
  4. node 2 broadcasts a combination b (the sum of its two link estimates
     when honest); nodes 1 and 3 receive h * b and subtract the square of
     their phase-3 estimate to recover the link product

Channel estimation errors are additive complex Gaussian with variances
calibrated so each phase has a fixed normalized mean square error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelTrace, complex_gaussian

# Phase order is fixed; the first three phases could be permuted in any of
# six ways without changing the observations notated here.
PHASE_ORDER = (1, 2, 3, 4)

# E{|h_j (h12 + h23)|^2} for independent unit-variance circular Gaussian
# links: E|h|^4 + E|h|^2 E|h'|^2 = 2 + 1.
PHASE4_GAIN_SECOND_MOMENT = 3.0


@dataclass(frozen=True)
class NoiseModel:
    """Per-phase estimation-noise variances for one NMSE level."""

    eta: float
    alpha_1_2: float
    alpha_2_2: float
    alpha_3_1: float
    alpha_3_3: float
    alpha_4_1: float
    alpha_4_3: float


def calibrate_noise(eta: float) -> NoiseModel:
    """Noise variances that hold every phase at the NMSE level eta.

    Phases 1-3 observe a unit-power link, so their variance is eta directly.
    Phase 4 observes h_j * (h12 + h23) whose mean power is 3, hence 3 * eta.
    """
    if not math.isfinite(eta) or eta < 0:
        raise ValueError(f"eta must be finite and >= 0, got {eta}")
    return NoiseModel(
        eta=eta,
        alpha_1_2=eta,
        alpha_2_2=eta,
        alpha_3_1=eta,
        alpha_3_3=eta,
        alpha_4_1=PHASE4_GAIN_SECOND_MOMENT * eta,
        alpha_4_3=PHASE4_GAIN_SECOND_MOMENT * eta,
    )


@dataclass(frozen=True)
class RoundObservations:
    """Everything the three nodes observe in one protocol round.

    theta_<phase>_<node> is the estimate node <node> forms at the end of
    phase <phase>; theta_sc_4_j is node j's phase-4 reception after
    subtracting its squared phase-3 estimate; node2_product is the relay's
    own product of its phase-1/2 estimates.
    """

    theta_1_2: complex
    theta_2_2: complex
    theta_3_1: complex
    theta_3_3: complex
    theta_4_1: complex
    theta_4_3: complex
    theta_sc_4_1: complex
    theta_sc_4_3: complex
    node2_product: complex


@dataclass(frozen=True)
class SessionObservations:
    """Per-round observation arrays for a whole session, plus the ground
    truth channels and the relay's transmitted values for diagnostics.

    Arrays are marked read-only after construction; sessions can be shared
    across threads freely.
    """

    h12: np.ndarray
    h23: np.ndarray
    rho: np.ndarray
    broadcast: np.ndarray
    clipped: np.ndarray
    theta_1_2: np.ndarray
    theta_2_2: np.ndarray
    theta_3_1: np.ndarray
    theta_3_3: np.ndarray
    theta_4_1: np.ndarray
    theta_4_3: np.ndarray
    theta_sc_4_1: np.ndarray
    theta_sc_4_3: np.ndarray
    node2_product: np.ndarray

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            getattr(self, name).flags.writeable = False

    def __len__(self) -> int:
        return self.h12.size

    def round(self, l: int) -> RoundObservations:
        """Scalar view of round l."""
        return RoundObservations(
            theta_1_2=complex(self.theta_1_2[l]),
            theta_2_2=complex(self.theta_2_2[l]),
            theta_3_1=complex(self.theta_3_1[l]),
            theta_3_3=complex(self.theta_3_3[l]),
            theta_4_1=complex(self.theta_4_1[l]),
            theta_4_3=complex(self.theta_4_3[l]),
            theta_sc_4_1=complex(self.theta_sc_4_1[l]),
            theta_sc_4_3=complex(self.theta_sc_4_3[l]),
            node2_product=complex(self.node2_product[l]),
        )


def run_round(h12: complex, h23: complex, action, noise: NoiseModel, seed) -> RoundObservations:
    """Execute one protocol round with a precomputed relay action.

    The relay transmits action.rho as its phase-3 pilot and action.broadcast
    in phase 4.  With the honest action and eta = 0, both end nodes and the
    relay recover exactly h12 * h23.
    """
    for name, v in (("h12", h12), ("h23", h23), ("rho", action.rho), ("broadcast", action.broadcast)):
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ValueError(f"non-finite {name}: {v}")
    rng = np.random.default_rng(seed)
    z_1_2 = complex(complex_gaussian(rng, noise.alpha_1_2, 1)[0])
    z_2_2 = complex(complex_gaussian(rng, noise.alpha_2_2, 1)[0])
    z_3_1 = complex(complex_gaussian(rng, noise.alpha_3_1, 1)[0])
    z_3_3 = complex(complex_gaussian(rng, noise.alpha_3_3, 1)[0])
    z_4_1 = complex(complex_gaussian(rng, noise.alpha_4_1, 1)[0])
    z_4_3 = complex(complex_gaussian(rng, noise.alpha_4_3, 1)[0])

    theta_1_2 = h12 + z_1_2
    theta_2_2 = h23 + z_2_2
    theta_3_1 = action.rho * h12 + z_3_1
    theta_3_3 = action.rho * h23 + z_3_3
    theta_4_1 = h12 * action.broadcast + z_4_1
    theta_4_3 = h23 * action.broadcast + z_4_3
    return RoundObservations(
        theta_1_2=theta_1_2,
        theta_2_2=theta_2_2,
        theta_3_1=theta_3_1,
        theta_3_3=theta_3_3,
        theta_4_1=theta_4_1,
        theta_4_3=theta_4_3,
        theta_sc_4_1=theta_4_1 - theta_3_1 ** 2,
        theta_sc_4_3=theta_4_3 - theta_3_3 ** 2,
        node2_product=theta_1_2 * theta_2_2,
    )


def run_session(trace: ChannelTrace, strategy, noise: NoiseModel, seed) -> SessionObservations:
    """Run all rounds of a session under one relay strategy.

    All four phases of round l see the same channel pair (quasi-static
    coherence); the relay picks its per-round actions after observing the
    phase-1/2 estimates and may read the true channels per its capabilities.
    Noise draws come from a single stream in fixed phase order, so a session
    is bit-identical for a given seed.
    """
    L = len(trace)
    if L < 1:
        raise ValueError("session needs at least one round")
    rng = np.random.default_rng(seed)
    z_1_2 = complex_gaussian(rng, noise.alpha_1_2, L)
    z_2_2 = complex_gaussian(rng, noise.alpha_2_2, L)
    z_3_1 = complex_gaussian(rng, noise.alpha_3_1, L)
    z_3_3 = complex_gaussian(rng, noise.alpha_3_3, L)
    z_4_1 = complex_gaussian(rng, noise.alpha_4_1, L)
    z_4_3 = complex_gaussian(rng, noise.alpha_4_3, L)

    theta_1_2 = trace.h12 + z_1_2
    theta_2_2 = trace.h23 + z_2_2
    rho, broadcast, clipped = strategy.plan_session(trace, theta_1_2, theta_2_2)
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(broadcast))):
        raise ValueError("strategy produced non-finite actions")

    theta_3_1 = rho * trace.h12 + z_3_1
    theta_3_3 = rho * trace.h23 + z_3_3
    theta_4_1 = trace.h12 * broadcast + z_4_1
    theta_4_3 = trace.h23 * broadcast + z_4_3
    return SessionObservations(
        h12=trace.h12.copy(),
        h23=trace.h23.copy(),
        rho=rho,
        broadcast=broadcast,
        clipped=clipped,
        theta_1_2=theta_1_2,
        theta_2_2=theta_2_2,
        theta_3_1=theta_3_1,
        theta_3_3=theta_3_3,
        theta_4_1=theta_4_1,
        theta_4_3=theta_4_3,
        theta_sc_4_1=theta_4_1 - theta_3_1 ** 2,
        theta_sc_4_3=theta_4_3 - theta_3_3 ** 2,
        node2_product=theta_1_2 * theta_2_2,
    )
