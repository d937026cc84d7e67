"""Indirect attack detectors run by the end nodes over a finished session.

Two detectors, both computable from a node's own observations without extra
messaging:

  power ratio    mean phase-4 power over mean cancelled power; honest
                 sessions sit near 3, a non-cancelling relay drags the
                 ratio below 1
  Doppler pair   lag-1 autocorrelation of the phase-3 estimates versus the
                 cancelled phase-4 sequence; honestly the second is the
                 square of the first, a slow-fading injection inverts the
                 ordering

A session is flagged when at least one end node flags (network OR).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import lag1_autocorrelation
from .protocol import SessionObservations

DEFAULT_DOPPLER_LOW = 0.94
DEFAULT_DOPPLER_HIGH = 0.96


@dataclass(frozen=True)
class PowerRatioResult:
    ratio_node1: float
    ratio_node3: float
    flag_node1: bool
    flag_node3: bool
    detect: bool


@dataclass(frozen=True)
class DopplerResult:
    F_3_1: float
    F_3_3: float
    F_4_1: float
    F_4_3: float
    flag_node1: bool
    flag_node3: bool
    detect: bool


@dataclass(frozen=True)
class DetectionReport:
    """Fused per-node statistics and flags from both detectors."""

    power_ratio_node1: float
    power_ratio_node3: float
    F_3_1: float
    F_3_3: float
    F_4_1: float
    F_4_3: float
    power_flag_node1: bool
    power_flag_node3: bool
    doppler_flag_node1: bool
    doppler_flag_node3: bool
    power_detect: bool
    doppler_detect: bool


def _power_ratio(theta_4: np.ndarray, theta_sc_4: np.ndarray) -> float:
    num = float(np.mean(np.abs(theta_4) ** 2))
    den = float(np.mean(np.abs(theta_sc_4) ** 2))
    if den == 0.0:
        return math.inf
    return num / den


def power_ratio_detect(session: SessionObservations) -> PowerRatioResult:
    """Flag a node when its phase-4 power drops below its cancelled power.

    An exactly zero cancelled-power denominator reports the ratio as +inf,
    which never satisfies ratio < 1 (no detection).
    """
    if len(session) < 1:
        raise ValueError("power-ratio detection needs at least one round")
    r1 = _power_ratio(session.theta_4_1, session.theta_sc_4_1)
    r3 = _power_ratio(session.theta_4_3, session.theta_sc_4_3)
    f1 = r1 < 1.0
    f3 = r3 < 1.0
    return PowerRatioResult(ratio_node1=r1, ratio_node3=r3,
                            flag_node1=f1, flag_node3=f3, detect=f1 or f3)


def doppler_detect(session: SessionObservations,
                   th_lo: float = DEFAULT_DOPPLER_LOW,
                   th_hi: float = DEFAULT_DOPPLER_HIGH) -> DopplerResult:
    """Flag a node when its phase-3 Doppler estimate is low while the
    cancelled phase-4 estimate is high.

    Honest sessions show the cancelled sequence varying faster than the
    individual links (coefficient squared), so the pair (F3 low, F4 high) is
    the signature of an injected slow process.  Thresholds default to 0.94
    and 0.96 at the 0.98-coefficient operating point.
    """
    if len(session) < 2:
        raise ValueError("Doppler detection needs at least two rounds")
    f_3_1 = lag1_autocorrelation(session.theta_3_1)
    f_3_3 = lag1_autocorrelation(session.theta_3_3)
    f_4_1 = lag1_autocorrelation(session.theta_sc_4_1)
    f_4_3 = lag1_autocorrelation(session.theta_sc_4_3)
    f1 = (f_3_1 < th_lo) and (f_4_1 > th_hi)
    f3 = (f_3_3 < th_lo) and (f_4_3 > th_hi)
    return DopplerResult(F_3_1=f_3_1, F_3_3=f_3_3, F_4_1=f_4_1, F_4_3=f_4_3,
                         flag_node1=f1, flag_node3=f3, detect=f1 or f3)


def fuse(power: PowerRatioResult, doppler: DopplerResult) -> DetectionReport:
    """Assemble both detectors into one report; network flags are ORs."""
    return DetectionReport(
        power_ratio_node1=power.ratio_node1,
        power_ratio_node3=power.ratio_node3,
        F_3_1=doppler.F_3_1,
        F_3_3=doppler.F_3_3,
        F_4_1=doppler.F_4_1,
        F_4_3=doppler.F_4_3,
        power_flag_node1=power.flag_node1,
        power_flag_node3=power.flag_node3,
        doppler_flag_node1=doppler.flag_node1,
        doppler_flag_node3=doppler.flag_node3,
        power_detect=power.flag_node1 or power.flag_node3,
        doppler_detect=doppler.flag_node1 or doppler.flag_node3,
    )
