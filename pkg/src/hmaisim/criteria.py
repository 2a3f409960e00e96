"""System design criteria.

Safety side: the minimal safe distance between two vehicles closing on each
other, and its inverse (the "safety time" a camera's perception task may take
before the remaining distance no longer suffices to brake).

Scheduling side: per-task matching scores against the safety time, the
platform-level Gvalue objective, the per-accelerator bookkeeping update
applied after every completed task, and the reward used by the learning
scheduler.  All functions here are pure; accelerator state is mutated only
through update_hw_info, which the simulation engine calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class RssParams:
    """Parameters of the minimal-safe-distance model for one camera direction.

    v1 is the ego velocity, v2 the magnitude of the worst-case oncoming
    velocity; both in m/s.  Accelerations are magnitudes in m/s^2.
    """

    v1: float
    v2: float
    a_max_accel: float = 8.382
    a_min_brake_correct: float = 6.2
    a_min_brake: float = 6.2

    def __post_init__(self):
        if self.a_max_accel <= 0 or self.a_min_brake <= 0 or self.a_min_brake_correct <= 0:
            raise DomainError("accelerations must be positive")
        if self.v1 < 0:
            raise DomainError("ego velocity must be non-negative")


def rss_min_distance(rho: float, p: RssParams) -> float:
    """Minimal safe distance (m) if both vehicles may accelerate for rho seconds.

    During the response time rho each vehicle worst-case accelerates at
    a_max_accel, then brakes: the ego at a_min_brake_correct, the other at
    a_min_brake.  Strictly increasing in rho whenever v1 + v2 > 0.
    """
    if rho < 0:
        raise DomainError("response time must be non-negative")
    v1 = p.v1
    v2 = abs(p.v2)
    v1r = v1 + rho * p.a_max_accel
    v2r = v2 + rho * p.a_max_accel
    return (
        (v1 + v1r) / 2.0 * rho
        + v1r * v1r / (2.0 * p.a_min_brake_correct)
        + (v2 + v2r) / 2.0 * rho
        + v2r * v2r / (2.0 * p.a_min_brake)
    )


def safety_time(d_min: float, p: RssParams, tol: float = 1e-9) -> float:
    """Invert rss_min_distance: the rho at which the safe distance reaches d_min.

    Bisection to absolute tolerance `tol` seconds; unique by strict
    monotonicity.  Raises DomainError when d_min does not exceed the rho=0
    floor (the camera cannot see far enough at this velocity).
    """
    floor = rss_min_distance(0.0, p)
    if d_min <= floor:
        raise DomainError(
            f"camera range insufficient at this velocity: {d_min:.3f} m <= {floor:.3f} m floor"
        )
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if rss_min_distance(hi, p) >= d_min:
            break
        hi *= 2.0
    else:
        raise DomainError("safety time bracket not found")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rss_min_distance(mid, p) < d_min:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def matching_score_det(response: float, st: float) -> float:
    """Detection-task score: response/st on [0, st] (1.0 exactly at st), -1 beyond."""
    if st <= 0:
        raise DomainError("safety time must be positive")
    if response < 0:
        raise DomainError("response time must be non-negative")
    if response <= st:
        return response / st
    return -1.0


def matching_score_tra(response: float, st: float) -> float:
    """Tracking-task score: +1 when the response meets the safety time, else -1."""
    if st <= 0:
        raise DomainError("safety time must be positive")
    if response < 0:
        raise DomainError("response time must be non-negative")
    return 1.0 if response <= st else -1.0


@dataclass(frozen=True)
class PlatformSummary:
    """Platform-level aggregate: total energy, max per-accelerator busy time,
    mean per-accelerator balance, and summed matching score."""

    energy: float = 0.0
    busy_max: float = 0.0
    r_balance: float = 0.0
    ms: float = 0.0


@dataclass(frozen=True)
class NormalizationScales:
    """Reference energy/time used to bring Gvalue terms onto comparable scale."""

    e_ref: float = 1.0
    t_ref: float = 1.0


def summarize(states, mode_unused=None) -> PlatformSummary:
    """Aggregate a list of accelerator states into a PlatformSummary."""
    if not states:
        return PlatformSummary()
    return PlatformSummary(
        energy=sum(s.energy for s in states),
        busy_max=max(s.busy_time for s in states),
        r_balance=sum(s.r_balance for s in states) / len(states),
        ms=sum(s.ms for s in states),
    )


def gvalue(s: PlatformSummary, norm: NormalizationScales) -> float:
    """(-E/E_ref - T/T_ref + R_Balance) / 3."""
    if norm.e_ref <= 0 or norm.t_ref <= 0:
        raise DomainError("normalization scales must be positive")
    return (-s.energy / norm.e_ref - s.busy_max / norm.t_ref + s.r_balance) / 3.0


R_BALANCE_MODES = ("paper-literal", "arithmetic-mean")


def update_hw_info(state, e_j: float, t_j: float, ms_j: float, r_j: float,
                   mode: str = "paper-literal"):
    """Apply one completed task's contribution to its accelerator's running info.

    Energy, busy time and matching score accumulate.  The balance term follows
    the configured recurrence:
      paper-literal:    R <- (r_j + R) / num        (num counted after this task)
      arithmetic-mean:  R <- R + (r_j - R) / num    (true running mean)
    The two agree for the first two tasks and diverge from the third on.
    """
    if mode not in R_BALANCE_MODES:
        raise DomainError(f"unknown r_balance mode: {mode}")
    state.num_executed += 1
    state.energy += e_j
    state.busy_time += t_j
    state.ms += ms_j
    n = state.num_executed
    if mode == "paper-literal":
        state.r_balance = (r_j + state.r_balance) / n
    else:
        state.r_balance = state.r_balance + (r_j - state.r_balance) / n
    return state


def reward(before: PlatformSummary, after: PlatformSummary, norm: NormalizationScales) -> float:
    """Per-task reward: Gvalue delta plus (unnormalized) matching-score delta."""
    return gvalue(after, norm) - gvalue(before, norm) + (after.ms - before.ms)
