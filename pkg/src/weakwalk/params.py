"""Choose (rounds, angle) so the single-stage test meets its error targets."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil, exp, log, sqrt

import numpy as np

from .survival import SurvivalCurve, log_survival_fast, survival_curve

MAX_ROUNDS = 10**7


class InfeasibleTargetsError(ValueError):
    """No admissible round count meets both survival targets."""

    def __init__(self, message: str, constraint: str):
        super().__init__(message)
        self.constraint = constraint


@dataclass(frozen=True)
class ProtocolTargets:
    gamma: float
    eps: float
    s0_min: float = 0.5
    slack: float = 0.9

    def __post_init__(self):
        if not self.gamma > 0 or not np.isfinite(self.gamma):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma!r}")
        if not 0 <= self.eps <= 0.5:
            raise ValueError(f"eps must lie in (0, 1/2], got {self.eps!r}")
        if not 0 < self.s0_min < 1:
            raise ValueError(f"s0_min must lie in (0, 1), got {self.s0_min!r}")
        if not 0 < self.slack <= 1:
            raise ValueError(f"slack must lie in (0, 1], got {self.slack!r}")

    @property
    def s1_max(self) -> float:
        return exp(-self.gamma)

    @property
    def m_theta(self) -> float:
        """Locked product m*theta: the background term m^2 theta^2 / 8 spends ln(1/s0_min), less slack."""
        return self.slack * 2 * sqrt(2 * log(1 / self.s0_min))

    @classmethod
    def from_survival_targets(cls, s0_target: float, s1_target: float, eps: float,
                              slack: float = 0.9) -> "ProtocolTargets":
        if not 0 < s1_target < 1:
            raise ValueError(f"s1_target must lie in (0, 1), got {s1_target!r}")
        return cls(gamma=-log(s1_target), eps=eps, s0_min=s0_target, slack=slack)


@dataclass(frozen=True)
class SolvedParams:
    m: int
    theta: float
    achieved_s0: float
    achieved_s1: float

    @property
    def alpha(self) -> float:
        return 1.0 - self.achieved_s0

    @property
    def beta(self) -> float:
        return self.achieved_s1

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "theta": self.theta,
            "achieved_s0": self.achieved_s0,
            "achieved_s1": self.achieved_s1,
            "alpha": self.alpha,
            "beta": self.beta,
        }


def _feasible(m: int, targets: ProtocolTargets) -> tuple[bool, bool]:
    theta = targets.m_theta / m
    ok0 = log_survival_fast(m, theta, 0.0) > log(targets.s0_min)
    ok1 = log_survival_fast(m, theta, targets.eps) < -targets.gamma
    return ok0, ok1


def _first_feasible(targets: ProtocolTargets, start: int) -> int:
    """Smallest m >= start with both constraints met (closed-form survival)."""
    linear_end = min(MAX_ROUNDS, max(4 * start, 4096))
    m = start
    while m <= linear_end:
        if all(_feasible(m, targets)):
            return m
        m += 1
    # galloping then bisection: feasibility is monotone in m once mtheta is locked
    lo, hi = linear_end, linear_end
    while not all(_feasible(hi, targets)):
        if hi == MAX_ROUNDS:
            ok0, ok1 = _feasible(hi, targets)
            failed = "s0" if not ok0 else "s1"
            raise InfeasibleTargetsError(
                f"no m <= {MAX_ROUNDS} meets the targets; at m = {MAX_ROUNDS} the "
                f"{'S0 > s0_min' if failed == 's0' else 'S1 < exp(-gamma)'} constraint fails",
                failed,
            )
        lo, hi = hi, min(2 * hi, MAX_ROUNDS)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if all(_feasible(mid, targets)):
            hi = mid
        else:
            lo = mid
    return hi


@lru_cache(maxsize=256)
def solve(targets: ProtocolTargets) -> SolvedParams:
    """Smallest round count meeting S0 > s0_min and S1(eps) < exp(-gamma).

    The product m*theta is locked (see ``ProtocolTargets.m_theta``) and m is
    scanned upward from 1; the chosen point is re-certified on the binomial
    track before it is returned.
    """
    if targets.eps == 0:
        raise InfeasibleTargetsError("eps = 0: there is no signal to detect", "s1")
    m = _first_feasible(targets, 1)
    theta = targets.m_theta / m
    s0 = survival_curve(m, theta, 0.0, "exact").survival
    s1 = survival_curve(m, theta, targets.eps, "exact").survival
    if not (s0 > targets.s0_min and s1 < targets.s1_max):
        raise InfeasibleTargetsError(
            f"closed-form and binomial tracks disagree at m = {m}: S0 = {s0}, S1 = {s1}",
            "s0" if s0 <= targets.s0_min else "s1",
        )
    return SolvedParams(m, theta, s0, s1)


def leading_order_rounds(targets: ProtocolTargets) -> int:
    """Round count predicted by the leading-order formula under the same mtheta lock."""
    c2 = targets.m_theta**2
    return max(1, ceil(3 * (targets.gamma - c2 / 8) / (c2 * targets.eps**2)))


def error_probabilities(curve_h0: SurvivalCurve, curve_h1: SurvivalCurve) -> tuple[float, float]:
    """(alpha, beta) = (1 - S0, S1) for the rule "recorder reads |0> -> accept H0"."""
    for c in (curve_h0, curve_h1):
        if c.track != "exact":
            raise ValueError(f"error probabilities need exact-track curves, got {c.track!r}")
    if (curve_h0.m, curve_h0.theta) != (curve_h1.m, curve_h1.theta):
        raise ValueError(
            f"curves disagree on (m, theta): {(curve_h0.m, curve_h0.theta)} vs "
            f"{(curve_h1.m, curve_h1.theta)}"
        )
    return 1.0 - curve_h0.survival, curve_h1.survival


def error_probabilities_from_survival(s0: float, s1: float) -> tuple[float, float]:
    return 1.0 - s0, s1
