"""Demand budgets: how many successes are needed to claim reliability 1 - alpha.

The Beta(1, 1) baseline has a closed-form predictive.  The conservative
budget relies on phi* being nondecreasing in k, so a bracket-and-bisect
search over integer k finds the smallest adequate count; the search checks
that assumption at its final bracket instead of trusting it.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass

from .errors import ValidationError
from .model import IntervalPartition, ReliabilityTarget
from .oracle import beta_predictive
from .solver import DEFAULT_MAX_ITER, DEFAULT_TOL, solve

K_CAP = 10**9


class PlanStatus(enum.Enum):
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"
    INFEASIBLE_NUMERIC = "INFEASIBLE_NUMERIC"


@dataclass(frozen=True)
class PlanResult:
    """Smallest success count reaching the target.

    Attributes:
        status: FEASIBLE, INFEASIBLE (the target exceeds the supremum of
            phi* over k) or INFEASIBLE_NUMERIC (not reached below the cap).
        k_required: Successes needed; None unless feasible.
        total_demands: ``k_required + r``; None unless feasible.
        phi_at_k: Predictive probability at ``k_required``.
        monotonicity_ok: Whether phi was nondecreasing across the final
            search bracket.
    """

    status: PlanStatus
    k_required: int | None = None
    total_demands: int | None = None
    phi_at_k: float | None = None
    monotonicity_ok: bool = True

    @property
    def feasible(self) -> bool:
        return self.status is PlanStatus.FEASIBLE


def _check_inputs(m: int, alpha: float, r: float) -> float:
    ReliabilityTarget(m, alpha)
    if r < 0 or int(r) != r:
        raise ValidationError(f"r must be a nonnegative integer, got {r!r}")
    return 1.0 - alpha


class _Search:
    """Memoized phi(k) with a doubling-then-bisection search for the threshold."""

    def __init__(self, f: Callable[[int], float]):
        self._f = f
        self.cache: dict[int, float] = {}
        self.bracket: tuple[int, int] | None = None

    def __call__(self, k: int) -> float:
        if k not in self.cache:
            self.cache[k] = self._f(k)
        return self.cache[k]

    def smallest(self, target: float, k_min: int, k_cap: int | None) -> int | None:
        """Smallest integer k >= k_min with phi(k) >= target; None past the cap."""
        if self(k_min) >= target:
            return k_min
        lo, hi = k_min, max(1, 2 * k_min)
        while self(hi) < target:
            if k_cap is not None and hi >= k_cap:
                return None
            lo = hi
            hi = 2 * hi if k_cap is None else min(2 * hi, k_cap)
        self.bracket = (lo, hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self(mid) >= target:
                hi = mid
            else:
                lo = mid
        return hi

    def result(self, k: int, r: int, k_min: int) -> PlanResult:
        phi = self(k)
        ok = k == k_min or self(k - 1) <= phi
        if self.bracket is not None:
            lo, hi = self.bracket
            ok = ok and self(lo) <= phi <= self(hi)
        return PlanResult(PlanStatus.FEASIBLE, k, k + int(r), phi, ok)


def plan_demands_beta(m: int, alpha: float, r: int) -> PlanResult:
    """Smallest k with ``beta_predictive(m, k, r) >= 1 - alpha``.

    Always feasible.  The search is not capped: large r genuinely needs
    more than 1e9 successes.
    """
    target = _check_inputs(m, alpha, r)

    def f(k: int) -> float:
        return beta_predictive(m, k, r)

    search = _Search(f)
    return search.result(search.smallest(target, 0, None), r, 0)


def feasibility_sup(partition: IntervalPartition, m: int, r: float) -> float:
    """Supremum over k of phi*, approached but never reached.

    With failures every mass below the second breakpoint is pinned at 0 and
    contributes nothing, leaving ``(1 - y_2)^m``.  Without failures the
    first interval's mass can pile at its upper end, giving ``(1 - y_1)^m``.
    A point mass at zero pushes both one breakpoint up, and without failures
    it drives the supremum to 1.
    """
    y = partition.breakpoints
    if partition.fault_free:
        if r == 0:
            return 1.0
        idx = 3
    else:
        idx = 2 if r > 0 else 1
    if idx >= len(y) - 1:
        return 0.0
    return math.exp(m * math.log1p(-y[idx]))


def phi_without_successes(partition: IntervalPartition, m: int) -> float:
    """phi at r = k = 0: every mass at its upper endpoint."""
    terms = [p * math.exp(m * math.log1p(-hi)) if hi < 1 else 0.0 for p, hi in zip(partition.masses, partition.breakpoints[1:])]
    return math.fsum(terms)


def plan_demands_cbi(
    partition: IntervalPartition,
    m: int,
    alpha: float,
    r: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    k_cap: int = K_CAP,
) -> PlanResult:
    """Smallest k whose conservative predictive reaches ``1 - alpha``.

    Returns INFEASIBLE without searching when the target is not below
    :func:`feasibility_sup`.
    """
    target = _check_inputs(m, alpha, r)
    if feasibility_sup(partition, m, r) <= target:
        return PlanResult(PlanStatus.INFEASIBLE)

    def f(k: int) -> float:
        if k == 0:
            return phi_without_successes(partition, m)
        return solve(partition, r, k, m, tol, max_iter).phi_star

    k_min = 1 if r > 0 else 0
    search = _Search(f)
    k = search.smallest(target, k_min, k_cap)
    if k is None:
        return PlanResult(PlanStatus.INFEASIBLE_NUMERIC)
    return search.result(k, r, k_min)


@dataclass(frozen=True)
class RatioPoint:
    r: int
    beta_total: int
    cbi_total: int | None
    ratio: float | None
    feasible: bool


def ratio_curve(partition: IntervalPartition, m: int, alpha: float, r_list: Iterable[int]) -> list[RatioPoint]:
    """Beta total over conservative total for each r; infeasible r are flagged, not dropped."""
    out = []
    for r in r_list:
        beta = plan_demands_beta(m, alpha, r)
        cbi = plan_demands_cbi(partition, m, alpha, r)
        if cbi.feasible:
            out.append(RatioPoint(r, beta.total_demands, cbi.total_demands, beta.total_demands / cbi.total_demands, True))
        else:
            out.append(RatioPoint(r, beta.total_demands, None, None, False))
    return out


@dataclass(frozen=True)
class StationaryPoint:
    r: int
    k_required: int
    y_star: float
    y_star_star: float | None
    pole: float
    x_star_limit: float


def stationary_convergence_curve(partition: IntervalPartition, m: int, alpha: float, r_list: Iterable[int]) -> list[StationaryPoint]:
    """Attractor and repeller at the planned budget, beside their large-r limits."""
    x_star = 1.0 - (1.0 - alpha) ** (1.0 / m)
    out = []
    for r in r_list:
        plan = plan_demands_cbi(partition, m, alpha, r)
        if not plan.feasible:
            continue
        sol = solve(partition, r, plan.k_required, m)
        pole = r / (r + plan.k_required)
        out.append(StationaryPoint(r, plan.k_required, sol.y_star, sol.y_star_star, pole, x_star))
    return out


class LimitTracking(enum.Enum):
    TRACKS_POLE = "TRACKS_POLE"
    TRACKS_XSTAR = "TRACKS_XSTAR"


@dataclass(frozen=True)
class AsymptoticLimits:
    """Large-r limits at a fixed target.

    Attributes:
        kbeta_over_r: Limit of the Beta budget per failure.
        x_star: ``1 - (1-alpha)^(1/m)``.
        y_star_limit: Limit of the attractor; ``x_star`` unless the pole
            limit exceeds it.
        y_star_star_limit: Limit of the repeller, when the pole limit is known.
        y_star_star_descriptor: Which landmark the repeller follows.
    """

    kbeta_over_r: float
    x_star: float
    y_star_limit: float
    y_star_star_limit: float | None
    y_star_star_descriptor: LimitTracking


def asymptotic_limits(m: int, alpha: float, pole_limit: float | None = None) -> AsymptoticLimits:
    """Closed-form limits as r grows with k planned to hit ``1 - alpha``.

    ``pole_limit`` is the limit of ``r/(r + k)``.  If it sits below
    ``x_star`` the attractor tends to ``x_star`` and the repeller to the
    pole; above, the two swap; when equal both tend to ``x_star``.  Without
    it the attractor limit defaults to ``x_star`` and the repeller is
    described as tracking the pole.
    """
    ReliabilityTarget(m, alpha)
    s = (1.0 - alpha) ** (1.0 / m)
    x_star = -math.expm1(math.log1p(-alpha) / m)
    kbeta = s / x_star
    if pole_limit is None:
        return AsymptoticLimits(kbeta, x_star, x_star, None, LimitTracking.TRACKS_POLE)
    if pole_limit < x_star:
        return AsymptoticLimits(kbeta, x_star, x_star, pole_limit, LimitTracking.TRACKS_POLE)
    if pole_limit > x_star:
        return AsymptoticLimits(kbeta, x_star, pole_limit, x_star, LimitTracking.TRACKS_XSTAR)
    return AsymptoticLimits(kbeta, x_star, x_star, x_star, LimitTracking.TRACKS_XSTAR)


def phi_growth_curve(partition: IntervalPartition, r: float, m: int, k_list: Iterable[float]) -> list[tuple[float, float]]:
    """``(k, phi*(k))`` samples."""
    return [(k, solve(partition, r, k, m).phi_star) for k in k_list]


def phi_growth_limit(partition: IntervalPartition, r: float, m: int) -> float:
    """Limit of phi*(k) as k grows."""
    return feasibility_sup(partition, m, r)
