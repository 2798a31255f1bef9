"""Worst-case posterior predictive over an interval-probability credal set.

Minimizes

    phi(x) = sum_i p_i x_i^r (1-x_i)^(m+k) / sum_i p_i x_i^r (1-x_i)^k

over placements ``x_i`` in the closure of each interval, by a Dinkelbach
iteration: for a level ``phi_t`` every coordinate minimizes
``q(x) = x^r (1-x)^k ((1-x)^m - phi_t)`` on its own interval, and
``phi_{t+1}`` is the ratio at that placement.  The sign of ``q'`` is the
sign of ``(r - x(r+k)) (h(x) - phi_t)``, so each interval's minimum is one
of its endpoints or the upper-branch root of ``h = phi_t``.
"""

from __future__ import annotations

import enum
import math
import warnings
from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, xlog1py, xlogy

from .errors import (
    InconsistentSolution,
    InvalidRegime,
    NoConvergence,
    ZeroDenominator,
)
from .hfix import HContext, h_eval, h_invert_lower, h_invert_upper
from .model import IntervalPartition, Placement, validate_partition, validate_placement

DEFAULT_TOL = 1e-13
DEFAULT_MAX_ITER = 200
REPRODUCTION_TOL = 1e-10
# Dinkelbach steps before falling back to a bracketed root search
BRACKET_AFTER = 25


class Branch(enum.Enum):
    """Which endpoint the repeller interval uses, or the phi* = 0 limit."""

    PHI1 = "PHI1"
    PHI2 = "PHI2"
    DEGENERATE_ZERO = "DEGENERATE_ZERO"


@dataclass(frozen=True)
class FixedPointSolution:
    """Result of a solve.

    Attributes:
        phi_star: Infimum of the posterior predictive probability.
        y_star: Attractor, the upper-branch root of ``h = phi_star``.
        y_star_star: Repeller on the lower branch; None when ``r = 0``.
        j1: 1-based interval holding ``y_star_star``; None when ``r = 0``.
        j2: 1-based interval holding ``y_star`` (lower index on ties).
        branch: Endpoint choice in interval ``j1``, or DEGENERATE_ZERO.
        iterations: Dinkelbach steps taken.
        residual: ``|h(y_star) - phi_star|``.
        converged: False only on solutions carried by NoConvergence.
        placement: The minimizing placement, one location per interval.
    """

    phi_star: float
    y_star: float
    y_star_star: float | None
    j1: int | None
    j2: int
    branch: Branch
    iterations: int
    residual: float
    converged: bool
    placement: Placement


@dataclass(frozen=True)
class DiscretePrior:
    """Conservative prior as ``(location, mass)`` atoms, one per interval."""

    atoms: tuple[tuple[float, float], ...]

    @property
    def locations(self) -> tuple[float, ...]:
        return tuple(a[0] for a in self.atoms)

    @property
    def masses(self) -> tuple[float, ...]:
        return tuple(a[1] for a in self.atoms)


# ---------------------------------------------------------------- objective


def _log_likelihood(x: np.ndarray, r: float, k: float) -> np.ndarray:
    # x^r (1-x)^k with 0 * log 0 = 0
    return xlogy(r, x) + xlog1py(k, -x)


def weighted_ratio(weights: Sequence[float], positions: Sequence[float], r: float, k: float, m: int) -> float:
    """Objective with unnormalized weights.

    Weights are normalized by their sum first, so rescaling them by a power
    of two leaves the result bit-identical.
    """
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    x = np.asarray(positions, dtype=float)
    logw = np.log(w)
    lg = _log_likelihood(x, r, k)
    log_den = logsumexp(logw + lg)
    if log_den == -math.inf:
        raise ZeroDenominator("every term of the denominator vanishes at this placement")
    log_num = logsumexp(logw + lg + xlog1py(m, -x))
    return float(math.exp(log_num - log_den))


def objective_value(partition: IntervalPartition, placement: Placement | Sequence[float], r: float, k: float, m: int) -> float:
    """Posterior predictive probability of ``m`` failure-free demands.

    Raises:
        InvalidPlacement: A position lies outside its interval.
        ZeroDenominator: The placement gives zero likelihood everywhere.
    """
    if not isinstance(placement, Placement):
        placement = validate_placement(partition, placement)
    return weighted_ratio(partition.masses, placement.positions, r, k, m)


# ------------------------------------------------------- Dinkelbach engine


def _q_terms(x: float, r: float, k: float, m: int, phi: float) -> tuple[int, float]:
    """``x^r (1-x)^k ((1-x)^m - phi)`` as (sign, log|value|)."""
    if (r > 0 and x == 0.0) or (x == 1.0 and k > 0):
        return 0, -math.inf
    lg = (r * math.log(x) if r > 0 else 0.0) + (k * math.log1p(-x) if k > 0 else 0.0)
    d = (math.exp(m * math.log1p(-x)) if x < 1.0 else 0.0) - phi
    if d == 0.0:
        return 0, -math.inf
    return (1 if d > 0 else -1), lg + math.log(abs(d))


def _argmin_q(cands: Sequence[float], r: float, k: float, m: int, phi: float) -> float:
    """Candidate with the smallest q; the first one wins ties."""
    terms = [_q_terms(c, r, k, m, phi) for c in cands]
    shift = max((lv for s, lv in terms if s), default=0.0)
    vals = [s * math.exp(lv - shift) if s else 0.0 for s, lv in terms]
    return cands[int(np.argmin(vals))]


class _Problem:
    """Flattened instance consumed by the iteration."""

    def __init__(self, partition: IntervalPartition, r: float, k: float, m: int):
        self.partition = partition
        self.y = partition.breakpoints
        self.p = partition.masses
        self.n = partition.n
        self.r, self.k, self.m = r, k, m
        self.ctx = HContext(m, k, r)
        # a mass in the first interval contributes nothing at 0 when r > 0
        self.force_zero = r > 0 and self.n >= 2

    def placement_for(self, phi: float) -> tuple[float, tuple[float, ...]]:
        xu = h_invert_upper(self.ctx, phi)
        x = []
        for i in range(self.n):
            lo, hi = self.y[i], self.y[i + 1]
            if i == 0 and self.force_zero:
                x.append(0.0)
            else:
                x.append(_argmin_q((lo, min(max(xu, lo), hi), hi), self.r, self.k, self.m, phi))
        return xu, tuple(x)

    def ratio(self, x: Sequence[float]) -> float:
        return weighted_ratio(self.p, x, self.r, self.k, self.m)

    def settled(self, old: float, new: float, x: Sequence[float], tol: float) -> bool:
        """Step below tol, or below the rounding noise of the log terms at ``x``.

        A ratio that underflows to 0 is final: phi* lies between it and 0.
        """
        return new == 0.0 or abs(new - old) <= max(tol * old, _noise_floor(x, self.r, self.k, self.m) * new)


def _noise_floor(x: Sequence[float], r: float, k: float, m: int) -> float:
    """Relative precision of the ratio at ``x``.

    Each log term ``r log x + (m+k) log(1-x)`` carries an absolute rounding
    error proportional to its magnitude, which becomes a relative error of
    the ratio.  It dominates once k reaches the millions.
    """
    big = 0.0
    for xi in x:
        if 0.0 < xi < 1.0:
            big = max(big, r * abs(math.log(xi)) + (m + k) * abs(math.log1p(-xi)))
    return 8 * np.finfo(float).eps * big


def _dinkelbach(prob: _Problem, phi_start: float, tol: float, max_iter: int) -> Iterator[tuple[int, float, tuple[float, ...], bool]]:
    """Yield ``(t, phi_t, placement_t, converged)`` until the step is below tol."""
    phi = phi_start
    for t in range(1, max_iter + 1):
        _, x = prob.placement_for(phi)
        new = prob.ratio(x)
        done = prob.settled(phi, new, x, tol)
        yield t, new, x, done
        if done:
            return
        phi = new


def _bracketed(prob: _Problem, phi_hi: float, tol: float, budget: int) -> tuple[float, tuple[float, ...], int, bool]:
    """Root of ``F(phi) = min_x N(x) - phi D(x)`` by Brent's method on log phi.

    ``F`` is strictly decreasing and ``sign F(phi) = sign(ratio(x_phi) - phi)``,
    so the sign test is exact even where Dinkelbach's Newton steps crawl.
    """
    evals = 0

    def rel(u: float) -> float:
        nonlocal evals
        evals += 1
        phi = math.exp(u)
        return prob.ratio(prob.placement_for(phi)[1]) / phi - 1.0

    hi = math.log(phi_hi)
    if rel(hi) >= 0.0:
        x = prob.placement_for(phi_hi)[1]
        return prob.ratio(x), x, evals, True
    lo = hi
    f_lo = -1.0
    while f_lo < 0.0:
        if lo < math.log(1e-300):
            # 0 < phi* <= ratio(x_lo) < 1e-300: within any absolute tol
            x = prob.placement_for(math.exp(lo))[1]
            return prob.ratio(x), x, evals, True
        if evals >= budget:
            return phi_hi, prob.placement_for(phi_hi)[1], evals, False
        lo -= math.log(1e3)
        f_lo = rel(lo)
    if f_lo == 0.0:
        root = lo
    else:
        root = brentq(rel, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=max(1, budget - evals))
    x = prob.placement_for(math.exp(root))[1]
    phi = prob.ratio(x)
    return phi, x, evals, prob.settled(math.exp(root), phi, x, tol)


def _run(prob: _Problem, tol: float, max_iter: int, phi_start: float = 1.0) -> tuple[float, tuple[float, ...], int, bool]:
    phi, x, t, done = phi_start, (), 0, False
    for t, phi, x, done in _dinkelbach(prob, phi_start, tol, min(max_iter, BRACKET_AFTER)):
        pass
    if done or t >= max_iter:
        return phi, x, t, done
    try:
        phi2, x2, evals, done = _bracketed(prob, phi, tol, max_iter - t)
    except (RuntimeError, ValueError):
        return phi, x, max_iter, False
    return phi2, x2, t + evals, done


# --------------------------------------------------------- prior layout


def _layout(y: Sequence[float], n: int, r: float, j1: int | None, j2: int, branch: Branch, y_star: float) -> tuple[float, ...]:
    """Atom locations of the conservative prior for a given branch."""
    x = []
    for i in range(1, n + 1):
        lo, hi = y[i - 1], y[i]
        if r > 0:
            if i == 1:
                loc = 0.0
            elif i < j1:
                loc = lo
            elif i == j1:
                if branch is Branch.PHI1:
                    loc = lo
                else:
                    loc = y_star if i == j2 else hi
            elif i < j2:
                loc = hi
            elif i == j2:
                loc = y_star
            else:
                loc = lo
        else:
            loc = hi if i < j2 else (y_star if i == j2 else lo)
        x.append(min(max(loc, lo), hi))
    return tuple(x)


def _degenerate(partition: IntervalPartition, r: float, k: float, m: int, zeros: int) -> FixedPointSolution:
    """phi* = 0 limit: the first ``zeros`` masses at 0, the rest at 1."""
    n = partition.n
    x = tuple(0.0 if i < zeros else 1.0 for i in range(n))
    if n == zeros:
        x = x[:-1] + (1.0,)
    ctx = HContext(m, k, r)
    y_ss = ctx.lower_zero if r > 0 else None
    j1 = partition.interval_of(y_ss) if r > 0 else None
    return FixedPointSolution(
        phi_star=0.0,
        y_star=1.0,
        y_star_star=y_ss,
        j1=j1,
        j2=n,
        branch=Branch.DEGENERATE_ZERO,
        iterations=0,
        residual=abs(h_eval(ctx, 1.0)),
        converged=True,
        placement=Placement(x),
    )


def _level(phi: float) -> float:
    # a phi* that underflowed to 0 is inverted at the smallest positive double
    return max(phi, math.ulp(0.0))


def _finish(prob: _Problem, phi_last: float, iterations: int, converged: bool) -> FixedPointSolution:
    """Turn the last iterate into a solution with branch, indices and prior layout."""
    part, r = prob.partition, prob.r
    y_star = h_invert_upper(prob.ctx, _level(phi_last))
    j2 = part.interval_of(y_star)
    if r > 0:
        y_ss = h_invert_lower(prob.ctx, _level(phi_last))
        j1 = part.interval_of(y_ss)
        x1 = _layout(prob.y, prob.n, r, j1, j2, Branch.PHI1, y_star)
        x2 = _layout(prob.y, prob.n, r, j1, j2, Branch.PHI2, y_star)
        phi1, phi2 = prob.ratio(x1), prob.ratio(x2)
        branch, phi, x = (Branch.PHI1, phi1, x1) if phi1 <= phi2 else (Branch.PHI2, phi2, x2)
    else:
        y_ss, j1, branch = None, None, Branch.PHI1
        x = _layout(prob.y, prob.n, r, None, j2, branch, y_star)
        phi = prob.ratio(x)
    if converged and phi > phi_last + REPRODUCTION_TOL:
        raise InconsistentSolution(f"prior layout gives {phi!r}, iteration reached {phi_last!r}")
    # refresh the fixed points at the final level
    y_star = h_invert_upper(prob.ctx, _level(phi))
    if r > 0:
        y_ss = h_invert_lower(prob.ctx, _level(phi))
    return FixedPointSolution(
        phi_star=phi,
        y_star=y_star,
        y_star_star=y_ss,
        j1=j1,
        j2=j2,
        branch=branch,
        iterations=iterations,
        residual=abs(h_eval(prob.ctx, y_star) - phi),
        converged=converged,
        placement=Placement(x),
    )


def _solve(prob: _Problem, tol: float, max_iter: int) -> FixedPointSolution:
    phi, _, t, done = _run(prob, tol, max_iter)
    sol = _finish(prob, phi, t, done)
    if not done:
        raise NoConvergence(f"no convergence after {max_iter} iterations (phi = {phi!r})", sol)
    return sol


# --------------------------------------------------------------- solvers


def solve_general(partition: IntervalPartition, r: float, k: float, m: int, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> FixedPointSolution:
    """Conservative posterior predictive after ``r > 0`` failures and ``k > 0`` successes.

    With two or fewer intervals the infimum is 0: the first mass sits at 0
    and the last at 1, where both contribute no likelihood in the limit.

    Raises:
        InvalidRegime: ``r = 0``, ``k = 0`` or a fault-free partition.
        NoConvergence: Iteration cap reached; the last iterate is attached.
    """
    if partition.fault_free:
        raise InvalidRegime("fault-free partitions go through solve_fault_free")
    if not r > 0:
        raise InvalidRegime("r = 0 is handled by solve_no_failure")
    if not k > 0:
        raise InvalidRegime("k = 0 with r > 0 is not supported")
    if partition.n <= 2:
        return _degenerate(partition, r, k, m, zeros=1)
    return _solve(_Problem(partition, r, k, m), tol, max_iter)


def solve_no_failure(partition: IntervalPartition, k: float, m: int, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> FixedPointSolution:
    """Conservative posterior predictive after ``k > 0`` successes and no failures.

    Here ``h(x) = (1-x)^m (m+k)/k`` and the solution satisfies
    ``phi* = h(y*)``; masses below ``y*`` sit at upper endpoints and masses
    above it at lower endpoints.
    """
    if not k > 0:
        raise InvalidRegime("k = 0 is outside the solver; see planner for the closed form")
    if partition.n == 1:
        return _degenerate(partition, 0.0, k, m, zeros=0)
    return _solve(_Problem(partition, 0.0, k, m), tol, max_iter)


def _merge_point_mass(partition: IntervalPartition) -> IntervalPartition:
    """Fold the point mass at 0 into the first continuous interval."""
    y = (0.0,) + partition.breakpoints[2:]
    p = (partition.masses[0] + partition.masses[1],) + partition.masses[2:]
    return validate_partition(y, p)


def solve_fault_free(partition: IntervalPartition, r: float, k: float, m: int, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> FixedPointSolution:
    """Conservative value when ``p_1`` is the probability of pfd = 0.

    With ``r > 0`` the point mass and the first continuous interval both
    end up at 0, so the problem reduces to the general one on the merged
    partition; fewer than three continuous intervals give phi* = 0.
    """
    if not partition.fault_free:
        raise InvalidRegime("partition is not flagged fault-free")
    if not k > 0:
        raise InvalidRegime("k = 0 is not supported")
    if r == 0:
        return _solve(_Problem(partition, 0.0, k, m), tol, max_iter)
    if partition.n <= 3:
        return _degenerate(partition, r, k, m, zeros=2)
    merged = _merge_point_mass(partition)
    try:
        sol = solve_general(merged, r, k, m, tol, max_iter)
    except NoConvergence as exc:
        raise NoConvergence(str(exc), _unmerge(exc.solution)) from exc
    return _unmerge(sol)


def _unmerge(sol: FixedPointSolution) -> FixedPointSolution:
    return FixedPointSolution(
        phi_star=sol.phi_star,
        y_star=sol.y_star,
        y_star_star=sol.y_star_star,
        j1=None if sol.j1 is None else sol.j1 + 1,
        j2=sol.j2 + 1,
        branch=sol.branch,
        iterations=sol.iterations,
        residual=sol.residual,
        converged=sol.converged,
        placement=Placement((0.0,) + sol.placement.positions),
    )


def solve(partition: IntervalPartition, r: float, k: float, m: int, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> FixedPointSolution:
    """Dispatch to the solver for the (r, partition) regime."""
    if partition.fault_free:
        return solve_fault_free(partition, r, k, m, tol, max_iter)
    if r == 0:
        return solve_no_failure(partition, k, m, tol, max_iter)
    return solve_general(partition, r, k, m, tol, max_iter)


def iterate_trace(partition: IntervalPartition, r: float, k: float, m: int, phi_start: float = 1.0, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> list[tuple[int, float, Placement]]:
    """Every iterate ``(t, phi_t, placement_t)`` starting from ``phi_start``.

    The sequence decreases after the first step; a rise is reported through
    :func:`warnings.warn` rather than hidden.
    """
    if partition.fault_free and r > 0:
        if partition.n <= 3:
            raise InvalidRegime("phi* = 0 here; there is nothing to iterate")
        trace = iterate_trace(_merge_point_mass(partition), r, k, m, phi_start, tol, max_iter)
        return [(t, phi, Placement((0.0,) + x.positions)) for t, phi, x in trace]
    if not k > 0:
        raise InvalidRegime("k = 0 is not supported")
    if not 0.0 < phi_start <= 1.0:
        raise ValueError(f"phi_start must lie in (0, 1], got {phi_start!r}")
    prob = _Problem(partition, r, k, m)
    out = [(t, phi, Placement(x)) for t, phi, x, _ in _dinkelbach(prob, phi_start, tol, max_iter)]
    # rises within the rounding noise of the ratio are not violations
    steps = zip(out[:-1], out[1:])
    if any(b > a + max(1e-15, (4 * np.finfo(float).eps + _noise_floor(x.positions, r, k, m)) * b) for (_, a, _), (_, b, x) in steps):
        warnings.warn("Dinkelbach iterates are not monotone", RuntimeWarning, stacklevel=2)
    return out


def build_conservative_prior(solution: FixedPointSolution, partition: IntervalPartition, r: float, k: float, m: int) -> DiscretePrior:
    """Atoms of the prior attaining ``solution.phi_star``.

    Masses below the repeller sit at lower endpoints, those between the
    repeller and attractor at upper endpoints, the attractor interval at
    ``y_star`` and the rest at lower endpoints.  The ``j1`` interval follows
    the branch tag.  Without failures the layout is upper endpoints below
    ``y_star`` and lower ones above.

    Raises:
        InconsistentSolution: The atoms do not reproduce phi* within 1e-10.
    """
    if not (solution.converged or solution.branch is Branch.DEGENERATE_ZERO):
        raise InconsistentSolution("refusing to build a prior from an unconverged solution")
    if solution.branch is Branch.DEGENERATE_ZERO:
        x = solution.placement.positions
    else:
        x = _layout(partition.breakpoints, partition.n, r, solution.j1, solution.j2, solution.branch, solution.y_star)
        if partition.fault_free and r > 0:
            # the continuous interval next to the point mass is pinned at 0
            x = (0.0, 0.0) + x[2:]
        phi = objective_value(partition, x, r, k, m)
        if abs(phi - solution.phi_star) > REPRODUCTION_TOL:
            raise InconsistentSolution(f"prior gives {phi!r}, solution says {solution.phi_star!r}")
    return DiscretePrior(tuple(zip(x, partition.masses)))
