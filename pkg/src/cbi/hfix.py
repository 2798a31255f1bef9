"""The fixed-point function h and its branch-wise inverses.

    h(x) = (1 - x)^m (r - x(m + k + r)) / (r - x(k + r))

For ``r > 0`` the function falls from 1 to 0 on ``[0, b]`` with
``b = r/(r+m+k)``, is negative on ``(b, a)`` with pole ``a = r/(r+k)``, and
falls from ``+inf`` to 0 on ``(a, 1]``.  The conservative value phi* is the
common level ``h(y**) = h(y*)`` of one point on each decreasing branch.
For ``r = 0`` only the upper branch survives: ``h(x) = (1-x)^m (m+k)/k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (
    DegenerateContext,
    InconsistentSolution,
    OutOfBranchRange,
    PoleEvaluation,
)

POLE_GUARD = 1e-14
MAX_BISECTION = 200


@dataclass(frozen=True)
class HContext:
    """Parameters of h plus its two landmarks.

    Attributes:
        m: Future demands.
        k: Observed successes.
        r: Observed failures.
        pole: ``r/(r+k)``; None when ``r = k = 0``.
        lower_zero: ``r/(r+m+k)``, the root of the lower branch.
    """

    m: int
    k: float
    r: float
    pole: float | None = field(init=False)
    lower_zero: float = field(init=False)

    def __post_init__(self):
        if self.m < 1 or self.k < 0 or self.r < 0:
            raise DegenerateContext(f"need m >= 1 and k, r >= 0, got m={self.m}, k={self.k}, r={self.r}")
        pole = None if self.r == 0 and self.k == 0 else self.r / (self.r + self.k)
        object.__setattr__(self, "pole", pole)
        object.__setattr__(self, "lower_zero", self.r / (self.r + self.m + self.k))


def _survival(x: float, m: float) -> float:
    """(1 - x)^m without losing digits for small x."""
    if x >= 1.0:
        return 0.0
    return math.exp(m * math.log1p(-x))


def h_eval(ctx: HContext, x: float) -> float:
    """Evaluate h at ``x`` in [0, 1].

    Raises:
        DegenerateContext: ``r = k = 0``.
        PoleEvaluation: ``x`` within 1e-14 of the pole.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x = {x!r} outside [0, 1]")
    if ctx.pole is None:
        raise DegenerateContext("h is undefined for r = k = 0")
    m, k, r = ctx.m, ctx.k, ctx.r
    if r == 0:
        return _survival(x, m) * (m + k) / k
    a, b = ctx.pole, ctx.lower_zero
    if abs(x - a) <= POLE_GUARD:
        raise PoleEvaluation(f"x = {x!r} is at the pole r/(r+k) = {a!r}")
    if x == 0.0:
        return 1.0
    # (r - x(r+k)) = (r+k)(a - x) keeps the cancellation near the pole explicit
    return _survival(x, m) * ((r + m + k) * (b - x)) / ((r + k) * (a - x))


def _upper_sup(ctx: HContext) -> float:
    return math.inf if ctx.r > 0 else (ctx.m + ctx.k) / ctx.k


def _bisect_decreasing(f, lo: float, hi: float, phi: float) -> tuple[float, float]:
    """Shrink ``[lo, hi]`` keeping ``f(lo) > phi >= f(hi)`` until floats run out."""
    for _ in range(MAX_BISECTION):
        mid = lo + 0.5 * (hi - lo)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > phi:
            lo = mid
        else:
            hi = mid
    return lo, hi


def h_invert_upper(ctx: HContext, phi: float, full_output: bool = False):
    """Solve ``h(x) = phi`` on the upper branch ``(pole, 1]``.

    For ``r = 0`` the branch is ``(0, 1]`` with supremum ``(m+k)/k``; asking
    for exactly that level returns 0 flagged as a boundary hit.

    Args:
        ctx: Parameters of h.
        phi: Target level, strictly positive.
        full_output: Also return whether the root sits on a branch end.

    Returns:
        ``x``, or ``(x, at_boundary)`` when ``full_output`` is set.  The
        flag is also raised when the root lies inside the pole guard band
        and ``x`` is only the nearest representable point.

    Raises:
        OutOfBranchRange: ``phi <= 0`` or above the branch supremum.
    """
    if ctx.pole is None:
        raise DegenerateContext("h is undefined for r = k = 0")
    sup = _upper_sup(ctx)
    if not (phi > 0.0 and math.isfinite(phi)) or phi > sup:
        raise OutOfBranchRange(f"phi = {phi!r} not in (0, {sup!r}]")
    if ctx.r == 0 and phi == sup:
        return (0.0, True) if full_output else 0.0

    a = ctx.pole if ctx.r > 0 else 0.0

    def f(x):
        if ctx.r > 0 and x - a <= POLE_GUARD:
            return math.inf
        return h_eval(ctx, x)

    lo, hi = _bisect_decreasing(f, a, 1.0, phi)
    # h(1) = 0 < phi puts the root strictly below 1 even when it rounds to 1
    x = lo if hi == 1.0 or abs(f(lo) - phi) < abs(f(hi) - phi) else hi
    # lo never leaving the pole means the root hides inside the guard band
    at_boundary = hi == 1.0 or (ctx.r > 0 and lo - a <= POLE_GUARD)
    return (x, at_boundary) if full_output else x


def h_invert_lower(ctx: HContext, phi: float, full_output: bool = False):
    """Solve ``h(x) = phi`` on the lower branch ``[0, r/(r+m+k)]``.

    Raises:
        DegenerateContext: ``r = 0``, where the lower branch does not exist.
        OutOfBranchRange: ``phi`` outside [0, 1].
    """
    if ctx.r == 0:
        raise DegenerateContext("the lower branch collapses when r = 0")
    if not 0.0 <= phi <= 1.0:
        raise OutOfBranchRange(f"phi = {phi!r} not in [0, 1]")
    b = ctx.lower_zero
    if phi == 1.0:
        return (0.0, True) if full_output else 0.0
    if phi == 0.0:
        return (b, True) if full_output else b
    lo, hi = _bisect_decreasing(lambda x: h_eval(ctx, x), 0.0, b, phi)
    # phi > 0 puts the root strictly below b even when it rounds to b
    x = lo if hi == b or abs(h_eval(ctx, lo) - phi) < abs(h_eval(ctx, hi) - phi) else hi
    return (x, x in (0.0, b)) if full_output else x


def h_stationary_points(ctx: HContext) -> tuple[float, float] | None:
    """Zeros of dh/dx, which lie strictly between the lower root and the pole.

    Returns:
        ``(x_lo, x_hi)`` or None when the discriminant is negative.
    """
    m, k, r = ctx.m, ctx.k, ctx.r
    if r == 0:
        raise DegenerateContext("h has no stationary points when r = 0")
    disc = -4 * r * k * k - 4 * k * r * (m + r) + r * r * (m - 1) ** 2
    if disc < 0:
        return None
    base = 2 * r * r + (2 * k + m + 1) * r
    denom = 2 * (r + k) * (r + m + k)
    root = math.sqrt(disc)
    pts = ((base - root) / denom, (base + root) / denom)
    if k > 0 and not all(ctx.lower_zero < p < ctx.pole for p in pts):
        raise InconsistentSolution(f"stationary points {pts} fall outside ({ctx.lower_zero}, {ctx.pole})")
    return pts


def h_unit_crossing(ctx: HContext) -> float:
    """The point x* > r/(r+k) where h returns to 1."""
    if ctx.r == 0:
        raise DegenerateContext("x* is defined for r > 0 only")
    x, edge = h_invert_upper(ctx, 1.0, full_output=True)
    if edge:
        raise OutOfBranchRange("h stays below 1 outside the pole guard band; x* is not representable")
    return x
