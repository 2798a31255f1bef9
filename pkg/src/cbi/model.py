"""Domain types for partially specified priors on the probability of failure.

An :class:`IntervalPartition` is the assessor's partial prior: breakpoints
``0 = y_0 < y_1 < ... < y_n = 1`` and the probability ``p_i`` that the pfd
lies in the i-th interval.  Everything downstream works on this reduced form.

Interval indices are 1-based in every public report (``j1``, ``j2``) to
match the usual notation; arrays are 0-based internally.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import (
    EndpointMismatch,
    InvalidPlacement,
    MassOutOfRange,
    MassSumMismatch,
    NonIncreasingBreakpoints,
    RefinementOverflow,
    ValidationError,
)

MASS_SUM_TOL = 1e-12
MAX_REFINED_INTERVALS = 10**5


@dataclass(frozen=True)
class IntervalPartition:
    """Validated interval-probability constraints.

    Attributes:
        breakpoints: ``y_0 .. y_n``.  For a fault-free partition ``y_1`` is
            stored as exactly 0, so interval 1 is the point ``{0}``.
        masses: ``p_1 .. p_n``.
        fault_free: True when ``p_1`` is the probability that pfd == 0.

    Build instances with :func:`validate_partition`, not directly.
    """

    breakpoints: tuple[float, ...]
    masses: tuple[float, ...]
    fault_free: bool = False

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.breakpoints[:-1], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.breakpoints[1:], dtype=float)

    def interval_of(self, x: float) -> int:
        """1-based index of the first interval whose closure contains ``x``."""
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"{x!r} is not a probability")
        y = self.breakpoints
        for i in range(1, len(y)):
            if x <= y[i]:
                return i
        return self.n

    def is_uniform_consistent(self, tol: float = MASS_SUM_TOL) -> bool:
        if self.fault_free:
            return False
        lengths = np.diff(self.breakpoints)
        return bool(np.all(np.abs(lengths - np.asarray(self.masses)) <= tol))


@dataclass(frozen=True)
class Observation:
    """Operational evidence: ``r`` failures and ``k`` successes."""

    r: float
    k: float

    def __post_init__(self):
        for name in ("r", "k"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be a finite nonnegative number, got {v!r}")

    @property
    def is_integral(self) -> bool:
        return float(self.r).is_integer() and float(self.k).is_integer()


@dataclass(frozen=True)
class ReliabilityTarget:
    """``m`` future demands to survive, optionally at confidence ``1 - alpha``."""

    m: int
    alpha: float | None = None

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise ValidationError(f"m must be a positive integer, got {self.m!r}")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha!r}")


@dataclass(frozen=True)
class Placement:
    """One location per interval, ``y_{i-1} <= x_i <= y_i``."""

    positions: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.positions)


def validate_partition(
    breakpoints: Sequence[float],
    masses: Sequence[float],
    fault_free: bool = False,
) -> IntervalPartition:
    """Check raw breakpoints and masses and return an :class:`IntervalPartition`.

    For ``fault_free=True`` the first mass is the point mass at 0.  The
    breakpoints may then either describe only the continuous part
    (``len(breakpoints) == len(masses)``) or include ``y_1 = 0`` explicitly.

    Nothing is renormalized: masses must already sum to 1 within 1e-12.
    """
    y = [float(v) for v in breakpoints]
    p = [float(v) for v in masses]
    if not p:
        raise ValidationError("at least one interval is required")
    if fault_free:
        if len(y) == len(p):
            y = [0.0] + y
        elif len(y) == len(p) + 1:
            if y[1] != 0.0:
                raise NonIncreasingBreakpoints(
                    "fault-free partitions carry y_1 = 0; drop it or set it to 0"
                )
        else:
            raise ValidationError(
                f"{len(p)} masses need {len(p)} or {len(p) + 1} breakpoints, got {len(y)}"
            )
    elif len(y) != len(p) + 1:
        raise ValidationError(f"{len(p)} masses need {len(p) + 1} breakpoints, got {len(y)}")

    if not all(math.isfinite(v) for v in y):
        raise EndpointMismatch("breakpoints must be finite")
    if y[0] != 0.0 or y[-1] != 1.0:
        raise EndpointMismatch(f"breakpoints must start at 0 and end at 1, got {y[0]!r}..{y[-1]!r}")
    start = 2 if fault_free else 1
    for i in range(start, len(y)):
        if not y[i] > y[i - 1]:
            raise NonIncreasingBreakpoints(
                f"breakpoints must be strictly increasing: y[{i - 1}]={y[i - 1]!r}, y[{i}]={y[i]!r}"
            )
    # a single interval necessarily carries all the mass
    top = 1.0 if len(p) == 1 else math.nextafter(1.0, 0.0)
    for i, pi in enumerate(p, start=1):
        if not 0.0 < pi <= top:
            raise MassOutOfRange(f"p_{i} = {pi!r} is not in (0, 1)")
    total = math.fsum(p)
    if abs(total - 1.0) > MASS_SUM_TOL:
        raise MassSumMismatch(f"masses sum to {total!r}, not 1")
    return IntervalPartition(tuple(y), tuple(p), bool(fault_free))


def uniform_consistent_partition(breakpoints: Sequence[float]) -> IntervalPartition:
    """Partition whose masses equal the interval lengths.

    The uniform prior Beta(1, 1) is then a member of the credal set, which
    makes the Beta(1, 1) answer an upper bound on the conservative one.
    """
    y = [float(v) for v in breakpoints]
    masses = [b - a for a, b in zip(y[:-1], y[1:])]
    return validate_partition(y, masses)


def refine_partition(
    partition: IntervalPartition,
    factor: int,
    max_intervals: int = MAX_REFINED_INTERVALS,
) -> IntervalPartition:
    """Split every interval into ``factor`` equal pieces with equal shares of its mass.

    The point interval of a fault-free partition is kept as is.
    """
    if isinstance(factor, bool) or int(factor) != factor or factor < 2:
        raise ValidationError(f"refinement factor must be an integer >= 2, got {factor!r}")
    factor = int(factor)
    y = partition.breakpoints
    keep_point = partition.fault_free
    n_new = (partition.n - 1) * factor + 1 if keep_point else partition.n * factor
    if n_new > max_intervals:
        raise RefinementOverflow(f"refinement would create {n_new} intervals (cap {max_intervals})")

    new_y = [0.0]
    new_p: list[float] = []
    for i, p in enumerate(partition.masses):
        a, b = y[i], y[i + 1]
        if keep_point and i == 0:
            new_y.append(0.0)
            new_p.append(p)
            continue
        width = (b - a) / factor
        for j in range(1, factor):
            new_y.append(a + j * width)
            new_p.append(p / factor)
        new_y.append(b)
        new_p.append(p / factor)
    return validate_partition(new_y, new_p, keep_point)


def validate_placement(partition: IntervalPartition, positions: Sequence[float]) -> Placement:
    """Check ``y_{i-1} <= x_i <= y_i`` for every interval."""
    x = tuple(float(v) for v in positions)
    if len(x) != partition.n:
        raise InvalidPlacement(f"expected {partition.n} positions, got {len(x)}")
    y = partition.breakpoints
    for i, xi in enumerate(x):
        if not y[i] <= xi <= y[i + 1]:
            raise InvalidPlacement(f"x_{i + 1} = {xi!r} outside [{y[i]!r}, {y[i + 1]!r}]")
    return Placement(x)
