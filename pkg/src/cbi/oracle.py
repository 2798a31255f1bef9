"""Brute-force reference values.

:func:`grid_minimize` searches placements directly, sharing no code with
the fixed-point solver, and also handles the variant where up to ``l`` of
the ``m`` future demands may fail.  :func:`beta_predictive` is the closed
form under a uniform Beta(1, 1) prior.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, xlog1py, xlogy

from .errors import CostGuard, ValidationError
from .model import IntervalPartition, Placement

MAX_INTERVALS = 6
MIN_DENSITY = 50
MAX_DENSITY = 10**6


class ObjectiveTag(enum.Enum):
    STANDARD = "standard"
    CAPPED = "capped"


@dataclass(frozen=True)
class ObjectiveKind:
    """Which success event is scored.

    Attributes:
        tag: STANDARD (no future failure) or CAPPED (at most ``l`` failures).
        l: Allowed future failures, only for CAPPED, with ``0 <= l < m``.
    """

    tag: ObjectiveTag = ObjectiveTag.STANDARD
    l: int | None = None

    def __post_init__(self):
        if (self.tag is ObjectiveTag.CAPPED) != (self.l is not None):
            raise ValidationError("l must be given exactly when the objective is capped")
        if self.l is not None and (int(self.l) != self.l or self.l < 0):
            raise ValidationError(f"l must be a nonnegative integer, got {self.l!r}")

    @classmethod
    def capped(cls, l: int) -> ObjectiveKind:
        return cls(ObjectiveTag.CAPPED, l)


STANDARD = ObjectiveKind()


def _log_terms(x: np.ndarray, p: float, kind: ObjectiveKind, r: float, k: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-point log numerator and log denominator contributions."""
    lp = math.log(p)
    log_den = lp + xlogy(r, x) + xlog1py(k, -x)
    if kind.tag is ObjectiveTag.STANDARD or kind.l == 0:
        log_num = lp + xlogy(r, x) + xlog1py(m + k, -x)
        return log_num, log_den
    s = np.arange(kind.l + 1, dtype=float)[:, None]
    log_binom = gammaln(m + 1) - gammaln(s + 1) - gammaln(m - s + 1)
    log_num = lp + logsumexp(log_binom + xlogy(r + s, x) + xlog1py(m + k - s, -x), axis=0)
    return log_num, log_den


class _Grid:
    """Candidate points for one interval with cached log terms."""

    def __init__(self, pts: np.ndarray, p: float, kind: ObjectiveKind, r: float, k: float, m: int):
        self.pts = pts
        self.num, self.den = _log_terms(pts, p, kind, r, k, m)


def _value(num: np.ndarray, den: np.ndarray) -> float:
    d = logsumexp(den)
    return math.inf if d == -math.inf else float(np.exp(logsumexp(num) - d))


def _descend(grids: list[_Grid], idx: list[int], max_sweeps: int) -> tuple[float, list[int]]:
    """Coordinate descent over grid indices, accepting strict improvements only."""
    n = len(grids)
    num = np.array([g.num[i] for g, i in zip(grids, idx)])
    den = np.array([g.den[i] for g, i in zip(grids, idx)])
    best = _value(num, den)
    for _ in range(max_sweeps):
        moved = False
        for j in range(n):
            mask = np.arange(n) != j
            rest_n = logsumexp(num[mask]) if n > 1 else -math.inf
            rest_d = logsumexp(den[mask]) if n > 1 else -math.inf
            g = grids[j]
            d = np.logaddexp(rest_d, g.den)
            with np.errstate(invalid="ignore"):
                vals = np.exp(np.logaddexp(rest_n, g.num) - d)
            vals[d == -math.inf] = math.inf
            t = int(np.argmin(vals))
            if vals[t] < best:
                best, idx[j], moved = float(vals[t]), t, True
                num[j], den[j] = g.num[t], g.den[t]
        if not moved:
            break
    return best, idx


def grid_minimize(
    partition: IntervalPartition,
    kind: ObjectiveKind = STANDARD,
    r: float = 0.0,
    k: float = 0.0,
    m: int = 1,
    density: int = 2000,
    levels: int = 3,
    shrink: float = 50.0,
    max_sweeps: int = 100,
) -> tuple[float, Placement]:
    """Minimize the objective over per-interval grids.

    Coordinate descent is restarted from every corner of the box of
    interval endpoints.  Each further level lays a fresh grid of
    ``density`` points on a window ``shrink`` times narrower around the
    incumbent and descends again.

    Returns:
        ``(phi_hat, placement)``.  ``phi_hat`` is inf if every probed
        placement had zero likelihood.

    Raises:
        CostGuard: More than 6 intervals, or density outside [50, 1e6].
    """
    n = partition.n
    if n > MAX_INTERVALS:
        raise CostGuard(f"grid oracle is limited to {MAX_INTERVALS} intervals, got {n}")
    if not MIN_DENSITY <= density <= MAX_DENSITY:
        raise CostGuard(f"density must lie in [{MIN_DENSITY}, {MAX_DENSITY}], got {density}")
    if levels < 1:
        raise ValidationError("levels must be >= 1")
    if kind.l is not None and kind.l >= m:
        raise ValidationError(f"l = {kind.l} must be below m = {m}")

    y, p = partition.breakpoints, partition.masses
    bounds = [(y[i], y[i + 1]) for i in range(n)]
    grids = [_Grid(np.linspace(lo, hi, density) if hi > lo else np.array([lo]), p[i], kind, r, k, m) for i, (lo, hi) in enumerate(bounds)]

    best, best_x = math.inf, None
    for corner in itertools.product((0, -1), repeat=n):
        idx = [c % len(g.pts) for c, g in zip(corner, grids)]
        val, idx = _descend(grids, idx, max_sweeps)
        if val < best:
            best, best_x = val, [g.pts[i] for g, i in zip(grids, idx)]
    if best_x is None:
        best_x = [lo for lo, _ in bounds]

    for level in range(1, levels):
        grids = []
        idx = []
        for i, (lo, hi) in enumerate(bounds):
            half = (hi - lo) / shrink**level
            pts = np.linspace(max(lo, best_x[i] - half), min(hi, best_x[i] + half), density) if hi > lo else np.array([lo])
            pts = np.union1d(pts, [best_x[i]])
            grids.append(_Grid(pts, p[i], kind, r, k, m))
            idx.append(int(np.searchsorted(pts, best_x[i])))
        val, idx = _descend(grids, idx, max_sweeps)
        if val < best:
            best, best_x = val, [g.pts[i] for g, i in zip(grids, idx)]
    return best, Placement(tuple(float(v) for v in best_x))


def beta_predictive(m: int, k: float, r: float) -> float:
    """Probability of ``m`` failure-free demands under a Beta(1, 1) prior.

    Equal to ``prod_{i=1..m} (k+i)/(r+k+1+i)``, or after telescoping, for
    integer r, ``prod_{j=0..r} (k+1+j)/(k+m+1+j)``; the shorter product is
    used and log-gamma only when both are long.
    """
    if r == int(r) and r + 1 <= min(m, 10**4):
        log_p = math.fsum(math.log1p(-m / (k + m + 1 + j)) for j in range(int(r) + 1))
    elif m <= 10**4:
        log_p = math.fsum(math.log1p(-(r + 1) / (r + k + 1 + i)) for i in range(1, m + 1))
    else:
        log_p = math.lgamma(k + m + 1) - math.lgamma(k + 1) - math.lgamma(r + k + m + 2) + math.lgamma(r + k + 2)
    return math.exp(log_p)
