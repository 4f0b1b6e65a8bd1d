"""Numerical substrate for group-sequential computations.

Normal distribution helpers, the stagewise recursion for joint exit and
continuation probabilities of a sequence of canonically correlated
z-statistics, and a bracketed root finder.

The canonical model: at stage ``k`` with statistical information ``I_k``
the statistic ``Z_k`` is N(theta * sqrt(I_k), 1) and
``corr(Z_j, Z_k) = sqrt(I_j / I_k)`` for ``j < k``. For a log-rank test with
``d`` events and allocation ratio ``r`` the information is
``d * r / (1 + r)**2`` (``d / 4`` for 1:1) and ``theta = -log(HR)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

DEFAULT_GRID_POINTS = 401
GRID_HALF_WIDTH = 8.0
ROOT_TOL = 1e-10


def norm_cdf(x):
    """Standard normal CDF. Accepts scalars or arrays."""
    return special.ndtr(x)


def norm_sf(x):
    """Standard normal upper tail, ``1 - norm_cdf(x)`` without cancellation."""
    return special.ndtr(np.negative(x))


def norm_pdf(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


def norm_quantile(p: float) -> float:
    """Inverse of the standard normal CDF.

    Raises:
        ValueError: If ``p`` is not strictly between 0 and 1.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"norm_quantile requires 0 < p < 1, got {p!r}")
    return float(special.ndtri(p))


def events_to_information(events, allocation_ratio: float = 1.0):
    """Statistical information carried by ``events`` log-rank events."""
    r = allocation_ratio
    return np.asarray(events, dtype=float) * r / (1.0 + r) ** 2


@dataclass(frozen=True)
class ContinuationRegion:
    """Per-stage z-scale continuation intervals ``(lower, upper)``.

    ``lower`` entries may be ``-inf`` and ``upper`` entries ``+inf``.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    information: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        info = tuple(float(v) for v in self.information)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "information", info)
        if not (len(lower) == len(upper) == len(info)) or not info:
            raise ValueError("lower, upper and information must be non-empty and of equal length")
        if info[0] <= 0 or any(b <= a for a, b in zip(info, info[1:])):
            raise ValueError("information levels must be positive and strictly increasing")
        if any(lo >= hi for lo, hi in zip(lower, upper)):
            raise ValueError("each stage needs lower < upper")

    @classmethod
    def upper_only(cls, upper: Sequence[float], information: Sequence[float]) -> "ContinuationRegion":
        return cls((-math.inf,) * len(upper), tuple(upper), tuple(information))

    @property
    def n_stages(self) -> int:
        return len(self.information)


@dataclass(frozen=True)
class StageProbabilities:
    upper: np.ndarray
    lower: np.ndarray
    continuation: float

    @property
    def total_upper(self) -> float:
        return float(self.upper.sum())


def _simpson_weights(n: int, width: float) -> np.ndarray:
    h = width / (n - 1)
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _stage_grid(lo: float, hi: float, mean: float, n: int):
    """Simpson grid over the continuation interval, clipped to mean +/- half width."""
    a = max(lo, mean - GRID_HALF_WIDTH)
    b = min(hi, mean + GRID_HALF_WIDTH)
    if b <= a:
        return None, None
    z = np.linspace(a, b, n)
    return z, _simpson_weights(n, b - a)


def stage_probabilities(
    region: ContinuationRegion, theta: float = 0.0, grid_points: int = DEFAULT_GRID_POINTS
) -> StageProbabilities:
    """Upper and lower exit probabilities at every stage plus final continuation mass.

    Uses the stagewise recursion on the sub-density of the statistic among
    paths that have stayed inside the region so far.
    """
    if grid_points < 3:
        raise ValueError("grid_points must be at least 3")
    n = grid_points if grid_points % 2 == 1 else grid_points + 1
    info = np.asarray(region.information)
    sq = np.sqrt(info)
    K = region.n_stages
    upper = np.zeros(K)
    lower = np.zeros(K)

    mean = theta * sq[0]
    upper[0] = norm_sf(region.upper[0] - mean)
    lower[0] = float(norm_cdf(region.lower[0] - mean))
    if K == 1:
        return StageProbabilities(upper, lower, float(norm_cdf(region.upper[0] - mean) - lower[0]))
    z, w = _stage_grid(region.lower[0], region.upper[0], mean, n)
    if z is None:
        return StageProbabilities(upper, lower, 0.0)
    dens = norm_pdf(z - mean)

    continuation = 0.0
    for k in range(1, K):
        delta = info[k] - info[k - 1]
        sd = math.sqrt(delta)
        # mean of the stage-k score given the stage-(k-1) z value
        base = z * sq[k - 1] + theta * delta
        wd = w * dens
        b, a = region.upper[k], region.lower[k]
        stay_below = special.ndtr((b * sq[k] - base) / sd)
        below_lower = special.ndtr((a * sq[k] - base) / sd)
        upper[k] = float(wd @ (1.0 - stay_below)) if math.isfinite(b) else 0.0
        lower[k] = float(wd @ below_lower)
        if k == K - 1:
            # the final continuation mass needs no further grid
            continuation = float(wd @ (stay_below - below_lower))
            break
        z_new, w_new = _stage_grid(a, b, theta * sq[k], n)
        if z_new is None:
            break
        kernel = norm_pdf((z_new[:, None] * sq[k] - base[None, :]) / sd) * (sq[k] / sd)
        dens = kernel @ wd
        z, w = z_new, w_new

    return StageProbabilities(upper, lower, continuation)


def exit_probability(
    region: ContinuationRegion, theta: float, stage: int, grid_points: int = DEFAULT_GRID_POINTS
) -> float:
    """Probability of first crossing the upper bound at ``stage`` (0-based)."""
    if not 0 <= stage < region.n_stages:
        raise IndexError(f"stage {stage} outside 0..{region.n_stages - 1}")
    return float(stage_probabilities(region, theta, grid_points).upper[stage])


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    """Root of a monotone function on a sign-changing bracket.

    Raises:
        ValueError: If ``f(lo)`` and ``f(hi)`` share a sign or ``tol <= 0``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f(lo)={flo!r}, f(hi)={fhi!r}")
    return float(optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


def expanding_root(
    f: Callable[[float], float], lo: float, hi: float, tol: float = ROOT_TOL, max_expansions: int = 40
) -> float:
    """Like :func:`find_root` but widens the bracket geometrically until it changes sign."""
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    for _ in range(max_expansions):
        a, b = centre - half, centre + half
        if np.sign(f(a)) != np.sign(f(b)):
            return find_root(f, a, b, tol)
        half *= 2.0
    raise ValueError(f"could not bracket a root starting from [{lo}, {hi}]")
