"""The intensity measure rho = dt (x) pi, Poisson sampling, quadrature primitives.

Sampling uses the conditional-uniform construction: draw the total count
from a Poisson law with mean rho(X) = T * pi(X), then place the atoms
i.i.d. (time uniform on [0, T], mark from pi / pi(X)).  This works for any
finite-mass product window and parallelises trivially over replications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Union

import numpy as np

from .configuration import Atom, Configuration, Window, make_configuration

__all__ = [
    "IntervalMarks",
    "DiscreteMarks",
    "MarkSpace",
    "ProductIntensity",
    "uniform_marks",
    "density_marks",
    "discrete_marks",
    "sample_poisson",
    "derive_seed",
    "time_quadrature",
]

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, index: int) -> int:
    """Stable 64-bit substream seed for replication ``index`` (splitmix64 mix).

    Independent of thread count or evaluation order, so parallel reductions
    that consume replications in index order are scheduler-invariant.
    """
    z = (seed ^ ((index + 1) * 0x9E3779B97F4A7C15)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def time_quadrature(a: float, b: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b]."""
    xs, ws = _leggauss(nodes)
    half = 0.5 * (b - a)
    return a + half * (xs + 1.0), half * ws


@dataclass(frozen=True)
class IntervalMarks:
    """Mark space [0, M] carrying a density w.r.t. Lebesgue, pi([0, M]) = total_mass.

    Uniform densities sample exactly; a general density samples through a
    tabulated inverse CDF (``grid`` cells), which is adequate for the
    statistical suites but documented as approximate.
    """

    M: float
    total_mass: float
    density: Callable[[np.ndarray], np.ndarray]
    uniform: bool = False
    grid: int = 4096
    _cdf_x: np.ndarray = field(init=False, repr=False, compare=False)
    _cdf_u: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (self.M > 0.0 and math.isfinite(self.M)):
            raise ValueError("mark interval length M must be positive and finite")
        if not (self.total_mass > 0.0 and math.isfinite(self.total_mass)):
            raise ValueError("total mark mass must be positive and finite")
        xs = np.linspace(0.0, self.M, self.grid + 1)
        dens = np.asarray(self.density(xs), dtype=float)
        if dens.shape != xs.shape:
            raise ValueError("density must be vectorized over mark values")
        if np.any(dens < 0.0):
            raise ValueError("density must be nonnegative")
        # Construction check: the declared mass and the quadrature of the
        # density must agree to 1e-8 relative.
        quad_mass = self.measure_interval(0.0, self.M, _check=False)
        if abs(quad_mass - self.total_mass) > 1e-8 * max(1.0, abs(self.total_mass)):
            raise ValueError(
                f"density integrates to {quad_mass!r}, declared mass {self.total_mass!r}"
            )
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(xs))])
        cdf /= cdf[-1]
        object.__setattr__(self, "_cdf_x", xs)
        object.__setattr__(self, "_cdf_u", cdf)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.uniform:
            return rng.uniform(0.0, self.M, size)
        u = rng.uniform(0.0, 1.0, size)
        return np.interp(u, self._cdf_u, self._cdf_x)

    def measure_interval(self, lo: float, hi: float, _check: bool = True) -> float:
        lo, hi = max(lo, 0.0), min(hi, self.M)
        if hi <= lo:
            return 0.0
        if self.uniform:
            return (hi - lo) * self.total_mass / self.M
        xs, ws = time_quadrature(lo, hi, 128)
        return float(np.dot(ws, np.asarray(self.density(xs), dtype=float)))

    def measure_window(self, window: Window) -> float:
        if window.x_values is not None:
            return 0.0  # a finite set is pi-null for an absolutely continuous pi
        return self.measure_interval(window.x_lo, window.x_hi)

    def quadrature(self, lo: float, hi: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
        """Mark nodes and pi-weighted quadrature weights on [lo, hi] ∩ [0, M]."""
        lo, hi = max(lo, 0.0), min(hi, self.M)
        if hi <= lo:
            return np.empty(0), np.empty(0)
        xs, ws = time_quadrature(lo, hi, nodes)
        return xs, ws * np.asarray(self.density(xs), dtype=float)

    def breakpoints(self) -> tuple[float, float]:
        return (0.0, self.M)


@dataclass(frozen=True)
class DiscreteMarks:
    """Finite mark set with weights; pi({p_i}) = w_i.

    Admitted although the continuous theory assumes a non-atomic intensity:
    time stays continuous, so two sampled atoms collide with probability
    zero and configurations remain simple almost surely.
    """

    points: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.points) != len(self.weights) or not self.points:
            raise ValueError("points and weights must be non-empty and equal length")
        if len(set(self.points)) != len(self.points):
            raise ValueError("mark points must be distinct")
        if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
            raise ValueError("weights must be nonnegative with positive sum")

    @property
    def total_mass(self) -> float:
        return float(sum(self.weights))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        p = np.asarray(self.weights, dtype=float)
        return rng.choice(np.asarray(self.points, dtype=float), size=size, p=p / p.sum())

    def measure_interval(self, lo: float, hi: float) -> float:
        return float(sum(w for p, w in zip(self.points, self.weights) if lo <= p <= hi))

    def measure_window(self, window: Window) -> float:
        if window.x_values is not None:
            return float(
                sum(w for p, w in zip(self.points, self.weights) if p in window.x_values)
            )
        return self.measure_interval(window.x_lo, window.x_hi)

    def quadrature(self, lo: float, hi: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
        pts = [(p, w) for p, w in zip(self.points, self.weights) if lo <= p <= hi]
        if not pts:
            return np.empty(0), np.empty(0)
        xs, ws = zip(*pts)
        return np.asarray(xs, dtype=float), np.asarray(ws, dtype=float)

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(sorted(self.points))


MarkSpace = Union[IntervalMarks, DiscreteMarks]


def uniform_marks(M: float, mass: float | None = None) -> IntervalMarks:
    """Constant density on [0, M]; pi([0, M]) = mass (defaults to M, density 1)."""
    total = M if mass is None else mass
    c = total / M
    return IntervalMarks(M=M, total_mass=total, density=lambda x: np.full_like(np.asarray(x, dtype=float), c), uniform=True)


def density_marks(M: float, density: Callable[[np.ndarray], np.ndarray], total_mass: float | None = None) -> IntervalMarks:
    """Interval marks with an arbitrary nonnegative density.

    When ``total_mass`` is omitted it is computed by quadrature; when given
    it is checked against the quadrature value at construction.
    """
    if total_mass is None:
        xs, ws = time_quadrature(0.0, M, 128)
        total_mass = float(np.dot(ws, np.asarray(density(xs), dtype=float)))
    return IntervalMarks(M=M, total_mass=total_mass, density=density)


def discrete_marks(points, weights) -> DiscreteMarks:
    return DiscreteMarks(tuple(float(p) for p in points), tuple(float(w) for w in weights))


@dataclass(frozen=True)
class ProductIntensity:
    """rho = dt (x) pi on [0, T] x X with finite total mass T * pi(X)."""

    T: float
    marks: MarkSpace

    def __post_init__(self) -> None:
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ValueError("horizon T must be positive and finite")
        if not self.mass > 0.0:
            raise ValueError("rho(X) must be strictly positive")

    @property
    def mass(self) -> float:
        return self.T * self.marks.total_mass

    def window_mass(self, window: Window) -> float:
        """rho(window): time overlap with [0, T] times the pi-mass of the mark set."""
        dt = min(window.t_hi, self.T) - max(window.t_lo, 0.0)
        if dt <= 0.0:
            return 0.0
        return dt * self.marks.measure_window(window)


def sample_poisson(rho: ProductIntensity, seed: int) -> Configuration:
    """One Poisson configuration under rho; deterministic given the seed."""
    rng = np.random.default_rng(seed & _MASK64)
    k = int(rng.poisson(rho.mass))
    ts = rng.uniform(0.0, rho.T, k)
    xs = rho.marks.sample(rng, k)
    return make_configuration((Atom(float(t), float(x)) for t, x in zip(ts, xs)), rho.T)
