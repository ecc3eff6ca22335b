"""Kernels on X^n, factorial-measure sums, and iterated integrals.

The uncompensated integral of an order-n kernel is the sum over all
ordered n-tuples of pairwise-distinct atoms.  The compensated integral
follows the alternating subset-sum form: for each subset J of the n
coordinates, a factorial-measure sum over the J coordinates with the
complement integrated against rho.  Both evaluators accumulate through
exactly-rounded compensated summation (``math.fsum``) because the
alternating sums lose digits with naive accumulation.

Kernels carry optional structure that integration exploits in order:
linear combinations (``parts``), tensor products of order-1 kernels
(``factors``), a closed-form canonical marginal (``partial``: integrate
the leading coordinates, anchor the trailing ones), support-aware tensor
Gauss-Legendre quadrature, and finally plain Monte Carlo.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb, fsum, perm
from typing import Callable, Iterator

import numpy as np

from .configuration import Atom, Configuration, Window
from .errors import (
    BudgetExceeded,
    IntegrationUnavailable,
    OrderTooLarge,
    UnsupportedDimension,
)
from .measure import DiscreteMarks, IntervalMarks, ProductIntensity, time_quadrature

__all__ = [
    "IntegralResult",
    "Kernel",
    "IteratedDecomposition",
    "indicator_kernel",
    "poly_time_kernel",
    "gauss_time_kernel",
    "tensor_kernel",
    "tensor_power",
    "combine_kernels",
    "scale_kernel",
    "from_function",
    "zero_kernel",
    "slice_kernel",
    "symmetrize",
    "factorial_tuples",
    "falling_factorial",
    "eval_uncompensated",
    "eval_compensated",
    "anchored_integral",
    "rho_integral",
    "rho_norm_sq",
    "to_compensated",
    "to_uncompensated",
    "validate_kernel",
]


@dataclass(frozen=True)
class IntegralResult:
    value: float
    stderr: float = 0.0
    method: str = "closed"

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class Kernel:
    """A measurable map X^n -> R with optional integration structure.

    ``partial(rho, anchors)`` integrates the first ``order - len(anchors)``
    coordinates against rho and pins the trailing ones at ``anchors``; for
    symmetric kernels anchor placement is immaterial.  ``factors`` marks a
    tensor product of order-1 kernels, ``parts`` a linear combination.
    ``support`` (order 1 only) is a window outside of which the kernel
    vanishes; ``constant_on_support`` its constant value inside, when the
    kernel is a plain indicator multiple.  ``vec`` is a vectorized order-1
    evaluator over (times, marks) arrays.
    """

    order: int
    fn: Callable[..., float]
    symmetric: bool = False
    name: str = ""
    factors: tuple["Kernel", ...] | None = None
    parts: tuple[tuple[float, "Kernel"], ...] | None = None
    support: Window | None = None
    constant_on_support: float | None = None
    partial: Callable[[ProductIntensity, tuple[Atom, ...]], float] | None = None
    vec: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __call__(self, *atoms: Atom) -> float:
        return self.fn(*atoms)


# ---------------------------------------------------------------------------
# constructors


def indicator_kernel(window: Window, name: str = "ind") -> Kernel:
    def fn(a: Atom) -> float:
        return 1.0 if window.contains(a) else 0.0

    def vec(t: np.ndarray, x: np.ndarray) -> np.ndarray:
        inside = (t >= window.t_lo) & (t <= window.t_hi)
        if window.x_values is not None:
            inside &= np.isin(x, np.asarray(sorted(window.x_values)))
        else:
            inside &= (x >= window.x_lo) & (x <= window.x_hi)
        return inside.astype(float)

    def partial(rho: ProductIntensity, anchors: tuple[Atom, ...]) -> float:
        return fn(anchors[0]) if anchors else rho.window_mass(window)

    return Kernel(1, fn, symmetric=True, name=name, support=window,
                  constant_on_support=1.0, partial=partial, vec=vec)


def poly_time_kernel(degree: int, name: str | None = None) -> Kernel:
    def fn(a: Atom) -> float:
        return a.t ** degree

    def partial(rho: ProductIntensity, anchors: tuple[Atom, ...]) -> float:
        if anchors:
            return fn(anchors[0])
        return rho.marks.total_mass * rho.T ** (degree + 1) / (degree + 1)

    return Kernel(1, fn, symmetric=True, name=name or f"poly{degree}",
                  partial=partial, vec=lambda t, x: t ** degree)


def gauss_time_kernel(sigma: float, name: str | None = None) -> Kernel:
    def fn(a: Atom) -> float:
        return math.exp(-a.t ** 2 / (2.0 * sigma ** 2))

    def partial(rho: ProductIntensity, anchors: tuple[Atom, ...]) -> float:
        if anchors:
            return fn(anchors[0])
        z = rho.T / (sigma * math.sqrt(2.0))
        return rho.marks.total_mass * sigma * math.sqrt(math.pi / 2.0) * math.erf(z)

    return Kernel(1, fn, symmetric=True, name=name or f"gauss{sigma}",
                  partial=partial, vec=lambda t, x: np.exp(-t ** 2 / (2.0 * sigma ** 2)))


def tensor_kernel(*components: Kernel, name: str | None = None) -> Kernel:
    """Tensor product of order-1 kernels: f(a_1..a_n) = prod_i f_i(a_i)."""
    if not components or any(c.order != 1 for c in components):
        raise ValueError("tensor_kernel expects one or more order-1 kernels")
    parts = tuple(components)
    same = all(c is parts[0] for c in parts)

    def fn(*atoms: Atom) -> float:
        out = 1.0
        for c, a in zip(parts, atoms):
            out *= c.fn(a)
        return out

    def partial(rho: ProductIntensity, anchors: tuple[Atom, ...]) -> float:
        k = len(anchors)
        n = len(parts)
        out = 1.0
        for c in parts[: n - k]:
            out *= _factor_integral(c, rho).value
        for c, a in zip(parts[n - k:], anchors):
            out *= c.fn(a)
        return out

    return Kernel(len(parts), fn, symmetric=same,
                  name=name or "(x)".join(c.name for c in parts),
                  factors=parts, partial=partial)


def tensor_power(component: Kernel, n: int, name: str | None = None) -> Kernel:
    return tensor_kernel(*([component] * n), name=name or f"{component.name}^(x){n}")


def combine_kernels(parts, symmetric: bool | None = None, name: str = "lincomb") -> Kernel:
    """Linear combination sum_i c_i f_i of kernels of equal order."""
    parts = tuple((float(c), k) for c, k in parts)
    orders = {k.order for _, k in parts}
    if len(orders) != 1:
        raise ValueError("all kernels in a combination must share one order")
    order = orders.pop()
    if symmetric is None:
        symmetric = all(k.symmetric for _, k in parts)

    def fn(*atoms: Atom) -> float:
        return fsum(c * k.fn(*atoms) for c, k in parts)

    vec = None
    if order == 1 and all(k.vec is not None for _, k in parts):
        def vec(t, x):  # noqa: E306
            out = np.zeros_like(np.asarray(t, dtype=float))
            for c, k in parts:
                out += c * k.vec(t, x)
            return out

    return Kernel(order, fn, symmetric=symmetric, name=name, parts=parts, vec=vec)


def scale_kernel(c: float, kernel: Kernel, name: str | None = None) -> Kernel:
    return combine_kernels([(c, kernel)], symmetric=kernel.symmetric,
                           name=name or f"{c}*{kernel.name}")


def from_function(order: int, fn: Callable[..., float], symmetric: bool = False,
                  name: str = "kernel") -> Kernel:
    return Kernel(order, fn, symmetric=symmetric, name=name)


def zero_kernel(order: int) -> Kernel:
    return Kernel(order, lambda *a: 0.0, symmetric=True, name="zero",
                  partial=lambda rho, anchors: 0.0,
                  vec=(lambda t, x: np.zeros_like(np.asarray(t, dtype=float))) if order == 1 else None)


def slice_kernel(f: Kernel, atom: Atom) -> Kernel:
    """First-coordinate section f(a, .) of a symmetric kernel (order n-1)."""
    if not f.symmetric:
        raise ValueError("slice_kernel requires a symmetric kernel")
    if f.order < 2:
        raise ValueError("slicing needs order >= 2")
    if f.factors is not None and all(c is f.factors[0] for c in f.factors):
        u = f.factors[0]
        return scale_kernel(u.fn(atom), tensor_power(u, f.order - 1),
                            name=f"{f.name}({atom.t:.3g},{atom.x:.3g},.)")

    def fn(*rest: Atom) -> float:
        return f.fn(atom, *rest)

    def partial(rho: ProductIntensity, anchors: tuple[Atom, ...]) -> float:
        return anchored_integral(f, rho, (atom,) + tuple(anchors)).value

    return Kernel(f.order - 1, fn, symmetric=True,
                  name=f"{f.name}(a,.)", partial=partial)


def symmetrize(f: Kernel) -> Kernel:
    """Average of f over all coordinate permutations, flagged symmetric."""
    if f.symmetric:
        return f
    if f.order > 8:
        raise OrderTooLarge(f"symmetrization of order {f.order} needs {f.order}! terms")
    perms = list(itertools.permutations(range(f.order)))
    scale = 1.0 / len(perms)

    def fn(*atoms: Atom) -> float:
        return scale * fsum(f.fn(*(atoms[i] for i in sigma)) for sigma in perms)

    return Kernel(f.order, fn, symmetric=True, name=f"sym({f.name})")


# ---------------------------------------------------------------------------
# factorial-measure sums


def falling_factorial(k: int, n: int) -> int:
    """k (k-1) ... (k-n+1); zero when the configuration is too small."""
    return perm(k, n)


def factorial_tuples(omega: Configuration, n: int) -> Iterator[tuple[Atom, ...]]:
    """All ordered n-tuples of pairwise-distinct atoms of the configuration."""
    if n < 1:
        raise ValueError("tuple order must be >= 1")
    return itertools.permutations(omega.atoms, n)


def eval_uncompensated(f: Kernel, omega: Configuration, budget: int = 10_000_000) -> float:
    """Pathwise factorial-measure integral of f (no randomness involved).

    Symmetric kernels are summed over combinations and scaled by n!,
    which is the same real number at a fraction of the term count.
    """
    n = f.order
    k = len(omega)
    if k < n:
        return 0.0
    if f.symmetric:
        n_terms = comb(k, n)
        if n_terms > budget:
            raise BudgetExceeded(f"{n_terms} combinations exceed budget {budget}")
        return math.factorial(n) * fsum(f.fn(*c) for c in itertools.combinations(omega.atoms, n))
    n_terms = perm(k, n)
    if n_terms > budget:
        raise BudgetExceeded(f"{n_terms} ordered tuples exceed budget {budget}")
    return fsum(f.fn(*p) for p in itertools.permutations(omega.atoms, n))


# ---------------------------------------------------------------------------
# rho-integration of kernels


def _mark_axis(marks, window: Window | None, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    if window is None:
        if isinstance(marks, DiscreteMarks):
            return marks.quadrature(-math.inf, math.inf, nodes)
        return marks.quadrature(0.0, marks.M, nodes)
    if isinstance(marks, DiscreteMarks):
        xs, ws = marks.quadrature(window.x_lo, window.x_hi, nodes)
        if window.x_values is not None:
            keep = np.isin(xs, np.asarray(sorted(window.x_values)))
            return xs[keep], ws[keep]
        return xs, ws
    if window.x_values is not None:
        return np.empty(0), np.empty(0)  # finite sets are pi-null for interval marks
    return marks.quadrature(window.x_lo, window.x_hi, nodes)


def _quad_axis(rho: ProductIntensity, support: Window | None, nodes: int) -> list[tuple[Atom, float]]:
    t_lo, t_hi = 0.0, rho.T
    if support is not None:
        t_lo, t_hi = max(t_lo, support.t_lo), min(t_hi, support.t_hi)
        if t_hi <= t_lo:
            return []
    ts, tw = time_quadrature(t_lo, t_hi, nodes)
    xs, xw = _mark_axis(rho.marks, support, nodes)
    return [(Atom(float(t), float(x)), float(wt * wx))
            for t, wt in zip(ts, tw) for x, wx in zip(xs, xw)]


def _coord_support(f: Kernel, i: int) -> Window | None:
    if f.order == 1:
        return f.support
    if f.factors is not None:
        return f.factors[i].support
    return None


def _tensor_quadrature(f: Kernel, rho: ProductIntensity, anchors: tuple[Atom, ...],
                       positions: tuple[int, ...], nodes: int, max_points: int) -> IntegralResult:
    n = f.order
    free = [i for i in range(n) if i not in positions]
    m = len(free)
    # Shrink per-axis time nodes until the tensor grid fits the point budget.
    mark_points = len(rho.marks.points) if isinstance(rho.marks, DiscreteMarks) else None
    eff = nodes
    while eff > 2 and (eff * (mark_points if mark_points else eff)) ** m > max_points:
        eff = max(2, eff // 2)
    axes = [_quad_axis(rho, _coord_support(f, i), eff) for i in free]
    if any(len(ax) == 0 for ax in axes):
        return IntegralResult(0.0, 0.0, "quadrature")
    slots: list[Atom | None] = [None] * n
    for pos, a in zip(positions, anchors):
        slots[pos] = a
    pieces = []
    for combo in itertools.product(*axes):
        w = 1.0
        for i, (atom, wi) in zip(free, combo):
            slots[i] = atom
            w *= wi
        pieces.append(w * f.fn(*slots))
    return IntegralResult(fsum(pieces), 0.0, "quadrature")


def _mc_integral(f: Kernel, rho: ProductIntensity, anchors: tuple[Atom, ...],
                 positions: tuple[int, ...], samples: int, seed: int) -> IntegralResult:
    n = f.order
    free = [i for i in range(n) if i not in positions]
    m = len(free)
    rng = np.random.default_rng(seed)
    slots: list[Atom | None] = [None] * n
    for pos, a in zip(positions, anchors):
        slots[pos] = a
    vals = np.empty(samples)
    for s in range(samples):
        ts = rng.uniform(0.0, rho.T, m)
        xs = rho.marks.sample(rng, m)
        for i, t, x in zip(free, ts, xs):
            slots[i] = Atom(float(t), float(x))
        vals[s] = f.fn(*slots)
    scale = rho.mass ** m
    value = scale * float(np.mean(vals))
    se = scale * float(np.std(vals, ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    return IntegralResult(value, se, "montecarlo")


def _factor_integral(factor: Kernel, rho: ProductIntensity, nodes: int = 32) -> IntegralResult:
    if factor.partial is not None:
        return IntegralResult(float(factor.partial(rho, ())), 0.0, "closed")
    if factor.constant_on_support is not None and factor.support is not None:
        return IntegralResult(factor.constant_on_support * rho.window_mass(factor.support), 0.0, "closed")
    return _tensor_quadrature(factor, rho, (), (), nodes, 100_000)


def anchored_integral(f: Kernel, rho: ProductIntensity, anchors: tuple[Atom, ...],
                      positions: tuple[int, ...] | None = None, *, nodes: int = 16,
                      max_points: int = 200_000, mc_samples: int = 0, seed: int = 0,
                      error_cls=IntegrationUnavailable) -> IntegralResult:
    """Integrate f over the coordinates not pinned by ``anchors``.

    ``positions`` names the pinned coordinate indices; by default the
    anchors occupy the trailing positions (the canonical marginal).
    """
    n = f.order
    anchors = tuple(anchors)
    k = len(anchors)
    if positions is None:
        positions = tuple(range(n - k, n))
    if k == n:
        slots: list[Atom | None] = [None] * n
        for pos, a in zip(positions, anchors):
            slots[pos] = a
        return IntegralResult(float(f.fn(*slots)), 0.0, "exact")
    if f.parts is not None:
        acc_v, acc_e = [], []
        for c, part in f.parts:
            r = anchored_integral(part, rho, anchors, positions, nodes=nodes,
                                  max_points=max_points, mc_samples=mc_samples,
                                  seed=seed, error_cls=error_cls)
            acc_v.append(c * r.value)
            acc_e.append(abs(c) * r.stderr)
        return IntegralResult(fsum(acc_v), fsum(acc_e), "combined")
    if f.factors is not None:
        out, err_scale = 1.0, 0.0
        for pos, a in zip(positions, anchors):
            out *= f.factors[pos].fn(a)
        for i in range(n):
            if i not in positions:
                r = _factor_integral(f.factors[i], rho, nodes=max(nodes, 32))
                out *= r.value
        return IntegralResult(out, err_scale, "closed")
    canonical = positions == tuple(range(n - k, n))
    if f.partial is not None and (f.symmetric or canonical):
        return IntegralResult(float(f.partial(rho, anchors)), 0.0, "closed")
    if n - k <= 3:
        return _tensor_quadrature(f, rho, anchors, positions, nodes, max_points)
    if mc_samples:
        return _mc_integral(f, rho, anchors, positions, mc_samples, seed)
    raise error_cls(
        f"kernel {f.name!r}: {n - k} coupled coordinates, no closed form, MC disabled"
    )


def rho_integral(f: Kernel, rho: ProductIntensity, *, nodes: int = 64,
                 max_points: int = 1_000_000, mc_samples: int = 0, seed: int = 0) -> IntegralResult:
    """Full integral of f against rho^(x)n (closed form, quadrature, or MC)."""
    return anchored_integral(f, rho, (), nodes=nodes, max_points=max_points,
                             mc_samples=mc_samples, seed=seed,
                             error_cls=UnsupportedDimension)


def rho_norm_sq(f: Kernel, rho: ProductIntensity, *, nodes: int = 32,
                max_points: int = 1_000_000) -> float:
    """Squared L2(rho^(x)n) norm of f."""
    if f.factors is not None:
        out = 1.0
        for u in f.factors:
            if u.constant_on_support is not None and u.support is not None:
                out *= u.constant_on_support ** 2 * rho.window_mass(u.support)
            else:
                sq = Kernel(1, lambda a, _u=u: _u.fn(a) ** 2, symmetric=True,
                            name=f"{u.name}^2", support=u.support)
                out *= _tensor_quadrature(sq, rho, (), (), max(nodes, 64), max_points).value
        return out
    sq = Kernel(f.order, lambda *a: f.fn(*a) ** 2, symmetric=f.symmetric, name=f"{f.name}^2")
    return _tensor_quadrature(sq, rho, (), (), nodes, max_points).value


# ---------------------------------------------------------------------------
# compensated evaluation and kernel conversion


def eval_compensated(f: Kernel, omega: Configuration, rho: ProductIntensity, *,
                     budget: int = 10_000_000, nodes: int = 16, max_points: int = 200_000,
                     mc_samples: int = 0, seed: int = 0, return_stderr: bool = False):
    """Pathwise compensated iterated integral of f at the configuration.

    Evaluates the alternating subset sum: each coordinate subset J
    contributes (-1)^(n-|J|) times the factorial-tuple sum of the kernel
    with the complement coordinates integrated against rho.  The order-0
    subset uses the convention that an empty factorial integral equals 1.
    """
    n = f.order
    atoms = omega.atoms
    k = len(atoms)
    pieces: list[float] = []
    errs: list[float] = []

    def marginal(tup: tuple[Atom, ...], positions: tuple[int, ...] | None) -> float:
        r = anchored_integral(f, rho, tup, positions, nodes=nodes, max_points=max_points,
                              mc_samples=mc_samples, seed=seed)
        errs.append(r.stderr)
        return r.value

    if f.symmetric or n == 1:
        for j in range(n + 1):
            sign = -1.0 if (n - j) % 2 else 1.0
            weight = comb(n, j)
            if j == 0:
                pieces.append(sign * weight * marginal((), None))
                continue
            if perm(k, j) == 0:
                continue
            if perm(k, j) > budget:
                raise BudgetExceeded(f"{perm(k, j)} tuples of order {j} exceed budget")
            vals = [marginal(tup, None) for tup in itertools.permutations(atoms, j)]
            pieces.append(sign * weight * fsum(vals))
    else:
        for mask in range(1 << n):
            positions = tuple(i for i in range(n) if (mask >> i) & 1)
            j = len(positions)
            sign = -1.0 if (n - j) % 2 else 1.0
            if j == 0:
                pieces.append(sign * marginal((), positions))
                continue
            if perm(k, j) == 0:
                continue
            if perm(k, j) > budget:
                raise BudgetExceeded(f"{perm(k, j)} tuples of order {j} exceed budget")
            vals = [marginal(tup, positions) for tup in itertools.permutations(atoms, j)]
            pieces.append(sign * fsum(vals))
    total = fsum(pieces)
    if return_stderr:
        return total, fsum(errs)
    return total


@dataclass(frozen=True)
class IteratedDecomposition:
    """F = order0 + sum_j (iterated integral of kernels[j]) pathwise.

    ``compensated`` selects which family of integrals the evaluation uses.
    """

    compensated: bool
    order0: float
    kernels: tuple[tuple[int, Kernel], ...]

    def evaluate(self, omega: Configuration, rho: ProductIntensity | None = None,
                 budget: int = 10_000_000) -> float:
        vals = [self.order0]
        for _, g in self.kernels:
            if self.compensated:
                if rho is None:
                    raise ValueError("compensated evaluation needs rho")
                vals.append(eval_compensated(g, omega, rho, budget=budget))
            else:
                vals.append(eval_uncompensated(g, omega, budget=budget))
        return fsum(vals)


def _conversion_kernels(f: Kernel, rho: ProductIntensity, signs: bool):
    """Shared machinery: g_j = C(n, j) [(-1)^(n-j)] x (n-j)-fold marginal of f."""
    if not f.symmetric:
        raise ValueError("kernel conversion requires a symmetric kernel")
    n = f.order
    sign0 = (-1.0) ** n if signs else 1.0
    order0 = sign0 * anchored_integral(f, rho, ()).value
    out: list[tuple[int, Kernel]] = []
    for j in range(1, n + 1):
        coeff = float(comb(n, j)) * ((-1.0) ** (n - j) if signs else 1.0)
        if f.factors is not None and all(c is f.factors[0] for c in f.factors):
            u = f.factors[0]
            mu = _factor_integral(u, rho).value
            g = scale_kernel(coeff * mu ** (n - j), tensor_power(u, j),
                             name=f"g{j}[{f.name}]")
        else:
            def fn(*a, _c=coeff):
                return _c * anchored_integral(f, rho, tuple(a)).value

            def partial(rho2, anchors, _c=coeff):
                return _c * anchored_integral(f, rho2, tuple(anchors)).value

            g = Kernel(j, fn, symmetric=True, name=f"g{j}[{f.name}]", partial=partial)
        out.append((j, g))
    return order0, tuple(out)


def to_compensated(f: Kernel, rho: ProductIntensity) -> IteratedDecomposition:
    """Rewrite the uncompensated integral of f as compensated integrals.

    Returns kernels g_j (j = 0..n) with binomial coefficients times the
    (n-j)-fold rho-marginals of f, so the uncompensated integral of f
    equals order0 + sum_j I_j(g_j) pathwise.
    """
    order0, kernels = _conversion_kernels(f, rho, signs=False)
    return IteratedDecomposition(compensated=True, order0=order0, kernels=kernels)


def to_uncompensated(f: Kernel, rho: ProductIntensity) -> IteratedDecomposition:
    """Mirror conversion with alternating signs (-1)^(n-j), g_0 = (-1)^n int f."""
    order0, kernels = _conversion_kernels(f, rho, signs=True)
    return IteratedDecomposition(compensated=False, order0=order0, kernels=kernels)


def validate_kernel(f: Kernel, rho: ProductIntensity, rtol: float = 1e-8,
                    seed: int = 1234, nodes: int = 24) -> None:
    """Cross-check declared closed-form marginals against quadrature.

    Applies to kernels of order <= 3 carrying structure (partial, factors,
    or parts); raises ValueError on disagreement beyond ``rtol`` relative.
    """
    if f.order > 3:
        return
    if f.partial is None and f.factors is None and f.parts is None:
        return
    rng = np.random.default_rng(seed)
    for k in range(f.order):
        ts = rng.uniform(0.0, rho.T, k)
        xs = rho.marks.sample(rng, k)
        anchors = tuple(Atom(float(t), float(x)) for t, x in zip(ts, xs))
        closed = anchored_integral(f, rho, anchors, nodes=nodes).value
        quad = _tensor_quadrature(f, rho, anchors, tuple(range(f.order - k, f.order)),
                                  nodes, 300_000).value
        if abs(closed - quad) > rtol * max(1.0, abs(closed), abs(quad)):
            raise ValueError(
                f"kernel {f.name!r}: closed marginal {closed!r} disagrees with "
                f"quadrature {quad!r} at anchors {anchors!r}"
            )
