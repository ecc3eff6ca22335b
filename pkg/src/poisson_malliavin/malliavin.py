"""Pathwise difference operators and the functional library.

The central objects: the add-one-cost difference D_a F, its iterated
inclusion-exclusion version D^n, the purely deterministic variant that
evaluates F on configurations built from the argument atoms alone, the
predictable integrand H_(t,x) F = D_(t,x) F after truncation to the strict
past, the Girsanov weight that kills futures, and a nested-resampling
estimator of conditional expectations given the strict past (exact in law
because Poisson restrictions to disjoint windows are independent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum
from typing import Callable

import numpy as np

from .configuration import (
    Atom,
    Configuration,
    Window,
    add_points,
    count,
    empty_configuration,
    truncate_before,
)
from .errors import AtomOutOfWindow, OrderTooLarge
from .integrals import (
    Kernel,
    combine_kernels,
    indicator_kernel,
    scale_kernel,
    tensor_kernel,
    tensor_power,
    zero_kernel,
)
from .measure import ProductIntensity, derive_seed

__all__ = [
    "Functional",
    "as_functional",
    "difference",
    "iterated_difference",
    "deterministic_diff",
    "pco_integrand",
    "girsanov_weight",
    "conditional_expectation",
    "predictable_mean_count",
    "constant_functional",
    "count_functional",
    "count_squared_functional",
    "product_counts_functional",
    "exp_count_functional",
]

DEFAULT_MAX_ORDER = 12  # 2^n functional evaluations per iterated difference


@dataclass(frozen=True)
class Functional:
    """An evaluation map Configuration -> R with optional closed-form annotations.

    ``windows`` + ``g`` describe count-based functionals F = g(N(W_1), ..,
    N(W_m)) with g vectorized over numpy arrays; the Monte Carlo engine
    exploits that structure.  ``pseudo_kernel(k)`` / ``chaos_kernel(k)``
    return the order-k kernels of the uncompensated / compensated
    expansions; orders beyond ``pseudo_order`` / ``chaos_order`` vanish.
    ``projection(omega, t, x)`` is the predictable projection of DF and
    ``projection_mark_integral(omega, t)`` its mark-space integral.
    """

    name: str
    fn: Callable[[Configuration], float]
    windows: tuple[Window, ...] | None = None
    g: Callable | None = None
    pseudo_order: int | None = None
    pseudo_kernel: Callable[[int], Kernel] | None = None
    chaos_order: int | None = None
    chaos_mean: float | None = None
    chaos_kernel: Callable[[int], Kernel] | None = None
    projection: Callable[[Configuration, float, float], float] | None = None
    projection_mark_integral: Callable[[Configuration, float], float] | None = None

    def __call__(self, omega: Configuration) -> float:
        return self.fn(omega)


def as_functional(name: str, fn: Callable[[Configuration], float]) -> Functional:
    return Functional(name=name, fn=fn)


def _eval(F) -> Callable[[Configuration], float]:
    return F.fn if isinstance(F, Functional) else F


# ---------------------------------------------------------------------------
# operators


def difference(F, omega: Configuration, atom: Atom) -> float:
    """Add-one cost D_a F(omega) = F(omega + delta_a) - F(omega)."""
    f = _eval(F)
    return f(add_points(omega, (atom,))) - f(omega)


def iterated_difference(F, omega: Configuration, atoms: tuple[Atom, ...],
                        n_max: int = DEFAULT_MAX_ORDER) -> float:
    """Order-n difference via inclusion-exclusion over all 2^n atom subsets.

    The sum is accumulated with fsum, so the result is invariant under
    permutations of the atom tuple (the term multiset is).
    """
    atoms = tuple(atoms)
    n = len(atoms)
    if n < 1:
        raise ValueError("iterated difference needs at least one atom")
    if n > n_max:
        raise OrderTooLarge(f"order {n} exceeds ceiling {n_max} (2^n evaluations)")
    f = _eval(F)
    terms = []
    for mask in range(1 << n):
        subset = [atoms[i] for i in range(n) if (mask >> i) & 1]
        sign = -1.0 if (n - len(subset)) % 2 else 1.0
        terms.append(sign * f(add_points(omega, subset)))
    return fsum(terms)


def deterministic_diff(F, atoms: tuple[Atom, ...], T: float | None = None,
                       n_max: int = DEFAULT_MAX_ORDER) -> float:
    """Inclusion-exclusion of F over configurations built from the atoms alone.

    Order 0 returns F at the empty configuration.  Coincides with the
    iterated difference evaluated at the empty configuration.
    """
    atoms = tuple(atoms)
    if T is None:
        T = max((a.t for a in atoms), default=0.0)
    if not atoms:
        return _eval(F)(empty_configuration(T))
    return iterated_difference(F, empty_configuration(T), atoms, n_max=n_max)


def pco_integrand(F, omega: Configuration, atom: Atom) -> float:
    """H_(t,x) F(omega): the difference at (t, x) applied to the strict past.

    Depends on omega only through atoms strictly before t, hence is
    predictable in the pathwise sense.
    """
    past = truncate_before(omega, atom.t)
    return difference(F, past, atom)


def girsanov_weight(omega: Configuration, t: float, rho: ProductIntensity) -> float:
    """exp((T-t) pi(X)) if omega has no atom with time in [t, T], else 0."""
    if not 0.0 <= t <= rho.T:
        raise AtomOutOfWindow(f"time {t} outside [0, {rho.T}]")
    if any(t <= a.t <= rho.T for a in omega.atoms):
        return 0.0
    return math.exp((rho.T - t) * rho.marks.total_mass)


def conditional_expectation(F, omega: Configuration, t: float, rho: ProductIntensity,
                            m: int, seed: int) -> tuple[float, float]:
    """Nested-resampling estimate of the conditional expectation given the strict past.

    Averages F over m fresh Poisson futures on [t, T] x X glued to the
    truncated path; returns (mean, standard error).  Replications use
    index-derived seeds and are reduced in index order.
    """
    if m < 2:
        raise ValueError("need at least 2 replications")
    if not 0.0 <= t <= rho.T:
        raise AtomOutOfWindow(f"time {t} outside [0, {rho.T}]")
    f = _eval(F)
    past = truncate_before(omega, t)
    future_mass = (rho.T - t) * rho.marks.total_mass
    vals = np.empty(m)
    for i in range(m):
        rng = np.random.default_rng(derive_seed(seed, i))
        k = int(rng.poisson(future_mass)) if future_mass > 0 else 0
        ts = rng.uniform(t, rho.T, k)
        xs = rho.marks.sample(rng, k)
        fresh = add_points(past, (Atom(float(tt), float(xx)) for tt, xx in zip(ts, xs)))
        vals[i] = f(fresh)
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(m))
    return mean, se


# ---------------------------------------------------------------------------
# predictable helpers shared by the closed-form projections


def predictable_mean_count(omega: Configuration, t: float, window: Window,
                           rho: ProductIntensity) -> float:
    """Conditional mean of N(window) given the strict past before t.

    Past atoms are counted on the truncated path; the future contribution
    is the rho-mass of the window beyond t (independence of increments).
    """
    past, future = _past_and_future(omega, t, window, rho)
    return past + future


def _past_and_future(omega: Configuration, t: float, window: Window,
                     rho: ProductIntensity) -> tuple[int, float]:
    past = count(truncate_before(omega, t), window)
    dt = min(window.t_hi, rho.T) - max(window.t_lo, t)
    future = dt * rho.marks.measure_window(window) if dt > 0.0 else 0.0
    return past, future


def _in_time_band(window: Window, t: float) -> bool:
    return window.t_lo <= t <= window.t_hi


# ---------------------------------------------------------------------------
# built-in functionals


def _count_fn(windows: tuple[Window, ...], g):
    def fn(omega: Configuration) -> float:
        return float(g(*[count(omega, w) for w in windows]))

    return fn


def _validate_pseudo_kernels(functional: Functional, T: float) -> None:
    """Cross-check annotated expansion kernels against brute-force differences.

    Evaluated on a handful of one- and two-atom tuples straddling the
    functional's windows; raises ValueError on disagreement.
    """
    if functional.pseudo_kernel is None:
        return
    probes = _validation_probes(functional.windows or (), T)
    if len(probes) < 2:
        return
    tuples = [(probes[0],), (probes[1],), (probes[0], probes[1])]
    if len(probes) > 2:
        tuples += [(probes[0], probes[2]), (probes[2],)]
    for tup in tuples:
        k = len(tup)
        kernel = functional.pseudo_kernel(k)
        claimed = kernel.fn(*tup)
        brute = deterministic_diff(functional, tup, T=T)
        if abs(claimed - brute) > 1e-9 * (1.0 + abs(brute)):
            raise ValueError(
                f"functional {functional.name!r}: order-{k} kernel gives {claimed!r}, "
                f"brute force gives {brute!r} at {tup!r}"
            )


def _validation_probes(windows: tuple[Window, ...], T: float) -> list[Atom]:
    probes: list[Atom] = []
    offsets = (0.31, 0.73, 0.47)
    for w in windows:
        t0, t1 = max(w.t_lo, 0.0), min(w.t_hi, T)
        if t1 <= t0 or not math.isfinite(t1 - t0):
            continue
        if w.x_values is not None:
            x_in = min(w.x_values)
            x_out = x_in - 1.0
        else:
            lo = w.x_lo if math.isfinite(w.x_lo) else 0.0
            hi = w.x_hi if math.isfinite(w.x_hi) else lo + 1.0
            x_in = 0.5 * (lo + hi)
            x_out = hi + 1.0 if math.isfinite(w.x_hi) else None
        for i, off in enumerate(offsets[:2]):
            probes.append(Atom(t0 + off * (t1 - t0), x_in + (0.0 if i == 0 else 1e-3 * (x_in or 1.0))))
        if x_out is not None:
            probes.append(Atom(t0 + offsets[2] * (t1 - t0), x_out))
    seen: set[Atom] = set()
    unique = []
    for p in probes:
        if p not in seen and 0.0 <= p.t <= T:
            unique.append(p)
            seen.add(p)
    return unique[:4]


def constant_functional(value: float = 1.0, name: str = "one") -> Functional:
    return Functional(
        name=name,
        fn=lambda omega: float(value),
        windows=(),
        g=lambda: float(value),
        pseudo_order=0,
        pseudo_kernel=zero_kernel,
        chaos_order=0,
        chaos_mean=float(value),
        chaos_kernel=zero_kernel,
        projection=lambda omega, t, x: 0.0,
        projection_mark_integral=lambda omega, t: 0.0,
    )


def count_functional(window: Window, rho: ProductIntensity | None = None,
                     name: str = "count") -> Functional:
    ind = indicator_kernel(window, name=f"ind[{name}]")

    def order_kernel(k: int) -> Kernel:
        return ind if k == 1 else zero_kernel(k)

    fields = dict(
        name=name,
        fn=_count_fn((window,), lambda n: n),
        windows=(window,),
        g=lambda n: np.asarray(n, dtype=float),
        pseudo_order=1,
        pseudo_kernel=order_kernel,
        chaos_order=1,
        chaos_kernel=order_kernel,
    )
    if rho is not None:
        lam = rho.window_mass(window)
        fields["chaos_mean"] = lam
        fields["projection"] = lambda omega, t, x: (
            1.0 if window.contains(Atom(t, x)) else 0.0
        )
        fields["projection_mark_integral"] = lambda omega, t: (
            rho.marks.measure_window(window) if _in_time_band(window, t) else 0.0
        )
    F = Functional(**fields)
    _validate_pseudo_kernels(F, rho.T if rho is not None else max(1.0, window.t_hi))
    return F


def count_squared_functional(window: Window, rho: ProductIntensity | None = None,
                             name: str = "count_squared") -> Functional:
    ind = indicator_kernel(window, name=f"ind[{name}]")
    pair = scale_kernel(2.0, tensor_power(ind, 2))

    def pseudo_kernel(k: int) -> Kernel:
        return ind if k == 1 else pair if k == 2 else zero_kernel(k)

    fields = dict(
        name=name,
        fn=_count_fn((window,), lambda n: n * n),
        windows=(window,),
        g=lambda n: np.asarray(n, dtype=float) ** 2,
        pseudo_order=2,
        pseudo_kernel=pseudo_kernel,
    )
    if rho is not None:
        lam = rho.window_mass(window)
        first = scale_kernel(2.0 * lam + 1.0, ind)
        fields["chaos_order"] = 2
        fields["chaos_mean"] = lam + lam * lam
        fields["chaos_kernel"] = lambda k: first if k == 1 else pair if k == 2 else zero_kernel(k)

        def projection(omega: Configuration, t: float, x: float) -> float:
            if not window.contains(Atom(t, x)):
                return 0.0
            return 2.0 * predictable_mean_count(omega, t, window, rho) + 1.0

        def projection_mark_integral(omega: Configuration, t: float) -> float:
            if not _in_time_band(window, t):
                return 0.0
            pm = predictable_mean_count(omega, t, window, rho)
            return (2.0 * pm + 1.0) * rho.marks.measure_window(window)

        fields["projection"] = projection
        fields["projection_mark_integral"] = projection_mark_integral
    F = Functional(**fields)
    _validate_pseudo_kernels(F, rho.T if rho is not None else max(1.0, window.t_hi))
    return F


def product_counts_functional(wa: Window, wb: Window, rho: ProductIntensity | None = None,
                              name: str = "product_counts") -> Functional:
    ind_a = indicator_kernel(wa, name="ind_a")
    ind_b = indicator_kernel(wb, name="ind_b")
    overlap = wa.intersect(wb)
    ind_ab = indicator_kernel(overlap, name="ind_ab") if overlap is not None else zero_kernel(1)
    # Order 2 is the symmetrized cross tensor 1_A (x) 1_B + 1_B (x) 1_A.
    cross = combine_kernels(
        [(1.0, tensor_kernel(ind_a, ind_b)), (1.0, tensor_kernel(ind_b, ind_a))],
        symmetric=True, name="cross")

    def pseudo_kernel(k: int) -> Kernel:
        return ind_ab if k == 1 else cross if k == 2 else zero_kernel(k)

    fields = dict(
        name=name,
        fn=_count_fn((wa, wb), lambda na, nb: na * nb),
        windows=(wa, wb),
        g=lambda na, nb: np.asarray(na, dtype=float) * np.asarray(nb, dtype=float),
        pseudo_order=2,
        pseudo_kernel=pseudo_kernel,
    )
    if rho is not None:
        lam_a, lam_b = rho.window_mass(wa), rho.window_mass(wb)
        lam_ab = rho.window_mass(overlap) if overlap is not None else 0.0
        first = combine_kernels([(lam_b, ind_a), (lam_a, ind_b), (1.0, ind_ab)],
                                symmetric=True, name="T1[product]")
        fields["chaos_order"] = 2
        fields["chaos_mean"] = lam_a * lam_b + lam_ab
        fields["chaos_kernel"] = lambda k: first if k == 1 else cross if k == 2 else zero_kernel(k)

        def projection(omega: Configuration, t: float, x: float) -> float:
            a = Atom(t, x)
            out = 0.0
            if wa.contains(a):
                out += predictable_mean_count(omega, t, wb, rho)
            if wb.contains(a):
                out += predictable_mean_count(omega, t, wa, rho)
            if overlap is not None and overlap.contains(a):
                out += 1.0
            return out

        def projection_mark_integral(omega: Configuration, t: float) -> float:
            out = 0.0
            if _in_time_band(wa, t):
                out += predictable_mean_count(omega, t, wb, rho) * rho.marks.measure_window(wa)
            if _in_time_band(wb, t):
                out += predictable_mean_count(omega, t, wa, rho) * rho.marks.measure_window(wb)
            if overlap is not None and _in_time_band(overlap, t):
                out += rho.marks.measure_window(overlap)
            return out

        fields["projection"] = projection
        fields["projection_mark_integral"] = projection_mark_integral
    F = Functional(**fields)
    horizon = rho.T if rho is not None else max(1.0, wa.t_hi, wb.t_hi)
    _validate_pseudo_kernels(F, horizon)
    return F


def exp_count_functional(window: Window, beta: float, rho: ProductIntensity | None = None,
                         name: str | None = None) -> Functional:
    """F = exp(beta N(window)); every expansion order is active (z = e^beta)."""
    z = math.exp(beta)
    ind = indicator_kernel(window, name="ind[exp]")
    name = name or f"exp_count[{beta}]"

    def pseudo_kernel(k: int) -> Kernel:
        return scale_kernel((z - 1.0) ** k, tensor_power(ind, k))

    fields = dict(
        name=name,
        fn=_count_fn((window,), lambda n: math.exp(beta * n)),
        windows=(window,),
        g=lambda n: np.exp(beta * np.asarray(n, dtype=float)),
        pseudo_order=None,
        pseudo_kernel=pseudo_kernel,
    )
    if rho is not None:
        lam = rho.window_mass(window)
        mean = math.exp(lam * (z - 1.0))
        fields["chaos_order"] = None
        fields["chaos_mean"] = mean
        fields["chaos_kernel"] = lambda k: scale_kernel(
            (z - 1.0) ** k * mean, tensor_power(ind, k))

        def projection(omega: Configuration, t: float, x: float) -> float:
            if not window.contains(Atom(t, x)):
                return 0.0
            past, future = _past_and_future(omega, t, window, rho)
            return (z - 1.0) * z ** past * math.exp(future * (z - 1.0))

        def projection_mark_integral(omega: Configuration, t: float) -> float:
            if not _in_time_band(window, t):
                return 0.0
            past, future = _past_and_future(omega, t, window, rho)
            return ((z - 1.0) * z ** past * math.exp(future * (z - 1.0))
                    * rho.marks.measure_window(window))

        fields["projection"] = projection
        fields["projection_mark_integral"] = projection_mark_integral
    F = Functional(**fields)
    _validate_pseudo_kernels(F, rho.T if rho is not None else max(1.0, window.t_hi))
    return F
