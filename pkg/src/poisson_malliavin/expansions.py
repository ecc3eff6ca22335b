"""The representation identities as executable checks.

Pathwise exact checks: the uncompensated expansion truncates to a finite
sum (factorial measures of order beyond the atom count are empty), the
compensated expansion of polynomial count functionals terminates at the
polynomial degree, and the uncompensated Clark-Ocone-type identity
telescopes atom by atom.  Statistical checks cover the predictable
projection (nested resampling) and the nested-window extension to
infinite mark mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import fsum

import numpy as np

from .configuration import Atom, Configuration, Window, empty_configuration, project
from .errors import KernelsUnavailable, ProjectionUnavailable
from .integrals import Kernel, eval_compensated, eval_uncompensated
from .malliavin import (
    Functional,
    conditional_expectation,
    deterministic_diff,
    difference,
    iterated_difference,
    pco_integrand,
)
from .measure import (
    DiscreteMarks,
    ProductIntensity,
    derive_seed,
    sample_poisson,
    time_quadrature,
)

__all__ = [
    "ExpansionReport",
    "ResidualReport",
    "WindowRow",
    "pseudo_chaotic_sum",
    "chaotic_sum",
    "mc_chaos_kernels",
    "pco_verify",
    "pco_residual_suite",
    "pco_uniqueness_probe",
    "co_residual",
    "co_residual_suite",
    "projection_probes",
    "windowed_pco_convergence",
]


@dataclass
class ExpansionReport:
    """Per-order terms, partial sums, and residuals of one expansion."""

    functional: str
    kind: str
    value: float
    orders: tuple[int, ...]
    terms: tuple[float, ...]
    partial_sums: tuple[float, ...]
    residuals: tuple[float, ...]
    tolerance: float
    exact_order: int | None

    def to_json(self) -> dict:
        return {
            "functional": self.functional,
            "kind": self.kind,
            "value": self.value,
            "orders": list(self.orders),
            "terms": list(self.terms),
            "partial_sums": list(self.partial_sums),
            "residuals": list(self.residuals),
            "tolerance": self.tolerance,
            "exact_order": self.exact_order,
        }


@dataclass
class ResidualReport:
    """Aggregate of a residual check over sampled configurations."""

    label: str
    n: int
    mean_abs: float
    max_abs: float
    max_rel: float
    stderr: float
    tolerance: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "check": self.label,
            "n": self.n,
            "mean_abs_residual": self.mean_abs,
            "max_abs_residual": self.max_abs,
            "max_rel_residual": self.max_rel,
            "stderr": self.stderr,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }
        out.update(self.extra)
        return out


def _expansion_report(F: Functional, kind: str, value: float, base: float,
                      terms: list[float], tol: float) -> ExpansionReport:
    orders = tuple(range(len(terms) + 1))
    all_terms = [base] + terms
    partials = [fsum(all_terms[: i + 1]) for i in range(len(all_terms))]
    scale = tol * (1.0 + abs(value))
    residuals = [abs(value - p) for p in partials]
    exact = next((k for k, r in zip(orders, residuals) if r <= scale), None)
    return ExpansionReport(F.name, kind, value, orders, tuple(all_terms),
                           tuple(partials), tuple(residuals), tol, exact)


def _brute_pseudo_kernel(F: Functional, k: int, T: float) -> Kernel:
    return Kernel(k, lambda *atoms: deterministic_diff(F, atoms, T=T),
                  symmetric=True, name=f"T{k}[{F.name}]")


def pseudo_chaotic_sum(F: Functional, omega: Configuration, n_max: int | None = None,
                       tol: float = 1e-9, budget: int = 10_000_000) -> ExpansionReport:
    """Partial sums of the uncompensated expansion evaluated pathwise.

    Order k contributes the factorial-measure sum of the order-k
    deterministic difference kernel, divided by k!.  Orders above the atom
    count are empty and the sum is exact there; orders above the
    functional's annotated degree are skipped as identical zeros.
    """
    k_top = len(omega) if n_max is None else min(n_max, len(omega))
    base = F.fn(empty_configuration(omega.T))
    value = F.fn(omega)
    terms = []
    for k in range(1, k_top + 1):
        if F.pseudo_order is not None and k > F.pseudo_order:
            terms.append(0.0)
            continue
        kernel = F.pseudo_kernel(k) if F.pseudo_kernel is not None \
            else _brute_pseudo_kernel(F, k, omega.T)
        terms.append(eval_uncompensated(kernel, omega, budget=budget) / math.factorial(k))
    return _expansion_report(F, "pseudo_chaotic", value, base, terms, tol)


def mc_chaos_kernels(F: Functional, rho: ProductIntensity, samples: int, seed: int,
                     n_top: int = 2):
    """Monte Carlo chaos kernels: order-k kernel value = mean of the k-th
    iterated difference over a fixed sample set.

    Diagnostic only; the noise floor makes these unusable for exact
    identity checks (they are deliberately kept out of acceptance paths).
    Returns (mean estimate of F, kernel factory).
    """
    configs = [sample_poisson(rho, derive_seed(seed, i)) for i in range(samples)]
    mean = float(np.mean([F.fn(c) for c in configs]))

    def kernel(k: int) -> Kernel:
        def fn(*atoms: Atom) -> float:
            return float(np.mean([iterated_difference(F, c, atoms) for c in configs]))

        return Kernel(k, fn, symmetric=True, name=f"mcT{k}[{F.name}]")

    return mean, kernel


def chaotic_sum(F: Functional, omega: Configuration, rho: ProductIntensity,
                n_max: int, tol: float = 1e-9,
                mc: tuple[int, int] | None = None) -> ExpansionReport:
    """Partial sums of the compensated expansion evaluated pathwise.

    Kernels come from the functional's closed-form annotations; without
    them, ``mc=(samples, seed)`` estimates the kernels by resampling
    (diagnostics only).  Raises when neither is available.
    """
    if F.chaos_kernel is not None and F.chaos_mean is not None:
        mean, kernel = F.chaos_mean, F.chaos_kernel
        top_known = F.chaos_order
    elif mc is not None:
        mean, kernel = mc_chaos_kernels(F, rho, mc[0], mc[1], n_max)
        top_known = None
    else:
        raise KernelsUnavailable(
            f"functional {F.name!r} has no chaos kernels and MC estimation is off")
    value = F.fn(omega)
    terms = []
    for k in range(1, n_max + 1):
        if top_known is not None and k > top_known:
            terms.append(0.0)
            continue
        terms.append(eval_compensated(kernel(k), omega, rho) / math.factorial(k))
    return _expansion_report(F, "chaotic", value, mean, terms, tol)


def pco_verify(F: Functional, omega: Configuration, base: float | None = None) -> float:
    """Residual of the uncompensated pathwise representation.

    F(omega) - F(empty) - sum over atoms of the predictable integrand;
    identically zero (to rounding) whenever atom times are distinct,
    because the sum telescopes through the time-ordered truncations.
    """
    if base is None:
        base = F.fn(empty_configuration(omega.T))
    total = fsum(pco_integrand(F, omega, a) for a in omega.atoms)
    return F.fn(omega) - base - total


def pco_residual_suite(F: Functional, rho: ProductIntensity, n: int, seed: int,
                       tol: float = 1e-9, label: str | None = None) -> ResidualReport:
    """pco_verify over n seeded sample paths; passes when every path's
    residual stays below tol * (1 + |F(omega)|)."""
    abs_res = np.empty(n)
    max_rel = 0.0
    for i in range(n):
        omega = sample_poisson(rho, derive_seed(seed, i))
        r = abs(pco_verify(F, omega))
        abs_res[i] = r
        max_rel = max(max_rel, r / (1.0 + abs(F.fn(omega))))
    stderr = float(np.std(abs_res, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ResidualReport(
        label or f"pco[{F.name}]", n, float(np.mean(abs_res)), float(np.max(abs_res)),
        max_rel, stderr, tol, bool(max_rel < tol),
        extra={"kind": "pco", "functional": F.name, "seed": seed},
    )


def pco_uniqueness_probe(F: Functional, Z, omegas) -> float:
    """Max |Z(omega, t, x) - H_(t,x) F(omega)| over every atom of the sampled paths.

    Any integrand representing F in the uncompensated identity must agree
    with the canonical one at atoms; a deviation flags a fake candidate.
    """
    worst = 0.0
    for omega in omegas:
        for a in omega.atoms:
            worst = max(worst, abs(Z(omega, a.t, a.x) - pco_integrand(F, omega, a)))
    return worst


def _compensator(F: Functional, omega: Configuration, rho: ProductIntensity,
                 nodes: int) -> float:
    """Time integral of the mark-integrated projection, piecewise between atoms.

    The built-in projections are smooth in t between consecutive atom
    times (the predictable count only jumps at atoms), so per-piece
    Gauss-Legendre is exact for the piecewise-polynomial cases.
    """
    times = sorted({a.t for a in omega.atoms})
    breaks = [0.0] + [t for t in times if 0.0 < t < rho.T] + [rho.T]
    if F.projection_mark_integral is not None:
        def mark_int(t: float) -> float:
            return F.projection_mark_integral(omega, t)
    else:
        lo, hi = (-math.inf, math.inf) if isinstance(rho.marks, DiscreteMarks) \
            else (0.0, rho.marks.M)
        xs, xw = rho.marks.quadrature(lo, hi, 64)

        def mark_int(t: float) -> float:
            return fsum(float(w) * F.projection(omega, t, float(x)) for x, w in zip(xs, xw))
    pieces = []
    for lo, hi in zip(breaks, breaks[1:]):
        if hi <= lo:
            continue
        ts, ws = time_quadrature(lo, hi, nodes)
        pieces.append(fsum(float(w) * mark_int(float(t)) for t, w in zip(ts, ws)))
    return fsum(pieces)


def co_residual(F: Functional, omega: Configuration, rho: ProductIntensity,
                nodes: int = 16) -> float:
    """Residual of the compensated representation with the closed-form projection.

    F(omega) - E[F] - [sum of the projection at atoms - compensator], the
    compensator integrated piecewise between atom jump times.
    """
    if F.projection is None:
        raise ProjectionUnavailable(f"functional {F.name!r} has no projection annotation")
    if F.chaos_mean is None:
        raise ProjectionUnavailable(f"functional {F.name!r} has no closed-form mean")
    jumps = fsum(F.projection(omega, a.t, a.x) for a in omega.atoms)
    comp = _compensator(F, omega, rho, nodes)
    return F.fn(omega) - F.chaos_mean - (jumps - comp)


def co_residual_suite(F: Functional, rho: ProductIntensity, n: int, seed: int,
                      tol: float = 1e-8, nodes: int = 16,
                      label: str | None = None) -> ResidualReport:
    abs_res = np.empty(n)
    max_rel = 0.0
    for i in range(n):
        omega = sample_poisson(rho, derive_seed(seed, i))
        r = abs(co_residual(F, omega, rho, nodes=nodes))
        abs_res[i] = r
        max_rel = max(max_rel, r / (1.0 + abs(F.fn(omega))))
    stderr = float(np.std(abs_res, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ResidualReport(
        label or f"co[{F.name}]", n, float(np.mean(abs_res)), float(np.max(abs_res)),
        max_rel, stderr, tol, bool(max_rel < tol),
        extra={"kind": "clark_ocone", "functional": F.name, "seed": seed},
    )


def projection_probes(F: Functional, rho: ProductIntensity, probes: int, m: int,
                      seed: int, z_max: float = 4.0) -> list[dict]:
    """Nested-resampling spot checks of the closed-form projection.

    At random (omega, t, x): estimate the conditional expectation of the
    difference operator by resampling the future, and compare with the
    annotated projection value within z_max standard errors.
    """
    if F.projection is None:
        raise ProjectionUnavailable(f"functional {F.name!r} has no projection annotation")
    rows = []
    for p in range(probes):
        sp = derive_seed(seed, p)
        omega = sample_poisson(rho, sp)
        rng = np.random.default_rng(derive_seed(sp, 1))
        t = float(rng.uniform(0.0, rho.T))
        x = float(rho.marks.sample(rng, 1)[0])
        atom = Atom(t, x)
        est, se = conditional_expectation(
            lambda w: difference(F, w, atom), omega, t, rho, m, derive_seed(sp, 2))
        target = F.projection(omega, t, x)
        if se == 0.0:
            z = 0.0 if abs(est - target) <= 1e-12 * (1.0 + abs(target)) else math.inf
        else:
            z = (est - target) / se
        rows.append({"probe": p, "t": t, "x": x, "estimate": est, "stderr": se,
                     "closed_form": target, "z": z, "pass": bool(abs(z) <= z_max)})
    return rows


@dataclass
class WindowRow:
    """One nested window of the finite-window convergence demonstration."""

    index: int
    mass_inside: float
    excluded_mass: float
    n: int
    mean_abs_diff: float
    stderr: float
    max_residual: float
    empty_value_convention: float = 0.0

    def to_json(self) -> dict:
        return {
            "window": self.index,
            "mass_inside": self.mass_inside,
            "excluded_mass": self.excluded_mass,
            "n": self.n,
            "residual": self.mean_abs_diff,
            "stderr": self.stderr,
            "max_pco_residual": self.max_residual,
            "empty_value_convention": self.empty_value_convention,
        }


def windowed_pco_convergence(F: Functional, mark_windows: list[Window],
                             rho: ProductIntensity, samples: int,
                             seed: int) -> list[WindowRow]:
    """Finite-window restrictions F_j = F of the projected configuration.

    For each nested window the restricted identity is verified exactly on
    the projected paths (with F at the empty configuration conventionally
    0, as in the infinite-mass statement), and the L1 gap E|F - F_j| is
    reported; it equals the excluded rho-mass for plain counting
    functionals and shrinks to zero as the windows exhaust the mark space.
    """
    configs = [sample_poisson(rho, derive_seed(seed, i)) for i in range(samples)]
    fvals = np.array([F.fn(c) for c in configs])
    rows = []
    for j, w in enumerate(mark_windows):
        Fj = Functional(name=f"{F.name}|R{j + 1}", fn=lambda om, _w=w: F.fn(project(om, _w)))
        diffs = np.empty(samples)
        max_res = 0.0
        for i, omega in enumerate(configs):
            restricted = project(omega, w)
            diffs[i] = abs(fvals[i] - Fj.fn(omega))
            max_res = max(max_res, abs(pco_verify(Fj, restricted, base=0.0)))
        inside = rho.window_mass(w)
        rows.append(WindowRow(
            index=j + 1,
            mass_inside=inside,
            excluded_mass=rho.mass - inside,
            n=samples,
            mean_abs_diff=float(np.mean(diffs)),
            stderr=float(np.std(diffs, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0,
            max_residual=max_res,
        ))
    return rows
