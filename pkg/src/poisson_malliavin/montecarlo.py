"""Seeded, reproducible Monte Carlo engine and the statistical check suite.

Replication i always uses the substream seed derived from (seed, i) and
results are reduced in replication order, so every report is bitwise
identical for any worker-thread count.

The two-sided checks (Mecke, integration by parts, isometry) evaluate both
sides on the same sample stream and test the paired difference, which
removes the common Poisson noise from the comparison.  For count-based
functionals and product-form kernels the intensity-side integrals reduce
to exact sums over a cell partition of [0, T] x X (cells refine every
window boundary involved, so the shifted expectations are constant per
cell); otherwise a generic anchor-quadrature fallback is used.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import fsum
from typing import Callable

import numpy as np

from .configuration import Atom, Configuration, Window, add_points
from .errors import IntegrationUnavailable
from .integrals import (
    Kernel,
    _factor_integral,
    eval_compensated,
    rho_norm_sq,
)
from .malliavin import Functional, iterated_difference
from .measure import DiscreteMarks, ProductIntensity, derive_seed, sample_poisson, time_quadrature

__all__ = [
    "EstimateReport",
    "SampleBatch",
    "map_replications",
    "draw_batch",
    "estimate",
    "mecke_check",
    "ibp_check",
    "isometry_check",
]


@dataclass
class EstimateReport:
    """Outcome of one Monte Carlo check: mean, spread, and z against a target."""

    label: str
    n: int
    mean: float
    stderr: float
    target: float | None = None
    z: float | None = None
    passed: bool | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "check": self.label,
            "n": self.n,
            "mean": self.mean,
            "stderr": self.stderr,
        }
        if self.target is not None:
            out["target"] = self.target
            out["z"] = self.z
            out["pass"] = self.passed
        for k, v in self.extra.items():
            out[k] = v
        return out


def _report(label: str, values: np.ndarray, target: float | None, z_max: float,
            extra: dict | None = None) -> EstimateReport:
    n = len(values)
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    z = passed = None
    if target is not None:
        if stderr == 0.0:
            exact = abs(mean - target) <= 1e-12 * (1.0 + abs(target))
            z = 0.0 if exact else math.inf
        else:
            z = (mean - target) / stderr
        passed = abs(z) <= z_max
    return EstimateReport(label, n, mean, stderr, target, z, passed, dict(extra or {}))


def map_replications(fn: Callable[[int, int], float], n: int, seed: int,
                     threads: int = 1) -> np.ndarray:
    """Evaluate fn(index, derived_seed) for each replication, in any parallel
    layout, and return the values in index order."""
    out = np.empty(n)

    def run(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            out[i] = fn(i, derive_seed(seed, i))

    if threads <= 1 or n < 4 * threads:
        run(0, n)
        return out
    step = -(-n // threads)
    spans = [(lo, min(lo + step, n)) for lo in range(0, n, step)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda span: run(*span), spans))
    return out


@dataclass
class SampleBatch:
    """n seeded Poisson configurations plus flat arrays for vectorized sums."""

    rho: ProductIntensity
    seed: int
    configs: list[Configuration]
    flat_t: np.ndarray
    flat_x: np.ndarray
    offsets: np.ndarray

    @property
    def n(self) -> int:
        return len(self.configs)


def draw_batch(rho: ProductIntensity, n: int, seed: int, threads: int = 1) -> SampleBatch:
    """Replication i is exactly sample_poisson(rho, derive_seed(seed, i))."""
    configs: list[Configuration | None] = [None] * n

    def work(i: int, s: int) -> float:
        configs[i] = sample_poisson(rho, s)
        return 0.0

    map_replications(work, n, seed, threads)
    sizes = np.fromiter((len(c) for c in configs), dtype=np.int64, count=n)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    flat_t = np.fromiter((a.t for c in configs for a in c.atoms), dtype=float, count=total)
    flat_x = np.fromiter((a.x for c in configs for a in c.atoms), dtype=float, count=total)
    return SampleBatch(rho, seed, configs, flat_t, flat_x, offsets)


def _segment_sums(flat_vals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    cs = np.concatenate([[0.0], np.cumsum(flat_vals)])
    return cs[offsets[1:]] - cs[offsets[:-1]]


def _flat_values(batch: SampleBatch, factor: Kernel) -> np.ndarray:
    if factor.vec is not None:
        return np.asarray(factor.vec(batch.flat_t, batch.flat_x), dtype=float)
    return np.fromiter(
        (factor.fn(Atom(float(t), float(x))) for t, x in zip(batch.flat_t, batch.flat_x)),
        dtype=float, count=len(batch.flat_t))


def window_counts(batch: SampleBatch, windows: tuple[Window, ...]) -> np.ndarray:
    """(n, m) matrix of atom counts per sample per window."""
    cols = []
    for w in windows:
        inside = (batch.flat_t >= w.t_lo) & (batch.flat_t <= w.t_hi)
        if w.x_values is not None:
            inside &= np.isin(batch.flat_x, np.asarray(sorted(w.x_values)))
        else:
            inside &= (batch.flat_x >= w.x_lo) & (batch.flat_x <= w.x_hi)
        cols.append(_segment_sums(inside.astype(float), batch.offsets))
    if not cols:
        return np.zeros((batch.n, 0))
    return np.stack(cols, axis=1)


def _functional_values(F: Functional, batch: SampleBatch) -> np.ndarray:
    if F.windows is not None and F.g is not None:
        counts = window_counts(batch, F.windows)
        vals = F.g(*[counts[:, j] for j in range(counts.shape[1])])
        return np.broadcast_to(np.asarray(vals, dtype=float), (batch.n,)).copy()
    return np.fromiter((F.fn(c) for c in batch.configs), dtype=float, count=batch.n)


# ---------------------------------------------------------------------------
# product-kernel sums over a batch


def _product_components(h: Kernel):
    """Flatten h into [(coeff, order-1 factors)] when it is built from products."""
    if h.parts is not None:
        out = []
        for c, part in h.parts:
            sub = _product_components(part)
            if sub is None:
                return None
            out.extend((c * cc, fs) for cc, fs in sub)
        return out
    if h.factors is not None:
        return [(1.0, h.factors)]
    if h.order == 1:
        return [(1.0, (h,))]
    return None


def _distinct_tuple_sums(batch: SampleBatch, factors: tuple[Kernel, ...]) -> np.ndarray:
    """Per-sample sum of prod_i f_i over ordered tuples of distinct atoms."""
    k = len(factors)
    flat = [_flat_values(batch, f) for f in factors]
    S = {(i,): _segment_sums(flat[i], batch.offsets) for i in range(k)}
    if k == 1:
        return S[(0,)]
    S[(0, 1)] = _segment_sums(flat[0] * flat[1], batch.offsets)
    if k == 2:
        return S[(0,)] * S[(1,)] - S[(0, 1)]
    S[(0, 2)] = _segment_sums(flat[0] * flat[2], batch.offsets)
    S[(1, 2)] = _segment_sums(flat[1] * flat[2], batch.offsets)
    S[(0, 1, 2)] = _segment_sums(flat[0] * flat[1] * flat[2], batch.offsets)
    return (S[(0,)] * S[(1,)] * S[(2,)]
            - S[(0, 1)] * S[(2,)] - S[(0, 2)] * S[(1,)] - S[(1, 2)] * S[(0,)]
            + 2.0 * S[(0, 1, 2)])


def _uncompensated_values(batch: SampleBatch, h: Kernel) -> np.ndarray | None:
    comps = _product_components(h)
    if comps is None:
        return None
    out = np.zeros(batch.n)
    for c, factors in comps:
        out += c * _distinct_tuple_sums(batch, factors)
    return out


def _compensated_values(batch: SampleBatch, h: Kernel, rho: ProductIntensity) -> np.ndarray | None:
    """Per-sample compensated integral of a product-form kernel (order <= 3)."""
    comps = _product_components(h)
    if comps is None or h.order > 3:
        return None
    out = np.zeros(batch.n)
    for c, factors in comps:
        k = len(factors)
        m = [_factor_integral(f, rho).value for f in factors]
        if k == 1:
            S0 = _distinct_tuple_sums(batch, factors)
            out += c * (S0 - m[0])
            continue
        flat = [_flat_values(batch, f) for f in factors]
        S = [_segment_sums(v, batch.offsets) for v in flat]
        if k == 2:
            S01 = _segment_sums(flat[0] * flat[1], batch.offsets)
            out += c * (S[0] * S[1] - S01 - m[1] * S[0] - m[0] * S[1] + m[0] * m[1])
            continue
        S01 = _segment_sums(flat[0] * flat[1], batch.offsets)
        S02 = _segment_sums(flat[0] * flat[2], batch.offsets)
        S12 = _segment_sums(flat[1] * flat[2], batch.offsets)
        S012 = _segment_sums(flat[0] * flat[1] * flat[2], batch.offsets)
        triples = (S[0] * S[1] * S[2] - S01 * S[2] - S02 * S[1] - S12 * S[0] + 2.0 * S012)
        pairs = {(0, 1): S[0] * S[1] - S01, (0, 2): S[0] * S[2] - S02, (1, 2): S[1] * S[2] - S12}
        out += c * (
            triples
            - (m[2] * pairs[(0, 1)] + m[1] * pairs[(0, 2)] + m[0] * pairs[(1, 2)])
            + (m[1] * m[2] * S[0] + m[0] * m[2] * S[1] + m[0] * m[1] * S[2])
            - m[0] * m[1] * m[2]
        )
    return out


# ---------------------------------------------------------------------------
# cell partition of [0, T] x X


@dataclass(frozen=True)
class Cell:
    t_lo: float
    t_hi: float
    x_lo: float
    x_hi: float
    point: float | None
    mass: float
    rep: Atom


def _window_list(F: Functional | None, h: Kernel | None) -> list[Window]:
    out: list[Window] = []
    if F is not None and F.windows:
        out.extend(F.windows)
    if h is not None:
        comps = _product_components(h)
        for _, factors in comps or []:
            for f in factors:
                if f.support is not None:
                    out.append(f.support)
    return out


def build_cells(rho: ProductIntensity, windows: list[Window]) -> list[Cell]:
    """Partition of [0, T] x X refining every window boundary involved."""
    tb = {0.0, rho.T}
    for w in windows:
        for t in (w.t_lo, w.t_hi):
            if 0.0 < t < rho.T:
                tb.add(float(t))
    tbs = sorted(tb)
    marks = rho.marks
    mark_pieces: list[tuple[float, float, float | None, float, float]] = []
    if isinstance(marks, DiscreteMarks):
        for p, wgt in zip(marks.points, marks.weights):
            mark_pieces.append((p, p, p, wgt, p))
    else:
        xb = {0.0, marks.M}
        for w in windows:
            if w.x_values is not None:
                continue
            for x in (w.x_lo, w.x_hi):
                if math.isfinite(x) and 0.0 < x < marks.M:
                    xb.add(float(x))
        xbs = sorted(xb)
        for lo, hi in zip(xbs, xbs[1:]):
            if hi > lo:
                mark_pieces.append((lo, hi, None, marks.measure_interval(lo, hi), 0.5 * (lo + hi)))
    cells = []
    for t0, t1 in zip(tbs, tbs[1:]):
        if t1 <= t0:
            continue
        for x0, x1, point, mmass, xrep in mark_pieces:
            mass = (t1 - t0) * mmass
            if mass <= 0.0:
                continue
            cells.append(Cell(t0, t1, x0, x1, point, mass, Atom(0.5 * (t0 + t1), xrep)))
    return cells


def _cell_factor_integral(factor: Kernel, cell: Cell, rho: ProductIntensity,
                          nodes: int = 16) -> float:
    """Integral of an order-1 kernel over one cell against rho."""
    if factor.support is not None and not factor.support.contains(cell.rep):
        return 0.0
    if factor.constant_on_support is not None:
        return factor.constant_on_support * cell.mass
    ts, tw = time_quadrature(cell.t_lo, cell.t_hi, nodes)
    if cell.point is not None:
        xs = np.array([cell.point])
        xw = np.array([cell.mass / (cell.t_hi - cell.t_lo)])
    else:
        xs, xw = rho.marks.quadrature(cell.x_lo, cell.x_hi, nodes)
    tt = np.repeat(ts, len(xs))
    xx = np.tile(xs, len(ts))
    ww = np.outer(tw, xw).ravel()
    if factor.vec is not None:
        vals = np.asarray(factor.vec(tt, xx), dtype=float)
    else:
        vals = np.fromiter((factor.fn(Atom(float(t), float(x))) for t, x in zip(tt, xx)),
                           dtype=float, count=len(tt))
    return float(np.dot(ww, vals))


def _cell_patterns(cells: list[Cell], windows: tuple[Window, ...]) -> np.ndarray:
    pat = np.zeros((len(cells), len(windows)))
    for i, c in enumerate(cells):
        for j, w in enumerate(windows):
            pat[i, j] = 1.0 if w.contains(c.rep) else 0.0
    return pat


def _anchor_nodes(rho: ProductIntensity, cells: list[Cell], nodes: int) -> list[tuple[Atom, float]]:
    """Quadrature anchors (atom, weight) covering [0, T] x X, cellwise."""
    anchors: list[tuple[Atom, float]] = []
    for cell in cells:
        ts, tw = time_quadrature(cell.t_lo, cell.t_hi, nodes)
        if cell.point is not None:
            xs = np.array([cell.point])
            xw = np.array([cell.mass / (cell.t_hi - cell.t_lo)])
        else:
            xs, xw = rho.marks.quadrature(cell.x_lo, cell.x_hi, nodes)
        for t, wt in zip(ts, tw):
            for x, wx in zip(xs, xw):
                anchors.append((Atom(float(t), float(x)), float(wt * wx)))
    return anchors


# ---------------------------------------------------------------------------
# checks


def estimate(G, rho: ProductIntensity, n: int, seed: int, *, threads: int = 1,
             target: float | None = None, z_max: float = 4.0, label: str = "estimate",
             batch: SampleBatch | None = None) -> EstimateReport:
    """Mean and standard error of G over n seeded Poisson configurations."""
    if n < 2:
        raise ValueError("need n >= 2 replications")
    batch = batch or draw_batch(rho, n, seed, threads)
    if isinstance(G, Functional):
        values = _functional_values(G, batch)
    else:
        values = np.fromiter((G(c) for c in batch.configs), dtype=float, count=batch.n)
    return _report(label, values, target, z_max, {"seed": seed})


def _mecke_rhs_fast(F: Functional, h: Kernel, rho: ProductIntensity, batch: SampleBatch,
                    counts: np.ndarray, nodes: int) -> np.ndarray | None:
    comps = _product_components(h)
    if comps is None or F.windows is None or F.g is None:
        return None
    cells = build_cells(rho, _window_list(F, h))
    pat = _cell_patterns(cells, F.windows)
    rhs = np.zeros(batch.n)
    k = h.order
    for coeff, factors in comps:
        weights = np.array([[_cell_factor_integral(f, c, rho, nodes) for c in cells]
                            for f in factors])
        for combo in itertools.product(range(len(cells)), repeat=k):
            w = coeff * float(np.prod([weights[i][ci] for i, ci in enumerate(combo)]))
            if w == 0.0:
                continue
            shift = np.sum(pat[list(combo)], axis=0)
            shifted = counts + shift
            vals = F.g(*[shifted[:, j] for j in range(shifted.shape[1])])
            rhs += w * np.broadcast_to(np.asarray(vals, dtype=float), (batch.n,))
    return rhs


def _ibp_rhs_fast(F: Functional, h: Kernel, rho: ProductIntensity, batch: SampleBatch,
                  counts: np.ndarray, nodes: int) -> np.ndarray | None:
    comps = _product_components(h)
    if comps is None or F.windows is None or F.g is None:
        return None
    cells = build_cells(rho, _window_list(F, h))
    pat = _cell_patterns(cells, F.windows)
    rhs = np.zeros(batch.n)
    k = h.order

    def gvals(shift: np.ndarray) -> np.ndarray:
        shifted = counts + shift
        vals = F.g(*[shifted[:, j] for j in range(shifted.shape[1])])
        return np.broadcast_to(np.asarray(vals, dtype=float), (batch.n,))

    for coeff, factors in comps:
        weights = np.array([[_cell_factor_integral(f, c, rho, nodes) for c in cells]
                            for f in factors])
        for combo in itertools.product(range(len(cells)), repeat=k):
            w = coeff * float(np.prod([weights[i][ci] for i, ci in enumerate(combo)]))
            if w == 0.0:
                continue
            # Inclusion-exclusion over subsets of the k added anchors.
            diff = np.zeros(batch.n)
            for mask in range(1 << k):
                bits = [i for i in range(k) if (mask >> i) & 1]
                sign = -1.0 if (k - len(bits)) % 2 else 1.0
                shift = (np.sum(pat[[combo[i] for i in bits]], axis=0)
                         if bits else np.zeros(pat.shape[1]))
                diff += sign * gvals(shift)
            rhs += w * diff
    return rhs


def _mecke_rhs_generic(F: Functional, h: Kernel, rho: ProductIntensity, batch: SampleBatch,
                       nodes: int) -> np.ndarray:
    cells = build_cells(rho, _window_list(F, h))
    anchors = _anchor_nodes(rho, cells, nodes)
    k = h.order
    rhs = np.zeros(batch.n)
    for combo in itertools.product(anchors, repeat=k):
        atoms = tuple(a for a, _ in combo)
        w = float(np.prod([wi for _, wi in combo])) * h.fn(*atoms)
        if w == 0.0:
            continue
        for i, cfg in enumerate(batch.configs):
            rhs[i] += w * F.fn(add_points(cfg, atoms))
    return rhs


def _ibp_rhs_generic(F: Functional, h: Kernel, rho: ProductIntensity, batch: SampleBatch,
                     nodes: int) -> np.ndarray:
    cells = build_cells(rho, _window_list(F, h))
    anchors = _anchor_nodes(rho, cells, nodes)
    k = h.order
    rhs = np.zeros(batch.n)
    for combo in itertools.product(anchors, repeat=k):
        atoms = tuple(a for a, _ in combo)
        w = float(np.prod([wi for _, wi in combo])) * h.fn(*atoms)
        if w == 0.0:
            continue
        for i, cfg in enumerate(batch.configs):
            rhs[i] += w * iterated_difference(F, cfg, atoms)
    return rhs


def mecke_check(F: Functional, h: Kernel, rho: ProductIntensity, n: int, seed: int, *,
                threads: int = 1, z_max: float = 4.0, nodes: int = 16,
                generic_nodes: int = 3, batch: SampleBatch | None = None,
                force_generic: bool = False) -> EstimateReport:
    """Both sides of the Mecke identity on one sample stream; z of the difference.

    Left side: F times the pathwise factorial sum of h.  Right side: the
    intensity integral of h times the add-points-shifted evaluation of F,
    computed per sample so the paired difference carries the variance.
    """
    if h.order > 3:
        raise IntegrationUnavailable("mecke_check caps kernel order at 3")
    batch = batch or draw_batch(rho, n, seed, threads)
    fvals = _functional_values(F, batch)
    hsum = _uncompensated_values(batch, h)
    if hsum is None:
        hsum = np.fromiter(
            (fsum(h.fn(*tup) for tup in itertools.permutations(c.atoms, h.order))
             if len(c) >= h.order else 0.0 for c in batch.configs),
            dtype=float, count=batch.n)
    lhs = fvals * hsum
    rhs = None
    if not force_generic:
        counts = window_counts(batch, F.windows) if F.windows is not None else None
        if counts is not None and F.g is not None:
            rhs = _mecke_rhs_fast(F, h, rho, batch, counts, nodes)
    if rhs is None:
        rhs = _mecke_rhs_generic(F, h, rho, batch, generic_nodes)
    diff = lhs - rhs
    extra = {"kind": "mecke", "k": h.order, "F": F.name, "h": h.name, "seed": seed,
             "lhs_mean": float(np.mean(lhs)), "rhs_mean": float(np.mean(rhs))}
    return _report(f"mecke[{F.name};{h.name}]", diff, 0.0, z_max, extra)


def ibp_check(F: Functional, h: Kernel, rho: ProductIntensity, n: int, seed: int, *,
              threads: int = 1, z_max: float = 4.0, nodes: int = 16,
              generic_nodes: int = 3, batch: SampleBatch | None = None,
              force_generic: bool = False) -> EstimateReport:
    """Integration-by-parts identity: E[F I_k(h)] against the D^k F intensity integral."""
    if h.order > 3:
        raise IntegrationUnavailable("ibp_check caps kernel order at 3")
    batch = batch or draw_batch(rho, n, seed, threads)
    fvals = _functional_values(F, batch)
    ivals = _compensated_values(batch, h, rho)
    if ivals is None:
        ivals = np.fromiter((eval_compensated(h, c, rho) for c in batch.configs),
                            dtype=float, count=batch.n)
    lhs = fvals * ivals
    rhs = None
    if not force_generic:
        counts = window_counts(batch, F.windows) if F.windows is not None else None
        if counts is not None and F.g is not None:
            rhs = _ibp_rhs_fast(F, h, rho, batch, counts, nodes)
    if rhs is None:
        rhs = _ibp_rhs_generic(F, h, rho, batch, generic_nodes)
    diff = lhs - rhs
    extra = {"kind": "ibp", "k": h.order, "F": F.name, "h": h.name, "seed": seed,
             "lhs_mean": float(np.mean(lhs)), "rhs_mean": float(np.mean(rhs))}
    return _report(f"ibp[{F.name};{h.name}]", diff, 0.0, z_max, extra)


def isometry_check(f: Kernel, rho: ProductIntensity, n: int, seed: int, *,
                   threads: int = 1, z_max: float = 4.0,
                   batch: SampleBatch | None = None) -> EstimateReport:
    """Second moment of the compensated integral against n! times the L2 norm.

    The n! constant is the one fixed by the closed-form Poisson-moment
    oracle (see the acceptance suite); the centering mean is reported too.
    """
    if not f.symmetric:
        raise ValueError("isometry_check expects a symmetric kernel")
    batch = batch or draw_batch(rho, n, seed, threads)
    vals = _compensated_values(batch, f, rho)
    if vals is None:
        vals = np.fromiter((eval_compensated(f, c, rho) for c in batch.configs),
                           dtype=float, count=batch.n)
    norm_sq = rho_norm_sq(f, rho)
    target = math.factorial(f.order) * norm_sq
    extra = {"kind": "isometry", "order": f.order, "kernel": f.name, "seed": seed,
             "norm_sq": norm_sq, "centering_mean": float(np.mean(vals)),
             "centering_stderr": float(np.std(vals, ddof=1) / math.sqrt(len(vals)))}
    return _report(f"isometry[{f.name}]", vals ** 2, target, z_max, extra)
