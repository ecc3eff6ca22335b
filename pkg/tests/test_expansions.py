import math

import numpy as np
import pytest

import poisson_malliavin as pm
from poisson_malliavin import (
    Atom,
    KernelsUnavailable,
    ProjectionUnavailable,
    Window,
    as_functional,
    chaotic_sum,
    co_residual,
    co_residual_suite,
    constant_functional,
    count,
    count_functional,
    count_squared_functional,
    derive_seed,
    empty_configuration,
    exp_count_functional,
    make_configuration,
    pco_integrand,
    pco_residual_suite,
    pco_uniqueness_probe,
    pco_verify,
    product_counts_functional,
    projection_probes,
    pseudo_chaotic_sum,
    sample_poisson,
    truncate_before,
    windowed_pco_convergence,
)


def _paths(rho, n, seed=55):
    return [sample_poisson(rho, derive_seed(seed, i)) for i in range(n)]


# -- pseudo-chaotic expansion --------------------------------------------------


def test_pseudo_linear_functional_exact_at_order_one(rho, window_a):
    F = count_functional(window_a, rho)
    for omega in _paths(rho, 10):
        rep = pseudo_chaotic_sum(F, omega)
        assert rep.exact_order is not None and rep.exact_order <= 1
        assert all(t == 0.0 for t in rep.terms[2:])
        assert rep.partial_sums[-1] == pytest.approx(F.fn(omega), abs=1e-12)


def test_pseudo_squared_identity(rho, window_a):
    # N^2 = N + N(N-1): order-1 term is N, order-2 term is N(N-1)
    F = count_squared_functional(window_a, rho)
    for omega in _paths(rho, 10, seed=60):
        n = count(omega, window_a)
        rep = pseudo_chaotic_sum(F, omega)
        if len(omega) >= 1:
            assert rep.terms[1] == pytest.approx(n, abs=1e-12)
        if len(omega) >= 2:
            assert rep.terms[2] == pytest.approx(n * (n - 1), abs=1e-12)
        assert rep.residuals[-1] <= 1e-9 * (1.0 + abs(F.fn(omega)))


def test_pseudo_empty_path(rho, window_a):
    F = count_squared_functional(window_a, rho)
    rep = pseudo_chaotic_sum(F, empty_configuration(rho.T))
    assert rep.orders == (0,)
    assert rep.terms == (0.0,)
    assert rep.exact_order == 0


def test_pseudo_brute_force_matches_annotation(rho, window_a):
    annotated = count_squared_functional(window_a, rho)
    bare = as_functional("bare_sq", annotated.fn)  # no kernel annotations
    for omega in _paths(rho, 8, seed=61):
        if len(omega) > 6:
            continue
        a = pseudo_chaotic_sum(annotated, omega)
        b = pseudo_chaotic_sum(bare, omega)
        for ta, tb in zip(a.terms, b.terms):
            assert ta == pytest.approx(tb, abs=1e-10)


def test_pseudo_exp_count_exact_at_atom_count(rho, window_a):
    F = exp_count_functional(window_a, 0.5, rho)
    for omega in _paths(rho, 10, seed=62):
        rep = pseudo_chaotic_sum(F, omega)
        assert rep.residuals[-1] <= 1e-9 * (1.0 + abs(F.fn(omega)))


# -- chaotic expansion ----------------------------------------------------------


def test_chaotic_count_exact(rho, window_a):
    F = count_functional(window_a, rho)
    lam = rho.window_mass(window_a)
    for omega in _paths(rho, 10, seed=63):
        rep = chaotic_sum(F, omega, rho, n_max=3)
        assert rep.terms[0] == pytest.approx(lam, rel=1e-12)
        assert rep.residuals[1] <= 1e-9 * (1.0 + abs(F.fn(omega)))


def test_chaotic_squared_exact_at_two(rho, window_a):
    F = count_squared_functional(window_a, rho)
    lam = rho.window_mass(window_a)
    for omega in _paths(rho, 10, seed=64):
        n = count(omega, window_a)
        rep = chaotic_sum(F, omega, rho, n_max=4)
        assert rep.terms[0] == pytest.approx(lam + lam * lam, rel=1e-12)
        # I_1((2 lam + 1) 1_A) = (2 lam + 1)(N - lam)
        assert rep.terms[1] == pytest.approx((2 * lam + 1) * (n - lam), abs=1e-9)
        # (1/2) I_2(2 1_A x 1_A) = N(N-1) - 2 lam N + lam^2
        assert rep.terms[2] == pytest.approx(n * (n - 1) - 2 * lam * n + lam * lam,
                                             abs=1e-9)
        assert rep.residuals[2] <= 1e-9 * (1.0 + abs(F.fn(omega)))
        assert rep.exact_order is not None and rep.exact_order <= 2


def test_chaotic_product_counts_exact_at_two(rho, window_a, window_b):
    F = product_counts_functional(window_a, window_b, rho)
    for omega in _paths(rho, 10, seed=65):
        rep = chaotic_sum(F, omega, rho, n_max=3)
        assert rep.residuals[2] <= 1e-9 * (1.0 + abs(F.fn(omega)))


def test_chaotic_deterministic_functional(rho):
    F = constant_functional(4.25)
    omega = sample_poisson(rho, 66)
    rep = chaotic_sum(F, omega, rho, n_max=3)
    assert rep.terms[0] == 4.25
    assert all(t == 0.0 for t in rep.terms[1:])
    assert rep.exact_order == 0


def test_chaotic_without_kernels_raises(rho):
    F = as_functional("opaque", lambda om: float(len(om)))
    omega = sample_poisson(rho, 67)
    with pytest.raises(KernelsUnavailable):
        chaotic_sum(F, omega, rho, n_max=2)


def test_chaotic_mc_kernels_diagnostic(rho, window_a):
    # MC kernels for the plain count: the kernel itself is noiseless
    # (D N(A) = 1_A pathwise), only the mean estimate carries noise.
    F = count_functional(window_a, rho)
    bare = as_functional("count_bare", F.fn)
    omega = sample_poisson(rho, 68)
    rep = chaotic_sum(bare, omega, rho, n_max=1, mc=(3000, 99))
    assert rep.residuals[1] < 0.2


# -- pathwise uncompensated representation ---------------------------------------


def test_pco_verify_empty(rho, window_a):
    F = count_squared_functional(window_a, rho)
    assert pco_verify(F, empty_configuration(rho.T)) == 0.0


def test_pco_verify_counting_exact(rho):
    B = Window(0.0, 1.0, 0.2, 0.9)
    F = count_functional(B, rho)
    for omega in _paths(rho, 20, seed=70):
        assert pco_verify(F, omega) == 0.0


def test_pco_integrand_telescopes(rho, window_a):
    # oracle: with atoms sorted by time, each term equals the increment
    # F(prefix + atom) - F(prefix); the sum telescopes to F - F(empty)
    F = count_squared_functional(window_a, rho)
    omega = sample_poisson(rho, 71)
    prefix = empty_configuration(rho.T)
    for atom in omega.atoms:
        step = F.fn(pm.add_points(prefix, [atom])) - F.fn(prefix)
        assert pco_integrand(F, omega, atom) == step
        prefix = pm.add_points(prefix, [atom])


def test_pco_residual_suite_squared(rho, window_a):
    F = count_squared_functional(window_a, rho)
    report = pco_residual_suite(F, rho, 1000, 72)
    assert report.passed
    assert report.max_rel < 1e-9


def test_pco_uniqueness_probe(rho, window_a):
    F = count_squared_functional(window_a, rho)
    omegas = _paths(rho, 20, seed=73)

    def H(omega, t, x):
        return pco_integrand(F, omega, Atom(t, x))

    assert pco_uniqueness_probe(F, H, omegas) == 0.0

    def closed_form(omega, t, x):
        if not window_a.contains(Atom(t, x)):
            return 0.0
        return 2.0 * count(truncate_before(omega, t), window_a) + 1.0

    assert pco_uniqueness_probe(F, closed_form, omegas) < 1e-10

    def faulty(omega, t, x):
        return H(omega, t, x) + (1.0 if x <= 0.5 else 0.0)

    deviation = pco_uniqueness_probe(F, faulty, omegas)
    assert deviation == pytest.approx(1.0)


# -- compensated representation with the predictable projection ------------------


def test_co_residual_count_exact(rho, window_a):
    F = count_functional(window_a, rho)
    for omega in _paths(rho, 20, seed=74):
        assert abs(co_residual(F, omega, rho)) < 1e-12


def test_co_residual_squared(rho, window_a):
    F = count_squared_functional(window_a, rho)
    report = co_residual_suite(F, rho, 300, 75)
    assert report.passed
    assert report.max_rel < 1e-8


def test_co_residual_product_and_exp(rho, window_a, window_b):
    for F in (product_counts_functional(window_a, window_b, rho),
              exp_count_functional(window_a, 0.5, rho)):
        report = co_residual_suite(F, rho, 200, 76)
        assert report.passed, (F.name, report.max_rel)


def test_co_residual_unavailable(rho):
    F = as_functional("opaque", lambda om: float(len(om)))
    with pytest.raises(ProjectionUnavailable):
        co_residual(F, sample_poisson(rho, 77), rho)


def test_projection_probes_squared(rho, window_a):
    F = count_squared_functional(window_a, rho)
    rows = projection_probes(F, rho, probes=15, m=400, seed=78)
    assert all(r["pass"] for r in rows)


# -- nested-window convergence -----------------------------------------------------


def test_windowed_functional_supported_on_first_window(rho):
    F = count_functional(Window(0.0, 1.0, 0.0, 0.25), rho, name="count_inner")
    nested = [Window(0.0, 1.0, 0.0, 0.25 * (j + 1)) for j in range(4)]
    rows = windowed_pco_convergence(F, nested, rho, 500, 80)
    for row in rows:
        assert row.mean_abs_diff == 0.0
        assert row.max_residual == 0.0


def test_windowed_excluded_mass_law(rho):
    F = count_functional(Window(0.0, 1.0, 0.0, 1.0), rho, name="count_full")
    nested = [Window(0.0, 1.0, 0.0, 0.25 * (j + 1)) for j in range(4)]
    rows = windowed_pco_convergence(F, nested, rho, 3000, 81)
    previous = math.inf
    for row in rows:
        if row.stderr > 0:
            z = (row.mean_abs_diff - row.excluded_mass) / row.stderr
            assert abs(z) < 4.0
        else:
            assert row.mean_abs_diff == pytest.approx(row.excluded_mass, abs=1e-12)
        assert row.mean_abs_diff <= previous + 4.0 * row.stderr
        assert row.max_residual == 0.0
        previous = row.mean_abs_diff
    assert rows[-1].excluded_mass == pytest.approx(0.0, abs=1e-12)
    assert rows[-1].mean_abs_diff == 0.0
