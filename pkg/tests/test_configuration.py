import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poisson_malliavin import (
    Atom,
    AtomOutOfWindow,
    Configuration,
    DuplicateAtom,
    Window,
    add_points,
    count,
    empty_configuration,
    make_configuration,
    truncate_before,
)

times = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
marks = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
atoms = st.builds(Atom, times, marks)
configurations = st.lists(atoms, max_size=8, unique=True).map(
    lambda ats: make_configuration(ats, 1.0))


def test_make_empty():
    omega = make_configuration([], T=1.0)
    assert len(omega) == 0
    assert omega == empty_configuration(1.0)


def test_make_sorts_by_time_then_mark():
    omega = make_configuration([Atom(0.7, 0.1), Atom(0.2, 0.9)], T=1.0)
    assert [a.t for a in omega] == [0.2, 0.7]
    tied = make_configuration([Atom(0.5, 0.9), Atom(0.5, 0.1)], T=1.0)
    assert [a.x for a in tied] == [0.1, 0.9]


def test_make_rejects_duplicates_and_out_of_window():
    with pytest.raises(DuplicateAtom):
        make_configuration([Atom(0.5, 0.2), Atom(0.5, 0.2)], T=1.0)
    with pytest.raises(AtomOutOfWindow):
        make_configuration([Atom(1.5, 0.2)], T=1.0)
    with pytest.raises(AtomOutOfWindow):
        make_configuration([Atom(-0.1, 0.2)], T=1.0)


def test_add_points_basic():
    omega = empty_configuration(1.0)
    one = add_points(omega, [Atom(0.3, 0.1)])
    assert one.atoms == (Atom(0.3, 0.1),)
    # already-present atoms are skipped, not duplicated
    same = add_points(one, [Atom(0.3, 0.1)])
    assert same == one
    merged = add_points(one, [Atom(0.1, 0.4), Atom(0.9, 0.7)])
    assert merged.atoms == (Atom(0.1, 0.4), Atom(0.3, 0.1), Atom(0.9, 0.7))
    # value semantics: the input is untouched
    assert one.atoms == (Atom(0.3, 0.1),)


def test_add_points_out_of_window():
    with pytest.raises(AtomOutOfWindow):
        add_points(empty_configuration(1.0), [Atom(2.0, 0.0)])


@settings(max_examples=60)
@given(configurations, st.lists(atoms, max_size=4))
def test_add_points_idempotent(omega, extra):
    once = add_points(omega, extra)
    twice = add_points(once, extra)
    assert once == twice


def test_truncate_strictness():
    omega = make_configuration([Atom(0.2, 0.0), Atom(0.7, 0.0)], T=1.0)
    assert truncate_before(omega, 0.5).atoms == (Atom(0.2, 0.0),)
    assert truncate_before(omega, 0.0) == empty_configuration(1.0)
    # an atom exactly at t belongs to the future
    at_half = make_configuration([Atom(0.5, 0.3)], T=1.0)
    assert truncate_before(at_half, 0.5) == empty_configuration(1.0)


def test_truncate_range_check():
    with pytest.raises(AtomOutOfWindow):
        truncate_before(empty_configuration(1.0), 1.5)


@settings(max_examples=60)
@given(configurations, times, times)
def test_truncate_composes_to_min(omega, s, t):
    assert truncate_before(truncate_before(omega, t), s) == \
        truncate_before(omega, min(s, t))


@settings(max_examples=60)
@given(configurations, times)
def test_truncate_all_atoms_strictly_before(omega, t):
    for a in truncate_before(omega, t):
        assert a.t < t


def test_count_examples():
    assert count(empty_configuration(1.0), Window(0.0, 1.0)) == 0
    omega = make_configuration([Atom(0.2, 0.1), Atom(0.7, 0.9)], T=1.0)
    assert count(omega, Window(0.0, 1.0)) == 2
    assert count(omega, Window(0.5, 1.0, x_values=frozenset([0.9]))) == 1


@settings(max_examples=60)
@given(configurations, st.floats(0.05, 0.95))
def test_count_additive_over_disjoint_windows(omega, split):
    left = Window(0.0, 1.0, 0.0, split)
    right = Window(0.0, 1.0, math.nextafter(split, 2.0), 1.0)
    full = Window(0.0, 1.0, 0.0, 1.0)
    assert count(omega, left) + count(omega, right) == count(omega, full)


def test_window_intersections():
    a = Window(0.0, 1.0, 0.0, 0.5)
    b = Window(0.5, 2.0, 0.3, 0.8)
    ab = a.intersect(b)
    assert (ab.t_lo, ab.t_hi, ab.x_lo, ab.x_hi) == (0.5, 1.0, 0.3, 0.5)
    assert a.intersect(Window(0.0, 1.0, 0.9, 1.0)) is None
    vals = Window(0.0, 1.0, x_values=frozenset([0.1, 0.7]))
    cut = vals.intersect(a)
    assert cut.x_values == frozenset([0.1])


def test_json_round_trip():
    omega = make_configuration([Atom(0.2, 0.1), Atom(0.7, 0.9)], T=1.0)
    again = Configuration.from_json(omega.to_json())
    assert again == omega
    assert '"T"' in omega.to_json() and '"atoms"' in omega.to_json()
