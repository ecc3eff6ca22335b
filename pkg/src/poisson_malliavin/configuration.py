"""Finite simple point configurations on [0, T] x X and their pathwise operators.

A configuration is an immutable, sorted, duplicate-free tuple of atoms
(t, x).  All operators return new values; nothing mutates, so composed
operators (truncation inside a difference, etc.) stay correct.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import AtomOutOfWindow, DuplicateAtom

__all__ = [
    "Atom",
    "Window",
    "Configuration",
    "make_configuration",
    "empty_configuration",
    "add_points",
    "truncate_before",
    "count",
    "project",
]


@dataclass(frozen=True, order=True, slots=True)
class Atom:
    """A time-marked point (t, x), ordered by time with ties broken by mark."""

    t: float
    x: float


@dataclass(frozen=True)
class Window:
    """Product window: closed time interval [t_lo, t_hi] times a mark set.

    The mark set is the closed interval [x_lo, x_hi] unless ``x_values``
    is given, in which case it is that explicit finite set of mark values
    (the natural choice for discrete mark spaces).
    """

    t_lo: float
    t_hi: float
    x_lo: float = -math.inf
    x_hi: float = math.inf
    x_values: frozenset | None = None

    def __post_init__(self) -> None:
        if self.t_hi < self.t_lo:
            raise ValueError(f"empty time interval [{self.t_lo}, {self.t_hi}]")
        if self.x_values is None and self.x_hi < self.x_lo:
            raise ValueError(f"empty mark interval [{self.x_lo}, {self.x_hi}]")

    def contains(self, atom: Atom) -> bool:
        if not self.t_lo <= atom.t <= self.t_hi:
            return False
        if self.x_values is not None:
            return atom.x in self.x_values
        return self.x_lo <= atom.x <= self.x_hi

    def intersect(self, other: "Window") -> "Window | None":
        """Intersection window, or None when the intersection is empty."""
        t_lo, t_hi = max(self.t_lo, other.t_lo), min(self.t_hi, other.t_hi)
        if t_hi < t_lo:
            return None
        if self.x_values is not None or other.x_values is not None:
            if self.x_values is not None and other.x_values is not None:
                values = self.x_values & other.x_values
            elif self.x_values is not None:
                values = frozenset(v for v in self.x_values if other.x_lo <= v <= other.x_hi)
            else:
                values = frozenset(v for v in other.x_values if self.x_lo <= v <= self.x_hi)
            if not values:
                return None
            return Window(t_lo, t_hi, x_values=values)
        x_lo, x_hi = max(self.x_lo, other.x_lo), min(self.x_hi, other.x_hi)
        if x_hi < x_lo:
            return None
        return Window(t_lo, t_hi, x_lo, x_hi)


@dataclass(frozen=True, slots=True)
class Configuration:
    """Sorted, simple, finite set of atoms with horizon T.

    Instances are assumed sorted and duplicate-free; use
    :func:`make_configuration` to build one from untrusted input.
    """

    atoms: tuple[Atom, ...]
    T: float

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def to_json(self) -> str:
        return json.dumps({"T": self.T, "atoms": [[a.t, a.x] for a in self.atoms]})

    @staticmethod
    def from_json(text: str) -> "Configuration":
        data = json.loads(text)
        return make_configuration([Atom(float(t), float(x)) for t, x in data["atoms"]], float(data["T"]))


def _check_in_window(atom: Atom, T: float) -> None:
    if not 0.0 <= atom.t <= T:
        raise AtomOutOfWindow(f"atom time {atom.t} outside [0, {T}]")


def make_configuration(atoms: Iterable[Atom], T: float) -> Configuration:
    """Checked constructor: sorts atoms and rejects out-of-window or duplicate ones."""
    ordered = sorted(atoms)
    for a in ordered:
        _check_in_window(a, T)
    for prev, cur in zip(ordered, ordered[1:]):
        if prev == cur:
            raise DuplicateAtom(f"atom {cur} appears twice")
    return Configuration(tuple(ordered), T)


def empty_configuration(T: float) -> Configuration:
    return Configuration((), T)


def add_points(omega: Configuration, new_atoms: Iterable[Atom]) -> Configuration:
    """Insert atoms into a configuration, skipping any that are already present.

    Returns a new configuration; ``omega`` is left untouched.
    """
    present = set(omega.atoms)
    merged = list(omega.atoms)
    for a in new_atoms:
        _check_in_window(a, omega.T)
        if a not in present:
            merged.append(a)
            present.add(a)
    merged.sort()
    return Configuration(tuple(merged), omega.T)


def truncate_before(omega: Configuration, t: float) -> Configuration:
    """Keep only atoms with time strictly less than t (the strict past).

    t = 0 always yields the empty configuration.  The strict inequality is
    load-bearing: an atom sitting exactly at t belongs to the future.
    """
    if not 0.0 <= t <= omega.T:
        raise AtomOutOfWindow(f"truncation time {t} outside [0, {omega.T}]")
    return Configuration(tuple(a for a in omega.atoms if a.t < t), omega.T)


def count(omega: Configuration, window: Window) -> int:
    """Number of atoms inside the window: the evaluation N(A x B)(omega)."""
    return sum(1 for a in omega.atoms if window.contains(a))


def project(omega: Configuration, window: Window) -> Configuration:
    """Restriction of the configuration to atoms inside the window."""
    return Configuration(tuple(a for a in omega.atoms if window.contains(a)), omega.T)
