"""Random test inputs with known answers.

``random_manifold_data`` produces geodesic tables for exercising the trace
sides at scale; ``planted_instance`` produces a synthetic Dirac spectrum with
one moving branch whose zero crossings are known in closed form, together
with that planted truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectrum import Atom, GeodesicTable, ManifoldData, SyntheticSpectrum

TWO_PI = 2.0 * math.pi


def random_manifold_data(n: int, m: int = 1, seed: int = 0, R: float = 8.0, volume: float = 3.0,
                         max_free: int = 4, symmetric: bool = False, name: str = "random") -> ManifoldData:
    """``n`` random geodesic records with lengths in ``[0.5, R]``.

    With ``symmetric`` each record is accompanied by its inverse (negated
    homology class, same complex length), as for a genuine length spectrum.
    """
    rng = np.random.default_rng(seed)
    half = n // 2 if symmetric else n
    l0 = rng.uniform(0.5, R, half)
    hol = rng.uniform(0.0, TWO_PI, half)
    spin = np.mod(hol / 2 + math.pi * rng.integers(0, 2, half), TWO_PI)
    free = rng.integers(-max_free, max_free + 1, half)
    tors = rng.integers(0, m, half)
    if symmetric:
        l0, hol, spin = (np.concatenate([x, x]) for x in (l0, hol, spin))
        free = np.concatenate([free, -free])
        tors = np.concatenate([tors, (-tors) % m])
    table = GeodesicTable.from_arrays(l0, l0, hol, spin, free, tors)
    return ManifoldData(name, volume, 1, m, R, table, checksum=f"{name}-{n}-{m}-{seed}")


@dataclass(frozen=True)
class PlantedTruth:
    """Zero crossings of the moving branch ``s(tau) = c + A sin(2 pi q (tau - phi))``."""

    amplitude: float
    offset: float
    harmonic: int
    phase: float

    def value(self, tau):
        return self.offset + self.amplitude * np.sin(TWO_PI * self.harmonic * (np.asarray(tau) - self.phase))

    def deriv(self, tau):
        w = TWO_PI * self.harmonic
        return self.amplitude * w * np.cos(w * (np.asarray(tau) - self.phase))

    def crossings(self) -> list[tuple[float, int]]:
        """``(tau, sign of s')`` for each zero in ``[0, 1)``, sorted by tau."""
        if self.amplitude == 0 or abs(self.offset) >= abs(self.amplitude):
            return []
        x = math.asin(-self.offset / self.amplitude)
        out = []
        for root in (x, math.pi - x):
            for j in range(self.harmonic):
                tau = (self.phase + root / (TWO_PI * self.harmonic) + j / self.harmonic) % 1.0
                out.append((tau, int(np.sign(self.deriv(tau)))))
        return sorted(out)

    @property
    def signs(self) -> tuple:
        return tuple(s for _, s in self.crossings())


def background(rng, start: float = 2.7, count: int = 40, spacing: float = 0.45) -> list[Atom]:
    """Constant atoms ``+-s`` with ``s`` from ``start`` upward, random multiplicities 1 or 2."""
    out = []
    s = start
    for _ in range(count):
        mult = int(rng.integers(1, 3))
        out += [Atom.constant(s, mult), Atom.constant(-s, mult)]
        s += spacing * (0.8 + 0.4 * rng.random())
    return out


def planted_instance(seed: int, crossings: int) -> tuple[SyntheticSpectrum, PlantedTruth]:
    """Synthetic spectrum with 0, 2 or 4 planted zero crossings (0 may still have a near miss)."""
    rng = np.random.default_rng(seed)
    bg = background(rng, start=2.6 + 0.3 * rng.random())
    A = 0.6 + 0.6 * rng.random()
    phase = rng.random()
    if crossings == 0:
        truth = PlantedTruth(0.0, 0.0, 1, 0.0)
        moving = []
        if rng.random() < 0.5:
            # a branch that stays away from zero
            truth = PlantedTruth(0.3 * A, 1.0 + 0.3 * rng.random(), 1, phase)
    elif crossings in (2, 4):
        q = crossings // 2
        truth = PlantedTruth(A, A * (0.6 * rng.random() - 0.3), q, phase)
    else:
        raise ValueError("planted instances have 0, 2 or 4 crossings")
    if truth.amplitude:
        w = TWO_PI * truth.harmonic * truth.phase
        sin = [0.0] * truth.harmonic
        cos = [0.0] * truth.harmonic
        # A sin(2 pi q tau - w) = A cos(w) sin(2 pi q tau) - A sin(w) cos(2 pi q tau)
        sin[-1] = truth.amplitude * math.cos(w)
        cos[-1] = -truth.amplitude * math.sin(w)
        moving = [Atom(1, (truth.offset,), tuple(cos), tuple(sin))]
    bound = max([a.deriv_sup() for a in moving] + [1.0])
    sp = SyntheticSpectrum(tuple(bg + moving), derivative_bound=bound, name=f"planted-{seed}-{crossings}")
    return sp, truth
