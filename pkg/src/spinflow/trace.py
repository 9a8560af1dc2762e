"""Trace-formula geometric sides as elements of the group ring of H_1.

A :class:`FormalSide` stores one real coefficient per homology class
``(free, torsion)`` plus a tau-independent volume term.  Evaluating it at a
flat connection ``tau`` in a torsion spin^c structure with character ``k``
applies the character ``(n, t) -> exp(2 pi i (tau n + k t / m))``; even, odd
and coexact kinds take the cosine of that angle, the derivative kind takes
``-2 pi sin``.  A whole tau grid is evaluated in one pass, class by class,
with compensated summation so that grid and pointwise calls agree bit for bit.

:class:`OracleSide` offers the same interface for a planted
:class:`~spinflow.spectrum.SyntheticSpectrum`, computing each side as its
spectral side.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .spectrum import ManifoldData, SyntheticSpectrum
from .summation import EPS, RowAccumulator
from .testfn import profile_sup

TWO_PI = 2.0 * math.pi

KINDS = ("coexact", "dirac_even", "dirac_odd", "dirac_odd_derivative")
_EVEN_KINDS = ("coexact", "dirac_even")

# per-term relative rounding allowance for weight * angle * H products
_TERM_ULPS = 16.0


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class SpincStructure:
    """Torsion spin^c structure, labelled by its torsion character ``k mod m``."""

    k: int
    m: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("torsion order must be >= 1")
        object.__setattr__(self, "k", self.k % self.m)

    @property
    def conjugate(self) -> "SpincStructure":
        return SpincStructure((-self.k) % self.m, self.m)

    @property
    def is_self_conjugate(self) -> bool:
        return (2 * self.k) % self.m == 0


def _check_kind(kind: str, parity: str) -> None:
    if kind not in KINDS:
        raise TraceError(f"unknown kind {kind!r}")
    want = "even" if kind in _EVEN_KINDS else "odd"
    if parity != want:
        raise TraceError(f"{kind} side needs an {want} test function, got {parity}")


def angle_turns(tau, free, torsion, k: int, m: int):
    """Character angle in turns: ``tau * free + k * torsion / m``."""
    return np.multiply.outer(np.asarray(tau, dtype=float), free) + ((k * torsion) % m) / m


@dataclass(frozen=True)
class FormalSide:
    """Geometric side with coefficients in the group ring ``R[Z + Z/m]``."""

    kind: str
    free: np.ndarray
    torsion: np.ndarray
    coefficients: np.ndarray
    abs_mass: np.ndarray
    volume_term: float
    torsion_order: int
    tf_id: str
    cutoff: float
    checksum: str = ""
    b1: int = 1
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def support(self) -> list[tuple[int, int]]:
        return list(zip(self.free.tolist(), self.torsion.tolist()))

    def coefficient(self, free: int, torsion: int = 0) -> float:
        hit = (self.free == free) & (self.torsion == torsion % self.torsion_order)
        return float(self.coefficients[hit][0]) if np.any(hit) else 0.0

    # -- evaluation ---------------------------------------------------------
    def evaluate_grid(self, taus, s: Union[SpincStructure, int] = 0) -> np.ndarray:
        k = s.k if isinstance(s, SpincStructure) else int(s)
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        acc = RowAccumulator(taus.shape)
        acc.add(np.full(taus.shape, self.volume_term))
        deriv = self.kind == "dirac_odd_derivative"
        m = self.torsion_order
        for n, t, c in zip(self.free.tolist(), self.torsion.tolist(), self.coefficients.tolist()):
            ang = TWO_PI * (taus * n + ((k * t) % m) / m)
            if deriv:
                acc.add(-TWO_PI * c * np.sin(ang))
            else:
                acc.add(c * np.cos(ang))
        return acc.total

    def evaluate(self, tau: float, s: Union[SpincStructure, int] = 0) -> float:
        return float(self.evaluate_grid([tau], s)[0])

    @property
    def error_budget(self) -> float:
        """Bound on the floating-point error of one evaluation."""
        scale = TWO_PI if self.kind == "dirac_odd_derivative" else 1.0
        n = len(self) + 2
        mass = scale * float(np.sum(self.abs_mass))
        return (_TERM_ULPS + 2.0 * n * EPS) * EPS * mass + 4.0 * EPS * abs(self.volume_term)

    def tau_lipschitz(self) -> float:
        """Bound on ``|d/dtau|`` of the evaluated side."""
        base = TWO_PI * float(np.sum(np.abs(self.coefficients * self.free)))
        return TWO_PI * base if self.kind == "dirac_odd_derivative" else base

    def max_abs_free(self) -> int:
        return int(np.max(np.abs(self.free))) if len(self) else 0

    # -- serialisation ------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "tf": self.tf_id,
            "cutoff_R": repr(self.cutoff),
            "checksum": self.checksum,
            "torsion_order": self.torsion_order,
            "b1": self.b1,
            "volume_term": repr(self.volume_term),
            "classes": [
                {"free": int(n), "torsion": int(t), "coef": repr(float(c)), "abs": repr(float(a))}
                for n, t, c, a in zip(self.free, self.torsion, self.coefficients, self.abs_mass)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, d: dict) -> "FormalSide":
        rows = d["classes"]
        return cls(
            kind=d["kind"],
            free=np.array([r["free"] for r in rows], dtype=np.int64),
            torsion=np.array([r["torsion"] for r in rows], dtype=np.int64),
            coefficients=np.array([float(r["coef"]) for r in rows]),
            abs_mass=np.array([float(r["abs"]) for r in rows]),
            volume_term=float(d["volume_term"]),
            torsion_order=int(d["torsion_order"]),
            tf_id=d["tf"],
            cutoff=float(d["cutoff_R"]),
            checksum=d.get("checksum", ""),
            b1=int(d.get("b1", 1)),
        )


def volume_term(kind: str, volume: float, tf) -> float:
    if kind == "dirac_even":
        return volume / TWO_PI * (0.25 * float(tf.value(0.0)) - tf.second_deriv_at_zero())
    if kind == "coexact":
        return volume / TWO_PI * (float(tf.value(0.0)) - tf.second_deriv_at_zero())
    return 0.0


def angular_factor(kind: str, holonomy, spin_holonomy, free):
    if kind == "coexact":
        return np.cos(holonomy)
    if kind == "dirac_even":
        return np.cos(spin_holonomy)
    if kind == "dirac_odd":
        return np.sin(spin_holonomy)
    return np.sin(spin_holonomy) * free


def build_formal_side(data: ManifoldData, tf, kind: str) -> FormalSide:
    """Group-ring geometric side of ``kind`` for test function ``tf``."""
    _check_kind(kind, tf.parity)
    if tf.support_radius > data.cutoff * (1 + 1e-12):
        raise TraceError(
            f"test function support {tf.support_radius:g} exceeds the cutoff R = {data.cutoff:g}"
        )
    g = data.geodesics
    terms = g.weights() * angular_factor(kind, g.holonomy, g.spin_holonomy, g.free_class) * tf.value(g.length)
    keep = terms != 0.0
    free = g.free_class[keep]
    tors = g.torsion_class[keep]
    terms = terms[keep]
    if terms.size:
        keys = np.stack([free, tors], axis=1)
        classes, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.ravel()
        order = np.argsort(inv, kind="stable")
        bounds = np.searchsorted(inv[order], np.arange(len(classes) + 1))
        st = terms[order]
        coefs = np.array([math.fsum(st[a:b]) for a, b in zip(bounds[:-1], bounds[1:])])
        mass = np.array([math.fsum(np.abs(st[a:b])) for a, b in zip(bounds[:-1], bounds[1:])])
        nz = coefs != 0.0
        classes, coefs, mass = classes[nz], coefs[nz], mass[nz]
    else:
        classes = np.zeros((0, 2), dtype=np.int64)
        coefs = mass = np.zeros(0)
    return FormalSide(
        kind=kind,
        free=classes[:, 0].astype(np.int64),
        torsion=classes[:, 1].astype(np.int64),
        coefficients=coefs,
        abs_mass=mass,
        volume_term=volume_term(kind, data.volume, tf),
        torsion_order=data.torsion_order,
        tf_id=tf.id,
        cutoff=data.cutoff,
        checksum=data.checksum,
        b1=data.b1,
    )


def evaluate(side, tau: float, s=0) -> float:
    return side.evaluate(tau, s)


def evaluate_grid(side, grid, s=0) -> np.ndarray:
    return side.evaluate_grid(grid, s)


def derivative_consistency(side_odd, side_deriv, tau: float, s=0, h: float = 1e-5) -> float:
    """``|central difference of the odd side - derivative side|`` at ``tau``."""
    if side_odd.kind != "dirac_odd" or side_deriv.kind != "dirac_odd_derivative":
        raise TraceError("need a dirac_odd side and a dirac_odd_derivative side")
    if side_odd.tf_id != side_deriv.tf_id or side_odd.checksum != side_deriv.checksum:
        raise TraceError("sides come from different test functions or data")
    vals = side_odd.evaluate_grid([tau - h, tau + h], s)
    fd = (vals[1] - vals[0]) / (2.0 * h)
    return abs(fd - side_deriv.evaluate(tau, s))


# --------------------------------------------------------------------------
# oracle sides for planted spectra
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleSide:
    """Spectral side of a planted spectrum, standing in for the geometric side."""

    spectrum: SyntheticSpectrum
    tf: object
    kind: str
    _const_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        _check_kind(self.kind, self.tf.parity)

    @property
    def tf_id(self) -> str:
        return self.tf.id

    @property
    def checksum(self) -> str:
        return self.spectrum.checksum

    @property
    def cutoff(self) -> float:
        return math.inf

    def _term(self, vals, ders, mult):
        if self.kind == "dirac_odd_derivative":
            return 0.5 * mult[:, None] * self.tf.profile_deriv(vals, 1) * ders
        return 0.5 * mult[:, None] * self.tf.profile(vals)

    def _terms(self, taus, k):
        atoms = self.spectrum.atoms_for(k)
        const = np.array([a.is_constant for a in atoms], dtype=bool)
        key = k % self.spectrum.torsion_order
        if key not in self._const_cache:
            # tau-independent atoms: one evaluation, reused for every grid
            v, d, m = self.spectrum.values([0.0], k)
            self._const_cache[key] = self._term(v[const], d[const], m[const])[:, 0]
        out = np.empty((len(atoms), len(taus)))
        out[const] = self._const_cache[key][:, None]
        if not const.all():
            moving = SyntheticSpectrum(tuple(a for a, c in zip(atoms, const) if not c),
                                       self.spectrum.derivative_bound)
            v, d, m = moving.values(taus, 0)
            out[~const] = self._term(v, d, m)
        return out

    def evaluate_grid(self, taus, s: Union[SpincStructure, int] = 0) -> np.ndarray:
        k = s.k if isinstance(s, SpincStructure) else int(s)
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        acc = RowAccumulator(taus.shape)
        if self.kind == "coexact":
            acc.add(np.full(taus.shape, 0.5 * (self.spectrum.b1 - 1) * float(self.tf.profile(0.0))))
        for row in self._terms(taus, k):
            acc.add(row)
        return acc.total

    def evaluate(self, tau: float, s=0) -> float:
        return float(self.evaluate_grid([tau], s)[0])

    @property
    def error_budget(self) -> float:
        # profile values are bounded by their sup; atoms are few
        lists = [self.spectrum.atoms, *self.spectrum.overrides.values()]
        n = max(sum(a.mult for a in atoms) for atoms in lists) + 2
        return 64.0 * EPS * n

    def tau_lipschitz(self) -> float:
        best = 0.0
        for atoms in [self.spectrum.atoms, *self.spectrum.overrides.values()]:
            total = 0.0
            for a in atoms:
                d1 = a.deriv_sup()
                if self.kind == "dirac_odd_derivative":
                    d2 = a.deriv2_sup()
                    b = profile_sup(self.tf, 2) * d1**2 + profile_sup(self.tf, 1) * d2
                else:
                    b = profile_sup(self.tf, 1) * d1
                total += 0.5 * a.mult * b
            best = max(best, total)
        return best


_CACHE_DIR: Optional[Path] = None


def set_side_cache(directory) -> None:
    """Store built formal sides under ``directory`` keyed by (checksum, tf id, kind); ``None`` disables."""
    global _CACHE_DIR
    _CACHE_DIR = None if directory is None else Path(directory)
    if _CACHE_DIR is not None:
        _CACHE_DIR.mkdir(parents=True, exist_ok=True)


def _cache_path(data: ManifoldData, tf, kind: str) -> Optional[Path]:
    if _CACHE_DIR is None or not data.checksum:
        return None
    safe = re.sub(r"[^A-Za-z0-9_.-]", "_", f"{data.checksum[:16]}_{tf.id}_{kind}")
    return _CACHE_DIR / f"{safe}.json"


def make_side(source, tf, kind: str):
    """Formal side for manifold data, oracle side for a planted spectrum."""
    if isinstance(source, SyntheticSpectrum):
        return OracleSide(source, tf, kind)
    path = _cache_path(source, tf, kind)
    if path is not None and path.exists():
        side = FormalSide.from_json(json.loads(path.read_text()))
        if side.checksum == source.checksum and side.tf_id == tf.id and side.kind == kind:
            return side
    side = build_formal_side(source, tf, kind)
    if path is not None:
        path.write_text(side.dumps())
    return side
