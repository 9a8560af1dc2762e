"""Spin-refined length spectra: records, validation, ingestion, synthetic oracles.

A spectrum file is one JSON document::

    {"name": "m357", "volume": "3.1663...", "b1": 1, "torsion_order": 7,
     "cutoff_R": "7.0", "c_y_upper": "3.5151",
     "geodesics": [{"l": "...", "l0": "...", "theta": "...", "spin_theta": "...",
                    "free_class": 1, "torsion_class": 3}, ...]}

Reals are decimal strings.  Instead of (or as well as) ``geodesics`` a file
may carry ``primes`` with the same record layout; multiples up to the cutoff
are generated from them, and explicit ``geodesics`` win when both are present.
A sidecar ``<file>.sha256`` holding the hex SHA-256 of the document is
required so that certificates can name the exact data they used.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
_REL_TOL = 1e-9


class SpectrumError(ValueError):
    """Raised for malformed or inconsistent spectrum data."""


def _angle_diff(a, b):
    """Distance between angles on R / 2 pi Z."""
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class GeodesicRecord:
    """One closed geodesic with its spin holonomy and homology class."""

    length: float
    prime_length: float
    holonomy: float
    spin_holonomy: float
    free_class: int
    torsion_class: int = 0

    @property
    def complex_length(self) -> complex:
        return complex(self.length, self.holonomy)

    @property
    def multiplicity(self) -> int:
        return int(round(self.length / self.prime_length))

    def check(self) -> None:
        if not (self.length > 0 and self.prime_length > 0):
            raise SpectrumError("lengths must be positive")
        if self.prime_length > self.length * (1 + _REL_TOL):
            raise SpectrumError("prime length exceeds length")
        k = self.length / self.prime_length
        if abs(k - round(k)) > _REL_TOL * max(1.0, k):
            raise SpectrumError(f"length/prime_length = {k!r} is not an integer")
        for ang in (self.holonomy, self.spin_holonomy):
            if not 0.0 <= ang < TWO_PI:
                raise SpectrumError(f"angle {ang!r} outside [0, 2pi)")
        if _angle_diff(self.holonomy, 2.0 * self.spin_holonomy) > _REL_TOL:
            raise SpectrumError("holonomy is not twice the spin holonomy mod 2pi")
        if weight_denominator(self.length, self.holonomy) <= 0:
            raise SpectrumError("degenerate complex length")


def weight_denominator(length, holonomy):
    """``|1 - e^{Cl}| |1 - e^{-Cl}| = 4 (sinh^2(l/2) + sin^2(theta/2))``."""
    return 4.0 * (np.sinh(np.asarray(length) / 2.0) ** 2 + np.sin(np.asarray(holonomy) / 2.0) ** 2)


def weight(g: GeodesicRecord) -> float:
    """Character-independent factor ``l(g0) / (|1 - e^{Cl}| |1 - e^{-Cl}|)``."""
    return float(g.prime_length / weight_denominator(g.length, g.holonomy))


@dataclass(frozen=True)
class GeodesicTable:
    """Columnar storage for many geodesics, kept in canonical order."""

    length: np.ndarray
    prime_length: np.ndarray
    holonomy: np.ndarray
    spin_holonomy: np.ndarray
    free_class: np.ndarray
    torsion_class: np.ndarray

    @classmethod
    def from_records(cls, records: Iterable[GeodesicRecord]) -> "GeodesicTable":
        recs = list(records)
        return cls.from_arrays(
            [r.length for r in recs],
            [r.prime_length for r in recs],
            [r.holonomy for r in recs],
            [r.spin_holonomy for r in recs],
            [r.free_class for r in recs],
            [r.torsion_class for r in recs],
        )

    @classmethod
    def from_arrays(cls, length, prime_length, holonomy, spin_holonomy, free_class, torsion_class):
        cols = [
            np.asarray(length, dtype=float),
            np.asarray(prime_length, dtype=float),
            np.asarray(holonomy, dtype=float),
            np.asarray(spin_holonomy, dtype=float),
            np.asarray(free_class, dtype=np.int64),
            np.asarray(torsion_class, dtype=np.int64),
        ]
        # canonical order: by length, then the remaining fields
        order = np.lexsort(tuple(reversed(cols)))
        return cls(*[c[order] for c in cols])

    def __len__(self) -> int:
        return int(self.length.shape[0])

    def __getitem__(self, i: int) -> GeodesicRecord:
        return GeodesicRecord(
            float(self.length[i]),
            float(self.prime_length[i]),
            float(self.holonomy[i]),
            float(self.spin_holonomy[i]),
            int(self.free_class[i]),
            int(self.torsion_class[i]),
        )

    def records(self) -> list[GeodesicRecord]:
        return [self[i] for i in range(len(self))]

    def weights(self) -> np.ndarray:
        return self.prime_length / weight_denominator(self.length, self.holonomy)

    def validate(self, torsion_order: int, cutoff: Optional[float] = None) -> None:
        """Vectorised version of :meth:`GeodesicRecord.check`; names the bad index."""
        n = len(self)
        if n == 0:
            return
        bad = ~((self.length > 0) & (self.prime_length > 0))
        bad |= self.prime_length > self.length * (1 + _REL_TOL)
        k = self.length / np.where(self.prime_length > 0, self.prime_length, 1.0)
        bad |= np.abs(k - np.round(k)) > _REL_TOL * np.maximum(1.0, k)
        for ang in (self.holonomy, self.spin_holonomy):
            bad |= ~((ang >= 0.0) & (ang < TWO_PI))
        bad |= _angle_diff(self.holonomy, 2.0 * self.spin_holonomy) > _REL_TOL
        bad |= (self.torsion_class < 0) | (self.torsion_class >= torsion_order)
        if cutoff is not None:
            bad |= self.length > cutoff * (1 + _REL_TOL)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            rec = self[i]
            try:
                rec.check()
            except SpectrumError as exc:
                raise SpectrumError(f"record {i}: {exc}") from None
            raise SpectrumError(f"record {i}: class or cutoff violation ({rec})")
        keys = np.stack(
            [self.length, self.prime_length, self.holonomy, self.spin_holonomy,
             self.free_class.astype(float), self.torsion_class.astype(float)], axis=1
        )
        same = np.all(keys[1:] == keys[:-1], axis=1)
        if np.any(same):
            i = int(np.flatnonzero(same)[0]) + 1
            raise SpectrumError(f"record {i}: duplicate geodesic record")


@dataclass(frozen=True)
class ManifoldData:
    """Validated input for the certification pipeline."""

    name: str
    volume: float
    b1: int
    torsion_order: int
    cutoff: float
    geodesics: GeodesicTable
    c_y_upper: Optional[float] = None
    checksum: str = ""

    def __post_init__(self):
        if self.volume <= 0:
            raise SpectrumError("volume must be positive")
        if self.torsion_order < 1:
            raise SpectrumError("torsion order must be >= 1")
        if self.cutoff <= 0:
            raise SpectrumError("cutoff must be positive")

    def require_b1_one(self) -> None:
        if self.b1 != 1:
            raise SpectrumError(f"certification needs b1 = 1, got b1 = {self.b1}")

    @property
    def systole(self) -> float:
        return float(self.geodesics.length.min()) if len(self.geodesics) else math.inf


def expand_primes(primes: Sequence[GeodesicRecord], R: float, torsion_order: int = 1) -> list[GeodesicRecord]:
    """All multiples ``k * g`` of the prime records with ``k * l0 <= R``."""
    out = []
    for i, g in enumerate(primes):
        if abs(g.length - g.prime_length) > _REL_TOL * g.length:
            raise SpectrumError(f"record {i} is not prime (l = {g.length}, l0 = {g.prime_length})")
        kmax = int(math.floor(R / g.prime_length * (1 + 1e-12)))
        for k in range(1, kmax + 1):
            out.append(
                GeodesicRecord(
                    length=k * g.prime_length,
                    prime_length=g.prime_length,
                    holonomy=math.fmod(k * g.holonomy, TWO_PI),
                    spin_holonomy=math.fmod(k * g.spin_holonomy, TWO_PI),
                    free_class=k * g.free_class,
                    torsion_class=(k * g.torsion_class) % torsion_order,
                )
            )
    return out


# --------------------------------------------------------------------------
# file I/O
# --------------------------------------------------------------------------

def file_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _real(doc: dict, key: str, where: str = "") -> float:
    if key not in doc:
        raise SpectrumError(f"{where}missing field {key!r}")
    v = doc[key]
    if not isinstance(v, str):
        raise SpectrumError(f"{where}field {key!r} must be a decimal string")
    try:
        return float(v)
    except ValueError:
        raise SpectrumError(f"{where}field {key!r} is not a decimal: {v!r}") from None


def _int(doc: dict, key: str, where: str = "") -> int:
    if key not in doc:
        raise SpectrumError(f"{where}missing field {key!r}")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, str)):
        raise SpectrumError(f"{where}field {key!r} must be an integer")
    try:
        return int(v)
    except ValueError:
        raise SpectrumError(f"{where}field {key!r} is not an integer: {v!r}") from None


def _records(rows, m: int, label: str) -> list[GeodesicRecord]:
    if not isinstance(rows, list):
        raise SpectrumError(f"{label} must be a list")
    out = []
    for i, row in enumerate(rows):
        where = f"{label}[{i}]: "
        if not isinstance(row, dict):
            raise SpectrumError(f"{where}not an object")
        rec = GeodesicRecord(
            length=_real(row, "l", where),
            prime_length=_real(row, "l0", where),
            holonomy=_real(row, "theta", where),
            spin_holonomy=_real(row, "spin_theta", where),
            free_class=_int(row, "free_class", where),
            torsion_class=_int(row, "torsion_class", where) % m,
        )
        try:
            rec.check()
        except SpectrumError as exc:
            raise SpectrumError(f"record {i} of {label}: {exc}") from None
        out.append(rec)
    return out


def parse_spectrum(doc: dict, checksum: str = "") -> ManifoldData:
    if not isinstance(doc, dict):
        raise SpectrumError("spectrum document must be a JSON object")
    name = doc.get("name")
    if not isinstance(name, str):
        raise SpectrumError("missing field 'name'")
    m = _int(doc, "torsion_order")
    if m < 1:
        raise SpectrumError("torsion_order must be >= 1")
    inv = doc.get("torsion_invariants")
    if inv is not None and len([d for d in inv if int(d) > 1]) > 1:
        raise SpectrumError(f"non-cyclic torsion {inv} is unsupported")
    R = _real(doc, "cutoff_R")
    cy = _real(doc, "c_y_upper") if "c_y_upper" in doc else None
    if "geodesics" in doc:
        recs = _records(doc["geodesics"], m, "geodesics")
    elif "primes" in doc:
        recs = expand_primes(_records(doc["primes"], m, "primes"), R, m)
    else:
        raise SpectrumError("missing field 'geodesics'")
    table = GeodesicTable.from_records(recs)
    table.validate(m, R)
    return ManifoldData(
        name=name,
        volume=_real(doc, "volume"),
        b1=_int(doc, "b1"),
        torsion_order=m,
        cutoff=R,
        geodesics=table,
        c_y_upper=cy,
        checksum=checksum,
    )


def load_spectrum(path, require_checksum: bool = True) -> ManifoldData:
    """Read, checksum-verify and validate a spectrum file."""
    path = Path(path)
    raw = path.read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    side = path.with_name(path.name + ".sha256")
    if side.exists():
        recorded = side.read_text().split()[0].strip().lower() if side.read_text().strip() else ""
        if recorded != digest:
            raise SpectrumError(f"checksum mismatch for {path.name}")
    elif require_checksum:
        raise SpectrumError(f"missing checksum sidecar {side.name}")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SpectrumError(f"not valid JSON: {exc}") from None
    return parse_spectrum(doc, checksum=digest)


def _fmt(x: float) -> str:
    return repr(float(x))


def spectrum_document(data: ManifoldData) -> dict:
    g = data.geodesics
    doc = {
        "name": data.name,
        "volume": _fmt(data.volume),
        "b1": data.b1,
        "torsion_order": data.torsion_order,
        "cutoff_R": _fmt(data.cutoff),
        "geodesics": [
            {
                "l": _fmt(g.length[i]),
                "l0": _fmt(g.prime_length[i]),
                "theta": _fmt(g.holonomy[i]),
                "spin_theta": _fmt(g.spin_holonomy[i]),
                "free_class": int(g.free_class[i]),
                "torsion_class": int(g.torsion_class[i]),
            }
            for i in range(len(g))
        ],
    }
    if data.c_y_upper is not None:
        doc["c_y_upper"] = _fmt(data.c_y_upper)
    return doc


def write_spectrum(data: ManifoldData, path) -> str:
    """Write ``data`` plus its checksum sidecar; returns the checksum."""
    path = Path(path)
    raw = json.dumps(spectrum_document(data), indent=1).encode()
    path.write_bytes(raw)
    digest = hashlib.sha256(raw).hexdigest()
    path.with_name(path.name + ".sha256").write_text(f"{digest}  {path.name}\n")
    return digest


# --------------------------------------------------------------------------
# synthetic spectra (oracle mode)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    """Eigenvalue branch ``s(tau) = sum_p poly[p] tau^p + sum_q cos/sin(2 pi q tau)``."""

    mult: int = 1
    poly: tuple = (0.0,)
    cos: tuple = ()
    sin: tuple = ()

    def __post_init__(self):
        if self.mult < 1:
            raise SpectrumError("atom multiplicity must be positive")

    def value(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        out = np.zeros_like(tau)
        for p, a in enumerate(self.poly):
            out = out + a * tau**p
        for q, b in enumerate(self.cos, start=1):
            out = out + b * np.cos(TWO_PI * q * tau)
        for q, c in enumerate(self.sin, start=1):
            out = out + c * np.sin(TWO_PI * q * tau)
        return out

    def deriv(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        out = np.zeros_like(tau)
        for p, a in enumerate(self.poly):
            if p:
                out = out + p * a * tau ** (p - 1)
        for q, b in enumerate(self.cos, start=1):
            out = out - TWO_PI * q * b * np.sin(TWO_PI * q * tau)
        for q, c in enumerate(self.sin, start=1):
            out = out + TWO_PI * q * c * np.cos(TWO_PI * q * tau)
        return out

    def deriv_sup(self) -> float:
        """Crude bound on ``|s'|`` over ``[0, 1]``."""
        b = sum(p * abs(a) for p, a in enumerate(self.poly))
        return b + sum(TWO_PI * q * amp for q, amp in self._amplitudes())

    def _amplitudes(self):
        n = max(len(self.cos), len(self.sin))
        cs = list(self.cos) + [0.0] * (n - len(self.cos))
        sn = list(self.sin) + [0.0] * (n - len(self.sin))
        return [(q, math.hypot(c, s)) for q, (c, s) in enumerate(zip(cs, sn), start=1)]

    def deriv2_sup(self) -> float:
        """Crude bound on ``|s''|`` over ``[0, 1]``."""
        b = sum(p * (p - 1) * abs(a) for p, a in enumerate(self.poly))
        return b + sum((TWO_PI * q) ** 2 * amp for q, amp in self._amplitudes())

    @property
    def is_constant(self) -> bool:
        return not any(self.poly[1:]) and not any(self.cos) and not any(self.sin)

    @classmethod
    def constant(cls, s: float, mult: int = 1) -> "Atom":
        return cls(mult=mult, poly=(float(s),))

    def to_json(self) -> dict:
        return {"mult": self.mult, "poly": list(self.poly), "cos": list(self.cos), "sin": list(self.sin)}

    @classmethod
    def from_json(cls, d: dict) -> "Atom":
        return cls(
            mult=int(d.get("mult", 1)),
            poly=tuple(float(x) for x in d.get("poly", [0.0])),
            cos=tuple(float(x) for x in d.get("cos", [])),
            sin=tuple(float(x) for x in d.get("sin", [])),
        )


@dataclass(frozen=True)
class SyntheticSpectrum:
    """Planted Dirac (or coexact) spectrum; its geometric side is its spectral side.

    ``overrides`` maps torsion characters ``k`` to their own atom lists; the
    default ``atoms`` are used for every other character.
    """

    atoms: tuple
    derivative_bound: float
    torsion_order: int = 1
    b1: int = 1
    name: str = "synthetic"
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        for atoms in [self.atoms, *self.overrides.values()]:
            for a in atoms:
                if a.deriv_sup() > self.derivative_bound * (1 + 1e-12):
                    raise SpectrumError("atom derivative exceeds the declared bound")

    def atoms_for(self, k: int = 0) -> tuple:
        return tuple(self.overrides.get(k % self.torsion_order, self.atoms))

    def total_multiplicity(self, k: int = 0) -> int:
        return sum(a.mult for a in self.atoms_for(k))

    def values(self, taus, k: int = 0):
        """``(values, derivs, mults)`` with shape ``(atoms, len(taus))``."""
        atoms = self.atoms_for(k)
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        vals = np.array([a.value(taus) for a in atoms]).reshape(len(atoms), len(taus))
        ders = np.array([a.deriv(taus) for a in atoms]).reshape(len(atoms), len(taus))
        mult = np.array([a.mult for a in atoms], dtype=float)
        return vals, ders, mult

    @property
    def checksum(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()

    def to_json(self) -> dict:
        return {
            "kind": "synthetic",
            "name": self.name,
            "torsion_order": self.torsion_order,
            "b1": self.b1,
            "derivative_bound": self.derivative_bound,
            "atoms": [a.to_json() for a in self.atoms],
            "structures": {str(k): [a.to_json() for a in v] for k, v in self.overrides.items()},
        }

    @classmethod
    def from_json(cls, d: dict) -> "SyntheticSpectrum":
        return cls(
            atoms=tuple(Atom.from_json(a) for a in d.get("atoms", [])),
            derivative_bound=float(d["derivative_bound"]),
            torsion_order=int(d.get("torsion_order", 1)),
            b1=int(d.get("b1", 1)),
            name=str(d.get("name", "synthetic")),
            overrides={int(k): tuple(Atom.from_json(a) for a in v) for k, v in d.get("structures", {}).items()},
        )

    def require_b1_one(self) -> None:
        if self.b1 != 1:
            raise SpectrumError(f"certification needs b1 = 1, got b1 = {self.b1}")
