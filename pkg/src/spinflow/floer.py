"""From piercing sequences to monopole Floer chain complexes.

For a torsion spin^c structure on a spectrally large rational homology
``S^1 x S^2`` with transversely cut out kernel locus, the Floer chain complex
is determined by the cyclic sequence of signs of the zero crossings of the
small Dirac eigenvalue.  The three patterns handled here are the empty
sequence, ``(+, -)`` and ``(+, -, +, -)``; longer sequences are reported as
unsupported.  Degrees are relative: the bottom of the left tower is in degree 0.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .trace import SpincStructure


class PiercingError(ValueError):
    pass


class UnsupportedPiercing(PiercingError):
    pass


def _sign(x) -> int:
    if x in ("+", 1, "+1"):
        return 1
    if x in ("-", -1, "-1"):
        return -1
    raise PiercingError(f"not a sign: {x!r}")


@dataclass
class PiercingSequence:
    """Cyclic sequence of crossing signs with their tau locations."""

    signs: tuple
    locations: tuple = ()
    certificates: list = field(default_factory=list)

    def __post_init__(self):
        self.signs = tuple(_sign(s) for s in self.signs)
        self.locations = tuple(float(t) % 1.0 for t in self.locations)
        if self.locations and len(self.locations) != len(self.signs):
            raise PiercingError("one location per sign is required")

    @classmethod
    def from_string(cls, text: str) -> "PiercingSequence":
        text = text.strip().strip("()")
        return cls(tuple(p.strip() for p in text.split(",") if p.strip()))

    def normalized(self) -> "PiercingSequence":
        """Rotate so that the crossing with the smallest tau comes first."""
        if not self.locations or not self.signs:
            return self
        order = sorted(range(len(self.signs)), key=lambda i: self.locations[i])
        return PiercingSequence(
            tuple(self.signs[i] for i in order),
            tuple(self.locations[i] for i in order),
            [self.certificates[i] for i in order] if len(self.certificates) == len(order) else self.certificates,
        )

    def __len__(self) -> int:
        return len(self.signs)

    def __str__(self) -> str:
        return "(" + ",".join("+" if s > 0 else "-" for s in self.signs) + ")"


def validate_piercing(seq) -> bool:
    """Zero sum and cyclic alternation; raises :class:`PiercingError` with details."""
    if not isinstance(seq, PiercingSequence):
        seq = PiercingSequence(tuple(seq))
    signs = seq.signs
    total = sum(signs)
    if total != 0:
        raise PiercingError(f"signs sum to {total:+d}, not 0")
    n = len(signs)
    for i in range(n):
        if n > 1 and signs[i] == signs[(i + 1) % n]:
            raise PiercingError(f"crossings {i} and {(i + 1) % n} have the same sign; signs must alternate")
    if seq.locations:
        locs = sorted(seq.locations)
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise PiercingError("crossing locations must be distinct")
    return True


@dataclass
class Summand:
    module: str  # "T+", "Z" or "R"
    shift: int = 0
    copies: int = 1

    def __str__(self) -> str:
        base = self.module if self.copies == 1 else f"{self.module}^{self.copies}"
        if self.module == "T+":
            return base if self.shift == 0 else f"{base}<{self.shift}>"
        return f"{base}_{{{self.shift}}}"


@dataclass
class FloerOutput:
    piercing: str
    chain: list
    differential: str
    hm_to: list
    gamma_action: str
    local_rank: int
    local_degree: Optional[int]
    reduced: str
    chain_picture: dict
    even_grading: bool = True
    euler_characteristic: int = 0
    euler_consistent: bool = True
    supported: bool = True

    @property
    def local_homology(self) -> str:
        if self.local_rank == 0:
            return "0"
        r = "R" if self.local_rank == 1 else f"R^{self.local_rank}"
        return f"{r}_{{{self.local_degree}}}"

    def to_json(self) -> dict:
        d = asdict(self)
        d["chain"] = [str(s) for s in self.chain]
        d["hm_to"] = [str(s) for s in self.hm_to]
        d["local_homology"] = self.local_homology
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def _tower_picture(right_bottom: int, top: int = 6) -> dict:
    """Degrees of the two towers and the ``1 - e^[eta]`` arrows between them."""
    left = list(range(0, top + 1, 2))
    right = list(range(right_bottom, top + 2, 2))
    arrows = [[d, d - 1, "1-e^[eta]"] for d in right if d - 1 in left]
    survivors = [d for d in right if d - 1 not in left]
    return {"left_tower": left, "right_tower": right, "arrows": arrows, "local_survivors": survivors}


def piercing_to_floer(seq) -> FloerOutput:
    """Floer chain complex and homology for a validated piercing sequence."""
    if not isinstance(seq, PiercingSequence):
        seq = PiercingSequence(tuple(seq))
    validate_piercing(seq)
    n = len(seq)
    label = str(seq)
    if n == 0:
        return FloerOutput(
            piercing=label,
            chain=[Summand("T+", 0), Summand("T+", 1)],
            differential="trivial",
            hm_to=[Summand("T+", 0), Summand("T+", 1)],
            gamma_action="isomorphism from the right tower onto the left tower",
            local_rank=0,
            local_degree=None,
            reduced="0",
            chain_picture=_tower_picture(1),
            euler_characteristic=0,
        )
    if n == 2:
        return FloerOutput(
            piercing=label,
            chain=[Summand("T+", 0), Summand("T+", -1)],
            differential="trivial",
            hm_to=[Summand("T+", 0), Summand("T+", -1)],
            gamma_action="surjective from the right tower onto the left tower, zero on the bottom of the right tower",
            local_rank=1,
            local_degree=-1,
            reduced="0",
            chain_picture=_tower_picture(-1),
            euler_characteristic=1,
        )
    if n == 4:
        pic = _tower_picture(-1)
        pic["copies"] = 2
        pic["local_differential"] = [[1, -1], ["-e^[eta]", 1]]
        return FloerOutput(
            piercing=label,
            chain=[Summand("T+", 0, 2), Summand("T+", -1, 2)],
            differential="in degrees 2k, 2k+1: Morse complex of a circle with two maxima and two minima",
            hm_to=[Summand("T+", 0), Summand("T+", -1), Summand("Z", -1)],
            gamma_action="surjective from the right tower onto the left tower, zero on the bottom of the right tower and on Z_{-1}",
            local_rank=2,
            local_degree=-1,
            reduced="Z_{-1}",
            chain_picture=pic,
            euler_characteristic=2,
        )
    raise UnsupportedPiercing(
        f"piercing sequence {label} has {n} crossings; only 0, 2 or 4 alternating crossings are supported"
    )


def enumerate_spinc(m: int) -> list[SpincStructure]:
    """Torsion spin^c structures ``k = 0..m-1`` (pair ``k`` with ``m - k`` via ``.conjugate``)."""
    if m < 1:
        raise ValueError("torsion order must be >= 1")
    return [SpincStructure(k, m) for k in range(m)]


def conjugacy_classes(m: int) -> list[tuple[int, ...]]:
    """``(k,)`` for self-conjugate structures, ``(k, m - k)`` for conjugate pairs."""
    out = []
    for s in enumerate_spinc(m):
        c = s.conjugate.k
        if c == s.k:
            out.append((s.k,))
        elif s.k < c:
            out.append((s.k, c))
    return out


def summary_table(results: dict) -> str:
    """Text table ``k | conj | piercing | HM(Gamma_eta)`` plus the count of structures with HM = R."""
    lines = [f"{'k':>3} {'conj':>4} {'self':>4}  {'piercing':<12} HM(Y,s;Gamma_eta)"]
    n_r = 0
    for k in sorted(results):
        out, s = results[k]
        hm = out.local_homology if out is not None else "?"
        pierce = out.piercing if out is not None else "inconclusive"
        if out is not None and out.local_rank == 1:
            n_r += 1
        lines.append(f"{k:>3} {s.conjugate.k:>4} {'yes' if s.is_self_conjugate else 'no':>4}  {pierce:<12} {hm}")
    lines.append(f"#R = {n_r}")
    return "\n".join(lines)
