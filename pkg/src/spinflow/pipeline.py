"""End-to-end certification of the piercing sequence for one spin^c structure.

For each interval of the small-eigenvalue locus a flanking window ``[a, b]``
is chosen and the following are certified on it:

* no eigenvalue with ``|s|`` in a band ``[P, G]`` (exclusion via ``J_s < 1``);
* at most one eigenvalue with ``|s| <= P`` (count bound);
* the sign of that eigenvalue at ``a`` and ``b`` (odd trace formula);
* ``s_0' != 0`` throughout (derivative formula with ``|s_j'| <= 2 pi C_Y``).

Together these give either exactly one transverse crossing, with sign equal
to the direction of ``s_0``, or none.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .certificates import Certificate
from .eigcert import (
    BoundBasis,
    Certifier,
    EigcertError,
    FormalMatrix,
    J_grid,
    build_A,
    exclusion_certificate,
    small_eig_locus,
)
from .floer import FloerOutput, PiercingError, PiercingSequence, piercing_to_floer
from .spectrum import ManifoldData, SyntheticSpectrum
from .testfn import TestFunction
from .trace import SpincStructure


@dataclass
class CertifyConfig:
    basis_n: int = 8
    basis_a: Optional[float] = None
    shifts: Optional[tuple] = None
    oracle_R: float = 7.0
    grid: int = 2000
    continuity_tol: float = 0.05
    flanks: tuple = (0.01, 0.015, 0.025, 0.035, 0.05)
    flank_nodes: int = 41
    s_max: float = 3.0
    s_step: float = 0.005
    band_max: float = 0.6
    min_gap: float = 1.0
    K: str = "conv7_x"
    H: str = "conv6"
    c_y: Optional[float] = None
    k_max: int = 24
    tol: float = 1e-4

    def basis(self, source) -> BoundBasis:
        R = source.cutoff if isinstance(source, ManifoldData) else self.oracle_R
        if self.basis_a is None and self.shifts is None:
            return BoundBasis.default(R, self.basis_n)
        a = self.basis_a if self.basis_a is not None else R / (2.0 * (self.basis_n + 1))
        shifts = self.shifts if self.shifts is not None else tuple(i * a for i in range(self.basis_n))
        return BoundBasis(a, tuple(shifts))


@dataclass
class Crossing:
    interval: tuple
    sign: int  # +1, -1, or 0 for a certified non-crossing
    certificate: Certificate

    @property
    def location(self) -> float:
        return (0.5 * (self.interval[0] + self.interval[1])) % 1.0


@dataclass
class StructureResult:
    structure: SpincStructure
    status: str  # "certified" | "inconclusive"
    locus: list
    crossings: list = field(default_factory=list)
    piercing: Optional[PiercingSequence] = None
    floer: Optional[FloerOutput] = None
    certificates: list = field(default_factory=list)
    failure: str = ""

    def to_json(self) -> dict:
        return {
            "k": self.structure.k,
            "m": self.structure.m,
            "self_conjugate": self.structure.is_self_conjugate,
            "status": self.status,
            "locus": [list(iv) for iv in self.locus],
            "crossings": [
                {"interval": list(c.interval), "location": c.location, "sign": c.sign} for c in self.crossings
            ],
            "piercing": str(self.piercing) if self.piercing is not None else None,
            "floer": self.floer.to_json() if self.floer is not None else None,
            "failure": self.failure,
            "certificates": [c.to_json() for c in self.certificates],
        }


def _flank_window(iv, neighbours, d):
    """``[lo - d, hi + d]`` clipped to stay clear of neighbouring locus intervals."""
    lo, hi = iv
    prev_hi, next_lo = neighbours
    a = max(lo - d, 0.5 * (lo + prev_hi))
    b = min(hi + d, 0.5 * (hi + next_lo))
    return a, b


def _neighbours(ivs, i):
    """Nearest interval end to the left and start to the right of ``ivs[i]`` on the circle."""
    lo, hi = ivs[i]
    prev_hi, next_lo = hi - 1.0, lo + 1.0
    for j, (lj, hj) in enumerate(ivs):
        if j != i:
            prev_hi = max(prev_hi, hj - math.ceil(hj - lo))
            next_lo = min(next_lo, lj + math.ceil(hi - lj))
    return prev_hi, next_lo


def _band_and_gap(A: FormalMatrix, k: int, a: float, b: float, cfg: CertifyConfig):
    """Band edge ``P`` and gap ``G`` read off ``J_s`` over a tau grid on ``[a, b]``."""
    taus = np.linspace(a, b, cfg.flank_nodes)
    ss = np.arange(0.0, cfg.s_max + 0.5 * cfg.s_step, cfg.s_step)
    Jg = J_grid(A, taus, k, ss)
    P, G = 0.0, cfg.s_max
    for row in Jg:
        on = np.flatnonzero(row >= 1.0)
        if on.size == 0:
            continue
        # first run: the small eigenvalue if it starts inside the band
        breaks = np.flatnonzero(np.diff(on) > 1)
        first_end = on[breaks[0]] if breaks.size else on[-1]
        if ss[on[0]] <= cfg.band_max:
            P = max(P, ss[first_end])
            nxt = on[breaks[0] + 1] if breaks.size else None
        else:
            nxt = on[0]
        if nxt is not None:
            G = min(G, ss[nxt])
    return P + 2 * cfg.s_step, G - 2 * cfg.s_step


def prove_interval(cf: Certifier, A: FormalMatrix, iv, neighbours, cfg: CertifyConfig):
    """Certify the crossing behaviour across one locus interval; returns a :class:`Crossing`."""
    K = TestFunction.parse(cfg.K)
    H = TestFunction.parse(cfg.H)
    reasons = []
    for d in cfg.flanks:
        a, b = _flank_window(iv, neighbours, d)
        P, G = _band_and_gap(A, cf.k, a, b, cfg)
        if not (P < G and P <= cfg.band_max and G >= cfg.min_gap):
            reasons.append(f"flank {d}: no clean gap (band {P:.4f}, gap {G:.4f})")
            continue
        kids = []
        ok_ex, ex = exclusion_certificate(A, cf.k, (a, b), P, G)
        kids.append(ex)
        if not ok_ex:
            reasons.append(f"flank {d}: exclusion of [{P:.4f}, {G:.4f}] failed")
            continue
        n_up, cu = cf.count_upper((a, b), P, H)
        kids.append(cu)
        if n_up > 1:
            reasons.append(f"flank {d}: count bound {n_up} > 1 on band {P:.4f}")
            continue
        sa, ca = cf.sign_certificate(a, G, K)
        sb, cb = cf.sign_certificate(b, G, K)
        kids += [ca, cb]
        if sa == 0 or sb == 0:
            reasons.append(f"flank {d}: sign inconclusive ({sa}, {sb})")
            continue
        ok_tr, direction, ct = cf.transversality_certificate((a, b), G, P, K)
        kids.append(ct)
        if not ok_tr:
            reasons.append(f"flank {d}: transversality inconclusive")
            continue
        if sa != sb and direction != sb:
            raise EigcertError("inconsistent certificates: flank signs disagree with the derivative sign")
        sign = sb if sa != sb else 0
        c = {"all_children_ok": True, "flank": d, "window": [a, b], "band": P, "gap": G,
             "sign_a": sa, "sign_b": sb, "direction": direction}
        cert = Certificate("crossing", True, c, [list(iv), [a, b]],
                           "crossing: unique small eigenvalue on [a, b], signs at a and b, monotone throughout",
                           dict(cf._prov()), kids)
        return Crossing(tuple(iv), sign, cert)
    cert = Certificate("crossing", False, {"all_children_ok": False, "reasons": reasons}, [list(iv)],
                       "crossing: no flank window certified", dict(cf._prov()))
    return Crossing(tuple(iv), 0, cert)


def certify_structure(source, s, cfg: Optional[CertifyConfig] = None, A: Optional[FormalMatrix] = None) -> StructureResult:
    """Locus, crossings, piercing sequence and Floer output for one spin^c structure."""
    cfg = cfg or CertifyConfig()
    source.require_b1_one()
    m = source.torsion_order
    st = s if isinstance(s, SpincStructure) else SpincStructure(int(s), m)
    if A is None:
        A = build_A(source, cfg.basis(source))
    A.check_pd(np.linspace(0.0, 1.0, 64, endpoint=False), st.k)
    ivs, lc = small_eig_locus(A, st.k, cfg.grid, continuity_tol=cfg.continuity_tol)
    res = StructureResult(st, "certified", ivs, certificates=[lc])
    cf = Certifier(source, st.k, c_y=cfg.c_y, tol=cfg.tol, k_max=cfg.k_max)
    if len(ivs) == 1 and ivs[0] == (0.0, 1.0):
        res.status, res.failure = "inconclusive", "J_0 >= 1 on the whole circle"
        return res
    for i, iv in enumerate(ivs):
        cr = prove_interval(cf, A, iv, _neighbours(ivs, i), cfg)
        res.certificates.append(cr.certificate)
        if not cr.certificate.verdict:
            res.status = "inconclusive"
            res.failure = f"interval [{iv[0]:.4f}, {iv[1]:.4f}]: " + "; ".join(cr.certificate.constants["reasons"])
            return res
        if cr.sign != 0:
            res.crossings.append(cr)
    seq = PiercingSequence(
        tuple(c.sign for c in res.crossings),
        tuple(c.location for c in res.crossings),
        [c.certificate for c in res.crossings],
    ).normalized()
    res.piercing = seq
    kids = [c.certificate for c in res.crossings]
    pc = Certificate("piercing", True, {"signs": list(seq.signs), "locations": list(seq.locations),
                                        "all_children_ok": True},
                     [[c.interval[0], c.interval[1]] for c in res.crossings],
                     "piercing: certified crossings in tau order", dict(cf._prov()), [])
    try:
        from .floer import validate_piercing

        validate_piercing(seq)
    except PiercingError as exc:
        pc.verdict = False
        res.status, res.failure = "inconclusive", f"invalid piercing sequence: {exc}"
        res.certificates.append(pc)
        return res
    res.certificates.append(pc)
    try:
        res.floer = piercing_to_floer(seq)
    except PiercingError as exc:
        res.failure = str(exc)
    return res
