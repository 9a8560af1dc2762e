"""Certified statements about small Dirac eigenvalues along the circle of flat connections.

The engine works on any *source* of geometric sides: validated
:class:`~spinflow.spectrum.ManifoldData` (group-ring formal sides) or a planted
:class:`~spinflow.spectrum.SyntheticSpectrum` (oracle sides).  Every bound adds
the evaluation error budget on the unfavourable side and is returned together
with a :class:`~spinflow.certificates.Certificate` holding its constants.

Multiplicity bounds use a basis of even functions
``f_i(x) = (g(x - c_i) + g(x + c_i)) / 2`` with ``g`` the convolution square of
an interval indicator, normalised so that ``f_i^(t) = sqrt(a) sinc^2(a t) cos(c_i t)``.
For ``F = sum c_i f_i`` the even trace formula at ``F * F~`` gives
``c^T A(tau) c = (1/2) sum_j F^(s_j)^2``, hence
``J_s = 1 / <v_s, A^{-1} v_s>`` with ``v_s = f^(s) / sqrt 2`` bounds the
multiplicity of ``|s|``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .certificates import Certificate
from .spectrum import ManifoldData, SyntheticSpectrum
from .summation import EPS
from .testfn import (
    BandSuppressed,
    SymmetricShift,
    TestFunction,
    _decay_envelope,
    _tail_start,
    certified_max_abs,
    certified_min,
    profile_deriv_bound,
)
from .trace import SpincStructure, make_side

H6 = TestFunction(6)
K7 = TestFunction(7, odd=True)

Source = Union[ManifoldData, SyntheticSpectrum]
TauSpec = Union[float, tuple]


class EigcertError(ValueError):
    pass


class Inconclusive(RuntimeError):
    """A certificate could not be established; carries the failing certificate."""

    def __init__(self, message: str, certificate: Optional[Certificate] = None):
        super().__init__(message)
        self.certificate = certificate


def _k(s) -> int:
    return s.k if isinstance(s, SpincStructure) else int(s)


def _interval(tau: TauSpec) -> tuple[float, float]:
    if isinstance(tau, (tuple, list)):
        lo, hi = float(tau[0]), float(tau[1])
        if hi < lo:
            raise EigcertError("tau interval has hi < lo")
        return lo, hi
    return float(tau), float(tau)


def _provenance(source, **extra) -> dict:
    d = {
        "source": source.name,
        "checksum": source.checksum,
        "mode": "oracle" if isinstance(source, SyntheticSpectrum) else "formal",
    }
    if isinstance(source, ManifoldData):
        d["cutoff_R"] = source.cutoff
    d.update(extra)
    return d


# --------------------------------------------------------------------------
# evaluating sides over tau ranges
# --------------------------------------------------------------------------

def side_range(side, tau: TauSpec, k: int = 0, tol: float = 1e-4, max_nodes: int = 200001):
    """Certified ``(lower, upper)`` for a side over a tau point or interval.

    Interval values come from a uniform grid plus ``Lip * h / 2``; the
    evaluation budget is added on both sides.
    """
    lo, hi = _interval(tau)
    bud = side.error_budget
    if hi == lo:
        v = side.evaluate(lo, k)
        return v - bud, v + bud
    lip = side.tau_lipschitz()
    width = hi - lo
    nodes = int(min(max_nodes, max(3, math.ceil(width * lip / (2.0 * tol)) + 1)))
    h = width / (nodes - 1)
    vals = side.evaluate_grid(np.linspace(lo, hi, nodes), k)
    slack = 0.5 * h * lip + bud
    return float(vals.min() - slack), float(vals.max() + slack)


# --------------------------------------------------------------------------
# the bound basis and the formal matrix A
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundBasis:
    """Shifted convolution squares of ``1_[-a, a]``."""

    a: float
    shifts: tuple

    def __post_init__(self):
        if self.a <= 0:
            raise EigcertError("basis half-width must be positive")
        if not self.shifts:
            raise EigcertError("basis needs at least one shift")
        object.__setattr__(self, "shifts", tuple(float(c) for c in self.shifts))

    @classmethod
    def default(cls, R: float, n: int = 8) -> "BoundBasis":
        """``n`` equally spaced shifts ``i a`` with ``a = R / (2 (n + 1))``, filling support ``R``."""
        a = R / (2.0 * (n + 1))
        return cls(a, tuple(i * a for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.shifts)

    @property
    def support_radius(self) -> float:
        """Support radius of the widest product ``f_i * f_j~``."""
        return 4.0 * self.a + 2.0 * max(abs(c) for c in self.shifts)

    @property
    def kernel(self) -> TestFunction:
        return TestFunction(4, stretch=self.a)

    def check_support(self, R: float) -> None:
        if self.support_radius > R * (1 + 1e-12):
            raise EigcertError(
                f"basis support {self.support_radius:g} exceeds the cutoff R = {R:g}; "
                "shrink a or the shifts"
            )

    def offsets(self):
        """Distinct shift combinations ``|c_i - c_j|``, ``c_i + c_j`` and index maps."""
        keys: dict[float, int] = {}
        ds: list[float] = []
        n = self.n
        minus = np.zeros((n, n), dtype=int)
        plus = np.zeros((n, n), dtype=int)
        for i, ci in enumerate(self.shifts):
            for j, cj in enumerate(self.shifts):
                for d, tgt in ((abs(ci - cj), minus), (abs(ci + cj), plus)):
                    # dedupe on a rounded key, but keep the exact offset
                    key = round(d, 12)
                    if key not in keys:
                        keys[key] = len(ds)
                        ds.append(d)
                    tgt[i, j] = keys[key]
        return ds, minus, plus

    def v(self, s) -> np.ndarray:
        """``v_s`` for an array of ``s``; shape ``(n, len(s))``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        sinc2 = np.sinc(self.a * s / math.pi) ** 2
        c = np.asarray(self.shifts)[:, None]
        return math.sqrt(self.a / 2.0) * sinc2[None, :] * np.cos(c * s[None, :])

    def v_lipschitz(self) -> np.ndarray:
        """``sup_s |d v_i / ds|`` per basis element (``|(sinc^2)'| <= 1``)."""
        return math.sqrt(self.a / 2.0) * (self.a + np.abs(np.asarray(self.shifts)))


@dataclass
class FormalMatrix:
    """Symmetric matrix of sides ``A_ij = (P_{|c_i - c_j|} + P_{c_i + c_j}) / 2``."""

    basis: BoundBasis
    sides: list
    minus: np.ndarray
    plus: np.ndarray
    kind: str = "dirac_even"
    constant: float = 0.0  # subtracted from every entry (coexact b1 correction)
    provenance: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.basis.n

    def _assemble(self, per_side: np.ndarray) -> np.ndarray:
        # per_side: (n_sides, ...) -> (..., n, n)
        m = 0.5 * (per_side[self.minus] + per_side[self.plus])
        return np.moveaxis(m, (0, 1), (-2, -1))

    def evaluate(self, taus, s=0) -> np.ndarray:
        """``A(tau)`` for every tau; shape ``(len(taus), n, n)``."""
        k = _k(s)
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        vals = np.array([side.evaluate_grid(taus, k) for side in self.sides])
        return self._assemble(vals) - self.constant

    def budgets(self) -> np.ndarray:
        b = np.array([side.error_budget for side in self.sides])
        return self._assemble(b) + 4.0 * EPS * abs(self.constant)

    def lipschitz(self) -> np.ndarray:
        return self._assemble(np.array([side.tau_lipschitz() for side in self.sides]))

    def check_pd(self, taus, s=0) -> float:
        """Smallest eigenvalue over the grid; raises if any ``A(tau)`` is not PD."""
        A = self.evaluate(taus, s)
        eig = np.linalg.eigvalsh(A)[:, 0]
        bad = np.flatnonzero(eig <= 0)
        if bad.size:
            t = float(np.atleast_1d(taus)[bad[0]])
            raise EigcertError(f"A(tau) is not positive definite at tau = {t:.6f}")
        return float(eig.min())


def build_A(source: Source, basis: BoundBasis, kind: str = "dirac_even") -> FormalMatrix:
    """Formal matrix of even sides at the products ``f_i * f_j~``."""
    if isinstance(source, ManifoldData):
        basis.check_support(source.cutoff)
    ds, minus, plus = basis.offsets()
    ker = basis.kernel
    sides = [make_side(source, SymmetricShift(ker, d), kind) for d in ds]
    constant = 0.0
    if kind == "coexact":
        # the spectral side carries (b1 - 1)/2 * H^(0); f_i^(0) f_j^(0) = a
        constant = 0.5 * (source.b1 - 1) * basis.a
    return FormalMatrix(basis, sides, minus, plus, kind, constant, _provenance(source, basis_a=basis.a, shifts=list(basis.shifts)))


def _q_values(Am: np.ndarray, V: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(Am)
    except np.linalg.LinAlgError:
        raise EigcertError("Cholesky failed: A(tau) is not positive definite") from None
    W = solve_triangular(L, V, lower=True)
    return np.sum(W * W, axis=0)


def J(s, tau: float, k, A: FormalMatrix, basis: Optional[BoundBasis] = None):
    """``J_s(tau) = 1 / <v_s, A(tau)^{-1} v_s>``; vectorised over ``s``."""
    basis = basis or A.basis
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    V = basis.v(s_arr)
    # v_s at rounding level counts as vanishing
    V = np.where(np.max(np.abs(V), axis=0) <= 64.0 * EPS * math.sqrt(basis.a), 0.0, V)
    q = _q_values(A.evaluate([tau], k)[0], V)
    with np.errstate(divide="ignore"):
        out = np.where(q > 0, 1.0 / np.where(q > 0, q, 1.0), np.inf)
    if np.any(~np.isfinite(out)):
        warnings.warn("v_s vanishes for some s; J_s reported as +inf", RuntimeWarning, stacklevel=2)
    return float(out[0]) if np.ndim(s) == 0 else out


def J_grid(A: FormalMatrix, taus, k, s_values) -> np.ndarray:
    """``J_s(tau)`` on a product grid; shape ``(len(taus), len(s))``."""
    V = A.basis.v(s_values)
    mats = A.evaluate(taus, k)
    q = np.array([_q_values(M, V) for M in mats])
    with np.errstate(divide="ignore"):
        return np.where(q > 0, 1.0 / np.where(q > 0, q, 1.0), np.inf)


def qp_minimum(Am: np.ndarray, v: np.ndarray) -> float:
    """``min c^T A c`` subject to ``<c, v> = 1``, by elimination (a reference solver)."""
    cf = cho_factor(Am)
    x = cho_solve(cf, v)
    return float(1.0 / (v @ x))


# --------------------------------------------------------------------------
# the small-eigenvalue locus
# --------------------------------------------------------------------------

def _runs(mask: np.ndarray, cyclic: bool) -> list[tuple[int, int]]:
    """Maximal index runs ``[i, j]`` where mask is true (cyclic wrap if asked)."""
    n = mask.size
    if not mask.any():
        return []
    if mask.all():
        return [(0, n - 1)]
    idx = np.flatnonzero(mask)
    runs = []
    start = prev = idx[0]
    for i in idx[1:]:
        if i != prev + 1:
            runs.append((start, prev))
            start = i
        prev = i
    runs.append((start, prev))
    if cyclic and len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] == n - 1:
        first = runs.pop(0)
        last = runs.pop()
        runs.append((last[0] - n, first[1]))
    return runs


def small_eig_locus(A: FormalMatrix, k=0, grid: Union[int, Sequence[float]] = 2000, threshold: float = 1.0,
                    continuity_tol: float = 0.05, max_refine: int = 4):
    """Padded intervals (mod 1) where ``J_0(tau) >= threshold``.

    ``grid`` is a node count (uniform on [0, 1), refined automatically) or an
    explicit increasing list of nodes in [0, 1).
    """
    kk = _k(k)
    explicit = not isinstance(grid, (int, np.integer))
    n = int(grid) if not explicit else len(grid)
    for _ in range(max_refine + 1):
        taus = np.asarray(grid, dtype=float) if explicit else np.arange(n) / n
        j0 = J_grid(A, taus, kk, [0.0])[:, 0]
        wrap = np.append(j0, j0[0]) if not explicit else j0
        var = float(np.max(np.abs(np.diff(wrap)))) if wrap.size > 1 else 0.0
        if var < continuity_tol or explicit:
            break
        n *= 2
    if var >= continuity_tol:
        raise EigcertError(f"refine grid: J_0 varies by {var:.3g} between nodes (limit {continuity_tol})")
    runs = _runs(j0 >= threshold, cyclic=not explicit)
    h = 1.0 / n if not explicit else float(np.max(np.diff(taus))) if taus.size > 1 else 0.0
    ivs = []
    for i, j in runs:
        lo = (taus[i] if i >= 0 else taus[i] - 1.0) - h
        hi = taus[j] + h
        if j - i + 1 >= n:
            lo, hi = 0.0, 1.0
        ivs.append((float(lo), float(hi)))
    cert = Certificate(
        kind="locus",
        verdict=[list(iv) for iv in ivs],
        constants={
            "grid_nodes": n,
            "threshold": threshold,
            "max_step_variation": var,
            "continuity_tol": continuity_tol,
            "j0_max": float(j0.max()),
        },
        intervals=[list(iv) for iv in ivs],
        rule="locus: J_0 >= threshold on the grid, padded one step",
        provenance=dict(A.provenance, k=kk),
    )
    return ivs, cert


# --------------------------------------------------------------------------
# certificates built from trace-formula evaluations
# --------------------------------------------------------------------------

class Certifier:
    """Certification queries for one source and one torsion spin^c structure."""

    def __init__(self, source: Source, s=0, c_y: Optional[float] = None, tol: float = 1e-4,
                 k_max: int = 24):
        self.source = source
        self.k = _k(s)
        self.tol = tol
        self.k_max = k_max
        self._sides: dict = {}
        if c_y is None:
            if isinstance(source, SyntheticSpectrum):
                c_y = source.derivative_bound / (2.0 * math.pi)
            else:
                c_y = source.c_y_upper
        self.c_y = c_y
        self._s_y: Optional[float] = None

    @property
    def oracle(self) -> bool:
        return isinstance(self.source, SyntheticSpectrum)

    def side(self, tf, kind: str):
        key = (tf.id, kind)
        if key not in self._sides:
            self._sides[key] = make_side(self.source, tf, kind)
        return self._sides[key]

    def gamma(self, tf, kind: str, tau: TauSpec) -> tuple[float, float]:
        return side_range(self.side(tf, kind), tau, self.k, self.tol)

    def _prov(self, **extra):
        return _provenance(self.source, k=self.k, **extra)

    # -- counting ---------------------------------------------------------------
    def count_upper(self, tau: TauSpec, L: float, H: TestFunction = H6):
        """``floor(2 Gamma_H / min_{[0, L]} H^)``: eigenvalues with ``|s| <= L``."""
        if H.parity != "even" or not H.is_fourier_nonnegative():
            raise EigcertError("count_upper needs an even test function with non-negative transform")
        if L <= 0:
            raise EigcertError("L must be positive")
        pmin = certified_min(H, 0.0, L)
        if pmin <= 0:
            raise EigcertError(f"L = {L} is outside the range where the transform is certified positive")
        lo, hi = self.gamma(H, "dirac_even", tau)
        c = {"gamma_sup": hi, "budget": 0.0, "profile_min": pmin, "L": L}
        n = int(math.floor(2.0 * hi / pmin))
        cert = Certificate("count_upper", n, c, [list(_interval(tau))],
                           "count_upper: #{|s_j| <= L} <= floor(2 Gamma_H / min_[0,L] H^)",
                           self._prov(tf=H.id))
        return n, cert

    def count_lower(self, tau: float, L: float, H: TestFunction = H6):
        """True when ``Gamma_G > 0`` for ``G^ = H^ (1 - t^2/L^2)``: some ``|s_j| < L``."""
        if H.parity != "even" or not H.is_fourier_nonnegative():
            raise EigcertError("count_lower needs an even test function with non-negative transform")
        G = BandSuppressed(H, L)
        side = self.side(G, "dirac_even")
        v = side.evaluate(float(tau), self.k)
        c = {"gamma_inf": v, "budget": side.error_budget, "L": L}
        ok = v - side.error_budget > 0.0
        cert = Certificate("count_lower", ok, c, [[float(tau), float(tau)]],
                           "count_lower: Gamma_G > 0 forces an eigenvalue in (-L, L)",
                           self._prov(tf=G.id))
        return ok, cert

    def weyl_window_bound(self, tau: TauSpec, nu: float, halfwidth: float = 0.5, power: int = 6):
        """Eigenvalues with ``|s| in [nu - w, nu + w]`` via ``H_{power, nu}``."""
        if nu < 0.5:
            raise EigcertError("window centre nu must be >= 1/2")
        if halfwidth <= 0 or halfwidth > 0.5:
            raise EigcertError("window half-width must lie in (0, 1/2]")
        H = TestFunction(power, modulation=float(nu))
        pmin = certified_min(TestFunction(power), 0.0, halfwidth)
        lo, hi = self.gamma(H, "dirac_even", tau)
        n = int(math.floor(2.0 * hi / pmin))
        c = {"gamma_sup": hi, "budget": 0.0, "profile_min": pmin, "nu": nu, "halfwidth": halfwidth}
        cert = Certificate("window_bound", n, c, [list(_interval(tau))],
                           "window_bound: #{|s_j| in window} <= floor(2 Gamma_{H,nu} / min sinc^power)",
                           self._prov(tf=H.id))
        return n, cert

    # -- tails ----------------------------------------------------------------
    def _s_y(self) -> float:
        if self._s_y is None:
            g = self.source.geodesics
            h = TestFunction(6, modulation=0.0)
            self._s_y = math.fsum(g.weights() * np.abs(h.value(g.length)))
        return self._s_y

    def _remainder(self, env: TestFunction, order: int, X: float) -> float:
        """Bound on ``sum_{|s_j| >= X} |env^{(order)}(s_j)|``."""
        n = env.n
        E = _decay_envelope(env, order)
        if X < _tail_start(env):
            raise EigcertError("tail remainder starts below the envelope's decay range")
        if self.oracle:
            return self.source.total_multiplicity(self.k) * E * X ** (-n)
        data = self.source
        if data.cutoff < 6.0:
            raise EigcertError("tail remainder needs R >= 6 for the H_{6,nu} window counts")
        pmin = certified_min(H6, 0.0, 0.5)
        vol = data.volume / (2.0 * math.pi)
        alpha = (vol * 0.3875 + self._s_y()) * 2.0 / pmin
        beta = vol * 0.55 * 2.0 / pmin
        # windows [X + k, X + k + 1], centre nu <= X + k + 1; first term plus integral
        f0 = E * X ** (-n) * (alpha + beta * (X + 1.0) ** 2)
        integral = E * (alpha * X ** (1 - n) / (n - 1) + 1.5625 * beta * X ** (3 - n) / (n - 3))
        return f0 + integral

    def tail_bound(self, tau: TauSpec, gap: float, envelope: TestFunction = K7, order: int = 0,
                   k_max: Optional[int] = None, medium: Sequence[tuple] = ()):
        """``sum_{|s_j| >= gap} |envelope^{(order)}(s_j)|`` plus medium windows."""
        k_max = self.k_max if k_max is None else k_max
        windows = []
        kids = []
        for lo, hi in medium:
            nu = 0.5 * (lo + hi)
            cnt, wc = self.weyl_window_bound(tau, max(nu, 0.5), halfwidth=min(0.5, 0.5 * (hi - lo)))
            windows.append((certified_max_abs(envelope, lo, hi, order), cnt))
            kids.append(wc)
        for j in range(k_max):
            lo = gap + j
            cnt, wc = self.weyl_window_bound(tau, lo + 0.5)
            windows.append((certified_max_abs(envelope, lo, lo + 1.0, order), cnt))
            kids.append(wc)
        rem = self._remainder(envelope, order, gap + k_max)
        total = math.fsum(e * n for e, n in windows) + rem
        c = {"windows": [[e, n] for e, n in windows], "remainder": rem, "gap": gap, "order": order}
        cert = Certificate("tail_bound", total, c, [list(_interval(tau))],
                           "tail_bound: sum of window maxima times window counts plus remainder",
                           self._prov(envelope=envelope.id), kids)
        return total, cert

    # -- sign and transversality ---------------------------------------------
    @staticmethod
    def _odd_family(K: TestFunction) -> None:
        if not K.odd or K.modulation is not None:
            raise EigcertError("sign/transversality need an unmodulated odd test function")

    def sign_certificate(self, tau: float, gap: float, K: TestFunction = K7, medium: Sequence[tuple] = ()):
        """Sign of the unique small eigenvalue at ``tau`` (0 when inconclusive)."""
        self._odd_family(K)
        side = self.side(K, "dirac_odd")
        gamma = side.evaluate(float(tau), self.k)
        tail, tc = self.tail_bound(float(tau), gap, K, 0, medium=medium)
        sign_range = math.pi / K.stretch
        c = {"gamma": gamma, "budget": side.error_budget, "tail": tail, "gap": gap,
             "sign_range": sign_range, "profile_sign": -1}
        ok = tail < 2.0 * abs(gamma) - 2.0 * side.error_budget and gap <= sign_range
        verdict = int(math.copysign(1, gamma)) * -1 if ok else 0
        cert = Certificate("sign", verdict, c, [[float(tau), float(tau)]],
                           "sign: |2 Gamma_K| > tail, and -iK^ < 0 on (0, pi/lambda)",
                           self._prov(tf=K.id), [tc])
        return verdict, cert

    def transversality_certificate(self, interval: tuple, gap: float, band: float, K: TestFunction = K7,
                                   c_y: Optional[float] = None, medium: Sequence[tuple] = ()):
        """Certify ``s_0' != 0`` on ``interval`` for the unique eigenvalue with ``|s_0| < band``.

        Returns ``(ok, direction, certificate)`` with ``direction = sign(s_0')``.
        """
        self._odd_family(K)
        c_y = self.c_y if c_y is None else c_y
        if c_y is None:
            raise EigcertError("transversality needs an upper bound for C_Y")
        side = self.side(K, "dirac_odd_derivative")
        # only the sign and a lower bound on |Gamma~| matter: resolve to 1% of its size
        mid = side.evaluate(0.5 * (interval[0] + interval[1]), self.k)
        lo, hi = side_range(side, tuple(interval), self.k, max(self.tol, 0.01 * abs(mid)))
        min_abs = 0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi))
        tail, tc = self.tail_bound(tuple(interval), gap, K, 1, medium=medium)
        # -iK^' must keep one sign where s_0 can be
        dsup = _certified_sup(K, 1, -band, band)
        two_pi_cy = 2.0 * math.pi * c_y
        c = {"tail": tail, "two_pi_cy": two_pi_cy, "gamma_tilde_min_abs": min_abs,
             "gamma_tilde_range": [lo, hi], "budget": 0.0, "band": band,
             "profile_deriv_sup_on_band": dsup, "gap": gap}
        ok = tail * two_pi_cy < 2.0 * min_abs and dsup < 0.0
        direction = -int(math.copysign(1, hi)) if ok else 0
        cert = Certificate("transversality", ok, c, [list(interval)],
                           "transversality: 2 pi C_Y * tail(|K^'|) < 2 min |Gamma~_K|",
                           self._prov(tf=K.id, c_y=c_y), [tc])
        return ok, direction, cert


def _certified_sup(tf: TestFunction, order: int, lo: float, hi: float, samples: int = 4001) -> float:
    t = np.linspace(lo, hi, samples)
    h = (hi - lo) / (samples - 1)
    return float(np.max(tf.profile_deriv(t, order)) + 0.5 * h * profile_deriv_bound(tf, order + 1))


# --------------------------------------------------------------------------
# exclusion of eigenvalues from an s-band over a tau-range
# --------------------------------------------------------------------------

def exclusion_certificate(A: FormalMatrix, k, tau: TauSpec, s_lo: float, s_hi: float,
                          max_cells: int = 2_000_000, max_levels: int = 24, kind: str = "exclusion"):
    """Certify ``J_s(tau) < 1`` for all ``s in [s_lo, s_hi]`` and tau in the range.

    At each cell centre the witness ``c = A^{-1} v`` gives
    ``<v_s, A(tau)^{-1} v_s> >= 2 c.v_s - c^T A(tau) c``, whose variation over
    the cell is bounded with the tau-Lipschitz constants of the entries and
    the s-Lipschitz constants of ``v``.  Cells that fail are bisected along
    the dimension whose margin dominates.
    """
    kk = _k(k)
    t_lo, t_hi = _interval(tau)
    if s_hi < s_lo:
        raise EigcertError("empty s-band")
    lip = A.lipschitz()
    bud = A.budgets()
    dv = A.basis.v_lipschitz()
    t_w, s_w = t_hi - t_lo, s_hi - s_lo
    n_t = 1 if t_w == 0 else max(4, int(math.ceil(t_w / 2e-3)))
    n_s = max(4, int(math.ceil(s_w / 1e-2)))
    ht0, hs0 = t_w / n_t, s_w / n_s
    tc, sc = np.meshgrid(t_lo + (np.arange(n_t) + 0.5) * ht0, s_lo + (np.arange(n_s) + 0.5) * hs0, indexing="ij")
    tc, sc = tc.ravel(), sc.ravel()
    ht, hs = np.full(tc.size, ht0), np.full(sc.size, hs0)
    worst = None
    blocked = False
    total = 0
    for _level in range(max_levels):
        total += tc.size
        lb = np.empty(tc.size)
        rec = np.empty((tc.size, 4))
        ut, inv = np.unique(tc, return_inverse=True)
        mats = A.evaluate(ut, kk)
        for i, M in enumerate(mats):
            idx = np.flatnonzero(inv == i)
            try:
                cf = cho_factor(M)
            except np.linalg.LinAlgError:
                raise EigcertError("A(tau) is not positive definite") from None
            V = A.basis.v(sc[idx])
            C = cho_solve(cf, V)
            ac = np.abs(C)
            cv = np.sum(C * V, axis=0)
            cac = np.sum(C * (M @ C), axis=0)
            q = 2.0 * cv - cac
            tm = 0.5 * ht[idx] * np.sum(ac * (lip @ ac), axis=0)
            sm = hs[idx] * np.sum(ac * dv[:, None], axis=0)
            rm = np.sum(ac * (bud @ ac), axis=0) + 64 * EPS * (np.abs(2.0 * cv) + np.abs(cac))
            lb[idx] = q - tm - sm - rm
            rec[idx] = np.column_stack([q, tm, sm, rm])
        j = int(np.argmin(lb))
        cand = (float(lb[j]), *map(float, rec[j]), float(tc[j]), float(sc[j]))
        good = lb > 1.0
        if np.any(good):
            jg = np.flatnonzero(good)[np.argmin(lb[good])]
            gcand = (float(lb[jg]), *map(float, rec[jg]), float(tc[jg]), float(sc[jg]))
            if worst is None or gcand[0] < worst[0]:
                worst = gcand
        bad = ~good
        if not np.any(bad):
            break
        if np.any(rec[bad, 0] <= 1.0) or 2 * np.count_nonzero(bad) + total > max_cells:
            blocked = True
            worst = cand
            break
        # bisect failing cells along the dimension with the larger margin
        tb, sb, htb, hsb = tc[bad], sc[bad], ht[bad], hs[bad]
        split_t = (rec[bad, 1] > rec[bad, 2]) & (htb > 0)
        q_t, q_s = 0.25 * htb * split_t, 0.25 * hsb * ~split_t
        tc = np.concatenate([tb - q_t, tb + q_t])
        sc = np.concatenate([sb - q_s, sb + q_s])
        ht = np.tile(np.where(split_t, 0.5 * htb, htb), 2)
        hs = np.tile(np.where(split_t, hsb, 0.5 * hsb), 2)
    else:
        blocked = True
        worst = cand
    lb, q, tm, sm, rm, wt, ws = worst
    ok = (not blocked) and lb > 1.0
    c = {"worst_lower_bound": lb, "worst_node_q": q, "tau_margin": tm, "s_margin": sm,
         "rounding_margin": rm, "worst_tau": wt, "worst_s": ws, "cells": int(total),
         "s_band": [s_lo, s_hi]}
    cert = Certificate(kind, ok, c, [[t_lo, t_hi]],
                       "exclusion: <v_s, A^-1 v_s> > 1 on every cell, so J_s < 1 and s is no eigenvalue",
                       dict(A.provenance, k=kk))
    return ok, cert


def spectral_largeness(source: Source, basis: Optional[BoundBasis] = None, threshold: float = 2.0):
    """Certify ``lambda_1* > threshold`` for the coexact spectrum."""
    if basis is None:
        R = source.cutoff if isinstance(source, ManifoldData) else 7.0
        basis = BoundBasis.default(R)
    A = build_A(source, basis, "coexact")
    A.check_pd([0.0])
    ok, cert = exclusion_certificate(A, 0, 0.0, 0.0, math.sqrt(threshold), kind="spectral_largeness")
    cert.constants["threshold"] = threshold
    cert.constants["b1_correction"] = A.constant
    return ok, cert


# module-level conveniences mirroring the certifier methods

def count_upper(source: Source, tau, k, L: float, H: TestFunction = H6):
    return Certifier(source, k).count_upper(tau, L, H)


def count_lower(source: Source, tau, k, L: float, H: TestFunction = H6):
    return Certifier(source, k).count_lower(tau, L, H)


def weyl_window_bound(source: Source, tau, k, nu: float, halfwidth: float = 0.5, power: int = 6):
    return Certifier(source, k).weyl_window_bound(tau, nu, halfwidth, power)


def tail_bound(source: Source, tau, k, gap: float, envelope: TestFunction = K7, order: int = 0,
               k_max: int = 24, medium=()):
    return Certifier(source, k, k_max=k_max).tail_bound(tau, gap, envelope, order, medium=medium)


def sign_certificate(source: Source, tau, k, gap: float, K: TestFunction = K7, medium=()):
    return Certifier(source, k).sign_certificate(tau, gap, K, medium)


def transversality_certificate(source: Source, interval, k, gap: float, band: float, c_y: Optional[float] = None,
                               K: TestFunction = K7, medium=()):
    return Certifier(source, k, c_y=c_y).transversality_certificate(interval, gap, band, K, c_y, medium)
